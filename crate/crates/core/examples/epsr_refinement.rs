//! Edge-preserving sparse refinement of a random filter tensor, printing
//! the coupling residuals and the penalty schedule sweep by sweep.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tircf::epsr::{epsr_run_with, EpsrConfig};
use tircf::numerics::{tensor_nuclear_norm, Tensor3};

fn main() -> tircf::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let filter = Tensor3::from_fn(8, 8, 2, |_, _, _| rng.gen_range(-1.0..1.0));
    let cfg = EpsrConfig::default();
    let out = epsr_run_with(&filter, &cfg, |r| {
        if r.sweep % 5 == 1 {
            let [a, b, c] = r.residuals;
            println!("sweep {:3}  mu {:8.3}  |Z-F| {a:.2e}  |W-R| {b:.2e}  |R-F| {c:.2e}", r.sweep, r.mu);
        }
    })?;
    println!("converged {} after {} sweeps", out.converged, out.trace.len());
    println!("nuclear norm {:.3} -> {:.3}", tensor_nuclear_norm(&filter), tensor_nuclear_norm(&out.f));
    let zeros = out.w.as_slice().iter().filter(|v| **v == 0.0).count();
    println!("{zeros} of {} entries of W are exactly zero", out.w.len());
    Ok(())
}
