//! Scalar and tensor proximal maps used by the ADMM solvers.

use tircf::numerics::{hard_threshold, slice_singular_values, soft_threshold, tensor_nuclear_norm, tsvt, Tensor3};

fn main() -> tircf::Result<()> {
    let v = [-2.0, -0.4, 0.0, 0.3, 1.5];
    println!("input          {v:?}");
    println!("soft(.., 0.5)  {:?}", soft_threshold(&v, 0.5)?);
    println!("hard(.., 0.5)  {:?}", hard_threshold(&v, 0.5)?);

    // A rank-one slice plus small noise; thresholding drops the noise spectrum.
    let t = Tensor3::from_fn(6, 6, 2, |i, j, c| {
        let u = (i as f64 + 1.0) * (j as f64 + 1.0) / 36.0;
        let noise = ((i * 7 + j * 3 + c * 5) % 11) as f64 / 11.0 - 0.5;
        (c as f64 + 1.0) * u + 0.05 * noise
    });
    let shrunk = tsvt(&t, 0.2)?;
    for (c, (before, after)) in slice_singular_values(&t).iter().zip(slice_singular_values(&shrunk)).enumerate() {
        let fmt = |s: &[f64]| s.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" ");
        println!("slice {c}: {}  ->  {}", fmt(before), fmt(&after));
    }
    println!("nuclear norm {:.4} -> {:.4}", tensor_nuclear_norm(&t), tensor_nuclear_norm(&shrunk));
    Ok(())
}
