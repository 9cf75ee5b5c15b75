//! Trains a correlation filter on HOG features of a synthetic target with
//! the adaptive sparse/temporal solver, then on a shifted second frame with
//! the first result as temporal anchor.

use tircf::astf::{admm_astf, AstfConfig, AstfState, SpatialRegParams, TemporalRegParams};
use tircf::features::{extract_features, extract_patch, FeatureConfig, Frame};
use tircf::geometry::BoundingBox;
use tircf::numerics::gaussian_label;
use tircf::synth::blob_image;

fn frame(cy: f64, cx: f64) -> tircf::Result<Frame> {
    Frame::new(blob_image(96, 96, &[(cy, cx, 5.0, 0.7), (cy - 4.0, cx + 3.0, 2.0, 0.3)], 0.1))
}

fn main() -> tircf::Result<()> {
    let features = FeatureConfig::default();
    let bbox = BoundingBox::from_center(48.0, 48.0, 20.0, 20.0)?;
    let label = gaussian_label(16, 16, 1.25)?;
    let (cfg, sp, tp) = (AstfConfig::default(), SpatialRegParams::default(), TemporalRegParams::default());

    let x0 = extract_features(&extract_patch(&frame(48.0, 48.0)?, &bbox, 1.5, (64, 64))?, &features)?;
    let seed = AstfState::new(x0.clone(), label.clone())?;
    let (state, trace) = admm_astf(&x0, &label, &seed, &cfg, &sp, &tp)?;
    println!("frame 0: {} sweeps, converged {}", trace.sweeps, trace.converged);
    for (k, v) in trace.objective.iter().enumerate() {
        println!("  sweep {k}: objective {v:.6}");
    }

    let x1 = extract_features(&extract_patch(&frame(50.0, 47.0)?, &bbox, 1.5, (64, 64))?, &features)?;
    let (next, trace) = admm_astf(&x1, &label, &state, &cfg, &sp, &tp)?;
    let moved = next.f.weights().distance(state.f.weights()) / state.f.weights().frobenius();
    println!("frame 1: {} sweeps, relative filter change {moved:.4}", trace.sweeps);
    println!("nonzero aggregation weights: {}", next.w_ref.as_slice().iter().filter(|v| **v != 0.0).count());
    Ok(())
}
