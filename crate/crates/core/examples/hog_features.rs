//! Crops a padded search window around a box and turns it into the
//! gradient-orientation plus intensity feature tensor.

use tircf::features::{extract_features, extract_patch, FeatureConfig, Frame};
use tircf::geometry::BoundingBox;
use tircf::synth::blob_image;

fn main() -> tircf::Result<()> {
    let frame = Frame::new(blob_image(120, 160, &[(60.0, 80.0, 6.0, 0.8), (52.0, 90.0, 3.0, 0.4)], 0.1))?;
    let bbox = BoundingBox::from_center(80.0, 60.0, 24.0, 24.0)?;
    let patch = extract_patch(&frame, &bbox, 1.5, (64, 64))?;
    let cfg = FeatureConfig::default();
    let feat = extract_features(&patch, &cfg)?;
    let (h, w, d) = feat.shape();
    println!("patch {:?} -> features {h}x{w}x{d} (cell {})", patch.shape(), cfg.cell_size);
    for c in 0..d {
        let ch = feat.data.channel_field(c);
        let peak = ch.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!("channel {c}: energy {:8.4}  max |v| {peak:.4}", ch.sum_sq());
    }
    Ok(())
}
