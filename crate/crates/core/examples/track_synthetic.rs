//! Tracks a noisy bouncing blob and reports per-frame overlap. An optional
//! directory argument receives overlay PNGs.

use std::path::PathBuf;

use tircf::eval::iou;
use tircf::io::render_overlays;
use tircf::synth::{blob_sequence, BlobSpec};
use tircf::tracker::{run_sequence, TrackerConfig};

fn main() -> tircf::Result<()> {
    let seq = blob_sequence(1, &BlobSpec { frames: 60, ..BlobSpec::default() })?;
    let cfg = TrackerConfig::default();
    let results = run_sequence(&seq.frames, &seq.boxes[0], &cfg)?;
    let ious: Vec<f64> = results.iter().zip(&seq.boxes).map(|(r, g)| iou(&r.bbox, g)).collect();
    for (k, (r, v)) in results.iter().zip(&ious).enumerate().step_by(10) {
        let (cx, cy) = r.bbox.center();
        println!("frame {k:3}: centre ({cx:5.1}, {cy:5.1})  IoU {v:.3}  peak {:.3}  sr {}", r.peak, r.used_sr);
    }
    println!("mean IoU {:.3}", ious.iter().sum::<f64>() / ious.len() as f64);
    if let Some(dir) = std::env::args().nth(1).map(PathBuf::from) {
        let boxes: Vec<_> = results.iter().map(|r| r.bbox).collect();
        let gt: Vec<_> = seq.boxes.iter().copied().map(Some).collect();
        let n = render_overlays(&seq.frames, &boxes, &gt, &dir)?.len();
        println!("wrote {n} overlays to {}", dir.display());
    }
    Ok(())
}
