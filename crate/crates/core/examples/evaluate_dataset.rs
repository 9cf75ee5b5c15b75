//! Writes a small synthetic dataset in the benchmark layout, runs one-pass
//! evaluation over it and emits the report and curve files.

use std::path::PathBuf;

use tircf::eval::run_ope;
use tircf::io::{emit_curves, load_dataset, write_report, write_sequence};
use tircf::synth::{blob_sequence, lowres_sequence, BlobSpec, LowResSpec};
use tircf::tracker::TrackerConfig;

fn main() -> tircf::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("tircf-eval"));
    let data = out.join("dataset");
    for seed in 0..2 {
        let seq = blob_sequence(seed, &BlobSpec { frames: 30, ..BlobSpec::default() })?;
        write_sequence(&data.join(&seq.name), &seq.frames, &seq.boxes, &seq.attributes)?;
        let seq = lowres_sequence(seed, &LowResSpec { frames: 30, ..LowResSpec::default() })?;
        write_sequence(&data.join(&seq.name), &seq.frames, &seq.boxes, &seq.attributes)?;
    }

    let (sequences, failed) = load_dataset(&data, &[])?;
    assert!(failed.is_empty());
    let report = run_ope(&sequences, &TrackerConfig::default())?;
    print!("{}", report.to_table());
    write_report(&report, &out.join("report"))?;
    for f in emit_curves(&report, &out.join("report"))? {
        println!("wrote {}", f.display());
    }
    Ok(())
}
