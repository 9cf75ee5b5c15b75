//! Reconstructs degraded synthetic images and compares against bicubic
//! upsampling. Pass a directory to also write the first pair as PNGs.

use std::path::PathBuf;

use tircf::gesr::{gesr_reconstruct, psnr, upsample, GesrConfig};
use tircf::io::save_gray;
use tircf::synth::sr_corpus;

fn main() -> tircf::Result<()> {
    let out_dir = std::env::args().nth(1).map(PathBuf::from);
    let cfg = GesrConfig::default();
    let corpus = sr_corpus(0, 12, 48)?;
    let mut wins = 0;
    for (k, pair) in corpus.iter().enumerate() {
        let bicubic = upsample(&pair.lr, cfg.scale)?;
        let sr = gesr_reconstruct(&pair.lr, &cfg)?;
        let (pb, ps) = (psnr(&bicubic, &pair.hr)?, psnr(&sr, &pair.hr)?);
        wins += usize::from(ps >= pb);
        println!("image {k:2}: bicubic {pb:6.2} dB   reconstruction {ps:6.2} dB");
        if let (0, Some(dir)) = (k, &out_dir) {
            std::fs::create_dir_all(dir)?;
            save_gray(&dir.join("lr.png"), &pair.lr)?;
            save_gray(&dir.join("bicubic.png"), &bicubic)?;
            save_gray(&dir.join("reconstruction.png"), &sr)?;
        }
    }
    println!("reconstruction >= bicubic on {wins}/{}", corpus.len());
    Ok(())
}
