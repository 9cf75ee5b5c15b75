//! Synthetic thermal-like imagery with analytic ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::features::Frame;
use crate::geometry::BoundingBox;
use crate::gesr::{blur, downsample_mean};
use crate::numerics::Field2D;

/// Sum of isotropic Gaussian blobs on a flat background, clamped to [0,1].
pub fn blob_image(h: usize, w: usize, blobs: &[(f64, f64, f64, f64)], background: f64) -> Field2D {
    Field2D::from_fn(h, w, |i, j| {
        let v: f64 = blobs
            .iter()
            .map(|&(cy, cx, sigma, amp)| {
                let (dy, dx) = (i as f64 - cy, j as f64 - cx);
                amp * (-(dy * dy + dx * dx) / (2.0 * sigma * sigma)).exp()
            })
            .sum();
        (background + v).clamp(0.0, 1.0)
    })
}

/// One high-resolution/low-resolution pair.
#[derive(Debug, Clone)]
pub struct SrPair {
    pub hr: Field2D,
    pub lr: Field2D,
}

/// Random blob scene degraded by a σ=`blur_sigma` Gaussian blur and
/// `scale`× block averaging.
pub fn sr_pair(seed: u64, size: usize, scale: usize, blur_sigma: f64) -> Result<SrPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=5);
    let blobs: Vec<_> = (0..n)
        .map(|_| {
            (
                rng.gen_range(0.0..size as f64),
                rng.gen_range(0.0..size as f64),
                rng.gen_range(1.5..5.0),
                rng.gen_range(0.2..0.7),
            )
        })
        .collect();
    let hr = blob_image(size, size, &blobs, rng.gen_range(0.05..0.2));
    let lr = downsample_mean(&blur(&hr, blur_sigma)?, scale)?;
    Ok(SrPair { hr, lr })
}

/// `count` pairs with consecutive seeds starting at `seed`.
pub fn sr_corpus(seed: u64, count: usize, size: usize) -> Result<Vec<SrPair>> {
    (0..count as u64).map(|k| sr_pair(seed + k, size, 2, 1.0)).collect()
}

/// Frames with per-frame ground-truth boxes.
#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub name: String,
    pub frames: Vec<Frame>,
    pub boxes: Vec<BoundingBox>,
    pub attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub canvas: usize,
    pub frames: usize,
    /// Blob standard deviation in pixels; the box spans ±2σ.
    pub sigma: f64,
    /// Displacement per frame in pixels.
    pub speed: f64,
    pub noise_std: f64,
    pub background: f64,
    pub amplitude: f64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self { canvas: 64, frames: 200, sigma: 4.0, speed: 2.0, noise_std: 0.02, background: 0.2, amplitude: 0.6 }
    }
}

/// Reflects `p` into `[lo, hi]`, flipping `v` on every bounce.
fn bounce(p: &mut f64, v: &mut f64, lo: f64, hi: f64) {
    if *p < lo {
        *p = 2.0 * lo - *p;
        *v = -*v;
    }
    if *p > hi {
        *p = 2.0 * hi - *p;
        *v = -*v;
    }
}

/// Blob centre trajectory bouncing inside `[margin, canvas − margin]²`.
fn trajectory(rng: &mut ChaCha8Rng, n: usize, canvas: f64, margin: f64, speed: f64) -> Vec<(f64, f64)> {
    let angle = rng.gen_range(0.0..std::f64::consts::TAU);
    let (mut vy, mut vx) = (speed * angle.sin(), speed * angle.cos());
    let (lo, hi) = (margin, canvas - margin);
    let mut y = rng.gen_range(lo..hi);
    let mut x = rng.gen_range(lo..hi);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push((y, x));
        y += vy;
        x += vx;
        bounce(&mut y, &mut vy, lo, hi);
        bounce(&mut x, &mut vx, lo, hi);
    }
    out
}

fn noisy(img: Field2D, rng: &mut ChaCha8Rng, std: f64) -> Result<Frame> {
    let noise = Normal::new(0.0, std).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut img = img;
    for v in img.as_mut_slice() {
        *v += noise.sample(rng);
    }
    Frame::new(img)
}

/// A single Gaussian blob moving at constant speed and bouncing off the
/// canvas borders, with additive Gaussian noise.
pub fn blob_sequence(seed: u64, spec: &BlobSpec) -> Result<SyntheticSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = spec.canvas as f64;
    let side = 4.0 * spec.sigma;
    let path = trajectory(&mut rng, spec.frames, c, side / 2.0 + 4.0, spec.speed);
    let mut frames = Vec::with_capacity(spec.frames);
    let mut boxes = Vec::with_capacity(spec.frames);
    for &(cy, cx) in &path {
        // Pixel (i, j) covers [j, j+1) so its centre sits at j + 0.5.
        let img = blob_image(spec.canvas, spec.canvas, &[(cy - 0.5, cx - 0.5, spec.sigma, spec.amplitude)], spec.background);
        frames.push(noisy(img, &mut rng, spec.noise_std)?);
        boxes.push(BoundingBox::from_center(cx, cy, side, side)?);
    }
    Ok(SyntheticSequence { name: format!("blob-{seed}"), frames, boxes, attributes: vec![] })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowResSpec {
    /// Output frame side in pixels.
    pub canvas: usize,
    pub frames: usize,
    /// Target box side in output pixels.
    pub target: f64,
    pub speed: f64,
    pub noise_std: f64,
    /// Degradation factor between the rendered scene and the output.
    pub scale: usize,
    pub blur_sigma: f64,
}

impl Default for LowResSpec {
    fn default() -> Self {
        Self { canvas: 80, frames: 120, target: 20.0, speed: 1.5, noise_std: 0.02, scale: 2, blur_sigma: 1.0 }
    }
}

/// A small textured target (a warm core with two offset lobes) rendered at
/// `scale`× resolution, blurred and block-averaged to the output grid.
pub fn lowres_sequence(seed: u64, spec: &LowResSpec) -> Result<SyntheticSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = spec.scale as f64;
    let c = spec.canvas as f64;
    let path = trajectory(&mut rng, spec.frames, c, spec.target / 2.0 + 4.0, spec.speed);
    let lobe = spec.target / 4.0;
    let hr_side = spec.canvas * spec.scale;
    let mut frames = Vec::with_capacity(spec.frames);
    let mut boxes = Vec::with_capacity(spec.frames);
    for &(cy, cx) in &path {
        let (hy, hx) = (cy * s - 0.5, cx * s - 0.5);
        let blobs = [
            (hy, hx, lobe * s * 0.6, 0.45),
            (hy - lobe * s, hx - lobe * s * 0.5, lobe * s * 0.4, 0.25),
            (hy + lobe * s * 0.8, hx + lobe * s * 0.7, lobe * s * 0.35, 0.3),
        ];
        let hr = blob_image(hr_side, hr_side, &blobs, 0.15);
        let lr = downsample_mean(&blur(&hr, spec.blur_sigma)?, spec.scale)?;
        frames.push(noisy(lr, &mut rng, spec.noise_std)?);
        boxes.push(BoundingBox::from_center(cx, cy, spec.target, spec.target)?);
    }
    Ok(SyntheticSequence {
        name: format!("lowres-{seed}"),
        frames,
        boxes,
        attributes: vec!["low_resolution".into()],
    })
}
