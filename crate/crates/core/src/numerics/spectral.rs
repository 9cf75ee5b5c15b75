use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::field::{Field2D, Spectrum2D};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized forward 2-D DFT.
pub fn dft2(f: &Field2D) -> Spectrum2D {
    let (h, w) = f.shape();
    let data = f.as_slice().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut s = Spectrum2D::from_vec(h, w, data).expect("shape preserved");
    transform_in_place(&mut s, false);
    s
}

/// Inverse 2-D DFT scaled by 1/(HW); the imaginary residue is discarded.
pub fn idft2(s: &Spectrum2D) -> Field2D {
    let c = idft2_complex(s);
    let (h, w) = s.shape();
    Field2D::from_vec(h, w, c.as_slice().iter().map(|z| z.re).collect()).expect("shape preserved")
}

pub fn dft2_complex(s: &Spectrum2D) -> Spectrum2D {
    let mut out = s.clone();
    transform_in_place(&mut out, false);
    out
}

pub fn idft2_complex(s: &Spectrum2D) -> Spectrum2D {
    let mut out = s.clone();
    transform_in_place(&mut out, true);
    let n = (s.height() * s.width()) as f64;
    for z in out.as_mut_slice() {
        *z /= n;
    }
    out
}

fn transform_in_place(s: &mut Spectrum2D, inverse: bool) {
    let (h, w) = s.shape();
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let (row_fft, col_fft) = if inverse {
            (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
        } else {
            (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
        };
        let data = s.as_mut_slice();
        row_fft.process(data);
        let mut column = vec![Complex64::new(0.0, 0.0); h];
        for j in 0..w {
            for i in 0..h {
                column[i] = data[i * w + j];
            }
            col_fft.process(&mut column);
            for i in 0..h {
                data[i * w + j] = column[i];
            }
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_dft(f: &Field2D) -> Spectrum2D {
        let (h, w) = f.shape();
        let mut out = Spectrum2D::zeros(h, w);
        for u in 0..h {
            for v in 0..w {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..h {
                    for j in 0..w {
                        let phase = -2.0
                            * std::f64::consts::PI
                            * ((u * i) as f64 / h as f64 + (v * j) as f64 / w as f64);
                        acc += f[(i, j)] * Complex64::from_polar(1.0, phase);
                    }
                }
                out[(u, v)] = acc;
            }
        }
        out
    }

    fn random_field(h: usize, w: usize, seed: u64) -> Field2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Field2D::from_fn(h, w, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn impulse_at_origin_has_flat_spectrum() {
        let mut f = Field2D::zeros(4, 4);
        f[(0, 0)] = 1.0;
        let s = dft2(&f);
        for z in s.as_slice() {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn shifted_impulse_matches_brute_force_with_unit_modulus() {
        let mut f = Field2D::zeros(8, 8);
        f[(3, 5)] = 1.0;
        let fast = dft2(&f);
        let slow = brute_dft(&f);
        for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
            assert!((a - b).norm() < 1e-12);
            assert!((a.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_field_matches_brute_force_on_rectangle() {
        let f = random_field(5, 7, 3);
        let fast = dft2(&f);
        let slow = brute_dft(&f);
        for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn roundtrip_64() {
        let f = random_field(64, 64, 11);
        let back = idft2(&dft2(&f));
        assert!(f.max_abs_diff(&back) < 1e-10);
    }

    #[test]
    fn parseval() {
        for seed in 0..5 {
            let f = random_field(9, 12, seed);
            let s = dft2(&f);
            let spectral: f64 = s.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() / 108.0;
            let rel = (f.sum_sq() - spectral).abs() / f.sum_sq();
            assert!(rel < 1e-10, "relative error {rel}");
        }
    }

    #[test]
    fn linearity() {
        let a = random_field(6, 6, 1);
        let b = random_field(6, 6, 2);
        let combo = a.zip_map(&b, |x, y| 2.0 * x - 0.5 * y).unwrap();
        let (sa, sb, sc) = (dft2(&a), dft2(&b), dft2(&combo));
        for k in 0..36 {
            let expect = 2.0 * sa.as_slice()[k] - 0.5 * sb.as_slice()[k];
            assert!((expect - sc.as_slice()[k]).norm() < 1e-12);
        }
    }
}
