use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::numerics::slice_singular_values;

fn rand_tensor(h: usize, w: usize, d: usize, rng: &mut ChaCha8Rng) -> Tensor3 {
    Tensor3::from_fn(h, w, d, |_, _, _| rng.gen_range(-1.0..1.0))
}

fn random_state(seed: u64, h: usize, d: usize) -> EpsrState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    EpsrState {
        f: rand_tensor(h, h, d, &mut rng),
        z: rand_tensor(h, h, d, &mut rng),
        r: rand_tensor(h, h, d, &mut rng),
        w: rand_tensor(h, h, d, &mut rng),
        y1: rand_tensor(h, h, d, &mut rng),
        y2: rand_tensor(h, h, d, &mut rng),
        y3: rand_tensor(h, h, d, &mut rng),
        mu: rng.gen_range(0.5..3.0),
        iter: 0,
        f_prev: rand_tensor(h, h, d, &mut rng),
    }
}

/// Singular value shrinkage through the eigendecomposition of AᵀA.
fn svt_oracle(t: &Tensor3, tau: f64) -> Tensor3 {
    let (h, w, d) = t.shape();
    let mut out = Tensor3::zeros(h, w, d);
    for c in 0..d {
        let a = nalgebra::DMatrix::from_row_slice(h, w, t.channel(c));
        let eig = (a.transpose() * &a).symmetric_eigen();
        let mut acc = nalgebra::DMatrix::zeros(h, w);
        for k in 0..w {
            let sigma = eig.eigenvalues[k].max(0.0).sqrt();
            if sigma <= tau || sigma < 1e-12 {
                continue;
            }
            let v = eig.eigenvectors.column(k);
            let u = &a * v / sigma;
            acc += (sigma - tau) * u * v.transpose();
        }
        let dst = out.channel_mut(c);
        for i in 0..h {
            for j in 0..w {
                dst[i * w + j] = acc[(i, j)];
            }
        }
    }
    out
}

#[test]
fn init_examples() {
    let cfg = EpsrConfig { mu0: 2.5, ..EpsrConfig::default() };
    let s = epsr_init(&Tensor3::zeros(3, 3, 2), &cfg);
    assert!(s.f.as_slice().iter().chain(s.z.as_slice()).chain(s.r.as_slice()).chain(s.w.as_slice()).all(|&v| v == 0.0));
    assert_eq!(s.mu, 2.5);
    assert_eq!(s.iter, 0);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let fp = rand_tensor(4, 4, 2, &mut rng);
    let s = epsr_init(&fp, &cfg);
    assert_eq!(s.f, fp);
    assert_eq!(s.w, fp);
    for y in [&s.y1, &s.y2, &s.y3] {
        assert!(y.as_slice().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn update_f_examples() {
    let cfg = EpsrConfig::default();
    let mut s = random_state(2, 6, 2);
    s.r = s.z.clone();
    s.y1 = Tensor3::zeros(6, 6, 2);
    s.y3 = Tensor3::zeros(6, 6, 2);
    s.mu = 1e12;
    assert!(update_f(&s, &cfg).unwrap().max_abs_diff(&s.z) < 1e-9);

    let s = random_state(3, 6, 2);
    let arg = Tensor3::from_fn(6, 6, 2, |i, j, c| {
        0.5 * (s.z.get(i, j, c) + s.r.get(i, j, c) + (s.y1.get(i, j, c) + s.y3.get(i, j, c)) / s.mu)
    });
    let expect = svt_oracle(&arg, 1.0 / s.mu);
    assert!(update_f(&s, &cfg).unwrap().max_abs_diff(&expect) < 1e-8);

    let top = slice_singular_values(&arg).iter().flatten().copied().fold(0.0, f64::max);
    let mut tiny = s.clone();
    tiny.mu = 1.0 / top;
    // The argument depends on μ, so recompute the bound for the new state.
    let arg2 = Tensor3::from_fn(6, 6, 2, |i, j, c| {
        0.5 * (tiny.z.get(i, j, c) + tiny.r.get(i, j, c) + (tiny.y1.get(i, j, c) + tiny.y3.get(i, j, c)) / tiny.mu)
    });
    let top2 = slice_singular_values(&arg2).iter().flatten().copied().fold(0.0, f64::max);
    tiny.mu = (1.0 / top2).min(tiny.mu) * 0.5;
    let arg3 = Tensor3::from_fn(6, 6, 2, |i, j, c| {
        0.5 * (tiny.z.get(i, j, c) + tiny.r.get(i, j, c) + (tiny.y1.get(i, j, c) + tiny.y3.get(i, j, c)) / tiny.mu)
    });
    let top3 = slice_singular_values(&arg3).iter().flatten().copied().fold(0.0, f64::max);
    if tiny.mu <= 1.0 / top3 {
        assert!(update_f(&tiny, &cfg).unwrap().as_slice().iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn update_f_full_shrinkage_without_multipliers() {
    let cfg = EpsrConfig::default();
    let mut s = random_state(4, 5, 2);
    s.y1 = Tensor3::zeros(5, 5, 2);
    s.y3 = Tensor3::zeros(5, 5, 2);
    let arg = s.z.zip_map(&s.r, |a, b| 0.5 * (a + b)).unwrap();
    let top = slice_singular_values(&arg).iter().flatten().copied().fold(0.0, f64::max);
    s.mu = 1.0 / top;
    assert!(update_f(&s, &cfg).unwrap().as_slice().iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn update_r_examples() {
    let mut s = random_state(5, 5, 2);
    s.y2 = Tensor3::zeros(5, 5, 2);
    let cfg = EpsrConfig { lambda3: 0.0, ..EpsrConfig::default() };
    assert!(update_r(&s, &cfg).unwrap().max_abs_diff(&s.f.axpy(1.0, &s.w).unwrap()) < 1e-14);
    let heavy = EpsrConfig { lambda3: 1e15, ..EpsrConfig::default() };
    assert!(update_r(&s, &heavy).unwrap().as_slice().iter().all(|v| v.abs() < 1e-12));

    let s = random_state(6, 5, 2);
    let cfg = EpsrConfig::default();
    let got = update_r(&s, &cfg).unwrap();
    for k in 0..got.len() {
        let expect = (s.mu / (cfg.lambda3 + s.mu))
            * (s.f.as_slice()[k] + s.w.as_slice()[k] + s.y2.as_slice()[k] / s.mu);
        assert!((got.as_slice()[k] - expect).abs() < 1e-12);
    }
}

#[test]
fn update_z_examples() {
    let mut s = random_state(7, 4, 2);
    let cfg = EpsrConfig { lambda1: 1e6, ..EpsrConfig::default() };
    assert!(update_z(&s, &cfg).unwrap().as_slice().iter().all(|&v| v == 0.0));
    let zero = EpsrConfig { lambda1: 0.0, ..EpsrConfig::default() };
    let arg = s.f.zip_map(&s.y1, |f, y| f + y / s.mu).unwrap();
    assert_eq!(update_z(&s, &zero).unwrap(), arg);

    // Two-candidate oracle: the hard threshold picks whichever of {0, v}
    // has the smaller λ₁·[z ≠ 0] + (μ/2)(z − v)² cost, i.e. the ℓ0 prox with
    // threshold λ₁/μ on |v|.
    s.mu = 2.0;
    let lam = 0.6;
    let cfg = EpsrConfig { lambda1: lam, ..EpsrConfig::default() };
    for k in -300..=300 {
        let v = k as f64 * 0.01;
        s.f = Tensor3::from_fn(1, 1, 1, |_, _, _| v);
        s.y1 = Tensor3::zeros(1, 1, 1);
        s.z = s.f.clone();
        s.r = s.f.clone();
        s.w = s.f.clone();
        s.y2 = s.y1.clone();
        s.y3 = s.y1.clone();
        s.f_prev = s.f.clone();
        let got = update_z(&s, &cfg).unwrap().as_slice()[0];
        let keep = if v.abs() > lam / s.mu { v } else { 0.0 };
        assert_eq!(got, keep);
        assert!(got == 0.0 || got == v);
    }
}

#[test]
fn update_w_examples() {
    let s = random_state(8, 4, 2);
    let zero = EpsrConfig { lambda2: 0.0, ..EpsrConfig::default() };
    let arg = s.r.zip_map(&s.y2, |r, y| r + y / s.mu).unwrap();
    assert_eq!(update_w(&s, &zero).unwrap(), arg);
    let big = arg.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs())) * s.mu;
    let full = EpsrConfig { lambda2: big, ..EpsrConfig::default() };
    assert!(update_w(&s, &full).unwrap().as_slice().iter().all(|&v| v == 0.0));
    let cfg = EpsrConfig::default();
    let expect = soft_threshold_tensor(&arg, cfg.lambda2 / s.mu).unwrap();
    assert_eq!(update_w(&s, &cfg).unwrap(), expect);
}

#[test]
fn multiplier_examples() {
    let mut s = random_state(9, 4, 2);
    s.z = s.f.clone();
    s.r = s.f.clone();
    s.w = s.f.clone();
    s.mu = 1.0;
    let cfg = EpsrConfig { rho: 1.1, ..EpsrConfig::default() };
    let next = update_multipliers(&s, &cfg).unwrap();
    assert_eq!(next.y1, s.y1);
    assert_eq!(next.y2, s.y2);
    assert_eq!(next.y3, s.y3);
    assert_eq!(next.mu, 1.1);
    assert_eq!(next.iter, 1);

    let s = random_state(10, 4, 2);
    let next = update_multipliers(&s, &cfg).unwrap();
    for k in 0..s.f.len() {
        let (f, z, r, w) = (s.f.as_slice()[k], s.z.as_slice()[k], s.r.as_slice()[k], s.w.as_slice()[k]);
        assert_eq!(next.y1.as_slice()[k], s.y1.as_slice()[k] + s.mu * (z - f));
        assert_eq!(next.y2.as_slice()[k], s.y2.as_slice()[k] + s.mu * (w - r));
        assert_eq!(next.y3.as_slice()[k], s.y3.as_slice()[k] + s.mu * (r - f));
    }
}

#[test]
fn lagrangian_examples() {
    let cfg = EpsrConfig::default();
    let zero = epsr_init(&Tensor3::zeros(4, 4, 2), &cfg);
    assert_eq!(lagrangian_value(&zero, &cfg).unwrap(), 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut s = zero.clone();
    s.z = rand_tensor(4, 4, 2, &mut rng);
    s.y1 = rand_tensor(4, 4, 2, &mut rng);
    s.mu = 1.7;
    let expect = cfg.lambda1 * s.z.l1() + s.y1.dot(&s.z) + 1.7 * s.z.sum_sq();
    assert!((lagrangian_value(&s, &cfg).unwrap() - expect).abs() < 1e-12);

    let s = random_state(12, 4, 2);
    let mut oracle = 0.0;
    for sv in slice_singular_values(&s.f) {
        oracle += sv.iter().sum::<f64>();
    }
    for k in 0..s.f.len() {
        let (f, z, r, w) = (s.f.as_slice()[k], s.z.as_slice()[k], s.r.as_slice()[k], s.w.as_slice()[k]);
        oracle += cfg.lambda1 * z.abs() + cfg.lambda2 * w.abs() + cfg.lambda3 * r * r;
        oracle += s.y1.as_slice()[k] * (z - f) + s.y2.as_slice()[k] * (w - r) + s.y3.as_slice()[k] * (r - f);
        oracle += s.mu * (z - f).powi(2) + (w - r).powi(2) + (r - f).powi(2);
    }
    assert!((lagrangian_value(&s, &cfg).unwrap() - oracle).abs() < 1e-8);
}

#[test]
fn zero_seed_is_a_fixed_point() {
    for rules in [SweepRules::Consistent, SweepRules::Printed] {
        let cfg = EpsrConfig { rules, ..EpsrConfig::default() };
        let out = epsr_run(&Tensor3::zeros(5, 5, 2), &cfg).unwrap();
        assert!(out.converged);
        assert_eq!(out.trace.len(), 1);
        assert!(out.f.as_slice().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn random_seed_converges_with_defaults() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let fp = Tensor3::from_fn(8, 8, 2, |_, _, _| rng.gen_range(-1.0..1.0));
    let out = epsr_run(&fp, &EpsrConfig::default()).unwrap();
    assert!(out.converged, "residuals {:?}", out.state.residuals());
    assert!(out.trace.len() <= 100);
    assert!(out.state.residuals().iter().all(|r| *r < 1e-3));
}

#[test]
fn printed_rules_do_not_converge() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let fp = Tensor3::from_fn(8, 8, 2, |_, _, _| rng.gen_range(-1.0..1.0));
    let cfg = EpsrConfig { rules: SweepRules::Printed, ..EpsrConfig::default() };
    let out = epsr_run(&fp, &cfg).unwrap();
    assert!(!out.converged);
}

#[test]
fn heavy_l1_zeroes_z_every_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let fp = Tensor3::from_fn(6, 6, 2, |_, _, _| rng.gen_range(-1.0..1.0));
    let cfg = EpsrConfig { lambda1: 1e9, max_iters: 20, ..EpsrConfig::default() };
    let mut state = epsr_init(&fp, &cfg);
    for _ in 0..20 {
        state = epsr_sweep(&state, &cfg).unwrap();
        assert!(state.z.as_slice().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn mu_follows_geometric_schedule() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let fp = Tensor3::from_fn(6, 6, 2, |_, _, _| rng.gen_range(-1.0..1.0));
    let cfg = EpsrConfig { max_iters: 30, tol: 1e-300, ..EpsrConfig::default() };
    let out = epsr_run(&fp, &cfg).unwrap();
    let expect = (0..out.state.iter).fold(cfg.mu0, |m, _| m * cfg.rho);
    assert_eq!(out.state.mu, expect);
    for (k, rec) in out.trace.iter().enumerate() {
        assert_eq!(rec.mu, (0..k).fold(cfg.mu0, |m, _| m * cfg.rho));
    }
}

#[test]
fn updates_are_pure() {
    let s = random_state(17, 5, 2);
    let cfg = EpsrConfig::default();
    assert_eq!(update_f(&s, &cfg).unwrap(), update_f(&s, &cfg).unwrap());
    assert_eq!(update_r(&s, &cfg).unwrap(), update_r(&s, &cfg).unwrap());
    assert_eq!(update_z(&s, &cfg).unwrap(), update_z(&s, &cfg).unwrap());
    assert_eq!(update_w(&s, &cfg).unwrap(), update_w(&s, &cfg).unwrap());
}

#[test]
fn hook_sees_every_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let fp = Tensor3::from_fn(6, 6, 1, |_, _, _| rng.gen_range(-1.0..1.0));
    let mut seen = 0;
    let out = epsr_run_with(&fp, &EpsrConfig::default(), |r| {
        assert!(r.lagrangian.unwrap().is_finite());
        seen += 1
    })
    .unwrap();
    assert_eq!(seen, out.trace.len());
    assert!(epsr_run(&fp, &EpsrConfig::default()).unwrap().trace.iter().all(|r| r.lagrangian.is_none()));
}

#[test]
fn invalid_config_is_rejected() {
    let cfg = EpsrConfig { rho: 1.0, ..EpsrConfig::default() };
    assert!(epsr_run(&Tensor3::zeros(2, 2, 1), &cfg).is_err());
}
