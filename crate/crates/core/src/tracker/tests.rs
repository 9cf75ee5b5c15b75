use num_complex::Complex64;

use super::*;
use crate::synth::{blob_image, blob_sequence, BlobSpec};

fn blob_frame(cy: f64, cx: f64) -> Frame {
    Frame::new(blob_image(96, 96, &[(cy, cx, 4.0, 0.7), (cy + 3.0, cx - 5.0, 2.0, 0.3)], 0.1)).unwrap()
}

fn quick() -> TrackerConfig {
    TrackerConfig { use_gesr: false, use_epsr: false, ..TrackerConfig::default() }
}

#[test]
fn baseline_model_is_closed_form_ridge() {
    let cfg = TrackerConfig::baseline();
    let frame = blob_frame(40.0, 50.0);
    let bbox = BoundingBox::from_center(50.0, 40.0, 16.0, 16.0).unwrap();
    let state = init(&frame, &bbox, &cfg).unwrap();
    let (x, _) = search_features(&frame, &bbox, state.window, &cfg).unwrap();
    let xs: Vec<_> = x.data.channel_fields().iter().map(dft2).collect();
    let y = dft2(&training_label(&bbox, state.window, &cfg).unwrap());
    let got = state.model.spectrum();
    let gamma = cfg.astf.gamma_ridge;
    for k in 0..y.as_slice().len() {
        let energy: f64 = xs.iter().map(|s| s.as_slice()[k].norm_sqr()).sum();
        for (d, s) in xs.iter().enumerate() {
            let expect: Complex64 = s.as_slice()[k].conj() * y.as_slice()[k] / (energy + gamma);
            assert!((expect - got[d].as_slice()[k]).norm() < 1e-8 * (1.0 + expect.norm()));
        }
    }
}

#[test]
fn init_starts_at_frame_zero() {
    let bbox = BoundingBox::from_center(50.0, 40.0, 16.0, 16.0).unwrap();
    let state = init(&blob_frame(40.0, 50.0), &bbox, &quick()).unwrap();
    assert_eq!(state.frame_index, 0);
    assert_eq!(state.bbox, bbox);
    assert_eq!(state.label().shape(), (16, 16));
}

#[test]
fn detects_itself_within_a_pixel() {
    let cfg = quick();
    let frame = blob_frame(40.0, 50.0);
    let bbox = BoundingBox::from_center(50.0, 40.0, 16.0, 16.0).unwrap();
    let state = init(&frame, &bbox, &cfg).unwrap();
    let (next, res) = track(&state, &frame, &cfg).unwrap();
    assert_eq!(next.frame_index, 1);
    let (cx, cy) = res.bbox.center();
    assert!((cx - 50.0).abs() < 1.0 && (cy - 40.0).abs() < 1.0, "{cx} {cy}");
}

#[test]
fn follows_a_shift() {
    let cfg = quick();
    let bbox = BoundingBox::from_center(50.0, 40.0, 16.0, 16.0).unwrap();
    let state = init(&blob_frame(40.0, 50.0), &bbox, &cfg).unwrap();
    let (_, res) = track(&state, &blob_frame(43.0, 46.0), &cfg).unwrap();
    let (cx, cy) = res.bbox.center();
    assert!((cx - 46.0).abs() < 1.5 && (cy - 43.0).abs() < 1.5, "{cx} {cy}");
}

#[test]
fn static_sequence_stays_put() {
    let cfg = quick();
    let frames = vec![blob_frame(40.0, 50.0); 6];
    let bbox = BoundingBox::from_center(50.0, 40.0, 16.0, 16.0).unwrap();
    let out = run_sequence(&frames, &bbox, &cfg).unwrap();
    assert_eq!(out.len(), 6);
    assert_eq!(out[0].bbox, bbox);
    for r in &out {
        let (cx, cy) = r.bbox.center();
        assert!((cx - 50.0).abs() < 1.0 && (cy - 40.0).abs() < 1.0);
        assert!(r.bbox.w > 0.0 && r.bbox.h > 0.0);
    }
}

#[test]
fn zero_learning_rate_freezes_model() {
    let cfg = TrackerConfig { learning_rate: 0.0, ..quick() };
    let bbox = BoundingBox::from_center(50.0, 40.0, 16.0, 16.0).unwrap();
    let state = init(&blob_frame(40.0, 50.0), &bbox, &cfg).unwrap();
    let (next, _) = track(&state, &blob_frame(42.0, 52.0), &cfg).unwrap();
    assert_eq!(next.model.weights().as_slice(), state.model.weights().as_slice());
}

#[test]
fn response_scale_keeps_argmax() {
    let cfg = quick();
    let frame = blob_frame(40.0, 50.0);
    let bbox = BoundingBox::from_center(52.0, 38.0, 16.0, 16.0).unwrap();
    let state = init(&frame, &bbox, &cfg).unwrap();
    let (feat, _) = search_features(&frame, &bbox, state.window, &cfg).unwrap();
    let resp = response_map(&state.model, &feat).unwrap();
    let (dy, dx, _) = peak_shift(&resp);
    for s in [0.5, 3.0, 1e4] {
        let (sy, sx, _) = peak_shift(&resp.map(|v| v * s));
        assert!((sy - dy).abs() < 1e-12 && (sx - dx).abs() < 1e-12);
    }
}

#[test]
fn peak_shift_wraps_and_refines() {
    let mut r = Field2D::zeros(16, 16);
    r[(14, 3)] = 1.0;
    let (dy, dx, v) = peak_shift(&r);
    assert_eq!((dy, dx, v), (-2.0, 3.0, 1.0));
    r[(14, 4)] = 0.5;
    let (_, dx, _) = peak_shift(&r);
    assert!(dx > 3.0 && dx < 3.5);
}

#[test]
fn runs_are_deterministic() {
    let seq = blob_sequence(3, &BlobSpec { frames: 8, ..BlobSpec::default() }).unwrap();
    let cfg = TrackerConfig::default();
    let a = run_sequence(&seq.frames, &seq.boxes[0], &cfg).unwrap();
    let b = run_sequence(&seq.frames, &seq.boxes[0], &cfg).unwrap();
    let boxes = |v: &[TrackResult]| v.iter().map(|r| r.bbox).collect::<Vec<_>>();
    assert_eq!(boxes(&a), boxes(&b));
}

#[test]
fn small_boxes_use_super_resolution() {
    let cfg = TrackerConfig::default();
    let bbox = BoundingBox::from_center(50.0, 40.0, 12.0, 12.0).unwrap();
    assert_eq!(model_window(&bbox, &cfg), 128);
    let (patch, sr) = search_patch(&blob_frame(40.0, 50.0), &bbox, 128, &cfg).unwrap();
    assert!(sr);
    assert_eq!(patch.shape(), (128, 128));
    let big = BoundingBox::from_center(50.0, 40.0, 40.0, 40.0).unwrap();
    assert_eq!(model_window(&big, &cfg), 64);
    assert!(!search_patch(&blob_frame(40.0, 50.0), &big, 64, &cfg).unwrap().1);
    let state = init(&blob_frame(40.0, 50.0), &bbox, &cfg).unwrap();
    assert_eq!(state.label().shape(), (32, 32));
}

#[test]
fn invalid_inputs_are_rejected() {
    let frame = blob_frame(40.0, 50.0);
    let bbox = BoundingBox::from_center(50.0, 40.0, 16.0, 16.0).unwrap();
    let bad = TrackerConfig { learning_rate: 1.5, ..quick() };
    assert!(matches!(init(&frame, &bbox, &bad), Err(Error::InvalidConfig(_))));
    let outside = BoundingBox::new(500.0, 500.0, 10.0, 10.0).unwrap();
    assert!(matches!(init(&frame, &outside, &quick()), Err(Error::DegenerateBox { .. })));
    assert!(matches!(run_sequence(&[], &bbox, &quick()), Err(Error::EmptyInput)));
}
