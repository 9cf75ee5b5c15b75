use proptest::prelude::*;
use tempfile::tempdir;

use super::*;
use crate::eval::{EvalReport, SequenceResult, HEADLINE_PX};
use crate::numerics::Field2D;

fn bx(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
    BoundingBox::new(x, y, w, h).unwrap()
}

fn tiny_sequence(dir: &Path, n: usize) -> Vec<BoundingBox> {
    let frames: Vec<Frame> =
        (0..n).map(|k| Frame::new(Field2D::from_fn(12, 16, |i, j| ((i + j + k) % 7) as f64 / 7.0)).unwrap()).collect();
    let boxes: Vec<_> = (0..n).map(|k| bx(k as f64, 1.0, 5.0, 4.0)).collect();
    write_sequence(dir, &frames, &boxes, &["low_resolution".into()]).unwrap();
    boxes
}

#[test]
fn three_frame_sequence_loads() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path().join("walk");
    let boxes = tiny_sequence(&dir, 3);
    let seq = load_sequence(&dir).unwrap();
    assert_eq!(seq.name, "walk");
    assert_eq!(seq.frame_paths.len(), 3);
    assert_eq!(seq.gt_boxes.iter().map(|b| b.unwrap()).collect::<Vec<_>>(), boxes);
    assert!(seq.attributes.contains("low_resolution"));
    let frames = load_frames(&seq.frame_paths).unwrap();
    assert_eq!((frames[0].height(), frames[0].width()), (12, 16));
    assert_eq!(frames[0].bit_depth_origin, 8);
}

#[test]
fn one_based_lines_shift_to_zero_based() {
    let b = parse_boxes("1,1,10,10\n").unwrap();
    assert_eq!(b, vec![Some(bx(0.0, 0.0, 10.0, 10.0))]);
}

#[test]
fn tab_and_comma_files_agree() {
    let comma = parse_boxes("3,4,10,12\n5.5,6.25,8,9\n").unwrap();
    let tab = parse_boxes("3\t4\t10\t12\n5.5\t6.25\t8\t9\n").unwrap();
    assert_eq!(comma, tab);
    assert_eq!(comma[1], Some(bx(4.5, 5.25, 8.0, 9.0)));
}

#[test]
fn nan_lines_mark_invalid_frames() {
    let b = parse_boxes("1,1,4,4\nNaN,NaN,NaN,NaN\n2,2,4,4\n").unwrap();
    assert_eq!(b.len(), 3);
    assert!(b[1].is_none());
}

#[test]
fn malformed_lines_report_line_number() {
    match parse_boxes("1,1,4,4\n1,2,three,4\n") {
        Err(Error::UnparsableLine { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_boxes("1,2,3\n"), Err(Error::UnparsableLine { line: 1, .. })));
}

#[test]
fn missing_ground_truth_and_count_mismatch() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path().join("s");
    tiny_sequence(&dir, 2);
    fs::write(dir.join(GROUND_TRUTH_FILE), "1,1,2,2\n").unwrap();
    assert!(matches!(load_sequence(&dir), Err(Error::FrameCountMismatch { frames: 2, boxes: 1 })));
    fs::remove_file(dir.join(GROUND_TRUTH_FILE)).unwrap();
    assert!(matches!(load_sequence(&dir), Err(Error::MissingGroundTruth(_))));
}

#[test]
fn sixteen_bit_frames_are_normalized() {
    let tmp = tempdir().unwrap();
    let p = tmp.path().join("f.png");
    let img = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(2, 1, vec![0u16, 65535]).unwrap();
    img.save(&p).unwrap();
    let f = load_frame(&p).unwrap();
    assert_eq!(f.bit_depth_origin, 16);
    assert_eq!(f.pixels.as_slice(), &[0.0, 1.0]);
}

#[test]
fn dataset_filters_by_glob() {
    let tmp = tempdir().unwrap();
    tiny_sequence(&tmp.path().join("car1"), 2);
    tiny_sequence(&tmp.path().join("car2"), 2);
    tiny_sequence(&tmp.path().join("person"), 2);
    let (all, bad) = load_dataset(tmp.path(), &[]).unwrap();
    assert_eq!(all.len(), 3);
    assert!(bad.is_empty());
    let (cars, _) = load_dataset(tmp.path(), &["car*".into()]).unwrap();
    assert_eq!(cars.iter().map(|s| s.name.as_str()).collect::<Vec<_>>(), ["car1", "car2"]);
}

#[test]
fn empty_config_is_default() {
    assert_eq!(parse_config("").unwrap(), TrackerConfig::default());
}

#[test]
fn gesr_m_round_trips() {
    let cfg = parse_config("[gesr]\nm = 0.5\n").unwrap();
    assert_eq!(cfg.gesr.m, 0.5);
    let text = serialize_config(&cfg).unwrap();
    assert!(text.contains("[gesr]"));
    assert_eq!(parse_config(&text).unwrap(), cfg);
    let cfg = parse_config("[gesr]\nm = 0.3\n[tracker]\nuse_epsr = false\nscales = [1, 1.05]\n").unwrap();
    assert_eq!(cfg.gesr.m, 0.3);
    assert!(!cfg.use_epsr);
    assert_eq!(cfg.scales, vec![1.0, 1.05]);
}

#[test]
fn unknown_key_suggests_nearest() {
    match parse_config("[astf]\nalpha9 = 0.1\n") {
        Err(Error::UnknownKey { key, suggestion }) => {
            assert_eq!(key, "astf.alpha9");
            assert_eq!(suggestion.as_deref(), Some("alpha1"));
        }
        other => panic!("{other:?}"),
    }
    let msg = parse_config("[astf]\nalpha9 = 0.1\n").unwrap_err().to_string();
    assert!(msg.contains("alpha1"), "{msg}");
    assert!(matches!(parse_config("[gesrr]\nm = 1\n"), Err(Error::UnknownKey { suggestion: Some(s), .. }) if s == "gesr"));
}

#[test]
fn wrong_types_are_rejected() {
    assert!(matches!(
        parse_config("[gesr]\nt_max = 2.5\n"),
        Err(Error::TypeMismatch { expected: "integer", .. })
    ));
    assert!(matches!(parse_config("[tracker]\nuse_gesr = 1\n"), Err(Error::TypeMismatch { .. })));
    assert!(matches!(parse_config("learning_rate = \"fast\"\n"), Err(Error::TypeMismatch { .. })));
    // Integers are accepted where numbers are expected.
    assert_eq!(parse_config("[gesr]\neta = 1\n").unwrap().gesr.eta, 1.0);
}

#[test]
fn config_hash_is_stable() {
    let a = config_hash(&TrackerConfig::default()).unwrap();
    assert_eq!(a, config_hash(&parse_config("").unwrap()).unwrap());
    assert_eq!(a.len(), 64);
    let other = TrackerConfig { learning_rate: 0.5, ..TrackerConfig::default() };
    assert_ne!(a, config_hash(&other).unwrap());
}

fn report_for(n: usize) -> EvalReport {
    let gt: Vec<_> = (0..n).map(|k| bx(k as f64 * 3.0, 0.0, 8.0, 8.0)).collect();
    let pred: Vec<_> = gt.iter().enumerate().map(|(k, b)| b.translated(k as f64 * 4.0, 0.0)).collect();
    let r = SequenceResult {
        name: "s".into(),
        attributes: Default::default(),
        predicted: pred,
        gt_boxes: gt.into_iter().map(Some).collect(),
        frame_size: (64, 64),
        elapsed: std::time::Duration::from_millis(5),
        converged: true,
    };
    EvalReport::from_results("t", &[r], vec![]).unwrap()
}

#[test]
fn single_frame_outputs() {
    let tmp = tempdir().unwrap();
    let frame = Frame::new(Field2D::filled(20, 20, 0.5)).unwrap();
    let b = bx(4.0, 4.0, 8.0, 8.0);
    let pngs = render_overlays(&[frame], &[b], &[Some(b.translated(2.0, 0.0))], &tmp.path().join("ov")).unwrap();
    assert_eq!(pngs.len(), 1);
    let img = image::open(&pngs[0]).unwrap().to_rgb8();
    assert_eq!(img.get_pixel(6, 4).0, [255, 0, 0]);
    assert_eq!(img.get_pixel(6, 5).0, [255, 0, 0]);
    assert_eq!(img.get_pixel(9, 8).0, [128, 128, 128]);
    assert_eq!(img.get_pixel(6, 8).0, [0, 255, 0]);

    let files = emit_curves(&report_for(1), &tmp.path().join("curves")).unwrap();
    let csvs = files.iter().filter(|p| p.extension().unwrap() == "csv").count();
    assert_eq!(csvs, 2);
}

#[test]
fn precision_csv_matches_report() {
    let tmp = tempdir().unwrap();
    let rep = report_for(8);
    emit_curves(&rep, tmp.path()).unwrap();
    let text = fs::read_to_string(tmp.path().join("precision.csv")).unwrap();
    let row = text.lines().find(|l| l.starts_with(&format!("{HEADLINE_PX},"))).unwrap();
    let v: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(v, rep.overall.precision_at_20);
}

#[test]
fn svg_is_well_formed() {
    let tmp = tempdir().unwrap();
    emit_curves(&report_for(4), tmp.path()).unwrap();
    for name in ["precision.svg", "success.svg"] {
        let text = fs::read_to_string(tmp.path().join(name)).unwrap();
        assert!(text.starts_with("<?xml"));
        // Every opened element closes, in order.
        let mut stack: Vec<String> = Vec::new();
        let mut rest = text.as_str();
        while let Some(i) = rest.find('<') {
            let end = rest[i..].find('>').unwrap() + i;
            let tag = &rest[i + 1..end];
            if tag.starts_with('?') {
            } else if let Some(name) = tag.strip_prefix('/') {
                assert_eq!(stack.pop().as_deref(), Some(name.trim()));
            } else if !tag.ends_with('/') {
                stack.push(tag.split_whitespace().next().unwrap().to_string());
            }
            rest = &rest[end + 1..];
        }
        assert!(stack.is_empty(), "{stack:?}");
    }
}

#[test]
fn report_files_and_manifest() {
    let tmp = tempdir().unwrap();
    let rep = report_for(3);
    write_report(&rep, tmp.path()).unwrap();
    let back: EvalReport = serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(back, rep);
    assert!(fs::read_to_string(tmp.path().join("report.txt")).unwrap().contains("Precision"));
    let m = RunManifest::new("eval", &TrackerConfig::default(), tmp.path()).unwrap();
    let p = m.write().unwrap();
    let back: RunManifest = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
    assert_eq!(back, m);
}

#[test]
fn decimal_shift_examples() {
    assert_eq!(shift_decimal("0.5", 1).as_deref(), Some("1.5"));
    assert_eq!(shift_decimal("-0.25", 1).as_deref(), Some("0.75"));
    assert_eq!(shift_decimal("0.75", -1).as_deref(), Some("-0.25"));
    assert_eq!(shift_decimal("12", -1).as_deref(), Some("11"));
    assert_eq!(shift_decimal("-3", 1).as_deref(), Some("-2"));
    assert_eq!(shift_decimal("abc", 1), None);
}

proptest! {
    #[test]
    fn box_file_round_trip(raw in prop::collection::vec(
        (-500.0..2000.0f64, -500.0..2000.0f64, 0.001..800.0f64, 0.001..800.0f64), 1..20)) {
        let boxes: Vec<_> = raw.iter().map(|&(x, y, w, h)| bx(x, y, w, h)).collect();
        let back = parse_boxes(&format_boxes(&boxes)).unwrap();
        prop_assert_eq!(back.into_iter().map(|b| b.unwrap()).collect::<Vec<_>>(), boxes);
    }

    #[test]
    fn config_round_trip(lr in 0.0..1.0f64, m in 0.0..2.0f64, t_max in 1usize..50, gesr in any::<bool>()) {
        let mut cfg = TrackerConfig { learning_rate: lr, use_gesr: gesr, ..TrackerConfig::default() };
        cfg.gesr.m = m;
        cfg.gesr.t_max = t_max;
        let text = serialize_config(&cfg).unwrap();
        prop_assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
