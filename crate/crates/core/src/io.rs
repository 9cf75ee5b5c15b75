//! Dataset ingestion, sectioned configuration files and result persistence.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use image::{DynamicImage, Rgb, RgbImage};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::eval::{success_threshold, EvalReport, SequenceAnnotation};
use crate::features::Frame;
use crate::geometry::BoundingBox;
use crate::tracker::TrackerConfig;

pub const GROUND_TRUTH_FILE: &str = "groundtruth_rect.txt";
pub const ATTRIBUTES_FILE: &str = "attributes.txt";
const IMAGE_EXTENSIONS: [&str; 6] = ["png", "pgm", "pnm", "jpg", "jpeg", "ppm"];

// ---------------------------------------------------------------------------
// Images

/// Reads a grayscale (or colour, converted to luma) image into [0,1].
pub fn load_frame(path: &Path) -> Result<Frame> {
    let img = image::open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_)
        | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_) => Frame::from_u16(h, w, img.to_luma16().as_raw()),
        _ => Frame::from_u8(h, w, img.to_luma8().as_raw()),
    }
}

pub fn load_frames(paths: &[PathBuf]) -> Result<Vec<Frame>> {
    paths.iter().map(|p| load_frame(p)).collect()
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes an 8-bit grayscale PNG.
pub fn save_gray(path: &Path, pixels: &crate::numerics::Field2D) -> Result<()> {
    let (h, w) = pixels.shape();
    let raw: Vec<u8> = pixels.as_slice().iter().map(|&v| to_u8(v)).collect();
    let img = image::GrayImage::from_raw(w as u32, h as u32, raw).ok_or(Error::EmptyFrame)?;
    img.save(path)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Exact 1-based ↔ 0-based shifts

/// Adds `delta` (±1) to a decimal literal without binary rounding, so that
/// shifting and shifting back returns the same `f64`.
fn shift_decimal(text: &str, delta: i128) -> Option<String> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || int.len() + frac.len() > 36 {
        return None;
    }
    let scale = 10i128.pow(frac.len() as u32);
    let digits: i128 = format!("{int}{frac}").parse().ok()?;
    let value = if neg { -digits } else { digits } + delta * scale;
    let (sign, mag) = if value < 0 { ("-", -value) } else { ("", value) };
    let (ip, fp) = (mag / scale, mag % scale);
    Some(if frac.is_empty() {
        format!("{sign}{ip}")
    } else {
        format!("{sign}{ip}.{fp:0width$}", width = frac.len())
    })
}

fn shifted(value: f64, delta: i128) -> String {
    let text = format!("{value}");
    shift_decimal(&text, delta).unwrap_or_else(|| format!("{}", value + delta as f64))
}

fn parse_shifted(token: &str, delta: i128) -> Option<f64> {
    match shift_decimal(token, delta) {
        Some(s) => s.parse().ok(),
        None => token.parse::<f64>().ok().map(|v| v + delta as f64),
    }
}

// ---------------------------------------------------------------------------
// Ground truth and box files

/// Parses `x,y,w,h` lines (comma, tab or whitespace separated, 1-based).
/// `NaN` lines and non-positive sizes yield `None`.
pub fn parse_boxes(text: &str) -> Result<Vec<Option<BoundingBox>>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect();
        let unparsable = || Error::UnparsableLine { line: k + 1, content: raw.to_string() };
        if tokens.iter().any(|t| t.eq_ignore_ascii_case("nan")) {
            out.push(None);
            continue;
        }
        if tokens.len() != 4 {
            return Err(unparsable());
        }
        let x = parse_shifted(tokens[0], -1).ok_or_else(unparsable)?;
        let y = parse_shifted(tokens[1], -1).ok_or_else(unparsable)?;
        let w: f64 = tokens[2].parse().map_err(|_| unparsable())?;
        let h: f64 = tokens[3].parse().map_err(|_| unparsable())?;
        out.push(BoundingBox::new(x, y, w, h).ok());
    }
    Ok(out)
}

pub fn format_boxes(boxes: &[BoundingBox]) -> String {
    let mut s = String::new();
    for b in boxes {
        let _ = writeln!(s, "{},{},{},{}", shifted(b.x, 1), shifted(b.y, 1), b.w, b.h);
    }
    s
}

/// Writes boxes one per line at the 1-based convention.
pub fn write_boxes(boxes: &[BoundingBox], path: &Path) -> Result<()> {
    fs::write(path, format_boxes(boxes))?;
    Ok(())
}

pub fn read_boxes(path: &Path) -> Result<Vec<Option<BoundingBox>>> {
    parse_boxes(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Sequences

fn is_image(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Reads `dir/img/*` (sorted by file name) and `dir/groundtruth_rect.txt`.
/// An optional `attributes.txt` lists attribute names separated by commas
/// or newlines.
pub fn load_sequence(dir: &Path) -> Result<SequenceAnnotation> {
    let name = dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned());
    let gt_path = dir.join(GROUND_TRUTH_FILE);
    if !gt_path.is_file() {
        return Err(Error::MissingGroundTruth(gt_path));
    }
    let img_dir = dir.join("img");
    let mut frame_paths: Vec<PathBuf> = fs::read_dir(&img_dir)
        .map_err(|e| Error::SequenceRead { name: name.clone(), reason: format!("{}: {e}", img_dir.display()) })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_image(p))
        .collect();
    frame_paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    let gt_boxes = read_boxes(&gt_path)?;
    if gt_boxes.len() != frame_paths.len() {
        return Err(Error::FrameCountMismatch { frames: frame_paths.len(), boxes: gt_boxes.len() });
    }
    let attributes = match fs::read_to_string(dir.join(ATTRIBUTES_FILE)) {
        Ok(text) => text
            .split(|c: char| c == ',' || c == '\n')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect(),
        Err(_) => BTreeSet::new(),
    };
    Ok(SequenceAnnotation { name, frame_paths, gt_boxes, attributes })
}

/// Every subdirectory of `root` holding a ground-truth file, optionally
/// restricted to names matching one of `filters` (shell globs).
pub fn load_dataset(root: &Path, filters: &[String]) -> Result<(Vec<SequenceAnnotation>, Vec<(String, Error)>)> {
    let patterns = filters
        .iter()
        .map(|f| glob::Pattern::new(f).map_err(|e| Error::InvalidConfig(format!("bad filter {f:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.join(GROUND_TRUTH_FILE).is_file())
        .collect();
    dirs.sort();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for d in dirs {
        let name = d.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if !patterns.is_empty() && !patterns.iter().any(|p| p.matches(&name)) {
            continue;
        }
        match load_sequence(&d) {
            Ok(s) => ok.push(s),
            Err(e) => failed.push((name, e)),
        }
    }
    Ok((ok, failed))
}

/// Writes frames as `img/00001.png`… plus ground truth and attributes.
pub fn write_sequence(
    dir: &Path,
    frames: &[Frame],
    boxes: &[BoundingBox],
    attributes: &[String],
) -> Result<()> {
    let img = dir.join("img");
    fs::create_dir_all(&img)?;
    for (k, f) in frames.iter().enumerate() {
        save_gray(&img.join(format!("{:05}.png", k + 1)), &f.pixels)?;
    }
    write_boxes(boxes, &dir.join(GROUND_TRUTH_FILE))?;
    if !attributes.is_empty() {
        fs::write(dir.join(ATTRIBUTES_FILE), attributes.join("\n") + "\n")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Configuration

/// Section holding the top-level tracker fields.
pub const TRACKER_SECTION: &str = "tracker";

/// Default configuration split into sections: `[tracker]` for scalar
/// tracker fields and one section per solver.
fn sectioned(cfg: &TrackerConfig) -> Result<Table> {
    let flat = Value::try_from(cfg).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let Value::Table(flat) = flat else {
        return Err(Error::InvalidConfig("configuration did not serialize to a table".into()));
    };
    let mut tracker = Table::new();
    let mut out = Table::new();
    for (k, v) in flat {
        match v {
            Value::Table(t) => {
                out.insert(k, Value::Table(t));
            }
            other => {
                tracker.insert(k, other);
            }
        }
    }
    out.insert(TRACKER_SECTION.into(), Value::Table(tracker));
    Ok(out)
}

fn flatten(sections: Table) -> Table {
    let mut flat = Table::new();
    for (k, v) in sections {
        match (k.as_str(), v) {
            (TRACKER_SECTION, Value::Table(t)) => flat.extend(t),
            (_, v) => {
                flat.insert(k, v);
            }
        }
    }
    flat
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "number",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "list",
        Value::Table(_) => "section",
    }
}

/// Coerces `given` to the type of `default`, allowing integers where a
/// number is expected.
fn coerce(key: &str, given: Value, default: &Value) -> Result<Value> {
    let mismatch = || Error::TypeMismatch { key: key.to_string(), expected: type_name(default) };
    match (default, given) {
        (Value::Float(_), Value::Integer(i)) => Ok(Value::Float(i as f64)),
        (Value::Array(d), Value::Array(items)) => {
            let elem = d.first().cloned().unwrap_or(Value::Float(0.0));
            items.into_iter().map(|v| coerce(key, v, &elem)).collect::<Result<Vec<_>>>().map(Value::Array)
        }
        (d, g) if std::mem::discriminant(d) == std::mem::discriminant(&g) => Ok(g),
        _ => Err(mismatch()),
    }
}

fn suggest<'a>(key: &str, candidates: impl Iterator<Item = &'a String>) -> Option<String> {
    let mut best: Option<(usize, &String)> = None;
    for c in candidates {
        let d = strsim::levenshtein(key, c);
        if best.map_or(true, |(bd, bc)| d < bd || (d == bd && c < bc)) {
            best = Some((d, c));
        }
    }
    best.filter(|(d, c)| *d <= (c.len().max(key.len()) / 2).max(2)).map(|(_, c)| c.clone())
}

/// Parses sectioned `key = value` text; omitted keys keep their defaults.
pub fn parse_config(text: &str) -> Result<TrackerConfig> {
    let given: Table = text.parse().map_err(|e: toml::de::Error| Error::InvalidConfig(e.message().to_string()))?;
    let mut merged = sectioned(&TrackerConfig::default())?;
    for (section, body) in given {
        let Some(Value::Table(defaults)) = merged.get_mut(&section) else {
            // A bare top-level key is read as belonging to [tracker].
            let tracker = merged.get_mut(TRACKER_SECTION).and_then(Value::as_table_mut).expect("tracker section");
            if let Some(default) = tracker.get(&section) {
                let v = coerce(&section, body, default)?;
                tracker.insert(section, v);
                continue;
            }
            let all: Vec<String> = sectioned(&TrackerConfig::default())?
                .iter()
                .flat_map(|(s, t)| {
                    let mut keys = vec![s.clone()];
                    if let Value::Table(t) = t {
                        keys.extend(t.keys().cloned());
                    }
                    keys
                })
                .collect();
            return Err(Error::UnknownKey { suggestion: suggest(&section, all.iter()), key: section });
        };
        let Value::Table(body) = body else {
            return Err(Error::TypeMismatch { key: section, expected: "section" });
        };
        for (key, value) in body {
            let Some(default) = defaults.get(&key) else {
                return Err(Error::UnknownKey {
                    suggestion: suggest(&key, defaults.keys()),
                    key: format!("{section}.{key}"),
                });
            };
            let v = coerce(&format!("{section}.{key}"), value, default)?;
            defaults.insert(key, v);
        }
    }
    let cfg: TrackerConfig =
        Value::Table(flatten(merged)).try_into().map_err(|e: toml::de::Error| Error::InvalidConfig(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<TrackerConfig> {
    parse_config(&fs::read_to_string(path)?)
}

/// Canonical sectioned text: `[tracker]` first, then solver sections in
/// alphabetical order.
pub fn serialize_config(cfg: &TrackerConfig) -> Result<String> {
    let sections = sectioned(cfg)?;
    let mut out = String::new();
    let mut order: Vec<&String> = sections.keys().filter(|k| *k != TRACKER_SECTION).collect();
    order.sort();
    order.insert(0, sections.keys().find(|k| *k == TRACKER_SECTION).expect("tracker section"));
    for name in order {
        let mut one = Table::new();
        one.insert(name.clone(), sections[name].clone());
        out.push_str(&toml::to_string(&one).map_err(|e| Error::InvalidConfig(e.to_string()))?);
        out.push('\n');
    }
    Ok(out.trim_end().to_string() + "\n")
}

/// `cfg` with one key replaced; `key` is `section.name`, or a bare name for
/// the `[tracker]` section.
pub fn override_key(cfg: &TrackerConfig, key: &str, value: Value) -> Result<TrackerConfig> {
    let mut t: Table = serialize_config(cfg)?
        .parse()
        .map_err(|e: toml::de::Error| Error::InvalidConfig(e.message().to_string()))?;
    let (section, name) = key.split_once('.').unwrap_or((TRACKER_SECTION, key));
    let body = t.entry(section).or_insert_with(|| Value::Table(Table::new()));
    let Value::Table(body) = body else {
        return Err(Error::TypeMismatch { key: section.to_string(), expected: "section" });
    };
    body.insert(name.to_string(), value);
    parse_config(&toml::to_string(&t).map_err(|e| Error::InvalidConfig(e.to_string()))?)
}

pub fn config_hash(cfg: &TrackerConfig) -> Result<String> {
    let digest = Sha256::digest(serialize_config(cfg)?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

// ---------------------------------------------------------------------------
// Reports, overlays and curves

pub fn write_report(report: &EvalReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), report.to_json()?)?;
    fs::write(dir.join("report.txt"), report.to_table())?;
    Ok(())
}

fn draw_rect(img: &mut RgbImage, b: &BoundingBox, color: Rgb<u8>, thickness: i64) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let x0 = b.x.round() as i64;
    let y0 = b.y.round() as i64;
    let x1 = (b.x + b.w).round() as i64 - 1;
    let y1 = (b.y + b.h).round() as i64 - 1;
    let mut put = |x: i64, y: i64| {
        if (0..w).contains(&x) && (0..h).contains(&y) {
            img.put_pixel(x as u32, y as u32, color);
        }
    };
    for t in 0..thickness {
        for x in x0..=x1 {
            put(x, y0 + t);
            put(x, y1 - t);
        }
        for y in y0..=y1 {
            put(x0 + t, y);
            put(x1 - t, y);
        }
    }
}

/// One PNG per frame: prediction in red, ground truth in green, 2 px lines.
pub fn render_overlays(
    frames: &[Frame],
    predicted: &[BoundingBox],
    gt: &[Option<BoundingBox>],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    if predicted.len() != frames.len() {
        return Err(Error::FrameCountMismatch { frames: frames.len(), boxes: predicted.len() });
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(frames.len());
    for (k, f) in frames.iter().enumerate() {
        let (h, w) = f.pixels.shape();
        let mut img = RgbImage::from_fn(w as u32, h as u32, |x, y| {
            let v = to_u8(f.pixels[(y as usize, x as usize)]);
            Rgb([v, v, v])
        });
        if let Some(Some(g)) = gt.get(k) {
            draw_rect(&mut img, g, Rgb([0, 255, 0]), 2);
        }
        draw_rect(&mut img, &predicted[k], Rgb([255, 0, 0]), 2);
        let path = dir.join(format!("{:05}.png", k + 1));
        img.save(&path)?;
        written.push(path);
    }
    Ok(written)
}

fn curve_csv(header: &str, points: &[(f64, f64)]) -> String {
    let mut s = format!("threshold,{header}\n");
    for (t, v) in points {
        let _ = writeln!(s, "{t},{v}");
    }
    s
}

fn curve_svg(title: &str, x_label: &str, points: &[(f64, f64)], x_max: f64) -> String {
    let (w, h, m) = (480.0, 360.0, 48.0);
    let px = |x: f64| m + (w - 2.0 * m) * x / x_max;
    let py = |y: f64| h - m - (h - 2.0 * m) * y;
    let path: Vec<String> = points.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"  <rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"  <path d="M{m},{top} L{m},{bot} L{right},{bot}" fill="none" stroke="black"/>"#,
        top = m,
        bot = h - m,
        right = w - m
    );
    let _ = writeln!(s, r#"  <polyline points="{}" fill="none" stroke="crimson" stroke-width="2"/>"#, path.join(" "));
    let _ = writeln!(s, r#"  <text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>"#, w / 2.0);
    let _ = writeln!(s, r#"  <text x="{}" y="{}" text-anchor="middle" font-size="12">{x_label}</text>"#, w / 2.0, h - 12.0);
    for k in 0..=5 {
        let v = k as f64 / 5.0;
        let _ = writeln!(s, r#"  <text x="{}" y="{:.1}" text-anchor="end" font-size="10">{v:.1}</text>"#, m - 6.0, py(v) + 3.0);
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `precision.csv`, `success.csv` and matching SVG plots of the
/// report's overall curves.
pub fn emit_curves(report: &EvalReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let precision: Vec<(f64, f64)> =
        report.overall.precision_curve.iter().enumerate().map(|(t, v)| (t as f64, *v)).collect();
    let success: Vec<(f64, f64)> =
        report.overall.success_curve.iter().enumerate().map(|(k, v)| (success_threshold(k), *v)).collect();
    let files = [
        ("precision.csv", curve_csv("precision", &precision)),
        ("success.csv", curve_csv("success", &success)),
        ("precision.svg", curve_svg("Precision plot", "location error threshold (px)", &precision, 50.0)),
        ("success.svg", curve_svg("Success plot", "overlap threshold", &success, 1.0)),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body)?;
        written.push(p);
    }
    Ok(written)
}

// ---------------------------------------------------------------------------
// Run manifest

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub dataset_root: Option<PathBuf>,
    pub sequence_filters: Vec<String>,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub command: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub config_hash: String,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &TrackerConfig, output_dir: &Path) -> Result<Self> {
        Ok(Self {
            dataset_root: None,
            sequence_filters: Vec::new(),
            config_path: None,
            output_dir: output_dir.to_path_buf(),
            command: command.to_string(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            config_hash: config_hash(cfg)?,
        })
    }

    pub fn write(&self) -> Result<PathBuf> {
        fs::create_dir_all(&self.output_dir)?;
        let path = self.output_dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests;
