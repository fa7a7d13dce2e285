//! Ground truth and evaluation: manual borders rasterized from closed
//! quadratic B-splines, the XOR error, and per-class error statistics.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imgcore::BinaryMask;

/// Curve samples per knot span when flattening a manual border.
pub const SAMPLES_PER_SPAN: usize = 64;

/// Closed border through dermatologist-selected points, `(x, y)` in pixel
/// coordinates (x = column, y = row).
#[derive(Clone, Debug, PartialEq)]
pub struct ManualBorder {
    points: Vec<(f64, f64)>,
}

impl ManualBorder {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::DegenerateBorder(format!(
                "need at least 3 control points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::DegenerateBorder("non-finite control point".into()));
        }
        Ok(Self { points })
    }

    /// Parses one `x y` pair per line. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(|c: char| c.is_whitespace() || c == ',').filter(|f| !f.is_empty());
            let mut coord = || -> Option<f64> { fields.next()?.parse().ok() };
            match (coord(), coord(), fields.next()) {
                (Some(x), Some(y), None) => points.push((x, y)),
                _ => {
                    return Err(Error::CorruptFile(format!(
                        "line {}: expected 'x y', got '{line}'",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(points)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Flattens the closed uniform quadratic B-spline into a polygon with
    /// `samples_per_span` vertices per span.
    pub fn sample(&self, samples_per_span: usize) -> Vec<(f64, f64)> {
        let n = self.points.len();
        let mut out = Vec::with_capacity(n * samples_per_span);
        for j in 0..n {
            let p0 = self.points[j];
            let p1 = self.points[(j + 1) % n];
            let p2 = self.points[(j + 2) % n];
            for s in 0..samples_per_span {
                let t = s as f64 / samples_per_span as f64;
                let b0 = 0.5 * (1.0 - t) * (1.0 - t);
                let b1 = 0.5 + t - t * t;
                let b2 = 0.5 * t * t;
                out.push((b0 * p0.0 + b1 * p1.0 + b2 * p2.0, b0 * p0.1 + b1 * p1.1 + b2 * p2.1));
            }
        }
        out
    }

    fn control_polygon_area(&self) -> f64 {
        let n = self.points.len();
        let twice: f64 = (0..n)
            .map(|i| {
                let (a, b) = (self.points[i], self.points[(i + 1) % n]);
                a.0 * b.1 - b.0 * a.1
            })
            .sum();
        0.5 * twice.abs()
    }
}

/// Rasterizes a manual border: pixels whose centers lie inside (even-odd)
/// or exactly on the flattened spline polygon.
pub fn rasterize_border(border: &ManualBorder, width: usize, height: usize) -> Result<BinaryMask> {
    let (xmax, ymax) = (width.saturating_sub(1) as f64, height.saturating_sub(1) as f64);
    if let Some(&(x, y)) = border
        .points()
        .iter()
        .find(|&&(x, y)| x < 0.0 || y < 0.0 || x > xmax || y > ymax)
    {
        return Err(Error::DegenerateBorder(format!(
            "control point ({x}, {y}) outside {width}x{height} image"
        )));
    }
    if border.control_polygon_area() < 1e-9 {
        return Err(Error::DegenerateBorder("control polygon has zero area".into()));
    }
    let polygon = border.sample(SAMPLES_PER_SPAN);
    fill_polygon(&polygon, width, height)
}

/// Closed even-odd fill of `polygon` sampled at integer pixel centers.
pub(crate) fn fill_polygon(polygon: &[(f64, f64)], width: usize, height: usize) -> Result<BinaryMask> {
    let mut mask = BinaryMask::empty(width, height)?;
    let n = polygon.len();
    let edges = || (0..n).map(move |i| (polygon[i], polygon[(i + 1) % n]));
    let crossing = |a: (f64, f64), b: (f64, f64), y: f64| a.0 + (y - a.1) * (b.0 - a.0) / (b.1 - a.1);
    let in_cols = |x: f64| x >= 0.0 && x <= (width - 1) as f64;

    let mut xs = Vec::new();
    for r in 0..height {
        let y = r as f64;
        xs.clear();
        for (a, b) in edges() {
            // half-open in y so shared vertices count once
            if (a.1 <= y && y < b.1) || (b.1 <= y && y < a.1) {
                xs.push(crossing(a, b, y));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let lo = pair[0].ceil().max(0.0);
            let hi = pair[1].floor().min((width - 1) as f64);
            if lo <= hi {
                for c in lo as usize..=hi as usize {
                    mask.set(r, c, true);
                }
            }
        }
    }

    // pixel centers lying exactly on an edge
    for (a, b) in edges() {
        if a.1 == b.1 {
            if a.1.fract() == 0.0 && a.1 >= 0.0 && a.1 <= (height - 1) as f64 {
                let lo = a.0.min(b.0).ceil().max(0.0);
                let hi = a.0.max(b.0).floor().min((width - 1) as f64);
                if lo <= hi {
                    for c in lo as usize..=hi as usize {
                        mask.set(a.1 as usize, c, true);
                    }
                }
            }
            continue;
        }
        let lo = a.1.min(b.1).ceil().max(0.0);
        let hi = a.1.max(b.1).floor().min((height - 1) as f64);
        if lo > hi {
            continue;
        }
        for r in lo as usize..=hi as usize {
            let x = crossing(a, b, r as f64);
            if x.fract() == 0.0 && in_cols(x) {
                mask.set(r, x as usize, true);
            }
        }
    }
    Ok(mask)
}

/// `Area(auto XOR manual) / Area(manual)`, as a fraction.
pub fn xor_error(auto: &BinaryMask, manual: &BinaryMask) -> Result<f64> {
    auto.ensure_same_dims(manual.dims())?;
    let manual_area = manual.count();
    if manual_area == 0 {
        return Err(Error::EmptyManualBorder);
    }
    let disagree = auto
        .labels()
        .iter()
        .zip(manual.labels())
        .filter(|(a, m)| a != m)
        .count();
    Ok(disagree as f64 / manual_area as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LesionClass {
    Benign,
    Melanoma,
}

impl FromStr for LesionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "benign" => Ok(LesionClass::Benign),
            "melanoma" => Ok(LesionClass::Melanoma),
            other => Err(Error::Manifest(format!("unknown class '{other}'"))),
        }
    }
}

impl fmt::Display for LesionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LesionClass::Benign => "benign",
            LesionClass::Melanoma => "melanoma",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub image: String,
    pub class: LesionClass,
    /// XOR error as a fraction.
    pub epsilon: f64,
}

/// Mean and sample standard deviation of the XOR error, as fractions.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassStats {
    pub n: usize,
    pub mean: f64,
    /// Zero when `n == 1`; see `single_sample`.
    pub std_dev: f64,
    pub single_sample: bool,
}

impl ClassStats {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Option<Self> {
        let n = values.clone().count();
        if n == 0 {
            return None;
        }
        let mean = values.clone().sum::<f64>() / n as f64;
        let std_dev = if n > 1 {
            (values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self {
            n,
            mean,
            std_dev,
            single_sample: n == 1,
        })
    }

    pub fn mean_percent(&self) -> f64 {
        self.mean * 100.0
    }

    pub fn std_dev_percent(&self) -> f64 {
        self.std_dev * 100.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub per_image: Vec<EvalRow>,
    pub benign: Option<ClassStats>,
    pub melanoma: Option<ClassStats>,
    pub all: ClassStats,
}

pub fn aggregate(rows: Vec<EvalRow>) -> Result<EvalReport> {
    let of_class = |class| {
        ClassStats::of(rows.iter().filter(move |r| r.class == class).map(|r| r.epsilon))
    };
    let benign = of_class(LesionClass::Benign);
    let melanoma = of_class(LesionClass::Melanoma);
    let all = ClassStats::of(rows.iter().map(|r| r.epsilon)).ok_or(Error::EmptyReport)?;
    Ok(EvalReport {
        per_image: rows,
        benign,
        melanoma,
        all,
    })
}

/// One line of a batch manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    /// The image path as written in the manifest, used to label report rows.
    pub image: String,
    pub image_path: PathBuf,
    pub truth_path: PathBuf,
    pub class: LesionClass,
}

/// Reads a manifest CSV of `image_path,truth_path,class` rows. A header row
/// is optional; relative paths resolve against the manifest's directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if i == 0 && record.get(0) == Some("image_path") {
            continue;
        }
        if record.len() != 3 {
            return Err(Error::Manifest(format!(
                "row {}: expected 3 fields, got {}",
                i + 1,
                record.len()
            )));
        }
        entries.push(ManifestEntry {
            image: record[0].to_string(),
            image_path: base.join(&record[0]),
            truth_path: base.join(&record[1]),
            class: record[2].parse()?,
        });
    }
    if entries.is_empty() {
        return Err(Error::Manifest("manifest has no rows".into()));
    }
    Ok(entries)
}

/// Per-image line of a batch report; `epsilon` is absent when the row failed.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub image: String,
    pub class: LesionClass,
    pub epsilon: Option<f64>,
    pub error: Option<String>,
}

/// Writes the batch report CSV: `image,class,epsilon_percent,error` rows in
/// input order, then `class,mu,sigma,n` aggregate rows in percent.
pub fn write_report<W: Write>(out: W, rows: &[ReportRow], report: Option<&EvalReport>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record(["image", "class", "epsilon_percent", "error"])?;
    for row in rows {
        let eps = row.epsilon.map(|e| format!("{:.4}", e * 100.0)).unwrap_or_default();
        let class = row.class.to_string();
        w.write_record([row.image.as_str(), class.as_str(), eps.as_str(), row.error.as_deref().unwrap_or("")])?;
    }
    w.write_record(["class", "mu", "sigma", "n"])?;
    if let Some(report) = report {
        let stats = [
            ("benign", report.benign.as_ref()),
            ("melanoma", report.melanoma.as_ref()),
            ("all", Some(&report.all)),
        ];
        for (name, s) in stats {
            if let Some(s) = s {
                w.write_record([
                    name.to_string(),
                    format!("{:.4}", s.mean_percent()),
                    format!("{:.4}", s.std_dev_percent()),
                    s.n.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<report>", e))?;
    Ok(())
}
