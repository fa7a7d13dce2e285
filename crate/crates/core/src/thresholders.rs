//! Global histogram thresholding: Huang & Wang fuzzy similarity, Kapur
//! maximum entropy, Kittler & Illingworth minimum error, and Otsu.
//!
//! Every criterion scans the candidate thresholds `T`, i.e. the levels for
//! which both `{g <= T}` and `{g > T}` are populated. Ties go to the smallest
//! `T`. A histogram with a single populated level has no candidate and is
//! rejected with [`Error::DegenerateHistogram`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, GrayImage, Histogram, LEVELS};

/// Lower bound on a population variance in the minimum-error criterion:
/// the variance of a uniform distribution over one gray-level bin.
pub const KITTLER_MIN_VARIANCE: f64 = 1.0 / 12.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    HuangWang,
    Kapur,
    Kittler,
    Otsu,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::HuangWang, Method::Kapur, Method::Kittler, Method::Otsu];

    pub fn name(self) -> &'static str {
        match self {
            Method::HuangWang => "huang_wang",
            Method::Kapur => "kapur",
            Method::Kittler => "kittler",
            Method::Otsu => "otsu",
        }
    }

    pub fn threshold(self, hist: &Histogram) -> Result<ThresholdResult> {
        match self {
            Method::HuangWang => huang_wang(hist),
            Method::Kapur => kapur(hist),
            Method::Kittler => kittler(hist),
            Method::Otsu => otsu(hist),
        }
    }

    /// Parses a comma-separated method list such as `otsu,kapur`.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let methods = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        if methods.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        Ok(methods)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which side of the threshold is labeled lesion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Polarity {
    /// `x <= T` is lesion. Lesions are darker than skin in the blue channel.
    #[default]
    DarkForeground,
    /// `x > T` is lesion.
    BrightForeground,
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dark" => Ok(Polarity::DarkForeground),
            "bright" => Ok(Polarity::BrightForeground),
            other => Err(Error::InvalidConfig(format!("unknown polarity '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdResult {
    pub method: Method,
    pub threshold: u8,
    /// Criterion value at every candidate threshold, in increasing `T`.
    pub criterion_values: Vec<(u8, f64)>,
}

/// Cumulative zeroth, first and second moments of a histogram, so that any
/// lower/upper split can be summarized in O(1).
struct Moments {
    count: [f64; LEVELS],
    sum: [f64; LEVELS],
    sum_sq: [f64; LEVELS],
    total: f64,
}

impl Moments {
    fn new(hist: &Histogram) -> Self {
        let mut count = [0.0; LEVELS];
        let mut sum = [0.0; LEVELS];
        let mut sum_sq = [0.0; LEVELS];
        let (mut n, mut s, mut s2) = (0u64, 0u64, 0u64);
        for (g, &c) in hist.counts().iter().enumerate() {
            let g = g as u64;
            n += c;
            s += c * g;
            s2 += c * g * g;
            count[g as usize] = n as f64;
            sum[g as usize] = s as f64;
            sum_sq[g as usize] = s2 as f64;
        }
        Self {
            count,
            sum,
            sum_sq,
            total: n as f64,
        }
    }

    /// `(count, sum, sum of squares)` of the levels `<= t` and `> t`.
    fn split(&self, t: usize) -> ([f64; 3], [f64; 3]) {
        let last = LEVELS - 1;
        let lower = [self.count[t], self.sum[t], self.sum_sq[t]];
        let upper = [
            self.count[last] - self.count[t],
            self.sum[last] - self.sum[t],
            self.sum_sq[last] - self.sum_sq[t],
        ];
        (lower, upper)
    }
}

/// Levels `T` with mass on both sides.
fn candidates(hist: &Histogram) -> Result<std::ops::RangeInclusive<usize>> {
    let (lo, hi) = hist.populated_range().ok_or(Error::DegenerateHistogram)?;
    if lo == hi {
        return Err(Error::DegenerateHistogram);
    }
    Ok(lo..=hi - 1)
}

enum Goal {
    Maximize,
    Minimize,
}

fn select(method: Method, hist: &Histogram, goal: Goal, criterion: impl Fn(usize) -> f64) -> Result<ThresholdResult> {
    let mut values = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for t in candidates(hist)? {
        let v = criterion(t);
        values.push((t as u8, v));
        let better = match (&goal, best) {
            (_, None) => true,
            (Goal::Maximize, Some((_, b))) => v > b,
            (Goal::Minimize, Some((_, b))) => v < b,
        };
        if better {
            best = Some((t, v));
        }
    }
    let (t, _) = best.ok_or(Error::DegenerateHistogram)?;
    Ok(ThresholdResult {
        method,
        threshold: t as u8,
        criterion_values: values,
    })
}

/// Maximizes the between-class variance `P0 P1 (mu0 - mu1)^2`.
pub fn otsu(hist: &Histogram) -> Result<ThresholdResult> {
    let m = Moments::new(hist);
    select(Method::Otsu, hist, Goal::Maximize, |t| {
        let ([n0, s0, _], [n1, s1, _]) = m.split(t);
        let (p0, p1) = (n0 / m.total, n1 / m.total);
        let d = s0 / n0 - s1 / n1;
        p0 * p1 * d * d
    })
}

/// Maximizes the summed Shannon entropies of the two normalized populations.
pub fn kapur(hist: &Histogram) -> Result<ThresholdResult> {
    let total = hist.total() as f64;
    // cumulative sum of p ln p, with 0 ln 0 = 0
    let mut plogp = [0.0; LEVELS];
    let mut acc = 0.0;
    for (g, &c) in hist.counts().iter().enumerate() {
        if c > 0 {
            let p = c as f64 / total;
            acc += p * p.ln();
        }
        plogp[g] = acc;
    }
    let m = Moments::new(hist);
    select(Method::Kapur, hist, Goal::Maximize, |t| {
        let ([n0, ..], [n1, ..]) = m.split(t);
        let (p0, p1) = (n0 / total, n1 / total);
        let e0 = plogp[t];
        let e1 = plogp[LEVELS - 1] - plogp[t];
        // -sum (p/P) ln(p/P) = ln P - (sum p ln p) / P
        (p0.ln() - e0 / p0) + (p1.ln() - e1 / p1)
    })
}

/// Minimizes the minimum-error criterion
/// `J = 1 + 2 (P1 ln s1 + P2 ln s2) - 2 (P1 ln P1 + P2 ln P2)`.
pub fn kittler(hist: &Histogram) -> Result<ThresholdResult> {
    let m = Moments::new(hist);
    select(Method::Kittler, hist, Goal::Minimize, |t| {
        let (lower, upper) = m.split(t);
        let term = |[n, s, s2]: [f64; 3]| {
            let p = n / m.total;
            let mean = s / n;
            let var = (s2 / n - mean * mean).max(KITTLER_MIN_VARIANCE);
            // ln sigma = ln(var) / 2
            p * var.ln() - 2.0 * p * p.ln()
        };
        1.0 + term(lower) + term(upper)
    })
}

/// Shannon fuzziness of a membership value; `S(0) = S(1) = 0`.
pub(crate) fn shannon_fuzziness(mu: f64) -> f64 {
    let side = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    side(mu) + side(1.0 - mu)
}

/// Minimizes the fuzziness of the image, where a pixel's membership in its
/// class decays with its distance to the class mean.
pub fn huang_wang(hist: &Histogram) -> Result<ThresholdResult> {
    let (lo, hi) = hist.populated_range().ok_or(Error::DegenerateHistogram)?;
    let spread = (hi - lo) as f64;
    let m = Moments::new(hist);
    let counts = hist.counts();
    select(Method::HuangWang, hist, Goal::Minimize, |t| {
        let ([n0, s0, _], [n1, s1, _]) = m.split(t);
        let (mu0, mu1) = (s0 / n0, s1 / n1);
        let mut energy = 0.0;
        for (g, &c) in counts.iter().enumerate().take(hi + 1).skip(lo) {
            if c == 0 {
                continue;
            }
            let mean = if g <= t { mu0 } else { mu1 };
            let membership = 1.0 / (1.0 + (g as f64 - mean).abs() / spread);
            energy += shannon_fuzziness(membership) * c as f64;
        }
        energy
    })
}

pub fn binarize(img: &GrayImage, threshold: u8, polarity: Polarity) -> BinaryMask {
    let labels = img
        .pixels()
        .iter()
        .map(|&v| match polarity {
            Polarity::DarkForeground => v <= threshold,
            Polarity::BrightForeground => v > threshold,
        })
        .collect();
    BinaryMask::new(img.width(), img.height(), labels).expect("dimensions come from a valid image")
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleMember {
    pub result: ThresholdResult,
    pub mask: BinaryMask,
}

/// The thresholds and binarized outputs of `P >= 1` methods on one image.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    members: Vec<EnsembleMember>,
}

impl Ensemble {
    pub fn new(members: Vec<EnsembleMember>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyEnsemble)?;
        let dims = first.mask.dims();
        for m in &members[1..] {
            m.mask.ensure_same_dims(dims)?;
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[EnsembleMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn thresholds(&self) -> Vec<u8> {
        self.members.iter().map(|m| m.result.threshold).collect()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.members[0].mask.dims()
    }
}

/// Thresholds `img` with every method, in order, and binarizes each result.
pub fn run_ensemble(img: &GrayImage, methods: &[Method], polarity: Polarity) -> Result<Ensemble> {
    if methods.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let hist = img.histogram();
    let members = methods
        .iter()
        .map(|m| {
            let result = m.threshold(&hist)?;
            let mask = binarize(img, result.threshold, polarity);
            Ok(EnsembleMember { result, mask })
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(members)
}
