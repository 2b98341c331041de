//! Catalog dynamical systems and precision-safe orbit generation.
//!
//! Every other module consumes sample sequences `a_n = f(T^n x0)` produced
//! here. All coordinates are computed per-index (never by iterating the map
//! in floating point), so orbits are reproducible bit-for-bit and carry no
//! error growth in the horizon:
//!
//! * rotations reduce `x0 + n*alpha` with a compensated product,
//! * the doubling map reads its point from a seed-derived bit stream
//!   (SplitMix64 words; the shift is exact on the stream),
//! * the skew product uses the closed form
//!   `y_n = y0 + n*x0 + n(n-1)/2 * alpha (mod 1)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::numeric::{frac_affine, frac_skew, stream_word, unit_phase};

/// The transformations in the catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SystemKind {
    /// `x -> x + alpha (mod 1)` on the circle.
    Rotation,
    /// `x -> 2x (mod 1)`; the start point is a seed-derived bit stream.
    Doubling,
    /// `(x, y) -> (x + alpha, x + y)` on the 2-torus.
    SkewProduct,
    /// `(x, y) -> (x + alpha, y + theta)` on the 2-torus.
    ProductRotation,
    /// A bounded sample sequence read from a CSV file; no dynamics.
    ExternalSequence,
}

impl SystemKind {
    /// Phase-space dimension (0 for external data).
    pub fn dimension(self) -> usize {
        match self {
            SystemKind::Rotation | SystemKind::Doubling => 1,
            SystemKind::SkewProduct | SystemKind::ProductRotation => 2,
            SystemKind::ExternalSequence => 0,
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SystemKind::Rotation => "rotation",
            SystemKind::Doubling => "doubling",
            SystemKind::SkewProduct => "skew-product",
            SystemKind::ProductRotation => "product-rotation",
            SystemKind::ExternalSequence => "external-sequence",
        };
        f.write_str(s)
    }
}

/// A catalog entry: the transformation plus its parameters.
///
/// JSON schema (all keys optional except `kind`):
/// `{"kind": "Rotation", "alpha": 0.41, "theta": 0.0, "seed": 42, "path": null}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub kind: SystemKind,
    /// Rotation angle in [0, 1) (Rotation / SkewProduct / ProductRotation).
    #[serde(default)]
    pub alpha: f64,
    /// Second angle in [0, 1) (ProductRotation).
    #[serde(default)]
    pub theta: f64,
    /// Bit-stream seed (Doubling) and default randomization seed.
    #[serde(default)]
    pub seed: u64,
    /// Sample file (ExternalSequence only).
    #[serde(default)]
    pub path: Option<PathBuf>,
}

impl SystemSpec {
    pub fn rotation(alpha: f64) -> Self {
        SystemSpec {
            kind: SystemKind::Rotation,
            alpha,
            theta: 0.0,
            seed: 0,
            path: None,
        }
    }

    pub fn doubling(seed: u64) -> Self {
        SystemSpec {
            kind: SystemKind::Doubling,
            alpha: 0.0,
            theta: 0.0,
            seed,
            path: None,
        }
    }

    pub fn skew_product(alpha: f64) -> Self {
        SystemSpec {
            kind: SystemKind::SkewProduct,
            alpha,
            theta: 0.0,
            seed: 0,
            path: None,
        }
    }

    pub fn product_rotation(alpha: f64, theta: f64) -> Self {
        SystemSpec {
            kind: SystemKind::ProductRotation,
            alpha,
            theta,
            seed: 0,
            path: None,
        }
    }

    pub fn external(path: impl Into<PathBuf>) -> Self {
        SystemSpec {
            kind: SystemKind::ExternalSequence,
            alpha: 0.0,
            theta: 0.0,
            seed: 0,
            path: Some(path.into()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) || !self.alpha.is_finite() {
            return Err(Error::Parameter(format!(
                "alpha must lie in [0, 1), got {}",
                self.alpha
            )));
        }
        if !(0.0..1.0).contains(&self.theta) || !self.theta.is_finite() {
            return Err(Error::Parameter(format!(
                "theta must lie in [0, 1), got {}",
                self.theta
            )));
        }
        match self.kind {
            SystemKind::ExternalSequence => {
                if self.path.is_none() {
                    return Err(Error::Parameter(
                        "ExternalSequence requires a path".into(),
                    ));
                }
                // an external sequence carries no dynamical parameters
                if self.alpha != 0.0 || self.theta != 0.0 {
                    return Err(Error::Parameter(
                        "ExternalSequence carries no dynamical parameters; alpha/theta must be 0"
                            .into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SystemKind::Rotation => write!(f, "rotation(alpha={})", self.alpha),
            SystemKind::Doubling => write!(f, "doubling(seed={})", self.seed),
            SystemKind::SkewProduct => write!(f, "skew-product(alpha={})", self.alpha),
            SystemKind::ProductRotation => {
                write!(f, "product-rotation(alpha={}, theta={})", self.alpha, self.theta)
            }
            SystemKind::ExternalSequence => write!(
                f,
                "external({})",
                self.path.as_deref().unwrap_or(Path::new("?")).display()
            ),
        }
    }
}

/// A point of the phase space; one or two torus coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub enum Point {
    OneD(f64),
    TwoD(f64, f64),
}

impl Point {
    pub fn dimension(self) -> usize {
        match self {
            Point::OneD(_) => 1,
            Point::TwoD(_, _) => 2,
        }
    }

    pub fn x(self) -> f64 {
        match self {
            Point::OneD(x) | Point::TwoD(x, _) => x,
        }
    }

    pub fn y(self) -> f64 {
        match self {
            Point::OneD(_) => 0.0,
            Point::TwoD(_, y) => y,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::OneD(x) => write!(f, "({x})"),
            Point::TwoD(x, y) => write!(f, "({x}, {y})"),
        }
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = String;
    fn try_from(v: Vec<f64>) -> std::result::Result<Self, String> {
        match v.as_slice() {
            [x] => Ok(Point::OneD(*x)),
            [x, y] => Ok(Point::TwoD(*x, *y)),
            _ => Err(format!("a point has 1 or 2 coordinates, got {}", v.len())),
        }
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Vec<f64> {
        match p {
            Point::OneD(x) => vec![x],
            Point::TwoD(x, y) => vec![x, y],
        }
    }
}

/// One mode `c * e^{2 pi i (k x + l y)}` of a trigonometric polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: i32,
    pub l: i32,
    pub c: Complex64,
}

/// A finite trigonometric polynomial, optionally plus an interval indicator
/// `1_{[a,b)}(x)`, with symbolically known integral. The `mean_zero` flag
/// subtracts the symbolic integral at evaluation time, so the integral of a
/// mean-zero observable is 0 exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Observable {
    #[serde(default)]
    pub terms: Vec<TrigTerm>,
    /// `Some((a, b))` adds `1_{[a,b)}(x)`, `0 <= a < b <= 1`.
    #[serde(default)]
    pub indicator: Option<(f64, f64)>,
    #[serde(default)]
    pub mean_zero: bool,
}

impl Observable {
    pub fn constant(c: Complex64) -> Self {
        Observable {
            terms: vec![TrigTerm { k: 0, l: 0, c }],
            indicator: None,
            mean_zero: false,
        }
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn zero() -> Self {
        Observable {
            terms: Vec::new(),
            indicator: None,
            mean_zero: false,
        }
    }

    /// `e^{2 pi i k x}`.
    pub fn character(k: i32) -> Self {
        Observable {
            terms: vec![TrigTerm {
                k,
                l: 0,
                c: Complex64::new(1.0, 0.0),
            }],
            indicator: None,
            mean_zero: false,
        }
    }

    /// `e^{2 pi i l y}`.
    pub fn character_y(l: i32) -> Self {
        Observable {
            terms: vec![TrigTerm {
                k: 0,
                l,
                c: Complex64::new(1.0, 0.0),
            }],
            indicator: None,
            mean_zero: false,
        }
    }

    /// `cos(2 pi k x)` as the two-mode polynomial.
    pub fn cosine(k: i32) -> Self {
        let half = Complex64::new(0.5, 0.0);
        Observable {
            terms: vec![TrigTerm { k, l: 0, c: half }, TrigTerm { k: -k, l: 0, c: half }],
            indicator: None,
            mean_zero: false,
        }
    }

    /// `1_{[a,b)}(x)`.
    pub fn indicator(a: f64, b: f64) -> Self {
        Observable {
            terms: Vec::new(),
            indicator: Some((a, b)),
            mean_zero: false,
        }
    }

    pub fn with_mean_zero(mut self, flag: bool) -> Self {
        self.mean_zero = flag;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((a, b)) = self.indicator {
            if !(0.0 <= a && a < b && b <= 1.0) {
                return Err(Error::Parameter(format!(
                    "indicator needs 0 <= a < b <= 1, got [{a}, {b})"
                )));
            }
        }
        Ok(())
    }

    /// True when no mode involves the second coordinate.
    pub fn is_one_dimensional(&self) -> bool {
        self.terms.iter().all(|t| t.l == 0)
    }

    /// Integral before the mean-zero correction: the (0,0) coefficient plus
    /// the indicator length.
    pub fn raw_integral(&self) -> Complex64 {
        let mut v = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            if t.k == 0 && t.l == 0 {
                v += t.c;
            }
        }
        if let Some((a, b)) = self.indicator {
            v += b - a;
        }
        v
    }

    /// Symbolic integral; exactly 0 when `mean_zero` is set.
    pub fn integral(&self) -> Complex64 {
        if self.mean_zero {
            Complex64::new(0.0, 0.0)
        } else {
            self.raw_integral()
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        let mut v = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            v += t.c * unit_phase(t.k as f64 * x + t.l as f64 * y);
        }
        if let Some((a, b)) = self.indicator {
            if (a..b).contains(&x) {
                v += 1.0;
            }
        }
        if self.mean_zero {
            v -= self.raw_integral();
        }
        v
    }

    pub fn eval_point(&self, p: Point) -> Complex64 {
        self.eval(p.x(), p.y())
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for t in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.3}{:+.3}i)e({},{})", t.c.re, t.c.im, t.k, t.l)?;
        }
        if let Some((a, b)) = self.indicator {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "1_[{a},{b})")?;
        }
        if first {
            write!(f, "0")?;
        }
        if self.mean_zero {
            write!(f, " - mean")?;
        }
        Ok(())
    }
}

/// The doubling-map coordinate after `n` steps: the 53-bit window of the
/// seed's bit stream starting at bit `n`, as a dyadic rational in [0, 1).
/// Bit `i` of the stream is bit `63 - (i mod 64)` of `stream_word(seed, i/64)`.
pub fn doubling_coordinate(seed: u64, n: u64) -> f64 {
    let q = n / 64;
    let r = (n % 64) as u32;
    let w0 = stream_word(seed, q);
    let w = if r == 0 {
        w0
    } else {
        (w0 << r) | (stream_word(seed, q + 1) >> (64 - r))
    };
    // top 53 bits: exact as f64, and exactly shifted by the map
    (w >> 11) as f64 / 9007199254740992.0
}

/// The phase-space point after `n` steps. Pure in its arguments; the same
/// call always returns the same bits.
pub fn point_at(system: &SystemSpec, x0: Point, n: u64) -> Result<Point> {
    match system.kind {
        SystemKind::Rotation => match x0 {
            Point::OneD(x) => Ok(Point::OneD(frac_affine(x, n, system.alpha))),
            Point::TwoD(_, _) => Err(Error::DimensionMismatch(
                "rotation needs a one-dimensional start point".into(),
            )),
        },
        SystemKind::Doubling => Ok(Point::OneD(doubling_coordinate(system.seed, n))),
        SystemKind::SkewProduct => match x0 {
            Point::TwoD(x, y) => Ok(Point::TwoD(
                frac_affine(x, n, system.alpha),
                frac_skew(y, n, x, system.alpha),
            )),
            Point::OneD(_) => Err(Error::DimensionMismatch(
                "skew product needs a two-dimensional start point".into(),
            )),
        },
        SystemKind::ProductRotation => match x0 {
            Point::TwoD(x, y) => Ok(Point::TwoD(
                frac_affine(x, n, system.alpha),
                frac_affine(y, n, system.theta),
            )),
            Point::OneD(_) => Err(Error::DimensionMismatch(
                "product rotation needs a two-dimensional start point".into(),
            )),
        },
        SystemKind::ExternalSequence => Err(Error::Parameter(
            "external sequences have no phase-space points".into(),
        )),
    }
}

/// Provenance of an orbit, kept for reports and self-describing output.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitMeta {
    pub label: String,
    pub system: Option<SystemSpec>,
    pub observable: Option<Observable>,
    pub start: Option<Point>,
    pub len: usize,
}

/// A finite sample sequence `a_n = f(T^n x0)`, immutable after construction
/// and safe to share across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    samples: Vec<Complex64>,
    sup_norm: f64,
    meta: OrbitMeta,
}

impl Orbit {
    /// Wraps an explicit sample sequence (tests, derived products, external
    /// callers). The sup norm is cached on construction.
    pub fn from_samples(label: impl Into<String>, samples: Vec<Complex64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyOrbit);
        }
        let sup_norm = samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let len = samples.len();
        Ok(Orbit {
            samples,
            sup_norm,
            meta: OrbitMeta {
                label: label.into(),
                system: None,
                observable: None,
                start: None,
                len,
            },
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn meta(&self) -> &OrbitMeta {
        &self.meta
    }
}

impl std::ops::Index<usize> for Orbit {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.samples[i]
    }
}

/// Generates `samples[n] = f(T^n x0)` for `n = 0..L-1`.
///
/// For `Doubling` the start point is ignored (the seed drives the bit
/// stream); for `ExternalSequence` both the observable and the start point
/// are ignored and the file contents are used as-is.
pub fn generate_orbit(
    system: &SystemSpec,
    obs: &Observable,
    x0: Point,
    l: usize,
) -> Result<Orbit> {
    if l == 0 {
        return Err(Error::EmptyOrbit);
    }
    system.validate()?;
    obs.validate()?;

    let samples = match system.kind {
        SystemKind::ExternalSequence => {
            let path = system.path.as_ref().expect("validated above");
            let data = load_external_sequence(path)?;
            if data.len() < l {
                return Err(Error::InsufficientData {
                    needed: l,
                    available: data.len(),
                });
            }
            data[..l].to_vec()
        }
        kind => {
            if kind.dimension() == 1 && !obs.is_one_dimensional() {
                return Err(Error::DimensionMismatch(format!(
                    "observable has y-modes but {kind} is one-dimensional"
                )));
            }
            if kind != SystemKind::Doubling && x0.dimension() != kind.dimension() {
                return Err(Error::DimensionMismatch(format!(
                    "{kind} needs a {}-dimensional start point, got {}",
                    kind.dimension(),
                    x0.dimension()
                )));
            }
            let mut samples = Vec::with_capacity(l);
            for n in 0..l {
                let p = point_at(system, x0, n as u64)?;
                samples.push(obs.eval_point(p));
            }
            samples
        }
    };

    let sup_norm = samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(Orbit {
        samples,
        sup_norm,
        meta: OrbitMeta {
            label: format!("{system} | {obs} | x0={x0} | L={l}"),
            system: Some(system.clone()),
            observable: Some(obs.clone()),
            start: Some(x0),
            len: l,
        },
    })
}

/// Exact symbolic integral of an observable (see [`Observable::integral`]).
pub fn observable_integral(obs: &Observable) -> Complex64 {
    obs.integral()
}

/// Reads a complex sequence from CSV. The header row is required and must be
/// `re,im` (or `n,re,im`, which lets orbit CSVs round-trip as inputs).
pub fn load_external_sequence(path: &Path) -> Result<Vec<Complex64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let (re_idx, im_idx) = match cols.as_slice() {
        ["re", "im"] => (0, 1),
        ["n", "re", "im"] => (1, 2),
        other => {
            return Err(Error::Parse(format!(
                "expected header `re,im` or `n,re,im`, got {other:?}"
            )))
        }
    };
    let mut out = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let field = |idx: usize| -> Result<f64> {
            record
                .get(idx)
                .ok_or_else(|| Error::Parse(format!("row {line}: missing column {idx}")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {line}: {e}")))
        };
        out.push(Complex64::new(field(re_idx)?, field(im_idx)?));
    }
    Ok(out)
}
