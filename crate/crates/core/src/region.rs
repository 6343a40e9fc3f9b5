//! Graph-region bounds for plateau functions: if `f = a` on `(0, b]`, then on
//! every interval `(nb, (n+1)b]` the graph must lie in `[a/2, 2^n a]`.
//! Checked on samples, and drawn as an SVG figure.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::functions::{detect_plateau, ClassifyError, EvalError, RealFn, REL_TOL};
use crate::model::{Relation, Verdict, Witness};

/// Left-endpoint offset: the first sample of `(nb, (n+1)b]` is `nb (1 + DELTA)`.
pub const DELTA: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("invalid region spec: {0}")]
    InvalidSpec(String),
    #[error("interval {n} is outside 1..={n_max}")]
    OutOfRange { n: usize, n_max: usize },
    #[error("f is not constant {a} on (0, {b}] at the sampled points")]
    PlateauNotVerified { a: f64, b: f64, found: Option<f64> },
    #[error("f is not amenable: f(0) = {0}")]
    NotAmenable(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("writing {path}: {source}")]
    Io { path: String, source: io::Error },
}

impl From<ClassifyError> for RegionError {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::Eval(e) => RegionError::Eval(e),
            ClassifyError::InvalidGrid(m) => RegionError::InvalidSpec(m),
        }
    }
}

type Result<T> = std::result::Result<T, RegionError>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionSpec {
    pub a: f64,
    pub b: f64,
    pub n_max: usize,
    pub samples_per_interval: usize,
}

impl RegionSpec {
    pub fn new(a: f64, b: f64, n_max: usize, samples_per_interval: usize) -> Result<Self> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(a) || !pos(b) {
            return Err(RegionError::InvalidSpec(format!("a and b must be positive, got a={a}, b={b}")));
        }
        if n_max == 0 || samples_per_interval == 0 {
            return Err(RegionError::InvalidSpec("n_max and samples_per_interval must be >= 1".into()));
        }
        if n_max > 1000 {
            return Err(RegionError::InvalidSpec(format!("n_max = {n_max} overflows 2^n a")));
        }
        Ok(RegionSpec { a, b, n_max, samples_per_interval })
    }
}

/// `(a/2, 2^n a)` for `1 <= n <= n_max`. Both are exact: halving and doubling only.
pub fn region_bounds(spec: &RegionSpec, n: usize) -> Result<(f64, f64)> {
    if n == 0 || n > spec.n_max {
        return Err(RegionError::OutOfRange { n, n_max: spec.n_max });
    }
    Ok((spec.a / 2.0, spec.a * 2f64.powi(n as i32)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    Lower,
    Upper,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalReport {
    pub n: usize,
    /// The interval `(left, right]`.
    pub left: f64,
    pub right: f64,
    pub lower: f64,
    pub upper: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violated: Option<BoundSide>,
    #[serde(skip)]
    samples: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionReport {
    pub function: String,
    pub spec: RegionSpec,
    /// Whether `(0, b]` was rescaled to `(0, 1]`.
    pub normalized: bool,
    pub intervals: Vec<IntervalReport>,
    pub all_hold: bool,
    #[serde(skip)]
    plateau_samples: Vec<(f64, f64)>,
}

impl RegionReport {
    pub fn first_failure(&self) -> Option<&IntervalReport> {
        self.intervals.iter().find(|i| i.verdict.is_fails())
    }
}

/// Sample abscissae of `(nb, (n+1)b]`: the left neighbour and an even split ending at `(n+1)b`.
fn interval_samples(n: usize, b: f64, samples: usize) -> Vec<f64> {
    let mut xs = vec![n as f64 * b * (1.0 + DELTA)];
    xs.extend((1..=samples).map(|k| {
        if k == samples {
            (n + 1) as f64 * b
        } else {
            (n * samples + k) as f64 * b / samples as f64
        }
    }));
    xs
}

pub fn region_check(f: &RealFn, spec: &RegionSpec) -> Result<RegionReport> {
    region_check_with(f, spec, false)
}

/// With `normalize`, `g(t) = f(b t)` is checked against `(0, 1]` instead; the
/// verdicts are the same, reported in rescaled abscissae.
pub fn region_check_with(f: &RealFn, spec: &RegionSpec, normalize: bool) -> Result<RegionReport> {
    let f0 = f.eval(0.0)?;
    if f0 != 0.0 {
        return Err(RegionError::NotAmenable(f0));
    }
    let found = detect_plateau(f, spec.b)?;
    if !found.is_some_and(|a| (a - spec.a).abs() <= REL_TOL * spec.a) {
        return Err(RegionError::PlateauNotVerified { a: spec.a, b: spec.b, found });
    }
    let (b, scale) = if normalize { (1.0, spec.b) } else { (spec.b, 1.0) };
    let view = RegionSpec { b, ..*spec };
    let g = |t: f64| f.eval(t * scale);

    let plateau_samples = (1..=8)
        .map(|k| {
            let t = b * k as f64 / 8.0;
            Ok((t, g(t)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut intervals = Vec::with_capacity(spec.n_max);
    for n in 1..=spec.n_max {
        let (lower, upper) = region_bounds(&view, n)?;
        let samples = interval_samples(n, b, spec.samples_per_interval)
            .into_iter()
            .map(|t| Ok((t, g(t)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut verdict = Verdict::holds().with_note("no sample outside the band");
        let mut violated = None;
        for &(t, y) in &samples {
            let (side, rel, bound, ineq) = if y > upper * (1.0 + REL_TOL) {
                (BoundSide::Upper, Relation::Greater, upper, format!("f(x) <= 2^{n} a"))
            } else if y < lower * (1.0 - REL_TOL) {
                (BoundSide::Lower, Relation::Less, lower, "f(x) >= a/2".to_string())
            } else {
                continue;
            };
            violated = Some(side);
            verdict = Verdict::fails(Witness::Sample {
                args: vec![t],
                lhs: y,
                rhs: bound,
                relation: rel,
                inequality: ineq,
            });
            break;
        }
        intervals.push(IntervalReport {
            n,
            left: n as f64 * b,
            right: (n + 1) as f64 * b,
            lower,
            upper,
            verdict,
            violated,
            samples,
        });
    }
    let all_hold = intervals.iter().all(|i| i.verdict.is_holds());
    Ok(RegionReport {
        function: f.source().to_string(),
        spec: view,
        normalized: normalize,
        intervals,
        all_hold,
        plateau_samples,
    })
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 40.0;

/// Plot frame: linear x over `[0, (n_max+1) b]`, log2 y over `[a/8, 2^(n_max+1) a]`.
struct Frame {
    x_end: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn new(spec: &RegionSpec) -> Self {
        let la = spec.a.log2();
        Frame { x_end: (spec.n_max + 1) as f64 * spec.b, y_lo: la - 3.0, y_hi: la + spec.n_max as f64 + 1.0 }
    }

    fn x(&self, t: f64) -> f64 {
        LEFT + (WIDTH - LEFT - RIGHT) * t / self.x_end
    }

    /// Values at or below the bottom (including 0) are clamped to it.
    fn y(&self, v: f64) -> f64 {
        let l = if v > 0.0 { v.log2().clamp(self.y_lo, self.y_hi) } else { self.y_lo };
        HEIGHT - BOTTOM - (HEIGHT - TOP - BOTTOM) * (l - self.y_lo) / (self.y_hi - self.y_lo)
    }
}

/// The figure as SVG text. Element ids: `guide-half`, `guide-a`, `guide-2a`,
/// `tick-k`, `step-n` (upper envelope), `lower-n`, `fn-path`, `violation-k`.
pub fn render_region_svg(report: &RegionReport) -> String {
    let spec = &report.spec;
    let fr = Frame::new(spec);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH:.0}" height="{HEIGHT:.0}" viewBox="0 0 {WIDTH:.0} {HEIGHT:.0}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH:.0}" height="{HEIGHT:.0}" fill="white"/>"#);
    let (x0, x1) = (fr.x(0.0), fr.x(fr.x_end));
    let base = HEIGHT - BOTTOM;
    let _ = writeln!(s, r#"<line id="axis-x" x1="{x0:.2}" y1="{base:.2}" x2="{x1:.2}" y2="{base:.2}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line id="axis-y" x1="{x0:.2}" y1="{base:.2}" x2="{x0:.2}" y2="{TOP:.2}" stroke="black"/>"#);
    for (id, v, label) in [("guide-half", spec.a / 2.0, "a/2"), ("guide-a", spec.a, "a"), ("guide-2a", 2.0 * spec.a, "2a")] {
        let y = fr.y(v);
        let _ = writeln!(
            s,
            r##"<line id="{id}" x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#999999" stroke-dasharray="4 3"/>"##
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{label}</text>"#, x0 - 6.0, y + 4.0);
    }
    for k in 1..=spec.n_max {
        let x = fr.x(k as f64 * spec.b);
        let _ = writeln!(s, r#"<line id="tick-{k}" x1="{x:.2}" y1="{base:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, base + 5.0);
        let label = if k == 1 { "b".to_string() } else { format!("{k}b") };
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{label}</text>"#, base + 18.0);
    }
    for iv in &report.intervals {
        let (l, r) = (fr.x(iv.left), fr.x(iv.right));
        let (yu, yl) = (fr.y(iv.upper), fr.y(iv.lower));
        let _ = writeln!(s, r##"<path id="step-{}" d="M {l:.2} {yu:.2} H {r:.2}" stroke="#1f4e9e" fill="none"/>"##, iv.n);
        let _ = writeln!(s, r##"<path id="lower-{}" d="M {l:.2} {yl:.2} H {r:.2}" stroke="#1f4e9e" fill="none"/>"##, iv.n);
    }
    let mut pts: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    pts.extend(report.plateau_samples.iter().copied());
    for iv in &report.intervals {
        pts.extend(iv.samples.iter().copied());
    }
    let path: Vec<String> = pts.iter().map(|&(t, v)| format!("{:.2},{:.2}", fr.x(t), fr.y(v))).collect();
    let _ = writeln!(s, r##"<polyline id="fn-path" points="{}" stroke="#c0392b" fill="none"/>"##, path.join(" "));
    let violations = report.intervals.iter().filter_map(|iv| match &iv.verdict.witness {
        Some(Witness::Sample { args, lhs, .. }) => Some((args[0], *lhs)),
        _ => None,
    });
    for (k, (t, v)) in violations.enumerate() {
        let _ = writeln!(
            s,
            r##"<circle id="violation-{}" cx="{:.2}" cy="{:.2}" r="4" stroke="#c0392b" fill="none"/>"##,
            k + 1,
            fr.x(t),
            fr.y(v)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Checks the region and writes the figure atomically (temporary file, then rename).
pub fn emit_region_svg(f: &RealFn, spec: &RegionSpec, path: &Path) -> Result<RegionReport> {
    let report = region_check(f, spec)?;
    let svg = render_region_svg(&report);
    let io_err = |source| RegionError::Io { path: path.display().to_string(), source };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, svg).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)?;
    Ok(report)
}
