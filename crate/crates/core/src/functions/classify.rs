//! Sampled classification of a function: amenable, increasing, subadditive,
//! quasi-subadditive, limit at 0+, plateau.
//!
//! `Fails` always carries a concrete witness. `Holds` only means no violation
//! was found on the grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::{EvalError, RealFn};
use crate::model::{Constant, Relation, Verdict, Witness};
use crate::par::Exec;

/// Relative tolerance for comparisons on the sampling paths.
pub const REL_TOL: f64 = 1e-9;
/// Number of geometric samples `x_max * 2^-k`, `k = 1..=GEOMETRIC_DEPTH`.
pub const GEOMETRIC_DEPTH: u32 = 40;
/// Pairs over a coarse subset of this many points are enumerated exhaustively.
const COARSE: usize = 256;
/// The last this-many geometric values must agree for a limit at 0+ to be reported.
const LIMIT_WINDOW: usize = 8;
const LIMIT_TOL: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Sampling grid. Everything in a profile is a pure function of this and `f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampleGrid {
    pub x_max: f64,
    pub n_points: usize,
    pub seed: u64,
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid { x_max: 20.0, n_points: 10_000, seed: 1 }
    }
}

impl SampleGrid {
    pub fn new(x_max: f64, n_points: usize, seed: u64) -> Result<Self, ClassifyError> {
        let g = SampleGrid { x_max, n_points, seed };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<(), ClassifyError> {
        if !(self.x_max > 0.0 && self.x_max.is_finite()) {
            return Err(ClassifyError::InvalidGrid(format!("x_max must be positive, got {}", self.x_max)));
        }
        if self.n_points < 2 {
            return Err(ClassifyError::InvalidGrid(format!("n_points must be >= 2, got {}", self.n_points)));
        }
        Ok(())
    }

    /// Sorted, deduplicated sample points; the first is always 0.
    pub fn points(&self) -> Vec<f64> {
        let n = self.n_points;
        let mut xs: Vec<f64> = (0..=n).map(|i| self.x_max * i as f64 / n as f64).collect();
        xs.extend(self.geometric());
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        xs.extend((0..n / 4).map(|_| self.x_max * (1.0 - rng.gen::<f64>())));
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs
    }

    /// `x_max * 2^-k` for `k = 1..=GEOMETRIC_DEPTH`, decreasing.
    pub fn geometric(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=GEOMETRIC_DEPTH).map(move |k| self.x_max * 0.5f64.powi(k as i32))
    }
}

/// Divergence rule shared by quasi-subadditivity and the triplet searches:
/// a supremum diverges when it exceeds `threshold` and grew by at least
/// `growth` between the low range and the full range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Divergence {
    pub threshold: f64,
    pub growth: f64,
}

impl Default for Divergence {
    fn default() -> Self {
        Divergence { threshold: 1e6, growth: 10.0 }
    }
}

impl Divergence {
    pub fn fires(&self, low_sup: f64, sup: f64) -> bool {
        sup > self.threshold && sup >= self.growth * low_sup.max(1.0)
    }

    /// Upper end of the "low range": everything except the top two octaves.
    pub fn low_range(range: f64) -> f64 {
        range / 4.0
    }
}

#[derive(Clone, Debug, Default)]
pub struct ClassifyOptions {
    pub exec: Exec,
    pub divergence: Divergence,
    /// Right endpoint `b` of a plateau to verify; never guessed.
    pub plateau_b: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Plateau {
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FnProfile {
    pub function: String,
    pub grid: SampleGrid,
    pub divergence: Divergence,
    pub amenable: Verdict,
    pub increasing: Verdict,
    pub subadditive: Verdict,
    pub quasi_subadditive: Verdict,
    pub limit_at_zero: Option<f64>,
    pub plateau: Option<Plateau>,
}

impl FnProfile {
    pub fn s_star_estimate(&self) -> f64 {
        self.quasi_subadditive
            .constant("s_star_estimate")
            .map(Constant::as_f64)
            .unwrap_or(f64::INFINITY)
    }
}

/// Which property a sample witness refutes; used to replay it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FnCheck {
    Amenable,
    Increasing,
    Subadditive,
    /// `f(a+b) <= s (f(a) + f(b))`.
    QuasiSubadditive { s: f64 },
}

const GRID_NOTE: &str = "grid-verified: no violation among sampled points";

pub fn classify_fn(f: &RealFn, grid: SampleGrid) -> Result<FnProfile, ClassifyError> {
    classify_fn_with(f, grid, &ClassifyOptions::default())
}

pub fn classify_fn_with(f: &RealFn, grid: SampleGrid, opts: &ClassifyOptions) -> Result<FnProfile, ClassifyError> {
    grid.validate()?;
    let exec = opts.exec;
    let xs = grid.points();
    let ys = eval_all(f, &xs, exec)?;

    let amenable = amenable(f, &xs, &ys)?;
    let increasing = increasing(&xs, &ys);

    let pairs = sample_pairs(&grid, &xs);
    let sums: Vec<f64> = pairs.iter().map(|&(i, j)| xs[i] + xs[j]).collect();
    let at_sums = eval_all(f, &sums, exec)?;
    let subadditive = subadditive(&xs, &ys, &pairs, &at_sums);
    let quasi = quasi_subadditive(&grid, opts.divergence, &xs, &ys, &pairs, &at_sums, subadditive.is_holds());

    let geo: Vec<f64> = grid.geometric().collect();
    let geo_vals = eval_all(f, &geo, exec)?;
    let limit_at_zero = limit_from_tail(&geo_vals);
    let plateau = match opts.plateau_b {
        Some(b) => detect_plateau(f, b)?.map(|a| Plateau { a, b }),
        None => None,
    };

    Ok(FnProfile {
        function: f.source().to_string(),
        grid,
        divergence: opts.divergence,
        amenable,
        increasing,
        subadditive,
        quasi_subadditive: quasi,
        limit_at_zero,
        plateau,
    })
}

fn eval_all(f: &RealFn, xs: &[f64], exec: Exec) -> Result<Vec<f64>, EvalError> {
    exec.map_slice(xs, |&x| f.eval(x)).into_iter().collect()
}

fn close(u: f64, v: f64) -> bool {
    (u - v).abs() <= REL_TOL * u.abs().max(v.abs())
}

fn sample(args: Vec<f64>, lhs: f64, rhs: f64, relation: Relation, inequality: &str) -> Witness {
    Witness::Sample { args, lhs, rhs, relation, inequality: inequality.to_string() }
}

fn amenable(f: &RealFn, xs: &[f64], ys: &[f64]) -> Result<Verdict, EvalError> {
    let f0 = ys[0];
    if f0 != 0.0 {
        return Ok(Verdict::fails(sample(vec![0.0], f0, 0.0, Relation::NotEqual, "f(0) = 0")));
    }
    let zero_at = |x: f64, y: f64| Verdict::fails(sample(vec![x], y, 0.0, Relation::Equal, "f(x) > 0 for x > 0"));
    let y1 = f.eval(1.0)?;
    if y1 == 0.0 {
        return Ok(zero_at(1.0, y1));
    }
    Ok(match xs.iter().zip(ys).skip(1).find(|(_, &y)| y == 0.0) {
        Some((&x, &y)) => zero_at(x, y),
        None => Verdict::holds().with_note(GRID_NOTE),
    })
}

fn increasing(xs: &[f64], ys: &[f64]) -> Verdict {
    for i in 1..xs.len() {
        let (lo, hi) = (ys[i - 1], ys[i]);
        if lo > hi && !close(lo, hi) {
            return Verdict::fails(sample(vec![xs[i - 1], xs[i]], lo, hi, Relation::Greater, "f(x) <= f(y) for x < y"));
        }
    }
    Verdict::holds().with_note(GRID_NOTE)
}

/// Index pairs `(i, j)`, `i <= j`, over the positive samples: all pairs of a
/// coarse subset (which includes every geometric point), the diagonal, and
/// `2 n_points` seeded random pairs. Sorted and deduplicated, so ties in the
/// reductions below resolve to the lexicographically smallest pair.
fn sample_pairs(grid: &SampleGrid, xs: &[f64]) -> Vec<(usize, usize)> {
    let m = xs.len();
    let stride = ((m - 1) / COARSE).max(1);
    let geo: Vec<f64> = grid.geometric().collect();
    let coarse: Vec<usize> = (1..m)
        .filter(|&i| i % stride == 0 || i == m - 1 || geo.contains(&xs[i]))
        .collect();
    let mut pairs = Vec::with_capacity(coarse.len() * coarse.len() / 2 + 3 * m);
    for (k, &i) in coarse.iter().enumerate() {
        pairs.extend(coarse[k..].iter().map(|&j| (i, j)));
    }
    pairs.extend((1..m).map(|i| (i, i)));
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed ^ 0x5eed_0f_5a);
    for _ in 0..2 * grid.n_points {
        let (i, j) = (rng.gen_range(1..m), rng.gen_range(1..m));
        pairs.push((i.min(j), i.max(j)));
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

fn subadditive(xs: &[f64], ys: &[f64], pairs: &[(usize, usize)], at_sums: &[f64]) -> Verdict {
    let mut worst: Option<(f64, usize)> = None;
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let defect = at_sums[k] - (ys[i] + ys[j]);
        if worst.map_or(true, |(w, _)| defect > w) {
            worst = Some((defect, k));
        }
    }
    let Some((defect, k)) = worst else {
        return Verdict::holds().with_note(GRID_NOTE);
    };
    let (i, j) = pairs[k];
    let (lhs, rhs) = (at_sums[k], ys[i] + ys[j]);
    let v = if defect > REL_TOL * lhs.max(rhs) {
        Verdict::fails(sample(vec![xs[i], xs[j]], lhs, rhs, Relation::Greater, "f(a+b) <= f(a) + f(b)"))
    } else {
        Verdict::holds().with_note(GRID_NOTE)
    };
    v.with_constant("max_defect", Constant::Real(defect))
}

fn quasi_subadditive(
    grid: &SampleGrid,
    rule: Divergence,
    xs: &[f64],
    ys: &[f64],
    pairs: &[(usize, usize)],
    at_sums: &[f64],
    subadditive: bool,
) -> Verdict {
    let low_edge = Divergence::low_range(grid.x_max);
    let (mut sup, mut low_sup) = (0.0f64, 0.0f64);
    let mut best: Option<usize> = None;
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let denom = ys[i] + ys[j];
        if denom == 0.0 {
            if at_sums[k] > 0.0 {
                // no s can cover a positive value over a zero sum
                return Verdict::fails(sample(
                    vec![xs[i], xs[j]],
                    at_sums[k],
                    0.0,
                    Relation::Greater,
                    "f(a+b) <= s (f(a) + f(b))",
                ))
                .with_note("f(a) + f(b) = 0 < f(a+b)");
            }
            continue;
        }
        let r = at_sums[k] / denom;
        if r > sup {
            sup = r;
            best = Some(k);
        }
        if xs[j] <= low_edge {
            low_sup = low_sup.max(r);
        }
    }
    let estimate = if subadditive { 1.0 } else { sup.max(1.0) };
    let verdict = match best {
        Some(k) if rule.fires(low_sup, sup) => {
            let (i, j) = pairs[k];
            let denom = ys[i] + ys[j];
            Verdict::fails(sample(
                vec![xs[i], xs[j]],
                at_sums[k],
                rule.threshold * denom,
                Relation::Greater,
                &format!("f(a+b) <= {:e} (f(a) + f(b))", rule.threshold),
            ))
            .with_constant("witness_ratio", Constant::Real(sup))
            .with_constant("low_range_sup", Constant::Real(low_sup))
            .with_note("ratio diverges across the top two octaves")
        }
        _ => Verdict::inconclusive("supremum estimated on the grid; finiteness is not provable from samples"),
    };
    verdict.with_constant("s_star_estimate", Constant::Real(estimate))
}

fn limit_from_tail(geo_vals: &[f64]) -> Option<f64> {
    let tail = &geo_vals[geo_vals.len().saturating_sub(LIMIT_WINDOW)..];
    let last = *tail.last()?;
    let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    (hi - lo <= LIMIT_TOL * last.abs().max(1.0)).then_some(last)
}

/// Value `a` such that `f = a` on `(0, b]` at the samples `b 2^-k`,
/// `k = 0..=GEOMETRIC_DEPTH`, within relative tolerance; `None` otherwise.
pub fn detect_plateau(f: &RealFn, b: f64) -> Result<Option<f64>, ClassifyError> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(ClassifyError::InvalidGrid(format!("plateau endpoint must be positive, got {b}")));
    }
    let vals = (0..=GEOMETRIC_DEPTH)
        .map(|k| f.eval(b * 0.5f64.powi(k as i32)))
        .collect::<Result<Vec<_>, _>>()?;
    let a = *vals.last().expect("nonempty");
    Ok((a > 0.0 && vals.iter().all(|&v| close(v, a))).then_some(a))
}

/// Recomputes a sample witness from its arguments and reports whether the
/// refuted inequality is still violated.
pub fn reverify_sample(f: &RealFn, check: FnCheck, witness: &Witness) -> bool {
    let Witness::Sample { args, relation, .. } = witness else {
        return false;
    };
    let ev = |x: f64| f.eval(x).ok();
    let sides = match (check, args.as_slice()) {
        (FnCheck::Amenable, &[x]) => ev(x).map(|y| (y, 0.0)),
        (FnCheck::Increasing, &[x, y]) if x < y => ev(x).zip(ev(y)),
        (FnCheck::Subadditive, &[a, b]) => ev(a + b).zip(ev(a).zip(ev(b)).map(|(u, v)| u + v)),
        (FnCheck::QuasiSubadditive { s }, &[a, b]) => ev(a + b).zip(ev(a).zip(ev(b)).map(|(u, v)| s * (u + v))),
        _ => None,
    };
    match sides {
        Some((lhs, rhs)) => {
            // amenability witnesses are either f(0) != 0 or f(x) = 0 at x > 0
            if check == FnCheck::Amenable {
                return if args[0] == 0.0 { lhs != 0.0 } else { lhs == 0.0 };
            }
            relation.holds(&lhs, &rhs)
        }
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::parse_fn;
    use crate::model::Status;

    fn profile(src: &str, x_max: f64, n: usize) -> FnProfile {
        classify_fn(&parse_fn(src).unwrap(), SampleGrid::new(x_max, n, 1).unwrap()).unwrap()
    }

    #[test]
    fn square() {
        let p = profile("x^2", 10.0, 2000);
        assert!(p.amenable.is_holds());
        assert!(p.increasing.is_holds());
        assert!(p.subadditive.is_fails());
        let s = p.s_star_estimate();
        assert!((s - 2.0).abs() <= 0.02, "{s}");
        assert_eq!(p.quasi_subadditive.status, Status::Inconclusive);
        let f = parse_fn("x^2").unwrap();
        assert!(reverify_sample(&f, FnCheck::Subadditive, p.subadditive.witness.as_ref().unwrap()));
    }

    #[test]
    fn sqrt_is_subadditive() {
        let p = profile("sqrt(x)", 10.0, 2000);
        assert!(p.subadditive.is_holds());
        assert!(p.subadditive.constant("max_defect").unwrap().as_f64() <= 0.0 + 1e-12);
        assert_eq!(p.s_star_estimate(), 1.0);
        assert!(p.limit_at_zero.unwrap() < 1e-4);
    }

    #[test]
    fn zero_is_not_amenable() {
        let p = profile("0", 5.0, 100);
        match p.amenable.witness {
            Some(Witness::Sample { ref args, .. }) => assert_eq!(args, &vec![1.0]),
            ref w => panic!("{w:?}"),
        }
        assert!(reverify_sample(&parse_fn("0").unwrap(), FnCheck::Amenable, p.amenable.witness.as_ref().unwrap()));
        let p = profile("x+1", 5.0, 100);
        assert!(p.amenable.is_fails());
    }

    #[test]
    fn exponential_diverges() {
        let f = parse_fn("exp(x)-1").unwrap();
        let p = classify_fn(&f, SampleGrid::new(20.0, 2000, 1).unwrap()).unwrap();
        assert!(p.quasi_subadditive.is_fails());
        assert!(p.quasi_subadditive.constant("witness_ratio").unwrap().as_f64() > 1e3);
        let w = p.quasi_subadditive.witness.as_ref().unwrap();
        assert!(reverify_sample(&f, FnCheck::QuasiSubadditive { s: 1e6 }, w));
    }

    #[test]
    fn bounded_ratio_does_not_diverge() {
        let p = profile("x^3", 20.0, 1000);
        assert_eq!(p.quasi_subadditive.status, Status::Inconclusive);
        assert!((p.s_star_estimate() - 4.0).abs() < 0.05);
    }

    #[test]
    fn decreasing_detected() {
        let p = profile("piece(x<=1 ? x : 1/x)", 4.0, 200);
        assert!(p.increasing.is_fails());
        let f = parse_fn("piece(x<=1 ? x : 1/x)").unwrap();
        assert!(reverify_sample(&f, FnCheck::Increasing, p.increasing.witness.as_ref().unwrap()));
    }

    #[test]
    fn plateau_and_limit() {
        let f = parse_fn("piece(x<=0 ? 0 : ceil(x))").unwrap();
        assert_eq!(detect_plateau(&f, 1.0).unwrap(), Some(1.0));
        assert_eq!(detect_plateau(&f, 1.5).unwrap(), None);
        let opts = ClassifyOptions { plateau_b: Some(1.0), ..Default::default() };
        let p = classify_fn_with(&f, SampleGrid::new(10.0, 500, 1).unwrap(), &opts).unwrap();
        assert_eq!(p.plateau, Some(Plateau { a: 1.0, b: 1.0 }));
        assert_eq!(p.limit_at_zero, Some(1.0));
    }

    #[test]
    fn sup_is_consistent_and_deterministic() {
        let f = parse_fn("x/(1+x)+x^2").unwrap();
        let grid = SampleGrid::new(8.0, 400, 3).unwrap();
        let seq = ClassifyOptions { exec: Exec::Sequential, ..Default::default() };
        let a = classify_fn_with(&f, grid, &seq).unwrap();
        let b = classify_fn(&f, grid).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let s = a.s_star_estimate();
        let xs = grid.points();
        for &(i, j) in &sample_pairs(&grid, &xs) {
            let (u, v) = (xs[i], xs[j]);
            let lhs = f.eval(u + v).unwrap();
            let rhs = f.eval(u).unwrap() + f.eval(v).unwrap();
            assert!(lhs <= s * rhs + 1e-12 * lhs.max(1.0));
        }
    }

    #[test]
    fn eval_errors_propagate() {
        let err = classify_fn(&parse_fn("1/x").unwrap(), SampleGrid::default()).unwrap_err();
        assert_eq!(err, ClassifyError::Eval(EvalError::NonFinite { x: 0.0 }));
        assert!(SampleGrid::new(0.0, 10, 1).is_err());
        assert!(SampleGrid::new(1.0, 1, 1).is_err());
    }
}
