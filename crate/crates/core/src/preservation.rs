//! Pushforwards `f∘d`, exact preservation checks on concrete spaces, class
//! membership ladders for the function classes, and triplet-based
//! counterexample search.
//!
//! Membership is three-valued. `Member` needs a sufficient condition whose
//! premises held on the grid; `NonMemberEvidence` always carries a witness
//! that [`reverify`] can replay.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::axioms::{check_identity, check_kind, check_ultra, minimal_theta};
use crate::functions::{
    classify_fn_with, reverify_sample, ClassifyError, ClassifyOptions, Divergence, EvalError, FnCheck, FnProfile,
    RealFn, SampleGrid, REL_TOL,
};
use crate::model::rational::{self, Rational};
use crate::model::{random_space, ClassTag, Constant, DistanceTable, Verdict, Witness};
use crate::par::Exec;
use crate::triplets::{
    realize_in_plane, sample_triplets, triplet_constant, PlanarPoint, Strategy, Triplet, TripletError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreservationError {
    #[error("evaluating f at entry ({i}, {j}): {source}")]
    EntryEval { i: usize, j: usize, source: EvalError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("f(0) = {0}, so f∘d has a nonzero diagonal")]
    NonzeroAtZero(f64),
    #[error("source space is not a {kind}")]
    SourceClassViolated { kind: ClassTag, verdict: Box<Verdict> },
    #[error("{0} is not a space kind")]
    UnsupportedTarget(ClassTag),
    #[error("{0} is not a function class")]
    UnsupportedClass(ClassTag),
    #[error("invalid budget: {0}")]
    InvalidBudget(String),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Triplet(#[from] TripletError),
}

type Result<T> = std::result::Result<T, PreservationError>;

/// Entrywise `f∘d`. Identity of indiscernibles is not implied; re-check it.
pub fn pushforward(f: &RealFn, d: &DistanceTable) -> Result<DistanceTable> {
    let f0 = f.eval(0.0)?;
    if f0 != 0.0 {
        return Err(PreservationError::NonzeroAtZero(f0));
    }
    let entries = d.map_pairs(|i, j, q| {
        if i == j {
            Ok(Rational::zero())
        } else {
            f.eval_rational(q).map_err(|source| PreservationError::EntryEval { i, j, source })
        }
    })?;
    Ok(DistanceTable::new(d.points().to_vec(), entries).expect("f∘d is symmetric, nonnegative, zero on the diagonal"))
}

/// What the source space must satisfy before preservation into `target` is asked.
fn source_verdict(d: &DistanceTable, target: ClassTag) -> Verdict {
    match target {
        ClassTag::Metric | ClassTag::Ultrametric => check_kind(d, target),
        // every space with identity is a weak ultrametric / b-metric / extended b-metric for some constant
        _ => check_identity(d),
    }
}

/// Pushes `d` forward and runs the exact verifier of `target` on the image.
/// For extended b-metrics the image gets its own minimal θ̂, reported as `theta_hat_max`.
pub fn preserve_check(f: &RealFn, d: &DistanceTable, target: ClassTag) -> Result<Verdict> {
    if !target.is_space_kind() {
        return Err(PreservationError::UnsupportedTarget(target));
    }
    let source = source_verdict(d, target);
    if !source.is_holds() {
        return Err(PreservationError::SourceClassViolated { kind: target, verdict: Box::new(source) });
    }
    let image = pushforward(f, d)?;
    let mut v = check_kind(&image, target);
    if let Some(theta) = v.constants.remove("theta_max") {
        v.constants.insert("theta_hat_max".into(), theta);
    }
    Ok(v)
}

/// Sampling budget for membership and search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Budget {
    pub triplet_samples: usize,
    pub grid: SampleGrid,
    pub seed: u64,
    pub divergence: Divergence,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            triplet_samples: 100_000,
            grid: SampleGrid::default(),
            seed: 1,
            divergence: Divergence::default(),
            exec: Exec::default(),
        }
    }
}

impl Budget {
    /// Triplet sides range over `(0, 2 x_max]`, matching the sums seen by the classifier.
    pub fn range(&self) -> f64 {
        2.0 * self.grid.x_max
    }

    fn classify_options(&self) -> ClassifyOptions {
        ClassifyOptions { exec: self.exec, divergence: self.divergence, plateau_b: None }
    }
}

/// The deterministic triplet sample behind the searches: a coarse grid,
/// log-uniform random triplets, and degenerate `a = b + c` triplets.
pub fn triplet_sample(budget: &Budget) -> Result<Vec<Triplet>> {
    if budget.triplet_samples == 0 {
        return Err(PreservationError::InvalidBudget("triplet_samples must be positive".into()));
    }
    let range = budget.range();
    let mut out: Vec<Triplet> = sample_triplets(Strategy::Grid { step: range / 16.0, max: range })?
        .take(budget.triplet_samples)
        .collect();
    let rest = budget.triplet_samples - out.len();
    let boundary = rest / 4;
    if rest - boundary > 0 {
        out.extend(sample_triplets(Strategy::Random { seed: budget.seed, count: rest - boundary, max: range })?);
    }
    if boundary > 0 {
        out.extend(sample_triplets(Strategy::Boundary { seed: budget.seed ^ 0xb0_da, count: boundary, max: range })?);
    }
    Ok(out)
}

/// How the two other sides enter the inequality refuted by a triplet witness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Combine {
    /// `f(a) <= bound (f(b) + f(c))`
    Sum,
    /// `f(a) <= bound max(f(b), f(c))`
    Max,
}

/// A triple of distances whose image violates the class inequality, with a
/// concrete 3-point space realizing it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TripletWitness {
    pub triplet: Triplet,
    pub image: Triplet,
    /// `None` when the image constant is infinite.
    pub image_constant: Option<f64>,
    /// Index (0, 1, 2) of the side on the left of the inequality.
    pub position: usize,
    pub combine: Combine,
    pub bound: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub inequality: String,
    /// Planar points `x, y, z` when the triplet is a triangle triplet.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planar: Option<[PlanarPoint; 3]>,
    pub space: DistanceTable,
    pub image_space: DistanceTable,
}

fn side(t: &Triplet, k: usize) -> f64 {
    [t.a, t.b, t.c][k]
}

const SIDE_NAMES: [&str; 3] = ["f(d(x,y))", "f(d(x,z))", "f(d(z,y))"];

fn others(k: usize) -> [usize; 2] {
    match k {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

fn combined(image: &Triplet, k: usize, combine: Combine) -> f64 {
    let [p, q] = others(k).map(|i| side(image, i));
    match combine {
        Combine::Sum => p + q,
        Combine::Max => p.max(q),
    }
}

/// Position with the largest ratio `side / combined(others)`.
fn worst_position(image: &Triplet, combine: Combine) -> usize {
    let ratio = |k: usize| {
        let den = combined(image, k, combine);
        if den == 0.0 {
            if side(image, k) > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            side(image, k) / den
        }
    };
    (0..3).fold(0, |best, k| if ratio(k) > ratio(best) { k } else { best })
}

fn exact(x: f64) -> Rational {
    rational::from_f64(x).expect("sampled sides are finite")
}

fn build_witness(f: &RealFn, t: &Triplet, image: &Triplet, combine: Combine, bound: f64) -> Result<TripletWitness> {
    let k = worst_position(image, combine);
    let lhs = side(image, k);
    let rhs = bound * combined(image, k, combine);
    let [p, q] = others(k);
    let op = match combine {
        Combine::Sum => format!("{} + {}", SIDE_NAMES[p], SIDE_NAMES[q]),
        Combine::Max => format!("max({}, {})", SIDE_NAMES[p], SIDE_NAMES[q]),
    };
    let space = DistanceTable::three_point(exact(t.a), exact(t.b), exact(t.c)).expect("positive sides");
    let image_space = pushforward(f, &space)?;
    let constant = triplet_constant(image).to_f64();
    Ok(TripletWitness {
        triplet: t.clone(),
        image: image.clone(),
        image_constant: constant.is_finite().then_some(constant),
        position: k,
        combine,
        bound,
        lhs,
        rhs,
        inequality: format!("{} <= {bound} ({op})", SIDE_NAMES[k]),
        planar: realize_in_plane(t).ok(),
        space,
        image_space,
    })
}

/// Replays a triplet witness in exact arithmetic where `f` allows it.
pub fn reverify_triplet(f: &RealFn, w: &TripletWitness) -> bool {
    let sides = [w.triplet.a, w.triplet.b, w.triplet.c];
    let Ok(img) = sides.iter().map(|&x| f.eval_rational(&exact(x))).collect::<std::result::Result<Vec<_>, _>>() else {
        return false;
    };
    let [p, q] = others(w.position);
    let bound = exact(w.bound);
    let rhs = match w.combine {
        Combine::Sum => bound * (&img[p] + &img[q]),
        Combine::Max => bound * img[p].clone().max(img[q].clone()),
    };
    img[w.position] > rhs
}

/// Image of every sampled triplet and its triplet constant.
struct Scan {
    triplets: Vec<Triplet>,
    images: Vec<Triplet>,
    constants: Vec<f64>,
}

impl Scan {
    fn run(f: &RealFn, triplets: Vec<Triplet>, exec: Exec) -> Result<Scan> {
        let images = exec
            .map_slice(&triplets, |t| -> std::result::Result<Triplet, EvalError> {
                Ok(Triplet::new(f.eval(t.a)?, f.eval(t.b)?, f.eval(t.c)?))
            })
            .into_iter()
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let constants = images.iter().map(|im| triplet_constant(im).to_f64()).collect();
        Ok(Scan { triplets, images, constants })
    }

    /// Index with the largest constant among those passing `keep`; ties go to
    /// the lexicographically smallest triplet.
    fn worst(&self, keep: impl Fn(usize) -> bool) -> Option<usize> {
        (0..self.triplets.len()).filter(|&i| keep(i)).fold(None, |best, i| match best {
            None => Some(i),
            Some(b) => match self.constants[i]
                .total_cmp(&self.constants[b])
                .then(self.triplets[b].lex_cmp(&self.triplets[i]))
            {
                Ordering::Greater => Some(i),
                _ => Some(b),
            },
        })
    }

    fn sup(&self, keep: impl Fn(usize) -> bool) -> f64 {
        self.worst(keep).map_or(1.0, |i| self.constants[i])
    }
}

/// Outcome of the triplet characterization step.
enum TripletOutcome {
    Bounded(f64),
    Diverges(TripletWitness, f64),
    Large(f64),
}

fn triplet_characterization(f: &RealFn, budget: &Budget) -> Result<TripletOutcome> {
    let scan = Scan::run(f, triplet_sample(budget)?, budget.exec)?;
    let low_edge = Divergence::low_range(budget.range());
    let sup = scan.sup(|_| true);
    let low = scan.sup(|i| scan.triplets[i].max_side() <= low_edge);
    let rule = budget.divergence;
    if rule.fires(low, sup) {
        let i = scan.worst(|_| true).expect("nonempty sample");
        let w = build_witness(f, &scan.triplets[i], &scan.images[i], Combine::Sum, rule.threshold)?;
        return Ok(TripletOutcome::Diverges(w, sup));
    }
    Ok(if sup <= rule.threshold { TripletOutcome::Bounded(sup) } else { TripletOutcome::Large(sup) })
}

/// Log-spaced distances used by the pair probes (ultrametric and b-metric shapes).
fn probe_points(budget: &Budget) -> Vec<f64> {
    const N: usize = 192;
    let range = budget.range();
    let mut xs: Vec<f64> = (0..N)
        .map(|i| {
            let x = range * 10f64.powf(-4.0 * (N - 1 - i) as f64 / (N - 1) as f64);
            (x / crate::triplets::QUANTUM).round().max(1.0) * crate::triplets::QUANTUM
        })
        .collect();
    xs.dedup();
    xs
}

/// `(u, v, v)` triples: isosceles ultrametric shapes (`u < v`) or b-metric shapes (`u > v`).
fn pair_probe(f: &RealFn, budget: &Budget, wide: bool, combine: Combine) -> Result<Option<TripletWitness>> {
    let xs = probe_points(budget);
    let triplets: Vec<Triplet> = xs
        .iter()
        .flat_map(|&u| xs.iter().map(move |&v| (u, v)))
        .filter(|&(u, v)| if wide { u > v } else { u < v })
        .map(|(u, v)| Triplet::new(u, v, v))
        .collect();
    let scan = Scan::run(f, triplets, budget.exec)?;
    let violated = |i: usize| {
        let im = &scan.images[i];
        im.a > combined(im, 0, combine) * (1.0 + REL_TOL)
    };
    let best = (0..scan.triplets.len()).filter(|&i| violated(i)).fold(None::<(usize, f64)>, |best, i| {
        let im = &scan.images[i];
        let den = combined(im, 0, combine);
        let r = if den == 0.0 { f64::INFINITY } else { im.a / den };
        match best {
            Some((_, br)) if br >= r => best,
            _ => Some((i, r)),
        }
    });
    best.map(|(i, _)| build_witness(f, &scan.triplets[i], &scan.images[i], combine, 1.0)).transpose()
}

/// Searches sampled triplets for a violation of the class inequality.
///
/// With `bound`, any image triplet constant above it is a hit; otherwise the
/// divergence rule must fire. `M` uses bound 1 (image must stay a triangle),
/// `BM` probes `(u, v, v)` with `u > 2v` allowed, `U` probes isosceles
/// ultrametric shapes.
pub fn counterexample_search(
    f: &RealFn,
    class: ClassTag,
    budget: &Budget,
    bound: Option<f64>,
) -> Result<Option<TripletWitness>> {
    match class {
        c if c.is_space_kind() => Err(PreservationError::UnsupportedClass(c)),
        ClassTag::U => pair_probe(f, budget, false, Combine::Max),
        ClassTag::BM => pair_probe(f, budget, true, Combine::Sum),
        _ => {
            let bound = bound.or((class == ClassTag::M).then_some(1.0));
            match bound {
                Some(s) => {
                    if !(s >= 1.0) {
                        return Err(PreservationError::InvalidBudget(format!("bound must be >= 1, got {s}")));
                    }
                    let scan = Scan::run(f, triplet_sample(budget)?, budget.exec)?;
                    let limit = s * (1.0 + REL_TOL);
                    scan.worst(|i| scan.constants[i] > limit)
                        .map(|i| build_witness(f, &scan.triplets[i], &scan.images[i], Combine::Sum, s))
                        .transpose()
                }
                None => Ok(match triplet_characterization(f, budget)? {
                    TripletOutcome::Diverges(w, _) => Some(w),
                    _ => None,
                }),
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MemberStatus {
    Member,
    NonMemberEvidence,
    Inconclusive,
}

impl MemberStatus {
    /// 0 member, 1 non-member evidence, 2 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            MemberStatus::Member => 0,
            MemberStatus::NonMemberEvidence => 1,
            MemberStatus::Inconclusive => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MemberWitness {
    /// A refuted grid property of `f`.
    Sample { property: String, sample: Witness },
    Triplet(Box<TripletWitness>),
    /// A space of the source kind whose image fails the exact verifier.
    Space { space: DistanceTable, image: DistanceTable, verdict: Verdict },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipReport {
    pub function: String,
    pub class: ClassTag,
    pub status: MemberStatus,
    pub basis: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<MemberWitness>,
    pub constants: BTreeMap<String, Constant>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub budget: Budget,
}

impl MembershipReport {
    fn new(f: &RealFn, class: ClassTag, budget: &Budget) -> Self {
        MembershipReport {
            function: f.source().to_string(),
            class,
            status: MemberStatus::Inconclusive,
            basis: String::new(),
            identity: None,
            witness: None,
            constants: BTreeMap::new(),
            notes: Vec::new(),
            budget: *budget,
        }
    }

    fn conclude(mut self, status: MemberStatus, basis: &str) -> Self {
        self.status = status;
        self.basis = basis.to_string();
        self
    }

    fn with_witness(mut self, w: MemberWitness) -> Self {
        self.witness = Some(w);
        self
    }

    fn note(mut self, text: &str) -> Self {
        self.notes.push(text.to_string());
        self
    }

    fn constant(mut self, name: &str, value: Constant) -> Self {
        self.constants.insert(name.to_string(), value);
        self
    }

    /// Member constant `s` for the s-triplet families, when one was established.
    pub fn s_constant(&self) -> Option<f64> {
        self.constants
            .get("s_star_triplet")
            .or_else(|| self.constants.get("s_star_estimate"))
            .map(Constant::as_f64)
    }
}

fn sample_witness(property: &str, v: &Verdict) -> MemberWitness {
    MemberWitness::Sample {
        property: property.to_string(),
        sample: v.witness.clone().expect("failing verdicts carry a witness"),
    }
}

/// Decision ladder for membership of `f` in a function class.
pub fn membership(f: &RealFn, class: ClassTag, budget: &Budget) -> Result<MembershipReport> {
    if class.is_space_kind() {
        return Err(PreservationError::UnsupportedClass(class));
    }
    let profile = classify_fn_with(f, budget.grid, &budget.classify_options())?;
    let report = MembershipReport::new(f, class, budget)
        .constant("s_star_estimate", Constant::Real(profile.s_star_estimate()));
    if profile.amenable.is_fails() {
        return Ok(report
            .conclude(MemberStatus::NonMemberEvidence, "amenability")
            .with_witness(sample_witness("amenable", &profile.amenable)));
    }
    match class {
        ClassTag::U => ladder_u(f, &profile, budget, report),
        ClassTag::EB => ladder_eb(f, &profile, budget, report),
        ClassTag::DU | ClassTag::B | ClassTag::MB => ladder_mb(f, &profile, budget, report),
        _ => ladder_m(f, &profile, budget, report),
    }
}

/// Quasi-subadditivity is necessary for EB, and for DU = B = MB and BM ⊆ M ⊆ B by inclusion.
fn quasi_screen(profile: &FnProfile, report: MembershipReport) -> std::result::Result<MembershipReport, MembershipReport> {
    let q = &profile.quasi_subadditive;
    if !q.is_fails() {
        return Ok(report);
    }
    let mut r = report
        .conclude(MemberStatus::NonMemberEvidence, "thEB-necessary-failed")
        .with_witness(sample_witness("quasi_subadditive", q));
    if let Some(ratio) = q.constant("witness_ratio") {
        r = r.constant("witness_ratio", ratio.clone());
    }
    Err(r)
}

fn ladder_u(f: &RealFn, profile: &FnProfile, budget: &Budget, report: MembershipReport) -> Result<MembershipReport> {
    let report = report.note("quasi-subadditivity is not screened: it is not necessary for U (exp(x)-1 preserves ultrametrics)");
    if let Some(w) = pair_probe(f, budget, false, Combine::Max)? {
        return Ok(report
            .conclude(MemberStatus::NonMemberEvidence, "ultrametric-probe")
            .with_witness(MemberWitness::Triplet(Box::new(w))));
    }
    if let Some(Witness::Sample { args, .. }) = &profile.increasing.witness {
        // x < y with f(x) > f(y): the ultrametric d(p,q) = x, d(p,r) = d(q,r) = y maps to a non-ultrametric
        let (x, y) = (exact(args[0]), exact(args[1]));
        let space = DistanceTable::three_point(x, y.clone(), y).expect("positive sides");
        let image = pushforward(f, &space)?;
        let verdict = check_ultra(&image);
        if verdict.is_fails() {
            return Ok(report
                .conclude(MemberStatus::NonMemberEvidence, "ultrametric-probe")
                .with_witness(MemberWitness::Space { space, image, verdict }));
        }
    }
    for k in 0..16u64 {
        let (space, _) = random_space(ClassTag::Ultrametric, 5, budget.seed.wrapping_add(k)).expect("valid kind");
        let image = pushforward(f, &space)?;
        let verdict = check_kind(&image, ClassTag::Ultrametric);
        if verdict.is_fails() {
            return Ok(report
                .conclude(MemberStatus::NonMemberEvidence, "ultrametric-probe")
                .with_witness(MemberWitness::Space { space, image, verdict }));
        }
    }
    Ok(report
        .conclude(MemberStatus::Inconclusive, "screen-passed")
        .note("no sufficient condition for U is implemented; all ultrametric probes preserved"))
}

fn ladder_eb(f: &RealFn, profile: &FnProfile, budget: &Budget, report: MembershipReport) -> Result<MembershipReport> {
    let report = match quasi_screen(profile, report) {
        Ok(r) => r,
        Err(r) => return Ok(r),
    };
    // θ̂ = minimal θ of the image, on a few extended b-metric spaces
    let mut theta_hat = Rational::from_integer(1.into());
    for k in 0..8u64 {
        let (space, _) = random_space(ClassTag::ExtendedBMetric, 5, budget.seed.wrapping_add(k)).expect("valid kind");
        let image = pushforward(f, &space)?;
        let identity = check_identity(&image);
        if identity.is_fails() {
            return Ok(report
                .conclude(MemberStatus::NonMemberEvidence, "amenability")
                .with_witness(MemberWitness::Space { space, image, verdict: identity }));
        }
        theta_hat = theta_hat.max(minimal_theta(&image).expect("identity holds").max_entry());
    }
    let report = report.constant("theta_hat_max", Constant::Exact(theta_hat));
    if profile.increasing.is_holds() {
        return Ok(report.conclude(MemberStatus::Member, "thG1-sufficient"));
    }
    Ok(match triplet_characterization(f, budget)? {
        TripletOutcome::Bounded(s) => report
            .constant("s_star_triplet", Constant::Real(s))
            .conclude(MemberStatus::Member, "th6-triplet-bounded"),
        TripletOutcome::Diverges(_, s) | TripletOutcome::Large(s) => report
            .constant("s_star_triplet", Constant::Real(s))
            .conclude(MemberStatus::Inconclusive, "th6-triplet-divergent")
            .note("a point-dependent θ may absorb an unbounded triplet constant; divergence alone is not evidence against EB"),
    })
}

fn ladder_mb(f: &RealFn, profile: &FnProfile, budget: &Budget, mut report: MembershipReport) -> Result<MembershipReport> {
    report.identity = Some("DU = B = MB".into());
    let report = match quasi_screen(profile, report) {
        Ok(r) => r,
        Err(r) => return Ok(r),
    };
    Ok(match triplet_characterization(f, budget)? {
        TripletOutcome::Bounded(s) => report
            .constant("s_star_triplet", Constant::Real(s))
            .conclude(MemberStatus::Member, "th5-triplet-bounded"),
        TripletOutcome::Diverges(w, s) => report
            .constant("s_star_triplet", Constant::Real(s))
            .conclude(MemberStatus::NonMemberEvidence, "th5-triplet-divergent")
            .with_witness(MemberWitness::Triplet(Box::new(w))),
        TripletOutcome::Large(s) => report
            .constant("s_star_triplet", Constant::Real(s))
            .conclude(MemberStatus::Inconclusive, "th5-triplet-large")
            .note("triplet constant exceeds the divergence threshold without diverging"),
    })
}

fn ladder_m(f: &RealFn, profile: &FnProfile, budget: &Budget, mut report: MembershipReport) -> Result<MembershipReport> {
    report.identity = Some("BM ⊆ M ⊆ B".into());
    let report = match quasi_screen(profile, report) {
        Ok(r) => r,
        Err(r) => return Ok(r),
    };
    let (basis, hit) = match report.class {
        ClassTag::BM => ("bmetric-probe", pair_probe(f, budget, true, Combine::Sum)?),
        _ => ("triangle-triplet-probe", counterexample_search(f, ClassTag::M, budget, Some(1.0))?),
    };
    Ok(match hit {
        Some(w) => report
            .conclude(MemberStatus::NonMemberEvidence, basis)
            .with_witness(MemberWitness::Triplet(Box::new(w))),
        None => report
            .conclude(MemberStatus::Inconclusive, "screen-passed")
            .note("only necessary conditions are implemented for this class"),
    })
}

/// Replays the witness of a report; `true` when there is none to replay.
pub fn reverify(f: &RealFn, report: &MembershipReport) -> bool {
    match &report.witness {
        None => true,
        Some(MemberWitness::Sample { property, sample }) => {
            let check = match property.as_str() {
                "amenable" => FnCheck::Amenable,
                "increasing" => FnCheck::Increasing,
                "subadditive" => FnCheck::Subadditive,
                _ => FnCheck::QuasiSubadditive { s: report.budget.divergence.threshold },
            };
            reverify_sample(f, check, sample)
        }
        Some(MemberWitness::Triplet(w)) => reverify_triplet(f, w),
        Some(MemberWitness::Space { space, verdict, .. }) => {
            let Ok(image) = pushforward(f, space) else { return false };
            let again = if check_identity(&image).is_fails() {
                check_identity(&image)
            } else {
                check_ultra(&image)
            };
            again.is_fails() && again.witness == verdict.witness
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::parse_fn;
    use crate::model::rational::int;
    use crate::model::Status;

    fn f(src: &str) -> RealFn {
        parse_fn(src).unwrap()
    }

    fn small_budget() -> Budget {
        Budget {
            triplet_samples: 20_000,
            grid: SampleGrid::new(20.0, 2000, 1).unwrap(),
            ..Budget::default()
        }
    }

    #[test]
    fn pushforward_examples() {
        let (d, _) = random_space(ClassTag::Metric, 5, 3).unwrap();
        assert_eq!(pushforward(&f("x"), &d).unwrap(), d);
        let t = DistanceTable::three_point(int(3), int(4), int(5)).unwrap();
        let img = pushforward(&f("min(x,1)"), &t).unwrap();
        assert!((0..3).all(|i| (0..3).all(|j| *img.get(i, j) == if i == j { int(0) } else { int(1) })));
        let zero = pushforward(&f("0"), &t).unwrap();
        assert!(check_identity(&zero).is_fails());
        assert_eq!(pushforward(&f("x+1"), &t), Err(PreservationError::NonzeroAtZero(1.0)));
    }

    #[test]
    fn preserve_examples() {
        let (d, _) = random_space(ClassTag::Metric, 6, 9).unwrap();
        assert!(preserve_check(&f("sqrt(x)"), &d, ClassTag::Metric).unwrap().is_holds());
        let t = DistanceTable::three_point(int(2), int(1), int(1)).unwrap();
        assert!(preserve_check(&f("x^2"), &t, ClassTag::Metric).unwrap().is_fails());
        let b = preserve_check(&f("x^2"), &t, ClassTag::BMetric).unwrap();
        assert_eq!(b.constant("s_min"), Some(&Constant::Exact(int(2))));
        let (u, _) = random_space(ClassTag::Ultrametric, 6, 2).unwrap();
        assert!(preserve_check(&f("x"), &u, ClassTag::Ultrametric).unwrap().is_holds());
        let eb = preserve_check(&f("x^2"), &t, ClassTag::ExtendedBMetric).unwrap();
        assert!(eb.constant("theta_hat_max").is_some());
        let bad = DistanceTable::three_point(int(5), int(2), int(2)).unwrap();
        assert!(matches!(
            preserve_check(&f("x"), &bad, ClassTag::Metric),
            Err(PreservationError::SourceClassViolated { .. })
        ));
        assert!(matches!(preserve_check(&f("x"), &t, ClassTag::EB), Err(PreservationError::UnsupportedTarget(_))));
    }

    #[test]
    fn eb_ladder() {
        let b = small_budget();
        let sq = membership(&f("x^2"), ClassTag::EB, &b).unwrap();
        assert_eq!((sq.status, sq.basis.as_str()), (MemberStatus::Member, "thG1-sufficient"));
        assert!((sq.s_constant().unwrap() - 2.0).abs() < 0.02);
        let ex = membership(&f("exp(x)-1"), ClassTag::EB, &b).unwrap();
        assert_eq!((ex.status, ex.basis.as_str()), (MemberStatus::NonMemberEvidence, "thEB-necessary-failed"));
        assert!(ex.constants["witness_ratio"].as_f64() > 1e3);
        assert!(reverify(&f("exp(x)-1"), &ex));
        let zero = membership(&f("0"), ClassTag::EB, &b).unwrap();
        assert_eq!((zero.status, zero.basis.as_str()), (MemberStatus::NonMemberEvidence, "amenability"));
        assert!(reverify(&f("0"), &zero));
    }

    #[test]
    fn mb_ladder() {
        let b = small_budget();
        let m = membership(&f("min(x,1)"), ClassTag::MB, &b).unwrap();
        assert_eq!(m.status, MemberStatus::Member);
        assert!(m.s_constant().unwrap() <= 2.0);
        let sq = membership(&f("x^2"), ClassTag::B, &b).unwrap();
        assert_eq!(sq.status, MemberStatus::Member);
        assert!((sq.s_constant().unwrap() - 2.0).abs() < 1e-9);
        assert!(membership(&f("x"), ClassTag::Metric, &b).is_err());
    }

    #[test]
    fn u_ladder() {
        let b = small_budget();
        let ex = membership(&f("exp(x)-1"), ClassTag::U, &b).unwrap();
        assert_eq!(ex.status, MemberStatus::Inconclusive);
        let bump = f("piece(x<=1 ? x : 1/x)");
        let r = membership(&bump, ClassTag::U, &b).unwrap();
        assert_eq!(r.status, MemberStatus::NonMemberEvidence);
        assert!(reverify(&bump, &r));
    }

    #[test]
    fn m_and_bm_probes() {
        let b = small_budget();
        let sq = membership(&f("x^2"), ClassTag::M, &b).unwrap();
        assert_eq!(sq.status, MemberStatus::NonMemberEvidence);
        assert!(reverify(&f("x^2"), &sq));
        let rt = membership(&f("sqrt(x)"), ClassTag::M, &b).unwrap();
        assert_eq!(rt.status, MemberStatus::Inconclusive);
        let id = membership(&f("x"), ClassTag::BM, &b).unwrap();
        assert_eq!(id.status, MemberStatus::NonMemberEvidence);
        assert!(reverify(&f("x"), &id));
        let flat = f("piece(x<=0 ? 0 : piece(x<1 ? 3/2 : 2))");
        assert_eq!(membership(&flat, ClassTag::BM, &b).unwrap().status, MemberStatus::Inconclusive);
    }

    #[test]
    fn search_examples() {
        let b = small_budget();
        let w = counterexample_search(&f("exp(x)-1"), ClassTag::MB, &b, None).unwrap().unwrap();
        assert!(w.image_constant.map_or(true, |c| c > 1e3));
        assert!(reverify_triplet(&f("exp(x)-1"), &w));
        assert!(w.planar.is_some());
        assert!(counterexample_search(&f("x"), ClassTag::MB, &b, None).unwrap().is_none());
        assert!(counterexample_search(&f("x"), ClassTag::M, &b, None).unwrap().is_none());
        let step = f("piece(x<=0 ? 0 : piece(x<=1 ? 1 : 4))");
        let w = counterexample_search(&step, ClassTag::MB, &b, Some(1.5)).unwrap().unwrap();
        assert!(reverify_triplet(&step, &w));
        assert_eq!(w.lhs, 4.0);
        let again = counterexample_search(&step, ClassTag::MB, &b, Some(1.5)).unwrap().unwrap();
        assert_eq!(w, again);
        let seq = Budget { exec: Exec::Sequential, ..b };
        assert_eq!(counterexample_search(&step, ClassTag::MB, &seq, Some(1.5)).unwrap().unwrap(), w);
    }

    #[test]
    fn verdict_json_is_stable() {
        let t = DistanceTable::three_point(int(2), int(1), int(1)).unwrap();
        let v = preserve_check(&f("x^2"), &t, ClassTag::Metric).unwrap();
        assert_eq!(v.status, Status::Fails);
        let json = serde_json::to_string(&v).unwrap();
        assert!(json.contains("\"lhs\":\"4\""), "{json}");
    }
}
