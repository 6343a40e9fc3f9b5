//! Exact verification of the metric-type axiom systems on finite spaces and
//! computation of their optimal constants.
//!
//! Triples are ordered `(x, y, z)` and enumerated lexicographically; the
//! reported witness is always the lexicographically smallest violating
//! triple, whichever execution mode is used.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::model::rational::{self, Rational};
use crate::model::{ClassTag, Constant, DistanceTable, Relation, ThetaTable, Verdict, Witness};
use crate::par::Exec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AxiomError {
    #[error("identity of indiscernibles fails: points {i} and {j} are at distance 0")]
    IdentityFails { i: usize, j: usize },
    #[error("distance and theta tables are over different point sets")]
    PointSetMismatch,
}

/// One inequality family checked over all ordered triples.
#[derive(Clone, Debug)]
pub enum Axiom<'a> {
    /// `d(x,y) = 0` iff `x = y`.
    Identity,
    /// `d(x,y) <= d(x,z) + d(z,y)`.
    Triangle,
    /// `d(x,y) <= max(d(x,z), d(z,y))`.
    Ultra,
    /// `d(x,y) <= C * max(d(x,z), d(z,y))`.
    WeakUltra(Rational),
    /// `d(x,y) <= s * (d(x,z) + d(z,y))`.
    Relaxed(Rational),
    /// `d(x,y) <= theta(x,y) * (d(x,z) + d(z,y))`.
    Extended(&'a ThetaTable),
}

impl Axiom<'_> {
    /// Both sides of the inequality at `(x, y, z)`.
    fn sides(&self, d: &DistanceTable, x: usize, y: usize, z: usize) -> (Rational, Rational) {
        let lhs = d.get(x, y).clone();
        let (a, b) = (d.get(x, z), d.get(z, y));
        let rhs = match self {
            Axiom::Identity => unreachable!("identity is a pair check"),
            Axiom::Triangle => a + b,
            Axiom::Ultra => a.max(b).clone(),
            Axiom::WeakUltra(c) => c * a.max(b),
            Axiom::Relaxed(s) => s * (a + b),
            Axiom::Extended(theta) => theta.get(x, y) * (a + b),
        };
        (lhs, rhs)
    }

    fn render(&self) -> &'static str {
        match self {
            Axiom::Identity => "d(x,y) = 0 with x != y",
            Axiom::Triangle => "d(x,y) > d(x,z) + d(z,y)",
            Axiom::Ultra => "d(x,y) > max(d(x,z), d(z,y))",
            Axiom::WeakUltra(_) => "d(x,y) > C * max(d(x,z), d(z,y))",
            Axiom::Relaxed(_) => "d(x,y) > s * (d(x,z) + d(z,y))",
            Axiom::Extended(_) => "d(x,y) > theta(x,y) * (d(x,z) + d(z,y))",
        }
    }
}

#[inline]
fn triple(t: usize, n: usize) -> (usize, usize, usize) {
    (t / (n * n), (t / n) % n, t % n)
}

fn labels(d: &DistanceTable, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| d.label(i).to_string()).collect()
}

fn identity_witness(d: &DistanceTable, exec: Exec) -> Option<Witness> {
    let n = d.len();
    exec.find_first(0..n * n, |t| {
        let (i, j) = (t / n, t % n);
        (i < j && d.get(i, j).is_zero()).then(|| Witness::Points {
            indices: vec![i, j],
            labels: labels(d, &[i, j]),
            lhs: d.get(i, j).clone(),
            rhs: Rational::zero(),
            relation: Relation::Equal,
            inequality: format!("d({}, {}) = 0 with distinct points", d.label(i), d.label(j)),
        })
    })
}

/// Checks one axiom over every ordered triple (or every pair, for identity).
pub fn check_with(d: &DistanceTable, axiom: &Axiom<'_>, exec: Exec) -> Verdict {
    if let Axiom::Identity = axiom {
        return match identity_witness(d, exec) {
            Some(w) => Verdict::fails(w),
            None => Verdict::holds(),
        };
    }
    let n = d.len();
    let hit = exec.find_first(0..n * n * n, |t| {
        let (x, y, z) = triple(t, n);
        let (lhs, rhs) = axiom.sides(d, x, y, z);
        (lhs > rhs).then(|| Witness::Points {
            indices: vec![x, y, z],
            labels: labels(d, &[x, y, z]),
            inequality: format!(
                "{} [x={}, y={}, z={}]: {} > {}",
                axiom.render(),
                d.label(x),
                d.label(y),
                d.label(z),
                rational::format(&lhs),
                rational::format(&rhs)
            ),
            lhs,
            rhs,
            relation: Relation::Greater,
        })
    });
    match hit {
        Some(w) => Verdict::fails(w),
        None => Verdict::holds(),
    }
}

pub fn check(d: &DistanceTable, axiom: &Axiom<'_>) -> Verdict {
    check_with(d, axiom, Exec::default())
}

/// Recomputes a `Points` witness from the table and confirms it still violates `axiom`.
pub fn reverify(d: &DistanceTable, axiom: &Axiom<'_>, witness: &Witness) -> bool {
    let Witness::Points { indices, lhs, rhs, relation, .. } = witness else {
        return false;
    };
    if indices.iter().any(|&i| i >= d.len()) {
        return false;
    }
    let (l, r) = match (axiom, indices.as_slice()) {
        (Axiom::Identity, &[i, j]) if i != j => (d.get(i, j).clone(), Rational::zero()),
        (Axiom::Identity, _) => return false,
        (_, &[x, y, z]) => axiom.sides(d, x, y, z),
        _ => return false,
    };
    &l == lhs && &r == rhs && relation.holds(&l, &r)
}

pub fn check_identity(d: &DistanceTable) -> Verdict {
    check(d, &Axiom::Identity)
}

pub fn check_triangle(d: &DistanceTable) -> Verdict {
    check(d, &Axiom::Triangle)
}

pub fn check_ultra(d: &DistanceTable) -> Verdict {
    check(d, &Axiom::Ultra)
}

/// The s-triangle inequality with a fixed `s`, plus identity.
pub fn check_b_metric(d: &DistanceTable, s: &Rational) -> Verdict {
    let identity = check_identity(d);
    if identity.is_fails() {
        return identity;
    }
    check(d, &Axiom::Relaxed(s.clone()))
}

fn require_identity(d: &DistanceTable, exec: Exec) -> Result<(), AxiomError> {
    match identity_witness(d, exec) {
        Some(Witness::Points { indices, .. }) => Err(AxiomError::IdentityFails {
            i: indices[0],
            j: indices[1],
        }),
        _ => Ok(()),
    }
}

/// Largest `d(x,y) / denom(x,z,y)` over ordered triples with `x != y`, floored at 1.
fn max_ratio(
    d: &DistanceTable,
    exec: Exec,
    denom: impl Fn(&Rational, &Rational) -> Rational + Sync + Send,
) -> Result<Rational, AxiomError> {
    require_identity(d, exec)?;
    let n = d.len();
    let best = exec.max_by(
        0..n * n * n,
        |t| {
            let (x, y, z) = triple(t, n);
            (x != y).then(|| d.get(x, y) / denom(d.get(x, z), d.get(z, y)))
        },
        |a, b| a.cmp(b),
    );
    Ok(best.map_or_else(Rational::one, |r| r.max(Rational::one())))
}

/// Smallest `C` for which the weak-ultrametric inequality holds.
pub fn optimal_weak_ultra_constant_with(d: &DistanceTable, exec: Exec) -> Result<Rational, AxiomError> {
    max_ratio(d, exec, |a, b| a.max(b).clone())
}

pub fn optimal_weak_ultra_constant(d: &DistanceTable) -> Result<Rational, AxiomError> {
    optimal_weak_ultra_constant_with(d, Exec::default())
}

/// Smallest `s` for which the s-triangle inequality holds.
pub fn optimal_b_constant_with(d: &DistanceTable, exec: Exec) -> Result<Rational, AxiomError> {
    max_ratio(d, exec, |a, b| a + b)
}

pub fn optimal_b_constant(d: &DistanceTable) -> Result<Rational, AxiomError> {
    optimal_b_constant_with(d, Exec::default())
}

/// Entrywise-smallest relaxation table under which the table is an extended b-metric.
pub fn minimal_theta_with(d: &DistanceTable, exec: Exec) -> Result<ThetaTable, AxiomError> {
    require_identity(d, exec)?;
    let n = d.len();
    let cells = exec.map_range(0..n * n, |t| {
        let (x, y) = (t / n, t % n);
        if x >= y {
            return Rational::one();
        }
        (0..n)
            .map(|z| d.get(x, y) / (d.get(x, z) + d.get(z, y)))
            .max()
            .map_or_else(Rational::one, |r| r.max(Rational::one()))
    });
    let mut entries = vec![vec![Rational::one(); n]; n];
    for x in 0..n {
        for y in x + 1..n {
            entries[x][y] = cells[x * n + y].clone();
            entries[y][x] = cells[x * n + y].clone();
        }
    }
    Ok(ThetaTable::new(d.points().to_vec(), entries).expect("entries are >= 1 and symmetric"))
}

pub fn minimal_theta(d: &DistanceTable) -> Result<ThetaTable, AxiomError> {
    minimal_theta_with(d, Exec::default())
}

/// Identity plus the theta-relaxed triangle inequality with the given table.
pub fn check_extended_b(d: &DistanceTable, theta: &ThetaTable) -> Result<Verdict, AxiomError> {
    if d.points() != theta.points() {
        return Err(AxiomError::PointSetMismatch);
    }
    let identity = check_identity(d);
    if identity.is_fails() {
        return Ok(identity);
    }
    Ok(check(d, &Axiom::Extended(theta)))
}

/// Verdicts for all five space kinds, with the optimal constants when defined.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpaceReport {
    pub verdicts: BTreeMap<ClassTag, Verdict>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "theta_rows")]
    pub theta_min: Option<ThetaTable>,
}

fn theta_rows<S: serde::Serializer>(t: &Option<ThetaTable>, s: S) -> Result<S::Ok, S::Error> {
    let rows: Option<Vec<Vec<String>>> = t
        .as_ref()
        .map(|t| t.rows().iter().map(|r| r.iter().map(rational::format).collect()).collect());
    rows.serialize(s)
}

/// Exact verdict for a single space kind.
pub fn check_kind(d: &DistanceTable, kind: ClassTag) -> Verdict {
    let identity = check_identity(d);
    if identity.is_fails() {
        return identity;
    }
    let exact = |q: Rational| Constant::Exact(q);
    match kind {
        ClassTag::Metric => check_triangle(d),
        ClassTag::Ultrametric => check_ultra(d),
        ClassTag::WeakUltrametric => {
            let c = optimal_weak_ultra_constant(d).expect("identity holds");
            Verdict::holds().with_constant("C_min", exact(c))
        }
        ClassTag::BMetric => {
            let s = optimal_b_constant(d).expect("identity holds");
            Verdict::holds().with_constant("s_min", exact(s))
        }
        ClassTag::ExtendedBMetric => {
            let theta = minimal_theta(d).expect("identity holds");
            Verdict::holds().with_constant("theta_max", exact(theta.max_entry()))
        }
        other => Verdict::inconclusive(format!("{other} is not a space kind")),
    }
}

/// Runs every check and collects the report.
pub fn classify_space(d: &DistanceTable) -> SpaceReport {
    let verdicts = ClassTag::SPACE_KINDS
        .iter()
        .map(|&k| (k, check_kind(d, k)))
        .collect();
    SpaceReport {
        verdicts,
        theta_min: minimal_theta(d).ok(),
    }
}
