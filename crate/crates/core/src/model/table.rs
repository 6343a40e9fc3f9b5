use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::rational::{WireMatrix, WireRational};
use super::{ModelError, Rational};

/// Symmetric, nonnegative, zero-diagonal distance matrix over labelled points.
///
/// Distinct points at distance zero are representable; identity of
/// indiscernibles is checked by `axioms::check_identity`, not here.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceTable {
    points: Vec<String>,
    entries: Vec<Vec<Rational>>,
}

/// Per-pair relaxation factors, each at least 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaTable {
    points: Vec<String>,
    entries: Vec<Vec<Rational>>,
}

fn check_square(points: &[String], entries: &[Vec<Rational>]) -> Result<(), ModelError> {
    if points.is_empty() {
        return Err(ModelError::ShapeMismatch("at least one point is required".into()));
    }
    if entries.len() != points.len() {
        return Err(ModelError::ShapeMismatch(format!(
            "{} points but {} rows",
            points.len(),
            entries.len()
        )));
    }
    if let Some((i, row)) = entries.iter().enumerate().find(|(_, r)| r.len() != points.len()) {
        return Err(ModelError::ShapeMismatch(format!(
            "row {i} has {} entries, expected {}",
            row.len(),
            points.len()
        )));
    }
    Ok(())
}

fn first_asymmetry(entries: &[Vec<Rational>]) -> Option<(usize, usize)> {
    let n = entries.len();
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .find(|&(i, j)| entries[i][j] != entries[j][i])
}

impl DistanceTable {
    pub fn new(points: Vec<String>, entries: Vec<Vec<Rational>>) -> Result<Self, ModelError> {
        check_square(&points, &entries)?;
        let n = points.len();
        if let Some(i) = (0..n).find(|&i| !entries[i][i].is_zero()) {
            return Err(ModelError::NonzeroDiagonal { i });
        }
        if let Some((i, j)) = first_asymmetry(&entries) {
            return Err(ModelError::AsymmetricEntry { i, j });
        }
        for (i, row) in entries.iter().enumerate() {
            if let Some(j) = row.iter().position(|q| q.is_negative()) {
                return Err(ModelError::NegativeEntry { i, j });
            }
        }
        Ok(DistanceTable { points, entries })
    }

    /// Points labelled `p0..p{n-1}`.
    pub fn from_matrix(entries: Vec<Vec<Rational>>) -> Result<Self, ModelError> {
        let points = default_labels(entries.len());
        Self::new(points, entries)
    }

    /// Three points `x, y, z` with the given pairwise distances.
    pub fn three_point(xy: Rational, xz: Rational, zy: Rational) -> Result<Self, ModelError> {
        let z = Rational::zero();
        Self::new(
            vec!["x".into(), "y".into(), "z".into()],
            vec![
                vec![z.clone(), xy.clone(), xz.clone()],
                vec![xy, z.clone(), zy.clone()],
                vec![xz, zy, z],
            ],
        )
    }

    /// Builds a table from the strict upper triangle; `dist(i, j)` is called for `i < j`.
    pub fn from_fn(n: usize, mut dist: impl FnMut(usize, usize) -> Rational) -> Result<Self, ModelError> {
        let mut entries = vec![vec![Rational::zero(); n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let d = dist(i, j);
                entries[i][j] = d.clone();
                entries[j][i] = d;
            }
        }
        Self::from_matrix(entries)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn label(&self, i: usize) -> &str {
        &self.points[i]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i][j]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.entries
    }

    /// Same points, entries transformed pairwise; the map must keep the result valid.
    pub(crate) fn map_pairs<E>(
        &self,
        mut f: impl FnMut(usize, usize, &Rational) -> Result<Rational, E>,
    ) -> Result<Vec<Vec<Rational>>, E> {
        let n = self.len();
        let mut entries = vec![vec![Rational::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j, &self.entries[i][j])?;
                entries[j][i] = v.clone();
                entries[i][j] = v;
            }
        }
        Ok(entries)
    }
}

impl ThetaTable {
    pub fn new(points: Vec<String>, entries: Vec<Vec<Rational>>) -> Result<Self, ModelError> {
        check_square(&points, &entries)?;
        if let Some((i, j)) = first_asymmetry(&entries) {
            return Err(ModelError::AsymmetricEntry { i, j });
        }
        let one = Rational::one();
        for (i, row) in entries.iter().enumerate() {
            if let Some(j) = row.iter().position(|q| *q < one) {
                return Err(ModelError::ThetaBelowOne { i, j });
            }
        }
        Ok(ThetaTable { points, entries })
    }

    /// Every pair relaxed by the same factor `s`.
    pub fn constant(points: Vec<String>, s: Rational) -> Result<Self, ModelError> {
        let n = points.len();
        Self::new(points, vec![vec![s; n]; n])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i][j]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.entries
    }

    /// Largest relaxation factor in the table.
    pub fn max_entry(&self) -> Rational {
        self.entries
            .iter()
            .flatten()
            .max()
            .cloned()
            .unwrap_or_else(Rational::one)
    }
}

pub(crate) fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i}")).collect()
}

#[derive(Serialize, Deserialize)]
struct Wire {
    points: Vec<String>,
    entries: WireMatrix,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    theta: Option<WireMatrix>,
}

fn unwire(m: WireMatrix) -> Vec<Vec<Rational>> {
    m.0.into_iter()
        .map(|row| row.into_iter().map(|w| w.0).collect())
        .collect()
}

fn wire(rows: &[Vec<Rational>]) -> WireMatrix {
    WireMatrix(
        rows.iter()
            .map(|row| row.iter().cloned().map(WireRational).collect())
            .collect(),
    )
}

impl Serialize for DistanceTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Wire {
            points: self.points.clone(),
            entries: wire(&self.entries),
            theta: None,
        }
        .serialize(s)
    }
}

/// On-disk space: a distance table plus an optional relaxation table over the same points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceFile {
    pub table: DistanceTable,
    pub theta: Option<ThetaTable>,
}

impl SpaceFile {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let wire: Wire = serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        let table = DistanceTable::new(wire.points.clone(), unwire(wire.entries))?;
        let theta = wire
            .theta
            .map(|t| ThetaTable::new(wire.points, unwire(t)))
            .transpose()?;
        Ok(SpaceFile { table, theta })
    }

    pub fn to_json(&self) -> String {
        let wire = Wire {
            points: self.table.points().to_vec(),
            entries: wire(self.table.rows()),
            theta: self.theta.as_ref().map(|t| wire(t.rows())),
        };
        serde_json::to_string_pretty(&wire).expect("space serialization is infallible")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rational::{int, ratio};

    fn labels(n: usize) -> Vec<String> {
        default_labels(n)
    }

    #[test]
    fn single_point_is_valid() {
        assert!(DistanceTable::new(labels(1), vec![vec![int(0)]]).is_ok());
    }

    #[test]
    fn discrete_two_point_is_valid() {
        let t = DistanceTable::new(labels(2), vec![vec![int(0), int(1)], vec![int(1), int(0)]]);
        assert!(t.is_ok());
    }

    #[test]
    fn asymmetry_is_reported() {
        let t = DistanceTable::new(labels(2), vec![vec![int(0), int(1)], vec![int(2), int(0)]]);
        assert_eq!(t, Err(ModelError::AsymmetricEntry { i: 0, j: 1 }));
    }

    #[test]
    fn constructor_errors() {
        let neg = DistanceTable::new(labels(2), vec![vec![int(0), int(-1)], vec![int(-1), int(0)]]);
        assert_eq!(neg, Err(ModelError::NegativeEntry { i: 0, j: 1 }));
        let diag = DistanceTable::new(labels(2), vec![vec![int(1), int(1)], vec![int(1), int(0)]]);
        assert_eq!(diag, Err(ModelError::NonzeroDiagonal { i: 0 }));
        let shape = DistanceTable::new(labels(2), vec![vec![int(0)]]);
        assert!(matches!(shape, Err(ModelError::ShapeMismatch(_))));
        let ragged = DistanceTable::new(labels(2), vec![vec![int(0), int(1)], vec![int(1)]]);
        assert!(matches!(ragged, Err(ModelError::ShapeMismatch(_))));
    }

    #[test]
    fn zero_off_diagonal_is_representable() {
        assert!(DistanceTable::from_matrix(vec![vec![int(0), int(0)], vec![int(0), int(0)]]).is_ok());
    }

    #[test]
    fn theta_below_one_rejected() {
        let t = ThetaTable::new(labels(2), vec![vec![int(1), ratio(1, 2)], vec![ratio(1, 2), int(1)]]);
        assert_eq!(t, Err(ModelError::ThetaBelowOne { i: 0, j: 1 }));
    }

    #[test]
    fn json_accepts_integers_and_strings() {
        let text = r#"{"points":["x","y"],"entries":[[0,"5/2"],["10/4",0]],"theta":[[1,"3/2"],["3/2",1]]}"#;
        let space = SpaceFile::from_json(text).unwrap();
        assert_eq!(space.table.get(0, 1), &ratio(5, 2));
        assert_eq!(space.theta.unwrap().get(1, 0), &ratio(3, 2));
    }

    #[test]
    fn json_rejects_floats() {
        let text = r#"{"points":["x","y"],"entries":[[0,0.5],[0.5,0]]}"#;
        assert!(matches!(SpaceFile::from_json(text), Err(ModelError::Json(_))));
    }
}
