//! Triangle triplets and their relaxed variants, planar realization of a
//! triangle triplet, and seeded triplet streams for the preservation searches.

use num_traits::Num;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TripletError {
    #[error("relaxation constant s must be >= 1")]
    InvalidS,
    #[error("theta bounds must all be >= 1")]
    InvalidTheta,
    #[error("({0}, {1}, {2}) is not a triangle triplet")]
    NotATriplet(f64, f64, f64),
    #[error("planar realization needs strictly positive sides")]
    NonPositiveEntry,
    #[error("sampling strategy needs a positive step, count and range")]
    InvalidStrategy,
}

/// Ordered triple of nonnegative reals. `f64` on sampling paths, exact
/// rationals on verifier paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triplet<T = f64> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T> Triplet<T> {
    pub fn new(a: T, b: T, c: T) -> Self {
        Triplet { a, b, c }
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Triplet<U> {
        Triplet { a: f(&self.a), b: f(&self.b), c: f(&self.c) }
    }

    /// `(side, sum of the other two)` for each of the three positions.
    fn sides(&self) -> [(&T, [&T; 2]); 3] {
        [
            (&self.a, [&self.b, &self.c]),
            (&self.b, [&self.a, &self.c]),
            (&self.c, [&self.a, &self.b]),
        ]
    }
}

impl Triplet<f64> {
    /// Lexicographic total order, used to break ties between witnesses.
    pub fn lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.a
            .total_cmp(&other.a)
            .then(self.b.total_cmp(&other.b))
            .then(self.c.total_cmp(&other.c))
    }

    pub fn max_side(&self) -> f64 {
        self.a.max(self.b).max(self.c)
    }
}

/// A nonnegative real or `+inf`.
#[derive(Clone, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub enum Extended<T> {
    Finite(T),
    Infinite,
}

impl<T> Extended<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }
}

impl Extended<f64> {
    pub fn to_f64(&self) -> f64 {
        match self {
            Extended::Finite(v) => *v,
            Extended::Infinite => f64::INFINITY,
        }
    }
}

pub fn is_triangle_triplet<T: Num + Clone + PartialOrd>(t: &Triplet<T>) -> bool {
    t.sides()
        .iter()
        .all(|(x, [p, q])| **x <= (*p).clone() + (*q).clone())
}

pub fn is_s_triplet<T: Num + Clone + PartialOrd>(t: &Triplet<T>, s: &T) -> Result<bool, TripletError> {
    if !(*s >= T::one()) {
        return Err(TripletError::InvalidS);
    }
    Ok(t
        .sides()
        .iter()
        .all(|(x, [p, q])| **x <= s.clone() * ((*p).clone() + (*q).clone())))
}

/// Per-position bounds: `a <= theta[0](b+c)`, `b <= theta[1](a+c)`, `c <= theta[2](a+b)`.
pub fn is_theta_triplet<T: Num + Clone + PartialOrd>(
    t: &Triplet<T>,
    theta: [&T; 3],
) -> Result<bool, TripletError> {
    if theta.iter().any(|th| !(**th >= T::one())) {
        return Err(TripletError::InvalidTheta);
    }
    Ok(t
        .sides()
        .iter()
        .zip(theta)
        .all(|((x, [p, q]), th)| **x <= th.clone() * ((*p).clone() + (*q).clone())))
}

/// Smallest `s >= 1` making `t` an s-triangle triplet; `q/0` counts as `+inf`
/// for `q > 0` and as 0 for `q = 0`.
pub fn triplet_constant<T: Num + Clone + PartialOrd>(t: &Triplet<T>) -> Extended<T> {
    let mut best = T::one();
    for (x, [p, q]) in t.sides() {
        let sum = p.clone() + q.clone();
        if sum.is_zero() {
            if !x.is_zero() {
                return Extended::Infinite;
            }
            continue;
        }
        let r = x.clone() / sum;
        if r > best {
            best = r;
        }
    }
    Extended::Finite(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub fn dist(&self, other: &PlanarPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Points `u, v, w` with `|u-v| = a`, `|u-w| = b`, `|v-w| = c`.
///
/// `u` is the origin, `v` lies on the positive x-axis and `w` in the closed
/// upper half-plane. The height of `w` comes from a cancellation-free area
/// formula so that thin triangles keep full relative accuracy.
pub fn realize_in_plane(t: &Triplet<f64>) -> Result<[PlanarPoint; 3], TripletError> {
    let Triplet { a, b, c } = *t;
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(TripletError::NonPositiveEntry);
    }
    if !(a.is_finite() && b.is_finite() && c.is_finite()) || !is_triangle_triplet(t) {
        return Err(TripletError::NotATriplet(a, b, c));
    }
    let wx = ((a - c) * (a + c) + b * b) / (2.0 * a);
    let wy = 2.0 * stable_area(a, b, c) / a;
    Ok([
        PlanarPoint { x: 0.0, y: 0.0 },
        PlanarPoint { x: a, y: 0.0 },
        PlanarPoint { x: wx, y: wy },
    ])
}

/// Heron's formula in the sorted, parenthesized form that avoids cancellation.
fn stable_area(a: f64, b: f64, c: f64) -> f64 {
    let mut s = [a, b, c];
    s.sort_by(|p, q| q.total_cmp(p));
    let [x, y, z] = s;
    let prod = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z));
    0.25 * prod.max(0.0).sqrt()
}

/// Where sampled triplets come from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    /// Every ordered triangle triplet with sides in `{step, 2 step, ..., max}`.
    Grid { step: f64, max: f64 },
    /// `count` triplets with sides log-uniform up to `max`.
    Random { seed: u64, count: usize, max: f64 },
    /// `count` degenerate triplets with `a = b + c`.
    Boundary { seed: u64, count: usize, max: f64 },
}

/// Random sides are multiples of this, so every sum of two sides is exact in `f64`.
pub const QUANTUM: f64 = 1.0 / (1u64 << 20) as f64;
const LOG_SPAN: f64 = 4.0 * std::f64::consts::LN_10;

/// Restartable triplet stream.
pub fn sample_triplets(strategy: Strategy) -> Result<TripletStream, TripletError> {
    let ok = match strategy {
        Strategy::Grid { step, max } => step > 0.0 && max >= step && (max / step) < 1e4,
        Strategy::Random { count, max, .. } | Strategy::Boundary { count, max, .. } => {
            count > 0 && max > 0.0 && max / QUANTUM < 2f64.powi(50)
        }
    };
    if !ok {
        return Err(TripletError::InvalidStrategy);
    }
    let seed = match strategy {
        Strategy::Random { seed, .. } | Strategy::Boundary { seed, .. } => seed,
        Strategy::Grid { .. } => 0,
    };
    Ok(TripletStream {
        strategy,
        rng: ChaCha8Rng::seed_from_u64(seed),
        emitted: 0,
        cursor: 0,
    })
}

pub struct TripletStream {
    strategy: Strategy,
    rng: ChaCha8Rng,
    emitted: usize,
    cursor: usize,
}

impl TripletStream {
    /// Log-uniform side in `[max * 1e-4, max]`, snapped to the quantum grid.
    fn side(&mut self, max: f64) -> u64 {
        let u: f64 = self.rng.gen_range(-LOG_SPAN..=0.0);
        ((max * u.exp()) / QUANTUM).round().max(1.0) as u64
    }
}

impl Iterator for TripletStream {
    type Item = Triplet<f64>;

    fn next(&mut self) -> Option<Triplet<f64>> {
        match self.strategy {
            Strategy::Grid { step, max } => {
                let k = (max / step + 1e-9).floor() as usize;
                while self.cursor < k * k * k {
                    let t = self.cursor;
                    self.cursor += 1;
                    let side = |i: usize| (i + 1) as f64 * step;
                    let cand = Triplet::new(side(t / (k * k)), side((t / k) % k), side(t % k));
                    if is_triangle_triplet(&cand) {
                        return Some(cand);
                    }
                }
                None
            }
            Strategy::Random { count, max, .. } => {
                if self.emitted == count {
                    return None;
                }
                self.emitted += 1;
                let kb = self.side(max / 2.0);
                let kc = self.side(max / 2.0);
                let ka = self.rng.gen_range(kb.abs_diff(kc).max(1)..=kb + kc);
                let mut sides = [ka, kb, kc].map(|k| k as f64 * QUANTUM);
                let rot = self.rng.gen_range(0..3);
                sides.rotate_left(rot);
                if self.rng.gen_bool(0.5) {
                    sides.swap(1, 2);
                }
                Some(Triplet::new(sides[0], sides[1], sides[2]))
            }
            Strategy::Boundary { count, max, .. } => {
                if self.emitted == count {
                    return None;
                }
                self.emitted += 1;
                let kb = self.side(max / 2.0);
                // a quarter of the boundary samples are the isosceles (x/2, x/2, x) shape
                let kc = if self.rng.gen_bool(0.25) { kb } else { self.side(max / 2.0) };
                let (b, c) = (kb as f64 * QUANTUM, kc as f64 * QUANTUM);
                Some(Triplet::new(b + c, b, c))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rational::{int, ratio};

    fn t(a: f64, b: f64, c: f64) -> Triplet {
        Triplet::new(a, b, c)
    }

    #[test]
    fn triangle_examples() {
        assert!(is_triangle_triplet(&t(3.0, 4.0, 5.0)));
        assert!(!is_triangle_triplet(&t(4.0, 1.0, 1.0)));
        assert!(is_triangle_triplet(&t(0.0, 0.0, 0.0)));
    }

    #[test]
    fn s_triplet_examples() {
        assert!(is_s_triplet(&t(4.0, 1.0, 1.0), &2.0).unwrap());
        assert!(!is_s_triplet(&t(4.0, 1.0, 1.0), &1.0).unwrap());
        assert!(is_s_triplet(&t(1.0, 1.0, 1.0), &1.0).unwrap());
        assert_eq!(is_s_triplet(&t(1.0, 1.0, 1.0), &0.5), Err(TripletError::InvalidS));
        assert_eq!(is_s_triplet(&t(1.0, 1.0, 1.0), &f64::NAN), Err(TripletError::InvalidS));
    }

    #[test]
    fn theta_triplet_examples() {
        assert!(is_theta_triplet(&t(4.0, 1.0, 1.0), [&2.0, &1.0, &1.0]).unwrap());
        assert!(!is_theta_triplet(&t(4.0, 1.0, 1.0), [&1.0, &1.0, &1.0]).unwrap());
        assert_eq!(
            is_theta_triplet(&t(4.0, 1.0, 1.0), [&1.0, &0.9, &1.0]),
            Err(TripletError::InvalidTheta)
        );
        let s = 3.0;
        assert!(is_s_triplet(&t(5.0, 1.0, 1.0), &s).unwrap());
        assert!(is_theta_triplet(&t(5.0, 1.0, 1.0), [&s, &s, &s]).unwrap());
    }

    #[test]
    fn exact_triplets() {
        let q = Triplet::new(int(5), int(2), int(2));
        assert!(!is_triangle_triplet(&q));
        assert_eq!(triplet_constant(&q), Extended::Finite(ratio(5, 4)));
        assert!(is_s_triplet(&q, &ratio(5, 4)).unwrap());
        assert!(!is_s_triplet(&q, &ratio(124, 100)).unwrap());
    }

    #[test]
    fn constant_examples() {
        assert_eq!(triplet_constant(&t(4.0, 1.0, 1.0)), Extended::Finite(2.0));
        assert_eq!(triplet_constant(&t(1.0, 1.0, 1.0)), Extended::Finite(1.0));
        assert_eq!(triplet_constant(&t(1.0, 0.0, 0.0)), Extended::Infinite);
        assert_eq!(triplet_constant(&t(0.0, 0.0, 0.0)), Extended::Finite(1.0));
    }

    #[test]
    fn realize_examples() {
        let [u, v, w] = realize_in_plane(&t(3.0, 4.0, 5.0)).unwrap();
        assert_eq!((u.x, u.y, v.x, v.y), (0.0, 0.0, 3.0, 0.0));
        assert!(w.x.abs() < 1e-12 && (w.y - 4.0).abs() < 1e-12);

        let [_, _, w] = realize_in_plane(&t(2.0, 1.0, 1.0)).unwrap();
        assert_eq!((w.x, w.y), (1.0, 0.0));

        assert_eq!(realize_in_plane(&t(1.0, 0.0, 1.0)), Err(TripletError::NonPositiveEntry));
        assert!(matches!(realize_in_plane(&t(4.0, 1.0, 1.0)), Err(TripletError::NotATriplet(..))));
    }

    #[test]
    fn thin_triangle_keeps_relative_accuracy() {
        let tri = t(1.0, 1.0, 1e-7);
        let [u, v, w] = realize_in_plane(&tri).unwrap();
        assert!((v.dist(&w) - 1e-7).abs() <= 1e-9 * 1e-7);
        assert!((u.dist(&w) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn grid_examples() {
        let all: Vec<_> = sample_triplets(Strategy::Grid { step: 1.0, max: 3.0 }).unwrap().collect();
        assert!(all.contains(&t(1.0, 1.0, 1.0)));
        assert!(all.contains(&t(2.0, 1.0, 1.0)));
        assert!(all.contains(&t(3.0, 2.0, 1.0)));
        assert!(!all.contains(&t(3.0, 1.0, 1.0)));
        // brute-force count of ordered triples over {1,2,3}^3 passing the triangle test
        let mut expected = 0;
        for a in 1..=3 {
            for b in 1..=3 {
                for c in 1..=3 {
                    if a <= b + c && b <= a + c && c <= a + b {
                        expected += 1;
                    }
                }
            }
        }
        assert_eq!(all.len(), expected);
    }

    #[test]
    fn random_and_boundary_examples() {
        let r: Vec<_> = sample_triplets(Strategy::Random { seed: 5, count: 10, max: 10.0 })
            .unwrap()
            .collect();
        assert_eq!(r.len(), 10);
        assert!(r.iter().all(is_triangle_triplet));
        let b: Vec<_> = sample_triplets(Strategy::Boundary { seed: 5, count: 4, max: 10.0 })
            .unwrap()
            .collect();
        assert_eq!(b.len(), 4);
        assert!(b.iter().all(|x| x.a == x.b + x.c && is_triangle_triplet(x)));
    }

    #[test]
    fn streams_restart() {
        let s = Strategy::Random { seed: 9, count: 50, max: 4.0 };
        let a: Vec<_> = sample_triplets(s).unwrap().collect();
        let b: Vec<_> = sample_triplets(s).unwrap().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_strategies() {
        assert!(sample_triplets(Strategy::Grid { step: 0.0, max: 1.0 }).is_err());
        assert!(sample_triplets(Strategy::Random { seed: 0, count: 0, max: 1.0 }).is_err());
    }
}
