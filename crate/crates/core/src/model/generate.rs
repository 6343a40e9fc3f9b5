//! Seeded generators for each space kind. Every generator guarantees its
//! axioms by construction; the property tests re-verify them exactly.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::rational::{int, ratio};
use super::{ClassTag, DistanceTable, ModelError, Rational, ThetaTable};
use crate::axioms;

/// Random space of the given kind on `n >= 2` points, deterministic in `seed`.
///
/// Extended b-metric spaces come with their minimal relaxation table.
pub fn random_space(
    kind: ClassTag,
    n: usize,
    seed: u64,
) -> Result<(DistanceTable, Option<ThetaTable>), ModelError> {
    if !kind.is_space_kind() {
        return Err(ModelError::UnsupportedKind(kind));
    }
    if n < 2 {
        return Err(ModelError::PreconditionViolated(format!(
            "random spaces need n >= 2, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ kind_salt(kind));
    let table = match kind {
        ClassTag::Ultrametric => merge_tree_ultrametric(n, &mut rng),
        ClassTag::Metric => shortest_path_metric(n, &mut rng),
        ClassTag::WeakUltrametric => {
            let u = merge_tree_ultrametric(n, &mut rng)?;
            scale_pairs(&u, &mut rng, 8)
        }
        ClassTag::BMetric => {
            let m = shortest_path_metric(n, &mut rng)?;
            scale_pairs(&m, &mut rng, 8)
        }
        ClassTag::ExtendedBMetric => {
            let m = shortest_path_metric(n, &mut rng)?;
            scale_pairs(&m, &mut rng, 16)
        }
        _ => unreachable!("checked above"),
    }?;
    let theta = if kind == ClassTag::ExtendedBMetric {
        Some(axioms::minimal_theta(&table).expect("generated spaces have positive off-diagonal"))
    } else {
        None
    };
    Ok((table, theta))
}

fn kind_salt(kind: ClassTag) -> u64 {
    match kind {
        ClassTag::Metric => 0x11,
        ClassTag::Ultrametric => 0x22,
        ClassTag::WeakUltrametric => 0x33,
        ClassTag::BMetric => 0x44,
        ClassTag::ExtendedBMetric => 0x55,
        _ => 0,
    }
}

/// Agglomerative merge at strictly increasing heights; the merge height of
/// two clusters becomes the distance between all their cross pairs.
fn merge_tree_ultrametric(n: usize, rng: &mut ChaCha8Rng) -> Result<DistanceTable, ModelError> {
    let mut entries = vec![vec![Rational::zero(); n]; n];
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut height = Rational::zero();
    while clusters.len() > 1 {
        height += ratio(rng.gen_range(1..=8), 4);
        let a = rng.gen_range(0..clusters.len());
        let mut b = rng.gen_range(0..clusters.len() - 1);
        if b >= a {
            b += 1;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let merged = clusters.swap_remove(hi);
        for &p in &clusters[lo] {
            for &q in &merged {
                entries[p][q] = height.clone();
                entries[q][p] = height.clone();
            }
        }
        clusters[lo].extend(merged);
    }
    DistanceTable::from_matrix(entries)
}

/// Random symmetric positive weights closed under shortest paths (Floyd–Warshall).
fn shortest_path_metric(n: usize, rng: &mut ChaCha8Rng) -> Result<DistanceTable, ModelError> {
    let mut entries = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = ratio(rng.gen_range(1..=16), 4);
            entries[i][j] = w.clone();
            entries[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = &entries[i][k] + &entries[k][j];
                if via < entries[i][j] {
                    entries[i][j] = via;
                }
            }
        }
    }
    DistanceTable::from_matrix(entries)
}

/// Multiplies each pair by an independent factor in `[1, 1 + steps/8]`.
fn scale_pairs(
    base: &DistanceTable,
    rng: &mut ChaCha8Rng,
    steps: i64,
) -> Result<DistanceTable, ModelError> {
    DistanceTable::from_fn(base.len(), |i, j| {
        base.get(i, j) * (int(1) + ratio(rng.gen_range(0..=steps), 8))
    })
}
