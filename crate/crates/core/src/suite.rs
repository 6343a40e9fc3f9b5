//! Fixed battery of lattice and consistency assertions over a small function
//! catalog and seeded random spaces. The report is a pure function of the seed.

use serde::Serialize;

use crate::axioms::{
    check_b_metric, check_extended_b, check_kind, check_triangle, check_ultra, minimal_theta, optimal_b_constant,
};
use crate::functions::{classify_fn, parse_fn, RealFn, SampleGrid};
use crate::model::rational::{self, Rational};
use crate::model::{random_space, ClassTag, Constant, DistanceTable, ThetaTable};
use crate::preservation::{membership, pushforward, reverify, Budget, MemberStatus, MembershipReport};
use crate::triplets::{
    is_s_triplet, is_theta_triplet, realize_in_plane, sample_triplets, triplet_constant, Strategy, Triplet,
};

/// Functions every run exercises.
pub const CATALOG: [&str; 8] = ["x", "x/(1+x)", "min(x,1)", "sqrt(x)", "x^2", "exp(x)-1", "0", "ceil(x)"];

/// Random spaces per kind and assertion.
const SPACES: u64 = 60;
const MAX_FAILURES: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: &'static str,
    pub statement: &'static str,
    /// Base seed; case `i` uses `seed + i`.
    pub seed: u64,
    pub checked: usize,
    pub passed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipLine {
    pub function: String,
    pub class: ClassTag,
    pub status: MemberStatus,
    pub basis: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub catalog: Vec<String>,
    pub memberships: Vec<MembershipLine>,
    pub assertions: Vec<Assertion>,
    pub all_passed: bool,
}

struct Check {
    name: &'static str,
    statement: &'static str,
    seed: u64,
    checked: usize,
    failures: Vec<String>,
    dropped: usize,
}

impl Check {
    fn new(name: &'static str, statement: &'static str, seed: u64) -> Self {
        Check { name, statement, seed, checked: 0, failures: Vec::new(), dropped: 0 }
    }

    fn expect(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            if self.failures.len() < MAX_FAILURES {
                self.failures.push(detail());
            } else {
                self.dropped += 1;
            }
        }
    }

    fn finish(mut self) -> Assertion {
        if self.dropped > 0 {
            self.failures.push(format!("... and {} more", self.dropped));
        }
        Assertion {
            name: self.name,
            statement: self.statement,
            seed: self.seed,
            checked: self.checked,
            passed: self.failures.is_empty(),
            failures: self.failures,
        }
    }
}

fn space(kind: ClassTag, i: u64, seed: u64) -> (DistanceTable, Option<ThetaTable>) {
    let n = 3 + (i % 4) as usize;
    random_space(kind, n, seed.wrapping_add(i)).expect("generator accepts every space kind")
}

fn exact(c: Option<&Constant>) -> Option<Rational> {
    c.and_then(Constant::as_exact).cloned()
}

fn indices(v: &crate::model::Verdict) -> Option<&[usize]> {
    match &v.witness {
        Some(crate::model::Witness::Points { indices, .. }) => Some(indices),
        _ => None,
    }
}

fn suite_budget(seed: u64) -> Budget {
    Budget {
        triplet_samples: 20_000,
        grid: SampleGrid { x_max: 20.0, n_points: 2000, seed },
        seed,
        ..Budget::default()
    }
}

pub fn theorem_suite(seed: u64) -> SuiteReport {
    let fns: Vec<RealFn> = CATALOG.iter().map(|s| parse_fn(s).expect("catalog parses")).collect();
    let budget = suite_budget(seed);
    let sub = |k: u64| seed.wrapping_mul(1_000_003).wrapping_add(k * 10_007);

    let mut reports: Vec<(usize, MembershipReport)> = Vec::new();
    for (i, f) in fns.iter().enumerate() {
        for class in [ClassTag::U, ClassTag::B, ClassTag::MB, ClassTag::EB] {
            let r = membership(f, class, &budget).expect("catalog functions evaluate everywhere");
            reports.push((i, r));
        }
    }
    let find = |i: usize, class: ClassTag| {
        reports.iter().find(|(j, r)| *j == i && r.class == class).map(|(_, r)| r).expect("computed above")
    };

    let mut out = Vec::new();

    let mut c = Check::new("ultrametric-is-weak-ultrametric-and-metric", "every ultrametric has C_min = 1 and satisfies the triangle inequality", sub(1));
    for i in 0..SPACES {
        let (d, _) = space(ClassTag::Ultrametric, i, c.seed);
        let w = check_kind(&d, ClassTag::WeakUltrametric);
        c.expect(exact(w.constant("C_min")) == Some(rational::one()), || format!("case {i}: C_min = {:?}", w.constant("C_min")));
        c.expect(check_triangle(&d).is_holds(), || format!("case {i}: triangle inequality fails"));
    }
    out.push(c.finish());

    let mut c = Check::new("metric-is-b-metric", "every metric has s_min = 1", sub(2));
    for i in 0..SPACES {
        let (d, _) = space(ClassTag::Metric, i, c.seed);
        let s = optimal_b_constant(&d).ok();
        c.expect(s == Some(rational::one()), || format!("case {i}: s_min = {s:?}"));
    }
    out.push(c.finish());

    let mut c = Check::new("constant-theta-is-b-metric", "with theta constant s, extended-b and b-metric verdicts coincide", sub(3));
    for i in 0..100 {
        let (d, _) = space(ClassTag::BMetric, i, c.seed);
        let s_min = optimal_b_constant(&d).expect("generated b-metrics satisfy identity");
        let half = (rational::one() + &s_min) / rational::int(2);
        for s in [s_min.clone(), half, &s_min + rational::one()] {
            let theta = ThetaTable::constant(d.points().to_vec(), s.clone()).expect("s >= 1");
            let b = check_b_metric(&d, &s);
            let e = check_extended_b(&d, &theta).expect("same points");
            c.expect(b.status == e.status && indices(&b) == indices(&e), || {
                format!("case {i}, s = {}: {:?} vs {:?}", rational::format(&s), b.status, e.status)
            });
        }
    }
    out.push(c.finish());

    let mut c = Check::new("extended-b-triples-are-theta-triplets", "every triple of an extended b-metric space is a theta-triplet", sub(4));
    for i in 0..SPACES {
        let (d, theta) = space(ClassTag::ExtendedBMetric, i, c.seed);
        let tables = [theta, minimal_theta(&d).ok()];
        for th in tables.iter().flatten() {
            let n = d.len();
            for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        let t = Triplet::new(d.get(x, y).clone(), d.get(y, z).clone(), d.get(x, z).clone());
                        let ok = is_theta_triplet(&t, [th.get(x, y), th.get(y, z), th.get(x, z)]).unwrap_or(false);
                        c.expect(ok, || format!("case {i}: triple ({x}, {y}, {z})"));
                    }
                }
            }
        }
    }
    out.push(c.finish());

    let mut c = Check::new("s-triplet-is-theta-triplet", "every s-triplet is a theta-triplet for theta >= s", sub(5));
    let stream = sample_triplets(Strategy::Random { seed: c.seed, count: 2000, max: 16.0 }).expect("valid strategy");
    for (i, t) in stream.enumerate() {
        let q = t.map(|v| rational::from_f64(*v).expect("finite"));
        let s = triplet_constant(&q).finite().expect("positive sides");
        let bigger = &s + rational::ratio(1, 3);
        let ok = is_s_triplet(&q, &s).unwrap_or(false)
            && is_theta_triplet(&q, [&s, &s, &s]).unwrap_or(false)
            && is_theta_triplet(&q, [&bigger, &s, &bigger]).unwrap_or(false);
        c.expect(ok, || format!("case {i}: {t:?}"));
    }
    out.push(c.finish());

    let mut c = Check::new("planar-realization", "triangle triplets realize in the plane within 1e-9 relative", sub(6));
    let stream = sample_triplets(Strategy::Random { seed: c.seed, count: 1000, max: 100.0 }).expect("valid strategy");
    for (i, t) in stream.enumerate() {
        let ok = realize_in_plane(&t).is_ok_and(|[u, v, w]| {
            [(u.dist(&v), t.a), (u.dist(&w), t.b), (v.dist(&w), t.c)]
                .iter()
                .all(|(got, want)| (got - want).abs() <= 1e-9 * want)
        });
        c.expect(ok, || format!("case {i}: {t:?}"));
    }
    out.push(c.finish());

    let mut c = Check::new("subadditive-implies-quasi-subadditive", "subadditive on the grid gives s_star_estimate = 1", seed);
    for f in &fns {
        let p = classify_fn(f, budget.grid).expect("catalog functions evaluate everywhere");
        if p.subadditive.is_holds() {
            c.expect(p.s_star_estimate() == 1.0, || format!("{}: s = {}", f.source(), p.s_star_estimate()));
        }
    }
    out.push(c.finish());

    let mut c = Check::new("b-members-are-eb-members", "every catalog member of B is a member of EB", seed);
    for i in 0..fns.len() {
        if find(i, ClassTag::B).status == MemberStatus::Member {
            let eb = find(i, ClassTag::EB);
            c.expect(eb.status == MemberStatus::Member, || format!("{}: EB {:?}", CATALOG[i], eb.status));
        }
    }
    out.push(c.finish());

    let mut c = Check::new("members-pass-quasi-screen", "every member is amenable with a finite s_star_estimate", seed);
    for (i, r) in &reports {
        if r.status == MemberStatus::Member && r.class != ClassTag::U {
            let p = classify_fn(&fns[*i], budget.grid).expect("evaluates");
            c.expect(p.amenable.is_holds() && p.s_star_estimate().is_finite() && !p.quasi_subadditive.is_fails(), || {
                format!("{} in {}", CATALOG[*i], r.class)
            });
        }
    }
    out.push(c.finish());

    let mut c = Check::new("mb-members-bound-triplets", "for members of MB with constant s, sampled image triplets are s-triplets", sub(7));
    let check_stream = Budget { seed: c.seed, triplet_samples: 10_000, ..budget };
    let sample = crate::preservation::triplet_sample(&check_stream).expect("valid budget");
    for i in 0..fns.len() {
        let r = find(i, ClassTag::MB);
        let Some(s) = r.s_constant().filter(|_| r.status == MemberStatus::Member) else { continue };
        let slack = s * (1.0 + 1e-9);
        for t in &sample {
            let img = t.map(|v| fns[i].eval(*v).unwrap_or(f64::NAN));
            c.expect(is_s_triplet(&img, &slack).unwrap_or(false), || format!("{}: {t:?} -> {img:?}", CATALOG[i]));
        }
    }
    out.push(c.finish());

    let mut c = Check::new("ultrametric-pushforward", "increasing amenable functions keep random ultrametrics ultrametric", sub(8));
    for (k, f) in fns.iter().enumerate() {
        let p = classify_fn(f, budget.grid).expect("evaluates");
        if !(p.amenable.is_holds() && p.increasing.is_holds()) {
            continue;
        }
        for i in 0..SPACES / 2 {
            let (d, _) = space(ClassTag::Ultrametric, i, c.seed);
            let ok = pushforward(f, &d).is_ok_and(|img| check_ultra(&img).is_holds());
            c.expect(ok, || format!("{} on case {i}", CATALOG[k]));
        }
    }
    out.push(c.finish());

    let mut c = Check::new("identity-pushforward", "pushforward by x is the identity on tables", sub(9));
    for (j, kind) in ClassTag::SPACE_KINDS.iter().enumerate() {
        for i in 0..SPACES / 4 {
            let (d, _) = space(*kind, i + 100 * j as u64, c.seed);
            c.expect(pushforward(&fns[0], &d).as_ref() == Ok(&d), || format!("{kind} case {i}"));
        }
    }
    out.push(c.finish());

    let mut c = Check::new("metric-preservation", "sqrt(x), min(x,1), x/(1+x) keep random metrics metric", sub(10));
    for k in [1usize, 2, 3] {
        for i in 0..SPACES {
            let (d, _) = space(ClassTag::Metric, i, c.seed);
            let ok = pushforward(&fns[k], &d).is_ok_and(|img| check_triangle(&img).is_holds());
            c.expect(ok, || format!("{} on case {i}", CATALOG[k]));
        }
    }
    out.push(c.finish());

    let mut c = Check::new("witnesses-reverify", "every non-member witness replays as a violation", seed);
    for (i, r) in &reports {
        if r.status == MemberStatus::NonMemberEvidence {
            c.expect(r.witness.is_some() && reverify(&fns[*i], r), || format!("{} in {}", CATALOG[*i], r.class));
        }
    }
    out.push(c.finish());

    let memberships = reports
        .iter()
        .map(|(_, r)| MembershipLine {
            function: r.function.clone(),
            class: r.class,
            status: r.status,
            basis: r.basis.clone(),
            s: (r.status == MemberStatus::Member).then(|| r.s_constant()).flatten(),
        })
        .collect();
    let all_passed = out.iter().all(|a| a.passed);
    SuiteReport {
        seed,
        catalog: CATALOG.iter().map(|s| s.to_string()).collect(),
        memberships,
        assertions: out,
        all_passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_seed_passes() {
        let r = theorem_suite(42);
        let failed: Vec<_> = r.assertions.iter().filter(|a| !a.passed).collect();
        assert!(failed.is_empty(), "{failed:#?}");
        let eb_members: Vec<_> = r
            .memberships
            .iter()
            .filter(|m| m.class == ClassTag::B && m.status == MemberStatus::Member)
            .map(|m| m.function.as_str())
            .collect();
        for f in ["x^2", "min(x,1)", "sqrt(x)"] {
            assert!(eb_members.contains(&f), "{eb_members:?}");
        }
    }
}
