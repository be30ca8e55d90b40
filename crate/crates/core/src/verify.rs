//! Self-checks behind `quantalg verify`: worked examples (`examples`),
//! seeded property runs (`props`) and the monad laws (`monad`).
//!
//! Every check produces one line `PASS|FAIL <id> <witness>`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distributions::{
    convex_combine, dirac, kantorovich_brute_force, kantorovich_distance, lk_algebra, lk_bilinear,
    lk_distance, random_dist, term_to_distribution, Dist,
};
use crate::fixtures;
use crate::freealg::{
    check_soundness, embed, flatten, free_extension, map_terms, map_unit, satisfies, unit,
    CheckMode, FiniteAlgebra, Verdict,
};
use crate::gmet::{self, FiniteSpace, KindName, MetricKind, SpaceMap};
use crate::liftings::{check_embedding_preservation, Lifting};
use crate::parse::{parse_clause, parse_ground_term, TheoryFile};
use crate::saturation::{class_point, saturate, SaturationConfig, SaturationResult};
use crate::terms::Term;
use crate::theory::{extend_by_space, Theory};
use crate::unit::{ratio, Rational, UnitValue};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub id: String,
    pub pass: bool,
    pub witness: String,
}

impl Check {
    pub fn new(id: &str, pass: bool, witness: impl Into<String>) -> Self {
        Self {
            id: id.to_string(),
            pass,
            witness: witness.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        if self.witness.is_empty() {
            write!(f, "{status} {}", self.id)
        } else {
            write!(f, "{status} {} {}", self.id, self.witness)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Examples,
    Props,
    Monad,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            // older name, still accepted
            "examples" | "paper" => Ok(Suite::Examples),
            "props" => Ok(Suite::Props),
            "monad" => Ok(Suite::Monad),
            _ => Err(format!(
                "unknown suite `{s}` (expected examples, props or monad)"
            )),
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Report {
    match suite {
        Suite::Examples => examples_suite(),
        Suite::Props => props_suite(seed, 200),
        Suite::Monad => monad_suite(),
    }
}

fn half() -> Rational {
    ratio(1, 2)
}

fn extended(file: &TheoryFile) -> Theory {
    file.extended().expect("bundled theories extend")
}

fn run(file: &TheoryFile, depth: usize) -> SaturationResult {
    saturate(&extended(file), &SaturationConfig::with_depth(depth))
        .expect("bundled theories saturate")
}

fn term(file: &TheoryFile, text: &str) -> Term {
    parse_ground_term(text, &extended(file).sig).expect("well-formed term")
}

pub fn examples_suite() -> Report {
    let mut r = Report::default();
    let lk = fixtures::load("lk");
    let space = lk.space.clone().expect("lk.thy has a space");
    let mix = convex_combine(&half(), &dirac("a"), &dirac("b")).expect("proper parameter");

    let aa = lk_distance(&space, &dirac("a"), &dirac("a")).expect("atoms of the space");
    let bb = lk_distance(&space, &dirac("b"), &dirac("b")).expect("atoms of the space");
    let mm = lk_distance(&space, &mix, &mix).expect("atoms of the space");
    r.push(Check::new(
        "lk.counterexample.values",
        aa == UnitValue::from_ratio(1, 2)
            && bb == aa
            && mm == UnitValue::from_ratio(3, 4)
            && aa < mm,
        format!("lk(da,da)={aa} lk(db,db)={bb} lk(m,m)={mm}"),
    ));

    let sat = run(&lk, 1);
    let m = term(&lk, "plus(1/2; a, b)");
    let d = sat
        .derived_distance(&m, &m)
        .map(|v| v.to_string())
        .unwrap_or_else(|e| e.to_string());
    r.push(Check::new(
        "lk.saturation.three_quarters",
        d == "3/4" && sat.fixpoint_reached,
        format!("d={d}"),
    ));
    r.push(Check::new(
        "lk.saturation.log_replays",
        sat.log.iter().all(|a| a.replay(sat.kind)),
        format!("{} L-NE steps", sat.log.len()),
    ));

    let alg = lk_algebra(&space, "plus", &[half()]).expect("diffuse space");
    let sig = extended(&lk).sig;
    let sup_clause = parse_clause(
        "x1 =[1/2] y1, x2 =[1/2] y2 |- plus(1/2; x1, x2) =[1/2] plus(1/2; y1, y2)",
        &sig,
    )
    .expect("well-formed clause");
    let v = satisfies(&alg, &sup_clause, CheckMode::sampled(0));
    r.push(Check::new(
        "lk.sup_product.counterexample",
        matches!(v, Ok(Verdict::Counterexample { .. })),
        v.map(|v| v.to_string()).unwrap_or_else(|e| e.to_string()),
    ));
    let axioms_ok = lk
        .theory
        .axioms
        .iter()
        .all(|h| satisfies(&alg, h, CheckMode::sampled(0)).is_ok_and(|v| v.holds()));
    r.push(Check::new("lk.convex_axioms.hold", axioms_ok, ""));

    for depth in [1, 2] {
        let (ok, witness) = free_model_check(&lk, depth, 1);
        r.push(Check::new(
            &format!("lk.free_model.depth{depth}"),
            ok,
            witness,
        ));
    }

    let report = check_soundness(&sat, &alg);
    r.push(Check::new(
        "lk.soundness",
        report.is_sound(),
        format!(
            "{} pairs, {} violations",
            report.pairs_checked,
            report.violations.len()
        ),
    ));
    let semi = fixtures::load("semilattice");
    let semi_sat = run(&semi, 2);
    let quotient = FiniteAlgebra::quotient(&semi_sat);
    let report = check_soundness(&semi_sat, &quotient);
    r.push(Check::new(
        "semilattice.soundness",
        report.is_sound() && quotient.is_total(),
        format!(
            "{} classes, {} violations",
            semi_sat.class_count(),
            report.violations.len()
        ),
    ));

    let f: Vec<Dist> = space.points().iter().map(|p| dirac(p)).collect();
    let fx = free_extension(&space, &f, &alg, &sat);
    r.push(Check::new(
        "lk.freeness",
        fx.as_ref().is_ok_and(|fx| fx.is_ok()),
        match &fx {
            Ok(fx) => format!(
                "{} unit, {} homomorphism, {} expansive failures",
                fx.unit_failures.len(),
                fx.homomorphism_failures.len(),
                fx.expansive.len()
            ),
            Err(e) => e.to_string(),
        },
    ));

    let unit_map = unit(&space, &sat);
    r.push(Check::new(
        "lk.unit.isometry",
        unit_map.as_ref().is_ok_and(SpaceMap::is_isometry),
        "",
    ));

    let disc = fixtures::load("discrete");
    for depth in 0..=2 {
        let s = run(&disc, depth);
        let c = s.class_count();
        let ab = s
            .derived_distance(&term(&disc, "a"), &term(&disc, "b"))
            .ok();
        r.push(Check::new(
            &format!("discrete.degenerate.depth{depth}"),
            degenerate_except_points(&s) && ab == Some(UnitValue::from_ratio(1, 4)),
            format!("{c} classes"),
        ));
    }

    let ck = fixtures::load("convex_kantorovich");
    let ck_rule = fixtures::load("convex_kantorovich_rule");
    let a = run(&ck, 1);
    let b = run(&ck_rule, 1);
    let same = a.representatives() == b.representatives() && a.matrix() == b.matrix();
    r.push(Check::new(
        "kantorovich.rule_as_lifting",
        same,
        format!("{} classes", a.class_count()),
    ));

    for p in [ratio(1, 4), half(), ratio(2, 3)] {
        let u = UnitValue::new(p.clone()).expect("proper");
        let l = Lifting::lk(u.clone()).expect("proper");
        let k = Lifting::kantorovich(u).expect("proper");
        let subsets = all_subsets(space.points());
        let ok = subsets.iter().all(|s| {
            check_embedding_preservation(&l, &space, s).unwrap_or(false)
                && check_embedding_preservation(&k, &space, s).unwrap_or(false)
        });
        r.push(Check::new(
            &format!("liftings.embedding.p={}", crate::unit::format_rational(&p)),
            ok,
            format!("{} subsets", subsets.len()),
        ));
    }
    r
}

/// Classes are at 0 from themselves and 1 from everything else, except
/// pairs of points, which keep their given distance.
fn degenerate_except_points(s: &SaturationResult) -> bool {
    let c = s.class_count();
    (0..c).all(|i| {
        (0..c).all(|j| {
            let v = s.class_distance(i, j);
            let points = matches!(s.representative(i), Term::Const(_))
                && matches!(s.representative(j), Term::Const(_));
            if i == j {
                v.is_zero()
            } else {
                points || v.is_one()
            }
        })
    })
}

pub(crate) fn all_subsets(points: &[String]) -> Vec<Vec<String>> {
    (1u32..(1 << points.len()))
        .map(|mask| {
            points
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, p)| p.clone())
                .collect()
        })
        .collect()
}

/// Saturates at `depth` with `closure` rounds of parameter closure and
/// compares every pair of declared-universe terms with the ŁK distance
/// of their distributions.
pub fn free_model_check(file: &TheoryFile, depth: usize, closure: usize) -> (bool, String) {
    let space = file.space.clone().expect("theory with a space");
    let cfg = SaturationConfig {
        param_closure: closure,
        ..SaturationConfig::with_depth(depth)
    };
    let sat = match saturate(&extended(file), &cfg) {
        Ok(s) => s,
        Err(e) => return (false, e.to_string()),
    };
    let universe = sat.declared_universe();
    let dists: Vec<Dist> = universe
        .iter()
        .map(|t| term_to_distribution(t, &space).expect("convex term"))
        .collect();
    let mut bad = Vec::new();
    for (i, s) in universe.iter().enumerate() {
        for (j, t) in universe.iter().enumerate() {
            let derived = sat.derived_distance(s, t).expect("universe term");
            let oracle = lk_distance(&space, &dists[i], &dists[j]).expect("atoms of the space");
            let same = sat.same_class(s, t).expect("universe term");
            if derived != oracle || same != (dists[i] == dists[j]) {
                bad.push(format!("{s} | {t}: {derived} vs {oracle}"));
            }
        }
    }
    let ok = bad.is_empty() && sat.fixpoint_reached;
    let witness = match bad.first() {
        Some(b) => format!("{} mismatches, first {b}", bad.len()),
        None => format!("{} terms, {} classes", universe.len(), sat.class_count()),
    };
    (ok, witness)
}

pub fn props_suite(seed: u64, samples: usize) -> Report {
    let mut r = Report::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dmet = MetricKind::named(KindName::DMet);
    let met = MetricKind::named(KindName::Met);

    let mut fails = 0;
    for _ in 0..samples {
        let n = rng.gen_range(1..=5);
        let s = gmet::random_space(dmet, n, 12, &mut rng);
        let [x, y, z] = [0; 3].map(|_| random_dist(s.points(), 24, &mut rng));
        let d = |a: &Dist, b: &Dist| lk_distance(&s, a, b).expect("atoms").into_rational();
        if d(&x, &y) != d(&y, &x) || d(&x, &z) > d(&x, &y) + d(&y, &z) {
            fails += 1;
        }
    }
    r.push(Check::new(
        "props.lk.diffuse",
        fails == 0,
        format!("{fails} of {samples}"),
    ));

    let mut fails = 0;
    for k in 0..samples {
        let p = [ratio(1, 4), half(), ratio(2, 3)][k % 3].clone();
        let n = rng.gen_range(1..=5);
        let s = gmet::random_space(dmet, n, 12, &mut rng);
        let [m1, n1, m2, n2] = [0; 4].map(|_| random_dist(s.points(), 24, &mut rng));
        let d = |a: &Dist, b: &Dist| lk_distance(&s, a, b).expect("atoms").into_rational();
        let lhs = d(
            &convex_combine(&p, &m1, &n1).expect("proper"),
            &convex_combine(&p, &m2, &n2).expect("proper"),
        );
        let rhs = lk_bilinear(
            &p,
            &[[d(&m1, &m2), d(&m1, &n2)], [d(&n1, &m2), d(&n1, &n2)]],
        );
        if lhs != rhs {
            fails += 1;
        }
    }
    r.push(Check::new(
        "props.lk.bilinear",
        fails == 0,
        format!("{fails} of {samples}"),
    ));

    let mut fails = 0;
    for k in 0..samples {
        let p = [ratio(1, 4), half(), ratio(2, 3)][k % 3].clone();
        let n = rng.gen_range(1..=4);
        let s = gmet::random_space(met, n, 12, &mut rng);
        let [m1, n1, m2, n2] = [0; 4].map(|_| random_dist(s.points(), 12, &mut rng));
        let d = |a: &Dist, b: &Dist| {
            kantorovich_distance(&s, a, b)
                .expect("atoms")
                .into_rational()
        };
        let lhs = d(
            &convex_combine(&p, &m1, &n1).expect("proper"),
            &convex_combine(&p, &m2, &n2).expect("proper"),
        );
        let q = Rational::from_integer(1.into()) - &p;
        if lhs > &p * d(&m1, &m2) + q * d(&n1, &n2) {
            fails += 1;
        }
    }
    r.push(Check::new(
        "props.kantorovich.rule",
        fails == 0,
        format!("{fails} of {samples}"),
    ));

    let mut fails = 0;
    for _ in 0..samples {
        let n = rng.gen_range(1..=4);
        let s = gmet::random_space(met, n, 6, &mut rng);
        let small = |rng: &mut ChaCha8Rng| loop {
            let d = random_dist(s.points(), 6, rng);
            if d.support_len() <= 3 {
                return d;
            }
        };
        let (x, y) = (small(&mut rng), small(&mut rng));
        if kantorovich_distance(&s, &x, &y).ok() != kantorovich_brute_force(&s, &x, &y).ok() {
            fails += 1;
        }
    }
    r.push(Check::new(
        "props.kantorovich.exact",
        fails == 0,
        format!("{fails} of {samples}"),
    ));

    let mut fails = 0;
    for name in KindName::ALL {
        let kind = MetricKind::named(name);
        for _ in 0..samples / 10 + 1 {
            let a = gmet::random_space(kind, rng.gen_range(1..=3), 8, &mut rng);
            let b = gmet::random_space(kind, rng.gen_range(1..=3), 8, &mut rng);
            let prod = gmet::product(&[a.clone(), b.clone()]).expect("same kind");
            let coprod = gmet::coproduct(&[a, b]).expect("same kind");
            if !gmet::validate_space(&prod).is_valid() || !gmet::validate_space(&coprod).is_valid()
            {
                fails += 1;
            }
        }
    }
    r.push(Check::new(
        "props.product_coproduct",
        fails == 0,
        format!("{fails} failures"),
    ));

    let mut fails = 0;
    for k in 0..samples / 4 + 1 {
        let p = UnitValue::new([ratio(1, 4), half(), ratio(2, 3)][k % 3].clone()).expect("proper");
        let kind = if k % 2 == 0 { dmet } else { met };
        let s = gmet::random_space(kind, rng.gen_range(1..=4), 12, &mut rng);
        let lifts = [
            Lifting::lk(p.clone()).expect("proper"),
            Lifting::kantorovich(p).expect("proper"),
        ];
        for l in &lifts {
            for sub in all_subsets(s.points()) {
                if !check_embedding_preservation(l, &s, &sub).unwrap_or(false) {
                    fails += 1;
                }
            }
        }
    }
    r.push(Check::new(
        "props.liftings.embedding",
        fails == 0,
        format!("{fails} failures"),
    ));
    r
}

/// The saturation runs needed for the monad laws over one base theory.
pub struct MonadTower {
    pub base: Theory,
    pub space: FiniteSpace,
    /// `T_k A` for `k = 0..=3`.
    pub levels: Vec<SaturationResult>,
}

impl MonadTower {
    pub fn new(file: &TheoryFile, max_depth: usize) -> Self {
        let space = file.space.clone().expect("theory with a space");
        let base = file.theory.clone();
        let levels = (0..=max_depth).map(|k| over(&base, &space, k)).collect();
        Self {
            base,
            space,
            levels,
        }
    }

    /// `T_depth` over the quotient space of `r`.
    pub fn over_quotient(&self, r: &SaturationResult, depth: usize) -> SaturationResult {
        over(&self.base, &r.quotient_space(), depth)
    }
}

fn over(base: &Theory, space: &FiniteSpace, depth: usize) -> SaturationResult {
    let th = extend_by_space(base, space).expect("fresh constants");
    saturate(&th, &SaturationConfig::with_depth(depth)).expect("small tower")
}

fn compare(id: &str, got: &[Option<usize>], want: &[Option<usize>]) -> Check {
    let bad: Vec<usize> = (0..got.len())
        .filter(|&i| got[i].is_none() || got[i] != want[i])
        .collect();
    Check::new(
        id,
        bad.is_empty(),
        match bad.first() {
            Some(i) => format!("{} mismatches, first class {i}", bad.len()),
            None => format!("{} classes", got.len()),
        },
    )
}

pub fn monad_suite() -> Report {
    monad_checks(&fixtures::load("convex_kantorovich"))
}

/// Left and right unit, associativity and naturality at inner and outer
/// depth 1.
pub fn monad_checks(file: &TheoryFile) -> Report {
    let mut r = Report::default();
    let tower = MonadTower::new(file, 3);
    let [t0, t1, t2, t3] = [0, 1, 2, 3].map(|k| &tower.levels[k]);

    // left unit: μ ∘ η_{TA} = id on T_1 A (seen inside T_2 A)
    let outer = tower.over_quotient(t1, 1);
    let mu = flatten(&outer, t1, t2);
    let inc = embed(t1, t2);
    let got: Vec<Option<usize>> = (0..t1.class_count())
        .map(|x| {
            outer
                .constant_class(&class_point(x))
                .and_then(|y| mu.get(y))
        })
        .collect();
    r.push(compare("monad.left_unit", &got, &inc.table));

    // right unit: μ ∘ T(η) = id on T_1 A
    let outer0 = tower.over_quotient(t0, 1);
    let t_eta = map_unit(t1, t0, &outer0);
    let mu0 = flatten(&outer0, t0, t1);
    let got: Vec<Option<usize>> = t_eta
        .table
        .iter()
        .map(|y| y.and_then(|y| mu0.get(y)))
        .collect();
    let id: Vec<Option<usize>> = (0..t1.class_count()).map(Some).collect();
    r.push(compare("monad.right_unit", &got, &id));

    // associativity on T T T A: μ ∘ μ_T = μ ∘ T(μ)
    let outer2 = tower.over_quotient(t1, 2);
    let w = tower.over_quotient(&outer, 1);
    let mu_t = flatten(&w, &outer, &outer2);
    let mu_outer2 = flatten(&outer2, t1, t3);
    let left: Vec<Option<usize>> = mu_t
        .table
        .iter()
        .map(|y| y.and_then(|y| mu_outer2.get(y)))
        .collect();
    let mu_a: Vec<usize> = mu
        .table
        .iter()
        .map(|y| y.expect("depth 1 over depth 1 fits depth 2"))
        .collect();
    let f = SpaceMap::new(outer.quotient_space(), t2.quotient_space(), mu_a).expect("total");
    let v = tower.over_quotient(t2, 1);
    let t_mu = map_terms(&f, &w, &v);
    let mu_v = flatten(&v, t2, t3);
    let right: Vec<Option<usize>> = t_mu
        .table
        .iter()
        .map(|y| y.and_then(|y| mu_v.get(y)))
        .collect();
    r.push(compare("monad.associativity", &left, &right));

    let maps = [&mu, &mu0, &mu_t, &mu_outer2, &mu_v, &t_mu, &t_eta];
    r.push(Check::new(
        "monad.well_defined",
        maps.iter().all(|m| m.is_well_defined()),
        "",
    ));
    r.push(Check::new(
        "monad.nonexpansive",
        maps.iter().all(|m| m.is_nonexpansive()),
        "",
    ));

    // naturality: T(f) ∘ η = η ∘ f, for the identity and a collapse
    let space = &tower.space;
    let one = gmet::terminal(space.kind());
    let collapse = SpaceMap::new(space.clone(), one.clone(), vec![0; space.len()]).expect("total");
    let targets = [
        (SpaceMap::identity(space.clone()), t1.clone()),
        (collapse, over(&tower.base, &one, 1)),
    ];
    let mut ok = true;
    for (f, dst) in &targets {
        let tf = map_terms(f, t1, dst);
        let (Ok(u_src), Ok(u_dst)) = (unit(space, t1), unit(&f.dst, dst)) else {
            ok = false;
            continue;
        };
        ok &= (0..space.len()).all(|a| tf.get(u_src.image(a)) == Some(u_dst.image(f.image(a))));
        ok &= tf.is_well_defined() && tf.is_nonexpansive();
    }
    let collapsed = map_terms(&targets[1].0, t1, &targets[1].1);
    r.push(Check::new("monad.naturality", ok, ""));
    r.push(Check::new(
        "monad.collapse_single_class",
        targets[1].1.class_count() == 1 && collapsed.table.iter().all(|c| *c == Some(0)),
        format!("{} classes", targets[1].1.class_count()),
    ));
    r
}
