//! Finitely supported distributions with exact ŁK and Kantorovich distances.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::{Rng, RngCore};
use thiserror::Error;

use crate::freealg::{Algebra, AlgebraError};
use crate::gmet::{Axiom, FiniteSpace, KindName, MetricKind};
use crate::liftings::Lifting;
use crate::terms::{Symbol, Term};
use crate::transport::{self, TransportSolution};
use crate::unit::{format_rational, ratio, Rational, UnitValue};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistError {
    #[error("empty distribution")]
    Empty,
    #[error("weight of `{0}` is not positive")]
    NonPositive(String),
    #[error("weights sum to {0}, not 1")]
    NotNormalized(String),
    #[error("support atom `{0}` is not a point of the space")]
    UnknownAtom(String),
    #[error("mixing parameter {0} is not strictly between 0 and 1")]
    ParamRange(String),
    #[error("symbol `{0}` is not a convex combination")]
    ForeignSymbol(String),
    #[error("variable `{0}` in a ground term")]
    Variable(String),
    #[error("the ŁK model needs a diffuse metric space, got kind {0}")]
    KindRejected(MetricKind),
    #[error("transport certificate failed: {0}")]
    Certificate(String),
    #[error("{0} coupling cells exceed the brute-force limit")]
    TooLarge(usize),
}

/// A finitely supported probability distribution over named atoms.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dist {
    weights: BTreeMap<String, Rational>,
}

impl Dist {
    /// Repeated atoms have their weights added.
    pub fn new(weights: Vec<(String, Rational)>) -> Result<Self, DistError> {
        let mut map: BTreeMap<String, Rational> = BTreeMap::new();
        for (a, w) in weights {
            if !w.is_positive() {
                return Err(DistError::NonPositive(a));
            }
            *map.entry(a).or_insert_with(Rational::zero) += w;
        }
        if map.is_empty() {
            return Err(DistError::Empty);
        }
        let total: Rational = map.values().sum();
        if !total.is_one() {
            return Err(DistError::NotNormalized(format_rational(&total)));
        }
        Ok(Self { weights: map })
    }

    pub fn weight(&self, atom: &str) -> Rational {
        self.weights
            .get(atom)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = (&String, &Rational)> {
        self.weights.iter()
    }

    pub fn support_len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_dirac(&self) -> bool {
        self.weights.len() == 1
    }

    fn indexed(&self, space: &FiniteSpace) -> Result<Vec<(usize, Rational)>, DistError> {
        self.weights
            .iter()
            .map(|(a, w)| {
                space
                    .index_of(a)
                    .map(|i| (i, w.clone()))
                    .ok_or_else(|| DistError::UnknownAtom(a.clone()))
            })
            .collect()
    }
}

impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (a, w)) in self.weights.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}:{}", format_rational(w))?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

pub fn dirac(a: &str) -> Dist {
    Dist {
        weights: [(a.to_string(), Rational::one())].into(),
    }
}

/// `p·mu + (1-p)·nu`.
pub fn convex_combine(p: &Rational, mu: &Dist, nu: &Dist) -> Result<Dist, DistError> {
    if !p.is_positive() || p >= &Rational::one() {
        return Err(DistError::ParamRange(format_rational(p)));
    }
    let q = Rational::one() - p;
    let mut weights = BTreeMap::new();
    for (a, w) in &mu.weights {
        *weights.entry(a.clone()).or_insert_with(Rational::zero) += p * w;
    }
    for (a, w) in &nu.weights {
        *weights.entry(a.clone()).or_insert_with(Rational::zero) += &q * w;
    }
    Ok(Dist { weights })
}

/// `Σ_x Σ_y mu(x) nu(y) d(x,y)`.
pub fn lk_distance(space: &FiniteSpace, mu: &Dist, nu: &Dist) -> Result<UnitValue, DistError> {
    let (m, n) = (mu.indexed(space)?, nu.indexed(space)?);
    let mut total = Rational::zero();
    for (i, wi) in &m {
        for (j, wj) in &n {
            total += wi * wj * space.d(*i, *j).as_rational();
        }
    }
    Ok(UnitValue::new(total).expect("convex combination of unit values"))
}

/// Minimum of `Σ γ(x,y) d(x,y)` over couplings, with a verified
/// strong-duality certificate.
pub fn kantorovich_with_certificate(
    space: &FiniteSpace,
    mu: &Dist,
    nu: &Dist,
) -> Result<(UnitValue, TransportSolution), DistError> {
    let (m, n) = (mu.indexed(space)?, nu.indexed(space)?);
    let supply: Vec<Rational> = m.iter().map(|(_, w)| w.clone()).collect();
    let demand: Vec<Rational> = n.iter().map(|(_, w)| w.clone()).collect();
    let cost = |i: usize, j: usize| space.d(m[i].0, n[j].0).as_rational().clone();
    let sol = transport::solve(&supply, &demand, &cost);
    transport::certify(&sol, &supply, &demand, &cost)
        .map_err(|e| DistError::Certificate(e.to_string()))?;
    let value = UnitValue::new(sol.value.clone()).expect("convex combination of unit values");
    Ok((value, sol))
}

pub fn kantorovich_distance(
    space: &FiniteSpace,
    mu: &Dist,
    nu: &Dist,
) -> Result<UnitValue, DistError> {
    kantorovich_with_certificate(space, mu, nu).map(|(v, _)| v)
}

/// Largest `|supp mu| · |supp nu|` accepted by [`kantorovich_brute_force`].
pub const BRUTE_FORCE_MAX_CELLS: usize = 16;

/// Kantorovich distance by enumerating every vertex of the coupling
/// polytope: each basic solution is a spanning tree of the bipartite
/// support graph, filled in leaf by leaf. Slow, for checking the solver.
pub fn kantorovich_brute_force(
    space: &FiniteSpace,
    mu: &Dist,
    nu: &Dist,
) -> Result<UnitValue, DistError> {
    let (m, n) = (mu.indexed(space)?, nu.indexed(space)?);
    let (rows, cols) = (m.len(), n.len());
    let cells = rows * cols;
    if cells > BRUTE_FORCE_MAX_CELLS {
        return Err(DistError::TooLarge(cells));
    }
    let basis = rows + cols - 1;
    let mut best: Option<Rational> = None;
    for mask in 0u32..(1 << cells) {
        if mask.count_ones() as usize != basis {
            continue;
        }
        let chosen: Vec<(usize, usize)> = (0..cells)
            .filter(|c| mask & (1 << c) != 0)
            .map(|c| (c / cols, c % cols))
            .collect();
        if let Some(flow) = fill_tree(&chosen, &m, &n) {
            let cost: Rational = flow
                .iter()
                .map(|((i, j), w)| w * space.d(m[*i].0, n[*j].0).as_rational())
                .sum();
            if best.as_ref().is_none_or(|b| &cost < b) {
                best = Some(cost);
            }
        }
    }
    let best = best.expect("the product coupling has a vertex below it");
    Ok(UnitValue::new(best).expect("convex combination of unit values"))
}

/// Solves the marginal constraints on a candidate tree by peeling rows and
/// columns with a single open cell. `None` if the cells contain a cycle or
/// the solution is negative.
fn fill_tree(
    cells: &[(usize, usize)],
    m: &[(usize, Rational)],
    n: &[(usize, Rational)],
) -> Option<Vec<((usize, usize), Rational)>> {
    let mut row_left: Vec<Rational> = m.iter().map(|(_, w)| w.clone()).collect();
    let mut col_left: Vec<Rational> = n.iter().map(|(_, w)| w.clone()).collect();
    let mut open: Vec<(usize, usize)> = cells.to_vec();
    let mut flow = Vec::with_capacity(cells.len());
    while !open.is_empty() {
        let leaf = open.iter().position(|&(i, j)| {
            open.iter().filter(|c| c.0 == i).count() == 1
                || open.iter().filter(|c| c.1 == j).count() == 1
        })?;
        let (i, j) = open.swap_remove(leaf);
        let w = if open.iter().all(|c| c.0 != i) {
            row_left[i].clone()
        } else {
            col_left[j].clone()
        };
        if w.is_negative() {
            return None;
        }
        row_left[i] -= &w;
        col_left[j] -= &w;
        flow.push(((i, j), w));
    }
    (row_left.iter().chain(&col_left).all(Zero::is_zero)).then_some(flow)
}

/// `p²c00 + p(1-p)c01 + (1-p)p c10 + (1-p)²c11`.
pub fn lk_bilinear(p: &Rational, c: &[[Rational; 2]; 2]) -> Rational {
    let q = Rational::one() - p;
    p * p * &c[0][0] + p * &q * &c[0][1] + &q * p * &c[1][0] + &q * &q * &c[1][1]
}

/// Optimal transport between `p·δx0 + (1-p)·δx1` and `p·δy0 + (1-p)·δy1`
/// with costs `c[i][j] = d(xi, yj)`. Couplings form a segment, so the
/// optimum is at one of its two ends.
pub fn kant_pair_closed(p: &Rational, c: &[[Rational; 2]; 2]) -> Rational {
    let q = Rational::one() - p;
    let diagonal = p * &c[0][0] + &q * &c[1][1];
    let cross = if p <= &q {
        p * (&c[0][1] + &c[1][0]) + (&q - p) * &c[1][1]
    } else {
        (p - &q) * &c[0][0] + &q * (&c[0][1] + &c[1][0])
    };
    diagonal.min(cross)
}

fn mixed(p: &Rational, a: &str, b: &str) -> Result<Dist, DistError> {
    convex_combine(p, &dirac(a), &dirac(b))
}

/// `L_ŁK^p(d)((a1,a2),(b1,b2))`; also checks the closed bilinear form.
pub fn lk_lift_value(
    p: &Rational,
    space: &FiniteSpace,
    (a1, a2): (&str, &str),
    (b1, b2): (&str, &str),
) -> Result<UnitValue, DistError> {
    let v = lk_distance(space, &mixed(p, a1, a2)?, &mixed(p, b1, b2)?)?;
    let c = |x: &str, y: &str| space.distance(x, y).map(|u| u.as_rational().clone());
    let closed = lk_bilinear(
        p,
        &[
            [c(a1, b1).unwrap(), c(a1, b2).unwrap()],
            [c(a2, b1).unwrap(), c(a2, b2).unwrap()],
        ],
    );
    assert_eq!(
        v.as_rational(),
        &closed,
        "ŁK lifting differs from its bilinear form"
    );
    Ok(v)
}

/// `L_K^p(d)((a1,a2),(b1,b2))` via the transport solver.
pub fn kant_lift_value(
    p: &Rational,
    space: &FiniteSpace,
    (a1, a2): (&str, &str),
    (b1, b2): (&str, &str),
) -> Result<UnitValue, DistError> {
    kantorovich_distance(space, &mixed(p, a1, a2)?, &mixed(p, b1, b2)?)
}

/// Evaluates a ground term built from points of `space` and binary
/// parametric symbols, reading each symbol as a convex combination.
pub fn term_to_distribution(t: &Term, space: &FiniteSpace) -> Result<Dist, DistError> {
    match t {
        Term::Var(v) => Err(DistError::Variable(v.clone())),
        Term::Const(c) => {
            if space.index_of(c).is_some() {
                Ok(dirac(c))
            } else {
                Err(DistError::UnknownAtom(c.clone()))
            }
        }
        Term::App(s, args) => {
            let p = s
                .param_value()
                .filter(|_| args.len() == 2)
                .ok_or_else(|| DistError::ForeignSymbol(s.to_string()))?;
            let l = term_to_distribution(&args[0], space)?;
            let r = term_to_distribution(&args[1], space)?;
            convex_combine(p, &l, &r)
        }
    }
}

/// A random distribution over `atoms` whose weights are multiples of
/// `1/k` for a random `k ≤ max_den`.
pub fn random_dist<R: Rng + ?Sized>(atoms: &[String], max_den: u32, rng: &mut R) -> Dist {
    assert!(!atoms.is_empty() && max_den > 0);
    let k = rng.gen_range(1..=max_den);
    let mut counts = vec![0u32; atoms.len()];
    for _ in 0..k {
        counts[rng.gen_range(0..atoms.len())] += 1;
    }
    let weights = atoms
        .iter()
        .zip(counts)
        .filter(|(_, c)| *c > 0)
        .map(|(a, c)| (a.clone(), ratio(c as i64, k as i64)))
        .collect();
    Dist::new(weights).expect("composition of k")
}

/// Default denominator bound of [`random_dist`] samples.
pub const SAMPLE_MAX_DEN: u32 = 24;

/// Which distance a [`DistAlgebra`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistMetric {
    Lk,
    Kantorovich,
}

/// The algebra of distributions on a finite space with `+_p` operations.
#[derive(Debug, Clone)]
pub struct DistAlgebra {
    space: FiniteSpace,
    op: String,
    params: BTreeSet<Rational>,
    metric: DistMetric,
    kind: MetricKind,
}

/// `(D(A), ŁK, +_p)` for a diffuse metric space.
pub fn lk_algebra(
    space: &FiniteSpace,
    op: &str,
    params: &[Rational],
) -> Result<DistAlgebra, DistError> {
    let k = space.kind();
    if !(k.has(Axiom::Symmetry) && k.has(Axiom::Triangle)) || !space.validate().is_valid() {
        return Err(DistError::KindRejected(k));
    }
    dist_algebra(
        space,
        op,
        params,
        DistMetric::Lk,
        MetricKind::named(KindName::DMet),
    )
}

/// `(D(A), K, +_p)`; the carrier keeps the kind of the space.
pub fn kantorovich_algebra(
    space: &FiniteSpace,
    op: &str,
    params: &[Rational],
) -> Result<DistAlgebra, DistError> {
    dist_algebra(space, op, params, DistMetric::Kantorovich, space.kind())
}

fn dist_algebra(
    space: &FiniteSpace,
    op: &str,
    params: &[Rational],
    metric: DistMetric,
    kind: MetricKind,
) -> Result<DistAlgebra, DistError> {
    for p in params {
        if !p.is_positive() || p >= &Rational::one() {
            return Err(DistError::ParamRange(format_rational(p)));
        }
    }
    Ok(DistAlgebra {
        space: space.clone(),
        op: op.to_string(),
        params: params.iter().cloned().collect(),
        metric,
        kind,
    })
}

impl DistAlgebra {
    pub fn space(&self) -> &FiniteSpace {
        &self.space
    }

    pub fn metric(&self) -> DistMetric {
        self.metric
    }
}

impl Algebra for DistAlgebra {
    type Elem = Dist;

    fn kind(&self) -> MetricKind {
        self.kind
    }

    fn distance(&self, a: &Dist, b: &Dist) -> Result<UnitValue, AlgebraError> {
        let r = match self.metric {
            DistMetric::Lk => lk_distance(&self.space, a, b),
            DistMetric::Kantorovich => kantorovich_distance(&self.space, a, b),
        };
        r.map_err(AlgebraError::from)
    }

    fn operate(&self, sym: &Symbol, args: &[Dist]) -> Result<Dist, AlgebraError> {
        let p = sym
            .param_value()
            .filter(|_| sym.name == self.op && args.len() == 2)
            .ok_or_else(|| AlgebraError::UnknownSymbol(sym.to_string()))?;
        Ok(convex_combine(p, &args[0], &args[1])?)
    }

    fn constant(&self, name: &str) -> Result<Dist, AlgebraError> {
        if self.space.index_of(name).is_some() {
            Ok(dirac(name))
        } else {
            Err(AlgebraError::UnknownConstant(name.to_string()))
        }
    }

    fn symbols(&self) -> Vec<(Symbol, Lifting)> {
        self.params
            .iter()
            .map(|p| {
                let u = UnitValue::new(p.clone()).expect("checked");
                let l = match self.metric {
                    DistMetric::Lk => Lifting::lk(u),
                    DistMetric::Kantorovich => Lifting::kantorovich(u),
                }
                .expect("proper parameter");
                (Symbol::with_param(&self.op, p.clone()), l)
            })
            .collect()
    }

    fn elements(&self) -> Option<Vec<Dist>> {
        None
    }

    fn generators(&self) -> Vec<Dist> {
        self.space.points().iter().map(|a| dirac(a)).collect()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Dist {
        random_dist(self.space.points(), SAMPLE_MAX_DEN, rng)
    }
}
