//! Algebras for a lifted signature, Horn-clause satisfaction, and the term
//! monad on saturated quotients (unit, multiplication, functor action,
//! free extension).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::Hash;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::distributions::DistError;
use crate::expr::Expr;
use crate::gmet::{FiniteSpace, MetricKind, SpaceError, SpaceMap};
use crate::liftings::Lifting;
use crate::saturation::{class_point, SaturationResult};
use crate::terms::{evaluate, instantiate_params, Symbol, Term};
use crate::theory::{param_binders, HornClause};
use crate::unit::{format_rational, Rational, UnitValue};

pub const DEFAULT_SAMPLES: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("variable `{0}` is unassigned")]
    Unassigned(String),
    #[error("the algebra has no operation `{0}`")]
    UnknownSymbol(String),
    #[error("the algebra has no constant `{0}`")]
    UnknownConstant(String),
    #[error("`{0}` is undefined in the bounded quotient")]
    Undefined(String),
    #[error("operation `{symbol}` is not total: no value at {tuple}")]
    NotTotal { symbol: String, tuple: String },
    #[error("element index {0} is out of range")]
    Element(usize),
    #[error("exhaustive checking needs a finite algebra")]
    NotFinite,
    #[error("bound `{0}` does not evaluate")]
    Bound(String),
    #[error("the model does not satisfy the theory: {0}")]
    ModelMismatch(String),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// A quantitative algebra: a carrier with a distance, interpretations of
/// the operation instances and of the constants.
pub trait Algebra {
    type Elem: Clone + Eq + Hash + fmt::Debug;

    fn kind(&self) -> MetricKind;
    fn distance(&self, a: &Self::Elem, b: &Self::Elem) -> Result<UnitValue, AlgebraError>;
    fn operate(&self, sym: &Symbol, args: &[Self::Elem]) -> Result<Self::Elem, AlgebraError>;
    fn constant(&self, name: &str) -> Result<Self::Elem, AlgebraError>;
    /// Operation instances with the lifting each is nonexpansive for.
    fn symbols(&self) -> Vec<(Symbol, Lifting)>;
    /// The whole carrier, when it is finite.
    fn elements(&self) -> Option<Vec<Self::Elem>>;
    /// Distinguished elements tried first by sampled checks.
    fn generators(&self) -> Vec<Self::Elem>;
    fn sample(&self, rng: &mut dyn RngCore) -> Self::Elem;
}

/// One operation of a [`FiniteAlgebra`]: symbol, arity, lifting and its
/// table from argument tuples to results.
pub type OpDef = (Symbol, usize, Lifting, HashMap<Vec<usize>, usize>);

/// An operation with two argument tuples it fails to be nonexpansive on.
pub type Expansion<E> = (Symbol, Vec<E>, Vec<E>);

/// A tabulated algebra over a finite space. Elements are point indices.
#[derive(Debug, Clone)]
pub struct FiniteAlgebra {
    space: FiniteSpace,
    ops: BTreeMap<Symbol, (Lifting, HashMap<Vec<usize>, usize>)>,
    arities: BTreeMap<Symbol, usize>,
    constants: BTreeMap<String, usize>,
}

impl FiniteAlgebra {
    /// Builds the algebra and checks that every table is total.
    pub fn new(
        space: FiniteSpace,
        ops: Vec<OpDef>,
        constants: BTreeMap<String, usize>,
    ) -> Result<Self, AlgebraError> {
        let alg = Self::partial(space, ops, constants)?;
        for (sym, (_, table)) in &alg.ops {
            let n = alg.arities[sym];
            for t in crate::gmet::index_tuples(&vec![alg.space.len(); n]) {
                if !table.contains_key(&t) {
                    return Err(AlgebraError::NotTotal {
                        symbol: sym.to_string(),
                        tuple: format!("{t:?}"),
                    });
                }
            }
        }
        Ok(alg)
    }

    fn partial(
        space: FiniteSpace,
        ops: Vec<OpDef>,
        constants: BTreeMap<String, usize>,
    ) -> Result<Self, AlgebraError> {
        let n = space.len();
        let mut map = BTreeMap::new();
        let mut arities = BTreeMap::new();
        for (sym, arity, lifting, table) in ops {
            if let Some(bad) = table
                .iter()
                .flat_map(|(k, v)| k.iter().chain([v]))
                .find(|&&i| i >= n)
            {
                return Err(AlgebraError::Element(*bad));
            }
            arities.insert(sym.clone(), arity);
            map.insert(sym, (lifting, table));
        }
        if let Some(&bad) = constants.values().find(|&&i| i >= n) {
            return Err(AlgebraError::Element(bad));
        }
        Ok(Self {
            space,
            ops: map,
            arities,
            constants,
        })
    }

    /// The quotient term algebra of a saturation run. Applications that
    /// leave the bounded universe are undefined; see
    /// [`FiniteAlgebra::undefined_count`].
    pub fn quotient(r: &SaturationResult) -> Self {
        let space = r.quotient_space();
        let c = r.class_count();
        let ops = r
            .symbols()
            .iter()
            .map(|(sym, arity, lifting)| {
                let table = crate::gmet::index_tuples(&vec![c; *arity])
                    .into_iter()
                    .filter_map(|t| r.apply_symbol(sym, &t).map(|v| (t, v)))
                    .collect();
                (sym.clone(), *arity, lifting.clone(), table)
            })
            .collect();
        let constants = r
            .representatives()
            .iter()
            .flat_map(|t| t.constants())
            .filter_map(|name| r.constant_class(&name).map(|k| (name, k)))
            .collect();
        Self::partial(space, ops, constants).expect("indices come from the result")
    }

    pub fn space(&self) -> &FiniteSpace {
        &self.space
    }

    /// Number of argument tuples with no value, over all operations.
    pub fn undefined_count(&self) -> usize {
        self.ops
            .iter()
            .map(|(sym, (_, t))| self.space.len().pow(self.arities[sym] as u32) - t.len())
            .sum()
    }

    pub fn is_total(&self) -> bool {
        self.undefined_count() == 0
    }

    /// All pairs of defined applications that break `L`-nonexpansiveness,
    /// as `(symbol, s, t)`.
    pub fn nonexpansive_violations(&self) -> Vec<(Symbol, Vec<usize>, Vec<usize>)> {
        let mut out = Vec::new();
        for (sym, (lifting, table)) in &self.ops {
            let mut entries: Vec<(&Vec<usize>, &usize)> = table.iter().collect();
            entries.sort();
            for (s, fs) in &entries {
                for (t, ft) in &entries {
                    let bound = lifting.tuple_distance(&self.space, self.space.kind(), s, t);
                    if self.space.d(**fs, **ft) > &bound {
                        out.push((sym.clone(), (*s).clone(), (*t).clone()));
                    }
                }
            }
        }
        out
    }
}

impl Algebra for FiniteAlgebra {
    type Elem = usize;

    fn kind(&self) -> MetricKind {
        self.space.kind()
    }

    fn distance(&self, a: &usize, b: &usize) -> Result<UnitValue, AlgebraError> {
        if *a >= self.space.len() || *b >= self.space.len() {
            return Err(AlgebraError::Element((*a).max(*b)));
        }
        Ok(self.space.d(*a, *b).clone())
    }

    fn operate(&self, sym: &Symbol, args: &[usize]) -> Result<usize, AlgebraError> {
        let (_, table) = self
            .ops
            .get(sym)
            .ok_or_else(|| AlgebraError::UnknownSymbol(sym.to_string()))?;
        table.get(args).copied().ok_or_else(|| {
            let names: Vec<&str> = args
                .iter()
                .map(|&i| self.space.points().get(i).map_or("?", String::as_str))
                .collect();
            AlgebraError::Undefined(format!("{sym}({})", names.join(", ")))
        })
    }

    fn constant(&self, name: &str) -> Result<usize, AlgebraError> {
        self.constants
            .get(name)
            .copied()
            .ok_or_else(|| AlgebraError::UnknownConstant(name.to_string()))
    }

    fn symbols(&self) -> Vec<(Symbol, Lifting)> {
        self.ops
            .iter()
            .map(|(s, (l, _))| (s.clone(), l.clone()))
            .collect()
    }

    fn elements(&self) -> Option<Vec<usize>> {
        Some((0..self.space.len()).collect())
    }

    fn generators(&self) -> Vec<usize> {
        let mut g: Vec<usize> = self.constants.values().copied().collect();
        g.sort_unstable();
        g.dedup();
        g
    }

    fn sample(&self, rng: &mut dyn RngCore) -> usize {
        (rng.next_u64() % self.space.len().max(1) as u64) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    Exhaustive,
    /// Generator tuples first, then seeded random assignments.
    Sampled {
        samples: usize,
        seed: u64,
    },
}

impl CheckMode {
    pub fn sampled(seed: u64) -> Self {
        CheckMode::Sampled {
            samples: DEFAULT_SAMPLES,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict<E> {
    /// No counterexample among `checked` assignments whose premises held.
    /// `exhaustive` tells whether that is a proof.
    Holds {
        checked: usize,
        tried: usize,
        undefined: usize,
        exhaustive: bool,
    },
    Counterexample {
        assignment: Vec<(String, E)>,
        params: Vec<(String, Rational)>,
        /// The conclusion's actual distance (`None` for an equation).
        distance: Option<UnitValue>,
    },
    /// No assignment exists (empty carrier or no parameter instance).
    Vacuous(String),
}

impl<E> Verdict<E> {
    pub fn holds(&self) -> bool {
        !matches!(self, Verdict::Counterexample { .. })
    }
}

impl<E: fmt::Debug> fmt::Display for Verdict<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds {
                checked,
                tried,
                exhaustive,
                ..
            } => {
                let how = if *exhaustive { "exhaustive" } else { "sampled" };
                write!(
                    f,
                    "holds ({how}, {checked} of {tried} assignments met the premises)"
                )
            }
            Verdict::Counterexample {
                assignment,
                params,
                distance,
            } => {
                f.write_str("counterexample:")?;
                for (p, v) in params {
                    write!(f, " {p}={}", format_rational(v))?;
                }
                for (x, e) in assignment {
                    write!(f, " {x}={e:?}")?;
                }
                if let Some(d) = distance {
                    write!(f, " (distance {d})")?;
                }
                Ok(())
            }
            Verdict::Vacuous(why) => write!(f, "vacuously holds: {why}"),
        }
    }
}

fn parameter_instances<A: Algebra + ?Sized>(
    alg: &A,
    h: &HornClause,
) -> Vec<Vec<(String, Rational)>> {
    let binders = param_binders(h);
    let syms = alg.symbols();
    let domains: Vec<(String, Vec<Rational>)> = binders
        .iter()
        .map(|(v, op)| {
            let mut ps: Vec<Rational> = syms
                .iter()
                .filter(|(s, _)| &s.name == op)
                .filter_map(|(s, _)| s.param_value().cloned())
                .collect();
            ps.sort();
            ps.dedup();
            (v.clone(), ps)
        })
        .collect();
    let sizes: Vec<usize> = domains.iter().map(|(_, d)| d.len()).collect();
    crate::gmet::index_tuples(&sizes)
        .into_iter()
        .map(|idx| {
            domains
                .iter()
                .zip(idx)
                .map(|((v, d), i)| (v.clone(), d[i].clone()))
                .collect()
        })
        .collect()
}

enum Outcome {
    PremiseFailed,
    Undefined,
    Holds,
    Fails(Option<UnitValue>),
}

fn check_assignment<A: Algebra + ?Sized>(
    alg: &A,
    h: &HornClause,
    params: &[(String, Rational)],
    vars: &[String],
    vals: &[A::Elem],
) -> Result<Outcome, AlgebraError> {
    let env = |v: &str| vars.iter().position(|x| x == v).map(|i| vals[i].clone());
    let mut nums: Vec<(String, Rational)> = params.to_vec();
    let pl = |v: &str| params.iter().find(|(n, _)| n == v).map(|(_, r)| r.clone());
    let eval_side = |t: &Term| -> Result<Option<A::Elem>, AlgebraError> {
        let t = instantiate_params(t, &pl).ok_or_else(|| AlgebraError::Bound(t.to_string()))?;
        match evaluate(&t, alg, &env) {
            Ok(v) => Ok(Some(v)),
            Err(AlgebraError::Undefined(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    for p in &h.premises {
        let (Some(l), Some(r)) = (eval_side(p.lhs())?, eval_side(p.rhs())?) else {
            return Ok(Outcome::Undefined);
        };
        match p.eps() {
            None => {
                if l != r {
                    return Ok(Outcome::PremiseFailed);
                }
            }
            Some(Expr::Var(label)) if !nums.iter().any(|(n, _)| n == label) => {
                let d = alg.distance(&l, &r)?;
                nums.push((label.clone(), d.into_rational()));
            }
            Some(e) => {
                let bound = eval_bound(e, &nums)?;
                if alg.distance(&l, &r)?.as_rational() > &bound {
                    return Ok(Outcome::PremiseFailed);
                }
            }
        }
    }
    let c = &h.conclusion;
    let (Some(l), Some(r)) = (eval_side(c.lhs())?, eval_side(c.rhs())?) else {
        return Ok(Outcome::Undefined);
    };
    Ok(match c.eps() {
        None => {
            if l == r {
                Outcome::Holds
            } else {
                Outcome::Fails(None)
            }
        }
        Some(e) => {
            let bound = eval_bound(e, &nums)?;
            let d = alg.distance(&l, &r)?;
            if d.as_rational() <= &bound {
                Outcome::Holds
            } else {
                Outcome::Fails(Some(d))
            }
        }
    })
}

fn eval_bound(e: &Expr, nums: &[(String, Rational)]) -> Result<Rational, AlgebraError> {
    e.eval(&|v: &str| nums.iter().find(|(n, _)| n == v).map(|(_, r)| r.clone()))
        .map_err(|_| AlgebraError::Bound(e.to_string()))
}

/// Decides (exhaustively) or tests (by sampling) `alg ⊨ h`.
pub fn satisfies<A: Algebra + ?Sized>(
    alg: &A,
    h: &HornClause,
    mode: CheckMode,
) -> Result<Verdict<A::Elem>, AlgebraError> {
    let vars: Vec<String> = h.vars().into_iter().collect();
    let instances = parameter_instances(alg, h);
    if instances.is_empty() {
        return Ok(Verdict::Vacuous(
            "no parameter instance in the algebra".into(),
        ));
    }
    let assignments: Vec<Vec<A::Elem>> = match mode {
        CheckMode::Exhaustive => {
            let elems = alg.elements().ok_or(AlgebraError::NotFinite)?;
            if elems.is_empty() && !vars.is_empty() {
                return Ok(Verdict::Vacuous("the carrier is empty".into()));
            }
            crate::gmet::index_tuples(&vec![elems.len(); vars.len()])
                .into_iter()
                .map(|idx| idx.into_iter().map(|i| elems[i].clone()).collect())
                .collect()
        }
        CheckMode::Sampled { samples, seed } => sampled_assignments(alg, vars.len(), samples, seed),
    };
    if assignments.is_empty() {
        return Ok(Verdict::Vacuous("the carrier is empty".into()));
    }
    let (mut checked, mut tried, mut undefined) = (0, 0, 0);
    for params in &instances {
        for vals in &assignments {
            tried += 1;
            match check_assignment(alg, h, params, &vars, vals)? {
                Outcome::PremiseFailed => {}
                Outcome::Undefined => undefined += 1,
                Outcome::Holds => checked += 1,
                Outcome::Fails(distance) => {
                    return Ok(Verdict::Counterexample {
                        assignment: vars.iter().cloned().zip(vals.iter().cloned()).collect(),
                        params: params.clone(),
                        distance,
                    })
                }
            }
        }
    }
    Ok(Verdict::Holds {
        checked,
        tried,
        undefined,
        exhaustive: mode == CheckMode::Exhaustive,
    })
}

fn sampled_assignments<A: Algebra + ?Sized>(
    alg: &A,
    nvars: usize,
    samples: usize,
    seed: u64,
) -> Vec<Vec<A::Elem>> {
    let gens = alg.generators();
    let mut out: Vec<Vec<A::Elem>> = Vec::new();
    if !gens.is_empty() {
        let total = gens.len().checked_pow(nvars as u32).unwrap_or(usize::MAX);
        if total <= samples {
            out.extend(
                crate::gmet::index_tuples(&vec![gens.len(); nvars])
                    .into_iter()
                    .map(|idx| idx.into_iter().map(|i| gens[i].clone()).collect()),
            );
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < samples.max(1) {
        out.push((0..nvars).map(|_| alg.sample(&mut rng)).collect());
    }
    out
}

/// Samples pairs of argument tuples and reports those where an operation
/// is not nonexpansive for its lifting.
pub fn check_nonexpansive_sampled<A: Algebra + ?Sized>(
    alg: &A,
    samples: usize,
    seed: u64,
) -> Result<Vec<Expansion<A::Elem>>, AlgebraError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (sym, lifting) in alg.symbols() {
        let n = lifting.arity;
        for _ in 0..samples {
            let elems: Vec<A::Elem> = (0..2 * n).map(|_| alg.sample(&mut rng)).collect();
            let mut table = vec![vec![UnitValue::zero(); 2 * n]; 2 * n];
            for i in 0..2 * n {
                for j in 0..2 * n {
                    table[i][j] = alg.distance(&elems[i], &elems[j])?;
                }
            }
            let s: Vec<usize> = (0..n).collect();
            let t: Vec<usize> = (n..2 * n).collect();
            let bound = lifting.tuple_distance(&table, alg.kind(), &s, &t);
            let fs = alg.operate(&sym, &elems[..n])?;
            let ft = alg.operate(&sym, &elems[n..])?;
            if alg.distance(&fs, &ft)? > bound {
                out.push((sym.clone(), elems[..n].to_vec(), elems[n..].to_vec()));
            }
        }
    }
    Ok(out)
}

/// A map between the classes of two saturation results. Entries are
/// `None` where the image falls outside the target universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    pub table: Vec<Option<usize>>,
    /// Universe terms whose image disagrees with their class's image.
    pub ill_defined: Vec<String>,
    /// Class pairs whose images are further apart than they are.
    pub expansive: Vec<(usize, usize)>,
}

impl ClassMap {
    pub fn get(&self, class: usize) -> Option<usize> {
        self.table.get(class).copied().flatten()
    }

    pub fn partial_count(&self) -> usize {
        self.table.iter().filter(|e| e.is_none()).count()
    }

    pub fn is_total(&self) -> bool {
        self.partial_count() == 0
    }

    pub fn is_well_defined(&self) -> bool {
        self.ill_defined.is_empty()
    }

    pub fn is_nonexpansive(&self) -> bool {
        self.expansive.is_empty()
    }
}

/// Builds a class map by rewriting terms of `src` and looking them up in
/// `dst`. Every universe term is rewritten, so representative
/// independence is checked along the way.
fn class_map(
    src: &SaturationResult,
    dst: &SaturationResult,
    rewrite: &dyn Fn(&Term) -> Term,
) -> ClassMap {
    let table: Vec<Option<usize>> = src
        .representatives()
        .iter()
        .map(|t| dst.class_of(&rewrite(t)))
        .collect();
    let mut ill_defined = Vec::new();
    for t in src.universe() {
        let Some(k) = src.class_of(&t) else { continue };
        let image = dst.class_of(&rewrite(&t));
        if image.is_some() && table[k].is_some() && image != table[k] {
            ill_defined.push(t.to_string());
        }
    }
    let mut expansive = Vec::new();
    for i in 0..table.len() {
        for j in 0..table.len() {
            if let (Some(a), Some(b)) = (table[i], table[j]) {
                if dst.class_distance(a, b) > src.class_distance(i, j) {
                    expansive.push((i, j));
                }
            }
        }
    }
    ClassMap {
        table,
        ill_defined,
        expansive,
    }
}

/// The unit `a ↦ [a]` from a space into the quotient of a saturation run
/// over the theory extended by that space.
pub fn unit(space: &FiniteSpace, r: &SaturationResult) -> Result<SpaceMap, AlgebraError> {
    let table = space
        .points()
        .iter()
        .map(|p| {
            r.constant_class(p)
                .ok_or_else(|| AlgebraError::UnknownConstant(p.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SpaceMap::new(space.clone(), r.quotient_space(), table)?)
}

/// The multiplication: `outer` is saturated over the quotient space of
/// `mid` (constants `k0, k1, ...` naming `mid`'s classes); each outer
/// class is flattened by substituting `mid`'s representatives and looked
/// up in `inner`, a run over the same base space as `mid`, usually deeper.
pub fn flatten(
    outer: &SaturationResult,
    mid: &SaturationResult,
    inner: &SaturationResult,
) -> ClassMap {
    let subst = |t: &Term| {
        t.map_constants(&|c| match mid_class(c) {
            Some(k) if k < mid.class_count() => mid.representative(k).clone(),
            _ => Term::constant(c),
        })
    };
    class_map(outer, inner, &subst)
}

fn mid_class(name: &str) -> Option<usize> {
    name.strip_prefix('k')?.parse().ok()
}

/// The functor action `T(f)`: relabel constants along `f`, then look the
/// term up in `dst`.
pub fn map_terms(f: &SpaceMap, src: &SaturationResult, dst: &SaturationResult) -> ClassMap {
    let relabel = |t: &Term| {
        t.map_constants(&|c| match f.src.index_of(c) {
            Some(i) => Term::constant(&f.dst.points()[f.image(i)]),
            None => Term::constant(c),
        })
    };
    class_map(src, dst, &relabel)
}

/// Inclusion of the classes of a shallower run into a deeper one over the
/// same theory.
pub fn embed(shallow: &SaturationResult, deep: &SaturationResult) -> ClassMap {
    class_map(shallow, deep, &|t| t.clone())
}

/// `T(η)` for a run `r` over a space: constants `a` become `k[a]`, looked
/// up in `outer`, a run over the quotient space of `base` (the depth-0
/// run of the same space).
pub fn map_unit(
    r: &SaturationResult,
    base: &SaturationResult,
    outer: &SaturationResult,
) -> ClassMap {
    let relabel = |t: &Term| {
        t.map_constants(&|c| match base.constant_class(c) {
            Some(k) => Term::constant(&class_point(k)),
            None => Term::constant(c),
        })
    };
    class_map(r, outer, &relabel)
}

/// `f*` on the classes of a saturation run, together with the checks that
/// make it the free extension of `f`.
#[derive(Debug, Clone)]
pub struct FreeExtension<E> {
    pub table: Vec<E>,
    /// Points where `f* ∘ unit` differs from `f`.
    pub unit_failures: Vec<String>,
    /// Applications `f(c⃗) = c` of the universe where `f*` is not a
    /// homomorphism.
    pub homomorphism_failures: Vec<String>,
    /// Class pairs where `f*` increases distance.
    pub expansive: Vec<(usize, usize)>,
}

impl<E> FreeExtension<E> {
    pub fn is_ok(&self) -> bool {
        self.unit_failures.is_empty()
            && self.homomorphism_failures.is_empty()
            && self.expansive.is_empty()
    }
}

/// Extends `f : space → alg` (given as one element per point) to the
/// classes of `r` by evaluation. Fails with [`AlgebraError::ModelMismatch`]
/// if two terms of one class evaluate differently.
pub fn free_extension<A: Algebra + ?Sized>(
    space: &FiniteSpace,
    f: &[A::Elem],
    alg: &A,
    r: &SaturationResult,
) -> Result<FreeExtension<A::Elem>, AlgebraError> {
    if f.len() != space.len() {
        return Err(AlgebraError::Element(f.len()));
    }
    let point = |c: &str| space.index_of(c).map(|i| f[i].clone());
    let eval = |t: &Term| -> Result<A::Elem, AlgebraError> {
        match t {
            Term::Const(c) => point(c).map_or_else(|| alg.constant(c), Ok),
            _ => {
                let t = t.map_constants(&|c| Term::constant(c));
                eval_with_points(&t, alg, &point)
            }
        }
    };
    let table = r
        .representatives()
        .iter()
        .map(eval)
        .collect::<Result<Vec<_>, _>>()?;
    for t in r.universe() {
        let k = r.class_of(&t).expect("universe term");
        if eval(&t)? != table[k] {
            return Err(AlgebraError::ModelMismatch(format!(
                "`{t}` and `{}` are identified but evaluate differently",
                r.representative(k)
            )));
        }
    }
    let mut unit_failures = Vec::new();
    for (i, p) in space.points().iter().enumerate() {
        match r.constant_class(p) {
            Some(k) if table[k] == f[i] => {}
            _ => unit_failures.push(p.clone()),
        }
    }
    let mut homomorphism_failures = Vec::new();
    for (sym, arity, _) in r.symbols() {
        for args in crate::gmet::index_tuples(&vec![r.class_count(); *arity]) {
            let Some(k) = r.apply_symbol(sym, &args) else {
                continue;
            };
            let vals: Vec<A::Elem> = args.iter().map(|&a| table[a].clone()).collect();
            if alg.operate(sym, &vals)? != table[k] {
                homomorphism_failures.push(format!("{sym}{args:?}"));
            }
        }
    }
    let mut expansive = Vec::new();
    for i in 0..table.len() {
        for j in 0..table.len() {
            if &alg.distance(&table[i], &table[j])? > r.class_distance(i, j) {
                expansive.push((i, j));
            }
        }
    }
    Ok(FreeExtension {
        table,
        unit_failures,
        homomorphism_failures,
        expansive,
    })
}

fn eval_with_points<A: Algebra + ?Sized>(
    t: &Term,
    alg: &A,
    point: &dyn Fn(&str) -> Option<A::Elem>,
) -> Result<A::Elem, AlgebraError> {
    match t {
        Term::Var(v) => Err(AlgebraError::Unassigned(v.clone())),
        Term::Const(c) => point(c).map_or_else(|| alg.constant(c), Ok),
        Term::App(s, args) => {
            let vals = args
                .iter()
                .map(|a| eval_with_points(a, alg, point))
                .collect::<Result<Vec<_>, _>>()?;
            alg.operate(s, &vals)
        }
    }
}

/// Checks that `g`, a table on the classes of `r`, agrees with `fx` on
/// every class, provided it is a homomorphism agreeing with `f` on the
/// points. Proceeds by induction on representatives: a class whose
/// representative is a constant is fixed by `f`, and `op(c⃗)` is fixed by
/// the values on `c⃗`. Returns the classes where the argument breaks
/// down (where `g` is not determined that way), which is empty exactly
/// when `g` is forced to equal `fx`.
pub fn check_uniqueness<A: Algebra + ?Sized>(
    space: &FiniteSpace,
    f: &[A::Elem],
    alg: &A,
    r: &SaturationResult,
    fx: &FreeExtension<A::Elem>,
    g: &[A::Elem],
) -> Result<Vec<usize>, AlgebraError> {
    let mut order: Vec<usize> = (0..r.class_count()).collect();
    order.sort_by_key(|&k| r.representative(k).depth());
    let mut out = Vec::new();
    for k in order {
        let forced = match r.representative(k) {
            Term::Const(c) => match space.index_of(c) {
                Some(i) => f[i].clone(),
                None => alg.constant(c)?,
            },
            Term::App(sym, args) => {
                let vals = args
                    .iter()
                    .map(|a| g[r.class_of(a).expect("representative children are classes")].clone())
                    .collect::<Vec<_>>();
                alg.operate(sym, &vals)?
            }
            Term::Var(v) => return Err(AlgebraError::Unassigned(v.clone())),
        };
        if g[k] != forced || g[k] != fx.table[k] {
            out.push(k);
        }
    }
    Ok(out)
}

/// Outcome of comparing a saturation run with a model.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SoundnessReport {
    pub pairs_checked: usize,
    pub undefined_terms: usize,
    pub violations: Vec<String>,
}

impl SoundnessReport {
    pub fn is_sound(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Every derived fact of `r` must hold in `alg`: identified terms are
/// equal and model distances are at most the derived ones. Constants are
/// interpreted by `alg.constant`.
pub fn check_soundness<A: Algebra + ?Sized>(r: &SaturationResult, alg: &A) -> SoundnessReport {
    let mut report = SoundnessReport::default();
    let none = |_: &str| None;
    let mut values: Vec<Option<A::Elem>> = Vec::with_capacity(r.class_count());
    for t in r.representatives() {
        match evaluate(t, alg, &none) {
            Ok(v) => values.push(Some(v)),
            Err(e) => {
                report.undefined_terms += 1;
                if !matches!(e, AlgebraError::Undefined(_)) {
                    report
                        .violations
                        .push(format!("`{t}` does not evaluate: {e}"));
                }
                values.push(None);
            }
        }
    }
    for t in r.universe() {
        let k = r.class_of(&t).expect("universe term");
        if let (Ok(v), Some(rep)) = (evaluate(&t, alg, &none), &values[k]) {
            if &v != rep {
                report.violations.push(format!(
                    "`{t}` = `{}` is derived but fails in the model",
                    r.representative(k)
                ));
            }
        }
    }
    for i in 0..values.len() {
        for j in 0..values.len() {
            let (Some(a), Some(b)) = (&values[i], &values[j]) else {
                continue;
            };
            report.pairs_checked += 1;
            match alg.distance(a, b) {
                Ok(d) if &d <= r.class_distance(i, j) => {}
                Ok(d) => report.violations.push(format!(
                    "d({}, {}) = {} in the model but {} is derived",
                    r.representative(i),
                    r.representative(j),
                    d,
                    r.class_distance(i, j)
                )),
                Err(e) => report.violations.push(e.to_string()),
            }
        }
    }
    report
}
