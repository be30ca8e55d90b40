//! Σ-terms over variables and carrier constants.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::expr::Expr;
use crate::liftings::{Lifting, LiftingSpec};
use crate::unit::{format_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{symbol}` expects {expected} argument(s), got {got}")]
    Arity {
        symbol: String,
        expected: usize,
        got: usize,
    },
    #[error("name `{0}` is declared twice")]
    Duplicate(String),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("ground-term enumeration exceeds the budget of {0} terms")]
    Budget(usize),
    #[error("`{0}` has an unevaluated parameter")]
    SymbolicParam(String),
    #[error("lifting of `{symbol}`: {reason}")]
    Lifting { symbol: String, reason: String },
}

/// The parameter of an operation instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Param {
    Value(Rational),
    /// Only in axiom patterns, e.g. `p*q` in the convex associativity law.
    Expr(Expr),
}

impl PartialOrd for Param {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Param {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Param::Value(a), Param::Value(b)) => a.cmp(b),
            (Param::Value(_), Param::Expr(_)) => Ordering::Less,
            (Param::Expr(_), Param::Value(_)) => Ordering::Greater,
            (Param::Expr(a), Param::Expr(b)) => a.to_string().cmp(&b.to_string()),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Value(r) => f.write_str(&format_rational(r)),
            Param::Expr(e) => write!(f, "{e}"),
        }
    }
}

/// An operation symbol, instantiated at a parameter for parametric families.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    pub name: String,
    pub param: Option<Param>,
}

impl Symbol {
    pub fn plain(name: &str) -> Self {
        Self {
            name: name.to_string(),
            param: None,
        }
    }

    pub fn with_param(name: &str, p: Rational) -> Self {
        Self {
            name: name.to_string(),
            param: Some(Param::Value(p)),
        }
    }

    pub fn param_value(&self) -> Option<&Rational> {
        match &self.param {
            Some(Param::Value(r)) => Some(r),
            _ => None,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.param {
            None => f.write_str(&self.name),
            Some(p) => write!(f, "{}_{p}", self.name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(String),
    App(Symbol, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.to_string())
    }

    pub fn constant(name: &str) -> Self {
        Term::Const(name.to_string())
    }

    pub fn app(sym: Symbol, args: Vec<Term>) -> Self {
        Term::App(sym, args)
    }

    /// Constants and nullary applications have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) | Term::Const(_) => 0,
            Term::App(_, args) => args.iter().map(|a| a.depth() + 1).max().unwrap_or(0),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Const(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Const(_) => true,
            Term::App(s, args) => {
                !matches!(s.param, Some(Param::Expr(_))) && args.iter().all(Term::is_ground)
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) => {}
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Names used inside parameter expressions.
    pub fn param_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| {
            if let Term::App(
                Symbol {
                    param: Some(Param::Expr(e)),
                    ..
                },
                _,
            ) = t
            {
                e.collect_vars(&mut out);
            }
        });
        out
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| {
            if let Term::Const(c) = t {
                out.insert(c.clone());
            }
        });
        out
    }

    pub fn visit(&self, f: &mut dyn FnMut(&Term)) {
        f(self);
        if let Term::App(_, args) = self {
            for a in args {
                a.visit(f);
            }
        }
    }

    /// Replaces every constant through `f`.
    pub fn map_constants(&self, f: &dyn Fn(&str) -> Term) -> Term {
        match self {
            Term::Var(_) => self.clone(),
            Term::Const(c) => f(c),
            Term::App(s, args) => {
                Term::App(s.clone(), args.iter().map(|a| a.map_constants(f)).collect())
            }
        }
    }

    fn fmt_inner(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
            Term::App(s, args) => {
                f.write_str(&s.name)?;
                if args.is_empty() && s.param.is_none() {
                    return Ok(());
                }
                f.write_str("(")?;
                if let Some(p) = &s.param {
                    write!(f, "{p}; ")?;
                }
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    a.fmt_inner(f)?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_inner(f)
    }
}

/// Depth first, then symbol name, then parameter, then arguments.
pub fn canonical_cmp(a: &Term, b: &Term) -> Ordering {
    a.depth().cmp(&b.depth()).then_with(|| structural_cmp(a, b))
}

fn structural_cmp(a: &Term, b: &Term) -> Ordering {
    fn rank(t: &Term) -> u8 {
        match t {
            Term::Const(_) => 0,
            Term::Var(_) => 1,
            Term::App(..) => 2,
        }
    }
    match (a, b) {
        (Term::Const(x), Term::Const(y)) | (Term::Var(x), Term::Var(y)) => x.cmp(y),
        (Term::App(f, xs), Term::App(g, ys)) => f
            .name
            .cmp(&g.name)
            .then_with(|| f.param.cmp(&g.param))
            .then_with(|| xs.len().cmp(&ys.len()))
            .then_with(|| {
                xs.iter()
                    .zip(ys)
                    .map(|(x, y)| canonical_cmp(x, y))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            }),
        _ => rank(a).cmp(&rank(b)),
    }
}

pub type Substitution = HashMap<String, Term>;

/// Homomorphic replacement of variables; unmapped variables stay fixed.
pub fn substitute(t: &Term, sigma: &Substitution) -> Term {
    match t {
        Term::Var(v) => sigma.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::Const(_) => t.clone(),
        Term::App(s, args) => Term::App(
            s.clone(),
            args.iter().map(|a| substitute(a, sigma)).collect(),
        ),
    }
}

/// The substitution `tau ∘ sigma`: first `sigma`, then `tau`.
pub fn compose(tau: &Substitution, sigma: &Substitution) -> Substitution {
    let mut out: Substitution = sigma
        .iter()
        .map(|(v, t)| (v.clone(), substitute(t, tau)))
        .collect();
    for (v, t) in tau {
        out.entry(v.clone()).or_insert_with(|| t.clone());
    }
    out
}

/// `op : n : L` with an optional finite family of parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpDecl {
    pub name: String,
    pub arity: usize,
    pub lifting: LiftingSpec,
    pub params: Option<BTreeSet<Rational>>,
}

impl OpDecl {
    pub fn plain(name: &str, arity: usize, lifting: LiftingSpec) -> Self {
        Self {
            name: name.to_string(),
            arity,
            lifting,
            params: None,
        }
    }

    pub fn parametric(name: &str, arity: usize, lifting: LiftingSpec, params: &[Rational]) -> Self {
        Self {
            name: name.to_string(),
            arity,
            lifting,
            params: Some(params.iter().cloned().collect()),
        }
    }

    /// One symbol per declared parameter, or the bare symbol.
    pub fn instances(&self) -> Vec<Symbol> {
        match &self.params {
            None => vec![Symbol::plain(&self.name)],
            Some(ps) => ps
                .iter()
                .map(|p| Symbol::with_param(&self.name, p.clone()))
                .collect(),
        }
    }
}

/// A lifted signature together with the carrier constants of an extension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    ops: Vec<OpDecl>,
    constants: Vec<String>,
}

impl Signature {
    pub fn new(ops: Vec<OpDecl>) -> Result<Self, TermError> {
        let mut seen = HashSet::new();
        for op in &ops {
            if !seen.insert(op.name.clone()) {
                return Err(TermError::Duplicate(op.name.clone()));
            }
            op.lifting
                .check_arity(op.arity)
                .map_err(|e| TermError::Lifting {
                    symbol: op.name.clone(),
                    reason: e.to_string(),
                })?;
        }
        Ok(Self {
            ops,
            constants: Vec::new(),
        })
    }

    pub fn ops(&self) -> &[OpDecl] {
        &self.ops
    }

    pub fn op(&self, name: &str) -> Option<&OpDecl> {
        self.ops.iter().find(|o| o.name == name)
    }

    pub(crate) fn op_mut(&mut self, name: &str) -> Option<&mut OpDecl> {
        self.ops.iter_mut().find(|o| o.name == name)
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn has_constant(&self, name: &str) -> bool {
        self.constants.iter().any(|c| c == name)
    }

    pub fn add_constant(&mut self, name: &str) -> Result<(), TermError> {
        if self.has_constant(name) || self.op(name).is_some() {
            return Err(TermError::Duplicate(name.to_string()));
        }
        self.constants.push(name.to_string());
        Ok(())
    }

    /// All instantiated symbols with their arities, in declaration order.
    pub fn instances(&self) -> Vec<(Symbol, usize)> {
        self.ops
            .iter()
            .flat_map(|o| o.instances().into_iter().map(move |s| (s, o.arity)))
            .collect()
    }

    /// The lifting attached to an instantiated symbol.
    pub fn lifting_of(&self, sym: &Symbol) -> Result<Lifting, TermError> {
        let op = self
            .op(&sym.name)
            .ok_or_else(|| TermError::UnknownSymbol(sym.name.clone()))?;
        let p = match &sym.param {
            None => None,
            Some(Param::Value(r)) => Some(r),
            Some(Param::Expr(_)) => return Err(TermError::SymbolicParam(sym.name.clone())),
        };
        op.lifting
            .instantiate(op.arity, p)
            .map_err(|e| TermError::Lifting {
                symbol: sym.name.clone(),
                reason: e.to_string(),
            })
    }

    /// Checks symbols and arities of a term.
    pub fn check_term(&self, t: &Term) -> Result<(), TermError> {
        match t {
            Term::Var(_) => Ok(()),
            Term::Const(c) => {
                if self.has_constant(c) {
                    Ok(())
                } else {
                    Err(TermError::UnknownConstant(c.clone()))
                }
            }
            Term::App(s, args) => {
                let op = self
                    .op(&s.name)
                    .ok_or_else(|| TermError::UnknownSymbol(s.name.clone()))?;
                if op.arity != args.len() {
                    return Err(TermError::Arity {
                        symbol: s.name.clone(),
                        expected: op.arity,
                        got: args.len(),
                    });
                }
                args.iter().try_for_each(|a| self.check_term(a))
            }
        }
    }
}

pub fn parse_term(text: &str, sig: &Signature) -> Result<Term, crate::error::ParseError> {
    crate::parse::parse_pattern(text, sig)
}

/// Default cap on the number of enumerated ground terms.
pub const DEFAULT_TERM_BUDGET: usize = 200_000;

/// Every ground term of depth at most `depth` over `carrier` and the
/// constants and operations of `sig`, in canonical order.
pub fn enumerate_ground_terms(
    sig: &Signature,
    carrier: &[String],
    depth: usize,
    budget: usize,
) -> Result<Vec<Term>, TermError> {
    let mut consts: BTreeSet<&str> = carrier.iter().map(String::as_str).collect();
    consts.extend(sig.constants().iter().map(String::as_str));
    let instances = sig.instances();
    let mut levels: Vec<Vec<Term>> = Vec::new();
    let mut level0: Vec<Term> = consts.into_iter().map(Term::constant).collect();
    for (s, n) in &instances {
        if *n == 0 {
            level0.push(Term::App(s.clone(), Vec::new()));
        }
    }
    if level0.len() > budget {
        return Err(TermError::Budget(budget));
    }
    levels.push(level0);
    let mut total = levels[0].len();
    for k in 1..=depth {
        let upto: Vec<Term> = levels.iter().flatten().cloned().collect();
        let mut fresh = Vec::new();
        for (s, n) in &instances {
            if *n == 0 {
                continue;
            }
            for idx in crate::gmet::index_tuples(&vec![upto.len(); *n]) {
                // exactly depth k: some argument sits at depth k-1
                if !idx.iter().any(|&i| upto[i].depth() == k - 1) {
                    continue;
                }
                fresh.push(Term::App(
                    s.clone(),
                    idx.iter().map(|&i| upto[i].clone()).collect(),
                ));
                total += 1;
                if total > budget {
                    return Err(TermError::Budget(budget));
                }
            }
        }
        levels.push(fresh);
    }
    let mut all: Vec<Term> = levels.into_iter().flatten().collect();
    all.sort_by(canonical_cmp);
    Ok(all)
}

/// Replaces parameter expressions by their values under `env`. `None` if
/// some expression does not evaluate.
pub fn instantiate_params(t: &Term, env: &dyn Fn(&str) -> Option<Rational>) -> Option<Term> {
    Some(match t {
        Term::Var(_) | Term::Const(_) => t.clone(),
        Term::App(s, args) => {
            let param = match &s.param {
                Some(Param::Expr(e)) => Some(Param::Value(e.eval(env).ok()?)),
                p => p.clone(),
            };
            Term::App(
                Symbol {
                    name: s.name.clone(),
                    param,
                },
                args.iter()
                    .map(|a| instantiate_params(a, env))
                    .collect::<Option<_>>()?,
            )
        }
    })
}

/// Evaluates a term in an algebra under a variable assignment.
pub fn evaluate<A: crate::freealg::Algebra + ?Sized>(
    t: &Term,
    alg: &A,
    env: &dyn Fn(&str) -> Option<A::Elem>,
) -> Result<A::Elem, crate::freealg::AlgebraError> {
    use crate::freealg::AlgebraError;
    match t {
        Term::Var(v) => env(v).ok_or_else(|| AlgebraError::Unassigned(v.clone())),
        Term::Const(c) => alg.constant(c),
        Term::App(s, args) => {
            let vals = args
                .iter()
                .map(|a| evaluate(a, alg, env))
                .collect::<Result<Vec<_>, _>>()?;
            alg.operate(s, &vals)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liftings::LiftingSpec;
    use crate::unit::ratio;

    fn sig_with(arity: usize) -> Signature {
        Signature::new(vec![OpDecl::plain("op", arity, LiftingSpec::sup())]).unwrap()
    }

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn one_binary_op_depth_one() {
        let sig = sig_with(2);
        let ts = enumerate_ground_terms(&sig, &names(&["a"]), 1, 100).unwrap();
        let shown: Vec<String> = ts.iter().map(Term::to_string).collect();
        assert_eq!(shown, ["a", "op(a, a)"]);
        let ts = enumerate_ground_terms(&sig, &names(&["a", "b"]), 1, 100).unwrap();
        assert_eq!(ts.len(), 6);
        let ts = enumerate_ground_terms(&sig, &names(&["a", "b"]), 0, 100).unwrap();
        assert_eq!(ts.len(), 2);
    }

    #[test]
    fn enumeration_budget() {
        let sig = sig_with(2);
        assert_eq!(
            enumerate_ground_terms(&sig, &names(&["a", "b"]), 2, 10),
            Err(TermError::Budget(10))
        );
    }

    #[test]
    fn parametric_instances() {
        let sig = Signature::new(vec![OpDecl::parametric(
            "plus",
            2,
            LiftingSpec::lk_op_param(),
            &[ratio(1, 2), ratio(1, 4)],
        )])
        .unwrap();
        let ts = enumerate_ground_terms(&sig, &names(&["a"]), 1, 100).unwrap();
        let shown: Vec<String> = ts.iter().map(Term::to_string).collect();
        assert_eq!(shown, ["a", "plus(1/4; a, a)", "plus(1/2; a, a)"]);
    }

    #[test]
    fn substitution_basics() {
        let x = Term::var("x");
        let a = Term::constant("a");
        let sigma: Substitution = [("x".to_string(), a.clone())].into();
        assert_eq!(substitute(&x, &sigma), a);
        let f = Term::App(Symbol::plain("f"), vec![Term::var("x"), Term::var("y")]);
        let sigma: Substitution = [("x".to_string(), Term::var("y"))].into();
        assert_eq!(
            substitute(&f, &sigma),
            Term::App(Symbol::plain("f"), vec![Term::var("y"), Term::var("y")])
        );
    }

    #[test]
    fn canonical_order_is_depth_first() {
        let f = |args| Term::App(Symbol::plain("f"), args);
        let mut ts = [
            f(vec![f(vec![Term::constant("a")])]),
            f(vec![Term::constant("b")]),
            Term::constant("c"),
        ];
        ts.sort_by(canonical_cmp);
        assert_eq!(ts[0], Term::constant("c"));
        assert_eq!(ts[1].depth(), 1);
    }
}
