//! Quantitative equations, Horn clauses and theories over a lifted signature.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed};
use thiserror::Error;

use crate::expr::Expr;
use crate::gmet::{FiniteSpace, MetricKind};
use crate::terms::{Param, Signature, Term, TermError};
use crate::unit::{format_rational, Rational, UnitValue};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TheoryError {
    #[error("axiom {index}: {source}")]
    Term { index: usize, source: TermError },
    #[error("axiom {index}: distance bound {value} is outside [0,1]")]
    EpsRange { index: usize, value: String },
    #[error(
        "axiom {index}: bound mentions `{name}`, which is neither a premise label nor a parameter"
    )]
    UnboundEps { index: usize, name: String },
    #[error("space kind {space} differs from theory kind {theory}")]
    KindMismatch {
        theory: MetricKind,
        space: MetricKind,
    },
    #[error("point `{0}` collides with an existing symbol")]
    NameCollision(String),
}

/// `s = t` or `s =_e t`, where `e` may mention premise labels and
/// operation parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EquationLike {
    Eq(Term, Term),
    QEq(Term, Term, Expr),
}

impl EquationLike {
    pub fn quantitative(l: Term, r: Term, eps: &UnitValue) -> Self {
        EquationLike::QEq(l, r, Expr::Num(eps.as_rational().clone()))
    }

    pub fn lhs(&self) -> &Term {
        match self {
            EquationLike::Eq(l, _) | EquationLike::QEq(l, _, _) => l,
        }
    }

    pub fn rhs(&self) -> &Term {
        match self {
            EquationLike::Eq(_, r) | EquationLike::QEq(_, r, _) => r,
        }
    }

    pub fn eps(&self) -> Option<&Expr> {
        match self {
            EquationLike::Eq(..) => None,
            EquationLike::QEq(_, _, e) => Some(e),
        }
    }

    /// True iff both sides are variables.
    pub fn between_variables(&self) -> bool {
        matches!((self.lhs(), self.rhs()), (Term::Var(_), Term::Var(_)))
    }
}

impl fmt::Display for EquationLike {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquationLike::Eq(l, r) => write!(f, "{l} = {r}"),
            EquationLike::QEq(l, r, e) => write!(f, "{l} =[{e}] {r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HornClause {
    pub premises: Vec<EquationLike>,
    pub conclusion: EquationLike,
}

impl HornClause {
    pub fn new(premises: Vec<EquationLike>, conclusion: EquationLike) -> Self {
        Self {
            premises,
            conclusion,
        }
    }

    pub fn fact(conclusion: EquationLike) -> Self {
        Self::new(Vec::new(), conclusion)
    }

    pub fn is_basic(&self) -> bool {
        self.premises.iter().all(EquationLike::between_variables)
    }

    /// Term variables of the whole clause.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for a in self.premises.iter().chain([&self.conclusion]) {
            out.extend(a.lhs().vars());
            out.extend(a.rhs().vars());
        }
        out
    }

    /// Names used in operation parameters.
    pub fn param_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for a in self.premises.iter().chain([&self.conclusion]) {
            out.extend(a.lhs().param_vars());
            out.extend(a.rhs().param_vars());
        }
        out
    }

    /// Labels of premises whose bound is a bare name, e.g. `e1` in `x =[e1] y`.
    pub fn labels(&self) -> BTreeSet<String> {
        self.premises
            .iter()
            .filter_map(|p| p.eps().and_then(Expr::as_var).map(str::to_string))
            .collect()
    }
}

impl fmt::Display for HornClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.premises.is_empty() {
            let ps: Vec<String> = self.premises.iter().map(ToString::to_string).collect();
            write!(f, "{} ", ps.join(", "))?;
        }
        write!(f, "|- {}", self.conclusion)
    }
}

pub fn check_basic(h: &HornClause) -> bool {
    h.is_basic()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theory {
    pub sig: Signature,
    pub kind: MetricKind,
    pub axioms: Vec<HornClause>,
}

impl Theory {
    pub fn new(
        sig: Signature,
        kind: MetricKind,
        axioms: Vec<HornClause>,
    ) -> Result<Self, TheoryError> {
        for (index, h) in axioms.iter().enumerate() {
            check_clause(&sig, h).map_err(|e| match e {
                TheoryError::Term { source, .. } => TheoryError::Term { index, source },
                TheoryError::EpsRange { value, .. } => TheoryError::EpsRange { index, value },
                TheoryError::UnboundEps { name, .. } => TheoryError::UnboundEps { index, name },
                other => other,
            })?;
        }
        Ok(Self { sig, kind, axioms })
    }
}

fn check_clause(sig: &Signature, h: &HornClause) -> Result<(), TheoryError> {
    let bound: BTreeSet<String> = h.labels().into_iter().chain(h.param_vars()).collect();
    for a in h.premises.iter().chain([&h.conclusion]) {
        for t in [a.lhs(), a.rhs()] {
            sig.check_term(t)
                .map_err(|source| TheoryError::Term { index: 0, source })?;
        }
        if let Some(e) = a.eps() {
            if let Ok(v) = e.eval_closed() {
                if v.is_negative() || v > Rational::one() {
                    return Err(TheoryError::EpsRange {
                        index: 0,
                        value: format_rational(&v),
                    });
                }
            } else if e.as_var().is_none() || std::ptr::eq(a, &h.conclusion) {
                if let Some(name) = e.vars().into_iter().find(|v| !bound.contains(v)) {
                    return Err(TheoryError::UnboundEps { index: 0, name });
                }
            }
        }
    }
    Ok(())
}

/// Adds a constant per point and the facts `a =_{d(a,b)} b` for every
/// ordered pair of points.
pub fn extend_by_space(th: &Theory, space: &FiniteSpace) -> Result<Theory, TheoryError> {
    if space.kind() != th.kind {
        return Err(TheoryError::KindMismatch {
            theory: th.kind,
            space: space.kind(),
        });
    }
    let mut sig = th.sig.clone();
    for p in space.points() {
        sig.add_constant(p)
            .map_err(|_| TheoryError::NameCollision(p.clone()))?;
    }
    let mut axioms = th.axioms.clone();
    for (i, a) in space.points().iter().enumerate() {
        for (j, b) in space.points().iter().enumerate() {
            axioms.push(HornClause::fact(EquationLike::quantitative(
                Term::constant(a),
                Term::constant(b),
                space.d(i, j),
            )));
        }
    }
    Ok(Theory {
        sig,
        kind: th.kind,
        axioms,
    })
}

/// Result of closing the parameter families under the axioms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamClosure {
    pub theory: Theory,
    /// Parameters added per operation.
    pub added: BTreeMap<String, BTreeSet<Rational>>,
    /// False if the last round still produced new parameters.
    pub complete: bool,
}

/// Evaluates the parameter expressions of the axioms (such as `p*q` in
/// the convex associativity law) over the declared parameters, adding
/// results in `(0,1)`, for at most `rounds` rounds.
pub fn close_parameters(th: &Theory, rounds: usize) -> ParamClosure {
    let mut theory = th.clone();
    let mut added: BTreeMap<String, BTreeSet<Rational>> = BTreeMap::new();
    for _ in 0..rounds {
        let fresh = parameter_round(&theory);
        if fresh.is_empty() {
            break;
        }
        for (op, ps) in fresh {
            let decl = theory
                .sig
                .op_mut(&op)
                .expect("parameters come from declared ops");
            decl.params
                .get_or_insert_with(BTreeSet::new)
                .extend(ps.iter().cloned());
            added.entry(op).or_default().extend(ps);
        }
    }
    let complete = parameter_round(&theory).is_empty();
    ParamClosure {
        theory,
        added,
        complete,
    }
}

/// Parameters produced by one evaluation pass that are not yet declared.
fn parameter_round(th: &Theory) -> BTreeMap<String, BTreeSet<Rational>> {
    let mut out: BTreeMap<String, BTreeSet<Rational>> = BTreeMap::new();
    for h in &th.axioms {
        let binders = param_binders(h);
        if binders.is_empty() {
            continue;
        }
        let names: Vec<&String> = binders.keys().collect();
        let domains: Vec<Vec<Rational>> = names
            .iter()
            .map(|n| {
                th.sig
                    .op(&binders[*n])
                    .and_then(|o| o.params.clone())
                    .unwrap_or_default()
                    .into_iter()
                    .collect()
            })
            .collect();
        let sizes: Vec<usize> = domains.iter().map(Vec::len).collect();
        for idx in crate::gmet::index_tuples(&sizes) {
            let env = |v: &str| {
                names
                    .iter()
                    .position(|n| n.as_str() == v)
                    .map(|k| domains[k][idx[k]].clone())
            };
            for a in h.premises.iter().chain([&h.conclusion]) {
                for t in [a.lhs(), a.rhs()] {
                    t.visit(&mut |s| {
                        if let Term::App(sym, _) = s {
                            if let Some(Param::Expr(e)) = &sym.param {
                                if let Ok(v) = e.eval(&env) {
                                    let declared = th
                                        .sig
                                        .op(&sym.name)
                                        .and_then(|o| o.params.as_ref())
                                        .is_some_and(|ps| ps.contains(&v));
                                    if v.is_positive() && v < Rational::one() && !declared {
                                        out.entry(sym.name.clone()).or_default().insert(v);
                                    }
                                }
                            }
                        }
                    });
                }
            }
        }
    }
    out
}

/// Parameter names that occur as a bare parameter, with the operation
/// whose family they range over.
pub(crate) fn param_binders(h: &HornClause) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for a in h.premises.iter().chain([&h.conclusion]) {
        for t in [a.lhs(), a.rhs()] {
            t.visit(&mut |s| {
                if let Term::App(sym, _) = s {
                    if let Some(Param::Expr(Expr::Var(v))) = &sym.param {
                        out.entry(v.clone()).or_insert_with(|| sym.name.clone());
                    }
                }
            });
        }
    }
    out
}

/// Evaluates a closed distance bound, if it is one.
pub fn closed_eps(e: &Expr) -> Option<UnitValue> {
    e.eval_closed().ok().and_then(|v| UnitValue::new(v).ok())
}
