//! Liftings of the n-ary product functor to generalized metric spaces.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::gmet::{self, FiniteSpace, MetricKind, SpaceError};
use crate::unit::{format_rational, Rational, UnitValue};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LiftingError {
    #[error("lifting `{lifting}` has arity {expected}, used at arity {got}")]
    Arity {
        lifting: String,
        expected: usize,
        got: usize,
    },
    #[error("lifting `{0}` needs a parameter")]
    MissingParam(String),
    #[error("lifting `{0}` takes no parameter")]
    UnexpectedParam(String),
    #[error("parameter {1} of `{0}` must lie strictly between 0 and 1")]
    ParamRange(String, String),
    #[error("{0} tuples exceed the materialization budget of {1}; evaluate pairs lazily")]
    Budget(usize, usize),
    #[error("custom lifting `{name}` returned a space of {got} points, expected {expected}")]
    CustomShape {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Default bound on the number of tuples `apply` will tabulate.
pub const DEFAULT_MATERIALIZATION_BUDGET: usize = 4096;

/// Read access to a square distance table.
pub trait DistanceTable {
    fn size(&self) -> usize;
    fn get(&self, i: usize, j: usize) -> &UnitValue;
}

impl DistanceTable for FiniteSpace {
    fn size(&self) -> usize {
        self.len()
    }

    fn get(&self, i: usize, j: usize) -> &UnitValue {
        self.d(i, j)
    }
}

impl DistanceTable for Vec<Vec<UnitValue>> {
    fn size(&self) -> usize {
        self.len()
    }

    fn get(&self, i: usize, j: usize) -> &UnitValue {
        &self[i][j]
    }
}

/// A user-supplied lifting given as a function from spaces to spaces on
/// tuples. Preservation of isometric embeddings can only be falsified by
/// sampling, see [`check_preservation_sampled`].
pub trait CustomLifting: Send + Sync {
    fn name(&self) -> &str;
    fn arity(&self) -> usize;
    /// Must return a space whose points are the tuples of `space` in
    /// [`gmet::index_tuples`] order.
    fn lift(&self, space: &FiniteSpace) -> FiniteSpace;
}

#[derive(Clone)]
pub enum LiftingRule {
    Sup,
    Discrete,
    Scaled(UnitValue),
    Identity,
    Kantorovich(UnitValue),
    Lk(UnitValue),
    Custom(Arc<dyn CustomLifting>),
}

impl fmt::Debug for LiftingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiftingRule::Sup => f.write_str("Sup"),
            LiftingRule::Discrete => f.write_str("Discrete"),
            LiftingRule::Scaled(r) => write!(f, "Scaled({r})"),
            LiftingRule::Identity => f.write_str("Identity"),
            LiftingRule::Kantorovich(p) => write!(f, "Kantorovich({p})"),
            LiftingRule::Lk(p) => write!(f, "Lk({p})"),
            LiftingRule::Custom(c) => write!(f, "Custom({})", c.name()),
        }
    }
}

impl PartialEq for LiftingRule {
    fn eq(&self, other: &Self) -> bool {
        use LiftingRule::*;
        match (self, other) {
            (Sup, Sup) | (Discrete, Discrete) | (Identity, Identity) => true,
            (Scaled(a), Scaled(b)) | (Kantorovich(a), Kantorovich(b)) | (Lk(a), Lk(b)) => a == b,
            (Custom(a), Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl Eq for LiftingRule {}

/// A lifting of the `arity`-fold product functor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lifting {
    pub arity: usize,
    pub rule: LiftingRule,
}

fn proper(name: &str, p: &UnitValue) -> Result<(), LiftingError> {
    if p.is_proper() {
        Ok(())
    } else {
        Err(LiftingError::ParamRange(name.into(), p.to_string()))
    }
}

impl Lifting {
    pub fn sup(arity: usize) -> Self {
        Self {
            arity,
            rule: LiftingRule::Sup,
        }
    }

    pub fn discrete(arity: usize) -> Self {
        Self {
            arity,
            rule: LiftingRule::Discrete,
        }
    }

    pub fn scaled(r: UnitValue) -> Self {
        Self {
            arity: 1,
            rule: LiftingRule::Scaled(r),
        }
    }

    pub fn identity() -> Self {
        Self {
            arity: 1,
            rule: LiftingRule::Identity,
        }
    }

    pub fn kantorovich(p: UnitValue) -> Result<Self, LiftingError> {
        proper("kantorovich", &p)?;
        Ok(Self {
            arity: 2,
            rule: LiftingRule::Kantorovich(p),
        })
    }

    pub fn lk(p: UnitValue) -> Result<Self, LiftingError> {
        proper("lk", &p)?;
        Ok(Self {
            arity: 2,
            rule: LiftingRule::Lk(p),
        })
    }

    pub fn custom(rule: Arc<dyn CustomLifting>) -> Self {
        Self {
            arity: rule.arity(),
            rule: LiftingRule::Custom(rule),
        }
    }

    /// `L(d)(s, t)` for index tuples `s`, `t` into `d`.
    pub fn tuple_distance(
        &self,
        d: &dyn DistanceTable,
        kind: MetricKind,
        s: &[usize],
        t: &[usize],
    ) -> UnitValue {
        debug_assert_eq!(s.len(), self.arity);
        debug_assert_eq!(t.len(), self.arity);
        match &self.rule {
            LiftingRule::Sup => s
                .iter()
                .zip(t)
                .map(|(&i, &j)| d.get(i, j))
                .max()
                .cloned()
                .unwrap_or_else(|| gmet::terminal(kind).d(0, 0).clone()),
            LiftingRule::Discrete => {
                if self.arity == 0 {
                    gmet::terminal(kind).d(0, 0).clone()
                } else if s == t {
                    UnitValue::zero()
                } else {
                    UnitValue::one()
                }
            }
            LiftingRule::Scaled(r) => r.mul(d.get(s[0], t[0])),
            LiftingRule::Identity => d.get(s[0], t[0]).clone(),
            LiftingRule::Kantorovich(p) => {
                let c = |i: usize, j: usize| d.get(s[i], t[j]).as_rational().clone();
                UnitValue::clamped(crate::distributions::kant_pair_closed(
                    p.as_rational(),
                    &[[c(0, 0), c(0, 1)], [c(1, 0), c(1, 1)]],
                ))
            }
            LiftingRule::Lk(p) => {
                let c = |i: usize, j: usize| d.get(s[i], t[j]).as_rational().clone();
                UnitValue::clamped(crate::distributions::lk_bilinear(
                    p.as_rational(),
                    &[[c(0, 0), c(0, 1)], [c(1, 0), c(1, 1)]],
                ))
            }
            LiftingRule::Custom(rule) => {
                // lift the subspace on the points involved, then look up
                let mut pts: Vec<usize> = s.iter().chain(t).copied().collect();
                pts.sort_unstable();
                pts.dedup();
                let names: Vec<String> = pts.iter().map(|i| format!("x{i}")).collect();
                let sub = FiniteSpace::from_fn(names, kind, |a, b| d.get(pts[a], pts[b]).clone())
                    .expect("distinct names");
                let lifted = rule.lift(&sub);
                let pos = |tuple: &[usize]| {
                    tuple.iter().fold(0, |acc, i| {
                        acc * pts.len() + pts.binary_search(i).expect("collected")
                    })
                };
                lifted.d(pos(s), pos(t)).clone()
            }
        }
    }

    /// Tabulates the lifted space on all `arity`-tuples.
    pub fn apply(&self, space: &FiniteSpace) -> Result<FiniteSpace, LiftingError> {
        self.apply_with_budget(space, DEFAULT_MATERIALIZATION_BUDGET)
    }

    pub fn apply_with_budget(
        &self,
        space: &FiniteSpace,
        budget: usize,
    ) -> Result<FiniteSpace, LiftingError> {
        let kind = space.kind();
        if self.arity == 0 {
            return Ok(gmet::terminal(kind));
        }
        let count = space
            .len()
            .checked_pow(self.arity as u32)
            .unwrap_or(usize::MAX);
        if count > budget {
            return Err(LiftingError::Budget(count, budget));
        }
        let tuples = gmet::index_tuples(&vec![space.len(); self.arity]);
        if let LiftingRule::Custom(rule) = &self.rule {
            let out = rule.lift(space);
            if out.len() != tuples.len() {
                return Err(LiftingError::CustomShape {
                    name: rule.name().to_string(),
                    expected: tuples.len(),
                    got: out.len(),
                });
            }
            return Ok(out);
        }
        let points = tuples.iter().map(|t| tuple_point(space, t)).collect();
        Ok(FiniteSpace::from_fn(points, kind, |a, b| {
            self.tuple_distance(space, kind, &tuples[a], &tuples[b])
        })?)
    }

    /// Lazy evaluation of a single pair of named tuples.
    pub fn lifted_distance(
        &self,
        space: &FiniteSpace,
        s: &[&str],
        t: &[&str],
    ) -> Result<UnitValue, LiftingError> {
        if s.len() != self.arity || t.len() != self.arity {
            return Err(LiftingError::Arity {
                lifting: self.to_string(),
                expected: self.arity,
                got: s.len().max(t.len()),
            });
        }
        let si = s
            .iter()
            .map(|p| space.require(p))
            .collect::<Result<Vec<_>, _>>()?;
        let ti = t
            .iter()
            .map(|p| space.require(p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.tuple_distance(space, space.kind(), &si, &ti))
    }
}

impl fmt::Display for Lifting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            LiftingRule::Sup => f.write_str("sup"),
            LiftingRule::Discrete => f.write_str("discrete"),
            LiftingRule::Scaled(r) => write!(f, "scaled({r})"),
            LiftingRule::Identity => f.write_str("identity"),
            LiftingRule::Kantorovich(p) => write!(f, "kantorovich({p})"),
            LiftingRule::Lk(p) => write!(f, "lk({p})"),
            LiftingRule::Custom(c) => f.write_str(c.name()),
        }
    }
}

/// Point name of an index tuple; 1-tuples keep the bare name.
pub(crate) fn tuple_point(space: &FiniteSpace, t: &[usize]) -> String {
    if t.len() == 1 {
        space.points()[t[0]].clone()
    } else {
        let parts: Vec<&str> = t.iter().map(|&i| space.points()[i].as_str()).collect();
        gmet::tuple_name(&parts)
    }
}

/// True iff lifting the subspace on `subset` agrees, distance for distance,
/// with restricting the lifted space to tuples over `subset`.
pub fn check_embedding_preservation(
    l: &Lifting,
    space: &FiniteSpace,
    subset: &[String],
) -> Result<bool, LiftingError> {
    let sub = gmet::restrict(space, subset)?;
    let idx: Vec<usize> = subset
        .iter()
        .map(|p| space.require(p))
        .collect::<Result<_, _>>()?;
    let tuples = gmet::index_tuples(&vec![subset.len(); l.arity]);
    for s in &tuples {
        for t in &tuples {
            let inner = l.tuple_distance(&sub, sub.kind(), s, t);
            let outer_s: Vec<usize> = s.iter().map(|&i| idx[i]).collect();
            let outer_t: Vec<usize> = t.iter().map(|&i| idx[i]).collect();
            if inner != l.tuple_distance(space, space.kind(), &outer_s, &outer_t) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Falsification attempt for embedding preservation on random spaces of
/// `kind` with up to `max_points` points and random subsets. Returns the
/// first failing (space, subset), if any.
pub fn check_preservation_sampled<R: Rng + ?Sized>(
    l: &Lifting,
    kind: MetricKind,
    max_points: usize,
    samples: usize,
    rng: &mut R,
) -> Result<Option<(FiniteSpace, Vec<String>)>, LiftingError> {
    for _ in 0..samples {
        let n = rng.gen_range(1..=max_points.max(1));
        let space = gmet::random_space(kind, n, 12, rng);
        let subset: Vec<String> = space
            .points()
            .iter()
            .filter(|_| rng.gen_bool(0.6))
            .cloned()
            .collect();
        if subset.is_empty() {
            continue;
        }
        if !check_embedding_preservation(l, &space, &subset)? {
            return Ok(Some((space, subset)));
        }
    }
    Ok(None)
}

/// Which built-in lifting a declaration names.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftingTag {
    Sup,
    Discrete,
    Scaled,
    Identity,
    Kantorovich,
    Lk,
}

/// A lifting argument: a literal or the parameter of each operation instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamArg {
    Value(UnitValue),
    OpParam,
}

/// A lifting as declared for an operation, before instantiation at a
/// parameter and arity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftingSpec {
    tag: LiftingTag,
    param: Option<ParamArg>,
}

impl LiftingSpec {
    pub fn new(tag: LiftingTag, param: Option<ParamArg>) -> Result<Self, LiftingError> {
        let spec = Self { tag, param };
        let takes = matches!(
            tag,
            LiftingTag::Scaled | LiftingTag::Kantorovich | LiftingTag::Lk
        );
        match (&spec.param, takes) {
            (None, true) => return Err(LiftingError::MissingParam(spec.name().into())),
            (Some(_), false) => return Err(LiftingError::UnexpectedParam(spec.name().into())),
            (Some(ParamArg::Value(p)), true) if tag != LiftingTag::Scaled => {
                proper(spec.name(), p)?
            }
            _ => {}
        }
        Ok(spec)
    }

    pub fn sup() -> Self {
        Self {
            tag: LiftingTag::Sup,
            param: None,
        }
    }

    pub fn discrete() -> Self {
        Self {
            tag: LiftingTag::Discrete,
            param: None,
        }
    }

    pub fn identity() -> Self {
        Self {
            tag: LiftingTag::Identity,
            param: None,
        }
    }

    pub fn scaled(r: UnitValue) -> Self {
        Self {
            tag: LiftingTag::Scaled,
            param: Some(ParamArg::Value(r)),
        }
    }

    pub fn lk_op_param() -> Self {
        Self {
            tag: LiftingTag::Lk,
            param: Some(ParamArg::OpParam),
        }
    }

    pub fn kantorovich_op_param() -> Self {
        Self {
            tag: LiftingTag::Kantorovich,
            param: Some(ParamArg::OpParam),
        }
    }

    pub fn tag(&self) -> LiftingTag {
        self.tag
    }

    fn name(&self) -> &'static str {
        match self.tag {
            LiftingTag::Sup => "sup",
            LiftingTag::Discrete => "discrete",
            LiftingTag::Scaled => "scaled",
            LiftingTag::Identity => "identity",
            LiftingTag::Kantorovich => "kantorovich",
            LiftingTag::Lk => "lk",
        }
    }

    pub fn needs_op_param(&self) -> bool {
        self.param == Some(ParamArg::OpParam)
    }

    pub fn check_arity(&self, arity: usize) -> Result<(), LiftingError> {
        let fixed = match self.tag {
            LiftingTag::Sup | LiftingTag::Discrete => return Ok(()),
            LiftingTag::Scaled | LiftingTag::Identity => 1,
            LiftingTag::Kantorovich | LiftingTag::Lk => 2,
        };
        if fixed == arity {
            Ok(())
        } else {
            Err(LiftingError::Arity {
                lifting: self.name().into(),
                expected: fixed,
                got: arity,
            })
        }
    }

    /// The lifting of an operation instance with parameter `p`.
    pub fn instantiate(&self, arity: usize, p: Option<&Rational>) -> Result<Lifting, LiftingError> {
        self.check_arity(arity)?;
        let value = match &self.param {
            None => None,
            Some(ParamArg::Value(v)) => Some(v.clone()),
            Some(ParamArg::OpParam) => {
                let p = p.ok_or_else(|| LiftingError::MissingParam(self.name().into()))?;
                Some(UnitValue::new(p.clone()).map_err(|_| {
                    LiftingError::ParamRange(self.name().into(), format_rational(p))
                })?)
            }
        };
        Ok(match self.tag {
            LiftingTag::Sup => Lifting::sup(arity),
            LiftingTag::Discrete => Lifting::discrete(arity),
            LiftingTag::Identity => Lifting::identity(),
            LiftingTag::Scaled => Lifting::scaled(value.expect("checked")),
            LiftingTag::Kantorovich => Lifting::kantorovich(value.expect("checked"))?,
            LiftingTag::Lk => Lifting::lk(value.expect("checked"))?,
        })
    }
}

impl fmt::Display for LiftingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())?;
        match &self.param {
            None => Ok(()),
            Some(ParamArg::OpParam) => f.write_str("(p)"),
            Some(ParamArg::Value(v)) => write!(f, "({v})"),
        }
    }
}
