//! Finite generalized metric spaces.
//!
//! A [`FiniteSpace`] is a tabulated fuzzy relation `d : A × A → [0,1]` on a
//! finite carrier together with the [`MetricKind`] it claims to satisfy. The
//! kind is a subset of five axioms:
//!
//! 1. symmetry `d(a,b) = d(b,a)`
//! 2. reflexivity `d(a,a) = 0`
//! 3. identity of indiscernibles `d(a,b) = 0 ⇒ a = b`
//! 4. triangle inequality `d(a,c) ≤ d(a,b) + d(b,c)`
//! 5. strong triangle inequality `d(a,c) ≤ max(d(a,b), d(b,c))`
//!
//! Every operation here is exact; nothing is rounded.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::error::ParseError;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use crate::unit::{ratio, Rational, UnitValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axiom {
    Symmetry,
    Reflexivity,
    IdentityOfIndiscernibles,
    Triangle,
    StrongTriangle,
}

impl Axiom {
    pub const ALL: [Axiom; 5] = [
        Axiom::Symmetry,
        Axiom::Reflexivity,
        Axiom::IdentityOfIndiscernibles,
        Axiom::Triangle,
        Axiom::StrongTriangle,
    ];

    /// The conventional numbering, 1 through 5.
    pub fn number(self) -> u8 {
        match self {
            Axiom::Symmetry => 1,
            Axiom::Reflexivity => 2,
            Axiom::IdentityOfIndiscernibles => 3,
            Axiom::Triangle => 4,
            Axiom::StrongTriangle => 5,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.number() == n)
    }

    fn bit(self) -> u8 {
        1 << (self.number() - 1)
    }

    pub fn label(self) -> &'static str {
        match self {
            Axiom::Symmetry => "SYM",
            Axiom::Reflexivity => "REFL",
            Axiom::IdentityOfIndiscernibles => "IDOFIND",
            Axiom::Triangle => "TRI",
            Axiom::StrongTriangle => "STRONGTRI",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) {}", self.number(), self.label())
    }
}

/// The named categories of generalized metric spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KindName {
    FRel,
    PSMet,
    PQMet,
    DMet,
    MMet,
    SMet,
    QMet,
    PMet,
    Met,
    UMet,
}

impl KindName {
    pub const ALL: [KindName; 10] = [
        KindName::FRel,
        KindName::PSMet,
        KindName::PQMet,
        KindName::DMet,
        KindName::MMet,
        KindName::SMet,
        KindName::QMet,
        KindName::PMet,
        KindName::Met,
        KindName::UMet,
    ];

    pub fn axioms(self) -> &'static [u8] {
        match self {
            KindName::FRel => &[],
            KindName::PSMet => &[1, 2],
            KindName::PQMet => &[2, 4],
            KindName::DMet => &[1, 4],
            KindName::MMet => &[1, 3, 4],
            KindName::SMet => &[1, 2, 3],
            KindName::QMet => &[2, 3, 4],
            KindName::PMet => &[1, 2, 4],
            KindName::Met => &[1, 2, 3, 4],
            KindName::UMet => &[1, 2, 3, 4, 5],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KindName::FRel => "FRel",
            KindName::PSMet => "PSMet",
            KindName::PQMet => "PQMet",
            KindName::DMet => "DMet",
            KindName::MMet => "MMet",
            KindName::SMet => "SMet",
            KindName::QMet => "QMet",
            KindName::PMet => "PMet",
            KindName::Met => "Met",
            KindName::UMet => "UMet",
        }
    }
}

impl FromStr for KindName {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KindName::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ParseError::new(0, format!("unknown metric kind `{s}`")))
    }
}

/// A set of axioms, optionally carrying the name it was declared with.
///
/// Equality compares only the axiom set.
#[derive(Debug, Clone, Copy)]
pub struct MetricKind {
    bits: u8,
    name: Option<KindName>,
}

impl PartialEq for MetricKind {
    fn eq(&self, other: &Self) -> bool {
        self.bits == other.bits
    }
}

impl Eq for MetricKind {}

impl MetricKind {
    /// Builds a kind from an axiom list. Strong triangle implies triangle, so
    /// axiom 4 is added whenever 5 is present.
    pub fn from_axioms(axioms: impl IntoIterator<Item = Axiom>) -> Self {
        let mut bits = 0;
        for a in axioms {
            bits |= a.bit();
        }
        if bits & Axiom::StrongTriangle.bit() != 0 {
            bits |= Axiom::Triangle.bit();
        }
        let name = KindName::ALL
            .into_iter()
            .find(|k| Self::bits_of(k.axioms()) == bits);
        Self { bits, name }
    }

    pub fn named(name: KindName) -> Self {
        Self {
            bits: Self::bits_of(name.axioms()),
            name: Some(name),
        }
    }

    fn bits_of(numbers: &[u8]) -> u8 {
        numbers
            .iter()
            .map(|&n| Axiom::from_number(n).expect("axiom number").bit())
            .fold(0, |a, b| a | b)
    }

    pub fn has(&self, axiom: Axiom) -> bool {
        self.bits & axiom.bit() != 0
    }

    pub fn axioms(&self) -> Vec<Axiom> {
        Axiom::ALL.into_iter().filter(|a| self.has(*a)).collect()
    }

    pub fn name(&self) -> Option<KindName> {
        self.name
    }

    pub fn met() -> Self {
        Self::named(KindName::Met)
    }

    pub fn dmet() -> Self {
        Self::named(KindName::DMet)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.name {
            Some(n) => f.write_str(n.as_str()),
            None => {
                let nums: Vec<String> = self
                    .axioms()
                    .iter()
                    .map(|a| a.number().to_string())
                    .collect();
                write!(f, "{{{}}}", nums.join(","))
            }
        }
    }
}

impl FromStr for MetricKind {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(MetricKind::named(s.parse()?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("distance matrix is {rows}x{cols} but the space has {points} points")]
    Malformed {
        points: usize,
        rows: usize,
        cols: usize,
    },
    #[error("duplicate point `{0}`")]
    DuplicatePoint(String),
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("metric kinds differ: {0} vs {1}")]
    KindMismatch(MetricKind, MetricKind),
    #[error("empty list of spaces")]
    Empty,
    #[error("map is not total: point `{0}` has no image")]
    NotTotal(String),
    #[error("{0} points exceed the materialization budget of {1}")]
    Budget(usize, usize),
}

/// One witnessed failure of an axiom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub axiom: Axiom,
    pub witness: Vec<String>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "axiom {} fails at ({})",
            self.axiom,
            self.witness.join(",")
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, axiom: Axiom) -> bool {
        self.violations.iter().any(|v| v.axiom == axiom)
    }
}

/// A finite carrier with a tabulated fuzzy relation.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteSpace {
    points: Vec<String>,
    index: HashMap<String, usize>,
    d: Vec<UnitValue>,
    kind: MetricKind,
}

impl fmt::Debug for FiniteSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FiniteSpace[{}] {{", self.kind)?;
        for (i, p) in self.points.iter().enumerate() {
            let row: Vec<String> = (0..self.len()).map(|j| self.d(i, j).to_string()).collect();
            writeln!(f, "  {p}: {}", row.join(" "))?;
        }
        write!(f, "}}")
    }
}

impl FiniteSpace {
    /// Builds a space from a square matrix. Only the shape is checked; use
    /// [`validate_space`] for the axioms.
    pub fn new(
        points: Vec<String>,
        matrix: Vec<Vec<UnitValue>>,
        kind: MetricKind,
    ) -> Result<Self, SpaceError> {
        let n = points.len();
        let cols = matrix.iter().map(Vec::len).find(|&c| c != n).unwrap_or(n);
        if matrix.len() != n || cols != n {
            return Err(SpaceError::Malformed {
                points: n,
                rows: matrix.len(),
                cols,
            });
        }
        let d = matrix.into_iter().flatten().collect();
        Self::from_flat(points, d, kind)
    }

    pub(crate) fn from_flat(
        points: Vec<String>,
        d: Vec<UnitValue>,
        kind: MetricKind,
    ) -> Result<Self, SpaceError> {
        let mut index = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if index.insert(p.clone(), i).is_some() {
                return Err(SpaceError::DuplicatePoint(p.clone()));
            }
        }
        debug_assert_eq!(d.len(), points.len() * points.len());
        Ok(Self {
            points,
            index,
            d,
            kind,
        })
    }

    /// Builds a space from a distance function over point indices.
    pub fn from_fn(
        points: Vec<String>,
        kind: MetricKind,
        mut f: impl FnMut(usize, usize) -> UnitValue,
    ) -> Result<Self, SpaceError> {
        let n = points.len();
        let mut d = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                d.push(f(i, j));
            }
        }
        Self::from_flat(points, d, kind)
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

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: MetricKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn index_of(&self, point: &str) -> Option<usize> {
        self.index.get(point).copied()
    }

    pub fn require(&self, point: &str) -> Result<usize, SpaceError> {
        self.index_of(point)
            .ok_or_else(|| SpaceError::UnknownPoint(point.to_string()))
    }

    /// Distance between the points at indices `i` and `j`.
    pub fn d(&self, i: usize, j: usize) -> &UnitValue {
        &self.d[i * self.len() + j]
    }

    /// Distance between two named points.
    pub fn distance(&self, a: &str, b: &str) -> Result<&UnitValue, SpaceError> {
        Ok(self.d(self.require(a)?, self.require(b)?))
    }

    pub fn rows(&self) -> Vec<Vec<UnitValue>> {
        self.d
            .chunks(self.len().max(1))
            .map(<[_]>::to_vec)
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        validate_space(self)
    }
}

/// Exhaustive check of every axiom in `space.kind()` over all 1-, 2- and
/// 3-tuples of points.
pub fn validate_space(space: &FiniteSpace) -> ValidationReport {
    let kind = space.kind();
    let n = space.len();
    let name = |i: usize| space.points()[i].clone();
    let mut violations = Vec::new();
    if kind.has(Axiom::Reflexivity) {
        for i in 0..n {
            if !space.d(i, i).is_zero() {
                violations.push(Violation {
                    axiom: Axiom::Reflexivity,
                    witness: vec![name(i)],
                });
            }
        }
    }
    if kind.has(Axiom::Symmetry) {
        for i in 0..n {
            for j in (i + 1)..n {
                if space.d(i, j) != space.d(j, i) {
                    violations.push(Violation {
                        axiom: Axiom::Symmetry,
                        witness: vec![name(i), name(j)],
                    });
                }
            }
        }
    }
    if kind.has(Axiom::IdentityOfIndiscernibles) {
        for i in 0..n {
            for j in 0..n {
                if i != j && space.d(i, j).is_zero() {
                    violations.push(Violation {
                        axiom: Axiom::IdentityOfIndiscernibles,
                        witness: vec![name(i), name(j)],
                    });
                }
            }
        }
    }
    let tri = kind.has(Axiom::Triangle);
    let strong = kind.has(Axiom::StrongTriangle);
    if tri || strong {
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let (dxy, dyz, dxz) = (space.d(x, y), space.d(y, z), space.d(x, z));
                    if tri && dxz.as_rational() > &(dxy.as_rational() + dyz.as_rational()) {
                        violations.push(Violation {
                            axiom: Axiom::Triangle,
                            witness: vec![name(x), name(y), name(z)],
                        });
                    }
                    if strong && dxz > dxy.max(dyz) {
                        violations.push(Violation {
                            axiom: Axiom::StrongTriangle,
                            witness: vec![name(x), name(y), name(z)],
                        });
                    }
                }
            }
        }
    }
    ValidationReport { violations }
}

/// Validates a raw matrix, reporting a structural error for a wrong shape.
pub fn validate_matrix(
    points: Vec<String>,
    matrix: Vec<Vec<UnitValue>>,
    kind: MetricKind,
) -> Result<ValidationReport, SpaceError> {
    Ok(validate_space(&FiniteSpace::new(points, matrix, kind)?))
}

fn shared_kind(spaces: &[FiniteSpace]) -> Result<MetricKind, SpaceError> {
    let first = spaces.first().ok_or(SpaceError::Empty)?.kind();
    for s in &spaces[1..] {
        if s.kind() != first {
            return Err(SpaceError::KindMismatch(first, s.kind()));
        }
    }
    Ok(first)
}

/// The one-point space: self-distance 0 when the kind is reflexive, else 1.
pub fn terminal(kind: MetricKind) -> FiniteSpace {
    let d = if kind.has(Axiom::Reflexivity) {
        UnitValue::zero()
    } else {
        UnitValue::one()
    };
    FiniteSpace::from_flat(vec!["*".to_string()], vec![d], kind).expect("one point")
}

pub(crate) fn tuple_name(parts: &[&str]) -> String {
    format!("({})", parts.join(","))
}

/// Mixed-radix enumeration of all index tuples over `sizes`, last index fastest.
pub(crate) fn index_tuples(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &s in sizes {
        let mut next = Vec::with_capacity(out.len() * s);
        for prefix in &out {
            for i in 0..s {
                let mut t = prefix.clone();
                t.push(i);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Cartesian product with the pointwise maximum of component distances.
pub fn product(spaces: &[FiniteSpace]) -> Result<FiniteSpace, SpaceError> {
    let kind = shared_kind(spaces)?;
    let sizes: Vec<usize> = spaces.iter().map(FiniteSpace::len).collect();
    let tuples = index_tuples(&sizes);
    let points = tuples
        .iter()
        .map(|t| {
            let parts: Vec<&str> = t
                .iter()
                .zip(spaces)
                .map(|(&i, s)| s.points()[i].as_str())
                .collect();
            tuple_name(&parts)
        })
        .collect();
    FiniteSpace::from_fn(points, kind, |a, b| {
        tuples[a]
            .iter()
            .zip(&tuples[b])
            .zip(spaces)
            .map(|((&i, &j), s)| s.d(i, j))
            .max()
            .cloned()
            .unwrap_or_else(UnitValue::zero)
    })
}

/// Disjoint union; points are renamed `k.name` for component `k`, and
/// distances across components are 1.
pub fn coproduct(spaces: &[FiniteSpace]) -> Result<FiniteSpace, SpaceError> {
    let kind = shared_kind(spaces)?;
    let mut owner = Vec::new();
    let mut points = Vec::new();
    for (k, s) in spaces.iter().enumerate() {
        for (i, p) in s.points().iter().enumerate() {
            owner.push((k, i));
            points.push(format!("{k}.{p}"));
        }
    }
    FiniteSpace::from_fn(points, kind, |a, b| {
        let ((ka, ia), (kb, ib)) = (owner[a], owner[b]);
        if ka == kb {
            spaces[ka].d(ia, ib).clone()
        } else {
            UnitValue::one()
        }
    })
}

/// The subspace on `subset`, in the order given.
pub fn restrict(space: &FiniteSpace, subset: &[String]) -> Result<FiniteSpace, SpaceError> {
    let idx = subset
        .iter()
        .map(|p| space.require(p))
        .collect::<Result<Vec<_>, _>>()?;
    FiniteSpace::from_fn(subset.to_vec(), space.kind(), |i, j| {
        space.d(idx[i], idx[j]).clone()
    })
}

/// A map between finite spaces given by a table over point indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceMap {
    pub src: FiniteSpace,
    pub dst: FiniteSpace,
    pub table: Vec<usize>,
}

impl SpaceMap {
    pub fn new(src: FiniteSpace, dst: FiniteSpace, table: Vec<usize>) -> Result<Self, SpaceError> {
        if table.len() != src.len() {
            let missing = src.points().get(table.len()).cloned().unwrap_or_default();
            return Err(SpaceError::NotTotal(missing));
        }
        if let Some(&bad) = table.iter().find(|&&j| j >= dst.len()) {
            return Err(SpaceError::UnknownPoint(format!("#{bad}")));
        }
        Ok(Self { src, dst, table })
    }

    /// Builds a map from point names.
    pub fn from_names(
        src: FiniteSpace,
        dst: FiniteSpace,
        pairs: &[(&str, &str)],
    ) -> Result<Self, SpaceError> {
        let lookup: HashMap<&str, &str> = pairs.iter().copied().collect();
        let table = src
            .points()
            .iter()
            .map(|p| {
                let image = lookup
                    .get(p.as_str())
                    .ok_or_else(|| SpaceError::NotTotal(p.clone()))?;
                dst.require(image)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(src, dst, table)
    }

    pub fn identity(space: FiniteSpace) -> Self {
        let table = (0..space.len()).collect();
        Self {
            dst: space.clone(),
            src: space,
            table,
        }
    }

    /// The inclusion of `restrict(space, subset)` into `space`.
    pub fn inclusion(space: &FiniteSpace, subset: &[String]) -> Result<Self, SpaceError> {
        let sub = restrict(space, subset)?;
        let table = subset
            .iter()
            .map(|p| space.require(p))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(sub, space.clone(), table)
    }

    pub fn image(&self, i: usize) -> usize {
        self.table[i]
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.dst.len()];
        self.table
            .iter()
            .all(|&j| !std::mem::replace(&mut seen[j], true))
    }

    /// `dst.d(f a, f b) ≤ src.d(a, b)` for all pairs.
    pub fn is_nonexpansive(&self) -> bool {
        let n = self.src.len();
        (0..n).all(|i| (0..n).all(|j| self.dst.d(self.table[i], self.table[j]) <= self.src.d(i, j)))
    }

    pub fn is_isometry(&self) -> bool {
        let n = self.src.len();
        (0..n).all(|i| (0..n).all(|j| self.dst.d(self.table[i], self.table[j]) == self.src.d(i, j)))
    }
}

/// True iff `f` is injective and preserves every distance exactly.
pub fn check_isometric_embedding(f: &SpaceMap) -> bool {
    f.is_injective() && f.is_isometry()
}

/// Closes a square matrix under the axioms of `kind` by only lowering
/// entries (and fixing the diagonal for reflexive kinds).
#[allow(clippy::needless_range_loop)]
pub(crate) fn close_matrix(d: &mut [Vec<UnitValue>], kind: MetricKind) {
    let n = d.len();
    if kind.has(Axiom::Reflexivity) {
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = UnitValue::zero();
        }
    }
    if kind.has(Axiom::Symmetry) {
        for i in 0..n {
            for j in (i + 1)..n {
                let m = d[i][j].clone().min(d[j][i].clone());
                d[i][j] = m.clone();
                d[j][i] = m;
            }
        }
    }
    let strong = kind.has(Axiom::StrongTriangle);
    if (strong || kind.has(Axiom::Triangle)) && !relax_scaled(d, strong) {
        relax_rational(d, strong);
    }
}

/// Triangle relaxation on integers scaled by the common denominator.
/// Returns false (leaving `d` untouched) if that does not fit in `u128`.
#[allow(clippy::needless_range_loop)]
fn relax_scaled(d: &mut [Vec<UnitValue>], strong: bool) -> bool {
    let limit = BigInt::from(1u128 << 100);
    let mut den = BigInt::one();
    for v in d.iter().flatten() {
        den = den.lcm(v.as_rational().denom());
        if den > limit {
            return false;
        }
    }
    let scale = |v: &UnitValue| -> u128 {
        let r = v.as_rational();
        (r.numer() * (&den / r.denom()))
            .to_u128()
            .expect("bounded by the denominator")
    };
    let one = den.to_u128().expect("checked");
    let mut m: Vec<Vec<u128>> = d
        .iter()
        .map(|row| row.iter().map(scale).collect())
        .collect();
    let n = m.len();
    for k in 0..n {
        let row_k = m[k].clone();
        for i in 0..n {
            let ik = m[i][k];
            if ik == one {
                continue;
            }
            for (j, &kj) in row_k.iter().enumerate() {
                let via = if strong {
                    ik.max(kj)
                } else {
                    (ik + kj).min(one)
                };
                if via < m[i][j] {
                    m[i][j] = via;
                }
            }
        }
    }
    for (row, mrow) in d.iter_mut().zip(&m) {
        for (cell, &v) in row.iter_mut().zip(mrow) {
            if v != scale(cell) {
                *cell = UnitValue::clamped(Rational::new(BigInt::from(v), den.clone()));
            }
        }
    }
    true
}

#[allow(clippy::needless_range_loop)]
fn relax_rational(d: &mut [Vec<UnitValue>], strong: bool) {
    let n = d.len();
    for k in 0..n {
        // paths through an entry of 1 never improve anything
        let row_k: Vec<(usize, UnitValue)> = d[k]
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_one())
            .map(|(j, v)| (j, v.clone()))
            .collect();
        for i in 0..n {
            let ik = d[i][k].clone();
            if ik.is_one() {
                continue;
            }
            for (j, kj) in &row_k {
                let via = if strong {
                    ik.clone().max(kj.clone())
                } else {
                    ik.capped_add(kj)
                };
                if via < d[i][*j] {
                    d[i][*j] = via;
                }
            }
        }
    }
}

/// Draws a random space of `n` points satisfying `kind`. Entries are
/// multiples of `1/den`; kinds with identity of indiscernibles never get a
/// zero off the diagonal.
pub fn random_space<R: Rng + ?Sized>(
    kind: MetricKind,
    n: usize,
    den: i64,
    rng: &mut R,
) -> FiniteSpace {
    let positive = kind.has(Axiom::IdentityOfIndiscernibles);
    let mut d: Vec<Vec<UnitValue>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let lo = if positive && i != j { 1 } else { 0 };
                    UnitValue::new(ratio(rng.gen_range(lo..=den), den)).expect("in range")
                })
                .collect()
        })
        .collect();
    close_matrix(&mut d, kind);
    let points = (0..n).map(|i| format!("p{i}")).collect();
    FiniteSpace::new(points, d, kind).expect("square")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn u(n: i64, d: i64) -> UnitValue {
        UnitValue::from_ratio(n, d)
    }

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn two_point(
        off: UnitValue,
        diag: UnitValue,
        kind: MetricKind,
        a: &str,
        b: &str,
    ) -> FiniteSpace {
        FiniteSpace::new(
            names(&[a, b]),
            vec![vec![diag.clone(), off.clone()], vec![off, diag]],
            kind,
        )
        .unwrap()
    }

    #[test]
    fn lattice_names_match_axiom_sets() {
        assert_eq!(MetricKind::named(KindName::Met).axioms().len(), 4);
        assert_eq!(
            MetricKind::from_axioms([Axiom::Symmetry, Axiom::Triangle]).name(),
            Some(KindName::DMet)
        );
        // strong triangle pulls in the ordinary triangle
        let k = MetricKind::from_axioms([
            Axiom::Symmetry,
            Axiom::Reflexivity,
            Axiom::IdentityOfIndiscernibles,
            Axiom::StrongTriangle,
        ]);
        assert!(k.has(Axiom::Triangle));
        assert_eq!(k.name(), Some(KindName::UMet));
        assert_eq!(MetricKind::from_axioms([]).name(), Some(KindName::FRel));
    }

    #[test]
    fn diffuse_point_with_half_self_distance() {
        let s = FiniteSpace::new(names(&["a"]), vec![vec![u(1, 2)]], MetricKind::dmet()).unwrap();
        assert!(validate_space(&s).is_valid());
        let p = s.clone().with_kind(MetricKind::named(KindName::PMet));
        let report = validate_space(&p);
        assert_eq!(
            report.violations,
            vec![Violation {
                axiom: Axiom::Reflexivity,
                witness: names(&["a"])
            }]
        );
    }

    #[test]
    fn triangle_violation_is_witnessed() {
        let rows = vec![
            vec![u(0, 1), u(1, 5), u(9, 10)],
            vec![u(1, 5), u(0, 1), u(3, 10)],
            vec![u(9, 10), u(3, 10), u(0, 1)],
        ];
        let report = validate_matrix(names(&["a", "b", "c"]), rows, MetricKind::met()).unwrap();
        assert!(report.violations.contains(&Violation {
            axiom: Axiom::Triangle,
            witness: names(&["a", "b", "c"]),
        }));
        assert!(report.violations.iter().all(|v| v.axiom == Axiom::Triangle));
    }

    #[test]
    fn malformed_matrix_is_structural() {
        let err = validate_matrix(names(&["a", "b"]), vec![vec![u(0, 1)]], MetricKind::met());
        assert!(matches!(err, Err(SpaceError::Malformed { .. })));
    }

    #[test]
    fn product_takes_the_maximum() {
        let met = MetricKind::met();
        let a = two_point(u(3, 10), u(0, 1), met, "a1", "a2");
        let b = two_point(u(7, 10), u(0, 1), met, "b1", "b2");
        let p = product(&[a.clone(), b]).unwrap();
        assert_eq!(p.distance("(a1,b1)", "(a2,b2)").unwrap(), &u(7, 10));
        assert_eq!(p.distance("(a1,b1)", "(a2,b1)").unwrap(), &u(3, 10));

        let with_terminal = product(&[a.clone(), terminal(met)]).unwrap();
        assert_eq!(
            with_terminal.distance("(a1,*)", "(a2,*)").unwrap(),
            &u(3, 10)
        );
        assert!(validate_space(&with_terminal).is_valid());
    }

    #[test]
    fn terminal_self_distance_depends_on_reflexivity() {
        assert!(terminal(MetricKind::dmet()).d(0, 0).is_one());
        assert!(terminal(MetricKind::met()).d(0, 0).is_zero());
    }

    #[test]
    fn mixed_kinds_are_rejected() {
        let a = terminal(MetricKind::met());
        let b = terminal(MetricKind::dmet());
        assert!(matches!(
            product(&[a.clone(), b.clone()]),
            Err(SpaceError::KindMismatch(..))
        ));
        assert!(matches!(
            coproduct(&[a, b]),
            Err(SpaceError::KindMismatch(..))
        ));
        assert!(matches!(product(&[]), Err(SpaceError::Empty)));
    }

    #[test]
    fn coproduct_separates_components() {
        let met = MetricKind::met();
        let one = FiniteSpace::new(names(&["a"]), vec![vec![u(0, 1)]], met).unwrap();
        let c = coproduct(&[one.clone(), one]).unwrap();
        assert_eq!(c.distance("0.a", "1.a").unwrap(), &UnitValue::one());
        assert!(c.distance("0.a", "0.a").unwrap().is_zero());

        let diffuse =
            FiniteSpace::new(names(&["a"]), vec![vec![u(1, 2)]], MetricKind::dmet()).unwrap();
        let c = coproduct(&[diffuse.clone(), diffuse]).unwrap();
        assert_eq!(c.distance("0.a", "1.a").unwrap(), &UnitValue::one());
        assert_eq!(c.distance("1.a", "1.a").unwrap(), &u(1, 2));
        assert!(validate_space(&c).is_valid());
    }

    #[test]
    fn restriction_and_inclusion() {
        let rows = vec![
            vec![u(0, 1), u(1, 5), u(2, 5)],
            vec![u(1, 5), u(0, 1), u(3, 10)],
            vec![u(2, 5), u(3, 10), u(0, 1)],
        ];
        let s = FiniteSpace::new(names(&["a", "b", "c"]), rows, MetricKind::met()).unwrap();
        assert_eq!(restrict(&s, s.points()).unwrap(), s);
        let sub = restrict(&s, &names(&["a", "c"])).unwrap();
        assert_eq!(sub.distance("a", "c").unwrap(), &u(2, 5));
        let inc = SpaceMap::inclusion(&s, &names(&["a", "c"])).unwrap();
        assert!(check_isometric_embedding(&inc));
        assert!(matches!(
            restrict(&s, &names(&["z"])),
            Err(SpaceError::UnknownPoint(_))
        ));
    }

    #[test]
    fn embedding_checks() {
        let s = two_point(u(1, 2), u(0, 1), MetricKind::met(), "a", "b");
        assert!(check_isometric_embedding(&SpaceMap::identity(s.clone())));
        let constant = SpaceMap::new(s.clone(), s, vec![0, 0]).unwrap();
        assert!(!check_isometric_embedding(&constant));
    }

    #[test]
    fn random_spaces_satisfy_their_kind() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for name in KindName::ALL {
            for n in 1..=5 {
                let s = random_space(MetricKind::named(name), n, 10, &mut rng);
                assert!(validate_space(&s).is_valid(), "{name:?} {s:?}");
            }
        }
    }
}
