//! Bounded saturation: the congruence and distance table a quantitative
//! theory induces on ground terms up to a depth.
//!
//! Ground terms are hash-consed into e-classes. The universe is grown in
//! stages: stage 0 holds the constants, stage `k` adds `f(c1, ..., cn)` for
//! every symbol instance and every tuple of classes present after stage
//! `k-1`, which is the set of depth-`k` terms up to the congruence. Each
//! stage then runs rounds of
//!
//! 1. axiom instances (premises checked against the current state),
//! 2. congruence rebuild,
//! 3. kind closure (reflexivity, symmetry, triangle relaxation, merging of
//!    classes at distance zero under identity of indiscernibles),
//! 4. `L-NE` on every pair of applications of the same symbol, with `Δ` the
//!    current distances on the argument classes,
//! 5. kind closure again,
//!
//! until nothing changes or `max_rounds` is hit. Distances only decrease
//! and classes only merge; merged classes keep the pointwise minimum.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_traits::Signed;
use thiserror::Error;

use crate::expr::Expr;
use crate::gmet::{self, Axiom, FiniteSpace, MetricKind};
use crate::liftings::{DistanceTable, Lifting, LiftingRule};
use crate::terms::{canonical_cmp, instantiate_params, Symbol, Term};
use crate::theory::{self, HornClause, Theory};
use crate::unit::{format_rational, Rational, UnitValue};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SaturationError {
    #[error("the universe would exceed {budget} nodes at depth {depth}")]
    Budget { budget: usize, depth: usize },
    #[error("term `{0}` is outside the saturated universe; try a larger depth")]
    OutsideUniverse(String),
    #[error("symbol `{0}`: {1}")]
    Lifting(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaturationConfig {
    pub depth: usize,
    pub max_rounds: usize,
    /// Cap on the number of hash-consed nodes.
    pub materialization_budget: usize,
    /// Rounds of parameter closure applied to the theory first.
    pub param_closure: usize,
}

impl Default for SaturationConfig {
    fn default() -> Self {
        Self {
            depth: 1,
            max_rounds: 64,
            materialization_budget: 50_000,
            param_closure: 0,
        }
    }
}

impl SaturationConfig {
    pub fn with_depth(depth: usize) -> Self {
        Self {
            depth,
            ..Self::default()
        }
    }
}

/// One recorded use of `L-NE` that lowered a distance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LneApplication {
    pub symbol: Symbol,
    pub lifting: Lifting,
    /// `Δ` on the distinct argument classes.
    pub delta: Vec<Vec<UnitValue>>,
    pub lhs: Vec<usize>,
    pub rhs: Vec<usize>,
    pub value: UnitValue,
}

impl LneApplication {
    /// Re-checks the proviso and recomputes the conclusion.
    pub fn replay(&self, kind: MetricKind) -> bool {
        let idx: Vec<usize> = (0..self.delta.len()).collect();
        satisfies_kind(&self.delta, &idx, kind)
            && self
                .lifting
                .tuple_distance(&self.delta, kind, &self.lhs, &self.rhs)
                == self.value
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Head {
    Const(usize),
    Op(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Node {
    head: Head,
    children: Vec<usize>,
}

struct SymInfo {
    sym: Symbol,
    arity: usize,
    lifting: Lifting,
}

#[derive(Debug, Clone)]
enum Pat {
    Var(usize),
    Const(usize),
    App(usize, Vec<Pat>),
}

/// An axiom instance with parameters fixed.
struct Instance {
    premises: Vec<(Pat, Pat, Option<Expr>)>,
    lhs: Pat,
    rhs: Pat,
    eps: Option<Expr>,
    env: Vec<(String, Rational)>,
    nvars: usize,
    /// Variables fixed by matching `lhs` (and `rhs` when `join`).
    match_lhs: bool,
    match_rhs: bool,
}

struct Engine {
    kind: MetricKind,
    symbols: Vec<SymInfo>,
    sym_index: HashMap<Symbol, usize>,
    consts: Vec<String>,
    const_index: HashMap<String, usize>,
    nodes: Vec<Node>,
    parent: Vec<usize>,
    // slot-level view, rebuilt by `compact`
    roots: Vec<usize>,
    slot: Vec<usize>,
    dist: Vec<Vec<UnitValue>>,
    by_key: HashMap<(Head, Vec<usize>), usize>,
    class_nodes: Vec<Vec<(Head, Vec<usize>)>>,
    log: Vec<LneApplication>,
    warnings: Vec<String>,
    budget: usize,
}

const NONE: usize = usize::MAX;

impl Engine {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.parent[hi] = lo;
        true
    }

    fn fresh_value(&self, diagonal: bool) -> UnitValue {
        if diagonal && self.kind.has(Axiom::Reflexivity) {
            UnitValue::zero()
        } else {
            UnitValue::one()
        }
    }

    /// Adds a node whose children are slots; returns true if it is new.
    fn add(&mut self, head: Head, child_slots: &[usize]) -> bool {
        let key = (head.clone(), child_slots.to_vec());
        if self.by_key.contains_key(&key) {
            return false;
        }
        let children = child_slots.iter().map(|&s| self.roots[s]).collect();
        let id = self.nodes.len();
        self.nodes.push(Node { head, children });
        self.parent.push(id);
        self.by_key.insert(key, NONE);
        true
    }

    /// Restores congruence: nodes with equal heads and equal child classes
    /// are merged, repeatedly.
    fn rebuild(&mut self) {
        loop {
            let mut seen: HashMap<Node, usize> = HashMap::with_capacity(self.nodes.len());
            let mut changed = false;
            for id in 0..self.nodes.len() {
                let children: Vec<usize> = self.nodes[id].children.clone();
                let children = children.into_iter().map(|c| self.find(c)).collect();
                let canon = Node {
                    head: self.nodes[id].head.clone(),
                    children,
                };
                match seen.get(&canon) {
                    Some(&other) => changed |= self.union(other, id),
                    None => {
                        seen.insert(canon, id);
                    }
                }
            }
            if !changed {
                return;
            }
        }
    }

    /// Renumbers classes into dense slots, folding distances of merged
    /// classes by minimum. Returns true if any entry changed.
    fn compact(&mut self) -> bool {
        let old_roots = std::mem::take(&mut self.roots);
        let old_dist = std::mem::take(&mut self.dist);
        let n = self.nodes.len();
        let mut new_slot = vec![NONE; n];
        let mut roots = Vec::new();
        for id in 0..n {
            let r = self.find(id);
            if new_slot[r] == NONE {
                new_slot[r] = roots.len();
                roots.push(r);
            }
        }
        let c = roots.len();
        let mut dist: Vec<Vec<Option<UnitValue>>> = vec![vec![None; c]; c];
        let group: Vec<usize> = old_roots.iter().map(|&r| new_slot[self.find(r)]).collect();
        for (a, row) in old_dist.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                let cell = &mut dist[group[a]][group[b]];
                if cell.as_ref().is_none_or(|cur| v < cur) {
                    *cell = Some(v.clone());
                }
            }
        }
        let dist: Vec<Vec<UnitValue>> = dist
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(j, v)| v.unwrap_or_else(|| self.fresh_value(i == j)))
                    .collect()
            })
            .collect();
        let changed = c != old_roots.len()
            || old_dist.iter().enumerate().any(|(a, row)| {
                row.iter()
                    .enumerate()
                    .any(|(b, v)| &dist[group[a]][group[b]] != v)
            });

        let mut class_nodes: Vec<BTreeSet<(Head, Vec<usize>)>> = vec![BTreeSet::new(); c];
        let mut by_key = HashMap::with_capacity(n);
        for id in 0..n {
            let head = self.nodes[id].head.clone();
            let children: Vec<usize> = self.nodes[id]
                .children
                .clone()
                .into_iter()
                .map(|ch| new_slot[self.find(ch)])
                .collect();
            let s = new_slot[self.find(id)];
            by_key.insert((head.clone(), children.clone()), s);
            class_nodes[s].insert((head, children));
        }
        self.slot = new_slot;
        self.roots = roots;
        self.dist = dist;
        self.by_key = by_key;
        self.class_nodes = class_nodes
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect();
        changed
    }

    fn classes(&self) -> usize {
        self.roots.len()
    }

    /// Applies merges and lowerings, then restores the slot view.
    fn commit(
        &mut self,
        merges: &[(usize, usize)],
        lowerings: Vec<(usize, usize, UnitValue)>,
    ) -> bool {
        let mut changed = false;
        for (i, j, v) in lowerings {
            if v < self.dist[i][j] {
                self.dist[i][j] = v;
                changed = true;
            }
        }
        let mut merged = false;
        for &(a, b) in merges {
            let (ra, rb) = (self.roots[a], self.roots[b]);
            merged |= self.union(ra, rb);
        }
        if merged {
            self.rebuild();
            self.compact();
            changed = true;
        }
        changed
    }

    fn kind_closure(&mut self) -> bool {
        let mut changed = false;
        loop {
            let before = self.dist.clone();
            gmet::close_matrix(&mut self.dist, self.kind);
            changed |= before != self.dist;
            if !self.kind.has(Axiom::IdentityOfIndiscernibles) {
                return changed;
            }
            let c = self.classes();
            let zeros: Vec<(usize, usize)> = (0..c)
                .flat_map(|i| (0..c).map(move |j| (i, j)))
                .filter(|&(i, j)| i != j && self.dist[i][j].is_zero())
                .collect();
            if zeros.is_empty() {
                return changed;
            }
            self.commit(&zeros, Vec::new());
            changed = true;
        }
    }

    // patterns -----------------------------------------------------------

    fn compile(&self, t: &Term, vars: &mut Vec<String>) -> Option<Pat> {
        Some(match t {
            Term::Var(v) => {
                let i = vars.iter().position(|x| x == v).unwrap_or_else(|| {
                    vars.push(v.clone());
                    vars.len() - 1
                });
                Pat::Var(i)
            }
            Term::Const(c) => Pat::Const(*self.const_index.get(c)?),
            Term::App(s, args) => {
                let idx = *self.sym_index.get(s)?;
                let args = args
                    .iter()
                    .map(|a| self.compile(a, vars))
                    .collect::<Option<Vec<_>>>()?;
                Pat::App(idx, args)
            }
        })
    }

    fn const_slot(&self, c: usize) -> Option<usize> {
        self.by_key.get(&(Head::Const(c), Vec::new())).copied()
    }

    fn ematch(&self, pat: &Pat, slot: usize, binds: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
        match pat {
            Pat::Var(v) => binds
                .into_iter()
                .filter_map(|mut b| {
                    if b[*v] == NONE {
                        b[*v] = slot;
                        Some(b)
                    } else if b[*v] == slot {
                        Some(b)
                    } else {
                        None
                    }
                })
                .collect(),
            Pat::Const(c) => {
                if self.const_slot(*c) == Some(slot) {
                    binds
                } else {
                    Vec::new()
                }
            }
            Pat::App(f, args) => {
                let mut out = Vec::new();
                for (head, children) in &self.class_nodes[slot] {
                    if *head != Head::Op(*f) {
                        continue;
                    }
                    let mut bs = binds.clone();
                    for (a, &ch) in args.iter().zip(children) {
                        bs = self.ematch(a, ch, bs);
                        if bs.is_empty() {
                            break;
                        }
                    }
                    out.extend(bs);
                }
                out
            }
        }
    }

    fn lookup(&self, pat: &Pat, b: &[usize]) -> Option<usize> {
        match pat {
            Pat::Var(v) => Some(b[*v]).filter(|&s| s != NONE),
            Pat::Const(c) => self.const_slot(*c),
            Pat::App(f, args) => {
                let ch = args
                    .iter()
                    .map(|a| self.lookup(a, b))
                    .collect::<Option<Vec<_>>>()?;
                self.by_key.get(&(Head::Op(*f), ch)).copied()
            }
        }
    }

    fn matches_anywhere(&self, pat: &Pat, nvars: usize) -> Vec<(usize, Vec<usize>)> {
        let mut out = Vec::new();
        for s in 0..self.classes() {
            for b in self.ematch(pat, s, vec![vec![NONE; nvars]]) {
                out.push((s, b));
            }
        }
        out
    }

    // rules ----------------------------------------------------------------

    fn instances(
        &self,
        axioms: &[HornClause],
        sig_params: &dyn Fn(&str) -> Vec<Rational>,
    ) -> Vec<Instance> {
        let mut out = Vec::new();
        for h in axioms {
            let binders = theory::param_binders(h);
            let names: Vec<&String> = binders.keys().collect();
            let domains: Vec<Vec<Rational>> =
                names.iter().map(|n| sig_params(&binders[*n])).collect();
            let sizes: Vec<usize> = domains.iter().map(Vec::len).collect();
            'inst: for idx in gmet::index_tuples(&sizes) {
                let env: Vec<(String, Rational)> = names
                    .iter()
                    .zip(&idx)
                    .zip(&domains)
                    .map(|((n, &i), d)| ((*n).clone(), d[i].clone()))
                    .collect();
                let lookup = |v: &str| env.iter().find(|(n, _)| n == v).map(|(_, r)| r.clone());
                let mut vars = Vec::new();
                let mut premises = Vec::new();
                for p in &h.premises {
                    let (Some(l), Some(r)) = (
                        instantiate_params(p.lhs(), &lookup)
                            .and_then(|t| self.compile(&t, &mut vars)),
                        instantiate_params(p.rhs(), &lookup)
                            .and_then(|t| self.compile(&t, &mut vars)),
                    ) else {
                        continue 'inst;
                    };
                    premises.push((l, r, p.eps().cloned()));
                }
                let c = &h.conclusion;
                let (Some(lhs), Some(rhs)) = (
                    instantiate_params(c.lhs(), &lookup).and_then(|t| self.compile(&t, &mut vars)),
                    instantiate_params(c.rhs(), &lookup).and_then(|t| self.compile(&t, &mut vars)),
                ) else {
                    continue;
                };
                let lv = c.lhs().vars();
                let rv = c.rhs().vars();
                let is_app = |p: &Pat| matches!(p, Pat::App(..));
                let (match_lhs, match_rhs) = if is_app(&lhs) && rv.is_subset(&lv) {
                    (true, false)
                } else if is_app(&rhs) && lv.is_subset(&rv) {
                    (false, true)
                } else {
                    (is_app(&lhs), is_app(&rhs))
                };
                out.push(Instance {
                    premises,
                    lhs,
                    rhs,
                    eps: c.eps().cloned(),
                    env,
                    nvars: vars.len(),
                    match_lhs,
                    match_rhs,
                });
            }
        }
        out
    }

    fn apply_axioms(&mut self, instances: &[Instance]) -> bool {
        let mut merges = Vec::new();
        let mut lowerings = Vec::new();
        for inst in instances {
            let mut binds: Vec<Vec<usize>> = vec![vec![NONE; inst.nvars]];
            if inst.match_lhs {
                binds = self
                    .matches_anywhere(&inst.lhs, inst.nvars)
                    .into_iter()
                    .map(|(_, b)| b)
                    .collect();
            }
            if inst.match_rhs {
                let right = self.matches_anywhere(&inst.rhs, inst.nvars);
                binds = binds
                    .iter()
                    .flat_map(|b| right.iter().filter_map(move |(_, r)| join(b, r)))
                    .collect();
            }
            // variables not fixed by matching range over all classes
            for v in 0..inst.nvars {
                if binds.iter().any(|b| b[v] == NONE) {
                    let c = self.classes();
                    binds = binds
                        .into_iter()
                        .flat_map(|b| {
                            (0..c).map(move |s| {
                                let mut b = b.clone();
                                if b[v] == NONE {
                                    b[v] = s;
                                }
                                b
                            })
                        })
                        .collect();
                }
            }
            for b in binds {
                self.fire(inst, &b, &mut merges, &mut lowerings);
            }
        }
        self.commit(&merges, lowerings)
    }

    fn fire(
        &mut self,
        inst: &Instance,
        b: &[usize],
        merges: &mut Vec<(usize, usize)>,
        lowerings: &mut Vec<(usize, usize, UnitValue)>,
    ) {
        let mut env = inst.env.clone();
        for (l, r, eps) in &inst.premises {
            let (Some(l), Some(r)) = (self.lookup(l, b), self.lookup(r, b)) else {
                return;
            };
            match eps {
                None => {
                    if l != r {
                        return;
                    }
                }
                Some(Expr::Var(label)) if !env.iter().any(|(n, _)| n == label) => {
                    env.push((label.clone(), self.dist[l][r].as_rational().clone()));
                }
                Some(e) => {
                    let lookup = |v: &str| env.iter().find(|(n, _)| n == v).map(|(_, x)| x.clone());
                    match e.eval(&lookup) {
                        Ok(v) if self.dist[l][r].as_rational() <= &v => {}
                        _ => return,
                    }
                }
            }
        }
        let (Some(l), Some(r)) = (self.lookup(&inst.lhs, b), self.lookup(&inst.rhs, b)) else {
            return;
        };
        match &inst.eps {
            None => {
                if l != r {
                    merges.push((l, r));
                }
            }
            Some(e) => {
                let lookup = |v: &str| env.iter().find(|(n, _)| n == v).map(|(_, x)| x.clone());
                let Ok(v) = e.eval(&lookup) else {
                    self.warnings
                        .push(format!("bound `{e}` could not be evaluated"));
                    return;
                };
                if v.is_negative() {
                    self.warnings.push(format!(
                        "bound `{e}` evaluated to {}; instance skipped",
                        format_rational(&v)
                    ));
                    return;
                }
                let u = UnitValue::clamped(v.clone());
                if u.as_rational() != &v {
                    self.warnings.push(format!(
                        "bound `{e}` evaluated to {}; clamped to 1",
                        format_rational(&v)
                    ));
                }
                if u < self.dist[l][r] {
                    lowerings.push((l, r, u));
                }
            }
        }
    }

    fn apply_lne(&mut self) -> bool {
        let refl = self.kind.has(Axiom::Reflexivity);
        let sym = self.kind.has(Axiom::Symmetry);
        let mut by_symbol: Vec<Vec<(Vec<usize>, usize)>> = vec![Vec::new(); self.symbols.len()];
        for (s, nodes) in self.class_nodes.iter().enumerate() {
            for (head, ch) in nodes {
                if let Head::Op(f) = head {
                    by_symbol[*f].push((ch.clone(), s));
                }
            }
        }
        let mut lowerings = Vec::new();
        let mut log = Vec::new();
        for (f, apps) in by_symbol.iter().enumerate() {
            let info = &self.symbols[f];
            if info.arity == 0 {
                continue;
            }
            let half = sym && !matches!(info.lifting.rule, LiftingRule::Custom(_));
            for (i, (sa, ca)) in apps.iter().enumerate() {
                let start = if half { i } else { 0 };
                for (sb, cb) in &apps[start..] {
                    if refl && sa == sb {
                        continue;
                    }
                    let v = info.lifting.tuple_distance(&self.dist, self.kind, sa, sb);
                    if v >= self.dist[*ca][*cb] {
                        continue;
                    }
                    let mut pts: Vec<usize> = sa.iter().chain(sb).copied().collect();
                    pts.sort_unstable();
                    pts.dedup();
                    if !satisfies_kind(&self.dist, &pts, self.kind) {
                        continue;
                    }
                    let pos = |x: &usize| pts.binary_search(x).expect("collected");
                    log.push(LneApplication {
                        symbol: info.sym.clone(),
                        lifting: info.lifting.clone(),
                        delta: pts
                            .iter()
                            .map(|&x| pts.iter().map(|&y| self.dist[x][y].clone()).collect())
                            .collect(),
                        lhs: sa.iter().map(pos).collect(),
                        rhs: sb.iter().map(pos).collect(),
                        value: v.clone(),
                    });
                    lowerings.push((*ca, *cb, v));
                }
            }
        }
        // several pairs may land on one cell; keep the minimum
        lowerings.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.cmp(&b.2)));
        lowerings.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
        self.log.extend(log);
        self.commit(&[], lowerings)
    }

    fn grow(&mut self) -> Result<(), usize> {
        let c = self.classes();
        let extra: usize = self
            .symbols
            .iter()
            .filter(|s| s.arity > 0)
            .map(|s| c.saturating_pow(s.arity as u32))
            .fold(0usize, usize::saturating_add);
        if self.nodes.len().saturating_add(extra) > self.budget {
            return Err(self.budget);
        }
        for f in 0..self.symbols.len() {
            let n = self.symbols[f].arity;
            if n == 0 {
                continue;
            }
            for t in gmet::index_tuples(&vec![c; n]) {
                self.add(Head::Op(f), &t);
            }
        }
        self.rebuild();
        self.compact();
        Ok(())
    }
}

fn join(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| match (x, y) {
            (NONE, y) => Some(y),
            (x, NONE) => Some(x),
            (x, y) if x == y => Some(x),
            _ => None,
        })
        .collect()
}

/// Whether the submatrix on `idx` satisfies the axioms of `kind`.
fn satisfies_kind(d: &dyn DistanceTable, idx: &[usize], kind: MetricKind) -> bool {
    for &i in idx {
        if kind.has(Axiom::Reflexivity) && !d.get(i, i).is_zero() {
            return false;
        }
        for &j in idx {
            if kind.has(Axiom::Symmetry) && d.get(i, j) != d.get(j, i) {
                return false;
            }
            if kind.has(Axiom::IdentityOfIndiscernibles) && i != j && d.get(i, j).is_zero() {
                return false;
            }
            for &k in idx {
                let (ij, jk, ik) = (d.get(i, j), d.get(j, k), d.get(i, k));
                if kind.has(Axiom::Triangle)
                    && ik.as_rational() > &(ij.as_rational() + jk.as_rational())
                {
                    return false;
                }
                if kind.has(Axiom::StrongTriangle) && ik > ij.max(jk) {
                    return false;
                }
            }
        }
    }
    true
}

/// The congruence classes and distances of a saturation run, in canonical
/// order of class representatives.
#[derive(Debug, Clone)]
pub struct SaturationResult {
    pub kind: MetricKind,
    pub config: SaturationConfig,
    pub fixpoint_reached: bool,
    pub round_count: usize,
    /// Whether parameter closure (if requested) found every parameter.
    pub closure_complete: bool,
    pub warnings: Vec<String>,
    pub log: Vec<LneApplication>,
    representatives: Vec<Term>,
    dist: Vec<Vec<UnitValue>>,
    symbols: Vec<(Symbol, usize, Lifting)>,
    /// Per symbol: introduced by parameter closure rather than declared.
    auxiliary: Vec<bool>,
    sym_index: HashMap<Symbol, usize>,
    constants: HashMap<String, usize>,
    apps: HashMap<(usize, Vec<usize>), usize>,
    nodes_per_class: Vec<usize>,
}

impl SaturationResult {
    pub fn class_count(&self) -> usize {
        self.representatives.len()
    }

    pub fn representative(&self, class: usize) -> &Term {
        &self.representatives[class]
    }

    pub fn representatives(&self) -> &[Term] {
        &self.representatives
    }

    pub fn class_distance(&self, a: usize, b: usize) -> &UnitValue {
        &self.dist[a][b]
    }

    pub fn matrix(&self) -> &Vec<Vec<UnitValue>> {
        &self.dist
    }

    /// Number of distinct hash-consed nodes in each class.
    pub fn class_sizes(&self) -> &[usize] {
        &self.nodes_per_class
    }

    /// The instantiated symbols with arity and lifting.
    pub fn symbols(&self) -> &[(Symbol, usize, Lifting)] {
        &self.symbols
    }

    /// Class of `f(c1, ..., cn)`, if that application is in the universe.
    pub fn apply_symbol(&self, sym: &Symbol, args: &[usize]) -> Option<usize> {
        let f = *self.sym_index.get(sym)?;
        self.apps.get(&(f, args.to_vec())).copied()
    }

    pub fn constant_class(&self, name: &str) -> Option<usize> {
        self.constants.get(name).copied()
    }

    pub fn class_of(&self, t: &Term) -> Option<usize> {
        match t {
            Term::Var(_) => None,
            Term::Const(c) => self.constant_class(c),
            Term::App(s, args) => {
                let ch = args
                    .iter()
                    .map(|a| self.class_of(a))
                    .collect::<Option<Vec<_>>>()?;
                self.apply_symbol(s, &ch)
            }
        }
    }

    fn require(&self, t: &Term) -> Result<usize, SaturationError> {
        self.class_of(t)
            .ok_or_else(|| SaturationError::OutsideUniverse(t.to_string()))
    }

    pub fn derived_distance(&self, s: &Term, t: &Term) -> Result<UnitValue, SaturationError> {
        Ok(self.dist[self.require(s)?][self.require(t)?].clone())
    }

    pub fn same_class(&self, s: &Term, t: &Term) -> Result<bool, SaturationError> {
        Ok(self.require(s)? == self.require(t)?)
    }

    /// One term per hash-consed node (its head over representative
    /// arguments), in canonical order.
    pub fn universe(&self) -> Vec<Term> {
        let mut out: Vec<Term> = self
            .constants
            .keys()
            .map(|c| Term::constant(c))
            .chain(self.apps.keys().map(|(f, ch)| {
                Term::App(
                    self.symbols[*f].0.clone(),
                    ch.iter()
                        .map(|&c| self.representatives[c].clone())
                        .collect(),
                )
            }))
            .collect();
        out.sort_by(canonical_cmp);
        out.dedup();
        out
    }

    /// The universe terms built only from declared symbol instances,
    /// leaving out those whose parameters came from parameter closure.
    pub fn declared_universe(&self) -> Vec<Term> {
        let mut u = self.universe();
        u.retain(|t| {
            let mut ok = true;
            t.visit(&mut |s| {
                if let Term::App(sym, _) = s {
                    ok &= self.sym_index.get(sym).is_some_and(|&f| !self.auxiliary[f]);
                }
            });
            ok
        });
        u
    }

    /// Whether `sym` was added by parameter closure.
    pub fn is_auxiliary(&self, sym: &Symbol) -> bool {
        self.sym_index.get(sym).is_some_and(|&f| self.auxiliary[f])
    }

    /// The distance table as a finite space with points `k0, k1, ...`.
    pub fn quotient_space(&self) -> FiniteSpace {
        let points = (0..self.class_count()).map(class_point).collect();
        FiniteSpace::new(points, self.dist.clone(), self.kind).expect("square")
    }

    pub fn dump_text(&self) -> String {
        let mut out = String::new();
        for (i, r) in self.representatives.iter().enumerate() {
            out.push_str(&format!("{i}: {r}\n"));
        }
        for i in 0..self.class_count() {
            for j in 0..self.class_count() {
                if self.kind.has(Axiom::Symmetry) && j < i {
                    continue;
                }
                out.push_str(&format!("d({i}, {j}) = {}\n", self.dist[i][j]));
            }
        }
        out
    }

    pub fn dump_tsv(&self) -> String {
        let mut out = String::new();
        for (i, r) in self.representatives.iter().enumerate() {
            out.push_str(&format!("class\t{i}\t{r}\n"));
        }
        for i in 0..self.class_count() {
            for j in 0..self.class_count() {
                out.push_str(&format!("dist\t{i}\t{j}\t{}\n", self.dist[i][j]));
            }
        }
        out
    }

    #[doc(hidden)]
    pub fn set_class_distance(&mut self, a: usize, b: usize, v: UnitValue) {
        self.dist[a][b] = v;
    }
}

impl fmt::Display for SaturationResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump_text())
    }
}

/// Name of the quotient-space point for class `i`.
pub fn class_point(i: usize) -> String {
    format!("k{i}")
}

pub fn saturate(th: &Theory, cfg: &SaturationConfig) -> Result<SaturationResult, SaturationError> {
    let declared: std::collections::HashSet<Symbol> =
        th.sig.instances().into_iter().map(|(s, _)| s).collect();
    let closure = theory::close_parameters(th, cfg.param_closure);
    let th = &closure.theory;
    let mut symbols = Vec::new();
    let mut sym_index = HashMap::new();
    for (sym, arity) in th.sig.instances() {
        let lifting = th
            .sig
            .lifting_of(&sym)
            .map_err(|e| SaturationError::Lifting(sym.to_string(), e.to_string()))?;
        sym_index.insert(sym.clone(), symbols.len());
        symbols.push(SymInfo {
            sym,
            arity,
            lifting,
        });
    }
    let consts: Vec<String> = th.sig.constants().to_vec();
    let const_index = consts
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), i))
        .collect();
    let mut e = Engine {
        kind: th.kind,
        symbols,
        sym_index,
        consts,
        const_index,
        nodes: Vec::new(),
        parent: Vec::new(),
        roots: Vec::new(),
        slot: Vec::new(),
        dist: Vec::new(),
        by_key: HashMap::new(),
        class_nodes: Vec::new(),
        log: Vec::new(),
        warnings: Vec::new(),
        budget: cfg.materialization_budget,
    };
    for c in 0..e.consts.len() {
        e.add(Head::Const(c), &[]);
    }
    for f in 0..e.symbols.len() {
        if e.symbols[f].arity == 0 {
            e.add(Head::Op(f), &[]);
        }
    }
    if e.nodes.len() > e.budget {
        return Err(SaturationError::Budget {
            budget: e.budget,
            depth: 0,
        });
    }
    e.rebuild();
    e.compact();

    let params = |name: &str| -> Vec<Rational> {
        th.sig
            .op(name)
            .and_then(|o| o.params.clone())
            .map(|s| s.into_iter().collect())
            .unwrap_or_default()
    };
    let mut rounds = 0;
    let mut fixpoint = false;
    for stage in 0..=cfg.depth {
        if stage > 0 {
            e.grow().map_err(|budget| SaturationError::Budget {
                budget,
                depth: stage,
            })?;
        }
        // patterns refer to symbols and constants only, so they survive merges
        let instances = e.instances(&th.axioms, &params);
        fixpoint = false;
        for _ in 0..cfg.max_rounds {
            rounds += 1;
            let mut changed = e.apply_axioms(&instances);
            changed |= e.kind_closure();
            changed |= e.apply_lne();
            changed |= e.kind_closure();
            if !changed {
                fixpoint = true;
                break;
            }
        }
    }
    if cfg.param_closure > 0 && !closure.complete {
        e.warnings.push(format!(
            "parameter closure incomplete after {} round(s)",
            cfg.param_closure
        ));
    }
    let auxiliary = e
        .symbols
        .iter()
        .map(|s| !declared.contains(&s.sym))
        .collect();
    Ok(finish(
        e,
        th.kind,
        cfg.clone(),
        fixpoint,
        rounds,
        closure.complete,
        auxiliary,
    ))
}

fn finish(
    mut e: Engine,
    kind: MetricKind,
    config: SaturationConfig,
    fixpoint_reached: bool,
    round_count: usize,
    closure_complete: bool,
    auxiliary: Vec<bool>,
) -> SaturationResult {
    let c = e.classes();
    let term_of = |head: &Head, ch: &[usize], reps: &[Option<Term>], e: &Engine| -> Option<Term> {
        Some(match head {
            Head::Const(i) => Term::constant(&e.consts[*i]),
            Head::Op(f) => Term::App(
                e.symbols[*f].sym.clone(),
                ch.iter()
                    .map(|&s| reps[s].clone())
                    .collect::<Option<Vec<_>>>()?,
            ),
        })
    };
    let mut reps: Vec<Option<Term>> = vec![None; c];
    loop {
        let mut changed = false;
        for s in 0..c {
            for (head, ch) in &e.class_nodes[s] {
                if let Some(t) = term_of(head, ch, &reps, &e) {
                    if reps[s]
                        .as_ref()
                        .is_none_or(|r| canonical_cmp(&t, r).is_lt())
                    {
                        reps[s] = Some(t);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let reps: Vec<Term> = reps
        .into_iter()
        .map(|r| r.expect("every class has a ground node"))
        .collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| canonical_cmp(&reps[a], &reps[b]));
    let mut rank = vec![0; c];
    for (k, &s) in order.iter().enumerate() {
        rank[s] = k;
    }
    let dist = order
        .iter()
        .map(|&a| order.iter().map(|&b| e.dist[a][b].clone()).collect())
        .collect();
    let mut constants = HashMap::new();
    let mut apps = HashMap::new();
    for s in 0..c {
        for (head, ch) in &e.class_nodes[s] {
            match head {
                Head::Const(i) => {
                    constants.insert(e.consts[*i].clone(), rank[s]);
                }
                Head::Op(f) => {
                    apps.insert((*f, ch.iter().map(|&x| rank[x]).collect()), rank[s]);
                }
            }
        }
    }
    let nodes_per_class = order.iter().map(|&s| e.class_nodes[s].len()).collect();
    let symbols: Vec<(Symbol, usize, Lifting)> = e
        .symbols
        .iter()
        .map(|s| (s.sym.clone(), s.arity, s.lifting.clone()))
        .collect();
    let sym_index = e.sym_index.clone();
    SaturationResult {
        kind,
        config,
        fixpoint_reached,
        round_count,
        closure_complete,
        warnings: std::mem::take(&mut e.warnings),
        log: std::mem::take(&mut e.log),
        representatives: order.iter().map(|&s| reps[s].clone()).collect(),
        dist,
        symbols,
        auxiliary,
        sym_index,
        constants,
        apps,
        nodes_per_class,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_ground_term, parse_theory_file};

    fn run(text: &str, depth: usize) -> (SaturationResult, Theory) {
        let file = parse_theory_file(text).unwrap();
        let th = file.extended().unwrap();
        let r = saturate(&th, &SaturationConfig::with_depth(depth)).unwrap();
        (r, th)
    }

    fn t(th: &Theory, s: &str) -> Term {
        parse_ground_term(s, &th.sig).unwrap()
    }

    #[test]
    fn empty_theory_two_constants() {
        let (r, th) = run("kind Met\nspace { points a, b }\n", 0);
        assert!(r.fixpoint_reached);
        assert!(r
            .derived_distance(&t(&th, "a"), &t(&th, "b"))
            .unwrap()
            .is_one());
        assert!(r
            .derived_distance(&t(&th, "a"), &t(&th, "a"))
            .unwrap()
            .is_zero());
        assert!(!r.same_class(&t(&th, "a"), &t(&th, "b")).unwrap());
    }

    #[test]
    fn lk_counterexample_reaches_three_quarters() {
        let (r, th) = run(
            "kind DMet
op plus arity 2 lifting lk(p)
params plus { 1/2 }
axiom plus(p; x, x) = x
axiom plus(p; x, y) = plus(1-p; y, x)
space { points a, b; d a a = 1/2; d b b = 1/2; d a b = 1 }
",
            1,
        );
        let m = t(&th, "plus(1/2; a, b)");
        assert_eq!(
            r.derived_distance(&m, &m).unwrap(),
            UnitValue::from_ratio(3, 4)
        );
        assert!(r
            .derived_distance(&t(&th, "a"), &t(&th, "b"))
            .unwrap()
            .is_one());
        assert!(r.log.iter().all(|a| a.replay(r.kind)));
        assert!(r.same_class(&m, &t(&th, "plus(1/2; b, a)")).unwrap());
    }

    #[test]
    fn semilattice_idempotency_merges() {
        let (r, th) = run(
            "kind Met
op join arity 2 lifting sup
axiom join(x, y) = join(y, x)
axiom join(x, x) = x
axiom join(x, join(y, z)) = join(join(x, y), z)
space { points a }
",
            2,
        );
        assert!(r
            .same_class(&t(&th, "join(a, join(a, a))"), &t(&th, "a"))
            .unwrap());
        assert_eq!(r.class_count(), 1);
        assert!(r
            .derived_distance(&t(&th, "a"), &t(&th, "join(a, a)"))
            .unwrap()
            .is_zero());
    }

    #[test]
    fn outside_universe_is_an_error() {
        let (r, th) = run(
            "kind Met\nop f arity 1 lifting sup\nspace { points a }\n",
            1,
        );
        let deep = t(&th, "f(f(a))");
        assert!(matches!(
            r.derived_distance(&deep, &deep),
            Err(SaturationError::OutsideUniverse(_))
        ));
    }

    #[test]
    fn dumps_are_deterministic() {
        let text =
            "kind Met\nop f arity 1 lifting scaled(1/2)\nspace { points a, b; d a b = 1/2 }\n";
        let (r1, _) = run(text, 2);
        let (r2, _) = run(text, 2);
        assert_eq!(r1.dump_tsv(), r2.dump_tsv());
        assert!(r1.dump_text().contains("d(0, 1) = 1/2"));
        assert!(r1.dump_text().contains("1: b"));
    }
}
