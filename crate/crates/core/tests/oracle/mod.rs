//! Test-side reference implementations. Nothing here calls into the
//! library's distance code: distributions are plain weight maps, ŁK is the
//! double sum, Kantorovich is an integer min-cost flow, and axioms are
//! checked directly on the matrix.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use quantalg::distributions::Dist;
use quantalg::{FiniteSpace, Rational, Term};

pub type Weights = BTreeMap<String, Rational>;

pub fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

pub fn dirac(a: &str) -> Weights {
    BTreeMap::from([(a.to_string(), Rational::one())])
}

pub fn weights(d: &Dist) -> Weights {
    d.support().map(|(a, w)| (a.clone(), w.clone())).collect()
}

pub fn to_dist(w: &Weights) -> Dist {
    Dist::new(w.iter().map(|(a, x)| (a.clone(), x.clone())).collect()).expect("probability weights")
}

/// `p·mu + (1-p)·nu`.
pub fn mix(p: &Rational, mu: &Weights, nu: &Weights) -> Weights {
    let q = Rational::one() - p;
    let mut out = Weights::new();
    for (a, w) in mu {
        *out.entry(a.clone()).or_insert_with(Rational::zero) += p * w;
    }
    for (a, w) in nu {
        *out.entry(a.clone()).or_insert_with(Rational::zero) += &q * w;
    }
    out.retain(|_, w| !w.is_zero());
    out
}

fn d(space: &FiniteSpace, a: &str, b: &str) -> Rational {
    let i = space.index_of(a).expect("atom of the space");
    let j = space.index_of(b).expect("atom of the space");
    space.d(i, j).as_rational().clone()
}

pub fn lk(space: &FiniteSpace, mu: &Weights, nu: &Weights) -> Rational {
    let mut total = Rational::zero();
    for (a, x) in mu {
        for (b, y) in nu {
            total += x * y * d(space, a, b);
        }
    }
    total
}

/// `p²·c00 + p(1-p)·(c01 + c10) + (1-p)²·c11`, spelled out.
pub fn bilinear(
    p: &Rational,
    c00: &Rational,
    c01: &Rational,
    c10: &Rational,
    c11: &Rational,
) -> Rational {
    let q = Rational::one() - p;
    p * p * c00 + p * &q * c01 + &q * p * c10 + &q * &q * c11
}

/// Evaluates a term whose parametric binary symbols are convex
/// combinations; constants are looked up in `env`.
pub fn eval(t: &Term, env: &dyn Fn(&str) -> Weights) -> Weights {
    match t {
        Term::Var(v) => panic!("variable {v} in a ground term"),
        Term::Const(c) => env(c),
        Term::App(s, args) => {
            let p = s.param_value().expect("parametric symbol");
            assert_eq!(args.len(), 2);
            mix(p, &eval(&args[0], env), &eval(&args[1], env))
        }
    }
}

fn lcm_of<'a>(xs: impl Iterator<Item = &'a Rational>) -> BigInt {
    xs.fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// Minimum transport cost by successive shortest paths on integers
/// (weights and costs scaled to a common denominator).
pub fn kantorovich(space: &FiniteSpace, mu: &Weights, nu: &Weights) -> Rational {
    let rows: Vec<(&String, &Rational)> = mu.iter().collect();
    let cols: Vec<(&String, &Rational)> = nu.iter().collect();
    let (m, n) = (rows.len(), cols.len());
    let wl = lcm_of(rows.iter().chain(&cols).map(|(_, w)| *w));
    let cost_r: Vec<Vec<Rational>> = rows
        .iter()
        .map(|(a, _)| cols.iter().map(|(b, _)| d(space, a, b)).collect())
        .collect();
    let cl = lcm_of(cost_r.iter().flatten());
    let int = |x: &Rational, l: &BigInt| {
        (x * Rational::from_integer(l.clone()))
            .to_integer()
            .to_i128()
            .expect("small")
    };
    let cost: Vec<Vec<i128>> = cost_r
        .iter()
        .map(|row| row.iter().map(|c| int(c, &cl)).collect())
        .collect();
    let mut supply: Vec<i128> = rows.iter().map(|(_, w)| int(w, &wl)).collect();
    let mut demand: Vec<i128> = cols.iter().map(|(_, w)| int(w, &wl)).collect();
    let mut flow = vec![vec![0i128; n]; m];

    // nodes: rows 0..m, columns m..m+n
    while supply.iter().any(|&s| s > 0) {
        let mut dist = vec![i128::MAX; m + n];
        let mut pred = vec![usize::MAX; m + n];
        for i in 0..m {
            if supply[i] > 0 {
                dist[i] = 0;
            }
        }
        for _ in 0..m + n {
            let mut changed = false;
            for i in 0..m {
                for j in 0..n {
                    if dist[i] != i128::MAX && dist[i] + cost[i][j] < dist[m + j] {
                        dist[m + j] = dist[i] + cost[i][j];
                        pred[m + j] = i;
                        changed = true;
                    }
                    if flow[i][j] > 0
                        && dist[m + j] != i128::MAX
                        && dist[m + j] - cost[i][j] < dist[i]
                    {
                        dist[i] = dist[m + j] - cost[i][j];
                        pred[i] = m + j;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let sink = (0..n)
            .filter(|&j| demand[j] > 0 && dist[m + j] != i128::MAX)
            .min_by_key(|&j| dist[m + j])
            .expect("balanced marginals");
        let mut path = Vec::new();
        let mut v = m + sink;
        while pred[v] != usize::MAX {
            path.push((pred[v], v));
            v = pred[v];
        }
        let source = v;
        let mut amount = supply[source].min(demand[sink]);
        for &(u, w) in &path {
            if u >= m {
                amount = amount.min(flow[w][u - m]);
            }
        }
        for &(u, w) in &path {
            if u < m {
                flow[u][w - m] += amount;
            } else {
                flow[w][u - m] -= amount;
            }
        }
        supply[source] -= amount;
        demand[sink] -= amount;
    }
    let total: i128 = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| flow[i][j] * cost[i][j])
        .sum();
    Rational::new(total.into(), wl * cl)
}

/// Which of the five axioms fail on a matrix, by number.
pub fn failing_axioms(m: &[Vec<Rational>]) -> Vec<u8> {
    let n = m.len();
    let mut bad = Vec::new();
    let all = |f: &dyn Fn(usize, usize, usize) -> bool| {
        (0..n).all(|i| (0..n).all(|j| (0..n).all(|k| f(i, j, k))))
    };
    if !all(&|i, j, _| m[i][j] == m[j][i]) {
        bad.push(1);
    }
    if !all(&|i, _, _| m[i][i].is_zero()) {
        bad.push(2);
    }
    if !all(&|i, j, _| !m[i][j].is_zero() || i == j) {
        bad.push(3);
    }
    if !all(&|i, j, k| m[i][k] <= &m[i][j] + &m[j][k]) {
        bad.push(4);
    }
    if !all(&|i, j, k| m[i][k] <= m[i][j].clone().max(m[j][k].clone())) {
        bad.push(5);
    }
    bad
}

pub fn matrix(space: &FiniteSpace) -> Vec<Vec<Rational>> {
    (0..space.len())
        .map(|i| {
            (0..space.len())
                .map(|j| space.d(i, j).as_rational().clone())
                .collect()
        })
        .collect()
}

/// Every distribution on `points` with at most `max_support` atoms and
/// weights in `(1/k)ℕ` for some `k ≤ max_den`.
pub fn small_distributions(points: &[String], max_support: usize, max_den: i64) -> Vec<Weights> {
    let mut seen = std::collections::BTreeSet::new();
    for k in 1..=max_den {
        let mut counts = vec![0i64; points.len()];
        compositions(k, 0, &mut counts, &mut |c| {
            if c.iter().filter(|&&x| x > 0).count() <= max_support {
                let w: Weights = points
                    .iter()
                    .zip(c)
                    .filter(|(_, &x)| x > 0)
                    .map(|(p, &x)| (p.clone(), r(x, k)))
                    .collect();
                seen.insert(w);
            }
        });
    }
    seen.into_iter().collect()
}

fn compositions(left: i64, at: usize, c: &mut Vec<i64>, f: &mut dyn FnMut(&[i64])) {
    if at + 1 == c.len() {
        c[at] = left;
        f(c);
        return;
    }
    for x in 0..=left {
        c[at] = x;
        compositions(left - x, at + 1, c, f);
    }
}

pub fn is_nonneg(x: &Rational) -> bool {
    !x.is_negative()
}
