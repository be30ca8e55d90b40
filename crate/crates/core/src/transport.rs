//! Exact transportation simplex over rationals.
//!
//! Solves `min Σ c(i,j) x(i,j)` subject to row sums `supply` and column sums
//! `demand` (equal totals), starting from the north-west corner basis and
//! pivoting with Bland's rule so degenerate pivots cannot cycle. The optimal
//! basis yields dual potentials `u`, `v` with `u_i + v_j ≤ c(i,j)`, which
//! certify optimality by strong duality.

use std::collections::VecDeque;

use num_traits::{Signed, Zero};

use crate::unit::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportSolution {
    pub flow: Vec<Vec<Rational>>,
    pub row_potentials: Vec<Rational>,
    pub col_potentials: Vec<Rational>,
    pub value: Rational,
    pub pivots: usize,
}

/// Why a claimed solution fails to certify.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CertificateError {
    #[error("negative flow at ({0},{1})")]
    NegativeFlow(usize, usize),
    #[error("row {0} does not ship its supply")]
    RowMarginal(usize),
    #[error("column {0} does not receive its demand")]
    ColumnMarginal(usize),
    #[error("dual constraint violated at ({0},{1})")]
    DualInfeasible(usize, usize),
    #[error("primal value {primal} differs from dual value {dual}")]
    DualityGap { primal: String, dual: String },
}

pub fn solve(
    supply: &[Rational],
    demand: &[Rational],
    cost: &dyn Fn(usize, usize) -> Rational,
) -> TransportSolution {
    let (m, n) = (supply.len(), demand.len());
    assert!(m > 0 && n > 0, "transport needs non-empty marginals");
    let c: Vec<Vec<Rational>> = (0..m)
        .map(|i| (0..n).map(|j| cost(i, j)).collect())
        .collect();

    let mut flow = vec![vec![Rational::zero(); n]; m];
    let mut basic = vec![vec![false; n]; m];
    let (mut s, mut d) = (supply.to_vec(), demand.to_vec());
    let (mut i, mut j) = (0, 0);
    loop {
        let x = s[i].clone().min(d[j].clone());
        s[i] -= &x;
        d[j] -= &x;
        flow[i][j] = x;
        basic[i][j] = true;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if s[i].is_zero() && i < m - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }

    let mut pivots = 0;
    loop {
        let (u, v) = potentials(&c, &basic);
        let entering = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .find(|&(i, j)| !basic[i][j] && (&c[i][j] - &u[i] - &v[j]).is_negative());
        let Some((ei, ej)) = entering else {
            let value = (0..m)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| &flow[i][j] * &c[i][j])
                .fold(Rational::zero(), |a, b| a + b);
            return TransportSolution {
                flow,
                row_potentials: u,
                col_potentials: v,
                value,
                pivots,
            };
        };
        let path = tree_path(&basic, m, n, ej, ei);
        // path edges alternate starting with a decreasing one
        let minus: Vec<(usize, usize)> = path.iter().step_by(2).copied().collect();
        let theta = minus
            .iter()
            .map(|&(i, j)| flow[i][j].clone())
            .min()
            .expect("cycle has a decreasing edge");
        let leaving = minus
            .iter()
            .filter(|&&(i, j)| flow[i][j] == theta)
            .min_by_key(|&&(i, j)| i * n + j)
            .copied()
            .expect("leaving edge");
        for (k, &(i, j)) in path.iter().enumerate() {
            if k % 2 == 0 {
                flow[i][j] -= &theta;
            } else {
                flow[i][j] += &theta;
            }
        }
        flow[ei][ej] += &theta;
        basic[leaving.0][leaving.1] = false;
        basic[ei][ej] = true;
        pivots += 1;
    }
}

fn potentials(c: &[Vec<Rational>], basic: &[Vec<bool>]) -> (Vec<Rational>, Vec<Rational>) {
    let (m, n) = (c.len(), c[0].len());
    let mut u: Vec<Option<Rational>> = vec![None; m];
    let mut v: Vec<Option<Rational>> = vec![None; n];
    u[0] = Some(Rational::zero());
    let mut queue = VecDeque::from([(true, 0usize)]);
    while let Some((is_row, k)) = queue.pop_front() {
        if is_row {
            let ui = u[k].clone().expect("set");
            for j in 0..n {
                if basic[k][j] && v[j].is_none() {
                    v[j] = Some(&c[k][j] - &ui);
                    queue.push_back((false, j));
                }
            }
        } else {
            let vj = v[k].clone().expect("set");
            for i in 0..m {
                if basic[i][k] && u[i].is_none() {
                    u[i] = Some(&c[i][k] - &vj);
                    queue.push_back((true, i));
                }
            }
        }
    }
    (
        u.into_iter()
            .map(|x| x.expect("basis spans rows"))
            .collect(),
        v.into_iter()
            .map(|x| x.expect("basis spans columns"))
            .collect(),
    )
}

/// Basic cells on the tree path from column `col` to row `row`, in order.
fn tree_path(
    basic: &[Vec<bool>],
    m: usize,
    n: usize,
    col: usize,
    row: usize,
) -> Vec<(usize, usize)> {
    // nodes: rows 0..m, columns m..m+n
    let mut parent: Vec<Option<usize>> = vec![None; m + n];
    let start = m + col;
    parent[start] = Some(start);
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        if x == row {
            break;
        }
        let neighbours: Vec<usize> = if x < m {
            (0..n).filter(|&j| basic[x][j]).map(|j| m + j).collect()
        } else {
            (0..m).filter(|&i| basic[i][x - m]).collect()
        };
        for y in neighbours {
            if parent[y].is_none() {
                parent[y] = Some(x);
                queue.push_back(y);
            }
        }
    }
    let mut edges = Vec::new();
    let mut x = row;
    while x != start {
        let p = parent[x].expect("tree is connected");
        let cell = if x < m { (x, p - m) } else { (p, x - m) };
        edges.push(cell);
        x = p;
    }
    edges.reverse();
    edges
}

/// Checks primal feasibility, dual feasibility and equal objective values.
#[allow(clippy::needless_range_loop)]
pub fn certify(
    sol: &TransportSolution,
    supply: &[Rational],
    demand: &[Rational],
    cost: &dyn Fn(usize, usize) -> Rational,
) -> Result<(), CertificateError> {
    let (m, n) = (supply.len(), demand.len());
    let mut primal = Rational::zero();
    for i in 0..m {
        let mut row = Rational::zero();
        for j in 0..n {
            let x = &sol.flow[i][j];
            if x.is_negative() {
                return Err(CertificateError::NegativeFlow(i, j));
            }
            row += x;
            primal += x * cost(i, j);
            if &sol.row_potentials[i] + &sol.col_potentials[j] > cost(i, j) {
                return Err(CertificateError::DualInfeasible(i, j));
            }
        }
        if row != supply[i] {
            return Err(CertificateError::RowMarginal(i));
        }
    }
    for j in 0..n {
        let col: Rational = (0..m).map(|i| sol.flow[i][j].clone()).sum();
        if col != demand[j] {
            return Err(CertificateError::ColumnMarginal(j));
        }
    }
    let dual: Rational = supply
        .iter()
        .zip(&sol.row_potentials)
        .map(|(s, u)| s * u)
        .chain(demand.iter().zip(&sol.col_potentials).map(|(d, v)| d * v))
        .sum();
    if primal != dual || primal != sol.value {
        return Err(CertificateError::DualityGap {
            primal: primal.to_string(),
            dual: dual.to_string(),
        });
    }
    Ok(())
}
