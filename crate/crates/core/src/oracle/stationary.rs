//! Stationary distributions of finite row-stochastic chains.

use std::collections::VecDeque;

use num_integer::Integer;

use crate::error::{Error, Result};

/// Row-stochastic matrix stored as sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseChain {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseChain {
    /// Merges duplicate column entries and drops zeros. Rows must sum to one
    /// within `1e-9`.
    pub fn new(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let k = rows.len();
        let mut merged = Vec::with_capacity(k);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_unstable_by_key(|&(j, _)| j);
            let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (j, p) in row {
                if j >= k || !(p >= 0.0) {
                    return Err(Error::InvalidLambda(format!("bad transition {i} -> {j} ({p})")));
                }
                match out.last_mut() {
                    Some(last) if last.0 == j => last.1 += p,
                    _ => out.push((j, p)),
                }
            }
            out.retain(|&(_, p)| p > 0.0);
            let total: f64 = out.iter().map(|&(_, p)| p).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidLambda(format!("row {i} sums to {total}")));
            }
            merged.push(out);
        }
        Ok(Self { rows: merged })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map_or(0.0, |pos| self.rows[i][pos].1)
    }

    /// `max_j |(x P)_j - x_j|`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let next = self.left_multiply(x);
        next.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    fn left_multiply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for (i, row) in self.rows.iter().enumerate() {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for &(j, p) in row {
                out[j] += xi * p;
            }
        }
        out
    }

    /// States reachable from `start` by positive-probability moves.
    pub fn accessible_from(&self, start: usize) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        seen[start] = true;
        let mut order = vec![start];
        let mut head = 0;
        while head < order.len() {
            let i = order[head];
            head += 1;
            for &(j, _) in &self.rows[i] {
                if !seen[j] {
                    seen[j] = true;
                    order.push(j);
                }
            }
        }
        order.sort_unstable();
        order
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryConfig {
    /// Bound on `||πP - π||_∞`.
    pub tolerance: f64,
    /// Largest chain solved by dense elimination; bigger chains use power
    /// iteration.
    pub direct_limit: usize,
    pub max_iterations: usize,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            direct_limit: 5000,
            max_iterations: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    PowerIteration { iterations: usize },
}

/// Stationary distribution of the sub-chain accessible from a start state.
#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    /// Accessible states, ascending.
    pub accessible: Vec<usize>,
    /// Full-length distribution; zero outside `accessible`.
    pub pi: Vec<f64>,
    pub residual: f64,
    pub method: SolveMethod,
}

/// Solves `πP = π`, `Σπ = 1` on the states accessible from `start`.
///
/// The accessible sub-chain must be irreducible and aperiodic; otherwise the
/// decomposition is reported as an error.
pub fn stationary_distribution(chain: &SparseChain, start: usize, config: &StationaryConfig) -> Result<Stationary> {
    let k = chain.len();
    if start >= k {
        return Err(Error::InvalidLambda(format!("start state {start} outside chain of {k}")));
    }
    let accessible = chain.accessible_from(start);
    let mut local = vec![usize::MAX; k];
    for (pos, &i) in accessible.iter().enumerate() {
        local[i] = pos;
    }
    let sub_rows: Vec<Vec<(usize, f64)>> = accessible
        .iter()
        .map(|&i| chain.row(i).iter().map(|&(j, p)| (local[j], p)).collect())
        .collect();
    let sub = SparseChain { rows: sub_rows };
    let sub_start = local[start];

    let returning = sub.reverse_reachable(sub_start);
    if returning != sub.len() {
        return Err(Error::Reducible {
            accessible: sub.len(),
            returning,
        });
    }
    let period = sub.period(sub_start);
    if period != 1 {
        return Err(Error::Periodic(period));
    }

    let (local_pi, method) = if sub.len() <= config.direct_limit {
        (sub.solve_direct()?, SolveMethod::Direct)
    } else {
        let (pi, iterations) = sub.power_iterate(sub_start, config)?;
        (pi, SolveMethod::PowerIteration { iterations })
    };
    let residual = sub.residual(&local_pi);
    if !(residual <= config.tolerance) {
        return Err(Error::NotConverged {
            tolerance: config.tolerance,
            residual,
        });
    }
    let mut pi = vec![0.0; k];
    for (pos, &i) in accessible.iter().enumerate() {
        pi[i] = local_pi[pos];
    }
    Ok(Stationary {
        accessible,
        pi,
        residual,
        method,
    })
}

impl SparseChain {
    fn reverse_reachable(&self, target: usize) -> usize {
        let mut reverse = vec![Vec::new(); self.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, _) in row {
                reverse[j].push(i);
            }
        }
        let mut seen = vec![false; self.len()];
        seen[target] = true;
        let mut count = 1;
        let mut queue = VecDeque::from([target]);
        while let Some(j) = queue.pop_front() {
            for &i in &reverse[j] {
                if !seen[i] {
                    seen[i] = true;
                    count += 1;
                    queue.push_back(i);
                }
            }
        }
        count
    }

    /// Period of an irreducible chain: gcd of `level(i) + 1 - level(j)` over
    /// all edges, with levels from a breadth-first search.
    fn period(&self, start: usize) -> usize {
        let mut level = vec![usize::MAX; self.len()];
        level[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for &(j, _) in &self.rows[i] {
                if level[j] == usize::MAX {
                    level[j] = level[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        let mut g = 0usize;
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, _) in row {
                let diff = (level[i] as i64 + 1 - level[j] as i64).unsigned_abs() as usize;
                g = g.gcd(&diff);
            }
        }
        g.max(1)
    }

    /// Dense Gaussian elimination with partial pivoting on `π(P - I) = 0`
    /// with the last balance equation replaced by normalization.
    fn solve_direct(&self) -> Result<Vec<f64>> {
        let m = self.len();
        // a[row * m + col]: row = equation j, col = unknown π_i
        let mut a = vec![0.0f64; m * m];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                a[j * m + i] += p;
            }
            a[i * m + i] -= 1.0;
        }
        let mut b = vec![0.0f64; m];
        for i in 0..m {
            a[(m - 1) * m + i] = 1.0;
        }
        b[m - 1] = 1.0;

        for col in 0..m {
            let pivot = (col..m)
                .max_by(|&x, &y| a[x * m + col].abs().total_cmp(&a[y * m + col].abs()))
                .expect("nonempty range");
            if a[pivot * m + col].abs() < 1e-300 {
                return Err(Error::NotConverged {
                    tolerance: 0.0,
                    residual: f64::INFINITY,
                });
            }
            if pivot != col {
                for c in 0..m {
                    a.swap(pivot * m + c, col * m + c);
                }
                b.swap(pivot, col);
            }
            let (upper, lower) = a.split_at_mut((col + 1) * m);
            let pivot_row = &upper[col * m..(col + 1) * m];
            let diag = pivot_row[col];
            for (r, row) in lower.chunks_exact_mut(m).enumerate() {
                let factor = row[col] / diag;
                if factor == 0.0 {
                    continue;
                }
                for c in col..m {
                    row[c] -= factor * pivot_row[c];
                }
                b[col + 1 + r] -= factor * b[col];
            }
        }
        let mut x = vec![0.0f64; m];
        for r in (0..m).rev() {
            let mut acc = b[r];
            for c in r + 1..m {
                acc -= a[r * m + c] * x[c];
            }
            x[r] = acc / a[r * m + r];
        }
        Ok(x)
    }

    fn power_iterate(&self, start: usize, config: &StationaryConfig) -> Result<(Vec<f64>, usize)> {
        let mut x = vec![0.0; self.len()];
        x[start] = 1.0;
        let mut last_delta = f64::INFINITY;
        for iteration in 1..=config.max_iterations {
            let next = self.left_multiply(&x);
            // l1 change, so sums of many entries are as accurate as one
            last_delta = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
            x = next;
            if last_delta <= config.tolerance * 0.5 {
                let total: f64 = x.iter().sum();
                x.iter_mut().for_each(|v| *v /= total);
                return Ok((x, iteration));
            }
        }
        Err(Error::NotConverged {
            tolerance: config.tolerance,
            residual: last_delta,
        })
    }
}
