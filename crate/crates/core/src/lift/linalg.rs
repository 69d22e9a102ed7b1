use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::Zero;

use crate::expr::Scalar;

/// Relative singular-value threshold of [`float_rank`]. Tighten it for
/// near-degenerate frames.
pub const RANK_THRESHOLD: f64 = 1e-8;

/// Rank of a set of rational row vectors by row reduction.
pub fn exact_rank(rows: &[Vec<BigRational>]) -> usize {
    let mut m: Vec<Vec<BigRational>> = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| !m[r][c].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        for r in rank + 1..m.len() {
            if m[r][c].is_zero() {
                continue;
            }
            let f = &m[r][c] / &m[rank][c];
            for k in c..cols {
                let sub = &f * &m[rank][k];
                m[r][k] -= sub;
            }
        }
        rank += 1;
    }
    rank
}

/// Numerical rank: singular values above `RANK_THRESHOLD · σ_max`.
pub fn float_rank(rows: &[Vec<f64>]) -> usize {
    let cols = rows.first().map_or(0, |r| r.len());
    if rows.is_empty() || cols == 0 {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_THRESHOLD * top).count()
}

/// Rank of scalar rows, exact when every entry is exact.
pub(crate) fn scalar_rank(rows: &[Vec<Scalar>]) -> usize {
    let exact: Option<Vec<Vec<BigRational>>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|v| match v {
                    Scalar::Exact(q) => Some(q.clone()),
                    Scalar::Float(_) => None,
                })
                .collect()
        })
        .collect();
    match exact {
        Some(m) => exact_rank(&m),
        None => float_rank(&rows.iter().map(|r| r.iter().map(Scalar::to_f64).collect()).collect::<Vec<_>>()),
    }
}
