//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use chrono::NaiveDate;
use contract_lab::marketdata::{AssetId, ContractMonth, ObservationPanel, ObservationRow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

pub struct NormalEquationFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
}

/// Gauss-Jordan inverse with partial pivoting.
fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let p = a.len();
    let mut inv: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for j in 0..p {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..p {
            if i != col {
                let f = a[i][col];
                for j in 0..p {
                    a[i][j] -= f * a[col][j];
                    inv[i][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

/// OLS with intercept via `(X'X)^{-1} X'y`, every inner product summed
/// pairwise.
pub fn normal_equation_ols(y: &[f64], predictors: &[Vec<f64>]) -> NormalEquationFit {
    let n = y.len();
    let mut cols = vec![vec![1.0; n]];
    cols.extend(predictors.iter().cloned());
    let p = cols.len();
    let dot = |a: &[f64], b: &[f64]| {
        let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        pairwise_sum(&prods)
    };
    let gram: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| dot(&cols[i], &cols[j])).collect())
        .collect();
    let xty: Vec<f64> = cols.iter().map(|c| dot(c, y)).collect();
    let inv = invert(gram);
    let coefficients: Vec<f64> = (0..p).map(|i| dot(&inv[i], &xty)).collect();
    let residuals: Vec<f64> = (0..n)
        .map(|r| y[r] - (0..p).map(|j| cols[j][r] * coefficients[j]).sum::<f64>())
        .collect();
    let sigma2 = dot(&residuals, &residuals) / (n - p) as f64;
    let std_errors: Vec<f64> = (0..p).map(|i| (sigma2 * inv[i][i]).sqrt()).collect();
    let t_stats = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, s)| b / s)
        .collect();
    NormalEquationFit {
        coefficients,
        std_errors,
        t_stats,
    }
}

/// Random `n`-row panel with a linear signal in m, v and o plus noise.
pub fn random_panel(seed: u64, n: usize) -> ObservationPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let beta: [f64; 4] = [
        rng.random_range(-5.0..5.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-0.1..0.1),
        rng.random_range(-0.1..0.1),
    ];
    let rows = (0..n)
        .map(|i| {
            let m = (n - 1 - i) as u32;
            let v: f64 = rng.random_range(0.0..500.0);
            let o: f64 = rng.random_range(0.0..800.0);
            let noise: f64 = rng.random_range(-3.0..3.0);
            ObservationRow {
                date: start + chrono::Days::new(i as u64),
                dv: beta[0] + beta[1] * f64::from(m) + beta[2] * v + beta[3] * o + noise,
                m,
                v,
                o,
            }
        })
        .collect();
    ObservationPanel {
        asset: AssetId::Custom("test".into()),
        contract_month: ContractMonth::new(2020, 3).unwrap(),
        rows,
        dropped: vec![],
        unmatched_spot: 0,
    }
}

pub fn panel_columns(panel: &ObservationPanel) -> (Vec<f64>, Vec<Vec<f64>>) {
    let y = panel.rows.iter().map(|r| r.dv).collect();
    let m = panel.rows.iter().map(|r| f64::from(r.m)).collect();
    let v = panel.rows.iter().map(|r| r.v).collect();
    let o = panel.rows.iter().map(|r| r.o).collect();
    (y, vec![m, v, o])
}

/// `|a - b| <= tol * |b|`.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs()
}
