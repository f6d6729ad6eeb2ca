//! Householder QR for small dense least-squares problems.
//!
//! The design matrix is stored column-major. After factorization the upper
//! triangle holds `R` (diagonal kept in `r_diag`) and each column below the
//! diagonal holds its Householder vector.

#[derive(Debug, Clone)]
pub(crate) struct HouseholderQr {
    rows: usize,
    cols: usize,
    /// Column-major working storage, `cols` columns of `rows` entries.
    a: Vec<f64>,
    r_diag: Vec<f64>,
    /// Householder scaling `beta_k` with `H_k = I - beta_k v_k v_k^T`.
    betas: Vec<f64>,
}

impl HouseholderQr {
    /// Factorizes a `rows x cols` matrix given as columns. Requires
    /// `rows >= cols`.
    pub(crate) fn factor(columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        debug_assert!(rows >= cols);
        let mut a = Vec::with_capacity(rows * cols);
        for c in columns {
            debug_assert_eq!(c.len(), rows);
            a.extend_from_slice(c);
        }
        let mut r_diag = vec![0.0; cols];
        let mut betas = vec![0.0; cols];

        for k in 0..cols {
            let (head, tail) = a.split_at_mut((k + 1) * rows);
            let col = &mut head[k * rows..];
            let norm = col[k..].iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                r_diag[k] = 0.0;
                continue;
            }
            let alpha = if col[k] > 0.0 { -norm } else { norm };
            // v = x - alpha e_k, stored in place
            col[k] -= alpha;
            let vtv: f64 = col[k..].iter().map(|x| x * x).sum();
            let beta = if vtv == 0.0 { 0.0 } else { 2.0 / vtv };
            betas[k] = beta;
            r_diag[k] = alpha;
            for j in 0..(cols - k - 1) {
                let other = &mut tail[j * rows..(j + 1) * rows];
                let dot: f64 = col[k..]
                    .iter()
                    .zip(&other[k..])
                    .map(|(v, x)| v * x)
                    .sum();
                let s = beta * dot;
                for (x, v) in other[k..].iter_mut().zip(&col[k..]) {
                    *x -= s * v;
                }
            }
        }
        HouseholderQr {
            rows,
            cols,
            a,
            r_diag,
            betas,
        }
    }

    pub(crate) fn r_diag(&self) -> &[f64] {
        &self.r_diag
    }

    /// `R[i][j]` for `i <= j`.
    fn r(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.r_diag[i]
        } else {
            self.a[j * self.rows + i]
        }
    }

    /// Applies `Q^T` to `y` in place.
    fn apply_qt(&self, y: &mut [f64]) {
        for k in 0..self.cols {
            let beta = self.betas[k];
            if beta == 0.0 {
                continue;
            }
            let v = &self.a[k * self.rows + k..(k + 1) * self.rows];
            let dot: f64 = v.iter().zip(&y[k..]).map(|(v, y)| v * y).sum();
            let s = beta * dot;
            for (yi, vi) in y[k..].iter_mut().zip(v) {
                *yi -= s * vi;
            }
        }
    }

    /// Least-squares solution of `A x = y`. `R` must be nonsingular.
    pub(crate) fn solve(&self, y: &[f64]) -> Vec<f64> {
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        let p = self.cols;
        let mut x = vec![0.0; p];
        for i in (0..p).rev() {
            let s = (i + 1..p).fold(qty[i], |acc, j| acc - self.r(i, j) * x[j]);
            x[i] = s / self.r_diag[i];
        }
        x
    }

    /// Diagonal of `(A^T A)^{-1} = R^{-1} R^{-T}`, i.e. squared row norms of
    /// `R^{-1}`.
    pub(crate) fn inverse_gram_diag(&self) -> Vec<f64> {
        let p = self.cols;
        // R^{-1} is upper triangular; build it column by column.
        let mut rinv = vec![0.0; p * p]; // row-major
        for j in 0..p {
            rinv[j * p + j] = 1.0 / self.r_diag[j];
            for i in (0..j).rev() {
                let mut s = 0.0;
                for k in i + 1..=j {
                    s += self.r(i, k) * rinv[k * p + j];
                }
                rinv[i * p + j] = -s / self.r_diag[i];
            }
        }
        (0..p)
            .map(|i| rinv[i * p..(i + 1) * p].iter().map(|x| x * x).sum())
            .collect()
    }
}
