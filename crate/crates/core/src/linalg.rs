//! Small dense least-squares kernels built on a row-updated QR factor.
//!
//! Rows are folded into an upper-triangular factor `R` with Givens rotations,
//! so `X = QR` is never materialised and adding a subject costs `O(p^2)`.

use nalgebra::{DMatrix, DVector};

/// Singular-value ratio below which a design is declared rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct RowQr {
    r: DMatrix<f64>,
    rows: usize,
    scratch: Vec<f64>,
}

impl RowQr {
    pub fn new(ncols: usize) -> Self {
        RowQr {
            r: DMatrix::zeros(ncols, ncols),
            rows: 0,
            scratch: vec![0.0; ncols],
        }
    }

    pub fn ncols(&self) -> usize {
        self.r.ncols()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn clear(&mut self) {
        self.r.fill(0.0);
        self.rows = 0;
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// Folds one observation row into the factor.
    pub fn push(&mut self, row: &[f64]) {
        let p = self.ncols();
        debug_assert_eq!(row.len(), p);
        let x = &mut self.scratch;
        x.copy_from_slice(row);
        for j in 0..p {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let rjj = self.r[(j, j)];
            let h = rjj.hypot(xj);
            let c = rjj / h;
            let s = xj / h;
            self.r[(j, j)] = h;
            #[allow(clippy::needless_range_loop)]
            for k in j + 1..p {
                let rjk = self.r[(j, k)];
                let xk = x[k];
                self.r[(j, k)] = c * rjk + s * xk;
                x[k] = c * xk - s * rjk;
            }
        }
        self.rows += 1;
    }

    /// Whether the leading `q x q` block of `R` has full numerical rank.
    pub fn full_rank(&self, q: usize) -> bool {
        if self.rows < q {
            return false;
        }
        full_rank_upper(&self.r.view((0, 0), (q, q)).into_owned())
    }

    /// Solves `X'X b = rhs` through `R'R b = rhs` (two triangular solves).
    pub fn solve_gram(&self, rhs: &[f64]) -> DVector<f64> {
        let mut z = DVector::from_column_slice(rhs);
        let r = &self.r;
        let p = r.ncols();
        for i in 0..p {
            let mut acc = z[i];
            for k in 0..i {
                acc -= r[(k, i)] * z[k];
            }
            z[i] = acc / r[(i, i)];
        }
        back_substitute(r, p, &mut z);
        z
    }
}

fn full_rank_upper(r: &DMatrix<f64>) -> bool {
    let sv = r.singular_values();
    let max = sv.max();
    let min = sv.min();
    max > 0.0 && max.is_finite() && min / max >= RANK_TOLERANCE
}

/// Solves `R[..q,..q] b = z[..q]` in place.
fn back_substitute(r: &DMatrix<f64>, q: usize, z: &mut DVector<f64>) {
    for i in (0..q).rev() {
        let mut acc = z[i];
        for k in i + 1..q {
            acc -= r[(i, k)] * z[k];
        }
        z[i] = acc / r[(i, i)];
    }
}

/// Ordinary least-squares fit with coefficient standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub residual_variance: f64,
    pub n: usize,
}

/// Accumulates rows `[x | y]` and solves the least-squares problem by QR.
#[derive(Debug, Clone)]
pub struct OlsAccumulator {
    qr: RowQr,
    row: Vec<f64>,
}

impl OlsAccumulator {
    pub fn new(n_regressors: usize) -> Self {
        OlsAccumulator {
            qr: RowQr::new(n_regressors + 1),
            row: vec![0.0; n_regressors + 1],
        }
    }

    pub fn push(&mut self, x: &[f64], y: f64) {
        let q = self.row.len() - 1;
        self.row[..q].copy_from_slice(x);
        self.row[q] = y;
        self.qr.push(&self.row);
    }

    pub fn rows(&self) -> usize {
        self.qr.rows()
    }

    /// `None` when there are no residual degrees of freedom or the design is
    /// rank deficient.
    pub fn solve(&self) -> Option<OlsFit> {
        let q = self.row.len() - 1;
        let n = self.qr.rows();
        if n <= q || !self.qr.full_rank(q) {
            return None;
        }
        let r = self.qr.r();
        let mut z = DVector::from_iterator(q, (0..q).map(|i| r[(i, q)]));
        back_substitute(r, q, &mut z);
        let rss = r[(q, q)] * r[(q, q)];
        let sigma2 = rss / (n - q) as f64;
        // diag((R'R)^{-1}) = row norms of R^{-1}.
        let rinv = r
            .view((0, 0), (q, q))
            .into_owned()
            .upper_triangle()
            .try_inverse()?;
        let std_errors = (0..q)
            .map(|i| (sigma2 * rinv.row(i).norm_squared()).sqrt())
            .collect();
        Some(OlsFit {
            coefficients: z.iter().copied().collect(),
            std_errors,
            residual_variance: sigma2,
            n,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design() -> (DMatrix<f64>, DVector<f64>) {
        let x = DMatrix::from_row_slice(
            6,
            3,
            &[
                1.0, 0.0, 0.3, 1.0, 1.0, -1.2, 1.0, 0.0, 2.5, 1.0, 1.0, 0.7, 1.0, 0.0, -0.4, 1.0,
                1.0, 1.9,
            ],
        );
        let y = DVector::from_column_slice(&[1.0, 0.0, 2.0, 0.5, -1.0, 3.0]);
        (x, y)
    }

    #[test]
    fn gram_solve_matches_normal_equations() {
        let (x, y) = design();
        let mut qr = RowQr::new(3);
        for i in 0..x.nrows() {
            qr.push(x.row(i).transpose().as_slice());
        }
        assert!(qr.full_rank(3));
        let rhs = x.transpose() * &y;
        let b = qr.solve_gram(rhs.as_slice());
        let oracle = (x.transpose() * &x).lu().solve(&rhs).unwrap();
        assert!((b - oracle).amax() < 1e-12);
    }

    #[test]
    fn r_factor_reproduces_gram_matrix() {
        let (x, _) = design();
        let mut qr = RowQr::new(3);
        for i in 0..x.nrows() {
            qr.push(x.row(i).transpose().as_slice());
        }
        let r = qr.r();
        assert!((r.transpose() * r - x.transpose() * &x).amax() < 1e-12);
    }

    #[test]
    fn rank_deficiency_detected() {
        let mut qr = RowQr::new(2);
        for _ in 0..5 {
            qr.push(&[1.0, 1.0]);
        }
        assert!(!qr.full_rank(2));
        let mut few = RowQr::new(3);
        few.push(&[1.0, 2.0, 3.0]);
        assert!(!few.full_rank(3));
    }

    #[test]
    fn ols_matches_direct_solution_and_standard_errors() {
        let (x, y) = design();
        let mut acc = OlsAccumulator::new(3);
        for i in 0..x.nrows() {
            acc.push(x.row(i).transpose().as_slice(), y[i]);
        }
        let fit = acc.solve().unwrap();
        let xtx_inv = (x.transpose() * &x).try_inverse().unwrap();
        let beta = &xtx_inv * x.transpose() * &y;
        let resid = &y - &x * &beta;
        let s2 = resid.norm_squared() / 3.0;
        for i in 0..3 {
            assert!((fit.coefficients[i] - beta[i]).abs() < 1e-12);
            assert!((fit.std_errors[i] - (s2 * xtx_inv[(i, i)]).sqrt()).abs() < 1e-12);
        }
        assert!((fit.residual_variance - s2).abs() < 1e-12);
    }

    #[test]
    fn ols_refuses_without_residual_df() {
        let mut acc = OlsAccumulator::new(2);
        acc.push(&[1.0, 0.0], 1.0);
        acc.push(&[1.0, 1.0], 2.0);
        assert!(acc.solve().is_none());
    }
}
