//! Small dense helpers: Gram-Schmidt orthonormal bases and centered
//! cross-product matrices with Schur-complement residuals.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::scalar::Scalar;

/// Orthonormal basis of a set of columns, built by modified Gram-Schmidt
/// with one re-orthogonalization pass.
#[derive(Clone, Debug)]
pub(crate) struct OrthoBasis<T> {
    pub q: Vec<Vec<T>>,
    /// Norms of the orthogonalized columns (the diagonal of `R`).
    pub r_diag: Vec<T>,
}

/// A column failed the rank test.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RankDeficient;

impl<T: Scalar> OrthoBasis<T> {
    pub fn empty() -> Self {
        OrthoBasis {
            q: Vec::new(),
            r_diag: Vec::new(),
        }
    }

    /// Orthonormalizes the columns of `m` in order. A column whose squared
    /// norm after orthogonalization falls below `tol` times its original
    /// squared norm is rank deficient.
    pub fn build(m: ArrayView2<T>) -> Result<Self, RankDeficient> {
        let mut basis = Self::empty();
        for col in m.columns() {
            basis.push(col)?;
        }
        Ok(basis)
    }

    pub fn push(&mut self, col: ArrayView1<T>) -> Result<(), RankDeficient> {
        let mut v: Vec<T> = col.iter().copied().collect();
        let orig = dot(&v, &v);
        for _ in 0..2 {
            for qk in &self.q {
                let c = dot(qk, &v);
                for (vi, &qi) in v.iter_mut().zip(qk) {
                    *vi = *vi - c * qi;
                }
            }
        }
        let norm_sq = dot(&v, &v);
        if !(orig > T::zero()) || !(norm_sq > T::pivot_tol() * orig) {
            return Err(RankDeficient);
        }
        let norm = norm_sq.sqrt();
        v.iter_mut().for_each(|x| *x = *x / norm);
        self.q.push(v);
        self.r_diag.push(norm);
        Ok(())
    }

    /// `v` minus its projection onto the span.
    pub fn residual(&self, v: &[T]) -> Vec<T> {
        let mut r = v.to_vec();
        for _ in 0..2 {
            for qk in &self.q {
                let c = dot(qk, &r);
                for (ri, &qi) in r.iter_mut().zip(qk) {
                    *ri = *ri - c * qi;
                }
            }
        }
        r
    }

    /// Squared norm of the projection of `v` onto the span, `v' P v`.
    pub fn projected_norm_sq(&self, v: &[T]) -> T {
        self.q.iter().map(|qk| {
            let c = dot(qk, v);
            c * c
        }).sum()
    }

    /// `ln |A'A|` for the matrix `A` the basis was built from.
    pub fn log_det_gram(&self) -> T {
        self.r_diag.iter().map(|r| (*r * *r).ln()).sum()
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Centered cross-product matrix `S = (Z - 1 mean')' (Z - 1 mean')` of the
/// columns of `Z`; the sufficient statistic for every regression that
/// includes an intercept.
#[derive(Clone, Debug)]
pub(crate) struct CenteredGram<T> {
    m: usize,
    s: Vec<T>,
}

impl<T: Scalar> CenteredGram<T> {
    pub fn new(z: &Array2<T>) -> Self {
        let (n, m) = z.dim();
        let nn = T::of_usize(n);
        let cols: Vec<Vec<T>> = z
            .columns()
            .into_iter()
            .map(|c| {
                let mean = c.iter().copied().sum::<T>() / nn;
                c.iter().map(|&v| v - mean).collect()
            })
            .collect();
        let mut s = vec![T::zero(); m * m];
        for i in 0..m {
            for j in i..m {
                let v = dot(&cols[i], &cols[j]);
                s[i * m + j] = v;
                s[j * m + i] = v;
            }
        }
        CenteredGram { m, s }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.s[i * self.m + j]
    }

    /// Residual sum of squares of column `target` after least-squares
    /// regression on the intercept and the columns `regressors`, via a
    /// Cholesky factorization of the regressor block. Returns the position in
    /// `regressors` of the first column whose pivot falls below the relative
    /// tolerance.
    pub fn residual_ss(&self, regressors: &[usize], target: usize) -> Result<T, usize> {
        let k = regressors.len();
        let idx = |a: usize| if a < k { regressors[a] } else { target };
        // Lower-triangular factor of the (k+1) x (k+1) block, row-major.
        let dim = k + 1;
        let mut l = vec![T::zero(); dim * dim];
        for a in 0..dim {
            for b in 0..=a {
                let mut v = self.get(idx(a), idx(b));
                for c in 0..b {
                    v = v - l[a * dim + c] * l[b * dim + c];
                }
                if a == b {
                    if a < k {
                        let orig = self.get(idx(a), idx(a));
                        if !(orig > T::zero()) || !(v > T::pivot_tol() * orig) {
                            return Err(a);
                        }
                        l[a * dim + a] = v.sqrt();
                    } else {
                        return Ok(v.max(T::zero()));
                    }
                } else {
                    l[a * dim + b] = v / l[b * dim + b];
                }
            }
        }
        unreachable!("loop returns at the target row")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn basis_is_orthonormal() {
        let m: Array2<f64> = array![[1.0, 2.0, 0.5], [1.0, -1.0, 3.0], [1.0, 0.0, 1.0], [1.0, 4.0, -2.0]];
        let b = OrthoBasis::build(m.view()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let d = dot(&b.q[i], &b.q[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_deficiency_detected() {
        let m: Array2<f64> = array![[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]];
        assert!(OrthoBasis::build(m.view()).is_err());
    }

    #[test]
    fn gram_residual_matches_projection() {
        let z = array![
            [1.0, 0.3, 2.0],
            [2.0, -0.1, 1.0],
            [0.5, 0.8, 0.0],
            [3.0, 1.1, 4.5],
            [-1.0, 0.2, -0.7],
            [0.0, -0.9, 1.3]
        ];
        let g = CenteredGram::new(&z);
        let rss = g.residual_ss(&[0, 1], 2).unwrap();

        let n = z.nrows();
        let mut design = Array2::<f64>::ones((n, 3));
        design.column_mut(1).assign(&z.column(0));
        design.column_mut(2).assign(&z.column(1));
        let basis = OrthoBasis::build(design.view()).unwrap();
        let y: Vec<f64> = z.column(2).to_vec();
        let r = basis.residual(&y);
        assert!((dot(&r, &r) - rss).abs() < 1e-10);
    }
}
