//! Small dense symmetric matrices (dimension 1 to 3) and their
//! eigendecomposition by cyclic Jacobi rotations.
//!
//! Everything downstream (tensor mixtures, Gaussian quadratic forms,
//! log-determinants) goes through the eigendecomposition so there is one
//! code path for every velocity dimension.

use serde::{Deserialize, Serialize};

/// Symmetric `dim x dim` matrix with `dim <= 3`. Unused lanes stay zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMat {
    dim: usize,
    m: [[f64; 3]; 3],
}

impl SymMat {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=3).contains(&dim), "dimension must be 1..=3");
        SymMat {
            dim,
            m: [[0.0; 3]; 3],
        }
    }

    /// `s * Id` in the given dimension.
    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut a = Self::zeros(dim);
        for i in 0..dim {
            a.m[i][i] = s;
        }
        a
    }

    /// Build from entries; the generator is called once per `i <= j` pair,
    /// so the result is symmetric by construction.
    pub fn from_upper(dim: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        let mut a = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = entry(i, j);
                a.m[i][j] = v;
                a.m[j][i] = v;
            }
        }
        a
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.m[i][j] = v;
        self.m[j][i] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.m[i][i]).sum()
    }

    /// `a * self + b * other`, entrywise.
    pub fn lin_comb(&self, a: f64, other: &SymMat, b: f64) -> SymMat {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] = a * self.m[i][j] + b * other.m[i][j];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> SymMat {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] *= s;
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.m[i][j] * self.m[i][j];
            }
        }
        s.sqrt()
    }

    pub fn max_abs_diff(&self, other: &SymMat) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        worst
    }

    /// Cyclic Jacobi eigendecomposition; iterates until the off-diagonal
    /// Frobenius norm drops below `1e-13` of the matrix scale.
    pub fn eigen(&self) -> EigenDecomp {
        let n = self.dim;
        let mut a = self.m;
        // v[k] accumulates the k-th eigenvector (rows of the transpose of
        // the rotation product).
        let mut v = [[0.0; 3]; 3];
        for (k, row) in v.iter_mut().enumerate() {
            row[k] = 1.0;
        }

        let scale = self.frobenius();
        if n > 1 && scale > 0.0 {
            let tol = 1e-13 * scale;
            for _sweep in 0..64 {
                let mut off = 0.0;
                for p in 0..n {
                    for q in (p + 1)..n {
                        off += 2.0 * a[p][q] * a[p][q];
                    }
                }
                if off.sqrt() <= tol {
                    break;
                }
                for p in 0..n {
                    for q in (p + 1)..n {
                        let apq = a[p][q];
                        if apq == 0.0 {
                            continue;
                        }
                        let tau = (a[q][q] - a[p][p]) / (2.0 * apq);
                        let t = if tau >= 0.0 {
                            1.0 / (tau + (1.0 + tau * tau).sqrt())
                        } else {
                            -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                        };
                        let c = 1.0 / (1.0 + t * t).sqrt();
                        let s = t * c;

                        let app = a[p][p];
                        let aqq = a[q][q];
                        a[p][p] = app - t * apq;
                        a[q][q] = aqq + t * apq;
                        a[p][q] = 0.0;
                        a[q][p] = 0.0;
                        for r in 0..n {
                            if r != p && r != q {
                                let arp = a[r][p];
                                let arq = a[r][q];
                                a[r][p] = c * arp - s * arq;
                                a[p][r] = a[r][p];
                                a[r][q] = c * arq + s * arp;
                                a[q][r] = a[r][q];
                            }
                        }
                        for r in 0..n {
                            let vp = v[p][r];
                            let vq = v[q][r];
                            v[p][r] = c * vp - s * vq;
                            v[q][r] = c * vq + s * vp;
                        }
                    }
                }
            }
        }

        // Sort ascending, carrying eigenvectors along.
        let mut order = [0usize, 1, 2];
        order[..n].sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap());
        let mut values = [0.0; 3];
        let mut vectors = [[0.0; 3]; 3];
        for k in 0..n {
            values[k] = a[order[k]][order[k]];
            vectors[k] = v[order[k]];
        }
        EigenDecomp {
            dim: n,
            values,
            vectors,
        }
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a [`SymMat`].
#[derive(Debug, Clone, Copy)]
pub struct EigenDecomp {
    pub dim: usize,
    /// Ascending eigenvalues; lanes past `dim` are zero.
    pub values: [f64; 3],
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: [[f64; 3]; 3],
}

impl EigenDecomp {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.dim - 1]
    }

    /// Product of eigenvalues.
    pub fn det(&self) -> f64 {
        self.values[..self.dim].iter().product()
    }

    /// `sum ln(lambda_i)`; caller guarantees positivity.
    pub fn ln_det(&self) -> f64 {
        self.values[..self.dim].iter().map(|l| l.ln()).sum()
    }

    /// `x^T A^{-1} x` evaluated in the eigenbasis.
    pub fn inv_quadratic(&self, x: [f64; 3]) -> f64 {
        let mut q = 0.0;
        for k in 0..self.dim {
            let mut y = 0.0;
            for i in 0..self.dim {
                y += self.vectors[k][i] * x[i];
            }
            q += y * y / self.values[k];
        }
        q
    }

    /// Reassemble the matrix (used by tests and the moment projections).
    pub fn reconstruct(&self) -> SymMat {
        SymMat::from_upper(self.dim, |i, j| {
            (0..self.dim)
                .map(|k| self.values[k] * self.vectors[k][i] * self.vectors[k][j])
                .sum()
        })
    }
}
