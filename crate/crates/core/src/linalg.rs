//! Small-dimension symmetric positive definite linear algebra.
//!
//! Matrices are stored row-major as flat `Vec<f64>`. Everything here targets
//! d up to ~20; the eigensolver is a cyclic Jacobi sweep, chosen for symmetry
//! exactness over asymptotic speed.

use crate::error::{Error, Result};

/// Relative symmetry tolerance at construction.
const SYMMETRY_TOL: f64 = 1e-12;
/// Off-diagonal convergence threshold, relative to the diagonal mass.
const JACOBI_TOL: f64 = 1e-13;
/// Sweep cap for the Jacobi iteration.
const MAX_SWEEPS: usize = 100;
/// Relative eigenvalue floor below which a matrix counts as not positive definite.
const PD_FLOOR: f64 = 1e-12;

/// Plain square matrix, row-major, no validity constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    dim: usize,
    entries: Vec<f64>,
}

impl Matrix {
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn transpose(&self) -> Matrix {
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                out[j * d + i] = self.entries[i * d + j];
            }
        }
        Matrix {
            dim: d,
            entries: out,
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let aik = self.entries[i * d + k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out[i * d + j] += aik * other.entries[k * d + j];
                }
            }
        }
        Ok(Matrix {
            dim: d,
            entries: out,
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let d = self.dim;
        let out = (0..d)
            .map(|i| {
                self.entries[i * d..(i + 1) * d]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        Ok(out)
    }
}

/// Eigendecomposition of a symmetric matrix: descending eigenvalues and
/// orthonormal eigenvectors stored column-wise (column j pairs with value j).
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    dim: usize,
    eigenvalues: Vec<f64>,
    /// Row-major d x d; column j is the eigenvector for eigenvalues[j].
    eigenvectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[f64] {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, j: usize) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.eigenvectors[i * self.dim + j])
            .collect()
    }

    /// V diag(f(lambda)) V^T, symmetrized. Shared by sqrt/inverse/reconstruction.
    fn apply_spectral<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        let d = self.dim;
        let v = &self.eigenvectors;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let mut acc = 0.0;
                for (m, &lam) in self.eigenvalues.iter().enumerate() {
                    acc += f(lam) * v[i * d + m] * v[j * d + m];
                }
                out[i * d + j] = acc;
                out[j * d + i] = acc;
            }
        }
        out
    }
}

/// Cyclic Jacobi eigensolver on a raw symmetric matrix (not necessarily
/// definite). Returns descending eigenvalues with matching eigenvector columns.
pub(crate) fn sym_eigen(dim: usize, entries: &[f64]) -> Result<EigenDecomposition> {
    let d = dim;
    let mut a = entries.to_vec();
    let mut v = Matrix::identity(d).entries;

    let diag_mass: f64 = (0..d).map(|i| a[i * d + i].abs()).sum();
    let threshold = JACOBI_TOL * diag_mass + f64::MIN_POSITIVE;

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..d {
            for q in (p + 1)..d {
                off = off.max(a[p * d + q].abs());
            }
        }
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq.abs() <= threshold * 1e-3 {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                a[p * d + p] = app - t * apq;
                a[q * d + q] = aqq + t * apq;
                a[p * d + q] = 0.0;
                a[q * d + p] = 0.0;
                for i in 0..d {
                    if i != p && i != q {
                        let aip = a[i * d + p];
                        let aiq = a[i * d + q];
                        a[i * d + p] = c * aip - s * aiq;
                        a[p * d + i] = a[i * d + p];
                        a[i * d + q] = s * aip + c * aiq;
                        a[q * d + i] = a[i * d + q];
                    }
                }
                for i in 0..d {
                    let vip = v[i * d + p];
                    let viq = v[i * d + q];
                    v[i * d + p] = c * vip - s * viq;
                    v[i * d + q] = s * vip + c * viq;
                }
            }
        }
    }
    if !converged {
        let mut off = 0.0f64;
        for p in 0..d {
            for q in (p + 1)..d {
                off = off.max(a[p * d + q].abs());
            }
        }
        if off > threshold {
            return Err(Error::NoConvergence {
                sweeps: MAX_SWEEPS,
                residual: off,
            });
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[j * d + j].partial_cmp(&a[i * d + i]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&m| a[m * d + m]).collect();
    let mut eigenvectors = vec![0.0; d * d];
    for (new_col, &m) in order.iter().enumerate() {
        for i in 0..d {
            eigenvectors[i * d + new_col] = v[i * d + m];
        }
    }
    Ok(EigenDecomposition {
        dim: d,
        eigenvalues,
        eigenvectors,
    })
}

/// Symmetric positive definite matrix. Construction symmetrizes the input,
/// runs the eigensolver, and rejects matrices whose smallest eigenvalue is
/// below `1e-12` of the largest -- near-singular inputs fail loudly.
#[derive(Clone, Debug)]
pub struct SpdMatrix {
    dim: usize,
    entries: Vec<f64>,
    eigen: EigenDecomposition,
}

impl SpdMatrix {
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        let max_abs = entries.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 0..dim {
            for j in (i + 1)..dim {
                let dev = (entries[i * dim + j] - entries[j * dim + i]).abs();
                if dev > SYMMETRY_TOL * max_abs {
                    return Err(Error::NotSymmetric {
                        i,
                        j,
                        deviation: dev,
                    });
                }
            }
        }
        // Symmetrize to absorb accumulation error before decomposing.
        let mut sym = entries;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (sym[i * dim + j] + sym[j * dim + i]);
                sym[i * dim + j] = avg;
                sym[j * dim + i] = avg;
            }
        }
        let eigen = sym_eigen(dim, &sym)?;
        let lam_max = eigen.eigenvalues[0];
        let lam_min = *eigen.eigenvalues.last().unwrap();
        if !(lam_min > PD_FLOOR * lam_max && lam_max > 0.0) {
            return Err(Error::NotPositiveDefinite {
                eigenvalue: lam_min,
            });
        }
        Ok(Self {
            dim,
            entries: sym,
            eigen,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, Matrix::identity(dim).entries).expect("identity is SPD")
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let d = diag.len();
        let mut entries = vec![0.0; d * d];
        for (i, &x) in diag.iter().enumerate() {
            entries[i * d + i] = x;
        }
        Self::new(d, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn as_matrix(&self) -> Matrix {
        Matrix {
            dim: self.dim,
            entries: self.entries.clone(),
        }
    }

    /// The Jacobi eigendecomposition computed at construction.
    pub fn eigen(&self) -> &EigenDecomposition {
        &self.eigen
    }

    /// Unique symmetric positive definite square root: S with S*S = self.
    pub fn sqrt(&self) -> SpdMatrix {
        let entries = self.eigen.apply_spectral(f64::sqrt);
        SpdMatrix::new(self.dim, entries).expect("sqrt of SPD is SPD")
    }

    /// Inverse via the spectral decomposition.
    pub fn inverse(&self) -> SpdMatrix {
        let entries = self.eigen.apply_spectral(|l| 1.0 / l);
        SpdMatrix::new(self.dim, entries).expect("inverse of SPD is SPD")
    }

    /// Determinant as the product of eigenvalues; always positive.
    pub fn determinant(&self) -> f64 {
        self.eigen.eigenvalues.iter().product()
    }

    /// Rescale so the determinant is 1: A / det(A)^(1/d).
    pub fn det_normalized(&self) -> SpdMatrix {
        let scale = self.determinant().powf(1.0 / self.dim as f64);
        let entries: Vec<f64> = self.entries.iter().map(|x| x / scale).collect();
        SpdMatrix::new(self.dim, entries).expect("scaled SPD stays SPD")
    }

    /// x^T A^{-1} x without forming the inverse, via the eigensystem.
    pub fn inv_quadratic_form(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let d = self.dim;
        let v = &self.eigen.eigenvectors;
        let mut acc = 0.0;
        for (m, &lam) in self.eigen.eigenvalues.iter().enumerate() {
            let mut proj = 0.0;
            for i in 0..d {
                proj += v[i * d + m] * x[i];
            }
            acc += proj * proj / lam;
        }
        Ok(acc)
    }

    /// Rows of diag(1/sqrt(lambda)) V^T. The Euclidean norm of `W (x - c)`
    /// equals the Mahalanobis norm of x, so hot loops can reuse W.
    pub fn whitening_rows(&self) -> Matrix {
        let d = self.dim;
        let v = &self.eigen.eigenvectors;
        let mut w = vec![0.0; d * d];
        for (m, &lam) in self.eigen.eigenvalues.iter().enumerate() {
            let inv_s = 1.0 / lam.sqrt();
            for i in 0..d {
                w[m * d + i] = inv_s * v[i * d + m];
            }
        }
        Matrix { dim: d, entries: w }
    }
}

/// sqrt((x - center)^T shape^{-1} (x - center)); zero iff x == center.
pub fn mahalanobis_norm(x: &[f64], center: &[f64], shape: &SpdMatrix) -> Result<f64> {
    if x.len() != shape.dim() || center.len() != shape.dim() {
        return Err(Error::DimensionMismatch {
            expected: shape.dim(),
            got: if x.len() != shape.dim() {
                x.len()
            } else {
                center.len()
            },
        });
    }
    let diff: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
    Ok(shape.inv_quadratic_form(&diff)?.sqrt())
}

/// Largest singular value; for symmetric input this is max |eigenvalue|.
pub fn operator_norm(a: &Matrix) -> Result<f64> {
    let d = a.dim();
    let gram = a.transpose().matmul(a)?;
    let eig = sym_eigen(d, gram.entries())?;
    Ok(eig.eigenvalues()[0].max(0.0).sqrt())
}
