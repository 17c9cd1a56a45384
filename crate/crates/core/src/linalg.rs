//! Small dense complex matrix type and a cyclic Jacobi eigensolver for
//! Hermitian matrices.
//!
//! Matrices stored here are usually very sparse (density matrices of the
//! GHZ family are diagonal plus one coherence pair), so products and Jacobi
//! sweeps skip exact zeros. Nothing else assumes any structure.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{domain, Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from row slices. Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "ragged matrix rows");
            data.extend_from_slice(row);
        }
        Self { dim, data }
    }

    /// Outer product |v⟩⟨w|.
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        assert_eq!(v.len(), w.len());
        let dim = v.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            if v[i] == ZERO {
                continue;
            }
            for j in 0..dim {
                m[(i, j)] = v[i] * w[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * factor).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self { dim: self.dim, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    /// Matrix product; zero entries of `self` are skipped.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    if b != ZERO {
                        *d += a * b;
                    }
                }
            }
        }
        out
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// ⟨v|M|v⟩ (real part; exact for Hermitian M).
    pub fn expectation(&self, v: &[C64]) -> f64 {
        assert_eq!(v.len(), self.dim);
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            if v[i] == ZERO {
                continue;
            }
            let mut row = ZERO;
            for j in 0..n {
                let m = self.data[i * n + j];
                if m != ZERO {
                    row += m * v[j];
                }
            }
            acc += v[i].conj() * row;
        }
        acc.re
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEigResult {
    /// Real eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, ordered like `eigenvalues`.
    pub eigenvectors: Option<CMatrix>,
}

impl HermEigResult {
    /// max |A − VΛV†|; `None` when vectors were not requested.
    pub fn reconstruction_residual(&self, a: &CMatrix) -> Option<f64> {
        let v = self.eigenvectors.as_ref()?;
        let lambda = CMatrix::from_real_diagonal(&self.eigenvalues);
        let rebuilt = v.matmul(&lambda).matmul(&v.adjoint());
        Some(rebuilt.max_abs_diff(a))
    }
}

const HERMITIAN_TOL: f64 = 1e-10;
const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues only.
pub fn herm_eigenvalues(a: &CMatrix) -> Result<HermEigResult> {
    jacobi(a, false)
}

/// Eigenvalues and eigenvectors.
pub fn herm_eigen(a: &CMatrix) -> Result<HermEigResult> {
    jacobi(a, true)
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.dim;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a.data[i * n + j].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Cyclic Jacobi with complex rotations J = D·P·D†, where D carries the
/// phase of the pivot and P is the real plane rotation.
fn jacobi(input: &CMatrix, want_vectors: bool) -> Result<HermEigResult> {
    let defect = input.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return domain(format!("matrix is not Hermitian (defect {defect:e})"));
    }
    let n = input.dim;
    let mut a = input.clone();
    // symmetrize so that the update below can rely on exact Hermiticity
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = want_vectors.then(|| CMatrix::identity(n));
    let tol = OFF_DIAGONAL_TOL * input.frobenius_norm().max(1.0);

    let mut sweep = 0;
    loop {
        if off_diagonal_norm(&a) <= tol {
            break;
        }
        if sweep == MAX_SWEEPS {
            return Err(Error::Numerical(format!("Jacobi did not converge after {MAX_SWEEPS} sweeps (dim {n})")));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.data[p * n + q];
                let g = apq.norm();
                if g == 0.0 {
                    continue;
                }
                let app = a.data[p * n + p].re;
                let aqq = a.data[q * n + q].re;
                // negligible pivots are dropped once the sweep is well advanced
                if sweep > 3 && app.abs() + 100.0 * g == app.abs() && aqq.abs() + 100.0 * g == aqq.abs() {
                    a.data[p * n + q] = ZERO;
                    a.data[q * n + p] = ZERO;
                    continue;
                }
                let phase = apq / g;
                let theta = (aqq - app) / (2.0 * g);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let sp = phase * s; // s·e^{iφ}
                let sm = phase.conj() * s; // s·e^{-iφ}

                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a.data[k * n + p];
                    let akq = a.data[k * n + q];
                    if akp == ZERO && akq == ZERO {
                        continue;
                    }
                    let new_kp = akp * c - akq * sm;
                    let new_kq = akp * sp + akq * c;
                    a.data[k * n + p] = new_kp;
                    a.data[k * n + q] = new_kq;
                    a.data[p * n + k] = new_kp.conj();
                    a.data[q * n + k] = new_kq.conj();
                }
                a.data[p * n + p] = C64::new(app - t * g, 0.0);
                a.data[q * n + q] = C64::new(aqq + t * g, 0.0);
                a.data[p * n + q] = ZERO;
                a.data[q * n + p] = ZERO;

                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v.data[k * n + p];
                        let vkq = v.data[k * n + q];
                        if vkp == ZERO && vkq == ZERO {
                            continue;
                        }
                        v.data[k * n + p] = vkp * c - vkq * sm;
                        v.data[k * n + q] = vkp * sp + vkq * c;
                    }
                }
            }
        }
        sweep += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = v.map(|v| {
        let mut sorted = CMatrix::zeros(n);
        for (col, &src) in order.iter().enumerate() {
            for k in 0..n {
                sorted[(k, col)] = v[(k, src)];
            }
        }
        sorted
    });
    Ok(HermEigResult { eigenvalues, eigenvectors })
}

/// Singular values of a square matrix, descending, via the Hermitian
/// embedding [[0, X], [X†, 0]] whose spectrum is ±σᵢ.
pub fn singular_values(x: &CMatrix) -> Result<Vec<f64>> {
    let n = x.dim;
    let mut h = CMatrix::zeros(2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = x[(i, j)];
            if z != ZERO {
                h[(i, n + j)] = z;
                h[(n + j, i)] = z.conj();
            }
        }
    }
    let eig = herm_eigenvalues(&h)?;
    Ok(eig.eigenvalues[..n].iter().map(|s| s.max(0.0)).collect())
}
