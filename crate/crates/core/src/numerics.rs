//! Dense complex linear algebra: the matrix carrier, Kronecker products,
//! a cyclic Jacobi Hermitian eigensolver and the spectral matrix functions
//! built on it.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest tensor-product dimension accepted by default.
pub const DEFAULT_MAX_TENSOR_DIM: usize = 4096;
/// Relative tolerance used for hermiticity and eigenvalue clamping.
pub const SPECTRAL_TOL: f64 = 1e-10;
pub const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-14;

/// A dense square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .map(|z| format!("{:+.4}{:+.4}i", z.re, z.im))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMatrix("dimension must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries, found {}",
                dim * dim,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidMatrix("matrix is not square".into()));
        }
        Self::new(dim, rows.iter().flatten().copied().collect())
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, C64::new(1.0, 0.0))
    }

    pub fn scalar(dim: usize, value: C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = value;
        }
        m
    }

    pub fn from_diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.data[i * values.len() + i] = C64::new(v, 0.0);
        }
        m
    }

    /// Outer product `|v><v|`.
    pub fn outer(v: &[C64]) -> Result<Self> {
        let n = v.len();
        let mut data = Vec::with_capacity(n * n);
        for a in v {
            for b in v {
                data.push(a * b.conj());
            }
        }
        Self::new(n, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.data[i * self.dim + j] = value;
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max(1, ||self||_F)`, the scale used by relative tolerances.
    pub fn tolerance_scale(&self) -> f64 {
        self.frobenius_norm().max(1.0)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entrywise deviation `|m_ij - conj(m_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `(m + m^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let n = self.dim;
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = (self.get(i, j) + self.get(j, i).conj()) * 0.5;
            }
        }
        out
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.frobenius_norm() <= tol
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn try_matmul(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let n = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(Self { dim: n, data: out })
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        self.try_add(rhs).expect("matrix addition")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        self.try_sub(rhs).expect("matrix subtraction")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.try_matmul(rhs).expect("matrix product")
    }
}

/// Kronecker product with the default dimension limit.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    kron_with_limit(a, b, DEFAULT_MAX_TENSOR_DIM)
}

/// Kronecker product; block `(i, j)` of the result is `a[i, j] * b`.
pub fn kron_with_limit(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    limit: usize,
) -> Result<ComplexMatrix> {
    let (m, n) = (a.dim(), b.dim());
    let dim = m
        .checked_mul(n)
        .filter(|&d| d <= limit)
        .ok_or(Error::TensorDimensionOverflow {
            requested: m.saturating_mul(n),
            limit,
        })?;
    let mut out = ComplexMatrix::zeros(dim);
    for i in 0..m {
        for j in 0..m {
            let s = a.get(i, j);
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    out.set(i * n + k, j * n + l, s * b.get(k, l));
                }
            }
        }
    }
    Ok(out)
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V f(diag(values)) V^dagger`.
    pub fn map<F: Fn(f64) -> C64>(&self, f: F) -> ComplexMatrix {
        let n = self.vectors.dim();
        let weights: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for (k, w) in weights.iter().enumerate() {
                    acc += self.vectors.get(i, k) * w * self.vectors.get(j, k).conj();
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|l| C64::new(l, 0.0))
    }

    /// Column `k` of the eigenvector matrix.
    pub fn vector(&self, k: usize) -> Vec<C64> {
        let n = self.vectors.dim();
        (0..n).map(|i| self.vectors.get(i, k)).collect()
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a.get(i, j).norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let scale = m.tolerance_scale();
    let deviation = m.hermitian_deviation();
    if deviation > SPECTRAL_TOL * scale {
        return Err(Error::NotHermitian { deviation });
    }
    let n = m.dim();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let target = JACOBI_REL_TOL * m.frobenius_norm();

    let mut converged = off_diagonal_norm(&a) <= target;
    let mut sweep = 0;
    while !converged && sweep < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweep += 1;
        converged = off_diagonal_norm(&a) <= target;
    }
    if !converged {
        return Err(Error::EigFailure {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, new_col, v.get(i, old_col));
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// One complex Jacobi rotation annihilating `a[p, q]`: a phase turns the
/// 2x2 block real symmetric, then a real rotation diagonalizes it.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let (app, aqq) = (a.get(p, p).re, a.get(q, q).re);
    if g <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a.set(p, q, C64::new(0.0, 0.0));
        a.set(q, p, C64::new(0.0, 0.0));
        return;
    }
    let phase = apq / g;
    let theta = 0.5 * (2.0 * g).atan2(aqq - app);
    let (s, c) = theta.sin_cos();
    // G = diag(1, conj(phase)) * [[c, s], [-s, c]]
    let g00 = C64::new(c, 0.0);
    let g01 = C64::new(s, 0.0);
    let g10 = -phase.conj() * s;
    let g11 = phase.conj() * c;

    let n = a.dim();
    for i in 0..n {
        let (xp, xq) = (a.get(i, p), a.get(i, q));
        a.set(i, p, xp * g00 + xq * g10);
        a.set(i, q, xp * g01 + xq * g11);
    }
    for j in 0..n {
        let (xp, xq) = (a.get(p, j), a.get(q, j));
        a.set(p, j, g00.conj() * xp + g10.conj() * xq);
        a.set(q, j, g01.conj() * xp + g11.conj() * xq);
    }
    a.set(p, q, C64::new(0.0, 0.0));
    a.set(q, p, C64::new(0.0, 0.0));
    a.set(p, p, C64::new(a.get(p, p).re, 0.0));
    a.set(q, q, C64::new(a.get(q, q).re, 0.0));
    for i in 0..n {
        let (xp, xq) = (v.get(i, p), v.get(i, q));
        v.set(i, p, xp * g00 + xq * g10);
        v.set(i, q, xp * g01 + xq * g11);
    }
}

/// Eigenvalues within this many ulps (times the scale) of 0 or 1 are snapped
/// onto them, so fractional powers of projectors stay projectors.
const ROUNDOFF_SNAP: f64 = 64.0 * f64::EPSILON;

/// Clamps roundoff excursions below 0 and above 1 onto the boundary.
/// Returns an error for eigenvalues that are genuinely negative.
fn clamp_spectrum(values: &[f64], scale: f64) -> Result<Vec<f64>> {
    let tol = SPECTRAL_TOL * scale;
    let snap = ROUNDOFF_SNAP * scale;
    values
        .iter()
        .map(|&l| {
            if l < -tol {
                Err(Error::NotPositiveSemidefinite { eigenvalue: l })
            } else if l <= snap {
                Ok(0.0)
            } else if (l - 1.0).abs() <= snap || (l > 1.0 && l <= 1.0 + tol) {
                Ok(1.0)
            } else {
                Ok(l)
            }
        })
        .collect()
}

/// `m^alpha` for a positive semidefinite `m` and `alpha > 0`.
pub fn psd_power(m: &ComplexMatrix, alpha: f64) -> Result<ComplexMatrix> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "exponent must be positive, got {alpha}"
        )));
    }
    let eig = hermitian_eig(m)?;
    let clamped = clamp_spectrum(&eig.values, m.tolerance_scale())?;
    let eig = HermitianEigen {
        values: clamped,
        vectors: eig.vectors,
    };
    Ok(eig.map(|l| {
        let p = if l == 0.0 { 0.0 } else { l.powf(alpha) };
        C64::new(p, 0.0)
    }))
}

/// Unique positive semidefinite square root.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    psd_power(m, 0.5)
}

/// `exp(-i theta h)` for Hermitian `h`.
pub fn unitary_exp(h: &ComplexMatrix, theta: f64) -> Result<ComplexMatrix> {
    if theta == 0.0 {
        hermitian_eig(h)?;
        return Ok(ComplexMatrix::identity(h.dim()));
    }
    let eig = hermitian_eig(h)?;
    Ok(eig.map(|l| C64::from_polar(1.0, -theta * l)))
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> Result<f64> {
    let gram = &m.adjoint() * m;
    let eig = hermitian_eig(&gram.hermitian_part())?;
    Ok(eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Spectral classification of an operator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OperatorClass {
    pub is_hermitian: bool,
    pub is_psd: bool,
    pub is_effect: bool,
    pub is_projector: bool,
    pub is_density: bool,
    pub tol: f64,
}

impl OperatorClass {
    fn none(tol: f64) -> Self {
        Self {
            is_hermitian: false,
            is_psd: false,
            is_effect: false,
            is_projector: false,
            is_density: false,
            tol,
        }
    }
}

/// Classifies `m` from its spectrum with absolute tolerance `tol`.
pub fn classify(m: &ComplexMatrix, tol: f64) -> OperatorClass {
    if m.hermitian_deviation() > tol {
        return OperatorClass::none(tol);
    }
    let eig = match hermitian_eig(&m.hermitian_part()) {
        Ok(eig) => eig,
        Err(_) => return OperatorClass::none(tol),
    };
    let min = eig.values.first().copied().unwrap_or(0.0);
    let max = eig.values.last().copied().unwrap_or(0.0);
    let is_psd = min >= -tol;
    let is_effect = is_psd && max <= 1.0 + tol;
    let is_projector = is_effect
        && eig
            .values
            .iter()
            .all(|&l| l.abs() <= tol || (l - 1.0).abs() <= tol);
    let is_density = is_psd && (m.trace().re - 1.0).abs() <= tol;
    OperatorClass {
        is_hermitian: true,
        is_psd,
        is_effect,
        is_projector,
        is_density,
        tol,
    }
}

/// Classification at the default relative tolerance `1e-10 * max(1, ||m||_F)`.
pub fn classify_default(m: &ComplexMatrix) -> OperatorClass {
    classify(m, SPECTRAL_TOL * m.tolerance_scale())
}

/// Smallest and largest eigenvalue of a Hermitian matrix.
pub fn spectral_bounds(m: &ComplexMatrix) -> Result<(f64, f64)> {
    let eig = hermitian_eig(m)?;
    Ok((eig.values[0], eig.values[eig.values.len() - 1]))
}
