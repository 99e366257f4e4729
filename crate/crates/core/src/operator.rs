//! Hermitian and positive semidefinite operators on a finite-dimensional space.
//!
//! The type ladder is [`HermitianMatrix`] ⊃ [`PsdMatrix`] ⊃ [`DensityMatrix`]. A PSD
//! matrix carries its [`SpectralDecomposition`] from construction on, so every matrix
//! function of the same operator (support projector, logarithm, divided differences)
//! is evaluated in one shared eigenbasis.

use std::ops::{Add, Deref, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Relative hermiticity tolerance applied by [`HermitianMatrix::new`].
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Per-dimension relative band inside which negative eigenvalues count as zero.
pub const PSD_CLAMP_BAND: f64 = 1e-12;
/// Allowed deviation of a density matrix trace from one.
pub const TRACE_TOL: f64 = 1e-10;

const EIGEN_MAX_ITER: usize = 10_000;

/// Numerical cut-offs shared by every spectral computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Eigenvalue λ belongs to the support iff λ > rank_tol · λ_max.
    pub rank_tol: f64,
    /// Relative gap below which divided differences use confluent limits.
    pub confluence_tol: f64,
    pub hermiticity_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            rank_tol: 1e-10,
            confluence_tol: 1e-7,
            hermiticity_tol: HERMITICITY_TOL,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rank_tol", self.rank_tol),
            ("confluence_tol", self.confluence_tol),
            ("hermiticity_tol", self.hermiticity_tol),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidTolerance(format!(
                    "{name} = {v} must lie strictly between 0 and 1"
                )));
            }
        }
        Ok(())
    }
}

/// Dense complex self-adjoint matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    entries: CMatrix,
}

impl HermitianMatrix {
    /// Validates squareness, finiteness and hermiticity (relative tolerance 1e-12).
    pub fn new(entries: CMatrix) -> Result<Self> {
        Self::with_tolerance(entries, HERMITICITY_TOL)
    }

    pub fn with_tolerance(entries: CMatrix, tol: f64) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut scale = 0.0f64;
        for i in 0..rows {
            for j in 0..cols {
                let z = entries[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite(i, j));
                }
                scale = scale.max(z.norm());
            }
        }
        let allowed = tol * scale;
        let mut deviation = 0.0f64;
        for i in 0..rows {
            for j in i..cols {
                deviation = deviation.max((entries[(i, j)] - entries[(j, i)].conj()).norm());
            }
        }
        if deviation > allowed {
            return Err(Error::NonHermitianInput { deviation, allowed });
        }
        Ok(HermitianMatrix { entries })
    }

    /// Hermitian part (M + M†)/2 of an arbitrary square matrix.
    pub fn hermitian_part(m: &CMatrix) -> Self {
        assert!(m.is_square(), "hermitian_part needs a square matrix");
        HermitianMatrix {
            entries: (m + m.adjoint()).scale(0.5),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        HermitianMatrix {
            entries: CMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    Complex64::new(diag[i], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianMatrix {
            entries: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix {
            entries: CMatrix::zeros(dim, dim),
        }
    }

    /// |v⟩⟨v| for a (not necessarily normalised) vector.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        HermitianMatrix {
            entries: CMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj()),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_inner(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    /// Re trace(self · other), which is the full trace for Hermitian pairs.
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        trace_product(&self.entries, &other.entries)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: f64) -> Self {
        HermitianMatrix {
            entries: self.entries.scale(c),
        }
    }

    pub fn try_add(&self, other: &HermitianMatrix) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(HermitianMatrix {
            entries: &self.entries + &other.entries,
        })
    }

    pub fn try_sub(&self, other: &HermitianMatrix) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(HermitianMatrix {
            entries: &self.entries - &other.entries,
        })
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &HermitianMatrix) -> f64 {
        (&self.entries - &other.entries)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn spectral(&self) -> Result<SpectralDecomposition> {
        spectral_decompose(self)
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;

    /// Panics on dimension mismatch, like the underlying nalgebra addition.
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix {
            entries: &self.entries + &rhs.entries,
        }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix {
            entries: &self.entries - &rhs.entries,
        }
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scale(rhs)
    }
}

pub(crate) fn same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(a, b))
    }
}

pub(crate) fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// U diag(f(λ)) U†.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.dim();
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for j in 0..n {
            let fj = f(self.eigenvalues[j]);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        HermitianMatrix::hermitian_part(&(scaled * u.adjoint()))
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map(|x| x)
    }

    /// U† M U.
    pub fn to_eigenbasis(&self, m: &CMatrix) -> CMatrix {
        self.eigenvectors.adjoint() * m * &self.eigenvectors
    }

    /// U M U†, symmetrised.
    pub fn from_eigenbasis(&self, m: &CMatrix) -> HermitianMatrix {
        HermitianMatrix::hermitian_part(&(&self.eigenvectors * m * self.eigenvectors.adjoint()))
    }

    /// Support mask: λ > rank_tol · λ_max (empty support when λ_max ≤ 0).
    pub fn support_mask(&self, rank_tol: f64) -> Vec<bool> {
        let cut = rank_tol * self.lambda_max();
        let positive = self.lambda_max() > 0.0;
        self.eigenvalues
            .iter()
            .map(|&l| positive && l > cut)
            .collect()
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted ascending.
pub fn spectral_decompose(h: &HermitianMatrix) -> Result<SpectralDecomposition> {
    let n = h.dim();
    let eig = SymmetricEigen::try_new(h.entries.clone(), f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(Error::EigensolverFailure(n))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::EigensolverFailure(n));
    }
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Positive semidefinite Hermitian matrix together with its (clamped) spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdMatrix {
    matrix: HermitianMatrix,
    spectrum: SpectralDecomposition,
}

impl PsdMatrix {
    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        let mut spectrum = spectral_decompose(&matrix)?;
        let band = matrix.dim() as f64 * PSD_CLAMP_BAND * spectrum.lambda_max().max(0.0);
        let min = spectrum.lambda_min();
        if min < -band {
            return Err(Error::NotPositiveSemidefinite { min, band });
        }
        for l in spectrum.eigenvalues.iter_mut() {
            if *l < 0.0 {
                *l = 0.0;
            }
        }
        Ok(PsdMatrix { matrix, spectrum })
    }

    pub fn from_entries(entries: CMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(entries)?)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real_diagonal(diag))
    }

    pub fn zeros(dim: usize) -> Self {
        PsdMatrix {
            matrix: HermitianMatrix::zeros(dim),
            spectrum: SpectralDecomposition {
                eigenvalues: vec![0.0; dim],
                eigenvectors: CMatrix::identity(dim, dim),
            },
        }
    }

    pub fn identity(dim: usize) -> Self {
        PsdMatrix {
            matrix: HermitianMatrix::identity(dim),
            spectrum: SpectralDecomposition {
                eigenvalues: vec![1.0; dim],
                eigenvectors: CMatrix::identity(dim, dim),
            },
        }
    }

    /// Builds a PSD matrix from an already non-negative spectrum.
    pub(crate) fn from_spectrum(spectrum: SpectralDecomposition) -> Self {
        debug_assert!(spectrum.eigenvalues.iter().all(|&l| l >= 0.0));
        PsdMatrix {
            matrix: spectrum.reconstruct(),
            spectrum,
        }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn support_mask(&self, tol: &ToleranceConfig) -> Vec<bool> {
        self.spectrum.support_mask(tol.rank_tol)
    }

    pub fn rank(&self, tol: &ToleranceConfig) -> usize {
        self.support_mask(tol).into_iter().filter(|&b| b).count()
    }

    /// Non-negative combination `alpha·self + beta·other`.
    pub fn combine(&self, alpha: f64, other: &PsdMatrix, beta: f64) -> Result<PsdMatrix> {
        same_dim(self.dim(), other.dim())?;
        if !(alpha >= 0.0 && beta >= 0.0) {
            return Err(Error::ParameterOutOfRange {
                name: "mixing weight",
                value: alpha.min(beta),
                range: "[0, inf)",
            });
        }
        PsdMatrix::new(&self.matrix.scale(alpha) + &other.matrix.scale(beta))
    }

    pub fn try_add(&self, other: &PsdMatrix) -> Result<PsdMatrix> {
        self.combine(1.0, other, 1.0)
    }

    pub fn scaled(&self, c: f64) -> Result<PsdMatrix> {
        if !(c >= 0.0) {
            return Err(Error::ParameterOutOfRange {
                name: "scale",
                value: c,
                range: "[0, inf)",
            });
        }
        let mut spectrum = self.spectrum.clone();
        for l in spectrum.eigenvalues.iter_mut() {
            *l *= c;
        }
        Ok(PsdMatrix {
            matrix: self.matrix.scale(c),
            spectrum,
        })
    }

    /// Normalises to unit trace.
    pub fn normalized(&self) -> Result<DensityMatrix> {
        let tr = self.trace();
        if !(tr > 0.0) {
            return Err(Error::NotUnitTrace(tr));
        }
        DensityMatrix::from_psd(self.scaled(1.0 / tr)?)
    }
}

impl Deref for PsdMatrix {
    type Target = HermitianMatrix;

    fn deref(&self) -> &HermitianMatrix {
        &self.matrix
    }
}

/// Quantum state: PSD with unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(PsdMatrix);

impl DensityMatrix {
    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        Self::from_psd(PsdMatrix::new(matrix)?)
    }

    pub fn from_psd(psd: PsdMatrix) -> Result<Self> {
        let tr = psd.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotUnitTrace(tr));
        }
        Ok(DensityMatrix(psd))
    }

    pub fn from_entries(entries: CMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(entries)?)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_psd(PsdMatrix::from_real_diagonal(diag)?)
    }

    /// |v⟩⟨v| / ⟨v|v⟩.
    pub fn pure(v: &[Complex64]) -> Result<Self> {
        let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if !(norm2 > 0.0) {
            return Err(Error::NotUnitTrace(0.0));
        }
        let outer = HermitianMatrix::outer(v).scale(1.0 / norm2);
        Self::new(outer)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let psd = PsdMatrix::identity(dim)
            .scaled(1.0 / dim as f64)
            .expect("positive scale");
        DensityMatrix(psd)
    }

    /// Convex combination `w·self + (1−w)·other`.
    pub fn mix(&self, w: f64, other: &DensityMatrix) -> Result<DensityMatrix> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::ParameterOutOfRange {
                name: "mixing weight",
                value: w,
                range: "[0, 1]",
            });
        }
        DensityMatrix::from_psd(self.0.combine(w, &other.0, 1.0 - w)?)
    }

    pub fn as_psd(&self) -> &PsdMatrix {
        &self.0
    }

    pub fn into_psd(self) -> PsdMatrix {
        self.0
    }
}

impl Deref for DensityMatrix {
    type Target = PsdMatrix;

    fn deref(&self) -> &PsdMatrix {
        &self.0
    }
}

/// Orthogonal projector onto the span of eigenvectors with λ > rank_tol · λ_max.
/// The zero operator has the zero projector.
pub fn support_projector(x: &PsdMatrix, tol: &ToleranceConfig) -> HermitianMatrix {
    let mask = x.support_mask(tol);
    projector_from_mask(x.spectrum(), &mask)
}

pub(crate) fn projector_from_mask(s: &SpectralDecomposition, mask: &[bool]) -> HermitianMatrix {
    let n = s.dim();
    let mut p = CMatrix::zeros(n, n);
    for (k, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        let col = s.eigenvectors.column(k);
        p += col * col.adjoint();
    }
    HermitianMatrix::hermitian_part(&p)
}

/// X₊ = (X + |X|)/2: negative eigenvalues zeroed in the eigenbasis.
pub fn positive_part(x: &HermitianMatrix) -> Result<PsdMatrix> {
    let mut s = spectral_decompose(x)?;
    for l in s.eigenvalues.iter_mut() {
        *l = l.max(0.0);
    }
    Ok(PsdMatrix::from_spectrum(s))
}

/// T(ρ, σ) = ½‖ρ − σ‖₁ = trace (ρ − σ)₊.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let diff = rho.matrix().try_sub(sigma.matrix())?;
    let s = spectral_decompose(&diff)?;
    let pos: f64 = s.eigenvalues.iter().filter(|&&l| l > 0.0).sum();
    let neg: f64 = -s.eigenvalues.iter().filter(|&&l| l < 0.0).sum::<f64>();
    // both halves equal trace (ρ−σ)₊ exactly in exact arithmetic; average the rounding
    Ok((0.5 * (pos + neg)).clamp(0.0, 1.0))
}

/// log λ on support eigenvalues, 0 on the kernel.
pub fn log_on_support(x: &PsdMatrix, tol: &ToleranceConfig) -> HermitianMatrix {
    let mask = x.support_mask(tol);
    let s = x.spectrum();
    let logs: Vec<f64> = s
        .eigenvalues
        .iter()
        .zip(&mask)
        .map(|(&l, &m)| if m { l.ln() } else { 0.0 })
        .collect();
    map_by_index(s, &logs)
}

/// Σ λ log λ over the support (0 log 0 = 0).
pub fn trace_x_log_x(x: &PsdMatrix, tol: &ToleranceConfig) -> f64 {
    let mask = x.support_mask(tol);
    x.spectrum()
        .eigenvalues
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .map(|(&l, _)| l * l.ln())
        .sum()
}

pub(crate) fn map_by_index(s: &SpectralDecomposition, values: &[f64]) -> HermitianMatrix {
    let n = s.dim();
    let mut d = CMatrix::zeros(n, n);
    for (k, &v) in values.iter().enumerate() {
        d[(k, k)] = Complex64::new(v, 0.0);
    }
    s.from_eigenbasis(&d)
}
