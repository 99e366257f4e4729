//! First and second Fréchet derivatives of the matrix logarithm.
//!
//! In the eigenbasis of `A = Σ λ_k |k⟩⟨k|` the derivative maps act entrywise through
//! divided differences of `log`:
//!
//! ```text
//! T_A(Δ)_ij = log[λ_i, λ_j] · Δ_ij
//! R_A(Δ)_ij = −2 Σ_k log[λ_i, λ_k, λ_j] · Δ_ik Δ_kj
//! ```
//!
//! `T_A(Δ) = d/dt log(A + tΔ)` and `R_A(Δ) = −d²/dt² log(A + tΔ)` at t = 0. For singular
//! `A` both maps live on the support block; a Δ with weight outside the support makes
//! the defining resolvent integrals diverge and is rejected with
//! [`Error::SupportMismatch`].

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{same_dim, CMatrix, HermitianMatrix, PsdMatrix, SpectralDecomposition, ToleranceConfig};

/// Relative weight outside supp A above which Δ is rejected.
pub const SUPPORT_LEAK_TOL: f64 = 1e-10;

/// log[x, y] for x, y > 0.
pub fn log_divided_difference(x: f64, y: f64, confluence_tol: f64) -> f64 {
    if x == y {
        return 1.0 / x;
    }
    let d = x - y;
    if d.abs() < confluence_tol * x.max(y) {
        return 2.0 / (x + y);
    }
    // ln(x/y) through ln_1p keeps full relative accuracy for moderately close pairs
    (d / y).ln_1p() / d
}

/// log[x, y, z] for x, y, z > 0 (symmetric in its arguments).
pub fn log_second_divided_difference(x: f64, y: f64, z: f64, confluence_tol: f64) -> f64 {
    let mut v = [x, y, z];
    v.sort_by(f64::total_cmp);
    let [lo, mid, hi] = v;
    let spread = hi - lo;
    if spread < confluence_tol * hi {
        let m = (lo + mid + hi) / 3.0;
        return -0.5 / (m * m);
    }
    (log_divided_difference(mid, hi, confluence_tol) - log_divided_difference(lo, mid, confluence_tol))
        / spread
}

/// Divided-difference tables of `log` over the spectrum of a PSD operator.
#[derive(Debug, Clone)]
pub struct DividedDifferenceKernel {
    base: SpectralDecomposition,
    support: Vec<bool>,
    first_table: DMatrix<f64>,
    confluence_tol: f64,
}

impl DividedDifferenceKernel {
    pub fn new(a: &PsdMatrix, tol: &ToleranceConfig) -> Result<Self> {
        tol.validate()?;
        let base = a.spectrum().clone();
        let support = a.support_mask(tol);
        let n = base.dim();
        let lam = &base.eigenvalues;
        let first_table = DMatrix::from_fn(n, n, |i, j| {
            if support[i] && support[j] {
                log_divided_difference(lam[i], lam[j], tol.confluence_tol)
            } else {
                0.0
            }
        });
        Ok(DividedDifferenceKernel {
            base,
            support,
            first_table,
            confluence_tol: tol.confluence_tol,
        })
    }

    pub fn base(&self) -> &SpectralDecomposition {
        &self.base
    }

    pub fn support(&self) -> &[bool] {
        &self.support
    }

    /// First divided differences; zero outside support × support.
    pub fn first_table(&self) -> &DMatrix<f64> {
        &self.first_table
    }

    pub fn second(&self, i: usize, k: usize, j: usize) -> f64 {
        let lam = &self.base.eigenvalues;
        log_second_divided_difference(lam[i], lam[k], lam[j], self.confluence_tol)
    }

    /// Δ in the eigenbasis of A, after checking it lives on supp A.
    fn to_support_basis(&self, delta: &HermitianMatrix) -> Result<CMatrix> {
        same_dim(self.base.dim(), delta.dim())?;
        let d = self.base.to_eigenbasis(delta.entries());
        let n = d.nrows();
        let mut scale = 0.0f64;
        let mut leak = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let m = d[(i, j)].norm();
                scale = scale.max(m);
                if !(self.support[i] && self.support[j]) {
                    leak = leak.max(m);
                }
            }
        }
        if leak > SUPPORT_LEAK_TOL * scale {
            return Err(Error::SupportMismatch(leak / scale));
        }
        Ok(d)
    }

    /// T_A(Δ).
    pub fn apply_first(&self, delta: &HermitianMatrix) -> Result<HermitianMatrix> {
        let d = self.to_support_basis(delta)?;
        let out = CMatrix::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)] * self.first_table[(i, j)]);
        Ok(self.base.from_eigenbasis(&out))
    }

    /// trace Δ·T_A(Δ) = Σ_ij |Δ_ij|² log[λ_i, λ_j], evaluated without leaving the eigenbasis.
    pub fn quadratic_form(&self, delta: &HermitianMatrix) -> Result<f64> {
        let d = self.to_support_basis(delta)?;
        let n = d.nrows();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += d[(i, j)].norm_sqr() * self.first_table[(i, j)];
            }
        }
        Ok(acc)
    }

    /// R_A(Δ).
    pub fn apply_second(&self, delta: &HermitianMatrix) -> Result<HermitianMatrix> {
        let d = self.to_support_basis(delta)?;
        let n = d.nrows();
        let supp: Vec<usize> = (0..n).filter(|&k| self.support[k]).collect();
        let mut out = CMatrix::zeros(n, n);
        for &i in &supp {
            for &j in &supp {
                let mut acc = Complex64::new(0.0, 0.0);
                for &k in &supp {
                    acc += d[(i, k)] * d[(k, j)] * self.second(i, k, j);
                }
                out[(i, j)] = acc * -2.0;
            }
        }
        Ok(self.base.from_eigenbasis(&out))
    }
}

/// T_A(Δ) = ∫₀^∞ (A+s)⁻¹ Δ (A+s)⁻¹ ds, the derivative of log at A in direction Δ.
pub fn t_map(a: &PsdMatrix, delta: &HermitianMatrix, tol: &ToleranceConfig) -> Result<HermitianMatrix> {
    DividedDifferenceKernel::new(a, tol)?.apply_first(delta)
}

/// R_A(Δ) = 2∫₀^∞ (A+s)⁻¹ Δ (A+s)⁻¹ Δ (A+s)⁻¹ ds = −d²/dt² log(A + tΔ).
pub fn r_map(a: &PsdMatrix, delta: &HermitianMatrix, tol: &ToleranceConfig) -> Result<HermitianMatrix> {
    DividedDifferenceKernel::new(a, tol)?.apply_second(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{support_projector, DensityMatrix};

    const TOL: ToleranceConfig = ToleranceConfig {
        rank_tol: 1e-10,
        confluence_tol: 1e-7,
        hermiticity_tol: 1e-12,
    };

    #[test]
    fn first_divided_difference_limits() {
        assert_eq!(log_divided_difference(2.0, 2.0, 1e-7), 0.5);
        let near = log_divided_difference(1.0, 1.0 + 1e-9, 1e-7);
        assert!((near - 1.0 / (1.0 + 5e-10)).abs() < 1e-15);
        let far = log_divided_difference(3.0, 1.0, 1e-7);
        assert!((far - 3f64.ln() / 2.0).abs() < 1e-15);
        // symmetric
        assert_eq!(log_divided_difference(0.3, 0.7, 1e-7), log_divided_difference(0.7, 0.3, 1e-7));
    }

    #[test]
    fn second_divided_difference_limits() {
        let full = log_second_divided_difference(2.0, 2.0, 2.0, 1e-7);
        assert!((full + 0.125).abs() < 1e-15);
        // log[x, x, z] = (log[x, z] − 1/x)/(z − x)
        let (x, z): (f64, f64) = (1.5, 4.0);
        let expected = ((z.ln() - x.ln()) / (z - x) - 1.0 / x) / (z - x);
        let got = log_second_divided_difference(x, z, x, 1e-7);
        assert!((got - expected).abs() < 1e-14);
        // distinct arguments against the explicit formula
        let (p, q, r): (f64, f64, f64) = (0.2, 0.9, 3.0);
        let explicit = p.ln() / ((p - q) * (p - r)) + q.ln() / ((q - p) * (q - r)) + r.ln() / ((r - p) * (r - q));
        assert!((log_second_divided_difference(p, q, r, 1e-7) - explicit).abs() < 1e-13);
        // continuity across the confluence threshold
        let below = log_second_divided_difference(1.0, 1.0 + 5e-8, 1.0 + 9e-8, 1e-7);
        let above = log_second_divided_difference(1.0, 1.0 + 5e-7, 1.0 + 9e-7, 1e-7);
        assert!((below + 0.5).abs() < 1e-6 && (above + 0.5).abs() < 1e-6);
    }

    #[test]
    fn identity_base_is_identity_map() {
        let id = PsdMatrix::identity(3);
        let delta = HermitianMatrix::from_real_diagonal(&[1.0, -2.0, 0.5]);
        assert!(t_map(&id, &delta, &TOL).unwrap().max_abs_diff(&delta) < 1e-15);
    }

    #[test]
    fn t_of_base_is_support_projector() {
        let a = PsdMatrix::from_real_diagonal(&[0.3, 1.7, 0.0]).unwrap();
        let t = t_map(&a, a.matrix(), &TOL).unwrap();
        assert!(t.max_abs_diff(&support_projector(&a, &TOL)) < 1e-14);
        let r = r_map(&PsdMatrix::from_real_diagonal(&[0.3, 1.7]).unwrap(), &HermitianMatrix::from_real_diagonal(&[0.3, 1.7]), &TOL).unwrap();
        assert!(r.max_abs_diff(&HermitianMatrix::identity(2)) < 1e-14);
    }

    #[test]
    fn scalar_second_derivative() {
        let a = PsdMatrix::from_real_diagonal(&[0.4]).unwrap();
        let d = HermitianMatrix::from_real_diagonal(&[1.3]);
        let r = r_map(&a, &d, &TOL).unwrap();
        assert!((r.entries()[(0, 0)].re - 1.3 * 1.3 / (0.4 * 0.4)).abs() < 1e-13);
    }

    #[test]
    fn leaking_direction_is_rejected() {
        let a = PsdMatrix::from_real_diagonal(&[1.0, 0.0]).unwrap();
        let d = HermitianMatrix::from_real_diagonal(&[0.0, 1.0]);
        assert!(matches!(t_map(&a, &d, &TOL), Err(Error::SupportMismatch(_))));
        assert!(matches!(r_map(&a, &d, &TOL), Err(Error::SupportMismatch(_))));
        let inside = HermitianMatrix::from_real_diagonal(&[2.0, 0.0]);
        assert!(t_map(&a, &inside, &TOL).is_ok());
    }

    #[test]
    fn quadratic_form_matches_trace() {
        let a = DensityMatrix::from_real_diagonal(&[0.1, 0.3, 0.6]).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        let d = crate::harness::ensemble::random_hermitian(&mut rng, 3);
        let k = DividedDifferenceKernel::new(&a, &TOL).unwrap();
        let direct = d.trace_product(&k.apply_first(&d).unwrap());
        assert!((k.quadratic_form(&d).unwrap() - direct).abs() < 1e-12 * direct.abs().max(1.0));
    }
}
