//! Relative entropy, telescopic relative entropy and their gradients.
//!
//! `S(A‖B) = trace A(log A − log B)` is `+∞` whenever supp A ⊄ supp B. The telescopic
//! variant `S_a(A‖B) = S(A ‖ aA + (1−a)B) / (−log a)` is finite for every PSD pair and
//! lies in `[0, 1]` for states. Both accept non-normalised PSD arguments; the state-typed
//! entry points ([`rel_entropy`], [`tre`]) are thin wrappers.

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frechet::DividedDifferenceKernel;
use crate::operator::{
    log_on_support, same_dim, support_projector, DensityMatrix, HermitianMatrix,
    PsdMatrix, ToleranceConfig,
};

/// Telescope parameters closer than this to 0 or 1 are refused; use [`tre_limit`].
pub const TELESCOPE_EDGE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceResult {
    pub value: f64,
    /// `None` for the ordinary relative entropy.
    pub a: Option<f64>,
    /// supp(first) ⊆ supp(second argument as given).
    pub support_contained: bool,
    pub effective_ranks: (usize, usize),
    pub tol: ToleranceConfig,
}

impl Serialize for DivergenceResult {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = ser.serialize_struct("DivergenceResult", 5)?;
        st.serialize_field("value", &JsonReal(self.value))?;
        match self.a {
            Some(a) => st.serialize_field("a", &a)?,
            None => st.serialize_field("a", "ordinary")?,
        }
        st.serialize_field("support_contained", &self.support_contained)?;
        st.serialize_field("effective_ranks", &self.effective_ranks)?;
        st.serialize_field("tol", &self.tol)?;
        st.end()
    }
}

/// Real number that serialises ±∞ as the strings "inf"/"-inf" and NaN as "nan".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsonReal(pub f64);

impl Serialize for JsonReal {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let x = self.0;
        if x.is_finite() {
            ser.serialize_f64(x)
        } else if x.is_nan() {
            ser.serialize_str("nan")
        } else if x > 0.0 {
            ser.serialize_str("inf")
        } else {
            ser.serialize_str("-inf")
        }
    }
}

/// Checks a ∈ (0, 1), refusing the numerically unreliable edges.
pub fn check_telescope(a: f64) -> Result<()> {
    if a > TELESCOPE_EDGE && a < 1.0 - TELESCOPE_EDGE {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange {
            name: "a",
            value: a,
            range: "(1e-12, 1 - 1e-12)",
        })
    }
}

/// −log a, accurate near a = 1.
fn neg_log(a: f64) -> f64 {
    -(-(1.0 - a)).ln_1p()
}

/// Weight of `a` outside supp `b`, relative to trace `a`.
fn support_leak(a: &PsdMatrix, b: &PsdMatrix, tol: &ToleranceConfig) -> f64 {
    let tr = a.trace();
    if tr <= 0.0 {
        return 0.0;
    }
    let inside = a.trace_product(&support_projector(b, tol));
    ((tr - inside) / tr).max(0.0)
}

fn contained(a: &PsdMatrix, b: &PsdMatrix, tol: &ToleranceConfig) -> bool {
    support_leak(a, b, tol) <= tol.rank_tol
}

/// λ log(λ/μ) − λ + μ ≥ 0, accurate when λ ≈ μ.
pub fn klein_term(lambda: f64, mu: f64) -> f64 {
    if lambda == 0.0 {
        return mu;
    }
    let d = (lambda - mu) / mu;
    if d.abs() < 0.05 {
        // (1+d)log(1+d) − d = Σ_{k≥2} (−d)^k / (k(k−1))
        let mut term = d * d;
        let mut sum = 0.0;
        for k in 2..24 {
            sum += term / (k * (k - 1)) as f64;
            term *= -d;
        }
        mu * sum
    } else {
        mu * ((1.0 + d) * d.ln_1p() - d)
    }
}

/// S(A‖B) = Σ_ij |⟨a_i|b_j⟩|² (λ_i log(λ_i/μ_j) − λ_i + μ_j) + trace A − trace B.
///
/// Every pair term is non-negative, so nearby arguments do not suffer the cancellation of
/// trace A log A − trace A log B. Pairs leaving supp B contribute their exact share of the
/// support-restricted formula. `trace_gap` is trace A − trace B, supplied by the caller
/// because it is often known more accurately than the eigenvalue sums give it.
fn overlap_relative_entropy(a: &PsdMatrix, b: &PsdMatrix, trace_gap: f64, tol: &ToleranceConfig) -> f64 {
    let (sa, sb) = (a.spectrum(), b.spectrum());
    let (ma, mb) = (a.support_mask(tol), b.support_mask(tol));
    let overlap = sa.eigenvectors.adjoint() * &sb.eigenvectors;
    let (la, lb) = (&sa.eigenvalues, &sb.eigenvalues);
    let mut pairs = 0.0;
    for i in 0..la.len() {
        for j in 0..lb.len() {
            let w = overlap[(i, j)].norm_sqr();
            pairs += match (ma[i], mb[j]) {
                (true, true) => w * klein_term(la[i], lb[j]),
                (false, true) => w * lb[j],
                (true, false) => w * la[i] * (la[i].ln() - 1.0),
                (false, false) => 0.0,
            };
        }
    }
    // eigenvalues below the rank threshold count as exact zeros
    let dropped = |l: &[f64], m: &[bool]| -> f64 { l.iter().zip(m).filter(|(_, &k)| !k).map(|(&x, _)| x).sum() };
    pairs + trace_gap - dropped(la, &ma) + dropped(lb, &mb)
}

fn relative_entropy_with_gap(a: &PsdMatrix, b: &PsdMatrix, trace_gap: f64, tol: &ToleranceConfig) -> Result<DivergenceResult> {
    same_dim(a.dim(), b.dim())?;
    tol.validate()?;
    let support_contained = contained(a, b, tol);
    let value = if !support_contained {
        f64::INFINITY
    } else {
        overlap_relative_entropy(a, b, trace_gap, tol)
    };
    Ok(DivergenceResult {
        value,
        a: None,
        support_contained,
        effective_ranks: (a.rank(tol), b.rank(tol)),
        tol: *tol,
    })
}

/// S(A‖B) for PSD operators; `+∞` when supp A ⊄ supp B.
pub fn relative_entropy(a: &PsdMatrix, b: &PsdMatrix, tol: &ToleranceConfig) -> Result<DivergenceResult> {
    relative_entropy_with_gap(a, b, a.trace() - b.trace(), tol)
}

/// S(ρ‖σ) = trace ρ(log ρ − log σ).
pub fn rel_entropy(rho: &DensityMatrix, sigma: &PsdMatrix, tol: &ToleranceConfig) -> Result<DivergenceResult> {
    relative_entropy(rho.as_psd(), sigma, tol)
}

/// S(b‖c) = b(log b − log c) for non-negative scalars, with 0·log 0 = 0.
pub fn rel_entropy_scalar(b: f64, c: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else if c == 0.0 {
        f64::INFINITY
    } else {
        b * (b.ln() - c.ln())
    }
}

/// S_a(A‖B) for PSD operators.
pub fn tre_psd(a: f64, first: &PsdMatrix, second: &PsdMatrix, tol: &ToleranceConfig) -> Result<DivergenceResult> {
    check_telescope(a)?;
    same_dim(first.dim(), second.dim())?;
    tol.validate()?;
    let mixture = first.combine(a, second, 1.0 - a)?;
    // trace first − trace mixture, exact up to the rounding of the two traces
    let gap = (1.0 - a) * (first.trace() - second.trace());
    let s = relative_entropy_with_gap(first, &mixture, gap, tol)?;
    Ok(DivergenceResult {
        value: s.value / neg_log(a),
        a: Some(a),
        support_contained: contained(first, second, tol),
        effective_ranks: (first.rank(tol), second.rank(tol)),
        tol: *tol,
    })
}

/// S_a(ρ‖σ) = S(ρ ‖ aρ + (1−a)σ) / (−log a).
pub fn tre(a: f64, rho: &DensityMatrix, sigma: &DensityMatrix, tol: &ToleranceConfig) -> Result<DivergenceResult> {
    tre_psd(a, rho.as_psd(), sigma.as_psd(), tol)
}

/// S_a(b‖c) = b(log b − log(ab + (1−a)c)) / (−log a) for b, c ≥ 0.
pub fn tre_scalar(a: f64, b: f64, c: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "a",
            value: a,
            range: "(0, 1)",
        });
    }
    for (name, v) in [("b", b), ("c", c)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::ParameterOutOfRange {
                name,
                value: v,
                range: "[0, inf)",
            });
        }
    }
    if b == 0.0 {
        return Ok(0.0);
    }
    if c == 0.0 {
        return Ok(b);
    }
    Ok(b * (b.ln() - (a * b + (1.0 - a) * c).ln()) / neg_log(a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Endpoint {
    /// a → 0
    Zero,
    /// a → 1
    One,
}

/// Closed-form endpoint limits: S₀ = 1 − trace ρ{σ}, S₁ = 1 − trace σ{ρ}.
pub fn tre_limit(endpoint: Endpoint, rho: &DensityMatrix, sigma: &DensityMatrix, tol: &ToleranceConfig) -> Result<f64> {
    same_dim(rho.dim(), sigma.dim())?;
    tol.validate()?;
    let overlap = match endpoint {
        Endpoint::Zero => rho.trace_product(&support_projector(sigma, tol)),
        Endpoint::One => sigma.trace_product(&support_projector(rho, tol)),
    };
    Ok((1.0 - overlap).clamp(0.0, 1.0))
}

fn require_contained(a: &PsdMatrix, b: &PsdMatrix, tol: &ToleranceConfig) -> Result<()> {
    let leak = support_leak(a, b, tol);
    if leak > tol.rank_tol {
        Err(Error::SupportMismatch(leak))
    } else {
        Ok(())
    }
}

/// ∇₁S(A‖B) = log A − log B + {A}.
pub fn grad1_rel(a: &PsdMatrix, b: &PsdMatrix, tol: &ToleranceConfig) -> Result<HermitianMatrix> {
    same_dim(a.dim(), b.dim())?;
    tol.validate()?;
    require_contained(a, b, tol)?;
    let g = &(&log_on_support(a, tol) - &log_on_support(b, tol)) + &support_projector(a, tol);
    Ok(g)
}

/// ∇₂S(A‖B) = −T_B(A).
pub fn grad2_rel(a: &PsdMatrix, b: &PsdMatrix, tol: &ToleranceConfig) -> Result<HermitianMatrix> {
    same_dim(a.dim(), b.dim())?;
    require_contained(a, b, tol)?;
    let t = DividedDifferenceKernel::new(b, tol)?.apply_first(a.matrix())?;
    Ok(t.scale(-1.0))
}

/// ∇₁S_a(A‖B) = (log A − log C + {A} − a·T_C(A)) / (−log a), C = aA + (1−a)B.
pub fn grad1_tre(a: f64, first: &PsdMatrix, second: &PsdMatrix, tol: &ToleranceConfig) -> Result<HermitianMatrix> {
    check_telescope(a)?;
    same_dim(first.dim(), second.dim())?;
    tol.validate()?;
    let c = first.combine(a, second, 1.0 - a)?;
    let t = DividedDifferenceKernel::new(&c, tol)?.apply_first(first.matrix())?;
    let g = &(&(&log_on_support(first, tol) - &log_on_support(&c, tol)) + &support_projector(first, tol))
        - &t.scale(a);
    Ok(g.scale(1.0 / neg_log(a)))
}

/// ∇₂S_a(A‖B) = −((1−a)/(−log a))·T_C(A), C = aA + (1−a)B.
///
/// This is the chain-rule gradient of S(A‖C)/(−log a) in B. At A = B it coincides with
/// the form written with T_B(A), since then C = B.
pub fn grad2_tre(a: f64, first: &PsdMatrix, second: &PsdMatrix, tol: &ToleranceConfig) -> Result<HermitianMatrix> {
    check_telescope(a)?;
    same_dim(first.dim(), second.dim())?;
    tol.validate()?;
    let c = first.combine(a, second, 1.0 - a)?;
    let t = DividedDifferenceKernel::new(&c, tol)?.apply_first(first.matrix())?;
    Ok(t.scale(-(1.0 - a) / neg_log(a)))
}
