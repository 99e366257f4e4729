//! Margin functions, one per inequality or identity under certification.
//!
//! A margin is RHS − LHS of the inequality; a non-negative margin certifies the instance.

use crate::divergence::{
    rel_entropy_scalar, relative_entropy, tre, tre_limit, tre_psd, tre_scalar, Endpoint,
};
use crate::error::{Error, Result};
use crate::frechet::DividedDifferenceKernel;
use crate::operator::{
    log_on_support, spectral_decompose, trace_distance, DensityMatrix, HermitianMatrix, PsdMatrix,
    ToleranceConfig,
};

/// Margin of `lhs ≤ rhs` where either side may be +∞ (∞ ≤ ∞ holds).
pub fn ineq_margin(lhs: f64, rhs: f64) -> f64 {
    if lhs.is_infinite() && rhs.is_infinite() && lhs > 0.0 && rhs > 0.0 {
        0.0
    } else {
        rhs - lhs
    }
}

/// (1 − a)/(−a log a).
pub fn linear_coefficient(a: f64) -> f64 {
    (1.0 - a) / (a * -(-(1.0 - a)).ln_1p())
}

/// Bound of the first-argument triangle inequality: t − S_a(t‖1).
pub fn triangle1_bound(a: f64, t: f64) -> Result<f64> {
    Ok(t - tre_scalar(a, t, 1.0)?)
}

/// Tight bound of the second-argument triangle inequality: 1 − S_a(1‖t).
pub fn triangle2_tight_bound(a: f64, t: f64) -> Result<f64> {
    Ok(1.0 - tre_scalar(a, 1.0, t)?)
}

pub fn triangle2_linear_bound(a: f64, t: f64) -> f64 {
    linear_coefficient(a) * t
}

/// (t − S_a(t‖1)) − |S_a(ρ₁‖σ) − S_a(ρ₂‖σ)| with t = T(ρ₁, ρ₂).
pub fn check_triangle1(
    a: f64,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    sigma: &DensityMatrix,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let t = trace_distance(rho1, rho2)?;
    let s1 = tre(a, rho1, sigma, tol)?.value;
    let s2 = tre(a, rho2, sigma, tol)?.value;
    Ok(triangle1_bound(a, t)? - (s1 - s2).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle2Margins {
    pub tight: f64,
    pub linear: f64,
    /// linear bound − tight bound
    pub chain: f64,
}

pub fn check_triangle2(
    a: f64,
    rho: &DensityMatrix,
    sigma1: &DensityMatrix,
    sigma2: &DensityMatrix,
    tol: &ToleranceConfig,
) -> Result<Triangle2Margins> {
    let t = trace_distance(sigma1, sigma2)?;
    let d = (tre(a, rho, sigma1, tol)?.value - tre(a, rho, sigma2, tol)?.value).abs();
    let tight = triangle2_tight_bound(a, t)?;
    let linear = triangle2_linear_bound(a, t);
    Ok(Triangle2Margins {
        tight: tight - d,
        linear: linear - d,
        chain: linear - tight,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rbts2Margins {
    pub upper: f64,
    pub lower: f64,
}

/// S(A‖A+X) ≥ S(A+B‖A+B+X) ≥ S(A‖A+X) + S(b‖b+x).
pub fn check_rbts2(a: &PsdMatrix, b: &PsdMatrix, x: &PsdMatrix, tol: &ToleranceConfig) -> Result<Rbts2Margins> {
    let ax = a.try_add(x)?;
    let ab = a.try_add(b)?;
    let abx = ab.try_add(x)?;
    let outer = relative_entropy(a, &ax, tol)?.value;
    let middle = relative_entropy(&ab, &abx, tol)?.value;
    let (bt, xt) = (b.trace(), x.trace());
    let scalar = rel_entropy_scalar(bt, bt + xt);
    Ok(Rbts2Margins {
        upper: ineq_margin(middle, outer),
        lower: middle - outer - scalar,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbtsMargins {
    pub upper: f64,
    pub lower: f64,
    /// log(1+b) − trace ρ(log(ρ+A+B) − log(ρ+A)), ρ = X / trace X
    pub eq_upper: f64,
    /// trace ρ(log(ρ+A+B) − log(ρ+A))
    pub eq_lower: f64,
}

/// S(X‖A+X) ≥ S(X‖A+B+X) ≥ S(X‖A+X) + S(x‖b+x), plus the state form
/// 0 ≤ trace ρ(log(ρ+A+B) − log(ρ+A)) ≤ log(1+b).
pub fn check_rbts(a: &PsdMatrix, b: &PsdMatrix, x: &PsdMatrix, tol: &ToleranceConfig) -> Result<RbtsMargins> {
    let ax = a.try_add(x)?;
    let abx = ax.try_add(b)?;
    let outer = relative_entropy(x, &ax, tol)?.value;
    let middle = relative_entropy(x, &abx, tol)?.value;
    let (bt, xt) = (b.trace(), x.trace());
    let scalar = rel_entropy_scalar(xt, bt + xt);

    let rho = x.normalized()?;
    let eq = rbts_state_form(&rho, a, b, tol)?;
    Ok(RbtsMargins {
        upper: ineq_margin(middle, outer),
        lower: middle - outer - scalar,
        eq_upper: bt.ln_1p() - eq,
        eq_lower: eq,
    })
}

/// trace ρ(log(ρ+A+B) − log(ρ+A)).
pub fn rbts_state_form(rho: &DensityMatrix, a: &PsdMatrix, b: &PsdMatrix, tol: &ToleranceConfig) -> Result<f64> {
    let ra = rho.as_psd().try_add(a)?;
    let rab = ra.try_add(b)?;
    Ok(rho.trace_product(&log_on_support(&rab, tol)) - rho.trace_product(&log_on_support(&ra, tol)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TderivMargins {
    pub lower: f64,
    pub upper: f64,
}

/// 0 ≤ trace X T_{A+X}(X) − trace X T_{A+B+X}(X) ≤ bx/(b+x), with bound 0 when b = x = 0.
pub fn check_tderiv(a: &PsdMatrix, b: &PsdMatrix, x: &PsdMatrix, tol: &ToleranceConfig) -> Result<TderivMargins> {
    let ax = a.try_add(x)?;
    let abx = ax.try_add(b)?;
    let near = DividedDifferenceKernel::new(&ax, tol)?.quadratic_form(x.matrix())?;
    let far = DividedDifferenceKernel::new(&abx, tol)?.quadratic_form(x.matrix())?;
    let d = near - far;
    let (bt, xt) = (b.trace(), x.trace());
    let bound = if bt + xt == 0.0 { 0.0 } else { bt * xt / (bt + xt) };
    Ok(TderivMargins {
        lower: d,
        upper: bound - d,
    })
}

/// trace(A+B) R_{A+B}(A) − trace A T_{A+B}(A).
pub fn lieb1_margin(a: &PsdMatrix, b: &PsdMatrix, tol: &ToleranceConfig) -> Result<f64> {
    let ab = a.try_add(b)?;
    let k = DividedDifferenceKernel::new(&ab, tol)?;
    let r = k.apply_second(a.matrix())?;
    Ok(ab.trace_product(&r) - k.quadratic_form(a.matrix())?)
}

/// 1 − λ_max(R_{A+B}(A)).
pub fn lieb2_margin(a: &PsdMatrix, b: &PsdMatrix, tol: &ToleranceConfig) -> Result<f64> {
    let ab = a.try_add(b)?;
    let r = DividedDifferenceKernel::new(&ab, tol)?.apply_second(a.matrix())?;
    Ok(1.0 - spectral_decompose(&r)?.lambda_max())
}

/// min over an evenly spaced t-grid on [0, 1] of (1−t)f(t) − f(0) for f(t) = αt² + βt + γ.
pub fn lemma_f_margin(alpha: f64, beta: f64, gamma: f64, grid: usize) -> f64 {
    let f = |t: f64| (alpha * t + beta) * t + gamma;
    (0..=grid)
        .map(|i| i as f64 / grid as f64)
        .map(|t| (1.0 - t) * f(t) - f(0.0))
        .fold(f64::INFINITY, f64::min)
}

/// −|S₀(wρ₁+(1−w)ρ₂‖σ) − (wS₀(ρ₁‖σ) + (1−w)S₀(ρ₂‖σ))|.
pub fn s0_linearity_defect(
    w: f64,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    sigma: &DensityMatrix,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let mix = rho1.mix(w, rho2)?;
    let lhs = tre_limit(Endpoint::Zero, &mix, sigma, tol)?;
    let rhs = w * tre_limit(Endpoint::Zero, rho1, sigma, tol)? + (1.0 - w) * tre_limit(Endpoint::Zero, rho2, sigma, tol)?;
    Ok(-(lhs - rhs).abs())
}

/// −|S₁(ρ‖wσ₁+(1−w)σ₂) − (wS₁(ρ‖σ₁) + (1−w)S₁(ρ‖σ₂))|.
pub fn s1_linearity_defect(
    w: f64,
    rho: &DensityMatrix,
    sigma1: &DensityMatrix,
    sigma2: &DensityMatrix,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let mix = sigma1.mix(w, sigma2)?;
    let lhs = tre_limit(Endpoint::One, rho, &mix, tol)?;
    let rhs = w * tre_limit(Endpoint::One, rho, sigma1, tol)? + (1.0 - w) * tre_limit(Endpoint::One, rho, sigma2, tol)?;
    Ok(-(lhs - rhs).abs())
}

/// T(σ₁, σ₂) − |S₁(ρ‖σ₁) − S₁(ρ‖σ₂)|.
pub fn s1_fannes_margin(
    rho: &DensityMatrix,
    sigma1: &DensityMatrix,
    sigma2: &DensityMatrix,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let t = trace_distance(sigma1, sigma2)?;
    let d = tre_limit(Endpoint::One, rho, sigma1, tol)? - tre_limit(Endpoint::One, rho, sigma2, tol)?;
    Ok(t - d.abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonobothMargins {
    /// S(A‖B) − S(A+X‖B+X)
    pub rel_both: f64,
    /// S_a(A‖B) − S_a(A+X‖B+X)
    pub tre_both: f64,
    /// S(A‖B) − S(A‖B+X)
    pub rel_second: f64,
    /// S_a(A‖B) − S_a(A‖B+X)
    pub tre_second: f64,
}

pub fn check_monoboth(
    t: f64,
    a: &PsdMatrix,
    b: &PsdMatrix,
    x: &PsdMatrix,
    tol: &ToleranceConfig,
) -> Result<MonobothMargins> {
    let ax = a.try_add(x)?;
    let bx = b.try_add(x)?;
    let s_ab = relative_entropy(a, b, tol)?.value;
    let sa_ab = tre_psd(t, a, b, tol)?.value;
    Ok(MonobothMargins {
        rel_both: ineq_margin(relative_entropy(&ax, &bx, tol)?.value, s_ab),
        tre_both: sa_ab - tre_psd(t, &ax, &bx, tol)?.value,
        rel_second: ineq_margin(relative_entropy(a, &bx, tol)?.value, s_ab),
        tre_second: sa_ab - tre_psd(t, a, &bx, tol)?.value,
    })
}

/// Midpoint convexity of (ρ, σ) ↦ S_a(ρ‖σ).
pub fn tre_convexity_margin(
    a: f64,
    pair1: (&DensityMatrix, &DensityMatrix),
    pair2: (&DensityMatrix, &DensityMatrix),
    tol: &ToleranceConfig,
) -> Result<f64> {
    let rho = pair1.0.mix(0.5, pair2.0)?;
    let sigma = pair1.1.mix(0.5, pair2.1)?;
    let avg = 0.5 * (tre(a, pair1.0, pair1.1, tol)?.value + tre(a, pair2.0, pair2.1, tol)?.value);
    Ok(avg - tre(a, &rho, &sigma, tol)?.value)
}

/// Midpoint convexity of (A, X) ↦ trace X T_A(X), relative to max(1, average of the ends).
///
/// The form grows like |X|²/λ_min(A), so near-singular A makes absolute slack meaningless.
pub fn t_form_convexity_margin(
    pair1: (&PsdMatrix, &HermitianMatrix),
    pair2: (&PsdMatrix, &HermitianMatrix),
    tol: &ToleranceConfig,
) -> Result<f64> {
    let q = |a: &PsdMatrix, x: &HermitianMatrix| DividedDifferenceKernel::new(a, tol)?.quadratic_form(x);
    let a_mid = pair1.0.combine(0.5, pair2.0, 0.5)?;
    let x_mid = &pair1.1.scale(0.5) + &pair2.1.scale(0.5);
    let avg = 0.5 * (q(pair1.0, pair1.1)? + q(pair2.0, pair2.1)?);
    Ok((avg - q(&a_mid, &x_mid)?) / avg.max(1.0))
}

/// Smallest |b·S_a(X‖Y)| per unit of b treated as relative; below it the defect is
/// measured against this floor. Rounding the entries of bX perturbs traces by O(ε·b),
/// which moves S_a by the same absolute amount, so a purely relative test of a value
/// much smaller than b would test input rounding rather than the identity.
pub const SCALING_RELATIVE_FLOOR: f64 = 1e-4;

/// −|b·S_a(X‖Y) − S_a(bX‖bY)| / max(|b·S_a(X‖Y)|, b·floor).
pub fn scaling_defect(a: f64, scale: f64, x: &PsdMatrix, y: &PsdMatrix, tol: &ToleranceConfig) -> Result<f64> {
    let reference = scale * tre_psd(a, x, y, tol)?.value;
    let scaled = tre_psd(a, &x.scaled(scale)?, &y.scaled(scale)?, tol)?.value;
    let denom = reference.abs().max(scale * SCALING_RELATIVE_FLOOR);
    Ok(-(reference - scaled).abs() / denom)
}

/// −|S_a(bX‖cX) − S_a(b‖c)| for a state X.
pub fn commuting_collapse_defect(a: f64, b: f64, c: f64, x: &DensityMatrix, tol: &ToleranceConfig) -> Result<f64> {
    let m = tre_psd(a, &x.scaled(b)?, &x.scaled(c)?, tol)?.value;
    Ok(-(m - tre_scalar(a, b, c)?).abs())
}

/// Triangle-1 margin on ρ₁ ⊥ σ, ρ₂ = tσ + (1−t)ρ₁, where the bound is attained.
pub fn triangle1_equality_margin(
    a: f64,
    t: f64,
    rho1: &DensityMatrix,
    sigma: &DensityMatrix,
    tol: &ToleranceConfig,
) -> Result<f64> {
    require_orthogonal(rho1, sigma)?;
    let rho2 = sigma.mix(t, rho1)?;
    check_triangle1(a, rho1, &rho2, sigma, tol)
}

/// Tight triangle-2 margin on ρ ⊥ σ₁, σ₂ = tρ + (1−t)σ₁, where the bound is attained.
pub fn triangle2_equality_margin(
    a: f64,
    t: f64,
    rho: &DensityMatrix,
    sigma1: &DensityMatrix,
    tol: &ToleranceConfig,
) -> Result<f64> {
    require_orthogonal(rho, sigma1)?;
    let sigma2 = rho.mix(t, sigma1)?;
    Ok(check_triangle2(a, rho, sigma1, &sigma2, tol)?.tight)
}

fn require_orthogonal(x: &DensityMatrix, y: &DensityMatrix) -> Result<()> {
    let overlap = x.trace_product(y);
    if overlap.abs() > 1e-12 {
        return Err(Error::InvalidSpec(format!(
            "equality family needs orthogonal states, trace overlap {overlap:e}"
        )));
    }
    Ok(())
}
