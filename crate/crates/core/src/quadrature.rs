//! Resolvent-integral oracles on the half line.
//!
//! These evaluate the defining integrals of the log derivatives directly, with
//! LU-based resolvents `(A + s)⁻¹` and no eigendecomposition, so they stay independent
//! of the divided-difference route in [`crate::frechet`].
//!
//! The half line is mapped to `w ∈ (0, 1]` by `s = λ_min (1 − w)/w`. The interval is
//! cut into dyadic bands `[2^-(j+1), 2^-j]` reaching past `s ≈ 100 λ_max`, plus a final
//! band `[0, 2^-J]`; each band carries `m` equal panels of fixed-order Gauss–Legendre.
//! `m` doubles until two successive estimates agree to 1e-10 (relative to
//! `max(1, |I|_max)`).

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{same_dim, CMatrix, HermitianMatrix, PsdMatrix};

pub const GL_ORDER: usize = 8;
pub const DEFAULT_NODE_CAP: usize = 1 << 14;
pub const CONVERGENCE_TOL: f64 = 1e-10;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and P_{n-1}
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_ORDER))
}

/// ∫₀^∞ f(s) ds for a matrix-valued integrand whose variation lives on `[anchor, upper]`.
pub fn integrate_half_line<F>(
    anchor: f64,
    upper: f64,
    initial_panels: usize,
    node_cap: usize,
    f: F,
) -> Result<CMatrix>
where
    F: Fn(f64) -> CMatrix,
{
    if !(anchor > 0.0 && anchor.is_finite()) {
        return Err(Error::ParameterOutOfRange {
            name: "quadrature anchor",
            value: anchor,
            range: "(0, inf)",
        });
    }
    let upper = upper.max(anchor);
    // band count: 2^J ≥ 100 · upper/anchor
    let bands = ((100.0 * upper / anchor).log2().ceil().max(1.0) as usize) + 1;
    let mut panels = initial_panels.max(1);
    let mut previous: Option<CMatrix> = None;
    let mut last_change = f64::INFINITY;
    loop {
        let nodes = bands * panels * GL_ORDER;
        if nodes > node_cap {
            return Err(Error::QuadratureNonConvergence {
                nodes: node_cap,
                change: last_change,
            });
        }
        let estimate = banded_rule(anchor, bands, panels, &f);
        if let Some(prev) = &previous {
            let scale = estimate.iter().map(|z| z.norm()).fold(1.0, f64::max);
            last_change = (&estimate - prev).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if last_change <= CONVERGENCE_TOL * scale {
                return Ok(estimate);
            }
        }
        previous = Some(estimate);
        panels *= 2;
    }
}

fn banded_rule<F>(anchor: f64, bands: usize, panels: usize, f: &F) -> CMatrix
where
    F: Fn(f64) -> CMatrix,
{
    let (xs, ws) = gl8();
    let mut total: Option<CMatrix> = None;
    for band in 0..bands {
        let (lo, hi) = if band + 1 == bands {
            (0.0, 0.5f64.powi(band as i32))
        } else {
            (0.5f64.powi(band as i32 + 1), 0.5f64.powi(band as i32))
        };
        let h = (hi - lo) / panels as f64;
        for p in 0..panels {
            let a = lo + h * p as f64;
            let mid = a + 0.5 * h;
            for (x, w) in xs.iter().zip(ws) {
                let wv = mid + 0.5 * h * x;
                let s = anchor * (1.0 - wv) / wv;
                let jac = anchor / (wv * wv);
                let term = f(s) * Complex64::new(0.5 * h * w * jac, 0.0);
                match total.as_mut() {
                    Some(t) => *t += term,
                    None => total = Some(term),
                }
            }
        }
    }
    total.expect("at least one node")
}

/// (A + s)⁻¹ by LU.
pub fn resolvent(a: &CMatrix, s: f64) -> CMatrix {
    let n = a.nrows();
    let shifted = a + CMatrix::identity(n, n) * Complex64::new(s, 0.0);
    shifted.lu().try_inverse().expect("A + s is invertible for A > 0, s ≥ 0")
}

/// Smallest and largest eigenvalue, refusing operators without a strictly positive spectrum.
fn positive_range(a: &PsdMatrix) -> Result<(f64, f64)> {
    let lo = a.spectrum().lambda_min();
    let hi = a.spectrum().lambda_max();
    if !(lo > 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "lambda_min",
            value: lo,
            range: "(0, inf) (quadrature oracles need full-rank A)",
        });
    }
    Ok((lo, hi))
}

/// ∫₀^∞ (A+s)⁻¹ Δ (A+s)⁻¹ ds.
pub fn quadrature_t_map(a: &PsdMatrix, delta: &HermitianMatrix, panels: usize) -> Result<HermitianMatrix> {
    same_dim(a.dim(), delta.dim())?;
    let (lo, hi) = positive_range(a)?;
    let am = a.entries();
    let d = delta.entries();
    let out = integrate_half_line(lo, hi, panels, DEFAULT_NODE_CAP, |s| {
        let r = resolvent(am, s);
        &r * d * &r
    })?;
    Ok(HermitianMatrix::hermitian_part(&out))
}

/// 2∫₀^∞ (A+s)⁻¹ Δ (A+s)⁻¹ Δ (A+s)⁻¹ ds.
pub fn quadrature_r_map(a: &PsdMatrix, delta: &HermitianMatrix, panels: usize) -> Result<HermitianMatrix> {
    same_dim(a.dim(), delta.dim())?;
    let (lo, hi) = positive_range(a)?;
    let am = a.entries();
    let d = delta.entries();
    let out = integrate_half_line(lo, hi, panels, DEFAULT_NODE_CAP, |s| {
        let r = resolvent(am, s);
        (&r * d * &r * d * &r) * Complex64::new(2.0, 0.0)
    })?;
    Ok(HermitianMatrix::hermitian_part(&out))
}

/// log X = ∫₀^∞ (1/(1+s) − (X+s)⁻¹) ds for X > 0.
pub fn quadrature_log(x: &PsdMatrix, panels: usize) -> Result<HermitianMatrix> {
    let (lo, hi) = positive_range(x)?;
    let xm = x.entries();
    let n = x.dim();
    let out = integrate_half_line(lo.min(1.0), hi.max(1.0), panels, DEFAULT_NODE_CAP, |s| {
        CMatrix::identity(n, n) * Complex64::new(1.0 / (1.0 + s), 0.0) - resolvent(xm, s)
    })?;
    Ok(HermitianMatrix::hermitian_part(&out))
}

/// TRE from its resolvent representation:
/// S_a(ρ‖σ) = (1/log a) ∫₀^∞ trace ρ[(ρ+s)⁻¹ − (aρ+(1−a)σ+s)⁻¹] ds, for full-rank ρ and σ.
pub fn quadrature_tre(a: f64, rho: &PsdMatrix, sigma: &PsdMatrix, panels: usize) -> Result<f64> {
    same_dim(rho.dim(), sigma.dim())?;
    let (rlo, rhi) = positive_range(rho)?;
    let (slo, shi) = positive_range(sigma)?;
    let tau = rho.combine(a, sigma, 1.0 - a)?;
    let r = rho.entries();
    let t = tau.entries();
    let out = integrate_half_line(rlo.min(slo * (1.0 - a)), rhi.max(shi), panels, DEFAULT_NODE_CAP, |s| {
        let diff = resolvent(r, s) - resolvent(t, s);
        CMatrix::from_element(1, 1, (r * diff).trace())
    })?;
    Ok(out[(0, 0)].re / a.ln())
}
