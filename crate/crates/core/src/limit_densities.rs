//! Limiting overlap densities in the bulk and at the spectral edge, their
//! conditionals and CDF tables.
//!
//! Bulk: ρ_{β,bulk}(z, s) = e^{−β/(2s)}/(v_β s^{β+1}) jointly in (z, s), with
//! v₁ = 2√(2π) and v₂ = π. The z-marginal is flat, so conditioning on a
//! z-window only rescales by a constant; the normalized s-conditionals have
//! closed-form CDFs (1 + 1/s)e^{−1/s} (β = 2) and e^{−1/(2s)} (β = 1).
//!
//! Edge: ρ_{β,edge}(δ, s) combines an essential singularity at s → 0 with a
//! determinant of Gaussian tail moments I_k(δ) = ∫_δ^∞ x^k e^{−x²/2} dx. The
//! moments satisfy I_k = δ^{k−1}e^{−δ²/2} + (k−1)I_{k−2}, seeded by
//! I₀ = √(π/2)·erfc(δ/√2) and I₁ = e^{−δ²/2}; the recursion is the hot path
//! and quadrature of the defining integral is kept as a test oracle.

use crate::ensembles::Beta;
use crate::error::{OverlapError, Result};
use crate::quad::adaptive_simpson;
use serde::Serialize;

/// Normalization constant v_β: v₁ = 2√(2π), v₂ = π.
pub fn v_beta(beta: Beta) -> f64 {
    match beta {
        Beta::One => 2.0 * (2.0 * std::f64::consts::PI).sqrt(),
        Beta::Two => std::f64::consts::PI,
    }
}

/// Gaussian tail moments I_k(δ) for k = 0..=2β, built by recursion.
#[derive(Clone, Debug)]
pub struct EdgeMomentTable {
    pub delta: f64,
    i: Vec<f64>,
}

impl EdgeMomentTable {
    pub fn new(delta: f64, beta: Beta) -> Self {
        let k_max = 2 * beta.as_usize();
        let gauss = (-0.5 * delta * delta).exp();
        let mut i = Vec::with_capacity(k_max + 1);
        i.push((std::f64::consts::PI / 2.0).sqrt() * libm::erfc(delta / 2f64.sqrt()));
        if k_max >= 1 {
            i.push(gauss);
        }
        for k in 2..=k_max {
            let lead = delta.powi(k as i32 - 1) * gauss;
            i.push(lead + (k as f64 - 1.0) * i[k - 2]);
        }
        EdgeMomentTable { delta, i }
    }

    pub fn i_k(&self, k: usize) -> f64 {
        self.i[k]
    }

    pub fn len(&self) -> usize {
        self.i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i.is_empty()
    }
}

/// Quadrature oracle for the tail moments: ∫_δ^∞ x^k e^{−x²/2} dx truncated
/// where the integrand is < 10⁻³⁰.
pub fn moment_integral_quadrature(delta: f64, k: usize) -> f64 {
    let hi = delta.max(0.0) + 14.0;
    adaptive_simpson(
        &mut |x: f64| x.powi(k as i32) * (-0.5 * x * x).exp(),
        delta,
        hi,
        1e-13,
    )
}

fn require_positive_s(s: f64) -> Result<()> {
    if s > 0.0 {
        Ok(())
    } else {
        Err(OverlapError::InvalidParameter(format!(
            "density evaluated at s = {s}; the rescaled overlap is positive"
        )))
    }
}

/// Joint bulk density ρ_{β,bulk}(z, s); flat in z, so only s appears.
pub fn rho_bulk_joint(beta: Beta, s: f64) -> Result<f64> {
    require_positive_s(s)?;
    let b = beta.as_f64();
    Ok((-b / (2.0 * s)).exp() / (v_beta(beta) * s.powf(b + 1.0)))
}

/// Normalized s-conditional of the bulk density.
pub fn bulk_conditional(beta: Beta, s: f64) -> Result<f64> {
    require_positive_s(s)?;
    Ok(match beta {
        // s⁻³ e^{−1/s}
        Beta::Two => (-1.0 / s).exp() / (s * s * s),
        // (1/2) s⁻² e^{−1/(2s)}
        Beta::One => 0.5 * (-0.5 / s).exp() / (s * s),
    })
}

/// Closed-form CDF of the normalized bulk s-conditional.
pub fn bulk_conditional_cdf(beta: Beta, s: f64) -> Result<f64> {
    require_positive_s(s)?;
    Ok(match beta {
        Beta::Two => (1.0 + 1.0 / s) * (-1.0 / s).exp(),
        Beta::One => (-0.5 / s).exp(),
    })
}

/// Joint edge density ρ_{β,edge}(δ, s).
pub fn rho_edge(beta: Beta, delta: f64, s: f64) -> Result<f64> {
    require_positive_s(s)?;
    if !delta.is_finite() {
        return Err(OverlapError::InvalidParameter(
            "rho_edge requires finite delta".into(),
        ));
    }
    let b = beta.as_f64();
    let table = EdgeMomentTable::new(delta, beta);
    let entry = |j: usize, k: usize| -> f64 {
        let base = table.i_k(j + k - 2);
        let next = table.i_k(j + k - 1);
        base + s * (next - delta * base)
    };
    let det = match beta {
        Beta::One => entry(1, 1),
        Beta::Two => entry(1, 1) * entry(2, 2) - entry(1, 2) * entry(2, 1),
    };
    let prefactor = 1.0 / (v_beta(beta) * s.powf(2.0 * b + 1.0));
    let exponent = (-b / (4.0 * s * s) * (1.0 - 2.0 * delta * s)).exp();
    let gauss_norm = (2.0 * std::f64::consts::PI).powf(-b / 2.0);
    Ok(prefactor * exponent * gauss_norm * det)
}

/// Sup relative error between the depth-rescaled edge density
/// |δ|·ρ_edge(δ, |δ|s) and the joint bulk density over the s-grid.
pub fn edge_to_bulk_limit_check(beta: Beta, delta: f64, s_grid: &[f64]) -> Result<f64> {
    if delta > -4.0 {
        return Err(OverlapError::InvalidParameter(format!(
            "edge-to-bulk comparison needs delta <= -4, got {delta}"
        )));
    }
    if s_grid.is_empty() {
        return Err(OverlapError::EmptySelection(
            "edge_to_bulk_limit_check needs a nonempty s-grid".into(),
        ));
    }
    let scale = -delta;
    let mut sup = 0.0f64;
    for &s in s_grid {
        let bulk = rho_bulk_joint(beta, s)?;
        let edge = scale * rho_edge(beta, delta, scale * s)?;
        sup = sup.max((edge - bulk).abs() / bulk);
    }
    Ok(sup)
}

/// Density selector for CDF tables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum DensityRegime {
    /// Normalized bulk s-conditional.
    Bulk,
    /// Edge density at fixed δ, renormalized to unit mass over s.
    Edge { delta: f64 },
}

/// Tabulated CDF for KS tests, with the total-mass renormalization reported.
#[derive(Clone, Debug, Serialize)]
pub struct CdfTable {
    pub grid: Vec<f64>,
    pub cdf: Vec<f64>,
    /// Mass of the raw density over (0, ∞) before renormalization.
    pub mass: f64,
}

impl CdfTable {
    /// Piecewise-linear CDF evaluation; clamps outside the grid.
    pub fn eval(&self, s: f64) -> f64 {
        if s <= self.grid[0] {
            return self.cdf[0] * (s / self.grid[0]).max(0.0);
        }
        if s >= *self.grid.last().unwrap() {
            return *self.cdf.last().unwrap();
        }
        let idx = self.grid.partition_point(|&g| g < s);
        let (g0, g1) = (self.grid[idx - 1], self.grid[idx]);
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        c0 + (c1 - c0) * (s - g0) / (g1 - g0)
    }
}

/// Logarithmically spaced grid, endpoints included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (llo + (lhi - llo) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Build a normalized CDF table over the grid. The head below the first grid
/// point integrates from 0, and the tail beyond the last point is captured by
/// the substitution u = 1/s, which maps it to a finite smooth integral.
pub fn cdf_table(beta: Beta, regime: DensityRegime, grid: &[f64]) -> Result<CdfTable> {
    if grid.len() < 2 || grid[0] <= 0.0 || grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(OverlapError::InvalidParameter(
            "cdf_table needs an increasing positive grid of length >= 2".into(),
        ));
    }
    let density = |s: f64| -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match regime {
            DensityRegime::Bulk => bulk_conditional(beta, s).unwrap_or(0.0),
            DensityRegime::Edge { delta } => rho_edge(beta, delta, s).unwrap_or(0.0),
        }
    };
    let tol = 1e-11;
    let head = adaptive_simpson(&mut |s| density(s), 0.0, grid[0], tol);
    let mut cumulative = Vec::with_capacity(grid.len());
    let mut acc = head;
    cumulative.push(acc);
    for win in grid.windows(2) {
        acc += adaptive_simpson(&mut |s| density(s), win[0], win[1], tol);
        cumulative.push(acc);
    }
    let s_end = *grid.last().unwrap();
    let tail = adaptive_simpson(
        &mut |u: f64| {
            if u <= 0.0 {
                0.0
            } else {
                density(1.0 / u) / (u * u)
            }
        },
        0.0,
        1.0 / s_end,
        tol,
    );
    let mass = acc + tail;
    if !(mass.is_finite() && mass > 0.0) {
        return Err(OverlapError::NoConvergence(format!(
            "cdf_table mass {mass} not usable"
        )));
    }
    let cdf: Vec<f64> = cumulative.iter().map(|&c| c / mass).collect();
    Ok(CdfTable {
        grid: grid.to_vec(),
        cdf,
        mass,
    })
}
