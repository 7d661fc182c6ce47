//! Slow, trusted reference quadratures.
//!
//! Nothing here is clever: adaptive bisection with a high-order
//! Gauss-Legendre rule, plus geometric refinement toward integrable
//! endpoint singularities. These are the evaluators the fast paths are
//! tested against, so they favour transparency over speed and refuse to
//! return a value when the refinement budget runs out rather than guess.
//! All routines are deterministic: the same inputs produce the same bits.

use crate::cheb::PiecewiseChebFunction;
use crate::error::{Error, Result};
use crate::quadrature::{LayerKernel, LocalIntegralSpec};
use crate::special::gl_rule;

#[derive(Clone, Debug)]
pub struct OracleConfig {
    /// Absolute tolerance requested of the adaptive refinement.
    pub tol: f64,
    /// Maximum bisection depth per segment before giving up.
    pub max_depth: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_depth: 60,
        }
    }
}

const ORACLE_TOL_FLOOR: f64 = 1e-14;
const ORACLE_GL_ORDER: usize = 32;

fn check_cfg(cfg: &OracleConfig) {
    assert!(
        cfg.tol >= ORACLE_TOL_FLOOR,
        "oracle tolerance below the trustworthy floor: {}",
        cfg.tol
    );
}

/// Adaptive bisection on [a, b]: accept when one split no longer moves the
/// Gauss-Legendre value by more than the local budget.
fn adaptive_segment<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
    max_depth: usize,
) -> Result<f64> {
    let rule = gl_rule(ORACLE_GL_ORDER);
    let whole = rule.integrate(a, b, f);
    let mid = 0.5 * (a + b);
    let halves = rule.integrate(a, mid, f) + rule.integrate(mid, b, f);
    if (whole - halves).abs() <= tol || b - a < 1e-15 * (a.abs() + b.abs()).max(1.0) {
        return Ok(halves);
    }
    if depth >= max_depth {
        return Err(Error::DepthExceeded(a, b));
    }
    let left = adaptive_segment(f, a, mid, 0.5 * tol, depth + 1, max_depth)?;
    let right = adaptive_segment(f, mid, b, 0.5 * tol, depth + 1, max_depth)?;
    Ok(left + right)
}

/// Reference value of the Gaussian convolution
/// ∫_a^b e^{−(x−y)²/4t}/√(4πt) · f(y) dy
/// over the domain of the piecewise representation of f.
///
/// Splits at every piece boundary and at y = x (the kernel's peak) before
/// refining adaptively, so small t costs depth rather than accuracy.
pub fn oracle_gauss_conv(
    f: &PiecewiseChebFunction,
    x: f64,
    t: f64,
    cfg: &OracleConfig,
) -> Result<f64> {
    check_cfg(cfg);
    if t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    let (a, b) = f.domain();
    let mut cuts: Vec<f64> = f.breakpoints();
    if x > a && x < b {
        cuts.push(x);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
    }
    let norm = 1.0 / (4.0 * std::f64::consts::PI * t).sqrt();
    let integrand = |y: f64| {
        let d = x - y;
        norm * (-d * d / (4.0 * t)).exp() * f.eval(y)
    };
    let budget = cfg.tol / (cuts.len() - 1) as f64;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += adaptive_segment(&integrand, w[0], w[1], budget, 0, cfg.max_depth)?;
    }
    Ok(total)
}

/// Reference value of the layer-potential history integral
/// ∫_0^a kernel(y − γ(b−τ), τ) φ(b−τ) dτ.
///
/// The integrand can behave like τ^{−1/2} as τ → 0 (target sitting on the
/// boundary), so the head is resolved on geometrically shrinking windows
/// [a·2^{−j−1}, a·2^{−j}] until two consecutive windows contribute less
/// than the tolerance, each window itself adaptively refined.
pub fn oracle_history_integral(
    spec: &LocalIntegralSpec,
    kernel: LayerKernel,
    cfg: &OracleConfig,
) -> Result<f64> {
    check_cfg(cfg);
    // Forming y − γ(b−τ) directly loses all significance once τ shrinks
    // below roundoff·|γ|/|γ′| (the difference is ≈ γ′τ, computed from two
    // O(|γ|) numbers), and that noise is amplified by τ^{-3/2} in the
    // dipole kernel. Below a switch point, use the Taylor expansion of γ
    // about b instead; five derivatives keep the truncation far below the
    // oracle tolerance for trajectories with O(10) frequencies.
    let y0 = spec.y - spec.gamma.value(spec.b);
    let d: [f64; 5] = std::array::from_fn(|k| spec.gamma.deriv(k + 1, spec.b));
    let tau_switch = 1e-4 * spec.b.abs().max(1.0);
    let z_of = move |tau: f64| {
        if tau < tau_switch {
            y0 + tau
                * (d[0]
                    - tau * (d[1] / 2.0 - tau * (d[2] / 6.0 - tau * (d[3] / 24.0 - tau * d[4] / 120.0))))
        } else {
            spec.y - spec.gamma.value(spec.b - tau)
        }
    };
    let integrand = |tau: f64| kernel.eval(z_of(tau), tau) * spec.phi.value(spec.b - tau);
    let mut total = 0.0;
    let mut hi = spec.a;
    let mut quiet = 0usize;
    let level_budget = 0.25 * cfg.tol;
    for level in 0.. {
        if level > 4096 {
            return Err(Error::DepthExceeded(0.0, hi));
        }
        let lo = 0.5 * hi;
        let piece = adaptive_segment(&integrand, lo, hi, level_budget, 0, cfg.max_depth)?;
        total += piece;
        quiet = if piece.abs() < level_budget { quiet + 1 } else { 0 };
        if quiet >= 2 {
            break;
        }
        hi = lo;
    }
    Ok(total)
}

/// Reference for the asymptotic head after the density and trajectory have
/// been frozen to first order, written in the substitution z = 2√τ:
///
/// ∫_0^{2√ε} (1/√π)[y₀φ₀/z² + (gφ₀ − y₀φ₁)/4 − gφ₁z²/16]
///            · exp(−y₀²/z² − y₀g/2 − g²z²/16) dz.
///
/// The closed-form branches in [`crate::quadrature::asymptotic_local`]
/// integrate exactly this, so agreement should be near machine precision;
/// the O(ε^{3/2}) linearization error is *not* visible here.
pub fn oracle_head_z_form(
    y0: f64,
    g: f64,
    phi0: f64,
    phi1: f64,
    eps: f64,
    cfg: &OracleConfig,
) -> Result<f64> {
    check_cfg(cfg);
    assert!(eps > 0.0);
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    let integrand = |z: f64| {
        let poly = y0 * phi0 / (z * z) + (g * phi0 - y0 * phi1) / 4.0 - g * phi1 * z * z / 16.0;
        inv_sqrt_pi * poly * (-y0 * y0 / (z * z) - y0 * g / 2.0 - g * g * z * z / 16.0).exp()
    };
    let z_max = 2.0 * eps.sqrt();
    if y0 == 0.0 {
        // integrand is analytic all the way to z = 0
        return adaptive_segment(&integrand, 0.0, z_max, cfg.tol, 0, cfg.max_depth);
    }
    // e^{−y₀²/z²} vanishes to all orders at z = 0 but floating point still
    // wants the window walked geometrically.
    let mut total = 0.0;
    let mut hi = z_max;
    let mut quiet = 0usize;
    for level in 0.. {
        if level > 4096 {
            return Err(Error::DepthExceeded(0.0, hi));
        }
        let lo = 0.5 * hi;
        let piece = adaptive_segment(&integrand, lo, hi, 0.25 * cfg.tol, 0, cfg.max_depth)?;
        total += piece;
        quiet = if piece.abs() < 0.25 * cfg.tol { quiet + 1 } else { 0 };
        if quiet >= 2 {
            break;
        }
        hi = lo;
    }
    Ok(total)
}
