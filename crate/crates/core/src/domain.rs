//! Boundary trajectories and the moving interval Ω(t) = (a(t), b(t)).

use std::sync::Arc;

use crate::cheb::PiecewiseChebFunction;
use crate::error::{Error, Result};

/// A boundary curve t ↦ γ(t), evaluable together with its derivatives.
///
/// Stored as a single closure taking the derivative order, so analytic
/// trajectories (Bessel, trigonometric) and interpolated ones (a solved
/// Stefan front) share one representation. Orders 0..=4 are required by the
/// quadrature and mesh layers; higher orders may return anything the
/// underlying closure supports.
///
/// A trajectory also carries a frequency hint: an upper bound on the angular
/// rate at which it oscillates. Kernel-graded quadrature panels are sized to
/// e-folds of the heat kernel, which says nothing about how fast γ itself
/// wiggles across a panel; the hint lets the mesh builders cap the physical
/// panel width so a fixed Gauss order keeps resolving the oscillation. Zero
/// means "no oscillation scale", which is right for constant, linear, and
/// slowly varying curves.
#[derive(Clone)]
pub struct Trajectory {
    eval: Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>,
    freq_hint: f64,
}

impl std::fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Trajectory(γ(0)={})", self.value(0.0))
    }
}

impl Trajectory {
    /// Wrap a closure `(derivative order, t) -> value`.
    pub fn new(eval: impl Fn(usize, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(eval),
            freq_hint: 0.0,
        }
    }

    /// Declare an upper bound on the angular frequency of the curve's
    /// oscillation. Overrides whatever the constructor inferred.
    pub fn with_frequency_hint(mut self, omega: f64) -> Self {
        assert!(omega >= 0.0, "frequency hint must be nonnegative");
        self.freq_hint = omega;
        self
    }

    /// The declared oscillation rate; zero when none was given.
    pub fn frequency_hint(&self) -> f64 {
        self.freq_hint
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |k, _| if k == 0 { c } else { 0.0 })
    }

    pub fn linear(c0: f64, c1: f64) -> Self {
        Self::new(move |k, t| match k {
            0 => c0 + c1 * t,
            1 => c1,
            _ => 0.0,
        })
    }

    /// γ(t) = offset + amp·sin(ω t).
    pub fn sinusoid(offset: f64, amp: f64, omega: f64) -> Self {
        Self::new(move |k, t| {
            let scale = amp * omega.powi(k as i32);
            match k % 4 {
                0 => (if k == 0 { offset } else { 0.0 }) + scale * (omega * t).sin(),
                1 => scale * (omega * t).cos(),
                2 => -scale * (omega * t).sin(),
                _ => -scale * (omega * t).cos(),
            }
        })
        .with_frequency_hint(omega.abs())
    }

    /// γ(t) = offset + amp·J_ν(ω t), using d/dx J_ν = (J_{ν−1} − J_{ν+1})/2
    /// iterated: J_ν^{(k)}(x) = 2^{−k} Σ_i (−1)^i C(k,i) J_{ν−k+2i}(x).
    pub fn bessel_j(nu: i32, offset: f64, amp: f64, omega: f64) -> Self {
        Self::new(move |k, t| {
            let value = amp * omega.powi(k as i32) * bessel_j_deriv(nu, k, omega * t);
            if k == 0 {
                offset + value
            } else {
                value
            }
        })
        .with_frequency_hint(omega.abs())
    }

    /// Wrap a piecewise Chebyshev interpolant; derivatives come from the
    /// exact piecewise derivative chain.
    pub fn from_cheb(f: PiecewiseChebFunction) -> Self {
        let mut chain = vec![f];
        for _ in 0..6 {
            let next = chain.last().unwrap().derivative();
            chain.push(next);
        }
        Self::new(move |k, t| {
            assert!(k < chain.len(), "derivative order {k} beyond stored chain");
            chain[k].eval(t)
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.eval)(0, t)
    }

    pub fn deriv(&self, order: usize, t: f64) -> f64 {
        (self.eval)(order, t)
    }
}

/// k-th derivative of J_ν at x, by the two-term recurrence iterated:
/// J_ν^{(k)}(x) = 2^{−k} Σ_i (−1)^i C(k,i) J_{ν−k+2i}(x).
pub(crate) fn bessel_j_deriv(nu: i32, k: usize, x: f64) -> f64 {
    let mut acc = 0.0;
    let mut binom = 1.0;
    for i in 0..=k {
        let order = nu - k as i32 + 2 * i as i32;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * bessel_jn(order, x);
        binom = binom * (k - i) as f64 / (i + 1) as f64;
    }
    acc / 2f64.powi(k as i32)
}

/// Signed Bessel function of the first kind for possibly negative integer
/// order: J_{−n} = (−1)^n J_n.
fn bessel_jn(order: i32, x: f64) -> f64 {
    if order >= 0 {
        libm::jn(order, x)
    } else {
        let n = -order;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sign * libm::jn(n, x)
    }
}

/// The moving interval Ω(t) = (a(t), b(t)) on a time horizon [0, T].
#[derive(Clone, Debug)]
pub struct MovingDomain {
    a: Trajectory,
    b: Trajectory,
    horizon: f64,
}

impl MovingDomain {
    /// Build a domain, verifying a(t) < b(t) on a sample grid over [0, T].
    pub fn new(a: Trajectory, b: Trajectory, horizon: f64) -> Result<Self> {
        assert!(horizon > 0.0, "horizon must be positive");
        let samples = 400;
        for i in 0..=samples {
            let t = horizon * i as f64 / samples as f64;
            let (av, bv) = (a.value(t), b.value(t));
            if !(av < bv) {
                return Err(Error::DomainDegenerate { t, a: av, b: bv });
            }
        }
        Ok(Self { a, b, horizon })
    }

    pub fn a(&self) -> &Trajectory {
        &self.a
    }

    pub fn b(&self) -> &Trajectory {
        &self.b
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// The static interval [c, d] as a domain (handy in tests).
    pub fn fixed(c: f64, d: f64, horizon: f64) -> Result<Self> {
        Self::new(Trajectory::constant(c), Trajectory::constant(d), horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoid_derivatives_cycle() {
        let g = Trajectory::sinusoid(0.5, 2.0, 3.0);
        let t = 0.37;
        assert!((g.value(t) - (0.5 + 2.0 * (3.0 * t).sin())).abs() < 1e-15);
        assert!((g.deriv(1, t) - 6.0 * (3.0 * t).cos()).abs() < 1e-14);
        assert!((g.deriv(4, t) - 162.0 * (3.0 * t).sin()).abs() < 1e-13);
    }

    #[test]
    fn bessel_trajectory_matches_finite_differences() {
        let g = Trajectory::bessel_j(2, -1.0, 1.0, 10.0);
        let t = 0.21;
        let h = 1e-5;
        let fd1 = (g.value(t + h) - g.value(t - h)) / (2.0 * h);
        assert!((g.deriv(1, t) - fd1).abs() < 1e-8);
        let fd2 = (g.value(t + h) - 2.0 * g.value(t) + g.value(t - h)) / (h * h);
        assert!((g.deriv(2, t) - fd2).abs() < 1e-4);
    }

    #[test]
    fn cheb_trajectory_differentiates_exactly() {
        let f = PiecewiseChebFunction::adaptive(&[0.0, 1.0], 14, 1e-13, |t| (2.0 * t).exp())
            .unwrap();
        let g = Trajectory::from_cheb(f);
        assert!((g.deriv(1, 0.5) - 2.0 * (1.0_f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn degenerate_domain_is_rejected() {
        let d = MovingDomain::new(
            Trajectory::constant(0.0),
            Trajectory::sinusoid(0.5, 1.0, 2.0),
            3.0,
        );
        assert!(matches!(d, Err(Error::DomainDegenerate { .. })));
    }
}
