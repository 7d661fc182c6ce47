//! End-to-end heat-equation drivers.
//!
//! Three problem families share the representation u = J[f] + D[φ]: the
//! forced equation on a periodic cell (no boundary, so J alone driven by
//! Duhamel's principle), the Dirichlet problem on a prescribed moving
//! interval, and the one-phase Stefan problem where the right wall is
//! itself unknown and coupled to the flux through it.

mod dirichlet;
mod periodic;
mod stefan;

pub use dirichlet::{
    oscillating_slab_problem, oscillating_slab_solution, solve_dirichlet_moving, DirichletParams,
    DirichletProblem,
};
pub use periodic::{
    separated_forcing_problem, separated_forcing_solution, solve_periodic, PeriodicProblem,
};
pub use stefan::{
    classical_melting_problem, lambda_from_u0, pulsed_melting_problem, solve_stefan,
    stefan_reference, StefanProblem,
};

use crate::cheb::{ChebPiece, PiecewiseChebFunction};
use crate::error::Result;

/// A posed problem, tagged by the driver that consumes it.
pub enum HeatProblem {
    PeriodicForced(PeriodicProblem),
    DirichletMoving(DirichletProblem),
    Stefan(StefanProblem),
}

/// Time-indexed output of a driver: one spatial profile per recorded time,
/// each on its own Ω(t_k), plus the front trajectory when the problem has
/// a free boundary.
#[derive(Debug, Clone)]
pub struct SolutionRecord {
    pub times: Vec<f64>,
    pub profiles: Vec<PiecewiseChebFunction>,
    /// Solved s(t) for the Stefan driver, one Chebyshev piece per panel.
    pub front: Option<PiecewiseChebFunction>,
    /// Sup-norm error per recorded time, filled by [`measure_against`]
    /// when an exact solution is registered.
    ///
    /// [`measure_against`]: SolutionRecord::measure_against
    pub errors: Option<Vec<f64>>,
}

impl SolutionRecord {
    fn new(times: Vec<f64>, profiles: Vec<PiecewiseChebFunction>) -> Self {
        assert_eq!(times.len(), profiles.len());
        Self {
            times,
            profiles,
            front: None,
            errors: None,
        }
    }

    /// Register an exact solution u(x, t) and store the sup-norm error of
    /// every recorded profile against it, sampled densely per piece.
    pub fn measure_against(&mut self, exact: &dyn Fn(f64, f64) -> f64) {
        let errors = self
            .times
            .iter()
            .zip(&self.profiles)
            .map(|(&t, profile)| {
                let mut worst = 0.0_f64;
                for piece in profile.pieces() {
                    let samples = 2 * (piece.degree() + 1);
                    for i in 0..=samples {
                        let x =
                            piece.lo() + (piece.hi() - piece.lo()) * i as f64 / samples as f64;
                        worst = worst.max((piece.eval(x) - exact(x, t)).abs());
                    }
                }
                worst
            })
            .collect();
        self.errors = Some(errors);
    }
}

/// Rebuild a piecewise interpolant from values on a [`sample_grid`] layout:
/// `map[i]` indexes the i-th span's Lobatto values inside `vals`.
///
/// [`sample_grid`]: crate::cheb::sample_grid
pub(crate) fn profile_from_samples(
    edges: &[f64],
    map: &[Vec<usize>],
    vals: &[f64],
) -> Result<PiecewiseChebFunction> {
    let pieces = edges
        .windows(2)
        .zip(map)
        .map(|(w, idx)| {
            let pv: Vec<f64> = idx.iter().map(|&j| vals[j]).collect();
            ChebPiece::from_lobatto_values(w[0], w[1], &pv)
        })
        .collect::<Result<Vec<_>>>()?;
    PiecewiseChebFunction::new(pieces)
}

/// Uniform edge list over [lo, hi].
pub(crate) fn uniform_edges(lo: f64, hi: f64, spans: usize) -> Vec<f64> {
    assert!(spans >= 1 && hi > lo);
    let mut e: Vec<f64> = (0..=spans)
        .map(|i| lo + (hi - lo) * i as f64 / spans as f64)
        .collect();
    e[0] = lo;
    e[spans] = hi;
    e
}
