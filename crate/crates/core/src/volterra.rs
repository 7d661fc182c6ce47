//! Panelwise Chebyshev collocation for the boundary-density system.
//!
//! Writing the solution as u = D[φ] + J[f] and letting x approach each
//! wall, the jump relation of the double-layer potential turns the
//! Dirichlet conditions into a pair of second-kind Volterra equations
//!
//!   φ_a(t) + 2 I_aa[φ_a](t) − 2 I_ab[φ_b](t) = h_a(t),
//!   φ_b(t) + 2 I_ba[φ_a](t) − 2 I_bb[φ_b](t) = h_b(t),
//!
//! where I_ss′[φ](t) = ∫_0^t H(s(t) − s′(τ), t − τ) φ(τ) dτ, the same-side
//! integrals taken as principal values, and h = −2g + 2J[f] on the
//! respective side. The solved densities live in three zones: a constant
//! on (0, tC], Chebyshev panels in log time on (tC, t0] where the density
//! varies on exponentially fine scales, and Chebyshev panels in plain
//! time on (t0, T]. Causality makes the system triangular over panels:
//! each panel contributes a small collocation system whose operator part
//! comes from local history integrals with the basis polynomials as
//! densities and whose right-hand side carries the already-committed
//! history through the potential evaluator.

use crate::cheb::{lobatto_nodes, ChebPiece, PiecewiseChebFunction};
use crate::domain::MovingDomain;
use crate::error::{Error, Result};
use crate::fgt::{fgt_continuous, fgt_small_t, small_t_threshold};
use crate::marching::{dlhp_eval_truncated, BoundaryDensity};
use crate::quadrature::{local_history_integral, ClosureDensity, DensityFn, LocalIntegralSpec};
use crate::soe::SoeTable;
use nalgebra::{DMatrix, DVector};

/// Right-hand sides of the boundary system.
///
/// Either the raw problem data (Dirichlet values g and initial profile f,
/// combined pointwise as h = −2g + 2J[f]), or the combined h handed over
/// directly when a problem is posed that way.
pub enum RhsSpec<'a> {
    Data {
        g_a: &'a dyn Fn(f64) -> f64,
        g_b: &'a dyn Fn(f64) -> f64,
        f: &'a PiecewiseChebFunction,
    },
    Direct {
        h_a: &'a dyn Fn(f64) -> f64,
        h_b: &'a dyn Fn(f64) -> f64,
    },
}

/// The combined right-hand sides (h_a(t), h_b(t)) at one time.
///
/// The initial potential J[f] is evaluated at both walls by whichever
/// transform path owns this t: the series/window evaluation below the
/// small-time threshold of f's support width, the SOE sweep above it.
/// Walls that have moved outside the initial support see the zero
/// extension of f.
pub fn assemble_rhs(
    domain: &MovingDomain,
    rhs: &RhsSpec,
    t: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    if t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    match rhs {
        RhsSpec::Direct { h_a, h_b } => Ok((h_a(t), h_b(t))),
        RhsSpec::Data { g_a, g_b, f } => {
            let targets = [domain.a().value(t), domain.b().value(t)];
            let (lo, hi) = f.domain();
            let j = if t <= small_t_threshold(hi - lo) {
                fgt_small_t(f, &targets, t, tol)?
            } else {
                fgt_continuous(SoeTable::shared16(), f, &targets, t)?
            };
            Ok((-2.0 * g_a(t) + 2.0 * j[0], -2.0 * g_b(t) + 2.0 * j[1]))
        }
    }
}

/// One boundary side's solved density.
///
/// Zones partition (0, T] as (0, tC] ∪ (tC, t0] ∪ (t0, T], each joint
/// belonging to the zone it closes: a constant, then Chebyshev expansions
/// in v = ln t, then Chebyshev expansions in plain t.
#[derive(Clone, Debug)]
pub struct DensityRepresentation {
    t_c: f64,
    t0: f64,
    horizon: f64,
    constant_value: f64,
    /// Physical panel edges of the log zone, starting at tC. Kept in t so
    /// zone dispatch never round-trips through the log map.
    exp_edges: Vec<f64>,
    /// Log-zone expansions in the variable v = ln t.
    exp_pieces: Vec<ChebPiece>,
    /// Plain-time expansions tiling [t0, T].
    normal_pieces: Vec<ChebPiece>,
}

impl DensityRepresentation {
    fn empty(t_c: f64, t0: f64, horizon: f64, constant_value: f64) -> Self {
        Self {
            t_c,
            t0,
            horizon,
            constant_value,
            exp_edges: vec![t_c],
            exp_pieces: Vec::new(),
            normal_pieces: Vec::new(),
        }
    }

    pub fn t_c(&self) -> f64 {
        self.t_c
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// The zone-1 value on (0, tC].
    pub fn constant_value(&self) -> f64 {
        self.constant_value
    }

    pub fn exp_pieces(&self) -> &[ChebPiece] {
        &self.exp_pieces
    }

    pub fn normal_pieces(&self) -> &[ChebPiece] {
        &self.normal_pieces
    }

    /// Largest time committed so far (the horizon once fully solved).
    pub fn coverage(&self) -> f64 {
        if let Some(p) = self.normal_pieces.last() {
            p.hi()
        } else {
            *self.exp_edges.last().unwrap()
        }
    }

    fn push_exp_panel(&mut self, edge_hi: f64, coeffs: Vec<f64>) {
        let lo = *self.exp_edges.last().unwrap();
        self.exp_pieces
            .push(ChebPiece::from_coeffs(lo.ln(), edge_hi.ln(), coeffs).expect("ascending edges"));
        self.exp_edges.push(edge_hi);
    }

    fn push_normal_panel(&mut self, lo: f64, hi: f64, coeffs: Vec<f64>) {
        self.normal_pieces
            .push(ChebPiece::from_coeffs(lo, hi, coeffs).expect("ascending edges"));
    }

    fn zone_eval(&self, t: f64) -> f64 {
        if t <= self.t_c || self.exp_pieces.is_empty() {
            return self.constant_value;
        }
        if t <= self.t0 || self.normal_pieces.is_empty() {
            let i = (self.exp_edges.partition_point(|&e| e < t) - 1)
                .min(self.exp_pieces.len() - 1);
            return self.exp_pieces[i].eval(t.ln());
        }
        let i = self
            .normal_pieces
            .partition_point(|p| p.hi() < t)
            .min(self.normal_pieces.len() - 1);
        self.normal_pieces[i].eval(t)
    }

    fn zone_deriv(&self, t: f64) -> f64 {
        if t <= self.t_c || self.exp_pieces.is_empty() {
            return 0.0;
        }
        if t <= self.t0 || self.normal_pieces.is_empty() {
            let i = (self.exp_edges.partition_point(|&e| e < t) - 1)
                .min(self.exp_pieces.len() - 1);
            return self.exp_pieces[i].derivative().eval(t.ln()) / t;
        }
        let i = self
            .normal_pieces
            .partition_point(|p| p.hi() < t)
            .min(self.normal_pieces.len() - 1);
        self.normal_pieces[i].derivative().eval(t)
    }

    /// Evaluate at 0 < t ≤ T.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= self.horizon) {
            return Err(Error::OutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok(self.zone_eval(t))
    }
}

/// Zone-dispatched evaluation, free-function form of
/// [`DensityRepresentation::eval`].
pub fn eval_density(rep: &DensityRepresentation, t: f64) -> Result<f64> {
    rep.eval(t)
}

impl BoundaryDensity for DensityRepresentation {
    fn eval(&self, t: f64) -> f64 {
        self.zone_eval(t)
    }
    fn deriv(&self, t: f64) -> f64 {
        self.zone_deriv(t)
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.exp_edges.clone();
        b.extend(self.normal_pieces.iter().map(|p| p.hi()));
        b
    }
}

/// Panel edges and collocation points for one zone.
///
/// The points of each panel are the scaled Chebyshev points of the second
/// kind, mid − half·cos(lπ/L) for l = 0..=L, taken in plain time (normal
/// zone) or in ln t (exponential zone). Both endpoints are collocation
/// points: t_{k0} = t_k and t_{kL} = t_{k+1} exactly.
#[derive(Clone, Debug)]
pub struct CollocationGrid {
    edges: Vec<f64>,
    points: Vec<Vec<f64>>,
    l_order: usize,
    m_order: usize,
    log_scaled: bool,
}

impl CollocationGrid {
    pub fn normal(edges: Vec<f64>, l_order: usize, m_order: usize) -> Self {
        Self::build(edges, l_order, m_order, false)
    }

    pub fn exponential(edges: Vec<f64>, l_order: usize, m_order: usize) -> Self {
        Self::build(edges, l_order, m_order, true)
    }

    fn build(edges: Vec<f64>, l_order: usize, m_order: usize, log_scaled: bool) -> Self {
        assert!(
            l_order >= m_order && l_order >= 1,
            "collocation needs L >= M and L >= 1, got L={l_order}, M={m_order}"
        );
        assert!(
            edges.len() >= 2 && edges.windows(2).all(|w| w[0] < w[1]),
            "panel edges must strictly ascend"
        );
        assert!(
            !log_scaled || edges[0] > 0.0,
            "log-scaled panels need positive edges"
        );
        let points = edges
            .windows(2)
            .map(|w| {
                let mut pts = if log_scaled {
                    lobatto_nodes(w[0].ln(), w[1].ln(), l_order)
                        .into_iter()
                        .map(f64::exp)
                        .collect::<Vec<_>>()
                } else {
                    lobatto_nodes(w[0], w[1], l_order)
                };
                pts[0] = w[0];
                *pts.last_mut().unwrap() = w[1];
                pts
            })
            .collect();
        Self {
            edges,
            points,
            l_order,
            m_order,
            log_scaled,
        }
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn panels(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn points(&self, k: usize) -> &[f64] {
        &self.points[k]
    }

    pub fn l_order(&self) -> usize {
        self.l_order
    }

    pub fn m_order(&self) -> usize {
        self.m_order
    }

    pub fn is_log_scaled(&self) -> bool {
        self.log_scaled
    }
}

/// A unit Chebyshev basis polynomial of one panel, seen as a density in
/// physical time s (log-scaled panels store the expansion in v = ln s).
struct BasisDensity<'p> {
    piece: &'p ChebPiece,
    dpiece: &'p ChebPiece,
    log_scaled: bool,
}

impl DensityFn for BasisDensity<'_> {
    fn value(&self, s: f64) -> f64 {
        if self.log_scaled {
            self.piece.eval(s.ln())
        } else {
            self.piece.eval(s)
        }
    }
    fn deriv(&self, s: f64) -> f64 {
        if self.log_scaled {
            self.dpiece.eval(s.ln()) / s
        } else {
            self.dpiece.eval(s)
        }
    }
}

/// The M+1 basis polynomials T_j of panel k with their derivatives.
fn basis_pieces(grid: &CollocationGrid, k: usize) -> Vec<(ChebPiece, ChebPiece)> {
    let (lo, hi) = if grid.log_scaled {
        (grid.edges[k].ln(), grid.edges[k + 1].ln())
    } else {
        (grid.edges[k], grid.edges[k + 1])
    };
    (0..=grid.m_order)
        .map(|j| {
            let mut c = vec![0.0; j + 1];
            c[j] = 1.0;
            let p = ChebPiece::from_coeffs(lo, hi, c).expect("ascending panel");
            let d = p.derivative();
            (p, d)
        })
        .collect()
}

/// Collocation system of panel k: matrix of size 2(L+1) × 2(M+1) and its
/// right-hand side.
///
/// Row blocks are the a-side then b-side equations at the panel's
/// collocation points; column blocks the a-side then b-side coefficients.
/// The operator part adds 2·(±) local history integrals of the basis
/// densities over [t_k, t_{kl}] to the evaluation matrix; the right-hand
/// side is h at the collocation point plus twice the already-solved
/// history potential, cut at t_k.
pub fn assemble_panel_system(
    domain: &MovingDomain,
    grid: &CollocationGrid,
    k: usize,
    sofar_a: &DensityRepresentation,
    sofar_b: &DensityRepresentation,
    rhs: &RhsSpec,
    tol: f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (l, m) = (grid.l_order, grid.m_order);
    let t_k = grid.edges[k];
    let basis = basis_pieces(grid, k);
    let trajs = [domain.a(), domain.b()];
    let mut mat = DMatrix::zeros(2 * (l + 1), 2 * (m + 1));
    let mut rhs_vec = DVector::zeros(2 * (l + 1));

    for (lidx, &t_kl) in grid.points(k).iter().enumerate() {
        let walls = [domain.a().value(t_kl), domain.b().value(t_kl)];
        let h = assemble_rhs(domain, rhs, t_kl, tol)?;
        let h = [h.0, h.1];
        for row_side in 0..2 {
            let row = row_side * (l + 1) + lidx;
            let hist =
                dlhp_eval_truncated(sofar_a, sofar_b, domain, walls[row_side], t_kl, t_k, tol);
            rhs_vec[row] = h[row_side] + 2.0 * hist;
            for col_side in 0..2 {
                let sign = if col_side == 0 { 2.0 } else { -2.0 };
                for (j, (piece, dpiece)) in basis.iter().enumerate() {
                    let density = BasisDensity {
                        piece,
                        dpiece,
                        log_scaled: grid.log_scaled,
                    };
                    let mut entry = if row_side == col_side {
                        density.value(t_kl)
                    } else {
                        0.0
                    };
                    // t_{k0} = t_k: the local integral is empty on that row.
                    if lidx > 0 {
                        let mut spec = LocalIntegralSpec::new(
                            walls[row_side],
                            trajs[col_side],
                            &density,
                            t_kl - t_k,
                            t_kl,
                            tol,
                        );
                        spec.t0 = sofar_a.t0;
                        spec.t_c = sofar_a.t_c;
                        entry += sign * local_history_integral(&spec, tol);
                    }
                    mat[(row, col_side * (m + 1) + j)] = entry;
                }
            }
        }
    }
    Ok((mat, rhs_vec))
}

/// Zone-1 constants from a one-point collocation of the system at t = tC
/// with both densities held constant, a 2×2 solve.
fn zone1_constants(
    domain: &MovingDomain,
    rhs: &RhsSpec,
    t_c: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let unit = ClosureDensity::new(|_: f64| 1.0, |_: f64| 0.0);
    let walls = [domain.a().value(t_c), domain.b().value(t_c)];
    let trajs = [domain.a(), domain.b()];
    let mut m2 = [[0.0_f64; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            let mut spec = LocalIntegralSpec::new(walls[r], trajs[c], &unit, t_c, t_c, tol);
            spec.t_c = t_c;
            let sign = if c == 0 { 2.0 } else { -2.0 };
            m2[r][c] =
                if r == c { 1.0 } else { 0.0 } + sign * local_history_integral(&spec, tol);
        }
    }
    let (h_a, h_b) = assemble_rhs(domain, rhs, t_c, tol)?;
    let det = m2[0][0] * m2[1][1] - m2[0][1] * m2[1][0];
    if det.abs() < 1e-10 {
        return Err(Error::SingularSystem(0.0, t_c));
    }
    Ok((
        (h_a * m2[1][1] - h_b * m2[0][1]) / det,
        (m2[0][0] * h_b - m2[1][0] * h_a) / det,
    ))
}

/// Panel plan for the two solved zones.
#[derive(Clone, Debug)]
pub struct ZonePlan {
    pub t_c: f64,
    pub t0: f64,
    /// Log-uniform panel count on (tC, t0].
    pub exp_panels: usize,
    /// Uniform panel count on (t0, T].
    pub normal_panels: usize,
}

impl ZonePlan {
    /// The standard zone parameters tC = 10⁻⁸, t0 = 0.02.
    pub fn standard(exp_panels: usize, normal_panels: usize) -> Self {
        Self {
            t_c: 1e-8,
            t0: 0.02,
            exp_panels,
            normal_panels,
        }
    }

    fn validate(&self, horizon: f64) -> Result<()> {
        if !(self.t_c > 0.0 && self.t_c < self.t0) || self.exp_panels == 0 {
            return Err(Error::PanelPlanGap(self.t_c));
        }
        if !(self.t0 < horizon) || self.normal_panels == 0 {
            return Err(Error::PanelPlanGap(self.t0));
        }
        Ok(())
    }

    fn exp_edges(&self) -> Vec<f64> {
        let (v0, v1) = (self.t_c.ln(), self.t0.ln());
        let n = self.exp_panels;
        let mut e: Vec<f64> = (0..=n)
            .map(|i| (v0 + (v1 - v0) * i as f64 / n as f64).exp())
            .collect();
        e[0] = self.t_c;
        e[n] = self.t0;
        e
    }

    fn normal_edges(&self, horizon: f64) -> Vec<f64> {
        let n = self.normal_panels;
        let mut e: Vec<f64> = (0..=n)
            .map(|i| self.t0 + (horizon - self.t0) * i as f64 / n as f64)
            .collect();
        e[0] = self.t0;
        e[n] = horizon;
        e
    }
}

fn solve_panel(
    mat: &DMatrix<f64>,
    rhs: &DVector<f64>,
    lo: f64,
    hi: f64,
) -> Result<DVector<f64>> {
    if mat.nrows() == mat.ncols() {
        mat.clone()
            .lu()
            .solve(rhs)
            .ok_or(Error::SingularSystem(lo, hi))
    } else {
        mat.clone()
            .svd(true, true)
            .solve(rhs, 1e-13)
            .map_err(|_| Error::SingularSystem(lo, hi))
    }
}

/// Solve the boundary system over (0, T] on the given panel plan.
///
/// Zone-1 constants first, then the log and plain zones panel by panel,
/// each a square collocation solve when L = M and a least-squares solve
/// when L > M. Returns the (a-side, b-side) densities.
pub fn solve_density(
    domain: &MovingDomain,
    rhs: &RhsSpec,
    plan: &ZonePlan,
    l_order: usize,
    m_order: usize,
    tol: f64,
) -> Result<(DensityRepresentation, DensityRepresentation)> {
    let horizon = domain.horizon();
    plan.validate(horizon)?;
    let (c_a, c_b) = zone1_constants(domain, rhs, plan.t_c, tol)?;
    let mut rep_a = DensityRepresentation::empty(plan.t_c, plan.t0, horizon, c_a);
    let mut rep_b = DensityRepresentation::empty(plan.t_c, plan.t0, horizon, c_b);

    let grids = [
        CollocationGrid::exponential(plan.exp_edges(), l_order, m_order),
        CollocationGrid::normal(plan.normal_edges(horizon), l_order, m_order),
    ];
    for grid in &grids {
        for k in 0..grid.panels() {
            let (mat, rhs_vec) =
                assemble_panel_system(domain, grid, k, &rep_a, &rep_b, rhs, tol)?;
            let (lo, hi) = (grid.edges[k], grid.edges[k + 1]);
            let coeffs = solve_panel(&mat, &rhs_vec, lo, hi)?;
            let nm = m_order + 1;
            let (ca, cb) = (
                coeffs.rows(0, nm).iter().copied().collect::<Vec<f64>>(),
                coeffs.rows(nm, nm).iter().copied().collect::<Vec<f64>>(),
            );
            if grid.log_scaled {
                rep_a.push_exp_panel(hi, ca);
                rep_b.push_exp_panel(hi, cb);
            } else {
                rep_a.push_normal_panel(lo, hi, ca);
                rep_b.push_normal_panel(lo, hi, cb);
            }
        }
    }
    Ok((rep_a, rep_b))
}

/// Pointwise residual of the system at time t: how far the solved
/// densities are from satisfying φ − 2 D_pv[φ](wall) − h = 0 per side.
pub fn vie_residual(
    domain: &MovingDomain,
    rhs: &RhsSpec,
    rep_a: &DensityRepresentation,
    rep_b: &DensityRepresentation,
    t: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let (h_a, h_b) = assemble_rhs(domain, rhs, t, tol)?;
    let d_a = dlhp_eval_truncated(rep_a, rep_b, domain, domain.a().value(t), t, t, tol);
    let d_b = dlhp_eval_truncated(rep_a, rep_b, domain, domain.b().value(t), t, t, tol);
    Ok((
        rep_a.eval(t)? - 2.0 * d_a - h_a,
        rep_b.eval(t)? - 2.0 * d_b - h_b,
    ))
}
