//! Fast Gauss transforms on an interval.
//!
//! Everything here evaluates Gaussian sums or integrals against many
//! targets in one pass. The Gaussian is replaced by a short sum of complex
//! exponentials (the [`crate::soe`] tables), and each exponential term
//! turns the all-pairs interaction into two first-order recursions swept
//! across the sorted targets: a forward state h⁺ accumulating everything
//! to the left and a backward state h⁻ for everything to the right. Work
//! is O(M + N) per SOE node.
//!
//! Four entry points:
//! - [`fgt_discrete`]: point sources, plain Gaussian sums (no kernel
//!   normalization).
//! - [`fgt_continuous`]: heat-kernel convolution of a piecewise Chebyshev
//!   density, targets may sit outside the source interval.
//! - [`fgt_periodic`]: the same on a periodic cell, images summed in
//!   closed form through geometric factors.
//! - [`fgt_small_t`]: series/rescaling path for times so small that the
//!   SOE route would amplify roundoff by 1/√(4πt).

use num_complex::Complex64;

use crate::cheb::{ChebPiece, PiecewiseChebFunction};
use crate::error::{Error, Result};
use crate::soe::SoeTable;
use crate::special::gl_rule;

/// Largest |τ|·width a single moment sub-panel is allowed to span; with
/// 16-node panels this keeps the exponential-times-polynomial quadrature
/// error near 1e-16.
const SUBPANEL_PHASE: f64 = 16.0;
/// Sources farther than this many decay lengths from a gap edge are
/// dropped from that edge's moment (contribution < e^{-40}).
const DECAY_LENGTHS: f64 = 40.0;

fn check_sorted(xs: &[f64], what: &'static str) -> Result<()> {
    if xs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::UnsortedInput(what));
    }
    Ok(())
}

/// Build the sweep cut list: sentinels at the source interval's ends plus
/// every target, sorted and deduplicated. Returns the cuts and, for each
/// target, the index of its cut.
fn build_cuts(sentinels: Option<(f64, f64)>, targets: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut cuts: Vec<f64> = targets.to_vec();
    if let Some((a, b)) = sentinels {
        cuts.push(a);
        cuts.push(b);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let positions = targets
        .iter()
        .map(|x| cuts.binary_search_by(|c| c.total_cmp(x)).expect("target is a cut"))
        .collect();
    (cuts, positions)
}

/// Flat per-gap quadrature data: node positions and premultiplied
/// weight·f(y) values, with separate index ranges for the two moment
/// directions (they differ only when decay truncation clips a wide gap).
struct MomentNodes {
    ys: Vec<f64>,
    wfs: Vec<f64>,
    /// Per gap: (nodes feeding I, nodes feeding J).
    gaps: Vec<(std::ops::Range<usize>, std::ops::Range<usize>)>,
}

impl MomentNodes {
    fn empty_gap() -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        (0..0, 0..0)
    }
}

/// Gauss-Legendre nodes for kernel·f over [lo, hi], sub-panelled so each
/// panel sees a bounded exponential phase.
fn push_fragment_nodes(
    out: &mut MomentNodes,
    piece: &ChebPiece,
    lo: f64,
    hi: f64,
    tau_abs_max: f64,
) {
    if !(hi > lo) {
        return;
    }
    let order = (piece.degree() + 8).max(16);
    let rule = gl_rule(order);
    let n_sub = ((tau_abs_max * (hi - lo) / SUBPANEL_PHASE).ceil() as usize).max(1);
    let width = (hi - lo) / n_sub as f64;
    for s in 0..n_sub {
        let p_lo = lo + s as f64 * width;
        let mid = p_lo + 0.5 * width;
        let half = 0.5 * width;
        for (&xi, &w) in rule.nodes.iter().zip(&rule.weights) {
            let y = mid + half * xi;
            out.ys.push(y);
            out.wfs.push(w * half * piece.eval(y));
        }
    }
}

/// Nodes for every (gap ∩ piece) fragment of a continuous density.
fn continuous_nodes(
    f: &PiecewiseChebFunction,
    cuts: &[f64],
    tau_abs_max: f64,
    cut_dist: f64,
) -> MomentNodes {
    let (a, b) = f.domain();
    let mut nodes = MomentNodes {
        ys: Vec::new(),
        wfs: Vec::new(),
        gaps: Vec::with_capacity(cuts.len() - 1),
    };
    for g in 0..cuts.len() - 1 {
        let (gap_lo, gap_hi) = (cuts[g], cuts[g + 1]);
        let lo = gap_lo.max(a);
        let hi = gap_hi.min(b);
        if !(hi > lo) {
            nodes.gaps.push(MomentNodes::empty_gap());
            continue;
        }
        // Sources only matter within cut_dist of the edge they decay to.
        let keep_i_lo = lo.max(gap_hi - cut_dist);
        let keep_j_hi = hi.min(gap_lo + cut_dist);
        let shared = keep_i_lo <= lo && keep_j_hi >= hi;
        let gen = |nodes: &mut MomentNodes, lo: f64, hi: f64| -> std::ops::Range<usize> {
            let start = nodes.ys.len();
            if hi > lo {
                for piece in f.pieces() {
                    let flo = piece.lo().max(lo);
                    let fhi = piece.hi().min(hi);
                    push_fragment_nodes(nodes, piece, flo, fhi, tau_abs_max);
                }
            }
            start..nodes.ys.len()
        };
        if shared {
            let r = gen(&mut nodes, lo, hi);
            nodes.gaps.push((r.clone(), r));
        } else {
            let ri = gen(&mut nodes, keep_i_lo, hi);
            let rj = gen(&mut nodes, lo, keep_j_hi);
            nodes.gaps.push((ri, rj));
        }
    }
    nodes
}

/// Nodes for point sources: each source is its own "node" with wf = α.
fn discrete_nodes(sources: &[f64], charges: &[f64], cuts: &[f64]) -> MomentNodes {
    let mut nodes = MomentNodes {
        ys: sources.to_vec(),
        wfs: charges.to_vec(),
        gaps: Vec::with_capacity(cuts.len() - 1),
    };
    // Sources are sorted: walk them once, bucketing by half-open gaps
    // [c_g, c_{g+1}); anything before the first cut joins gap 0, anything
    // at or past the last cut joins the final gap.
    let mut s = 0usize;
    for g in 0..cuts.len() - 1 {
        let start = s;
        let last_gap = g + 2 == cuts.len();
        while s < sources.len() && (last_gap || sources[s] < cuts[g + 1]) {
            s += 1;
        }
        nodes.gaps.push((start..s, start..s));
    }
    nodes
}

/// One SOE node's sweep data over a fixed cut list.
struct SweepState {
    /// Decay factor e^{−τ·gap width} per gap.
    beta: Vec<Complex64>,
    /// Moments: sources in the gap decayed to its right edge (feeds h⁺).
    i_mom: Vec<Complex64>,
    /// Sources decayed to the gap's left edge (feeds h⁻).
    j_mom: Vec<Complex64>,
}

impl SweepState {
    fn compute(tau: Complex64, cuts: &[f64], nodes: &MomentNodes) -> Self {
        let n_gaps = cuts.len() - 1;
        let mut beta = Vec::with_capacity(n_gaps);
        let mut i_mom = Vec::with_capacity(n_gaps);
        let mut j_mom = Vec::with_capacity(n_gaps);
        for g in 0..n_gaps {
            beta.push((-tau * (cuts[g + 1] - cuts[g])).exp());
            let (ri, rj) = &nodes.gaps[g];
            let mut i_acc = Complex64::ZERO;
            for idx in ri.clone() {
                i_acc += nodes.wfs[idx] * (-tau * (cuts[g + 1] - nodes.ys[idx])).exp();
            }
            let mut j_acc = Complex64::ZERO;
            for idx in rj.clone() {
                j_acc += nodes.wfs[idx] * (-tau * (nodes.ys[idx] - cuts[g])).exp();
            }
            i_mom.push(i_acc);
            j_mom.push(j_acc);
        }
        Self { beta, i_mom, j_mom }
    }

    /// Free-space sweep: out[p] += w·(h⁺_p + h⁻_p).
    fn accumulate(&self, w: Complex64, out: &mut [Complex64]) {
        let p_count = out.len();
        let mut h = Complex64::ZERO;
        for p in 0..p_count {
            if p > 0 {
                h = self.beta[p - 1] * h + self.i_mom[p - 1];
            }
            out[p] += w * h;
        }
        h = Complex64::ZERO;
        for p in (0..p_count).rev() {
            if p + 1 < p_count {
                h = self.beta[p] * h + self.j_mom[p];
            }
            out[p] += w * h;
        }
    }

    /// Periodic sweep: four states, image sums folded into the geometric
    /// factor 1/(1−e^{−2τ·half-periods}). `q` is e^{−τ·period} expressed in
    /// the rescaled cell (period 2), i.e. e^{−2τ}.
    fn accumulate_periodic(&self, w: Complex64, q: Complex64, out: &mut [Complex64]) {
        let p_count = out.len();
        let geo = w / (Complex64::ONE - q);
        // h⁺ forward, remembering its value at the last cut
        let mut h = Complex64::ZERO;
        for p in 0..p_count {
            if p > 0 {
                h = self.beta[p - 1] * h + self.i_mom[p - 1];
            }
            out[p] += geo * h;
        }
        let h_plus_end = h;
        // h⁻ backward, remembering its value at the first cut
        h = Complex64::ZERO;
        for p in (0..p_count).rev() {
            if p + 1 < p_count {
                h = self.beta[p] * h + self.j_mom[p];
            }
            out[p] += geo * h;
        }
        let h_minus_start = h;
        // First-image states: h′⁺ starts from h⁺ at the far end and sheds
        // each gap's own image as it passes (the geometric factor already
        // counts those through h⁻).
        let mut h2 = h_plus_end;
        for p in 0..p_count {
            if p > 0 {
                h2 = self.beta[p - 1] * h2 - q * self.i_mom[p - 1];
            }
            out[p] += geo * h2;
        }
        h2 = h_minus_start;
        for p in (0..p_count).rev() {
            if p + 1 < p_count {
                h2 = self.beta[p] * h2 - q * self.j_mom[p];
            }
            out[p] += geo * h2;
        }
    }
}

enum Mode {
    Free,
    Periodic,
}

/// Run the sweep for every conjugate pair and collect doubled real parts.
fn run_sweep(
    table: &SoeTable,
    cuts: &[f64],
    nodes: &MomentNodes,
    sqrt_t: f64,
    mode: Mode,
    prefactor: f64,
) -> Vec<f64> {
    let mut acc = vec![Complex64::ZERO; cuts.len()];
    for pair in table.pairs() {
        let tau = pair.t / sqrt_t;
        let state = SweepState::compute(tau, cuts, nodes);
        match mode {
            Mode::Free => state.accumulate(pair.w, &mut acc),
            Mode::Periodic => state.accumulate_periodic(pair.w, (-2.0 * tau).exp(), &mut acc),
        }
    }
    acc.iter().map(|z| 2.0 * z.re * prefactor).collect()
}

/// Same sweep over every node individually (no conjugate halving). Only
/// exists so tests can confirm the halved path is exact; not part of the
/// supported API.
#[doc(hidden)]
pub fn fgt_continuous_unhalved(
    table: &SoeTable,
    f: &PiecewiseChebFunction,
    targets: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    let (cuts, positions, nodes, sqrt_t) = continuous_setup(table, f, targets, t)?;
    let mut acc = vec![Complex64::ZERO; cuts.len()];
    for (&w, &tk) in table.weights().iter().zip(table.nodes()) {
        let state = SweepState::compute(tk / sqrt_t, &cuts, &nodes);
        state.accumulate(w, &mut acc);
    }
    let pre = 1.0 / (4.0 * std::f64::consts::PI * t).sqrt();
    Ok(positions.iter().map(|&p| acc[p].re * pre).collect())
}

fn continuous_setup(
    table: &SoeTable,
    f: &PiecewiseChebFunction,
    targets: &[f64],
    t: f64,
) -> Result<(Vec<f64>, Vec<usize>, MomentNodes, f64)> {
    if t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    check_sorted(targets, "targets")?;
    for piece in f.pieces() {
        if !(piece.hi() > piece.lo()) {
            return Err(Error::DegeneratePiece(piece.lo(), piece.hi()));
        }
    }
    let sqrt_t = t.sqrt();
    let (a, b) = f.domain();
    let (cuts, positions) = build_cuts(Some((a, b)), targets);
    let tau_abs_max = table
        .nodes()
        .iter()
        .map(|tk| tk.norm())
        .fold(0.0, f64::max)
        / sqrt_t;
    let re_min = table
        .nodes()
        .iter()
        .map(|tk| tk.re)
        .fold(f64::INFINITY, f64::min);
    let cut_dist = DECAY_LENGTHS * sqrt_t / re_min;
    let nodes = continuous_nodes(f, &cuts, tau_abs_max, cut_dist);
    Ok((cuts, positions, nodes, sqrt_t))
}

/// Discrete Gaussian sums u_i = Σ_j α_j e^{−(x_i − y_j)²/4t}.
///
/// No 1/√(4πt) normalization: this is the raw SOE-accelerated sum, with
/// absolute error bounded by the table's achieved error times Σ|α|.
pub fn fgt_discrete(
    table: &SoeTable,
    sources: &[f64],
    charges: &[f64],
    targets: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    if t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    assert_eq!(
        sources.len(),
        charges.len(),
        "one charge per source required"
    );
    check_sorted(sources, "sources")?;
    check_sorted(targets, "targets")?;
    if targets.is_empty() {
        return Ok(Vec::new());
    }
    // Sentinel cuts strictly bracketing every source and target, so each
    // source lands in a real gap even when it coincides with a lone target.
    let lo = sources
        .first()
        .copied()
        .unwrap_or(f64::INFINITY)
        .min(targets[0])
        - 1.0;
    let hi = sources
        .last()
        .copied()
        .unwrap_or(f64::NEG_INFINITY)
        .max(*targets.last().unwrap())
        + 1.0;
    let (cuts, positions) = build_cuts(Some((lo, hi)), targets);
    let nodes = discrete_nodes(sources, charges, &cuts);
    let u = run_sweep(table, &cuts, &nodes, t.sqrt(), Mode::Free, 1.0);
    Ok(positions.iter().map(|&p| u[p]).collect())
}

/// Heat-kernel convolution u_i = (1/√(4πt)) ∫_a^b e^{−(x_i−y)²/4t} f(y) dy.
///
/// Targets may lie outside [a, b]; they are reached by pure decay of the
/// boundary sweep states.
pub fn fgt_continuous(
    table: &SoeTable,
    f: &PiecewiseChebFunction,
    targets: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    let (cuts, positions, nodes, sqrt_t) = continuous_setup(table, f, targets, t)?;
    let pre = 1.0 / (4.0 * std::f64::consts::PI * t).sqrt();
    let u = run_sweep(table, &cuts, &nodes, sqrt_t, Mode::Free, pre);
    Ok(positions.iter().map(|&p| u[p]).collect())
}

/// Periodized heat-kernel convolution over the period cell given by f's
/// domain. Image sums are closed-form geometric series; nothing is
/// truncated. Targets may sit up to one period outside the cell and are
/// wrapped, which is what makes the shift-by-a-period invariance exact.
pub fn fgt_periodic(
    table: &SoeTable,
    f: &PiecewiseChebFunction,
    targets: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    if t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    check_sorted(targets, "targets")?;
    let (p0, p1) = f.domain();
    let period = p1 - p0;
    // Rescale the cell to [-1, 1].
    let mid = 0.5 * (p0 + p1);
    let half = 0.5 * period;
    let t_hat = t / (half * half);
    let f_hat;
    let f_cell = if (p0, p1) == (-1.0, 1.0) {
        f
    } else {
        f_hat = f.with_domain(-1.0, 1.0);
        &f_hat
    };
    // Wrap targets into the cell (allowing one period of slack each way),
    // remembering where each one came from.
    let mut wrapped: Vec<(f64, usize)> = Vec::with_capacity(targets.len());
    for (i, &x) in targets.iter().enumerate() {
        if x < p0 - period || x > p1 + period {
            return Err(Error::TargetOutOfCell { x, a: p0, b: p1 });
        }
        let mut xh = (x - mid) / half;
        if xh < -1.0 {
            xh += 2.0;
        } else if xh > 1.0 {
            xh -= 2.0;
        }
        wrapped.push((xh, i));
    }
    wrapped.sort_by(|u, v| u.0.total_cmp(&v.0));
    let cell_targets: Vec<f64> = wrapped.iter().map(|w| w.0).collect();

    let sqrt_t = t_hat.sqrt();
    let (cuts, positions) = build_cuts(Some((-1.0, 1.0)), &cell_targets);
    let tau_abs_max = table
        .nodes()
        .iter()
        .map(|tk| tk.norm())
        .fold(0.0, f64::max)
        / sqrt_t;
    let re_min = table
        .nodes()
        .iter()
        .map(|tk| tk.re)
        .fold(f64::INFINITY, f64::min);
    let cut_dist = DECAY_LENGTHS * sqrt_t / re_min;
    let nodes = continuous_nodes(f_cell, &cuts, tau_abs_max, cut_dist);
    let pre = 1.0 / (4.0 * std::f64::consts::PI * t_hat).sqrt();
    let u = run_sweep(table, &cuts, &nodes, sqrt_t, Mode::Periodic, pre);

    let mut out = vec![0.0; targets.len()];
    for (w, &p) in wrapped.iter().zip(&positions) {
        out[w.1] = u[p];
    }
    Ok(out)
}

/// Time below which the series path is allowed on a domain of width `w`.
pub fn small_t_threshold(w: f64) -> f64 {
    (1e-3_f64).min((w / 28.0) * (w / 28.0))
}

/// Small-time evaluation of the heat-kernel convolution.
///
/// For t this small the kernel's 1/√(4πt) prefactor amplifies the SOE
/// approximation error, so instead: targets farther than 14√t from every
/// breakpoint see the heat semigroup applied to the local polynomial
/// piece, the finite series Σ_m P^{(2m)}(x) tᵐ/m!; targets near a
/// breakpoint or an endpoint get a window of half-width 14√t rescaled
/// onto [−1,1] and delegated to [`fgt_continuous`] at an internal time in
/// [1/196, 1/49], where the SOE tables are comfortably accurate. Both
/// truncations are controlled by erfc(7) < 10⁻²².
///
/// Targets are allowed outside [a, b], where the convolution sees the
/// zero extension of f: beyond 14√t of the support the result is exactly
/// 0, closer in it comes from the windowed path (the window clipped to
/// the support, the target hanging outside it).
///
/// `tol` picks the SOE order used for windowed targets.
pub fn fgt_small_t(
    f: &PiecewiseChebFunction,
    targets: &[f64],
    t: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    if t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    let (a, b) = f.domain();
    let t_max = small_t_threshold(b - a);
    if t > t_max {
        return Err(Error::TimeTooLarge { t, max: t_max });
    }
    let breaks = f.breakpoints();
    let reach = 14.0 * t.sqrt();
    let window_half = 14.0 * t.sqrt();

    // Lazy per-piece chains of even derivatives P, P'', P'''', ...
    let mut chains: Vec<Option<Vec<ChebPiece>>> = vec![None; f.pieces().len()];
    // Lazy SOE table for the windowed path: smallest order whose budget
    // (doubled for the 1/√(4π/49) amplification) clears tol.
    let mut table: Option<SoeTable> = None;

    let mut out = Vec::with_capacity(targets.len());
    for &x in targets {
        let dist = breaks
            .iter()
            .map(|bp| (x - bp).abs())
            .fold(f64::INFINITY, f64::min);
        if (x < a || x > b) && dist >= reach {
            out.push(0.0);
            continue;
        }
        if dist > reach && x >= a && x <= b {
            let idx = f.piece_index(x);
            let chain = chains[idx].get_or_insert_with(|| {
                let mut c = vec![f.pieces()[idx].clone()];
                while c.last().unwrap().degree() >= 2 {
                    c.push(c.last().unwrap().derivative().derivative());
                }
                c
            });
            let mut term = 1.0;
            let mut u = 0.0;
            for (m, d) in chain.iter().enumerate() {
                if m > 0 {
                    term *= t / m as f64;
                }
                u += d.eval(x) * term;
            }
            out.push(u);
        } else {
            let table = match &table {
                Some(tb) => tb,
                None => {
                    let n = [8usize, 12, 16]
                        .into_iter()
                        .find(|&n| 2.0 * crate::soe::default_budget(n).unwrap() <= tol)
                        .unwrap_or(16);
                    table = Some(SoeTable::load(n)?);
                    table.as_ref().unwrap()
                }
            };
            let w_lo = (x - window_half).max(a);
            let w_hi = (x + window_half).min(b);
            let mid = 0.5 * (w_lo + w_hi);
            let half = 0.5 * (w_hi - w_lo);
            let mut pieces = Vec::new();
            for piece in f.pieces() {
                let flo = piece.lo().max(w_lo);
                let fhi = piece.hi().min(w_hi);
                if fhi > flo {
                    pieces.push(ChebPiece::interpolate(
                        (flo - mid) / half,
                        (fhi - mid) / half,
                        piece.degree(),
                        |xh| piece.eval(mid + half * xh),
                    )?);
                }
            }
            let window = PiecewiseChebFunction::new(pieces)?;
            let u = fgt_continuous(table, &window, &[(x - mid) / half], t / (half * half))?;
            out.push(u[0]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{oracle_gauss_conv, OracleConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table12() -> SoeTable {
        SoeTable::load(12).unwrap()
    }

    #[test]
    fn discrete_single_source_at_zero_distance() {
        let u = fgt_discrete(&table12(), &[0.0], &[1.0], &[0.0], 0.3).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-10, "got {}", u[0]);
    }

    #[test]
    fn discrete_three_sources() {
        let u = fgt_discrete(
            &table12(),
            &[-1.0, 0.0, 1.0],
            &[1.0, 1.0, 1.0],
            &[0.0],
            0.25,
        )
        .unwrap();
        let expected = 1.0 + 2.0 * (-1.0_f64).exp();
        assert!((u[0] - expected).abs() < 1e-10, "got {}, want {expected}", u[0]);
    }

    #[test]
    fn discrete_matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xf97);
        let t = 1e-2;
        let mut sources: Vec<f64> = (0..1000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        sources.sort_by(f64::total_cmp);
        let charges: Vec<f64> = (0..1000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut targets: Vec<f64> = (0..1000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        targets.sort_by(f64::total_cmp);
        let u = fgt_discrete(&table12(), &sources, &charges, &targets, t).unwrap();
        let charge_mass: f64 = charges.iter().map(|c| c.abs()).sum();
        let mut worst = 0.0f64;
        for (i, &x) in targets.iter().enumerate() {
            let direct: f64 = sources
                .iter()
                .zip(&charges)
                .map(|(&y, &c)| c * (-(x - y) * (x - y) / (4.0 * t)).exp())
                .sum();
            worst = worst.max((u[i] - direct).abs());
        }
        assert!(
            worst <= 1e-11 * charge_mass,
            "worst {worst:e} vs budget {:e}",
            1e-11 * charge_mass
        );
    }

    #[test]
    fn discrete_rejects_unsorted() {
        let e = fgt_discrete(&table12(), &[0.5, -0.5], &[1.0, 1.0], &[0.0], 0.1);
        assert!(matches!(e, Err(Error::UnsortedInput("sources"))));
        let e = fgt_discrete(&table12(), &[-0.5, 0.5], &[1.0, 1.0], &[0.3, 0.0], 0.1);
        assert!(matches!(e, Err(Error::UnsortedInput("targets"))));
    }

    #[test]
    fn continuous_zero_density_gives_zeros() {
        let f = PiecewiseChebFunction::from_fn(&[-1.0, 1.0], 6, |_| 0.0).unwrap();
        let u = fgt_continuous(&table12(), &f, &[-0.5, 0.0, 0.5], 0.05).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn continuous_constant_density_is_erf_pair() {
        let f = PiecewiseChebFunction::from_fn(&[-1.0, 1.0], 4, |_| 1.0).unwrap();
        let t = 0.01_f64;
        let s = 2.0 * t.sqrt();
        for &x in &[0.0, 0.33, -0.9, 1.5, -2.2] {
            let u = fgt_continuous(&table12(), &f, &[x], t).unwrap();
            let expected = 0.5 * (libm::erf((x + 1.0) / s) + libm::erf((1.0 - x) / s));
            assert!(
                (u[0] - expected).abs() < 1e-9,
                "x={x}: got {}, want {expected}",
                u[0]
            );
        }
    }

    #[test]
    fn continuous_matches_oracle_on_random_densities() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6a11);
        let cfg = OracleConfig::default();
        for trial in 0..12 {
            let t = 10f64.powf(rng.gen_range(-4.0..0.0));
            let c1: f64 = rng.gen_range(-2.0..2.0);
            let c2: f64 = rng.gen_range(1.0..12.0);
            let f = PiecewiseChebFunction::from_fn(&[-1.0, -0.2, 0.4, 1.0], 18, |y| {
                (c2 * y).sin() + c1 * y * y
            })
            .unwrap();
            let targets = [-0.97, -0.4, 0.11, 0.79, 1.0];
            let u = fgt_continuous(&table12(), &f, &targets, t).unwrap();
            for (i, &x) in targets.iter().enumerate() {
                let want = oracle_gauss_conv(&f, x, t, &cfg).unwrap();
                let budget = 10.0 * table12().achieved_error()
                    / (4.0 * std::f64::consts::PI * t).sqrt()
                    * 2.5;
                assert!(
                    (u[i] - want).abs() <= budget.max(1e-12),
                    "trial {trial}, t={t:.2e}, x={x}: err {:e} > {budget:e}",
                    (u[i] - want).abs()
                );
            }
        }
    }

    #[test]
    fn sweep_identity_for_h_plus() {
        // h⁺ at each cut equals ∫_a^{x} e^{−τ(x−y)} f(y) dy for each node.
        let f = PiecewiseChebFunction::from_fn(&[-1.0, -0.6, -0.1, 0.3, 0.8, 1.0], 10, |y| {
            (3.0 * y).cos() + 0.5 * y
        })
        .unwrap();
        let t = 0.03_f64;
        let sqrt_t = t.sqrt();
        let table = table12();
        let targets = [-0.8, -0.3, 0.2, 0.7, 1.0];
        let (cuts, _) = build_cuts(Some((-1.0, 1.0)), &targets);
        let tau_abs_max = table.nodes().iter().map(|z| z.norm()).fold(0.0, f64::max) / sqrt_t;
        let nodes = continuous_nodes(&f, &cuts, tau_abs_max, f64::INFINITY);
        let pair = table.pairs().next().unwrap();
        let tau = pair.t / sqrt_t;
        let state = SweepState::compute(tau, &cuts, &nodes);
        // direct h⁺ by composite fine quadrature
        let rule = gl_rule(40);
        for (p, &x) in cuts.iter().enumerate() {
            let mut h = Complex64::ZERO;
            for q in 0..p {
                let n_sub = ((tau.norm() * (cuts[q + 1] - cuts[q]) / 8.0).ceil() as usize).max(2);
                let w = (cuts[q + 1] - cuts[q]) / n_sub as f64;
                for s in 0..n_sub {
                    let lo = cuts[q] + s as f64 * w;
                    let mid = lo + 0.5 * w;
                    for (&xi, &gw) in rule.nodes.iter().zip(&rule.weights) {
                        let y = mid + 0.5 * w * xi;
                        h += gw * 0.5 * w * f.eval(y) * (-tau * (x - y)).exp();
                    }
                }
            }
            let mut h_sweep = Complex64::ZERO;
            for q in 0..p {
                h_sweep = state.beta[q] * h_sweep + state.i_mom[q];
            }
            let scale = h.norm().max(1e-6);
            assert!(
                (h_sweep - h).norm() <= 1e-12 * scale,
                "cut {p}: sweep {h_sweep}, direct {h}"
            );
        }
    }

    #[test]
    fn conjugate_halving_is_exact() {
        let f = PiecewiseChebFunction::from_fn(&[-1.0, 0.0, 1.0], 12, |y| (5.0 * y).sin()).unwrap();
        let targets = [-0.7, -0.1, 0.42, 0.9];
        let t = 0.02;
        let halved = fgt_continuous(&table12(), &f, &targets, t).unwrap();
        let full = fgt_continuous_unhalved(&table12(), &f, &targets, t).unwrap();
        for (a, b) in halved.iter().zip(&full) {
            // identical math, different accumulation order
            assert!(
                (a - b).abs() <= 1e-14 * a.abs().max(1.0),
                "halved {a}, full {b}"
            );
        }
    }

    #[test]
    fn periodic_constant_density_has_unit_mass() {
        let f = PiecewiseChebFunction::from_fn(&[-1.0, 1.0], 4, |_| 1.75).unwrap();
        for &t in &[1e-3, 0.1, 1.0] {
            let u = fgt_periodic(&table12(), &f, &[-1.0, -0.3, 0.6], t).unwrap();
            for &v in &u {
                assert!((v - 1.75).abs() < 1e-10, "t={t}: got {v}");
            }
        }
    }

    #[test]
    fn periodic_eigenfunction_decays() {
        let f =
            PiecewiseChebFunction::from_fn(&[-1.0, 1.0], 24, |y| (std::f64::consts::PI * y).sin())
                .unwrap();
        let t = 0.1;
        let decay = (-std::f64::consts::PI.powi(2) * t).exp();
        let targets = [-0.85, -0.25, 0.0, 0.4, 0.95];
        let u = fgt_periodic(&table12(), &f, &targets, t).unwrap();
        for (i, &x) in targets.iter().enumerate() {
            let want = decay * (std::f64::consts::PI * x).sin();
            assert!(
                (u[i] - want).abs() < 1e-11,
                "x={x}: got {}, want {want}",
                u[i]
            );
        }
    }

    #[test]
    fn periodic_shift_and_translation_invariance() {
        let f = PiecewiseChebFunction::from_fn(&[-1.0, 0.3, 1.0], 14, |y| {
            (2.0 * std::f64::consts::PI * y).cos() + 0.3 * (std::f64::consts::PI * y).sin()
        })
        .unwrap();
        let t = 0.07;
        let targets = [-0.9, -0.2, 0.5];
        let base = fgt_periodic(&table12(), &f, &targets, t).unwrap();
        // Shift all targets by one period. The wrap re-rounds the target
        // coordinate (x+2)−2 ≠ x bitwise, so allow a few ulps of slack.
        let shifted: Vec<f64> = targets.iter().map(|x| x + 2.0).collect();
        let u_shift = fgt_periodic(&table12(), &f, &shifted, t).unwrap();
        for (a, b) in base.iter().zip(&u_shift) {
            assert!(
                (a - b).abs() <= 32.0 * f64::EPSILON * a.abs().max(1.0),
                "shift: {a} vs {b}"
            );
        }
        // translate f by one period
        let f_translated = f.with_domain(1.0, 3.0);
        let u_trans = fgt_periodic(&table12(), &f_translated, &targets, t).unwrap();
        for (a, b) in base.iter().zip(&u_trans) {
            assert!(
                (a - b).abs() <= 32.0 * f64::EPSILON * a.abs().max(1.0),
                "translate: {a} vs {b}"
            );
        }
    }

    #[test]
    fn periodic_rejects_far_targets() {
        let f = PiecewiseChebFunction::from_fn(&[-1.0, 1.0], 4, |_| 1.0).unwrap();
        let e = fgt_periodic(&table12(), &f, &[3.5], 0.1);
        assert!(matches!(e, Err(Error::TargetOutOfCell { .. })));
    }

    #[test]
    fn small_t_constant_is_exact() {
        let f = PiecewiseChebFunction::from_fn(&[-1.0, 1.0], 6, |_| 2.5).unwrap();
        let u = fgt_small_t(&f, &[0.0, 0.2], 1e-5, 1e-12).unwrap();
        for &v in &u {
            assert!((v - 2.5).abs() < 1e-14);
        }
    }

    #[test]
    fn small_t_quadratic_series() {
        let f = PiecewiseChebFunction::from_fn(&[-1.0, 1.0], 8, |y| y * y).unwrap();
        let t = 1e-4;
        let u = fgt_small_t(&f, &[0.0], t, 1e-12).unwrap();
        assert!((u[0] - 2.0 * t).abs() < 1e-15, "got {}, want {}", u[0], 2.0 * t);
    }

    #[test]
    fn small_t_near_boundary_matches_oracle() {
        let f = PiecewiseChebFunction::adaptive(&[-1.0, 1.0], 16, 1e-14, |y| {
            (10.0 * std::f64::consts::PI * y).sin()
        })
        .unwrap();
        let t = 1e-6_f64;
        let x = -1.0 + t.sqrt();
        let u = fgt_small_t(&f, &[x], t, 1e-11).unwrap();
        let want = oracle_gauss_conv(&f, x, t, &OracleConfig::default()).unwrap();
        assert!(
            (u[0] - want).abs() <= 1e-11,
            "got {}, want {want}, err {:e}",
            u[0],
            (u[0] - want).abs()
        );
    }

    #[test]
    fn small_t_dispatch_errors() {
        let f = PiecewiseChebFunction::from_fn(&[-1.0, 1.0], 6, |y| y).unwrap();
        assert!(matches!(
            fgt_small_t(&f, &[0.0], 2e-3, 1e-10),
            Err(Error::TimeTooLarge { .. })
        ));
        assert!(matches!(
            fgt_small_t(&f, &[0.0], -1.0, 1e-10),
            Err(Error::NonPositiveTime(_))
        ));
        // narrow domain lowers the threshold below 1e-3
        let narrow = PiecewiseChebFunction::from_fn(&[0.0, 0.14], 6, |y| y).unwrap();
        assert!(matches!(
            fgt_small_t(&narrow, &[0.07], 5e-5, 1e-10),
            Err(Error::TimeTooLarge { .. })
        ));
    }

    #[test]
    fn small_t_extends_by_zero_outside_the_support() {
        // Boundary collocation targets drift outside the initial hull on a
        // moving domain; the convolution then sees the zero extension of f.
        let f = PiecewiseChebFunction::from_fn(&[-1.0, 0.0], 12, |y| (3.0 * y).cos() * (1.0 - y))
            .unwrap();
        let t = 4e-6_f64; // reach = 14√t = 0.028
        let targets = [-0.5, -0.004, 0.004, 0.02, 0.05];
        let u = fgt_small_t(&f, &targets, t, 1e-12).unwrap();
        let cfg = OracleConfig::default();
        for (&x, &got) in targets.iter().zip(&u) {
            let want = oracle_gauss_conv(&f, x, t, &cfg).unwrap();
            assert!((got - want).abs() <= 1e-12, "x={x}: got {got}, want {want}");
        }
        // Beyond the reach the answer is exactly the erfc(7) tail: zero.
        assert_eq!(u[4], 0.0);
    }

    #[test]
    fn small_t_cross_validates_with_soe_path_in_overlap() {
        // 28√t ≤ 2 and t ≤ 1e-3 both hold at t = 1e-3: the two paths must
        // agree within the SOE budget there.
        let f = PiecewiseChebFunction::adaptive(&[-1.0, 1.0], 16, 1e-14, |y| {
            (4.0 * y).cos() * (1.0 + 0.5 * y)
        })
        .unwrap();
        let t = 1e-3;
        let targets = [-0.999, -0.5, 0.0, 0.77, 0.9995];
        let series = fgt_small_t(&f, &targets, t, 1e-12).unwrap();
        let soe = fgt_continuous(&SoeTable::load(16).unwrap(), &f, &targets, t).unwrap();
        for (a, b) in series.iter().zip(&soe) {
            assert!((a - b).abs() < 5e-12, "series {a}, soe {b}");
        }
    }
}
