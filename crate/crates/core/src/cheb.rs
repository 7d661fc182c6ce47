//! Piecewise Chebyshev interpolants.
//!
//! Everything spatial in this crate — source profiles, potential snapshots,
//! solution slices — is carried as a [`PiecewiseChebFunction`]: an ordered
//! list of intervals, each holding a Chebyshev coefficient expansion. The
//! representation supports exact differentiation and definite integration
//! piece by piece, which the transform and quadrature layers rely on.

use crate::error::{Error, Result};

/// One Chebyshev expansion on an interval [lo, hi].
///
/// The stored coefficients c_j represent f(x) = Σ c_j T_j(s) with
/// s = 2(x−lo)/(hi−lo) − 1.
#[derive(Debug, Clone)]
pub struct ChebPiece {
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
}

/// Chebyshev-Lobatto points of degree `n` on [lo, hi], ascending.
pub fn lobatto_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 1, "a Lobatto grid needs degree >= 1");
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    (0..=n)
        .map(|j| mid - half * (j as f64 * std::f64::consts::PI / n as f64).cos())
        .collect()
}

/// Per-interval Lobatto samples for a whole edge list, with shared edges
/// pinned to the exact edge values so adjacent pieces reference one common
/// point. Returns the sorted unique points and, per interval, the indices
/// of its order+1 samples in that list.
pub(crate) fn sample_grid(edges: &[f64], order: usize) -> (Vec<f64>, Vec<Vec<usize>>) {
    let mut per: Vec<Vec<f64>> = Vec::with_capacity(edges.len().saturating_sub(1));
    for w in edges.windows(2) {
        let mut pts = lobatto_nodes(w[0], w[1], order);
        pts[0] = w[0];
        *pts.last_mut().unwrap() = w[1];
        per.push(pts);
    }
    let mut xs: Vec<f64> = per.iter().flatten().copied().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|p, q| p.total_cmp(q) == std::cmp::Ordering::Equal);
    let map = per
        .iter()
        .map(|pts| {
            pts.iter()
                .map(|x| xs.binary_search_by(|p| p.total_cmp(x)).expect("sample is a cut"))
                .collect()
        })
        .collect();
    (xs, map)
}

impl ChebPiece {
    /// Build a piece of degree `n` by interpolating `f` at the
    /// Chebyshev-Lobatto points of [lo, hi].
    pub fn interpolate<F: FnMut(f64) -> f64>(lo: f64, hi: f64, n: usize, mut f: F) -> Result<Self> {
        let values: Vec<f64> = lobatto_nodes(lo, hi, n).into_iter().map(&mut f).collect();
        Self::from_lobatto_values(lo, hi, &values)
    }

    /// Build a piece from values already sampled at the ascending
    /// Chebyshev-Lobatto points (degree = values.len() − 1).
    pub fn from_lobatto_values(lo: f64, hi: f64, values: &[f64]) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::DegeneratePiece(lo, hi));
        }
        assert!(values.len() >= 2, "need at least two samples (degree >= 1)");
        let n = values.len() - 1;
        // Discrete cosine transform of the samples. Ascending nodes are
        // s_j = −cos(jπ/n), so T_k(s_j) = (−1)^k cos(kjπ/n).
        let mut coeffs = vec![0.0; n + 1];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &v) in values.iter().enumerate() {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                acc += w * v * ((k * j) as f64 * std::f64::consts::PI / n as f64).cos();
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let norm = if k == 0 || k == n { 1.0 } else { 2.0 };
            *c = sign * norm * acc / n as f64;
        }
        Ok(Self { lo, hi, coeffs })
    }

    /// Wrap explicit coefficients.
    pub fn from_coeffs(lo: f64, hi: f64, coeffs: Vec<f64>) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::DegeneratePiece(lo, hi));
        }
        assert!(!coeffs.is_empty());
        Ok(Self { lo, hi, coeffs })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Map x into the reference coordinate s ∈ [−1, 1].
    fn to_ref(&self, x: f64) -> f64 {
        2.0 * (x - self.lo) / (self.hi - self.lo) - 1.0
    }

    /// Evaluate at x ∈ [lo, hi] by Clenshaw recurrence.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_ref(self.to_ref(x))
    }

    /// Evaluate at the reference coordinate s ∈ [−1, 1].
    pub fn eval_ref(&self, s: f64) -> f64 {
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * s * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        s * b1 - b2 + self.coeffs[0]
    }

    /// Exact derivative as a new piece on the same interval.
    pub fn derivative(&self) -> Self {
        let n = self.degree();
        let scale = 2.0 / (self.hi - self.lo);
        if n == 0 {
            return Self {
                lo: self.lo,
                hi: self.hi,
                coeffs: vec![0.0],
            };
        }
        let mut d = vec![0.0; n + 1]; // d[n] stays 0
        d[n - 1] = 2.0 * n as f64 * self.coeffs[n];
        for k in (1..n).rev() {
            d[k - 1] = d[k + 1] + 2.0 * k as f64 * self.coeffs[k];
        }
        d[0] *= 0.5;
        d.truncate(n.max(1));
        for c in &mut d {
            *c *= scale;
        }
        Self {
            lo: self.lo,
            hi: self.hi,
            coeffs: d,
        }
    }

    /// Antiderivative piece vanishing at `lo`.
    pub fn antiderivative(&self) -> Self {
        let n = self.degree();
        let scale = 0.5 * (self.hi - self.lo);
        let c = &self.coeffs;
        let get = |k: usize| if k <= n { c[k] } else { 0.0 };
        let mut a = vec![0.0; n + 2];
        for k in 1..=n + 1 {
            let prev = if k == 1 { 2.0 * get(0) } else { get(k - 1) };
            a[k] = scale * (prev - get(k + 1)) / (2.0 * k as f64);
        }
        // Fix the constant so the antiderivative vanishes at s = −1.
        let mut at_lo = 0.0;
        for (k, &ak) in a.iter().enumerate().skip(1) {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            at_lo += ak * sign;
        }
        a[0] = -at_lo;
        Self {
            lo: self.lo,
            hi: self.hi,
            coeffs: a,
        }
    }

    /// Definite integral over the whole piece.
    pub fn integral(&self) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate().step_by(2) {
            // ∫_{-1}^{1} T_k = 2/(1−k²) for even k, 0 for odd k
            acc += c * 2.0 / (1.0 - (k * k) as f64);
        }
        acc * 0.5 * (self.hi - self.lo)
    }

    /// Relative size of the coefficient tail, the resolution estimate used
    /// by the adaptive constructor.
    fn tail_estimate(&self) -> f64 {
        let scale = self
            .coeffs
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.abs()))
            .max(1e-300);
        let n = self.coeffs.len();
        let tail = self.coeffs[n.saturating_sub(2)..]
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.abs()));
        tail / scale
    }
}

/// A contiguous piecewise Chebyshev interpolant on [x_0, x_P].
#[derive(Debug, Clone)]
pub struct PiecewiseChebFunction {
    pieces: Vec<ChebPiece>,
}

impl PiecewiseChebFunction {
    /// Assemble from contiguous pieces (ascending, exactly abutting).
    pub fn new(pieces: Vec<ChebPiece>) -> Result<Self> {
        assert!(!pieces.is_empty(), "a piecewise function needs pieces");
        for w in pieces.windows(2) {
            if w[0].hi != w[1].lo {
                return Err(Error::DegeneratePiece(w[0].hi, w[1].lo));
            }
        }
        Ok(Self { pieces })
    }

    /// Interpolate `f` at fixed degree `n` on each span between consecutive
    /// breakpoints.
    pub fn from_fn<F: FnMut(f64) -> f64>(
        breakpoints: &[f64],
        n: usize,
        mut f: F,
    ) -> Result<Self> {
        assert!(breakpoints.len() >= 2, "need at least one span");
        let mut pieces = Vec::with_capacity(breakpoints.len() - 1);
        for w in breakpoints.windows(2) {
            pieces.push(ChebPiece::interpolate(w[0], w[1], n, &mut f)?);
        }
        Self::new(pieces)
    }

    /// Adaptive construction: spans are bisected until the Chebyshev
    /// coefficient tail at degree `n` drops below `tol` (relative).
    ///
    /// `seed_breakpoints` must bracket the domain; interior entries are kept
    /// as hard breakpoints (useful when `f` is only piecewise smooth).
    pub fn adaptive<F: Fn(f64) -> f64>(
        seed_breakpoints: &[f64],
        n: usize,
        tol: f64,
        f: F,
    ) -> Result<Self> {
        assert!(seed_breakpoints.len() >= 2);
        let mut pieces = Vec::new();
        for w in seed_breakpoints.windows(2) {
            Self::refine_span(w[0], w[1], n, tol, &f, 0, &mut pieces)?;
        }
        Self::new(pieces)
    }

    fn refine_span<F: Fn(f64) -> f64>(
        lo: f64,
        hi: f64,
        n: usize,
        tol: f64,
        f: &F,
        depth: usize,
        out: &mut Vec<ChebPiece>,
    ) -> Result<()> {
        let piece = ChebPiece::interpolate(lo, hi, n, f)?;
        if piece.tail_estimate() <= tol || depth >= 30 {
            out.push(piece);
            return Ok(());
        }
        let mid = 0.5 * (lo + hi);
        Self::refine_span(lo, mid, n, tol, f, depth + 1, out)?;
        Self::refine_span(mid, hi, n, tol, f, depth + 1, out)
    }

    pub fn domain(&self) -> (f64, f64) {
        (
            self.pieces[0].lo,
            self.pieces[self.pieces.len() - 1].hi,
        )
    }

    pub fn pieces(&self) -> &[ChebPiece] {
        &self.pieces
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut bp: Vec<f64> = self.pieces.iter().map(|p| p.lo).collect();
        bp.push(self.domain().1);
        bp
    }

    pub fn max_degree(&self) -> usize {
        self.pieces.iter().map(|p| p.degree()).max().unwrap_or(0)
    }

    /// Index of the piece owning x. Pieces are right-open; the last piece is
    /// closed, so the right domain endpoint is valid.
    pub fn piece_index(&self, x: f64) -> usize {
        let (a, b) = self.domain();
        assert!(
            (a..=b).contains(&x),
            "evaluation point {x} outside domain [{a}, {b}]"
        );
        match self
            .pieces
            .binary_search_by(|p| p.lo.partial_cmp(&x).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => (i - 1).min(self.pieces.len() - 1),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].eval(x)
    }

    /// Piecewise derivative (jumps at breakpoints are kept as-is).
    pub fn derivative(&self) -> Self {
        Self {
            pieces: self.pieces.iter().map(|p| p.derivative()).collect(),
        }
    }

    /// Integral over the full domain.
    pub fn integral(&self) -> f64 {
        self.pieces.iter().map(|p| p.integral()).sum()
    }

    /// The same coefficients re-read on an affinely mapped domain.
    ///
    /// Chebyshev expansions are invariant under affine reparameterization,
    /// so this is exact: the piece on [lo, hi] becomes a piece on the image
    /// of [lo, hi] under x ↦ new_lo + (x − old_lo)·scale.
    pub fn with_domain(&self, new_lo: f64, new_hi: f64) -> Self {
        let (a, b) = self.domain();
        let scale = (new_hi - new_lo) / (b - a);
        let pieces = self
            .pieces
            .iter()
            .map(|p| ChebPiece {
                lo: new_lo + (p.lo - a) * scale,
                hi: new_lo + (p.hi - a) * scale,
                coeffs: p.coeffs.clone(),
            })
            .collect();
        Self { pieces }
    }

    /// Maximum of |f| sampled on a dense per-piece Lobatto grid; an estimate,
    /// adequate for error reporting.
    pub fn sup_estimate(&self) -> f64 {
        let mut m = 0.0_f64;
        for p in &self.pieces {
            let n = (2 * p.degree()).max(8);
            for x in lobatto_nodes(p.lo, p.hi, n) {
                m = m.max(p.eval(x).abs());
            }
        }
        m
    }
}
