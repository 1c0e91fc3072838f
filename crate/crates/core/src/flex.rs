//! Numerical certificates for flexibility and tangential semi-homogeneity.
//!
//! Tangent vectors live in the ambient `ℂ^{2n²}`, flattened row-major with
//! the `X` part first.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMatrix, RankDecision, C64};
use crate::pair::{complex_gaussian, random_wilson_point, sample, MatrixPair, Member, SampleOptions, WilsonChartPoint};
use crate::tol::Tolerances;

/// Gap between accepted and rejected singular values below which a rank
/// decision is flagged unreliable.
pub const RELIABLE_GAP: f64 = 1e3;

fn flatten_pair(dx: &CMatrix, dy: &CMatrix) -> Vec<C64> {
    let mut v = linalg::flatten_row_major(dx);
    v.extend(linalg::flatten_row_major(dy));
    v
}

/// `(0, Xᵏ)` for `k = 1..=n`, then `(Yᵏ, 0)` for `k = 1..=n`.
pub fn flow_tangents(p: &Member) -> Vec<Vec<C64>> {
    let n = p.n();
    let zero = CMatrix::zeros(n, n);
    let mut out = Vec::with_capacity(2 * n);
    let mut xk = p.x().clone();
    for _ in 0..n {
        out.push(flatten_pair(&zero, &xk));
        xk = &xk * p.x();
    }
    let mut yk = p.y().clone();
    for _ in 0..n {
        out.push(flatten_pair(&yk, &zero));
        yk = &yk * p.y();
    }
    out
}

/// `([Eᵢⱼ, X], [Eᵢⱼ, Y])` for all `n²` matrix units, `(i, j)` row-major.
///
/// Scalars act trivially, so the span has dimension at most `n² − 1`.
pub fn orbit_tangents(p: &Member) -> Vec<Vec<C64>> {
    let n = p.n();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut e = CMatrix::zeros(n, n);
            e[(i, j)] = c64(1.0, 0.0);
            out.push(flatten_pair(&linalg::commutator(&e, p.x()), &linalg::commutator(&e, p.y())));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanReport {
    pub n: usize,
    pub point: MatrixPair,
    pub orbit_rank: usize,
    pub combined_rank: usize,
    pub quotient_span: usize,
    pub passed: bool,
    /// The smaller of the two gaps at the rank decisions.
    pub singular_value_gap: f64,
    pub reliable: bool,
    /// Singular values of the combined stack.
    pub singular_values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlexSummary {
    pub n: usize,
    pub samples: usize,
    pub passes: usize,
    pub flagged_unreliable: usize,
}

fn stack_rank(rows: &[Vec<C64>], rel_cutoff: f64) -> (RankDecision, Vec<f64>) {
    if rows.is_empty() {
        return (RankDecision { rank: 0, gap: f64::INFINITY }, Vec::new());
    }
    let sv = linalg::singular_values(&linalg::stack_normalized(rows));
    (linalg::numeric_rank(&sv, rel_cutoff), sv)
}

/// Rank of the flow fields modulo the conjugation orbit at `p`.
pub fn span_report(p: &Member, tol: &Tolerances) -> SpanReport {
    let n = p.n();
    let orbit = orbit_tangents(p);
    let mut combined = orbit.clone();
    combined.extend(flow_tangents(p));
    let (orbit_rank, _) = stack_rank(&orbit, tol.rank_tol);
    let (combined_rank, sv) = stack_rank(&combined, tol.rank_tol);
    let quotient_span = combined_rank.rank.saturating_sub(orbit_rank.rank);
    let gap = orbit_rank.gap.min(combined_rank.gap);
    SpanReport {
        n,
        point: p.pair().clone(),
        orbit_rank: orbit_rank.rank,
        combined_rank: combined_rank.rank,
        quotient_span,
        passed: quotient_span == 2 * n,
        singular_value_gap: gap,
        reliable: gap >= RELIABLE_GAP,
        singular_values: sv,
    }
}

pub fn summarize(n: usize, reports: &[SpanReport]) -> FlexSummary {
    FlexSummary {
        n,
        samples: reports.len(),
        passes: reports.iter().filter(|r| r.passed).count(),
        flagged_unreliable: reports.iter().filter(|r| !r.reliable).count(),
    }
}

/// [`span_report`] at `samples` seeded Gaussian members.
pub fn flexibility_check(n: usize, samples: usize, seed: u64, tol: &Tolerances) -> Result<(Vec<SpanReport>, FlexSummary)> {
    tol.validate()?;
    let points = sample(n, samples, seed, tol, &SampleOptions::default())?;
    let reports: Vec<SpanReport> = points.iter().map(|p| span_report(p, tol)).collect();
    let summary = summarize(n, &reports);
    Ok((reports, summary))
}

/// `(F_k(p), G_k(p))` relative to the base point:
/// `F_k = (X + (tr Y − tr Y₀)·Yᵏ, Y)`, `G_k = (X, Y + (tr X − tr X₀)·Xᵏ)`.
pub fn fk_gk_maps(p: &Member, base: &MatrixPair, k: usize, tol: &Tolerances) -> Result<(Member, Member)> {
    if p.n() != base.n() {
        return Err(Error::SizeMismatch { left: p.n(), right: base.n() });
    }
    let dy = linalg::trace(p.y()) - linalg::trace(base.y());
    let dx = linalg::trace(p.x()) - linalg::trace(base.x());
    let f = MatrixPair::new(p.x() + linalg::mat_pow(p.y(), k) * dy, p.y().clone())?;
    let g = MatrixPair::new(p.x().clone(), p.y() + linalg::mat_pow(p.x(), k) * dx)?;
    Ok((Member::new(f, tol)?, Member::new(g, tol)?))
}

/// Derivative at `0` of a holomorphic `h ↦ f(h)` from four points on the
/// circle `|h| = r`: `(f(r) − f(−r) − i·f(ir) + i·f(−ir)) / 4r`.
pub fn cauchy_derivative<F>(r: f64, mut f: F) -> Result<Vec<C64>>
where
    F: FnMut(C64) -> Result<Vec<C64>>,
{
    let i = c64(0.0, 1.0);
    let a = f(c64(r, 0.0))?;
    let b = f(c64(-r, 0.0))?;
    let c = f(c64(0.0, r))?;
    let d = f(c64(0.0, -r))?;
    Ok((0..a.len())
        .map(|j| (a[j] - b[j] - i * c[j] + i * d[j]) / (4.0 * r))
        .collect())
}

/// Wilson coordinates of a pair near the chart point with eigenvalues
/// `reference`: eigenvalues of `X` matched to `reference`, and
/// `αᵢ = (P⁻¹YP)ᵢᵢ` for an eigenvector basis `P`.
pub fn chart_coordinates(p: &MatrixPair, reference: &[C64], tol: &Tolerances) -> Result<WilsonChartPoint> {
    let n = p.n();
    if reference.len() != n {
        return Err(Error::SizeMismatch { left: n, right: reference.len() });
    }
    let eig = linalg::eigenvalues(p.x())?;
    let matching = linalg::min_cost_matching(reference, &eig);
    let lambdas: Vec<C64> = matching.assignment.iter().map(|&j| eig[j]).collect();
    let probe = WilsonChartPoint::new(lambdas.clone(), lambdas.clone())?;
    let separation = probe.relative_separation();
    if !(separation > tol.sep_tol) {
        return Err(Error::NotInChart { separation });
    }
    let mut basis = CMatrix::zeros(n, n);
    for (col, lambda) in lambdas.iter().enumerate() {
        let mut shifted = p.x().clone();
        for i in 0..n {
            shifted[(i, i)] -= *lambda;
        }
        let (_, kernel) = linalg::numerical_kernel(&shifted, 1.0);
        // A unit cutoff keeps every right singular vector; the last is the smallest.
        let v = kernel.last().ok_or(Error::NoConvergence)?;
        basis.set_column(col, v);
    }
    let inv = linalg::inverse(&basis).ok_or(Error::NotInChart { separation })?;
    let yc = inv * p.y() * &basis;
    let alphas = (0..n).map(|i| yc[(i, i)]).collect();
    WilsonChartPoint::new(lambdas, alphas)
}

fn chart_vector(c: &WilsonChartPoint) -> Vec<C64> {
    c.lambdas.iter().chain(c.alphas.iter()).copied().collect()
}

fn shifted_chart(base: &WilsonChartPoint, w: &[C64], h: C64) -> Result<WilsonChartPoint> {
    let n = base.n();
    WilsonChartPoint::new(
        (0..n).map(|i| base.lambdas[i] + w[i] * h).collect(),
        (0..n).map(|i| base.alphas[i] + w[n + i] * h).collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartMap {
    F(usize),
    G(usize),
}

/// `d(π ∘ M)(w)` at the base point in Wilson coordinates, with `π` the
/// chart projection and `M` one of `F_k`, `G_k`.
pub fn chart_pushforward(base: &WilsonChartPoint, w: &[C64], map: ChartMap, tol: &Tolerances) -> Result<Vec<C64>> {
    let n = base.n();
    if w.len() != 2 * n {
        return Err(Error::SizeMismatch { left: 2 * n, right: w.len() });
    }
    let base_pair = base.to_pair(tol)?.into_pair();
    cauchy_derivative(tol.fd_step, |h| {
        let p = shifted_chart(base, w, h)?.to_pair(tol)?;
        let (f, g) = match map {
            ChartMap::F(k) | ChartMap::G(k) => fk_gk_maps(&p, &base_pair, k, tol)?,
        };
        let image = match map {
            ChartMap::F(_) => f,
            ChartMap::G(_) => g,
        };
        Ok(chart_vector(&chart_coordinates(image.pair(), &base.lambdas, tol)?))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiHomReport {
    pub n: usize,
    pub base: WilsonChartPoint,
    /// Tangent vector in chart coordinates `(δλ, δα)`.
    pub w: Vec<C64>,
    pub rank: usize,
    pub singular_value_gap: f64,
    pub reliable: bool,
    pub passed: bool,
    pub singular_values: Vec<f64>,
}

/// Relative cutoff for rank decisions on finite-difference stacks.
pub fn fd_rank_cutoff(tol: &Tolerances) -> f64 {
    (tol.fd_step * 1e-2).max(tol.rank_tol)
}

/// Rank of `{w, dF_k(w), dG_k(w) : k < n}` in Wilson coordinates.
pub fn semi_homogeneity_check_with(base: &WilsonChartPoint, w: &[C64], tol: &Tolerances) -> Result<SemiHomReport> {
    tol.validate()?;
    let n = base.n();
    let separation = base.relative_separation();
    if !(separation > tol.sep_tol) {
        return Err(Error::NotInChart { separation });
    }
    let mut rows = Vec::with_capacity(2 * n + 1);
    rows.push(w.to_vec());
    for k in 0..n {
        rows.push(chart_pushforward(base, w, ChartMap::F(k), tol)?);
        rows.push(chart_pushforward(base, w, ChartMap::G(k), tol)?);
    }
    let (decision, sv) = stack_rank(&rows, fd_rank_cutoff(tol));
    Ok(SemiHomReport {
        n,
        base: base.clone(),
        w: w.to_vec(),
        rank: decision.rank,
        singular_value_gap: decision.gap,
        reliable: decision.gap >= RELIABLE_GAP,
        passed: decision.rank == 2 * n,
        singular_values: sv,
    })
}

/// Random tangent vector with every chart component of modulus at least 0.1.
pub fn random_generic_tangent<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..2 * n)
        .map(|_| loop {
            let z = complex_gaussian(rng);
            if z.norm() >= 0.1 {
                break z;
            }
        })
        .collect()
}

/// [`semi_homogeneity_check_with`] at a seeded generic base point and tangent.
pub fn semi_homogeneity_check(n: usize, seed: u64, tol: &Tolerances) -> Result<SemiHomReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = random_wilson_point(&mut rng, n, &Tolerances { sep_tol: 0.05, ..*tol }, 1000)?;
    let w = random_generic_tangent(&mut rng, n);
    semi_homogeneity_check_with(&base, &w, tol)
}

/// `d/dh` of the `Y` part of `G_k(X₀ + h·E_jj, Y₀)` for each `j`, which the
/// derivative formula predicts to be `X₀ᵏ = diag(λ₁ᵏ, …, λₙᵏ)`.
pub fn gk_lower_left_block(base: &WilsonChartPoint, k: usize, tol: &Tolerances) -> Result<Vec<CMatrix>> {
    let n = base.n();
    let p0 = base.to_pair(tol)?.into_pair();
    (0..n)
        .map(|j| {
            let d = cauchy_derivative(tol.fd_step, |h| {
                let mut x = p0.x().clone();
                x[(j, j)] += h;
                let dx = linalg::trace(&x) - linalg::trace(p0.x());
                let y = p0.y() + linalg::mat_pow(&x, k) * dx;
                Ok(linalg::flatten_row_major(&y))
            })?;
            Ok(CMatrix::from_row_slice(n, n, &d))
        })
        .collect()
}
