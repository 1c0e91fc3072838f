//! Matrix pairs, the rank-1 membership test, the conjugation action and the
//! Wilson chart.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Deref;

// Float supplies f64 math in no_std builds; std shadows it under test.
#[allow(unused_imports)]
use num_traits::Float;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMatrix, C64};
use crate::tol::Tolerances;

/// Two square complex matrices of the same size.
///
/// Any finite pair can be constructed; membership in `𝒞̃ₙ` is checked
/// separately and witnessed by [`Member`].
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPair {
    x: CMatrix,
    y: CMatrix,
}

impl MatrixPair {
    pub fn new(x: CMatrix, y: CMatrix) -> Result<Self> {
        if !x.is_square() || !y.is_square() {
            return Err(Error::Shape(format!(
                "X is {}x{}, Y is {}x{}; both must be square",
                x.nrows(),
                x.ncols(),
                y.nrows(),
                y.ncols()
            )));
        }
        if x.nrows() != y.nrows() {
            return Err(Error::SizeMismatch {
                left: x.nrows(),
                right: y.nrows(),
            });
        }
        if x.nrows() == 0 {
            return Err(Error::Shape("n must be at least 1".into()));
        }
        if !linalg::all_finite(&x) || !linalg::all_finite(&y) {
            return Err(Error::NonFinite);
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn x(&self) -> &CMatrix {
        &self.x
    }

    pub fn y(&self) -> &CMatrix {
        &self.y
    }

    pub fn into_parts(self) -> (CMatrix, CMatrix) {
        (self.x, self.y)
    }

    /// `[X, Y] + id`.
    pub fn commutator_defect(&self) -> CMatrix {
        let mut d = linalg::commutator(&self.x, &self.y);
        for i in 0..self.n() {
            d[(i, i)] += C64::new(1.0, 0.0);
        }
        d
    }

    pub fn membership(&self, tol: &Tolerances) -> Result<Membership> {
        let sv = linalg::singular_values(&self.commutator_defect());
        let sigma1 = sv[0];
        let sigma2 = sv.get(1).copied().unwrap_or(0.0);
        if !(sigma1 > f64::MIN_POSITIVE) {
            return Err(Error::ZeroDefect);
        }
        let ratio = sigma2 / sigma1;
        Ok(Membership {
            member: ratio < tol.rank_tol,
            sigma1,
            sigma2,
            ratio,
        })
    }

    pub fn is_member(&self, tol: &Tolerances) -> Result<bool> {
        self.membership(tol).map(|m| m.member)
    }

    pub fn into_member(self, tol: &Tolerances) -> Result<Member> {
        Member::new(self, tol)
    }

    /// `(GXG⁻¹, GYG⁻¹)`. Rejects `G` whose scale-free determinant
    /// `|det G| / max|gᵢⱼ|ⁿ` falls below `tol.det_floor`.
    pub fn conjugate(&self, g: &CMatrix, tol: &Tolerances) -> Result<MatrixPair> {
        let n = self.n();
        if g.nrows() != n || g.ncols() != n {
            return Err(Error::SizeMismatch {
                left: n,
                right: g.nrows(),
            });
        }
        let scale = linalg::max_abs(g);
        let det = linalg::determinant(g).norm();
        let normalized = if scale > 0.0 { det / scale.powi(n as i32) } else { 0.0 };
        if !(normalized > tol.det_floor) {
            return Err(Error::SingularConjugator { det });
        }
        let g_inv = linalg::inverse(g).ok_or(Error::SingularConjugator { det })?;
        MatrixPair::new(g * &self.x * &g_inv, g * &self.y * &g_inv)
    }

    /// Largest entry modulus over both matrices.
    pub fn scale(&self) -> f64 {
        f64::max(linalg::max_abs(&self.x), linalg::max_abs(&self.y))
    }

    /// Entrywise distance `max |Δ|` to another pair of the same size.
    pub fn max_entry_distance(&self, other: &MatrixPair) -> f64 {
        f64::max(
            linalg::max_abs(&(&self.x - &other.x)),
            linalg::max_abs(&(&self.y - &other.y)),
        )
    }
}

/// Diagnostic of the rank-1 test on the commutator defect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub member: bool,
    pub sigma1: f64,
    pub sigma2: f64,
    pub ratio: f64,
}

/// A pair that passed the membership test. Operations that require a point
/// of `𝒞̃ₙ` take this type; automorphisms map members to members.
#[derive(Debug, Clone, PartialEq)]
pub struct Member(MatrixPair);

impl Member {
    pub fn new(pair: MatrixPair, tol: &Tolerances) -> Result<Self> {
        let m = pair.membership(tol)?;
        if m.member {
            Ok(Member(pair))
        } else {
            Err(Error::NotMember { ratio: m.ratio })
        }
    }

    /// Wraps the image of a member under a map known to preserve membership.
    pub(crate) fn assume(pair: MatrixPair) -> Self {
        Member(pair)
    }

    pub fn pair(&self) -> &MatrixPair {
        &self.0
    }

    pub fn into_pair(self) -> MatrixPair {
        self.0
    }

    pub fn conjugate(&self, g: &CMatrix, tol: &Tolerances) -> Result<Member> {
        self.0.conjugate(g, tol).map(Member)
    }
}

impl Deref for Member {
    type Target = MatrixPair;

    fn deref(&self) -> &MatrixPair {
        &self.0
    }
}

impl From<Member> for MatrixPair {
    fn from(m: Member) -> Self {
        m.0
    }
}

/// Coordinates `(λ, α)` on the locus where `X` has distinct eigenvalues:
/// `X = diag(λ)`, `Y` has diagonal `α` and off-diagonal entries `(λᵢ − λⱼ)⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct WilsonChartPoint {
    pub lambdas: Vec<C64>,
    pub alphas: Vec<C64>,
}

impl WilsonChartPoint {
    pub fn new(lambdas: Vec<C64>, alphas: Vec<C64>) -> Result<Self> {
        if lambdas.len() != alphas.len() {
            return Err(Error::SizeMismatch {
                left: lambdas.len(),
                right: alphas.len(),
            });
        }
        if lambdas.is_empty() {
            return Err(Error::Shape("n must be at least 1".into()));
        }
        if lambdas.iter().chain(alphas.iter()).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite);
        }
        Ok(Self { lambdas, alphas })
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    /// `min_{i<j} |λᵢ − λⱼ| / max(1, max |λᵢ|)`; infinite for `n = 1`.
    pub fn relative_separation(&self) -> f64 {
        let scale = self.lambdas.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let mut best = f64::INFINITY;
        for i in 0..self.n() {
            for j in (i + 1)..self.n() {
                best = best.min((self.lambdas[i] - self.lambdas[j]).norm());
            }
        }
        best / scale
    }

    pub fn to_pair(&self, tol: &Tolerances) -> Result<Member> {
        let separation = self.relative_separation();
        if !(separation > tol.sep_tol) {
            return Err(Error::EigenvalueCollision { separation });
        }
        let n = self.n();
        let x = CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.lambdas));
        let y = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.alphas[i]
            } else {
                (self.lambdas[i] - self.lambdas[j]).inv()
            }
        });
        // [X, Y] + id is the all-ones matrix by construction.
        Ok(Member::assume(MatrixPair::new(x, y)?))
    }
}

/// Options for [`sample`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOptions {
    /// Conjugate each chart point by a random `G` to leave the canonical frame.
    pub conjugate: bool,
    /// Upper bound on `cond(G)` for the random conjugator.
    pub max_cond: f64,
    /// Rejections allowed per requested sample before giving up.
    pub max_rejections: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            conjugate: true,
            max_cond: 1e2,
            max_rejections: 1000,
        }
    }
}

/// Standard complex Gaussian: real and imaginary parts `N(0, 1/2)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

pub fn random_wilson_point<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    tol: &Tolerances,
    max_rejections: usize,
) -> Result<WilsonChartPoint> {
    for _ in 0..=max_rejections {
        let lambdas: Vec<C64> = (0..n).map(|_| complex_gaussian(rng)).collect();
        let alphas: Vec<C64> = (0..n).map(|_| complex_gaussian(rng)).collect();
        let w = WilsonChartPoint::new(lambdas, alphas)?;
        if w.relative_separation() > tol.sep_tol {
            return Ok(w);
        }
    }
    Err(Error::SamplingExhausted {
        attempts: max_rejections + 1,
    })
}

/// Complex-Gaussian `n × n` matrix with condition number at most `max_cond`.
pub fn random_conjugator<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    max_cond: f64,
    max_rejections: usize,
) -> Result<CMatrix> {
    for _ in 0..=max_rejections {
        let g = CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
        if linalg::condition_number(&g) <= max_cond {
            return Ok(g);
        }
    }
    Err(Error::SamplingExhausted {
        attempts: max_rejections + 1,
    })
}

/// Deterministic generic members of `𝒞̃ₙ` drawn through the Wilson chart.
///
/// Only the distinct-eigenvalue chart is covered.
pub fn sample(
    n: usize,
    count: usize,
    seed: u64,
    tol: &Tolerances,
    opts: &SampleOptions,
) -> Result<Vec<Member>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let w = random_wilson_point(&mut rng, n, tol, opts.max_rejections)?;
        let p = w.to_pair(tol)?;
        let p = if opts.conjugate {
            let g = random_conjugator(&mut rng, n, opts.max_cond, opts.max_rejections)?;
            p.conjugate(&g, tol)?
        } else {
            p
        };
        out.push(p);
    }
    Ok(out)
}
