//! Certificate that `Θ₁ = ∂/∂λ` and `Θ₂ = ∂/∂x₁₁` form a compatible pair
//! with degree-one element `a = 2λ + ε`.
//!
//! Derivatives are replaced by evaluation along the flows `ψ_s` and `φ_t`:
//! a function is in `ker Θ` iff it is constant along the flow, and `Θ(a)` is a
//! nonzero constant iff `a(ψ_s c) − a(c) = 2s` for every step.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{c64, C64};
use crate::pair::complex_gaussian;

use super::{gaussian_rational, Cm2Coords, Cm2Flow, Cm2Scalar, GaussianRational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    ExactRational,
    Float,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::ExactRational => "exact_rational",
            Backend::Float => "float",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    /// `Θ₂(a) = 0`.
    SecondKillsA,
    /// `Θ₁(a) = 2 ≠ 0` and `Θ₁(Θ₁(a)) = 0`.
    FirstDegreeOne,
    /// `δ², ε², w, 2x₁₁ + δ ∈ ker Θ₁` and `δ², ε², w, 2λ + ε ∈ ker Θ₂`.
    KernelMembership,
    /// `m·(2x₁₁ + δ)·(2λ + ε)` factors through `ker Θ₁ · ker Θ₂`.
    ProductIdeal,
}

impl Clause {
    pub const ALL: [Clause; 4] = [
        Clause::SecondKillsA,
        Clause::FirstDegreeOne,
        Clause::KernelMembership,
        Clause::ProductIdeal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Clause::SecondKillsA => "theta2_a_zero",
            Clause::FirstDegreeOne => "theta1_a_degree_one",
            Clause::KernelMembership => "kernel_membership",
            Clause::ProductIdeal => "product_ideal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClauseFailure {
    /// Index into the point list.
    pub point: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClauseReport {
    pub clause: Clause,
    pub passed: bool,
    /// Largest residual magnitude seen; exactly 0 on an exact pass.
    pub max_residual: f64,
    pub checks: usize,
    pub failure: Option<ClauseFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompatCertificate {
    pub backend: Backend,
    pub points: usize,
    pub clauses: Vec<ClauseReport>,
    pub passed: bool,
}

/// 125 Gaussian-rational points on the variety: five gaps `ε` (one of them
/// zero), five `x₂₁` values and five `(λ, x₁₁)` shifts. For `ε ≠ 0`, `δ` is
/// solved from the constraint; for `ε = 0`, `x₂₁ = ±1` and `δ` runs over
/// the `x₂₁` axis instead.
pub fn exact_grid() -> Vec<Cm2Coords<GaussianRational>> {
    let r = |n: i64, d: i64| gaussian_rational(n, d, 0, 1);
    let eps_axis = [r(0, 1), r(1, 1), r(-2, 1), r(3, 2), gaussian_rational(1, 1, 1, 2)];
    let x21_axis = [r(1, 1), r(-1, 1), r(2, 1), r(-1, 3), gaussian_rational(1, 2, -3, 1)];
    let shifts = [
        (r(0, 1), r(0, 1)),
        (r(1, 1), r(-1, 1)),
        (r(-1, 2), r(2, 1)),
        (gaussian_rational(0, 1, 1, 1), r(3, 1)),
        (gaussian_rational(2, 1, -1, 1), r(-1, 3)),
    ];
    let one = GaussianRational::from_i64(1);
    let mut out = Vec::with_capacity(125);
    for eps in &eps_axis {
        for (i, x21) in x21_axis.iter().enumerate() {
            for (lambda, x11) in &shifts {
                let (x21, delta) = if eps.is_zero() {
                    let sign = if i % 2 == 0 { one.clone() } else { -one.clone() };
                    (sign, x21.clone())
                } else {
                    let delta = (one.clone() - x21.clone() * x21.clone()) / (eps.clone() * x21.clone());
                    (x21.clone(), delta)
                };
                out.push(Cm2Coords::new(lambda.clone(), eps.clone(), x11.clone(), x21, delta));
            }
        }
    }
    out
}

/// Random floating-point points on the variety with `ε ≠ 0`.
pub fn float_points(seed: u64, count: usize) -> Vec<Cm2Coords<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let eps = complex_gaussian(&mut rng);
        let x21 = complex_gaussian(&mut rng);
        if eps.norm() < 1e-2 || x21.norm() < 1e-2 {
            continue;
        }
        let delta = (c64(1.0, 0.0) - x21 * x21) / (eps * x21);
        out.push(Cm2Coords::new(
            complex_gaussian(&mut rng),
            eps,
            complex_gaussian(&mut rng),
            x21,
            delta,
        ));
    }
    out
}

struct Tally {
    clause: Clause,
    max_residual: f64,
    checks: usize,
    failure: Option<ClauseFailure>,
}

impl Tally {
    fn new(clause: Clause) -> Self {
        Self {
            clause,
            max_residual: 0.0,
            checks: 0,
            failure: None,
        }
    }

    fn record<T: Cm2Scalar>(&mut self, point: usize, what: &str, residual: &T, scale: f64, rel_tol: f64) {
        self.checks += 1;
        self.max_residual = self.max_residual.max(residual.magnitude());
        if self.failure.is_none() && !residual.negligible(scale, rel_tol) {
            self.failure = Some(ClauseFailure {
                point,
                detail: format!("{what}: residual {:e}", residual.magnitude()),
            });
        }
    }

    fn fail(&mut self, point: usize, detail: String) {
        self.checks += 1;
        if self.failure.is_none() {
            self.failure = Some(ClauseFailure { point, detail });
        }
    }

    fn finish(self) -> ClauseReport {
        ClauseReport {
            clause: self.clause,
            passed: self.failure.is_none() && self.checks > 0,
            max_residual: self.max_residual,
            checks: self.checks,
            failure: self.failure,
        }
    }
}

fn a_of<T: Cm2Scalar>(c: &Cm2Coords<T>) -> T {
    T::from_i64(2) * c.lambda.clone() + c.eps.clone()
}

fn b_of<T: Cm2Scalar>(c: &Cm2Coords<T>) -> T {
    T::from_i64(2) * c.x11.clone() + c.delta.clone()
}

fn w_of<T: Cm2Scalar>(c: &Cm2Coords<T>) -> Option<T> {
    if c.x21.is_zero() {
        None
    } else {
        Some(c.x21.clone() + T::one() / c.x21.clone())
    }
}

/// Functions claimed to lie in the kernel of the field generating `flow`.
fn kernel_functions<T: Cm2Scalar>(c: &Cm2Coords<T>, flow: Cm2Flow) -> Option<[(&'static str, T); 4]> {
    let w = w_of(c)?;
    let d2 = c.delta.clone() * c.delta.clone();
    let e2 = c.eps.clone() * c.eps.clone();
    let last = match flow {
        Cm2Flow::Psi => ("2x11+delta", b_of(c)),
        Cm2Flow::Phi => ("2lambda+eps", a_of(c)),
    };
    Some([("delta^2", d2), ("eps^2", e2), ("w", w), last])
}

/// Runs the four clauses over `points`, moving along each flow by every
/// entry of `steps`. Float residuals are compared relative to the point's
/// scale with `rel_tol`; exact residuals must vanish.
pub fn verify_compatible_pair_on<T: Cm2Scalar>(
    points: &[Cm2Coords<T>],
    steps: &[T],
    rel_tol: f64,
    backend: Backend,
) -> CompatCertificate {
    let mut second_kills = Tally::new(Clause::SecondKillsA);
    let mut degree_one = Tally::new(Clause::FirstDegreeOne);
    let mut kernels = Tally::new(Clause::KernelMembership);
    let mut ideal = Tally::new(Clause::ProductIdeal);
    let mut ideal_nonzero = false;
    let two = T::from_i64(2);

    for (idx, c) in points.iter().enumerate() {
        let scale = c.as_array().iter().map(|z| z.magnitude()).fold(1.0, f64::max);
        let on_variety = c.constraint();
        if !on_variety.negligible(c.constraint_scale(), rel_tol) {
            let detail = format!("point off the variety, residual {:e}", on_variety.magnitude());
            for t in [&mut second_kills, &mut degree_one, &mut kernels, &mut ideal] {
                t.fail(idx, detail.clone());
            }
            continue;
        }
        let a0 = a_of(c);
        let Some(k1) = kernel_functions(c, Cm2Flow::Psi) else {
            kernels.fail(idx, String::from("x21 vanishes"));
            continue;
        };
        let k2 = kernel_functions(c, Cm2Flow::Phi).expect("x21 checked");

        for s in steps {
            let phi = c.flow(Cm2Flow::Phi, s);
            let psi = c.flow(Cm2Flow::Psi, s);
            let psi2 = psi.flow(Cm2Flow::Psi, s);
            let step_scale = scale.max(s.magnitude());

            second_kills.record(idx, "a(phi_t) - a", &(a_of(&phi) - a0.clone()), step_scale, rel_tol);

            // Θ₁a = 2 everywhere: a(ψ_s) − a = 2s, and the second difference vanishes.
            let first = a_of(&psi) - a0.clone();
            degree_one.record(idx, "a(psi_s) - a - 2s", &(first.clone() - two.clone() * s.clone()), step_scale, rel_tol);
            let second = a_of(&psi2) - two.clone() * a_of(&psi) + a0.clone();
            degree_one.record(idx, "second difference of a along psi", &second, step_scale, rel_tol);
            if first.is_zero() {
                degree_one.fail(idx, String::from("theta1(a) vanishes"));
            }

            for (flowed, base, label) in [(&psi, &k1, "psi"), (&phi, &k2, "phi")] {
                let which = if label == "psi" { Cm2Flow::Psi } else { Cm2Flow::Phi };
                match kernel_functions(flowed, which) {
                    Some(moved) => {
                        for ((name, before), (_, after)) in base.iter().zip(moved.iter()) {
                            let what = format!("{name} along {label}");
                            let s2 = step_scale.max(before.magnitude());
                            kernels.record(idx, &what, &(after.clone() - before.clone()), s2, rel_tol);
                        }
                    }
                    None => kernels.fail(idx, format!("x21 vanishes along {label}")),
                }
            }

            // m·P = (m·(2x₁₁+δ))·(2λ+ε): left factor in ker Θ₁, right in ker Θ₂.
            let product = b_of(c) * a0.clone();
            if !product.is_zero() {
                ideal_nonzero = true;
            }
            for (name, m) in [("1", T::one()), ("delta^2", k1[0].1.clone()), ("eps^2", k1[1].1.clone()), ("w", k1[2].1.clone())] {
                let left = |p: &Cm2Coords<T>| m_at(name, p) * b_of(p);
                let m_scale = step_scale.max(m.magnitude()).max(product.magnitude());
                let factor_gap = left(c) * a0.clone() - m.clone() * product.clone();
                ideal.record(idx, &format!("{name}*P factorization"), &factor_gap, m_scale, rel_tol);
                ideal.record(idx, &format!("{name}*(2x11+delta) along psi"), &(left(&psi) - left(c)), m_scale, rel_tol);
                ideal.record(idx, "2lambda+eps along phi", &(a_of(&phi) - a0.clone()), m_scale, rel_tol);
            }
        }
    }
    if !ideal_nonzero {
        ideal.fail(0, String::from("(2x11+delta)(2lambda+eps) vanishes on every point"));
    }

    let clauses: Vec<ClauseReport> = [second_kills, degree_one, kernels, ideal]
        .into_iter()
        .map(Tally::finish)
        .collect();
    let passed = !points.is_empty() && clauses.iter().all(|c| c.passed);
    CompatCertificate {
        backend,
        points: points.len(),
        clauses,
        passed,
    }
}

fn m_at<T: Cm2Scalar>(name: &str, c: &Cm2Coords<T>) -> T {
    match name {
        "delta^2" => c.delta.clone() * c.delta.clone(),
        "eps^2" => c.eps.clone() * c.eps.clone(),
        "w" => w_of(c).unwrap_or_else(T::zero),
        _ => T::one(),
    }
}

/// The exact certificate on [`exact_grid`] with steps `1`, `−1/2` and `3 + i`.
pub fn verify_compatible_pair() -> CompatCertificate {
    let steps = [
        gaussian_rational(1, 1, 0, 1),
        gaussian_rational(-1, 2, 0, 1),
        gaussian_rational(3, 1, 1, 1),
    ];
    verify_compatible_pair_on(&exact_grid(), &steps, 0.0, Backend::ExactRational)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_lies_on_the_variety() {
        let grid = exact_grid();
        assert_eq!(grid.len(), 125);
        assert!(grid.iter().all(|c| c.constraint().is_zero() && !c.x21.is_zero()));
        assert!(grid.iter().any(|c| c.eps.is_zero()));
    }

    #[test]
    fn exact_certificate_passes() {
        let cert = verify_compatible_pair();
        assert!(cert.passed, "{cert:?}");
        assert_eq!(cert.clauses.len(), 4);
        for c in &cert.clauses {
            assert_eq!(c.max_residual, 0.0);
            assert!(c.checks > 0);
        }
    }

    #[test]
    fn a_is_linear_along_psi() {
        let c = &exact_grid()[37];
        for s in [gaussian_rational(5, 3, 0, 1), gaussian_rational(0, 1, -2, 1)] {
            let moved = c.flow(Cm2Flow::Psi, &s);
            assert_eq!(a_of(&moved), a_of(c) + GaussianRational::from_i64(2) * s);
            assert_eq!(a_of(&c.flow(Cm2Flow::Phi, &gaussian_rational(7, 1, 0, 1))), a_of(c));
        }
    }

    #[test]
    fn float_certificate_passes() {
        let steps = [c64(1.0, 0.0), c64(-0.5, 0.25)];
        let cert = verify_compatible_pair_on(&float_points(3, 200), &steps, 1e-10, Backend::Float);
        assert!(cert.passed, "{cert:?}");
    }

    #[test]
    fn off_variety_point_is_reported() {
        let mut grid = exact_grid();
        grid[7].x21 = gaussian_rational(5, 1, 0, 1);
        let cert = verify_compatible_pair_on(&grid, &[gaussian_rational(1, 1, 0, 1)], 0.0, Backend::ExactRational);
        assert!(!cert.passed);
        let failure = cert.clauses[0].failure.as_ref().unwrap();
        assert_eq!(failure.point, 7);
    }

    #[test]
    fn zero_step_cannot_certify_degree_one() {
        let cert = verify_compatible_pair_on(&exact_grid(), &[GaussianRational::from_i64(0)], 0.0, Backend::ExactRational);
        assert!(!cert.clauses[1].passed);
        assert!(cert.clauses[0].passed);
    }
}
