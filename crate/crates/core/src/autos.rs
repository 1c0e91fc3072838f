//! Explicit automorphisms of `𝒞ₙ` and a program engine composing them.
//!
//! Every map here commutes with simultaneous conjugation and leaves
//! `[X, Y]` unchanged (or, for the `SL₂` action, scales it by `det A = 1`),
//! so members map to members.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::fspec::FSpec;
use crate::linalg::{self, c64, CMatrix, C64};
use crate::pair::{complex_gaussian, MatrixPair, Member};
use crate::tol::Tolerances;

/// Which matrix a Calogero–Moser flow moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowDirection {
    /// `(X, Y) ↦ (X, Y + t·p(X))`.
    Y,
    /// `(X, Y) ↦ (X + t·q(Y), Y)`.
    X,
}

/// The one-parameter group a shear or overshear is built on:
/// `φ_τ` is the Calogero–Moser flow in `direction` with polynomial `poly`
/// at time `τ·scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseFlow {
    pub direction: FlowDirection,
    pub poly: Vec<C64>,
    pub scale: C64,
}

impl BaseFlow {
    pub fn new(direction: FlowDirection, poly: Vec<C64>) -> Self {
        Self {
            direction,
            poly,
            scale: c64(1.0, 0.0),
        }
    }

    pub fn flow(&self, p: &MatrixPair, tau: C64) -> Result<MatrixPair> {
        cm_flow(p, self.direction, &self.poly, tau * self.scale)
    }
}

fn cm_flow(p: &MatrixPair, direction: FlowDirection, poly: &[C64], t: C64) -> Result<MatrixPair> {
    match direction {
        FlowDirection::Y => {
            let shift = linalg::poly_eval(poly, p.x()) * t;
            MatrixPair::new(p.x().clone(), p.y() + shift)
        }
        FlowDirection::X => {
            let shift = linalg::poly_eval(poly, p.y()) * t;
            MatrixPair::new(p.x() + shift, p.y().clone())
        }
    }
}

pub fn apply_cm_flow_y(p: &Member, poly: &[C64], t: C64) -> Result<Member> {
    cm_flow(p, FlowDirection::Y, poly, t).map(Member::assume)
}

pub fn apply_cm_flow_x(p: &Member, poly: &[C64], t: C64) -> Result<Member> {
    cm_flow(p, FlowDirection::X, poly, t).map(Member::assume)
}

pub type Sl2Matrix = [[C64; 2]; 2];

pub fn sl2_det(a: &Sl2Matrix) -> C64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Inverse of a unimodular 2×2 matrix.
pub fn sl2_inverse(a: &Sl2Matrix) -> Sl2Matrix {
    [[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]]
}

pub fn sl2_mul(a: &Sl2Matrix, b: &Sl2Matrix) -> Sl2Matrix {
    let mut out = [[c64(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn check_unimodular(a: &Sl2Matrix, tol: &Tolerances) -> Result<()> {
    let deviation = (sl2_det(a) - c64(1.0, 0.0)).norm();
    if deviation < tol.unimodular_tol && a.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonUnimodular { deviation })
    }
}

/// `(X, Y) ↦ (a₁₁X + a₁₂Y, a₂₁X + a₂₂Y)`.
pub fn apply_sl2(p: &Member, a: &Sl2Matrix, tol: &Tolerances) -> Result<Member> {
    check_unimodular(a, tol)?;
    let x = p.x() * a[0][0] + p.y() * a[0][1];
    let y = p.x() * a[1][0] + p.y() * a[1][1];
    MatrixPair::new(x, y).map(Member::assume)
}

/// `(X, Y) ↦ (Yᵀ, Xᵀ)`.
pub fn apply_transpose_swap(p: &Member) -> Member {
    Member::assume(
        MatrixPair::new(linalg::transpose(p.y()), linalg::transpose(p.x()))
            .expect("transpose of a finite square pair"),
    )
}

/// `ε(ζ) = (e^ζ − 1)/ζ`, by its power series near zero.
pub fn eval_epsilon(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        // Σ_{k≥1} ζ^{k−1}/k!; eight terms reach machine precision for |ζ| < 10⁻³.
        let mut term = c64(1.0, 0.0);
        let mut sum = term;
        for k in 2..=8 {
            term = term * z / (k as f64);
            sum += term;
        }
        sum
    } else {
        (z.exp() - c64(1.0, 0.0)) / z
    }
}

/// Quadratic least-squares fit of `τ ↦ f(φ_τ(p))` on `τ ∈ {−1, −½, 0, ½, 1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowProfile {
    /// Fitted value at `τ = 0`.
    pub value: C64,
    /// `Θf` at `p`.
    pub slope: C64,
    pub curvature: C64,
    /// Largest deviation of the samples from the fit.
    pub residual: f64,
    /// `max(1, max |f|)` over the samples, the scale for relative tests.
    pub scale: f64,
}

const PROFILE_NODES: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

impl FlowProfile {
    pub fn measure(p: &MatrixPair, base: &BaseFlow, f: &FSpec) -> Result<Self> {
        let mut values = [c64(0.0, 0.0); 5];
        for (v, &tau) in values.iter_mut().zip(PROFILE_NODES.iter()) {
            *v = f.eval(&base.flow(p, c64(tau, 0.0))?)?;
        }
        // Normal equations for symmetric nodes: Στ = Στ³ = 0, Στ² = 5/2, Στ⁴ = 17/8.
        let s0: C64 = values.iter().sum();
        let s1: C64 = values.iter().zip(PROFILE_NODES).map(|(v, t)| v * t).sum();
        let s2: C64 = values.iter().zip(PROFILE_NODES).map(|(v, t)| v * (t * t)).sum();
        let det = 5.0 * 2.125 - 2.5 * 2.5;
        let value = (s0 * 2.125 - s2 * 2.5) / det;
        let curvature = (s2 * 5.0 - s0 * 2.5) / det;
        let slope = s1 / 2.5;
        let residual = values
            .iter()
            .zip(PROFILE_NODES)
            .map(|(v, t)| (v - (value + slope * t + curvature * (t * t))).norm())
            .fold(0.0, f64::max);
        let scale = values.iter().map(|v| v.norm()).fold(1.0, f64::max);
        Ok(Self {
            value,
            slope,
            curvature,
            residual,
            scale,
        })
    }

    pub fn is_constant(&self, rel_tol: f64) -> bool {
        let bound = rel_tol * self.scale;
        self.slope.norm() <= bound && self.is_affine(rel_tol)
    }

    pub fn is_affine(&self, rel_tol: f64) -> bool {
        let bound = rel_tol * self.scale;
        self.curvature.norm() <= bound && self.residual <= bound
    }
}

/// Flow of the shear `f·Θ` at time `t`: `φ_{t·f(p)}(p)`. Requires `Θf = 0` at `p`.
pub fn apply_shear(p: &Member, base: &BaseFlow, f: &FSpec, t: C64, tol: &Tolerances) -> Result<Member> {
    let profile = FlowProfile::measure(p, base, f)?;
    if !profile.is_constant(tol.flow_fit_tol) {
        return Err(Error::NotInvariant {
            slope: profile.slope.norm(),
            curvature: profile.curvature.norm(),
        });
    }
    let value = f.eval(p)?;
    base.flow(p, t * value).map(Member::assume)
}

/// Flow of the overshear `f·Θ` at time `t`: `φ_{ε(t·Θf)·t·f(p)}(p)`.
/// Requires `Θ²f = 0` and `Θf ≠ 0` along the base flow at `p`.
pub fn apply_overshear(p: &Member, base: &BaseFlow, f: &FSpec, t: C64, tol: &Tolerances) -> Result<Member> {
    let profile = FlowProfile::measure(p, base, f)?;
    if profile.is_constant(tol.flow_fit_tol) {
        return Err(Error::NotDegreeOne(
            "Θf vanishes at this point; apply it as a shear".into(),
        ));
    }
    if !profile.is_affine(tol.flow_fit_tol) {
        return Err(Error::NotDegreeOne(format!(
            "f is not affine along the base flow (curvature {:e}, residual {:e})",
            profile.curvature.norm(),
            profile.residual
        )));
    }
    let value = f.eval(p)?;
    let tau = eval_epsilon(t * profile.slope) * t * value;
    base.flow(p, tau).map(Member::assume)
}

#[derive(Debug, Clone, PartialEq)]
pub enum AutoStep {
    CmFlowY { poly: Vec<C64>, t: C64 },
    CmFlowX { poly: Vec<C64>, t: C64 },
    Sl2 { a: Sl2Matrix },
    TransposeSwap,
    Shear { base: BaseFlow, f: FSpec, t: C64 },
    Overshear { base: BaseFlow, f: FSpec, t: C64 },
}

impl AutoStep {
    pub fn kind(&self) -> &'static str {
        match self {
            AutoStep::CmFlowY { .. } => "cm_flow_Y",
            AutoStep::CmFlowX { .. } => "cm_flow_X",
            AutoStep::Sl2 { .. } => "sl2",
            AutoStep::TransposeSwap => "transpose_swap",
            AutoStep::Shear { .. } => "shear",
            AutoStep::Overshear { .. } => "overshear",
        }
    }

    pub fn apply(&self, p: &Member, tol: &Tolerances) -> Result<Member> {
        match self {
            AutoStep::CmFlowY { poly, t } => apply_cm_flow_y(p, poly, *t),
            AutoStep::CmFlowX { poly, t } => apply_cm_flow_x(p, poly, *t),
            AutoStep::Sl2 { a } => apply_sl2(p, a, tol),
            AutoStep::TransposeSwap => Ok(apply_transpose_swap(p)),
            AutoStep::Shear { base, f, t } => apply_shear(p, base, f, *t, tol),
            AutoStep::Overshear { base, f, t } => apply_overshear(p, base, f, *t, tol),
        }
    }

    /// The step undoing this one. Overshear flows are one-parameter groups in
    /// `t`, so negating `t` inverts them as well.
    pub fn inverse(&self) -> AutoStep {
        match self {
            AutoStep::CmFlowY { poly, t } => AutoStep::CmFlowY {
                poly: poly.clone(),
                t: -t,
            },
            AutoStep::CmFlowX { poly, t } => AutoStep::CmFlowX {
                poly: poly.clone(),
                t: -t,
            },
            AutoStep::Sl2 { a } => AutoStep::Sl2 { a: sl2_inverse(a) },
            AutoStep::TransposeSwap => AutoStep::TransposeSwap,
            AutoStep::Shear { base, f, t } => AutoStep::Shear {
                base: base.clone(),
                f: f.clone(),
                t: -t,
            },
            AutoStep::Overshear { base, f, t } => AutoStep::Overshear {
                base: base.clone(),
                f: f.clone(),
                t: -t,
            },
        }
    }

    /// Static checks that do not depend on the point.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        match self {
            AutoStep::Sl2 { a } => check_unimodular(a, tol),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AutoProgram {
    pub steps: Vec<AutoStep>,
}

impl AutoProgram {
    pub fn new(steps: Vec<AutoStep>) -> Self {
        Self { steps }
    }

    /// Reversed steps, each inverted.
    pub fn inverse(&self) -> AutoProgram {
        AutoProgram {
            steps: self.steps.iter().rev().map(AutoStep::inverse).collect(),
        }
    }

    /// Whether the identity-component status of the program is unknown.
    pub fn contains_transpose_swap(&self) -> bool {
        self.steps.iter().any(|s| matches!(s, AutoStep::TransposeSwap))
    }

    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        for (index, step) in self.steps.iter().enumerate() {
            step.validate(tol).map_err(|e| e.at_step(index))?;
        }
        Ok(())
    }
}

/// Output of [`run_program`]: the final point and `σ₂/σ₁` of the defect after every step.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramRun {
    pub result: Member,
    pub trace: Vec<f64>,
}

pub fn run_program(p: &Member, prog: &AutoProgram, tol: &Tolerances) -> Result<ProgramRun> {
    prog.validate(tol)?;
    let mut current = p.clone();
    let mut trace = Vec::with_capacity(prog.steps.len());
    for (index, step) in prog.steps.iter().enumerate() {
        current = step.apply(&current, tol).map_err(|e| e.at_step(index))?;
        let m = current.membership(tol).map_err(|e| e.at_step(index))?;
        trace.push(m.ratio);
    }
    Ok(ProgramRun { result: current, trace })
}

/// Random element of `SL₂(ℂ)` with complex-Gaussian entries of size `scale`.
pub fn random_sl2<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Sl2Matrix {
    loop {
        let a = complex_gaussian(rng) * scale;
        let b = complex_gaussian(rng) * scale;
        let c = complex_gaussian(rng) * scale;
        if a.norm() > 0.1 * scale {
            let d = (c64(1.0, 0.0) + b * c) / a;
            return [[a, b], [c, d]];
        }
    }
}

/// `(Xᵏ)` flow polynomial: `t·xᵏ` has coefficient vector `e_k`.
pub fn monomial(k: usize) -> Vec<C64> {
    let mut v = alloc::vec![c64(0.0, 0.0); k + 1];
    v[k] = c64(1.0, 0.0);
    v
}

/// `‖[X′, Y′] − [X, Y]‖_F`.
pub fn commutator_drift(before: &MatrixPair, after: &MatrixPair) -> f64 {
    let c0: CMatrix = linalg::commutator(before.x(), before.y());
    let c1: CMatrix = linalg::commutator(after.x(), after.y());
    linalg::frobenius(&(c1 - c0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::eigen_map;
    use crate::linalg::min_cost_matching;
    use crate::pair::{random_conjugator, sample, SampleOptions, WilsonChartPoint};
    use alloc::vec;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn wilson_01() -> Member {
        WilsonChartPoint::new(vec![c64(0.0, 0.0), c64(1.0, 0.0)], vec![c64(0.0, 0.0); 2])
            .unwrap()
            .to_pair(&tol())
            .unwrap()
    }

    fn cm(n: usize, e: &[f64]) -> CMatrix {
        CMatrix::from_row_slice(n, n, &e.iter().map(|&a| c64(a, 0.0)).collect::<Vec<_>>())
    }

    fn members(n: usize, count: usize, seed: u64) -> Vec<Member> {
        sample(n, count, seed, &tol(), &SampleOptions::default()).unwrap()
    }

    #[test]
    fn constant_flow_shifts_y_eigenvalues() {
        let p = members(3, 1, 5).remove(0);
        let t = c64(0.7, -1.2);
        let q = apply_cm_flow_y(&p, &[c64(1.0, 0.0)], t).unwrap();
        let (_, before) = eigen_map(&p).unwrap();
        let (_, after) = eigen_map(&q).unwrap();
        let shifted: Vec<C64> = before.iter().map(|z| z + t).collect();
        assert!(min_cost_matching(&shifted, &after).max_cost < 1e-10);
    }

    #[test]
    fn linear_flow_on_wilson_01() {
        let q = apply_cm_flow_y(&wilson_01(), &monomial(1), c64(2.0, 0.0)).unwrap();
        assert_eq!(*q.y(), cm(2, &[0.0, -1.0, 1.0, 2.0]));
        assert_eq!(q.commutator_defect(), cm(2, &[1.0; 4]));
    }

    #[test]
    fn flow_then_reverse_is_exact_on_chart() {
        let p = wilson_01();
        let poly = vec![c64(0.5, 0.0), c64(-1.0, 2.0), c64(0.25, 0.0)];
        let q = apply_cm_flow_y(&p, &poly, c64(1.5, 0.5)).unwrap();
        let r = apply_cm_flow_y(&q, &poly, c64(-1.5, -0.5)).unwrap();
        assert_eq!(r, p);
        assert_eq!(apply_cm_flow_x(&p, &poly, c64(0.0, 0.0)).unwrap(), p);
    }

    #[test]
    fn flows_in_x_and_y_do_not_commute() {
        let p = wilson_01();
        let x_then_y = apply_cm_flow_y(&apply_cm_flow_x(&p, &monomial(1), c64(1.0, 0.0)).unwrap(), &monomial(1), c64(1.0, 0.0)).unwrap();
        let y_then_x = apply_cm_flow_x(&apply_cm_flow_y(&p, &monomial(1), c64(1.0, 0.0)).unwrap(), &monomial(1), c64(1.0, 0.0)).unwrap();
        assert!(x_then_y.max_entry_distance(&y_then_x) > 0.5);
    }

    #[test]
    fn sl2_unipotents_are_linear_flows() {
        let p = members(3, 1, 9).remove(0);
        let t = c64(0.3, 0.8);
        let upper = apply_sl2(&p, &[[c64(1.0, 0.0), t], [c64(0.0, 0.0), c64(1.0, 0.0)]], &tol()).unwrap();
        assert!(upper.max_entry_distance(&apply_cm_flow_x(&p, &monomial(1), t).unwrap()) < 1e-13 * p.scale());
        let lower = apply_sl2(&p, &[[c64(1.0, 0.0), c64(0.0, 0.0)], [t, c64(1.0, 0.0)]], &tol()).unwrap();
        assert!(lower.max_entry_distance(&apply_cm_flow_y(&p, &monomial(1), t).unwrap()) < 1e-13 * p.scale());
        let neg = apply_sl2(&p, &[[c64(-1.0, 0.0), c64(0.0, 0.0)], [c64(0.0, 0.0), c64(-1.0, 0.0)]], &tol()).unwrap();
        assert_eq!(*neg.x(), -p.x());
        assert_eq!(neg.commutator_defect(), p.commutator_defect());
    }

    #[test]
    fn sl2_rejects_non_unimodular() {
        let a = [[c64(2.0, 0.0), c64(0.0, 0.0)], [c64(0.0, 0.0), c64(1.0, 0.0)]];
        assert!(matches!(apply_sl2(&wilson_01(), &a, &tol()), Err(Error::NonUnimodular { .. })));
    }

    #[test]
    fn transpose_swap_is_involution() {
        let p = members(4, 1, 2).remove(0);
        let q = apply_transpose_swap(&p);
        assert!(q.is_member(&tol()).unwrap());
        assert_eq!(apply_transpose_swap(&q), p);
        let one = MatrixPair::new(cm(1, &[2.0]), cm(1, &[-3.0])).unwrap().into_member(&tol()).unwrap();
        let swapped = apply_transpose_swap(&one);
        assert_eq!(swapped.x()[(0, 0)], c64(-3.0, 0.0));
        assert_eq!(swapped.y()[(0, 0)], c64(2.0, 0.0));
    }

    #[test]
    fn epsilon_values() {
        assert_eq!(eval_epsilon(c64(0.0, 0.0)), c64(1.0, 0.0));
        let ln2 = core::f64::consts::LN_2;
        assert!((eval_epsilon(c64(ln2, 0.0)) - c64(1.0 / ln2, 0.0)).norm() < 1e-15);
        assert!((eval_epsilon(c64(ln2, 0.0)).re - 1.442_695_040_888_963_4).abs() < 1e-14);
        // Series and closed form agree across the switch radius.
        let z = c64(0.0007, 0.0007);
        let closed = (z.exp() - c64(1.0, 0.0)) / z;
        assert!((eval_epsilon(z) - closed).norm() < 1e-12);
    }

    #[test]
    fn shear_example_matches_closed_form() {
        let p = members(3, 1, 4).remove(0);
        let base = BaseFlow::new(FlowDirection::Y, vec![c64(1.0, 0.0)]);
        let f = FSpec::parse("trX + detX").unwrap();
        let t = c64(0.4, 0.1);
        let q = apply_shear(&p, &base, &f, t, &tol()).unwrap();
        let shift = (p.x().trace() + linalg::determinant(p.x())) * t;
        let expected = p.y() + linalg::identity(3) * shift;
        assert!(linalg::max_abs(&(q.y() - expected)) < 1e-12 * p.scale());
        assert_eq!(q.x(), p.x());
    }

    #[test]
    fn shear_by_one_is_the_base_flow() {
        let p = members(2, 1, 8).remove(0);
        let base = BaseFlow::new(FlowDirection::X, vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]);
        let t = c64(-0.6, 0.2);
        let q = apply_shear(&p, &base, &FSpec::parse("1").unwrap(), t, &tol()).unwrap();
        assert_eq!(q, apply_cm_flow_x(&p, &base.poly, t).unwrap());
    }

    #[test]
    fn eps_squared_shear_is_the_non_cm_flow() {
        let p = members(2, 1, 13).remove(0);
        let base = BaseFlow::new(FlowDirection::Y, vec![c64(1.0, 0.0)]);
        let f = FSpec::parse("discriminant_Y").unwrap();
        let t = c64(0.25, -0.5);
        let q = apply_shear(&p, &base, &f, t, &tol()).unwrap();
        let (_, mu) = eigen_map(&p).unwrap();
        let eps = mu[1] - mu[0];
        let expected = p.y() + linalg::identity(2) * (eps * eps * t);
        assert!(linalg::max_abs(&(q.y() - expected)) < 1e-11 * p.scale());
    }

    #[test]
    fn shear_rejects_non_invariant_function() {
        let base = BaseFlow::new(FlowDirection::Y, vec![c64(1.0, 0.0)]);
        let f = FSpec::parse("trY").unwrap();
        assert!(matches!(
            apply_shear(&wilson_01(), &base, &f, c64(1.0, 0.0), &tol()),
            Err(Error::NotInvariant { .. })
        ));
    }

    #[test]
    fn overshear_contract_boundaries() {
        let p = members(2, 1, 21).remove(0);
        let base = BaseFlow::new(FlowDirection::Y, vec![c64(1.0, 0.0)]);
        let invariant = FSpec::parse("trX").unwrap();
        assert!(matches!(
            apply_overshear(&p, &base, &invariant, c64(1.0, 0.0), &tol()),
            Err(Error::NotDegreeOne(_))
        ));
        let quadratic = FSpec::parse("trY^2").unwrap();
        assert!(matches!(
            apply_overshear(&p, &base, &quadratic, c64(1.0, 0.0), &tol()),
            Err(Error::NotDegreeOne(_))
        ));
        let f = FSpec::parse("trY").unwrap();
        assert_eq!(apply_overshear(&p, &base, &f, c64(0.0, 0.0), &tol()).unwrap(), p);
    }

    #[test]
    fn overshear_of_trace_has_closed_form_time() {
        let n = 3;
        let p = members(n, 1, 17).remove(0);
        let base = BaseFlow::new(FlowDirection::Y, vec![c64(1.0, 0.0)]);
        let f = FSpec::parse("trY").unwrap();
        let t = c64(0.3, 0.2);
        let q = apply_overshear(&p, &base, &f, t, &tol()).unwrap();
        let tau = eval_epsilon(t * n as f64) * t * p.y().trace();
        let expected = p.y() + linalg::identity(n) * tau;
        assert!(linalg::max_abs(&(q.y() - expected)) < 1e-11 * (1.0 + p.scale()));
    }

    #[test]
    fn program_inverse_round_trip() {
        let p = members(3, 1, 23).remove(0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let prog = AutoProgram::new(vec![
            AutoStep::CmFlowY { poly: vec![c64(0.1, 0.0), c64(0.5, 0.2)], t: c64(0.7, 0.0) },
            AutoStep::Sl2 { a: random_sl2(&mut rng, 1.0) },
            AutoStep::TransposeSwap,
            AutoStep::Shear {
                base: BaseFlow::new(FlowDirection::Y, vec![c64(1.0, 0.0)]),
                f: FSpec::parse("shear_example").unwrap(),
                t: c64(0.2, 0.0),
            },
            AutoStep::Overshear {
                base: BaseFlow::new(FlowDirection::X, vec![c64(1.0, 0.0)]),
                f: FSpec::parse("trX").unwrap(),
                t: c64(0.3, -0.1),
            },
            AutoStep::CmFlowX { poly: monomial(2), t: c64(-0.2, 0.1) },
        ]);
        assert!(prog.contains_transpose_swap());
        let run = run_program(&p, &prog, &tol()).unwrap();
        assert_eq!(run.trace.len(), 6);
        assert!(run.trace.iter().all(|&r| r < 1e-8));
        let back = run_program(&run.result, &prog.inverse(), &tol()).unwrap();
        assert!(back.result.max_entry_distance(&p) < 1e-9 * (1.0 + p.scale()));
        assert_eq!(run_program(&p, &AutoProgram::default(), &tol()).unwrap().result, p);
    }

    #[test]
    fn program_errors_carry_step_index() {
        let prog = AutoProgram::new(vec![
            AutoStep::TransposeSwap,
            AutoStep::Shear {
                base: BaseFlow::new(FlowDirection::Y, vec![c64(1.0, 0.0)]),
                f: FSpec::parse("trY").unwrap(),
                t: c64(1.0, 0.0),
            },
        ]);
        match run_program(&wilson_01(), &prog, &tol()) {
            Err(Error::Step { index: 1, inner }) => assert!(matches!(*inner, Error::NotInvariant { .. })),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn epsilon_identity(re in -5.0..5.0f64, im in -5.0..5.0f64) {
            let z = c64(re, im);
            let lhs = eval_epsilon(z) * z + c64(1.0, 0.0);
            prop_assert!((lhs - z.exp()).norm() <= 1e-12 * z.exp().norm().max(1.0));
        }

        #[test]
        fn flow_group_law(seed in any::<u64>(), n in 1usize..=4) {
            let p = members(n, 1, seed).remove(0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
            let poly: Vec<C64> = (0..=n).map(|_| complex_gaussian(&mut rng) * 0.5).collect();
            let (s, t) = (complex_gaussian(&mut rng) * 0.5, complex_gaussian(&mut rng) * 0.5);
            let two = apply_cm_flow_x(&apply_cm_flow_x(&p, &poly, s).unwrap(), &poly, t).unwrap();
            let one = apply_cm_flow_x(&p, &poly, s + t).unwrap();
            prop_assert!(two.max_entry_distance(&one) <= 1e-10 * (1.0 + one.scale()));
        }

        #[test]
        fn overshear_group_law(seed in any::<u64>(), n in 1usize..=4) {
            let p = members(n, 1, seed).remove(0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
            let base = BaseFlow::new(FlowDirection::Y, vec![c64(1.0, 0.0)]);
            let f = FSpec::parse("trY").unwrap();
            let (s, t) = (complex_gaussian(&mut rng) * 0.3, complex_gaussian(&mut rng) * 0.3);
            let step = |q: &Member, u: C64| apply_overshear(q, &base, &f, u, &tol()).unwrap();
            let two = step(&step(&p, s), t);
            let one = step(&p, s + t);
            prop_assert!(two.max_entry_distance(&one) <= 1e-9 * (1.0 + one.scale()));
        }

        #[test]
        fn sl2_respects_multiplication(seed in any::<u64>(), n in 1usize..=4) {
            let p = members(n, 1, seed).remove(0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(3));
            let a = random_sl2(&mut rng, 1.0);
            let b = random_sl2(&mut rng, 1.0);
            let tol = Tolerances { unimodular_tol: 1e-9, ..tol() };
            let seq = apply_sl2(&apply_sl2(&p, &a, &tol).unwrap(), &b, &tol).unwrap();
            let prod = apply_sl2(&p, &sl2_mul(&b, &a), &tol).unwrap();
            prop_assert!(seq.max_entry_distance(&prod) <= 1e-10 * (1.0 + prod.scale()));
        }

        #[test]
        fn y_flow_keeps_x_spectrum_and_x_flow_keeps_y_spectrum(seed in any::<u64>(), n in 1usize..=5) {
            let p = members(n, 1, seed).remove(0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(99));
            let poly: Vec<C64> = (0..=2).map(|_| complex_gaussian(&mut rng)).collect();
            let t = complex_gaussian(&mut rng);
            let (ex, ey) = eigen_map(&p).unwrap();
            let (ex2, _) = eigen_map(&apply_cm_flow_y(&p, &poly, t).unwrap()).unwrap();
            let (_, ey2) = eigen_map(&apply_cm_flow_x(&p, &poly, t).unwrap()).unwrap();
            let scale = 1.0 + p.scale();
            prop_assert!(min_cost_matching(&ex, &ex2).max_cost <= 1e-8 * scale);
            prop_assert!(min_cost_matching(&ey, &ey2).max_cost <= 1e-8 * scale);
        }

        #[test]
        fn programs_commute_with_conjugation(seed in any::<u64>(), n in 1usize..=3) {
            use crate::invariants::fingerprint;
            let p = members(n, 1, seed).remove(0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(7));
            let g = random_conjugator(&mut rng, n, 1e2, 100).unwrap();
            let q = p.conjugate(&g, &tol()).unwrap();
            let prog = AutoProgram::new(vec![
                AutoStep::CmFlowY { poly: vec![c64(0.0, 0.0), complex_gaussian(&mut rng) * 0.5], t: c64(1.0, 0.0) },
                AutoStep::Sl2 { a: random_sl2(&mut rng, 0.8) },
                AutoStep::CmFlowX { poly: vec![complex_gaussian(&mut rng), c64(0.0, 0.0), c64(0.2, 0.0)], t: c64(0.5, 0.0) },
            ]);
            let tol = Tolerances { unimodular_tol: 1e-9, ..tol() };
            let a = fingerprint(&run_program(&p, &prog, &tol).unwrap().result, 3).unwrap();
            let b = fingerprint(&run_program(&q, &prog, &tol).unwrap().result, 3).unwrap();
            prop_assert!(a.max_relative_difference(&b) <= 1e-6, "diff {}", a.max_relative_difference(&b));
        }
    }
}
