//! The explicit model of `𝒞₂`.
//!
//! Every class has a representative with `Y = [[λ, 1], [0, λ + ε]]` and
//! `X = [[x₁₁, 0], [x₂₁, x₁₁ + δ]]`, subject to
//! `x₂₁² + ε·δ·x₂₁ − 1 = 0`. Two involutions identify the representatives of
//! one class; the functions `δ²`, `ε²`, `2λ + ε`, `2x₁₁ + δ` and
//! `x₂₁ + 1/x₂₁` are invariant under both.
//!
//! Coordinates are generic over [`Cm2Scalar`] so the polynomial identities
//! can be checked exactly with Gaussian rationals.

mod canonical;
mod compat;

use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::Neg;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::{c64, C64};

pub use canonical::{cm2_to_pair, pair_to_cm2};
pub use compat::{
    exact_grid, float_points, verify_compatible_pair, verify_compatible_pair_on, Backend, Clause,
    ClauseFailure, ClauseReport, CompatCertificate,
};

/// `a + b·i` with `a, b ∈ ℚ`.
pub type GaussianRational = Complex<BigRational>;

/// Gaussian rational `(re_num/re_den) + (im_num/im_den)·i`.
pub fn gaussian_rational(re_num: i64, re_den: i64, im_num: i64, im_den: i64) -> GaussianRational {
    Complex::new(
        BigRational::new(BigInt::from(re_num), BigInt::from(re_den)),
        BigRational::new(BigInt::from(im_num), BigInt::from(im_den)),
    )
}

/// Scalars the coordinate identities are evaluated in.
pub trait Cm2Scalar: Clone + PartialEq + Debug + Num + Neg<Output = Self> {
    fn magnitude(&self) -> f64;

    /// Whether a residual counts as zero. Exact scalars ignore the tolerance.
    fn negligible(&self, scale: f64, rel_tol: f64) -> bool;

    fn from_i64(v: i64) -> Self;

    fn to_c64(&self) -> C64;
}

impl Cm2Scalar for C64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }

    fn negligible(&self, scale: f64, rel_tol: f64) -> bool {
        self.norm() <= rel_tol * scale.max(1.0)
    }

    fn from_i64(v: i64) -> Self {
        c64(v as f64, 0.0)
    }

    fn to_c64(&self) -> C64 {
        *self
    }
}

impl Cm2Scalar for GaussianRational {
    fn magnitude(&self) -> f64 {
        self.to_c64().norm()
    }

    fn negligible(&self, _scale: f64, _rel_tol: f64) -> bool {
        self.is_zero()
    }

    fn from_i64(v: i64) -> Self {
        Complex::new(BigRational::from_integer(BigInt::from(v)), BigRational::zero())
    }

    fn to_c64(&self) -> C64 {
        c64(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

/// The two `ℂ⁺`-actions: `φ_t` shifts `x₁₁`, `ψ_s` shifts `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cm2Flow {
    /// `(X + t·id, Y)`.
    Phi,
    /// `(X, Y + s·id)`.
    Psi,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cm2Coords<T = C64> {
    pub lambda: T,
    pub eps: T,
    pub x11: T,
    pub x21: T,
    pub delta: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cm2Generators<T = C64> {
    /// `δ² = (tr X)² − 4 det X`.
    pub d2: T,
    /// `ε² = (tr Y)² − 4 det Y`.
    pub e2: T,
    /// `2λ + ε = tr Y`.
    pub tr_y: T,
    /// `2x₁₁ + δ = tr X`.
    pub tr_x: T,
    /// `x₂₁ + 1/x₂₁`.
    pub w: T,
}

impl<T: Cm2Scalar> Cm2Generators<T> {
    pub fn as_array(&self) -> [&T; 5] {
        [&self.d2, &self.e2, &self.tr_y, &self.tr_x, &self.w]
    }
}

impl<T: Cm2Scalar> Cm2Coords<T> {
    pub fn new(lambda: T, eps: T, x11: T, x21: T, delta: T) -> Self {
        Self {
            lambda,
            eps,
            x11,
            x21,
            delta,
        }
    }

    pub fn as_array(&self) -> [&T; 5] {
        [&self.lambda, &self.eps, &self.x11, &self.x21, &self.delta]
    }

    pub fn x22(&self) -> T {
        self.x11.clone() + self.delta.clone()
    }

    /// `x₂₁² + ε·δ·x₂₁ − 1`.
    pub fn constraint(&self) -> T {
        self.x21.clone() * self.x21.clone() + self.eps.clone() * self.delta.clone() * self.x21.clone()
            - T::one()
    }

    /// Scale of the constraint's terms, for relative residual tests.
    pub fn constraint_scale(&self) -> f64 {
        let a = self.x21.magnitude();
        let b = (self.eps.clone() * self.delta.clone() * self.x21.clone()).magnitude();
        (a * a).max(b).max(1.0)
    }

    /// Swap of the two diagonal entries of `X`:
    /// `(λ, ε, x₁₁ + δ, x₂₁ + εδ, −δ)`.
    pub fn z2_first(&self) -> Self {
        Self {
            lambda: self.lambda.clone(),
            eps: self.eps.clone(),
            x11: self.x11.clone() + self.delta.clone(),
            x21: self.x21.clone() + self.eps.clone() * self.delta.clone(),
            delta: -self.delta.clone(),
        }
    }

    /// Swap of the eigenvalues of `Y`:
    /// `(λ + ε, −ε, x₁₁, x₂₁ + εδ, δ)`.
    pub fn z2_second(&self) -> Self {
        Self {
            lambda: self.lambda.clone() + self.eps.clone(),
            eps: -self.eps.clone(),
            x11: self.x11.clone(),
            x21: self.x21.clone() + self.eps.clone() * self.delta.clone(),
            delta: self.delta.clone(),
        }
    }

    /// `[c, z₁(c), z₂(c), z₁z₂(c)]`, possibly with repeats.
    pub fn orbit(&self) -> [Self; 4] {
        let a = self.z2_first();
        let b = self.z2_second();
        let ab = b.z2_first();
        [self.clone(), a, b, ab]
    }

    pub fn flow(&self, which: Cm2Flow, t: &T) -> Self {
        let mut out = self.clone();
        match which {
            Cm2Flow::Phi => out.x11 = out.x11 + t.clone(),
            Cm2Flow::Psi => out.lambda = out.lambda + t.clone(),
        }
        out
    }

    /// The image of `(X, Y) ↦ (Yᵀ, Xᵀ)`: `(x₁₁, δ, λ, x₂₁, ε)`.
    pub fn transpose_swap(&self) -> Self {
        Self {
            lambda: self.x11.clone(),
            eps: self.delta.clone(),
            x11: self.lambda.clone(),
            x21: self.x21.clone(),
            delta: self.eps.clone(),
        }
    }

    pub fn generators(&self) -> Result<Cm2Generators<T>> {
        if self.x21.is_zero() {
            return Err(Error::X21Vanishes);
        }
        let two = T::from_i64(2);
        Ok(Cm2Generators {
            d2: self.delta.clone() * self.delta.clone(),
            e2: self.eps.clone() * self.eps.clone(),
            tr_y: two.clone() * self.lambda.clone() + self.eps.clone(),
            tr_x: two * self.x11.clone() + self.delta.clone(),
            w: self.x21.clone() + T::one() / self.x21.clone(),
        })
    }

    pub fn to_c64(&self) -> Cm2Coords<C64> {
        Cm2Coords {
            lambda: self.lambda.to_c64(),
            eps: self.eps.to_c64(),
            x11: self.x11.to_c64(),
            x21: self.x21.to_c64(),
            delta: self.delta.to_c64(),
        }
    }
}

impl Cm2Coords<C64> {
    pub fn scale(&self) -> f64 {
        self.as_array().iter().map(|z| z.norm()).fold(1.0, f64::max)
    }

    pub fn relative_residual(&self) -> f64 {
        self.constraint().norm() / self.constraint_scale()
    }

    pub fn max_distance(&self, other: &Self) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array().iter())
            .map(|(a, b)| (*a - *b).norm())
            .fold(0.0, f64::max)
    }

    /// Smallest relative distance from `other` to an element of this orbit.
    pub fn orbit_distance(&self, other: &Self) -> f64 {
        let scale = self.scale().max(other.scale());
        self.orbit()
            .iter()
            .map(|c| c.max_distance(other))
            .fold(f64::INFINITY, f64::min)
            / scale
    }

    pub fn same_orbit(&self, other: &Self, rel_tol: f64) -> bool {
        self.orbit_distance(other) <= rel_tol
    }

    /// Orbit elements with near-duplicates removed; the length is 1, 2 or 4.
    pub fn distinct_orbit(&self, rel_tol: f64) -> Vec<Self> {
        let scale = self.scale();
        let mut out: Vec<Self> = Vec::new();
        for c in self.orbit() {
            if out.iter().all(|d| d.max_distance(&c) > rel_tol * scale) {
                out.push(c);
            }
        }
        out
    }
}
