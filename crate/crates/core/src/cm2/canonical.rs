use crate::error::{Error, Result};
use crate::linalg::{self, c64, principal_sqrt, CMatrix, C64};
use crate::pair::{MatrixPair, Member};
use crate::tol::Tolerances;

use super::Cm2Coords;

/// The representative `X = [[x₁₁, 0], [x₂₁, x₁₁ + δ]]`, `Y = [[λ, 1], [0, λ + ε]]`.
pub fn cm2_to_pair(c: &Cm2Coords<C64>, tol: &Tolerances) -> Result<Member> {
    let residual = c.relative_residual();
    if !(residual <= tol.variety_tol) {
        return Err(Error::OffVariety { residual });
    }
    let x = CMatrix::from_row_slice(2, 2, &[c.x11, c64(0.0, 0.0), c.x21, c.x11 + c.delta]);
    let y = CMatrix::from_row_slice(2, 2, &[c.lambda, c64(1.0, 0.0), c64(0.0, 0.0), c.lambda + c.eps]);
    Member::new(MatrixPair::new(x, y)?, tol)
}

/// Canonical coordinates of a member of `𝒞̃₂`, well defined up to the
/// `ℤ₂ × ℤ₂` identifications.
///
/// `Y` is brought to `[[λ, 1], [0, λ + ε]]` with the eigenvalues ordered
/// lexicographically, in the basis `{(Y − μ₂)w, w}` for a non-eigenvector
/// `w`; this also covers the non-diagonalizable case `ε = 0`. The
/// stabilizer `[[g, h], [0, εh + g]]` with `g = x₂₁` then clears `x₁₂`,
/// using the principal root of `h² − (x₂₂ − x₁₁)h − x₁₂x₂₁ = 0`.
pub fn pair_to_cm2(p: &Member, _tol: &Tolerances) -> Result<Cm2Coords<C64>> {
    if p.n() != 2 {
        return Err(Error::NotN2(p.n()));
    }
    let (x, y) = (p.x(), p.y());
    let mu = linalg::eigenvalues(y)?;
    let (lambda, mu2) = (mu[0], mu[1]);
    let eps = mu2 - lambda;

    let mut shifted = y.clone();
    shifted[(0, 0)] -= mu2;
    shifted[(1, 1)] -= mu2;
    // Pick the seed vector giving the best-conditioned basis.
    let basis = |w: [C64; 2]| {
        let v1 = [
            shifted[(0, 0)] * w[0] + shifted[(0, 1)] * w[1],
            shifted[(1, 0)] * w[0] + shifted[(1, 1)] * w[1],
        ];
        CMatrix::from_row_slice(2, 2, &[v1[0], w[0], v1[1], w[1]])
    };
    let seeds = [
        [c64(1.0, 0.0), c64(0.0, 0.0)],
        [c64(0.0, 0.0), c64(1.0, 0.0)],
        [c64(1.0, 0.0), c64(1.0, 0.0)],
        [c64(1.0, 0.0), c64(0.0, 1.0)],
    ];
    let quality = |m: &CMatrix| {
        let sv = linalg::singular_values(m);
        if sv[0] > 0.0 { sv[1] / sv[0] } else { 0.0 }
    };
    let basis_p = seeds
        .iter()
        .map(|&w| basis(w))
        .max_by(|a, b| quality(a).partial_cmp(&quality(b)).unwrap_or(core::cmp::Ordering::Equal))
        .expect("non-empty seeds");
    let p_inv = linalg::inverse(&basis_p).ok_or(Error::NotMember { ratio: f64::NAN })?;
    let xt = &p_inv * x * &basis_p;

    let (x11, x12, x21, x22) = (xt[(0, 0)], xt[(0, 1)], xt[(1, 0)], xt[(1, 1)]);
    if x21.norm() == 0.0 {
        return Err(Error::X21Vanishes);
    }
    let d0 = x22 - x11;
    let h = (principal_sqrt(d0 * d0 + x12 * x21 * 4.0) + d0) * 0.5;
    let g = x21;
    let stab = CMatrix::from_row_slice(2, 2, &[g, h, c64(0.0, 0.0), eps * h + g]);
    let stab_inv = linalg::inverse(&stab).ok_or(Error::SingularConjugator { det: 0.0 })?;
    let xc = &stab * xt * stab_inv;

    Ok(Cm2Coords {
        lambda,
        eps,
        x11: xc[(0, 0)],
        x21: xc[(1, 0)],
        delta: xc[(1, 1)] - xc[(0, 0)],
    })
}
