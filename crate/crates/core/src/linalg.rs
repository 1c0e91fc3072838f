//! Dense complex linear algebra helpers on top of `nalgebra`.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

// Float supplies f64 math in no_std builds; std shadows it under test.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn transpose(m: &CMatrix) -> CMatrix {
    m.transpose()
}

/// `Σ coeffs[k] · mᵏ` by Horner's rule. An empty coefficient list is the zero polynomial.
pub fn poly_eval(coeffs: &[C64], m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let mut acc = CMatrix::zeros(n, n);
    for &c in coeffs.iter().rev() {
        acc = &acc * m;
        for i in 0..n {
            acc[(i, i)] += c;
        }
    }
    acc
}

pub fn mat_pow(m: &CMatrix, k: usize) -> CMatrix {
    let mut acc = identity(m.nrows());
    for _ in 0..k {
        acc = &acc * m;
    }
    acc
}

pub fn determinant(m: &CMatrix) -> C64 {
    m.clone().determinant()
}

pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    m.clone().try_inverse()
}

/// Singular values in decreasing order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    sv
}

/// `σ_max / σ_min`; infinite for singular input.
pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Rank decided by a relative singular-value cutoff, with the gap
/// `σ_r / σ_{r+1}` at the decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankDecision {
    pub rank: usize,
    /// Infinite when there is no rejected value or the rejected value is exactly zero.
    pub gap: f64,
}

pub fn numeric_rank(sv: &[f64], rel_cutoff: f64) -> RankDecision {
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return RankDecision {
            rank: 0,
            gap: f64::INFINITY,
        };
    }
    let rank = sv.iter().take_while(|&&s| s > rel_cutoff * top).count();
    let gap = match sv.get(rank) {
        Some(&next) if next > 0.0 => sv[rank - 1] / next,
        _ => f64::INFINITY,
    };
    RankDecision { rank, gap }
}

/// Right singular vectors whose singular value is at most `rel_cutoff · σ_max`,
/// i.e. an orthonormal basis of the numerical kernel. Also returns all
/// singular values in decreasing order.
pub fn numerical_kernel(m: &CMatrix, rel_cutoff: f64) -> (Vec<f64>, Vec<DVector<C64>>) {
    let cols = m.ncols();
    // Pad wide matrices so the SVD yields a full set of right singular vectors.
    let padded;
    let work = if m.nrows() < cols {
        padded = {
            let mut p = CMatrix::zeros(cols, cols);
            p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
            p
        };
        &padded
    } else {
        m
    };
    let svd = work.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(Ordering::Equal)
    });
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let top = sv.first().copied().unwrap_or(0.0);
    let kernel = order
        .iter()
        .filter(|&&i| svd.singular_values[i] <= rel_cutoff * top)
        .map(|&i| v_t.row(i).transpose().map(|z| z.conj()))
        .collect();
    (sv, kernel)
}

/// Lexicographic order on `(Re, Im)`.
pub fn lex_cmp(a: &C64, b: &C64) -> Ordering {
    a.re
        .partial_cmp(&b.re)
        .unwrap_or(Ordering::Equal)
        .then(a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal))
}

/// Principal square root, with the positive imaginary side chosen on the branch cut.
pub fn principal_sqrt(z: C64) -> C64 {
    let r = z.sqrt();
    if r.re == 0.0 && r.im < 0.0 {
        -r
    } else {
        r
    }
}

/// Eigenvalues with multiplicity, in lexicographic order.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    let n = m.nrows();
    let mut ev = match n {
        0 => Vec::new(),
        1 => vec![m[(0, 0)]],
        2 => {
            let tr = m[(0, 0)] + m[(1, 1)];
            let half_gap = principal_sqrt((m[(0, 0)] - m[(1, 1)]) * (m[(0, 0)] - m[(1, 1)]) * 0.25
                + m[(0, 1)] * m[(1, 0)]);
            vec![tr * 0.5 + half_gap, tr * 0.5 - half_gap]
        }
        _ => m
            .clone()
            .schur()
            .eigenvalues()
            .ok_or(Error::NoConvergence)?
            .iter()
            .copied()
            .collect(),
    };
    ev.sort_by(lex_cmp);
    Ok(ev)
}

/// Minimum-cost perfect matching between two equal-size point sets under
/// `|a − b|` (Hungarian algorithm).
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `assignment[i] = j` pairs `a[i]` with `b[j]`.
    pub assignment: Vec<usize>,
    pub total_cost: f64,
    pub max_cost: f64,
}

pub fn min_cost_matching(a: &[C64], b: &[C64]) -> Matching {
    assert_eq!(a.len(), b.len(), "matching needs equal-size sets");
    let n = a.len();
    let cost = |i: usize, j: usize| (a[i] - b[j]).norm();
    // 1-based potentials, index 0 is the virtual column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    let costs = assignment.iter().enumerate().map(|(i, &j)| cost(i, j));
    let (total_cost, max_cost) = costs.fold((0.0, 0.0), |(t, m), c| (t + c, f64::max(m, c)));
    Matching {
        assignment,
        total_cost,
        max_cost,
    }
}

/// Row-major flattening.
pub fn flatten_row_major(m: &CMatrix) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Stack row vectors into a matrix; rows with nonzero norm are scaled to unit length.
pub fn stack_normalized(rows: &[Vec<C64>]) -> CMatrix {
    let cols = rows.first().map_or(0, Vec::len);
    let mut m = CMatrix::zeros(rows.len(), cols);
    for (i, row) in rows.iter().enumerate() {
        let norm = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let scale = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        for (j, z) in row.iter().enumerate() {
            m[(i, j)] = z * scale;
        }
    }
    m
}
