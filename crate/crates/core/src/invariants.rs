//! Conjugation invariants: the eigenvalue maps `Υ₁`, `Υ₂`, trace-word
//! fingerprints, and the equivalence test built on them.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DVector;
// Float supplies f64 math in no_std builds; std shadows it under test.
#[allow(unused_imports)]
use num_traits::Float;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cm2;
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMatrix, C64};
use crate::pair::{complex_gaussian, MatrixPair, Member};
use crate::tol::Tolerances;

pub const DEFAULT_WORD_LEN: usize = 4;

/// `(Υ₁(p), Υ₂(p))`: eigenvalues of `X` and of `Y`, each in lexicographic order.
pub fn eigen_map(p: &Member) -> Result<(Vec<C64>, Vec<C64>)> {
    Ok((linalg::eigenvalues(p.x())?, linalg::eigenvalues(p.y())?))
}

/// Words over `{X, Y}` of length `1..=max_len`, shortlex order.
pub fn words(max_len: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut layer: Vec<String> = alloc::vec![String::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * 2);
        for w in &layer {
            for letter in ['X', 'Y'] {
                let mut v = w.clone();
                v.push(letter);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    pub eig_x: Vec<C64>,
    pub eig_y: Vec<C64>,
    pub trace_words: BTreeMap<String, C64>,
    /// `max(1, ‖X‖_F, ‖Y‖_F)` of the pair the fingerprint was taken from.
    pub norm: f64,
}

pub fn fingerprint(p: &Member, max_len: usize) -> Result<Fingerprint> {
    let (eig_x, eig_y) = eigen_map(p)?;
    let mut trace_words = BTreeMap::new();
    // Depth-first over words, reusing prefix products.
    let mut stack: Vec<(String, CMatrix)> = alloc::vec![(String::new(), linalg::identity(p.n()))];
    while let Some((word, prod)) = stack.pop() {
        if !word.is_empty() {
            trace_words.insert(word.clone(), prod.trace());
        }
        if word.len() < max_len {
            for (letter, m) in [('X', p.x()), ('Y', p.y())] {
                let mut w = word.clone();
                w.push(letter);
                stack.push((w, &prod * m));
            }
        }
    }
    let norm = [linalg::frobenius(p.x()), linalg::frobenius(p.y())]
        .into_iter()
        .fold(1.0, f64::max);
    Ok(Fingerprint {
        eig_x,
        eig_y,
        trace_words,
        norm,
    })
}

/// Largest relative disagreement and where it occurred.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintDelta {
    pub component: String,
    pub difference: f64,
}

impl Fingerprint {
    /// Compares component by component. Eigenvalue multisets are matched
    /// optimally; each word trace is scaled by `norm^{len}` of the larger pair.
    pub fn delta(&self, other: &Fingerprint) -> FingerprintDelta {
        let norm = self.norm.max(other.norm);
        let mut worst = FingerprintDelta {
            component: String::from("eigX"),
            difference: 0.0,
        };
        let mut consider = |component: &str, difference: f64| {
            if difference > worst.difference || difference.is_nan() {
                worst = FingerprintDelta {
                    component: component.into(),
                    difference,
                };
            }
        };
        if self.eig_x.len() != other.eig_x.len() {
            consider("n", f64::INFINITY);
            return worst;
        }
        consider("eigX", linalg::min_cost_matching(&self.eig_x, &other.eig_x).max_cost / norm);
        consider("eigY", linalg::min_cost_matching(&self.eig_y, &other.eig_y).max_cost / norm);
        for (word, a) in &self.trace_words {
            let diff = match other.trace_words.get(word) {
                Some(b) => (a - b).norm() / norm.powi(word.len() as i32),
                None => continue,
            };
            consider(word, diff);
        }
        worst
    }

    pub fn max_relative_difference(&self, other: &Fingerprint) -> f64 {
        self.delta(other).difference
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EquivVerdict {
    /// `conjugator` maps the first pair to the second, `G p G⁻¹ = q`, when
    /// one was recovered; `None` when equivalence was decided through the
    /// `𝒞₂` canonical form.
    Equivalent { conjugator: Option<CMatrix> },
    /// A conjugation invariant differs; no conjugator exists.
    Distinct { component: String, difference: f64 },
    Inconclusive,
}

impl EquivVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            EquivVerdict::Equivalent { .. } => "equivalent",
            EquivVerdict::Distinct { .. } => "distinct",
            EquivVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// The linear map `vec(G) ↦ (GX − X′G, GY − Y′G)` with `G` flattened row-major.
pub fn intertwiner_system(p: &MatrixPair, q: &MatrixPair) -> CMatrix {
    let n = p.n();
    let nn = n * n;
    let mut l = CMatrix::zeros(2 * nn, nn);
    for (block, (a, b)) in [(p.x(), q.x()), (p.y(), q.y())].into_iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                let row = block * nn + i * n + j;
                for k in 0..n {
                    l[(row, i * n + k)] += a[(k, j)];
                    l[(row, k * n + j)] -= b[(i, k)];
                }
            }
        }
    }
    l
}

const CONJUGATOR_ATTEMPTS: usize = 10;
const INVERTIBILITY_FLOOR: f64 = 1e-10;

/// Searches for invertible `G` with `G p G⁻¹ = q` in the numerical kernel of
/// [`intertwiner_system`]. The smallest right singular vector is tried
/// first, then up to ten random combinations of the kernel basis.
pub fn find_conjugator(p: &MatrixPair, q: &MatrixPair, tol: &Tolerances) -> Option<CMatrix> {
    let n = p.n();
    let l = intertwiner_system(p, q);
    let (sv, mut kernel) = linalg::numerical_kernel(&l, tol.equiv_tol);
    if kernel.is_empty() {
        // The smallest singular vector is still worth one verified attempt.
        let (_, all) = linalg::numerical_kernel(&l, 1.0);
        if let Some(last) = all.last() {
            kernel.push(last.clone());
        }
    }
    if sv.is_empty() {
        return None;
    }
    let to_matrix = |v: &DVector<C64>| CMatrix::from_fn(n, n, |i, j| v[i * n + j]);
    let mut candidates: Vec<CMatrix> = Vec::new();
    if let Some(v) = kernel.last() {
        candidates.push(to_matrix(v));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
    for _ in 0..CONJUGATOR_ATTEMPTS {
        let mut v = DVector::<C64>::zeros(n * n);
        for k in &kernel {
            v += k * complex_gaussian(&mut rng);
        }
        candidates.push(to_matrix(&v));
    }
    candidates.into_iter().find(|g| is_verified_conjugator(g, p, q, tol))
}

fn is_verified_conjugator(g: &CMatrix, p: &MatrixPair, q: &MatrixPair, tol: &Tolerances) -> bool {
    let sv = linalg::singular_values(g);
    let (hi, lo) = (sv[0], sv[sv.len() - 1]);
    if !(hi > 0.0 && lo / hi > INVERTIBILITY_FLOOR) {
        return false;
    }
    let gn = linalg::frobenius(g);
    [(p.x(), q.x()), (p.y(), q.y())].into_iter().all(|(a, b)| {
        let residual = linalg::frobenius(&(g * a - b * g));
        residual <= tol.equiv_tol * gn * (linalg::frobenius(a) + linalg::frobenius(b)).max(1.0)
    })
}

/// Decides whether two members are conjugate.
///
/// `Distinct` is sound: it is only returned when a conjugation invariant
/// differs beyond `tol.equiv_tol`. `Equivalent` is returned when a verified
/// conjugator is found, or for `n = 2` when the canonical coordinates lie in
/// the same `ℤ₂ × ℤ₂` orbit.
pub fn equiv_test(p: &Member, q: &Member, word_len: usize, tol: &Tolerances) -> Result<EquivVerdict> {
    if p.n() != q.n() {
        return Err(Error::SizeMismatch {
            left: p.n(),
            right: q.n(),
        });
    }
    let fp = fingerprint(p, word_len)?;
    let fq = fingerprint(q, word_len)?;
    let delta = fp.delta(&fq);
    if !(delta.difference <= tol.equiv_tol) {
        return Ok(EquivVerdict::Distinct {
            component: delta.component,
            difference: delta.difference,
        });
    }
    if let Some(g) = find_conjugator(p, q, tol) {
        return Ok(EquivVerdict::Equivalent { conjugator: Some(g) });
    }
    if p.n() == 1 {
        return Ok(EquivVerdict::Equivalent {
            conjugator: Some(CMatrix::from_element(1, 1, c64(1.0, 0.0))),
        });
    }
    if p.n() == 2 {
        let a = cm2::pair_to_cm2(p, tol)?;
        let b = cm2::pair_to_cm2(q, tol)?;
        if a.same_orbit(&b, tol.equiv_tol) {
            return Ok(EquivVerdict::Equivalent { conjugator: None });
        }
    }
    Ok(EquivVerdict::Inconclusive)
}
