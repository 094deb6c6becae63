//! Bi-orthogonal eigenvector systems, overlap matrices, diagonal condition
//! numbers, rescaled overlaps, and the partial-Schur overlap oracle.
//!
//! Eigenvalues are kept in a canonical order: real ones first (ascending by
//! real part), then the genuinely complex ones ordered by (Re, Im). The order
//! is deterministic for a given input matrix, which keeps downstream records
//! reproducible.

use crate::error::{OverlapError, Result};
use crate::{C64, CMat, CVec};
use ndarray::{Array1, Array2, s};
use ndarray_linalg::{Eig, EigVals, Inverse, Norm, Solve};
use serde::{Deserialize, Serialize};

/// Threshold below which an eigenvalue counts as real.
pub const REAL_AXIS_TOL: f64 = 1e-8;
/// Pairwise eigenvalue gaps below this multiple of ‖X‖ reject the trial.
pub const DEGENERACY_REL_GAP: f64 = 1e-10;

/// A bi-orthogonal eigensystem: X r_n = z_n r_n and l_n* X = z_n l_n* with
/// l_n* r_m = δ_nm. Right eigenvectors are unit norm; the left ones carry the
/// normalization.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    z: Vec<C64>,
    right: CMat,
    left: CMat,
    real_flags: Vec<bool>,
    n_real: usize,
    min_gap: f64,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.z
    }

    /// Right eigenvectors as matrix columns.
    pub fn right(&self) -> &CMat {
        &self.right
    }

    /// Left eigenvectors as matrix columns, scaled so l_n* r_n = 1.
    pub fn left(&self) -> &CMat {
        &self.left
    }

    pub fn real_flags(&self) -> &[bool] {
        &self.real_flags
    }

    /// Number of real eigenvalues (they sit first in the ordering).
    pub fn n_real(&self) -> usize {
        self.n_real
    }

    /// Smallest pairwise eigenvalue distance.
    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    /// Diagonal overlaps O_nn = ‖l_n‖²‖r_n‖² without forming the full matrix.
    pub fn diagonal_overlaps(&self) -> Vec<f64> {
        (0..self.len())
            .map(|n| {
                let ln: f64 = self.left.column(n).iter().map(|v| v.norm_sqr()).sum();
                let rn: f64 = self.right.column(n).iter().map(|v| v.norm_sqr()).sum();
                ln * rn
            })
            .collect()
    }
}

/// Canonical ordering key: real eigenvalues first by real part, then complex
/// ones by (Re, Im).
fn canonical_order(vals: &Array1<C64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| {
        let (za, zb) = (vals[a], vals[b]);
        let (ra, rb) = (za.im.abs() < REAL_AXIS_TOL, zb.im.abs() < REAL_AXIS_TOL);
        rb.cmp(&ra)
            .then(za.re.total_cmp(&zb.re))
            .then(za.im.total_cmp(&zb.im))
    });
    idx
}

/// Diagonalize X into a bi-orthogonal system. Left eigenvectors come from the
/// inverse of the right-eigenvector matrix, so bi-orthogonality holds to solve
/// accuracy and the pairing is automatic.
pub fn eigensystem(x: &CMat) -> Result<EigenSystem> {
    let n = x.nrows();
    if n == 0 || x.ncols() != n {
        return Err(OverlapError::InvalidParameter(
            "eigensystem requires a square nonempty matrix".into(),
        ));
    }
    let (vals, vecs) = x.eig()?;
    let order = canonical_order(&vals);
    let mut z = Vec::with_capacity(n);
    let mut right = Array2::<C64>::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        let v = vecs.column(src);
        let nrm: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if nrm == 0.0 {
            return Err(OverlapError::Backend("zero eigenvector column".into()));
        }
        for i in 0..n {
            right[[i, col]] = v[i] / nrm;
        }
        z.push(vals[src]);
    }

    let scale = x.norm_l2();
    let threshold = DEGENERACY_REL_GAP * scale;
    let mut min_gap = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            min_gap = min_gap.min((z[i] - z[j]).norm());
        }
    }
    if n > 1 && min_gap < threshold {
        return Err(OverlapError::NearDegenerate {
            gap: min_gap,
            threshold,
        });
    }

    let rinv = right.inv()?;
    let mut left = Array2::<C64>::zeros((n, n));
    for col in 0..n {
        for i in 0..n {
            left[[i, col]] = rinv[[col, i]].conj();
        }
    }

    let real_flags: Vec<bool> = z.iter().map(|v| v.im.abs() < REAL_AXIS_TOL).collect();
    let n_real = real_flags.iter().filter(|&&f| f).count();
    Ok(EigenSystem {
        z,
        right,
        left,
        real_flags,
        n_real,
        min_gap,
    })
}

/// Full overlap matrix O_nm = (l_n* l_m)(r_m* r_n).
pub fn overlap_matrix(e: &EigenSystem) -> CMat {
    let lh_l = e.left.t().map(|v| v.conj()).dot(&e.left);
    let rh_r = e.right.t().map(|v| v.conj()).dot(&e.right);
    let n = e.len();
    let mut o = Array2::<C64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            o[[i, j]] = lh_l[[i, j]] * rh_r[[j, i]];
        }
    }
    o
}

/// Overlap rescaling regime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Bulk,
    Edge,
}

/// One diagonal overlap with its rescalings.
#[derive(Clone, Debug, Serialize)]
pub struct OverlapRecord {
    pub re_z: f64,
    pub im_z: f64,
    pub o_nn: f64,
    /// O_nn/(N(1−|z|²)); absent when |z| ≥ 1.
    pub s_bulk: Option<f64>,
    /// O_nn/√N.
    pub s_edge: f64,
    pub real_eigenvalue: bool,
}

/// Rescaled overlaps for one eigensystem.
#[derive(Clone, Debug, Serialize)]
pub struct RescaledOverlaps {
    pub regime: Regime,
    pub records: Vec<OverlapRecord>,
    /// Bulk-regime entries dropped because |z_n| ≥ 1.
    pub skipped: usize,
}

pub fn rescaled_overlaps(e: &EigenSystem, regime: Regime) -> RescaledOverlaps {
    let n = e.len() as f64;
    let diag = e.diagonal_overlaps();
    let mut records = Vec::with_capacity(e.len());
    let mut skipped = 0usize;
    for (k, &o_nn) in diag.iter().enumerate() {
        let z = e.z[k];
        let depth = 1.0 - z.norm_sqr();
        let s_bulk = if depth > 0.0 {
            Some(o_nn / (n * depth))
        } else {
            None
        };
        if regime == Regime::Bulk && s_bulk.is_none() {
            skipped += 1;
            continue;
        }
        records.push(OverlapRecord {
            re_z: z.re,
            im_z: z.im,
            o_nn,
            s_bulk,
            s_edge: o_nn / n.sqrt(),
            real_eigenvalue: e.real_flags[k],
        });
    }
    RescaledOverlaps {
        regime,
        records,
        skipped,
    }
}

/// Partial Schur data: R(v) X R(v) = [[z, w*],[0, M]] with R(v) the Householder
/// reflection exchanging the unit eigenvector v with e₁.
#[derive(Clone, Debug)]
pub struct PartialSchur {
    pub z: C64,
    pub v: CVec,
    pub w: CVec,
    pub m: CMat,
}

/// Householder reflection R with R v = α e₁, |α| = 1 for unit v. R is unitary
/// and Hermitian (an involution).
pub fn householder_reflection(v: &CVec) -> CMat {
    let n = v.len();
    let v1 = v[0];
    let alpha = if v1.norm() > 0.0 {
        -v1 / v1.norm()
    } else {
        C64::new(-1.0, 0.0)
    };
    let nrm: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mut u: CVec = v.clone();
    u[0] -= alpha * nrm;
    let usq: f64 = u.iter().map(|c| c.norm_sqr()).sum();
    let mut r = Array2::<C64>::eye(n);
    if usq > 1e-60 {
        for i in 0..n {
            for j in 0..n {
                r[[i, j]] -= 2.0 * u[i] * u[j].conj() / usq;
            }
        }
    }
    r
}

/// Extract the partial Schur form at the `which`-th eigenvalue (canonical
/// order).
pub fn partial_schur(x: &CMat, which: usize) -> Result<PartialSchur> {
    let e = eigensystem(x)?;
    if which >= e.len() {
        return Err(OverlapError::InvalidParameter(format!(
            "eigenvalue index {which} out of range for N={}",
            e.len()
        )));
    }
    let v: CVec = e.right.column(which).to_owned();
    let r = householder_reflection(&v);
    let t = r.dot(x).dot(&r);
    let n = x.nrows();
    let w: CVec = t.slice(s![0, 1..]).map(|c| c.conj());
    let m: CMat = t.slice(s![1.., 1..]).to_owned();
    // The lower-left block must vanish; treat a visible residue as degeneracy
    // of the targeted eigenvalue.
    let residue: f64 = (0..n - 1).map(|i| t[[i + 1, 0]].norm()).sum();
    if residue > 1e-8 * (1.0 + x.norm_l2()) {
        return Err(OverlapError::NoConvergence(format!(
            "partial Schur deflation residue {residue:.3e}"
        )));
    }
    Ok(PartialSchur {
        z: e.z[which],
        v,
        w,
        m,
    })
}

/// Inverse map: reassemble X from its partial Schur data.
pub fn assemble_schur(p: &PartialSchur) -> CMat {
    let n = p.v.len();
    let mut t = Array2::<C64>::zeros((n, n));
    t[[0, 0]] = p.z;
    for j in 1..n {
        t[[0, j]] = p.w[j - 1].conj();
    }
    for i in 1..n {
        for j in 1..n {
            t[[i, j]] = p.m[[i - 1, j - 1]];
        }
    }
    let r = householder_reflection(&p.v);
    r.dot(&t).dot(&r)
}

/// Diagonal overlap from partial Schur data: 1 + ‖(M* − z̄)⁻¹ w‖².
pub fn overlap_from_schur(z: C64, w: &CVec, m: &CMat) -> Result<f64> {
    let k = m.nrows();
    if k == 0 {
        return Ok(1.0);
    }
    let mut a = m.t().map(|c| c.conj());
    for i in 0..k {
        a[[i, i]] -= z.conj();
    }
    let y = a.solve(w).map_err(|e| {
        OverlapError::Backend(format!("singular M* - conj(z) in overlap_from_schur: {e}"))
    })?;
    Ok(1.0 + y.iter().map(|c| c.norm_sqr()).sum::<f64>())
}

/// Perturb X along the maximizing unit direction Y = l_n r_n*/(‖l_n‖‖r_n‖) and
/// measure the central-difference eigenvalue speed. Returns (speed, √O_nn).
pub fn condition_number_probe(x: &CMat, n_idx: usize, h: f64) -> Result<(f64, f64)> {
    if h <= 0.0 {
        return Err(OverlapError::InvalidParameter(
            "condition_number_probe requires h > 0".into(),
        ));
    }
    let e = eigensystem(x)?;
    if n_idx >= e.len() {
        return Err(OverlapError::InvalidParameter(format!(
            "eigenvalue index {n_idx} out of range for N={}",
            e.len()
        )));
    }
    let z0 = e.z[n_idx];
    let l = e.left.column(n_idx);
    let r = e.right.column(n_idx);
    let ln: f64 = l.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let rn: f64 = r.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let sqrt_onn = ln * rn;
    let dim = x.nrows();
    let mut y = Array2::<C64>::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            y[[i, j]] = l[i] * r[j].conj() / (ln * rn);
        }
    }
    let track = |t: f64| -> Result<C64> {
        let xp = x + &y.mapv(|v| v * t);
        let vals = xp.eigvals()?;
        let mut best = (f64::INFINITY, C64::new(0.0, 0.0));
        let mut second = f64::INFINITY;
        for &v in vals.iter() {
            let d = (v - z0).norm();
            if d < best.0 {
                second = best.0;
                best = (d, v);
            } else if d < second {
                second = d;
            }
        }
        if !second.is_finite() || best.0 > 0.45 * e.min_gap() {
            return Err(OverlapError::NoConvergence(format!(
                "eigenvalue tracking ambiguous at t={t:.3e}: moved {:.3e} vs gap {:.3e}",
                best.0,
                e.min_gap()
            )));
        }
        Ok(best.1)
    };
    let zp = track(h)?;
    let zm = track(-h)?;
    Ok(((zp - zm).norm() / (2.0 * h), sqrt_onn))
}
