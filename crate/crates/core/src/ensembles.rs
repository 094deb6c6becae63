//! Reproducible sampling of the random matrix ensembles under study, plus
//! moment bookkeeping for the entry laws.
//!
//! All matrices are N×N with i.i.d. entries of mean 0 and variance 1/N. The
//! symmetry class β selects real (β=1) or complex (β=2) entries; for β=2 the
//! real and imaginary parts are independent with variance 1/(2N) each.
//! Matrices are always materialized as complex so that every downstream
//! consumer has a single code path.

use crate::error::{OverlapError, Result};
use crate::{C64, CMat};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Symmetry class: 1 = real entries, 2 = complex entries.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Beta {
    One,
    Two,
}

impl Beta {
    pub fn as_f64(self) -> f64 {
        match self {
            Beta::One => 1.0,
            Beta::Two => 2.0,
        }
    }

    pub fn as_usize(self) -> usize {
        match self {
            Beta::One => 1,
            Beta::Two => 2,
        }
    }

    pub fn from_u8(b: u8) -> Result<Self> {
        match b {
            1 => Ok(Beta::One),
            2 => Ok(Beta::Two),
            other => Err(OverlapError::InvalidParameter(format!(
                "beta must be 1 or 2, got {other}"
            ))),
        }
    }
}

/// Entry law for the i.i.d. matrix entries.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryLaw {
    Gaussian,
    /// β=1: ±1/√N equiprobable. β=2: (±1±i)/√(2N), four points equiprobable,
    /// so Re and Im stay independent.
    Rademacher,
    /// Centered uniform scaled to variance 1/N: β=1 uniform on [−√(3/N), √(3/N)];
    /// β=2 has Re, Im independent uniform on [−√(3/(2N)), √(3/(2N))].
    Uniform,
}

/// Full description of a sampling task. Identical specs produce bit-identical
/// matrices, across runs and across thread counts.
#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub beta: Beta,
    pub dim: usize,
    pub entry_law: EntryLaw,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(beta: Beta, dim: usize, entry_law: EntryLaw, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(OverlapError::InvalidParameter(format!(
                "matrix dimension must be at least 2, got {dim}"
            )));
        }
        Ok(EnsembleSpec {
            beta,
            dim,
            entry_law,
            seed,
        })
    }
}

/// RNG for one trial of a seeded experiment. ChaCha8 is counter-based: the
/// master seed fixes the key and the trial index selects an independent
/// stream, so trials can be generated in any order (or in parallel) and still
/// agree bit-for-bit with a serial run.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

fn fill_gaussian(beta: Beta, n: usize, rng: &mut impl Rng) -> CMat {
    let mut m = Array2::zeros((n, n));
    match beta {
        Beta::One => {
            let sd = 1.0 / (n as f64).sqrt();
            for e in m.iter_mut() {
                let x: f64 = rng.sample(StandardNormal);
                *e = C64::new(sd * x, 0.0);
            }
        }
        Beta::Two => {
            let sd = 1.0 / (2.0 * n as f64).sqrt();
            for e in m.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *e = C64::new(sd * re, sd * im);
            }
        }
    }
    m
}

fn fill_rademacher(beta: Beta, n: usize, rng: &mut impl Rng) -> CMat {
    let mut m = Array2::zeros((n, n));
    match beta {
        Beta::One => {
            let a = 1.0 / (n as f64).sqrt();
            for e in m.iter_mut() {
                let s = if rng.gen::<bool>() { a } else { -a };
                *e = C64::new(s, 0.0);
            }
        }
        Beta::Two => {
            let a = 1.0 / (2.0 * n as f64).sqrt();
            for e in m.iter_mut() {
                let re = if rng.gen::<bool>() { a } else { -a };
                let im = if rng.gen::<bool>() { a } else { -a };
                *e = C64::new(re, im);
            }
        }
    }
    m
}

fn fill_uniform(beta: Beta, n: usize, rng: &mut impl Rng) -> CMat {
    let mut m = Array2::zeros((n, n));
    match beta {
        Beta::One => {
            let half = (3.0 / n as f64).sqrt();
            for e in m.iter_mut() {
                let x: f64 = rng.gen_range(-half..half);
                *e = C64::new(x, 0.0);
            }
        }
        Beta::Two => {
            let half = (3.0 / (2.0 * n as f64)).sqrt();
            for e in m.iter_mut() {
                let re: f64 = rng.gen_range(-half..half);
                let im: f64 = rng.gen_range(-half..half);
                *e = C64::new(re, im);
            }
        }
    }
    m
}

/// Sample a Ginibre matrix Gin_β(N): i.i.d. Gaussian entries, mean 0,
/// variance 1/N.
pub fn sample_ginibre(spec: &EnsembleSpec) -> Result<CMat> {
    if spec.entry_law != EntryLaw::Gaussian {
        return Err(OverlapError::InvalidParameter(
            "sample_ginibre requires entry_law = gaussian".into(),
        ));
    }
    if spec.dim < 2 {
        return Err(OverlapError::InvalidParameter(format!(
            "matrix dimension must be at least 2, got {}",
            spec.dim
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok(fill_gaussian(spec.beta, spec.dim, &mut rng))
}

/// Sample a non-Gaussian matrix with i.i.d. mean-0 variance-1/N entries and
/// all moments bounded (rademacher or uniform law).
pub fn sample_wigner(spec: &EnsembleSpec) -> Result<CMat> {
    if spec.dim < 2 {
        return Err(OverlapError::InvalidParameter(format!(
            "matrix dimension must be at least 2, got {}",
            spec.dim
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.entry_law {
        EntryLaw::Rademacher => Ok(fill_rademacher(spec.beta, spec.dim, &mut rng)),
        EntryLaw::Uniform => Ok(fill_uniform(spec.beta, spec.dim, &mut rng)),
        EntryLaw::Gaussian => Err(OverlapError::InvalidParameter(
            "sample_wigner requires entry_law ∈ {rademacher, uniform}".into(),
        )),
    }
}

/// Dispatch on the entry law. Convenience for the experiment harness.
pub fn sample_matrix(spec: &EnsembleSpec) -> Result<CMat> {
    match spec.entry_law {
        EntryLaw::Gaussian => sample_ginibre(spec),
        _ => sample_wigner(spec),
    }
}

/// Same as [`sample_matrix`] but drawing from a caller-provided RNG stream
/// (one stream per Monte Carlo trial).
pub fn sample_matrix_with(
    beta: Beta,
    dim: usize,
    entry_law: EntryLaw,
    rng: &mut impl Rng,
) -> Result<CMat> {
    if dim < 2 {
        return Err(OverlapError::InvalidParameter(format!(
            "matrix dimension must be at least 2, got {dim}"
        )));
    }
    Ok(match entry_law {
        EntryLaw::Gaussian => fill_gaussian(beta, dim, rng),
        EntryLaw::Rademacher => fill_rademacher(beta, dim, rng),
        EntryLaw::Uniform => fill_uniform(beta, dim, rng),
    })
}

/// X + √t·Y with Y an independent Gin_β(N) sample drawn from `rng`.
/// Entry variance becomes (1+t)/N when X itself has variance 1/N.
pub fn gauss_divisible(x: &CMat, beta: Beta, t: f64, rng: &mut impl Rng) -> Result<CMat> {
    if !(t >= 0.0) {
        return Err(OverlapError::InvalidParameter(format!(
            "gauss_divisible requires t >= 0, got {t}"
        )));
    }
    let n = x.nrows();
    if n != x.ncols() || n < 2 {
        return Err(OverlapError::InvalidParameter(
            "gauss_divisible requires a square matrix of dimension >= 2".into(),
        ));
    }
    if t == 0.0 {
        return Ok(x.clone());
    }
    let y = fill_gaussian(beta, n, rng);
    let st = C64::new(t.sqrt(), 0.0);
    Ok(x + &y.mapv(|v| st * v))
}

/// Mixed moments E[(Re a)^p (Im a)^q] of the standardized entry √N·a, for
/// p+q ≤ 4, indexed by (p, q).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentProfile {
    moments: Vec<((usize, usize), f64)>,
}

impl MomentProfile {
    /// All (p, q) with p+q ≤ 4 in lexicographic order.
    pub fn index_set() -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for p in 0..=4usize {
            for q in 0..=4usize {
                if p + q <= 4 {
                    v.push((p, q));
                }
            }
        }
        v
    }

    pub fn get(&self, p: usize, q: usize) -> Option<f64> {
        self.moments
            .iter()
            .find(|((a, b), _)| *a == p && *b == q)
            .map(|(_, m)| *m)
    }

    pub fn complete_to_order_4(&self) -> bool {
        Self::index_set()
            .iter()
            .all(|&(p, q)| self.get(p, q).is_some())
    }

    /// Moments of the given order p+q = k.
    pub fn order(&self, k: usize) -> Vec<((usize, usize), f64)> {
        self.moments
            .iter()
            .filter(|((p, q), _)| p + q == k)
            .cloned()
            .collect()
    }
}

/// k-th moment of a centered normal with variance v: (k−1)!!·v^{k/2} for even
/// k, zero for odd k.
fn normal_moment(k: usize, v: f64) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let mut m = 1.0;
    let mut j = k as i64 - 1;
    while j >= 1 {
        m *= j as f64;
        j -= 2;
    }
    m * v.powf(k as f64 / 2.0)
}

/// k-th moment of the uniform law on [−a, a]: a^k/(k+1) for even k.
fn uniform_moment(k: usize, a: f64) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    a.powi(k as i32) / (k as f64 + 1.0)
}

/// k-th moment of ±a equiprobable: a^k for even k.
fn rademacher_moment(k: usize, a: f64) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    a.powi(k as i32)
}

/// Analytic moment profile of the standardized entry √N·a for the given
/// (β, law). Re and Im are independent for every law, so mixed moments
/// factorize.
pub fn moment_profile(beta: Beta, law: EntryLaw) -> MomentProfile {
    // Marginal k-th moments of Re(√N a) and Im(√N a).
    let marginal: Box<dyn Fn(usize) -> f64> = match (beta, law) {
        (Beta::One, EntryLaw::Gaussian) => Box::new(|k| normal_moment(k, 1.0)),
        (Beta::One, EntryLaw::Rademacher) => Box::new(|k| rademacher_moment(k, 1.0)),
        (Beta::One, EntryLaw::Uniform) => Box::new(|k| uniform_moment(k, 3.0f64.sqrt())),
        (Beta::Two, EntryLaw::Gaussian) => Box::new(|k| normal_moment(k, 0.5)),
        (Beta::Two, EntryLaw::Rademacher) => {
            Box::new(|k| rademacher_moment(k, 0.5f64.sqrt()))
        }
        (Beta::Two, EntryLaw::Uniform) => Box::new(|k| uniform_moment(k, 1.5f64.sqrt())),
    };
    let im_marginal = |k: usize| -> f64 {
        match beta {
            // Im ≡ 0: E[Im^q] = 1 for q = 0, else 0.
            Beta::One => {
                if k == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Beta::Two => marginal(k),
        }
    };
    let moments = MomentProfile::index_set()
        .into_iter()
        .map(|(p, q)| ((p, q), marginal(p) * im_marginal(q)))
        .collect();
    MomentProfile { moments }
}

/// Empirical moment profile from `n_samples` standardized entries drawn at
/// the given matrix dimension. Used by tests to validate the analytic tables.
pub fn empirical_moment_profile(
    beta: Beta,
    law: EntryLaw,
    dim: usize,
    n_samples: usize,
    rng: &mut impl Rng,
) -> MomentProfile {
    let scale = (dim as f64).sqrt();
    let idx = MomentProfile::index_set();
    let mut acc = vec![0.0f64; idx.len()];
    let mut count = 0usize;
    while count < n_samples {
        let m = match law {
            EntryLaw::Gaussian => fill_gaussian(beta, dim, rng),
            EntryLaw::Rademacher => fill_rademacher(beta, dim, rng),
            EntryLaw::Uniform => fill_uniform(beta, dim, rng),
        };
        for e in m.iter() {
            if count >= n_samples {
                break;
            }
            let re = e.re * scale;
            let im = e.im * scale;
            for (slot, &(p, q)) in acc.iter_mut().zip(idx.iter()) {
                *slot += re.powi(p as i32) * im.powi(q as i32);
            }
            count += 1;
        }
    }
    let moments = idx
        .into_iter()
        .zip(acc)
        .map(|(pq, s)| (pq, s / n_samples as f64))
        .collect();
    MomentProfile { moments }
}

/// Report produced by [`check_t_matching`].
#[derive(Clone, Debug, Serialize)]
pub struct TMatchReport {
    /// Overall decision at the supplied constant C.
    pub matches: bool,
    /// Whether all moments of order ≤ 3 agree to 1e−12.
    pub low_order_exact: bool,
    /// Gaps |m_a − m_b| of the standardized 4th-order moments, by (p, q).
    pub fourth_order_gaps: Vec<((usize, usize), f64)>,
    /// Smallest C that would make the 4th-order condition hold (gap_entry ≤
    /// C·t/N², i.e. gap_standardized ≤ C·t). None when t = 0 and some gap is
    /// nonzero (no finite C works).
    pub implied_c: Option<f64>,
}

/// Decide whether two entry laws are t-matching: moments through order 3
/// match exactly (tolerance 1e−12) and 4th-order entry moments differ by at
/// most C·t/N². Standardized moments are entry moments times N², so the
/// 4th-order condition reads gap_standardized ≤ C·t.
pub fn check_t_matching(
    a: &MomentProfile,
    b: &MomentProfile,
    t: f64,
    c: f64,
) -> Result<TMatchReport> {
    if !a.complete_to_order_4() || !b.complete_to_order_4() {
        return Err(OverlapError::InvalidParameter(
            "moment profiles must be complete through order 4".into(),
        ));
    }
    if !(t >= 0.0) || !(c > 0.0) {
        return Err(OverlapError::InvalidParameter(
            "check_t_matching requires t >= 0 and C > 0".into(),
        ));
    }
    let tol = 1e-12;
    let mut low_order_exact = true;
    for k in 0..=3usize {
        for ((p, q), ma) in a.order(k) {
            let mb = b.get(p, q).unwrap();
            if (ma - mb).abs() > tol {
                low_order_exact = false;
            }
        }
    }
    let mut gaps = Vec::new();
    let mut max_gap = 0.0f64;
    for ((p, q), ma) in a.order(4) {
        let mb = b.get(p, q).unwrap();
        let gap = (ma - mb).abs();
        max_gap = max_gap.max(gap);
        gaps.push(((p, q), gap));
    }
    let implied_c = if max_gap <= tol {
        Some(0.0)
    } else if t > 0.0 {
        Some(max_gap / t)
    } else {
        None
    };
    let fourth_ok = if t == 0.0 {
        max_gap <= tol
    } else {
        max_gap <= c * t
    };
    Ok(TMatchReport {
        matches: low_order_exact && fourth_ok,
        low_order_exact,
        fourth_order_gaps: gaps,
        implied_c,
    })
}
