//! Closed forms built on the spherical integral: the spherical SK free
//! energy, its vector-spin version, and the mutual information / MMSE of
//! spiked Wigner denoising.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::asymptotics::bbp_map;
use crate::linalg::symmetric_eigen;
use crate::measures::Measure;
use crate::montecarlo::{spherical_mc_spectrum, spherical_rank1_is_spectrum, LogEstimate};
use crate::randmat::{deterministic_semicircle_spectrum, Beta, DeformationSpec};
use crate::variational::{mi_variational, MiVariational, RateDescriptor};
use crate::{Error, Result};

/// Limiting free energy of the spherical SK model at inverse temperature
/// `theta`: `theta^2/4` below 1, `theta - ln(theta)/2 - 3/4` above.
pub fn sk_free_energy(theta: f64) -> f64 {
    if theta < 1.0 {
        theta * theta / 4.0
    } else {
        theta - theta.ln() / 2.0 - 0.75
    }
}

/// Vector spins with overlap constraint `q` and per-replica temperatures `thetas`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorSpinProblem {
    q: DMatrix<f64>,
    thetas: Vec<f64>,
}

impl VectorSpinProblem {
    pub fn new(q: DMatrix<f64>, thetas: Vec<f64>) -> Result<Self> {
        let k = thetas.len();
        if k == 0 || q.nrows() != k || q.ncols() != k {
            return Err(Error::DimensionMismatch { expected: k, got: q.nrows() });
        }
        if thetas.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidInput("temperatures must be positive".into()));
        }
        if (0..k).any(|i| (q[(i, i)] - 1.0).abs() > 1e-12) {
            return Err(Error::InvalidInput("overlap matrix must have unit diagonal".into()));
        }
        let eig = symmetric_eigen(&q, false)?;
        if !(eig.values[k - 1] > 1e-12) {
            return Err(Error::NotPositiveDefinite(eig.values[k - 1]));
        }
        Ok(Self { q, thetas })
    }

    /// `Q = I`.
    pub fn identity(thetas: Vec<f64>) -> Result<Self> {
        let k = thetas.len();
        Self::new(DMatrix::identity(k, k), thetas)
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn k(&self) -> usize {
        self.thetas.len()
    }

    /// Eigenvalues of `D^{1/2} Q D^{1/2}`, descending.
    pub fn effective_thetas(&self) -> Vec<f64> {
        let k = self.k();
        let m = DMatrix::from_fn(k, k, |i, j| (self.thetas[i] * self.thetas[j]).sqrt() * self.q[(i, j)]);
        symmetric_eigen(&m, false).expect("symmetric by construction").values
    }

    /// Smallest eigenvalue of `Q`; its inverse bounds `|||Q^{-1}|||`.
    pub fn min_eigenvalue(&self) -> f64 {
        *symmetric_eigen(&self.q, false).expect("validated").values.last().expect("k > 0")
    }

    pub fn ln_det_q(&self) -> f64 {
        symmetric_eigen(&self.q, false).expect("validated").values.iter().map(|x| x.ln()).sum()
    }

    fn is_identity(&self) -> bool {
        self.q == DMatrix::identity(self.k(), self.k())
    }
}

/// `(1/k) Σ f(theta~_i) + (1/(2k)) ln det Q` with `f` = [`sk_free_energy`]
/// and `theta~` the spectrum of `D^{1/2} Q D^{1/2}`.
pub fn vector_spin_free_energy(problem: &VectorSpinProblem) -> f64 {
    let k = problem.k() as f64;
    let f: f64 = problem.effective_thetas().iter().map(|&t| sk_free_energy(t)).sum();
    f / k + problem.ln_det_q() / (2.0 * k)
}

/// Outcome of [`vector_spin_mc_check`].
#[derive(Clone, Debug, Serialize)]
pub struct VectorSpinMcReport {
    /// `(1/(k N)) ln I_N(A_N, D)` for the deterministic semicircle `A_N`.
    pub estimate: f64,
    pub stderr: f64,
    /// `(1/k) Σ f(theta_i)`.
    pub theory: f64,
    pub deviation: f64,
    pub log_estimate: LogEstimate,
}

/// Monte Carlo check of the `Q = I` free energy against the Haar-side
/// integral with a deterministic semicircle spectrum. Rank one uses the
/// importance sampler, rank two plain Monte Carlo.
pub fn vector_spin_mc_check(problem: &VectorSpinProblem, n: usize, samples: usize, seed: u64) -> Result<VectorSpinMcReport> {
    if !problem.is_identity() {
        return Err(Error::InvalidInput("the Monte Carlo check covers Q = I only".into()));
    }
    let k = problem.k();
    if k > 2 || n > 64 || n < k {
        return Err(Error::InvalidInput(format!("need k <= 2 and k <= n <= 64, got k={k}, n={n}")));
    }
    let eigs = deterministic_semicircle_spectrum(n, &[])?;
    let log_estimate = if k == 1 {
        spherical_rank1_is_spectrum(&eigs, problem.thetas[0], Beta::Real, samples, None, seed)?
    } else {
        let deform = DeformationSpec::new(problem.thetas.clone())?;
        spherical_mc_spectrum(&eigs, &deform, Beta::Real, samples, seed, k)?
    };
    let scale = 1.0 / (k as f64 * n as f64);
    let estimate = scale * log_estimate.log_value;
    let theory = problem.thetas.iter().map(|&t| sk_free_energy(t)).sum::<f64>() / k as f64;
    Ok(VectorSpinMcReport {
        estimate,
        stderr: scale * log_estimate.stderr_log,
        theory,
        deviation: (estimate - theory).abs(),
        log_estimate,
    })
}

/// Spiked Wigner denoising with signal-to-noise `gamma` and a deterministic
/// spike profile `thetas`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DenoiseProblem {
    gamma: f64,
    thetas: Vec<f64>,
}

impl DenoiseProblem {
    pub fn new(gamma: f64, thetas: Vec<f64>) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::OutOfRange { op: "denoise", value: gamma, detail: "gamma must be positive".into() });
        }
        if thetas.is_empty() || thetas.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::InvalidInput("spikes must be a non-empty list of non-negative reals".into()));
        }
        Ok(Self { gamma, thetas })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(gamma, self.thetas.clone())
    }

    /// Top eigenvalue locations `bbp_map(theta_i, gamma)` of the observation.
    pub fn edges(&self) -> Vec<f64> {
        self.thetas.iter().map(|&t| bbp_map(t, self.gamma)).collect()
    }

    /// Signal-to-noise values `1/theta_i^2` where a spike detaches.
    pub fn transitions(&self) -> Vec<f64> {
        self.thetas.iter().filter(|t| **t > 0.0).map(|t| 1.0 / (t * t)).collect()
    }
}

fn per_spike(problem: &DenoiseProblem, f: impl Fn(f64) -> f64) -> f64 {
    problem.thetas.iter().map(|&t| f(t)).sum::<f64>() / problem.thetas.len() as f64
}

/// Mutual information per spike: `x/4` for `x = gamma theta^2 <= 1`, else
/// `ln(x)/2 + 1/(4x)`.
pub fn mi_finite_rank(problem: &DenoiseProblem) -> f64 {
    let g = problem.gamma;
    per_spike(problem, |t| {
        let x = g * t * t;
        if x <= 1.0 {
            x / 4.0
        } else {
            x.ln() / 2.0 + 1.0 / (4.0 * x)
        }
    })
}

/// MMSE per spike, `4 d/dgamma` of [`mi_finite_rank`]: `theta^2` below the
/// transition, `2/gamma - 1/(gamma^2 theta^2)` above. Both branches give
/// `theta^2` at the transition.
pub fn mmse(problem: &DenoiseProblem) -> f64 {
    let g = problem.gamma;
    per_spike(problem, |t| {
        let t2 = t * t;
        if g * t2 <= 1.0 {
            t2
        } else {
            2.0 / g - 1.0 / (g * g * t2)
        }
    })
}

/// The variant with a `theta^2/4` prefactor below the transition (and the
/// matching quarter above).
pub fn mmse_quarter(problem: &DenoiseProblem) -> f64 {
    mmse(problem) / 4.0
}

/// `4 (mi(gamma + h) - mi(gamma - h)) / (2h)`. Logs a warning when a
/// transition lies within `2h` of `gamma`.
pub fn mmse_from_derivative(problem: &DenoiseProblem, h: f64) -> Result<f64> {
    if !(h > 0.0) || h >= problem.gamma {
        return Err(Error::OutOfRange { op: "mmse_from_derivative", value: h, detail: "need 0 < h < gamma".into() });
    }
    if problem.transitions().iter().any(|g| (g - problem.gamma).abs() < 2.0 * h) {
        log::warn!("gamma = {} is within 2h of a transition; the difference quotient straddles a kink", problem.gamma);
    }
    let up = mi_finite_rank(&problem.with_gamma(problem.gamma + h)?);
    let down = mi_finite_rank(&problem.with_gamma(problem.gamma - h)?);
    Ok(4.0 * (up - down) / (2.0 * h))
}

/// Which closed form for the MMSE agrees with the derivative of the mutual
/// information.
#[derive(Clone, Debug, Serialize)]
pub struct MmseNormalization {
    pub derivative: f64,
    pub full: f64,
    pub quarter: f64,
    pub full_matches: bool,
    pub quarter_matches: bool,
}

pub fn mmse_normalization(problem: &DenoiseProblem, h: f64, tol: f64) -> Result<MmseNormalization> {
    let derivative = mmse_from_derivative(problem, h)?;
    let (full, quarter) = (mmse(problem), mmse_quarter(problem));
    Ok(MmseNormalization {
        derivative,
        full,
        quarter,
        full_matches: (full - derivative).abs() <= tol,
        quarter_matches: (quarter - derivative).abs() <= tol,
    })
}

/// One row of a `gamma` sweep.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DenoiseRow {
    pub gamma: f64,
    pub mi: f64,
    pub mmse: f64,
    pub mmse_fd: f64,
}

pub fn denoise_sweep(thetas: &[f64], gammas: &[f64], h: f64) -> Result<Vec<DenoiseRow>> {
    gammas
        .iter()
        .map(|&gamma| {
            let p = DenoiseProblem::new(gamma, thetas.to_vec())?;
            Ok(DenoiseRow { gamma, mi: mi_finite_rank(&p), mmse: mmse(&p), mmse_fd: mmse_from_derivative(&p, h)? })
        })
        .collect()
}

/// Growing-rank mutual information `gamma/4 ∫ x^2 deta - sup_nu (...)`.
#[derive(Clone, Debug, Serialize)]
pub struct GrowingRankMi {
    pub value: f64,
    pub variational: MiVariational,
}

pub fn mi_growing_rank(eta: &Measure, gamma: f64, rate: &RateDescriptor<'_>, grid: usize) -> Result<GrowingRankMi> {
    let variational = mi_variational(eta, gamma, rate, grid)?;
    let energy = gamma / 4.0 * eta.quantile_integral(grid, |x| x * x);
    Ok(GrowingRankMi { value: energy - variational.value, variational })
}
