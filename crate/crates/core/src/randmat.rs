//! Random matrix ensembles (GOE/GUE and sharp sub-Gaussian Wigner variants),
//! Haar-distributed orthogonal/unitary matrices, spiked deformations and
//! spectral measures.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::bbp_map;
use crate::linalg::{hermitian_eigenvalues, symmetric_eigen};
use crate::measures::{semicircle_quantile, Measure};
use crate::rng::{self, Rng};
use crate::{Error, Result};

/// Symmetry class: real symmetric (`beta = 1`) or complex Hermitian (`beta = 2`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Beta {
    Real,
    Complex,
}

impl Beta {
    pub fn value(self) -> f64 {
        match self {
            Beta::Real => 1.0,
            Beta::Complex => 2.0,
        }
    }
}

impl TryFrom<u8> for Beta {
    type Error = Error;
    fn try_from(b: u8) -> Result<Self> {
        match b {
            1 => Ok(Beta::Real),
            2 => Ok(Beta::Complex),
            _ => Err(Error::InvalidInput(format!("beta must be 1 or 2, got {b}"))),
        }
    }
}

impl From<Beta> for u8 {
    fn from(b: Beta) -> u8 {
        match b {
            Beta::Real => 1,
            Beta::Complex => 2,
        }
    }
}

/// Law of a single standardized entry (mean 0, variance 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryLaw {
    Gaussian,
    /// Uniform on {-1, 1}.
    Rademacher,
    /// Uniform on [-sqrt 3, sqrt 3].
    UniformSym,
}

impl EntryLaw {
    pub fn sample(self, rng: &mut Rng) -> f64 {
        match self {
            EntryLaw::Gaussian => rng.sample(StandardNormal),
            EntryLaw::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryLaw::UniformSym => 3f64.sqrt() * (2.0 * rng.gen::<f64>() - 1.0),
        }
    }

    /// `ln E[exp(t X)]`. Both non-Gaussian laws are sharp sub-Gaussian:
    /// `ln cosh t <= t^2/2`, and `sinh(s)/s = Σ s^{2n}/(2n+1)!` is dominated
    /// termwise by `exp(s^2/6) = Σ s^{2n}/(6^n n!)` since `(2n+1)! >= 6^n n!`.
    pub fn log_mgf(self, t: f64) -> f64 {
        match self {
            EntryLaw::Gaussian => 0.5 * t * t,
            EntryLaw::Rademacher => {
                let a = t.abs();
                a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
            }
            EntryLaw::UniformSym => {
                let s = 3f64.sqrt() * t.abs();
                if s < 1e-3 {
                    let s2 = s * s;
                    s2 / 6.0 - s2 * s2 / 180.0
                } else {
                    s - (2.0 * s).ln() + (-(-2.0 * s).exp()).ln_1p()
                }
            }
        }
    }
}

/// A Wigner-type ensemble: `X = A / sqrt(N)` with standardized off-diagonal
/// entries and diagonal variance 2 (`beta = 1`) or 1 (`beta = 2`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub beta: Beta,
    pub entry_law: EntryLaw,
    pub seed: u64,
}

/// The finite-rank temperature matrix `D = diag(theta_1 >= ... >= theta_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DeformationSpec {
    thetas: Vec<f64>,
}

impl DeformationSpec {
    pub fn new(mut thetas: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::InvalidInput("deformation needs at least one temperature".into()));
        }
        if thetas.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("non-finite temperature".into()));
        }
        thetas.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { thetas })
    }

    /// Temperatures in non-increasing order.
    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    /// Rank `k`.
    pub fn k(&self) -> usize {
        self.thetas.len()
    }

    /// Number `l` of non-negative temperatures.
    pub fn l(&self) -> usize {
        self.thetas.iter().filter(|&&t| t >= 0.0).count()
    }
}

impl TryFrom<Vec<f64>> for DeformationSpec {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DeformationSpec> for Vec<f64> {
    fn from(d: DeformationSpec) -> Vec<f64> {
        d.thetas
    }
}

/// A dense real symmetric or complex Hermitian (or, for Haar samples,
/// orthogonal/unitary) matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum Matrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl Matrix {
    pub fn nrows(&self) -> usize {
        match self {
            Matrix::Real(m) => m.nrows(),
            Matrix::Complex(m) => m.nrows(),
        }
    }

    pub fn beta(&self) -> Beta {
        match self {
            Matrix::Real(_) => Beta::Real,
            Matrix::Complex(_) => Beta::Complex,
        }
    }

    /// Diagonal real matrix.
    pub fn diagonal(values: &[f64]) -> Self {
        Matrix::Real(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values)))
    }
}

/// Sorted spectrum of a matrix with its empirical and extremal measures.
#[derive(Clone, Debug)]
pub struct SpectrumSample {
    /// Eigenvalues in non-increasing order.
    pub eigenvalues: Vec<f64>,
    /// Uniform measure on all eigenvalues.
    pub empirical: Measure,
    /// Uniform measure on the `k` largest and `k` smallest eigenvalues.
    pub extremal: Measure,
}

impl SpectrumSample {
    pub fn new(eigenvalues: Vec<f64>, k: usize) -> Result<Self> {
        let n = eigenvalues.len();
        if k == 0 || 2 * k > n {
            return Err(Error::InvalidInput(format!("extremal rank {k} needs 2k <= n = {n}")));
        }
        let empirical = Measure::uniform(&eigenvalues)?;
        let mut ext: Vec<f64> = eigenvalues[..k].to_vec();
        ext.extend_from_slice(&eigenvalues[n - k..]);
        let extremal = Measure::uniform(&ext)?;
        Ok(Self { eigenvalues, empirical, extremal })
    }

    pub fn top(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Eigenvalues in non-increasing order.
pub fn eig_sym(m: &Matrix) -> Result<Vec<f64>> {
    match m {
        Matrix::Real(a) => Ok(symmetric_eigen(a, false)?.values),
        Matrix::Complex(a) => hermitian_eigenvalues(a),
    }
}

fn wigner_fill(spec: &EnsembleSpec, rng: &mut Rng) -> Matrix {
    let n = spec.n;
    let inv = 1.0 / (n as f64).sqrt();
    let law = spec.entry_law;
    match spec.beta {
        Beta::Real => {
            let mut m = DMatrix::zeros(n, n);
            for j in 0..n {
                for i in 0..=j {
                    let x = if i == j {
                        std::f64::consts::SQRT_2 * law.sample(rng) * inv
                    } else {
                        law.sample(rng) * inv
                    };
                    m[(i, j)] = x;
                    m[(j, i)] = x;
                }
            }
            Matrix::Real(m)
        }
        Beta::Complex => {
            let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
            let half = std::f64::consts::FRAC_1_SQRT_2;
            for j in 0..n {
                for i in 0..=j {
                    if i == j {
                        m[(i, i)] = Complex64::new(law.sample(rng) * inv, 0.0);
                    } else {
                        let re = law.sample(rng) * half * inv;
                        let im = law.sample(rng) * half * inv;
                        m[(i, j)] = Complex64::new(re, im);
                        m[(j, i)] = Complex64::new(re, -im);
                    }
                }
            }
            Matrix::Complex(m)
        }
    }
}

/// Draws from the ensemble described by `spec`, whatever its entry law.
pub fn sample_ensemble(spec: &EnsembleSpec) -> Matrix {
    wigner_fill(spec, &mut rng::stream(spec.seed, 0))
}

/// GOE (`beta = 1`) or GUE (`beta = 2`) sample.
pub fn sample_gaussian_invariant(spec: &EnsembleSpec) -> Result<Matrix> {
    if spec.entry_law != EntryLaw::Gaussian {
        return Err(Error::InvalidInput("sample_gaussian_invariant needs Gaussian entries".into()));
    }
    Ok(sample_ensemble(spec))
}

/// Wigner matrix with Rademacher or symmetric uniform entries.
pub fn sample_wigner(spec: &EnsembleSpec) -> Result<Matrix> {
    if spec.entry_law == EntryLaw::Gaussian {
        return Err(Error::InvalidInput("sample_wigner expects a non-Gaussian entry law".into()));
    }
    Ok(sample_ensemble(spec))
}

/// First `k` columns of a Haar orthogonal matrix: Gaussian columns drawn in
/// column order, then Gram–Schmidt (applied twice for stability). Gram–Schmidt
/// yields the QR factor with positive diagonal in `R`, which fixes the signs
/// and makes the result exactly Haar. Column `j` depends only on the first
/// `j + 1` Gaussian columns, so the first `k` columns coincide with those of
/// the full `n x n` draw from the same stream.
pub fn haar_columns_real(n: usize, k: usize, rng: &mut Rng) -> DMatrix<f64> {
    let mut q = DMatrix::<f64>::zeros(n, k);
    for j in 0..k {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for p in 0..j {
                let col = q.column(p);
                let dot: f64 = col.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (x, c) in v.iter_mut().zip(col.iter()) {
                    *x -= dot * c;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (i, x) in v.into_iter().enumerate() {
            q[(i, j)] = x / norm;
        }
    }
    q
}

/// Unitary analogue of [`haar_columns_real`] (phase of `R`'s diagonal fixed to 1).
pub fn haar_columns_complex(n: usize, k: usize, rng: &mut Rng) -> DMatrix<Complex64> {
    let mut q = DMatrix::from_element(n, k, Complex64::new(0.0, 0.0));
    for j in 0..k {
        let mut v: Vec<Complex64> = (0..n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            })
            .collect();
        for _ in 0..2 {
            for p in 0..j {
                let col = q.column(p);
                let dot: Complex64 = col.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, c) in v.iter_mut().zip(col.iter()) {
                    *x -= dot * c;
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for (i, x) in v.into_iter().enumerate() {
            q[(i, j)] = x / norm;
        }
    }
    q
}

/// Haar-distributed orthogonal (`beta = 1`) or unitary (`beta = 2`) matrix.
pub fn sample_haar(n: usize, beta: Beta, seed: u64) -> Matrix {
    let mut rng = rng::stream(seed, 0);
    match beta {
        Beta::Real => Matrix::Real(haar_columns_real(n, n, &mut rng)),
        Beta::Complex => Matrix::Complex(haar_columns_complex(n, n, &mut rng)),
    }
}

/// Spectrum of `G + U D U*` with `G` from the ensemble and `U` Haar,
/// independent of `G`.
pub fn spiked_sample(ensemble: &EnsembleSpec, deform: &DeformationSpec) -> Result<SpectrumSample> {
    let n = ensemble.n;
    let k = deform.k();
    if k > n {
        return Err(Error::InvalidInput(format!("rank {k} exceeds dimension {n}")));
    }
    let g = sample_ensemble(ensemble);
    let mut urng = rng::stream(ensemble.seed, 1);
    let y = match g {
        Matrix::Real(mut g) => {
            let u = haar_columns_real(n, k, &mut urng);
            for (l, &t) in deform.thetas().iter().enumerate() {
                let c = u.column(l);
                g.ger(t, &c, &c, 1.0);
            }
            Matrix::Real(g)
        }
        Matrix::Complex(mut g) => {
            let u = haar_columns_complex(n, k, &mut urng);
            for (l, &t) in deform.thetas().iter().enumerate() {
                let c = u.column(l);
                g.gerc(Complex64::new(t, 0.0), &c, &c, Complex64::new(1.0, 0.0));
            }
            Matrix::Complex(g)
        }
    };
    SpectrumSample::new(eig_sym(&y)?, k.min(n / 2).max(1))
}

/// One point of a BBP sweep.
#[derive(Clone, Debug, Serialize)]
pub struct BbpPoint {
    pub theta: f64,
    pub mean_top: f64,
    pub stderr: f64,
    pub predicted: f64,
}

/// Mean top eigenvalue of rank-one spiked GOE/GUE matrices over replicates,
/// against the BBP prediction at `gamma = 1`.
pub fn bbp_sweep(n: usize, beta: Beta, thetas: &[f64], replicates: usize, seed: u64) -> Result<Vec<BbpPoint>> {
    thetas
        .iter()
        .enumerate()
        .map(|(ti, &theta)| {
            let deform = DeformationSpec::new(vec![theta])?;
            let tops: Vec<f64> = (0..replicates)
                .into_par_iter()
                .map(|r| {
                    let spec = EnsembleSpec {
                        n,
                        beta,
                        entry_law: EntryLaw::Gaussian,
                        seed: rng::derive(rng::derive(seed, ti as u64), r as u64),
                    };
                    spiked_sample(&spec, &deform).map(|s| s.top())
                })
                .collect::<Result<_>>()?;
            let (mean, stderr) = mean_stderr(&tops);
            Ok(BbpPoint { theta, mean_top: mean, stderr, predicted: bbp_map(theta, 1.0) })
        })
        .collect()
}

pub(crate) fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One overlap value in [`quadratic_form_cov_check`].
#[derive(Clone, Debug, Serialize)]
pub struct CovRow {
    pub overlap: f64,
    pub empirical: f64,
    pub theory: f64,
    pub stderr: f64,
    pub within_3_sigma: bool,
}

/// Empirical covariance of `H(e) = (N/2) e^T G e` for GOE `G` at unit vectors
/// with overlaps 1, 0 and 1/2, against `(N/2)(e1 . e2)^2`.
pub fn quadratic_form_cov_check(n: usize, replicates: usize, seed: u64) -> Result<Vec<CovRow>> {
    if n < 2 {
        return Err(Error::InvalidInput("need n >= 2".into()));
    }
    let overlaps: [f64; 3] = [1.0, 0.0, 0.5];
    let products: Vec<[f64; 3]> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let spec = EnsembleSpec { n, beta: Beta::Real, entry_law: EntryLaw::Gaussian, seed: rng::derive(seed, r as u64) };
            let Matrix::Real(g) = sample_ensemble(&spec) else { unreachable!() };
            let half = n as f64 / 2.0;
            let h1 = half * g[(0, 0)];
            let mut out = [0.0; 3];
            for (o, &rho) in out.iter_mut().zip(&overlaps) {
                let s = (1.0 - rho * rho).sqrt();
                let h2 = half * (rho * rho * g[(0, 0)] + 2.0 * rho * s * g[(0, 1)] + s * s * g[(1, 1)]);
                *o = h1 * h2;
            }
            out
        })
        .collect();
    Ok(overlaps
        .iter()
        .enumerate()
        .map(|(i, &rho)| {
            let xs: Vec<f64> = products.iter().map(|p| p[i]).collect();
            let (empirical, stderr) = mean_stderr(&xs);
            let theory = n as f64 / 2.0 * rho * rho;
            CovRow { overlap: rho, empirical, theory, stderr, within_3_sigma: (empirical - theory).abs() <= 3.0 * stderr }
        })
        .collect())
}

/// Which end of the spectrum a planted outlier replaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Top,
    Bottom,
}

/// Diagonal of the deterministic matrix with semicircle quantiles
/// `Q((i - 1/2)/N)` in the bulk and planted outliers at the edges, in
/// non-increasing order.
pub fn deterministic_semicircle_spectrum(n: usize, planted: &[(Edge, f64)]) -> Result<Vec<f64>> {
    let mut tops: Vec<f64> = planted.iter().filter(|p| p.0 == Edge::Top).map(|p| p.1).collect();
    let mut bottoms: Vec<f64> = planted.iter().filter(|p| p.0 == Edge::Bottom).map(|p| p.1).collect();
    if tops.len() + bottoms.len() > n {
        return Err(Error::InvalidInput(format!("{} planted values exceed n = {n}", planted.len())));
    }
    if let Some(&bad) = tops.iter().find(|&&x| x < 2.0) {
        return Err(Error::OutOfRange { op: "deterministic_semicircle_matrix", value: bad, detail: "top outliers must be >= 2".into() });
    }
    if let Some(&bad) = bottoms.iter().find(|&&x| x > -2.0) {
        return Err(Error::OutOfRange { op: "deterministic_semicircle_matrix", value: bad, detail: "bottom outliers must be <= -2".into() });
    }
    tops.sort_by(|a, b| b.total_cmp(a));
    bottoms.sort_by(|a, b| b.total_cmp(a));
    let mut diag: Vec<f64> = (0..n).rev().map(|i| semicircle_quantile((i as f64 + 0.5) / n as f64)).collect();
    diag[..tops.len()].copy_from_slice(&tops);
    diag[n - bottoms.len()..].copy_from_slice(&bottoms);
    Ok(diag)
}

/// Diagonal matrix version of [`deterministic_semicircle_spectrum`].
pub fn deterministic_semicircle_matrix(n: usize, planted: &[(Edge, f64)]) -> Result<Matrix> {
    Ok(Matrix::diagonal(&deterministic_semicircle_spectrum(n, planted)?))
}
