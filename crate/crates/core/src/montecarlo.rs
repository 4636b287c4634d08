//! Finite-N spherical integrals `I_N(A, B) = E_U exp((beta N / 2) tr(A U B U*))`:
//! Monte Carlo estimators carried in the log domain, exact small-N values, the
//! annealed integral and the consistency checks built on them.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::j_semicircle;
use crate::randmat::{
    deterministic_semicircle_spectrum, eig_sym, haar_columns_complex, haar_columns_real, sample_ensemble, Beta,
    DeformationSpec, Edge, EnsembleSpec, Matrix,
};
use crate::rng;
use crate::{Error, Result};

/// How an estimate was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Plain,
    #[serde(rename = "angular_is")]
    AngularIS,
    ExactN2,
    AnnealedExact,
    /// Monte Carlo over `U` with the expectation over the disorder taken exactly.
    AnnealedConditional,
    /// Monte Carlo over both the disorder and `U`.
    AnnealedJoint,
}

/// Estimate of `ln I_N` with a standard error on the same (log) scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEstimate {
    pub log_value: f64,
    pub stderr_log: f64,
    pub samples: usize,
    pub method: Method,
}

impl LogEstimate {
    fn exact(log_value: f64, method: Method) -> Self {
        Self { log_value, stderr_log: 0.0, samples: 0, method }
    }

    /// `(2/(beta k N)) ln I_N` and its standard error.
    pub fn normalized(&self, beta: Beta, n: usize, k: usize) -> (f64, f64) {
        let f = 2.0 / (beta.value() * k as f64 * n as f64);
        (f * self.log_value, f * self.stderr_log)
    }
}

/// `ln((1/n) Σ exp(z_i))` and its delete-one jackknife standard error.
/// Terms equal to `-inf` (zero weights) are allowed.
pub fn log_mean_exp(z: &[f64]) -> (f64, f64) {
    let n = z.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let (imax, &m) = z.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    if m == f64::NEG_INFINITY {
        return (f64::NEG_INFINITY, f64::INFINITY);
    }
    let terms: Vec<f64> = z.iter().map(|&x| (x - m).exp()).collect();
    let total: f64 = terms.iter().sum();
    let value = m + (total / n as f64).ln();
    if n == 1 {
        return (value, f64::INFINITY);
    }
    // The leave-one-out sum without the largest term is formed directly to
    // avoid cancellation when that term dominates.
    let rest_of_max: f64 = terms.iter().enumerate().filter(|&(i, _)| i != imax).map(|(_, t)| t).sum();
    let loo: Vec<f64> = terms
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let s = if i == imax { rest_of_max } else { total - t };
            m + (s / (n - 1) as f64).ln()
        })
        .collect();
    if loo.iter().any(|x| !x.is_finite()) {
        return (value, f64::INFINITY);
    }
    let mean = loo.iter().sum::<f64>() / n as f64;
    let var = loo.iter().map(|x| (x - mean).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    (value, var.sqrt())
}

fn estimate(z: &[f64], method: Method) -> LogEstimate {
    let (log_value, stderr_log) = log_mean_exp(z);
    LogEstimate { log_value, stderr_log, samples: z.len(), method }
}

fn check_beta(a: &Matrix, beta: Beta) -> Result<()> {
    if beta == Beta::Real && a.beta() == Beta::Complex {
        return Err(Error::InvalidInput("a complex matrix needs beta = 2".into()));
    }
    Ok(())
}

/// Plain Monte Carlo estimate of `ln I_N(A, D)` over Haar `U`.
///
/// The integrand only sees the spectrum of `A` (Haar invariance) and the first
/// `k` columns of `U`, so each sample costs `O(N k)` after one eigensolve.
pub fn spherical_mc(a: &Matrix, deform: &DeformationSpec, beta: Beta, samples: usize, seed: u64) -> Result<LogEstimate> {
    check_beta(a, beta)?;
    let eigs = eig_sym(a)?;
    spherical_mc_spectrum(&eigs, deform, beta, samples, seed, deform.k())
}

/// [`spherical_mc`] on a given spectrum, drawing `columns >= k` Haar columns
/// per sample (only the first `k` enter the integrand).
pub fn spherical_mc_spectrum(
    eigs: &[f64],
    deform: &DeformationSpec,
    beta: Beta,
    samples: usize,
    seed: u64,
    columns: usize,
) -> Result<LogEstimate> {
    let n = eigs.len();
    let k = deform.k();
    if k > n || columns < k || columns > n {
        return Err(Error::InvalidInput(format!("need k <= columns <= n, got k={k}, columns={columns}, n={n}")));
    }
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be positive".into()));
    }
    let c = beta.value() * n as f64 / 2.0;
    let thetas = deform.thetas();
    let z: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let mut quad = vec![0.0; k];
            match beta {
                Beta::Real => {
                    let u = haar_columns_real(n, columns, &mut r);
                    for (l, q) in quad.iter_mut().enumerate() {
                        *q = u.column(l).iter().zip(eigs).map(|(x, lam)| lam * x * x).sum();
                    }
                }
                Beta::Complex => {
                    let u = haar_columns_complex(n, columns, &mut r);
                    for (l, q) in quad.iter_mut().enumerate() {
                        *q = u.column(l).iter().zip(eigs).map(|(x, lam)| lam * x.norm_sqr()).sum();
                    }
                }
            }
            c * thetas.iter().zip(&quad).map(|(t, q)| t * q).sum::<f64>()
        })
        .collect();
    Ok(estimate(&z, Method::Plain))
}

/// `ln I_0(x)` by its power series `Σ (x^2/4)^m / (m!)^2`.
pub fn ln_bessel_i0(x: f64) -> Result<f64> {
    if !(x.abs() <= 30.0) {
        return Err(Error::ArgumentOverflow(x));
    }
    let q = x * x / 4.0;
    let (mut term, mut sum) = (1.0f64, 1.0f64);
    for m in 1..200 {
        term *= q / (m as f64 * m as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    Ok(sum.ln())
}

/// Exact `ln I_2(diag(l1, l2), theta e1 e1^T)` for `beta = 1`:
/// `theta (l1 + l2)/2 + ln I_0(theta (l1 - l2)/2)`.
pub fn spherical_exact_n2(l1: f64, l2: f64, theta: f64) -> Result<f64> {
    Ok(theta * (l1 + l2) / 2.0 + ln_bessel_i0(theta * (l1 - l2) / 2.0)?)
}

fn log_sum_exp(z: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = z.collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `ln E_{O(d)} exp(scale Σ_ij a_i b_j U_ij^2)` for `d <= 3` by quadrature
/// over the group: the rotation angle for `d = 2`, ZYZ Euler angles with Haar
/// density `sin(beta) / (8 pi^2)` for `d = 3` (trapezoid in the two azimuths,
/// Gauss–Legendre in `cos(beta)`). Reflections do not change `U_ij^2`.
pub fn exact_orthogonal_log_integral(a: &[f64], b: &[f64], scale: f64) -> Result<f64> {
    let d = a.len();
    if b.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: b.len() });
    }
    match d {
        0 => Ok(0.0),
        1 => Ok(scale * a[0] * b[0]),
        2 => {
            let m = 256;
            let s = a[0] * b[0] + a[1] * b[1];
            let t = a[0] * b[1] + a[1] * b[0];
            let lse = log_sum_exp((0..m).map(|j| {
                let phi = PI * j as f64 / m as f64;
                let c2 = phi.cos().powi(2);
                scale * (s * c2 + t * (1.0 - c2))
            }));
            Ok(lse - (m as f64).ln())
        }
        3 => {
            let (ma, mg) = (96, 96);
            let (nodes, weights) = gauss_legendre(48);
            let mut terms = Vec::with_capacity(ma * mg * nodes.len());
            for ia in 0..ma {
                let al = 2.0 * PI * ia as f64 / ma as f64;
                let (sa, ca) = al.sin_cos();
                for (&cb, &wb) in nodes.iter().zip(&weights) {
                    let sb = (1.0 - cb * cb).max(0.0).sqrt();
                    // Rz(alpha) Ry(beta)
                    let p = [[ca * cb, -sa, ca * sb], [sa * cb, ca, sa * sb], [-sb, 0.0, cb]];
                    for ig in 0..mg {
                        let ga = 2.0 * PI * ig as f64 / mg as f64;
                        let (sg, cg) = ga.sin_cos();
                        let mut e = 0.0;
                        for (i, row) in p.iter().enumerate() {
                            let r = [row[0] * cg + row[1] * sg, -row[0] * sg + row[1] * cg, row[2]];
                            for j in 0..3 {
                                e += a[i] * b[j] * r[j] * r[j];
                            }
                        }
                        terms.push(scale * e + (wb / 2.0).ln());
                    }
                }
            }
            Ok(log_sum_exp(terms.into_iter()) - ((ma * mg) as f64).ln())
        }
        _ => Err(Error::InvalidInput(format!("exact group quadrature supports d <= 3, got {d}"))),
    }
}

fn ln_gamma_half(n: usize) -> f64 {
    // ln Gamma(n/2) by the recursion Gamma(x + 1) = x Gamma(x)
    let (mut x, mut acc) = if n % 2 == 0 { (1.0, 0.0) } else { (0.5, 0.5 * PI.ln()) };
    if n == 0 {
        return f64::INFINITY;
    }
    while x < n as f64 / 2.0 {
        acc += x.ln();
        x += 1.0;
    }
    acc
}

/// `ln |S^{n-1}|`, the surface area of the unit sphere in `R^n`.
fn ln_sphere_area(n: usize) -> f64 {
    std::f64::consts::LN_2 + 0.5 * n as f64 * PI.ln() - ln_gamma_half(n)
}

/// Importance-sampling proposal on `S^{d-1}` for the target
/// `exp(-Σ b_j u_j^2)`, `b_0 = 0 <= b_1 <= ...`.
///
/// Two components with closed-form densities are mixed:
///  * an angular central Gaussian `g/|g|`, `g ~ N(0, diag(1/omega))` with
///    `omega_j = 1 + s (2/t) b_j` and `Σ 1/(t + 2 b_j) = 1`, which fits the
///    target when its mass spreads over many coordinates;
///  * a cap proposal for the condensed case where the first `m` coordinates
///    carry a macroscopic share of the mass: the remaining coordinates are
///    drawn as independent `N(0, 1/(2 b_j))`, dropped if they leave the unit
///    ball, and the first `m` are placed uniformly on the sphere of the
///    remaining radius.
#[derive(Clone, Debug)]
struct Proposal {
    b: Vec<f64>,
    omega: Vec<f64>,
    half_log_det_omega: f64,
    cap: Option<Cap>,
    /// Probability of drawing from the angular central Gaussian.
    alpha: f64,
}

#[derive(Clone, Debug)]
struct Cap {
    m: usize,
    /// `ln |S^{d-1}| - ln |S^{m-1}| + Σ_{j>=m} ln sqrt(b_j/pi)`.
    log_const: f64,
}

impl Proposal {
    fn new(b: Vec<f64>, tilt: f64) -> Result<Self> {
        let d = b.len();
        if !(0.0..1.0).contains(&tilt) {
            return Err(Error::ProposalNotPositive(tilt));
        }
        // Σ 1/(t + 2 b_j) is decreasing in t, infinite at 0+ (b_0 = 0) and <= 1 at t = d.
        let f = |t: f64| b.iter().map(|bj| 1.0 / (t + 2.0 * bj)).sum::<f64>() - 1.0;
        let (mut lo, mut hi) = (0.0f64, d as f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = hi;
        let omega: Vec<f64> = b.iter().map(|bj| 1.0 + tilt * 2.0 / t * bj).collect();
        let min_omega = omega.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min_omega > 0.0) {
            return Err(Error::ProposalNotPositive(min_omega));
        }
        let half_log_det_omega = 0.5 * omega.iter().map(|w| w.ln()).sum::<f64>();

        let cap = if tilt == 0.0 {
            None
        } else {
            (1..=d.saturating_sub(1).min(8)).find_map(|m| {
                if b[m..].iter().any(|&bj| !(bj > 0.0)) {
                    return None;
                }
                let spread: f64 = b[m..].iter().map(|bj| 0.5 / bj).sum();
                (spread <= 0.9).then(|| {
                    let gauss: f64 = b[m..].iter().map(|bj| 0.5 * (bj / PI).ln()).sum();
                    Cap { m, log_const: ln_sphere_area(d) - ln_sphere_area(m) + gauss }
                })
            })
        };
        let alpha = if cap.is_some() { 0.1 } else { 1.0 };
        Ok(Self { b, omega, half_log_det_omega, cap, alpha })
    }

    /// Log density of the angular central Gaussian relative to the uniform law.
    fn log_acg(&self, u: &[f64]) -> f64 {
        let q: f64 = u.iter().zip(&self.omega).map(|(x, w)| w * x * x).sum();
        self.half_log_det_omega - 0.5 * u.len() as f64 * q.ln()
    }

    /// Log density of the cap component relative to the uniform law.
    fn log_cap(&self, u: &[f64]) -> f64 {
        let Some(cap) = &self.cap else { return f64::NEG_INFINITY };
        let m = cap.m;
        let rest: f64 = u[m..].iter().map(|x| x * x).sum();
        let inside = 1.0 - rest;
        if !(inside > 0.0) {
            return f64::NEG_INFINITY;
        }
        let gauss: f64 = u[m..].iter().zip(&self.b[m..]).map(|(x, bj)| -bj * x * x).sum();
        cap.log_const + gauss - 0.5 * (m as f64 - 2.0) * inside.ln()
    }

    /// Draws a point on the sphere, or `None` when the cap component leaves the ball.
    fn draw(&self, r: &mut rng::Rng) -> Option<Vec<f64>> {
        let d = self.b.len();
        let use_acg = self.alpha >= 1.0 || r.gen::<f64>() < self.alpha;
        if use_acg {
            let mut g: Vec<f64> = self.omega.iter().map(|w| r.sample::<f64, _>(StandardNormal) / w.sqrt()).collect();
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            g.iter_mut().for_each(|x| *x /= norm);
            return Some(g);
        }
        let m = self.cap.as_ref().expect("cap component").m;
        let mut u = vec![0.0; d];
        let mut top: Vec<f64> = (0..m).map(|_| r.sample(StandardNormal)).collect();
        for j in m..d {
            u[j] = r.sample::<f64, _>(StandardNormal) / (2.0 * self.b[j]).sqrt();
        }
        let rest: f64 = u[m..].iter().map(|x| x * x).sum();
        if rest >= 1.0 {
            return None;
        }
        let norm = top.iter().map(|x| x * x).sum::<f64>().sqrt();
        let radius = (1.0 - rest).sqrt();
        for (dst, x) in u.iter_mut().zip(top.iter_mut()) {
            *dst = *x / norm * radius;
        }
        Some(u)
    }

    /// `ln(target / proposal)` up to the constant `kappa lambda_max`.
    fn log_weight(&self, u: &[f64]) -> f64 {
        let target: f64 = -u.iter().zip(&self.b).map(|(x, bj)| bj * x * x).sum::<f64>();
        let mix = if self.alpha >= 1.0 {
            self.log_acg(u)
        } else {
            log_add_exp(self.alpha.ln() + self.log_acg(u), (1.0 - self.alpha).ln() + self.log_cap(u))
        };
        target - mix
    }

    fn run(&self, offset: f64, samples: usize, seed: u64) -> LogEstimate {
        let z: Vec<f64> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut r = rng::stream(seed, i as u64);
                match self.draw(&mut r) {
                    Some(u) => offset + self.log_weight(&u),
                    None => f64::NEG_INFINITY,
                }
            })
            .collect();
        estimate(&z, Method::AngularIS)
    }
}

/// Tilts tried by the pilot run when none is given.
pub const PILOT_TILTS: [f64; 3] = [0.5, 0.7, 0.9];

/// Importance-sampling estimate of `ln I_N(A, theta e1 e1^T)`.
///
/// Works in the eigenbasis of `A`; for `beta = 2` the complex sphere is the
/// real sphere of dimension `2N` with every eigenvalue repeated. `tilt = 0`
/// is plain Monte Carlo. With `tilt = None` a pilot run on 1% of the budget
/// picks the tilt with the smallest standard error, and the main run then
/// uses fresh random streams.
pub fn spherical_rank1_is(
    a: &Matrix,
    theta: f64,
    beta: Beta,
    samples: usize,
    tilt: Option<f64>,
    seed: u64,
) -> Result<LogEstimate> {
    check_beta(a, beta)?;
    let eigs = eig_sym(a)?;
    spherical_rank1_is_spectrum(&eigs, theta, beta, samples, tilt, seed)
}

/// [`spherical_rank1_is`] on a given spectrum (any order).
pub fn spherical_rank1_is_spectrum(
    eigs: &[f64],
    theta: f64,
    beta: Beta,
    samples: usize,
    tilt: Option<f64>,
    seed: u64,
) -> Result<LogEstimate> {
    if samples == 0 || eigs.is_empty() {
        return Err(Error::InvalidInput("need samples > 0 and a non-empty spectrum".into()));
    }
    let n = eigs.len();
    if theta == 0.0 {
        return Ok(LogEstimate { log_value: 0.0, stderr_log: 0.0, samples, method: Method::AngularIS });
    }
    // exp(kappa u^T L u) with kappa > 0 after absorbing the sign of theta
    let sign = theta.signum();
    let kappa = beta.value() * n as f64 * theta.abs() / 2.0;
    let mut lam: Vec<f64> = eigs.iter().map(|x| sign * x).collect();
    lam.sort_by(|x, y| y.total_cmp(x));
    let reps = if beta == Beta::Complex { 2 } else { 1 };
    let top = lam[0];
    let b: Vec<f64> = lam.iter().flat_map(|x| std::iter::repeat_n(kappa * (top - x), reps)).collect();
    let offset = kappa * top;

    let tilt = match tilt {
        Some(s) => s,
        None => {
            let pilot = (samples / 100).max(200);
            let mut best = (f64::INFINITY, PILOT_TILTS[0]);
            for (i, &s) in PILOT_TILTS.iter().enumerate() {
                let est = Proposal::new(b.clone(), s)?.run(offset, pilot, rng::derive(seed, 0xA11CE + i as u64));
                if est.stderr_log < best.0 {
                    best = (est.stderr_log, s);
                }
            }
            best.1
        }
    };
    Ok(Proposal::new(b, tilt)?.run(offset, samples, seed))
}

/// Exact normalized annealed integral `(2/(beta k N)) ln E_X I_N(X, D) = Σ theta_i^2 / (2k)`
/// for Gaussian disorder, at every `N` and both symmetry classes.
pub fn annealed_exact(deform: &DeformationSpec, _beta: Beta, _n: usize) -> f64 {
    deform.thetas().iter().map(|t| t * t).sum::<f64>() / (2.0 * deform.k() as f64)
}

/// Monte Carlo estimate of `ln E_X I_N(X, D)` for a Wigner ensemble.
///
/// For a fixed `U` the exponent is linear in the independent entries of `X`,
/// so the expectation over `X` is the product of their moment generating
/// functions; only `U` is sampled. This removes the log-normal variance a
/// joint draw would carry (see [`annealed_mc_joint`]).
pub fn annealed_mc(ensemble: &EnsembleSpec, deform: &DeformationSpec, samples: usize, seed: u64) -> Result<LogEstimate> {
    let n = ensemble.n;
    let k = deform.k();
    if k > n || samples == 0 {
        return Err(Error::InvalidInput(format!("need 0 < samples and k <= n (k={k}, n={n})")));
    }
    let law = ensemble.entry_law;
    let thetas = deform.thetas();
    let rn = (n as f64).sqrt();
    let z: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let mut total = 0.0;
            match ensemble.beta {
                Beta::Real => {
                    let c = n as f64 / 2.0;
                    let u = haar_columns_real(n, k, &mut r);
                    let b = weighted_gram_real(&u, thetas);
                    for j in 0..n {
                        total += law.log_mgf(std::f64::consts::SQRT_2 * c * b[(j, j)] / rn);
                        for i in 0..j {
                            total += law.log_mgf(2.0 * c * b[(i, j)] / rn);
                        }
                    }
                }
                Beta::Complex => {
                    let c = n as f64;
                    let u = haar_columns_complex(n, k, &mut r);
                    let b = weighted_gram_complex(&u, thetas);
                    let off = 2.0 * c / (2.0 * n as f64).sqrt();
                    for j in 0..n {
                        total += law.log_mgf(c * b[(j, j)].re / rn);
                        for i in 0..j {
                            total += law.log_mgf(off * b[(i, j)].re) + law.log_mgf(off * b[(i, j)].im);
                        }
                    }
                }
            }
            total
        })
        .collect();
    Ok(estimate(&z, Method::AnnealedConditional))
}

fn weighted_gram_real(u: &DMatrix<f64>, thetas: &[f64]) -> DMatrix<f64> {
    let mut scaled = u.clone();
    for (l, &t) in thetas.iter().enumerate() {
        scaled.column_mut(l).scale_mut(t);
    }
    scaled * u.transpose()
}

fn weighted_gram_complex(u: &DMatrix<Complex64>, thetas: &[f64]) -> DMatrix<Complex64> {
    let mut scaled = u.clone();
    for (l, &t) in thetas.iter().enumerate() {
        scaled.column_mut(l).scale_mut(t);
    }
    scaled * u.adjoint()
}

/// Joint Monte Carlo over `(X, U)`. Unbiased but its log-weights have
/// variance of order `N Σ theta^2`, so it is only usable at small `N`.
pub fn annealed_mc_joint(ensemble: &EnsembleSpec, deform: &DeformationSpec, samples: usize, seed: u64) -> Result<LogEstimate> {
    let n = ensemble.n;
    let k = deform.k();
    if k > n || samples == 0 {
        return Err(Error::InvalidInput(format!("need 0 < samples and k <= n (k={k}, n={n})")));
    }
    let thetas = deform.thetas();
    let c = ensemble.beta.value() * n as f64 / 2.0;
    let z: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let spec = EnsembleSpec { seed: rng::derive(seed, i as u64), ..*ensemble };
            let mut r = rng::stream(seed, i as u64);
            match sample_ensemble(&spec) {
                Matrix::Real(x) => {
                    let u = haar_columns_real(n, k, &mut r);
                    let b = weighted_gram_real(&u, thetas);
                    c * x.component_mul(&b).sum()
                }
                Matrix::Complex(x) => {
                    let u = haar_columns_complex(n, k, &mut r);
                    let b = weighted_gram_complex(&u, thetas);
                    c * (x * b).trace().re
                }
            }
        })
        .collect();
    Ok(estimate(&z, Method::AnnealedJoint))
}

/// Which inequality chain [`decomposition_check`] tested.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Remaining block non-negative: lower <= middle <= upper.
    Standard,
    /// Remaining block non-positive: lower >= middle >= upper.
    Reversed,
}

/// Log values of the three sides of the block-splitting sandwich.
#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub n: usize,
    pub k: usize,
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
    pub direction: Direction,
    pub holds: bool,
}

/// Checks
/// `I_N(Q1, P) I_{N-k}(Q2, N/(N-k) P^(k-)) <= I_N(Q, P) <= I_N(Q1, P) I_{N-k}(Q2, N/(N-k) P^(k+))`
/// by exact quadrature (`beta = 1`, `N <= 3`). `Q1`/`Q2` are the first `k`
/// and last `N - k` entries of `q`; `P^(k+)` keeps the `N - k` largest entries
/// of `p`, `P^(k-)` the `N - k` smallest. The chain reverses when `Q2 <= 0`.
pub fn decomposition_check(p: &[f64], q: &[f64], k: usize) -> Result<DecompositionReport> {
    let n = p.len();
    if q.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: q.len() });
    }
    if n > 3 || k == 0 || k > n {
        return Err(Error::InvalidInput(format!("need 1 <= k <= N <= 3, got k={k}, N={n}")));
    }
    let mut p = p.to_vec();
    p.sort_by(|a, b| b.total_cmp(a));
    let q2 = &q[k..];
    let direction = if q2.iter().all(|&x| x >= 0.0) {
        Direction::Standard
    } else if q2.iter().all(|&x| x <= 0.0) {
        Direction::Reversed
    } else {
        return Err(Error::InvalidInput("the trailing block of Q must have a constant sign".into()));
    };
    let scale = n as f64 / 2.0;
    let mut q1 = q[..k].to_vec();
    q1.resize(n, 0.0);
    let middle = exact_orthogonal_log_integral(q, &p, scale)?;
    let first = exact_orthogonal_log_integral(&q1, &p, scale)?;
    // I_{N-k}(Q2, N/(N-k) P') has exponent ((N-k)/2) tr(Q2 V (N/(N-k)) P' V^T) = (N/2) tr(Q2 V P' V^T).
    let lower = first + exact_orthogonal_log_integral(q2, &p[k..], scale)?;
    let upper = first + exact_orthogonal_log_integral(q2, &p[..n - k], scale)?;
    let tol = 1e-10 * (1.0 + middle.abs());
    let holds = match direction {
        Direction::Standard => lower <= middle + tol && middle <= upper + tol,
        Direction::Reversed => lower + tol >= middle && middle + tol >= upper,
    };
    Ok(DecompositionReport { n, k, lower, middle, upper, direction, holds })
}

/// One dimension of a [`limit_check`].
#[derive(Clone, Debug, Serialize)]
pub struct LimitRow {
    pub n: usize,
    pub method: Method,
    pub log_value: f64,
    pub stderr_log: f64,
    pub normalized: f64,
    pub normalized_stderr: f64,
    pub deviation: f64,
}

/// Finite-N normalized log-integrals against their large-N limit.
#[derive(Clone, Debug, Serialize)]
pub struct LimitReport {
    pub k: usize,
    pub beta: u8,
    pub theory: f64,
    pub rows: Vec<LimitRow>,
    /// Deviations are non-increasing along the list of dimensions.
    pub monotone: bool,
}

/// Limit of `(2/(beta k N)) ln I_N(D, A_N)` for `A_N` with semicircle bulk and
/// the given planted outliers: positive temperatures pair with the top
/// eigenvalues in order, negative ones with the bottom eigenvalues.
pub fn limit_theory(deform: &DeformationSpec, planted: &[(Edge, f64)]) -> f64 {
    let thetas = deform.thetas();
    let (k, l) = (deform.k(), deform.l());
    let mut tops: Vec<f64> = planted.iter().filter(|p| p.0 == Edge::Top).map(|p| p.1).collect();
    tops.sort_by(|a, b| b.total_cmp(a));
    tops.resize(l.max(tops.len()), 2.0);
    let mut bottoms: Vec<f64> = planted.iter().filter(|p| p.0 == Edge::Bottom).map(|p| p.1).collect();
    bottoms.sort_by(|a, b| b.total_cmp(a));
    while bottoms.len() < k - l {
        bottoms.insert(0, -2.0);
    }
    let bottoms = &bottoms[bottoms.len() - (k - l)..];
    let mut sum = 0.0;
    for i in 0..l {
        sum += j_semicircle(thetas[i], tops[i]);
    }
    for i in 0..k - l {
        sum += j_semicircle(thetas[l + i], bottoms[i]);
    }
    sum / k as f64
}

/// Estimates the normalized log-integral at each `N` (importance sampling for
/// rank one, plain Monte Carlo otherwise) and compares with [`limit_theory`].
pub fn limit_check(
    n_list: &[usize],
    deform: &DeformationSpec,
    planted: &[(Edge, f64)],
    beta: Beta,
    samples: usize,
    seed: u64,
) -> Result<LimitReport> {
    let k = deform.k();
    let theory = limit_theory(deform, planted);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let eigs = deterministic_semicircle_spectrum(n, planted)?;
        let s = rng::derive(seed, n as u64);
        let est = if k == 1 {
            spherical_rank1_is_spectrum(&eigs, deform.thetas()[0], beta, samples, None, s)?
        } else {
            spherical_mc_spectrum(&eigs, deform, beta, samples, s, k)?
        };
        let (normalized, normalized_stderr) = est.normalized(beta, n, k);
        rows.push(LimitRow {
            n,
            method: est.method,
            log_value: est.log_value,
            stderr_log: est.stderr_log,
            normalized,
            normalized_stderr,
            deviation: (normalized - theory).abs(),
        });
    }
    let monotone = rows.windows(2).all(|w| w[1].deviation <= w[0].deviation);
    Ok(LimitReport { k, beta: beta.into(), theory, rows, monotone })
}

/// `ln I_2` for a rank-one deformation, reported as an estimate.
pub fn exact_n2_estimate(l1: f64, l2: f64, theta: f64) -> Result<LogEstimate> {
    Ok(LogEstimate::exact(spherical_exact_n2(l1, l2, theta)?, Method::ExactN2))
}

/// The exact annealed value as an estimate of `ln E I_N`.
pub fn annealed_exact_estimate(deform: &DeformationSpec, beta: Beta, n: usize) -> LogEstimate {
    let k = deform.k() as f64;
    let log = annealed_exact(deform, beta, n) * beta.value() * k * n as f64 / 2.0;
    LogEstimate::exact(log, Method::AnnealedExact)
}
