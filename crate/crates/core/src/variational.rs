//! Finite-dimensional variational problems: the coupling problem bounding
//! rank-k spherical integrals by rank-one exponents, the replica-symmetric
//! Crisanti–Sommers minimization and the growing-rank mutual information
//! variational formula.

use std::cell::RefCell;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{bbp_map, j_semicircle, j_value};
use crate::linalg::{asymmetry, symmetric_eigen};
use crate::measures::Measure;
use crate::optim::{golden_section, isotonic, nelder_mead, robust_minimize};
use crate::rng;
use crate::{Error, Result};

const J_TOL: f64 = 1e-13;

/// Problem data `(mu, lambda_1 >= ... >= lambda_k >= r(mu), theta_1 >= ... >= theta_k >= 0)`.
#[derive(Clone, Debug, Serialize)]
pub struct VariationalProblem {
    pub mu: Measure,
    lambdas: Vec<f64>,
    thetas: Vec<f64>,
}

impl VariationalProblem {
    /// Sorts both vectors in non-increasing order and validates them.
    pub fn new(mu: Measure, mut lambdas: Vec<f64>, mut thetas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() || lambdas.len() != thetas.len() {
            return Err(Error::DimensionMismatch { expected: lambdas.len(), got: thetas.len() });
        }
        lambdas.sort_by(|a, b| b.total_cmp(a));
        thetas.sort_by(|a, b| b.total_cmp(a));
        let r = mu.right();
        if let Some(&l) = lambdas.last().filter(|&&l| l < r) {
            return Err(Error::OutOfRange { op: "VariationalProblem", value: l, detail: format!("lambdas must be >= r(mu) = {r}") });
        }
        if let Some(&t) = thetas.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
            return Err(Error::OutOfRange { op: "VariationalProblem", value: t, detail: "thetas must be finite and >= 0".into() });
        }
        Ok(Self { mu, lambdas, thetas })
    }

    pub fn k(&self) -> usize {
        self.thetas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    /// `Σ J(theta_i, lambda_i, mu)`, the upper bound on the coupling problem.
    pub fn bound(&self) -> Result<f64> {
        self.thetas.iter().zip(&self.lambdas).map(|(&t, &l)| j_value(t, l, &self.mu, J_TOL)).sum()
    }
}

/// A feasible pair `(phi, psi)`: the decreasing spectra of
/// `sqrt(I - L) D sqrt(I - L)` and `sqrt(L) D sqrt(L)` for a coupling `0 <= L <= I`.
#[derive(Clone, Debug, Serialize)]
pub struct VariationalPoint {
    pub coupling: Vec<Vec<f64>>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    /// Objective value once evaluated against a problem.
    pub value: Option<f64>,
}

fn spectrum_nonneg(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let scale = sym.amax().max(1.0);
    Ok(symmetric_eigen(&sym, false)?
        .values
        .into_iter()
        .map(|x| if x < 0.0 && x > -1e-12 * scale { 0.0 } else { x })
        .collect())
}

/// Builds the feasible point generated by the coupling `L`.
pub fn feasible_from_coupling(thetas: &[f64], l: &DMatrix<f64>) -> Result<VariationalPoint> {
    let k = thetas.len();
    if l.nrows() != k || l.ncols() != k {
        return Err(Error::DimensionMismatch { expected: k, got: l.nrows() });
    }
    let asym = asymmetry(l);
    if asym > 1e-10 {
        return Err(Error::NotSymmetric(asym));
    }
    let eig = symmetric_eigen(l, true)?;
    if let Some(&bad) = eig.values.iter().find(|&&m| !(-1e-10..=1.0 + 1e-10).contains(&m)) {
        return Err(Error::InfeasibleCoupling(bad));
    }
    let sqrt_l = eig.map(|m| m.clamp(0.0, 1.0).sqrt());
    let sqrt_il = eig.map(|m| (1.0 - m.clamp(0.0, 1.0)).sqrt());
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(thetas));
    let phi = spectrum_nonneg(&(&sqrt_il * &d * &sqrt_il))?;
    let psi = spectrum_nonneg(&(&sqrt_l * &d * &sqrt_l))?;
    let coupling = (0..k).map(|i| l.row(i).iter().cloned().collect()).collect();
    Ok(VariationalPoint { coupling, phi, psi, value: None })
}

/// `F = Σ [lambda_i psi_i + J(phi_i, lambda_k, mu) + ln phi_i - ln theta_i]`,
/// `-inf` when some `phi_i = 0 < theta_i`.
pub fn f_value(problem: &VariationalProblem, point: &VariationalPoint) -> Result<f64> {
    let k = problem.k();
    if point.phi.len() != k || point.psi.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: point.phi.len() });
    }
    let lam_k = problem.lambdas[k - 1];
    let mut total = 0.0;
    for i in 0..k {
        let (phi, theta) = (point.phi[i], problem.thetas[i]);
        if theta > 0.0 && phi <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total += problem.lambdas[i] * point.psi[i] + j_value(phi, lam_k, &problem.mu, J_TOL)?;
        if theta > 0.0 {
            total += phi.ln() - theta.ln();
        }
    }
    Ok(total)
}

/// Diagonal coupling `m_i = 1 - G(lambda_i)/theta_i` clipped to [0, 1].
fn candidate_masses(problem: &VariationalProblem) -> Result<Vec<f64>> {
    problem
        .thetas
        .iter()
        .zip(&problem.lambdas)
        .map(|(&t, &l)| {
            if t <= 0.0 {
                return Ok(0.0);
            }
            Ok((1.0 - problem.mu.stieltjes(l)? / t).clamp(0.0, 1.0))
        })
        .collect()
}

/// The point `psi_i = max(theta_i - G(lambda_i), 0)`, `phi_i = theta_i - psi_i`.
pub fn candidate_point(problem: &VariationalProblem) -> Result<VariationalPoint> {
    let m = candidate_masses(problem)?;
    let l = DMatrix::from_diagonal(&DVector::from_vec(m));
    let mut p = feasible_from_coupling(&problem.thetas, &l)?;
    p.value = Some(f_value(problem, &p)?);
    Ok(p)
}

/// `R diag(m) R^T` with `R` a product of Givens rotations, one per pair `i < j`.
fn coupling_from_params(k: usize, x: &[f64]) -> DMatrix<f64> {
    let m: Vec<f64> = x[..k].iter().map(|v| v.clamp(1e-9, 1.0 - 1e-9)).collect();
    let mut r = DMatrix::<f64>::identity(k, k);
    let mut a = k;
    for i in 0..k {
        for j in i + 1..k {
            let (s, c) = x[a].sin_cos();
            a += 1;
            for row in 0..k {
                let (ri, rj) = (r[(row, i)], r[(row, j)]);
                r[(row, i)] = c * ri - s * rj;
                r[(row, j)] = s * ri + c * rj;
            }
        }
    }
    let mut scaled = r.clone();
    for (j, mj) in m.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*mj);
    }
    let l = scaled * r.transpose();
    (&l + l.transpose()) * 0.5
}

/// Outcome of [`maximize_m`].
#[derive(Clone, Debug, Serialize)]
pub struct MaximizeResult {
    pub point: VariationalPoint,
    pub value: f64,
    /// `Σ J(theta_i, lambda_i, mu)`.
    pub bound: f64,
    /// `bound - value`; never below `-tol` if the bound holds.
    pub gap: f64,
}

/// Local maximization of `F` over couplings `L = R diag(m) R^T` by Nelder–Mead,
/// started from the candidate point, `L = 0`, `L = I` and random couplings,
/// plus a run over diagonal couplings only. Restarts run in parallel.
pub fn maximize_m(problem: &VariationalProblem, restarts: usize, tol: f64) -> Result<MaximizeResult> {
    let k = problem.k();
    if k > 8 {
        return Err(Error::InvalidInput(format!("maximize_m supports k <= 8, got {k}")));
    }
    let dim = k + k * (k - 1) / 2;
    let objective = |x: &[f64]| -> f64 {
        let l = coupling_from_params(k, x);
        match feasible_from_coupling(&problem.thetas, &l).and_then(|p| f_value(problem, &p)) {
            Ok(v) if v.is_finite() => -v,
            _ => f64::INFINITY,
        }
    };
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let with_angles = |m: Vec<f64>| {
        let mut x = m;
        x.resize(dim, 0.0);
        x
    };
    starts.push(with_angles(candidate_masses(problem)?.iter().map(|m| m.clamp(1e-9, 1.0 - 1e-9)).collect()));
    starts.push(with_angles(vec![1e-9; k]));
    starts.push(with_angles(vec![1.0 - 1e-9; k]));
    let mut r = rng::stream(0x5EED, k as u64);
    while starts.len() < restarts.max(3) {
        let x: Vec<f64> = (0..dim).map(|i| if i < k { r.gen::<f64>() } else { r.gen_range(-3.2..3.2) }).collect();
        starts.push(x);
    }
    let max_evals = 600 * (dim + 1);
    let mut runs: Vec<(Vec<f64>, f64)> = starts
        .par_iter()
        .map(|x0| {
            let s = nelder_mead(objective, x0, 0.2, tol * 1e-3, max_evals);
            let s = nelder_mead(objective, &s.x, 0.02, tol * 1e-3, max_evals);
            (s.x, s.value)
        })
        .collect();
    // diagonal-only family from the candidate
    let cand = candidate_masses(problem)?;
    let diag_obj = |m: &[f64]| {
        let mut x = m.to_vec();
        x.resize(dim, 0.0);
        objective(&x)
    };
    let s = nelder_mead(diag_obj, &cand, 0.1, tol * 1e-3, max_evals);
    let mut x = s.x;
    x.resize(dim, 0.0);
    runs.push((x, s.value));

    let (best_x, best) = runs.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("at least one run");
    let mut point = feasible_from_coupling(&problem.thetas, &coupling_from_params(k, &best_x))?;
    let value = -best;
    point.value = Some(value);
    let bound = problem.bound()?;
    Ok(MaximizeResult { point, value, bound, gap: bound - value })
}

/// Replica-symmetric Crisanti–Sommers functional
/// `(1/2)(theta^2 (1 - q^2)/2 + q/(1 - q) + ln(1 - q))`.
pub fn cs_objective(theta: f64, q: f64) -> f64 {
    0.5 * (theta * theta * (1.0 - q * q) / 2.0 + q / (1.0 - q) + (1.0 - q).ln())
}

/// Minimizes [`cs_objective`] over `q in [0, 1 - 1e-9]`. The derivative is
/// `(q/2)(1/(1-q)^2 - theta^2)`, so the functional is unimodal.
pub fn cs_minimize(theta: f64, tol: f64) -> (f64, f64) {
    golden_section(|q| cs_objective(theta, q), 0.0, 1.0 - 1e-9, tol.max(1e-15))
}

/// Prior penalty on the quantile vector of `nu` in the growing-rank formula.
pub enum RateDescriptor<'a> {
    /// Rate function infinite except at `nu = eta`: the supremum sits at `eta`.
    Deterministic,
    /// A convex penalty evaluated on the quantile vector (vanishing at `eta`).
    Penalty(&'a (dyn Fn(&[f64]) -> f64 + Sync)),
}

/// Result of [`mi_variational`].
#[derive(Clone, Debug, Serialize)]
pub struct MiVariational {
    /// The supremum over `nu`.
    pub value: f64,
    /// Maximizing quantile vector.
    pub quantiles: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// `sup_nu (-gamma/4 ∫ x^2 dnu + (1/2) ∫ J(sqrt(gamma) Q_nu(t), f(Q_eta(t)), sigma) dt - Gamma(nu))`
/// with `f` the BBP map at `gamma`, over non-decreasing non-negative quantile
/// vectors on a midpoint grid of size `grid`. With a penalty, coordinate
/// ascent alternates with an isotonic projection.
pub fn mi_variational(eta: &Measure, gamma: f64, rate: &RateDescriptor<'_>, grid: usize) -> Result<MiVariational> {
    if !(gamma >= 0.0) || grid == 0 {
        return Err(Error::InvalidInput("need gamma >= 0 and grid > 0".into()));
    }
    if eta.left() < 0.0 {
        return Err(Error::InvalidInput("prior must be supported on [0, inf)".into()));
    }
    let qeta = eta.quantile_grid(grid);
    let edge: Vec<f64> = qeta.iter().map(|&x| bbp_map(x, gamma)).collect();
    let sg = gamma.sqrt();
    let n = grid as f64;
    let cell = |q: f64, j: usize| -gamma / 4.0 * q * q + 0.5 * j_semicircle(sg * q, edge[j]);
    let smooth = |q: &[f64]| q.iter().enumerate().map(|(j, &x)| cell(x, j)).sum::<f64>() / n;

    match rate {
        RateDescriptor::Deterministic => {
            Ok(MiVariational { value: smooth(&qeta), quantiles: qeta, sweeps: 0, converged: true })
        }
        RateDescriptor::Penalty(gamma_fn) => {
            let total = |q: &[f64]| smooth(q) - gamma_fn(q);
            let qmax = 2.0 * eta.right() + 2.0;
            let mut q = qeta.clone();
            let mut value = total(&q);
            let (mut sweeps, mut converged) = (0, false);
            while sweeps < 200 {
                sweeps += 1;
                for j in 0..grid {
                    // only cell j of the smooth part moves
                    let trial = RefCell::new(q.clone());
                    let (best, _) = robust_minimize(
                        |x| {
                            let mut t = trial.borrow_mut();
                            t[j] = x;
                            gamma_fn(&t) - cell(x, j) / n
                        },
                        0.0,
                        qmax,
                        32,
                        1e-10,
                    );
                    q[j] = best;
                }
                q = isotonic(&q).into_iter().map(|x| x.max(0.0)).collect();
                let next = total(&q);
                let change = (next - value).abs();
                value = next;
                if change < 1e-10 {
                    converged = true;
                    break;
                }
            }
            Ok(MiVariational { value, quantiles: q, sweeps, converged })
        }
    }
}
