//! The rank-one spherical integral exponent `J(theta, lambda, mu)` and the
//! large deviation rate functions built from it.

use crate::measures::{Measure, QUANTILE_GRID};
use crate::optim::robust_minimize;
use crate::{Error, Result};

/// Tolerance on atom masses when checking the half-mass condition.
const MASS_TOL: f64 = 1e-9;

/// `J(theta, lambda, mu) = theta lambda' + (v - lambda') G(v) - ln|theta| - ∫ ln|v - x| dmu(x) - 1`
/// with `lambda' = max(lambda, r(mu))` and `v = lambda'` when `G(lambda') <= theta`,
/// `v = G^{-1}(theta)` otherwise. `J(0, ., .) = 0` and negative `theta` is
/// handled through `J(theta, lambda, mu) = J(-theta, -lambda, reflected mu)`.
pub fn j_value(theta: f64, lam: f64, mu: &Measure, tol: f64) -> Result<f64> {
    if theta == 0.0 {
        return Ok(0.0);
    }
    if theta < 0.0 {
        return j_value(-theta, -lam, &mu.reflect(), tol);
    }
    let (lo, hi) = (mu.left(), mu.right());
    if lam < lo {
        return Err(Error::Domain { op: "j_value", value: lam, lo, hi });
    }
    let lp = lam.max(hi);
    let g_lp = mu.stieltjes(lp)?;
    let (v, g_v) = if g_lp <= theta { (lp, g_lp) } else { (mu.inverse_stieltjes(theta, tol)?, theta) };
    let cross = if v == lp { 0.0 } else { (v - lp) * g_v };
    Ok(theta * lp + cross - theta.ln() - mu.log_potential(v)? - 1.0)
}

/// `J(theta, lambda, sigma)` for the semicircle law. Never fails for
/// `theta >= 0, lambda >= -2` or `theta <= 0, lambda <= 2`.
pub fn j_semicircle(theta: f64, lam: f64) -> f64 {
    j_value(theta, lam, &Measure::Semicircle, 1e-14).unwrap_or(f64::NAN)
}

/// Rate function of the largest eigenvalue of a Wigner matrix,
/// `I(x) = ∫_2^x sqrt(t^2 - 4) dt` in closed form, extended evenly and by 0 on (-2, 2).
pub fn rate_i(x: f64) -> f64 {
    let a = x.abs();
    if a <= 2.0 {
        return 0.0;
    }
    let s = (a * a - 4.0).sqrt();
    0.5 * a * s - 2.0 * ((a + s) / 2.0).ln()
}

/// Rate function of the largest eigenvalue of a rank-one deformed Wigner
/// matrix, `I_theta(x) = I(x) - J(theta, x) - inf_{y >= 2} (I(y) - J(theta, y))`,
/// infinite for `x < 2`. Negative `theta` uses `I_theta(x) = I_{-theta}(-x)`.
pub fn rate_i_theta(theta: f64, x: f64, tol: f64) -> f64 {
    if theta < 0.0 || (theta == 0.0 && x < 0.0) {
        return rate_i_theta(-theta, -x, tol);
    }
    if x < 2.0 {
        return f64::INFINITY;
    }
    if theta == 0.0 {
        return rate_i(x);
    }
    let phi = |y: f64| rate_i(y) - j_semicircle(theta, y);
    let hi = x.max(theta + 1.0 / theta) + 5.0;
    let (_, inner) = robust_minimize(phi, 2.0, hi, 64, tol.max(1e-12));
    let fx = phi(x);
    (fx - inner.min(fx).min(phi(2.0))).max(0.0)
}

/// Zero of `I_theta`: `(theta v 1) + 1/(theta v 1)`, with sign for negative theta.
pub fn rate_i_theta_zero(theta: f64) -> f64 {
    let t = theta.abs().max(1.0);
    (t + 1.0 / t).copysign(if theta < 0.0 { -1.0 } else { 1.0 })
}

fn half_mass(nu: &Measure) -> bool {
    (nu.cdf(-2.0) - 0.5).abs() <= MASS_TOL && (nu.mass_at_least(2.0) - 0.5).abs() <= MASS_TOL
}

/// Rate function of the extremal empirical measure: `∫ I dnu` when half of the
/// mass sits on `]-inf, -2]` and half on `[2, inf[`, infinite otherwise.
pub fn rate_extremal(nu: &Measure) -> f64 {
    if !half_mass(nu) {
        return f64::INFINITY;
    }
    nu.expect(rate_i)
}

/// Quantile-coupled integral `∫_0^1 F(Q_xi(t), Q_nu(t)) dt` on the midpoint
/// grid, evaluating `F` once per run of identical pairs.
fn coupled_integral(xi: &Measure, nu: &Measure, mut f: impl FnMut(f64, f64) -> Result<f64>) -> Result<f64> {
    let n = QUANTILE_GRID;
    let (qx, qn) = (xi.quantile_grid(n), nu.quantile_grid(n));
    let mut total = 0.0;
    let mut i = 0;
    while i < n {
        let key = (qx[i], qn[i]);
        let mut run = 1;
        while i + run < n && (qx[i + run], qn[i + run]) == key {
            run += 1;
        }
        total += run as f64 * f(key.0, key.1)?;
        i += run;
    }
    Ok(total / n as f64)
}

/// Rate function of the extremal measure of a deformed Wigner matrix,
/// `∫_0^1 I_{Q_xi(t)}(Q_nu(t)) dt`, infinite without the half-mass condition.
pub fn rate_deformed(xi: &Measure, nu: &Measure) -> f64 {
    if !half_mass(nu) {
        return f64::INFINITY;
    }
    coupled_integral(xi, nu, |t, x| Ok(rate_i_theta(t, x, 1e-12))).unwrap_or(f64::INFINITY)
}

/// Position of the top eigenvalue of a spiked Wigner matrix with spike `theta`
/// at signal-to-noise `gamma`: 2 below the transition, `s + 1/s` above it.
pub fn bbp_map(theta: f64, gamma: f64) -> f64 {
    let s = gamma.sqrt() * theta;
    if s <= 1.0 {
        2.0
    } else {
        s + 1.0 / s
    }
}

/// `∫_0^1 J(Q_xi(t), Q_nu(t), sigma) dt`.
pub fn j_functional(xi: &Measure, nu: &Measure) -> Result<f64> {
    coupled_integral(xi, nu, |t, x| j_value(t, x, &Measure::Semicircle, 1e-14))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_examples() {
        let s = Measure::Semicircle;
        assert!((j_value(0.5, 2.0, &s, 1e-12).unwrap() - 0.125).abs() < 1e-14);
        let want = 4.0 - 2f64.ln() - 1.5;
        assert!((j_value(2.0, 2.0, &s, 1e-12).unwrap() - want).abs() < 1e-14);
        let want = 4.0 - 4f64.ln() - 0.125;
        assert!((j_value(2.0, 2.5, &s, 1e-12).unwrap() - want).abs() < 1e-14);
        assert_eq!(j_value(0.0, 7.0, &s, 1e-12).unwrap(), 0.0);
        assert!((j_value(-2.0, -2.5, &s, 1e-12).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn j_rejects_lambda_left_of_support() {
        assert!(matches!(j_value(1.0, -3.0, &Measure::Semicircle, 1e-12), Err(Error::Domain { .. })));
    }

    #[test]
    fn j_on_atoms_matches_direct_formula() {
        // mu = delta_0: G(z) = 1/z, h(z) = ln z, G^{-1}(theta) = 1/theta.
        let d = Measure::dirac(0.0);
        // theta = 0.25 < G(1) = 1, so v = 4.
        let got = j_value(0.25, 1.0, &d, 1e-14).unwrap();
        let want = 0.25 * 1.0 + 3.0 * 0.25 - 0.25f64.ln() - 4f64.ln() - 1.0;
        assert!((got - want).abs() < 1e-12, "{got} {want}");
        // theta = 2 >= G(1), so v = lambda' = 1.
        let got = j_value(2.0, 1.0, &d, 1e-14).unwrap();
        assert!((got - (2.0 - 2f64.ln() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate_i(2.0), 0.0);
        assert_eq!(rate_i(-2.0), 0.0);
        assert!((rate_i(3.0) - 1.429_25).abs() < 1e-5);
        assert!(rate_i_theta(2.0, 2.5, 1e-12).abs() < 1e-10);
        assert_eq!(rate_i_theta(0.5, 1.0, 1e-12), f64::INFINITY);
        assert!((rate_i_theta(0.0, 3.0, 1e-12) - rate_i(3.0)).abs() < 1e-14);
        assert!((rate_i_theta(-2.0, -2.5, 1e-12)).abs() < 1e-10);
    }

    #[test]
    fn extremal_examples() {
        let two = Measure::atoms(vec![(-2.0, 0.5), (2.0, 0.5)]).unwrap();
        assert_eq!(rate_extremal(&two), 0.0);
        assert_eq!(rate_extremal(&Measure::dirac(2.0)), f64::INFINITY);
        let three = Measure::atoms(vec![(-3.0, 0.5), (3.0, 0.5)]).unwrap();
        assert!((rate_extremal(&three) - rate_i(3.0)).abs() < 1e-14);
    }

    #[test]
    fn deformed_examples() {
        let nu = Measure::atoms(vec![(-3.0, 0.5), (3.0, 0.5)]).unwrap();
        assert!((rate_deformed(&Measure::dirac(0.0), &nu) - rate_extremal(&nu)).abs() < 1e-12);
        let xi = Measure::atoms(vec![(-2.0, 0.5), (2.0, 0.5)]).unwrap();
        let star = Measure::atoms(vec![(-2.5, 0.5), (2.5, 0.5)]).unwrap();
        assert!(rate_deformed(&xi, &star).abs() < 1e-9);
        let inside = Measure::atoms(vec![(-3.0, 0.25), (0.0, 0.5), (3.0, 0.25)]).unwrap();
        assert_eq!(rate_deformed(&xi, &inside), f64::INFINITY);
    }

    #[test]
    fn bbp_examples() {
        assert_eq!(bbp_map(0.5, 1.0), 2.0);
        assert_eq!(bbp_map(2.0, 1.0), 2.5);
        assert_eq!(bbp_map(1.0, 1.0), 2.0);
    }

    #[test]
    fn j_functional_examples() {
        let got = j_functional(&Measure::dirac(2.0), &Measure::dirac(2.5)).unwrap();
        assert!((got - j_semicircle(2.0, 2.5)).abs() < 1e-14);
        assert_eq!(j_functional(&Measure::dirac(0.0), &Measure::dirac(0.0)).unwrap(), 0.0);
        let xi = Measure::atoms(vec![(1.0, 0.5), (2.0, 0.5)]).unwrap();
        let nu = Measure::atoms(vec![(2.0, 0.5), (2.5, 0.5)]).unwrap();
        let want = 0.5 * 0.5 + 0.5 * (4.0 - 4f64.ln() - 0.125);
        assert!((j_functional(&xi, &nu).unwrap() - want).abs() < 1e-12);
    }
}
