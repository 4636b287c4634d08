//! Compactly supported probability measures on the line and the transforms
//! every formula in the crate is built from: Stieltjes transform, logarithmic
//! potential and quantile function.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default size of the midpoint quantile grid.
pub const QUANTILE_GRID: usize = 4096;

/// Number of bisection steps used for monotone inversions. 200 halvings of any
/// interval we use reach the floating point resolution.
const BISECT_STEPS: usize = 200;

/// A compactly supported probability measure.
///
/// `Quantiles` stores a non-decreasing table `q_0 <= ... <= q_{n-1}` read as the
/// quantile function that equals `q_j` on `((j)/n, (j+1)/n]`, i.e. the uniform
/// measure on the table entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawMeasure")]
pub enum Measure {
    /// Semicircle law on [-2, 2] with density `sqrt(4 - x^2) / (2 pi)`.
    Semicircle,
    /// Finitely many atoms `(position, weight)`, sorted by position.
    Atoms { atoms: Vec<(f64, f64)> },
    /// Uniform measure on a non-decreasing table of values.
    Quantiles { quantiles: Vec<f64> },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawMeasure {
    Semicircle,
    Atoms { atoms: Vec<(f64, f64)> },
    Quantiles { quantiles: Vec<f64> },
}

impl TryFrom<RawMeasure> for Measure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        match raw {
            RawMeasure::Semicircle => Ok(Measure::Semicircle),
            RawMeasure::Atoms { atoms } => Measure::atoms(atoms),
            RawMeasure::Quantiles { quantiles } => Measure::quantile_table(quantiles),
        }
    }
}

impl Measure {
    /// Builds a discrete measure, sorting atoms by position.
    pub fn atoms(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        let mut total = 0.0;
        for &(x, w) in &atoms {
            if !x.is_finite() || !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidMeasure(format!("bad atom ({x}, {w})")));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Measure::Atoms { atoms })
    }

    /// Point mass at `x`.
    pub fn dirac(x: f64) -> Self {
        Measure::Atoms { atoms: vec![(x, 1.0)] }
    }

    /// Uniform measure on the given points (need not be sorted).
    pub fn uniform(points: &[f64]) -> Result<Self> {
        let mut q = points.to_vec();
        q.sort_by(f64::total_cmp);
        Self::quantile_table(q)
    }

    /// Wraps a non-decreasing quantile table.
    pub fn quantile_table(quantiles: Vec<f64>) -> Result<Self> {
        if quantiles.is_empty() {
            return Err(Error::InvalidMeasure("empty quantile table".into()));
        }
        if quantiles.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite quantile".into()));
        }
        if quantiles.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidMeasure("quantile table is decreasing somewhere".into()));
        }
        Ok(Measure::Quantiles { quantiles })
    }

    /// Left end of the support, `l(mu)`.
    pub fn left(&self) -> f64 {
        match self {
            Measure::Semicircle => -2.0,
            Measure::Atoms { atoms } => atoms.iter().find(|a| a.1 > 0.0).map_or(atoms[0].0, |a| a.0),
            Measure::Quantiles { quantiles } => quantiles[0],
        }
    }

    /// Right end of the support, `r(mu)`.
    pub fn right(&self) -> f64 {
        match self {
            Measure::Semicircle => 2.0,
            Measure::Atoms { atoms } => {
                atoms.iter().rev().find(|a| a.1 > 0.0).map_or(atoms[atoms.len() - 1].0, |a| a.0)
            }
            Measure::Quantiles { quantiles } => quantiles[quantiles.len() - 1],
        }
    }

    /// Image under `x -> -x`.
    pub fn reflect(&self) -> Measure {
        match self {
            Measure::Semicircle => Measure::Semicircle,
            Measure::Atoms { atoms } => {
                Measure::Atoms { atoms: atoms.iter().rev().map(|&(x, w)| (-x, w)).collect() }
            }
            Measure::Quantiles { quantiles } => {
                Measure::Quantiles { quantiles: quantiles.iter().rev().map(|x| -x).collect() }
            }
        }
    }

    fn check_outside(&self, op: &'static str, z: f64) -> Result<()> {
        let (lo, hi) = (self.left(), self.right());
        if z > lo && z < hi {
            return Err(Error::Domain { op, value: z, lo, hi });
        }
        Ok(())
    }

    /// Stieltjes transform `G(z) = ∫ 1/(z - x) dmu(x)` outside the support.
    /// At an edge carrying an atom the value is infinite.
    pub fn stieltjes(&self, z: f64) -> Result<f64> {
        self.check_outside("stieltjes", z)?;
        Ok(match self {
            Measure::Semicircle => {
                if z >= 0.0 {
                    semicircle_g(z)
                } else {
                    -semicircle_g(-z)
                }
            }
            Measure::Atoms { atoms } => {
                atoms.iter().filter(|a| a.1 > 0.0).map(|&(x, w)| w / (z - x)).sum()
            }
            Measure::Quantiles { quantiles } => {
                quantiles.iter().map(|&x| 1.0 / (z - x)).sum::<f64>() / quantiles.len() as f64
            }
        })
    }

    /// Inverse of the Stieltjes transform on the branch beyond the support:
    /// the `v >= r(mu)` with `G(v) = theta` for `theta > 0`, reflected for
    /// `theta < 0`.
    pub fn inverse_stieltjes(&self, theta: f64, tol: f64) -> Result<f64> {
        if theta < 0.0 {
            return Ok(-self.reflect().inverse_stieltjes(-theta, tol)?);
        }
        let r = self.right();
        let g_edge = self.stieltjes(r)?;
        if !(theta > 0.0) || theta > g_edge {
            return Err(Error::OutOfRange {
                op: "inverse_stieltjes",
                value: theta,
                detail: format!("need 0 < theta <= G(r) = {g_edge}"),
            });
        }
        if let Measure::Semicircle = self {
            return Ok(theta + 1.0 / theta);
        }
        // G is decreasing on (r, inf) and G(v) <= 1/(v - r), so the root lies
        // in [r, r + 1/theta].
        let (mut lo, mut hi) = (r, r + 1.0 / theta);
        for _ in 0..BISECT_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.stieltjes(mid)? > theta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let v = 0.5 * (lo + hi);
        debug_assert!((self.stieltjes(v)? - theta).abs() <= tol.max(1e-9 * theta));
        Ok(v)
    }

    /// Logarithmic potential `∫ ln|z - x| dmu(x)` outside the support.
    pub fn log_potential(&self, z: f64) -> Result<f64> {
        self.check_outside("log_potential", z)?;
        Ok(match self {
            Measure::Semicircle => semicircle_h(z.abs()),
            Measure::Atoms { atoms } => {
                atoms.iter().filter(|a| a.1 > 0.0).map(|&(x, w)| w * (z - x).abs().ln()).sum()
            }
            Measure::Quantiles { quantiles } => {
                quantiles.iter().map(|&x| (z - x).abs().ln()).sum::<f64>() / quantiles.len() as f64
            }
        })
    }

    /// Distribution function `mu(]-inf, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Measure::Semicircle => semicircle_cdf(x),
            Measure::Atoms { atoms } => atoms.iter().filter(|a| a.0 <= x).map(|a| a.1).sum(),
            Measure::Quantiles { quantiles } => {
                quantiles.partition_point(|&q| q <= x) as f64 / quantiles.len() as f64
            }
        }
    }

    /// Mass of the closed half-line `[x, inf)`.
    pub fn mass_at_least(&self, x: f64) -> f64 {
        match self {
            Measure::Semicircle => 1.0 - semicircle_cdf(x),
            Measure::Atoms { atoms } => atoms.iter().filter(|a| a.0 >= x).map(|a| a.1).sum(),
            Measure::Quantiles { quantiles } => {
                let below = quantiles.partition_point(|&q| q < x);
                (quantiles.len() - below) as f64 / quantiles.len() as f64
            }
        }
    }

    /// Left-continuous quantile `Q(p) = inf { x : p <= mu(]-inf, x]) }`.
    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            Measure::Semicircle => semicircle_quantile(p),
            Measure::Atoms { atoms } => {
                let mut cum = 0.0;
                for &(x, w) in atoms {
                    if w <= 0.0 {
                        continue;
                    }
                    cum += w;
                    if p <= cum + 1e-12 {
                        return x;
                    }
                }
                self.right()
            }
            Measure::Quantiles { quantiles } => {
                let n = quantiles.len();
                let j = ((p * n as f64).ceil() as usize).clamp(1, n) - 1;
                quantiles[j]
            }
        }
    }

    /// Quantile values on the midpoint grid `t_j = (j + 1/2)/n`.
    pub fn quantile_grid(&self, n: usize) -> Vec<f64> {
        match self {
            Measure::Quantiles { quantiles } if quantiles.len() == n => quantiles.clone(),
            _ => (0..n).map(|j| self.quantile((j as f64 + 0.5) / n as f64)).collect(),
        }
    }

    /// Image measure under a monotone map. The semicircle is first replaced by
    /// its quantile table on the default grid.
    pub fn pushforward(&self, f: impl Fn(f64) -> f64) -> Measure {
        match self {
            Measure::Atoms { atoms } => {
                let mut mapped: Vec<(f64, f64)> = atoms.iter().map(|&(x, w)| (f(x), w)).collect();
                mapped.sort_by(|a, b| a.0.total_cmp(&b.0));
                Measure::Atoms { atoms: mapped }
            }
            _ => {
                let mut q: Vec<f64> = self.quantile_grid(self.table_len()).into_iter().map(f).collect();
                q.sort_by(f64::total_cmp);
                Measure::Quantiles { quantiles: q }
            }
        }
    }

    fn table_len(&self) -> usize {
        match self {
            Measure::Quantiles { quantiles } => quantiles.len(),
            _ => QUANTILE_GRID,
        }
    }

    /// `∫ f dmu`. Exact for atoms and tables; for the semicircle the
    /// substitution `x = 2 cos phi` turns the integral into a smooth periodic
    /// one, integrated by the trapezoid rule.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        match self {
            Measure::Semicircle => {
                let n = QUANTILE_GRID;
                let h = PI / n as f64;
                let s: f64 = (1..n)
                    .map(|i| {
                        let phi = i as f64 * h;
                        f(2.0 * phi.cos()) * phi.sin().powi(2)
                    })
                    .sum();
                2.0 / PI * h * s
            }
            Measure::Atoms { atoms } => atoms.iter().map(|&(x, w)| w * f(x)).sum(),
            Measure::Quantiles { quantiles } => {
                quantiles.iter().map(|&x| f(x)).sum::<f64>() / quantiles.len() as f64
            }
        }
    }

    /// `∫_0^1 f(Q(t)) dt` by the midpoint rule on `n` cells.
    pub fn quantile_integral(&self, n: usize, f: impl Fn(f64) -> f64) -> f64 {
        self.quantile_grid(n).into_iter().map(f).sum::<f64>() / n as f64
    }

    /// `∫ x^2 dmu`.
    pub fn second_moment(&self) -> f64 {
        match self {
            Measure::Semicircle => 1.0,
            _ => self.expect(|x| x * x),
        }
    }

    /// Weighted support points used for integrating test functions.
    fn weighted_points(&self) -> Vec<(f64, f64)> {
        match self {
            Measure::Atoms { atoms } => atoms.clone(),
            _ => {
                let q = self.quantile_grid(self.table_len());
                let w = 1.0 / q.len() as f64;
                q.into_iter().map(|x| (x, w)).collect()
            }
        }
    }
}

/// Bounded-Lipschitz distance, approximated by the largest discrepancy over a
/// dictionary of hat functions `max(0, h - |x - c|)` (1-Lipschitz, total
/// variation `2h <= 1`) centred on a 256-point grid covering both supports.
pub fn bl_distance(mu: &Measure, nu: &Measure) -> f64 {
    const CENTRES: usize = 256;
    const HEIGHTS: [f64; 4] = [0.5, 0.25, 0.125, 0.0625];
    let lo = mu.left().min(nu.left()) - 1.0;
    let hi = mu.right().max(nu.right()) + 1.0;
    let (pm, pn) = (mu.weighted_points(), nu.weighted_points());
    let integrate = |pts: &[(f64, f64)], c: f64, h: f64| -> f64 {
        pts.iter().map(|&(x, w)| w * (h - (x - c).abs()).max(0.0)).sum()
    };
    let mut best = 0.0f64;
    for i in 0..CENTRES {
        let c = lo + (hi - lo) * i as f64 / (CENTRES - 1) as f64;
        for h in HEIGHTS {
            best = best.max((integrate(&pm, c, h) - integrate(&pn, c, h)).abs());
        }
    }
    best
}

/// Semicircle Stieltjes transform for `z >= 2`, written to avoid cancellation.
fn semicircle_g(z: f64) -> f64 {
    2.0 / (z + (z * z - 4.0).max(0.0).sqrt())
}

/// Semicircle logarithmic potential for `z >= 2`:
/// `z^2/4 - z sqrt(z^2-4)/4 + ln((z + sqrt(z^2-4))/2) - 1/2`.
fn semicircle_h(z: f64) -> f64 {
    let s = (z * z - 4.0).max(0.0).sqrt();
    z / (z + s) + ((z + s) / 2.0).ln() - 0.5
}

/// Semicircle distribution function.
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI
    }
}

/// Semicircle quantile by bisection of the distribution function.
pub fn semicircle_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return -2.0;
    }
    if p >= 1.0 {
        return 2.0;
    }
    let (mut lo, mut hi) = (-2.0f64, 2.0f64);
    for _ in 0..BISECT_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if semicircle_cdf(mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn stieltjes_examples() {
        let s = Measure::Semicircle;
        assert!(close(s.stieltjes(2.0).unwrap(), 1.0, 1e-15));
        assert!(close(s.stieltjes(2.5).unwrap(), 0.5, 1e-15));
        assert!(close(s.stieltjes(-2.5).unwrap(), -0.5, 1e-15));
        assert!(close(Measure::dirac(0.0).stieltjes(2.0).unwrap(), 0.5, 1e-15));
        assert!(matches!(s.stieltjes(1.0), Err(Error::Domain { .. })));
        assert_eq!(Measure::dirac(1.0).stieltjes(1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn inverse_stieltjes_examples() {
        let s = Measure::Semicircle;
        assert!(close(s.inverse_stieltjes(0.5, 1e-12).unwrap(), 2.5, 1e-15));
        assert!(close(s.inverse_stieltjes(1.0, 1e-12).unwrap(), 2.0, 1e-15));
        assert!(close(s.inverse_stieltjes(-0.5, 1e-12).unwrap(), -2.5, 1e-15));
        assert!(close(Measure::dirac(0.0).inverse_stieltjes(0.5, 1e-12).unwrap(), 2.0, 1e-12));
        assert!(matches!(s.inverse_stieltjes(1.5, 1e-12), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn log_potential_examples() {
        let s = Measure::Semicircle;
        assert!(close(s.log_potential(2.0).unwrap(), 0.5, 1e-15));
        assert!(close(s.log_potential(2.5).unwrap(), 4f64.ln() / 2.0 + 0.125, 1e-14));
        assert!(close(Measure::dirac(0.0).log_potential(std::f64::consts::E).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn quantile_examples() {
        assert!(close(Measure::Semicircle.quantile(0.5), 0.0, 1e-14));
        assert_eq!(Measure::dirac(3.5).quantile(0.123), 3.5);
        let u = Measure::atoms(vec![(4.0, 0.25), (1.0, 0.25), (3.0, 0.25), (2.0, 0.25)]).unwrap();
        assert_eq!(u.quantile(0.5), 2.0);
        let t = Measure::uniform(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(t.quantile(0.5), 2.0);
        assert_eq!(t.quantile(0.51), 3.0);
    }

    #[test]
    fn pushforward_examples() {
        let d = Measure::dirac(2.0).pushforward(|x| x + 1.0);
        assert_eq!(d, Measure::dirac(3.0));
        let bbp = |t: f64| if t <= 1.0 { 2.0 } else { t + 1.0 / t };
        let m = Measure::atoms(vec![(1.0, 0.5), (2.0, 0.5)]).unwrap().pushforward(bbp);
        assert_eq!(m, Measure::atoms(vec![(2.0, 0.5), (2.5, 0.5)]).unwrap());
        match Measure::Semicircle.pushforward(|x| x) {
            Measure::Quantiles { quantiles } => assert_eq!(quantiles.len(), QUANTILE_GRID),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn second_moments() {
        assert!(close(Measure::Semicircle.second_moment(), 1.0, 0.0));
        assert!(close(Measure::Semicircle.expect(|x| x * x), 1.0, 1e-12));
        assert!(close(Measure::dirac(3.0).second_moment(), 9.0, 1e-15));
        let m = Measure::atoms(vec![(-2.0, 0.5), (2.0, 0.5)]).unwrap();
        assert!(close(m.second_moment(), 4.0, 1e-15));
    }

    #[test]
    fn bl_examples() {
        let s = Measure::Semicircle;
        assert_eq!(bl_distance(&s, &s), 0.0);
        let d = bl_distance(&Measure::dirac(0.0), &Measure::dirac(1.0));
        assert!(d > 0.0 && d <= 1.0);
    }

    #[test]
    fn invalid_measures_rejected() {
        assert!(Measure::atoms(vec![(0.0, 0.6), (1.0, 0.5)]).is_err());
        assert!(Measure::atoms(vec![(0.0, 1.1), (1.0, -0.1)]).is_err());
        assert!(Measure::quantile_table(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        for m in [
            Measure::Semicircle,
            Measure::atoms(vec![(1.0, 0.5), (2.0, 0.5)]).unwrap(),
            Measure::uniform(&[0.0, 1.0, 2.0]).unwrap(),
        ] {
            let s = serde_json::to_string(&m).unwrap();
            assert_eq!(serde_json::from_str::<Measure>(&s).unwrap(), m);
        }
        let m: Measure = serde_json::from_str(r#"{"kind":"atoms","atoms":[[2.0,0.5],[1.0,0.5]]}"#).unwrap();
        assert_eq!(m.left(), 1.0);
        assert!(serde_json::from_str::<Measure>(r#"{"kind":"atoms","atoms":[[2.0,0.7]]}"#).is_err());
    }
}
