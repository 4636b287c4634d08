//! Small derivative-free optimizers: golden-section search, Nelder–Mead and
//! the pool-adjacent-violators isotonic projection.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes a unimodal `f` on `[a, b]`. Returns `(argmin, min)`, including the
/// endpoints as candidates so boundary minima are reported exactly.
pub fn golden_section(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut iters = 0;
    while (b - a).abs() > tol && iters < 200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iters += 1;
    }
    let m = 0.5 * (a + b);
    [(c, fc), (d, fd), (m, f(m))].into_iter().fold((a, f(a)), |best, cand| {
        if cand.1 < best.1 {
            cand
        } else {
            best
        }
    })
}

/// Golden-section search that does not trust unimodality: a coarse grid scan
/// locates the best cell pair, golden-section refines inside it, and the result
/// is compared against a plain golden-section run over the whole interval.
pub fn robust_minimize(f: impl Fn(f64) -> f64, a: f64, b: f64, grid: usize, tol: f64) -> (f64, f64) {
    let grid = grid.max(2);
    let h = (b - a) / grid as f64;
    let (mut ibest, mut fbest) = (0, f64::INFINITY);
    for i in 0..=grid {
        let v = f(a + i as f64 * h);
        if v < fbest {
            ibest = i;
            fbest = v;
        }
    }
    let lo = a + ibest.saturating_sub(1) as f64 * h;
    let hi = (a + (ibest + 1) as f64 * h).min(b);
    let local = golden_section(&f, lo, hi, tol);
    let global = golden_section(&f, a, b, tol);
    if global.1 < local.1 {
        global
    } else {
        local
    }
}

/// Outcome of a Nelder–Mead run.
#[derive(Clone, Debug)]
pub struct Simplex {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Minimizes `f` by the Nelder–Mead simplex method from `x0` with initial
/// edge length `step`. Stops when the spread of simplex values drops below
/// `ftol` or after `max_evals` evaluations.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, ftol: f64, max_evals: usize) -> Simplex {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut evals = n + 1;
    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
    };
    while evals < max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        if (vals[n] - vals[0]).abs() <= ftol * (1.0 + vals[0].abs()) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / n as f64;
            }
        }
        let reflected = combine(&centroid, &pts[n], -1.0);
        let fr = f(&reflected);
        evals += 1;
        if fr < vals[0] {
            let expanded = combine(&centroid, &pts[n], -2.0);
            let fe = f(&expanded);
            evals += 1;
            if fe < fr {
                pts[n] = expanded;
                vals[n] = fe;
            } else {
                pts[n] = reflected;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = reflected;
            vals[n] = fr;
        } else {
            let (target, ft) = if fr < vals[n] { (reflected, fr) } else { (pts[n].clone(), vals[n]) };
            let contracted = combine(&centroid, &target, 0.5);
            let fc = f(&contracted);
            evals += 1;
            if fc < ft {
                pts[n] = contracted;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    pts[i] = combine(&pts[0], &pts[i], 0.5);
                    vals[i] = f(&pts[i]);
                }
                evals += n;
            }
        }
    }
    let best = (0..=n).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap_or(0);
    Simplex { x: pts[best].clone(), value: vals[best], evaluations: evals }
}

/// Least-squares projection onto non-decreasing sequences
/// (pool-adjacent-violators).
pub fn isotonic(y: &[f64]) -> Vec<f64> {
    // blocks of (mean, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, c2) = blocks[blocks.len() - 1];
            let (m1, c1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let c = c1 + c2;
            *blocks.last_mut().unwrap() = ((m1 * c1 as f64 + m2 * c2 as f64) / c as f64, c);
        }
    }
    blocks.into_iter().flat_map(|(m, c)| std::iter::repeat_n(m, c)).collect()
}
