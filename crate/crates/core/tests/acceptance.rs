//! Acceptance run: one `[PASS]`/`[FAIL]` line per criterion, non-zero exit
//! status if any criterion fails. Each criterion also has a wall-clock budget.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng as _;
use sphint_core::applications::*;
use sphint_core::asymptotics::*;
use sphint_core::montecarlo::*;
use sphint_core::randmat::*;
use sphint_core::variational::*;
use sphint_core::{rng, Measure};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn j_closed_forms() -> Outcome {
    let mut worst = 0.0f64;
    for i in 1..=9 {
        let t = i as f64 / 10.0;
        worst = worst.max((j_semicircle(t, 2.0) - t * t / 2.0).abs());
    }
    for i in 0..=8 {
        let t = 1.0 + 0.25 * i as f64;
        worst = worst.max((j_semicircle(t, 2.0) - (2.0 * t - t.ln() - 1.5)).abs());
    }
    // one-sided limits at theta = 1, each extrapolated linearly (error O(e^2))
    let e = 1e-4;
    let j = |t: f64| j_semicircle(t, 2.0);
    let jump = ((2.0 * j(1.0 - e) - j(1.0 - 2.0 * e)) - (2.0 * j(1.0 + e) - j(1.0 + 2.0 * e))).abs();
    outcome(worst < 1e-9 && jump < 1e-6, format!("max error {worst:.2e}, branch jump {jump:.2e}"))
}

fn spiked_identity() -> Outcome {
    let mut worst = 0.0f64;
    for x in [1.5, 2.0, 4.0, 9.0] {
        let t: f64 = f64::sqrt(x);
        let got = j_semicircle(t, t + 1.0 / t);
        worst = worst.max((got - (x - x.ln() - 1.0 / (2.0 * x))).abs());
    }
    outcome(worst < 1e-9, format!("max error {worst:.2e}"))
}

fn rate_functions() -> Outcome {
    let mut ok = rate_i(2.0) == 0.0 && rate_i(-2.0) == 0.0;
    let mut quad_err = 0.0f64;
    for x in [2.1, 2.5, 3.0, 4.0, 6.0] {
        // t = 2 cosh(u)
        let want = common::simpson(&|u: f64| 4.0 * u.sinh().powi(2), 0.0, (x / 2.0f64).acosh(), 1e-13);
        quad_err = quad_err.max((rate_i(x) - want).abs());
    }
    let mut zero_err = 0.0f64;
    for t in [1.0, 1.5, 2.0, 3.0] {
        zero_err = zero_err.max(rate_i_theta(t, t + 1.0 / t, 1e-12).abs());
    }
    let mut envelope_violations = 0;
    for i in 0..20 {
        let t = 3.0 * i as f64 / 19.0;
        let m = t.max(1.0) + 1.0 / t.max(1.0);
        for j in 0..20 {
            let x = 2.0 + 4.0 * j as f64 / 19.0;
            let v = rate_i_theta(t, x, 1e-12);
            if v < 0.5 * (x - m).powi(2) - 1e-9 || v > (x * x + t * t) / 2.0 + 1e-9 {
                envelope_violations += 1;
            }
        }
    }
    ok &= quad_err < 1e-8 && zero_err < 1e-8 && envelope_violations == 0;
    outcome(ok, format!("quadrature {quad_err:.2e}, zeros {zero_err:.2e}, envelope violations {envelope_violations}"))
}

fn crisanti_sommers() -> Outcome {
    let (mut value_err, mut q_err) = (0.0f64, 0.0f64);
    for t in [0.25, 0.5, 0.9, 1.0, 1.5, 2.0, 3.0, 5.0] {
        let (q, v) = cs_minimize(t, 1e-12);
        value_err = value_err.max((v - sk_free_energy(t)).abs());
        q_err = q_err.max((q - (1.0 - 1.0 / t).max(0.0)).abs());
    }
    outcome(value_err < 1e-6 && q_err < 1e-4, format!("value {value_err:.2e}, minimizer {q_err:.2e}"))
}

fn variational_bound() -> Outcome {
    let mut r = rng::stream(0xBEEF, 5);
    let (mut worst_excess, mut worst_attain, mut attained_cases) = (f64::NEG_INFINITY, 0.0f64, 0);
    for _ in 0..100 {
        let k = r.gen_range(1..=4);
        let lambdas: Vec<f64> = (0..k).map(|_| r.gen_range(2.0..4.0)).collect();
        let thetas: Vec<f64> = (0..k).map(|_| r.gen_range(0.2..3.0)).collect();
        let pr = VariationalProblem::new(Measure::Semicircle, lambdas, thetas).unwrap();
        let bound = pr.bound().unwrap();
        let m = maximize_m(&pr, 16, 1e-9).unwrap();
        worst_excess = worst_excess.max(m.value - bound);
        let above = pr.thetas().iter().zip(pr.lambdas()).all(|(&t, &l)| t >= Measure::Semicircle.stieltjes(l).unwrap());
        if above {
            attained_cases += 1;
            let c = candidate_point(&pr).unwrap();
            worst_attain = worst_attain.max((c.value.unwrap() - bound).abs());
        }
    }
    outcome(
        worst_excess <= 1e-6 && worst_attain <= 1e-6,
        format!("max(value - bound) {worst_excess:.2e}; candidate gap {worst_attain:.2e} on {attained_cases} cases"),
    )
}

fn exact_n2_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for theta in [0.25, 0.5, 1.0, 2.0, 3.0] {
        for gap in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let (l1, l2) = (gap / 2.0, -gap / 2.0);
            let got = spherical_exact_n2(l1, l2, theta).unwrap();
            worst = worst.max((got - common::n2_angle_quadrature(l1, l2, theta, 64)).abs());
        }
    }
    let a = Matrix::diagonal(&[1.0, -1.0]);
    let d = DeformationSpec::new(vec![1.0]).unwrap();
    let e = spherical_mc(&a, &d, Beta::Real, 1_000_000, 6).unwrap();
    let exact = spherical_exact_n2(1.0, -1.0, 1.0).unwrap();
    let z = (e.log_value - exact).abs() / e.stderr_log;
    outcome(worst < 1e-10 && z <= 3.0, format!("quadrature {worst:.2e}; MC off by {z:.2} stderr"))
}

fn annealed() -> Outcome {
    let d = DeformationSpec::new(vec![1.0, 0.5]).unwrap();
    let exact = annealed_exact(&d, Beta::Real, 50);
    let spec = |law| EnsembleSpec { n: 50, beta: Beta::Real, entry_law: law, seed: 7 };
    let (g, gse) = annealed_mc(&spec(EntryLaw::Gaussian), &d, 100_000, 7).unwrap().normalized(Beta::Real, 50, 2);
    let (r, rse) = annealed_mc(&spec(EntryLaw::Rademacher), &d, 100_000, 7).unwrap().normalized(Beta::Real, 50, 2);
    let ok = (g - exact).abs() <= 3.0 * gse + 1e-10 && r <= exact + 3.0 * rse + 1e-10;
    outcome(ok, format!("exact {exact}, gaussian {g:.12} (se {gse:.1e}), rademacher {r:.6} (se {rse:.1e})"))
}

fn limit() -> Outcome {
    let up = limit_check(&[50, 100, 200], &DeformationSpec::new(vec![2.0]).unwrap(), &[(Edge::Top, 2.5)], Beta::Real, 100_000, 8)
        .unwrap();
    let sub = limit_check(&[50, 100, 200], &DeformationSpec::new(vec![0.5]).unwrap(), &[], Beta::Real, 100_000, 8).unwrap();
    let last = up.rows.last().unwrap().deviation;
    let sub_last = sub.rows.last().unwrap().deviation;
    let devs: Vec<String> = up.rows.iter().map(|r| format!("{:.4}", r.deviation)).collect();
    outcome(
        last < 0.1 && up.monotone && (up.theory - 2.4887).abs() < 1e-4 && sub_last < 0.05,
        format!("theta=2 deviations [{}] vs {:.4}; theta=0.5 deviation {sub_last:.4}", devs.join(", "), up.theory),
    )
}

fn sandwich() -> Outcome {
    let mut r = rng::stream(0x5A4D, 0);
    let (mut passed, mut standard, mut reversed) = (0, 0, 0);
    for case in 0..20 {
        let n = if case % 2 == 0 { 2 } else { 3 };
        let k = r.gen_range(1..n);
        let p: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
        let sign = if case % 4 < 2 { 1.0 } else { -1.0 };
        let q: Vec<f64> = (0..n).map(|i| if i < k { r.gen_range(-2.0..2.0) } else { sign * r.gen_range(0.0..2.0) }).collect();
        let rep = decomposition_check(&p, &q, k).unwrap();
        passed += rep.holds as usize;
        match rep.direction {
            Direction::Standard => standard += 1,
            Direction::Reversed => reversed += 1,
        }
    }
    outcome(passed == 20 && standard > 0 && reversed > 0, format!("{passed}/20 hold ({standard} standard, {reversed} reversed)"))
}

fn bbp() -> Outcome {
    let pts = bbp_sweep(400, Beta::Real, &[0.5, 1.5, 2.0], 50, 10).unwrap();
    let worst = pts.iter().map(|p| (p.mean_top - p.predicted).abs()).fold(0.0, f64::max);
    let s: Vec<String> = pts.iter().map(|p| format!("{}: {:.4} vs {:.4}", p.theta, p.mean_top, p.predicted)).collect();
    outcome(worst < 0.05, s.join("; "))
}

fn denoising() -> Outcome {
    let thetas = [2.0, 1.0, 0.6];
    let gammas: Vec<f64> = (1..=300).map(|i| 0.025 * i as f64).collect();
    let (mut curve_err, mut fd_err) = (0.0f64, 0.0f64);
    let mut mi = Vec::new();
    for &g in &gammas {
        let p = DenoiseProblem::new(g, thetas.to_vec()).unwrap();
        let v = mi_finite_rank(&p);
        let eta = Measure::uniform(&thetas).unwrap();
        let via_j = mi_growing_rank(&eta, g, &RateDescriptor::Deterministic, 3 * 64).unwrap().value;
        curve_err = curve_err.max((v - via_j).abs());
        if p.transitions().iter().all(|t| (t - g).abs() > 1e-3) {
            fd_err = fd_err.max((mmse_from_derivative(&p, 1e-5).unwrap() - mmse(&p)).abs());
        }
        mi.push(v);
    }
    let monotone = mi.windows(2).all(|w| w[1] >= w[0]);
    let concave = mi.windows(3).all(|w| w[0] + w[2] - 2.0 * w[1] <= 1e-12);
    outcome(
        curve_err < 1e-10 && fd_err < 1e-4 && monotone && concave,
        format!("curve {curve_err:.2e}, I-MMSE {fd_err:.2e}, non-decreasing {monotone}, concave {concave}"),
    )
}

fn vector_spin() -> Outcome {
    let thetas = vec![0.3, 1.0, 2.0];
    let p = VectorSpinProblem::identity(thetas.clone()).unwrap();
    let reduction = vector_spin_free_energy(&p) - thetas.iter().map(|&t| sk_free_energy(t)).sum::<f64>() / 3.0;
    let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
    let v = vector_spin_free_energy(&VectorSpinProblem::new(q, vec![1.0, 1.0]).unwrap());
    let mut devs = Vec::new();
    for t in [0.5, 2.0] {
        let r = vector_spin_mc_check(&VectorSpinProblem::identity(vec![t]).unwrap(), 64, 100_000, 12).unwrap();
        devs.push(r.deviation);
    }
    outcome(
        reduction == 0.0 && (v - 0.2330).abs() < 1e-4 && devs.iter().all(|d| *d < 0.15),
        format!("reduction {reduction:e}, q=0.5 value {v:.6}, MC deviations {:.4} / {:.4}", devs[0], devs[1]),
    )
}

fn rate_deformed_zero() -> Outcome {
    let xi = Measure::atoms(vec![(-2.0, 0.25), (-0.5, 0.25), (0.7, 0.25), (3.0, 0.25)]).unwrap();
    let push = |x: f64| {
        let a = x.abs().max(1.0);
        (a + 1.0 / a).copysign(x)
    };
    let star = xi.pushforward(push);
    let at_star = rate_deformed(&xi, &star);
    let perturbed = [
        xi.pushforward(|x| push(x) + 0.2 * x.signum()),
        Measure::atoms(vec![(-2.5, 0.25), (-2.0, 0.25), (2.0, 0.25), (4.0, 0.25)]).unwrap(),
        Measure::atoms(vec![(-2.5, 0.5), (2.0, 0.25), (3.3333333333333335, 0.25)]).unwrap(),
    ];
    let vals: Vec<f64> = perturbed.iter().map(|nu| rate_deformed(&xi, nu)).collect();
    outcome(
        at_star.abs() < 1e-6 && vals.iter().all(|v| *v > 0.0),
        format!("at minimizer {at_star:.2e}; perturbed {:?}", vals.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, u64); 13] = [
        ("J closed-form suite", j_closed_forms, 1),
        ("spiked identity", spiked_identity, 1),
        ("rate-function suite", rate_functions, 5),
        ("Crisanti-Sommers equivalence", crisanti_sommers, 1),
        ("variational bound", variational_bound, 120),
        ("exact N=2 oracle", exact_n2_oracle, 60),
        ("annealed integral", annealed, 120),
        ("limit check", limit, 300),
        ("decomposition sandwich", sandwich, 60),
        ("BBP transition", bbp, 180),
        ("denoising", denoising, 5),
        ("vector spin", vector_spin, 180),
        ("deformed extremal rate", rate_deformed_zero, 5),
    ];
    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(*budget);
        let pass = out.pass && in_time;
        failures += !pass as usize;
        println!(
            "[{}] {:>2}. {name}: {} ({:.2} s of {budget} s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            took.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
