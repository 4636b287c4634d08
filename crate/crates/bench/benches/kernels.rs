use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use sphint_core::asymptotics::{j_functional, j_value, rate_i_theta};
use sphint_core::montecarlo::{annealed_mc, spherical_rank1_is_spectrum};
use sphint_core::randmat::{deterministic_semicircle_spectrum, eig_sym, sample_ensemble, Edge};
use sphint_core::{Beta, DeformationSpec, EnsembleSpec, EntryLaw, Measure};

fn eigensolver(c: &mut Criterion) {
    let mut g = c.benchmark_group("eig_sym");
    g.sample_size(10);
    for n in [100, 400] {
        let m = sample_ensemble(&EnsembleSpec { n, beta: Beta::Real, entry_law: EntryLaw::Gaussian, seed: 1 });
        g.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| b.iter(|| eig_sym(black_box(m)).unwrap()));
    }
    g.finish();
}

fn closed_forms(c: &mut Criterion) {
    let atoms = Measure::uniform(&[-1.5, -0.5, 0.0, 0.7, 1.9]).unwrap();
    c.bench_function("j_value/semicircle", |b| b.iter(|| j_value(black_box(2.0), black_box(2.5), &Measure::Semicircle, 1e-12)));
    c.bench_function("j_value/atoms", |b| b.iter(|| j_value(black_box(2.0), black_box(2.5), &atoms, 1e-12)));
    c.bench_function("rate_i_theta", |b| b.iter(|| rate_i_theta(black_box(1.5), black_box(3.0), 1e-10)));
    let xi = Measure::uniform(&[0.2, 0.8, 1.5]).unwrap();
    let nu = Measure::uniform(&[2.1, 2.4, 3.0]).unwrap();
    c.bench_function("j_functional", |b| b.iter(|| j_functional(black_box(&xi), black_box(&nu)).unwrap()));
}

fn samplers(c: &mut Criterion) {
    let mut g = c.benchmark_group("monte_carlo");
    g.sample_size(10);
    let eigs = deterministic_semicircle_spectrum(200, &[(Edge::Top, 2.5)]).unwrap();
    g.bench_function("rank1_is/n200", |b| {
        b.iter(|| spherical_rank1_is_spectrum(black_box(&eigs), 2.0, Beta::Real, 10_000, Some(0.7), 3).unwrap())
    });
    let ens = EnsembleSpec { n: 50, beta: Beta::Real, entry_law: EntryLaw::Rademacher, seed: 7 };
    let deform = DeformationSpec::new(vec![1.0, 0.5]).unwrap();
    g.bench_function("annealed/n50", |b| b.iter(|| annealed_mc(black_box(&ens), &deform, 2_000, 7).unwrap()));
    g.finish();
}

criterion_group!(benches, eigensolver, closed_forms, samplers);
criterion_main!(benches);
