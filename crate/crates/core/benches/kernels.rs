use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ges2n_core::*;

fn execs() -> Vec<(&'static str, Exec)> {
    let mut v = vec![("sequential", Exec::Sequential)];
    #[cfg(feature = "parallel")]
    v.push(("parallel", Exec::Parallel));
    v
}

fn setup(filter_len: usize) -> (VibrationRecord, AngleProfile, Vec<f64>) {
    let rec = generate(&SynthConfig::default()).unwrap().record;
    let th = integrate_angle(&rec).unwrap();
    let g = normalize_filter(&ges2n_core::optimizer::lpc_init(rec.x(), filter_len).unwrap())
        .unwrap()
        .into_parts()
        .1;
    (rec, th, g)
}

fn kernels(c: &mut Criterion) {
    let d = 256;
    let (rec, th, g) = setup(d);
    let mut group = c.benchmark_group("kernels");
    group.sample_size(20);
    for (name, exec) in execs() {
        group.bench_function(BenchmarkId::new("fir_filter", name), |b| {
            b.iter(|| fir_filter(rec.x(), &g, exec).unwrap())
        });
        let problem =
            DesignProblem::new(&rec, &th, Variant::MaxNp, BandSpec::default(), d, GridOptions::default(), exec)
                .unwrap();
        let y = fir_filter(rec.x(), &g, exec).unwrap().y;
        let op = problem.operator();
        group.bench_function(BenchmarkId::new("ses", name), |b| b.iter(|| op.ses(&y).unwrap()));
        let spectrum = op.ses(&y).unwrap().spectrum;
        group.bench_function(BenchmarkId::new("vs_adjoint", name), |b| {
            b.iter(|| op.adjoint_real(&spectrum).unwrap())
        });
        group.bench_function(BenchmarkId::new("objective_and_gradient", name), |b| {
            b.iter(|| problem.log_psi_and_grad_h(&g).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
