use std::hint::black_box;

use benchlab::bench::{ProcessSync, Scheme, SchemeSpec};
use benchlab::clocksync::{SyncConfig, SyncMethod};
use benchlab::experiment::{run_benchmark, ExperimentPlan};
use benchlab::par::Execution;
use benchlab::sim::InstanceConfig;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn plan() -> ExperimentPlan {
    let spec = SchemeSpec {
        sync_config: SyncConfig { n_fitpts: 50, n_exchanges: 10, ..SyncConfig::default() },
        ..SchemeSpec::new(Scheme::Ms4, ProcessSync::Window { method: SyncMethod::Hca, win_size: 1e-3 }, 50)
    };
    let mut p = ExperimentPlan::new(16, 8, vec![8, 1024, 65536], vec!["bcast".into(), "allreduce".into()], 50, spec);
    p.master_seed = 1;
    p
}

fn mpiruns(c: &mut Criterion) {
    let plan = plan();
    let cfg = InstanceConfig::new(16);
    let mut g = c.benchmark_group("run_benchmark");
    g.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| black_box(run_benchmark(&plan, &cfg, exec).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, mpiruns);
criterion_main!(benches);
