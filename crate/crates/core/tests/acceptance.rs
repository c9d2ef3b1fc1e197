//! Acceptance suite. Runs as a plain binary and prints one PASS/FAIL line
//! per criterion.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use qampa::ansatz::{self, AngleSchedule, AnsatzKind, Step};
use qampa::compiler::{self, GateSet};
use qampa::harness::{self, median, ExperimentConfig, Profile};
use qampa::metrics::{self, expected_best_r, Scorer, DEFAULT_TIE_TOLERANCE};
use qampa::optimizer::{ordering_seed, scanlast, ScanlastConfig};
use qampa::oracle;
use qampa::problem::{
    energy_table, feasible_basis, generate_instance, generate_instance_with, GeneratorOptions,
    ProblemInstance, BENCHMARK_COEFFICIENTS,
};
use qampa::seeding::rng;
use qampa::subspace_sim::{dicke_state, Subspace, SubspaceState};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn space(inst: &ProblemInstance) -> Arc<Subspace> {
    Subspace::new(feasible_basis(inst.n(), inst.kappa()).unwrap())
}

fn random_pairs(r: &mut impl Rng, p: usize, gmax: f64) -> Vec<(f64, f64)> {
    (0..p)
        .map(|_| (r.gen_range(-gmax..gmax), r.gen_range(-PI..PI)))
        .collect()
}

fn with_fields(n: usize, seed: u64) -> ProblemInstance {
    let mut r = rng(seed ^ 0xf1e1d);
    let fields = (0..n).map(|_| *[-1.0, -0.5, 0.0, 0.5, 1.0].choose(&mut r).unwrap()).collect();
    let opts = GeneratorOptions {
        fields: Some(fields),
        ..GeneratorOptions::default()
    };
    generate_instance_with(n, n / 2, seed, &opts).unwrap()
}

fn oracle_equivalence() -> Check {
    let mut r = rng(1);
    let (mut worst_dev, mut worst_leak) = (0.0f64, 0.0f64);
    for n in [4, 6] {
        for i in 0..20 {
            let inst = if i % 2 == 0 {
                generate_instance(n, n / 2, &BENCHMARK_COEFFICIENTS, 100 + i).unwrap()
            } else {
                with_fields(n, 100 + i)
            };
            let kind = *AnsatzKind::ALL.choose(&mut r).unwrap();
            let p = r.gen_range(1..=3);
            let plan = ansatz::build(kind, &inst, p, r.gen()).unwrap();
            let sched = AngleSchedule::from_pairs(&random_pairs(&mut r, p, 2.0 * PI));
            let sp = space(&inst);
            let sub = ansatz::execute(&plan, &sched, dicke_state(&sp).unwrap()).unwrap();
            let dense = oracle::dense_execute(&plan, &sched).unwrap();
            let restricted = dense.restrict(sp.basis());
            let dev = sub
                .amplitudes()
                .iter()
                .zip(&restricted)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            worst_dev = worst_dev.max(dev);
            worst_leak = worst_leak.max(dense.leakage(inst.kappa()));
        }
    }
    ensure(worst_dev < 1e-10, || format!("max deviation {worst_dev:e}"))?;
    ensure(worst_leak < 1e-12, || format!("leakage {worst_leak:e}"))?;
    Ok(format!("40 circuits, max deviation {worst_dev:.1e}, leakage {worst_leak:.1e}"))
}

fn limit_mapping() -> Check {
    let mut r = rng(2);
    let mut worst = 1.0f64;
    for t in 0..50 {
        let n = if t % 2 == 0 { 4 } else { 6 };
        let inst = generate_instance(n, n / 2, &BENCHMARK_COEFFICIENTS, 200 + t).unwrap();
        let (gamma, beta) = (r.gen_range(-PI..PI), r.gen_range(-PI..PI));
        let oseed = r.gen();
        let qaoa = ansatz::build(AnsatzKind::Qaoa, &inst, 1, oseed).unwrap();
        let qampa = ansatz::build(AnsatzKind::Qampa, &inst, 2, oseed).unwrap();
        let pairs = |steps: &[Step]| -> Vec<(usize, usize)> {
            steps
                .iter()
                .filter_map(|s| match s {
                    Step::Pass { gates, .. } => Some(gates.iter().map(|g| g.pair)),
                    Step::FieldPhases => None,
                })
                .flatten()
                .collect()
        };
        let xy_order = pairs(&qaoa.rounds()[0].steps[1..]);
        ensure(xy_order == pairs(&qampa.rounds()[1].steps), || {
            "XY ordering differs".into()
        })?;
        let sp = space(&inst);
        let a = ansatz::execute(
            &qaoa,
            &AngleSchedule::from_pairs(&[(gamma, beta)]),
            dicke_state(&sp).unwrap(),
        )
        .unwrap();
        let b = ansatz::execute(
            &qampa,
            &AngleSchedule::from_pairs(&[(gamma, 0.0), (0.0, beta)]),
            dicke_state(&sp).unwrap(),
        )
        .unwrap();
        worst = worst.min(a.fidelity(&b));
    }
    ensure(worst >= 1.0 - 1e-10, || format!("fidelity {worst}"))?;
    Ok(format!("50 triples, min fidelity 1 - {:.1e}", 1.0 - worst))
}

fn random_distribution(r: &mut impl Rng, k: usize) -> (Vec<f64>, Vec<f64>) {
    let w: Vec<f64> = (0..k).map(|_| r.gen::<f64>() + 1e-3).collect();
    let total: f64 = w.iter().sum();
    let probs = w.iter().map(|x| x / total).collect();
    let eps = (0..k).map(|_| (r.gen_range(0..=8) as f64) / 8.0).collect();
    (probs, eps)
}

fn metric_correctness() -> Check {
    let mut r = rng(3);
    let mut worst_exact = 0.0f64;
    for k in 1..=6 {
        for _ in 0..25 {
            let (p, eps) = random_distribution(&mut r, k);
            let dist = Scorer::new(&eps, DEFAULT_TIE_TOLERANCE).unwrap().score(&p).unwrap();
            for big_r in 1..=4 {
                let closed = expected_best_r(&dist, big_r).unwrap();
                let brute = oracle::exhaustive_best_r(&p, &eps, big_r).unwrap();
                worst_exact = worst_exact.max((closed - brute).abs());
            }
            let mean: f64 = p.iter().zip(&eps).map(|(a, b)| a * b).sum();
            let best1 = expected_best_r(&dist, 1).unwrap();
            ensure((best1 - mean).abs() < 1e-12, || format!("BEST_1 {best1} vs mean {mean}"))?;
        }
    }
    ensure(worst_exact < 1e-12, || format!("exhaustive mismatch {worst_exact:e}"))?;

    let mut worst_z = 0.0f64;
    let zs: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng(300 + i);
            let k = r.gen_range(2..=8);
            let (p, eps) = random_distribution(&mut r, k);
            let big_r = r.gen_range(1..=5);
            let dist = Scorer::new(&eps, DEFAULT_TIE_TOLERANCE).unwrap().score(&p).unwrap();
            let exact = expected_best_r(&dist, big_r).unwrap();
            let (est, se) = oracle::mc_best_r(&p, &eps, big_r, 1_000_000, 400 + i).unwrap();
            if se == 0.0 {
                (est - exact).abs() * 1e12
            } else {
                (est - exact).abs() / se
            }
        })
        .collect();
    for z in zs {
        worst_z = worst_z.max(z);
    }
    ensure(worst_z <= 3.0, || format!("Monte-Carlo off by {worst_z:.2} standard errors"))?;
    Ok(format!(
        "exhaustive max error {worst_exact:.1e}; Monte-Carlo worst |z| = {worst_z:.2}"
    ))
}

fn odd_instance(n: usize, seed: u64) -> ProblemInstance {
    let mut r = rng(seed);
    let couplings = (0..n * (n - 1) / 2)
        .map(|_| *BENCHMARK_COEFFICIENTS.choose(&mut r).unwrap())
        .collect();
    ProblemInstance::new(format!("odd-{n}-{seed}"), n, n / 2, seed, couplings, vec![0.0; n]).unwrap()
}

fn compilation_soundness() -> Check {
    let mut r = rng(4);
    let mut worst_fid = 1.0f64;
    let mut worst_res = 0.0f64;
    let mut fused_total = 0;
    let mut max_rot = 0;
    for n in [4, 5, 6] {
        for t in 0..3 {
            let inst = if n % 2 == 0 {
                generate_instance(n, n / 2, &BENCHMARK_COEFFICIENTS, 40 + t).unwrap()
            } else {
                odd_instance(n, 40 + t)
            };
            for kind in [AnsatzKind::Qaoa, AnsatzKind::Qampa] {
                let p = 1 + t as usize % 2;
                let plan = ansatz::build(kind, &inst, p, r.gen()).unwrap();
                let sched = AngleSchedule::from_pairs(&random_pairs(&mut r, p, 2.0 * PI));
                for set in GateSet::ALL {
                    let circ = compiler::compile(&plan, &sched, set).map_err(|e| e.to_string())?;
                    let fid = compiler::verify_compilation(&plan, &sched, &circ).unwrap();
                    worst_fid = worst_fid.min(fid);
                    for placed in &circ.fused {
                        let s = compiler::synthesize_fused(&placed.gate, set).unwrap();
                        worst_res = worst_res.max(s.residual);
                        fused_total += 1;
                        if set == GateSet::CnotSet {
                            ensure(s.cnot_count() == 3, || format!("{} CNOTs", s.cnot_count()))?;
                            max_rot = max_rot.max(s.rotation_count());
                        }
                    }
                }
            }
        }
    }
    ensure(worst_fid >= 1.0 - 1e-8, || format!("fidelity {worst_fid}"))?;
    ensure(worst_res < 1e-8, || format!("residual {worst_res:e}"))?;
    ensure(max_rot <= 15, || format!("{max_rot} rotations in one fused gate"))?;
    Ok(format!(
        "min fidelity 1 - {:.1e}, {fused_total} syntheses, max residual {worst_res:.1e}, 3 CNOTs and <= {max_rot} rotations each",
        1.0 - worst_fid
    ))
}

fn depth_factor() -> Check {
    let mut lines = Vec::new();
    for n in [4, 8, 12] {
        let inst = generate_instance(n, n / 2, &BENCHMARK_COEFFICIENTS, 5).unwrap();
        for p in 1..=3 {
            let sched = AngleSchedule::from_pairs(&vec![(0.4, 0.3); p]);
            let report = |kind| {
                let plan = ansatz::build(kind, &inst, p, 9).unwrap();
                compiler::depth_report(&compiler::compile(&plan, &sched, GateSet::NativeXyZz).unwrap())
            };
            let (qaoa, qampa) = (report(AnsatzKind::Qaoa), report(AnsatzKind::Qampa));
            ensure(qampa.fused_two_qubit_gates == p * n * (n - 1) / 2, || {
                format!("QAMPA count {} at n={n} p={p}", qampa.fused_two_qubit_gates)
            })?;
            ensure(qaoa.fused_two_qubit_gates == p * n * (n - 1), || {
                format!("QAOA count {} at n={n} p={p}", qaoa.fused_two_qubit_gates)
            })?;
            ensure(
                qaoa.fused_two_qubit_depth == 2 * qampa.fused_two_qubit_depth,
                || format!("depths {} vs {}", qaoa.fused_two_qubit_depth, qampa.fused_two_qubit_depth),
            )?;
        }
        lines.push(format!("n={n}"));
    }
    Ok(format!("{}: gate and layer ratios exactly 2 for p = 1..3", lines.join(",")))
}

fn scanlast_sanity() -> Check {
    let mut margins = Vec::new();
    for i in 0..5u64 {
        let inst = generate_instance(4, 2, &BENCHMARK_COEFFICIENTS, 600 + i).unwrap();
        for kind in [AnsatzKind::Qaoa, AnsatzKind::Qampa] {
            let cfg = ScanlastConfig::desk(4, 77);
            let run = scanlast(&inst, kind, &cfg).map_err(|e| e.to_string())?;
            let grid = oracle::grid_search_p1(&inst, kind, 64, ordering_seed(77, inst.id()), 5)
                .unwrap();
            let best1 = run.layers[0].best().value;
            ensure(best1 <= grid.value + 1e-3, || {
                format!("{} {kind}: scanlast {best1} vs grid {}", inst.id(), grid.value)
            })?;
            margins.push(grid.value - best1);
            for w in run.layers.windows(2) {
                ensure(w[1].best().value <= w[0].best().value, || {
                    format!("{} {kind}: p={} worse than p={}", inst.id(), w[1].p, w[0].p)
                })?;
            }
        }
    }
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(format!(
        "10 runs; grid - scanlast >= {min_margin:.1e}; monotone through p = 4"
    ))
}

fn benchmark_trends() -> Check {
    let mut config = ExperimentConfig::profile(Profile::Desk, 2024);
    config.instances_per_size = 20;
    config.sizes = vec![8];
    config.p_max = 4;
    let instances = harness::ensemble(&config).unwrap();
    let cells: Vec<(&ProblemInstance, AnsatzKind)> = instances
        .iter()
        .flat_map(|i| AnsatzKind::ALL.into_iter().map(move |k| (i, k)))
        .collect();
    let records: Vec<harness::ResultRecord> = cells
        .par_iter()
        .map(|(inst, kind)| harness::run_cell(inst, *kind, &config).map(|(r, _)| r))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?
        .into_iter()
        .flatten()
        .collect();
    let mut med: BTreeMap<(AnsatzKind, usize), f64> = BTreeMap::new();
    for kind in AnsatzKind::ALL {
        for p in 1..=4 {
            let v: Vec<f64> = records
                .iter()
                .filter(|r| r.ansatz == kind && r.p == p)
                .map(|r| r.metric(5).unwrap())
                .collect();
            med.insert((kind, p), median(&v));
        }
    }
    let m = |k, p| med[&(k, p)];
    let table: String = AnsatzKind::ALL
        .iter()
        .map(|&k| format!("{k}={:.4}", m(k, 2)))
        .collect::<Vec<_>>()
        .join(" ");
    for kind in [AnsatzKind::Qaoa, AnsatzKind::Qampa] {
        for p in 1..4 {
            ensure(m(kind, p + 1) < m(kind, p), || {
                format!("(a) {kind} median not decreasing at p={p}: {} -> {}", m(kind, p), m(kind, p + 1))
            })?;
        }
    }
    let gap = (m(AnsatzKind::Qaoa, 4) - m(AnsatzKind::Qampa, 4)).abs();
    ensure(gap <= 0.05, || format!("(b) |QAOA - QAMPA| = {gap} at p=4"))?;
    ensure(m(AnsatzKind::Qaoa, 2) <= m(AnsatzKind::QaoaNoJ, 2), || {
        format!("(c) QAOA {} > QAOA_NOJ {}", m(AnsatzKind::Qaoa, 2), m(AnsatzKind::QaoaNoJ, 2))
    })?;
    ensure(m(AnsatzKind::Qampa, 2) <= m(AnsatzKind::QampaNoJ, 2), || {
        format!("(c) QAMPA {} > QAMPA_NOJ {}", m(AnsatzKind::Qampa, 2), m(AnsatzKind::QampaNoJ, 2))
    })?;
    // With every J set to 1 the ZZ layer of QAOA_NOJ is a global phase on the
    // fixed-weight sector, so QAOA_NOJ and XY_NOJ differ only in mixer wire
    // order. They are ranked as one class; XY_NOJ must trail every other kind.
    let xy_nocoupling = m(AnsatzKind::XyNoJ, 2);
    for kind in [
        AnsatzKind::Qaoa,
        AnsatzKind::Qampa,
        AnsatzKind::QampaNoJ,
        AnsatzKind::XyWeighted,
    ] {
        ensure(m(kind, 2) < xy_nocoupling, || {
            format!("(c) {kind} {} is not better than XY_NOJ; {table}", m(kind, 2))
        })?;
    }
    ensure((xy_nocoupling - m(AnsatzKind::QaoaNoJ, 2)).abs() <= 0.01, || {
        format!("(c) XY_NOJ and QAOA_NOJ should coincide; {table}")
    })?;
    let fmt = |k| {
        (1..=4)
            .map(|p| format!("{:.4}", m(k, p)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let ranking: Vec<String> = {
        let mut ks = AnsatzKind::ALL.to_vec();
        ks.sort_by(|a, b| m(*a, 2).total_cmp(&m(*b, 2)));
        ks.iter().map(|k| k.to_string()).collect()
    };
    Ok(format!(
        "QAOA [{}], QAMPA [{}], p=4 gap {gap:.4}, p=2 ranking {} (XY_NOJ ~ QAOA_NOJ)",
        fmt(AnsatzKind::Qaoa),
        fmt(AnsatzKind::Qampa),
        ranking.join(" < ")
    ))
}

fn symmetry_suite() -> Check {
    let mut r = rng(8);
    let mut worst_metric = 0.0f64;
    let mut worst_norm = 0.0f64;
    for t in 0..10 {
        let n = if t % 2 == 0 { 4 } else { 6 };
        // Constant spectra have no normalized energy; skip to the next seed.
        let (inst, sp, table) = (800 + 100 * t..)
            .find_map(|seed| {
                let inst = generate_instance(n, n / 2, &BENCHMARK_COEFFICIENTS, seed).unwrap();
                let sp = space(&inst);
                let table = energy_table(&inst, sp.basis()).ok()?;
                Some((inst, sp, table))
            })
            .unwrap();
        let start = dicke_state(&sp).unwrap();
        worst_norm = worst_norm.max((start.norm() - 1.0).abs());
        for kind in AnsatzKind::ALL {
            let p = r.gen_range(1..=3);
            let plan = ansatz::build(kind, &inst, p, r.gen()).unwrap();
            let sched = AngleSchedule::from_pairs(&random_pairs(&mut r, p, 2.0 * PI));
            let run = |s: &AngleSchedule| -> SubspaceState {
                ansatz::execute(&plan, s, start.clone()).unwrap()
            };
            let (a, b) = (run(&sched), run(&sched.negated()));
            let ra = metrics::metric_report(&a, &table, &[1, 2, 5, 10]).unwrap();
            let rb = metrics::metric_report(&b, &table, &[1, 2, 5, 10]).unwrap();
            for (x, y) in ra.best_r.values().zip(rb.best_r.values()) {
                worst_metric = worst_metric.max((x - y).abs());
            }
            worst_metric = worst_metric.max((ra.optimum_probability - rb.optimum_probability).abs());
            worst_norm = worst_norm.max((a.norm() - 1.0).abs());
            let probs_total: f64 = a.probabilities().iter().sum();
            worst_norm = worst_norm.max((probs_total - 1.0).abs());
            let dense = oracle::dense_execute(&plan, &sched).unwrap();
            worst_norm = worst_norm.max((dense.norm() - 1.0).abs());
            if kind == AnsatzKind::Qampa || kind == AnsatzKind::Qaoa {
                let circ = compiler::compile(&plan, &sched, GateSet::CnotSet).unwrap();
                let mut amps = oracle::DenseState::dicke(n, n / 2).unwrap().into_amplitudes();
                for op in circ.ops() {
                    op.apply(&mut amps, n);
                }
                let norm: f64 = amps.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
                worst_norm = worst_norm.max((norm - 1.0).abs());
            }
        }
    }
    ensure(worst_metric < 1e-12, || format!("negation changed a metric by {worst_metric:e}"))?;
    ensure(worst_norm < 1e-10, || format!("norm drift {worst_norm:e}"))?;
    Ok(format!(
        "negation max metric change {worst_metric:.1e}; max norm drift {worst_norm:.1e}"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("limit mapping", limit_mapping),
        ("metric correctness", metric_correctness),
        ("compilation soundness", compilation_soundness),
        ("depth factor", depth_factor),
        ("scanlast sanity", scanlast_sanity),
        ("benchmark trends", benchmark_trends),
        ("symmetry suite", symmetry_suite),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let number = i + 1;
        if only.is_some_and(|o| o != number) {
            continue;
        }
        let clock = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(msg)
        });
        let secs = clock.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {number} {name}: PASS ({secs:.1}s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {number} {name}: FAIL ({secs:.1}s) {detail}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
