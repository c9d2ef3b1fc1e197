use std::collections::HashSet;
use std::path::Path;

use proptest::prelude::*;
use qampa::ansatz::{self, AngleSchedule, AnsatzKind};
use qampa::compiler::{synthesize_fused, FusedGate, GateSet, SwapNetwork};
use qampa::metrics::{expected_best_r, Scorer, DEFAULT_TIE_TOLERANCE};
use qampa::optimizer::powell_minimize;
use qampa::problem::{
    energy_table, feasible_basis, generate_instance, instance_from_json, instance_to_json,
    BENCHMARK_COEFFICIENTS,
};
use qampa::subspace_sim::{dicke_state, Subspace};

fn distribution() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..10).prop_flat_map(|k| {
        (
            prop::collection::vec(0.001f64..1.0, k),
            prop::collection::vec(0u8..6, k),
        )
            .prop_map(|(w, e)| {
                let total: f64 = w.iter().sum();
                (
                    w.iter().map(|x| x / total).collect(),
                    e.iter().map(|&x| f64::from(x) / 5.0).collect(),
                )
            })
    })
}

fn kind() -> impl Strategy<Value = AnsatzKind> {
    prop::sample::select(AnsatzKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn best_r_is_monotone_and_bounded((p, eps) in distribution(), r in 1u32..20) {
        let d = Scorer::new(&eps, DEFAULT_TIE_TOLERANCE).unwrap().score(&p).unwrap();
        let a = expected_best_r(&d, r).unwrap();
        let b = expected_best_r(&d, r + 1).unwrap();
        prop_assert!(b <= a + 1e-15);
        let lo = eps.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(a >= lo - 1e-12 && a <= hi + 1e-12);
        let far = expected_best_r(&d, 10_000).unwrap();
        prop_assert!((far - lo).abs() < 1e-3);
    }

    #[test]
    fn telescoping_weights_sum_to_one((p, eps) in distribution(), r in 1u32..8) {
        // Shifting every energy by c shifts <BEST_R> by c exactly when the
        // weights sum to one.
        let shifted: Vec<f64> = eps.iter().map(|e| e + 0.25).collect();
        let d0 = Scorer::new(&eps, DEFAULT_TIE_TOLERANCE).unwrap().score(&p).unwrap();
        let d1 = Scorer::new(&shifted, DEFAULT_TIE_TOLERANCE).unwrap().score(&p).unwrap();
        let diff = expected_best_r(&d1, r).unwrap() - expected_best_r(&d0, r).unwrap();
        prop_assert!((diff - 0.25).abs() < 1e-12);
    }

    #[test]
    fn simulation_preserves_norm_and_negation_symmetry(
        seed in 0u64..1000,
        k in kind(),
        angles in prop::collection::vec(-7.0f64..7.0, 2..=6),
        half_n in 2usize..=4,
    ) {
        let n = 2 * half_n;
        let inst = generate_instance(n, half_n, &BENCHMARK_COEFFICIENTS, seed).unwrap();
        let mut flat = angles;
        flat.truncate(flat.len() / 2 * 2);
        let sched = AngleSchedule::from_flat(flat).unwrap();
        let plan = ansatz::build(k, &inst, sched.p(), seed).unwrap();
        let sp = Subspace::new(feasible_basis(n, half_n).unwrap());
        let a = ansatz::execute(&plan, &sched, dicke_state(&sp).unwrap()).unwrap();
        let b = ansatz::execute(&plan, &sched.negated(), dicke_state(&sp).unwrap()).unwrap();
        prop_assert!((a.norm() - 1.0).abs() < 1e-10);
        for (x, y) in a.probabilities().iter().zip(b.probabilities()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn swap_network_meets_every_pair_once(n in 2usize..24) {
        let net = SwapNetwork::new(n).unwrap();
        let mut layout: Vec<usize> = (0..n).collect();
        let met = net.run(&mut layout);
        let unique: HashSet<(usize, usize)> = met.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        prop_assert_eq!(unique.len(), n * (n - 1) / 2);
        prop_assert_eq!(met.len(), unique.len());
        prop_assert_eq!(layout, (0..n).rev().collect::<Vec<_>>());
    }

    #[test]
    fn normalized_energies_span_unit_interval(seed in 0u64..500, half_n in 2usize..=5) {
        let n = 2 * half_n;
        let inst = generate_instance(n, half_n, &BENCHMARK_COEFFICIENTS, seed).unwrap();
        let basis = feasible_basis(n, half_n).unwrap();
        if let Ok(t) = energy_table(&inst, &basis) {
            let lo = t.normalized().iter().copied().fold(f64::INFINITY, f64::min);
            let hi = t.normalized().iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(lo, 0.0);
            prop_assert_eq!(hi, 1.0);
            prop_assert_eq!(t.normalized()[t.argmin()], 0.0);
        }
    }

    #[test]
    fn instance_json_round_trip(seed in any::<u64>(), half_n in 1usize..=6) {
        let inst = generate_instance(2 * half_n, half_n, &BENCHMARK_COEFFICIENTS, seed).unwrap();
        let back = instance_from_json(&instance_to_json(&inst), Path::new("mem")).unwrap();
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn reduced_angles_are_idempotent(angles in prop::collection::vec(-50.0f64..50.0, 1..5)) {
        let pairs: Vec<(f64, f64)> = angles.iter().map(|&a| (a, -a)).collect();
        let s = AngleSchedule::from_pairs(&pairs);
        let once = s.reduced(4.0 * std::f64::consts::PI, std::f64::consts::PI);
        let twice = once.reduced(4.0 * std::f64::consts::PI, std::f64::consts::PI);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn fused_synthesis_budget(zz in -7.0f64..7.0, xy in -7.0f64..7.0) {
        let g = FusedGate { zz, xy };
        let s = synthesize_fused(&g, GateSet::CnotSet).unwrap();
        prop_assert_eq!(s.cnot_count(), 3);
        prop_assert!(s.rotation_count() <= 15);
        prop_assert!(s.residual < 1e-8);
        let native = synthesize_fused(&g, GateSet::NativeXyZz).unwrap();
        prop_assert!(native.residual < 1e-8);
    }

    #[test]
    fn powell_never_worse_than_start(
        start in prop::collection::vec(-3.0f64..3.0, 1..4),
        budget in 1usize..60,
    ) {
        let dim = start.len();
        let mut f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (v - i as f64).powi(2) + v.sin()).sum::<f64>();
        let f0 = f(&start);
        let m = powell_minimize(&mut f, &start, &vec![0.5; dim], budget.max(dim)).unwrap();
        prop_assert!(m.value <= f0);
        prop_assert!(m.evaluations <= budget.max(dim));
    }
}
