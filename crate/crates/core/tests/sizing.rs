use std::time::Instant;

use dwarfbench_core::sizing::{
    build_size_plan, class_budget, class_entry, next_growth, params_for_growth, solve_for, solve_params,
    working_set_bytes, SizingError,
};
use dwarfbench_core::{Benchmark, DeviceProfile, Params, SizeClass};
use proptest::prelude::*;

/// Working-set table written out from the formulas, indexed by growth value.
fn oracle_ws(b: Benchmark, g: u64) -> u64 {
    match b {
        Benchmark::Lud => 4 * g * g,
        Benchmark::Fft => 16 * g,
        Benchmark::CsrSpmv => 8 * (10 * g) + 4 * (g + 1) + 8 * g,
        Benchmark::Nw => 4 * (g + 1) * (g + 1) + 2 * g,
        Benchmark::Kmeans => 4 * (g * 16 + 8 * 16 + g),
        Benchmark::Crc32 => g,
        Benchmark::Bfs => 4 * (g + 1) + 8 * (8 * g) + 8 * g,
        Benchmark::Srad => 2 * 4 * g * g,
    }
}

fn growth_of(b: Benchmark, p: &Params) -> u64 {
    p.get(b.spec().growth_param).unwrap()
}

fn check_inverse(b: Benchmark, budget: u64) {
    let params = solve_for(b, budget).unwrap();
    let g = growth_of(b, &params);
    let ws = working_set_bytes(b.name(), &params).unwrap();
    assert_eq!(ws, oracle_ws(b, g), "{b} g={g}");
    assert!(ws <= budget, "{b}: {ws} > {budget}");
    let bound = b.spec().param(b.spec().growth_param).unwrap().max;
    let next = next_growth(b, g);
    assert!(next > bound || oracle_ws(b, next) > budget, "{b}: growth {next} still fits {budget}");
    if b == Benchmark::Fft {
        assert!(g.is_power_of_two());
    }
}

#[test]
fn formula_examples() {
    assert_eq!(working_set_bytes("lud", &Params::new().with("n", 90)).unwrap(), 32_400);
    assert_eq!(working_set_bytes("fft", &Params::new().with("n", 1024)).unwrap(), 16_384);
    let csr = Params::new().with("rows", 100).with("nnz", 500);
    assert_eq!(working_set_bytes("csr_spmv", &csr).unwrap(), 5_204);
}

#[test]
fn solver_examples() {
    assert_eq!(solve_params("lud", 32_768).unwrap().get("n"), Some(90));
    assert_eq!(solve_params("fft", 32_768).unwrap().get("n"), Some(2048));
    assert!(matches!(solve_params("lud", 3), Err(SizingError::BudgetTooSmall { .. })));
    assert!(matches!(solve_params("nope", 1 << 20), Err(SizingError::UnknownBenchmark(_))));
}

#[test]
fn out_of_bounds_and_shape_errors() {
    assert!(matches!(
        working_set_bytes("lud", &Params::new().with("n", 0)),
        Err(SizingError::ParamOutOfBounds { .. })
    ));
    assert!(matches!(working_set_bytes("lud", &Params::new()), Err(SizingError::MissingParam { .. })));
    assert!(matches!(
        working_set_bytes("fft", &Params::new().with("n", 1000)),
        Err(SizingError::ShapeViolation { .. })
    ));
}

#[test]
fn default_profile_lud_plan() {
    let plan = build_size_plan("lud", &DeviceProfile::default()).unwrap();
    assert_eq!(plan.entry(SizeClass::Tiny).unwrap().params.get("n"), Some(90));
    assert_eq!(plan.entry(SizeClass::Small).unwrap().params.get("n"), Some(1448));
    assert_eq!(plan.entry(SizeClass::Small).unwrap().working_set_bytes, 8_386_816);
}

#[test]
fn exhaustive_default_profile_inverse_and_maximality() {
    let start = Instant::now();
    let device = DeviceProfile::default();
    for b in Benchmark::ALL {
        let plan = build_size_plan(b.name(), &device).unwrap();
        let mut previous = 0;
        for entry in &plan.entries {
            assert_eq!(entry.budget_bytes, class_budget(&device, entry.class));
            check_inverse(b, entry.budget_bytes);
            assert!(entry.working_set_bytes > previous, "{b} {}", entry.class);
            previous = entry.working_set_bytes;
        }
        assert!(plan.entry(SizeClass::Tiny).unwrap().working_set_bytes <= device.l1_bytes());
        assert!(plan.entry(SizeClass::Small).unwrap().working_set_bytes <= device.llc_bytes());
        assert!(plan.entry(SizeClass::Medium).unwrap().working_set_bytes <= device.dram_bytes());
        let large = plan.entry(SizeClass::Large).unwrap().working_set_bytes;
        assert!(large > device.llc_bytes() && large <= device.dram_bytes());
    }
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn degenerate_hierarchy_is_infeasible() {
    let device = DeviceProfile::new("flat", 32 * 1024, 32 * 1024 + 1, 1 << 30).unwrap();
    let err = class_entry(Benchmark::Lud, &device, SizeClass::Small).unwrap_err();
    assert!(matches!(err, SizingError::InfeasibleClass { class: SizeClass::Small, .. }), "{err}");
    assert!(build_size_plan("lud", &device).is_err());
}

#[test]
fn plans_are_deterministic() {
    let d = DeviceProfile::default();
    for b in Benchmark::ALL {
        assert_eq!(build_size_plan(b.name(), &d).unwrap(), build_size_plan(b.name(), &d).unwrap());
    }
}

#[test]
fn plan_export_lists_every_class() {
    let text = build_size_plan("lud", &DeviceProfile::default()).unwrap().to_kv_text();
    assert!(text.contains("tiny.n=90\n"));
    assert!(text.contains("small.n=1448\n"));
    assert!(text.contains("large.budget_bytes="));
}

proptest! {
    #[test]
    fn inverse_and_maximality_for_random_budgets(index in 0usize..8, budget in 1u64..(1 << 36)) {
        let b = Benchmark::ALL[index];
        let minimum = oracle_ws(b, b.spec().param(b.spec().growth_param).unwrap().min);
        if budget < minimum {
            let is_too_small = matches!(solve_for(b, budget), Err(SizingError::BudgetTooSmall { .. }));
            prop_assert!(is_too_small);
        } else {
            check_inverse(b, budget);
        }
    }

    #[test]
    fn growth_params_round_trip(index in 0usize..8, g in 2u64..5000) {
        let b = Benchmark::ALL[index];
        let g = if b == Benchmark::Fft { g.next_power_of_two() } else { g };
        let ws = working_set_bytes(b.name(), &params_for_growth(b, g)).unwrap();
        prop_assert_eq!(ws, oracle_ws(b, g));
        prop_assert_eq!(growth_of(b, &solve_for(b, ws).unwrap()), g);
    }

    #[test]
    fn valid_profiles_give_ordered_budgets(l1 in 1u64..1 << 20, llc_extra in 1u64..1 << 26, dram_extra in 1u64..1 << 34) {
        let d = DeviceProfile::new("p", l1, l1 + llc_extra, l1 + llc_extra + dram_extra).unwrap();
        let budgets: Vec<u64> = SizeClass::ALL.iter().map(|&c| class_budget(&d, c)).collect();
        prop_assert!(budgets.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(budgets[3] <= d.dram_bytes());
    }
}
