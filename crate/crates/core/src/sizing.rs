//! Cache-relative problem sizing.
//!
//! Each benchmark has a closed-form working-set formula (bytes of live
//! buffers, 4-byte reals and 8-byte complex values) that is monotone in one
//! growth parameter. Size classes map to byte budgets derived from a
//! [`DeviceProfile`]:
//!
//! | class  | budget                         |
//! |--------|--------------------------------|
//! | tiny   | `l1_bytes`                     |
//! | small  | `llc_bytes`                    |
//! | medium | `min(4 * llc_bytes, dram_bytes)` |
//! | large  | `min(4 * medium, dram_bytes)`  |
//!
//! and the solver picks the largest growth value whose working set fits.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::kv::KvDocument;
use crate::model::{Benchmark, DeviceProfile, Params, SizeClass};
use crate::registry::{lookup, UnknownBenchmark};

/// Fixed k-means shape used by the size formula and the input generator.
pub const KMEANS_DIMS: u64 = 16;
pub const KMEANS_K: u64 = 8;
/// Nonzeros per row for generated sparse matrices.
pub const CSR_NNZ_PER_ROW: u64 = 10;
/// Out-edges per node for generated graphs.
pub const BFS_EDGES_PER_NODE: u64 = 8;

/// Ratio between the medium budget and the LLC, and between large and medium.
pub const CLASS_MULTIPLIER: u64 = 4;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SizingError {
    #[error(transparent)]
    UnknownBenchmark(#[from] UnknownBenchmark),
    #[error("{benchmark}: missing parameter `{param}`")]
    MissingParam { benchmark: &'static str, param: &'static str },
    #[error("{benchmark}: parameter `{param}`={value} outside [{min}, {max}]")]
    ParamOutOfBounds { benchmark: &'static str, param: &'static str, value: u64, min: u64, max: u64 },
    #[error("{benchmark}: {reason}")]
    ShapeViolation { benchmark: &'static str, reason: &'static str },
    #[error("{benchmark}: budget {budget} B is below the minimum working set {minimum} B")]
    BudgetTooSmall { benchmark: &'static str, budget: u64, minimum: u64 },
    #[error("{benchmark}: class {class} does not grow past {smaller} ({bytes} B) on this device")]
    InfeasibleClass { benchmark: &'static str, class: SizeClass, smaller: SizeClass, bytes: u64 },
}

fn checked_params(b: Benchmark, params: &Params) -> Result<Vec<u64>, SizingError> {
    let spec = b.spec();
    let mut values = Vec::with_capacity(spec.params.len());
    for ps in spec.params {
        let value = params
            .get(ps.name)
            .ok_or(SizingError::MissingParam { benchmark: spec.name, param: ps.name })?;
        if value < ps.min || value > ps.max {
            return Err(SizingError::ParamOutOfBounds {
                benchmark: spec.name,
                param: ps.name,
                value,
                min: ps.min,
                max: ps.max,
            });
        }
        values.push(value);
    }
    match b {
        Benchmark::Fft if !values[0].is_power_of_two() => Err(SizingError::ShapeViolation {
            benchmark: spec.name,
            reason: "n must be a power of two",
        }),
        Benchmark::CsrSpmv if values[1] > values[0].saturating_mul(values[0]) => {
            Err(SizingError::ShapeViolation { benchmark: spec.name, reason: "nnz exceeds rows^2" })
        }
        _ => Ok(values),
    }
}

fn formula(b: Benchmark, v: &[u64]) -> u128 {
    let v: Vec<u128> = v.iter().map(|&x| x as u128).collect();
    match b {
        Benchmark::Lud => 4 * v[0] * v[0],
        Benchmark::Fft => 16 * v[0],
        Benchmark::CsrSpmv => 8 * v[1] + 4 * (v[0] + 1) + 8 * v[0],
        Benchmark::Nw => 4 * (v[0] + 1) * (v[0] + 1) + 2 * v[0],
        Benchmark::Kmeans => {
            let (dims, k) = (KMEANS_DIMS as u128, KMEANS_K as u128);
            4 * (v[0] * dims + k * dims + v[0])
        }
        Benchmark::Crc32 => v[0],
        Benchmark::Bfs => 4 * (v[0] + 1) + 8 * v[1] + 8 * v[0],
        Benchmark::Srad => 2 * 4 * v[0] * v[1],
    }
}

/// Working set of `params` for benchmark `b`, in bytes.
pub fn working_set_of(b: Benchmark, params: &Params) -> Result<u64, SizingError> {
    let values = checked_params(b, params)?;
    // Parameter bounds keep every formula far below u64::MAX.
    Ok(formula(b, &values) as u64)
}

/// Working set of `params` for the benchmark named `benchmark`, in bytes.
pub fn working_set_bytes(benchmark: &str, params: &Params) -> Result<u64, SizingError> {
    working_set_of(lookup(benchmark)?.benchmark, params)
}

/// Full parameter assignment for a growth value, with the dependent
/// parameters filled in by convention.
pub fn params_for_growth(b: Benchmark, growth: u64) -> Params {
    let spec = b.spec();
    let params = Params::new().with(spec.growth_param, growth);
    match b {
        Benchmark::CsrSpmv => params.with("nnz", CSR_NNZ_PER_ROW * growth),
        Benchmark::Bfs => params.with("edges", BFS_EDGES_PER_NODE * growth),
        Benchmark::Srad => params.with("cols", growth),
        _ => params,
    }
}

/// The next value along the growth axis (doubling for FFT lengths).
pub fn next_growth(b: Benchmark, growth: u64) -> u64 {
    match b {
        Benchmark::Fft => growth.saturating_mul(2),
        _ => growth.saturating_add(1),
    }
}

fn growth_ws(b: Benchmark, growth: u64) -> Result<u64, SizingError> {
    working_set_of(b, &params_for_growth(b, growth))
}

/// Largest valid assignment of benchmark `b` whose working set fits `budget`.
pub fn solve_for(b: Benchmark, budget_bytes: u64) -> Result<Params, SizingError> {
    let spec = b.spec();
    let bounds = spec.param(spec.growth_param).expect("growth parameter is in the schema");
    let minimum = growth_ws(b, bounds.min)?;
    if minimum > budget_bytes {
        return Err(SizingError::BudgetTooSmall { benchmark: spec.name, budget: budget_bytes, minimum });
    }
    let growth = match b {
        Benchmark::Fft => {
            let mut n = bounds.min;
            while n.saturating_mul(2) <= bounds.max && growth_ws(b, n * 2)? <= budget_bytes {
                n *= 2;
            }
            n
        }
        _ => {
            // Invariant: ws(lo) <= budget, and hi is either out of range or over budget.
            let (mut lo, mut hi) = (bounds.min, bounds.max);
            if growth_ws(b, hi)? <= budget_bytes {
                lo = hi;
            }
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if growth_ws(b, mid)? <= budget_bytes {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
    };
    Ok(params_for_growth(b, growth))
}

/// Largest valid assignment for the benchmark named `benchmark` within `budget_bytes`.
pub fn solve_params(benchmark: &str, budget_bytes: u64) -> Result<Params, SizingError> {
    solve_for(lookup(benchmark)?.benchmark, budget_bytes)
}

/// Byte budget targeted by `class` on `device`.
pub fn class_budget(device: &DeviceProfile, class: SizeClass) -> u64 {
    let medium = device.llc_bytes().saturating_mul(CLASS_MULTIPLIER).min(device.dram_bytes());
    match class {
        SizeClass::Tiny => device.l1_bytes(),
        SizeClass::Small => device.llc_bytes(),
        SizeClass::Medium => medium,
        SizeClass::Large => medium.saturating_mul(CLASS_MULTIPLIER).min(device.dram_bytes()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanEntry {
    pub class: SizeClass,
    pub budget_bytes: u64,
    pub params: Params,
    pub working_set_bytes: u64,
}

fn solve_class(b: Benchmark, device: &DeviceProfile, class: SizeClass) -> Result<PlanEntry, SizingError> {
    let budget = class_budget(device, class);
    let params = solve_for(b, budget)?;
    let ws = working_set_of(b, &params)?;
    Ok(PlanEntry { class, budget_bytes: budget, params, working_set_bytes: ws })
}

/// Solves one class and checks it grows past the next-smaller class.
pub fn class_entry(b: Benchmark, device: &DeviceProfile, class: SizeClass) -> Result<PlanEntry, SizingError> {
    let entry = solve_class(b, device, class)?;
    if let Some(smaller) = class.smaller() {
        if let Ok(prev) = solve_class(b, device, smaller) {
            if entry.working_set_bytes <= prev.working_set_bytes {
                return Err(SizingError::InfeasibleClass {
                    benchmark: b.name(),
                    class,
                    smaller,
                    bytes: entry.working_set_bytes,
                });
            }
        }
    }
    Ok(entry)
}

/// Concrete parameters for every size class of one benchmark on one device.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SizePlan {
    pub benchmark: &'static str,
    pub device: String,
    pub entries: Vec<PlanEntry>,
}

impl SizePlan {
    pub fn entry(&self, class: SizeClass) -> Option<&PlanEntry> {
        self.entries.iter().find(|e| e.class == class)
    }

    /// Audit export in the profile `key=value` format.
    pub fn to_kv_text(&self) -> String {
        let mut doc = KvDocument::new();
        doc.comment("size plan");
        doc.push("benchmark", self.benchmark);
        doc.push("device", &self.device);
        for e in &self.entries {
            let class = e.class.as_str();
            doc.push(&alloc::format!("{class}.budget_bytes"), &e.budget_bytes.to_string());
            doc.push(&alloc::format!("{class}.working_set_bytes"), &e.working_set_bytes.to_string());
            for (name, value) in e.params.iter() {
                doc.push(&alloc::format!("{class}.{name}"), &value.to_string());
            }
        }
        doc.render()
    }
}

pub fn plan_for(b: Benchmark, device: &DeviceProfile) -> Result<SizePlan, SizingError> {
    let entries = SizeClass::ALL
        .into_iter()
        .map(|class| class_entry(b, device, class))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SizePlan { benchmark: b.name(), device: device.id().to_string(), entries })
}

/// Size plan covering all four classes; fails if any class is infeasible.
pub fn build_size_plan(benchmark: &str, device: &DeviceProfile) -> Result<SizePlan, SizingError> {
    plan_for(lookup(benchmark)?.benchmark, device)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_examples() {
        assert_eq!(working_set_bytes("lud", &Params::new().with("n", 90)).unwrap(), 32_400);
        assert_eq!(working_set_bytes("fft", &Params::new().with("n", 1024)).unwrap(), 16_384);
        let csr = Params::new().with("rows", 100).with("nnz", 500);
        assert_eq!(working_set_bytes("csr_spmv", &csr).unwrap(), 5_204);
    }

    #[test]
    fn formula_errors() {
        assert!(matches!(
            working_set_bytes("quicksort", &Params::new()),
            Err(SizingError::UnknownBenchmark(_))
        ));
        assert!(matches!(
            working_set_bytes("lud", &Params::new().with("n", 0)),
            Err(SizingError::ParamOutOfBounds { param: "n", .. })
        ));
        assert!(matches!(
            working_set_bytes("lud", &Params::new()),
            Err(SizingError::MissingParam { param: "n", .. })
        ));
        assert!(matches!(
            working_set_bytes("fft", &Params::new().with("n", 1000)),
            Err(SizingError::ShapeViolation { .. })
        ));
    }

    #[test]
    fn solve_examples() {
        assert_eq!(solve_params("lud", 32_768).unwrap().get("n"), Some(90));
        assert_eq!(solve_params("fft", 32_768).unwrap().get("n"), Some(2048));
        assert!(matches!(solve_params("lud", 3), Err(SizingError::BudgetTooSmall { .. })));
        assert!(matches!(solve_params("nope", 3), Err(SizingError::UnknownBenchmark(_))));
    }

    #[test]
    fn default_lud_plan() {
        let plan = build_size_plan("lud", &DeviceProfile::default()).unwrap();
        assert_eq!(plan.entry(SizeClass::Tiny).unwrap().params.get("n"), Some(90));
        let small = plan.entry(SizeClass::Small).unwrap();
        assert_eq!(small.params.get("n"), Some(1448));
        assert_eq!(small.working_set_bytes, 8_386_816);
    }

    #[test]
    fn class_budgets_on_default_profile() {
        let d = DeviceProfile::default();
        assert_eq!(class_budget(&d, SizeClass::Tiny), 32 << 10);
        assert_eq!(class_budget(&d, SizeClass::Small), 8 << 20);
        assert_eq!(class_budget(&d, SizeClass::Medium), 32 << 20);
        assert_eq!(class_budget(&d, SizeClass::Large), 128 << 20);
    }

    #[test]
    fn degenerate_hierarchy_is_infeasible() {
        let d = DeviceProfile::new("flat", 1 << 15, (1 << 15) + 1, 1 << 30).unwrap();
        assert!(matches!(
            build_size_plan("lud", &d),
            Err(SizingError::InfeasibleClass { class: SizeClass::Small, .. })
        ));
        // DRAM no bigger than 4x LLC leaves no room for large.
        let d = DeviceProfile::new("tight", 1 << 15, 1 << 20, 1 << 22).unwrap();
        assert!(class_entry(Benchmark::Lud, &d, SizeClass::Medium).is_ok());
        assert!(matches!(
            class_entry(Benchmark::Lud, &d, SizeClass::Large),
            Err(SizingError::InfeasibleClass { class: SizeClass::Large, .. })
        ));
    }

    #[test]
    fn plan_export_is_kv() {
        let plan = build_size_plan("csr_spmv", &DeviceProfile::default()).unwrap();
        let doc = KvDocument::parse(&plan.to_kv_text()).unwrap();
        assert_eq!(doc.get("benchmark"), Some("csr_spmv"));
        let rows: u64 = doc.get("tiny.rows").unwrap().parse().unwrap();
        assert_eq!(doc.get("tiny.nnz").unwrap(), alloc::format!("{}", rows * 10));
    }
}
