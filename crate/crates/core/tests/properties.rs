use std::f64::consts::{PI, SQRT_2};

use fctl_core::allocation::{allocate, beta_star, MAX_B};
use fctl_core::gauss_rw::{g_kernel, MIN_B};
use fctl_core::transform::{mean_overflow, overflow_pmf_vector, prob_empty};
use fctl_core::{
    AllocationMethod, ArrivalModel, FctlError, FctlInstance, GKernel, GreenTime, IntersectionSpec,
    LaneSpec,
};
use proptest::prelude::*;

fn model(family: u8, mean: f64, dispersion: f64) -> ArrivalModel {
    match family % 3 {
        0 => ArrivalModel::poisson(mean).unwrap(),
        1 => ArrivalModel::geometric(mean).unwrap(),
        _ => ArrivalModel::negative_binomial(mean, mean * dispersion).unwrap(),
    }
}

fn intersection() -> impl Strategy<Value = IntersectionSpec> {
    let lane = (0u8..3, 0.05f64..0.25, 1.2f64..4.0, 0.5f64..4.0);
    (
        prop::collection::vec(lane, 2..=4),
        60.0f64..600.0,
        0.0f64..8.0,
    )
        .prop_filter_map("needs slack", |(lanes, cycle, lost)| {
            let lanes = lanes
                .into_iter()
                .map(|(f, m, d, w)| LaneSpec::new(model(f, m, d), w).unwrap())
                .collect();
            IntersectionSpec::new(lanes, cycle, lost).ok()
        })
}

const RULES: [AllocationMethod; 5] = [
    AllocationMethod::FirstOrder,
    AllocationMethod::Refined,
    AllocationMethod::WeightedClosed,
    AllocationMethod::WeightedNumerical,
    AllocationMethod::Webster,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn greens_use_the_whole_budget(spec in intersection()) {
        for rule in RULES {
            let Ok(r) = allocate(&spec, rule) else { continue };
            let total: f64 = r.greens.iter().sum();
            prop_assert!((total - spec.green_budget()).abs() < 1e-8 * spec.cycle(), "{rule:?}: {total}");
        }
    }

    #[test]
    fn lane_order_does_not_matter(spec in intersection()) {
        let mut lanes = spec.lanes().to_vec();
        lanes.reverse();
        let flipped = IntersectionSpec::new(lanes, spec.cycle(), spec.lost_time()).unwrap();
        for rule in RULES {
            let (Ok(a), Ok(b)) = (allocate(&spec, rule), allocate(&flipped, rule)) else { continue };
            for (x, y) in a.greens.iter().zip(b.greens.iter().rev()) {
                prop_assert!((x - y).abs() < 1e-7, "{rule:?}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn equal_weights_give_equal_drifts(spec in intersection()) {
        let lanes = spec.lanes().iter().map(|l| LaneSpec::new(l.arrival.clone(), 1.0).unwrap()).collect();
        let unit = IntersectionSpec::new(lanes, spec.cycle(), spec.lost_time()).unwrap();
        let star = beta_star(&unit);
        let b = star / SQRT_2;
        // multiplier implied by equal drifts with unit weights
        let lambda = g_kernel(GKernel::G0Prime, b).unwrap() * spec.cycle().sqrt() / PI;
        if !(MIN_B..=MAX_B).contains(&b) || !(-1e6..=-1e-12).contains(&lambda) {
            let r = allocate(&unit, AllocationMethod::WeightedNumerical);
            prop_assert!(matches!(r, Err(FctlError::Numeric(_))), "{r:?}");
            return Ok(());
        }
        for rule in [AllocationMethod::WeightedClosed, AllocationMethod::WeightedNumerical] {
            let r = allocate(&unit, rule).unwrap();
            for b in &r.betas {
                prop_assert!((b - star).abs() < 1e-8, "{rule:?}: {b} vs {star}");
            }
        }
    }

    #[test]
    fn weighted_rule_beats_equal_drifts(spec in intersection()) {
        let Ok(r) = allocate(&spec, AllocationMethod::WeightedNumerical) else { return Ok(()) };
        prop_assume!(r.pinned.is_empty());
        let b = beta_star(&spec) / SQRT_2;
        let g0 = g_kernel(GKernel::G0, b).unwrap();
        let equal: f64 = spec
            .lanes()
            .iter()
            .map(|l| l.weight * l.arrival.std_dev() / PI * (2.0 * spec.cycle()).sqrt() * g0)
            .sum();
        prop_assert!(r.objective_estimate <= equal + 1e-9, "{} > {equal}", r.objective_estimate);
    }

    #[test]
    fn overflow_distribution_is_proper(
        family in 0u8..3,
        mean in 0.1f64..0.5,
        dispersion in 1.2f64..3.0,
        green in 3u32..20,
        load in 0.3f64..0.9,
    ) {
        let m = model(family, mean, dispersion);
        let cycle = (load * green as f64 / mean).floor().max(green as f64 + 1.0);
        let inst = FctlInstance::new(m, GreenTime::deterministic(green), cycle).unwrap();
        let pmf = overflow_pmf_vector(&inst, 1e-12).unwrap();
        let total: f64 = pmf.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(pmf.iter().all(|&p| p >= 0.0));
        prop_assert!((pmf[0] - prob_empty(&inst).unwrap()).abs() < 1e-9);
        let mean_from_pmf: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let exact = mean_overflow(&inst).unwrap();
        prop_assert!((mean_from_pmf - exact).abs() < 1e-7 * exact.max(1.0));
    }

    #[test]
    fn more_green_means_shorter_queue(mean in 0.1f64..0.4, green in 4u32..30) {
        let m = ArrivalModel::poisson(mean).unwrap();
        let cycle = (0.9 * green as f64 / mean).floor();
        let a = FctlInstance::new(m.clone(), GreenTime::deterministic(green), cycle).unwrap();
        let b = FctlInstance::new(m, GreenTime::deterministic(green + 1), cycle).unwrap();
        prop_assert!(mean_overflow(&b).unwrap() < mean_overflow(&a).unwrap());
    }
}
