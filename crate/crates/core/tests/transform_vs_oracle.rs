use fctl_core::oracle::{solve, OracleOptions};
use fctl_core::transform::{mean_overflow, overflow_pmf_vector, prob_empty};
use fctl_core::{ArrivalModel, FctlInstance, GreenTime};

fn families(mu: f64) -> Vec<ArrivalModel> {
    vec![
        ArrivalModel::poisson(mu).unwrap(),
        ArrivalModel::geometric(mu).unwrap(),
        ArrivalModel::negative_binomial(mu, 2.0 * mu).unwrap(),
    ]
}

/// Integer instances with mu in {0.2, 0.3, 0.4}, g in 4..=12, c in 2g..=4g,
/// keeping only stable ones.
fn grid() -> Vec<FctlInstance> {
    let mut out = Vec::new();
    for &mu in &[0.2, 0.3, 0.4] {
        for g in (4..=12).step_by(2) {
            for c in (2 * g..=4 * g).step_by(3) {
                if mu * c as f64 / g as f64 >= 0.95 {
                    continue;
                }
                for model in families(mu) {
                    out.push(
                        FctlInstance::new(model, GreenTime::deterministic(g), c as f64).unwrap(),
                    );
                }
            }
        }
    }
    out
}

#[test]
fn transform_agrees_with_markov_chain_on_grid() {
    let instances = grid();
    assert!(instances.len() >= 100, "only {} instances", instances.len());
    let mut worst: f64 = 0.0;
    for inst in &instances {
        let oracle = solve(inst, &OracleOptions::default()).unwrap();
        let p0 = prob_empty(inst).unwrap();
        let mean = mean_overflow(inst).unwrap();
        let d0 = (p0 - oracle.pmf[0]).abs();
        let d1 = (mean - oracle.mean()).abs();
        worst = worst.max(d0).max(d1);
        assert!(
            d0 < 1e-8 && d1 < 1e-8,
            "{inst:?}: p0 {p0} vs {}, mean {mean} vs {}",
            oracle.pmf[0],
            oracle.mean()
        );
    }
    println!("{} instances, worst deviation {worst:.2e}", instances.len());
}

#[test]
fn pmf_vectors_agree() {
    for model in families(0.3) {
        let inst = FctlInstance::new(model, GreenTime::deterministic(10), 30.0).unwrap();
        let oracle = solve(&inst, &OracleOptions::default()).unwrap();
        let pmf = overflow_pmf_vector(&inst, 1e-14).unwrap();
        for (k, (a, b)) in pmf.iter().zip(&oracle.pmf).enumerate() {
            assert!((a - b).abs() < 1e-8, "k={k}: {a} vs {b}");
        }
    }
}

#[test]
fn randomized_green_kernel_matches_chain() {
    for model in families(0.3) {
        for &(floor, p, c) in &[(12u32, 0.3, 36.0), (9, 0.75, 25.0), (20, 0.5, 50.0)] {
            let inst =
                FctlInstance::new(model.clone(), GreenTime::randomized(floor, p).unwrap(), c)
                    .unwrap();
            let oracle = solve(&inst, &OracleOptions::default()).unwrap();
            let mean = mean_overflow(&inst).unwrap();
            let p0 = prob_empty(&inst).unwrap();
            assert!(
                (mean - oracle.mean()).abs() < 1e-8,
                "{inst:?}: {mean} vs {}",
                oracle.mean()
            );
            assert!((p0 - oracle.pmf[0]).abs() < 1e-8);
        }
    }
}
