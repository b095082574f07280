use fctl_core::allocation::allocate;
use fctl_core::delay::{intersection_delay, WebsterForm};
use fctl_core::ht_approx::{
    inverse_scaling, mean_first_order, mean_refined, p_empty_approx, HeavyTrafficPoint,
};
use fctl_core::oracle::stationary_overflow;
use fctl_core::reproduce::{build_table, Cell, Table};
use fctl_core::transform::{mean_overflow, prob_empty};
use fctl_core::{
    AllocationMethod, FctlInstance, GreenTime, IntersectionSpec, QuadraturePolicy, RoundingPolicy,
};

use crate::config::RunConfig;
use crate::CliError;

/// Metrics reported by `eval`, in output order.
pub const METRICS: [&str; 10] = [
    "beta",
    "green",
    "cycle",
    "p0_exact",
    "p0_approx",
    "mean_exact",
    "mean_oracle",
    "mean_first_order",
    "mean_refined",
    "delay_exact",
];

fn policy(config: &RunConfig) -> QuadraturePolicy {
    let mut policy = QuadraturePolicy::from_env();
    if let Some(cap) = config.quadrature_max {
        policy.max_points = cap;
    }
    policy
}

fn instance(config: &RunConfig, lane: usize, green: GreenTime) -> Result<FctlInstance, CliError> {
    let spec = &config.intersection;
    let inst = FctlInstance::new(spec.lanes()[lane].arrival.clone(), green, spec.cycle())
        .map_err(|e| lane_error(lane, e))?;
    Ok(inst.with_policy(policy(config)))
}

fn lane_error(lane: usize, e: fctl_core::FctlError) -> CliError {
    use fctl_core::FctlError::*;
    let tag = |m: String| format!("lane {lane}: {m}");
    CliError::Core(match e {
        Domain(m) => Domain(tag(m)),
        Infeasible(m) => Infeasible(tag(m)),
        Numeric(m) => Numeric(tag(m)),
        Resource(m) => Resource(tag(m)),
        Invalid(m) => Invalid(tag(m)),
    })
}

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-9
}

fn greens_for(config: &RunConfig, method: AllocationMethod) -> Result<Vec<f64>, CliError> {
    match &config.greens {
        Some(g) => Ok(g.clone()),
        None => Ok(allocate(&config.intersection, method)?.greens),
    }
}

/// One row per (lane, metric).
pub fn eval(
    config: &RunConfig,
    lane: Option<usize>,
    metrics: &[String],
    method: AllocationMethod,
) -> Result<Table, CliError> {
    let spec = &config.intersection;
    let n = spec.lanes().len();
    if let Some(i) = lane {
        if i >= n {
            return Err(CliError::Config(format!(
                "lane {i} does not exist ({n} lanes)"
            )));
        }
    }
    for m in metrics {
        if !METRICS.contains(&m.as_str()) {
            return Err(CliError::Config(format!(
                "unknown metric `{m}`; expected one of {}",
                METRICS.join(", ")
            )));
        }
    }
    let wanted = |m: &str| metrics.is_empty() || metrics.iter().any(|x| x == m);
    let greens = greens_for(config, method)?;
    let cycle = spec.cycle();
    let mut table = Table::new(0, "single-lane evaluation", &["lane", "metric", "value"]);
    let lanes: Vec<usize> = match lane {
        Some(i) => vec![i],
        None => (0..n).collect(),
    };
    for i in lanes {
        let model = &spec.lanes()[i].arrival;
        let g = greens[i];
        let green = GreenTime::from_mean(g).map_err(|e| lane_error(i, e))?;
        let inst = instance(config, i, green)?;
        let beta = inverse_scaling(g, cycle, model).map_err(|e| lane_error(i, e))?;
        let point = HeavyTrafficPoint {
            beta,
            cycle,
            green: g,
        };
        let exact_mean = if config.exact && (wanted("mean_exact") || wanted("delay_exact")) {
            Some(mean_overflow(&inst).map_err(|e| lane_error(i, e))?)
        } else {
            None
        };
        for metric in METRICS {
            if !wanted(metric) {
                continue;
            }
            let value = match metric {
                "beta" => Some(beta),
                "green" => Some(g),
                "cycle" => Some(cycle),
                "p0_exact" if config.exact => {
                    Some(prob_empty(&inst).map_err(|e| lane_error(i, e))?)
                }
                "p0_approx" => Some(p_empty_approx(beta).map_err(|e| lane_error(i, e))?),
                "mean_exact" => exact_mean,
                "mean_oracle" if config.exact && is_integer(g) && is_integer(cycle) => {
                    let pmf = stationary_overflow(&inst).map_err(|e| lane_error(i, e))?;
                    Some(pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum())
                }
                "mean_first_order" => {
                    Some(mean_first_order(&point, model).map_err(|e| lane_error(i, e))?)
                }
                "mean_refined" => Some(mean_refined(&point, model).map_err(|e| lane_error(i, e))?),
                "delay_exact" => match exact_mean {
                    Some(ex) => Some(
                        fctl_core::delay::mean_delay(&inst, ex).map_err(|e| lane_error(i, e))?,
                    ),
                    None => None,
                },
                _ => None,
            };
            if let Some(v) = value {
                table.rows.push(vec![
                    Cell::Num(i as f64),
                    Cell::Text(metric.to_string()),
                    Cell::Num(v),
                ]);
            }
        }
    }
    Ok(table)
}

fn predicted_mean(
    spec: &IntersectionSpec,
    method: AllocationMethod,
    lane: usize,
    beta: f64,
    green: f64,
) -> Result<f64, CliError> {
    let model = &spec.lanes()[lane].arrival;
    let point = HeavyTrafficPoint {
        beta,
        cycle: spec.cycle(),
        green,
    };
    let value = match method {
        AllocationMethod::Refined => mean_refined(&point, model),
        _ => mean_first_order(&point, model),
    };
    value.map_err(|e| lane_error(lane, e))
}

/// Per-lane drifts, greens, implementable greens and resulting queues and
/// delays, followed by an aggregate row.
pub fn allocate_cmd(
    config: &RunConfig,
    method: AllocationMethod,
    rounding: RoundingPolicy,
) -> Result<Table, CliError> {
    let spec = &config.intersection;
    let result = allocate(spec, method)?;
    let rounded = fctl_core::allocation::round_greens(spec, &result.greens, rounding)?;
    let mut table = Table::new(
        0,
        method.name(),
        &[
            "lane",
            "beta",
            "green",
            "g_low",
            "g_high",
            "p_high",
            "EX_predicted",
            "EX_exact",
            "delay_exact",
        ],
    );
    let mut means = Vec::with_capacity(rounded.len());
    let mut implemented = Vec::with_capacity(rounded.len());
    let mut predicted_total = 0.0;
    for (i, green) in rounded.iter().enumerate() {
        let (low, high, p) = match *green {
            GreenTime::Deterministic { g } => (g, g, 0.0),
            GreenTime::Randomized { floor, ceil, p } => (floor, ceil, 1.0 - p),
        };
        let predicted = if method == AllocationMethod::BruteForce {
            None
        } else {
            Some(predicted_mean(
                spec,
                method,
                i,
                result.betas[i],
                result.greens[i],
            )?)
        };
        let exact = if config.exact {
            Some(mean_overflow(&instance(config, i, *green)?).map_err(|e| lane_error(i, e))?)
        } else {
            None
        };
        let shown = predicted.or(exact);
        if let Some(v) = shown {
            predicted_total += v;
        }
        let blank = || Cell::Text(String::new());
        table.rows.push(vec![
            Cell::Num(i as f64),
            Cell::Num(result.betas[i]),
            Cell::Num(result.greens[i]),
            Cell::Num(low as f64),
            Cell::Num(high as f64),
            Cell::Num(p),
            shown.map_or_else(blank, Cell::Num),
            exact.map_or_else(blank, Cell::Num),
            blank(),
        ]);
        if let Some(ex) = exact {
            means.push(ex);
            implemented.push(green.mean());
        }
    }
    let mut total = vec![Cell::Text("all".into())];
    total.extend((0..5).map(|_| Cell::Text(String::new())));
    total.push(Cell::Num(predicted_total));
    if config.exact {
        let report = intersection_delay(spec, method, &implemented, &means)?;
        for (row, d) in table.rows.iter_mut().zip(&report.lane_delays) {
            row[8] = Cell::Num(*d);
        }
        total.push(Cell::Num(means.iter().sum()));
        total.push(Cell::Num(report.aggregate));
    } else {
        total.extend([Cell::Text(String::new()), Cell::Text(String::new())]);
    }
    table.rows.push(total);
    Ok(table)
}

pub fn reproduce(id: u8, form: WebsterForm) -> Result<Table, CliError> {
    Ok(build_table(id, form)?)
}
