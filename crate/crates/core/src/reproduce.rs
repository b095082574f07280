//! Builders for the published result tables and the two benchmark
//! intersections they are computed on.

use std::fmt::Write as _;

use crate::allocation::AllocationMethod;
use crate::allocation::{
    first_order, refined_betas, weighted_numerical, IntersectionSpec, LaneSpec,
};
use crate::arrivals::ArrivalModel;
use crate::delay::{
    intersection_delay, webster_allocation, webster_delay, webster_saturation, WebsterForm,
};
use crate::error::{FctlError, Result};
use crate::ht_approx::{
    cycle_from_green, mean_first_order, mean_refined, p_empty_approx, HeavyTrafficPoint,
};
use crate::transform::{mean_overflow, prob_empty, FctlInstance, GreenTime};

/// Cycle lengths used by the intersection tables.
pub const CYCLES: [f64; 5] = [30.0, 50.0, 100.0, 200.0, 500.0];

/// Green times used by the single-lane tables.
pub const GREENS: [f64; 5] = [10.0, 20.0, 30.0, 50.0, 100.0];

/// Number of reproducible tables.
pub const TABLE_COUNT: u8 = 9;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

/// A rectangular table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub id: u8,
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(id: u8, title: &str, columns: &[&str]) -> Self {
        Self {
            id,
            title: title.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_nums(&mut self, values: &[f64]) {
        self.rows
            .push(values.iter().map(|&v| Cell::Num(v)).collect());
    }

    /// Numeric value at `row`, `column`; `None` for text cells or bad names.
    pub fn value(&self, row: usize, column: &str) -> Option<f64> {
        let j = self.columns.iter().position(|c| c == column)?;
        match self.rows.get(row)?.get(j)? {
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    fn rendered(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| match c {
                        Cell::Num(v) => format_sig(*v, 6),
                        Cell::Text(s) => s.clone(),
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in self.rendered() {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "| {} |", self.columns.join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(self.columns.len()));
        for row in self.rendered() {
            let _ = writeln!(out, "| {} |", row.join(" | "));
        }
        out
    }
}

/// Formats with `digits` significant digits, fixed notation for moderate
/// magnitudes, trailing zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Poisson 0.4 and geometric 0.4 lanes with 5 slots of lost time.
pub fn two_lane_intersection(cycle: f64) -> Result<IntersectionSpec> {
    IntersectionSpec::new(
        vec![
            LaneSpec::new(ArrivalModel::poisson(0.4)?, 1.0)?,
            LaneSpec::new(ArrivalModel::geometric(0.4)?, 1.0)?,
        ],
        cycle,
        5.0,
    )
}

/// Geometric 0.3, Poisson 0.3 and two negative binomial (0.1, variance 0.4)
/// lanes with 5 slots of lost time; weights `d_i = i` when `increasing`.
pub fn four_lane_intersection(cycle: f64, increasing: bool) -> Result<IntersectionSpec> {
    let models = [
        ArrivalModel::geometric(0.3)?,
        ArrivalModel::poisson(0.3)?,
        ArrivalModel::negative_binomial(0.1, 0.4)?,
        ArrivalModel::negative_binomial(0.1, 0.4)?,
    ];
    let mut lanes = Vec::with_capacity(4);
    for (i, m) in models.into_iter().enumerate() {
        lanes.push(LaneSpec::new(
            m,
            if increasing { (i + 1) as f64 } else { 1.0 },
        )?);
    }
    IntersectionSpec::new(lanes, cycle, 5.0)
}

fn exact_mean(model: &ArrivalModel, green: f64, cycle: f64) -> Result<f64> {
    let inst = FctlInstance::new(model.clone(), GreenTime::from_mean(green)?, cycle)?;
    mean_overflow(&inst)
}

fn single_lane_table(id: u8, beta: f64) -> Result<Table> {
    let model = ArrivalModel::poisson(0.3)?;
    let mut t = Table::new(
        id,
        &format!("single lane, Poisson 0.3, beta = {beta}"),
        &[
            "g",
            "c",
            "P0_exact",
            "P0_approx",
            "EX_exact",
            "EX_fo",
            "EX_refined",
        ],
    );
    for g in GREENS {
        let point = cycle_from_green(beta, g, &model)?;
        let inst = FctlInstance::new(
            model.clone(),
            GreenTime::deterministic(g as u32),
            point.cycle,
        )?;
        t.push_nums(&[
            g,
            point.cycle,
            prob_empty(&inst)?,
            p_empty_approx(beta)?,
            mean_overflow(&inst)?,
            mean_first_order(&point, &model)?,
            mean_refined(&point, &model)?,
        ]);
    }
    Ok(t)
}

fn two_lane_greens() -> Result<Table> {
    let mut t = Table::new(
        3,
        "two-lane greens, first-order and refined rules",
        &[
            "c",
            "g1",
            "beta1",
            "g2",
            "beta2",
            "g1_refined",
            "beta1_refined",
            "g2_refined",
            "beta2_refined",
        ],
    );
    for c in CYCLES {
        let spec = two_lane_intersection(c)?;
        let fo = first_order(&spec)?;
        let re = refined_betas(&spec)?;
        t.push_nums(&[
            c,
            fo.greens[0],
            fo.betas[0],
            fo.greens[1],
            fo.betas[1],
            re.greens[0],
            re.betas[0],
            re.greens[1],
            re.betas[1],
        ]);
    }
    Ok(t)
}

fn two_lane_means() -> Result<Table> {
    let mut t = Table::new(
        4,
        "two-lane mean overflow with randomized greens",
        &[
            "lane",
            "c",
            "EX_exact",
            "EX_fo",
            "EX_exact_refined",
            "EX_refined",
        ],
    );
    for lane in 0..2 {
        for c in CYCLES {
            let spec = two_lane_intersection(c)?;
            let model = &spec.lanes()[lane].arrival;
            let fo = first_order(&spec)?;
            let re = refined_betas(&spec)?;
            let fo_point = HeavyTrafficPoint {
                beta: fo.betas[lane],
                cycle: c,
                green: fo.greens[lane],
            };
            let re_point = HeavyTrafficPoint {
                beta: re.betas[lane],
                cycle: c,
                green: re.greens[lane],
            };
            t.push_nums(&[
                (lane + 1) as f64,
                c,
                exact_mean(model, fo.greens[lane], c)?,
                mean_first_order(&fo_point, model)?,
                exact_mean(model, re.greens[lane], c)?,
                mean_refined(&re_point, model)?,
            ]);
        }
    }
    Ok(t)
}

fn four_lane_greens(id: u8, increasing: bool) -> Result<Table> {
    let label = if increasing { "d_i = i" } else { "d_i = 1" };
    let mut t = Table::new(
        id,
        &format!("four-lane greens, weighted rule, {label}"),
        &[
            "c", "g1", "beta1", "g2", "beta2", "g3", "beta3", "g4", "beta4",
        ],
    );
    for c in CYCLES {
        let r = weighted_numerical(&four_lane_intersection(c, increasing)?)?;
        let mut row = vec![c];
        for (g, b) in r.greens.iter().zip(&r.betas) {
            row.push(*g);
            row.push(*b);
        }
        t.push_nums(&row);
    }
    Ok(t)
}

/// Exact and refined mean overflow per lane under the weighted rule.
fn four_lane_lane_means(spec: &IntersectionSpec) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let r = weighted_numerical(spec)?;
    let mut exact = Vec::with_capacity(4);
    let mut approx = Vec::with_capacity(4);
    for ((lane, &g), &beta) in spec.lanes().iter().zip(&r.greens).zip(&r.betas) {
        exact.push(exact_mean(&lane.arrival, g, spec.cycle())?);
        let point = HeavyTrafficPoint {
            beta,
            cycle: spec.cycle(),
            green: g,
        };
        approx.push(mean_refined(&point, &lane.arrival)?);
    }
    Ok((r.greens, exact, approx))
}

fn four_lane_means() -> Result<Table> {
    let mut t = Table::new(
        7,
        "four-lane mean overflow, exact and refined approximation",
        &[
            "weights",
            "c",
            "EX1",
            "EX1_refined",
            "EX2",
            "EX2_refined",
            "EX3",
            "EX3_refined",
            "EX4",
            "EX4_refined",
        ],
    );
    for increasing in [false, true] {
        for c in CYCLES {
            let (_, exact, approx) = four_lane_lane_means(&four_lane_intersection(c, increasing)?)?;
            let mut row = vec![
                Cell::Text(if increasing { "increasing" } else { "equal" }.into()),
                Cell::Num(c),
            ];
            for (e, a) in exact.iter().zip(&approx) {
                row.push(Cell::Num(*e));
                row.push(Cell::Num(*a));
            }
            t.rows.push(row);
        }
    }
    Ok(t)
}

fn webster_greens() -> Result<Table> {
    let mut t = Table::new(
        8,
        "four-lane greens, proportional rule",
        &["c", "g1", "g2", "g3", "g4", "rho"],
    );
    for c in CYCLES {
        let spec = four_lane_intersection(c, false)?;
        let r = webster_allocation(&spec)?;
        let mut row = vec![c];
        row.extend(&r.greens);
        row.push(webster_saturation(&spec));
        t.push_nums(&row);
    }
    Ok(t)
}

fn delays(form: WebsterForm) -> Result<Table> {
    let mut t = Table::new(
        9,
        "four-lane mean delays, weighted rule and proportional rule",
        &[
            "rule",
            "c",
            "D1",
            "D1_approx",
            "D2",
            "D2_approx",
            "D34",
            "D34_approx",
            "D",
        ],
    );
    for c in CYCLES {
        let spec = four_lane_intersection(c, false)?;
        let (greens, exact, approx) = four_lane_lane_means(&spec)?;
        let d = intersection_delay(&spec, AllocationMethod::WeightedNumerical, &greens, &exact)?;
        let a = intersection_delay(&spec, AllocationMethod::WeightedNumerical, &greens, &approx)?;
        t.rows.push(delay_row(
            "weighted",
            c,
            &d.lane_delays,
            &a.lane_delays,
            d.aggregate,
        ));
    }
    for c in CYCLES {
        let spec = four_lane_intersection(c, false)?;
        let r = webster_allocation(&spec)?;
        let mut exact = Vec::with_capacity(4);
        let mut approx = Vec::with_capacity(4);
        for (lane, &g) in spec.lanes().iter().zip(&r.greens) {
            exact.push(exact_mean(&lane.arrival, g, c)?);
            approx.push(webster_delay(lane.arrival.mean(), c, g, form)?);
        }
        let d = intersection_delay(&spec, AllocationMethod::Webster, &r.greens, &exact)?;
        t.rows.push(delay_row(
            "proportional",
            c,
            &d.lane_delays,
            &approx,
            d.aggregate,
        ));
    }
    Ok(t)
}

fn delay_row(rule: &str, c: f64, exact: &[f64], approx: &[f64], aggregate: f64) -> Vec<Cell> {
    // lanes 3 and 4 are identical
    let mut row = vec![Cell::Text(rule.into()), Cell::Num(c)];
    for i in 0..3 {
        row.push(Cell::Num(exact[i]));
        row.push(Cell::Num(approx[i]));
    }
    row.push(Cell::Num(aggregate));
    row
}

/// Builds table `id` (1 to 9). `form` only affects table 9.
pub fn build_table(id: u8, form: WebsterForm) -> Result<Table> {
    match id {
        1 => single_lane_table(1, 0.1),
        2 => single_lane_table(2, 1.0),
        3 => two_lane_greens(),
        4 => two_lane_means(),
        5 => four_lane_greens(5, false),
        6 => four_lane_greens(6, true),
        7 => four_lane_means(),
        8 => webster_greens(),
        9 => delays(form),
        _ => Err(FctlError::invalid(format!(
            "table id {id} is not in 1..={TABLE_COUNT}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(13.93512345, 6), "13.9351");
        assert_eq!(format_sig(0.1649, 6), "0.1649");
        assert_eq!(format_sig(9.9999996, 6), "10");
        assert_eq!(format_sig(243.1123456, 6), "243.112");
        assert_eq!(format_sig(0.0060899123, 6), "0.00608991");
        assert_eq!(format_sig(1234567.0, 6), "1.23457e6");
        assert_eq!(format_sig(-2.5e-7, 6), "-2.5e-7");
        assert_eq!(format_sig(30.0, 6), "30");
    }

    #[test]
    fn csv_and_markdown_shapes() {
        let t = build_table(8, WebsterForm::Classical).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("c,g1,g2,g3,g4,rho\n"));
        assert!(csv.contains("\n100,35.625,35.625,11.875,11.875,0.842105\n"));
        assert_eq!(t.to_markdown().lines().count(), 7);
        assert!(build_table(10, WebsterForm::Classical).is_err());
    }

    #[test]
    fn table_lookup() {
        let t = build_table(1, WebsterForm::Classical).unwrap();
        assert_eq!(t.rows.len(), 5);
        assert!((t.value(0, "P0_exact").unwrap() - 0.1649).abs() < 5e-4);
        assert!(t.value(0, "missing").is_none());
    }
}
