//! Monte Carlo coverage experiments.
//!
//! Each replication simulates one series at the true parameter and evaluates
//! every requested method on that same series, so method comparisons are
//! paired. Coverage is decided by testing the true parameter directly, which
//! is equivalent to interval membership.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arma::{region_violation, ArmaSpec, NoiseCentering, NoiseKind, Order};
use crate::confidence::{evaluate_psi, Evaluation, Method};
use crate::el::AdjustmentPolicy;
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::periodogram::Periodogram;
use crate::whittle::psi_profile_centered;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ma1,
    Ar1,
    Arma11,
}

impl Family {
    pub fn order(&self) -> Order {
        match self {
            Family::Ma1 => Order::new(0, 1),
            Family::Ar1 => Order::new(1, 0),
            Family::Arma11 => Order::new(1, 1),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Family::Ma1 => "MA(1)",
            Family::Ar1 => "AR(1)",
            Family::Arma11 => "ARMA(1,1)",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    El,
    Ael,
    Eb,
    Tb,
}

/// A parameter point: a bare number for one-coefficient families, a list
/// `[phi, theta]` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamPoint {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl ParamPoint {
    pub fn values(&self) -> Vec<f64> {
        match self {
            ParamPoint::Scalar(x) => vec![*x],
            ParamPoint::Vector(v) => v.clone(),
        }
    }
}

fn default_level() -> f64 {
    0.9
}

fn default_noises() -> Vec<NoiseKind> {
    vec![NoiseKind::StandardNormal]
}

fn default_methods() -> Vec<MethodName> {
    vec![MethodName::El, MethodName::Ael]
}

fn default_adjustment() -> AdjustmentPolicy {
    AdjustmentPolicy::HalfLog
}

fn default_sigma2() -> f64 {
    1.0
}

/// Declarative description of a coverage sweep, usually read from TOML:
///
/// ```toml
/// family = "ma1"
/// params = [0.25, 0.5]
/// sample_sizes = [20, 70]
/// noises = ["normal", "chisq5"]
/// replications = 1000
/// level = 0.9
/// methods = ["el", "ael"]
/// seed = 2024
/// adjustment = "half-log"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub family: Family,
    pub params: Vec<ParamPoint>,
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_noises")]
    pub noises: Vec<NoiseKind>,
    pub replications: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodName>,
    pub seed: u64,
    #[serde(default = "default_adjustment")]
    pub adjustment: AdjustmentPolicy,
    #[serde(default)]
    pub centering: NoiseCentering,
    #[serde(default)]
    pub tb_constant: Option<f64>,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
}

impl ExperimentPlan {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let plan: Self = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = msg
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "plan".to_string());
            Error::config(field, msg)
        })?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::config("replications", "must be at least 1"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::config("level", format!("must lie in (0, 1), got {}", self.level)));
        }
        if self.params.is_empty() {
            return Err(Error::config("params", "at least one parameter point is required"));
        }
        if self.sample_sizes.is_empty() {
            return Err(Error::config("sample_sizes", "at least one sample size is required"));
        }
        if let Some(&n) = self.sample_sizes.iter().find(|&&n| n < 8) {
            return Err(Error::config("sample_sizes", format!("series length {n} is too short (minimum 8)")));
        }
        if self.noises.is_empty() {
            return Err(Error::config("noises", "at least one noise kind is required"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods", "at least one method is required"));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::config("sigma2", "must be positive"));
        }
        let order = self.family.order();
        let k = order.n_coefficients();
        for p in &self.params {
            let v = p.values();
            if v.len() != k {
                return Err(Error::config(
                    "params",
                    format!("{} needs {k} coefficient(s) per point, got {v:?}", self.family),
                ));
            }
            if v.iter().any(|x| !x.is_finite()) || region_violation(order, &v) > 0.0 {
                return Err(Error::config(
                    "params",
                    format!("{v:?} is outside the stationarity/invertibility region"),
                ));
            }
        }
        if self.methods.contains(&MethodName::Eb) && k != 1 {
            return Err(Error::config("methods", "eb needs a one-coefficient family"));
        }
        if self.methods.contains(&MethodName::Tb) {
            match self.tb_constant {
                None => return Err(Error::config("tb_constant", "required when methods include tb")),
                Some(b) if !b.is_finite() => return Err(Error::config("tb_constant", "must be finite")),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        1.0 - self.level
    }

    pub fn resolved_methods(&self) -> Vec<Method> {
        self.methods
            .iter()
            .map(|m| match m {
                MethodName::El => Method::El,
                MethodName::Ael => Method::Ael(self.adjustment),
                MethodName::Eb => Method::Eb,
                MethodName::Tb => Method::Tb(self.tb_constant.unwrap_or(0.0)),
            })
            .collect()
    }

    /// `(param, n, noise)` combinations in report order.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for p in &self.params {
            for &n in &self.sample_sizes {
                for &noise in &self.noises {
                    out.push(CellKey {
                        param: p.values(),
                        n,
                        noise,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellKey {
    pub param: Vec<f64>,
    pub n: usize,
    pub noise: NoiseKind,
}

/// One `(cell, method)` line of a report. `outcomes[r]` is the evaluation on
/// replication `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub cell: usize,
    pub key: CellKey,
    pub method: Method,
    pub outcomes: Vec<Evaluation>,
}

impl CoverageRow {
    pub fn replications(&self) -> usize {
        self.outcomes.len()
    }

    pub fn covered(&self) -> usize {
        self.outcomes.iter().filter(|e| e.is_inside()).count()
    }

    /// Undefined statistics count as non-coverage.
    pub fn coverage(&self) -> f64 {
        self.covered() as f64 / self.replications() as f64
    }

    /// `sqrt(p (1 - p) / R)`.
    pub fn standard_error(&self) -> f64 {
        let p = self.coverage();
        (p * (1.0 - p) / self.replications() as f64).sqrt()
    }

    pub fn no_solution(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|e| matches!(e, Evaluation::NoSolution))
            .count()
    }

    pub fn failures(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|e| matches!(e, Evaluation::Failed(_)))
            .count()
    }

    /// Statistic per replication, `NaN` where undefined.
    pub fn stats(&self) -> Vec<f64> {
        self.outcomes
            .iter()
            .map(|e| e.stat().unwrap_or(f64::NAN))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub family: Family,
    pub level: f64,
    pub seed: u64,
    pub adjustment: AdjustmentPolicy,
    pub centering: NoiseCentering,
    pub cells: Vec<CellKey>,
    /// Cell-major, methods in plan order within a cell.
    pub rows: Vec<CoverageRow>,
}

impl CoverageReport {
    pub fn row(&self, cell: usize, label: &str) -> Option<&CoverageRow> {
        self.rows
            .iter()
            .find(|r| r.cell == cell && r.method.label() == label)
    }
}

/// Seed for replication `rep` of cell `cell`.
pub fn replication_seed(base: u64, cell: usize, rep: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(mix(base) ^ cell as u64) ^ rep as u64)
}

/// Runs every cell of `plan`. Replication failures are recorded in the
/// report and never stop the sweep.
pub fn run_coverage(plan: &ExperimentPlan, exec: Execution) -> Result<CoverageReport> {
    plan.validate()?;
    let order = plan.family.order();
    let methods = plan.resolved_methods();
    let alpha = plan.alpha();
    let cells = plan.cells();
    let r = plan.replications;

    let outcomes: Vec<Vec<Evaluation>> = map_indexed(cells.len() * r, exec, |flat| {
        let (c, rep) = (flat / r, flat % r);
        let key = &cells[c];
        let seed = replication_seed(plan.seed, c, rep);
        replicate(order, key, plan, &methods, alpha, seed)
            .unwrap_or_else(|e| vec![Evaluation::Failed(e.to_string()); methods.len()])
    });

    let mut rows = Vec::with_capacity(cells.len() * methods.len());
    for (c, key) in cells.iter().enumerate() {
        for (mi, &method) in methods.iter().enumerate() {
            rows.push(CoverageRow {
                cell: c,
                key: key.clone(),
                method,
                outcomes: outcomes[c * r..(c + 1) * r]
                    .iter()
                    .map(|o| o[mi].clone())
                    .collect(),
            });
        }
    }
    Ok(CoverageReport {
        family: plan.family,
        level: plan.level,
        seed: plan.seed,
        adjustment: plan.adjustment,
        centering: plan.centering,
        cells,
        rows,
    })
}

fn replicate(
    order: Order,
    key: &CellKey,
    plan: &ExperimentPlan,
    methods: &[Method],
    alpha: f64,
    seed: u64,
) -> Result<Vec<Evaluation>> {
    let spec = ArmaSpec::from_coefficients(order, &key.param, plan.sigma2)?;
    let series = spec.simulate_with(key.n, key.noise, plan.centering, seed)?;
    let pg = Periodogram::compute(&series);
    let psi = psi_profile_centered(&pg, order, &key.param)?;
    methods
        .iter()
        .map(|&m| evaluate_psi(&psi, m, alpha))
        .collect()
}

/// AEL against EL for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedRow {
    pub cell: usize,
    pub key: CellKey,
    pub el: Option<f64>,
    pub ael: Option<f64>,
    /// `ael - el`.
    pub difference: Option<f64>,
    pub ael_closer: Option<bool>,
    /// Replications covered by EL only; zero whenever the statistics nest.
    pub el_only: usize,
    /// Replications covered by AEL only.
    pub ael_only: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedSummary {
    pub rows: Vec<PairedRow>,
    /// Cells where AEL coverage is strictly closer to the nominal level.
    pub ael_closer_count: usize,
    /// Cells lacking EL or AEL.
    pub incomplete: usize,
}

pub fn paired_summary(report: &CoverageReport) -> PairedSummary {
    let mut rows = Vec::new();
    let mut closer = 0;
    let mut incomplete = 0;
    for (c, key) in report.cells.iter().enumerate() {
        let el = report.row(c, "EL");
        let ael = report.row(c, "AEL");
        let (mut el_only, mut ael_only) = (0, 0);
        if let (Some(e), Some(a)) = (el, ael) {
            for (x, y) in e.outcomes.iter().zip(&a.outcomes) {
                match (x.is_inside(), y.is_inside()) {
                    (true, false) => el_only += 1,
                    (false, true) => ael_only += 1,
                    _ => {}
                }
            }
        } else {
            incomplete += 1;
        }
        let el_cov = el.map(CoverageRow::coverage);
        let ael_cov = ael.map(CoverageRow::coverage);
        let difference = el_cov.zip(ael_cov).map(|(e, a)| a - e);
        let ael_closer = el_cov
            .zip(ael_cov)
            .map(|(e, a)| (a - report.level).abs() < (e - report.level).abs());
        if ael_closer == Some(true) {
            closer += 1;
        }
        rows.push(PairedRow {
            cell: c,
            key: key.clone(),
            el: el_cov,
            ael: ael_cov,
            difference,
            ael_closer,
            el_only,
            ael_only,
        });
    }
    PairedSummary {
        rows,
        ael_closer_count: closer,
        incomplete,
    }
}
