//! Confidence regions and intervals for ARMA coefficients from the
//! (adjusted) empirical likelihood ratio.
//!
//! All regions use the profile estimating functions, so `sigma2` is never part
//! of the region and the chi-square degrees of freedom equal `p + q`.

use std::fmt;
use std::str::FromStr;

use crate::arma::{region_violation, Order};
use crate::bartlett::{chi2_quantile, estimate_bartlett, BartlettFactor};
use crate::contour::{marching_squares, Polyline};
use crate::el::{adjust, solve_dual, AdjustmentPolicy};
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::periodogram::Periodogram;
use crate::whittle::{psi_profile_centered, whittle_fit, PsiMatrix};

/// Statistic and threshold used to decide membership.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Unadjusted empirical likelihood against `chi2_{k,1-alpha}`.
    El,
    /// Adjusted empirical likelihood against `chi2_{k,1-alpha}`.
    Ael(AdjustmentPolicy),
    /// Unadjusted statistic against a threshold scaled by the estimated
    /// Bartlett factor at each parameter value (scalar parameters only).
    Eb,
    /// Unadjusted statistic against a threshold scaled by a supplied constant.
    Tb(f64),
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::El => "EL",
            Method::Ael(_) => "AEL",
            Method::Eb => "EB",
            Method::Tb(_) => "TB",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Parses `el`, `ael`, `eb`; `tb` needs a constant and is built directly.
impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "el" => Ok(Method::El),
            "ael" => Ok(Method::Ael(AdjustmentPolicy::default())),
            "eb" => Ok(Method::Eb),
            "tb" => Err(Error::input("method tb needs a supplied Bartlett constant")),
            other => Err(Error::input(format!("unknown method `{other}`"))),
        }
    }
}

/// Outcome of evaluating a method at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub enum Evaluation {
    Value { stat: f64, threshold: f64 },
    /// Unadjusted problem with zero outside the convex hull.
    NoSolution,
    Failed(String),
}

impl Evaluation {
    pub fn is_inside(&self) -> bool {
        matches!(self, Evaluation::Value { stat, threshold } if stat <= threshold)
    }

    pub fn stat(&self) -> Option<f64> {
        match self {
            Evaluation::Value { stat, .. } => Some(*stat),
            _ => None,
        }
    }

    /// `stat / threshold`; infinite when undefined.
    pub fn ratio(&self) -> f64 {
        match self {
            Evaluation::Value { stat, threshold } => stat / threshold,
            _ => f64::INFINITY,
        }
    }
}

/// Evaluates `method` at the ARMA coefficients `beta1`.
pub fn evaluate(pg: &Periodogram, order: Order, beta1: &[f64], method: Method, alpha: f64) -> Result<Evaluation> {
    evaluate_psi(&psi_profile_centered(pg, order, beta1)?, method, alpha)
}

/// Evaluates `method` on unadjusted profile estimating functions.
pub fn evaluate_psi(psi: &PsiMatrix, method: Method, alpha: f64) -> Result<Evaluation> {
    let base = chi2_quantile(psi.k(), 1.0 - alpha)?;
    let (policy, threshold) = match method {
        Method::El => (AdjustmentPolicy::None, base),
        Method::Ael(policy) => (policy, base),
        Method::Tb(b) => (AdjustmentPolicy::None, base * BartlettFactor::supplied(b, psi.n_rows())?.scale()),
        Method::Eb => {
            let f = match estimate_bartlett(psi) {
                Ok(f) => f,
                Err(e @ Error::Input(_)) => return Err(e),
                Err(e) => return Ok(Evaluation::Failed(e.to_string())),
            };
            (AdjustmentPolicy::None, base * f.scale())
        }
    };
    let psi = adjust(psi, policy)?;
    Ok(match solve_dual(&psi) {
        Ok(sol) => Evaluation::Value {
            stat: sol.stat,
            threshold,
        },
        Err(Error::NoSolution) => Evaluation::NoSolution,
        Err(e) => Evaluation::Failed(e.to_string()),
    })
}

/// One axis of a scan box. Nodes sit at cell centres,
/// `lo + (i + 1/2) (hi - lo) / steps`, so open boxes such as `(0, 1)` never
/// touch their end points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::input(format!("axis range ({lo}, {hi}) is empty")));
        }
        if steps == 0 {
            return Err(Error::input("axis needs at least one step"));
        }
        Ok(Self { lo, hi, steps })
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = (self.hi - self.lo) / self.steps as f64;
        (0..self.steps).map(|i| self.lo + (i as f64 + 0.5) * h).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridNode {
    /// Index along each axis.
    pub index: Vec<usize>,
    pub params: Vec<f64>,
    pub eval: Evaluation,
}

/// Method evaluations on a rectangular grid of coefficient values.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGrid {
    pub order: Order,
    pub axes: Vec<Axis>,
    /// Row-major, last axis fastest.
    pub nodes: Vec<GridNode>,
    /// `chi2_{k,1-alpha}`, scaled by the supplied constant for TB. EB scales
    /// per node; see each node's evaluation.
    pub threshold: f64,
    pub method: Method,
    pub alpha: f64,
}

impl RegionGrid {
    pub fn inside_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.eval.is_inside()).count()
    }

    pub fn no_solution_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.eval == Evaluation::NoSolution)
            .count()
    }
}

/// Evaluates `method` at every node of the box.
///
/// Nodes are independent; with [`Execution::Parallel`] they are evaluated on
/// the thread pool and assembled in grid order. Solver failures are recorded
/// per node and never abort the scan.
pub fn scan_region(
    pg: &Periodogram,
    order: Order,
    axes: &[Axis],
    method: Method,
    alpha: f64,
    exec: Execution,
) -> Result<RegionGrid> {
    let k = order.n_coefficients();
    if axes.len() != k || k == 0 {
        return Err(Error::input(format!(
            "order {order} needs {k} axes, got {}",
            axes.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::input(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if method == Method::Eb && k != 1 {
        return Err(Error::input("estimated Bartlett correction is only available for one coefficient"));
    }
    let node_values: Vec<Vec<f64>> = axes.iter().map(Axis::nodes).collect();
    let total: usize = axes.iter().map(|a| a.steps).product();
    let index_of = |mut flat: usize| -> Vec<usize> {
        let mut idx = vec![0; k];
        for d in (0..k).rev() {
            idx[d] = flat % axes[d].steps;
            flat /= axes[d].steps;
        }
        idx
    };
    // every node must be admissible
    for flat in 0..total {
        let idx = index_of(flat);
        let params: Vec<f64> = idx.iter().enumerate().map(|(d, &i)| node_values[d][i]).collect();
        if region_violation(order, &params) > 0.0 {
            return Err(Error::domain(format!(
                "grid node {params:?} is outside the stationarity/invertibility region"
            )));
        }
    }

    let nodes = map_indexed(total, exec, |flat| {
        let index = index_of(flat);
        let params: Vec<f64> = index.iter().enumerate().map(|(d, &i)| node_values[d][i]).collect();
        let eval = evaluate(pg, order, &params, method, alpha).unwrap_or_else(|e| Evaluation::Failed(e.to_string()));
        GridNode { index, params, eval }
    });
    let base = chi2_quantile(k, 1.0 - alpha)?;
    let threshold = match method {
        Method::Tb(b) => base * BartlettFactor::supplied(b, pg.len())?.scale(),
        _ => base,
    };
    Ok(RegionGrid {
        order,
        axes: axes.to_vec(),
        nodes,
        threshold,
        method,
        alpha,
    })
}

/// Closed boundary polylines of a two-dimensional region.
///
/// The level set is `stat / threshold = 1`, so the per-node thresholds of EB
/// are respected. Undefined nodes count as outside.
pub fn extract_contour(grid: &RegionGrid) -> Result<Vec<Polyline>> {
    if grid.axes.len() != 2 {
        return Err(Error::input("contours need a two-dimensional grid"));
    }
    let xs = grid.axes[0].nodes();
    let ys = grid.axes[1].nodes();
    let values: Vec<f64> = grid.nodes.iter().map(|n| n.eval.ratio()).collect();
    Ok(marching_squares(&xs, &ys, &values, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub estimate: f64,
    pub contains_estimate: bool,
    /// The lower end hit the search bound before the statistic crossed the threshold.
    pub lo_truncated: bool,
    pub hi_truncated: bool,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Default search range for one coefficient: just inside the unit interval.
pub const DEFAULT_BOUNDS: (f64, f64) = (-1.0 + 1e-6, 1.0 - 1e-6);
const EXPANSION_STEP: f64 = 2e-3;
const BISECTION_TOL: f64 = 1e-10;

/// Confidence interval for a single ARMA coefficient.
///
/// Walks outward from the profile Whittle estimate in small steps until the
/// statistic exceeds its threshold, then bisects the crossing. An end that
/// reaches `bounds` without crossing is clamped there and flagged.
pub fn interval_1d(
    pg: &Periodogram,
    order: Order,
    method: Method,
    alpha: f64,
    bounds: Option<(f64, f64)>,
) -> Result<Interval> {
    if order.n_coefficients() != 1 {
        return Err(Error::input("interval_1d needs a one-coefficient model"));
    }
    let fit = whittle_fit(pg, order, true, None)?;
    if !fit.converged {
        return Err(Error::Convergence {
            iterations: fit.iterations,
            residual: f64::NAN,
        });
    }
    let (lo_b, hi_b) = bounds.unwrap_or(DEFAULT_BOUNDS);
    let est = fit.estimate[0];
    let inside = |x: f64| -> bool {
        evaluate(pg, order, &[x], method, alpha)
            .map(|e| e.is_inside())
            .unwrap_or(false)
    };
    let contains_estimate = inside(est);
    let walk = |dir: f64, bound: f64| -> (f64, bool) {
        let mut last_in = est;
        loop {
            let next = last_in + dir * EXPANSION_STEP;
            if (dir > 0.0 && next >= bound) || (dir < 0.0 && next <= bound) {
                if inside(bound) {
                    return (bound, true);
                }
                return (bisect(&inside, last_in, bound), false);
            }
            if !inside(next) {
                return (bisect(&inside, last_in, next), false);
            }
            last_in = next;
        }
    };
    let (lo, lo_truncated) = walk(-1.0, lo_b.max(est.min(hi_b) - 2.0));
    let (hi, hi_truncated) = walk(1.0, hi_b);
    Ok(Interval {
        lo,
        hi,
        estimate: est,
        contains_estimate,
        lo_truncated,
        hi_truncated,
    })
}

/// Boundary between an inside point and an outside point.
fn bisect(inside: &impl Fn(f64) -> bool, mut a_in: f64, mut b_out: f64) -> f64 {
    while (b_out - a_in).abs() > BISECTION_TOL {
        let mid = 0.5 * (a_in + b_out);
        if inside(mid) {
            a_in = mid;
        } else {
            b_out = mid;
        }
    }
    a_in
}
