//! Empirical likelihood ratio for a matrix of estimating-function values,
//! with the optional pseudo-observation adjustment.
//!
//! For rows `psi_1..psi_m` the log-ratio statistic is
//! `W = 2 sum_j ln(1 + xi' psi_j)` where the multiplier `xi` solves
//! `sum_j psi_j / (1 + xi' psi_j) = 0`. Equivalently `xi` minimizes the convex
//! dual `-sum_j ln(1 + xi' psi_j)` over `{xi : 1 + xi' psi_j > 1/m}`, which is
//! what [`solve_dual`] does with a damped Newton iteration.
//!
//! Adjustment appends `psi_{n+1} = -a_n * mean(psi_1..psi_n)`. Zero is then a
//! strictly positive combination of all rows, so the adjusted problem always
//! has a solution.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::arma::Order;
use crate::error::{Error, Result};
use crate::periodogram::Periodogram;
use crate::whittle::{psi_at, PsiMatrix};

pub const DUAL_TOL: f64 = 1e-9;
pub const MAX_NEWTON_STEPS: usize = 100;
/// Implied weights must stay at or below one: `1 + xi' psi_j >= 1/m + FEASIBILITY_MARGIN`.
const FEASIBILITY_MARGIN: f64 = 1e-12;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
/// Consecutive boundary-limited steps without residual decrease before the
/// dual is declared unbounded.
const STALL_LIMIT: usize = 10;
/// `1 + xi' psi_j` beyond this means the multiplier is running off to infinity.
const DIVERGENCE_BOUND: f64 = 1e12;

/// How the pseudo-observation scale `a_n` is chosen from the number of data rows `n`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AdjustmentPolicy {
    /// `a_n = max(1, ln(n) / 2)`.
    #[default]
    MaxOneHalfLog,
    /// `a_n = ln(n) / 2`.
    HalfLog,
    /// No pseudo-observation (plain empirical likelihood).
    None,
    Constant(f64),
}

impl AdjustmentPolicy {
    /// `a_n` for `n` data rows, capped at `n / 2`.
    pub fn a_n(&self, n: usize) -> f64 {
        let nf = n as f64;
        let raw = match *self {
            AdjustmentPolicy::MaxOneHalfLog => (nf.ln() / 2.0).max(1.0),
            AdjustmentPolicy::HalfLog => nf.ln() / 2.0,
            AdjustmentPolicy::None => 0.0,
            AdjustmentPolicy::Constant(c) => c,
        };
        raw.min(nf / 2.0)
    }

    pub fn is_adjusting(&self) -> bool {
        !matches!(self, AdjustmentPolicy::None)
    }
}

impl fmt::Display for AdjustmentPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdjustmentPolicy::MaxOneHalfLog => f.write_str("max-one-half-log"),
            AdjustmentPolicy::HalfLog => f.write_str("half-log"),
            AdjustmentPolicy::None => f.write_str("none"),
            AdjustmentPolicy::Constant(c) => write!(f, "constant:{c}"),
        }
    }
}

impl FromStr for AdjustmentPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-one-half-log" => Ok(AdjustmentPolicy::MaxOneHalfLog),
            "half-log" => Ok(AdjustmentPolicy::HalfLog),
            "none" => Ok(AdjustmentPolicy::None),
            other => {
                let c = other
                    .strip_prefix("constant:")
                    .and_then(|c| c.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::config(
                            "adjustment",
                            format!(
                                "expected max-one-half-log, half-log, none or constant:<c>, got `{other}`"
                            ),
                        )
                    })?;
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::config("adjustment", "constant a_n must be positive"));
                }
                Ok(AdjustmentPolicy::Constant(c))
            }
        }
    }
}

impl TryFrom<String> for AdjustmentPolicy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AdjustmentPolicy> for String {
    fn from(p: AdjustmentPolicy) -> String {
        p.to_string()
    }
}

/// Appends the pseudo-observation `-a_n * mean(psi)`.
///
/// `AdjustmentPolicy::None` returns the input unchanged.
pub fn adjust(psi: &PsiMatrix, policy: AdjustmentPolicy) -> Result<PsiMatrix> {
    adjust_inner(psi, policy, false)
}

/// Like [`adjust`], but the mean is taken after winsorizing each column at its
/// empirical 1st and 99th percentiles.
pub fn adjust_trimmed(psi: &PsiMatrix, policy: AdjustmentPolicy) -> Result<PsiMatrix> {
    adjust_inner(psi, policy, true)
}

fn adjust_inner(psi: &PsiMatrix, policy: AdjustmentPolicy, trimmed: bool) -> Result<PsiMatrix> {
    if psi.is_adjusted() {
        return Err(Error::Usage("estimating functions are already adjusted".into()));
    }
    if let AdjustmentPolicy::Constant(c) = policy {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::config("adjustment", "constant a_n must be positive"));
        }
    }
    if !policy.is_adjusting() {
        return Ok(psi.clone());
    }
    let n = psi.n_rows();
    if n == 0 {
        return Err(Error::input("cannot adjust an empty set of estimating functions"));
    }
    let a_n = policy.a_n(n);
    let mean = if trimmed { winsorized_mean(psi) } else { psi.data_mean() };
    let row: Vec<f64> = mean.iter().map(|m| -a_n * m).collect();
    Ok(psi.with_adjustment_row(&row, a_n))
}

fn winsorized_mean(psi: &PsiMatrix) -> Vec<f64> {
    (0..psi.k())
        .map(|c| {
            let mut col: Vec<f64> = psi.rows().map(|r| r[c]).collect();
            let mut sorted = col.clone();
            sorted.sort_by(f64::total_cmp);
            let lo = quantile_sorted(&sorted, 0.01);
            let hi = quantile_sorted(&sorted, 0.99);
            col.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
            col.iter().sum::<f64>() / col.len() as f64
        })
        .collect()
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Solution of the inner empirical likelihood problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ElSolution {
    /// Lagrange multiplier.
    pub xi: Vec<f64>,
    /// `p_j = 1 / (m (1 + xi' psi_j))`.
    pub weights: Vec<f64>,
    /// `2 sum_j ln(1 + xi' psi_j)`.
    pub stat: f64,
    pub converged: bool,
    /// Norm of `sum_j psi_j / (1 + xi' psi_j)`.
    pub residual: f64,
    pub inner_iterations: usize,
    /// Dual objective `-sum_j ln(1 + xi' psi_j)` after each accepted step.
    pub dual_trace: Vec<f64>,
}

/// Solves `sum_j psi_j / (1 + xi' psi_j) = 0` for `xi`.
///
/// The problem is first reduced to the row space of `psi`, so rank-deficient
/// inputs are handled and the statistic only depends on that span. In one and
/// two dimensions the convex hull condition is checked exactly; in higher
/// dimensions an unbounded dual is detected from the Newton iterates.
pub fn solve_dual(psi: &PsiMatrix) -> Result<ElSolution> {
    let m = psi.n_rows();
    let k = psi.k();
    if m == 0 {
        return Err(Error::input("no estimating function rows"));
    }
    let uniform = |xi: Vec<f64>| ElSolution {
        xi,
        weights: vec![1.0 / m as f64; m],
        stat: 0.0,
        converged: true,
        residual: 0.0,
        inner_iterations: 0,
        dual_trace: vec![0.0],
    };
    if k == 0 {
        return Ok(uniform(Vec::new()));
    }

    let basis = match row_space(psi) {
        Some(b) => b,
        None => return Ok(uniform(vec![0.0; k])),
    };
    let r = basis.ncols();
    let reduced: Vec<DVector<f64>> = psi
        .rows()
        .map(|row| basis.transpose() * DVector::from_column_slice(row))
        .collect();

    let scale = reduced.iter().map(|u| u.norm()).fold(0.0, f64::max);
    if !hull_contains_origin(&reduced, scale) {
        return Err(Error::NoSolution);
    }

    let eta = newton(&reduced, m, scale)?;
    let xi_vec = &basis * &eta.eta;
    let xi: Vec<f64> = xi_vec.iter().copied().collect();

    // weights and statistic from the original rows
    let denoms: Vec<f64> = psi
        .rows()
        .map(|row| 1.0 + row.iter().zip(&xi).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let weights = denoms.iter().map(|d| 1.0 / (m as f64 * d)).collect();
    let stat = 2.0 * denoms.iter().map(|d| d.ln()).sum::<f64>();
    let mut residual_vec = vec![0.0; k];
    for (row, d) in psi.rows().zip(&denoms) {
        residual_vec.iter_mut().zip(row).for_each(|(s, v)| *s += v / d);
    }
    let residual = residual_vec.iter().map(|v| v * v).sum::<f64>().sqrt();
    debug_assert!(r <= k);
    Ok(ElSolution {
        xi,
        weights,
        stat,
        converged: true,
        residual,
        inner_iterations: eta.iterations,
        dual_trace: eta.trace,
    })
}

/// Orthonormal basis (k x r) of the span of the rows, or `None` if all rows vanish.
fn row_space(psi: &PsiMatrix) -> Option<DMatrix<f64>> {
    let k = psi.k();
    let mut g = DMatrix::<f64>::zeros(k, k);
    for row in psi.rows() {
        for a in 0..k {
            for b in 0..k {
                g[(a, b)] += row[a] * row[b];
            }
        }
    }
    let eig = g.symmetric_eigen();
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return None;
    }
    let keep: Vec<usize> = (0..k)
        .filter(|&i| eig.eigenvalues[i] > 1e-13 * top)
        .collect();
    let mut basis = DMatrix::zeros(k, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &eig.eigenvectors.column(i));
    }
    Some(basis)
}

/// Exact interior test in one and two dimensions; higher dimensions defer to
/// divergence detection in the Newton loop.
fn hull_contains_origin(rows: &[DVector<f64>], scale: f64) -> bool {
    let tiny = 1e-14 * scale;
    match rows.first().map_or(0, |r| r.len()) {
        1 => {
            let pos = rows.iter().any(|u| u[0] > tiny);
            let neg = rows.iter().any(|u| u[0] < -tiny);
            pos && neg
        }
        2 => {
            let mut angles: Vec<f64> = rows
                .iter()
                .filter(|u| u.norm() > tiny)
                .map(|u| u[1].atan2(u[0]))
                .collect();
            if angles.len() < 3 {
                return false;
            }
            angles.sort_by(f64::total_cmp);
            let wrap = angles[0] + 2.0 * PI - angles[angles.len() - 1];
            let max_gap = angles
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(wrap, f64::max);
            max_gap < PI - 1e-12
        }
        _ => true,
    }
}

struct NewtonOutcome {
    eta: DVector<f64>,
    iterations: usize,
    trace: Vec<f64>,
}

fn newton(rows: &[DVector<f64>], m: usize, scale: f64) -> Result<NewtonOutcome> {
    let r = rows[0].len();
    let floor = 1.0 / m as f64 + FEASIBILITY_MARGIN;
    let tol = DUAL_TOL * scale.max(1.0);

    let eval = |eta: &DVector<f64>| -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
        let mut f = 0.0;
        let mut grad = DVector::zeros(r);
        let mut hess = DMatrix::zeros(r, r);
        for u in rows {
            let d = 1.0 + eta.dot(u);
            if d < floor {
                return None;
            }
            f -= d.ln();
            grad -= u / d;
            hess += (u * u.transpose()) / (d * d);
        }
        Some((f, grad, hess))
    };
    let max_denom = |eta: &DVector<f64>| rows.iter().map(|u| 1.0 + eta.dot(u)).fold(0.0, f64::max);

    let mut eta = DVector::zeros(r);
    let (mut f, mut grad, mut hess) = eval(&eta).expect("origin is feasible");
    let mut trace = vec![f];
    let mut stalls = 0;
    let mut polish = 0;
    // `eta' grad` is the deficit of the weight sum, so both must vanish
    let residual = |eta: &DVector<f64>, grad: &DVector<f64>| grad.norm() * (1.0 + eta.norm());
    for it in 0..MAX_NEWTON_STEPS {
        let res = residual(&eta, &grad);
        if res < tol {
            // a couple of extra steps take the residual to roundoff so the
            // weights sum to one at machine precision
            polish += 1;
            if polish > 2 || res == 0.0 {
                return Ok(NewtonOutcome {
                    eta,
                    iterations: it,
                    trace,
                });
            }
        }
        let step = newton_direction(&hess, &grad);
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut accepted = None;
        let mut truncated = false;
        for _ in 0..MAX_HALVINGS {
            let cand = &eta + &step * t;
            match eval(&cand) {
                // near the optimum the objective change drowns in roundoff,
                // so a smaller gradient is accepted as progress there
                Some((fc, gc, hc))
                    if fc <= f + ARMIJO * t * slope
                        || (fc - f <= 1e-13 * (1.0 + f.abs()) && gc.norm() < grad.norm()) =>
                {
                    accepted = Some((cand, fc, gc, hc));
                    break;
                }
                Some(_) => {}
                None => truncated = true,
            }
            t *= 0.5;
        }
        let Some((cand, fc, gc, hc)) = accepted else {
            if res < tol {
                return Ok(NewtonOutcome {
                    eta,
                    iterations: it,
                    trace,
                });
            }
            return Err(Error::Convergence {
                iterations: it,
                residual: res,
            });
        };
        if truncated && residual(&cand, &gc) >= res {
            stalls += 1;
        } else {
            stalls = 0;
        }
        eta = cand;
        f = fc;
        grad = gc;
        hess = hc;
        trace.push(f);
        if stalls >= STALL_LIMIT || max_denom(&eta) > DIVERGENCE_BOUND {
            return Err(Error::NoSolution);
        }
    }
    let res = residual(&eta, &grad);
    if res < tol {
        Ok(NewtonOutcome {
            eta,
            iterations: MAX_NEWTON_STEPS,
            trace,
        })
    } else {
        Err(Error::Convergence {
            iterations: MAX_NEWTON_STEPS,
            residual: res,
        })
    }
}

/// `-H^-1 grad`, via Cholesky with a ridge fallback.
fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = hess.clone().cholesky() {
        return -ch.solve(grad);
    }
    let ridge = 1e-12 * hess.trace().max(1e-300);
    let mut h = hess.clone();
    for i in 0..h.nrows() {
        h[(i, i)] += ridge;
    }
    match h.clone().cholesky() {
        Some(ch) => -ch.solve(grad),
        None => -grad.clone(),
    }
}

/// Empirical likelihood ratio statistic at `params`.
///
/// With `profile = true` `params` are the ARMA coefficients and the profile
/// estimating functions are used; otherwise `params` also carries `sigma2`.
/// `AdjustmentPolicy::None` gives the unadjusted statistic.
pub fn el_stat(
    pg: &Periodogram,
    order: Order,
    params: &[f64],
    profile: bool,
    policy: AdjustmentPolicy,
) -> Result<ElSolution> {
    let psi = psi_at(pg, order, params, profile)?;
    solve_dual(&adjust(&psi, policy)?)
}
