//! Whittle spectral likelihood, its estimating functions and the Whittle
//! M-estimator.
//!
//! Parameters are laid out as `(phi_1..phi_p, theta_1..theta_q, sigma2)` for the
//! full likelihood and `(phi_1..phi_p, theta_1..theta_q)` for the profile
//! likelihood, where `sigma2` has been maximized out.

use nalgebra::{DMatrix, DVector};

use crate::arma::{region_violation, ArmaSpec, Order};
use crate::el::{adjust, AdjustmentPolicy};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::periodogram::Periodogram;

/// Added to the negative log-likelihood outside the admissible region.
pub const BOUNDARY_PENALTY: f64 = 1e6;
pub const FIT_DIAMETER_TOL: f64 = 1e-7;
pub const FIT_MAX_ITERATIONS: usize = 2000;
/// Relative step for finite-difference derivatives of the estimating functions.
pub const SANDWICH_FD_STEP: f64 = 1e-6;

/// An `m x k` matrix of estimating-function values, one row per periodogram
/// ordinate plus, once adjusted, the pseudo-observation row.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiMatrix {
    data: Vec<f64>,
    rows: usize,
    k: usize,
    adjusted: bool,
    a_n: f64,
}

impl PsiMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::input("rows of unequal length"));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input("non-finite estimating function value"));
        }
        Ok(Self {
            data: rows.iter().flatten().copied().collect(),
            rows: rows.len(),
            k,
            adjusted: false,
            a_n: 0.0,
        })
    }

    pub(crate) fn from_flat(data: Vec<f64>, rows: usize, k: usize) -> Self {
        debug_assert_eq!(data.len(), rows * k);
        Self {
            data,
            rows,
            k,
            adjusted: false,
            a_n: 0.0,
        }
    }

    pub(crate) fn with_adjustment_row(&self, row: &[f64], a_n: f64) -> Self {
        let mut data = self.data.clone();
        data.extend_from_slice(row);
        Self {
            data,
            rows: self.rows + 1,
            k: self.k,
            adjusted: true,
            a_n,
        }
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.k..(j + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |j| self.row(j))
    }

    /// Number of rows `m` (`n`, or `n + 1` once adjusted).
    pub fn n_rows(&self) -> usize {
        self.rows
    }

    /// Number of data rows `n`, excluding any pseudo-observation.
    pub fn n_data(&self) -> usize {
        if self.adjusted {
            self.rows - 1
        } else {
            self.rows
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_adjusted(&self) -> bool {
        self.adjusted
    }

    pub fn a_n(&self) -> f64 {
        self.a_n
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.k];
        for r in self.rows() {
            sums.iter_mut().zip(r).for_each(|(s, v)| *s += v);
        }
        sums
    }

    /// Mean of the data rows.
    pub fn data_mean(&self) -> Vec<f64> {
        let n = self.n_data();
        let mut mean = vec![0.0; self.k];
        for j in 0..n {
            mean.iter_mut().zip(self.row(j)).for_each(|(s, v)| *s += v);
        }
        mean.iter_mut().for_each(|s| *s /= n as f64);
        mean
    }

    /// Applies `rows -> rows * map` (each row as a row vector times the `k x k` map).
    pub fn transform(&self, map: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for r in self.rows() {
            let v = DVector::from_column_slice(r);
            data.extend((map.transpose() * v).iter());
        }
        Self {
            data,
            ..self.clone()
        }
    }
}

/// `-sum ln g_j - sum I_j / g_j` over the retained ordinates.
pub fn whittle_loglik(pg: &Periodogram, spec: &ArmaSpec) -> f64 {
    pg.iter()
        .map(|(w, i)| {
            let g = spec.spectral_density(w);
            -g.ln() - i / g
        })
        .sum()
}

/// Profile log-likelihood value together with the implied innovation variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileLoglik {
    pub value: f64,
    /// `sigma2_hat = n^-1 sum I_j / g1_j`, the maximizer of the full likelihood
    /// in `sigma2` for these coefficients.
    pub sigma2: f64,
}

/// `-n ln(n^-1 sum I_j / g1_j) - sum ln g1_j - n` with `g1 = g / sigma2`.
///
/// This equals the full Whittle log-likelihood maximized over `sigma2`, with no
/// additive constant.
pub fn profile_loglik(pg: &Periodogram, order: Order, coefficients: &[f64]) -> Result<ProfileLoglik> {
    let spec = ArmaSpec::from_coefficients(order, coefficients, 1.0)?;
    let n = pg.len() as f64;
    let (mut ratio, mut log_g) = (0.0, 0.0);
    for (w, i) in pg.iter() {
        let g1 = spec.unit_spectral_density(w);
        ratio += i / g1;
        log_g += g1.ln();
    }
    let sigma2 = ratio / n;
    Ok(ProfileLoglik {
        value: -n * sigma2.ln() - log_g - n,
        sigma2,
    })
}

/// Rows `(I_j / g_j - 1) grad ln g_j` with respect to `(phi, theta, sigma2)`.
pub fn psi_full(pg: &Periodogram, spec: &ArmaSpec) -> PsiMatrix {
    let k = spec.order().n_full();
    let mut data = Vec::with_capacity(pg.len() * k);
    for (w, i) in pg.iter() {
        let scale = i / spec.spectral_density(w) - 1.0;
        data.extend(spec.log_spectral_gradient(w, false).into_iter().map(|d| scale * d));
    }
    PsiMatrix::from_flat(data, pg.len(), k)
}

/// Which profile estimating function to build.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum ProfileForm {
    /// `(I_j / g1_j) (d_j - dbar)` with `d_j = grad ln g1_j`.
    Raw,
    /// `(I_j / g1_j - mean_l I_l / g1_l) (d_j - dbar)`: the same column sums,
    /// but each row has mean close to zero, so the Gram matrix estimates the
    /// variance of the sum and the likelihood ratio is chi-square calibrated.
    #[default]
    Centered,
}

/// Profile estimating functions `(I_j / g1_j) (grad ln g1_j - mean_l grad ln g1_l)`.
///
/// The centering average runs over the `n` data frequencies.
pub fn psi_profile(pg: &Periodogram, order: Order, coefficients: &[f64]) -> Result<PsiMatrix> {
    psi_profile_form(pg, order, coefficients, ProfileForm::Raw)
}

/// Profile estimating functions with the ratio centred at its mean; see
/// [`ProfileForm::Centered`]. This is the form the test statistics use.
pub fn psi_profile_centered(pg: &Periodogram, order: Order, coefficients: &[f64]) -> Result<PsiMatrix> {
    psi_profile_form(pg, order, coefficients, ProfileForm::Centered)
}

pub fn psi_profile_form(pg: &Periodogram, order: Order, coefficients: &[f64], form: ProfileForm) -> Result<PsiMatrix> {
    let spec = ArmaSpec::from_coefficients(order, coefficients, 1.0)?;
    let k = order.n_coefficients();
    let n = pg.len();
    let grads: Vec<Vec<f64>> = pg
        .freqs()
        .iter()
        .map(|&w| spec.log_spectral_gradient(w, true))
        .collect();
    let mut centre = vec![0.0; k];
    for g in &grads {
        centre.iter_mut().zip(g).for_each(|(c, v)| *c += v);
    }
    centre.iter_mut().for_each(|c| *c /= n as f64);

    let ratios: Vec<f64> = pg
        .iter()
        .map(|(w, i)| i / spec.unit_spectral_density(w))
        .collect();
    let offset = match form {
        ProfileForm::Raw => 0.0,
        ProfileForm::Centered => ratios.iter().sum::<f64>() / n as f64,
    };
    let mut data = Vec::with_capacity(n * k);
    for (ratio, g) in ratios.iter().zip(&grads) {
        data.extend(g.iter().zip(&centre).map(|(d, c)| (ratio - offset) * (d - c)));
    }
    Ok(PsiMatrix::from_flat(data, n, k))
}

/// Estimating functions at `params`: full (`params` ends with `sigma2`) or
/// the centred profile form.
pub fn psi_at(pg: &Periodogram, order: Order, params: &[f64], profile: bool) -> Result<PsiMatrix> {
    if profile {
        psi_profile_centered(pg, order, params)
    } else {
        Ok(psi_full(pg, &ArmaSpec::from_full(order, params)?))
    }
}

/// Objective maximized by the fit: Whittle log-likelihood (full) or the profile.
pub fn objective(pg: &Periodogram, order: Order, params: &[f64], profile: bool) -> Result<f64> {
    if profile {
        Ok(profile_loglik(pg, order, params)?.value)
    } else {
        Ok(whittle_loglik(pg, &ArmaSpec::from_full(order, params)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WhittleFit {
    pub order: Order,
    pub profile: bool,
    /// Coefficients, followed by `sigma2` for a full fit.
    pub estimate: Vec<f64>,
    /// Innovation variance at the estimate (the profile `sigma2_hat` for profile fits).
    pub sigma2: f64,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl WhittleFit {
    pub fn coefficients(&self) -> &[f64] {
        &self.estimate[..self.order.n_coefficients()]
    }

    pub fn spec(&self) -> Result<ArmaSpec> {
        ArmaSpec::from_coefficients(self.order, self.coefficients(), self.sigma2)
    }
}

/// Maximizes the Whittle (or profile) log-likelihood by Nelder-Mead with a
/// boundary penalty, then polishes the root of the score with Newton steps.
///
/// ARMA models with two or more coefficients are started from the origin and
/// four jittered points unless `init` is given; one-coefficient models use a
/// single start.
pub fn whittle_fit(
    pg: &Periodogram,
    order: Order,
    profile: bool,
    init: Option<&[f64]>,
) -> Result<WhittleFit> {
    if pg.is_empty() {
        return Err(Error::input("empty periodogram"));
    }
    let kc = order.n_coefficients();
    let starts: Vec<Vec<f64>> = match init {
        Some(x) => {
            let expected = if profile { kc } else { kc + 1 };
            if x.len() != expected && x.len() != kc {
                return Err(Error::input(format!(
                    "initial value has length {}, expected {expected}",
                    x.len()
                )));
            }
            vec![x[..kc].to_vec()]
        }
        None => default_starts(order),
    };

    let neg = |x: &[f64]| -> f64 {
        let coefs = &x[..kc];
        let mut violation = region_violation(order, coefs);
        if !profile {
            violation += (-x[kc]).max(0.0);
            if x[kc] <= 0.0 {
                violation += 1e-12;
            }
        }
        if violation > 0.0 {
            return BOUNDARY_PENALTY * (1.0 + violation);
        }
        match objective(pg, order, x, profile) {
            Ok(v) if v.is_finite() => -v,
            _ => BOUNDARY_PENALTY * (1.0 + violation),
        }
    };

    let mut best: Option<(Vec<f64>, f64, bool, usize)> = None;
    for start in starts {
        let mut x0 = start.clone();
        if !profile {
            x0.push(profile_loglik(pg, order, &start)?.sigma2);
        }
        let mut step: Vec<f64> = vec![0.1; kc];
        if !profile {
            step.push(0.1 * x0[kc]);
        }
        let opts = NelderMeadOptions {
            step,
            diameter_tol: FIT_DIAMETER_TOL,
            max_iterations: FIT_MAX_ITERATIONS,
        };
        let m = nelder_mead(neg, &x0, &opts);
        if best.as_ref().is_none_or(|b| m.value < b.1) {
            best = Some((m.x, m.value, m.converged, m.iterations));
        }
    }
    let (mut x, mut value, converged, iterations) =
        best.ok_or_else(|| Error::domain("no admissible starting point"))?;
    if value >= BOUNDARY_PENALTY {
        return Err(Error::domain("optimizer never entered the admissible region"));
    }

    if let Some((xp, vp)) = polish_score_root(pg, order, &x, profile, -value) {
        x = xp;
        value = -vp;
    }
    let sigma2 = if profile {
        profile_loglik(pg, order, &x)?.sigma2
    } else {
        x[kc]
    };
    Ok(WhittleFit {
        order,
        profile,
        estimate: x,
        sigma2,
        loglik: -value,
        converged,
        iterations,
    })
}

fn default_starts(order: Order) -> Vec<Vec<f64>> {
    let kc = order.n_coefficients();
    let mut starts = vec![vec![0.0; kc]];
    if kc >= 2 {
        for pattern in [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]] {
            let x: Vec<f64> = (0..kc).map(|i| 0.5 * pattern[i % 2]).collect();
            if region_violation(order, &x) == 0.0 {
                starts.push(x);
            }
        }
    }
    starts
}

/// Newton iterations on `sum_j psi_j(beta) = 0` with a finite-difference
/// Jacobian, accepted only while the log-likelihood does not drop.
fn polish_score_root(
    pg: &Periodogram,
    order: Order,
    x0: &[f64],
    profile: bool,
    loglik0: f64,
) -> Option<(Vec<f64>, f64)> {
    let k = x0.len();
    if k == 0 {
        return None;
    }
    let score = |x: &[f64]| -> Option<Vec<f64>> { Some(psi_at(pg, order, x, profile).ok()?.column_sums()) };
    let mut x = x0.to_vec();
    let mut ll = loglik0;
    let mut s = score(&x)?;
    for _ in 0..20 {
        let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-13 * pg.len() as f64 {
            break;
        }
        let jac = fd_jacobian(|t| score(t), &x)?;
        let step = jac.lu().solve(&DVector::from_column_slice(&s))?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a - t * d).collect();
            if let Ok(v) = objective(pg, order, &cand, profile) {
                if v.is_finite() && v >= ll - 1e-12 * ll.abs().max(1.0) {
                    if let Some(sc) = score(&cand) {
                        let new_norm = sc.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if new_norm < norm {
                            x = cand;
                            ll = v.max(ll);
                            s = sc;
                            accepted = true;
                            break;
                        }
                    }
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let final_ll = objective(pg, order, &x, profile).ok()?;
    Some((x, final_ll))
}

/// Central-difference Jacobian with relative step [`SANDWICH_FD_STEP`];
/// entry `(r, i)` is `d f_r / d x_i`.
fn fd_jacobian<F>(f: F, x: &[f64]) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let k = x.len();
    let mut jac = DMatrix::zeros(k, k);
    let mut xp = x.to_vec();
    for i in 0..k {
        let h = SANDWICH_FD_STEP * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let up = f(&xp)?;
        xp[i] = x[i] - h;
        let down = f(&xp)?;
        xp[i] = x[i];
        for r in 0..up.len() {
            jac[(r, i)] = (up[r] - down[r]) / (2.0 * h);
        }
    }
    Some(jac)
}

/// Sandwich quantities of the (adjusted) estimating functions.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichDiag {
    /// `m^-1 sum_j d psi_j / d beta'`.
    pub a_hat: DMatrix<f64>,
    /// `m^-1 sum_j psi_j psi_j'`.
    pub sigma_hat: DMatrix<f64>,
    /// `A^-1 Sigma A'^-1`.
    pub v_hat: DMatrix<f64>,
    /// Number of rows `m` used in the averages.
    pub m: usize,
    pub condition: f64,
}

impl SandwichDiag {
    /// `m * delta' V^-1 delta`, the local quadratic approximation of the
    /// empirical likelihood ratio at `estimate + delta`.
    pub fn quadratic_form(&self, delta: &[f64]) -> Result<f64> {
        let d = DVector::from_column_slice(delta);
        let sigma_inv = self
            .sigma_hat
            .clone()
            .try_inverse()
            .ok_or(Error::Singular { condition: f64::INFINITY })?;
        let ad = &self.a_hat * d;
        Ok(self.m as f64 * (ad.transpose() * sigma_inv * ad)[(0, 0)])
    }
}

/// Computes `A_hat`, `Sigma_hat` and `V_hat` at `params`, including the
/// pseudo-observation row when `policy` adjusts.
pub fn sandwich(
    pg: &Periodogram,
    order: Order,
    params: &[f64],
    profile: bool,
    policy: AdjustmentPolicy,
) -> Result<SandwichDiag> {
    let build = |x: &[f64]| -> Result<PsiMatrix> { adjust(&psi_at(pg, order, x, profile)?, policy) };
    let psi = build(params)?;
    let k = psi.k();
    let m = psi.n_rows();
    let sigma_hat = gram(&psi);

    let mut a_hat = DMatrix::zeros(k, k);
    let mut xp = params.to_vec();
    for i in 0..k {
        let h = SANDWICH_FD_STEP * params[i].abs().max(1.0);
        xp[i] = params[i] + h;
        let up = build(&xp)?.column_sums();
        xp[i] = params[i] - h;
        let down = build(&xp)?.column_sums();
        xp[i] = params[i];
        for r in 0..k {
            a_hat[(r, i)] = (up[r] - down[r]) / (2.0 * h * m as f64);
        }
    }

    let sv = a_hat.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition.is_nan() || condition >= 1e12 {
        return Err(Error::Singular { condition });
    }
    let a_inv = a_hat
        .clone()
        .try_inverse()
        .ok_or(Error::Singular { condition })?;
    let v_hat = &a_inv * &sigma_hat * a_inv.transpose();
    Ok(SandwichDiag {
        a_hat,
        sigma_hat,
        v_hat,
        m,
        condition,
    })
}

/// `m^-1 sum_j psi_j psi_j'`.
pub fn gram(psi: &PsiMatrix) -> DMatrix<f64> {
    let k = psi.k();
    let mut s = DMatrix::zeros(k, k);
    for r in psi.rows() {
        for a in 0..k {
            for b in 0..k {
                s[(a, b)] += r[a] * r[b];
            }
        }
    }
    if psi.n_rows() > 0 {
        s /= psi.n_rows() as f64;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arma::NoiseKind;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn model_spectrum_pg(spec: &ArmaSpec, t: usize) -> Periodogram {
        let n = (t - 1) / 2;
        let ords = (1..=n)
            .map(|j| spec.spectral_density(2.0 * PI * j as f64 / t as f64))
            .collect();
        Periodogram::from_ordinates(ords, t)
    }

    fn simulated_pg(spec: &ArmaSpec, t: usize, seed: u64) -> Periodogram {
        Periodogram::compute(&spec.simulate(t, NoiseKind::StandardNormal, seed).unwrap())
    }

    #[test]
    fn loglik_with_model_spectrum_as_data() {
        let spec = ArmaSpec::arma11(0.4, 0.3, 1.7).unwrap();
        let pg = model_spectrum_pg(&spec, 41);
        let expected: f64 = -pg.freqs().iter().map(|&w| spec.spectral_density(w).ln()).sum::<f64>()
            - pg.len() as f64;
        assert_relative_eq!(whittle_loglik(&pg, &spec), expected, max_relative = 1e-14);
    }

    #[test]
    fn white_noise_loglik() {
        let pg = simulated_pg(&ArmaSpec::ma1(0.3, 1.0).unwrap(), 50, 1);
        let wn = ArmaSpec::white_noise(1.0).unwrap();
        let n = pg.len() as f64;
        let expected = -n * (1.0 / (2.0 * PI)).ln() - 2.0 * PI * pg.ords().iter().sum::<f64>();
        assert_relative_eq!(whittle_loglik(&pg, &wn), expected, max_relative = 1e-13);
    }

    #[test]
    fn loglik_prefers_truth_on_long_series() {
        let pg = simulated_pg(&ArmaSpec::ma1(0.5, 1.0).unwrap(), 2000, 42);
        let at = |theta| whittle_loglik(&pg, &ArmaSpec::ma1(theta, 1.0).unwrap());
        assert!(at(0.5) > at(0.9));
    }

    #[test]
    fn loglik_is_order_invariant() {
        let pg = simulated_pg(&ArmaSpec::ar1(0.5, 1.0).unwrap(), 64, 3);
        let spec = ArmaSpec::ar1(0.3, 1.2).unwrap();
        let mut pairs: Vec<(f64, f64)> = pg.iter().collect();
        pairs.reverse();
        let rev: f64 = pairs
            .iter()
            .map(|&(w, i)| {
                let g = spec.spectral_density(w);
                -g.ln() - i / g
            })
            .sum();
        assert_relative_eq!(whittle_loglik(&pg, &spec), rev, max_relative = 1e-12);
    }

    #[test]
    fn profile_with_no_coefficients() {
        let pg = simulated_pg(&ArmaSpec::white_noise(1.0).unwrap(), 30, 2);
        let n = pg.len() as f64;
        let p = profile_loglik(&pg, Order::new(0, 0), &[]).unwrap();
        let mean_ratio = 2.0 * PI * pg.ords().iter().sum::<f64>() / n;
        let expected = -n * mean_ratio.ln() - n * (1.0 / (2.0 * PI)).ln() - n;
        assert_relative_eq!(p.value, expected, max_relative = 1e-13);
        assert_relative_eq!(p.sigma2, mean_ratio, max_relative = 1e-13);
    }

    #[test]
    fn profile_equals_full_maximized_over_sigma2() {
        let pg = simulated_pg(&ArmaSpec::ma1(0.5, 2.0).unwrap(), 101, 9);
        for i in 0..10 {
            let theta = -0.8 + 0.17 * i as f64;
            let p = profile_loglik(&pg, Order::new(0, 1), &[theta]).unwrap();
            // brute-force maximization over sigma2 on a log grid, then golden refinement
            let f = |s2: f64| whittle_loglik(&pg, &ArmaSpec::ma1(theta, s2).unwrap());
            let (mut lo, mut hi) = (1e-3_f64.ln(), 1e3_f64.ln());
            for _ in 0..200 {
                let a = lo + (hi - lo) / 3.0;
                let b = hi - (hi - lo) / 3.0;
                if f(a.exp()) < f(b.exp()) {
                    lo = a;
                } else {
                    hi = b;
                }
            }
            let best = f(((lo + hi) / 2.0).exp());
            assert!((p.value - best).abs() < 1e-4, "theta {theta}: {} vs {best}", p.value);
        }
    }

    #[test]
    fn profile_surface_is_finite_inside_unit_square() {
        let pg = simulated_pg(&ArmaSpec::arma11(0.7, 0.5, 1.0).unwrap(), 100, 5);
        for i in 0..50 {
            for j in 0..50 {
                let phi = (i as f64 + 0.5) / 50.0;
                let theta = (j as f64 + 0.5) / 50.0;
                let v = profile_loglik(&pg, Order::new(1, 1), &[phi, theta]).unwrap().value;
                assert!(v.is_finite());
            }
        }
    }

    #[test]
    fn psi_vanishes_at_model_spectrum() {
        let spec = ArmaSpec::arma11(0.2, -0.4, 0.8).unwrap();
        let pg = model_spectrum_pg(&spec, 31);
        let psi = psi_full(&pg, &spec);
        assert_eq!(psi.k(), 3);
        assert!(psi.rows().flatten().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn white_noise_psi_reduces_to_scaled_ratio() {
        let pg = simulated_pg(&ArmaSpec::white_noise(2.0).unwrap(), 25, 8);
        let spec = ArmaSpec::white_noise(2.0).unwrap();
        let psi = psi_full(&pg, &spec);
        let g = 2.0 / (2.0 * PI);
        for (row, i) in psi.rows().zip(pg.ords()) {
            assert_relative_eq!(row[0], (i / g - 1.0) / 2.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn profile_psi_of_white_noise_order_is_empty() {
        let pg = simulated_pg(&ArmaSpec::white_noise(1.0).unwrap(), 25, 8);
        let psi = psi_profile(&pg, Order::new(0, 0), &[]).unwrap();
        assert_eq!(psi.k(), 0);
        assert_eq!(psi.n_rows(), pg.len());
    }

    #[test]
    fn profile_psi_matches_finite_difference_gradient() {
        let pg = simulated_pg(&ArmaSpec::ma1(0.5, 1.0).unwrap(), 70, 17);
        let psi = psi_profile(&pg, Order::new(0, 1), &[0.5]).unwrap();
        let h = 1e-6;
        let lg1 = |theta: f64, w: f64| ArmaSpec::ma1(theta, 1.0).unwrap().unit_spectral_density(w).ln();
        let fd: Vec<f64> = pg
            .freqs()
            .iter()
            .map(|&w| (lg1(0.5 + h, w) - lg1(0.5 - h, w)) / (2.0 * h))
            .collect();
        let centre = fd.iter().sum::<f64>() / fd.len() as f64;
        let spec = ArmaSpec::ma1(0.5, 1.0).unwrap();
        for (j, row) in psi.rows().enumerate() {
            let w = pg.freqs()[j];
            let expected = pg.ords()[j] / spec.unit_spectral_density(w) * (fd[j] - centre);
            assert!((row[0] - expected).abs() < 1e-5);
        }
    }

    #[test]
    fn centred_profile_psi_has_the_same_column_sums() {
        let order = Order::new(1, 1);
        let pg = simulated_pg(&ArmaSpec::arma11(0.4, 0.3, 2.0).unwrap(), 120, 9);
        for beta in [[0.1, 0.2], [0.6, -0.3], [-0.5, 0.8]] {
            let raw = psi_profile(&pg, order, &beta).unwrap();
            let centred = psi_profile_centered(&pg, order, &beta).unwrap();
            for (a, b) in raw.column_sums().iter().zip(centred.column_sums()) {
                assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn fit_recovers_ma1_and_ar1() {
        let pg = simulated_pg(&ArmaSpec::ma1(0.5, 1.0).unwrap(), 2000, 21);
        let fit = whittle_fit(&pg, Order::new(0, 1), true, None).unwrap();
        assert!(fit.converged);
        assert!((fit.estimate[0] - 0.5).abs() < 0.05, "{:?}", fit.estimate);

        let pg = simulated_pg(&ArmaSpec::ar1(0.7, 1.0).unwrap(), 2000, 22);
        let fit = whittle_fit(&pg, Order::new(1, 0), true, None).unwrap();
        assert!((fit.estimate[0] - 0.7).abs() < 0.05, "{:?}", fit.estimate);
    }

    #[test]
    fn score_vanishes_at_estimate() {
        let pg = simulated_pg(&ArmaSpec::arma11(0.7, 0.5, 1.0).unwrap(), 200, 23);
        let fit = whittle_fit(&pg, Order::new(1, 1), true, None).unwrap();
        let sums = psi_profile(&pg, Order::new(1, 1), &fit.estimate).unwrap().column_sums();
        assert!(sums.iter().all(|s| s.abs() < 1e-8), "{sums:?}");

        let full = whittle_fit(&pg, Order::new(1, 1), false, None).unwrap();
        let sums = psi_full(&pg, &full.spec().unwrap()).column_sums();
        assert!(sums.iter().all(|s| s.abs() < 1e-8), "{sums:?}");
        // profiling identity
        for (a, b) in fit.estimate.iter().zip(&full.estimate) {
            assert!((a - b).abs() < 1e-4);
        }
        assert!((fit.sigma2 - full.sigma2).abs() < 1e-4 * fit.sigma2);
    }

    #[test]
    fn init_at_truth_agrees_with_multistart() {
        let pg = simulated_pg(&ArmaSpec::arma11(0.6, 0.3, 1.0).unwrap(), 2000, 24);
        let multi = whittle_fit(&pg, Order::new(1, 1), true, None).unwrap();
        let single = whittle_fit(&pg, Order::new(1, 1), true, Some(&[0.6, 0.3])).unwrap();
        assert!(single.converged);
        for (a, b) in single.estimate.iter().zip(&multi.estimate) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn sandwich_of_zero_psi_is_zero() {
        let spec = ArmaSpec::ma1(0.4, 1.0).unwrap();
        let pg = model_spectrum_pg(&spec, 41);
        let d = sandwich(&pg, Order::new(0, 1), &[0.4, 1.0], false, AdjustmentPolicy::None).unwrap();
        assert!(d.sigma_hat.iter().all(|v| v.abs() < 1e-24));
    }

    #[test]
    fn sandwich_is_symmetric_psd() {
        let pg = simulated_pg(&ArmaSpec::arma11(0.5, 0.2, 1.0).unwrap(), 120, 30);
        let fit = whittle_fit(&pg, Order::new(1, 1), true, None).unwrap();
        let d = sandwich(&pg, Order::new(1, 1), &fit.estimate, true, AdjustmentPolicy::MaxOneHalfLog).unwrap();
        assert_eq!(d.m, pg.len() + 1);
        assert_relative_eq!(d.sigma_hat.clone(), d.sigma_hat.transpose(), epsilon = 1e-14);
        let eig = d.sigma_hat.clone().symmetric_eigen().eigenvalues;
        assert!(eig.iter().all(|&e| e >= -1e-12));
        assert!(d.v_hat.iter().all(|v| v.is_finite()));
    }
}
