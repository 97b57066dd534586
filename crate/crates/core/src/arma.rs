//! ARMA(p,q) models: parameter validation, spectral densities, log-spectral
//! gradients and simulation.
//!
//! Sign convention: both operators are written with minus signs,
//! `phi(B) = 1 - phi_1 B - ... - phi_p B^p` and
//! `theta(B) = 1 - theta_1 B - ... - theta_q B^q`. Coefficients taken from
//! tools that write the MA operator with a plus sign must be negated.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Companion eigenvalue moduli must stay below `1 - ROOT_MARGIN`.
pub const ROOT_MARGIN: f64 = 1e-8;

/// Step used for central finite differences of `ln g` in the general-order case.
pub const GRADIENT_FD_STEP: f64 = 1e-6;

const BURN_IN_BASE: usize = 500;
const BURN_IN_PER_LAG: usize = 10;

/// Model order `(p, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Order {
    pub p: usize,
    pub q: usize,
}

impl Order {
    pub const fn new(p: usize, q: usize) -> Self {
        Self { p, q }
    }

    /// Number of ARMA coefficients, the profile parameter dimension.
    pub fn n_coefficients(&self) -> usize {
        self.p + self.q
    }

    /// Dimension of the full parameter `(phi, theta, sigma2)`.
    pub fn n_full(&self) -> usize {
        self.p + self.q + 1
    }
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.p, self.q)
    }
}

/// A stationary, invertible ARMA(p,q) model with innovation variance `sigma2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaSpec {
    ar: Vec<f64>,
    ma: Vec<f64>,
    sigma2: f64,
}

impl ArmaSpec {
    pub fn new(ar: Vec<f64>, ma: Vec<f64>, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::domain(format!(
                "innovation variance must be positive, got {sigma2}"
            )));
        }
        if ar.iter().chain(ma.iter()).any(|c| !c.is_finite()) {
            return Err(Error::domain("non-finite ARMA coefficient"));
        }
        let ar_excess = root_excess(&ar);
        if ar_excess > 0.0 {
            return Err(Error::domain(format!("AR polynomial {ar:?} is not stationary")));
        }
        let ma_excess = root_excess(&ma);
        if ma_excess > 0.0 {
            return Err(Error::domain(format!("MA polynomial {ma:?} is not invertible")));
        }
        Ok(Self { ar, ma, sigma2 })
    }

    pub fn white_noise(sigma2: f64) -> Result<Self> {
        Self::new(Vec::new(), Vec::new(), sigma2)
    }

    pub fn ar1(phi: f64, sigma2: f64) -> Result<Self> {
        Self::new(vec![phi], Vec::new(), sigma2)
    }

    pub fn ma1(theta: f64, sigma2: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![theta], sigma2)
    }

    pub fn arma11(phi: f64, theta: f64, sigma2: f64) -> Result<Self> {
        Self::new(vec![phi], vec![theta], sigma2)
    }

    /// Builds a spec from the coefficient vector `(phi_1..phi_p, theta_1..theta_q)`.
    pub fn from_coefficients(order: Order, coefficients: &[f64], sigma2: f64) -> Result<Self> {
        if coefficients.len() != order.n_coefficients() {
            return Err(Error::input(format!(
                "order {order} needs {} coefficients, got {}",
                order.n_coefficients(),
                coefficients.len()
            )));
        }
        let (ar, ma) = coefficients.split_at(order.p);
        Self::new(ar.to_vec(), ma.to_vec(), sigma2)
    }

    /// Builds a spec from the full parameter `(phi.., theta.., sigma2)`.
    pub fn from_full(order: Order, beta: &[f64]) -> Result<Self> {
        if beta.len() != order.n_full() {
            return Err(Error::input(format!(
                "order {order} needs {} parameters, got {}",
                order.n_full(),
                beta.len()
            )));
        }
        let (coefficients, sigma2) = beta.split_at(order.n_coefficients());
        Self::from_coefficients(order, coefficients, sigma2[0])
    }

    pub fn order(&self) -> Order {
        Order::new(self.ar.len(), self.ma.len())
    }

    pub fn ar(&self) -> &[f64] {
        &self.ar
    }

    pub fn ma(&self) -> &[f64] {
        &self.ma
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.ar.iter().chain(self.ma.iter()).copied().collect()
    }

    pub fn full_parameter(&self) -> Vec<f64> {
        let mut beta = self.coefficients();
        beta.push(self.sigma2);
        beta
    }

    pub fn with_sigma2(&self, sigma2: f64) -> Result<Self> {
        Self::new(self.ar.clone(), self.ma.clone(), sigma2)
    }

    /// Spectral density `g(omega) = sigma2/(2 pi) |theta(e^{-i omega})|^2 / |phi(e^{-i omega})|^2`.
    pub fn spectral_density(&self, omega: f64) -> f64 {
        self.sigma2 * unit_spectral_density(&self.ar, &self.ma, omega)
    }

    /// Spectral density with the innovation variance dropped (`g / sigma2`).
    pub fn unit_spectral_density(&self, omega: f64) -> f64 {
        unit_spectral_density(&self.ar, &self.ma, omega)
    }

    /// Gradient of `ln g(omega)`.
    ///
    /// With `profile = false` the gradient is with respect to
    /// `(phi.., theta.., sigma2)`; with `profile = true` it is the gradient of
    /// `ln(g / sigma2)` with respect to the coefficients only.
    ///
    /// Orders with `p, q <= 1` use closed forms, anything larger uses central
    /// differences with step [`GRADIENT_FD_STEP`].
    pub fn log_spectral_gradient(&self, omega: f64, profile: bool) -> Vec<f64> {
        let mut grad = if self.ar.len() <= 1 && self.ma.len() <= 1 {
            closed_form_gradient(&self.ar, &self.ma, omega)
        } else {
            fd_gradient(&self.ar, &self.ma, omega)
        };
        if !profile {
            grad.push(1.0 / self.sigma2);
        }
        grad
    }

    /// Stationary variance of the process, from the MA(infinity) weights.
    pub fn process_variance(&self) -> f64 {
        let weights = self.psi_weights(4096);
        self.sigma2 * weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// First `len` coefficients of the MA(infinity) representation.
    pub fn psi_weights(&self, len: usize) -> Vec<f64> {
        let mut w = vec![0.0; len];
        if len == 0 {
            return w;
        }
        w[0] = 1.0;
        for s in 1..len {
            let mut v = if s <= self.ma.len() { -self.ma[s - 1] } else { 0.0 };
            for (i, phi) in self.ar.iter().enumerate() {
                if s > i {
                    v += phi * w[s - i - 1];
                }
            }
            w[s] = v;
        }
        w
    }

    /// Draws a realization of length `len` using exact-mean noise centering.
    pub fn simulate(&self, len: usize, noise: NoiseKind, seed: u64) -> Result<TimeSeries> {
        self.simulate_with(len, noise, NoiseCentering::Exact, seed)
    }

    /// Draws a realization of `phi(B) Z_t = theta(B) a_t` with `a_t = sigma * e_t`.
    ///
    /// The recursion starts from zeros and discards `500 + 10 (p + q)` presample
    /// values. `e_t` is standard normal or `chi2_5 - 5`, the latter built as a
    /// sum of five squared standard normals.
    pub fn simulate_with(
        &self,
        len: usize,
        noise: NoiseKind,
        centering: NoiseCentering,
        seed: u64,
    ) -> Result<TimeSeries> {
        if len < TimeSeries::MIN_LEN {
            return Err(Error::input(format!(
                "series length must be at least {}, got {len}",
                TimeSeries::MIN_LEN
            )));
        }
        let (p, q) = (self.ar.len(), self.ma.len());
        let burn = BURN_IN_BASE + BURN_IN_PER_LAG * (p + q);
        let total = burn + len;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut innovations: Vec<f64> = (0..total).map(|_| noise.draw(&mut rng)).collect();
        if centering == NoiseCentering::Empirical {
            let mean = innovations.iter().sum::<f64>() / total as f64;
            innovations.iter_mut().for_each(|e| *e -= mean);
        }
        let sigma = self.sigma2.sqrt();
        innovations.iter_mut().for_each(|e| *e *= sigma);

        let mut z = vec![0.0; total];
        for t in 0..total {
            let mut v = innovations[t];
            for (i, phi) in self.ar.iter().enumerate() {
                if t > i {
                    v += phi * z[t - i - 1];
                }
            }
            for (j, theta) in self.ma.iter().enumerate() {
                if t > j {
                    v -= theta * innovations[t - j - 1];
                }
            }
            z[t] = v;
        }
        TimeSeries::new(z.split_off(burn))
    }
}

/// Innovation distribution for simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// `N(0, 1)`.
    #[serde(alias = "normal")]
    StandardNormal,
    /// `chi2_5 - 5`: mean zero, variance 10, right-skewed.
    #[serde(alias = "chisq5")]
    CenteredChiSq5,
}

impl NoiseKind {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseKind::StandardNormal => rng.sample(StandardNormal),
            NoiseKind::CenteredChiSq5 => {
                let chi2: f64 = (0..5)
                    .map(|_| {
                        let z: f64 = rng.sample(StandardNormal);
                        z * z
                    })
                    .sum();
                chi2 - 5.0
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            NoiseKind::StandardNormal => "normal",
            NoiseKind::CenteredChiSq5 => "chisq5",
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" | "standard-normal" => Ok(NoiseKind::StandardNormal),
            "chisq5" | "centered-chi-sq5" => Ok(NoiseKind::CenteredChiSq5),
            other => Err(Error::input(format!("unknown noise kind `{other}`"))),
        }
    }
}

/// How simulated innovations are made mean-zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseCentering {
    /// Subtract the distribution mean (already built into [`NoiseKind`]).
    #[default]
    Exact,
    /// Additionally subtract the sample mean of the drawn innovations.
    Empirical,
}

/// An observed real-valued series with its sample mean.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    mean: f64,
}

impl TimeSeries {
    pub const MIN_LEN: usize = 4;

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < Self::MIN_LEN {
            return Err(Error::input(format!(
                "a series needs at least {} observations, got {}",
                Self::MIN_LEN,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("observation {} is not finite", i + 1)));
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok(Self { values, mean })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sample_variance(&self) -> f64 {
        let n = self.values.len() as f64;
        self.values.iter().map(|v| (v - self.mean).powi(2)).sum::<f64>() / (n - 1.0)
    }

    /// Sample autocorrelation at `lag`.
    pub fn autocorrelation(&self, lag: usize) -> f64 {
        let c = |h: usize| {
            self.values
                .iter()
                .zip(self.values.iter().skip(h))
                .map(|(a, b)| (a - self.mean) * (b - self.mean))
                .sum::<f64>()
        };
        c(lag) / c(0)
    }
}

/// `|1 - sum c_j e^{-i omega j}|^2`.
fn poly_power(coeffs: &[f64], omega: f64) -> f64 {
    let (mut re, mut im) = (1.0, 0.0);
    for (j, c) in coeffs.iter().enumerate() {
        let arg = omega * (j + 1) as f64;
        re -= c * arg.cos();
        im += c * arg.sin();
    }
    re * re + im * im
}

fn unit_spectral_density(ar: &[f64], ma: &[f64], omega: f64) -> f64 {
    poly_power(ma, omega) / poly_power(ar, omega) / (2.0 * PI)
}

fn closed_form_gradient(ar: &[f64], ma: &[f64], omega: f64) -> Vec<f64> {
    let c = omega.cos();
    let mut grad = Vec::with_capacity(2);
    if let Some(&phi) = ar.first() {
        grad.push((2.0 * c - 2.0 * phi) / (1.0 - 2.0 * phi * c + phi * phi));
    }
    if let Some(&theta) = ma.first() {
        grad.push((2.0 * theta - 2.0 * c) / (1.0 - 2.0 * theta * c + theta * theta));
    }
    grad
}

fn fd_gradient(ar: &[f64], ma: &[f64], omega: f64) -> Vec<f64> {
    let h = GRADIENT_FD_STEP;
    let mut ar = ar.to_vec();
    let mut ma = ma.to_vec();
    let mut grad = Vec::with_capacity(ar.len() + ma.len());
    for i in 0..ar.len() {
        let x = ar[i];
        ar[i] = x + h;
        let up = -poly_power(&ar, omega).ln();
        ar[i] = x - h;
        let down = -poly_power(&ar, omega).ln();
        ar[i] = x;
        grad.push((up - down) / (2.0 * h));
    }
    for j in 0..ma.len() {
        let x = ma[j];
        ma[j] = x + h;
        let up = poly_power(&ma, omega).ln();
        ma[j] = x - h;
        let down = poly_power(&ma, omega).ln();
        ma[j] = x;
        grad.push((up - down) / (2.0 * h));
    }
    grad
}

/// Largest companion-matrix eigenvalue modulus of `1 - c_1 B - ... - c_m B^m`.
pub fn max_root_modulus(coeffs: &[f64]) -> f64 {
    match coeffs.len() {
        0 => 0.0,
        1 => coeffs[0].abs(),
        m => {
            let mut companion = DMatrix::<f64>::zeros(m, m);
            for (j, c) in coeffs.iter().enumerate() {
                companion[(0, j)] = *c;
            }
            for i in 1..m {
                companion[(i, i - 1)] = 1.0;
            }
            companion
                .complex_eigenvalues()
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max)
        }
    }
}

/// Amount by which the companion eigenvalues exceed the admissible modulus
/// (`<= 0` means the polynomial has all roots strictly outside the unit circle).
pub fn root_excess(coeffs: &[f64]) -> f64 {
    max_root_modulus(coeffs) - (1.0 - ROOT_MARGIN)
}

/// Combined stationarity/invertibility violation of a coefficient vector.
pub fn region_violation(order: Order, coefficients: &[f64]) -> f64 {
    let (ar, ma) = coefficients.split_at(order.p);
    root_excess(ar).max(root_excess(ma)).max(0.0)
}
