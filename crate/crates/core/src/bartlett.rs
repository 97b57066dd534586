//! Bartlett-type scaling of the chi-square threshold.
//!
//! The estimated factor is the scalar smooth-function-model estimate of
//! DiCiccio, Hall and Romano (1991),
//! `b = mu4 / (2 mu2^2) - mu3^2 / (3 mu2^3)`, computed from the centered
//! estimating functions. Model-specific theoretical constants are not derived
//! here; they can be supplied by the caller.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::whittle::PsiMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BartlettSource {
    Estimated,
    Supplied,
}

/// Correction constant `b` for a sample of `n` estimating functions; the null
/// hypothesis is rejected when `W > chi2_{k,1-alpha} (1 + b/n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BartlettFactor {
    b: f64,
    n: usize,
    source: BartlettSource,
}

impl BartlettFactor {
    pub fn new(b: f64, n: usize, source: BartlettSource) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("Bartlett factor needs n >= 1"));
        }
        let scale = 1.0 + b / n as f64;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain(format!(
                "Bartlett scale 1 + b/n must be positive (b = {b}, n = {n})"
            )));
        }
        Ok(Self { b, n, source })
    }

    pub fn supplied(b: f64, n: usize) -> Result<Self> {
        Self::new(b, n, BartlettSource::Supplied)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn source(&self) -> BartlettSource {
        self.source
    }

    /// `1 + b/n`.
    pub fn scale(&self) -> f64 {
        1.0 + self.b / self.n as f64
    }

    pub fn threshold(&self, k: usize, alpha: f64) -> Result<f64> {
        Ok(chi2_quantile(k, 1.0 - alpha)? * self.scale())
    }
}

/// Estimated Bartlett factor from scalar, unadjusted estimating functions.
pub fn estimate_bartlett(psi: &PsiMatrix) -> Result<BartlettFactor> {
    if psi.k() != 1 {
        return Err(Error::input(format!(
            "estimated Bartlett correction needs a scalar parameter, got k = {}",
            psi.k()
        )));
    }
    if psi.is_adjusted() {
        return Err(Error::Usage(
            "estimate the Bartlett factor from unadjusted estimating functions".into(),
        ));
    }
    let n = psi.n_rows();
    if n == 0 {
        return Err(Error::input("no estimating function rows"));
    }
    let mean = psi.rows().map(|r| r[0]).sum::<f64>() / n as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for r in psi.rows() {
        let d = r[0] - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let nf = n as f64;
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    if m2 < 1e-12 {
        return Err(Error::Degenerate(format!(
            "estimating functions have (near) zero variance {m2:e}"
        )));
    }
    let b = m4 / (2.0 * m2 * m2) - m3 * m3 / (3.0 * m2 * m2 * m2);
    BartlettFactor::new(b, n, BartlettSource::Estimated)
}

/// `chi2_{k, 1-alpha} (1 + b/n)`; `b = 0` gives the plain quantile.
pub fn corrected_threshold(factor: &BartlettFactor, k: usize, alpha: f64, n: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::input(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let f = BartlettFactor::new(factor.b, n, factor.source)?;
    f.threshold(k, alpha)
}

/// Quantile of the chi-square distribution with `k` degrees of freedom.
pub fn chi2_quantile(k: usize, prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::input(format!("probability must lie in (0, 1), got {prob}")));
    }
    if k == 0 {
        return Err(Error::input("chi-square needs at least one degree of freedom"));
    }
    if k == 2 {
        return Ok(-2.0 * (1.0 - prob).ln());
    }
    let dist = ChiSquared::new(k as f64).map_err(|e| Error::input(e.to_string()))?;
    Ok(dist.inverse_cdf(prob))
}

pub fn chi2_cdf(k: usize, x: f64) -> f64 {
    ChiSquared::new(k as f64)
        .map(|d| d.cdf(x))
        .unwrap_or(f64::NAN)
}
