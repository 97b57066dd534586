//! Raw periodogram ordinates at the Fourier frequencies `2 pi j / T`.

use std::f64::consts::PI;

use crate::arma::TimeSeries;

/// Periodogram ordinates at the Fourier frequencies strictly inside `(0, pi)`.
///
/// For a series of length `T` this keeps `n = floor((T - 1) / 2)` ordinates,
/// `j = 1..=n`. Frequency zero carries no information after mean-centering and
/// the upper half mirrors the lower half.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    freqs: Vec<f64>,
    ords: Vec<f64>,
    series_len: usize,
}

impl Periodogram {
    /// Computes the ordinates of a mean-centered series.
    pub fn compute(series: &TimeSeries) -> Self {
        let t_len = series.len();
        let n = retained_count(t_len);
        let table = TrigTable::new(t_len);
        let centered: Vec<f64> = series.values().iter().map(|z| z - series.mean()).collect();
        let freqs = (1..=n).map(|j| fourier_frequency(j, t_len)).collect();
        let ords = (1..=n).map(|j| table.ordinate(&centered, j)).collect();
        Self {
            freqs,
            ords,
            series_len: t_len,
        }
    }

    /// Builds a periodogram from precomputed ordinates at `omega_j = 2 pi j / T`.
    ///
    /// Used to plug a model spectrum in as data and for tests.
    pub fn from_ordinates(ords: Vec<f64>, series_len: usize) -> Self {
        let freqs = (1..=ords.len()).map(|j| fourier_frequency(j, series_len)).collect();
        Self {
            freqs,
            ords,
            series_len,
        }
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn ords(&self) -> &[f64] {
        &self.ords
    }

    /// Length `T` of the source series.
    pub fn series_len(&self) -> usize {
        self.series_len
    }

    /// Number of retained ordinates `n`.
    pub fn len(&self) -> usize {
        self.ords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ords.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.freqs.iter().copied().zip(self.ords.iter().copied())
    }
}

/// Ordinates at every nonzero Fourier frequency, `j = 1..T-1`.
pub fn full_ordinates(series: &TimeSeries) -> Vec<f64> {
    let t_len = series.len();
    let table = TrigTable::new(t_len);
    let centered: Vec<f64> = series.values().iter().map(|z| z - series.mean()).collect();
    (1..t_len).map(|j| table.ordinate(&centered, j)).collect()
}

/// `floor((T - 1) / 2)`.
pub fn retained_count(series_len: usize) -> usize {
    series_len.saturating_sub(1) / 2
}

pub fn fourier_frequency(j: usize, series_len: usize) -> f64 {
    2.0 * PI * j as f64 / series_len as f64
}

/// `sin` and `cos` of `2 pi k / T` for `k = 0..T`; `omega_j t` reduces to index `j t mod T`.
struct TrigTable {
    sin: Vec<f64>,
    cos: Vec<f64>,
}

impl TrigTable {
    fn new(t_len: usize) -> Self {
        let (sin, cos) = (0..t_len)
            .map(|k| (2.0 * PI * k as f64 / t_len as f64).sin_cos())
            .unzip();
        Self { sin, cos }
    }

    fn ordinate(&self, centered: &[f64], j: usize) -> f64 {
        let t_len = centered.len();
        let (mut s, mut c) = (0.0, 0.0);
        let mut idx = 0usize;
        for z in centered {
            // t runs 1..=T
            idx = (idx + j) % t_len;
            s += z * self.sin[idx];
            c += z * self.cos[idx];
        }
        (s * s + c * c) / (2.0 * PI * t_len as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arma::{ArmaSpec, NoiseKind};

    fn series(v: Vec<f64>) -> TimeSeries {
        TimeSeries::new(v).unwrap()
    }

    /// Direct evaluation of the sine/cosine sums, no lookup table.
    fn naive_ordinate(z: &[f64], j: usize) -> f64 {
        let t_len = z.len();
        let mean = z.iter().sum::<f64>() / t_len as f64;
        let w = fourier_frequency(j, t_len);
        let (mut s, mut c) = (0.0, 0.0);
        for (i, v) in z.iter().enumerate() {
            let t = (i + 1) as f64;
            s += (v - mean) * (w * t).sin();
            c += (v - mean) * (w * t).cos();
        }
        (s * s + c * c) / (2.0 * PI * t_len as f64)
    }

    #[test]
    fn constant_series_has_zero_ordinates() {
        for t in [4, 5, 17] {
            let pg = Periodogram::compute(&series(vec![3.25; t]));
            assert_eq!(pg.len(), retained_count(t));
            assert!(pg.ords().iter().all(|&o| o.abs() < 1e-28));
        }
    }

    #[test]
    fn alternating_series_of_length_four() {
        let pg = Periodogram::compute(&series(vec![1.0, -1.0, 1.0, -1.0]));
        assert_eq!(pg.len(), 1);
        assert!((pg.freqs()[0] - PI / 2.0).abs() < 1e-15);
        assert!(pg.ords()[0].abs() < 1e-28);
    }

    #[test]
    fn single_tone_concentrates_power() {
        let t = 32;
        let z: Vec<f64> = (1..=t)
            .map(|i| (2.0 * PI * 3.0 * i as f64 / t as f64).cos())
            .collect();
        let pg = Periodogram::compute(&series(z));
        let total: f64 = pg.ords().iter().sum();
        assert!(pg.ords()[2] / total > 0.99);
    }

    #[test]
    fn table_matches_direct_sums() {
        let spec = ArmaSpec::arma11(0.6, 0.3, 1.0).unwrap();
        let z = spec.simulate(37, NoiseKind::StandardNormal, 4).unwrap();
        let pg = Periodogram::compute(&z);
        for (j, o) in pg.ords().iter().enumerate() {
            let direct = naive_ordinate(z.values(), j + 1);
            assert!((o - direct).abs() <= 1e-12 * direct.max(1.0));
        }
    }

    #[test]
    fn parseval_identity() {
        let spec = ArmaSpec::ma1(0.4, 2.0).unwrap();
        for t in [16, 33, 100] {
            let z = spec.simulate(t, NoiseKind::StandardNormal, t as u64).unwrap();
            let lhs: f64 = full_ordinates(&z).iter().sum();
            let rhs =
                z.values().iter().map(|v| (v - z.mean()).powi(2)).sum::<f64>() / (2.0 * PI);
            assert!(((lhs - rhs) / rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn ordinate_counts() {
        assert_eq!(retained_count(4), 1);
        assert_eq!(retained_count(5), 2);
        assert_eq!(retained_count(100), 49);
        assert_eq!(retained_count(70), 34);
    }
}
