//! Adjusted empirical likelihood inference for stationary ARMA processes.
//!
//! The series is reduced to periodogram ordinates, Whittle estimating
//! functions are formed at each Fourier frequency, and (adjusted) empirical
//! likelihood ratio statistics are built from them. On top of that sit
//! confidence regions and a Monte Carlo coverage harness.
//!
//! ```
//! use ael_core::{ArmaSpec, AdjustmentPolicy, NoiseKind, Order, Periodogram};
//!
//! let spec = ArmaSpec::ma1(0.5, 1.0).unwrap();
//! let series = spec.simulate(200, NoiseKind::StandardNormal, 1).unwrap();
//! let pg = Periodogram::compute(&series);
//! let sol = ael_core::el_stat(&pg, Order::new(0, 1), &[0.5], true, AdjustmentPolicy::default()).unwrap();
//! assert!(sol.stat >= 0.0);
//! ```

pub mod arma;
pub mod bartlett;
pub mod confidence;
pub mod contour;
pub mod coverage;
pub mod el;
pub mod error;
pub mod optim;
pub mod par;
pub mod periodogram;
pub mod whittle;

pub use arma::{ArmaSpec, NoiseCentering, NoiseKind, Order, TimeSeries};
pub use bartlett::{chi2_quantile, corrected_threshold, estimate_bartlett, BartlettFactor};
pub use confidence::{extract_contour, interval_1d, scan_region, Axis, Evaluation, Interval, Method, RegionGrid};
pub use contour::Polyline;
pub use coverage::{paired_summary, run_coverage, CoverageReport, ExperimentPlan};
pub use el::{adjust, el_stat, solve_dual, AdjustmentPolicy, ElSolution};
pub use error::{Error, Result};
pub use par::Execution;
pub use periodogram::Periodogram;
pub use whittle::{psi_full, psi_profile, psi_profile_centered, sandwich, whittle_fit, whittle_loglik, ProfileForm, PsiMatrix, SandwichDiag, WhittleFit};
