//! Simulation and exact distribution toolkit for the Cauchy principal value
//! of Brownian local time,
//!
//! ```text
//!     Y(t) = p.v. INT_0^t ds / W(s)
//!          = lim_{eps -> 0} INT_0^t 1{|W(s)| >= eps} ds / W(s),
//! ```
//!
//! together with the statistical machinery needed to check its closed-form
//! laws and pathwise increment asymptotics against Monte Carlo ensembles.
//!
//! Module map:
//!
//! * [`paths`] - Brownian grid paths, the last-zero decomposition into bridge
//!   and meander, zero location, and the zero-skeleton record stream.
//! * [`pv`] - principal-value estimators (cutoff Riemann sum and the
//!   local-time route) plus the binned local-time field.
//! * [`exactdist`] - closed-form densities, CDFs and tail bounds used as
//!   references by the verification suites.
//! * [`increments`] - sliding-window increment statistics, their growth
//!   normalizers, and the Strassen-class energy check.
//! * [`mc`] - deterministic seeded ensembles, trend scans, and the
//!   statistical test kit (Kolmogorov-Smirnov, Wilson bounds, shape fits,
//!   permutation independence).
//!
//! All numerical code is generic over the scalar type through [`Real`];
//! `f64` aliases for the main types are exported at the crate root. `f32`
//! works for the simulation paths, but the series evaluations in
//! [`exactdist`] and the acceptance tolerances assume `f64`.

pub mod error;
pub mod exactdist;
pub mod increments;
pub mod mc;
pub mod num;
pub mod paths;
pub mod pv;

pub use error::{Error, Result};
pub use num::Real;

/// `f64` sample path.
pub type SamplePath = paths::SamplePath<f64>;
/// `f64` last-zero decomposition.
pub type Decomposition = paths::Decomposition<f64>;
/// `f64` zero-skeleton record.
pub type EtaRecord = paths::EtaRecord<f64>;
/// `f64` principal-value estimate.
pub type PvResult = pv::PvResult<f64>;
/// `f64` binned local-time field.
pub type LocalTimeField = pv::LocalTimeField<f64>;
/// `f64` series evaluation control.
pub type PvSeriesSpec = exactdist::PvSeriesSpec<f64>;
/// `f64` window rule.
pub type WindowSpec = increments::WindowSpec<f64>;
/// `f64` increment statistic row.
pub type IncrementStat = increments::IncrementStat<f64>;
/// `f64` ensemble report.
pub type EnsembleReport = mc::EnsembleReport<f64>;
