//! Synthetic browsing panels with known ground truth.
//!
//! Each generator draws from its own ChaCha stream of the configured seed,
//! so the outputs are reproducible and independent of call order.

pub mod config;
pub mod engel;
pub mod intervals;
pub mod long_difference;

pub use config::{CategoryEffects, DemographicCells, DgpConfig, EngelEtas, IntervalConfig, NoiseSd};
pub use engel::{generate_engel_panel, EngelTruth};
pub use intervals::{baseline_mix, generate_intervals, window_mix};
pub use long_difference::{generate_long_difference, HouseholdTruth, LongDifferenceTruth, OutcomeTruth};
