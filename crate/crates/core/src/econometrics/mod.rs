//! Panel estimators: fixed-effects OLS and 2SLS, the long difference and
//! event study designs, Engel regressions, the chatbot-window contrast and
//! survey reweighting.

pub mod data;
pub mod engel;
pub mod panel;
pub mod raking;
pub mod regression;
pub mod window;
pub mod within;

pub use data::{Dataset, GroupIndex};
pub use engel::{engel_loglog, engel_shares, EngelClustering, EngelEstimates, EngelOptions};
pub use panel::{
    adoption_first_stage, event_study, long_difference, Estimator, EventCoefficient, EventStudyResult,
    LongDifferenceEstimate, LongDifferenceWindow, Outcome,
};
pub use raking::{raking_weights, weighted_distribution};
pub use regression::{ols, tsls, DofAdjustment, FirstStage, RegressionResult, RegressionSpec, TwoWayComponents};
pub use window::{window_contrast, WindowContrast};
pub use within::{group_means, within_transform, within_transform_multi, ProjectionOptions};
