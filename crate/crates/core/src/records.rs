//! Row types shared by the generators, estimators and file formats.

use serde::{Deserialize, Serialize};

use crate::exposure::Category;

/// Browsing seconds of one household in one quarter and category.
///
/// `quarter` is the offset from the release quarter (0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRecord {
    pub household_id: u64,
    pub quarter: i32,
    pub income_bin: u8,
    pub age_bin: u8,
    pub region_id: u32,
    pub category: Category,
    pub duration_seconds: f64,
    pub weight: f64,
}

impl PanelRecord {
    /// Composite demographic cell key.
    pub fn cell(&self) -> (u8, u8, u32) {
        (self.income_bin, self.age_bin, self.region_id)
    }
}

/// One 30-minute browsing interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub household_id: u64,
    pub day_of_week: u8,
    pub hour_bucket: u8,
    pub income_bin: u8,
    pub age_bin: u8,
    /// The interval contains a chatbot visit.
    pub is_gpt_window: bool,
    /// The household uses the chatbot at some point.
    pub ever_user: bool,
    /// Seconds per category, indexed as [`Category::ALL`].
    pub durations: [f64; 4],
}

/// Hours by activity for one demographic cell and quarter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngelCell {
    pub cell: u32,
    pub quarter: i32,
    /// Hours indexed as [`crate::model::Activity::ALL`].
    pub hours: [f64; 3],
    pub total: f64,
    pub log_precip: f64,
}

/// Household attributes carried alongside a browsing panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdInfo {
    pub household_id: u64,
    pub income_bin: u8,
    pub age_bin: u8,
    pub region_id: u32,
    /// Pre-release browsing share on highly exposed websites.
    pub exposure: f64,
    /// Pre-release browsing share on any labeled website.
    pub labeled_coverage: f64,
    /// Exposure predicted from the household's content-category mix.
    pub category_exposure: f64,
    pub chatgpt_ever_used: bool,
}
