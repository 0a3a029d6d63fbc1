//! Column layouts of the simulation files.

use std::path::Path;

use serde::Deserialize;
use timealloc_core::exposure::Category;
use timealloc_core::records::{EngelCell, HouseholdInfo, IntervalRecord, PanelRecord};

use crate::error::{CliError, CliResult};
use crate::files::{num, read_csv};

pub const PANEL: [&str; 8] = [
    "household_id",
    "quarter",
    "income_bin",
    "age_bin",
    "region_id",
    "category",
    "duration_seconds",
    "weight",
];

pub const HOUSEHOLDS: [&str; 8] = [
    "household_id",
    "income_bin",
    "age_bin",
    "region_id",
    "exposure",
    "labeled_coverage",
    "category_exposure",
    "chatgpt_ever_used",
];

pub const INTERVALS: [&str; 11] = [
    "household_id",
    "day_of_week",
    "hour_bucket",
    "income_bin",
    "age_bin",
    "is_gpt_window",
    "ever_user",
    "productive_seconds",
    "leisure_seconds",
    "mixed_seconds",
    "adcdn_seconds",
];

pub const ENGEL: [&str; 7] = [
    "cell",
    "quarter",
    "leisure_hours",
    "productive_hours",
    "other_hours",
    "total_hours",
    "log_precip",
];

pub const COUNTERFACTUAL: [&str; 4] = ["household_id", "quarter", "category", "counterfactual_seconds"];

pub fn panel_row(r: &PanelRecord) -> Vec<String> {
    vec![
        r.household_id.to_string(),
        r.quarter.to_string(),
        r.income_bin.to_string(),
        r.age_bin.to_string(),
        r.region_id.to_string(),
        r.category.as_str().to_string(),
        num(r.duration_seconds),
        num(r.weight),
    ]
}

pub fn household_row(h: &HouseholdInfo) -> Vec<String> {
    vec![
        h.household_id.to_string(),
        h.income_bin.to_string(),
        h.age_bin.to_string(),
        h.region_id.to_string(),
        num(h.exposure),
        num(h.labeled_coverage),
        num(h.category_exposure),
        h.chatgpt_ever_used.to_string(),
    ]
}

pub fn interval_row(r: &IntervalRecord) -> Vec<String> {
    let mut v = vec![
        r.household_id.to_string(),
        r.day_of_week.to_string(),
        r.hour_bucket.to_string(),
        r.income_bin.to_string(),
        r.age_bin.to_string(),
        r.is_gpt_window.to_string(),
        r.ever_user.to_string(),
    ];
    v.extend(r.durations.iter().map(|d| num(*d)));
    v
}

pub fn engel_row(c: &EngelCell) -> Vec<String> {
    vec![
        c.cell.to_string(),
        c.quarter.to_string(),
        num(c.hours[0]),
        num(c.hours[1]),
        num(c.hours[2]),
        num(c.total),
        num(c.log_precip),
    ]
}

pub fn counterfactual_row(r: &PanelRecord) -> Vec<String> {
    vec![
        r.household_id.to_string(),
        r.quarter.to_string(),
        r.category.as_str().to_string(),
        num(r.duration_seconds),
    ]
}

fn row_error(path: &Path, i: usize, msg: String) -> CliError {
    CliError::Data(format!("{}: row {}: {msg}", path.display(), i + 2))
}

pub fn read_panel(path: &Path) -> CliResult<Vec<PanelRecord>> {
    let rows: Vec<PanelRecord> = read_csv(path, &PANEL)?;
    for (i, r) in rows.iter().enumerate() {
        if !(r.duration_seconds >= 0.0 && r.duration_seconds.is_finite()) {
            return Err(row_error(path, i, format!("duration_seconds {} must be nonnegative", r.duration_seconds)));
        }
        if !(r.weight > 0.0 && r.weight.is_finite()) {
            return Err(row_error(path, i, format!("weight {} must be positive", r.weight)));
        }
    }
    Ok(rows)
}

pub fn read_households(path: &Path) -> CliResult<Vec<HouseholdInfo>> {
    let rows: Vec<HouseholdInfo> = read_csv(path, &HOUSEHOLDS)?;
    for (i, h) in rows.iter().enumerate() {
        if !(0.0..=1.0).contains(&h.exposure) {
            return Err(row_error(path, i, format!("exposure {} outside [0,1]", h.exposure)));
        }
    }
    Ok(rows)
}

#[derive(Deserialize)]
struct IntervalRow {
    household_id: u64,
    day_of_week: u8,
    hour_bucket: u8,
    income_bin: u8,
    age_bin: u8,
    is_gpt_window: bool,
    ever_user: bool,
    productive_seconds: f64,
    leisure_seconds: f64,
    mixed_seconds: f64,
    adcdn_seconds: f64,
}

pub fn read_intervals(path: &Path) -> CliResult<Vec<IntervalRecord>> {
    let rows: Vec<IntervalRow> = read_csv(path, &INTERVALS)?;
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            let durations = [r.productive_seconds, r.leisure_seconds, r.mixed_seconds, r.adcdn_seconds];
            if r.day_of_week > 6 || r.hour_bucket > 47 {
                return Err(row_error(path, i, "day_of_week must be 0..6 and hour_bucket 0..47".into()));
            }
            if durations.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
                return Err(row_error(path, i, "durations must be nonnegative".into()));
            }
            Ok(IntervalRecord {
                household_id: r.household_id,
                day_of_week: r.day_of_week,
                hour_bucket: r.hour_bucket,
                income_bin: r.income_bin,
                age_bin: r.age_bin,
                is_gpt_window: r.is_gpt_window,
                ever_user: r.ever_user,
                durations,
            })
        })
        .collect()
}

#[derive(Deserialize)]
struct EngelRow {
    cell: u32,
    quarter: i32,
    leisure_hours: f64,
    productive_hours: f64,
    other_hours: f64,
    total_hours: f64,
    log_precip: f64,
}

pub fn read_engel(path: &Path) -> CliResult<Vec<EngelCell>> {
    let rows: Vec<EngelRow> = read_csv(path, &ENGEL)?;
    Ok(rows
        .into_iter()
        .map(|r| EngelCell {
            cell: r.cell,
            quarter: r.quarter,
            hours: [r.leisure_hours, r.productive_hours, r.other_hours],
            total: r.total_hours,
            log_precip: r.log_precip,
        })
        .collect())
}

/// Category names in file order.
pub fn category_names() -> [&'static str; 4] {
    Category::ALL.map(Category::as_str)
}
