//! Exposure and weather utilities over user-supplied CSV files.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use timealloc_core::exposure::{
    aggregate_weather, household_exposure, purpose_shares, BrowseShare, Category, Crosswalk, DomainDuration,
    LabelSet, WeatherGridRecord, WebsiteLabel,
};

use crate::args::{ExposureArgs, Format, WeatherArgs};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::files::{ensure_dir, num, read_csv, write_csv, write_json};

pub const LABELS: [&str; 3] = ["domain", "purpose", "exposure_count"];
pub const SHARES: [&str; 3] = ["household", "domain", "share"];
pub const DURATIONS: [&str; 3] = ["household", "domain", "duration_seconds"];
pub const WEATHER: [&str; 4] = ["grid_cell", "county_fips", "date", "prec"];
pub const CROSSWALK: [&str; 2] = ["county_fips", "region_id"];

pub const EXPOSURE_OUT: [&str; 3] = ["household_id", "exposure", "labeled_coverage"];
pub const PURPOSE_OUT: [&str; 7] = [
    "household_id",
    "productive",
    "leisure",
    "mixed",
    "adcdn",
    "unlabeled",
    "total_seconds",
];
pub const WEATHER_OUT: [&str; 4] = ["region_id", "year", "month", "mean_daily_precip"];

fn row_error(path: &Path, i: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: row {}: {msg}", path.display(), i + 2))
}

#[derive(Deserialize)]
struct LabelRow {
    domain: String,
    purpose: String,
    exposure_count: u8,
}

pub fn read_labels(path: &Path) -> CliResult<LabelSet> {
    let rows: Vec<LabelRow> = read_csv(path, &LABELS)?;
    let labels = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let purpose: Category = r.purpose.parse().map_err(|e| row_error(path, i, e))?;
            WebsiteLabel::new(&r.domain, purpose, r.exposure_count).map_err(|e| row_error(path, i, e))
        })
        .collect::<CliResult<Vec<_>>>()?;
    LabelSet::new(labels).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

#[derive(Deserialize)]
struct ShareRow {
    household: u64,
    domain: String,
    share: f64,
}

pub fn read_shares(path: &Path) -> CliResult<Vec<BrowseShare>> {
    let rows: Vec<ShareRow> = read_csv(path, &SHARES)?;
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            if !(0.0..=1.0).contains(&r.share) {
                return Err(row_error(path, i, format!("share {} outside [0,1]", r.share)));
            }
            Ok(BrowseShare {
                household_id: r.household,
                domain: r.domain,
                share: r.share,
            })
        })
        .collect()
}

#[derive(Deserialize)]
struct DurationRow {
    household: u64,
    domain: String,
    duration_seconds: f64,
}

pub fn read_durations(path: &Path) -> CliResult<Vec<DomainDuration>> {
    let rows: Vec<DurationRow> = read_csv(path, &DURATIONS)?;
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            if !(r.duration_seconds >= 0.0 && r.duration_seconds.is_finite()) {
                return Err(row_error(path, i, format!("duration_seconds {} must be nonnegative", r.duration_seconds)));
            }
            Ok(DomainDuration {
                household_id: r.household,
                domain: r.domain,
                duration_seconds: r.duration_seconds,
            })
        })
        .collect()
}

#[derive(Deserialize)]
struct WeatherRow {
    grid_cell: String,
    county_fips: String,
    date: String,
    prec: f64,
}

pub fn read_weather(path: &Path) -> CliResult<Vec<WeatherGridRecord>> {
    let rows: Vec<WeatherRow> = read_csv(path, &WEATHER)?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let date = NaiveDate::parse_from_str(r.date.trim(), "%Y-%m-%d")
                .map_err(|e| row_error(path, i, format!("date '{}': {e}", r.date)))?;
            WeatherGridRecord::new(r.grid_cell.trim(), r.county_fips.trim(), date, r.prec)
                .map_err(|e| row_error(path, i, e))
        })
        .collect()
}

#[derive(Deserialize)]
struct CrosswalkRow {
    county_fips: String,
    region_id: String,
}

pub fn read_crosswalk(path: &Path) -> CliResult<Crosswalk> {
    let rows: Vec<CrosswalkRow> = read_csv(path, &CROSSWALK)?;
    Crosswalk::new(rows.into_iter().map(|r| (r.county_fips.trim().to_string(), r.region_id.trim().to_string())))
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct ExposureDocument<'a> {
    households: &'a [timealloc_core::exposure::HouseholdExposure],
    #[serde(skip_serializing_if = "Option::is_none")]
    purpose_shares: Option<&'a timealloc_core::exposure::PurposeShareReport>,
}

pub fn cmd_exposure(args: &ExposureArgs) -> CliResult<()> {
    RunConfig::load(args.config.config.as_deref())?;
    let labels = read_labels(&args.labels)?;
    let shares = read_shares(&args.shares)?;
    let durations = args.durations.as_deref().map(read_durations).transpose()?;
    if shares.is_empty() {
        crate::warn(&format!("{} has no rows; writing an empty table", args.shares.display()));
    }
    let exposure = household_exposure(&shares, &labels)?;
    let purpose = durations.as_deref().map(|d| purpose_shares(d, &labels)).transpose()?;
    if let Some(p) = &purpose {
        if !p.zero_duration_households.is_empty() {
            crate::warn(&format!(
                "{} households with zero total duration have no purpose shares",
                p.zero_duration_households.len()
            ));
        }
    }

    ensure_dir(&args.out)?;
    match args.format {
        Format::Csv => {
            write_csv(
                &args.out.join("household_exposure.csv"),
                &EXPOSURE_OUT,
                exposure
                    .iter()
                    .map(|h| vec![h.household_id.to_string(), num(h.exposure), num(h.labeled_coverage)]),
            )?;
            if let Some(p) = &purpose {
                write_csv(
                    &args.out.join("purpose_shares.csv"),
                    &PURPOSE_OUT,
                    p.households.iter().map(|h| {
                        let mut row = vec![h.household_id.to_string()];
                        row.extend(h.shares.iter().map(|s| num(*s)));
                        row.push(num(h.unlabeled));
                        row.push(num(h.total_seconds));
                        row
                    }),
                )?;
            }
        }
        Format::Json => write_json(
            &args.out.join("household_exposure.json"),
            &ExposureDocument {
                households: &exposure,
                purpose_shares: purpose.as_ref(),
            },
        )?,
    }
    println!("households: {}", exposure.len());
    Ok(())
}

pub fn cmd_weather(args: &WeatherArgs) -> CliResult<()> {
    RunConfig::load(args.config.config.as_deref())?;
    let grid = read_weather(&args.weather)?;
    let crosswalk = read_crosswalk(&args.crosswalk)?;
    if grid.is_empty() {
        crate::warn(&format!("{} has no rows; writing an empty table", args.weather.display()));
    }
    let agg = aggregate_weather(&grid, &crosswalk)?;
    if !agg.dropped_counties.is_empty() {
        crate::warn(&format!(
            "dropped {} rows from {} counties without a region: {}",
            agg.dropped_rows,
            agg.dropped_counties.len(),
            agg.dropped_counties.join(",")
        ));
    }
    ensure_dir(&args.out)?;
    match args.format {
        Format::Csv => write_csv(
            &args.out.join("region_month_precip.csv"),
            &WEATHER_OUT,
            agg.rows.iter().map(|r| {
                vec![
                    r.region_id.clone(),
                    r.year.to_string(),
                    r.month.to_string(),
                    num(r.mean_daily_precip),
                ]
            }),
        )?,
        Format::Json => write_json(&args.out.join("region_month_precip.json"), &agg)?,
    }
    println!("region-months: {}, dropped counties: {}", agg.rows.len(), agg.dropped_counties.len());
    Ok(())
}
