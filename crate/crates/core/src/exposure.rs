//! Measurement layer: website exposure scores, household exposure, purpose
//! shares and the rainfall crosswalk aggregation.
//!
//! All aggregations iterate in a canonical key order (`BTreeMap`), so results
//! do not depend on input row order beyond the order of records that share a
//! key.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Purpose class of a website, also the category grain of browsing panels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Productive,
    Leisure,
    Mixed,
    Adcdn,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Productive,
        Category::Leisure,
        Category::Mixed,
        Category::Adcdn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Productive => "productive",
            Category::Leisure => "leisure",
            Category::Mixed => "mixed",
            Category::Adcdn => "adcdn",
        }
    }

    /// Position in [`Category::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "productive" => Ok(Category::Productive),
            "leisure" => Ok(Category::Leisure),
            "mixed" => Ok(Category::Mixed),
            "adcdn" => Ok(Category::Adcdn),
            other => Err(Error::Data(format!("unknown category '{other}'"))),
        }
    }
}

/// Lowercases a host and strips one leading `www.`.
pub fn normalize_domain(domain: &str) -> String {
    let lower = domain.trim().to_ascii_lowercase();
    match lower.strip_prefix("www.") {
        Some(rest) => rest.to_string(),
        None => lower,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebsiteLabel {
    pub domain: String,
    pub purpose: Category,
    pub exposure_count: u8,
}

impl WebsiteLabel {
    pub fn new(domain: &str, purpose: Category, exposure_count: u8) -> Result<Self> {
        if exposure_count > 5 {
            return Err(Error::Data(format!(
                "exposure_count for '{domain}' must be in 0..=5, got {exposure_count}"
            )));
        }
        let domain = normalize_domain(domain);
        if domain.is_empty() {
            return Err(Error::Data("empty domain in label".into()));
        }
        Ok(Self {
            domain,
            purpose,
            exposure_count,
        })
    }

    /// Four or five of the top-five activities are exposed.
    pub fn is_high_exposure(&self) -> bool {
        self.exposure_count >= 4
    }
}

/// Labels keyed by normalized domain.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelSet {
    labels: BTreeMap<String, WebsiteLabel>,
}

impl LabelSet {
    pub fn new(labels: impl IntoIterator<Item = WebsiteLabel>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for label in labels {
            let key = normalize_domain(&label.domain);
            if map.contains_key(&key) {
                return Err(Error::Data(format!("duplicate label for domain '{key}'")));
            }
            map.insert(key, label);
        }
        Ok(Self { labels: map })
    }

    pub fn get(&self, domain: &str) -> Option<&WebsiteLabel> {
        self.labels.get(&normalize_domain(domain))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &WebsiteLabel> {
        self.labels.values()
    }
}

/// Duration share of one household on one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrowseShare {
    pub household_id: u64,
    pub domain: String,
    pub share: f64,
}

/// Tolerance on per-household share sums.
pub const SHARE_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HouseholdExposure {
    pub household_id: u64,
    /// Share of browsing on domains with exposure count 4 or 5.
    pub exposure: f64,
    /// Share of browsing on any labeled domain.
    pub labeled_coverage: f64,
}

/// Household exposure: the browsing share on highly exposed domains.
///
/// Unlabeled domains count toward neither sum. Shares are accumulated in
/// input order within each household.
pub fn household_exposure(shares: &[BrowseShare], labels: &LabelSet) -> Result<Vec<HouseholdExposure>> {
    let mut acc: BTreeMap<u64, (f64, f64, f64)> = BTreeMap::new();
    for (row, s) in shares.iter().enumerate() {
        if !(0.0..=1.0).contains(&s.share) {
            return Err(Error::Data(format!(
                "row {row}: share {} for household {} outside [0,1]",
                s.share, s.household_id
            )));
        }
        let entry = acc.entry(s.household_id).or_insert((0.0, 0.0, 0.0));
        entry.2 += s.share;
        if let Some(label) = labels.get(&s.domain) {
            entry.1 += s.share;
            if label.is_high_exposure() {
                entry.0 += s.share;
            }
        }
    }
    acc.into_iter()
        .map(|(household_id, (exposure, labeled_coverage, total))| {
            if (total - 1.0).abs() > SHARE_SUM_TOL {
                return Err(Error::Data(format!(
                    "shares of household {household_id} sum to {total}, expected 1"
                )));
            }
            Ok(HouseholdExposure {
                household_id,
                exposure,
                labeled_coverage,
            })
        })
        .collect()
}

/// Browsing seconds of one household on one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainDuration {
    pub household_id: u64,
    pub domain: String,
    pub duration_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PurposeShares {
    pub household_id: u64,
    /// Shares indexed as [`Category::ALL`].
    pub shares: [f64; 4],
    pub unlabeled: f64,
    pub total_seconds: f64,
}

impl PurposeShares {
    pub fn share(&self, category: Category) -> f64 {
        self.shares[category.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PurposeShareReport {
    pub households: Vec<PurposeShares>,
    /// Households whose total duration is zero; they have no shares.
    pub zero_duration_households: Vec<u64>,
}

/// Per-household duration shares by purpose class, with unlabeled duration
/// reported separately.
pub fn purpose_shares(records: &[DomainDuration], labels: &LabelSet) -> Result<PurposeShareReport> {
    // [productive, leisure, mixed, adcdn, unlabeled]
    let mut acc: BTreeMap<u64, [f64; 5]> = BTreeMap::new();
    for (row, r) in records.iter().enumerate() {
        if !(r.duration_seconds >= 0.0 && r.duration_seconds.is_finite()) {
            return Err(Error::Data(format!(
                "row {row}: duration {} for household {} must be finite and nonnegative",
                r.duration_seconds, r.household_id
            )));
        }
        let slot = match labels.get(&r.domain) {
            Some(label) => label.purpose.index(),
            None => 4,
        };
        acc.entry(r.household_id).or_insert([0.0; 5])[slot] += r.duration_seconds;
    }
    let mut households = Vec::with_capacity(acc.len());
    let mut zero_duration_households = Vec::new();
    for (household_id, d) in acc {
        let total: f64 = d.iter().sum();
        if total == 0.0 {
            zero_duration_households.push(household_id);
            continue;
        }
        households.push(PurposeShares {
            household_id,
            shares: [d[0] / total, d[1] / total, d[2] / total, d[3] / total],
            unlabeled: d[4] / total,
            total_seconds: total,
        });
    }
    Ok(PurposeShareReport {
        households,
        zero_duration_households,
    })
}

/// Number of the top-five activities flagged as exposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExposureScore {
    pub score: u8,
    /// Missing flags filled with `false`.
    pub padded: usize,
}

pub fn website_exposure_score(activity_flags: &[bool]) -> Result<ExposureScore> {
    if activity_flags.len() > 5 {
        return Err(Error::Data(format!(
            "expected at most 5 activity flags, got {}",
            activity_flags.len()
        )));
    }
    Ok(ExposureScore {
        score: activity_flags.iter().filter(|&&f| f).count() as u8,
        padded: 5 - activity_flags.len(),
    })
}

/// Daily precipitation at one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherGridRecord {
    pub grid_cell: String,
    pub county_fips: String,
    pub date: NaiveDate,
    pub precipitation: f64,
}

impl WeatherGridRecord {
    pub fn new(grid_cell: &str, county_fips: &str, date: NaiveDate, precipitation: f64) -> Result<Self> {
        if county_fips.len() != 5 || !county_fips.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Data(format!("county_fips '{county_fips}' is not a 5-digit code")));
        }
        if !(precipitation >= 0.0 && precipitation.is_finite()) {
            return Err(Error::Data(format!(
                "precipitation {precipitation} at {grid_cell} on {date} must be nonnegative"
            )));
        }
        Ok(Self {
            grid_cell: grid_cell.to_string(),
            county_fips: county_fips.to_string(),
            date,
            precipitation,
        })
    }
}

/// County to region mapping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Crosswalk {
    map: BTreeMap<String, String>,
}

impl Crosswalk {
    /// Builds the mapping; a county listed twice must map to the same region.
    pub fn new<I, S, T>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (county, region) in pairs {
            let county = county.into();
            let region = region.into();
            match map.get(&county) {
                Some(existing) if *existing != region => {
                    return Err(Error::Data(format!(
                        "county {county} maps to both region {existing} and {region}"
                    )));
                }
                _ => {
                    map.insert(county, region);
                }
            }
        }
        Ok(Self { map })
    }

    pub fn region_of(&self, county: &str) -> Option<&str> {
        self.map.get(county).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionMonth {
    pub region_id: String,
    pub year: i32,
    pub month: u32,
    pub mean_daily_precip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeatherAggregate {
    pub rows: Vec<RegionMonth>,
    /// Counties present in the grid data but absent from the crosswalk.
    pub dropped_counties: Vec<String>,
    pub dropped_rows: usize,
}

/// Region-month mean daily precipitation.
///
/// Grid cells are averaged within county-days, county-days within
/// county-months, and counties within regions, all unweighted.
pub fn aggregate_weather(grid: &[WeatherGridRecord], crosswalk: &Crosswalk) -> Result<WeatherAggregate> {
    let mut seen: BTreeSet<(&str, NaiveDate)> = BTreeSet::new();
    // county -> date -> grid cell -> value
    let mut cells: BTreeMap<&str, BTreeMap<NaiveDate, BTreeMap<&str, f64>>> = BTreeMap::new();
    let mut dropped: BTreeSet<String> = BTreeSet::new();
    let mut dropped_rows = 0usize;
    for r in grid {
        if !seen.insert((r.grid_cell.as_str(), r.date)) {
            return Err(Error::Data(format!(
                "duplicate weather row for grid cell {} on {}",
                r.grid_cell, r.date
            )));
        }
        if crosswalk.region_of(&r.county_fips).is_none() {
            dropped.insert(r.county_fips.clone());
            dropped_rows += 1;
            continue;
        }
        cells
            .entry(r.county_fips.as_str())
            .or_default()
            .entry(r.date)
            .or_default()
            .insert(r.grid_cell.as_str(), r.precipitation);
    }

    // (region, year, month) -> county -> county-month mean
    let mut regions: BTreeMap<(&str, i32, u32), BTreeMap<&str, f64>> = BTreeMap::new();
    for (county, days) in &cells {
        let region = crosswalk.region_of(county).expect("filtered above");
        let mut months: BTreeMap<(i32, u32), (f64, usize)> = BTreeMap::new();
        for (date, by_cell) in days {
            let day_mean = by_cell.values().sum::<f64>() / by_cell.len() as f64;
            let m = months.entry((date.year(), date.month())).or_insert((0.0, 0));
            m.0 += day_mean;
            m.1 += 1;
        }
        for ((year, month), (sum, n)) in months {
            regions
                .entry((region, year, month))
                .or_default()
                .insert(county, sum / n as f64);
        }
    }

    let rows = regions
        .into_iter()
        .map(|((region, year, month), counties)| RegionMonth {
            region_id: region.to_string(),
            year,
            month,
            mean_daily_precip: counties.values().sum::<f64>() / counties.len() as f64,
        })
        .collect();
    Ok(WeatherAggregate {
        rows,
        dropped_counties: dropped.into_iter().collect(),
        dropped_rows,
    })
}
