//! Measurement layer against brute-force oracles on randomized fixtures.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use timealloc_core::econometrics::{raking_weights, weighted_distribution};
use timealloc_core::exposure::{
    aggregate_weather, household_exposure, purpose_shares, BrowseShare, Category, Crosswalk, DomainDuration, LabelSet,
    WeatherGridRecord, WebsiteLabel,
};

const N_DOMAINS: usize = 60;

fn domain(i: usize) -> String {
    format!("site{i}.example")
}

/// Labels for two thirds of the domain pool, some written with a `www.` prefix.
fn random_labels(rng: &mut ChaCha8Rng) -> (LabelSet, Vec<Option<(Category, u8)>>) {
    let mut truth = vec![None; N_DOMAINS];
    let mut labels = Vec::new();
    for (i, slot) in truth.iter_mut().enumerate() {
        if i % 3 == 2 {
            continue;
        }
        let cat = Category::ALL[rng.random_range(0..4)];
        let count = rng.random_range(0..=5u8);
        let name = if i % 2 == 0 { format!("www.{}", domain(i)) } else { domain(i) };
        labels.push(WebsiteLabel::new(&name, cat, count).unwrap());
        *slot = Some((cat, count));
    }
    (LabelSet::new(labels).unwrap(), truth)
}

fn domain_index(d: &str) -> usize {
    let d = d.to_ascii_lowercase();
    let d = d.strip_prefix("www.").unwrap_or(&d);
    d.trim_start_matches("site").trim_end_matches(".example").parse().unwrap()
}

fn browse_fixture(rng: &mut ChaCha8Rng, n_households: u64) -> Vec<BrowseShare> {
    let mut rows = Vec::new();
    for h in 0..n_households {
        let k = rng.random_range(1..=12);
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        for r in raw {
            let d = domain(rng.random_range(0..N_DOMAINS));
            let d = if rng.random_bool(0.2) { format!("WWW.{}", d.to_uppercase()) } else { d };
            rows.push(BrowseShare {
                household_id: h * 7 + 3,
                domain: d,
                share: r / total,
            });
        }
    }
    rows.shuffle(rng);
    rows
}

#[test]
fn household_exposure_matches_row_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (labels, truth) = random_labels(&mut rng);
    let rows = browse_fixture(&mut rng, 400);
    assert!(rows.len() >= 1000);
    let got = household_exposure(&rows, &labels).unwrap();

    let mut ids: Vec<u64> = rows.iter().map(|r| r.household_id).collect();
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(got.len(), ids.len());
    for (g, id) in got.iter().zip(&ids) {
        let (mut exposure, mut coverage) = (0.0, 0.0);
        for r in rows.iter().filter(|r| r.household_id == *id) {
            if let Some((_, count)) = truth[domain_index(&r.domain)] {
                coverage += r.share;
                if count >= 4 {
                    exposure += r.share;
                }
            }
        }
        assert_eq!(g.household_id, *id);
        assert_eq!(g.exposure, exposure);
        assert_eq!(g.labeled_coverage, coverage);
    }
}

#[test]
fn household_exposure_is_monotone_in_exposed_share() {
    let labels = LabelSet::new(vec![
        WebsiteLabel::new("high.example", Category::Productive, 5).unwrap(),
        WebsiteLabel::new("low.example", Category::Leisure, 1).unwrap(),
    ])
    .unwrap();
    let mut last = -1.0;
    for k in 0..=20 {
        let s = k as f64 / 20.0;
        let rows = vec![
            BrowseShare { household_id: 1, domain: "high.example".into(), share: s },
            BrowseShare { household_id: 1, domain: "low.example".into(), share: 1.0 - s },
        ];
        let e = household_exposure(&rows, &labels).unwrap()[0].exposure;
        assert!(e >= last);
        last = e;
    }
}

#[test]
fn purpose_shares_match_row_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (labels, truth) = random_labels(&mut rng);
    let mut rows = Vec::new();
    for h in 0..300u64 {
        let k = rng.random_range(1..=10);
        let silent = h % 37 == 0;
        for _ in 0..k {
            rows.push(DomainDuration {
                household_id: h,
                domain: domain(rng.random_range(0..N_DOMAINS)),
                duration_seconds: if silent { 0.0 } else { rng.random_range(0.0..3600.0f64).floor() },
            });
        }
    }
    rows.shuffle(&mut rng);
    assert!(rows.len() >= 1000);
    let report = purpose_shares(&rows, &labels).unwrap();

    let mut ids: Vec<u64> = rows.iter().map(|r| r.household_id).collect();
    ids.sort_unstable();
    ids.dedup();
    let mut zero = Vec::new();
    let mut expected = Vec::new();
    for id in ids {
        let mut d = [0.0f64; 5];
        for r in rows.iter().filter(|r| r.household_id == id) {
            let slot = truth[domain_index(&r.domain)].map_or(4, |(c, _)| c.index());
            d[slot] += r.duration_seconds;
        }
        let total: f64 = d.iter().sum();
        if total == 0.0 {
            zero.push(id);
        } else {
            expected.push((id, [d[0] / total, d[1] / total, d[2] / total, d[3] / total], d[4] / total, total));
        }
    }
    assert_eq!(report.zero_duration_households, zero);
    assert_eq!(report.households.len(), expected.len());
    for (g, (id, shares, unlabeled, total)) in report.households.iter().zip(expected) {
        assert_eq!(g.household_id, id);
        assert_eq!(g.shares, shares);
        assert_eq!(g.unlabeled, unlabeled);
        assert_eq!(g.total_seconds, total);
    }
}

type Cell = (u8, u8);

fn counts_from_rows(rows: &[Cell]) -> BTreeMap<Cell, u64> {
    let mut out = BTreeMap::new();
    for inc in 1..=8u8 {
        for age in 1..=6u8 {
            let c = rows.iter().filter(|r| **r == (inc, age)).count() as u64;
            if c > 0 {
                out.insert((inc, age), c);
            }
        }
    }
    out
}

#[test]
fn raking_weights_match_ratio_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let rows: Vec<Cell> = (0..5000).map(|_| (rng.random_range(1..=8), rng.random_range(1..=6))).collect();
    let counts = counts_from_rows(&rows);
    let raw: BTreeMap<Cell, f64> = counts.keys().map(|k| (*k, rng.random_range(0.1..1.0))).collect();
    let s: f64 = raw.values().sum();
    let target: BTreeMap<Cell, f64> = raw.iter().map(|(k, v)| (*k, v / s)).collect();
    let w = raking_weights(&counts, &target).unwrap();

    let n = rows.len() as f64;
    for (k, t) in &target {
        let c = rows.iter().filter(|r| *r == k).count() as f64;
        assert_eq!(w[k], t / (c / n));
    }
    let weighted_n: f64 = rows.iter().map(|r| w[r]).sum();
    assert!((weighted_n - n).abs() <= 1e-9 * n);
}

/// ACS shares of Internet-using households (percent), by income and by age
/// of the household head.
const ACS_INCOME: [f64; 8] = [13.94, 10.45, 14.33, 9.89, 13.38, 17.50, 9.19, 11.33];
const ACS_AGE: [f64; 6] = [4.09, 16.14, 18.50, 17.69, 18.64, 24.93];
/// Panel composition on the same bins.
const PANEL_INCOME: [f64; 8] = [21.25, 21.38, 13.99, 4.67, 7.34, 9.96, 2.49, 18.93];
const PANEL_AGE: [f64; 6] = [7.19, 9.78, 14.06, 38.63, 16.68, 13.53];

fn normalized<const N: usize>(v: [f64; N]) -> [f64; N] {
    let s: f64 = v.iter().sum();
    v.map(|x| x / s)
}

#[test]
fn raking_reproduces_acs_marginals() {
    // The published columns give marginals only; the joint target is their
    // product after normalizing each column's rounding to 1.
    let inc = normalized(ACS_INCOME);
    let age = normalized(ACS_AGE);
    let mut target = BTreeMap::new();
    let mut counts = BTreeMap::new();
    for i in 0..8 {
        for a in 0..6 {
            let key = (i as u8 + 1, a as u8 + 1);
            target.insert(key, inc[i] * age[a]);
            counts.insert(key, (PANEL_INCOME[i] * PANEL_AGE[a] * 2.0).round().max(1.0) as u64);
        }
    }
    assert_eq!(counts.len(), 48);
    let w = raking_weights(&counts, &target).unwrap();
    let dist = weighted_distribution(&counts, &w);
    for (k, t) in &target {
        assert!((dist[k] - t).abs() <= 1e-12);
    }
    for i in 0..8 {
        let m: f64 = (0..6).map(|a| dist[&(i as u8 + 1, a as u8 + 1)]).sum();
        assert!((m - inc[i]).abs() <= 1e-12, "income bin {i}");
    }
    for a in 0..6 {
        let m: f64 = (0..8).map(|i| dist[&(i as u8 + 1, a as u8 + 1)]).sum();
        assert!((m - age[a]).abs() <= 1e-12, "age bin {a}");
    }
    let n: u64 = counts.values().sum();
    let weighted_n: f64 = counts.iter().map(|(k, c)| *c as f64 * w[k]).sum();
    assert!((weighted_n - n as f64).abs() <= 1e-12 * n as f64);
}

#[test]
fn raking_rejects_occupied_cell_without_target() {
    let counts = BTreeMap::from([((1u8, 1u8), 5u64), ((1, 2), 5)]);
    let target = BTreeMap::from([((1u8, 1u8), 1.0), ((1, 2), 0.0)]);
    let err = raking_weights(&counts, &target).unwrap_err().to_string();
    assert!(err.contains("(1, 2)"), "{err}");
}

fn weather_fixture(rng: &mut ChaCha8Rng) -> (Vec<WeatherGridRecord>, Crosswalk) {
    let counties: Vec<String> = (0..12).map(|i| format!("{:05}", 1001 + i * 2)).collect();
    let crosswalk = Crosswalk::new(counties.iter().take(10).enumerate().map(|(i, c)| (c.clone(), format!("R{}", i % 3)))).unwrap();
    let start = NaiveDate::from_ymd_opt(2022, 11, 20).unwrap();
    let mut rows = Vec::new();
    for (ci, county) in counties.iter().enumerate() {
        let n_cells = 1 + ci % 3;
        for g in 0..n_cells {
            for d in 0..60 {
                if rng.random_bool(0.1) {
                    continue;
                }
                let date = start + chrono::Days::new(d);
                let p = if rng.random_bool(0.4) { 0.0 } else { rng.random_range(0.0..40.0) };
                rows.push(WeatherGridRecord::new(&format!("g{ci}_{g}"), county, date, p).unwrap());
            }
        }
    }
    (rows, crosswalk)
}

fn weather_oracle(rows: &[WeatherGridRecord], cw: &Crosswalk) -> Vec<(String, i32, u32, f64)> {
    let mut keys: Vec<(String, i32, u32)> = rows
        .iter()
        .filter_map(|r| cw.region_of(&r.county_fips).map(|g| (g.to_string(), r.date.year(), r.date.month())))
        .collect();
    keys.sort();
    keys.dedup();
    let mut out = Vec::new();
    for (region, year, month) in keys {
        let in_month: Vec<&WeatherGridRecord> = rows
            .iter()
            .filter(|r| {
                cw.region_of(&r.county_fips) == Some(region.as_str()) && r.date.year() == year && r.date.month() == month
            })
            .collect();
        let mut counties: Vec<&str> = in_month.iter().map(|r| r.county_fips.as_str()).collect();
        counties.sort();
        counties.dedup();
        let mut county_sum = 0.0;
        for county in &counties {
            let mut dates: Vec<NaiveDate> = in_month.iter().filter(|r| r.county_fips == *county).map(|r| r.date).collect();
            dates.sort();
            dates.dedup();
            let mut day_sum = 0.0;
            for date in &dates {
                let mut cells: Vec<&WeatherGridRecord> =
                    in_month.iter().copied().filter(|r| r.county_fips == *county && r.date == *date).collect();
                cells.sort_by(|a, b| a.grid_cell.cmp(&b.grid_cell));
                let s: f64 = cells.iter().map(|r| r.precipitation).sum();
                day_sum += s / cells.len() as f64;
            }
            county_sum += day_sum / dates.len() as f64;
        }
        out.push((region, year, month, county_sum / counties.len() as f64));
    }
    out
}

#[test]
fn weather_aggregation_matches_nested_mean_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (rows, cw) = weather_fixture(&mut rng);
    assert!(rows.len() >= 1000);
    let agg = aggregate_weather(&rows, &cw).unwrap();
    let oracle = weather_oracle(&rows, &cw);
    assert_eq!(agg.rows.len(), oracle.len());
    for (g, (region, year, month, mean)) in agg.rows.iter().zip(oracle) {
        assert_eq!((g.region_id.as_str(), g.year, g.month), (region.as_str(), year, month));
        assert_eq!(g.mean_daily_precip, mean);
    }
    assert_eq!(agg.dropped_counties, vec!["01021".to_string(), "01023".to_string()]);
    assert_eq!(
        agg.dropped_rows,
        rows.iter().filter(|r| cw.region_of(&r.county_fips).is_none()).count()
    );
}

#[test]
fn weather_rejects_duplicate_cell_days() {
    let mut rng = ChaCha8Rng::seed_from_u64(405);
    let (mut rows, cw) = weather_fixture(&mut rng);
    rows.push(rows[10].clone());
    assert!(aggregate_weather(&rows, &cw).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn weather_aggregation_is_permutation_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut rows, cw) = weather_fixture(&mut rng);
        let a = aggregate_weather(&rows, &cw).unwrap();
        rows.shuffle(&mut rng);
        let b = aggregate_weather(&rows, &cw).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn raking_preserves_weighted_count(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_rows = rng.random_range(100..3000);
        let rows: Vec<Cell> = (0..n_rows).map(|_| (rng.random_range(1..=3), rng.random_range(1..=3))).collect();
        let counts = counts_from_rows(&rows);
        let raw: BTreeMap<Cell, f64> = counts.keys().map(|k| (*k, rng.random_range(0.05..1.0))).collect();
        let s: f64 = raw.values().sum();
        let target: BTreeMap<Cell, f64> = raw.iter().map(|(k, v)| (*k, v / s)).collect();
        let w = raking_weights(&counts, &target).unwrap();
        let dist = weighted_distribution(&counts, &w);
        for (k, t) in &target {
            prop_assert!((dist[k] - t).abs() <= 1e-12);
        }
        let weighted_n: f64 = counts.iter().map(|(k, c)| *c as f64 * w[k]).sum();
        prop_assert!((weighted_n - n_rows as f64).abs() <= 1e-9 * n_rows as f64);
    }
}
