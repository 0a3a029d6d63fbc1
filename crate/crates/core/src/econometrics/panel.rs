//! Household panel designs: the exposure-instrumented long difference and
//! the quarterly event study.

use std::collections::BTreeMap;

use serde::Serialize;

use super::data::Dataset;
use super::regression::{ols, tsls, RegressionResult, RegressionSpec};
use crate::error::{Error, Result};
use crate::exposure::Category;
use crate::records::{HouseholdInfo, PanelRecord};

/// Browsing outcome built from category durations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Outcome {
    Total,
    Category(Category),
}

impl Outcome {
    pub const ALL: [Outcome; 5] = [
        Outcome::Total,
        Outcome::Category(Category::Leisure),
        Outcome::Category(Category::Productive),
        Outcome::Category(Category::Mixed),
        Outcome::Category(Category::Adcdn),
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Total => "total",
            Outcome::Category(c) => c.as_str(),
        }
    }

    fn includes(&self, c: Category) -> bool {
        match self {
            Outcome::Total => true,
            Outcome::Category(k) => *k == c,
        }
    }
}

type CellKey = (u8, u8, u32);

struct HouseholdQuarters {
    cell: CellKey,
    weight: f64,
    /// quarter -> seconds per category
    quarters: BTreeMap<i32, [f64; 4]>,
}

fn index_panel(panel: &[PanelRecord]) -> Result<BTreeMap<u64, HouseholdQuarters>> {
    let mut out: BTreeMap<u64, HouseholdQuarters> = BTreeMap::new();
    let mut seen = std::collections::BTreeSet::new();
    for (row, r) in panel.iter().enumerate() {
        if !(r.duration_seconds >= 0.0 && r.duration_seconds.is_finite()) {
            return Err(Error::Data(format!("panel row {row}: duration must be nonnegative")));
        }
        if !(r.weight > 0.0) {
            return Err(Error::Data(format!("panel row {row}: weight must be positive")));
        }
        if !seen.insert((r.household_id, r.quarter, r.category)) {
            return Err(Error::Data(format!(
                "panel row {row}: duplicate record for household {}, quarter {}, category {}",
                r.household_id, r.quarter, r.category
            )));
        }
        let h = out.entry(r.household_id).or_insert_with(|| HouseholdQuarters {
            cell: r.cell(),
            weight: r.weight,
            quarters: BTreeMap::new(),
        });
        if h.cell != r.cell() {
            return Err(Error::Data(format!(
                "panel row {row}: household {} changes demographic cell",
                r.household_id
            )));
        }
        h.quarters.entry(r.quarter).or_insert([0.0; 4])[r.category.index()] += r.duration_seconds;
    }
    Ok(out)
}

fn outcome_seconds(d: &[f64; 4], outcome: Outcome) -> f64 {
    Category::ALL
        .iter()
        .filter(|c| outcome.includes(**c))
        .map(|c| d[c.index()])
        .sum()
}

fn cell_code(cell: CellKey) -> i64 {
    ((cell.0 as i64) << 40) | ((cell.1 as i64) << 32) | cell.2 as i64
}

/// Inclusive quarter ranges compared by the long difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LongDifferenceWindow {
    pub pre: (i32, i32),
    pub post: (i32, i32),
}

impl LongDifferenceWindow {
    /// Four quarters ending at the release quarter against the last four.
    pub fn standard(last_quarter: i32) -> Self {
        Self {
            pre: (-3, 0),
            post: (last_quarter - 3, last_quarter),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Estimator {
    Ols,
    Iv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongDifferenceEstimate {
    pub outcome: Outcome,
    pub estimator: Estimator,
    pub result: RegressionResult,
    /// Households without browsing in the pre or post window.
    pub dropped_zero_outcome: usize,
    /// Households with zero exposure (log undefined) or absent from the panel.
    pub dropped_exposure: usize,
}

impl LongDifferenceEstimate {
    pub fn effect(&self) -> f64 {
        self.result.coefficients[0]
    }

    pub fn se(&self) -> f64 {
        self.result.se[0]
    }
}

/// Change in log browsing between the two windows regressed on adoption,
/// with cell fixed effects, coverage and category-exposure controls, and
/// cell-clustered errors. The IV variant instruments adoption with log
/// exposure.
pub fn long_difference(
    panel: &[PanelRecord],
    households: &[HouseholdInfo],
    window: LongDifferenceWindow,
    outcome: Outcome,
    estimator: Estimator,
    weighted: bool,
) -> Result<LongDifferenceEstimate> {
    let indexed = index_panel(panel)?;
    let sum_window = |h: &HouseholdQuarters, (a, b): (i32, i32)| -> f64 {
        h.quarters.range(a..=b).map(|(_, d)| outcome_seconds(d, outcome)).sum()
    };

    let mut dropped_zero = 0;
    let mut dropped_exposure = 0;
    let (mut dy, mut adopt, mut lne, mut cov, mut cat, mut cell, mut w) =
        (vec![], vec![], vec![], vec![], vec![], vec![], vec![]);
    for hh in households {
        let Some(h) = indexed.get(&hh.household_id) else {
            dropped_exposure += 1;
            continue;
        };
        if !(hh.exposure > 0.0) {
            dropped_exposure += 1;
            continue;
        }
        let pre = sum_window(h, window.pre);
        let post = sum_window(h, window.post);
        if pre <= 0.0 || post <= 0.0 {
            dropped_zero += 1;
            continue;
        }
        dy.push(post.ln() - pre.ln());
        adopt.push(if hh.chatgpt_ever_used { 1.0 } else { 0.0 });
        lne.push(hh.exposure.ln());
        cov.push(hh.labeled_coverage);
        cat.push(hh.category_exposure);
        cell.push(cell_code((hh.income_bin, hh.age_bin, hh.region_id)));
        w.push(h.weight);
    }
    let mut ds = Dataset::new(dy.len());
    ds.add_numeric("dy", dy)?;
    ds.add_numeric("adopt", adopt)?;
    ds.add_numeric("ln_exposure", lne)?;
    ds.add_numeric("labeled_coverage", cov)?;
    ds.add_numeric("category_exposure", cat)?;
    ds.add_numeric("weight", w)?;
    ds.add_categorical("cell", cell)?;

    let mut spec = RegressionSpec::new("dy")
        .regressor("labeled_coverage")
        .regressor("category_exposure")
        .fixed_effect(&["cell"])
        .cluster(&["cell"]);
    if weighted {
        spec = spec.weights("weight");
    }
    let result = match estimator {
        Estimator::Ols => {
            let mut s = spec;
            s.regressors.insert(0, "adopt".into());
            ols(&s, &ds)?
        }
        Estimator::Iv => tsls(&spec.endogenous("adopt", "ln_exposure"), &ds)?,
    };
    Ok(LongDifferenceEstimate {
        outcome,
        estimator,
        result,
        dropped_zero_outcome: dropped_zero,
        dropped_exposure,
    })
}

/// Adoption on log exposure with the same controls and fixed effects.
pub fn adoption_first_stage(households: &[HouseholdInfo]) -> Result<RegressionResult> {
    let keep: Vec<&HouseholdInfo> = households.iter().filter(|h| h.exposure > 0.0).collect();
    let mut ds = Dataset::new(keep.len());
    ds.add_numeric("adopt", keep.iter().map(|h| f64::from(u8::from(h.chatgpt_ever_used))).collect())?;
    ds.add_numeric("ln_exposure", keep.iter().map(|h| h.exposure.ln()).collect())?;
    ds.add_numeric("labeled_coverage", keep.iter().map(|h| h.labeled_coverage).collect())?;
    ds.add_numeric("category_exposure", keep.iter().map(|h| h.category_exposure).collect())?;
    ds.add_categorical(
        "cell",
        keep.iter().map(|h| cell_code((h.income_bin, h.age_bin, h.region_id))).collect(),
    )?;
    ols(
        &RegressionSpec::new("adopt")
            .regressor("ln_exposure")
            .regressor("labeled_coverage")
            .regressor("category_exposure")
            .fixed_effect(&["cell"])
            .cluster(&["cell"]),
        &ds,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventCoefficient {
    pub quarter: i32,
    /// `None` when the quarter has no identifying variation.
    pub coefficient: Option<f64>,
    pub se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventStudyResult {
    pub outcome: Outcome,
    pub reference_quarter: i32,
    pub path: Vec<EventCoefficient>,
    pub n_obs: usize,
    /// Household-quarters with zero outcome duration.
    pub dropped_zero_outcome: usize,
    /// Households without positive exposure.
    pub dropped_exposure: usize,
}

impl EventStudyResult {
    pub fn at(&self, quarter: i32) -> Option<&EventCoefficient> {
        self.path.iter().find(|c| c.quarter == quarter)
    }
}

/// Log outcome on log exposure interacted with quarter dummies, with
/// household and quarter-by-cell fixed effects and cell-clustered errors.
/// The reference quarter's coefficient is 0.
pub fn event_study(
    panel: &[PanelRecord],
    exposure: &BTreeMap<u64, f64>,
    reference_quarter: i32,
    outcome: Outcome,
) -> Result<EventStudyResult> {
    let indexed = index_panel(panel)?;
    let quarters: Vec<i32> = {
        let mut q: Vec<i32> = indexed.values().flat_map(|h| h.quarters.keys().copied()).collect();
        q.sort_unstable();
        q.dedup();
        q
    };
    if !quarters.contains(&reference_quarter) {
        return Err(Error::Data(format!("reference quarter {reference_quarter} not in panel")));
    }

    let mut dropped_zero = 0;
    let mut dropped_exposure = 0;
    let (mut y, mut lne, mut q_of, mut hh, mut qcell, mut cell) = (vec![], vec![], vec![], vec![], vec![], vec![]);
    for (&id, h) in &indexed {
        let e = exposure.get(&id).copied().unwrap_or(0.0);
        if !(e > 0.0) {
            dropped_exposure += 1;
            continue;
        }
        for (&q, d) in &h.quarters {
            let s = outcome_seconds(d, outcome);
            if s <= 0.0 {
                dropped_zero += 1;
                continue;
            }
            y.push(s.ln());
            lne.push(e.ln());
            q_of.push(q);
            hh.push(id as i64);
            qcell.push(q as i64);
            cell.push(cell_code(h.cell));
        }
    }
    let n = y.len();
    let mut ds = Dataset::new(n);
    ds.add_numeric("y", y)?;
    ds.add_categorical("household", hh)?;
    ds.add_categorical("quarter", qcell)?;
    ds.add_categorical("cell", cell)?;

    let mut event_quarters: Vec<i32> = quarters.iter().copied().filter(|&q| q != reference_quarter).collect();
    let mut missing: Vec<i32> = Vec::new();
    for &t in &event_quarters {
        let col: Vec<f64> = (0..n).map(|i| if q_of[i] == t { lne[i] } else { 0.0 }).collect();
        ds.add_numeric(&format!("q{t}"), col)?;
    }
    let result = loop {
        let mut spec = RegressionSpec::new("y")
            .fixed_effect(&["household"])
            .fixed_effect(&["quarter", "cell"])
            .cluster(&["cell"]);
        for t in &event_quarters {
            spec = spec.regressor(&format!("q{t}"));
        }
        if event_quarters.is_empty() {
            break None;
        }
        match ols(&spec, &ds) {
            Ok(r) => break Some(r),
            Err(Error::RankDeficient { columns }) => {
                let bad: Vec<i32> = event_quarters
                    .iter()
                    .copied()
                    .filter(|t| columns.contains(&format!("q{t}")))
                    .collect();
                if bad.is_empty() {
                    return Err(Error::RankDeficient { columns });
                }
                event_quarters.retain(|t| !bad.contains(t));
                missing.extend(bad);
            }
            Err(e) => return Err(e),
        }
    };

    let path = quarters
        .iter()
        .map(|&q| {
            if q == reference_quarter {
                return EventCoefficient {
                    quarter: q,
                    coefficient: Some(0.0),
                    se: Some(0.0),
                };
            }
            match (&result, missing.contains(&q)) {
                (Some(r), false) => {
                    let name = format!("q{q}");
                    EventCoefficient {
                        quarter: q,
                        coefficient: r.coef(&name).ok(),
                        se: r.se_of(&name).ok(),
                    }
                }
                _ => EventCoefficient {
                    quarter: q,
                    coefficient: None,
                    se: None,
                },
            }
        })
        .collect();
    Ok(EventStudyResult {
        outcome,
        reference_quarter,
        path,
        n_obs: n,
        dropped_zero_outcome: dropped_zero,
        dropped_exposure,
    })
}
