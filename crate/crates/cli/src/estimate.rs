use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use timealloc_core::calibration::{grid, CalibrationInputs};
use timealloc_core::econometrics::{
    adoption_first_stage, engel_loglog, engel_shares, event_study, long_difference, window_contrast,
    EngelEstimates, EngelOptions, EventCoefficient, Estimator, LongDifferenceWindow, Outcome, RegressionResult,
    WindowContrast,
};
use timealloc_core::exposure::Category;
use timealloc_core::model::Activity;
use timealloc_core::records::{EngelCell, HouseholdInfo, IntervalRecord, PanelRecord};

use crate::args::{DgpOverrides, EstimateArgs, Format};
use crate::config::{dgp_with_overrides, RunConfig, Tolerances};
use crate::error::{CliError, CliResult};
use crate::files::{ensure_dir, num, opt_num, write_csv, write_json, write_text, SimFiles};
use crate::simulate::{generate, Truth};
use crate::table8::{self, CellRow};
use crate::schema;

/// Reference quarter of the event study (the release quarter).
pub const EVENT_REFERENCE: i32 = 0;

/// Estimation inputs, read from disk or generated in memory.
pub struct Inputs {
    pub panel: Vec<PanelRecord>,
    pub households: Vec<HouseholdInfo>,
    pub intervals: Vec<IntervalRecord>,
    pub engel: Vec<EngelCell>,
    pub truth: Option<Truth>,
}

pub fn read_inputs(dir: &Path) -> CliResult<Inputs> {
    if !dir.is_dir() {
        return Err(CliError::Config(format!("input directory {} does not exist", dir.display())));
    }
    let f = SimFiles::in_dir(dir);
    let truth = if f.truth.is_file() {
        let text = std::fs::read_to_string(&f.truth)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", f.truth.display())))?;
        let t: Truth = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", f.truth.display())))?;
        Some(t)
    } else {
        None
    };
    Ok(Inputs {
        panel: schema::read_panel(&f.panel)?,
        households: schema::read_households(&f.households)?,
        intervals: schema::read_intervals(&f.intervals)?,
        engel: schema::read_engel(&f.engel)?,
        truth,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub coefficient: f64,
    pub se: f64,
    pub t: f64,
    pub n: usize,
    /// Effective first-stage F of the excluded instrument.
    pub f: Option<f64>,
}

impl Coefficient {
    fn from_result(r: &RegressionResult, index: usize) -> Self {
        Self {
            coefficient: r.coefficients[index],
            se: r.se[index],
            t: r.t_stats[index],
            n: r.n_obs,
            f: r.first_stage_f(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongDifferenceRow {
    pub outcome: &'static str,
    pub estimator: &'static str,
    #[serde(flatten)]
    pub estimate: Coefficient,
    pub dropped_zero_outcome: usize,
    pub dropped_exposure: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventStudyRow {
    pub outcome: &'static str,
    pub reference_quarter: i32,
    pub n: usize,
    pub dropped_zero_outcome: usize,
    pub dropped_exposure: usize,
    pub path: Vec<EventCoefficient>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngelRow {
    /// `loglog` or `shares`.
    pub form: &'static str,
    pub activity: Activity,
    /// Elasticity; for the share form, `1 + gamma / mean_share`.
    pub beta: f64,
    pub se: f64,
    pub gamma: Option<f64>,
    pub mean_share: f64,
    pub n: usize,
    pub dropped_zero: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngelSummary {
    pub rows: Vec<EngelRow>,
    pub first_stage_f: Option<f64>,
    pub weak_instrument: bool,
    /// Sum of share-form coefficients and its standard error.
    pub gamma_sum: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationSummary {
    pub inputs: CalibrationInputs,
    pub cells: Vec<CellRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimates {
    pub n_households: usize,
    pub n_panel_rows: usize,
    pub long_difference: Vec<LongDifferenceRow>,
    pub adoption_first_stage: Coefficient,
    pub event_study: Vec<EventStudyRow>,
    pub engel: EngelSummary,
    pub window_contrast: WindowContrast,
    /// Calibration grid at the estimated elasticities and effects; absent
    /// when the estimated elasticities are not positive.
    pub calibration: Option<CalibrationSummary>,
}

impl Estimates {
    pub fn long_difference(&self, outcome: &str, estimator: &str) -> Option<&LongDifferenceRow> {
        self.long_difference
            .iter()
            .find(|r| r.outcome == outcome && r.estimator == estimator)
    }

    pub fn engel_row(&self, form: &str, activity: Activity) -> Option<&EngelRow> {
        self.engel.rows.iter().find(|r| r.form == form && r.activity == activity)
    }
}

fn estimator_name(e: Estimator) -> &'static str {
    match e {
        Estimator::Ols => "ols",
        Estimator::Iv => "iv",
    }
}

fn engel_rows(form: &'static str, e: &EngelEstimates) -> Vec<EngelRow> {
    e.activities
        .iter()
        .enumerate()
        .map(|(i, a)| EngelRow {
            form,
            activity: *a,
            beta: e.beta[i],
            se: e.beta_se[i],
            gamma: e.gamma.as_ref().map(|g| g[i]),
            mean_share: e.mean_share[i],
            n: e.n_obs[i],
            dropped_zero: e.dropped_zero[i],
        })
        .collect()
}

/// Runs every estimator, then calibrates at the estimates.
pub fn estimate_all(inputs: &Inputs, calibration: &crate::config::CalibrationConfig) -> CliResult<Estimates> {
    let quarters: Vec<i32> = inputs.panel.iter().map(|r| r.quarter).collect();
    let last = quarters
        .iter()
        .copied()
        .max()
        .ok_or_else(|| CliError::Data("panel has no rows".into()))?;
    let window = LongDifferenceWindow::standard(last);

    let mut ld = Vec::new();
    for outcome in Outcome::ALL {
        for estimator in [Estimator::Ols, Estimator::Iv] {
            let e = long_difference(&inputs.panel, &inputs.households, window, outcome, estimator, false)?;
            ld.push(LongDifferenceRow {
                outcome: outcome.name(),
                estimator: estimator_name(estimator),
                estimate: Coefficient::from_result(&e.result, 0),
                dropped_zero_outcome: e.dropped_zero_outcome,
                dropped_exposure: e.dropped_exposure,
                warnings: e.result.warnings.clone(),
            });
        }
    }

    let fs = adoption_first_stage(&inputs.households)?;
    let fs_index = fs
        .names
        .iter()
        .position(|n| n == "ln_exposure")
        .ok_or_else(|| CliError::Data("first stage lacks ln_exposure".into()))?;
    let adoption = Coefficient::from_result(&fs, fs_index);

    let exposure = inputs
        .households
        .iter()
        .map(|h| (h.household_id, h.exposure))
        .collect();
    let mut es = Vec::new();
    for outcome in Outcome::ALL {
        let r = event_study(&inputs.panel, &exposure, EVENT_REFERENCE, outcome)?;
        es.push(EventStudyRow {
            outcome: outcome.name(),
            reference_quarter: r.reference_quarter,
            n: r.n_obs,
            dropped_zero_outcome: r.dropped_zero_outcome,
            dropped_exposure: r.dropped_exposure,
            path: r.path,
        });
    }

    let opts = EngelOptions::new(true);
    let loglog = engel_loglog(&inputs.engel, &opts)?;
    let shares = engel_shares(&inputs.engel, &opts)?;
    let mut rows = engel_rows("loglog", &loglog);
    rows.extend(engel_rows("shares", &shares));
    let engel = EngelSummary {
        rows,
        first_stage_f: loglog.first_stage_f,
        weak_instrument: loglog.weak_instrument,
        gamma_sum: shares.gamma_sum,
    };

    let wc = window_contrast(&inputs.intervals)?;

    let beta_l = loglog.beta[0];
    let beta_z = loglog.beta[1];
    let iv = |name: &str| {
        ld.iter()
            .find(|r| r.outcome == name && r.estimator == "iv")
            .map(|r| r.estimate.coefficient)
            .expect("every outcome is estimated")
    };
    let calibration = CalibrationInputs::new(
        beta_z,
        beta_l,
        iv(Category::Leisure.as_str()),
        iv(Category::Productive.as_str()),
        beta_z / beta_l,
    )
    .ok()
    .map(|inputs| CalibrationSummary {
        cells: table8::cell_rows(&inputs, &grid(&inputs, &calibration.eta_bars, &calibration.psis), false, 0.0),
        inputs,
    });

    Ok(Estimates {
        n_households: inputs.households.len(),
        n_panel_rows: inputs.panel.len(),
        long_difference: ld,
        adoption_first_stage: adoption,
        event_study: es,
        engel,
        window_contrast: wc,
        calibration,
    })
}

/// One line of the recovery report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub truth: f64,
    pub tolerance: String,
    pub pass: bool,
}

/// Compares estimates with the generator's ground truth.
pub fn recovery(est: &Estimates, truth: &Truth, tol: &Tolerances) -> Vec<Check> {
    let mut out = Vec::new();
    let k = tol.recovery_se;
    let effects = &truth.config.true_effects;
    // The total has a known effect only when every category effect is zero.
    let mut outcomes: Vec<(&str, f64)> = Vec::new();
    if truth.placebo {
        outcomes.push(("total", 0.0));
    }
    for c in [Category::Leisure, Category::Productive, Category::Mixed, Category::Adcdn] {
        outcomes.push((c.as_str(), effects.get(c)));
    }
    for (name, t) in outcomes {
        if let Some(r) = est.long_difference(name, "iv") {
            out.push(Check {
                name: format!("long difference iv {name}"),
                estimate: r.estimate.coefficient,
                se: Some(r.estimate.se),
                truth: t,
                tolerance: format!("{k} se"),
                pass: (r.estimate.coefficient - t).abs() <= k * r.estimate.se,
            });
        }
    }
    if let Some(f) = est
        .long_difference(Category::Leisure.as_str(), "iv")
        .and_then(|r| r.estimate.f)
    {
        out.push(Check {
            name: "first-stage effective F".into(),
            estimate: f,
            se: None,
            truth: 10.0,
            tolerance: "> 10".into(),
            pass: f > 10.0,
        });
    }
    for (i, a) in Activity::ALL.iter().enumerate() {
        if let Some(r) = est.engel_row("loglog", *a) {
            let t = truth.engel_beta[i];
            out.push(Check {
                name: format!("engel loglog {a}"),
                estimate: r.beta,
                se: Some(r.se),
                truth: t,
                tolerance: format!("{k} se"),
                pass: (r.beta - t).abs() <= k * r.se,
            });
        }
    }
    let gaps = [
        (Category::Productive, truth.config.intervals.gap_productive),
        (Category::Leisure, truth.config.intervals.gap_leisure),
    ];
    for (c, t) in gaps {
        let d = est.window_contrast.diff_pp[c.index()];
        out.push(Check {
            name: format!("window contrast {c} (pp)"),
            estimate: d,
            se: None,
            truth: t,
            tolerance: format!("{} pp", tol.window_pp),
            pass: (d - t).abs() <= tol.window_pp,
        });
    }
    out
}

pub fn render_recovery(checks: &[Check]) -> String {
    let mut s = String::from("Recovery report\n");
    let _ = writeln!(
        s,
        "{:<34} {:>10} {:>8} {:>10} {:>10}  result",
        "check", "estimate", "se", "truth", "tolerance"
    );
    for c in checks {
        let se = c.se.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "{:<34} {:>10.2} {:>8} {:>10.2} {:>10}  {}",
            c.name,
            c.estimate,
            se,
            c.truth,
            c.tolerance,
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    let _ = writeln!(s, "{passed}/{} checks passed", checks.len());
    s
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into())
}

/// Human-readable tables, two decimals.
pub fn render_tables(e: &Estimates) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Long-difference effect of adoption on log browsing");
    let _ = writeln!(
        s,
        "{:<12} {:<4} {:>9} {:>8} {:>8} {:>7} {:>9}",
        "outcome", "est", "coef", "se", "t", "n", "F"
    );
    for r in &e.long_difference {
        let _ = writeln!(
            s,
            "{:<12} {:<4} {:>9.2} {:>8.2} {:>8.2} {:>7} {:>9}",
            r.outcome,
            r.estimator,
            r.estimate.coefficient,
            r.estimate.se,
            r.estimate.t,
            r.estimate.n,
            fmt_opt(r.estimate.f)
        );
    }
    let a = &e.adoption_first_stage;
    let _ = writeln!(
        s,
        "\nAdoption on log exposure: {:.2} (se {:.2}, t {:.2}, n {})",
        a.coefficient, a.se, a.t, a.n
    );

    let _ = writeln!(s, "\nEvent study on log exposure (reference quarter {EVENT_REFERENCE})");
    let quarters: Vec<i32> = e
        .event_study
        .first()
        .map(|r| r.path.iter().map(|c| c.quarter).collect())
        .unwrap_or_default();
    let _ = write!(s, "{:<12}", "outcome");
    for q in &quarters {
        let _ = write!(s, " {:>7}", format!("q{q}"));
    }
    s.push('\n');
    for r in &e.event_study {
        let _ = write!(s, "{:<12}", r.outcome);
        for c in &r.path {
            let _ = write!(s, " {:>7}", fmt_opt(c.coefficient));
        }
        s.push('\n');
    }

    let _ = writeln!(
        s,
        "\nEngel elasticities (IV, first-stage F {})",
        fmt_opt(e.engel.first_stage_f)
    );
    let _ = writeln!(
        s,
        "{:<8} {:<12} {:>8} {:>8} {:>10} {:>6}",
        "form", "activity", "beta", "se", "mean share", "n"
    );
    for r in &e.engel.rows {
        let _ = writeln!(
            s,
            "{:<8} {:<12} {:>8.2} {:>8.2} {:>10.2} {:>6}",
            r.form,
            r.activity.as_str(),
            r.beta,
            r.se,
            r.mean_share,
            r.n
        );
    }

    let w = &e.window_contrast;
    let _ = writeln!(s, "\nChatbot windows against matched never-user intervals (shares, %)");
    let _ = writeln!(s, "{:<12} {:>9} {:>9} {:>9}", "category", "window", "matched", "diff pp");
    for c in Category::ALL {
        let i = c.index();
        let _ = writeln!(
            s,
            "{:<12} {:>9.2} {:>9.2} {:>9.2}",
            c.as_str(),
            100.0 * w.gpt_shares[i],
            100.0 * w.matched_shares[i],
            w.diff_pp[i]
        );
    }
    let _ = writeln!(
        s,
        "cells used {}, dropped {}; windows {}, matched intervals {}",
        w.cells_used, w.cells_dropped, w.gpt_windows_used, w.matched_intervals
    );

    if let Some(c) = &e.calibration {
        let _ = writeln!(
            s,
            "\nCalibration at the estimates (beta_z {:.2}, beta_l {:.2}, leisure {:.2}, productive {:.2})",
            c.inputs.beta_z, c.inputs.beta_l, c.inputs.bgpt_l, c.inputs.bgpt_z
        );
        s.push_str(&table8::render("Scaled productive efficiency gain (%)", &c.cells));
    }
    s
}

const LD_HEADER: [&str; 10] = [
    "outcome",
    "estimator",
    "coefficient",
    "se",
    "t",
    "n",
    "first_stage_f",
    "dropped_zero_outcome",
    "dropped_exposure",
    "warnings",
];
const EVENT_HEADER: [&str; 6] = ["outcome", "reference_quarter", "quarter", "coefficient", "se", "n"];
const ENGEL_HEADER: [&str; 8] = ["form", "activity", "beta", "se", "gamma", "mean_share", "n", "dropped_zero"];
const WINDOW_HEADER: [&str; 4] = ["category", "gpt_share", "matched_share", "diff_pp"];
const RECOVERY_HEADER: [&str; 6] = ["check", "estimate", "se", "truth", "tolerance", "pass"];

fn write_csv_tables(e: &Estimates, dir: &Path) -> CliResult<()> {
    write_csv(
        &dir.join("long_difference.csv"),
        &LD_HEADER,
        e.long_difference.iter().map(|r| {
            vec![
                r.outcome.to_string(),
                r.estimator.to_string(),
                num(r.estimate.coefficient),
                num(r.estimate.se),
                num(r.estimate.t),
                r.estimate.n.to_string(),
                opt_num(r.estimate.f),
                r.dropped_zero_outcome.to_string(),
                r.dropped_exposure.to_string(),
                r.warnings.join("; "),
            ]
        }),
    )?;
    write_csv(
        &dir.join("event_study.csv"),
        &EVENT_HEADER,
        e.event_study.iter().flat_map(|r| {
            r.path.iter().map(move |c| {
                vec![
                    r.outcome.to_string(),
                    r.reference_quarter.to_string(),
                    c.quarter.to_string(),
                    opt_num(c.coefficient),
                    opt_num(c.se),
                    r.n.to_string(),
                ]
            })
        }),
    )?;
    write_csv(
        &dir.join("engel.csv"),
        &ENGEL_HEADER,
        e.engel.rows.iter().map(|r| {
            vec![
                r.form.to_string(),
                r.activity.as_str().to_string(),
                num(r.beta),
                num(r.se),
                opt_num(r.gamma),
                num(r.mean_share),
                r.n.to_string(),
                r.dropped_zero.to_string(),
            ]
        }),
    )?;
    let w = &e.window_contrast;
    write_csv(
        &dir.join("window_contrast.csv"),
        &WINDOW_HEADER,
        Category::ALL.iter().map(|c| {
            let i = c.index();
            vec![
                c.as_str().to_string(),
                num(w.gpt_shares[i]),
                num(w.matched_shares[i]),
                num(w.diff_pp[i]),
            ]
        }),
    )?;
    if let Some(c) = &e.calibration {
        write_csv(&dir.join("calibration.csv"), &table8::HEADER, c.cells.iter().map(table8::csv_row))?;
    }
    Ok(())
}

fn any_override(o: &DgpOverrides) -> bool {
    o.seed.is_some()
        || o.n_households.is_some()
        || o.n_quarters.is_some()
        || o.exposure_strength.is_some()
        || o.confound_strength.is_some()
        || o.rain_elasticity.is_some()
        || o.placebo
}

/// What `cmd_estimate` produced.
pub struct EstimateOutput {
    pub estimates: Estimates,
    /// Absent when no ground truth was available.
    pub recovery: Option<Vec<Check>>,
}

pub fn cmd_estimate(args: &EstimateArgs) -> CliResult<EstimateOutput> {
    let run = RunConfig::load(args.config.config.as_deref())?;
    let inputs = match &args.input {
        Some(dir) => {
            if any_override(&args.dgp) {
                return Err(CliError::Config(
                    "generator flags (--seed, --placebo, ...) apply only without --input".into(),
                ));
            }
            read_inputs(dir)?
        }
        None => {
            let sim = generate(&dgp_with_overrides(&run.dgp, &args.dgp)?)?;
            Inputs {
                panel: sim.panel,
                households: sim.households,
                intervals: sim.intervals,
                engel: sim.engel,
                truth: Some(sim.truth),
            }
        }
    };
    let estimates = estimate_all(&inputs, &run.calibration)?;

    ensure_dir(&args.out)?;
    write_json(&args.out.join("estimates.json"), &estimates)?;
    if args.format == Format::Csv {
        write_csv_tables(&estimates, &args.out)?;
    }
    let tables = render_tables(&estimates);
    write_text(&args.out.join("tables.txt"), &tables)?;
    print!("{tables}");
    for r in &estimates.long_difference {
        for w in &r.warnings {
            crate::warn(&format!("{} {}: {w}", r.outcome, r.estimator));
        }
    }
    if estimates.engel.weak_instrument {
        crate::warn("Engel first stage is weak");
    }
    if estimates.calibration.is_none() {
        crate::warn("estimated Engel elasticities are not positive; calibration skipped");
    }

    let recovery = match &inputs.truth {
        Some(truth) => {
            let checks = recovery(&estimates, truth, &run.tolerances);
            let report = render_recovery(&checks);
            write_text(&args.out.join("recovery.txt"), &report)?;
            match args.format {
                Format::Json => write_json(&args.out.join("recovery.json"), &checks)?,
                Format::Csv => write_csv(
                    &args.out.join("recovery.csv"),
                    &RECOVERY_HEADER,
                    checks.iter().map(|c| {
                        vec![
                            c.name.clone(),
                            num(c.estimate),
                            opt_num(c.se),
                            num(c.truth),
                            c.tolerance.clone(),
                            c.pass.to_string(),
                        ]
                    }),
                )?,
            }
            print!("\n{report}");
            Some(checks)
        }
        None => {
            crate::warn("no truth.json in the input directory; recovery report skipped");
            None
        }
    };
    Ok(EstimateOutput { estimates, recovery })
}
