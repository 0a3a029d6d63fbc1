use std::fmt::Write as _;

use serde::Serialize;
use timealloc_core::calibration::{
    grid, CalibrationInputs, GridEntry, DEFAULT_ETA_BARS, DEFAULT_PSIS, PUBLISHED_GRID,
};

use crate::args::{Format, Table8Args};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::files::{ensure_dir, num, opt_num, write_csv, write_json, write_text};

pub const HEADER: [&str; 10] = [
    "eta_bar",
    "psi",
    "eta_z",
    "eta_l",
    "delta_z",
    "scaled_gain_pct",
    "published_pct",
    "deviation_pp",
    "status",
    "note",
];

/// One grid cell as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRow {
    pub eta_bar: f64,
    pub psi: f64,
    pub eta_z: f64,
    pub eta_l: f64,
    pub delta_z: Option<f64>,
    pub scaled_gain_pct: Option<f64>,
    pub published_pct: Option<f64>,
    pub deviation_pp: Option<f64>,
    /// `ok`, `mismatch`, `bound_violation` or `no_solution`.
    pub status: String,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table8 {
    pub inputs: CalibrationInputs,
    /// Inputs equal the published estimates, so cells are checked against
    /// the published grid.
    pub golden: bool,
    pub tolerance_pp: f64,
    pub cells: Vec<CellRow>,
    /// Largest absolute change from using `beta_z / beta_l` instead of the
    /// rounded ratio, when `--strict-ratio` is set.
    pub strict_ratio_shift_pp: Option<f64>,
}

impl Table8 {
    pub fn failures(&self) -> Vec<&CellRow> {
        self.cells.iter().filter(|c| c.status != "ok").collect()
    }
}

pub fn published_value(eta_bar: f64, psi: f64) -> Option<f64> {
    let i = DEFAULT_ETA_BARS.iter().position(|e| *e == eta_bar)?;
    let j = DEFAULT_PSIS.iter().position(|p| *p == psi)?;
    Some(PUBLISHED_GRID[i][j])
}

/// Grid rows with the published comparison filled in when `golden` is set.
pub fn cell_rows(inputs: &CalibrationInputs, entries: &[GridEntry], golden: bool, tol_pp: f64) -> Vec<CellRow> {
    entries
        .iter()
        .map(|e| {
            let published = if golden { published_value(e.eta_bar, e.psi) } else { None };
            let mut row = CellRow {
                eta_bar: e.eta_bar,
                psi: e.psi,
                eta_z: inputs.eta_z(e.eta_bar),
                eta_l: inputs.eta_l(e.eta_bar),
                delta_z: None,
                scaled_gain_pct: None,
                published_pct: published,
                deviation_pp: None,
                status: "ok".into(),
                note: e.bound_violation.clone().unwrap_or_default(),
            };
            match &e.outcome {
                Ok(cell) => {
                    row.delta_z = Some(cell.delta_z);
                    row.scaled_gain_pct = Some(cell.scaled_gain_pct);
                    if let Some(p) = published {
                        let d = cell.scaled_gain_pct - p;
                        row.deviation_pp = Some(d);
                        if !(d.abs() <= tol_pp) {
                            row.status = "mismatch".into();
                        }
                    }
                    if e.bound_violation.is_some() {
                        row.status = "bound_violation".into();
                    }
                }
                Err(err) => {
                    row.status = "no_solution".into();
                    row.note = err.to_string();
                }
            }
            row
        })
        .collect()
}

pub fn csv_row(c: &CellRow) -> Vec<String> {
    vec![
        num(c.eta_bar),
        num(c.psi),
        num(c.eta_z),
        num(c.eta_l),
        opt_num(c.delta_z),
        opt_num(c.scaled_gain_pct),
        opt_num(c.published_pct),
        opt_num(c.deviation_pp),
        c.status.clone(),
        c.note.clone(),
    ]
}

/// Aligned table: one row per `eta_bar`, one column per `psi`.
pub fn render(title: &str, cells: &[CellRow]) -> String {
    let mut eta_bars: Vec<f64> = Vec::new();
    let mut psis: Vec<f64> = Vec::new();
    for c in cells {
        if !eta_bars.contains(&c.eta_bar) {
            eta_bars.push(c.eta_bar);
        }
        if !psis.contains(&c.psi) {
            psis.push(c.psi);
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let _ = write!(out, "{:>8} {:>8} {:>8}", "eta_bar", "eta_z", "eta_l");
    for p in &psis {
        let _ = write!(out, " {:>10}", format!("psi={p:.2}"));
    }
    out.push('\n');
    for eb in &eta_bars {
        let first = cells.iter().find(|c| c.eta_bar == *eb).expect("row exists");
        let _ = write!(out, "{:>8.2} {:>8.2} {:>8.2}", eb, first.eta_z, first.eta_l);
        for p in &psis {
            let v = cells
                .iter()
                .find(|c| c.eta_bar == *eb && c.psi == *p)
                .and_then(|c| c.scaled_gain_pct);
            match v {
                Some(v) => {
                    let _ = write!(out, " {v:>10.2}");
                }
                None => {
                    let _ = write!(out, " {:>10}", "n/a");
                }
            }
        }
        out.push('\n');
    }
    out
}

fn resolve_inputs(args: &Table8Args, run: &RunConfig) -> CliResult<(CalibrationInputs, Vec<f64>, Vec<f64>)> {
    let c = &run.calibration;
    let inputs = CalibrationInputs::new(
        args.beta_z.unwrap_or(c.beta_z),
        args.beta_l.unwrap_or(c.beta_l),
        args.bgpt_l.unwrap_or(c.bgpt_l),
        args.bgpt_z.unwrap_or(c.bgpt_z),
        args.ratio_r.unwrap_or(c.ratio_r),
    )?;
    let eta_bars = if args.eta_bars.is_empty() { c.eta_bars.clone() } else { args.eta_bars.clone() };
    let psis = if args.psis.is_empty() { c.psis.clone() } else { args.psis.clone() };
    if eta_bars.is_empty() || psis.is_empty() {
        return Err(CliError::Config("eta_bar and psi lists must not be empty".into()));
    }
    Ok((inputs, eta_bars, psis))
}

/// Builds the grid without writing anything.
pub fn compute(args: &Table8Args) -> CliResult<Table8> {
    let run = RunConfig::load(args.config.config.as_deref())?;
    let (rounded, eta_bars, psis) = resolve_inputs(args, &run)?;
    let golden = rounded == CalibrationInputs::published();
    let inputs = if args.strict_ratio { rounded.with_exact_ratio() } else { rounded };
    let entries = grid(&inputs, &eta_bars, &psis);
    let tol = run.tolerances.golden_pp;
    let cells = cell_rows(&inputs, &entries, golden, tol);
    let strict_ratio_shift_pp = if args.strict_ratio {
        let base = grid(&rounded, &eta_bars, &psis);
        base.iter()
            .zip(&entries)
            .filter_map(|(a, b)| match (&a.outcome, &b.outcome) {
                (Ok(x), Ok(y)) => Some((x.scaled_gain_pct - y.scaled_gain_pct).abs()),
                _ => None,
            })
            .reduce(f64::max)
    } else {
        None
    };
    Ok(Table8 {
        inputs,
        golden,
        tolerance_pp: tol,
        cells,
        strict_ratio_shift_pp,
    })
}

/// Writes the grid, prints the aligned table and applies the golden check.
pub fn cmd_reproduce_table8(args: &Table8Args) -> CliResult<Table8> {
    let t = compute(args)?;
    let text = render("Scaled productive efficiency gain (%)", &t.cells);
    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        match args.format {
            Format::Csv => write_csv(&dir.join("table8.csv"), &HEADER, t.cells.iter().map(csv_row))?,
            Format::Json => write_json(&dir.join("table8.json"), &t)?,
        }
        write_text(&dir.join("table8.txt"), &text)?;
    }
    print!("{text}");
    if let Some(s) = t.strict_ratio_shift_pp {
        println!(
            "strict ratio r = {:.6}: largest change from rounded ratio {s:.4} pp",
            t.inputs.ratio_r
        );
    }
    let failures = t.failures();
    for f in &failures {
        crate::warn(&format!(
            "eta_bar={} psi={}: {}{}",
            f.eta_bar,
            f.psi,
            f.status,
            match (f.deviation_pp, f.note.is_empty()) {
                (Some(d), _) => format!(" (deviation {d:+.4} pp)"),
                (None, false) => format!(" ({})", f.note),
                (None, true) => String::new(),
            }
        ));
    }
    if t.golden {
        let matched = t.cells.iter().filter(|c| c.published_pct.is_some() && c.status == "ok").count();
        let expected = t.cells.iter().filter(|c| c.published_pct.is_some()).count();
        println!(
            "golden check: {matched}/{expected} published cells within {} pp, {} failing cells",
            t.tolerance_pp,
            failures.len()
        );
        if !failures.is_empty() {
            return Err(CliError::Verification(format!(
                "{} of {} cells failed the golden check",
                failures.len(),
                t.cells.len()
            )));
        }
    } else {
        println!("golden check skipped: inputs differ from the published estimates");
        let unsolved = t.cells.iter().filter(|c| c.status == "no_solution").count();
        if unsolved > 0 {
            return Err(CliError::Data(format!("{unsolved} cells have no solution")));
        }
    }
    Ok(t)
}
