use std::path::Path;

use serde::{Deserialize, Serialize};
use timealloc_core::records::{EngelCell, HouseholdInfo, IntervalRecord, PanelRecord};
use timealloc_core::synthpanel::{
    generate_engel_panel, generate_intervals, generate_long_difference, CategoryEffects, DgpConfig,
};

use crate::args::SimulateArgs;
use crate::config::{dgp_with_overrides, RunConfig};
use crate::error::CliResult;
use crate::files::{ensure_dir, write_csv, write_json, SimFiles};
use crate::schema;

/// Ground truth written next to a simulated panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truth {
    /// Every adoption effect is zero.
    pub placebo: bool,
    pub config: DgpConfig,
    /// Engel elasticities `[leisure, productive, other]` at the base point.
    pub engel_beta: [f64; 3],
    pub n_adopters: usize,
}

/// All generated tables of one configuration.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub panel: Vec<PanelRecord>,
    pub households: Vec<HouseholdInfo>,
    pub counterfactual: Vec<PanelRecord>,
    pub intervals: Vec<IntervalRecord>,
    pub engel: Vec<EngelCell>,
    pub truth: Truth,
}

pub fn generate(cfg: &DgpConfig) -> CliResult<Simulation> {
    let (panel, ld_truth) = generate_long_difference(cfg)?;
    let (engel, engel_truth) = generate_engel_panel(cfg)?;
    let intervals = generate_intervals(cfg)?;
    let households = ld_truth.household_info();
    let counterfactual = ld_truth.counterfactual_records(&panel);
    let truth = Truth {
        placebo: cfg.true_effects == CategoryEffects::zero(),
        config: cfg.clone(),
        engel_beta: engel_truth.beta,
        n_adopters: households.iter().filter(|h| h.chatgpt_ever_used).count(),
    };
    Ok(Simulation {
        panel,
        households,
        counterfactual,
        intervals,
        engel,
        truth,
    })
}

pub fn write(sim: &Simulation, dir: &Path) -> CliResult<()> {
    ensure_dir(dir)?;
    let f = SimFiles::in_dir(dir);
    write_csv(&f.panel, &schema::PANEL, sim.panel.iter().map(schema::panel_row))?;
    write_csv(&f.households, &schema::HOUSEHOLDS, sim.households.iter().map(schema::household_row))?;
    write_csv(&f.intervals, &schema::INTERVALS, sim.intervals.iter().map(schema::interval_row))?;
    write_csv(&f.engel, &schema::ENGEL, sim.engel.iter().map(schema::engel_row))?;
    write_csv(
        &f.counterfactual,
        &schema::COUNTERFACTUAL,
        sim.counterfactual.iter().map(schema::counterfactual_row),
    )?;
    write_json(&f.truth, &sim.truth)
}

pub fn summary(sim: &Simulation) -> String {
    let cfg = &sim.truth.config;
    format!(
        "households: {}\nquarters: {} ({}..={})\npanel rows: {}\nadopters: {}\nintervals: {} ({} chatbot windows)\nengel cells: {}\nplacebo: {}\n",
        sim.households.len(),
        cfg.n_quarters,
        DgpConfig::FIRST_QUARTER,
        cfg.last_quarter(),
        sim.panel.len(),
        sim.truth.n_adopters,
        sim.intervals.len(),
        sim.intervals.iter().filter(|r| r.is_gpt_window).count(),
        sim.engel.len(),
        sim.truth.placebo,
    )
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<Simulation> {
    let run = RunConfig::load(args.config.config.as_deref())?;
    let cfg = dgp_with_overrides(&run.dgp, &args.dgp)?;
    let sim = generate(&cfg)?;
    write(&sim, &args.out)?;
    print!("{}", summary(&sim));
    Ok(sim)
}
