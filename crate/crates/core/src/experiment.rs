//! Monte-Carlo experiment runner.
//!
//! An experiment is a grid of (drop, realization) cells. A drop fixes the UE
//! placement, a realization fixes the channels and the random starting
//! association. Every solver in a cell sees the same channels and the same
//! start. Cells run in parallel and results come back in grid order, so
//! outputs do not depend on the worker count.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{build_channel_set, write_channel_dump, ChannelSet};
use crate::error::{Error, Result};
use crate::matching::{random_feasible_activation, run_matching_algorithm, AssociationOutcome, Game, DEFAULT_MAX_ROUNDS};
use crate::metrics::{aggregate, write_records_csv, write_summary_csv, GroupBy, GroupSummary, RunRecord, Solver};
use crate::netgen::{generate_topology, NetworkConfig};
use crate::oracle::{brute_force_optimum, EnumerationBudget};
use crate::rate::{Activation, RateEngine, RateMatrix};
use crate::scenario::ScenarioFile;
use crate::wcs::{default_max_moves, run_wcs, MoveKind};

/// Random stream tags mixed into derived seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum SeedStream {
    Topology = 1,
    Channel = 2,
    InitialAssociation = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one random stream of one cell. The topology stream ignores the
/// realization so all realizations of a drop share UE positions.
pub fn derive_seed(base: u64, drop: usize, realization: usize, stream: SeedStream) -> u64 {
    let realization = match stream {
        SeedStream::Topology => 0,
        _ => realization as u64 + 1,
    };
    [drop as u64, realization, stream as u64]
        .into_iter()
        .fold(splitmix64(base), |acc, x| splitmix64(acc ^ splitmix64(x)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub scenario: String,
    pub config: NetworkConfig,
    pub solvers: Vec<Solver>,
    pub num_drops: usize,
    pub num_realizations: usize,
    pub base_seed: u64,
    pub max_rounds: usize,
    /// `None` means `10 K`.
    pub wcs_max_moves: Option<usize>,
    pub oracle_budget: EnumerationBudget,
    /// Measure solver wall time. Off by default so reruns are byte-identical.
    pub timing: bool,
}

impl ExperimentPlan {
    pub fn new(scenario: impl Into<String>, config: NetworkConfig) -> Self {
        let base_seed = config.rng_seed;
        Self {
            scenario: scenario.into(),
            config,
            solvers: vec![Solver::Ea, Solver::Da, Solver::Wcs],
            num_drops: 1,
            num_realizations: 1,
            base_seed,
            max_rounds: DEFAULT_MAX_ROUNDS,
            wcs_max_moves: None,
            oracle_budget: EnumerationBudget::default(),
            timing: false,
        }
    }

    pub fn from_scenario(file: ScenarioFile) -> Self {
        let mut plan = Self::new(file.name, file.config);
        let p = file.plan;
        if let Some(s) = p.solvers {
            plan.solvers = s;
        }
        plan.num_drops = p.drops.unwrap_or(plan.num_drops);
        plan.num_realizations = p.realizations.unwrap_or(plan.num_realizations);
        plan.max_rounds = p.max_rounds.unwrap_or(plan.max_rounds);
        plan.wcs_max_moves = p.wcs_max_moves.or(plan.wcs_max_moves);
        if let Some(b) = p.oracle_budget {
            plan.oracle_budget = EnumerationBudget { max_assignments: b };
        }
        plan
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let mut issues = Vec::new();
        if self.num_drops == 0 {
            issues.push("drops must be at least 1");
        }
        if self.num_realizations == 0 {
            issues.push("realizations must be at least 1");
        }
        if self.solvers.is_empty() {
            issues.push("no solvers selected");
        }
        if self.max_rounds == 0 {
            issues.push("max_rounds must be at least 1");
        }
        if !issues.is_empty() {
            return Err(Error::InvalidConfig(
                issues.into_iter().map(|s| crate::error::ConfigIssue::BadParameter(s.into())).collect(),
            ));
        }
        if self.solvers.contains(&Solver::Oracle) {
            self.oracle_budget.check(self.config.num_ues, &self.config.quotas)?;
        }
        Ok(())
    }

    /// The plan moved to a sweep point with `num_bs` BSs (one macro) and
    /// `num_ues` UEs, using the given macro and small-cell quotas.
    pub fn at_point(&self, num_bs: usize, num_ues: usize, macro_quota: usize, small_quota: usize) -> Self {
        let mut plan = self.clone();
        let cfg = &mut plan.config;
        cfg.num_macro = 1;
        cfg.num_small = num_bs.saturating_sub(1);
        cfg.num_ues = num_ues;
        cfg.quotas = std::iter::once(macro_quota)
            .chain(std::iter::repeat_n(small_quota, cfg.num_small))
            .collect();
        plan.scenario = format!("{}_J{}_K{}", self.scenario, num_bs, num_ues);
        plan
    }
}

/// Everything one cell produced.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub drop: usize,
    pub realization: usize,
    pub initial: Activation,
    pub outcomes: Vec<(Solver, AssociationOutcome)>,
    pub records: Vec<RunRecord>,
    /// Rate matrix at the initial association.
    pub initial_rates: RateMatrix,
    pub channels: ChannelSet,
}

/// Channels and starting association of one cell.
pub fn cell_inputs(plan: &ExperimentPlan, drop: usize, realization: usize) -> Result<(ChannelSet, Activation)> {
    let cfg = &plan.config;
    let topo = generate_topology(cfg, derive_seed(plan.base_seed, drop, realization, SeedStream::Topology))?;
    let mut chan_rng = ChaCha8Rng::seed_from_u64(derive_seed(plan.base_seed, drop, realization, SeedStream::Channel));
    let channels = build_channel_set(&topo, cfg, &mut chan_rng)?;
    let mut init_rng =
        ChaCha8Rng::seed_from_u64(derive_seed(plan.base_seed, drop, realization, SeedStream::InitialAssociation));
    let initial = random_feasible_activation(&cfg.quotas, cfg.num_ues, &mut init_rng)?;
    Ok((channels, initial))
}

fn solve(plan: &ExperimentPlan, solver: Solver, engine: &RateEngine<'_>, initial: &Activation) -> Result<AssociationOutcome> {
    let quotas = &plan.config.quotas;
    match solver {
        Solver::Ea => run_matching_algorithm(Game::EarlyAcceptance, engine, quotas, initial.clone(), plan.max_rounds),
        Solver::Da => run_matching_algorithm(Game::DeferredAcceptance, engine, quotas, initial.clone(), plan.max_rounds),
        Solver::Wcs => {
            let cap = plan.wcs_max_moves.unwrap_or_else(|| default_max_moves(plan.config.num_ues));
            run_wcs(initial.clone(), engine, quotas, cap)
        }
        Solver::Oracle => {
            let initial_sum_rate = engine.sum_rate(initial)?;
            let (activation, sum_rate) = brute_force_optimum(engine, quotas, plan.oracle_budget)?;
            Ok(AssociationOutcome {
                activation,
                sum_rate,
                initial_sum_rate,
                trajectory: vec![initial_sum_rate, sum_rate],
                rounds: Vec::new(),
                moves: Vec::new(),
            })
        }
    }
}

/// Run every solver of the plan on one cell.
pub fn run_cell(plan: &ExperimentPlan, drop: usize, realization: usize) -> Result<CellResult> {
    let (channels, initial) = cell_inputs(plan, drop, realization)?;
    let engine = RateEngine::new(&channels, &plan.config)?;
    let initial_rates = engine.rate_matrix(&initial)?;
    let mut outcomes = Vec::with_capacity(plan.solvers.len());
    let mut records = Vec::with_capacity(plan.solvers.len());
    for &solver in &plan.solvers {
        let start = Instant::now();
        let outcome = solve(plan, solver, &engine, &initial)?;
        let wall_time_s = if plan.timing { start.elapsed().as_secs_f64() } else { 0.0 };
        // game metrics describe the last round played
        let (per_ue_applications, per_ue_delay) = match outcome.final_game() {
            Some(g) => (g.applications.clone(), g.acceptance_iteration.clone()),
            None => (Vec::new(), Vec::new()),
        };
        records.push(RunRecord {
            scenario: plan.scenario.clone(),
            drop,
            realization,
            seed: derive_seed(plan.base_seed, drop, realization, SeedStream::Channel),
            solver,
            sum_rate: outcome.sum_rate,
            per_ue_applications,
            per_ue_delay,
            rounds: outcome.num_rounds(),
            wall_time_s,
        });
        outcomes.push((solver, outcome));
    }
    Ok(CellResult {
        drop,
        realization,
        initial,
        outcomes,
        records,
        initial_rates,
        channels,
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub plan: ExperimentPlan,
    pub cells: Vec<CellResult>,
    pub records: Vec<RunRecord>,
    pub summaries: Vec<GroupSummary>,
}

pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    plan.validate()?;
    let grid: Vec<(usize, usize)> = (0..plan.num_drops)
        .flat_map(|d| (0..plan.num_realizations).map(move |r| (d, r)))
        .collect();
    let cells = grid
        .into_par_iter()
        .map(|(d, r)| run_cell(plan, d, r))
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<RunRecord> = cells.iter().flat_map(|c| c.records.iter().cloned()).collect();
    let summaries = aggregate(&records, GroupBy::Solver)?;
    Ok(ExperimentResult {
        plan: plan.clone(),
        cells,
        records,
        summaries,
    })
}

/// Which optional files [`write_outputs`] produces.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OutputOptions {
    /// Per-round and per-move traces.
    pub verbose: bool,
    pub dump_rates: bool,
    pub dump_channels: bool,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct JsonSummary<'a> {
    scenario: &'a str,
    base_seed: u64,
    drops: usize,
    realizations: usize,
    groups: &'a [GroupSummary],
}

fn write_rounds_csv<W: Write>(result: &ExperimentResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "scenario,drop,realization,solver,round,sum_rate_before,sum_rate_after,game_iterations")?;
    for cell in &result.cells {
        for (solver, outcome) in &cell.outcomes {
            for r in &outcome.rounds {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    result.plan.scenario,
                    cell.drop,
                    cell.realization,
                    solver,
                    r.round,
                    r.sum_rate_before,
                    r.sum_rate_after,
                    r.game.total_iterations
                )?;
            }
        }
    }
    Ok(())
}

fn write_moves_csv<W: Write>(result: &ExperimentResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "scenario,drop,realization,step,ue,kind,partner,from,to,sum_rate_before,sum_rate_after,escalated")?;
    let opt = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
    for cell in &result.cells {
        for (_, outcome) in &cell.outcomes {
            for (step, m) in outcome.moves.iter().enumerate() {
                let (kind, partner, from, to) = match m.kind {
                    MoveKind::Relocate { from, to } => ("relocate", None, from, to),
                    MoveKind::Swap { partner, from, to } => ("swap", Some(partner), Some(from), to),
                };
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    result.plan.scenario,
                    cell.drop,
                    cell.realization,
                    step + 1,
                    m.ue,
                    kind,
                    opt(partner),
                    opt(from),
                    to,
                    m.sum_rate_before,
                    m.sum_rate_after,
                    m.escalated
                )?;
            }
        }
    }
    Ok(())
}

/// Write `records.csv`, `summary.csv` and `summary.json` into `dir`, plus
/// the optional traces and dumps. Returns the paths written.
pub fn write_outputs(result: &ExperimentResult, dir: &Path, options: OutputOptions) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut emit = |name: String, f: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, f)?;
        written.push(path);
        Ok(())
    };
    emit("records.csv".into(), &|w| write_records_csv(&result.records, w))?;
    emit("summary.csv".into(), &|w| write_summary_csv(&result.summaries, w))?;
    let json = serde_json::to_string_pretty(&JsonSummary {
        scenario: &result.plan.scenario,
        base_seed: result.plan.base_seed,
        drops: result.plan.num_drops,
        realizations: result.plan.num_realizations,
        groups: &result.summaries,
    })?;
    emit("summary.json".into(), &|w| writeln!(w, "{json}"))?;
    if options.verbose {
        emit("rounds.csv".into(), &|w| write_rounds_csv(result, w))?;
        emit("moves.csv".into(), &|w| write_moves_csv(result, w))?;
    }
    for cell in &result.cells {
        let tag = format!("d{}_r{}", cell.drop, cell.realization);
        if options.dump_rates {
            emit(format!("rates_{tag}.csv"), &|w| cell.initial_rates.write_csv(w))?;
        }
        if options.dump_channels {
            emit(format!("channels_{tag}.txt"), &|w| write_channel_dump(&cell.channels, w))?;
        }
    }
    Ok(written)
}

/// Fixed-width comparison table of the per-solver summaries.
pub fn format_table(summaries: &[GroupSummary]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<16} {:>6} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "solver", "runs", "sum_rate", "p25", "p75", "mean_apps", "max_apps", "mean_delay"
    );
    for g in summaries {
        let _ = write!(
            s,
            "{:<16} {:>6} {:>10.3} {:>10.3} {:>10.3}",
            g.group, g.sum_rate.count, g.sum_rate.mean, g.sum_rate.percentile_25, g.sum_rate.percentile_75
        );
        // solvers that play no game have no application or delay counts
        if g.delay_cdf.is_empty() {
            let _ = writeln!(s, " {:>10} {:>10} {:>10}", "-", "-", "-");
        } else {
            let _ = writeln!(
                s,
                " {:>10.3} {:>10.3} {:>10.3}",
                g.mean_applications.mean, g.max_applications.mean, g.mean_delay.mean
            );
        }
    }
    s
}

/// One sweep point: its experiment and the (J, K) it was run at.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub num_bs: usize,
    pub num_ues: usize,
    pub result: ExperimentResult,
}

/// Quotas held fixed across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepQuotas {
    pub macro_quota: usize,
    pub small_quota: usize,
}

impl Default for SweepQuotas {
    fn default() -> Self {
        Self {
            macro_quota: 6,
            small_quota: 3,
        }
    }
}

pub const DEFAULT_SWEEP_POINTS: [(usize, usize); 3] = [(3, 12), (5, 18), (7, 24)];

/// Run the plan at each `(J, K)` point with fixed quotas.
pub fn run_scaling_sweep(plan: &ExperimentPlan, points: &[(usize, usize)], quotas: SweepQuotas) -> Result<Vec<SweepPoint>> {
    let plans: Vec<(usize, usize, ExperimentPlan)> = points
        .iter()
        .map(|&(j, k)| (j, k, plan.at_point(j, k, quotas.macro_quota, quotas.small_quota)))
        .collect();
    for (_, _, p) in &plans {
        p.validate()?;
    }
    plans
        .into_iter()
        .map(|(num_bs, num_ues, p)| {
            Ok(SweepPoint {
                num_bs,
                num_ues,
                result: run_experiment(&p)?,
            })
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: &str =
    "num_bs,num_ues,solver,runs,mean_apps,mean_apps_p25,mean_apps_p75,worst_apps,mean_delay,mean_delay_p25,mean_delay_p75,worst_delay,sum_rate";

/// Per-point application and delay aggregates, one row per solver.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for p in points {
        for g in &p.result.summaries {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                p.num_bs,
                p.num_ues,
                g.group,
                g.sum_rate.count,
                g.mean_applications.mean,
                g.mean_applications.percentile_25,
                g.mean_applications.percentile_75,
                g.max_applications.mean,
                g.mean_delay.mean,
                g.mean_delay.percentile_25,
                g.mean_delay.percentile_75,
                g.max_delay.mean,
                g.sum_rate.mean
            )?;
        }
    }
    Ok(())
}

/// Write `sweep.csv` plus each point's outputs under `J{j}_K{k}/`.
pub fn write_sweep_outputs(points: &[SweepPoint], dir: &Path, options: OutputOptions) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("sweep.csv");
    write_file(&path, |w| write_sweep_csv(points, w))?;
    let mut written = vec![path];
    for p in points {
        let sub = dir.join(format!("J{}_K{}", p.num_bs, p.num_ues));
        written.extend(write_outputs(&p.result, &sub, options)?);
    }
    Ok(written)
}
