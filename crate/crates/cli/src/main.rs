//! `hetnet-assoc`: run association experiments from a scenario file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hetnet_assoc::experiment::{
    format_table, run_experiment, run_scaling_sweep, write_outputs, write_sweep_outputs, ExperimentPlan,
    ExperimentResult, OutputOptions, SweepQuotas, DEFAULT_SWEEP_POINTS,
};
use hetnet_assoc::matching::build_preferences;
use hetnet_assoc::metrics::{parse_solvers, Solver};
use hetnet_assoc::netgen::NetworkConfig;
use hetnet_assoc::oracle::find_blocking_pairs;
use hetnet_assoc::scenario::load_scenario;
use hetnet_assoc::{Error, Result};

#[derive(Parser)]
#[command(name = "hetnet-assoc", version, about = "User association experiments for two-tier mmWave HetNets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every solver on each (drop, realization) cell and summarise.
    Run(Common),
    /// Repeat the experiment over growing (J, K) points with fixed quotas.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Sweep points as `JxK`, comma separated.
        #[arg(long, default_value = "3x12,5x18,7x24")]
        points: String,
        #[arg(long, default_value_t = SweepQuotas::default().macro_quota)]
        macro_quota: usize,
        #[arg(long, default_value_t = SweepQuotas::default().small_quota)]
        small_quota: usize,
    },
    /// Compare each solver with the exhaustive optimum and scan DA games for
    /// blocking pairs.
    OracleCheck(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file; the built-in desk scenario when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma list of ea, da, wcs, oracle.
    #[arg(long)]
    solvers: Option<String>,
    #[arg(long)]
    drops: Option<usize>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Also write per-round and per-move traces.
    #[arg(long)]
    verbose: bool,
    /// Record solver wall time (outputs are then no longer reproducible).
    #[arg(long)]
    timing: bool,
    /// Write the initial rate matrix of every cell.
    #[arg(long)]
    dump_rates: bool,
    /// Write the channel matrices of every cell.
    #[arg(long)]
    dump_channels: bool,
}

impl Common {
    fn plan(&self) -> Result<ExperimentPlan> {
        let mut plan = match &self.config {
            Some(path) => ExperimentPlan::from_scenario(load_scenario(path)?),
            None => ExperimentPlan::new("desk", NetworkConfig::default()),
        };
        if let Some(seed) = self.seed {
            plan.base_seed = seed;
        }
        if let Some(list) = &self.solvers {
            plan.solvers = parse_solvers(list).map_err(bad_flag)?;
        }
        if let Some(d) = self.drops {
            plan.num_drops = d;
        }
        if let Some(r) = self.realizations {
            plan.num_realizations = r;
        }
        plan.timing = self.timing;
        Ok(plan)
    }

    fn output_options(&self) -> OutputOptions {
        OutputOptions {
            verbose: self.verbose,
            dump_rates: self.dump_rates,
            dump_channels: self.dump_channels,
        }
    }
}

fn bad_flag(message: String) -> Error {
    Error::InvalidConfig(vec![hetnet_assoc::ConfigIssue::BadParameter(message)])
}

fn parse_points(text: &str) -> Result<Vec<(usize, usize)>> {
    text.split(',')
        .map(|p| {
            let (j, k) = p
                .trim()
                .split_once(['x', 'X'])
                .ok_or_else(|| bad_flag(format!("sweep point `{p}` must look like 5x18")))?;
            let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad_flag(format!("bad sweep point `{p}`")));
            Ok((num(j)?, num(k)?))
        })
        .collect()
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}

/// Mean ratio of each solver's sum-rate to the optimum, plus the blocking
/// pairs found in first-round DA games against the preferences they used.
fn oracle_report(result: &ExperimentResult) -> String {
    let mut ratios: Vec<(Solver, f64)> = Vec::new();
    let mut blocking = 0;
    let mut da_games = 0;
    for cell in &result.cells {
        let best = cell
            .outcomes
            .iter()
            .find(|(s, _)| *s == Solver::Oracle)
            .map(|(_, o)| o.sum_rate)
            .expect("oracle-check always runs the oracle");
        for (solver, outcome) in &cell.outcomes {
            if *solver == Solver::Oracle {
                continue;
            }
            let r = if best > 0.0 { outcome.sum_rate / best } else { 1.0 };
            match ratios.iter_mut().find(|(s, _)| s == solver) {
                Some((_, acc)) => *acc += r,
                None => ratios.push((*solver, r)),
            }
            if *solver == Solver::Da {
                if let Some(first) = outcome.rounds.first() {
                    let prefs = build_preferences(&cell.initial_rates);
                    blocking += find_blocking_pairs(&first.game.matching, &prefs, &result.plan.config.quotas).len();
                    da_games += 1;
                }
            }
        }
    }
    let n = result.cells.len() as f64;
    let mut s = String::new();
    let _ = writeln!(s, "{:<8} {:>14}", "solver", "of_optimum");
    for (solver, acc) in ratios {
        let _ = writeln!(s, "{:<8} {:>14.4}", solver.as_str(), acc / n);
    }
    if da_games > 0 {
        let _ = writeln!(s, "blocking pairs in {da_games} DA games: {blocking}");
    }
    s
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    Ok(path)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => {
            let plan = common.plan()?;
            let result = run_experiment(&plan)?;
            report_written(&write_outputs(&result, &common.out, common.output_options())?);
            print!("{}", format_table(&result.summaries));
        }
        Command::Sweep {
            common,
            points,
            macro_quota,
            small_quota,
        } => {
            let plan = common.plan()?;
            let points = if points.trim().is_empty() {
                DEFAULT_SWEEP_POINTS.to_vec()
            } else {
                parse_points(&points)?
            };
            let quotas = SweepQuotas {
                macro_quota,
                small_quota,
            };
            let results = run_scaling_sweep(&plan, &points, quotas)?;
            report_written(&write_sweep_outputs(&results, &common.out, common.output_options())?);
            for p in &results {
                println!("J={} K={}", p.num_bs, p.num_ues);
                print!("{}", format_table(&p.result.summaries));
            }
        }
        Command::OracleCheck(common) => {
            let mut plan = common.plan()?;
            if !plan.solvers.contains(&Solver::Oracle) {
                plan.solvers.push(Solver::Oracle);
            }
            let result = run_experiment(&plan)?;
            let mut written = write_outputs(&result, &common.out, common.output_options())?;
            let report = oracle_report(&result);
            written.push(write_text(&common.out, "oracle_check.txt", &report)?);
            report_written(&written);
            print!("{report}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
