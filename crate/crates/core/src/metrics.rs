//! Per-run records and their summaries.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Association solver tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Solver {
    Ea,
    Da,
    Wcs,
    Oracle,
}

impl Solver {
    pub const ALL: [Solver; 4] = [Solver::Ea, Solver::Da, Solver::Wcs, Solver::Oracle];

    pub fn as_str(self) -> &'static str {
        match self {
            Solver::Ea => "ea",
            Solver::Da => "da",
            Solver::Wcs => "wcs",
            Solver::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Solver {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ea" => Ok(Solver::Ea),
            "da" => Ok(Solver::Da),
            "wcs" => Ok(Solver::Wcs),
            "oracle" => Ok(Solver::Oracle),
            other => Err(format!("unknown solver `{other}` (expected ea, da, wcs or oracle)")),
        }
    }
}

/// Parse a comma-separated solver list such as `ea,da,wcs`.
pub fn parse_solvers(list: &str) -> std::result::Result<Vec<Solver>, String> {
    let solvers = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<std::result::Result<Vec<Solver>, String>>()?;
    if solvers.is_empty() {
        return Err("empty solver list".into());
    }
    Ok(solvers)
}

/// Outcome of one solver on one (drop, realization) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub drop: usize,
    pub realization: usize,
    pub seed: u64,
    pub solver: Solver,
    /// bit/s/Hz
    pub sum_rate: f64,
    pub per_ue_applications: Vec<usize>,
    pub per_ue_delay: Vec<usize>,
    pub rounds: usize,
    pub wall_time_s: f64,
}

fn mean_of(v: &[usize]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<usize>() as f64 / v.len() as f64
    }
}

impl RunRecord {
    pub fn mean_applications(&self) -> f64 {
        mean_of(&self.per_ue_applications)
    }

    pub fn max_applications(&self) -> usize {
        self.per_ue_applications.iter().copied().max().unwrap_or(0)
    }

    pub fn mean_delay(&self) -> f64 {
        mean_of(&self.per_ue_delay)
    }

    pub fn max_delay(&self) -> usize {
        self.per_ue_delay.iter().copied().max().unwrap_or(0)
    }
}

pub const RECORD_CSV_HEADER: &str =
    "scenario,drop,realization,solver,sum_rate,mean_apps,max_apps,mean_delay,max_delay,rounds,wall_time_s";

pub fn write_records_csv<W: Write>(records: &[RunRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{RECORD_CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.drop,
            r.realization,
            r.solver,
            r.sum_rate,
            r.mean_applications(),
            r.max_applications(),
            r.mean_delay(),
            r.max_delay(),
            r.rounds,
            r.wall_time_s
        )?;
    }
    Ok(())
}

/// Linear interpolation between closest ranks on sorted data:
/// position `q (n - 1)`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Right-continuous step CDF: each distinct value with the fraction of
/// samples at or below it.
pub fn empirical_cdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut cdf: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match cdf.last_mut() {
            Some(last) if last.0 == x => last.1 = frac,
            _ => cdf.push((x, frac)),
        }
    }
    if let Some(last) = cdf.last_mut() {
        last.1 = 1.0;
    }
    Ok(cdf)
}

/// Normalised histogram over integer values (e.g. acceptance delays).
pub fn integer_pdf(samples: &[usize]) -> Result<Vec<(usize, f64)>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &s in samples {
        *counts.entry(s).or_default() += 1;
    }
    let n = samples.len() as f64;
    Ok(counts.into_iter().map(|(v, c)| (v, c as f64 / n)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    pub percentile_25: f64,
    pub percentile_75: f64,
    pub max: f64,
    pub cdf: Vec<(f64, f64)>,
}

impl SummaryStats {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        // summing in sorted order keeps the mean independent of record order
        let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
        Ok(Self {
            count: sorted.len(),
            mean,
            percentile_25: percentile(&sorted, 0.25),
            percentile_75: percentile(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
            cdf: empirical_cdf(&sorted)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Solver,
    ScenarioSolver,
}

/// Summary of one group of records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub sum_rate: SummaryStats,
    /// Per-run average over UEs.
    pub mean_applications: SummaryStats,
    /// Per-run worst UE.
    pub max_applications: SummaryStats,
    pub mean_delay: SummaryStats,
    pub max_delay: SummaryStats,
    /// Distribution of individual UE delays pooled over the group.
    pub delay_pdf: Vec<(usize, f64)>,
    pub delay_cdf: Vec<(f64, f64)>,
}

fn group_key(r: &RunRecord, by: GroupBy) -> (String, Solver) {
    match by {
        GroupBy::Solver => (String::new(), r.solver),
        GroupBy::ScenarioSolver => (r.scenario.clone(), r.solver),
    }
}

pub fn summarize_group(group: String, records: &[&RunRecord]) -> Result<GroupSummary> {
    if records.is_empty() {
        return Err(Error::EmptyGroup(group));
    }
    let stat = |f: &dyn Fn(&RunRecord) -> f64| SummaryStats::from_samples(&records.iter().map(|r| f(r)).collect::<Vec<_>>());
    let delays: Vec<usize> = records.iter().flat_map(|r| r.per_ue_delay.iter().copied()).collect();
    let (delay_pdf, delay_cdf) = if delays.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        let as_f64: Vec<f64> = delays.iter().map(|&d| d as f64).collect();
        (integer_pdf(&delays)?, empirical_cdf(&as_f64)?)
    };
    Ok(GroupSummary {
        sum_rate: stat(&|r| r.sum_rate)?,
        mean_applications: stat(&RunRecord::mean_applications)?,
        max_applications: stat(&|r| r.max_applications() as f64)?,
        mean_delay: stat(&RunRecord::mean_delay)?,
        max_delay: stat(&|r| r.max_delay() as f64)?,
        delay_pdf,
        delay_cdf,
        group,
    })
}

/// Group records by solver (optionally by scenario too) and summarise each
/// group. Groups come out in key order.
pub fn aggregate(records: &[RunRecord], by: GroupBy) -> Result<Vec<GroupSummary>> {
    if records.is_empty() {
        return Err(Error::EmptyGroup("no records".into()));
    }
    let mut groups: BTreeMap<(String, Solver), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(group_key(r, by)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((scenario, solver), members)| {
            let name = if scenario.is_empty() {
                solver.to_string()
            } else {
                format!("{scenario}/{solver}")
            };
            summarize_group(name, &members)
        })
        .collect()
}

pub const SUMMARY_CSV_HEADER: &str = "group,metric,count,mean,p25,p75,max";

pub fn write_summary_csv<W: Write>(groups: &[GroupSummary], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SUMMARY_CSV_HEADER}")?;
    for g in groups {
        for (metric, s) in [
            ("sum_rate", &g.sum_rate),
            ("mean_apps", &g.mean_applications),
            ("max_apps", &g.max_applications),
            ("mean_delay", &g.mean_delay),
            ("max_delay", &g.max_delay),
        ] {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                g.group, metric, s.count, s.mean, s.percentile_25, s.percentile_75, s.max
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(solver: Solver, sum_rate: f64, apps: Vec<usize>, delay: Vec<usize>) -> RunRecord {
        RunRecord {
            scenario: "t".into(),
            drop: 0,
            realization: 0,
            seed: 0,
            solver,
            sum_rate,
            per_ue_applications: apps,
            per_ue_delay: delay,
            rounds: 1,
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn degenerate_stats() {
        let s = SummaryStats::from_samples(&[3.5]).unwrap();
        assert_eq!((s.mean, s.percentile_25, s.percentile_75, s.max), (3.5, 3.5, 3.5, 3.5));
    }

    #[test]
    fn percentiles_interpolate_linearly() {
        let s = SummaryStats::from_samples(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert!((s.percentile_25 - 1.75).abs() < 1e-15);
        assert!((s.percentile_75 - 3.25).abs() < 1e-15);
        assert_eq!(s.max, 4.0);
        assert_eq!(s.mean, 2.5);
    }

    #[test]
    fn cdf_counts_ties() {
        assert_eq!(empirical_cdf(&[2.0, 2.0, 3.0]).unwrap(), vec![(2.0, 2.0 / 3.0), (3.0, 1.0)]);
        assert!(matches!(empirical_cdf(&[]), Err(Error::EmptySamples)));
    }

    #[test]
    fn pdf_accumulates_to_cdf() {
        let delays = [1, 1, 2, 4, 4, 4, 7];
        let pdf = integer_pdf(&delays).unwrap();
        let cdf = empirical_cdf(&delays.map(|d| d as f64)).unwrap();
        assert!((pdf.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-12);
        let mut acc = 0.0;
        for ((v, p), (cv, cp)) in pdf.iter().zip(&cdf) {
            acc += p;
            assert_eq!(*v as f64, *cv);
            assert!((acc - cp).abs() < 1e-12);
        }
    }

    #[test]
    fn grouping_partitions_by_solver() {
        let recs = vec![
            record(Solver::Ea, 10.0, vec![1, 2], vec![1, 2]),
            record(Solver::Da, 11.0, vec![1, 3], vec![3, 3]),
            record(Solver::Ea, 12.0, vec![1, 1], vec![1, 1]),
            record(Solver::Da, 9.0, vec![2, 2], vec![2, 2]),
        ];
        let groups = aggregate(&recs, GroupBy::Solver).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].group, "ea");
        assert_eq!(groups[0].sum_rate.count + groups[1].sum_rate.count, 4);
        assert_eq!(groups[0].sum_rate.mean, 11.0);
        assert_eq!(groups[1].max_delay.max, 3.0);
        assert!(aggregate(&[], GroupBy::Solver).is_err());
    }

    #[test]
    fn solver_names_round_trip() {
        for s in Solver::ALL {
            assert_eq!(s.as_str().parse::<Solver>().unwrap(), s);
        }
        assert_eq!(parse_solvers("ea, DA,wcs").unwrap(), vec![Solver::Ea, Solver::Da, Solver::Wcs]);
        assert!(parse_solvers("ea,greedy").is_err());
    }
}
