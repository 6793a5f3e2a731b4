use hetnet_assoc::experiment::{run_experiment, run_scaling_sweep, ExperimentPlan, SweepQuotas, DEFAULT_SWEEP_POINTS};
use hetnet_assoc::metrics::{empirical_cdf, Solver};
use hetnet_assoc::netgen::NetworkConfig;

fn cdf_at(cdf: &[(f64, f64)], x: f64) -> f64 {
    cdf.iter().take_while(|p| p.0 <= x).last().map_or(0.0, |p| p.1)
}

#[test]
fn ea_delay_cdf_dominates_da() {
    let mut plan = ExperimentPlan::new("desk", NetworkConfig::default());
    plan.solvers = vec![Solver::Ea, Solver::Da];
    plan.num_drops = 40;
    plan.base_seed = 31;
    let res = run_experiment(&plan).unwrap();
    let mut dominated = 0;
    for cell in &res.cells {
        let delays = |s: Solver| {
            let r = cell.records.iter().find(|r| r.solver == s).unwrap();
            empirical_cdf(&r.per_ue_delay.iter().map(|&d| d as f64).collect::<Vec<_>>()).unwrap()
        };
        let (ea, da) = (delays(Solver::Ea), delays(Solver::Da));
        let support: Vec<f64> = ea.iter().chain(&da).map(|p| p.0).collect();
        if support.iter().all(|&x| cdf_at(&ea, x) >= cdf_at(&da, x)) {
            dominated += 1;
        }
    }
    assert!(dominated * 10 >= res.cells.len() * 9, "{dominated}/{}", res.cells.len());
}

#[test]
fn single_solver_single_cell_has_one_delay_per_ue() {
    let mut plan = ExperimentPlan::new("one", NetworkConfig::default());
    plan.solvers = vec![Solver::Ea];
    let res = run_experiment(&plan).unwrap();
    assert_eq!(res.records.len(), 1);
    assert_eq!(res.records[0].per_ue_delay.len(), 8);
    assert!(res.records[0].per_ue_delay.iter().all(|&d| d >= 1));
}

#[test]
fn full_scale_summary_orders_solvers() {
    let mut plan = ExperimentPlan::new("full", NetworkConfig::full_scale());
    plan.num_drops = 20;
    plan.num_realizations = 2;
    plan.base_seed = 3;
    let res = run_experiment(&plan).unwrap();
    let mean = |s: Solver| res.summaries.iter().find(|g| g.group == s.as_str()).unwrap().sum_rate.mean;
    let (ea, da, wcs) = (mean(Solver::Ea), mean(Solver::Da), mean(Solver::Wcs));
    assert_eq!(res.summaries.len(), 3);
    assert!((ea - da).abs() <= 0.05 * da, "EA {ea} vs DA {da}");
    assert!(wcs > ea && wcs > da);
}

#[test]
fn sweep_delays_favour_ea_at_every_point() {
    let mut plan = ExperimentPlan::new("sweep", NetworkConfig::default());
    plan.solvers = vec![Solver::Ea, Solver::Da];
    plan.num_drops = 10;
    let points = run_scaling_sweep(&plan, &DEFAULT_SWEEP_POINTS, SweepQuotas::default()).unwrap();
    assert_eq!(points.len(), 3);
    for p in &points {
        let g = |s: Solver| p.result.summaries.iter().find(|g| g.group == s.as_str()).unwrap();
        assert!(g(Solver::Ea).mean_delay.mean < g(Solver::Da).mean_delay.mean);
        assert!(p.result.plan.config.quotas.iter().sum::<usize>() >= p.num_ues);
    }
}

#[test]
fn single_point_sweep_equals_direct_run() {
    let mut plan = ExperimentPlan::new("pt", NetworkConfig::default());
    plan.solvers = vec![Solver::Ea, Solver::Da];
    plan.num_drops = 2;
    let sweep = run_scaling_sweep(&plan, &[(3, 12)], SweepQuotas::default()).unwrap();
    let direct = run_experiment(&plan.at_point(3, 12, 6, 3)).unwrap();
    assert_eq!(sweep[0].result.records, direct.records);
    assert_eq!(sweep[0].result.summaries, direct.summaries);
}
