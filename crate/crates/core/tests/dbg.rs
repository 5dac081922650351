#[test]
fn dbg_planner() {
    use greenhouse_core::*;
    use greenhouse_core::control::*;
    use greenhouse_core::nlp::SolveOptions;
    use greenhouse_core::weather::DisturbanceTrace;
    let params = GreenhouseParams::default();
    let spec = EconomicCostSpec::default();
    let x0 = ClimateState::new(19.0, 420.0, 72.0, 1.0);
    let rows: Vec<Disturbance> = (0..26)
        .map(|k| Disturbance::new(17.0 + 0.05 * k as f64, 400.0, 8.5, 500.0))
        .collect();
    let forecast = DisturbanceTrace { start: 0.0, dt: 300.0, rows };
    let config = PlannerConfig {
        span: 7200.0,
        solver: SolveOptions { feas_tol: 1.4e-9, max_outer: 60, max_inner: 400, collect_log: true, ..SolveOptions::default() },
        ..PlannerConfig::default()
    };
    let plan = plan_day(x0, &forecast, &spec, &params, &config, None).unwrap();
    println!("status {:?} defect {:.2e} pg {:.2e} iters {} outers {} obj {:.3}",
        plan.report.status, plan.report.max_defect, plan.report.stationarity,
        plan.report.iterations, plan.report.outer_iterations, plan.report.objective);
    for l in plan.report.log.iter().take(80) { println!("{l}"); }
    for k in [0, 6, 12, 18, 23] {
        let u = plan.u_ref[k].to_array();
        let x = plan.x_ref[k].to_array();
        println!("k={k} u=[{:.3} {:.3} {:.3} {:.3}] x=[{:.2} {:.1} {:.2} {:.4}]", u[0], u[1], u[2], u[3], x[0], x[1], x[2], x[3]);
    }
}
