use std::path::Path;

use harbor_core::berth::{build_initial_plan, build_plan_for_calls, replan_on_eta_update, validate_plan, BerthPlan};
use harbor_core::eta::{
    build_samples, evaluate_predictor, make_predictor, EtaError, EtaPredictor, KinematicPredictor, MetricRow,
    RidgeGridPredictor, TrainingSample, KINEMATIC_ID, PREDICTOR_IDS, RIDGE_ID,
};
use harbor_core::ingest::{generate_traffic, write_ais_csv, SynthConfig, Traffic};
use harbor_core::model::{parse_timestamp, Voyage};
use harbor_core::seed::derive_seed;
use harbor_core::sim::{
    calibrate, endpoint_targets, punctuality_stats, replicate_seeds, revenue_analysis, run_cells, run_scenario,
    run_sweep, waiting_chart_svg, waiting_time_report, write_reports_csv, write_sweep_csv, CalibrationGrid,
    PunctualityStats, SimReport, Strategy,
};
use serde::Serialize;

use crate::config::{self, HarborConfig};
use crate::manifest::OutDir;
use crate::{Cli, CliError, Command, Format, PlanCommand, ReportCommand, StrategyArg};

/// The weather field is bulky, so data directories keep the generator
/// config and rebuild the traffic from it.
const SYNTH_FILE: &str = "synth.json";
const VOYAGES_FILE: &str = "voyages.json";

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let required = matches!(cli.command, Command::Generate);
    let loaded = config::load(cli.config.as_deref(), required)?;
    let cfg = loaded.config;
    let root = cli.seed.unwrap_or(cfg.seed);
    let hash = loaded.sha256;
    match &cli.command {
        Command::Generate => generate(cli, &cfg, root, hash),
        Command::Fit { data, predictor } => fit(cli, &cfg, data, predictor, hash),
        Command::Eval { data, model, predictor } => eval(cli, &cfg, data, model.as_deref(), predictor.as_deref(), hash),
        Command::Plan(p) => plan(cli, &cfg, root, p, hash),
        Command::Simulate { rate, strategy } => simulate(cli, &cfg, root, *rate, *strategy, hash),
        Command::Sweep { rates, seeds } => sweep(cli, &cfg, root, rates, *seeds, hash),
        Command::Calibrate { seeds } => calibrate_cmd(cli, &cfg, root, *seeds, hash),
        Command::Report(r) => report(cli, &cfg, root, r, hash),
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<(), CliError>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Write rows as `name.csv` or `name.json` depending on `--format`.
fn write_table<T: Serialize>(out: &mut OutDir, format: Format, name: &str, rows: &[T]) -> Result<(), CliError> {
    match format {
        Format::Json => {
            out.write_json(&format!("{name}.json"), &rows)?;
        }
        Format::Csv => {
            let bytes = csv_bytes(|buf| {
                let mut w = csv::Writer::from_writer(buf);
                for r in rows {
                    w.serialize(r)?;
                }
                w.flush()?;
                Ok(())
            })?;
            out.write(&format!("{name}.csv"), bytes)?;
        }
    }
    Ok(())
}

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

fn generate(cli: &Cli, cfg: &HarborConfig, root: u64, hash: Option<String>) -> Result<(), CliError> {
    let mut traffic_cfg = cfg.traffic.clone();
    traffic_cfg.seed = root;
    let traffic = generate_traffic(&traffic_cfg)?;
    let mut out = OutDir::create(&cli.out)?;
    out.write_json(SYNTH_FILE, &traffic_cfg)?;
    out.write_json(VOYAGES_FILE, &traffic.voyages)?;
    out.write("ais.csv", csv_bytes(|b| Ok(write_ais_csv(b, &traffic.ais)?))?)?;
    write_table(&mut out, cli.format, "arrivals", &traffic.arrivals)?;
    out.finish(hash, vec![root])?;
    println!(
        "generated {} voyages, {} AIS records into {}",
        traffic.voyages.len(),
        traffic.ais.len(),
        cli.out.display()
    );
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("missing generated data {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::runtime(format!("unreadable {}: {e}", path.display())))
}

fn load_traffic(data: &Path) -> Result<Traffic, CliError> {
    let synth: SynthConfig = read_json(&data.join(SYNTH_FILE))?;
    let voyages: Vec<Voyage> = read_json(&data.join(VOYAGES_FILE))?;
    let traffic = generate_traffic(&synth)?;
    if traffic.voyages != voyages {
        return Err(CliError::runtime(format!(
            "{} does not regenerate the voyages in {}; regenerate the data with this version",
            SYNTH_FILE,
            data.display()
        )));
    }
    Ok(traffic)
}

fn check_predictor_id(id: &str) -> Result<(), CliError> {
    match make_predictor(id) {
        Ok(_) => Ok(()),
        Err(e @ EtaError::UnknownPredictor { .. }) => Err(usage(e.to_string())),
        Err(e) => Err(e.into()),
    }
}

fn load_model(path: &Path) -> Result<Box<dyn EtaPredictor>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("cannot read model {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    match value.get("predictor_id").and_then(|v| v.as_str()) {
        Some(KINEMATIC_ID) => Ok(Box::new(KinematicPredictor)),
        Some(RIDGE_ID) => Ok(Box::new(RidgeGridPredictor::from_json(&text)?)),
        other => Err(CliError::runtime(format!(
            "model {} has predictor id {other:?}; available: {}",
            path.display(),
            PREDICTOR_IDS.join(", ")
        ))),
    }
}

fn fit(cli: &Cli, cfg: &HarborConfig, data: &Path, id: &str, hash: Option<String>) -> Result<(), CliError> {
    check_predictor_id(id)?;
    let traffic = load_traffic(data)?;
    let samples = build_samples(&traffic, &cfg.samples)?;
    let mut out = OutDir::create(&cli.out)?;
    let (model_json, predictor): (String, Box<dyn EtaPredictor>) = if id == RIDGE_ID {
        let mut p = RidgeGridPredictor::new(cfg.lambdas.clone());
        let training: Vec<TrainingSample> = samples.iter().map(|s| s.training()).collect();
        p.fit(&training)?;
        (p.to_json()?, Box::new(p))
    } else {
        (serde_json::to_string_pretty(&serde_json::json!({ "predictor_id": KINEMATIC_ID }))?, Box::new(KinematicPredictor))
    };
    out.write("model.json", model_json + "\n")?;
    let row = MetricRow::new(id, &evaluate_predictor(predictor.as_ref(), &samples, None)?);
    write_table(&mut out, cli.format, "training_metrics", std::slice::from_ref(&row))?;
    out.finish(hash, vec![])?;
    println!("fitted {id} on {} samples: in-sample MAPE {:.2}%", samples.len(), row.mape_pct);
    Ok(())
}

#[derive(Serialize)]
struct EvalRow {
    predictor_id: String,
    /// `baseline` for the kinematic predictor, `model` otherwise.
    role: &'static str,
    rmse_min: f64,
    mape_pct: f64,
    n: usize,
}

fn eval(
    cli: &Cli,
    cfg: &HarborConfig,
    data: &Path,
    model: Option<&Path>,
    predictor: Option<&str>,
    hash: Option<String>,
) -> Result<(), CliError> {
    if let Some(id) = predictor {
        check_predictor_id(id)?;
    }
    let model = match (model, predictor) {
        (Some(path), id) => {
            let m = load_model(path)?;
            if let Some(id) = id.filter(|id| *id != m.id()) {
                return Err(usage(format!("--predictor {id} does not match the model ({})", m.id())));
            }
            Some(m)
        }
        (None, Some(RIDGE_ID)) => return Err(usage(format!("{RIDGE_ID} needs --model; run `harbor fit` first"))),
        (None, _) => None,
    };
    let traffic = load_traffic(data)?;
    let samples = build_samples(&traffic, &cfg.samples)?;
    let mut rows = Vec::new();
    let mut push = |p: &dyn EtaPredictor, role| -> Result<(), CliError> {
        let r = evaluate_predictor(p, &samples, None)?;
        rows.push(EvalRow {
            predictor_id: p.id().to_string(),
            role,
            rmse_min: r.rmse_minutes,
            mape_pct: r.mape_percent,
            n: r.n,
        });
        Ok(())
    };
    push(&KinematicPredictor, "baseline")?;
    if let Some(m) = model.as_deref().filter(|m| m.id() != KINEMATIC_ID) {
        push(m, "model")?;
    }
    let mut out = OutDir::create(&cli.out)?;
    write_table(&mut out, cli.format, "metrics", &rows)?;
    out.finish(hash, vec![])?;
    for r in &rows {
        println!("{:<12} {:<8} RMSE {:>8.2} min  MAPE {:>6.2}%  n={}", r.predictor_id, r.role, r.rmse_min, r.mape_pct, r.n);
    }
    Ok(())
}

#[derive(Serialize)]
struct PlanRow<'a> {
    vessel: &'a str,
    berth: &'a str,
    eta: String,
    start: String,
    end: String,
    cranes: u32,
    waiting_minutes: f64,
}

fn write_plan(cli: &Cli, plan: &BerthPlan, hash: Option<String>, seeds: Vec<u64>) -> Result<(), CliError> {
    let mut out = OutDir::create(&cli.out)?;
    out.write("plan.json", plan.to_json()? + "\n")?;
    let rows: Vec<PlanRow> = plan
        .assignments
        .iter()
        .map(|a| {
            let eta = plan.eta_map[&a.vessel_id];
            PlanRow {
                vessel: &a.vessel_id,
                berth: &a.berth_id,
                eta: eta.to_rfc3339(),
                start: a.service_start.to_rfc3339(),
                end: a.service_end.to_rfc3339(),
                cranes: a.cranes_assigned,
                waiting_minutes: a.waiting_minutes(eta),
            }
        })
        .collect();
    write_table(&mut out, cli.format, "assignments", &rows)?;
    out.finish(hash, seeds)?;
    println!(
        "plan v{}: {} assignments, total waiting {:.1} min",
        plan.plan_version,
        plan.assignments.len(),
        plan.total_waiting_minutes()
    );
    Ok(())
}

fn read_plan(path: &Path) -> Result<BerthPlan, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("cannot read plan {}: {e}", path.display())))?;
    Ok(BerthPlan::from_json(&text)?)
}

fn timestamp(flag: &str, raw: &str) -> Result<harbor_core::model::Timestamp, CliError> {
    parse_timestamp(raw).map_err(|e| usage(format!("--{flag}: {e}")))
}

fn plan(cli: &Cli, cfg: &HarborConfig, root: u64, cmd: &PlanCommand, hash: Option<String>) -> Result<(), CliError> {
    match cmd {
        PlanCommand::Build { data } => {
            let params = cfg.sim.plan_params();
            let plan = match data {
                Some(d) => build_initial_plan(&load_traffic(d)?.voyages, &params)?,
                None => {
                    let mut sim = cfg.sim.clone();
                    sim.seed = root;
                    build_plan_for_calls(&harbor_core::sim::schedule_for(&sim), &params)?
                }
            };
            write_plan(cli, &plan, hash, vec![root])
        }
        PlanCommand::Validate { plan } => {
            let p = read_plan(plan)?;
            match validate_plan(&p) {
                Ok(()) => {
                    println!("plan v{} is feasible ({} assignments)", p.plan_version, p.assignments.len());
                    Ok(())
                }
                Err(violations) => {
                    for v in &violations {
                        println!("violation: {v:?}");
                    }
                    Err(CliError::runtime(format!("plan has {} violations", violations.len())))
                }
            }
        }
        PlanCommand::Replan { plan, vessel, eta, now } => {
            let p = read_plan(plan)?;
            let next = replan_on_eta_update(&p, vessel, timestamp("eta", eta)?, timestamp("now", now)?)?;
            write_plan(cli, &next, hash, vec![])
        }
    }
}

fn strategy_of(arg: StrategyArg) -> Strategy {
    match arg {
        StrategyArg::Without => Strategy::WithoutPrediction,
        StrategyArg::With => Strategy::with_noisy_oracle(),
    }
}

fn simulate(
    cli: &Cli,
    cfg: &HarborConfig,
    root: u64,
    rate: Option<f64>,
    strategy: Option<StrategyArg>,
    hash: Option<String>,
) -> Result<(), CliError> {
    let base = &cfg.sim;
    let sim = base.with_rate_strategy(
        rate.unwrap_or(base.rta_rate),
        strategy.map_or_else(|| base.strategy.clone(), strategy_of),
        root,
    );
    let report = run_scenario(&sim)?;
    let mut out = OutDir::create(&cli.out)?;
    out.write_json("report.json", &report)?;
    if cli.format == Format::Csv {
        out.write("report.csv", csv_bytes(|b| Ok(write_reports_csv(b, std::slice::from_ref(&report))?))?)?;
    }
    out.finish(hash, vec![root])?;
    println!(
        "{} at rate {}: {:.3} vans/crane-h ({:.2} s/van), waiting {:.0} min, {} replans",
        report.strategy,
        report.rta_rate,
        report.throughput_vans_per_crane_hour,
        report.effective_seconds_per_van,
        report.total_waiting_minutes,
        report.replans
    );
    Ok(())
}

/// `a..b:step` or `a,b,c`, in percent.
pub fn parse_rates(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || usage(format!("--rates '{spec}': expected a..b:step or a comma list, in percent"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let pct: Vec<f64> = if let Some((range, step)) = spec.split_once(':') {
        let (a, b) = range.split_once("..").ok_or_else(bad)?;
        let (a, b, step) = (num(a)?, num(b)?, num(step)?);
        if step.is_nan() || step <= 0.0 || b < a {
            return Err(bad());
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| a + step * i as f64).collect()
    } else {
        spec.split(',').map(num).collect::<Result<_, _>>()?
    };
    if pct.is_empty() || pct.iter().any(|p| !(0.0..=100.0).contains(p)) {
        return Err(bad());
    }
    Ok(pct.into_iter().map(|p| p / 100.0).collect())
}

fn check_seeds(n: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    Ok(())
}

fn both() -> [Strategy; 2] {
    [Strategy::WithoutPrediction, Strategy::with_noisy_oracle()]
}

fn sweep(cli: &Cli, cfg: &HarborConfig, root: u64, rates: &str, n: usize, hash: Option<String>) -> Result<(), CliError> {
    let rates = parse_rates(rates)?;
    check_seeds(n)?;
    let seeds = replicate_seeds(root, n);
    let rows = run_sweep(&cfg.sim, &rates, &both(), &seeds)?;
    let mut out = OutDir::create(&cli.out)?;
    match cli.format {
        Format::Csv => {
            out.write("sweep.csv", csv_bytes(|b| Ok(write_sweep_csv(b, &rows)?))?)?;
        }
        Format::Json => {
            out.write_json("sweep.json", &rows)?;
        }
    }
    out.finish(hash, seeds)?;
    println!("{:>6} {:<8} {:>10} {:>12}", "rate", "strategy", "s/van", "vans/crane-h");
    for r in &rows {
        println!("{:>5.0}% {:<8} {:>10.2} {:>12.3}", r.rta_rate * 100.0, r.strategy, r.seconds_per_van, r.mean_throughput);
    }
    Ok(())
}

fn calibrate_cmd(cli: &Cli, cfg: &HarborConfig, root: u64, n: usize, hash: Option<String>) -> Result<(), CliError> {
    check_seeds(n)?;
    // kept apart from the replicate seeds used for evaluation
    let seeds = replicate_seeds(derive_seed(root, "calibrate", 0), n);
    let result = calibrate(&cfg.sim, &CalibrationGrid::default(), &endpoint_targets(), &seeds)?;
    let calibrated = HarborConfig {
        sim: result.config.clone(),
        ..cfg.clone()
    };
    let mut out = OutDir::create(&cli.out)?;
    let header = "# Written by `harbor calibrate`; sim.handling_seconds_per_van and\n\
                  # sim.schedule.arrivals_per_day are the fitted values.\n";
    out.write("calibrated.toml", format!("{header}{}", toml::to_string(&calibrated)?))?;
    out.write_json("calibration.json", &result)?;
    out.finish(hash, seeds)?;
    println!(
        "handling {:.2} s/van, {:.2} arrivals/day, objective {:.3e} over {} candidates",
        result.config.handling_seconds_per_van,
        result.config.schedule.arrivals_per_day,
        result.objective,
        result.candidates_evaluated
    );
    for f in &result.fitted {
        println!(
            "  {:>3.0}% {:<8} target {:.2} achieved {:.3} ({:+.2}%)",
            f.target.rta_rate * 100.0,
            f.target.strategy.label(),
            f.target.throughput,
            f.achieved,
            f.relative_error * 100.0
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct PunctualityRow {
    strategy: String,
    mean_minutes: f64,
    median_minutes: f64,
    std_minutes: f64,
    n: usize,
}

fn deviations(reports: &[SimReport]) -> Vec<f64> {
    reports
        .iter()
        .flat_map(|r| r.vessels.iter())
        .filter(|v| v.rta)
        .map(|v| (v.actual_arrival - v.believed_eta).num_microseconds().unwrap_or(0).abs() as f64 / 6.0e7)
        .collect()
}

fn report(cli: &Cli, cfg: &HarborConfig, root: u64, cmd: &ReportCommand, hash: Option<String>) -> Result<(), CliError> {
    let mut out;
    let seeds;
    match *cmd {
        ReportCommand::Revenue {
            without,
            with_prediction,
            cranes,
            value_per_van,
            hours_per_day,
            days_per_year,
        } => {
            if cranes == 0 {
                return Err(usage("--cranes must be at least 1"));
            }
            let rows = revenue_analysis(without, with_prediction, 1..=cranes, hours_per_day, days_per_year, value_per_van);
            out = OutDir::create(&cli.out)?;
            write_table(&mut out, cli.format, "revenue", &rows)?;
            seeds = vec![];
            println!("{:>6} {:>10} {:>10} {:>8} {:>10} {:>14}", "cranes", "daily w/o", "daily w/", "day +", "year +", "revenue");
            for r in &rows {
                println!(
                    "{:>6} {:>10.2} {:>10.2} {:>8.2} {:>10.1} {:>14.2}",
                    r.cranes, r.daily_without, r.daily_with, r.day_diff, r.year_diff, r.revenue
                );
            }
        }
        ReportCommand::Punctuality { rate, seeds: n } => {
            check_seeds(n)?;
            seeds = replicate_seeds(root, n);
            let cells = run_cells(&cfg.sim, &[rate], &both(), &seeds)?;
            let stats: Vec<PunctualityStats<f64>> = cells
                .iter()
                .map(|c| punctuality_stats(&deviations(c)))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::runtime(format!("no delayed vessels at rate {rate}: {e}")))?;
            let rows: Vec<PunctualityRow> = both()
                .iter()
                .zip(&stats)
                .map(|(s, p)| PunctualityRow {
                    strategy: s.label().to_string(),
                    mean_minutes: p.mean,
                    median_minutes: p.median,
                    std_minutes: p.std,
                    n: p.n,
                })
                .collect();
            out = OutDir::create(&cli.out)?;
            write_table(&mut out, cli.format, "punctuality", &rows)?;
            for r in &rows {
                println!(
                    "{:<8} mean {:>8.2} min  median {:>8.2}  std {:>8.2}  n={}",
                    r.strategy, r.mean_minutes, r.median_minutes, r.std_minutes, r.n
                );
            }
            let reduction = 100.0 * (1.0 - stats[1].mean / stats[0].mean);
            println!("mean reduction {reduction:.1}%");
        }
        ReportCommand::Waiting { rate, seeds: n } => {
            check_seeds(n)?;
            seeds = replicate_seeds(root, n);
            let cells = run_cells(&cfg.sim, &[rate], &both(), &seeds)?;
            let waits = |reports: &[SimReport]| -> Vec<(String, f64)> {
                reports
                    .iter()
                    .enumerate()
                    .flat_map(|(i, r)| {
                        r.anchorage_waiting().into_iter().map(move |(id, w)| {
                            let id = if n > 1 { format!("s{i:02}/{id}") } else { id };
                            (id, w)
                        })
                    })
                    .collect()
            };
            let report = waiting_time_report(&waits(&cells[0]), &waits(&cells[1]))?;
            out = OutDir::create(&cli.out)?;
            write_table(&mut out, cli.format, "waiting", &report.rows)?;
            let title = format!("Anchorage waiting at {:.0}% delayed arrivals", rate * 100.0);
            out.write("waiting.svg", waiting_chart_svg(&report, &title))?;
            println!(
                "waiting without {:.0} min, with {:.0} min, reduction {:.1}%",
                report.total_without, report.total_with, report.reduction_percent
            );
        }
    }
    out.finish(hash, seeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_specs() {
        let r = parse_rates("5..30:5").unwrap();
        assert_eq!(r.len(), 6);
        assert!((r[5] - 0.30).abs() < 1e-12);
        assert_eq!(parse_rates("0,10").unwrap(), vec![0.0, 0.1]);
        assert!(parse_rates("30..5:5").is_err());
        assert!(parse_rates("5..30:0").is_err());
        assert!(parse_rates("150").is_err());
        assert!(parse_rates("").is_err());
    }
}
