use std::fmt::Write as _;

use hsc_core::assist::AssistConfig;
use hsc_core::config::RunConfig;
use hsc_core::coop::{classify_series, state_occupancy, CoopState, Occupancy};
use hsc_core::experiment::{run_experiment, summary_table, trial_rows_csv};
use hsc_core::fmt::{sig, sig9};
use hsc_core::planner::{plan_parking_path, BezierPath};
use hsc_core::plot;
use hsc_core::sim::{compute_metrics, parse_trial_log_csv, run_trial, shifted_goal_intent, DriverSetup, TrialLog, TrialMetrics};
use hsc_core::Error;

use crate::output::{Failure, Outputs, EXIT_IO, EXIT_TRIALS_FAILED, EXIT_USAGE};
use crate::{ClassifyArgs, ExperimentArgs, GlobalArgs, PlanArgs, SimulateArgs};

fn g(x: f64) -> String {
    sig(x, 6)
}

/// Defaults, then the configuration file, then `HSC_*` environment overrides.
pub fn load_config(global: &GlobalArgs) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &global.config {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        cfg.apply_text(&text)
            .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    }
    cfg.apply_env(std::env::vars())?;
    Ok(cfg)
}

pub fn plan(cfg: &RunConfig, global: &GlobalArgs, args: PlanArgs) -> Result<(), Failure> {
    let mut planner = cfg.scenario.planner.clone();
    if let Some(r) = args.min_radius {
        planner.min_turn_radius = r;
    }
    if let Some(t) = args.travel {
        planner.travel = t.into();
    }
    planner.validate()?;
    let path = plan_parking_path(args.start, args.goal, &planner)?;
    let mut out = Outputs::default();
    out.add(&args.output, format!("{}\n{}\n", BezierPath::CSV_HEADER, path.to_csv_row()));
    out.commit(&global.out_dir)?;
    println!("length_m = {}", g(path.length()));
    println!("max_curvature_per_m = {}", g(path.max_curvature(planner.curvature_samples)));
    println!("curvature_limit_per_m = {}", g(planner.max_curvature()));
    Ok(())
}

pub fn simulate(mut cfg: RunConfig, global: &GlobalArgs, args: SimulateArgs) -> Result<(), Failure> {
    if let Some(c) = args.condition {
        cfg.simulate.condition = c;
    }
    if let Some(s) = args.skill {
        cfg.simulate.driver_skill = s;
    }
    if let Some(o) = args.intent_offset {
        cfg.simulate.intent_offset = o;
    }
    if let Some(seed) = global.seed {
        cfg.scenario.seed = seed;
    }
    cfg.validate()?;

    let intent = if cfg.simulate.intent_offset != 0.0 {
        let intent = shifted_goal_intent(&cfg.scenario, cfg.simulate.intent_offset)
            .map_err(|e| Error::PlanInfeasible(Box::new(e)))?;
        Some(intent)
    } else {
        None
    };
    let driver = DriverSetup {
        params: cfg.simulate_driver(),
        intent,
    };
    let assist = AssistConfig::for_condition(cfg.simulate.condition, cfg.experiment.assist_preview.clone());
    let log = run_trial(&cfg.scenario, &driver, &assist)?;

    // The summary is computed from the log exactly as written, so re-reading
    // the file reproduces it.
    let csv = log.to_csv();
    let written = TrialLog {
        records: parse_trial_log_csv(&csv)?,
        ..log.clone()
    };
    let metrics = compute_metrics(&written)?;
    let summary = metrics_summary(&cfg, &metrics);

    let mut out = Outputs::default();
    out.add("trial_log.csv", csv);
    out.add("metrics.txt", summary.clone());
    if !args.no_plots {
        out.add("trajectory.svg", plot::trajectory_svg(&log.path, &log.records));
        out.add("states.svg", plot::state_timeline_svg(&log.records));
    }
    out.commit(&global.out_dir)?;
    print!("{summary}");
    Ok(())
}

fn metrics_summary(cfg: &RunConfig, m: &TrialMetrics) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "condition = {}", cfg.simulate.condition);
    let _ = writeln!(s, "driver_skill = {}", g(cfg.simulate.driver_skill));
    let _ = writeln!(s, "seed = {}", cfg.scenario.seed);
    let _ = writeln!(s, "captured = {}", m.captured);
    let _ = writeln!(s, "duration_s = {}", g(m.duration));
    let _ = writeln!(s, "rms_e_m = {}", g(m.rms_e));
    let _ = writeln!(s, "mean_abs_tau_c_nm = {}", g(m.mean_abs_tau_c));
    let _ = writeln!(s, "mean_w_c = {}", g(m.mean_w_c));
    let _ = writeln!(s, "mean_w_das = {}", g(m.mean_w_das));
    let _ = writeln!(s, "max_abs_tau_das_nm = {}", g(m.max_abs_tau_das));
    let _ = writeln!(s, "final_position_error_m = {}", g(m.final_position_error));
    let _ = writeln!(s, "final_heading_error_rad = {}", g(m.final_heading_error));
    write_occupancy(&mut s, m.occupancy.as_ref());
    s
}

fn write_occupancy(s: &mut String, occ: Option<&Occupancy>) {
    for state in CoopState::ALL {
        let v = occ.map(|o| g(o.get(state))).unwrap_or_else(|| "n/a".into());
        let _ = writeln!(s, "occupancy_{} = {v}", state.label());
    }
}

pub fn experiment(mut cfg: RunConfig, global: &GlobalArgs, args: ExperimentArgs) -> Result<(), Failure> {
    if let Some(seed) = global.seed {
        cfg.experiment.base_seed = seed;
    }
    cfg.validate()?;
    let plan = &cfg.experiment;
    let report = run_experiment(plan, &cfg.scenario)?;

    let summary = summary_table(&report, &plan.trials);
    let mut out = Outputs::default();
    out.add("trials.csv", trial_rows_csv(report.rows()));
    out.add("summary.txt", summary.clone());
    if !args.no_plots {
        out.add("phase_error.svg", plot::phase_error_svg(&report));
    }
    out.commit(&global.out_dir)?;
    print!("{summary}");
    if report.failures.is_empty() {
        return Ok(());
    }
    for f in &report.failures {
        eprintln!("trial failed: {f}");
    }
    Err(Failure::new(
        EXIT_TRIALS_FAILED,
        format!("{} trial(s) failed", report.failures.len()),
    ))
}

pub fn classify(cfg: &RunConfig, global: &GlobalArgs, args: ClassifyArgs) -> Result<(), Failure> {
    let mut pw = cfg.scenario.pseudo_work.clone();
    if let Some(w) = args.window {
        pw.window = w;
    }
    if let Some(g1) = args.gamma1_sq {
        pw.gamma1_sq = g1;
    }
    if let Some(g2) = args.gamma2_sq {
        pw.gamma2_sq = g2;
    }
    pw.validate()?;

    let text = std::fs::read(&args.input).map_err(|e| Failure::io(&args.input, e))?;
    let table = InputTable::parse(&text, &args.v_column).map_err(|m| {
        Failure::new(EXIT_USAGE, format!("{}: {m}", args.input.display()))
    })?;
    let labels = classify_series(&table.t, &table.tau_c, &table.tau_das, &table.v, &pw)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", args.input.display())))?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let header = table.header.iter().chain(["w_c", "w_das", "state"]);
    let csv_err = |e: csv::Error| Failure::new(EXIT_IO, e.to_string());
    w.write_record(header).map_err(csv_err)?;
    for (rec, label) in table.records.iter().zip(&labels) {
        let extra = match label {
            Some((pair, state)) => [sig9(pair.w_c), sig9(pair.w_das), state.label().to_string()],
            None => Default::default(),
        };
        w.write_record(rec.iter().chain(extra.iter().map(String::as_str)))
            .map_err(csv_err)?;
    }
    let body = w.into_inner().map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;

    let mut out = Outputs::default();
    out.add(&args.output, body);
    out.commit(&global.out_dir)?;

    let states: Vec<CoopState> = labels.iter().flatten().map(|(_, s)| *s).collect();
    let mut s = String::new();
    let _ = writeln!(s, "rows = {}", labels.len());
    let _ = writeln!(s, "classified = {}", states.len());
    write_occupancy(&mut s, state_occupancy(&states).ok().as_ref());
    print!("{s}");
    Ok(())
}

/// Input of `classify`: the raw records plus the four numeric columns.
struct InputTable {
    header: csv::StringRecord,
    records: Vec<csv::StringRecord>,
    t: Vec<f64>,
    tau_c: Vec<f64>,
    tau_das: Vec<f64>,
    v: Vec<f64>,
}

impl InputTable {
    fn parse(bytes: &[u8], v_column: &str) -> Result<Self, String> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let header = rdr.headers().map_err(|e| e.to_string())?.clone();
        let col = |name: &str| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| format!("missing column `{name}`"))
        };
        let idx = [col("t")?, col("tau_c")?, col("tau_das")?, col(v_column)?];
        let mut table = InputTable {
            header,
            records: Vec::new(),
            t: Vec::new(),
            tau_c: Vec::new(),
            tau_das: Vec::new(),
            v: Vec::new(),
        };
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| e.to_string())?;
            let mut vals = [0.0; 4];
            for (slot, &j) in vals.iter_mut().zip(&idx) {
                let field = &rec[j];
                *slot = field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("row {}: `{field}` in column `{}` is not a finite number", i + 2, &table.header[j]))?;
            }
            table.t.push(vals[0]);
            table.tau_c.push(vals[1]);
            table.tau_das.push(vals[2]);
            table.v.push(vals[3]);
            table.records.push(rec);
        }
        if table.records.is_empty() {
            return Err("no data rows".into());
        }
        Ok(table)
    }
}
