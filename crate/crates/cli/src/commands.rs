use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::json;

use crashfit_core::energy::{extrapolate, partition_csv};
use crashfit_core::estimate::{
    adopt, fit_damping_prepared, loss_surface as surface, FitResult, PreparedGroups,
};
use crashfit_core::ingest::group_by_altitude;
use crashfit_core::signal::{design_lowpass, filter_values};
use crashfit_core::{
    fit_stiffness as fit_static, generate_synthetic_log, parse_log, segment_impact,
    simulate as run_simulation, write_log, ImpactInit, NelderMeadOptions, SimulationOptions,
    StiffnessMode, SynthConfig, Trial, TrialGroup, Units,
};

use crate::config::RunConfig;
use crate::error::CliError;

/// Altitude with an optional unit suffix: `150cm`, `1.5m` or bare metres.
pub fn parse_altitude(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let (number, scale) = if let Some(n) = s.strip_suffix("cm") {
        (n, 0.01)
    } else if let Some(n) = s.strip_suffix('m') {
        (n, 1.0)
    } else {
        (s, 1.0)
    };
    let v: f64 = number
        .trim()
        .parse()
        .map_err(|_| format!("'{s}' is not an altitude (try 150cm or 1.5)"))?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(format!("altitude '{s}' must be >= 0"));
    }
    Ok(v * scale)
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("'{s}' is not a range (expected lo:hi)"))?;
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| format!("'{v}' is not a number"))
    };
    Ok((num(lo)?, num(hi)?))
}

fn parse_resolution(s: &str) -> Result<(usize, usize), String> {
    let num = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| format!("'{v}' is not a count"))
    };
    match s.split_once('x') {
        Some((a, b)) => Ok((num(a)?, num(b)?)),
        None => {
            let n = num(s)?;
            Ok((n, n))
        }
    }
}

fn write_output(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Usage(format!("cannot write to stdout: {e}"))),
    }
}

fn json_text(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Drop altitude, e.g. 150cm or 1.5.
    #[arg(long, value_parser = parse_altitude)]
    altitude: f64,
    /// Trace length, s.
    #[arg(long, default_value_t = 0.1)]
    t_max: f64,
    /// Stop at the first sample past the payload clearance.
    #[arg(long)]
    truncate: bool,
    /// Stop at the first sample where the frame springs back.
    #[arg(long)]
    stop_on_rebound: bool,
}

pub fn simulate(
    config: &RunConfig,
    args: &SimulateArgs,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let params = config.params()?;
    let filter = config.filter()?;
    let init = ImpactInit::from_altitude(&params, args.altitude)?;
    let options = SimulationOptions {
        dt: filter.dt(),
        t_max: args.t_max,
        x_limit: args.truncate.then(|| config.x_limit_mm / 1000.0),
        stop_on_rebound: args.stop_on_rebound,
    };
    let trace = run_simulation(&params, &init, &options)?;
    let filtered = filter_values(&design_lowpass(&filter), &trace.sensor());

    let mut csv = String::new();
    let _ = writeln!(csv, "{}", config.header("simulate"));
    let _ = writeln!(
        csv,
        "# altitude_m={} v0_mps={} truncation={}",
        args.altitude, init.v0, trace.truncation
    );
    csv.push_str("t_s,x_m,v_mps,a_mps2,sensor_mps2,sensor_filtered_mps2\n");
    for (s, f) in trace.samples.iter().zip(&filtered) {
        let st = s.state;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            st.t, st.x, st.v, st.a, s.sensor, f
        );
    }
    write_output(out, &csv)
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Comma separated drop altitudes.
    #[arg(long, value_delimiter = ',', value_parser = parse_altitude, default_value = "50cm,100cm,150cm")]
    altitudes: Vec<f64>,
    /// Trials per altitude (one count, or one per altitude).
    #[arg(long, value_delimiter = ',', default_value = "101,97,89")]
    trials: Vec<usize>,
    /// Noise standard deviation per axis, m/s².
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    /// Rest period before release, s.
    #[arg(long, default_value_t = 0.2)]
    pre_roll: f64,
    /// Recording after contact, s.
    #[arg(long, default_value_t = 0.2)]
    post_roll: f64,
}

pub fn synth(config: &RunConfig, args: &SynthArgs, out: Option<&Path>) -> Result<(), CliError> {
    let dir = out.ok_or_else(|| CliError::Usage("synth needs --out DIR".into()))?;
    let counts: Vec<usize> = match args.trials.as_slice() {
        [n] => vec![*n; args.altitudes.len()],
        many if many.len() == args.altitudes.len() => many.to_vec(),
        _ => {
            return Err(CliError::Usage(format!(
                "--trials has {} entries for {} altitudes",
                args.trials.len(),
                args.altitudes.len()
            )))
        }
    };
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;

    let params = config.params()?;
    let filter = config.filter()?;
    let header = config.header("synth");
    let mut truth = String::new();
    let _ = writeln!(truth, "{header}");
    truth.push_str("file,trial_id,altitude_cm,freefall_start,impact_start,peak\n");

    let mut index: u64 = 0;
    for (&altitude, &count) in args.altitudes.iter().zip(&counts) {
        for n in 0..count {
            let cfg = SynthConfig {
                log_rate_hz: config.log_rate_hz,
                pre_roll: args.pre_roll,
                post_roll: args.post_roll,
                noise_sigma: args.noise,
                seed: config.seed.wrapping_add(index),
            };
            let cm = (altitude * 100.0).round() as u64;
            let id = format!("h{cm:04}cm_{:03}", n + 1);
            let (log, seg) = generate_synthetic_log(&params, altitude, &filter, &cfg, id.clone())?;
            let comments = [
                header[2..].to_string(),
                format!("noise_sigma={} trial_seed={}", cfg.noise_sigma, cfg.seed),
            ];
            let file = format!("{id}.log");
            write_output(
                Some(&dir.join(&file)),
                &write_log(&log, Units::G, &comments),
            )?;
            let _ = writeln!(
                truth,
                "{file},{id},{},{},{},{}",
                altitude * 100.0,
                seg.freefall_start,
                seg.impact_start,
                seg.peak
            );
            index += 1;
        }
    }
    write_output(Some(&dir.join("ground_truth.csv")), &truth)?;
    eprintln!("wrote {index} logs to {}", dir.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct LogInputs {
    /// Log files, or directories whose `*.log` files are all used.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for path in inputs {
        if path.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| CliError::Data(format!("cannot list {}: {e}", path.display())))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|ext| ext == "log"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(path.clone());
        }
    }
    if files.is_empty() {
        return Err(CliError::Data("no log files found in the inputs".into()));
    }
    Ok(files)
}

/// Parses and segments every input. Any failure aborts with the full list of
/// offending files.
fn load_trials(config: &RunConfig, inputs: &[PathBuf]) -> Result<Vec<(PathBuf, Trial)>, CliError> {
    let seg_cfg = config.segmentation();
    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for file in expand_inputs(inputs)? {
        let result = std::fs::read_to_string(&file)
            .map_err(|e| e.to_string())
            .and_then(|text| parse_log(&text).map_err(|e| e.to_string()))
            .and_then(|log| {
                segment_impact(&log, &seg_cfg)
                    .map(|segment| Trial { log, segment })
                    .map_err(|e| e.to_string())
            });
        match result {
            Ok(trial) => trials.push((file, trial)),
            Err(e) => failures.push(format!("  {}: {e}", file.display())),
        }
    }
    if !failures.is_empty() {
        return Err(CliError::Data(format!(
            "{} of {} inputs failed:\n{}",
            failures.len(),
            failures.len() + trials.len(),
            failures.join("\n")
        )));
    }
    Ok(trials)
}

fn load_groups(config: &RunConfig, inputs: &[PathBuf]) -> Result<Vec<TrialGroup>, CliError> {
    let trials = load_trials(config, inputs)?;
    Ok(group_by_altitude(
        trials.into_iter().map(|(_, t)| t).collect(),
    )?)
}

pub fn segment(config: &RunConfig, args: &LogInputs, out: Option<&Path>) -> Result<(), CliError> {
    let trials = load_trials(config, &args.inputs)?;
    let mut csv = String::new();
    let _ = writeln!(csv, "{}", config.header("segment"));
    csv.push_str("file,trial_id,altitude_cm,freefall_start,impact_start,peak\n");
    for (file, t) in &trials {
        let name = file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let _ = writeln!(
            csv,
            "{name},{},{},{},{},{}",
            t.log.trial_id,
            t.log.altitude * 100.0,
            t.segment.freefall_start,
            t.segment.impact_start,
            t.segment.peak
        );
    }
    write_output(out, &csv)
}

#[derive(Debug, Args)]
pub struct FitStiffnessArgs {
    /// CSV with header `displacement_mm,force_N`.
    #[arg(long)]
    input: PathBuf,
    /// Force at zero displacement, N. Defaults to mass·gravity.
    #[arg(long)]
    weight: Option<f64>,
}

pub fn fit_stiffness(
    config: &RunConfig,
    args: &FitStiffnessArgs,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let file = std::fs::File::open(&args.input)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", args.input.display())))?;
    let data = crashfit_core::estimate::read_static_csv(file)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    let weight = args.weight.unwrap_or(config.mass * config.gravity);
    let fit = fit_static(&data, weight).map_err(|e| CliError::Data(e.to_string()))?;
    let report = json!({
        "generated_by": config.header("fit-stiffness"),
        "mode": "stiffness",
        "parameters": { "k": fit.k, "intercept": fit.intercept },
        "loss": fit.rmse * fit.rmse,
        "rmse": fit.rmse,
        "points": data.len(),
        "iterations": 0,
        "converged": true,
    });
    write_output(out, &json_text(&report))?;
    summary(
        out,
        &format!(
            "stiffness k = {:.3} N/m (intercept pinned at {:.4} N, rmse {:.4} N over {} points)",
            fit.k,
            fit.intercept,
            fit.rmse,
            data.len()
        ),
    );
    Ok(())
}

/// Human summary goes to stdout when the report went to a file, else stderr.
fn summary(out: Option<&Path>, text: &str) {
    if out.is_some() {
        println!("{text}");
    } else {
        eprintln!("{text}");
    }
}

#[derive(Debug, Args)]
pub struct FitDampingArgs {
    #[command(flatten)]
    logs: LogInputs,
    /// Fit stiffness together with damping instead of holding it at --stiffness.
    #[arg(long)]
    joint: bool,
    /// Starting damping, N·s/m.
    #[arg(long, default_value_t = 50.0)]
    c0: f64,
    /// Starting stiffness for the joint fit, N/m. Defaults to --stiffness.
    #[arg(long)]
    k0: Option<f64>,
    /// Simplex iteration budget per fit.
    #[arg(long, default_value_t = NelderMeadOptions::default().max_iterations)]
    max_iterations: usize,
}

fn fit_json(fit: &FitResult) -> serde_json::Value {
    json!({ "c": fit.c, "k": fit.k, "loss": fit.loss, "iterations": fit.iterations, "converged": fit.converged })
}

pub fn fit_damping(
    config: &RunConfig,
    args: &FitDampingArgs,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let params = config.params()?;
    let filter = config.filter()?;
    let groups = load_groups(config, &args.logs.inputs)?;
    let prepared = PreparedGroups::new(&groups)?;
    let options = NelderMeadOptions {
        max_iterations: args.max_iterations,
        ..Default::default()
    };
    let k0 = args.k0.unwrap_or(config.stiffness);

    let fixed = fit_damping_prepared(
        &prepared,
        &filter,
        &params,
        StiffnessMode::Fixed(config.stiffness),
        args.c0,
        k0,
        &options,
    )?;
    let joint = fit_damping_prepared(
        &prepared,
        &filter,
        &params,
        StiffnessMode::Joint,
        args.c0,
        k0,
        &options,
    )?;
    let (mode, primary) = if args.joint {
        ("damping-joint", &joint)
    } else {
        ("damping-fixed-k", &fixed)
    };
    let adopted = adopt(&fixed, &joint);
    let source = if std::ptr::eq(adopted, &fixed) {
        "fixed-k"
    } else {
        "joint"
    };
    let rel_gap = (fixed.loss - joint.loss) / joint.loss.abs().max(f64::MIN_POSITIVE);

    let report = json!({
        "generated_by": config.header("fit-damping"),
        "mode": mode,
        "parameters": { "m": params.mass(), "c": primary.c, "k": primary.k, "g": params.gravity() },
        "loss": primary.loss,
        "iterations": primary.iterations,
        "converged": primary.converged,
        "start": { "c0": args.c0, "k0": k0 },
        "groups": groups.iter().map(|g| json!({
            "altitude_cm": g.altitude() * 100.0,
            "trials": g.trials().len(),
        })).collect::<Vec<_>>(),
        "comparison": {
            "fixed_k": fit_json(&fixed),
            "joint": fit_json(&joint),
            "relative_loss_gap": rel_gap,
            "adopted": { "source": source, "c": adopted.c, "k": adopted.k, "loss": adopted.loss },
        },
    });
    write_output(out, &json_text(&report))?;

    let trials: usize = groups.iter().map(|g| g.trials().len()).sum();
    summary(out, &format!(
        "{mode}: c = {:.4} N·s/m, k = {:.2} N/m, loss = {:.6} ({} iterations{})\n\
         {} trials in {} altitude groups\n\
         joint fit loss {:.6} (c = {:.4}, k = {:.2}) vs static k loss {:.6} (c = {:.4}, k = {:.2}); \
         relative gap {:.3e}, adopting the {source} parameters",
        primary.c,
        primary.k,
        primary.loss,
        primary.iterations,
        if primary.converged { "" } else { ", NOT converged" },
        trials,
        groups.len(),
        joint.loss,
        joint.c,
        joint.k,
        fixed.loss,
        fixed.c,
        fixed.k,
        rel_gap,
    ));
    if !primary.converged {
        return Err(CliError::NotConverged(format!(
            "{mode} fit did not converge within {} iterations",
            options.max_iterations
        )));
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct LossSurfaceArgs {
    #[command(flatten)]
    logs: LogInputs,
    /// Damping range lo:hi, N·s/m.
    #[arg(long, value_parser = parse_range, default_value = "30:60")]
    c_range: (f64, f64),
    /// Stiffness range lo:hi, N/m.
    #[arg(long, value_parser = parse_range, default_value = "6000:8000")]
    k_range: (f64, f64),
    /// Grid points per axis, `N` or `NcxNk`.
    #[arg(long, value_parser = parse_resolution, default_value = "31x31")]
    resolution: (usize, usize),
}

fn grid_csv(header: &str, c: &[f64], k: &[f64], values: &[Vec<f64>]) -> String {
    let mut csv = String::new();
    let _ = writeln!(csv, "{header}");
    csv.push_str("c_Nspm\\k_Npm");
    for k in k {
        let _ = write!(csv, ",{k}");
    }
    csv.push('\n');
    for (c, row) in c.iter().zip(values) {
        let _ = write!(csv, "{c}");
        for v in row {
            let _ = write!(csv, ",{v}");
        }
        csv.push('\n');
    }
    csv
}

pub fn loss_surface(
    config: &RunConfig,
    args: &LossSurfaceArgs,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let out = out.ok_or_else(|| CliError::Usage("loss-surface needs --out FILE.csv".into()))?;
    let params = config.params()?;
    let filter = config.filter()?;
    let groups = load_groups(config, &args.logs.inputs)?;
    let s = surface(
        &groups,
        &filter,
        &params,
        args.c_range,
        args.k_range,
        args.resolution,
    )?;
    let header = config.header("loss-surface");

    let transformed_path = out.with_extension("ln1p.csv");
    let summary_path = out.with_extension("json");
    write_output(
        Some(out),
        &grid_csv(&header, &s.c_values, &s.k_values, &s.loss),
    )?;
    write_output(
        Some(&transformed_path),
        &grid_csv(&header, &s.c_values, &s.k_values, &s.transformed),
    )?;
    let min = s.argmin();
    let report = json!({
        "generated_by": header,
        "c_range": [args.c_range.0, args.c_range.1],
        "k_range": [args.k_range.0, args.k_range.1],
        "resolution": [args.resolution.0, args.resolution.1],
        "argmin": {
            "c_index": min.c_index,
            "k_index": min.k_index,
            "c": min.c,
            "k": min.k,
            "loss": min.loss,
            "ln1p_loss": min.loss.ln_1p(),
        },
        "files": { "raw": out, "ln1p": transformed_path },
    });
    write_output(Some(&summary_path), &json_text(&report))?;
    println!(
        "grid minimum at c = {}, k = {} (loss {:.6})",
        min.c, min.k, min.loss
    );
    Ok(())
}

fn default_altitudes() -> Vec<f64> {
    (1..=80).map(|i| i as f64 * 0.25).collect()
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    /// Comma separated ascending drop altitudes; defaults to 25cm..2000cm in 25cm steps.
    #[arg(long, value_delimiter = ',', value_parser = parse_altitude)]
    altitudes: Vec<f64>,
}

pub fn energy(config: &RunConfig, args: &EnergyArgs, out: Option<&Path>) -> Result<(), CliError> {
    let params = config.params()?;
    let clearance = config.clearance()?;
    let altitudes = if args.altitudes.is_empty() {
        default_altitudes()
    } else {
        args.altitudes.clone()
    };
    let rows = extrapolate(&params, &altitudes, &clearance)?;
    let mut csv = String::new();
    let _ = writeln!(csv, "{}", config.header("energy"));
    csv.push_str(&partition_csv(&rows));
    write_output(out, &csv)
}
