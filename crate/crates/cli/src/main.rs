//! `semitrailer`: simulate maneuvers, validate models against logs and
//! tabulate the results.

mod maneuver;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use semitrailer_core::controller::{min_stabilizing_gain, ControllerConfig};
use semitrailer_core::harness::{
    generate_maneuver, simulate, ArticulationReference, InputTrace, RunConfig, RunOutcome,
    Trajectory,
};
use semitrailer_core::ingest::{parse_log, write_log, MeasurementLog};
use semitrailer_core::metrics::ErrorReport;
use semitrailer_core::params::{LoadCondition, ModelKind, VehicleParams};
use semitrailer_core::plot::{trajectory_figure, Series};
use semitrailer_core::report::{aggregate, reports_from_json, reports_to_json, ReportTable, TableFormat};
use semitrailer_core::validation::{replay_inputs, validate, ReferenceData, MEASUREMENT_RATE};

#[derive(Parser)]
#[command(name = "semitrailer", version, about = "Tractor-semitrailer simulation and model validation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one maneuver and write the trajectory and a path plot.
    Simulate(SimulateArgs),
    /// Score models against a reference log.
    Validate(ValidateArgs),
    /// Average saved reports per model into one table.
    Report(ReportArgs),
    /// Print or check a vehicle parameter file.
    Params(ParamsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Kin,
    Stm,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Kin => ModelKind::Kin,
            ModelArg::Stm => ModelKind::Stm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LoadArg {
    Unloaded,
    Loaded,
}

impl From<LoadArg> for LoadCondition {
    fn from(l: LoadArg) -> Self {
        match l {
            LoadArg::Unloaded => LoadCondition::Unloaded,
            LoadArg::Loaded => LoadCondition::Loaded,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Delimited,
}

impl From<FormatArg> for TableFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => TableFormat::Text,
            FormatArg::Delimited => TableFormat::Delimited,
        }
    }
}

#[derive(Args)]
struct VehicleArgs {
    #[arg(long, value_enum, default_value = "unloaded")]
    load: LoadArg,
    /// Parameter file replacing the built-in set.
    #[arg(long)]
    params: Option<PathBuf>,
}

impl VehicleArgs {
    fn resolve(&self, model: ModelKind) -> Result<VehicleParams> {
        match &self.params {
            Some(path) => VehicleParams::load(path).with_context(|| format!("loading {}", path.display())),
            None => Ok(VehicleParams::builtin(self.load.into(), model)),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "stm")]
    model: ModelArg,
    #[command(flatten)]
    vehicle: VehicleArgs,
    /// Preset `kind[:amplitude_deg[:speed_kmh[:left|right]]]` (kinds:
    /// constant, ramp, slalom, figure8) or a log file to replay.
    #[arg(long)]
    maneuver: String,
    /// Articulation feedback gain used while reversing.
    #[arg(long, default_value_t = 3.0)]
    gain: f64,
    /// Log whose articulation the reverse feedback tracks.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the maneuver duration, s.
    #[arg(long)]
    duration: Option<f64>,
    /// Internal integration step, s.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
}

#[derive(Args)]
struct ValidateArgs {
    /// Models to score; repeat or separate with commas.
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["kin", "stm"])]
    model: Vec<ModelArg>,
    #[command(flatten)]
    vehicle: VehicleArgs,
    /// Reference log.
    #[arg(long)]
    reference: PathBuf,
    /// Label for the maneuver; defaults to the log file name.
    #[arg(long)]
    maneuver: Option<String>,
    #[arg(long, default_value_t = 3.0)]
    gain: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
}

#[derive(Args)]
struct ReportArgs {
    /// Report files written by `validate`.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ParamsArgs {
    #[arg(long, value_enum, default_value = "stm")]
    model: ModelArg,
    #[command(flatten)]
    vehicle: VehicleArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Report(a) => cmd_report(a),
        Command::Params(a) => cmd_params(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn read_log(path: &Path) -> Result<MeasurementLog> {
    parse_log(path).with_context(|| format!("reading log {}", path.display()))
}

/// Reverse runs rely on the feedback, which only stabilizes above K_min.
fn check_gain(gain: f64, p: &VehicleParams) -> Result<()> {
    let kmin = min_stabilizing_gain(p)?;
    if gain <= kmin {
        bail!("reverse maneuver refused: K ≤ K_min = {kmin:.3} (got K = {gain})");
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let model: ModelKind = a.model.into();
    let p = a.vehicle.resolve(model)?;

    let (trace, mut recorded) = if maneuver::is_preset(&a.maneuver) {
        let mut spec = maneuver::parse_preset(&a.maneuver, &p)?;
        if let Some(d) = a.duration {
            spec.duration = d;
        }
        (generate_maneuver(&spec)?, None)
    } else {
        let path = Path::new(&a.maneuver);
        if !path.is_file() {
            bail!("`{}` is neither a maneuver preset nor a log file", a.maneuver);
        }
        let replay = replay_inputs(&read_log(path)?)?;
        (replay.trace, replay.gamma)
    };
    if let Some(path) = &a.reference {
        let gamma = replay_inputs(&read_log(path)?)?
            .gamma
            .with_context(|| format!("{} has no articulation channel", path.display()))?;
        if gamma.len() != trace.times.len() {
            bail!(
                "reference {} has {} samples at 100 Hz, the maneuver has {}",
                path.display(),
                gamma.len(),
                trace.times.len()
            );
        }
        recorded = Some(gamma);
    }
    if trace.is_reversing() {
        check_gain(a.gain, &p)?;
    }
    let reference = match recorded {
        Some(g) => ArticulationReference::Recorded(g),
        None => ArticulationReference::SteadyState,
    };
    let cfg = RunConfig {
        dt: a.dt,
        controller: ControllerConfig {
            gain: a.gain,
            ..ControllerConfig::default()
        },
        ..RunConfig::default()
    };
    let traj = simulate(model, &trace, &p, &cfg, Some(&reference))?;

    let csv = write(&a.out, "trajectory.csv", &traj.to_delimited())?;
    let log = write(&a.out, "log.csv", &write_log(&MeasurementLog::from_trajectory(&traj, MEASUREMENT_RATE)))?;
    let svg = write(&a.out, "path.svg", &trajectory_figure(&[(model.label(), &traj)]).to_svg())?;
    print_summary(&traj, &trace);
    println!("wrote {}, {} and {}", csv.display(), log.display(), svg.display());
    if let RunOutcome::Aborted { time, gamma } = traj.outcome {
        bail!(
            "jackknife guard aborted the run at t = {time:.2} s with |γ| = {:.1}°",
            gamma.abs().to_degrees()
        );
    }
    Ok(())
}

fn print_summary(traj: &Trajectory, trace: &InputTrace) {
    let last = traj.samples.last().copied().unwrap_or_default();
    println!("model: {}", traj.model.label());
    println!("duration: {:.2} s of {:.2} s", last.t - trace.times[0], trace.duration());
    println!("max |gamma|: {:.4} rad ({:.1} deg)", traj.max_abs_gamma(), traj.max_abs_gamma().to_degrees());
    println!(
        "final drive axle: X1 = {:.3} m, Y1 = {:.3} m, psi1 = {:.4} rad",
        last.x1, last.y1, last.psi1
    );
    println!("traveled: {:.3} m", last.s);
    match traj.warn_time {
        Some(t) => println!("guard: warning at t = {t:.2} s"),
        None => println!("guard: no events"),
    }
}

fn cmd_validate(a: ValidateArgs) -> Result<()> {
    let log = read_log(&a.reference)?;
    let label = a.maneuver.clone().unwrap_or_else(|| {
        a.reference
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "reference".into())
    });
    let mut reports: Vec<ErrorReport> = Vec::new();
    let mut runs = Vec::new();
    let mut reference_paths = None;
    for m in &a.model {
        let model: ModelKind = (*m).into();
        let p = a.vehicle.resolve(model)?;
        let reference = ReferenceData::from_log(&log, &p)?;
        if reference.u1.iter().any(|u| *u < 0.0) {
            check_gain(a.gain, &p)?;
        }
        let cfg = RunConfig {
            controller: ControllerConfig {
                gain: a.gain,
                ..ControllerConfig::default()
            },
            ..RunConfig::default()
        };
        let v = validate(model, &reference, &p, &cfg, &label)
            .with_context(|| format!("validating {}", model.label()))?;
        reference_paths.get_or_insert_with(|| {
            [
                Series::new("measured tractor", reference.x1.iter().zip(&reference.y1).map(|(x, y)| [*x, *y]).collect()),
                Series::new("measured trailer", reference.x2.iter().zip(&reference.y2).map(|(x, y)| [*x, *y]).collect()),
            ]
        });
        reports.push(v.report);
        runs.push((model.label(), v.trajectory));
    }

    let table = ReportTable::from_reports(&reports)?.render(a.format.into());
    print!("{table}");
    if let Some(out) = &a.out {
        write(out, "reports.json", &reports_to_json(&reports))?;
        let ext = match a.format {
            FormatArg::Text => "txt",
            FormatArg::Delimited => "csv",
        };
        write(out, &format!("table.{ext}"), &table)?;
        let named: Vec<(&str, &Trajectory)> = runs.iter().map(|(l, t)| (*l, t)).collect();
        let mut fig = trajectory_figure(&named);
        if let Some(paths) = reference_paths {
            fig.paths.splice(0..0, paths);
        }
        write(out, "validation.svg", &fig.to_svg())?;
    }
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let mut reports = Vec::new();
    for path in &a.reports {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        reports.extend(reports_from_json(&text).with_context(|| format!("parsing {}", path.display()))?);
    }
    let averaged = aggregate(&reports)?;
    let table = ReportTable::from_reports(&averaged)?.render(a.format.into());
    print!("{table}");
    if let Some(out) = &a.out {
        write(out, "summary.json", &reports_to_json(&averaged))?;
    }
    Ok(())
}

fn cmd_params(a: ParamsArgs) -> Result<()> {
    let p = a.vehicle.resolve(a.model.into())?;
    let text = p.to_param_file();
    match &a.out {
        Some(path) => {
            fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}
