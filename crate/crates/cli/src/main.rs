//! `bellowlab` command-line entry point.
//!
//! Exit codes: 0 success, 2 usage or validation error, 1 internal error.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bellowlab::actuator::{CellShape, ElongationSource};
use bellowlab::arm::JointStop;
use bellowlab::design::{self, downselect, enumerate, paper_constraints, PAPER_CELL_COUNTS, PAPER_CELL_LENGTHS_CM};
use bellowlab::experiment::{self, run_trial, Experiment};
use bellowlab::io::imu::parse_imu_csv;
use bellowlab::io::pattern::{emit_pattern, DEFAULT_CHANNEL_WIDTH_CM};
use bellowlab::io::report::{render_report, MetricTable, ReportInput};
use bellowlab::io::svg::{pressure_plot_svg, trajectory_plot_svg};
use bellowlab::io::trajectory::{parse_trajectory_csv, trajectory_to_csv};
use bellowlab::metrics::{metrics_from_csv, metrics_to_csv, summarize, trial_metrics};
use bellowlab::pneumatics::{
    calibrate_resistances, scan_grid, separation_conflict, target_flagged, SearchGrid, ShapeFactors,
};
use bellowlab::stats::{compare_by_factor, comparisons_to_csv, ks_normality, Factor, Pooling, DEFAULT_ALPHA};
use bellowlab::{ActuatorSpec, ElongationData, Error, ExperimentConfig, Metric, PneumaticConfig, Result};

const DEFAULT_OUT: &str = "bellowlab-out";

#[derive(Parser, Debug)]
#[command(
    name = "bellowlab",
    version,
    about = "Bellow actuator design, simulation and analysis toolkit"
)]
struct Cli {
    /// Output directory [default: bellowlab-out]
    #[arg(long, global = true, env = "BELLOWLAB_OUT")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List candidate variants as `shape,p,n`.
    Enumerate(SpaceArgs),
    /// Apply the design constraints and list the viable variants.
    Downselect(DownselectArgs),
    /// Simulate repeated inflate/vent trials and write per-trial metrics.
    Simulate(SimulateArgs),
    /// Compute metrics from recorded trajectory and IMU files.
    Metrics(MetricsArgs),
    /// Normality check, Kruskal-Wallis and Dunn's test on a metrics file.
    Stats(StatsArgs),
    /// Write the markdown report with elongation and metric tables.
    Report(ReportArgs),
    /// Emit cut-and-seal pattern drawings.
    Pattern(PatternArgs),
    /// Fit shape resistance factors and supply flow to the incomplete-fill set.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Debug)]
struct SpaceArgs {
    /// Use the published design space (3 shapes × 4 lengths × 6 counts).
    #[arg(long)]
    paper_space: bool,
    #[arg(long, value_delimiter = ',')]
    shapes: Vec<CellShape>,
    #[arg(long, value_delimiter = ',')]
    lengths: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    counts: Vec<u32>,
}

impl SpaceArgs {
    fn specs(&self) -> Result<Vec<ActuatorSpec>> {
        let custom = !(self.shapes.is_empty() && self.lengths.is_empty() && self.counts.is_empty());
        if self.paper_space && custom {
            return Err(Error::Validation(
                "--paper-space cannot be combined with explicit axes".into(),
            ));
        }
        let shapes = if self.shapes.is_empty() {
            CellShape::ALL.to_vec()
        } else {
            self.shapes.clone()
        };
        let lengths = if self.lengths.is_empty() {
            PAPER_CELL_LENGTHS_CM.to_vec()
        } else {
            self.lengths.clone()
        };
        let counts = if self.counts.is_empty() {
            PAPER_CELL_COUNTS.to_vec()
        } else {
            self.counts.clone()
        };
        let specs = enumerate(&shapes, &lengths, &counts);
        for s in &specs {
            s.validate()?;
        }
        Ok(specs)
    }
}

#[derive(Args, Debug)]
struct DownselectArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// Read candidates (`shape,p,n` per line) from a file instead.
    #[arg(long, conflicts_with = "paper_space")]
    from: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Variant `shape,p,n`; repeatable. Defaults to the 18 viable variants.
    #[arg(long = "variant")]
    variants: Vec<ActuatorSpec>,
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Duration of each inflate and vent phase (s).
    #[arg(long)]
    phase_s: Option<f64>,
    /// Pneumatic parameter file (TOML).
    #[arg(long)]
    pneumatics: Option<PathBuf>,
    #[arg(long)]
    source: Option<ElongationSource>,
    #[arg(long)]
    joint_stop: Option<JointStopArg>,
    /// Marker position noise (cm).
    #[arg(long)]
    sigma_pos: Option<f64>,
    /// Acceleration noise (m/s²).
    #[arg(long)]
    sigma_acc: Option<f64>,
    /// Also write every trial's marker trajectory.
    #[arg(long)]
    save_trajectories: bool,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum JointStopArg {
    Hard,
    Soft,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Trajectory CSV (`t_s,sx,sy,ex,ey,wx,wy`).
    #[arg(long)]
    trajectory: PathBuf,
    /// IMU CSV (`t_s,ax,ay,az`); acceleration is derived from positions otherwise.
    #[arg(long)]
    imu: Option<PathBuf>,
    /// Accept an IMU rate other than 60 Hz.
    #[arg(long)]
    imu_rate: Option<f64>,
    #[arg(long)]
    variant: ActuatorSpec,
    #[arg(long, default_value_t = 1)]
    trial: u32,
    /// Analyse samples from this time on (s).
    #[arg(long)]
    flexion_start_s: Option<f64>,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Metrics CSV as written by `simulate`.
    #[arg(long)]
    metrics: PathBuf,
    #[arg(long, value_enum, default_value_t = PoolingArg::Trials)]
    pooling: PoolingArg,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Metrics to test; defaults to path, si and jerk.
    #[arg(long = "metric")]
    metrics_list: Vec<Metric>,
    /// Factors to group by; defaults to shape, size and cells.
    #[arg(long = "factor")]
    factors: Vec<Factor>,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum PoolingArg {
    Trials,
    Means,
}

impl From<PoolingArg> for Pooling {
    fn from(p: PoolingArg) -> Self {
        match p {
            PoolingArg::Trials => Pooling::Trials,
            PoolingArg::Means => Pooling::VariantMeans,
        }
    }
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Per-trial metrics CSV; summaries and rank tests are computed from it.
    #[arg(long, conflicts_with_all = ["published", "summary"])]
    metrics: Option<PathBuf>,
    /// Use the bundled published mean±SD summaries.
    #[arg(long)]
    published: bool,
    /// Summary CSV (`metric,shape,p_cm,n,mean,sd`).
    #[arg(long, conflicts_with = "published")]
    summary: Option<PathBuf>,
    /// Pneumatic parameter file used to flag incomplete variants.
    #[arg(long)]
    pneumatics: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PoolingArg::Trials)]
    pooling: PoolingArg,
    #[arg(long, default_value = "Bellow actuator evaluation")]
    title: String,
}

#[derive(Args, Debug)]
struct PatternArgs {
    /// Variant `shape,p,n`; repeatable.
    #[arg(long = "variant", required_unless_present = "all")]
    variants: Vec<ActuatorSpec>,
    /// Every viable variant of the published design space.
    #[arg(long)]
    all: bool,
    #[arg(long, default_value_t = bellowlab::actuator::DEFAULT_SEAM_MARGIN_CM)]
    seam_margin: f64,
    #[arg(long, default_value_t = DEFAULT_CHANNEL_WIDTH_CM)]
    channel_width: f64,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    /// Required relative slack on each side of the actuation window.
    #[arg(long)]
    margin: Option<f64>,
}

fn write_out(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_pneumatics(path: Option<&Path>) -> Result<PneumaticConfig> {
    match path {
        Some(p) => PneumaticConfig::from_path(p),
        None => Ok(PneumaticConfig::default()),
    }
}

fn read_metrics(path: &Path) -> Result<Vec<bellowlab::TrialMetrics>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    metrics_from_csv(file)
}

fn flagged_among(variants: &[ActuatorSpec], pneumatics: &PneumaticConfig) -> Result<BTreeSet<ActuatorSpec>> {
    let exp = Experiment {
        variants: variants.to_vec(),
        pneumatics: pneumatics.clone(),
        ..Experiment::standard(0)
    };
    let mut out = BTreeSet::new();
    for spec in variants {
        // variants outside the displacement table cannot be classified
        if exp
            .data
            .displacement
            .per_cell_displacement(spec.shape, spec.cell_length_cm)
            .is_err()
        {
            continue;
        }
        if bellowlab::pneumatics::classify_completion(spec, &exp.data.displacement, pneumatics)?
            == bellowlab::Completion::Incomplete
        {
            out.insert(*spec);
        }
    }
    Ok(out)
}

fn cmd_enumerate(args: &SpaceArgs, out: Option<&Path>, stdout: &mut String) -> Result<()> {
    let specs = args.specs()?;
    let mut text = String::new();
    for s in &specs {
        let _ = writeln!(text, "{}", s.key());
    }
    if let Some(dir) = out {
        write_out(&dir.join("variants.csv"), &format!("shape,p_cm,n\n{text}"))?;
    }
    stdout.push_str(&text);
    Ok(())
}

fn cmd_downselect(args: &DownselectArgs, out: Option<&Path>, stdout: &mut String) -> Result<()> {
    let specs = match &args.from {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with("shape"))
                .map(str::parse)
                .collect::<Result<Vec<ActuatorSpec>>>()?
        }
        None => args.space.specs()?,
    };
    let report = downselect(&specs, &paper_constraints());
    if let Some(dir) = out {
        write_out(&dir.join("downselect.csv"), &report.to_csv())?;
    }
    for s in &report.viable {
        let _ = writeln!(stdout, "{}", s.key());
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs, out: &Path, stdout: &mut String) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if !args.variants.is_empty() {
        cfg.variants = args.variants.iter().map(ActuatorSpec::key).collect();
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(p) = args.phase_s {
        cfg.phase_s = p;
    }
    if let Some(p) = &args.pneumatics {
        cfg.pneumatics = Some(p.clone());
    }
    if let Some(s) = args.source {
        cfg.elongation_source = s;
    }
    if let Some(j) = args.joint_stop {
        cfg.arm.joint_stop = Some(match j {
            JointStopArg::Hard => JointStop::Hard,
            JointStopArg::Soft => JointStop::Soft,
        });
    }
    if let Some(s) = args.sigma_pos {
        cfg.noise.sigma_pos_cm = s;
    }
    if let Some(s) = args.sigma_acc {
        cfg.noise.sigma_acc_ms2 = s;
    }
    let exp = Experiment::from_config(&cfg)?;
    let variants = exp.ordered_variants();

    let rows = experiment::run_sweep(&exp)?;
    write_out(&out.join("metrics.csv"), &metrics_to_csv(&rows))?;
    let summaries = summarize(&rows);
    write_out(
        &out.join("summary.csv"),
        &MetricTable::from_summaries(&summaries).to_csv(),
    )?;

    let pressure = experiment::pressure_series(&exp)?;
    for series in &pressure {
        write_out(
            &out.join("pressure").join(format!("{}.csv", series.label)),
            &series.to_csv(),
        )?;
    }
    write_out(
        &out.join("pressure.svg"),
        &pressure_plot_svg("Pressure during inflation and venting", &pressure)?,
    )?;

    let mut first_trials = Vec::with_capacity(variants.len());
    for spec in &variants {
        for trial in 1..=exp.trials {
            if trial > 1 && !args.save_trajectories {
                break;
            }
            let run = run_trial(&exp, spec, trial)?;
            if args.save_trajectories {
                write_out(
                    &out.join("trajectories")
                        .join(format!("{}-trial{trial}.csv", spec.label())),
                    &trajectory_to_csv(&run.trajectory),
                )?;
            }
            if trial == 1 {
                first_trials.push((spec.label(), run.trajectory));
            }
        }
    }
    let refs: Vec<(String, &bellowlab::Trajectory)> = first_trials.iter().map(|(l, t)| (l.clone(), t)).collect();
    write_out(
        &out.join("trajectories.svg"),
        &trajectory_plot_svg("End-effector paths, trial 1", &refs)?,
    )?;

    let flagged: BTreeSet<ActuatorSpec> = experiment::incomplete_variants(&exp)?.into_iter().collect();
    let _ = writeln!(stdout, "variant,trials,path_cm,si,jerk_ms3,angle_deg");
    for s in &summaries {
        let _ = writeln!(
            stdout,
            "{}{},{},{},{},{},{}",
            s.variant.label(),
            if flagged.contains(&s.variant) { "*" } else { "" },
            s.trials,
            s.path_length_cm,
            s.straightness_index,
            s.mean_abs_jerk_ms3,
            s.flexion_range_deg
        );
    }
    Ok(())
}

fn cmd_metrics(args: &MetricsArgs, out: &Path, stdout: &mut String) -> Result<()> {
    let imported = parse_trajectory_csv(&args.trajectory)?;
    for w in &imported.warnings {
        eprintln!("warning: {}: {w}", args.trajectory.display());
    }
    let mut traj = imported.trajectory;
    let start_t = args.flexion_start_s.unwrap_or(f64::NEG_INFINITY);
    if args.flexion_start_s.is_some() {
        let idx = traj.t_s.partition_point(|&t| t < start_t);
        if traj.len() - idx < 2 {
            return Err(Error::Validation(format!(
                "fewer than two samples after t = {start_t} s"
            )));
        }
        traj.flexion_start = Some(idx);
    }
    let imu = match &args.imu {
        Some(path) => Some(parse_imu_csv(path, args.imu_rate)?),
        None => None,
    };
    let imu_window: Option<Vec<f64>> = imu.as_ref().map(|s| {
        s.samples
            .iter()
            .zip(&s.magnitude_ms2)
            .filter(|(sample, _)| sample.t_s >= start_t)
            .map(|(_, m)| *m)
            .collect()
    });
    let accel = match (&imu, &imu_window) {
        (Some(s), Some(w)) => Some((w.as_slice(), s.rate_hz)),
        _ => None,
    };
    let row = trial_metrics(&traj, args.variant, args.trial, accel)?;
    let text = metrics_to_csv(&[row]);
    write_out(&out.join("metrics.csv"), &text)?;
    stdout.push_str(&text);
    Ok(())
}

fn cmd_stats(args: &StatsArgs, out: &Path, stdout: &mut String) -> Result<()> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::Validation(format!("alpha {} must lie in (0, 1)", args.alpha)));
    }
    let rows = read_metrics(&args.metrics)?;
    let metrics = if args.metrics_list.is_empty() {
        vec![Metric::PathLength, Metric::StraightnessIndex, Metric::Jerk]
    } else {
        args.metrics_list.clone()
    };
    let factors = if args.factors.is_empty() {
        Factor::ALL.to_vec()
    } else {
        args.factors.clone()
    };
    let mut text = String::new();
    let mut comparisons = Vec::new();
    for &metric in &metrics {
        let values: Vec<f64> = rows.iter().map(|r| metric.value(r)).collect();
        match ks_normality(&values) {
            Ok(ks) => {
                let _ = writeln!(
                    text,
                    "{} normality: D={:.4}, {} ({})",
                    metric.title(),
                    ks.statistic,
                    bellowlab::stats::format_p(ks.p_value),
                    ks.note.as_deref().unwrap_or("")
                );
            }
            Err(e) => {
                let _ = writeln!(text, "{} normality: not computed ({e})", metric.title());
            }
        }
        for &factor in &factors {
            let cmp = compare_by_factor(&rows, metric, factor, args.pooling.into(), args.alpha)?;
            text.push_str(&cmp.report_block());
            comparisons.push(cmp);
        }
    }
    write_out(&out.join("stats.csv"), &comparisons_to_csv(&comparisons))?;
    write_out(&out.join("stats.txt"), &text)?;
    stdout.push_str(&text);
    Ok(())
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn cmd_report(args: &ReportArgs, out: &Path, stdout: &mut String) -> Result<()> {
    let pneumatics = load_pneumatics(args.pneumatics.as_deref())?;
    let (table, comparisons, notes) = if let Some(path) = &args.metrics {
        let rows = read_metrics(path)?;
        let table = MetricTable::from_summaries(&summarize(&rows));
        let mut comparisons = Vec::new();
        for metric in [Metric::PathLength, Metric::StraightnessIndex, Metric::Jerk] {
            for factor in Factor::ALL {
                match compare_by_factor(&rows, metric, factor, args.pooling.into(), DEFAULT_ALPHA) {
                    Ok(c) => comparisons.push(c),
                    Err(Error::Domain(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        let note = format!("Summaries of {} trials from {}.", rows.len(), file_name(path));
        (table, comparisons, vec![note])
    } else if let Some(path) = &args.summary {
        (
            MetricTable::from_path(path)?,
            Vec::new(),
            vec![format!("Summaries from {}.", file_name(path))],
        )
    } else if args.published {
        (
            MetricTable::published(),
            Vec::new(),
            vec!["Published summary values.".to_string()],
        )
    } else {
        return Err(Error::Validation(
            "report needs --metrics, --summary or --published".into(),
        ));
    };
    let variants: Vec<ActuatorSpec> = table.variants().into_iter().collect();
    let flagged = flagged_among(&variants, &pneumatics)?;
    let data = ElongationData::default();
    let input = ReportInput {
        title: args.title.clone(),
        variants,
        elongation: Some(&data),
        metrics: &table,
        flagged,
        comparisons: &comparisons,
        notes,
    };
    let text = render_report(&input)?;
    let path = out.join(bellowlab::io::report::REPORT_FILE);
    write_out(&path, &text)?;
    let _ = writeln!(stdout, "{}", path.display());
    Ok(())
}

fn cmd_pattern(args: &PatternArgs, out: &Path, stdout: &mut String) -> Result<()> {
    let mut variants = args.variants.clone();
    if args.all {
        variants.extend(downselect(&design::enumerate_paper_space(), &paper_constraints()).viable);
    }
    variants.sort_by(|a, b| a.report_cmp(b));
    variants.dedup();
    for spec in &variants {
        let layout = emit_pattern(spec, args.seam_margin, args.channel_width)?;
        let path = out.join("patterns").join(format!("{}.svg", spec.label()));
        write_out(&path, &layout.to_svg())?;
        let panel = &layout.panels[0];
        let _ = writeln!(
            stdout,
            "{},{},{},{}",
            spec.label(),
            panel.width_cm,
            panel.height_cm,
            path.display()
        );
    }
    Ok(())
}

fn cmd_calibrate(args: &CalibrateArgs, out: &Path, stdout: &mut String) -> Result<()> {
    let data = ElongationData::default();
    let base = PneumaticConfig::default();
    let viable = downselect(&design::enumerate_paper_space(), &paper_constraints()).viable;
    let flagged = target_flagged();
    let unflagged: Vec<ActuatorSpec> = viable.iter().filter(|v| !flagged.contains(v)).copied().collect();
    let mut grid = SearchGrid::default();
    if let Some(m) = args.margin {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::Validation(format!("margin {m} must be non-negative")));
        }
        grid.margin = m;
    }

    let equal = SearchGrid::equal_resistance();
    let scan = scan_grid(&flagged, &unflagged, &equal, &base, &data.displacement)?;
    let conflict = separation_conflict(&flagged, &unflagged, &ShapeFactors::uniform(1.0), &data.displacement)?;
    let _ = writeln!(
        stdout,
        "equal-resistance model: {} of {} flow values feasible",
        scan.feasible, scan.evaluated
    );
    if let Some((f, u)) = conflict {
        let _ = writeln!(
            stdout,
            "  {} must be incomplete but holds less air than {}, which must complete",
            f.label(),
            u.label()
        );
    }

    let cfg = calibrate_resistances(&flagged, &unflagged, &grid, &base, &data.displacement)?;
    let _ = writeln!(
        stdout,
        "calibrated: square {} rectangle {} circle {} flow {} cm3/s (margin {})",
        cfg.shape_resistance.square,
        cfg.shape_resistance.rectangle,
        cfg.shape_resistance.circle,
        cfg.supply_flow_cm3_s,
        grid.margin
    );
    let path = out.join("pneumatics.toml");
    write_out(&path, &cfg.to_toml())?;
    let _ = writeln!(stdout, "{}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<String> {
    let mut stdout = String::new();
    let explicit_out = cli.out.as_deref();
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    match &cli.command {
        Command::Enumerate(a) => cmd_enumerate(a, explicit_out, &mut stdout)?,
        Command::Downselect(a) => cmd_downselect(a, explicit_out, &mut stdout)?,
        Command::Simulate(a) => cmd_simulate(a, &out, &mut stdout)?,
        Command::Metrics(a) => cmd_metrics(a, &out, &mut stdout)?,
        Command::Stats(a) => cmd_stats(a, &out, &mut stdout)?,
        Command::Report(a) => cmd_report(a, &out, &mut stdout)?,
        Command::Pattern(a) => cmd_pattern(a, &out, &mut stdout)?,
        Command::Calibrate(a) => cmd_calibrate(a, &out, &mut stdout)?,
    }
    Ok(stdout)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(text)) => {
            use std::io::Write;
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
        Err(_) => ExitCode::from(1),
    }
}
