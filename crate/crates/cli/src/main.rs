use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use drivestyle::alert::{stream, AlertError, AlertPolicy};
use drivestyle::ann::{load_model, save_model, train, DEFAULT_HIDDEN};
use drivestyle::drivesim::{
    default_route, read_route, simulate, simulate_experiment, write_route, SimConfig, StyleProfile,
};
use drivestyle::eval::{
    confusion, run_sweep, run_variants, ExperimentConfig, EXPERIMENT_EPOCHS, SWEEP_SIZES, VARIANT_TRAIN_SIZE,
};
use drivestyle::export::write_geojson;
use drivestyle::ingest::{fuse, read_imu_csv, read_log, scan_nmea, write_log, ImuScale};
use drivestyle::record::apply_scheme;
use drivestyle::stats::{kruskal_wallis, posthoc_bonferroni};
use drivestyle::{ClassScheme, Dataset, DrivingStyle, FeatureSet, Field, Provenance, Topology, TrainConfig};

#[derive(Parser)]
#[command(name = "drivestyle", version, about = "Driving-style recognition from GPS and inertial registers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate labeled register traces over a route
    Simulate(SimulateArgs),
    /// Fuse an NMEA log and an IMU CSV into register CSV
    Ingest(IngestArgs),
    /// Kruskal-Wallis and Bonferroni post-hoc comparison of one variable across styles
    Stats(StatsArgs),
    /// Train a classifier and save the model
    Train(TrainArgs),
    /// Confusion matrix of a saved model on labeled registers
    Eval(EvalArgs),
    /// Training-size sweep over feature sets
    Sweep(SweepArgs),
    /// Class-scheme and feature-set variant grid
    Variants(VariantsArgs),
    /// Classify registers from a CSV stream and emit warnings
    Stream(StreamArgs),
    /// Export registers as GeoJSON points
    ExportGeojson(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimStyle {
    Con,
    Nor,
    Agg,
    /// Three styles, three repetitions each
    Experiment,
}

#[derive(Args)]
struct SimulateArgs {
    /// Route file, or `default` for the built-in 10 km route
    #[arg(long, default_value = "default")]
    route: String,
    #[arg(long, value_enum)]
    style: SimStyle,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Register CSV to write
    #[arg(long)]
    out: PathBuf,
    /// Also write the route that was driven
    #[arg(long)]
    route_out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    /// NMEA 0183 log (RMC sentences are used)
    #[arg(long)]
    nmea: PathBuf,
    /// IMU CSV: timestamp,ax,ay,az,gx,gy,gz in raw counts
    #[arg(long)]
    imu: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Label every fused register with this style
    #[arg(long)]
    label: Option<DrivingStyle>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// velocity, lat, lon, time, fax, fay, faz, fgx, fgy or fgz
    #[arg(long)]
    var: Field,
    /// Significance level for the post-hoc comparisons
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args, Clone)]
struct TrainingArgs {
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    learning_rate: f64,
    #[arg(long, default_value_t = TrainConfig::default().minibatch_size)]
    batch_size: usize,
    /// Hidden layer widths
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_HIDDEN)]
    hidden: Vec<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// gyro7, acc7, full10, gyro4 or custom:<field>,<field>...
    #[arg(long, default_value = "gyro7")]
    features: FeatureSet,
    /// 3c, drop-con or merged
    #[arg(long, default_value = "3c")]
    scheme: ClassScheme,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,
    #[command(flatten)]
    training: TrainingArgs,
    /// Model file to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Expected class scheme; an error if the model uses another
    #[arg(long)]
    scheme: Option<ClassScheme>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Repetitions per cell
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = EXPERIMENT_EPOCHS)]
    epochs: usize,
    #[command(flatten)]
    training: TrainingArgs,
    /// Per-cell CSV to write
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

impl ExperimentArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            reps: self.reps,
            hidden: self.training.hidden.clone(),
            train: TrainConfig {
                learning_rate: self.training.learning_rate,
                epochs: self.epochs,
                minibatch_size: self.training.batch_size,
                seed: 0,
            },
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "full10,acc7,gyro7")]
    features: Vec<FeatureSet>,
    #[arg(long, value_delimiter = ',', default_values_t = SWEEP_SIZES)]
    sizes: Vec<usize>,
    #[arg(long, default_value = "3c")]
    scheme: ClassScheme,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args)]
struct VariantsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "gyro7,gyro4")]
    features: Vec<FeatureSet>,
    #[arg(long, default_value_t = VARIANT_TRAIN_SIZE)]
    train_size: usize,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args)]
struct StreamArgs {
    #[arg(long)]
    model: PathBuf,
    /// Register CSV to read; `-` for standard input
    #[arg(long = "in", default_value = "-")]
    input: String,
    /// Consecutive trigger-style registers before a warning
    #[arg(long, default_value_t = AlertPolicy::default().consecutive_threshold)]
    k: usize,
    /// Minimum seconds between warnings
    #[arg(long, default_value_t = AlertPolicy::default().cooldown_s)]
    cooldown: f64,
    /// Styles that raise warnings
    #[arg(long, value_delimiter = ',', default_value = "agg")]
    trigger: Vec<DrivingStyle>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "velocity")]
    var: Field,
    #[arg(long)]
    out: PathBuf,
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn load_data(path: &PathBuf) -> Result<Dataset> {
    read_log(path).with_context(|| format!("cannot read {}", path.display()))
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let route = if a.route == "default" {
        default_route(a.seed)
    } else {
        read_route(&a.route).with_context(|| format!("cannot read route {}", a.route))?
    };
    let data = match a.style {
        SimStyle::Experiment => simulate_experiment(&route, a.seed)?,
        SimStyle::Con | SimStyle::Nor | SimStyle::Agg => {
            let style = match a.style {
                SimStyle::Con => DrivingStyle::Con,
                SimStyle::Nor => DrivingStyle::Nor,
                _ => DrivingStyle::Agg,
            };
            simulate(&SimConfig::new(route.clone(), StyleProfile::preset(style), a.seed))?
        }
    };
    write_log(&data, &a.out).with_context(|| format!("cannot write {}", a.out.display()))?;
    if let Some(path) = &a.route_out {
        write_route(&route, path)?;
    }
    eprintln!("wrote {} registers to {}", data.len(), a.out.display());
    Ok(())
}

fn cmd_ingest(a: IngestArgs) -> Result<()> {
    let nmea = File::open(&a.nmea).with_context(|| format!("cannot open {}", a.nmea.display()))?;
    let scan = scan_nmea(BufReader::new(nmea))?;
    let imu = read_imu_csv(&a.imu).with_context(|| format!("cannot read {}", a.imu.display()))?;
    let mut report = fuse(scan.fixes, imu, ImuScale::default());
    if let Some(style) = a.label {
        for r in &mut report.registers {
            r.label = Some(style);
        }
    }
    let source = a.nmea.display().to_string();
    let data = Dataset::new(report.registers, Provenance::Ingested { source });
    write_log(&data, &a.out)?;
    if scan.bad_checksum > 0 {
        eprintln!("warning: skipped {} sentences with bad checksums", scan.bad_checksum);
    }
    if scan.malformed > 0 {
        eprintln!("warning: skipped {} malformed RMC sentences", scan.malformed);
    }
    eprintln!(
        "fused {} registers from {} valid fixes ({} void, {} without IMU samples)",
        data.len(),
        report.valid_fixes,
        report.invalid,
        report.dropped
    );
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> Result<()> {
    let data = load_data(&a.input)?;
    let grouped = data.grouped(a.var);
    let (styles, groups): (Vec<DrivingStyle>, Vec<Vec<f64>>) =
        DrivingStyle::ALL.into_iter().zip(grouped).filter(|(_, g)| !g.is_empty()).unzip();
    if groups.len() < 2 {
        bail!("need labeled registers of at least two styles");
    }
    let kw = kruskal_wallis(&groups)?;
    let pairs = posthoc_bonferroni(&groups)?;
    let var = a.var.name();
    let mut out = io::stdout().lock();
    match a.format {
        Format::Text => {
            writeln!(out, "variable {var}")?;
            writeln!(out, "{:<6} {:>6} {:>12}", "style", "n", "median")?;
            for (i, s) in styles.iter().enumerate() {
                writeln!(out, "{:<6} {:>6} {:>12.4}", s.tag(), kw.sizes[i], kw.medians[i])?;
            }
            writeln!(out, "Kruskal-Wallis H = {:.4}, df = {}, p = {:.4e}", kw.h, kw.degrees_of_freedom, kw.p_value)?;
            writeln!(out, "pairwise (Dunn, Bonferroni, alpha = {}):", a.alpha)?;
            for p in &pairs {
                let verdict = if p.p_adjusted < a.alpha { "significant" } else { "not significant" };
                writeln!(
                    out,
                    "  {}-{}  z = {:8.4}  p = {:.4e}  p_adj = {:.4e}  {verdict}",
                    styles[p.group_a].tag(),
                    styles[p.group_b].tag(),
                    p.z,
                    p.p_raw,
                    p.p_adjusted
                )?;
            }
        }
        Format::Csv => {
            writeln!(out, "variable,comparison,statistic,p_value,p_adjusted,significant")?;
            for (i, s) in styles.iter().enumerate() {
                writeln!(out, "{var},median_{},{},,,", s.tag(), kw.medians[i])?;
            }
            writeln!(out, "{var},kruskal_wallis,{},{},,{}", kw.h, kw.p_value, kw.p_value < a.alpha)?;
            for p in &pairs {
                writeln!(
                    out,
                    "{var},{}-{},{},{},{},{}",
                    styles[p.group_a].tag(),
                    styles[p.group_b].tag(),
                    p.z,
                    p.p_raw,
                    p.p_adjusted,
                    p.p_adjusted < a.alpha
                )?;
            }
        }
    }
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let data = load_data(&a.input)?;
    let topo = Topology::new(a.features.len(), a.training.hidden.clone(), a.scheme.n_classes())?;
    let cfg = TrainConfig {
        learning_rate: a.training.learning_rate,
        epochs: a.epochs,
        minibatch_size: a.training.batch_size,
        seed: a.seed,
    };
    let net = train(&data, &a.features, a.scheme, &topo, &cfg)?;
    save_model(&net, &a.out).with_context(|| format!("cannot write {}", a.out.display()))?;
    eprintln!("trained {} / {} on {} registers", a.features.name(), a.scheme.name(), data.len());
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let net = load_model(&a.model).with_context(|| format!("cannot load {}", a.model.display()))?;
    if let Some(expected) = a.scheme {
        if expected != net.scheme {
            bail!("model uses class scheme {}, not {}", net.scheme.name(), expected.name());
        }
    }
    let data = apply_scheme(&load_data(&a.input)?, net.scheme)?;
    let cm = confusion(&net, &data)?;
    match a.format {
        Format::Text => writeln!(io::stdout().lock(), "{cm}")?,
        Format::Csv => write!(io::stdout().lock(), "{}", cm.to_csv())?,
    }
    Ok(())
}

fn report_cells(table: &drivestyle::eval::CellTable, e: &ExperimentArgs) -> Result<()> {
    if let Some(path) = &e.out {
        let mut w = create(path)?;
        w.write_all(table.to_csv().as_bytes())?;
        w.flush()?;
    }
    match e.format {
        Format::Text => write!(io::stdout().lock(), "{table}")?,
        Format::Csv => write!(io::stdout().lock(), "{}", table.to_csv())?,
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let data = load_data(&a.input)?;
    let table = run_sweep(&data, &a.features, &a.sizes, a.scheme, &a.experiment.config(), a.experiment.seed)?;
    report_cells(&table, &a.experiment)
}

fn cmd_variants(a: VariantsArgs) -> Result<()> {
    let data = load_data(&a.input)?;
    let table = run_variants(&data, &a.features, a.train_size, &a.experiment.config(), a.experiment.seed)?;
    report_cells(&table, &a.experiment)
}

fn cmd_stream(a: StreamArgs) -> Result<()> {
    let net = load_model(&a.model).with_context(|| format!("cannot load {}", a.model.display()))?;
    let policy = AlertPolicy { trigger_styles: a.trigger, consecutive_threshold: a.k, cooldown_s: a.cooldown };
    let stdout = io::stdout().lock();
    if a.input == "-" {
        stream(io::stdin().lock(), stdout, &net, &policy)?;
    } else {
        let file = File::open(&a.input).with_context(|| format!("cannot open {}", a.input))?;
        stream(BufReader::new(file), stdout, &net, &policy)?;
    }
    Ok(())
}

fn cmd_export(a: ExportArgs) -> Result<()> {
    let data = load_data(&a.input)?;
    let mut w = create(&a.out)?;
    write_geojson(&data, a.var, &mut w)?;
    w.flush()?;
    Ok(())
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let io = c.downcast_ref::<io::Error>().or(match c.downcast_ref::<AlertError>() {
            Some(AlertError::Io(io)) => Some(io),
            _ => None,
        });
        io.is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Ingest(a) => cmd_ingest(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Variants(a) => cmd_variants(a),
        Command::Stream(a) => cmd_stream(a),
        Command::ExportGeojson(a) => cmd_export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // A closed downstream pipe, as with `| head`, is not a failure.
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
