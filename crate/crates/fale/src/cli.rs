//! `fale audit | ale | train | synth`.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use fale_core::data::train_test_split;
use fale_core::oracle::HardLabels;
use fale_core::synth::{generate, BaseScore, SynthConfig};
use fale_core::{
    AleCurve, AleEstimator, BinPartition, BinResult, BinStrategy, Centering, Dataset, FaleCurve,
    FaleEstimator, OutputMode, PredictionOracle, ProtectedSpec, Schema, TrainConfig,
    UnfairnessMeasure, Value,
};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::external::{ExternalConfig, ExternalOracle};
use crate::report::{format_number, Report, RunMetadata};
use crate::svg::{self, BarMode, PlotSpec};
use crate::{io, model_io, parallel};

#[derive(Debug, Parser)]
#[command(
    name = "fale",
    version,
    about = "Fairness-aware accumulated local effects for black-box models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-bin contribution of one feature to group unfairness.
    Audit(AuditArgs),
    /// Accumulated local effects of one feature.
    Ale(AleArgs),
    /// Train the builtin logistic model on a seeded train/test split.
    Train(TrainArgs),
    /// Generate a synthetic dataset with a known injected bias.
    Synth(SynthArgs),
}

/// Where scores come from.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSource {
    /// A saved builtin model.
    Builtin(PathBuf),
    /// A command speaking the line protocol on stdin/stdout.
    Exec(Vec<String>),
}

impl FromStr for ModelSource {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if let Some(path) = s.strip_prefix("builtin:") {
            if path.is_empty() {
                return Err("builtin: needs a model path".into());
            }
            Ok(ModelSource::Builtin(path.into()))
        } else if let Some(cmd) = s.strip_prefix("exec:") {
            match shlex::split(cmd) {
                Some(words) if !words.is_empty() => Ok(ModelSource::Exec(words)),
                _ => Err(format!("cannot split oracle command `{cmd}`")),
            }
        } else {
            Err(format!("expected builtin:PATH or exec:COMMAND, got `{s}`"))
        }
    }
}

impl fmt::Display for ModelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSource::Builtin(p) => write!(f, "builtin:{}", p.display()),
            ModelSource::Exec(words) => {
                let joined = shlex::try_join(words.iter().map(String::as_str))
                    .unwrap_or_else(|_| words.join(" "));
                write!(f, "exec:{joined}")
            }
        }
    }
}

impl Serialize for ModelSource {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn parse_strategy(s: &str) -> std::result::Result<BinStrategy, String> {
    match s {
        "quantile" => Ok(BinStrategy::Quantile),
        "fixed" => Ok(BinStrategy::Fixed),
        _ => Err(format!(
            "unknown bin strategy `{s}` (expected quantile or fixed)"
        )),
    }
}

fn parse_centering(s: &str) -> std::result::Result<Centering, String> {
    match s {
        "weighted" => Ok(Centering::Weighted),
        "unweighted" => Ok(Centering::Unweighted),
        _ => Err(format!(
            "unknown centering `{s}` (expected weighted or unweighted)"
        )),
    }
}

fn parse_region(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got `{s}`"))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad region start `{lo}`"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad region end `{hi}`"))?;
    Ok((lo, hi))
}

#[derive(Debug, Args, Serialize)]
pub struct InputArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// JSON schema sidecar.
    #[arg(long)]
    pub schema: PathBuf,
    /// builtin:PATH or exec:COMMAND.
    #[arg(long)]
    pub model: ModelSource,
}

#[derive(Debug, Args, Serialize)]
pub struct CurveArgs {
    /// Feature to examine.
    #[arg(long)]
    pub feature: String,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    #[arg(long, default_value = "quantile", value_parser = parse_strategy)]
    pub bin_strategy: BinStrategy,
    /// Category order for a categorical feature, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub category_order: Option<Vec<String>>,
    #[arg(long, default_value = "weighted", value_parser = parse_centering)]
    pub centering: Centering,
    #[arg(long, default_value = "counts")]
    pub bar_mode: BarMode,
    /// Turn scores into 0/1 labels at this threshold.
    #[arg(long, value_name = "T")]
    pub hard_labels: Option<f64>,
    /// Worker threads for bin evaluation; ignored for external oracles.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out_svg: Option<PathBuf>,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    /// Recorded in the report; audits themselves draw no random numbers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seconds to wait for an external oracle's handshake.
    #[arg(long, default_value_t = 10.0)]
    pub handshake_timeout: f64,
    /// Largest batch sent to an external oracle in one request.
    #[arg(long)]
    pub batch_limit: Option<usize>,
    #[arg(long)]
    pub title: Option<String>,
    /// Y-axis label template; `{baseline}`, `{measure}` and `{feature}` are filled in.
    #[arg(long)]
    pub y_label: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct AuditArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// ATTR=PROTECTED/NONPROTECTED, e.g. sex=Female/Male.
    #[arg(long)]
    pub protected: ProtectedSpec,
    #[arg(long, default_value = "signed-statistical-parity")]
    pub fairness: UnfairnessMeasure,
    #[command(flatten)]
    pub curve: CurveArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct AleArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub curve: CurveArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
    /// Target column; defaults to the schema's target.
    #[arg(long)]
    pub target: Option<String>,
    /// Where to write the model JSON.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Write the held-out rows here as CSV.
    #[arg(long)]
    pub test_out: Option<PathBuf>,
    /// Write the training rows here as CSV.
    #[arg(long)]
    pub train_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 10_000)]
    pub rows: usize,
    /// Score penalty for protected members inside the region.
    #[arg(long, default_value_t = 0.3)]
    pub beta: f64,
    /// Closed bias interval LO:HI on x.
    #[arg(long, default_value = "0.6:0.8", value_parser = parse_region)]
    pub region: (f64, f64),
    /// Probability of belonging to the protected group.
    #[arg(long, default_value_t = 0.3)]
    pub p1: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub base_intercept: f64,
    #[arg(long, default_value_t = 0.0)]
    pub base_slope: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub schema_out: PathBuf,
}

pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<()> {
    let text = match cli.command {
        Command::Audit(a) => audit(&a)?,
        Command::Ale(a) => ale(&a)?,
        Command::Train(a) => train(&a)?,
        Command::Synth(a) => synth(&a)?,
    };
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(Path::new("<stdout>"), fale_core::ErrorKind::Data, e))
}

type BoxedOracle = Box<dyn PredictionOracle + Send + Sync>;

fn check_outputs(inputs: &[&Path], outputs: &[Option<&PathBuf>]) -> Result<()> {
    let outs: Vec<&PathBuf> = outputs.iter().flatten().copied().collect();
    for (i, a) in outs.iter().enumerate() {
        if outs[i + 1..].contains(a) {
            return Err(Error::Config(format!(
                "output path {} given twice",
                a.display()
            )));
        }
        if inputs.contains(&a.as_path()) {
            return Err(Error::Config(format!(
                "output path {} would overwrite an input",
                a.display()
            )));
        }
    }
    Ok(())
}

fn open_oracle(source: &ModelSource, schema: &Schema, args: &CurveArgs) -> Result<BoxedOracle> {
    match source {
        ModelSource::Builtin(path) => {
            let mut model = model_io::load_model(path)?;
            let names: Vec<&str> = schema.features.iter().map(|f| f.name.as_str()).collect();
            if model.columns != names {
                return Err(Error::Config(format!(
                    "model {} was trained on columns {:?}, data has {:?}",
                    path.display(),
                    model.columns,
                    names
                )));
            }
            if let Some(threshold) = args.hard_labels {
                model.output_mode = OutputMode::HardLabel { threshold };
                model.validate()?;
            }
            Ok(Box::new(model))
        }
        ModelSource::Exec(command) => {
            if !(args.handshake_timeout > 0.0 && args.handshake_timeout.is_finite()) {
                return Err(Error::Config("handshake timeout must be positive".into()));
            }
            let config = ExternalConfig {
                handshake_timeout: Duration::from_secs_f64(args.handshake_timeout),
                batch_limit: args.batch_limit,
                ..Default::default()
            };
            let oracle = ExternalOracle::spawn_with(command, schema, config)?;
            match args.hard_labels {
                Some(threshold) => Ok(Box::new(HardLabels {
                    inner: oracle,
                    threshold,
                })),
                None => Ok(Box::new(oracle)),
            }
        }
    }
}

struct Loaded {
    ds: Dataset,
    fingerprint: String,
    partition: BinPartition,
}

fn known_column(schema: &Schema, name: &str, flag: &str) -> Result<()> {
    schema
        .index_of(name)
        .map(|_| ())
        .map_err(|_| Error::Config(format!("{flag} names unknown column `{name}`")))
}

fn load_inputs(input: &InputArgs, curve: &CurveArgs, protected: Option<&str>) -> Result<Loaded> {
    check_outputs(
        &[&input.data, &input.schema],
        &[curve.out_svg.as_ref(), curve.out_json.as_ref()],
    )?;
    if let Some(t) = curve.hard_labels {
        if !t.is_finite() {
            return Err(Error::Config("hard-label threshold must be finite".into()));
        }
    }
    let schema = io::load_schema(&input.schema)?;
    known_column(&schema, &curve.feature, "--feature")?;
    if let Some(attr) = protected {
        known_column(&schema, attr, "--protected")?;
    }
    let fingerprint = io::fingerprint_file(&input.data)?;
    let ds = io::load_csv(&input.data, schema)?;
    log::info!(
        "loaded {} rows from {}",
        ds.row_count(),
        input.data.display()
    );
    let partition = BinPartition::for_column(
        &ds,
        &curve.feature,
        curve.bin_strategy,
        curve.bins,
        curve.category_order.as_deref(),
    )?;
    if partition.degenerate {
        log::warn!(
            "feature `{}` is constant; single degenerate bin",
            curve.feature
        );
    }
    Ok(Loaded {
        ds,
        fingerprint,
        partition,
    })
}

fn plot_spec(curve: &CurveArgs) -> PlotSpec {
    PlotSpec {
        bar_mode: curve.bar_mode,
        title: curve.title.clone(),
        y_label: curve.y_label.clone(),
        ..PlotSpec::default()
    }
}

fn metadata<T: Serialize>(
    command: &str,
    config: &T,
    input: &InputArgs,
    loaded: &Loaded,
) -> RunMetadata {
    RunMetadata {
        command: Some(command.into()),
        config: serde_json::to_value(config).ok(),
        data_path: Some(input.data.display().to_string()),
        schema_path: Some(input.schema.display().to_string()),
        dataset_fingerprint: Some(loaded.fingerprint.clone()),
        model: Some(input.model.to_string()),
        rows: Some(loaded.ds.row_count()),
        excluded_rows: None,
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, fale_core::ErrorKind::Data, e))
}

fn describe_bin(b: &BinResult) -> String {
    match (&b.low, &b.high) {
        (Value::Num(lo), Value::Num(hi)) => {
            format!("({}, {}]", format_number(*lo), format_number(*hi))
        }
        (_, high) => high.to_string(),
    }
}

pub fn audit_summary(curve: &FaleCurve, excluded: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "feature: {}", curve.feature);
    let _ = writeln!(s, "protected: {}", curve.protected);
    let _ = writeln!(s, "measure: {}", curve.measure.cli_name());
    let _ = writeln!(s, "bins: {}", curve.len());
    let _ = writeln!(s, "excluded_rows: {excluded}");
    let _ = writeln!(
        s,
        "global_unfairness ({}): {}",
        curve.measure.absolute().cli_name(),
        format_number(curve.global_unfairness)
    );
    let _ = writeln!(s, "top bins by |centered|:");
    for b in curve.top_bins(3) {
        let _ = writeln!(
            s,
            "  bin {} {}: centered={} delta={} n0={} n1={}{}",
            b.bin_index,
            describe_bin(b),
            format_number(b.centered),
            format_number(b.delta),
            b.n0,
            b.n1,
            if b.degenerate { " degenerate" } else { "" }
        );
    }
    s
}

pub fn ale_summary(curve: &AleCurve) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "feature: {}", curve.feature);
    let _ = writeln!(s, "bins: {}", curve.len());
    let _ = writeln!(s, "center_offset: {}", format_number(curve.center_offset));
    for k in 0..curve.len() {
        let _ = writeln!(
            s,
            "  bin {} at {}: centered={} count={}{}",
            k + 1,
            curve.partition.high(k + 1),
            format_number(curve.centered[k]),
            curve.bin_counts[k],
            if curve.empty_bins[k] { " empty" } else { "" }
        );
    }
    s
}

fn audit(args: &AuditArgs) -> Result<String> {
    let c = &args.curve;
    if c.feature == args.protected.attribute {
        return Err(fale_core::Error::FeatureIsProtected(c.feature.clone()).into());
    }
    let loaded = load_inputs(&args.input, c, Some(&args.protected.attribute))?;
    let est = FaleEstimator::new(
        &loaded.ds,
        &loaded.partition,
        args.fairness,
        &args.protected,
    )?;
    let excluded = est.split().excluded;
    if excluded > 0 {
        log::warn!("{excluded} rows match neither protected value and are excluded");
    }
    let oracle = open_oracle(&args.input.model, loaded.ds.schema(), c)?;
    let curve = parallel::run_fale(&est, &oracle, c.centering, c.jobs)?;

    if let Some(path) = &c.out_svg {
        write_file(path, &svg::render_fale(&curve, &plot_spec(c))?)?;
    }
    let summary = audit_summary(&curve, excluded);
    if let Some(path) = &c.out_json {
        let mut meta = metadata("audit", args, &args.input, &loaded);
        meta.excluded_rows = Some(excluded);
        Report::fale(curve, meta).write(path)?;
    }
    Ok(summary)
}

fn ale(args: &AleArgs) -> Result<String> {
    let c = &args.curve;
    let loaded = load_inputs(&args.input, c, None)?;
    let est = AleEstimator::new(&loaded.ds, &loaded.partition)?;
    let oracle = open_oracle(&args.input.model, loaded.ds.schema(), c)?;
    let curve = parallel::run_ale(&est, &oracle, c.centering, c.jobs)?;
    if let Some(path) = &c.out_svg {
        write_file(path, &svg::render_ale(&curve, &plot_spec(c))?)?;
    }
    let summary = ale_summary(&curve);
    if let Some(path) = &c.out_json {
        Report::ale(curve, metadata("ale", args, &args.input, &loaded)).write(path)?;
    }
    Ok(summary)
}

fn accuracy(scores: &[f64], labels: &[bool]) -> f64 {
    if labels.is_empty() {
        return f64::NAN;
    }
    let hits = scores
        .iter()
        .zip(labels)
        .filter(|(s, y)| (**s >= 0.5) == **y)
        .count();
    hits as f64 / labels.len() as f64
}

fn train(args: &TrainArgs) -> Result<String> {
    if !(args.test_fraction >= 0.0 && args.test_fraction < 1.0) {
        return Err(Error::Config("test fraction must lie in [0, 1)".into()));
    }
    check_outputs(
        &[&args.data, &args.schema],
        &[
            Some(&args.out),
            args.test_out.as_ref(),
            args.train_out.as_ref(),
        ],
    )?;
    let schema = io::load_schema(&args.schema)?;
    let target = match &args.target {
        Some(t) => t.clone(),
        None => {
            let idx = schema.target().ok_or_else(|| {
                Error::Config("no --target given and schema declares none".into())
            })?;
            schema.features[idx].name.clone()
        }
    };
    let target_col = schema.index_of(&target)?;
    let ds = io::load_csv(&args.data, schema)?;
    let (train_idx, test_idx) = train_test_split(ds.row_count(), args.test_fraction, args.seed);
    let train_ds = ds.subset(&train_idx);
    let test_ds = ds.subset(&test_idx);
    let cfg = TrainConfig {
        learning_rate: args.learning_rate,
        epochs: args.epochs,
        l2: args.l2,
        seed: args.seed,
    };
    let trained = fale_core::oracle::train_logistic(&train_ds, &target, &cfg)?;
    let model = &trained.model;

    let train_y = train_ds.binary_column(target_col)?;
    let test_y = test_ds.binary_column(target_col)?;
    let train_acc = accuracy(&model.predict_batch(train_ds.rows())?, &train_y);
    let test_acc = accuracy(&model.predict_batch(test_ds.rows())?, &test_y);
    let positives = train_y.iter().filter(|&&y| y).count();
    let majority = 2 * positives >= train_y.len();
    let baseline = if test_y.is_empty() {
        f64::NAN
    } else {
        test_y.iter().filter(|&&y| y == majority).count() as f64 / test_y.len() as f64
    };

    model_io::save_model(&args.out, model)?;
    if let Some(p) = &args.test_out {
        io::save_csv(p, &test_ds)?;
    }
    if let Some(p) = &args.train_out {
        io::save_csv(p, &train_ds)?;
    }

    let mut s = String::new();
    let _ = writeln!(s, "target: {target}");
    let _ = writeln!(s, "train_rows: {}", train_ds.row_count());
    let _ = writeln!(s, "test_rows: {}", test_ds.row_count());
    let _ = writeln!(s, "train_accuracy: {train_acc:.4}");
    let _ = writeln!(s, "test_accuracy: {test_acc:.4}");
    let _ = writeln!(s, "majority_baseline: {baseline:.4}");
    if let Some(loss) = trained.loss_history.last() {
        let _ = writeln!(s, "final_loss: {loss:.6}");
    }
    let _ = writeln!(s, "model: {}", args.out.display());
    Ok(s)
}

fn synth(args: &SynthArgs) -> Result<String> {
    check_outputs(&[], &[Some(&args.out), Some(&args.schema_out)])?;
    let cfg = SynthConfig {
        n_rows: args.rows,
        protected_fraction: args.p1,
        base: BaseScore {
            intercept: args.base_intercept,
            slope: args.base_slope,
        },
        region: args.region,
        beta: args.beta,
        seed: args.seed,
    };
    let (ds, _) = generate(&cfg)?;
    io::save_csv(&args.out, &ds)?;
    io::save_schema(&args.schema_out, ds.schema())?;
    let mut s = String::new();
    let _ = writeln!(s, "rows: {}", ds.row_count());
    let _ = writeln!(s, "data: {}", args.out.display());
    let _ = writeln!(s, "schema: {}", args.schema_out.display());
    Ok(s)
}
