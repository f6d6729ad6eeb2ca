use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand};

use contract_lab::analysis::{compare, enumerate_models, run_contract_by_contract};
use contract_lab::marketdata::{
    parse_contract_csv, parse_spot_csv_all, write_contract_csv, write_spot_csv, AssetId,
    ContractMonth, ContractSeries, SpotSeries,
};
use contract_lab::measures::{build_panels, DependentKind, PanelSet, ScalingPolicy};
use contract_lab::regress::{ModelSpec, Predictor};
use contract_lab::report::{
    market_descriptives, render_comparison, render_contract_table, render_descriptives,
    render_ingest_summary, render_panel_csv, write_run_manifest, Format, InputDigest,
    RenderOptions, RunManifest,
};
use contract_lab::synth::{generate_market, SynthConfig};
use contract_lab::{Error, ErrorCategory};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

/// Contract-by-contract regression analysis of futures markets.
#[derive(Debug, Parser)]
#[command(name = "contract-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate contract and spot CSVs and list what was loaded
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Descriptive statistics of spot, futures, volume and open interest
    Describe {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 42, value_parser = clap::value_parser!(u64).range(1..))]
        window_days: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write one plot-ready observation CSV per contract into a directory
    Panel {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Output directory
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Per-contract coefficient table for one model
    Fit {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Predictor subset such as m, vo or mvo
        #[arg(long = "model", default_value = "mvo")]
        model_spec: ModelSpec,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fit every predictor subset and compare the models
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Generate a synthetic market with a planted signal
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Contract CSV
    #[arg(long, value_name = "PATH")]
    contracts: PathBuf,
    /// Spot CSV
    #[arg(long, value_name = "PATH")]
    spot: Option<PathBuf>,
    /// Keep only this asset
    #[arg(long, value_name = "NAME")]
    asset: Option<AssetId>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, default_value = "markdown")]
    format: Format,
    /// Write to this file instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Also write a JSON run manifest to this path
    #[arg(long, value_name = "PATH")]
    manifest: Option<PathBuf>,
    /// Percentages strictly above this are bold in markdown
    #[arg(long, default_value_t = 50.0)]
    bold_threshold: f64,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, default_value = "volatility")]
    dependent: DependentKind,
    #[arg(long, default_value_t = 42, value_parser = clap::value_parser!(u64).range(1..))]
    window_days: u64,
    /// Significance level for counting significant contracts
    #[arg(long, default_value_t = 0.10, value_parser = parse_alpha)]
    alpha: f64,
    /// Multiplier applied to the dependent variable
    #[arg(long, default_value_t = 10_000.0)]
    dv_factor: f64,
    /// Volume and open-interest divisor for an asset, e.g. gold=10000
    #[arg(long, value_name = "ASSET=N", value_parser = parse_divisor)]
    activity_divisor: Vec<(AssetId, f64)>,
}

impl ModelArgs {
    fn policy(&self) -> ScalingPolicy {
        let mut policy = ScalingPolicy {
            dv_factor: self.dv_factor,
            ..ScalingPolicy::default()
        };
        for (asset, d) in &self.activity_divisor {
            policy = policy.with_divisor(asset.clone(), *d);
        }
        policy
    }
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory for contracts.csv, spot.csv and truth.json
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    asset: Option<AssetId>,
    /// First contract month, YYYY-MM
    #[arg(long)]
    first_contract: Option<ContractMonth>,
    #[arg(long)]
    n_contracts: Option<usize>,
    #[arg(long)]
    window_days: Option<usize>,
    /// Bars per contract from listing to expiry
    #[arg(long)]
    contract_days: Option<usize>,
    #[arg(long)]
    spot0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    drift: Option<f64>,
    #[arg(long)]
    vol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    u: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    y: Option<f64>,
    #[arg(long)]
    oi_peak: Option<f64>,
    #[arg(long)]
    volume_mean: Option<f64>,
    /// Log-space standard deviation of volume
    #[arg(long)]
    volume_dispersion: Option<f64>,
    /// Planted intercept
    #[arg(long, allow_negative_numbers = true)]
    b0: Option<f64>,
    /// Planted maturity coefficient
    #[arg(long, allow_negative_numbers = true)]
    b1: Option<f64>,
    /// Planted volume coefficient
    #[arg(long, allow_negative_numbers = true)]
    b2: Option<f64>,
    /// Planted open-interest coefficient
    #[arg(long, allow_negative_numbers = true)]
    b3: Option<f64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    dv_factor: Option<f64>,
}

impl SynthArgs {
    fn config(&self) -> SynthConfig {
        let d = SynthConfig::default();
        let [b0, b1, b2, b3] = d.dgp_beta;
        let mut scaling = d.scaling.clone();
        if let Some(f) = self.dv_factor {
            scaling.dv_factor = f;
        }
        SynthConfig {
            seed: self.seed.unwrap_or(d.seed),
            asset: self.asset.clone().unwrap_or(d.asset),
            first_contract: self.first_contract.unwrap_or(d.first_contract),
            n_contracts: self.n_contracts.unwrap_or(d.n_contracts),
            window_days: self.window_days.unwrap_or(d.window_days),
            contract_days: self.contract_days.unwrap_or(d.contract_days),
            spot0: self.spot0.unwrap_or(d.spot0),
            drift: self.drift.unwrap_or(d.drift),
            vol: self.vol.unwrap_or(d.vol),
            r: self.r.unwrap_or(d.r),
            u: self.u.unwrap_or(d.u),
            y: self.y.unwrap_or(d.y),
            oi_peak: self.oi_peak.unwrap_or(d.oi_peak),
            volume_mean: self.volume_mean.unwrap_or(d.volume_mean),
            volume_dispersion: self.volume_dispersion.unwrap_or(d.volume_dispersion),
            dgp_beta: [
                self.b0.unwrap_or(b0),
                self.b1.unwrap_or(b1),
                self.b2.unwrap_or(b2),
                self.b3.unwrap_or(b3),
            ],
            noise_sigma: self.noise_sigma.unwrap_or(d.noise_sigma),
            scaling,
        }
    }
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let alpha: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(format!("alpha must lie strictly between 0 and 1, got {alpha}"))
    }
}

fn parse_divisor(s: &str) -> Result<(AssetId, f64), String> {
    let (asset, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected ASSET=N, got `{s}`"))?;
    let asset: AssetId = asset.parse().map_err(|e| format!("{e}"))?;
    let value: f64 = value
        .parse()
        .map_err(|_| format!("`{value}` is not a number"))?;
    Ok((asset, value))
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(Error),
}

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Run(e.into())
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Failure {
    Failure::Run(Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| io_error(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

struct Loaded {
    contracts: Vec<ContractSeries>,
    spots: Vec<SpotSeries>,
    digests: Vec<InputDigest>,
}

fn load(input: &InputArgs) -> Result<Loaded, Failure> {
    let bytes = read(&input.contracts)?;
    let mut digests = vec![InputDigest::of(&input.contracts.display().to_string(), &bytes)];
    let mut contracts = parse_contract_csv(&bytes)?;
    let mut spots = match &input.spot {
        Some(path) => {
            let bytes = read(path)?;
            digests.push(InputDigest::of(&path.display().to_string(), &bytes));
            parse_spot_csv_all(&bytes)?
        }
        None => Vec::new(),
    };
    if let Some(asset) = &input.asset {
        contracts.retain(|c| &c.asset == asset);
        spots.retain(|s| &s.asset == asset);
        if contracts.is_empty() && spots.is_empty() {
            return Err(Failure::Usage(format!("no data for asset {asset}")));
        }
    }
    Ok(Loaded {
        contracts,
        spots,
        digests,
    })
}

/// The single asset an analysis runs on.
fn single_asset(contracts: &[ContractSeries]) -> Result<AssetId, Failure> {
    let assets: BTreeSet<&AssetId> = contracts.iter().map(|c| &c.asset).collect();
    match assets.len() {
        1 => Ok(assets.into_iter().next().expect("one asset").clone()),
        0 => Err(Failure::Usage("no contracts to analyse".into())),
        _ => {
            let names: Vec<String> = assets.iter().map(|a| a.to_string()).collect();
            Err(Failure::Usage(format!(
                "input holds several assets ({}); choose one with --asset",
                names.join(", ")
            )))
        }
    }
}

fn render_options(output: &OutputArgs) -> RenderOptions {
    RenderOptions {
        format: output.format,
        bold_threshold: output.bold_threshold,
        include_manifest: output.manifest.is_some(),
        ..RenderOptions::default()
    }
}

fn emit(output: &OutputArgs, text: &str) -> Result<(), Failure> {
    match &output.out {
        Some(path) => write(path, text),
        None => print_stdout(text),
    }
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn print_stdout(text: &str) -> Result<(), Failure> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(io_error(Path::new("<stdout>"), e))
        }
        _ => Ok(()),
    }
}

fn emit_manifest(output: &OutputArgs, manifest: RunManifest) -> Result<(), Failure> {
    if let Some(path) = &output.manifest {
        write(path, &write_run_manifest(&manifest)?)?;
    }
    Ok(())
}

fn manifest_for(
    command: &str,
    loaded: &Loaded,
    input: &InputArgs,
    model: &ModelArgs,
    models: Vec<ModelSpec>,
) -> RunManifest {
    RunManifest {
        dependent: Some(model.dependent),
        window_days: model.window_days as usize,
        alpha: model.alpha,
        asset_filter: input.asset.clone(),
        models,
        scaling: model.policy(),
        inputs: loaded.digests.clone(),
        ..RunManifest::new(
            command,
            Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        )
    }
}

fn panels(loaded: &Loaded, model: &ModelArgs) -> Result<PanelSet, Failure> {
    let set = build_panels(
        &loaded.contracts,
        &loaded.spots,
        model.dependent,
        &model.policy(),
        model.window_days as usize,
    )?;
    for (asset, contract) in &set.skipped {
        eprintln!("warning: {asset} {contract} has no usable observations; skipped");
    }
    Ok(set)
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Ingest { input, output } => {
            let loaded = load(&input)?;
            let text =
                render_ingest_summary(&loaded.contracts, &loaded.spots, &render_options(&output))?;
            emit(&output, &text)?;
            let mut manifest = RunManifest::new(
                "ingest",
                Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
            );
            manifest.asset_filter = input.asset.clone();
            manifest.inputs = loaded.digests;
            emit_manifest(&output, manifest)
        }
        Command::Describe {
            input,
            window_days,
            output,
        } => {
            let loaded = load(&input)?;
            let stats = market_descriptives(&loaded.contracts, &loaded.spots, window_days as usize)?;
            if stats.is_empty() {
                return Err(Failure::Usage("no data to describe".into()));
            }
            emit(&output, &render_descriptives(&stats, &render_options(&output))?)?;
            let mut manifest = RunManifest::new(
                "describe",
                Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
            );
            manifest.window_days = window_days as usize;
            manifest.asset_filter = input.asset.clone();
            manifest.inputs = loaded.digests;
            emit_manifest(&output, manifest)
        }
        Command::Panel { input, model, out } => {
            let loaded = load(&input)?;
            let set = panels(&loaded, &model)?;
            fs::create_dir_all(&out).map_err(|e| io_error(&out, e))?;
            let mut listing = String::new();
            for panel in &set.panels {
                let name = format!(
                    "{}_{}_{}.csv",
                    panel.asset, panel.contract_month, model.dependent
                );
                let path = out.join(name);
                write(&path, &render_panel_csv(panel)?)?;
                listing.push_str(&format!(
                    "{}\t{} rows\t{} dropped\n",
                    path.display(),
                    panel.len(),
                    panel.dropped_rows()
                ));
            }
            print_stdout(&listing)
        }
        Command::Fit {
            input,
            model,
            model_spec,
            output,
        } => {
            let loaded = load(&input)?;
            single_asset(&loaded.contracts)?;
            let set = panels(&loaded, &model)?;
            let results = run_contract_by_contract(&set.panels, &[model_spec], model.alpha)?;
            let text = render_contract_table(&results, model_spec, &render_options(&output))?;
            emit(&output, &text)?;
            emit_manifest(
                &output,
                manifest_for("fit", &loaded, &input, &model, vec![model_spec]),
            )
        }
        Command::Compare {
            input,
            model,
            output,
        } => {
            let loaded = load(&input)?;
            let asset = single_asset(&loaded.contracts)?;
            let set = panels(&loaded, &model)?;
            let models = enumerate_models(&Predictor::ALL);
            let results = run_contract_by_contract(&set.panels, &models, model.alpha)?;
            let report = compare(asset, model.dependent, &results, &models, model.alpha)?;
            emit(&output, &render_comparison(&report, &render_options(&output))?)?;
            emit_manifest(
                &output,
                manifest_for("compare", &loaded, &input, &model, models),
            )
        }
        Command::Synth(args) => {
            let config = args.config();
            let market = generate_market(&config)?;
            fs::create_dir_all(&args.out).map_err(|e| io_error(&args.out, e))?;
            write(
                &args.out.join("contracts.csv"),
                &write_contract_csv(&market.contracts),
            )?;
            write(
                &args.out.join("spot.csv"),
                &write_spot_csv(std::slice::from_ref(&market.spot)),
            )?;
            let mut truth = serde_json::to_string_pretty(&market.truth)
                .map_err(contract_lab::report::ReportError::from)?;
            truth.push('\n');
            write(&args.out.join("truth.json"), &truth)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.category() {
                ErrorCategory::Data => EXIT_DATA,
                ErrorCategory::Numeric => EXIT_NUMERIC,
            })
        }
    }
}
