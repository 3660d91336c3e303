//! Command-line front end and HTTP service for the tempex pipeline.

pub mod archive;
pub mod service;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use chrono::{NaiveDate, TimeZone, Utc};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use tempex::fixture::{scenarios, FixtureStore};
use tempex::pipeline::{
    read_seeds, run_analyze, run_assemble, run_crawl, run_provenance, AssembleInputs, BackendSpec, Context, EpochsField,
    PipelineError, RunConfig,
};
use tempex::url_keys::ScopeRule;

#[derive(Debug, Parser)]
#[command(name = "tempex", version, about = "Temporal web-archive snapshot pipeline")]
pub struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// `fixture:<dir>` or `live:<base-url>`.
    #[arg(long, global = true, env = "TEMPEX_BACKEND")]
    pub backend: Option<BackendSpec>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Simulate rate-limit waits instead of sleeping.
    #[arg(long, global = true)]
    pub virtual_clock: bool,
    /// Epoch definitions (JSON list).
    #[arg(long, global = true)]
    pub epochs: Option<PathBuf>,
    /// Comma-separated host suffixes.
    #[arg(long, global = true, env = "TEMPEX_SCOPE", value_delimiter = ',')]
    pub scope: Option<Vec<String>>,
    /// Per-agency, per-depth quota.
    #[arg(long, global = true, env = "TEMPEX_QUOTA")]
    pub quota: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sticky-time crawl from seed URLs.
    Crawl(CrawlArgs),
    /// Build the snapshot tuple set.
    Assemble(AssembleArgs),
    /// Mine capture provenance for a tuple set.
    Provenance(ProvenanceArgs),
    /// Term-change and link-decay analysis.
    Analyze(AnalyzeArgs),
    /// Run the curation API.
    Serve(ServeArgs),
    #[command(subcommand)]
    Fixture(FixtureCommand),
}

#[derive(Debug, Args)]
pub struct CrawlArgs {
    #[arg(long)]
    pub seeds: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Target date, YYYY-MM-DD.
    #[arg(long)]
    pub target: Option<NaiveDate>,
    #[arg(long, value_delimiter = ',')]
    pub accept_years: Option<Vec<i32>>,
    #[arg(long)]
    pub max_depth: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AssembleArgs {
    /// Input files; their kind is detected from the first record.
    #[arg(long, value_delimiter = ',')]
    pub sources: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProvenanceArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub grouping: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub triplets: PathBuf,
    #[arg(long)]
    pub terms: Option<PathBuf>,
    #[arg(long)]
    pub windows: Option<PathBuf>,
    #[arg(long)]
    pub probes: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "TEMPEX_BIND", default_value = "127.0.0.1:8080")]
    pub bind: String,
    #[arg(long, default_value = "tempex-state")]
    pub state_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum FixtureCommand {
    /// Write every built-in fixture scenario under `out`.
    Generate {
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve a fixture directory over the Wayback HTTP interface.
    Serve {
        #[arg(long)]
        root: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8081")]
        bind: String,
    },
}

impl Cli {
    /// Loads `--config` (or starts from `--backend`) and applies overrides.
    pub fn run_config(&self) -> Result<RunConfig, PipelineError> {
        let mut config = match (&self.config, &self.backend) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(backend)) => {
                let mut c = RunConfig::fixture("");
                c.backend = backend.clone();
                c.virtual_clock = matches!(backend, BackendSpec::Fixture(_));
                c
            }
            (None, None) => return Err(PipelineError::Config("either --config or --backend is required".into())),
        };
        if let Some(b) = &self.backend {
            config.backend = b.clone();
        }
        if let Some(w) = self.workers {
            config.workers = Some(w);
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if self.virtual_clock {
            config.virtual_clock = true;
        }
        if let Some(e) = &self.epochs {
            config.epochs = EpochsField::File(e.clone());
        }
        if let Some(s) = &self.scope {
            config.scope = ScopeRule::suffixes(s.iter().map(|x| x.trim()).filter(|x| !x.is_empty()));
        }
        if let Some(q) = self.quota {
            config.quota = q;
        }
        match &self.command {
            Command::Crawl(a) => {
                if let Some(t) = a.target {
                    config.crawl.policy.target = Utc.from_utc_datetime(&t.and_hms_opt(0, 0, 0).expect("midnight"));
                }
                if let Some(y) = &a.accept_years {
                    config.crawl.policy.accept_years = y.iter().copied().collect::<BTreeSet<_>>();
                }
                if let Some(d) = a.max_depth {
                    config.crawl.max_depth = d;
                }
            }
            Command::Provenance(a) => {
                if a.grouping.is_some() {
                    config.grouping = a.grouping.clone();
                }
            }
            Command::Analyze(a) => {
                if a.terms.is_some() {
                    config.terms = a.terms.clone();
                }
                if a.windows.is_some() {
                    config.windows = a.windows.clone();
                }
                if a.probes.is_some() {
                    config.inputs.probes = a.probes.clone();
                }
            }
            _ => {}
        }
        config.validate()?;
        Ok(config)
    }
}

fn print(value: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&value).expect("json"));
}

/// Runs one parsed command line; the error's exit code is the process status.
pub fn run(cli: Cli) -> Result<(), PipelineError> {
    match &cli.command {
        Command::Fixture(FixtureCommand::Generate { out }) => {
            scenarios::generate_all(out).map_err(|e| PipelineError::Output(format!("{}: {e}", out.display())))?;
            print(json!({ "generated": scenarios::all().iter().map(|s| s.name).collect::<Vec<_>>() }));
            return Ok(());
        }
        Command::Fixture(FixtureCommand::Serve { root, bind }) => {
            let store = FixtureStore::load(root).map_err(|e| PipelineError::Backend(e.to_string()))?;
            return serve_blocking(bind, archive::router(Arc::new(store)));
        }
        _ => {}
    }
    let config = cli.run_config()?;
    match &cli.command {
        Command::Crawl(a) => {
            let seeds_path = a
                .seeds
                .clone()
                .or_else(|| config.inputs.seeds.clone())
                .ok_or_else(|| PipelineError::Config("no seeds: pass --seeds or set inputs.seeds".into()))?;
            let seeds = read_seeds(&seeds_path)?;
            let ctx = Context::new(config)?;
            let (_, summary) = run_crawl(&ctx, &seeds, &a.out)?;
            print(json!(summary));
        }
        Command::Assemble(a) => {
            let mut inputs = AssembleInputs::from_config(&config);
            for path in &a.sources {
                inputs.add_sniffed(path)?;
            }
            let ctx = Context::new(config)?;
            let assembly = run_assemble(&ctx, &inputs, &a.out)?;
            for w in &assembly.report.warnings {
                tracing::warn!("{w}");
            }
            print(json!({ "tuples": assembly.report.tuples, "by_source": assembly.report.by_source }));
        }
        Command::Provenance(a) => {
            let ctx = Context::new(config)?;
            let report = run_provenance(&ctx, &a.input, &a.out)?;
            print(json!({ "records": report.records, "series": report.series, "shapes": report.shapes }));
        }
        Command::Analyze(a) => {
            let ctx = Context::new(config)?;
            let report = run_analyze(&ctx, &a.triplets, &a.out)?;
            print(json!({ "pages": report.pages, "percentages": report.percentages, "trends": report.trends }));
        }
        Command::Serve(a) => {
            let ctx = Context::new(config)?;
            let state = service::AppState::new(ctx, &a.state_dir)?;
            return serve_blocking(&a.bind, service::router(state));
        }
        Command::Fixture(_) => unreachable!(),
    }
    Ok(())
}

fn serve_blocking(bind: &str, app: axum::Router) -> Result<(), PipelineError> {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| PipelineError::Backend(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(bind)
            .await
            .map_err(|e| PipelineError::Config(format!("bind {bind}: {e}")))?;
        tracing::info!("listening on {}", listener.local_addr().map_err(|e| PipelineError::Backend(e.to_string()))?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| PipelineError::Backend(e.to_string()))
    })
}

