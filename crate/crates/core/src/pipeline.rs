//! Run configuration and the crawl / assemble / provenance / analyze commands.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agency::AgencyTable;
use crate::assembler::{
    domain_sweep, extend_pairs, fill_quota, ingest_external_list, merge_and_dedupe, summary_csv,
    Attribution, Candidate, FillCounters, IngestStats, PairRow, ProvenanceSource, QuotaLedger,
    QuotaRow, SnapshotTuple, TripletRow, Verifier, DEFAULT_QUOTA,
};
use crate::backend::{ArchiveBackend, BackendError};
use crate::cdx::{CdxGateway, CdxQuery};
use crate::change::{
    aggregate_categories, attribute_changes, classify_probes, extract_text, mine_trends,
    tracked_term_table, AdministrationWindows, CategorySummary, ChangeConfig, ChangeTrend,
    DecayConfig, DecayReport, EpochRoles, ProbeSet, TermChangeReport, TrackedTermList,
    TrackedTermRow, DEFAULT_TREND_THRESHOLD,
};
use crate::crawler::{crawl, CandidateRow, CrawlConfig, CrawlReport, StickyTimePolicy, TrapConfig, DEFAULT_MAX_DEPTH};
use crate::curation::{parse_log, live_set, DecisionAction};
use crate::epoch::{default_epochs, EpochSpec};
use crate::fixture::FixtureStore;
use crate::live::{LiveBackend, LiveEndpoints};
use crate::provenance::{
    distribution, epoch_series, mine_provenance, organization_counts, records_csv, trend_shape,
    Dimension, DistributionRow, SourceGroup, SourceGroupingTable, TrendShape,
};
use crate::rate::{Clock, RateLimitPolicy, RateLimiter, SystemClock, VirtualClock};
use crate::url_keys::{parse_http_url, ScopeRule, DEFAULT_HIGH_THRESHOLD};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;
pub const EXIT_OUTPUT: i32 = 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("backend unreachable: {0}")]
    Backend(String),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => EXIT_CONFIG,
            PipelineError::Backend(_) => EXIT_BACKEND,
            PipelineError::Output(_) => EXIT_OUTPUT,
        }
    }
}

/// Archive backend selection: `fixture:<dir>`, `live:<base-url>`, or a full
/// set of live endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Fixture(PathBuf),
    Live(LiveEndpoints),
}

impl BackendSpec {
    /// Live endpoints laid out like the Wayback Machine under `base`.
    pub fn live_base(base: &str) -> Self {
        let base = base.trim_end_matches('/');
        BackendSpec::Live(LiveEndpoints {
            cdx: format!("{base}/cdx/search/cdx"),
            replay: format!("{base}/web"),
            provenance: Some(format!("{base}/provenance")),
            ..LiveEndpoints::default()
        })
    }
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("fixture", dir)) if !dir.is_empty() => Ok(BackendSpec::Fixture(dir.into())),
            Some(("live", base)) if !base.is_empty() => Ok(BackendSpec::live_base(base)),
            _ => Err(format!("backend {s:?} is not fixture:<dir> or live:<base-url>")),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BackendRepr {
    Text(String),
    Live { live: LiveEndpoints },
}

impl Serialize for BackendSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            BackendSpec::Fixture(p) => BackendRepr::Text(format!("fixture:{}", p.display())),
            BackendSpec::Live(l) => BackendRepr::Live { live: l.clone() },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BackendSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match BackendRepr::deserialize(d)? {
            BackendRepr::Text(t) => t.parse().map_err(serde::de::Error::custom),
            BackendRepr::Live { live } => Ok(BackendSpec::Live(live)),
        }
    }
}

/// Epochs inline or in a separate JSON file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpochsField {
    File(PathBuf),
    Inline(Vec<EpochSpec>),
}

impl Default for EpochsField {
    fn default() -> Self {
        EpochsField::Inline(default_epochs())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    #[serde(default = "RateLimitPolicy::cdx_default")]
    pub cdx: RateLimitPolicy,
    #[serde(default = "RateLimitPolicy::provenance_default")]
    pub provenance: RateLimitPolicy,
    /// Minimum gap between replay fetches to one host.
    #[serde(default, with = "crate::rate::secs")]
    pub host_delay: Duration,
}

impl Default for RateConfig {
    fn default() -> Self {
        RateConfig {
            cdx: RateLimitPolicy::cdx_default(),
            provenance: RateLimitPolicy::provenance_default(),
            host_delay: Duration::ZERO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrawlSettings {
    #[serde(default)]
    pub policy: StickyTimePolicy,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
}

impl Default for CrawlSettings {
    fn default() -> Self {
        CrawlSettings {
            policy: StickyTimePolicy::default(),
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

/// Input files; relative paths resolve against the config file's directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    #[serde(default)]
    pub seeds: Option<PathBuf>,
    #[serde(default)]
    pub pairs: Vec<PathBuf>,
    #[serde(default)]
    pub candidates: Vec<PathBuf>,
    #[serde(default)]
    pub external: Vec<PathBuf>,
    #[serde(default)]
    pub decisions: Option<PathBuf>,
    #[serde(default)]
    pub probes: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub backend: BackendSpec,
    #[serde(default)]
    pub scope: ScopeRule,
    #[serde(default)]
    pub epochs: EpochsField,
    #[serde(default = "default_quota")]
    pub quota: usize,
    #[serde(default)]
    pub rate: RateConfig,
    /// Rate-limit waits advance a simulated clock instead of sleeping.
    #[serde(default)]
    pub virtual_clock: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub agencies: AgencyTable,
    #[serde(default = "default_high_threshold")]
    pub high_threshold: usize,
    #[serde(default)]
    pub crawl: CrawlSettings,
    /// Prefix or domain CDX queries whose keys enter as DomainSweep candidates.
    #[serde(default)]
    pub sweeps: Vec<CdxQuery>,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub terms: Option<PathBuf>,
    #[serde(default)]
    pub windows: Option<PathBuf>,
    #[serde(default)]
    pub grouping: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_trend_threshold")]
    pub trend_threshold: usize,
}

fn default_quota() -> usize {
    DEFAULT_QUOTA
}
fn default_high_threshold() -> usize {
    DEFAULT_HIGH_THRESHOLD
}
fn default_max_depth() -> usize {
    DEFAULT_MAX_DEPTH
}
fn default_trend_threshold() -> usize {
    DEFAULT_TREND_THRESHOLD
}

impl RunConfig {
    /// Fixture-backed config with every other field at its default.
    pub fn fixture(dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            backend: BackendSpec::Fixture(dir.into()),
            scope: ScopeRule::default(),
            epochs: EpochsField::default(),
            quota: DEFAULT_QUOTA,
            rate: RateConfig::default(),
            virtual_clock: true,
            seed: 0,
            agencies: AgencyTable::default(),
            high_threshold: DEFAULT_HIGH_THRESHOLD,
            crawl: CrawlSettings::default(),
            sweeps: Vec::new(),
            inputs: Inputs::default(),
            terms: None,
            windows: None,
            grouping: None,
            workers: None,
            trend_threshold: DEFAULT_TREND_THRESHOLD,
        }
    }

    /// Reads, resolves and validates a JSON config file.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut config = RunConfig::parse(&text, &path.display().to_string())?;
        config.resolve_paths(path.parent().unwrap_or(Path::new("")));
        config.validate_with_source(&text, &path.display().to_string())?;
        Ok(config)
    }

    /// Parses config text; `origin` names the source in messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| {
            PipelineError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column()))
        })
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let BackendSpec::Fixture(p) = &mut self.backend {
            fix(p);
        }
        if let EpochsField::File(p) = &mut self.epochs {
            fix(p);
        }
        let inputs = &mut self.inputs;
        inputs.seeds.iter_mut().for_each(fix);
        inputs.pairs.iter_mut().for_each(fix);
        inputs.candidates.iter_mut().for_each(fix);
        inputs.external.iter_mut().for_each(fix);
        inputs.decisions.iter_mut().for_each(fix);
        inputs.probes.iter_mut().for_each(fix);
        self.terms.iter_mut().for_each(fix);
        self.windows.iter_mut().for_each(fix);
        self.grouping.iter_mut().for_each(fix);
    }

    /// Semantic checks without source text; messages cite the field only.
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.validate_with_source("", "config")
    }

    fn validate_with_source(&self, text: &str, origin: &str) -> Result<(), PipelineError> {
        let fail = |field: &str, message: String| {
            let leaf = field.rsplit('.').next().unwrap_or(field);
            let leaf = leaf.split('[').next().unwrap_or(leaf);
            Err(PipelineError::Config(match line_of(text, leaf) {
                Some(line) => format!("{origin}:{line}: field `{field}`: {message}"),
                None => format!("{origin}: field `{field}`: {message}"),
            }))
        };
        if self.quota == 0 {
            return fail("quota", "must be at least 1".into());
        }
        if self.scope.allowed_suffixes.is_empty() && self.scope.allowed_domains.is_none() {
            return fail("scope", "no allowed suffixes or domains".into());
        }
        if let Err(e) = self.rate.cdx.validate() {
            return fail("rate.cdx", e.to_string());
        }
        if let Err(e) = self.rate.provenance.validate() {
            return fail("rate.provenance", e.to_string());
        }
        if self.crawl.policy.accept_years.is_empty() {
            return fail("crawl.policy.accept_years", "must name at least one year".into());
        }
        if self.workers == Some(0) {
            return fail("workers", "must be at least 1".into());
        }
        if self.trend_threshold == 0 {
            return fail("trend_threshold", "must be at least 1".into());
        }
        for (i, q) in self.sweeps.iter().enumerate() {
            let host = parse_http_url(&q.target)
                .ok()
                .and_then(|u| u.host_str().map(str::to_string));
            match host {
                None => return fail(&format!("sweeps[{i}].target"), format!("{:?} is not an http(s) URL", q.target)),
                Some(h) if !self.scope.matches_host(&h) => {
                    return fail(&format!("sweeps[{i}].target"), format!("{h} is out of scope"))
                }
                _ => {}
            }
        }
        if let EpochsField::Inline(epochs) = &self.epochs {
            if let Err((field, message)) = check_epochs(epochs) {
                return fail(&format!("epochs{field}"), message);
            }
        }
        Ok(())
    }

    /// The configured epochs, reading the epochs file if one is named.
    pub fn load_epochs(&self) -> Result<Vec<EpochSpec>, PipelineError> {
        match &self.epochs {
            EpochsField::Inline(e) => Ok(e.clone()),
            EpochsField::File(path) => load_epochs_file(path),
        }
    }
}

fn line_of(text: &str, field: &str) -> Option<usize> {
    let needle = format!("\"{field}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

fn check_epochs(epochs: &[EpochSpec]) -> Result<(), (String, String)> {
    if epochs.is_empty() {
        return Err((String::new(), "at least one epoch is required".into()));
    }
    let mut names = HashSet::new();
    for (i, e) in epochs.iter().enumerate() {
        if !names.insert(&e.name) {
            return Err((format!("[{i}].name"), format!("duplicate epoch name {:?}", e.name)));
        }
        if let Err(err) = e.validate() {
            let field = if e.window.start > e.window.end { "window" } else { "target" };
            return Err((format!("[{i}].{field}"), err.to_string()));
        }
    }
    for (i, pair) in epochs.windows(2).enumerate() {
        if pair[0].target >= pair[1].target {
            return Err((format!("[{}].target", i + 1), "epochs must be in chronological order".into()));
        }
    }
    Ok(())
}

/// Reads a JSON epochs file, citing line and field on failure.
pub fn load_epochs_file(path: &Path) -> Result<Vec<EpochSpec>, PipelineError> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{origin}: {e}")))?;
    let epochs: Vec<EpochSpec> = serde_json::from_str(&text)
        .map_err(|e| PipelineError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column())))?;
    if let Err((field, message)) = check_epochs(&epochs) {
        let leaf = field.rsplit('.').next().unwrap_or("");
        let loc = match (!leaf.is_empty()).then(|| line_of(&text, leaf)).flatten() {
            Some(line) => format!("{origin}:{line}"),
            None => origin,
        };
        return Err(PipelineError::Config(format!("{loc}: field `epochs{field}`: {message}")));
    }
    Ok(epochs)
}

/// Everything a command needs: backend, clocks, rate gates and settings.
pub struct Context {
    pub config: RunConfig,
    pub epochs: Vec<EpochSpec>,
    pub backend: Arc<dyn ArchiveBackend>,
    pub clock: Arc<dyn Clock>,
    pub cdx_limiter: Arc<RateLimiter>,
    pub provenance_limiter: Arc<RateLimiter>,
    pool: rayon::ThreadPool,
}

impl std::fmt::Debug for Context {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Context")
            .field("config", &self.config)
            .field("epochs", &self.epochs)
            .finish_non_exhaustive()
    }
}

impl Context {
    /// Opens the configured backend. A live backend is probed once.
    pub fn new(config: RunConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let backend: Arc<dyn ArchiveBackend> = match &config.backend {
            BackendSpec::Fixture(dir) => Arc::new(
                FixtureStore::load(dir).map_err(|e| PipelineError::Backend(e.to_string()))?,
            ),
            BackendSpec::Live(endpoints) => {
                let live = LiveBackend::new(endpoints.clone());
                match crate::backend::CdxBackend::num_pages(&live, &CdxQuery::exact("http://www.usa.gov/")) {
                    Err(BackendError::Transport(e)) => return Err(PipelineError::Backend(e)),
                    _ => Arc::new(live),
                }
            }
        };
        Context::with_backend(config, backend)
    }

    pub fn with_backend(config: RunConfig, backend: Arc<dyn ArchiveBackend>) -> Result<Self, PipelineError> {
        config.validate()?;
        let epochs = config.load_epochs()?;
        let clock: Arc<dyn Clock> = if config.virtual_clock {
            Arc::new(VirtualClock::new())
        } else {
            Arc::new(SystemClock::new())
        };
        let cdx_limiter = Arc::new(RateLimiter::new(config.rate.cdx, clock.clone(), config.seed));
        let provenance_limiter = Arc::new(RateLimiter::new(
            config.rate.provenance,
            clock.clone(),
            config.seed.wrapping_add(1),
        ));
        let workers = config
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| PipelineError::Config(format!("worker pool: {e}")))?;
        Ok(Context {
            config,
            epochs,
            backend,
            clock,
            cdx_limiter,
            provenance_limiter,
            pool,
        })
    }

    pub fn gateway(&self) -> CdxGateway {
        CdxGateway::new(self.backend.clone(), self.cdx_limiter.clone())
    }

    pub fn verifier(&self) -> Verifier {
        Verifier::new(self.gateway(), self.epochs.clone()).expect("epochs validated non-empty")
    }

    pub fn attribution(&self) -> Attribution {
        Attribution {
            agencies: self.config.agencies.clone(),
            high_threshold: self.config.high_threshold,
            canon: Default::default(),
        }
    }

    pub fn crawl_config(&self) -> CrawlConfig {
        CrawlConfig {
            policy: self.config.crawl.policy.clone(),
            scope: self.config.scope.clone(),
            max_depth: self.config.crawl.max_depth,
            high_threshold: self.config.high_threshold,
            trap: TrapConfig::default(),
            agencies: self.config.agencies.clone(),
            host_delay: self.config.rate.host_delay,
            clock: self.clock.clone(),
        }
    }

    /// Runs `f` on the configured worker pool.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }
}

fn output_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Output(format!("{}: {e}", path.display()))
}

/// Writes `content`, creating parent directories.
pub fn write_output(path: &Path, content: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| output_err(parent, e))?;
    }
    std::fs::write(path, content).map_err(|e| output_err(path, e))
}

fn to_jsonl<T: Serialize>(rows: impl IntoIterator<Item = T>) -> String {
    rows.into_iter()
        .map(|r| serde_json::to_string(&r).expect("rows serialize") + "\n")
        .collect()
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

fn read_input(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

fn parse_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let text = read_input(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| PipelineError::Config(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Non-empty, non-comment lines of a seeds file.
pub fn read_seeds(path: &Path) -> Result<Vec<String>, PipelineError> {
    Ok(read_input(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// Rejects seeds that are malformed or outside the scope.
pub fn validate_seeds(seeds: &[String], scope: &ScopeRule) -> Result<(), PipelineError> {
    if seeds.is_empty() {
        return Err(PipelineError::Config("field `seeds`: no seed URLs".into()));
    }
    for s in seeds {
        let url = parse_http_url(s).map_err(|e| PipelineError::Config(format!("field `seeds`: {s}: {e}")))?;
        if !url.host_str().is_some_and(|h| scope.matches_host(h)) {
            return Err(PipelineError::Config(format!("field `seeds`: {s} is out of scope")));
        }
    }
    Ok(())
}

pub fn read_triplets(path: &Path) -> Result<Vec<SnapshotTuple>, PipelineError> {
    parse_jsonl::<TripletRow>(path)?
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.into_tuple()
                .map_err(|e| PipelineError::Config(format!("{}: row {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn triplets_jsonl(tuples: &[SnapshotTuple]) -> String {
    to_jsonl(tuples.iter().map(TripletRow::from))
}

/// Crawl output: candidates plus counters, without the candidate list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrawlSummary {
    pub seeds: usize,
    pub candidates: usize,
    pub fetched: usize,
    pub rejections: crate::crawler::RejectionCounts,
    pub traps: BTreeMap<crate::crawler::TrapReason, usize>,
    pub agencies: BTreeMap<String, usize>,
    pub underrepresented: Vec<String>,
}

impl CrawlSummary {
    fn new(seeds: usize, r: &CrawlReport) -> Self {
        CrawlSummary {
            seeds,
            candidates: r.candidates.len(),
            fetched: r.fetched,
            rejections: r.rejections.clone(),
            traps: r.traps.clone(),
            agencies: r.agencies.clone(),
            underrepresented: r.underrepresented.clone(),
        }
    }
}

/// Sticky-time crawl from `seeds`; writes `candidates.jsonl` to `out`.
pub fn run_crawl(ctx: &Context, seeds: &[String], out: &Path) -> Result<(CrawlReport, CrawlSummary), PipelineError> {
    validate_seeds(seeds, &ctx.config.scope)?;
    let config = ctx.crawl_config();
    let report = ctx.install(|| crawl(ctx.backend.as_ref(), seeds, &config));
    write_output(out, &to_jsonl(report.candidates.iter().map(CandidateRow::from)))?;
    let summary = CrawlSummary::new(seeds.len(), &report);
    Ok((report, summary))
}

/// Candidate inputs for one assemble run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssembleInputs {
    pub pairs: Vec<PathBuf>,
    pub candidates: Vec<PathBuf>,
    pub external: Vec<PathBuf>,
    pub decisions: Option<PathBuf>,
    pub sweeps: Vec<CdxQuery>,
}

impl AssembleInputs {
    pub fn from_config(config: &RunConfig) -> Self {
        AssembleInputs {
            pairs: config.inputs.pairs.clone(),
            candidates: config.inputs.candidates.clone(),
            external: config.inputs.external.clone(),
            decisions: config.inputs.decisions.clone(),
            sweeps: config.sweeps.clone(),
        }
    }

    /// Sorts a mixed file list into pairs, crawl candidates, decision logs
    /// and URL lists by looking at the first record.
    pub fn add_sniffed(&mut self, path: &Path) -> Result<(), PipelineError> {
        let text = read_input(path)?;
        let first = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
        let value: Option<serde_json::Value> = first.starts_with('{').then(|| serde_json::from_str(first).ok()).flatten();
        match value {
            Some(v) if v.get("captures").is_some() => self.pairs.push(path.into()),
            Some(v) if v.get("depth_class").is_some() => self.candidates.push(path.into()),
            Some(v) if v.get("action").is_some() => self.decisions = Some(path.into()),
            Some(_) => {
                return Err(PipelineError::Config(format!(
                    "{}: unrecognized record layout",
                    path.display()
                )))
            }
            None => self.external.push(path.into()),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct OriginalsReport {
    pub pairs: usize,
    pub with_early_capture: usize,
    pub early_non_success: usize,
    pub no_early_capture: usize,
    pub tuples: usize,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SourceReport {
    pub candidates: usize,
    pub suppressed: usize,
    pub already_claimed: usize,
    pub counters: FillCounters,
    pub tuples: usize,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepSummary {
    pub query: CdxQuery,
    pub keys: usize,
    pub rows: usize,
    pub pages: u32,
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExternalSummary {
    pub path: String,
    pub stats: IngestStats,
    pub trap_ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AssembleReport {
    pub originals: OriginalsReport,
    pub sources: BTreeMap<ProvenanceSource, SourceReport>,
    pub sweeps: Vec<SweepSummary>,
    pub external: Vec<ExternalSummary>,
    pub quota: Vec<QuotaRow>,
    pub tuples: usize,
    pub by_source: BTreeMap<ProvenanceSource, usize>,
    pub warnings: Vec<String>,
}

/// In-memory result of [`assemble`].
#[derive(Debug)]
pub struct Assembly {
    pub tuples: Vec<SnapshotTuple>,
    pub report: AssembleReport,
    pub ledger: QuotaLedger,
}

/// Builds the tuple set from every configured source: original pairs are
/// extended backward without quota; the other sources share one quota ledger
/// and are filled in precedence order.
pub fn assemble(ctx: &Context, inputs: &AssembleInputs) -> Result<Assembly, PipelineError> {
    let attribution = ctx.attribution();
    let verifier = ctx.verifier();
    let first_epoch = ctx.epochs[0].clone();
    let mut report = AssembleReport::default();

    let mut pairs = Vec::new();
    for path in &inputs.pairs {
        for (i, row) in parse_jsonl::<PairRow>(path)?.into_iter().enumerate() {
            match row.into_candidate(&attribution) {
                Ok(c) => pairs.push(c),
                Err(e) => report.warnings.push(format!("{}:{}: {e}", path.display(), i + 1)),
            }
        }
    }
    let backward = ctx.install(|| extend_pairs(&pairs, &verifier));
    report.originals = OriginalsReport {
        pairs: backward.pairs,
        with_early_capture: backward.with_early_capture,
        early_non_success: backward.early_non_success,
        no_early_capture: backward.no_early_capture,
        tuples: backward.tuples.len(),
        errors: backward.errors.clone(),
    };

    let mut rejected = BTreeSet::new();
    let mut manual = Vec::new();
    if let Some(path) = &inputs.decisions {
        let text = read_input(path)?;
        let log = parse_log(&text)
            .map_err(|(line, m)| PipelineError::Config(format!("{}:{line}: {m}", path.display())))?;
        for d in live_set(&log).into_values() {
            match d.action {
                DecisionAction::Reject => {
                    rejected.insert(d.surt.clone());
                }
                DecisionAction::Accept => match attribution.candidate(&d.url, ProvenanceSource::ManualCuration) {
                    Ok(c) => manual.push(c),
                    Err(e) => report.warnings.push(format!("decision {}: {e}", d.id)),
                },
            }
        }
    }

    let mut swept = Vec::new();
    for query in &inputs.sweeps {
        match domain_sweep(&verifier_gateway(&verifier), query, &ctx.epochs, &attribution) {
            Ok(s) => {
                report.sweeps.push(SweepSummary {
                    query: query.clone(),
                    keys: s.keys,
                    rows: s.rows,
                    pages: s.pages,
                    candidates: s.candidates.len(),
                });
                swept.extend(s.candidates);
            }
            Err(e) => report.warnings.push(format!("sweep {}: {e}", query.target)),
        }
    }

    let mut crawled = Vec::new();
    for path in &inputs.candidates {
        for (i, row) in parse_jsonl::<CandidateRow>(path)?.into_iter().enumerate() {
            match attribution.candidate(&row.url, ProvenanceSource::PastWebCrawl) {
                Ok(c) => crawled.push(c),
                Err(e) => report.warnings.push(format!("{}:{}: {e}", path.display(), i + 1)),
            }
        }
    }

    let mut listed = Vec::new();
    for path in &inputs.external {
        let mut ingest = ingest_external_list(path, ctx.config.scope.clone(), TrapConfig::default(), attribution.clone())
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        listed.extend(ingest.by_ref());
        let stats = ingest.stats().clone();
        report.external.push(ExternalSummary {
            path: path.display().to_string(),
            trap_ratio: stats.trap_ratio(),
            stats,
        });
    }

    let ledger = QuotaLedger::new(ctx.config.quota);
    let mut claimed: HashSet<String> = HashSet::new();
    let mut per_source = vec![backward.tuples];
    for (source, candidates) in [
        (ProvenanceSource::ManualCuration, manual),
        (ProvenanceSource::DomainSweep, swept),
        (ProvenanceSource::PastWebCrawl, crawled),
        (ProvenanceSource::ExternalList, listed),
    ] {
        if candidates.is_empty() {
            continue;
        }
        let mut sr = SourceReport {
            candidates: candidates.len(),
            ..Default::default()
        };
        let mut kept: Vec<Candidate> = Vec::new();
        for mut c in candidates {
            if source != ProvenanceSource::ManualCuration && rejected.contains(&c.key.key) {
                sr.suppressed += 1;
            } else if claimed.contains(&c.key.key) {
                sr.already_claimed += 1;
            } else {
                c.known.retain(|name, cap| name != &first_epoch.name || cap.status == Some(200));
                kept.push(c);
            }
        }
        let fill = ctx.install(|| fill_quota(kept, &ledger, &verifier));
        claimed.extend(fill.tuples.iter().map(|t| t.original.key.clone()));
        sr.counters = fill.counters;
        sr.tuples = fill.tuples.len();
        sr.errors = fill.errors;
        report.sources.insert(source, sr);
        per_source.push(fill.tuples);
    }

    let tuples = merge_and_dedupe(per_source);
    report.tuples = tuples.len();
    for t in &tuples {
        *report.by_source.entry(t.source).or_default() += 1;
    }
    report.quota = ledger.snapshot();
    Ok(Assembly {
        tuples,
        report,
        ledger,
    })
}

fn verifier_gateway(verifier: &Verifier) -> CdxGateway {
    verifier.gateway().clone()
}

/// Runs [`assemble`] and writes `triplets.jsonl` to `out`, with
/// `summary.csv` and `assemble-report.json` beside it.
pub fn run_assemble(ctx: &Context, inputs: &AssembleInputs, out: &Path) -> Result<Assembly, PipelineError> {
    let assembly = assemble(ctx, inputs)?;
    let dir = out.parent().unwrap_or(Path::new(""));
    write_output(out, &triplets_jsonl(&assembly.tuples))?;
    write_output(&dir.join("summary.csv"), &summary_csv(&assembly.tuples))?;
    write_output(&dir.join("assemble-report.json"), &to_json(&assembly.report))?;
    Ok(assembly)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EpochProvenance {
    pub groups: BTreeMap<SourceGroup, usize>,
    pub organizations: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProvenanceReport {
    pub records: usize,
    pub by_epoch: BTreeMap<String, EpochProvenance>,
    pub by_agency: Vec<DistributionRow>,
    pub by_partner: Vec<DistributionRow>,
    pub series: BTreeMap<SourceGroup, Vec<usize>>,
    pub shapes: BTreeMap<SourceGroup, TrendShape>,
    pub errors: Vec<String>,
}

/// Mines provenance for `tuples` and summarizes it.
pub fn provenance(ctx: &Context, tuples: &[SnapshotTuple]) -> Result<(Vec<crate::provenance::ProvenanceRecord>, ProvenanceReport), PipelineError> {
    let table = match &ctx.config.grouping {
        Some(p) => SourceGroupingTable::load(p).map_err(|e| PipelineError::Config(e.to_string()))?,
        None => SourceGroupingTable::default(),
    };
    let run = mine_provenance(tuples, ctx.backend.as_ref(), &ctx.provenance_limiter, &table);
    let by_epoch_rows = distribution(&run.records, Dimension::Epoch);
    let epoch_names: Vec<String> = ctx.epochs.iter().map(|e| e.name.clone()).collect();
    let by_epoch = epoch_names
        .iter()
        .map(|name| {
            (
                name.clone(),
                EpochProvenance {
                    groups: crate::provenance::group_counts(&by_epoch_rows, name),
                    organizations: organization_counts(&by_epoch_rows, name),
                },
            )
        })
        .collect();
    let series = epoch_series(&run.records, &epoch_names);
    let shapes = if epoch_names.len() == 3 {
        trend_shape(&series).map_err(|e| PipelineError::Config(e.to_string()))?
    } else {
        BTreeMap::new()
    };
    let report = ProvenanceReport {
        records: run.records.len(),
        by_epoch,
        by_agency: distribution(&run.records, Dimension::Agency),
        by_partner: distribution(&run.records, Dimension::Partner),
        series,
        shapes,
        errors: run.errors,
    };
    Ok((run.records, report))
}

/// Reads `triplets`, writes the per-capture CSV to `out` and
/// `provenance-report.json` beside it.
pub fn run_provenance(ctx: &Context, triplets: &Path, out: &Path) -> Result<ProvenanceReport, PipelineError> {
    let tuples = read_triplets(triplets)?;
    let (records, report) = provenance(ctx, &tuples)?;
    let dir = out.parent().unwrap_or(Path::new(""));
    write_output(out, &records_csv(&records))?;
    write_output(&dir.join("provenance-report.json"), &to_json(&report))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub page_categories: CategorySummary,
    pub percentages: crate::change::CategoryPercentages,
    pub trends: Vec<ChangeTrend>,
    pub tracked_table: Vec<TrackedTermRow>,
    pub decay: Option<DecayReport>,
    pub pages: usize,
    pub warnings: Vec<String>,
}

/// Term-change analysis of each tuple's replayed bodies plus optional decay
/// classification of probe results.
pub fn analyze(ctx: &Context, tuples: &[SnapshotTuple]) -> Result<(Vec<TermChangeReport>, AnalysisReport), PipelineError> {
    let terms = match &ctx.config.terms {
        Some(p) => TrackedTermList::load(p).map_err(PipelineError::Config)?,
        None => TrackedTermList::published(),
    };
    let windows = match &ctx.config.windows {
        Some(p) => AdministrationWindows::load(p).map_err(|e| PipelineError::Config(e.to_string()))?,
        None => AdministrationWindows::default(),
    };
    let config = ChangeConfig {
        roles: EpochRoles::from_epochs(&ctx.epochs).map_err(|e| PipelineError::Config(format!("field `epochs`: {e}")))?,
        windows,
        ..ChangeConfig::default()
    };
    let probes = match &ctx.config.inputs.probes {
        Some(p) => Some(
            serde_json::from_str::<ProbeSet>(&read_input(p)?)
                .map_err(|e| PipelineError::Config(format!("{}:{}: {e}", p.display(), e.line())))?,
        ),
        None => None,
    };
    let outcomes: Vec<Result<TermChangeReport, String>> = ctx.install(|| {
        tuples
            .par_iter()
            .map(|t| {
                let mut texts = BTreeMap::new();
                for (epoch, cap) in &t.captures {
                    let replay = ctx
                        .backend
                        .replay(t.url(), cap.datetime)
                        .map_err(|e| format!("{} {epoch}: {e}", t.original.key))?;
                    if let Some(r) = replay {
                        texts.insert(epoch.clone(), extract_text(&r.body));
                    }
                }
                attribute_changes(t.url(), &t.agency, &texts, &terms, &config).map_err(|e| e.to_string())
            })
            .collect()
    });
    let mut reports = Vec::new();
    let mut warnings = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => reports.push(r),
            Err(e) => warnings.push(e),
        }
    }
    let summary = aggregate_categories(&reports);
    let report = AnalysisReport {
        percentages: summary.percentages,
        page_categories: summary,
        trends: mine_trends(&reports, ctx.config.trend_threshold),
        tracked_table: tracked_term_table(&reports, &terms),
        decay: probes.map(|p| classify_probes(&p, &DecayConfig::default())),
        pages: reports.len(),
        warnings,
    };
    Ok((reports, report))
}

/// Reads `triplets` and writes `report.json` to `out`.
pub fn run_analyze(ctx: &Context, triplets: &Path, out: &Path) -> Result<AnalysisReport, PipelineError> {
    let tuples = read_triplets(triplets)?;
    let (_, report) = analyze(ctx, &tuples)?;
    write_output(out, &to_json(&report))?;
    Ok(report)
}
