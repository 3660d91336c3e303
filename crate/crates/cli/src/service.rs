//! HTTP API used by the curation console: prefix listings, replay links,
//! decisions, quota and background jobs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tempex::assembler::{QuotaRow, Verifier};
use tempex::curation::{prefix_listing, replay_links, DecisionAction, DecisionError, DecisionLog, LinksError};
use tempex::pipeline::{
    read_seeds, run_analyze, run_assemble, run_crawl, run_provenance, validate_seeds, AssembleInputs, Context,
    PipelineError,
};
use tempex::url_keys::{canonicalize, in_scope};

pub const DECISIONS_FILE: &str = "decisions.jsonl";
pub const JOBS_FILE: &str = "jobs.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobKind {
    Crawl,
    Assemble,
    Provenance,
    Analyze,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobStatus::Done | JobStatus::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobState {
    pub job_id: u64,
    pub kind: JobKind,
    pub status: JobStatus,
    pub counters: Value,
    pub started: Option<DateTime<Utc>>,
    pub ended: Option<DateTime<Utc>>,
    pub error: Option<String>,
    pub outputs: Vec<PathBuf>,
}

impl JobState {
    /// Moves forward only; a terminal job never changes status again.
    pub fn advance(&mut self, to: JobStatus) -> bool {
        if self.status.is_terminal() || to <= self.status {
            return false;
        }
        self.status = to;
        true
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JobRequest {
    kind: JobKind,
    #[serde(default)]
    seeds: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecisionRequest {
    surt: String,
    action: DecisionAction,
    #[serde(default)]
    note: Option<String>,
    #[serde(default)]
    actor: Option<String>,
}

pub struct AppState {
    ctx: Arc<Context>,
    verifier: Verifier,
    decisions: Mutex<DecisionLog>,
    known: Mutex<BTreeMap<String, String>>,
    jobs: Mutex<Vec<JobState>>,
    quota: Mutex<Vec<QuotaRow>>,
    state_dir: PathBuf,
}

impl AppState {
    /// Opens (or creates) the state directory and its decision log.
    pub fn new(ctx: Context, state_dir: &Path) -> Result<Arc<Self>, PipelineError> {
        std::fs::create_dir_all(state_dir)
            .map_err(|e| PipelineError::Output(format!("{}: {e}", state_dir.display())))?;
        let log = DecisionLog::open(&state_dir.join(DECISIONS_FILE)).map_err(|e| PipelineError::Config(e.to_string()))?;
        let known = log.entries().iter().map(|d| (d.surt.clone(), d.url.clone())).collect();
        let verifier = ctx.verifier();
        Ok(Arc::new(AppState {
            ctx: Arc::new(ctx),
            verifier,
            decisions: Mutex::new(log),
            known: Mutex::new(known),
            jobs: Mutex::new(Vec::new()),
            quota: Mutex::new(Vec::new()),
            state_dir: state_dir.to_path_buf(),
        }))
    }

    pub fn jobs(&self) -> Vec<JobState> {
        self.jobs.lock().unwrap().clone()
    }

    fn remember<'a>(&self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) {
        let mut known = self.known.lock().unwrap();
        for (surt, url) in pairs {
            known.entry(surt.to_string()).or_insert_with(|| url.to_string());
        }
    }

    fn rejected(&self) -> Vec<String> {
        let log = self.decisions.lock().unwrap();
        log.live()
            .into_iter()
            .filter(|(_, d)| d.action == DecisionAction::Reject)
            .map(|(s, _)| s.to_string())
            .collect()
    }

    fn update_job(&self, id: u64, f: impl FnOnce(&mut JobState)) {
        let mut jobs = self.jobs.lock().unwrap();
        if let Some(job) = jobs.iter_mut().find(|j| j.job_id == id) {
            f(job);
        }
        let snapshot = serde_json::to_string_pretty(&*jobs).expect("jobs serialize");
        if let Err(e) = std::fs::write(self.state_dir.join(JOBS_FILE), snapshot) {
            tracing::warn!("jobs snapshot: {e}");
        }
    }

    fn latest_output(&self, kind: JobKind) -> Option<PathBuf> {
        self.jobs
            .lock()
            .unwrap()
            .iter()
            .rev()
            .find(|j| j.kind == kind && j.status == JobStatus::Done)
            .and_then(|j| j.outputs.first().cloned())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/prefix", get(prefix))
        .route("/replay-links", get(links))
        .route("/decisions", get(list_decisions).post(post_decision))
        .route("/quota", get(quota))
        .route("/jobs", get(list_jobs).post(post_job))
        .route("/jobs/{id}", get(get_job))
        .with_state(state)
}

fn error(status: StatusCode, message: impl std::fmt::Display) -> Response {
    (status, Json(json!({ "error": message.to_string() }))).into_response()
}

fn scope_check(state: &AppState, url: &str) -> Result<(), Response> {
    match in_scope(url, &state.ctx.config.scope) {
        Ok(true) => Ok(()),
        Ok(false) => Err(error(StatusCode::BAD_REQUEST, format!("{url} is out of scope"))),
        Err(e) => Err(error(StatusCode::BAD_REQUEST, format!("{url}: {e}"))),
    }
}

#[derive(Deserialize)]
struct PrefixParams {
    dir: String,
}

async fn prefix(State(state): State<Arc<AppState>>, Query(p): Query<PrefixParams>) -> Response {
    if let Err(r) = scope_check(&state, &p.dir) {
        return r;
    }
    let s = state.clone();
    let result = tokio::task::spawn_blocking(move || prefix_listing(&s.ctx.gateway(), &p.dir, &s.ctx.epochs)).await;
    match result {
        Ok(Ok(rows)) => {
            let rejected = state.rejected();
            let rows: Vec<_> = rows.into_iter().filter(|r| !rejected.contains(&r.surt)).collect();
            state.remember(rows.iter().map(|r| (r.surt.as_str(), r.url.as_str())));
            Json(rows).into_response()
        }
        Ok(Err(e)) => error(StatusCode::BAD_GATEWAY, e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

#[derive(Deserialize)]
struct LinksParams {
    url: String,
    epoch: String,
}

async fn links(State(state): State<Arc<AppState>>, Query(p): Query<LinksParams>) -> Response {
    if let Err(r) = scope_check(&state, &p.url) {
        return r;
    }
    let s = state.clone();
    let (url, epoch) = (p.url.clone(), p.epoch);
    let result = tokio::task::spawn_blocking(move || {
        replay_links(s.ctx.backend.as_ref(), &s.verifier, &s.ctx.config.scope, &url, &epoch)
    })
    .await;
    match result {
        Ok(Ok(links)) => {
            let rejected = state.rejected();
            let links: Vec<_> = links.into_iter().filter(|l| !rejected.contains(&l.surt)).collect();
            if let Ok(key) = canonicalize(&p.url) {
                state.remember([(key.as_str(), p.url.as_str())]);
            }
            state.remember(links.iter().map(|l| (l.surt.as_str(), l.url.as_str())));
            Json(links).into_response()
        }
        Ok(Err(e @ LinksError::UnknownEpoch(_))) => error(StatusCode::BAD_REQUEST, e),
        Ok(Err(e @ LinksError::NoCapture { .. })) => error(StatusCode::NOT_FOUND, e),
        Ok(Err(e)) => error(StatusCode::BAD_GATEWAY, e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn list_decisions(State(state): State<Arc<AppState>>) -> Response {
    let log = state.decisions.lock().unwrap();
    Json(log.entries()).into_response()
}

async fn post_decision(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: DecisionRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let Some(url) = state.known.lock().unwrap().get(&req.surt).cloned() else {
        return error(StatusCode::NOT_FOUND, format!("unknown key {}", req.surt));
    };
    let actor = req.actor.unwrap_or_else(|| "curator".into());
    let at = Utc::now();
    let mut log = state.decisions.lock().unwrap();
    match log.record(&req.surt, &url, req.action, &actor, at, req.note) {
        Ok(d) => (StatusCode::CREATED, Json(d)).into_response(),
        Err(e @ DecisionError::Duplicate { .. }) => error(StatusCode::CONFLICT, e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn quota(State(state): State<Arc<AppState>>) -> Response {
    Json(state.quota.lock().unwrap().clone()).into_response()
}

async fn list_jobs(State(state): State<Arc<AppState>>) -> Response {
    Json(state.jobs()).into_response()
}

async fn get_job(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<u64>) -> Response {
    match state.jobs().into_iter().find(|j| j.job_id == id) {
        Some(j) => Json(j).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("no job {id}")),
    }
}

/// Everything a job needs, fixed when it is accepted.
enum JobPlan {
    Crawl(Vec<String>),
    Assemble(AssembleInputs),
    Provenance(PathBuf),
    Analyze(PathBuf),
}

fn plan(state: &AppState, req: JobRequest) -> Result<JobPlan, PipelineError> {
    let config = &state.ctx.config;
    Ok(match req.kind {
        JobKind::Crawl => {
            let seeds = match req.seeds {
                Some(s) => s,
                None => match &config.inputs.seeds {
                    Some(path) => read_seeds(path)?,
                    None => return Err(PipelineError::Config("crawl job needs seeds".into())),
                },
            };
            if seeds.is_empty() {
                return Err(PipelineError::Config("crawl job needs seeds".into()));
            }
            validate_seeds(&seeds, &config.scope)?;
            JobPlan::Crawl(seeds)
        }
        JobKind::Assemble => {
            let mut inputs = AssembleInputs::from_config(config);
            let log = state.state_dir.join(DECISIONS_FILE);
            if log.exists() {
                inputs.decisions = Some(log);
            }
            for job in state.jobs.lock().unwrap().iter() {
                if job.kind == JobKind::Crawl && job.status == JobStatus::Done {
                    inputs.candidates.extend(job.outputs.first().cloned());
                }
            }
            JobPlan::Assemble(inputs)
        }
        JobKind::Provenance | JobKind::Analyze => {
            let triplets = state
                .latest_output(JobKind::Assemble)
                .ok_or_else(|| PipelineError::Config("no completed assemble job".into()))?;
            if req.kind == JobKind::Provenance {
                JobPlan::Provenance(triplets)
            } else {
                JobPlan::Analyze(triplets)
            }
        }
    })
}

async fn post_job(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: JobRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let kind = req.kind;
    let plan = match plan(&state, req) {
        Ok(p) => p,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let job = {
        let mut jobs = state.jobs.lock().unwrap();
        let job = JobState {
            job_id: jobs.len() as u64 + 1,
            kind,
            status: JobStatus::Queued,
            counters: Value::Null,
            started: None,
            ended: None,
            error: None,
            outputs: Vec::new(),
        };
        jobs.push(job.clone());
        job
    };
    let id = job.job_id;
    state.update_job(id, |_| {});
    let s = state.clone();
    tokio::task::spawn_blocking(move || run_job(&s, id, plan));
    (StatusCode::ACCEPTED, Json(job)).into_response()
}

fn run_job(state: &AppState, id: u64, plan: JobPlan) {
    let now = Utc::now();
    state.update_job(id, |j| {
        j.advance(JobStatus::Running);
        j.started = Some(now);
    });
    let dir = state.state_dir.join("jobs").join(id.to_string());
    let ctx = &state.ctx;
    let result: Result<(Value, PathBuf), PipelineError> = match plan {
        JobPlan::Crawl(seeds) => {
            let out = dir.join("candidates.jsonl");
            run_crawl(ctx, &seeds, &out).map(|(_, summary)| (json!(summary), out))
        }
        JobPlan::Assemble(inputs) => {
            let out = dir.join("triplets.jsonl");
            run_assemble(ctx, &inputs, &out).map(|a| {
                *state.quota.lock().unwrap() = a.report.quota.clone();
                (json!({ "tuples": a.report.tuples, "by_source": a.report.by_source }), out)
            })
        }
        JobPlan::Provenance(triplets) => {
            let out = dir.join("prov.csv");
            run_provenance(ctx, &triplets, &out).map(|r| (json!({ "series": r.series }), out))
        }
        JobPlan::Analyze(triplets) => {
            let out = dir.join("report.json");
            run_analyze(ctx, &triplets, &out).map(|r| (json!({ "page_categories": r.page_categories }), out))
        }
    };
    let ended = Utc::now();
    state.update_job(id, |j| {
        j.ended = Some(ended);
        match result {
            Ok((counters, out)) => {
                j.counters = counters;
                j.outputs = vec![out];
                j.advance(JobStatus::Done);
            }
            Err(e) => {
                j.error = Some(e.to_string());
                j.advance(JobStatus::Failed);
            }
        }
    });
}
