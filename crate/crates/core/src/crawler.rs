//! Past-web crawler pinned to one instant (sticky time policy).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, Datelike, Utc};
use rayon::prelude::*;
use regex::Regex;
use scraper::{Html, Selector};
use serde::{Deserialize, Serialize};
use url::Url;

use crate::agency::AgencyTable;
use crate::backend::{BackendError, ReplayBackend};
use crate::epoch::ymd;
use crate::memento::CaptureRef;
use crate::rate::{Clock, RateLimitPolicy, RateLimiter, SystemClock};
use crate::url_keys::{
    depth_of, parse_http_url, segment_count, Canonicalizer, PathDepthClass, ScopeRule, SurtKey,
    UrlError, DEFAULT_HIGH_THRESHOLD,
};

pub const DEFAULT_MAX_DEPTH: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StickyTimePolicy {
    pub target: DateTime<Utc>,
    pub accept_years: BTreeSet<i32>,
}

impl Default for StickyTimePolicy {
    fn default() -> Self {
        StickyTimePolicy {
            target: ymd(2008, 1, 1),
            accept_years: BTreeSet::from([2007, 2008]),
        }
    }
}

impl StickyTimePolicy {
    pub fn check(&self, capture: &CaptureRef) -> Result<(), RejectReason> {
        if capture.status != Some(200) {
            return Err(RejectReason::NonSuccessStatus);
        }
        if !self.accept_years.contains(&capture.datetime.year()) {
            return Err(RejectReason::OutOfWindow);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RejectReason {
    NonSuccessStatus,
    OutOfWindow,
    NoCapture,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchOutcome {
    Accepted { capture: CaptureRef, body: String },
    Rejected(RejectReason),
}

/// Replays `url` at the policy target and applies the sticky-time rule.
pub fn fetch_at(
    backend: &dyn ReplayBackend,
    url: &str,
    policy: &StickyTimePolicy,
) -> Result<FetchOutcome, BackendError> {
    let Some(replay) = backend.replay(url, policy.target)? else {
        return Ok(FetchOutcome::Rejected(RejectReason::NoCapture));
    };
    Ok(match policy.check(&replay.capture) {
        Ok(()) => FetchOutcome::Accepted {
            capture: replay.capture,
            body: replay.body,
        },
        Err(reason) => FetchOutcome::Rejected(reason),
    })
}

/// Absolute http(s) anchor targets in `body`, deduplicated by canonical key.
pub fn extract_links(body: &str, base: &str) -> Vec<String> {
    let Ok(base) = Url::parse(base) else {
        return Vec::new();
    };
    let doc = Html::parse_document(body);
    let selector = Selector::parse("a[href]").expect("static selector");
    let canon = Canonicalizer::default();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for a in doc.select(&selector) {
        let Some(href) = a.value().attr("href") else {
            continue;
        };
        let Ok(mut url) = base.join(href.trim()) else {
            continue;
        };
        if !matches!(url.scheme(), "http" | "https") || url.host_str().is_none() {
            continue;
        }
        url.set_fragment(None);
        let key = canon.surt_of(&url);
        if seen.insert(key) {
            out.push(url.to_string());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TrapReason {
    RepeatedSegment,
    PathDepthExplosion,
    CalendarPattern,
    SessionParam,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrapVerdict {
    pub is_trap: bool,
    pub reason: TrapReason,
}

impl TrapVerdict {
    fn of(reason: TrapReason) -> Self {
        TrapVerdict {
            is_trap: reason != TrapReason::None,
            reason,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrapConfig {
    pub repeat_threshold: usize,
    pub depth_threshold: usize,
    /// Siblings under one parent beyond which the family counts as exploding.
    pub sibling_limit: usize,
    pub calendar_patterns: Vec<Regex>,
    pub canon: Canonicalizer,
}

impl Default for TrapConfig {
    fn default() -> Self {
        TrapConfig {
            repeat_threshold: 3,
            depth_threshold: 12,
            sibling_limit: 500,
            calendar_patterns: vec![
                Regex::new(r"/(19|20)\d{2}/(0?[1-9]|1[0-2])/(0?[1-9]|[12]\d|3[01])(/|$)")
                    .expect("calendar regex"),
                Regex::new(r"(?i)calendar[^?]*\?(.*&)?(year|month|day|date)=")
                    .expect("calendar query regex"),
            ],
            canon: Canonicalizer::default(),
        }
    }
}

impl TrapConfig {
    pub fn detect(&self, url: &str, siblings_seen: usize) -> Result<TrapVerdict, UrlError> {
        let url = parse_http_url(url)?;
        Ok(TrapVerdict::of(self.reason(&url, siblings_seen)))
    }

    fn reason(&self, url: &Url, siblings_seen: usize) -> TrapReason {
        let segments: Vec<&str> = url
            .path_segments()
            .map(|s| s.filter(|x| !x.is_empty()).collect())
            .unwrap_or_default();
        let mut run = 1;
        for pair in segments.windows(2) {
            if pair[0].eq_ignore_ascii_case(pair[1]) {
                run += 1;
                if run >= self.repeat_threshold {
                    return TrapReason::RepeatedSegment;
                }
            } else {
                run = 1;
            }
        }
        if segment_count(url) > self.depth_threshold || siblings_seen >= self.sibling_limit {
            return TrapReason::PathDepthExplosion;
        }
        let tail = match url.query() {
            Some(q) => format!("{}?{q}", url.path()),
            None => url.path().to_string(),
        };
        if self.calendar_patterns.iter().any(|re| re.is_match(&tail)) {
            return TrapReason::CalendarPattern;
        }
        if self.canon.has_session_param(url) {
            return TrapReason::SessionParam;
        }
        TrapReason::None
    }
}

pub fn detect_trap(url: &str, siblings_seen: usize) -> Result<TrapVerdict, UrlError> {
    TrapConfig::default().detect(url, siblings_seen)
}

/// BFS frontier: no key is enqueued twice and nothing beyond `max_depth` is queued.
#[derive(Debug, Clone)]
pub struct CrawlFrontier {
    queue: VecDeque<(SurtKey, usize)>,
    visited: HashSet<String>,
    max_depth: usize,
}

impl CrawlFrontier {
    pub fn new(max_depth: usize) -> Self {
        CrawlFrontier {
            queue: VecDeque::new(),
            visited: HashSet::new(),
            max_depth,
        }
    }

    pub fn push(&mut self, key: SurtKey, depth: usize) -> bool {
        if depth > self.max_depth || !self.visited.insert(key.key.clone()) {
            return false;
        }
        self.queue.push_back((key, depth));
        true
    }

    /// All queued entries at the shallowest depth.
    pub fn pop_level(&mut self) -> Vec<(SurtKey, usize)> {
        let Some(&(_, depth)) = self.queue.front() else {
            return Vec::new();
        };
        let mut level = Vec::new();
        while self.queue.front().is_some_and(|(_, d)| *d == depth) {
            level.extend(self.queue.pop_front());
        }
        level
    }

    pub fn visited_count(&self) -> usize {
        self.visited.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }
}

#[derive(Clone)]
pub struct CrawlConfig {
    pub policy: StickyTimePolicy,
    pub scope: ScopeRule,
    pub max_depth: usize,
    pub high_threshold: usize,
    pub trap: TrapConfig,
    pub agencies: AgencyTable,
    pub host_delay: Duration,
    pub clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for CrawlConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CrawlConfig")
            .field("policy", &self.policy)
            .field("scope", &self.scope)
            .field("max_depth", &self.max_depth)
            .field("host_delay", &self.host_delay)
            .finish_non_exhaustive()
    }
}

impl Default for CrawlConfig {
    fn default() -> Self {
        CrawlConfig {
            policy: StickyTimePolicy::default(),
            scope: ScopeRule::default(),
            max_depth: DEFAULT_MAX_DEPTH,
            high_threshold: DEFAULT_HIGH_THRESHOLD,
            trap: TrapConfig::default(),
            agencies: AgencyTable::default(),
            host_delay: Duration::ZERO,
            clock: Arc::new(SystemClock::new()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlCandidate {
    pub surt: SurtKey,
    pub url: String,
    pub agency: String,
    pub depth: PathDepthClass,
    pub crawl_depth: usize,
    pub accepted: CaptureRef,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionCounts {
    pub non_success: usize,
    pub out_of_window: usize,
    pub no_capture: usize,
    pub out_of_scope: usize,
    pub malformed: usize,
    pub backend_errors: usize,
}

impl RejectionCounts {
    fn add(&mut self, reason: RejectReason) {
        match reason {
            RejectReason::NonSuccessStatus => self.non_success += 1,
            RejectReason::OutOfWindow => self.out_of_window += 1,
            RejectReason::NoCapture => self.no_capture += 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlReport {
    pub candidates: Vec<CrawlCandidate>,
    pub fetched: usize,
    pub rejections: RejectionCounts,
    pub traps: BTreeMap<TrapReason, usize>,
    /// Candidates per agency.
    pub agencies: BTreeMap<String, usize>,
    /// Configured agencies with no candidate, for re-seeding.
    pub underrepresented: Vec<String>,
}

struct HostGates {
    delay: Duration,
    clock: Arc<dyn Clock>,
    gates: Mutex<HashMap<String, Arc<RateLimiter>>>,
}

impl HostGates {
    fn wait(&self, host: &str) {
        if self.delay.is_zero() {
            return;
        }
        let gate = self
            .gates
            .lock()
            .expect("host gates poisoned")
            .entry(host.to_string())
            .or_insert_with(|| {
                Arc::new(RateLimiter::new(
                    RateLimitPolicy::fixed(self.delay),
                    self.clock.clone(),
                    0,
                ))
            })
            .clone();
        gate.acquire();
    }
}

fn parent_dir(key: &str) -> &str {
    key.rsplit_once('/').map_or(key, |(dir, _)| dir)
}

/// Breadth-first crawl over accepted pages only; rejected pages contribute
/// no outlinks.
pub fn crawl(backend: &dyn ReplayBackend, seeds: &[String], config: &CrawlConfig) -> CrawlReport {
    let canon = &config.trap.canon;
    let mut report = CrawlReport::default();
    let mut frontier = CrawlFrontier::new(config.max_depth);
    let mut siblings: HashMap<String, usize> = HashMap::new();
    let gates = HostGates {
        delay: config.host_delay,
        clock: config.clock.clone(),
        gates: Mutex::new(HashMap::new()),
    };

    let mut admit = |raw: &str, depth: usize, report: &mut CrawlReport, frontier: &mut CrawlFrontier| {
        let url = match parse_http_url(raw) {
            Ok(u) => u,
            Err(_) => {
                report.rejections.malformed += 1;
                return;
            }
        };
        if !url.host_str().is_some_and(|h| config.scope.matches_host(h)) {
            report.rejections.out_of_scope += 1;
            return;
        }
        let key = SurtKey {
            key: canon.surt_of(&url),
            source_url: url.to_string(),
        };
        if frontier.visited.contains(&key.key) {
            return;
        }
        let dir = parent_dir(&key.key).to_string();
        let seen = siblings.get(&dir).copied().unwrap_or(0);
        let verdict = config.trap.reason(&url, seen);
        if verdict != TrapReason::None {
            *report.traps.entry(verdict).or_default() += 1;
            return;
        }
        if frontier.push(key, depth) {
            *siblings.entry(dir).or_default() += 1;
        }
    };

    for seed in seeds {
        admit(seed, 0, &mut report, &mut frontier);
    }

    loop {
        let level = frontier.pop_level();
        if level.is_empty() {
            break;
        }
        let outcomes: Vec<Result<FetchOutcome, BackendError>> = level
            .par_iter()
            .map(|(key, _)| {
                let host = Url::parse(&key.source_url)
                    .ok()
                    .and_then(|u| u.host_str().map(str::to_string))
                    .unwrap_or_default();
                gates.wait(&host);
                fetch_at(backend, &key.source_url, &config.policy)
            })
            .collect();
        report.fetched += level.len();
        for ((key, depth), outcome) in level.into_iter().zip(outcomes) {
            let (capture, body) = match outcome {
                Err(_) => {
                    report.rejections.backend_errors += 1;
                    continue;
                }
                Ok(FetchOutcome::Rejected(reason)) => {
                    report.rejections.add(reason);
                    continue;
                }
                Ok(FetchOutcome::Accepted { capture, body }) => (capture, body),
            };
            let url = parse_http_url(&key.source_url).expect("admitted urls parse");
            let agency = config
                .agencies
                .attribute(url.host_str().unwrap_or_default());
            *report.agencies.entry(agency.clone()).or_default() += 1;
            for link in extract_links(&body, &key.source_url) {
                admit(&link, depth + 1, &mut report, &mut frontier);
            }
            report.candidates.push(CrawlCandidate {
                depth: depth_of(&url, config.high_threshold),
                url: key.source_url.clone(),
                surt: key,
                agency,
                crawl_depth: depth,
                accepted: capture,
            });
        }
    }
    report.underrepresented = config
        .agencies
        .agencies
        .iter()
        .filter(|a| !report.agencies.contains_key(*a))
        .cloned()
        .collect();
    report
}

/// One `candidates.jsonl` row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub surt: String,
    pub url: String,
    pub depth_class: crate::url_keys::DepthClass,
    pub accepted_datetime: crate::epoch::Timestamp,
}

impl From<&CrawlCandidate> for CandidateRow {
    fn from(c: &CrawlCandidate) -> Self {
        CandidateRow {
            surt: c.surt.key.clone(),
            url: c.url.clone(),
            depth_class: c.depth.class,
            accepted_datetime: c.accepted.timestamp(),
        }
    }
}
