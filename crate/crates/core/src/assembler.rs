//! Candidate streams → verified snapshot tuples under per-agency quotas.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agency::AgencyTable;
use crate::cdx::{capture_status_in_window, CdxError, CdxGateway, CdxQuery, CdxRecord, MatchType, WindowStatus};
use crate::crawler::{CrawlCandidate, TrapConfig, TrapReason};
use crate::epoch::{EpochSpec, Timestamp};
use crate::memento::{ArchiveEndpoint, CaptureRef};
use crate::url_keys::{depth_of, parse_http_url, DepthClass, PathDepthClass, ScopeRule, SurtKey, UrlError};

pub const DEFAULT_QUOTA: usize = 15;

/// Where a candidate came from, in merge precedence order (first wins).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProvenanceSource {
    OriginalCollection,
    ManualCuration,
    DomainSweep,
    PastWebCrawl,
    ExternalList,
}

impl ProvenanceSource {
    pub fn as_str(self) -> &'static str {
        match self {
            ProvenanceSource::OriginalCollection => "OriginalCollection",
            ProvenanceSource::ManualCuration => "ManualCuration",
            ProvenanceSource::DomainSweep => "DomainSweep",
            ProvenanceSource::PastWebCrawl => "PastWebCrawl",
            ProvenanceSource::ExternalList => "ExternalList",
        }
    }
}

/// One URL with an accepted capture per configured epoch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotTuple {
    pub original: SurtKey,
    pub agency: String,
    pub depth: PathDepthClass,
    pub captures: BTreeMap<String, CaptureRef>,
    pub source: ProvenanceSource,
}

impl SnapshotTuple {
    pub fn url(&self) -> &str {
        &self.original.source_url
    }
}

/// A URL awaiting verification, with any captures already verified upstream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub key: SurtKey,
    pub agency: String,
    pub depth: PathDepthClass,
    pub source: ProvenanceSource,
    #[serde(default)]
    pub known: BTreeMap<String, CaptureRef>,
}

/// Canonicalization and attribution settings shared by every candidate source.
#[derive(Debug, Clone)]
pub struct Attribution {
    pub agencies: AgencyTable,
    pub high_threshold: usize,
    pub canon: crate::url_keys::Canonicalizer,
}

impl Default for Attribution {
    fn default() -> Self {
        Attribution {
            agencies: AgencyTable::default(),
            high_threshold: crate::url_keys::DEFAULT_HIGH_THRESHOLD,
            canon: Default::default(),
        }
    }
}

impl Attribution {
    pub fn candidate(&self, url: &str, source: ProvenanceSource) -> Result<Candidate, UrlError> {
        let parsed = parse_http_url(url)?;
        Ok(Candidate {
            key: SurtKey {
                key: self.canon.surt_of(&parsed),
                source_url: url.to_string(),
            },
            agency: self.agencies.attribute(parsed.host_str().unwrap_or_default()),
            depth: depth_of(&parsed, self.high_threshold),
            source,
            known: BTreeMap::new(),
        })
    }

    pub fn from_crawl(&self, c: &CrawlCandidate, early: &EpochSpec) -> Candidate {
        let mut known = BTreeMap::new();
        if early.window.contains(c.accepted.datetime) && c.accepted.status == Some(200) {
            known.insert(early.name.clone(), c.accepted.clone());
        }
        Candidate {
            key: c.surt.clone(),
            agency: c.agency.clone(),
            depth: c.depth,
            source: ProvenanceSource::PastWebCrawl,
            known,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssembleError {
    #[error(transparent)]
    Cdx(#[from] CdxError),
    #[error("candidate {key} lacks verified captures for {missing:?}")]
    Precondition { key: String, missing: Vec<String> },
    #[error("at least one epoch must be configured")]
    NoEpochs,
}

/// Outcome of checking every epoch of a candidate, in epoch order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verification {
    Tuple(SnapshotTuple),
    /// First epoch without a success capture, and what was found there.
    Missing { epoch: usize, status: WindowStatus },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackwardOutcome {
    Tuple(SnapshotTuple),
    NoEarlyCapture,
    EarlyCaptureNonSuccess,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForwardOutcome {
    Tuple(SnapshotTuple),
    MissingMiddle,
    MissingLate,
}

/// Epoch checks against CDX, one exact query per URL (cached).
pub struct Verifier {
    gateway: CdxGateway,
    epochs: Vec<EpochSpec>,
    archive: ArchiveEndpoint,
    cache: Mutex<HashMap<String, Arc<Vec<CdxRecord>>>>,
}

impl Verifier {
    pub fn new(gateway: CdxGateway, epochs: Vec<EpochSpec>) -> Result<Self, AssembleError> {
        if epochs.is_empty() {
            return Err(AssembleError::NoEpochs);
        }
        Ok(Verifier {
            gateway,
            epochs,
            archive: ArchiveEndpoint::wayback(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn epochs(&self) -> &[EpochSpec] {
        &self.epochs
    }

    pub fn gateway(&self) -> &CdxGateway {
        &self.gateway
    }

    /// All CDX rows for one key.
    pub fn rows(&self, key: &SurtKey) -> Result<Arc<Vec<CdxRecord>>, CdxError> {
        if let Some(rows) = self.cache.lock().expect("cdx cache poisoned").get(&key.key) {
            return Ok(rows.clone());
        }
        let fetch = self.gateway.fetch_cdx(&CdxQuery::new(MatchType::Exact, key.source_url.clone()))?;
        let rows = Arc::new(fetch.records);
        self.cache
            .lock()
            .expect("cdx cache poisoned")
            .insert(key.key.clone(), rows.clone());
        Ok(rows)
    }

    pub fn window_status(&self, key: &SurtKey, epoch: &EpochSpec) -> Result<WindowStatus, CdxError> {
        Ok(capture_status_in_window(&self.rows(key)?, epoch, &self.archive))
    }

    /// Checks every epoch in order, reusing captures the candidate already carries.
    pub fn verify(&self, candidate: &Candidate) -> Result<Verification, CdxError> {
        let mut captures = BTreeMap::new();
        for (i, epoch) in self.epochs.iter().enumerate() {
            if let Some(known) = candidate.known.get(&epoch.name) {
                captures.insert(epoch.name.clone(), known.clone());
                continue;
            }
            match self.window_status(&candidate.key, epoch)? {
                WindowStatus::SuccessCapture(c) => {
                    captures.insert(epoch.name.clone(), c);
                }
                status => return Ok(Verification::Missing { epoch: i, status }),
            }
        }
        Ok(Verification::Tuple(SnapshotTuple {
            original: candidate.key.clone(),
            agency: candidate.agency.clone(),
            depth: candidate.depth,
            captures,
            source: candidate.source,
        }))
    }

    fn require_known(&self, candidate: &Candidate, epochs: &[EpochSpec]) -> Result<(), AssembleError> {
        let missing: Vec<String> = epochs
            .iter()
            .filter(|e| !candidate.known.contains_key(&e.name))
            .map(|e| e.name.clone())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(AssembleError::Precondition {
                key: candidate.key.key.clone(),
                missing,
            })
        }
    }

    /// Extends a pair verified in every later epoch back to the first epoch.
    pub fn extend_backward(&self, candidate: &Candidate) -> Result<BackwardOutcome, AssembleError> {
        self.require_known(candidate, &self.epochs[1..])?;
        Ok(match self.verify(candidate)? {
            Verification::Tuple(t) => BackwardOutcome::Tuple(t),
            Verification::Missing { status: WindowStatus::NonSuccessOnly, .. } => {
                BackwardOutcome::EarlyCaptureNonSuccess
            }
            Verification::Missing { .. } => BackwardOutcome::NoEarlyCapture,
        })
    }

    /// Extends a candidate verified in the first epoch through the later ones.
    pub fn extend_forward(&self, candidate: &Candidate) -> Result<ForwardOutcome, AssembleError> {
        self.require_known(candidate, &self.epochs[..1])?;
        Ok(match self.verify(candidate)? {
            Verification::Tuple(t) => ForwardOutcome::Tuple(t),
            Verification::Missing { epoch, .. } if epoch + 1 == self.epochs.len() => {
                ForwardOutcome::MissingLate
            }
            Verification::Missing { .. } => ForwardOutcome::MissingMiddle,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotaRow {
    pub agency: String,
    pub depth: DepthClass,
    pub found: usize,
    pub target: usize,
}

/// Per (agency, depth) acquisition counters with check-and-increment claims.
#[derive(Debug, Default)]
pub struct QuotaLedger {
    target: usize,
    found: Mutex<BTreeMap<(String, DepthClass), usize>>,
}

impl QuotaLedger {
    pub fn new(target: usize) -> Self {
        QuotaLedger {
            target,
            found: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn found(&self, agency: &str, depth: DepthClass) -> usize {
        self.found
            .lock()
            .expect("quota ledger poisoned")
            .get(&(agency.to_string(), depth))
            .copied()
            .unwrap_or(0)
    }

    pub fn is_full(&self, agency: &str, depth: DepthClass) -> bool {
        self.found(agency, depth) >= self.target
    }

    /// Counts one tuple if the bucket has room.
    pub fn try_claim(&self, agency: &str, depth: DepthClass) -> bool {
        let mut found = self.found.lock().expect("quota ledger poisoned");
        let slot = found.entry((agency.to_string(), depth)).or_default();
        if *slot >= self.target {
            return false;
        }
        *slot += 1;
        true
    }

    pub fn snapshot(&self) -> Vec<QuotaRow> {
        self.found
            .lock()
            .expect("quota ledger poisoned")
            .iter()
            .map(|((agency, depth), found)| QuotaRow {
                agency: agency.clone(),
                depth: *depth,
                found: *found,
                target: self.target,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillCounters {
    pub examined: usize,
    pub verified: usize,
    pub missing: BTreeMap<String, usize>,
    pub skipped_full: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FillReport {
    pub tuples: Vec<SnapshotTuple>,
    pub counters: FillCounters,
    pub errors: Vec<String>,
}

fn missing_label(verifier: &Verifier, epoch: usize, status: &WindowStatus) -> String {
    format!("{}:{}", verifier.epochs[epoch].name, status.label())
}

/// Verifies candidates agency by agency, High before Deep, until each bucket
/// reaches the ledger target. Backend failures on single candidates become
/// counted errors.
pub fn fill_quota(
    candidates: Vec<Candidate>,
    ledger: &QuotaLedger,
    verifier: &Verifier,
) -> FillReport {
    let mut by_agency: BTreeMap<String, Vec<Candidate>> = BTreeMap::new();
    for c in candidates {
        by_agency.entry(c.agency.clone()).or_default().push(c);
    }
    let reports: Vec<FillReport> = by_agency
        .into_par_iter()
        .map(|(agency, list)| {
            let mut report = FillReport::default();
            let mut seen = HashSet::new();
            for depth in [DepthClass::High, DepthClass::Deep] {
                for c in list.iter().filter(|c| c.depth.class == depth) {
                    if ledger.is_full(&agency, depth) {
                        report.counters.skipped_full += 1;
                        continue;
                    }
                    if !seen.insert(c.key.key.clone()) {
                        report.counters.duplicates += 1;
                        continue;
                    }
                    report.counters.examined += 1;
                    match verifier.verify(c) {
                        Ok(Verification::Tuple(t)) => {
                            report.counters.verified += 1;
                            if ledger.try_claim(&agency, depth) {
                                report.tuples.push(t);
                            } else {
                                report.counters.skipped_full += 1;
                            }
                        }
                        Ok(Verification::Missing { epoch, status }) => {
                            *report
                                .counters
                                .missing
                                .entry(missing_label(verifier, epoch, &status))
                                .or_default() += 1;
                        }
                        Err(e) => report.errors.push(format!("{}: {e}", c.key)),
                    }
                }
            }
            report
        })
        .collect();
    let mut out = FillReport::default();
    for r in reports {
        out.tuples.extend(r.tuples);
        out.errors.extend(r.errors);
        out.counters.examined += r.counters.examined;
        out.counters.verified += r.counters.verified;
        out.counters.skipped_full += r.counters.skipped_full;
        out.counters.duplicates += r.counters.duplicates;
        for (k, v) in r.counters.missing {
            *out.counters.missing.entry(k).or_default() += v;
        }
    }
    out
}

/// Backward extension of original-collection pairs (no quota).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BackwardReport {
    pub tuples: Vec<SnapshotTuple>,
    pub pairs: usize,
    pub with_early_capture: usize,
    pub early_non_success: usize,
    pub no_early_capture: usize,
    pub errors: Vec<String>,
}

pub fn extend_pairs(pairs: &[Candidate], verifier: &Verifier) -> BackwardReport {
    let outcomes: Vec<Result<BackwardOutcome, AssembleError>> =
        pairs.par_iter().map(|p| verifier.extend_backward(p)).collect();
    let mut report = BackwardReport {
        pairs: pairs.len(),
        ..Default::default()
    };
    for (pair, outcome) in pairs.iter().zip(outcomes) {
        match outcome {
            Ok(BackwardOutcome::Tuple(t)) => {
                report.with_early_capture += 1;
                report.tuples.push(t);
            }
            Ok(BackwardOutcome::EarlyCaptureNonSuccess) => {
                report.with_early_capture += 1;
                report.early_non_success += 1;
            }
            Ok(BackwardOutcome::NoEarlyCapture) => report.no_early_capture += 1,
            Err(e) => report.errors.push(format!("{}: {e}", pair.key)),
        }
    }
    report
}

/// Keys from a full-domain (or prefix) CDX sweep that have a success capture
/// in the first epoch, with every capture found in the sweep rows attached.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SweepReport {
    pub candidates: Vec<Candidate>,
    pub keys: usize,
    pub rows: usize,
    pub pages: u32,
}

pub fn domain_sweep(
    gateway: &CdxGateway,
    query: &CdxQuery,
    epochs: &[EpochSpec],
    attribution: &Attribution,
) -> Result<SweepReport, CdxError> {
    let fetch = gateway.fetch_cdx(query)?;
    let archive = ArchiveEndpoint::wayback();
    let mut by_key: BTreeMap<&str, Vec<CdxRecord>> = BTreeMap::new();
    for r in &fetch.records {
        by_key.entry(r.urlkey.as_str()).or_default().push(r.clone());
    }
    let mut report = SweepReport {
        keys: by_key.len(),
        rows: fetch.records.len(),
        pages: fetch.pages,
        candidates: Vec::new(),
    };
    for rows in by_key.values() {
        let Ok(mut candidate) = attribution.candidate(&rows[0].original, ProvenanceSource::DomainSweep) else {
            continue;
        };
        candidate.key.key = rows[0].urlkey.clone();
        for epoch in epochs {
            if let WindowStatus::SuccessCapture(c) = capture_status_in_window(rows, epoch, &archive) {
                candidate.known.insert(epoch.name.clone(), c);
            }
        }
        if epochs.first().is_some_and(|e| candidate.known.contains_key(&e.name)) {
            report.candidates.push(candidate);
        }
    }
    Ok(report)
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read url list {path}: {source}")]
    FileUnreadable {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestStats {
    pub lines: usize,
    pub blank: usize,
    pub malformed: usize,
    pub out_of_scope: usize,
    pub duplicates: usize,
    pub traps: BTreeMap<TrapReason, usize>,
    pub emitted: usize,
    pub read_errors: usize,
}

impl IngestStats {
    pub fn trap_count(&self) -> usize {
        self.traps.values().sum()
    }

    /// Trap URLs over in-scope, well-formed URLs.
    pub fn trap_ratio(&self) -> Option<f64> {
        let considered = self.lines - self.blank - self.malformed - self.out_of_scope;
        (considered > 0).then(|| self.trap_count() as f64 / considered as f64)
    }
}

/// Streaming external URL list: one URL per line, filtered lazily.
pub struct ExternalListIngest<R> {
    lines: std::io::Lines<R>,
    scope: ScopeRule,
    trap: TrapConfig,
    attribution: Attribution,
    seen: HashSet<String>,
    siblings: HashMap<String, usize>,
    stats: IngestStats,
}

impl<R: BufRead> ExternalListIngest<R> {
    pub fn new(reader: R, scope: ScopeRule, trap: TrapConfig, attribution: Attribution) -> Self {
        ExternalListIngest {
            lines: reader.lines(),
            scope,
            trap,
            attribution,
            seen: HashSet::new(),
            siblings: HashMap::new(),
            stats: IngestStats::default(),
        }
    }

    pub fn stats(&self) -> &IngestStats {
        &self.stats
    }
}

impl<R: BufRead> Iterator for ExternalListIngest<R> {
    type Item = Candidate;

    fn next(&mut self) -> Option<Candidate> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(_) => {
                    self.stats.read_errors += 1;
                    continue;
                }
            };
            self.stats.lines += 1;
            let raw = line.trim();
            if raw.is_empty() || raw.starts_with('#') {
                self.stats.blank += 1;
                continue;
            }
            let Ok(url) = parse_http_url(raw) else {
                self.stats.malformed += 1;
                continue;
            };
            if !url.host_str().is_some_and(|h| self.scope.matches_host(h)) {
                self.stats.out_of_scope += 1;
                continue;
            }
            let key = self.attribution.canon.surt_of(&url);
            let dir = key.rsplit_once('/').map_or(key.as_str(), |(d, _)| d).to_string();
            let siblings = self.siblings.entry(dir).or_default();
            let reason = self.trap.detect(raw, *siblings).map(|v| v.reason).unwrap_or(TrapReason::None);
            *siblings += 1;
            if reason != TrapReason::None {
                *self.stats.traps.entry(reason).or_default() += 1;
                continue;
            }
            if !self.seen.insert(key) {
                self.stats.duplicates += 1;
                continue;
            }
            match self.attribution.candidate(raw, ProvenanceSource::ExternalList) {
                Ok(c) => {
                    self.stats.emitted += 1;
                    return Some(c);
                }
                Err(_) => self.stats.malformed += 1,
            }
        }
    }
}

pub fn ingest_external_list(
    path: &Path,
    scope: ScopeRule,
    trap: TrapConfig,
    attribution: Attribution,
) -> Result<ExternalListIngest<std::io::BufReader<std::fs::File>>, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::FileUnreadable {
        path: path.display().to_string(),
        source,
    })?;
    Ok(ExternalListIngest::new(std::io::BufReader::new(file), scope, trap, attribution))
}

fn tuple_order(t: &SnapshotTuple) -> (String, DepthClass, String) {
    (t.agency.clone(), t.depth.class, t.original.key.clone())
}

/// Unions tuple lists by SURT key, keeping the highest-precedence source,
/// sorted by (agency, depth, key).
pub fn merge_and_dedupe(sources: Vec<Vec<SnapshotTuple>>) -> Vec<SnapshotTuple> {
    let mut merged: BTreeMap<String, SnapshotTuple> = BTreeMap::new();
    for tuple in sources.into_iter().flatten() {
        match merged.get(&tuple.original.key) {
            Some(existing) if !prefer(&tuple, existing) => {}
            _ => {
                merged.insert(tuple.original.key.clone(), tuple);
            }
        }
    }
    let mut out: Vec<SnapshotTuple> = merged.into_values().collect();
    out.sort_by_key(tuple_order);
    out
}

fn prefer(a: &SnapshotTuple, b: &SnapshotTuple) -> bool {
    if a.source != b.source {
        return a.source < b.source;
    }
    let key = |t: &SnapshotTuple| serde_json::to_string(t).unwrap_or_default();
    key(a) < key(b)
}

/// Serialized capture reference in dataset rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureRow {
    pub archive: String,
    pub datetime: Timestamp,
    pub uri_m: String,
}

impl CaptureRow {
    pub fn from_capture(c: &CaptureRef) -> Self {
        CaptureRow {
            archive: c.archive_id.clone(),
            datetime: c.timestamp(),
            uri_m: c.uri_m.clone(),
        }
    }

    pub fn to_capture(&self, original: &SurtKey) -> CaptureRef {
        CaptureRef {
            original: original.clone(),
            archive_id: self.archive.clone(),
            datetime: self.datetime.datetime(),
            status: Some(200),
            uri_m: self.uri_m.clone(),
        }
    }
}

/// One `triplets.jsonl` row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripletRow {
    pub surt: String,
    pub url: String,
    pub agency: String,
    pub depth: DepthClass,
    pub captures: BTreeMap<String, CaptureRow>,
    pub source: ProvenanceSource,
}

impl From<&SnapshotTuple> for TripletRow {
    fn from(t: &SnapshotTuple) -> Self {
        TripletRow {
            surt: t.original.key.clone(),
            url: t.original.source_url.clone(),
            agency: t.agency.clone(),
            depth: t.depth.class,
            captures: t
                .captures
                .iter()
                .map(|(k, c)| (k.clone(), CaptureRow::from_capture(c)))
                .collect(),
            source: t.source,
        }
    }
}

impl TripletRow {
    pub fn into_tuple(self) -> Result<SnapshotTuple, UrlError> {
        let parsed = parse_http_url(&self.url)?;
        let original = SurtKey {
            key: self.surt,
            source_url: self.url,
        };
        let segment_count = crate::url_keys::segment_count(&parsed);
        Ok(SnapshotTuple {
            captures: self
                .captures
                .iter()
                .map(|(k, c)| (k.clone(), c.to_capture(&original)))
                .collect(),
            original,
            agency: self.agency,
            depth: PathDepthClass {
                class: self.depth,
                segment_count,
            },
            source: self.source,
        })
    }
}

/// One `pairs.jsonl` row: an original-collection URL with later-epoch captures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRow {
    pub url: String,
    pub captures: BTreeMap<String, CaptureRow>,
}

impl PairRow {
    pub fn into_candidate(self, attribution: &Attribution) -> Result<Candidate, UrlError> {
        let mut c = attribution.candidate(&self.url, ProvenanceSource::OriginalCollection)?;
        c.known = self
            .captures
            .iter()
            .map(|(k, row)| (k.clone(), row.to_capture(&c.key)))
            .collect();
        Ok(c)
    }
}

/// Agency × depth pivot as CSV (`agency,high,deep`).
pub fn summary_csv(tuples: &[SnapshotTuple]) -> String {
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for t in tuples {
        let e = counts.entry(t.agency.as_str()).or_default();
        match t.depth.class {
            DepthClass::High => e.0 += 1,
            DepthClass::Deep => e.1 += 1,
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["agency", "high", "deep"]).expect("in-memory csv");
    for (agency, (high, deep)) in counts {
        w.write_record([agency, &high.to_string(), &deep.to_string()])
            .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

/// Most recent capture datetime among a tuple's captures.
pub fn latest_capture(t: &SnapshotTuple) -> Option<DateTime<Utc>> {
    t.captures.values().map(|c| c.datetime).max()
}
