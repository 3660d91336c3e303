//! Append-only log of manual accept/reject decisions.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::assembler::Verifier;
use crate::backend::{BackendError, ReplayBackend};
use crate::cdx::{CdxError, CdxGateway, CdxQuery, CdxStatus, WindowStatus};
use crate::crawler::extract_links;
use crate::epoch::{EpochSpec, Timestamp};
use crate::url_keys::{Canonicalizer, ScopeRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecisionAction {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurationDecision {
    pub id: u64,
    pub surt: String,
    pub url: String,
    pub action: DecisionAction,
    pub actor: String,
    pub at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum DecisionError {
    #[error("{surt} already has a live {action:?} decision")]
    Duplicate { surt: String, action: DecisionAction },
    #[error("decision log {path}: {message}")]
    Io { path: String, message: String },
    #[error("decision log {path} line {line}: {message}")]
    Corrupt {
        path: String,
        line: usize,
        message: String,
    },
}

/// Decisions in arrival order; later decisions for a key supersede earlier ones.
#[derive(Debug, Default)]
pub struct DecisionLog {
    path: Option<PathBuf>,
    entries: Vec<CurationDecision>,
}

impl DecisionLog {
    pub fn in_memory() -> Self {
        DecisionLog::default()
    }

    /// Opens (or creates) a JSON-lines log and replays it.
    pub fn open(path: &Path) -> Result<Self, DecisionError> {
        let display = path.display().to_string();
        let io = |e: std::io::Error| DecisionError::Io {
            path: display.clone(),
            message: e.to_string(),
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(io(e)),
        };
        let entries = parse_log(&text).map_err(|(line, message)| DecisionError::Corrupt {
            path: display.clone(),
            line,
            message,
        })?;
        Ok(DecisionLog {
            path: Some(path.to_path_buf()),
            entries,
        })
    }

    pub fn entries(&self) -> &[CurationDecision] {
        &self.entries
    }

    pub fn history(&self, surt: &str) -> Vec<&CurationDecision> {
        self.entries.iter().filter(|d| d.surt == surt).collect()
    }

    pub fn live(&self) -> BTreeMap<&str, &CurationDecision> {
        live_set(&self.entries)
    }

    pub fn record(
        &mut self,
        surt: &str,
        url: &str,
        action: DecisionAction,
        actor: &str,
        at: DateTime<Utc>,
        note: Option<String>,
    ) -> Result<CurationDecision, DecisionError> {
        if self.live().get(surt).is_some_and(|d| d.action == action) {
            return Err(DecisionError::Duplicate {
                surt: surt.to_string(),
                action,
            });
        }
        let decision = CurationDecision {
            id: self.entries.last().map_or(1, |d| d.id + 1),
            surt: surt.to_string(),
            url: url.to_string(),
            action,
            actor: actor.to_string(),
            at,
            note,
        };
        if let Some(path) = &self.path {
            let io = |e: std::io::Error| DecisionError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            };
            let mut file = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(io)?;
            let line = serde_json::to_string(&decision).expect("decisions serialize");
            writeln!(file, "{line}").map_err(io)?;
        }
        self.entries.push(decision.clone());
        Ok(decision)
    }
}

/// Parses a JSON-lines log; errors carry the 1-based line number.
pub fn parse_log(text: &str) -> Result<Vec<CurationDecision>, (usize, String)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| (i + 1, e.to_string())))
        .collect()
}

/// Last decision per key.
pub fn live_set(entries: &[CurationDecision]) -> BTreeMap<&str, &CurationDecision> {
    let mut live = BTreeMap::new();
    for d in entries {
        live.insert(d.surt.as_str(), d);
    }
    live
}

/// One key in a prefix listing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixRow {
    pub surt: String,
    pub url: String,
    pub first_capture: Timestamp,
    pub last_capture: Timestamp,
    pub captures: usize,
    pub had_non_success: bool,
    /// Captured before the first epoch and after the last one.
    pub candidate: bool,
}

/// Earliest and latest capture of every key under `prefix`, sorted by key.
pub fn prefix_listing(
    gateway: &CdxGateway,
    prefix: &str,
    epochs: &[EpochSpec],
) -> Result<Vec<PrefixRow>, CdxError> {
    let fetch = gateway.fetch_cdx(&CdxQuery::prefix(prefix))?;
    let mut rows: BTreeMap<String, PrefixRow> = BTreeMap::new();
    for r in fetch.records {
        let non_success = r.status != CdxStatus::Code(200);
        let row = rows.entry(r.urlkey.clone()).or_insert_with(|| PrefixRow {
            surt: r.urlkey.clone(),
            url: r.original.clone(),
            first_capture: r.timestamp,
            last_capture: r.timestamp,
            captures: 0,
            had_non_success: false,
            candidate: false,
        });
        row.captures += 1;
        row.had_non_success |= non_success;
        if r.timestamp < row.first_capture {
            row.first_capture = r.timestamp;
            row.url = r.original.clone();
        }
        row.last_capture = row.last_capture.max(r.timestamp);
    }
    let (first, last) = (epochs.first(), epochs.last());
    Ok(rows
        .into_values()
        .map(|mut row| {
            row.candidate = match (first, last) {
                (Some(f), Some(l)) => {
                    row.first_capture.datetime() < f.target && row.last_capture.datetime() > l.window.end
                }
                _ => false,
            };
            row
        })
        .collect())
}

/// An outlink of a replayed capture with its status in every epoch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkAvailability {
    pub surt: String,
    pub url: String,
    /// Epoch name → `success`, `non_success` or `none`.
    pub epochs: BTreeMap<String, String>,
    /// Success capture in every epoch.
    pub eligible: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum LinksError {
    #[error("unknown epoch {0}")]
    UnknownEpoch(String),
    #[error("no success capture of {url} in {epoch}")]
    NoCapture { url: String, epoch: String },
    #[error(transparent)]
    Cdx(#[from] CdxError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Depth-1 view: in-scope outlinks of `url`'s capture in `epoch`, each
/// annotated with its capture status in every configured epoch.
pub fn replay_links(
    replay: &dyn ReplayBackend,
    verifier: &Verifier,
    scope: &ScopeRule,
    url: &str,
    epoch: &str,
) -> Result<Vec<LinkAvailability>, LinksError> {
    let canon = Canonicalizer::default();
    let spec = verifier
        .epochs()
        .iter()
        .find(|e| e.name == epoch)
        .ok_or_else(|| LinksError::UnknownEpoch(epoch.to_string()))?;
    let no_capture = || LinksError::NoCapture {
        url: url.to_string(),
        epoch: epoch.to_string(),
    };
    let key = canon.canonicalize(url).map_err(|_| no_capture())?;
    let WindowStatus::SuccessCapture(capture) = verifier.window_status(&key, spec)? else {
        return Err(no_capture());
    };
    let body = replay
        .replay(&key.source_url, capture.datetime)?
        .ok_or_else(no_capture)?
        .body;
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for link in extract_links(&body, &key.source_url) {
        let Ok(parsed) = crate::url_keys::parse_http_url(&link) else {
            continue;
        };
        if !parsed.host_str().is_some_and(|h| scope.matches_host(h)) {
            continue;
        }
        let lk = crate::url_keys::SurtKey {
            key: canon.surt_of(&parsed),
            source_url: link.clone(),
        };
        if lk.key == key.key || !seen.insert(lk.key.clone()) {
            continue;
        }
        let mut epochs = BTreeMap::new();
        let mut eligible = true;
        for e in verifier.epochs() {
            let status = verifier.window_status(&lk, e)?;
            eligible &= matches!(status, WindowStatus::SuccessCapture(_));
            epochs.insert(e.name.clone(), status.label().to_string());
        }
        out.push(LinkAvailability {
            surt: lk.key,
            url: link,
            epochs,
            eligible,
        });
    }
    Ok(out)
}
