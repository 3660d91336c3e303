//! Archive interfaces shared by the fixture store and the live HTTP client.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::cdx::CdxQuery;
use crate::memento::{ArchiveEndpoint, CaptureRef};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("backend signalled throttling")]
    RateLimited,
    #[error("protocol error: {0}")]
    Protocol(String),
}

pub trait CdxBackend: Send + Sync {
    /// Page-count preflight for a query.
    fn num_pages(&self, query: &CdxQuery) -> Result<u32, BackendError>;
    /// Raw CDX text for one page.
    fn fetch_page(&self, query: &CdxQuery, page: u32) -> Result<String, BackendError>;
}

pub trait TimeMapBackend: Send + Sync {
    /// Link-format TimeMap body for `url` at `archive`.
    fn timemap(&self, archive: &ArchiveEndpoint, url: &str) -> Result<String, BackendError>;
}

/// A replayed capture and its archived body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replay {
    pub capture: CaptureRef,
    pub body: String,
}

pub trait ReplayBackend: Send + Sync {
    /// The capture nearest `at` (earlier wins ties), whatever its status.
    fn replay(&self, url: &str, at: DateTime<Utc>) -> Result<Option<Replay>, BackendError>;
}

/// Capture-source metadata as served by the provenance interface.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProvenanceInfo {
    pub uri_m: String,
    #[serde(default)]
    pub collections: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner: Option<String>,
}

pub trait ProvenanceBackend: Send + Sync {
    fn provenance(&self, uri_m: &str) -> Result<Option<ProvenanceInfo>, BackendError>;
}

/// Everything the pipeline needs from an archive.
pub trait ArchiveBackend: CdxBackend + TimeMapBackend + ReplayBackend + ProvenanceBackend {}

impl<T> ArchiveBackend for T where T: CdxBackend + TimeMapBackend + ReplayBackend + ProvenanceBackend {}
