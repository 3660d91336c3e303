//! Deterministic on-disk archive: `manifest.json` plus HTML bodies, served
//! through the same CDX, TimeMap, replay and provenance interfaces as a
//! live archive.

pub mod scenarios;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::{
    BackendError, CdxBackend, ProvenanceBackend, ProvenanceInfo, Replay, ReplayBackend,
    TimeMapBackend,
};
use crate::cdx::{CdxQuery, CdxRecord, CdxStatus};
use crate::epoch::{nearest_to, Timestamp};
use crate::memento::{render_timemap, ArchiveEndpoint, CaptureRef, WAYBACK_ID};
use crate::rate::Clock;
use crate::url_keys::{Canonicalizer, UrlError};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DEFAULT_PAGE_SIZE: usize = 100;

fn default_page_size() -> usize {
    DEFAULT_PAGE_SIZE
}

fn default_archive() -> String {
    WAYBACK_ID.to_string()
}

fn is_default_archive(a: &String) -> bool {
    a == WAYBACK_ID
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    /// Rows per CDX page.
    #[serde(default = "default_page_size")]
    pub cdx_page_size: usize,
    pub pages: Vec<ManifestPage>,
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest {
            cdx_page_size: DEFAULT_PAGE_SIZE,
            pages: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestPage {
    pub url: String,
    pub captures: Vec<ManifestCapture>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestCapture {
    pub ts: Timestamp,
    pub status: CdxStatus,
    /// Body path relative to the fixture root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub collections: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner: Option<String>,
    #[serde(default = "default_archive", skip_serializing_if = "is_default_archive")]
    pub archive: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mimetype: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
}

impl ManifestCapture {
    pub fn new(ts: Timestamp, status: CdxStatus) -> Self {
        ManifestCapture {
            ts,
            status,
            body: None,
            collections: Vec::new(),
            partner: None,
            archive: default_archive(),
            mimetype: None,
            length: None,
            sha256: None,
        }
    }

    pub fn body(mut self, path: impl Into<String>) -> Self {
        self.body = Some(path.into());
        self
    }

    pub fn collections<I, S>(mut self, collections: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.collections = collections.into_iter().map(Into::into).collect();
        self
    }

    pub fn archive(mut self, id: impl Into<String>) -> Self {
        self.archive = id.into();
        self
    }

    pub fn partner(mut self, partner: impl Into<String>) -> Self {
        self.partner = Some(partner.into());
        self
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("no manifest.json under {0}")]
    ManifestMissing(PathBuf),
    #[error("manifest {path}: {source}")]
    ManifestInvalid {
        path: String,
        source: serde_json::Error,
    },
    #[error("body missing for {surt} at {ts}: {path}")]
    BodyMissing {
        surt: String,
        ts: Timestamp,
        path: String,
    },
    #[error("body {path} for {surt} at {ts} does not match its recorded length/checksum")]
    ChecksumMismatch {
        surt: String,
        ts: Timestamp,
        path: String,
    },
    #[error("manifest url: {0}")]
    Url(#[from] UrlError),
    #[error("cdx_page_size must be positive")]
    PageSize,
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
struct IndexedCapture {
    original: String,
    ts: Timestamp,
    status: CdxStatus,
    archive: String,
    body: Option<Arc<str>>,
    collections: Vec<String>,
    partner: Option<String>,
    mimetype: String,
    digest: String,
    length: u64,
}

/// Immutable, loaded fixture archive.
#[derive(Debug, Clone)]
pub struct FixtureStore {
    root: Option<PathBuf>,
    page_size: usize,
    archives: BTreeMap<String, ArchiveEndpoint>,
    index: BTreeMap<String, Vec<IndexedCapture>>,
    by_uri_m: HashMap<String, (String, usize)>,
    canon: Canonicalizer,
}

/// Archive request served by [`FixtureStore::serve`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArchiveRequest {
    CdxPageCount(CdxQuery),
    CdxPage(CdxQuery, u32),
    TimeMap { archive: ArchiveEndpoint, url: String },
    Replay { url: String, at: DateTime<Utc> },
    Provenance { uri_m: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArchiveResponse {
    PageCount(u32),
    Text(String),
    Replay(Option<Replay>),
    Provenance(Option<ProvenanceInfo>),
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02X}"))
        .collect()
}

impl FixtureStore {
    /// Loads `root/manifest.json` and every referenced body.
    pub fn load(root: impl AsRef<Path>) -> Result<Self, FixtureError> {
        let root = root.as_ref();
        let manifest_path = root.join(MANIFEST_FILE);
        if !manifest_path.is_file() {
            return Err(FixtureError::ManifestMissing(root.to_path_buf()));
        }
        let text = std::fs::read_to_string(&manifest_path).map_err(|source| FixtureError::Io {
            path: manifest_path.display().to_string(),
            source,
        })?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|source| FixtureError::ManifestInvalid {
                path: manifest_path.display().to_string(),
                source,
            })?;
        let mut bodies = BTreeMap::new();
        for page in &manifest.pages {
            for cap in &page.captures {
                if let Some(rel) = &cap.body {
                    if bodies.contains_key(rel) {
                        continue;
                    }
                    if let Ok(text) = std::fs::read_to_string(root.join(rel)) {
                        bodies.insert(rel.clone(), text);
                    }
                }
            }
        }
        let mut store = FixtureStore::from_parts(manifest, bodies)?;
        store.root = Some(root.to_path_buf());
        Ok(store)
    }

    /// Builds a store from an in-memory manifest and body table.
    pub fn from_parts(
        manifest: Manifest,
        bodies: BTreeMap<String, String>,
    ) -> Result<Self, FixtureError> {
        if manifest.cdx_page_size == 0 {
            return Err(FixtureError::PageSize);
        }
        let canon = Canonicalizer::default();
        let shared: BTreeMap<&str, Arc<str>> = bodies
            .iter()
            .map(|(k, v)| (k.as_str(), Arc::from(v.as_str())))
            .collect();
        let mut index: BTreeMap<String, Vec<IndexedCapture>> = BTreeMap::new();
        for page in &manifest.pages {
            let key = canon.canonicalize(&page.url)?.key;
            for cap in &page.captures {
                let body = match &cap.body {
                    None => None,
                    Some(rel) => {
                        let body = shared.get(rel.as_str()).cloned().ok_or_else(|| {
                            FixtureError::BodyMissing {
                                surt: key.clone(),
                                ts: cap.ts,
                                path: rel.clone(),
                            }
                        })?;
                        let len_ok = cap.length.map_or(true, |l| l == body.len() as u64);
                        let sha_ok = cap
                            .sha256
                            .as_ref()
                            .map_or(true, |s| s.eq_ignore_ascii_case(&sha256_hex(body.as_bytes())));
                        if !len_ok || !sha_ok {
                            return Err(FixtureError::ChecksumMismatch {
                                surt: key.clone(),
                                ts: cap.ts,
                                path: rel.clone(),
                            });
                        }
                        Some(body)
                    }
                };
                let bytes = body.as_deref().unwrap_or("").as_bytes();
                index.entry(key.clone()).or_default().push(IndexedCapture {
                    original: page.url.clone(),
                    ts: cap.ts,
                    status: cap.status,
                    archive: cap.archive.clone(),
                    body: body.clone(),
                    collections: cap.collections.clone(),
                    partner: cap.partner.clone(),
                    mimetype: cap.mimetype.clone().unwrap_or_else(|| "text/html".into()),
                    digest: sha256_hex(bytes)[..32].to_string(),
                    length: cap.length.unwrap_or(bytes.len() as u64),
                });
            }
        }
        let mut archives: BTreeMap<String, ArchiveEndpoint> = crate::memento::default_registry()
            .into_iter()
            .map(|a| (a.id.clone(), a))
            .collect();
        let mut by_uri_m = HashMap::new();
        for (key, caps) in index.iter_mut() {
            caps.sort_by(|a, b| (a.ts, &a.archive, &a.original).cmp(&(b.ts, &b.archive, &b.original)));
            for (i, cap) in caps.iter().enumerate() {
                let endpoint = archives
                    .entry(cap.archive.clone())
                    .or_insert_with(|| ArchiveEndpoint::new(cap.archive.clone(), ""))
                    .clone();
                by_uri_m.insert(endpoint.replay_url(&cap.ts, &cap.original), (key.clone(), i));
            }
        }
        Ok(FixtureStore {
            root: None,
            page_size: manifest.cdx_page_size,
            archives,
            index,
            by_uri_m,
            canon,
        })
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    /// Number of distinct SURT keys.
    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }

    pub fn page_size(&self) -> usize {
        self.page_size
    }

    pub fn archive(&self, id: &str) -> Option<&ArchiveEndpoint> {
        self.archives.get(id)
    }

    pub fn archives(&self) -> impl Iterator<Item = &ArchiveEndpoint> {
        self.archives.values()
    }

    /// Every CDX row the store would serve for the wayback archive, unpaginated.
    pub fn cdx_dump(&self) -> Vec<CdxRecord> {
        self.index
            .iter()
            .flat_map(|(key, caps)| {
                caps.iter()
                    .filter(|c| c.archive == WAYBACK_ID)
                    .map(move |c| to_record(key, c))
            })
            .collect()
    }

    fn matching_rows(&self, query: &CdxQuery) -> Vec<CdxRecord> {
        let Ok(matcher) = query.key_matcher(&self.canon) else {
            return Vec::new();
        };
        let keys: Box<dyn Iterator<Item = (&String, &Vec<IndexedCapture>)>> =
            match query.match_type {
                crate::cdx::MatchType::Exact => Box::new(
                    self.index
                        .get_key_value(matcher.pattern())
                        .into_iter(),
                ),
                _ => Box::new(self.index.iter().filter(|(k, _)| matcher.matches(k))),
            };
        keys.flat_map(|(key, caps)| {
            caps.iter()
                .filter(|c| c.archive == WAYBACK_ID && query.in_time(&c.ts))
                .map(move |c| to_record(key, c))
        })
        .collect()
    }

    fn captures_for(&self, url: &str) -> Option<(&String, &Vec<IndexedCapture>)> {
        let key = self.canon.canonicalize(url).ok()?.key;
        self.index.get_key_value(&key)
    }

    fn capture_ref(&self, key: &str, cap: &IndexedCapture) -> CaptureRef {
        let endpoint = &self.archives[&cap.archive];
        CaptureRef {
            original: crate::url_keys::SurtKey {
                key: key.to_string(),
                source_url: cap.original.clone(),
            },
            archive_id: cap.archive.clone(),
            datetime: cap.ts.datetime(),
            status: cap.status.code(),
            uri_m: endpoint.replay_url(&cap.ts, &cap.original),
        }
    }

    /// Answers one interface request from the index. Unknown URLs and
    /// captures produce empty, protocol-correct responses.
    pub fn serve(&self, request: &ArchiveRequest) -> ArchiveResponse {
        match request {
            ArchiveRequest::CdxPageCount(query) => {
                let rows = self.matching_rows(query).len();
                ArchiveResponse::PageCount(rows.div_ceil(self.page_size) as u32)
            }
            ArchiveRequest::CdxPage(query, page) => {
                let rows = self.matching_rows(query);
                let start = (*page as usize).saturating_mul(self.page_size);
                let text: String = rows
                    .iter()
                    .skip(start)
                    .take(self.page_size)
                    .map(|r| format!("{r}\n"))
                    .collect();
                ArchiveResponse::Text(text)
            }
            ArchiveRequest::TimeMap { archive, url } => {
                let captures: Vec<CaptureRef> = self
                    .captures_for(url)
                    .map(|(key, caps)| {
                        caps.iter()
                            .filter(|c| c.archive == archive.id)
                            .map(|c| CaptureRef {
                                uri_m: archive.replay_url(&c.ts, &c.original),
                                ..self.capture_ref(key, c)
                            })
                            .collect()
                    })
                    .unwrap_or_default();
                ArchiveResponse::Text(render_timemap(url, &archive.timemap_url(url), &captures))
            }
            ArchiveRequest::Replay { url, at } => {
                let replay = self.captures_for(url).and_then(|(key, caps)| {
                    let candidates = caps.iter().filter(|c| c.archive == WAYBACK_ID);
                    nearest_to(candidates, *at, |c| c.ts.datetime()).map(|c| Replay {
                        capture: self.capture_ref(key, c),
                        body: c.body.as_deref().unwrap_or("").to_string(),
                    })
                });
                ArchiveResponse::Replay(replay)
            }
            ArchiveRequest::Provenance { uri_m } => {
                let info = self.by_uri_m.get(uri_m).map(|(key, i)| {
                    let cap = &self.index[key][*i];
                    ProvenanceInfo {
                        uri_m: uri_m.clone(),
                        collections: cap.collections.clone(),
                        partner: cap.partner.clone(),
                    }
                });
                ArchiveResponse::Provenance(info)
            }
        }
    }
}

fn to_record(key: &str, c: &IndexedCapture) -> CdxRecord {
    CdxRecord {
        urlkey: key.to_string(),
        timestamp: c.ts,
        original: c.original.clone(),
        mimetype: c.mimetype.clone(),
        status: c.status,
        digest: c.digest.clone(),
        length: c.length,
    }
}

fn unexpected(resp: ArchiveResponse) -> BackendError {
    BackendError::Protocol(format!("unexpected fixture response {resp:?}"))
}

impl CdxBackend for FixtureStore {
    fn num_pages(&self, query: &CdxQuery) -> Result<u32, BackendError> {
        match self.serve(&ArchiveRequest::CdxPageCount(query.clone())) {
            ArchiveResponse::PageCount(n) => Ok(n),
            other => Err(unexpected(other)),
        }
    }

    fn fetch_page(&self, query: &CdxQuery, page: u32) -> Result<String, BackendError> {
        match self.serve(&ArchiveRequest::CdxPage(query.clone(), page)) {
            ArchiveResponse::Text(t) => Ok(t),
            other => Err(unexpected(other)),
        }
    }
}

impl TimeMapBackend for FixtureStore {
    fn timemap(&self, archive: &ArchiveEndpoint, url: &str) -> Result<String, BackendError> {
        match self.serve(&ArchiveRequest::TimeMap {
            archive: archive.clone(),
            url: url.to_string(),
        }) {
            ArchiveResponse::Text(t) => Ok(t),
            other => Err(unexpected(other)),
        }
    }
}

impl ReplayBackend for FixtureStore {
    fn replay(&self, url: &str, at: DateTime<Utc>) -> Result<Option<Replay>, BackendError> {
        match self.serve(&ArchiveRequest::Replay {
            url: url.to_string(),
            at,
        }) {
            ArchiveResponse::Replay(r) => Ok(r),
            other => Err(unexpected(other)),
        }
    }
}

impl ProvenanceBackend for FixtureStore {
    fn provenance(&self, uri_m: &str) -> Result<Option<ProvenanceInfo>, BackendError> {
        match self.serve(&ArchiveRequest::Provenance {
            uri_m: uri_m.to_string(),
        }) {
            ArchiveResponse::Provenance(p) => Ok(p),
            other => Err(unexpected(other)),
        }
    }
}

/// Which interface a logged request hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RequestKind {
    CdxPageCount,
    CdxPage,
    TimeMap,
    Replay,
    Provenance,
}

/// Backend decorator that timestamps every request against a clock.
pub struct ObservedBackend<B> {
    inner: B,
    clock: Arc<dyn Clock>,
    log: Mutex<Vec<(RequestKind, Duration)>>,
}

impl<B> ObservedBackend<B> {
    pub fn new(inner: B, clock: Arc<dyn Clock>) -> Self {
        ObservedBackend {
            inner,
            clock,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    fn record(&self, kind: RequestKind) {
        self.log
            .lock()
            .expect("request log poisoned")
            .push((kind, self.clock.now()));
    }

    pub fn log(&self) -> Vec<(RequestKind, Duration)> {
        self.log.lock().expect("request log poisoned").clone()
    }

    /// Gaps between consecutive requests whose kind satisfies `filter`.
    pub fn gaps(&self, filter: impl Fn(RequestKind) -> bool) -> Vec<Duration> {
        let stamps: Vec<Duration> = self
            .log()
            .into_iter()
            .filter(|(k, _)| filter(*k))
            .map(|(_, t)| t)
            .collect();
        stamps.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

impl<B: CdxBackend> CdxBackend for ObservedBackend<B> {
    fn num_pages(&self, query: &CdxQuery) -> Result<u32, BackendError> {
        self.record(RequestKind::CdxPageCount);
        self.inner.num_pages(query)
    }

    fn fetch_page(&self, query: &CdxQuery, page: u32) -> Result<String, BackendError> {
        self.record(RequestKind::CdxPage);
        self.inner.fetch_page(query, page)
    }
}

impl<B: TimeMapBackend> TimeMapBackend for ObservedBackend<B> {
    fn timemap(&self, archive: &ArchiveEndpoint, url: &str) -> Result<String, BackendError> {
        self.record(RequestKind::TimeMap);
        self.inner.timemap(archive, url)
    }
}

impl<B: ReplayBackend> ReplayBackend for ObservedBackend<B> {
    fn replay(&self, url: &str, at: DateTime<Utc>) -> Result<Option<Replay>, BackendError> {
        self.record(RequestKind::Replay);
        self.inner.replay(url, at)
    }
}

impl<B: ProvenanceBackend> ProvenanceBackend for ObservedBackend<B> {
    fn provenance(&self, uri_m: &str) -> Result<Option<ProvenanceInfo>, BackendError> {
        self.record(RequestKind::Provenance);
        self.inner.provenance(uri_m)
    }
}

/// Writes a manifest and its bodies under `root`.
pub fn write_fixture(
    root: &Path,
    manifest: &Manifest,
    bodies: &BTreeMap<String, String>,
) -> Result<(), FixtureError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| FixtureError::Io { path, source }
    };
    std::fs::create_dir_all(root).map_err(io(root))?;
    for (rel, body) in bodies {
        let path = root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io(parent))?;
        }
        std::fs::write(&path, body).map_err(io(&path))?;
    }
    let path = root.join(MANIFEST_FILE);
    std::fs::write(&path, render_manifest(manifest)).map_err(io(&path))?;
    Ok(())
}

/// Manifest JSON with one page per line, so fixture diffs stay readable.
pub fn render_manifest(manifest: &Manifest) -> String {
    let mut out = format!("{{\"cdx_page_size\": {},\n \"pages\": [\n", manifest.cdx_page_size);
    for (i, page) in manifest.pages.iter().enumerate() {
        out.push_str("  ");
        out.push_str(&serde_json::to_string(page).expect("manifest pages serialize"));
        if i + 1 < manifest.pages.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str(" ]}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdx::ts;
    use crate::epoch::ymd;

    fn store() -> FixtureStore {
        let manifest = Manifest {
            cdx_page_size: 2,
            pages: vec![
                ManifestPage {
                    url: "http://www.epa.gov/acidrain".into(),
                    captures: vec![
                        ManifestCapture::new(ts(2008, 1, 1, 12, 0, 0), CdxStatus::Code(200))
                            .body("pages/a2008.html")
                            .collections(["alexa crawls"]),
                        ManifestCapture::new(ts(2016, 7, 1, 0, 0, 0), CdxStatus::Code(200))
                            .body("pages/a2016.html"),
                        ManifestCapture::new(ts(2008, 5, 1, 0, 0, 0), CdxStatus::Code(200))
                            .archive("wayback.archive-it.org"),
                    ],
                },
                ManifestPage {
                    url: "http://epa.gov/other".into(),
                    captures: vec![ManifestCapture::new(
                        ts(2009, 1, 1, 0, 0, 0),
                        CdxStatus::Revisit,
                    )],
                },
            ],
        };
        let bodies = BTreeMap::from([
            ("pages/a2008.html".to_string(), "<p>old</p>".to_string()),
            ("pages/a2016.html".to_string(), "<p>new</p>".to_string()),
        ]);
        FixtureStore::from_parts(manifest, bodies).unwrap()
    }

    #[test]
    fn exact_cdx_rows() {
        let s = store();
        let q = CdxQuery::exact("epa.gov/acidrain");
        assert_eq!(s.num_pages(&q).unwrap(), 1);
        let text = s.fetch_page(&q, 0).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("gov,epa)/acidrain 20080101120000 http://www.epa.gov/acidrain text/html 200 "));
        let q2008 = q.clone().years(2008, 2008);
        assert_eq!(s.fetch_page(&q2008, 0).unwrap().lines().count(), 1);
    }

    #[test]
    fn unindexed_timemap_is_empty_document() {
        let s = store();
        let body = s.timemap(&ArchiveEndpoint::wayback(), "http://nowhere.gov/").unwrap();
        let parsed = crate::memento::parse_timemap(&body, WAYBACK_ID).unwrap();
        assert!(parsed.captures.is_empty());
        assert_eq!(parsed.original.as_deref(), Some("http://nowhere.gov/"));
    }

    #[test]
    fn timemap_is_per_archive() {
        let s = store();
        let ait = ArchiveEndpoint::new("wayback.archive-it.org", "https://wayback.archive-it.org/all/timemap/link/{url}");
        let body = s.timemap(&ait, "http://www.epa.gov/acidrain").unwrap();
        let parsed = crate::memento::parse_timemap(&body, &ait.id).unwrap();
        assert_eq!(parsed.captures.len(), 1);
    }

    // Oracle: brute-force nearest over the manifest captures.
    #[test]
    fn replay_between_captures_returns_nearest() {
        let s = store();
        let at = ymd(2012, 1, 1);
        let oracle = [ymd(2008, 1, 1), ymd(2016, 7, 1)]
            .into_iter()
            .min_by_key(|d| ((*d - at).num_seconds().abs(), *d))
            .unwrap();
        let r = s.replay("http://epa.gov/acidrain", at).unwrap().unwrap();
        assert_eq!(r.capture.datetime.date_naive(), oracle.date_naive());
        assert_eq!(r.body, "<p>old</p>");
        assert!(s.replay("http://missing.gov/", at).unwrap().is_none());
    }

    #[test]
    fn provenance_by_uri_m() {
        let s = store();
        let r = s.replay("http://epa.gov/acidrain", ymd(2008, 1, 1)).unwrap().unwrap();
        let info = s.provenance(&r.capture.uri_m).unwrap().unwrap();
        assert_eq!(info.collections, vec!["alexa crawls".to_string()]);
        assert!(s.provenance("https://web.archive.org/web/1/x").unwrap().is_none());
    }

    #[test]
    fn missing_body_fails_loading() {
        let manifest = Manifest {
            cdx_page_size: 10,
            pages: vec![ManifestPage {
                url: "http://epa.gov/x".into(),
                captures: vec![ManifestCapture::new(ts(2008, 1, 1, 0, 0, 0), CdxStatus::Code(200))
                    .body("pages/none.html")],
            }],
        };
        assert!(matches!(
            FixtureStore::from_parts(manifest, BTreeMap::new()),
            Err(FixtureError::BodyMissing { .. })
        ));
    }

    #[test]
    fn checksum_mismatch_fails_loading() {
        let mut cap = ManifestCapture::new(ts(2008, 1, 1, 0, 0, 0), CdxStatus::Code(200)).body("b.html");
        cap.length = Some(99);
        let manifest = Manifest {
            cdx_page_size: 10,
            pages: vec![ManifestPage {
                url: "http://epa.gov/x".into(),
                captures: vec![cap],
            }],
        };
        let bodies = BTreeMap::from([("b.html".to_string(), "short".to_string())]);
        assert!(matches!(
            FixtureStore::from_parts(manifest, bodies),
            Err(FixtureError::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn disk_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(FixtureStore::load(dir.path()), Err(FixtureError::ManifestMissing(_))));
        let s = store();
        let manifest = Manifest {
            cdx_page_size: 2,
            pages: vec![ManifestPage {
                url: "http://epa.gov/y".into(),
                captures: vec![ManifestCapture::new(ts(2008, 1, 1, 0, 0, 0), CdxStatus::Code(200)).body("pages/y.html")],
            }],
        };
        let bodies = BTreeMap::from([("pages/y.html".to_string(), "<a href=/z>z</a>".to_string())]);
        write_fixture(dir.path(), &manifest, &bodies).unwrap();
        let loaded = FixtureStore::load(dir.path()).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(s.len(), 2);
    }
}
