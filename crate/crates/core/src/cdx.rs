//! CDX index client: row parsing, query model, paginated polite fetching and
//! window classification of a URL's captures.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Months, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::backend::{BackendError, CdxBackend};
use crate::epoch::{nearest_to, year_end, EpochSpec, TimeError, Timestamp};
use crate::memento::{ArchiveEndpoint, CaptureRef};
use crate::rate::RateLimiter;
use crate::url_keys::{normalize_host, parse_lenient, strip_www, Canonicalizer, SurtKey, UrlError};

/// Archived HTTP status column: a code in 100..=599 or `-` for revisit rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CdxStatus {
    Code(u16),
    Revisit,
}

impl CdxStatus {
    pub fn is_success(self) -> bool {
        self == CdxStatus::Code(200)
    }

    pub fn code(self) -> Option<u16> {
        match self {
            CdxStatus::Code(c) => Some(c),
            CdxStatus::Revisit => None,
        }
    }
}

impl fmt::Display for CdxStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CdxStatus::Code(c) => write!(f, "{c}"),
            CdxStatus::Revisit => f.write_str("-"),
        }
    }
}

impl FromStr for CdxStatus {
    type Err = CdxParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "-" {
            return Ok(CdxStatus::Revisit);
        }
        match s.parse::<u16>() {
            Ok(c) if (100..=599).contains(&c) && s.len() == 3 => Ok(CdxStatus::Code(c)),
            _ => Err(CdxParseError::Status(s.to_string())),
        }
    }
}

impl Serialize for CdxStatus {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CdxStatus::Code(c) => s.serialize_u16(*c),
            CdxStatus::Revisit => s.serialize_str("-"),
        }
    }
}

impl<'de> Deserialize<'de> for CdxStatus {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u16),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(c) => c.to_string().parse().map_err(serde::de::Error::custom),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CdxParseError {
    #[error("expected 7 fields, found {found}")]
    FieldCount { found: usize },
    #[error(transparent)]
    Timestamp(#[from] TimeError),
    #[error("invalid status {0:?}")]
    Status(String),
    #[error("invalid length {0:?}")]
    Length(String),
}

/// One CDX index row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CdxRecord {
    pub urlkey: String,
    pub timestamp: Timestamp,
    pub original: String,
    pub mimetype: String,
    pub status: CdxStatus,
    pub digest: String,
    pub length: u64,
}

impl CdxRecord {
    pub fn surt(&self) -> SurtKey {
        SurtKey {
            key: self.urlkey.clone(),
            source_url: self.original.clone(),
        }
    }

    pub fn to_capture(&self, archive: &ArchiveEndpoint) -> CaptureRef {
        CaptureRef {
            original: self.surt(),
            archive_id: archive.id.clone(),
            datetime: self.timestamp.datetime(),
            status: self.status.code(),
            uri_m: archive.replay_url(&self.timestamp, &self.original),
        }
    }
}

impl fmt::Display for CdxRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {} {} {}",
            self.urlkey,
            self.timestamp,
            self.original,
            self.mimetype,
            self.status,
            self.digest,
            self.length
        )
    }
}

/// Parses one space-separated row: `urlkey timestamp original mimetype statuscode digest length`.
pub fn parse_cdx_line(line: &str) -> Result<CdxRecord, CdxParseError> {
    let fields: Vec<&str> = line.split_ascii_whitespace().collect();
    if fields.len() != 7 {
        return Err(CdxParseError::FieldCount {
            found: fields.len(),
        });
    }
    let timestamp = Timestamp::parse14(fields[1])?;
    let status = fields[4].parse()?;
    let length = fields[6]
        .bytes()
        .all(|b| b.is_ascii_digit())
        .then(|| fields[6].parse::<u64>().ok())
        .flatten()
        .ok_or_else(|| CdxParseError::Length(fields[6].to_string()))?;
    Ok(CdxRecord {
        urlkey: fields[0].to_string(),
        timestamp,
        original: fields[2].to_string(),
        mimetype: fields[3].to_string(),
        status,
        digest: fields[5].to_string(),
        length,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchType {
    Exact,
    Prefix,
    Domain,
}

impl MatchType {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchType::Exact => "exact",
            MatchType::Prefix => "prefix",
            MatchType::Domain => "domain",
        }
    }
}

impl FromStr for MatchType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(MatchType::Exact),
            "prefix" => Ok(MatchType::Prefix),
            "domain" => Ok(MatchType::Domain),
            other => Err(format!("unknown match type {other:?}")),
        }
    }
}

/// `from`/`to` bound: a 4- to 14-digit timestamp prefix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TimeBound(String);

impl TimeBound {
    pub fn year(year: i32) -> Self {
        TimeBound(format!("{year:04}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Earliest instant covered by the bound.
    pub fn lower(&self) -> DateTime<Utc> {
        const PAD: &str = "0101000000";
        let full = format!("{}{}", self.0, &PAD[self.0.len() - 4..]);
        Timestamp::parse14(&full)
            .expect("validated on construction")
            .datetime()
    }

    /// Latest instant covered by the bound.
    pub fn upper(&self) -> DateTime<Utc> {
        let lower = self.lower();
        let one = chrono::Duration::seconds(1);
        match self.0.len() {
            4 => year_end(lower.format("%Y").to_string().parse().expect("digits")),
            6 => lower + Months::new(1) - one,
            8 => lower + chrono::Duration::days(1) - one,
            10 => lower + chrono::Duration::hours(1) - one,
            12 => lower + chrono::Duration::minutes(1) - one,
            _ => lower,
        }
    }
}

impl TryFrom<String> for TimeBound {
    type Error = TimeError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        let ok_shape = (4..=14).contains(&s.len())
            && s.len() % 2 == 0
            && s.bytes().all(|b| b.is_ascii_digit());
        if !ok_shape {
            return Err(TimeError::Bound(s));
        }
        let bound = TimeBound(s.clone());
        const PAD: &str = "0101000000";
        Timestamp::parse14(&format!("{}{}", s, &PAD[s.len() - 4..]))
            .map_err(|_| TimeError::Bound(s))?;
        Ok(bound)
    }
}

impl FromStr for TimeBound {
    type Err = TimeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TimeBound::try_from(s.to_string())
    }
}

impl From<TimeBound> for String {
    fn from(b: TimeBound) -> Self {
        b.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CdxQuery {
    pub match_type: MatchType,
    /// URL (scheme optional) or SURT form such as `gov,osmre)/`.
    pub target: String,
    #[serde(default)]
    pub from: Option<TimeBound>,
    #[serde(default)]
    pub to: Option<TimeBound>,
    #[serde(default)]
    pub page: Option<u32>,
}

impl CdxQuery {
    pub fn new(match_type: MatchType, target: impl Into<String>) -> Self {
        CdxQuery {
            match_type,
            target: target.into(),
            from: None,
            to: None,
            page: None,
        }
    }

    pub fn exact(target: impl Into<String>) -> Self {
        CdxQuery::new(MatchType::Exact, target)
    }

    pub fn prefix(target: impl Into<String>) -> Self {
        CdxQuery::new(MatchType::Prefix, target)
    }

    pub fn domain(target: impl Into<String>) -> Self {
        CdxQuery::new(MatchType::Domain, target)
    }

    pub fn years(mut self, from: i32, to: i32) -> Self {
        self.from = Some(TimeBound::year(from));
        self.to = Some(TimeBound::year(to));
        self
    }

    pub fn with_page(mut self, page: u32) -> Self {
        self.page = Some(page);
        self
    }

    pub fn key_matcher(&self, canon: &Canonicalizer) -> Result<KeyMatcher, UrlError> {
        let target = self.target.trim();
        let is_surt = target.contains(')');
        let pattern = match (self.match_type, is_surt) {
            (MatchType::Domain, true) => target.split(')').next().unwrap_or("").to_string(),
            (MatchType::Domain, false) => {
                let url = parse_lenient(target)?;
                let host = normalize_host(url.host_str().unwrap_or(""));
                strip_www(&host).rsplit('.').collect::<Vec<_>>().join(",")
            }
            (_, true) => target.to_ascii_lowercase(),
            (_, false) => canon.surt_of(&parse_lenient(target)?),
        };
        Ok(KeyMatcher {
            match_type: self.match_type,
            pattern,
        })
    }

    pub fn in_time(&self, ts: &Timestamp) -> bool {
        let dt = ts.datetime();
        self.from.as_ref().map_or(true, |b| dt >= b.lower())
            && self.to.as_ref().map_or(true, |b| dt <= b.upper())
    }

    /// Query parameters in the wayback CDX server dialect.
    pub fn to_params(&self) -> Vec<(&'static str, String)> {
        let mut params = vec![
            ("url", self.target.clone()),
            ("matchType", self.match_type.as_str().to_string()),
        ];
        if let Some(from) = &self.from {
            params.push(("from", from.as_str().to_string()));
        }
        if let Some(to) = &self.to {
            params.push(("to", to.as_str().to_string()));
        }
        params
    }

    /// Inverse of [`CdxQuery::to_params`]; unknown parameters are ignored.
    pub fn from_params<'a>(params: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self, String> {
        let mut query = CdxQuery::exact("");
        let mut has_url = false;
        for (k, v) in params {
            match k {
                "url" => {
                    query.target = v.to_string();
                    has_url = true;
                }
                "matchType" => query.match_type = v.parse()?,
                "from" => query.from = Some(v.parse().map_err(|e: TimeError| e.to_string())?),
                "to" => query.to = Some(v.parse().map_err(|e: TimeError| e.to_string())?),
                "page" => query.page = Some(v.parse().map_err(|_| format!("bad page {v:?}"))?),
                _ => {}
            }
        }
        if !has_url {
            return Err("missing url parameter".into());
        }
        Ok(query)
    }
}

/// Compiled urlkey test for a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMatcher {
    match_type: MatchType,
    pattern: String,
}

impl KeyMatcher {
    pub fn matches(&self, urlkey: &str) -> bool {
        match self.match_type {
            MatchType::Exact => urlkey == self.pattern,
            MatchType::Prefix => urlkey.starts_with(&self.pattern),
            MatchType::Domain => urlkey
                .strip_prefix(&self.pattern)
                .is_some_and(|rest| rest.starts_with(')') || rest.starts_with(',')),
        }
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CdxError {
    #[error("CDX backend unreachable after {attempts} attempts: {message}")]
    BackendUnreachable { attempts: u32, message: String },
    #[error("CDX backend still throttling after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("CDX protocol error: {0}")]
    Protocol(String),
}

/// A row that failed to parse; the fetch skips it and continues.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CdxLineError {
    pub line_no: usize,
    pub line: String,
    pub error: CdxParseError,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CdxFetch {
    pub records: Vec<CdxRecord>,
    pub parse_errors: Vec<CdxLineError>,
    pub pages: u32,
}

pub const DEFAULT_ATTEMPTS: u32 = 3;

/// Rate-limited CDX client over any [`CdxBackend`].
#[derive(Clone)]
pub struct CdxGateway {
    backend: Arc<dyn CdxBackend>,
    limiter: Arc<RateLimiter>,
    attempts: u32,
}

impl CdxGateway {
    pub fn new(backend: Arc<dyn CdxBackend>, limiter: Arc<RateLimiter>) -> Self {
        CdxGateway {
            backend,
            limiter,
            attempts: DEFAULT_ATTEMPTS,
        }
    }

    pub fn with_attempts(mut self, attempts: u32) -> Self {
        self.attempts = attempts.max(1);
        self
    }

    pub fn limiter(&self) -> &Arc<RateLimiter> {
        &self.limiter
    }

    /// Fetches every page of `query` (or only `query.page` when set).
    pub fn fetch_cdx(&self, query: &CdxQuery) -> Result<CdxFetch, CdxError> {
        let pages: Vec<u32> = match query.page {
            Some(p) => vec![p],
            None => {
                let n = self.call(|| self.backend.num_pages(query))?;
                (0..n).collect()
            }
        };
        let mut fetch = CdxFetch {
            pages: pages.len() as u32,
            ..CdxFetch::default()
        };
        let mut line_no = 0usize;
        for page in pages {
            let body = self.call(|| self.backend.fetch_page(query, page))?;
            for line in body.lines() {
                line_no += 1;
                if line.trim().is_empty() {
                    continue;
                }
                match parse_cdx_line(line) {
                    Ok(rec) => fetch.records.push(rec),
                    Err(error) => {
                        tracing::warn!(line_no, %error, "skipping malformed CDX row");
                        fetch.parse_errors.push(CdxLineError {
                            line_no,
                            line: line.to_string(),
                            error,
                        });
                    }
                }
            }
        }
        Ok(fetch)
    }

    fn call<T>(&self, mut op: impl FnMut() -> Result<T, BackendError>) -> Result<T, CdxError> {
        let mut last = BackendError::Transport(String::new());
        for attempt in 1..=self.attempts {
            self.limiter.acquire();
            match op() {
                Ok(v) => return Ok(v),
                Err(BackendError::Protocol(m)) => return Err(CdxError::Protocol(m)),
                Err(e) => last = e,
            }
            if attempt < self.attempts {
                let base = self.limiter.draw().max(Duration::from_secs(1));
                self.limiter.clock().sleep(base * 2u32.pow(attempt));
            }
        }
        Err(match last {
            BackendError::RateLimited => CdxError::RateLimited {
                attempts: self.attempts,
            },
            other => CdxError::BackendUnreachable {
                attempts: self.attempts,
                message: other.to_string(),
            },
        })
    }
}

/// Result of looking for a usable capture inside an epoch window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WindowStatus {
    SuccessCapture(CaptureRef),
    NonSuccessOnly,
    NoCapture,
}

impl WindowStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, WindowStatus::SuccessCapture(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            WindowStatus::SuccessCapture(_) => "success",
            WindowStatus::NonSuccessOnly => "non_success",
            WindowStatus::NoCapture => "none",
        }
    }
}

/// Classifies one URL's rows against an epoch: the 200 nearest the epoch
/// target wins (earlier on ties); revisit rows count as non-success.
pub fn capture_status_in_window(
    records: &[CdxRecord],
    epoch: &EpochSpec,
    archive: &ArchiveEndpoint,
) -> WindowStatus {
    let in_window: Vec<&CdxRecord> = records
        .iter()
        .filter(|r| epoch.window.contains(r.timestamp.datetime()))
        .collect();
    if in_window.is_empty() {
        return WindowStatus::NoCapture;
    }
    let successes = in_window.into_iter().filter(|r| r.status.is_success());
    match nearest_to(successes, epoch.target, |r| r.timestamp.datetime()) {
        Some(rec) => WindowStatus::SuccessCapture(rec.to_capture(archive)),
        None => WindowStatus::NonSuccessOnly,
    }
}

/// Convenience for building timestamps in tests and fixtures.
pub fn ts(y: i32, mo: u32, d: u32, h: u32, mi: u32, s: u32) -> Timestamp {
    Timestamp::new(
        Utc.with_ymd_and_hms(y, mo, d, h, mi, s)
            .single()
            .expect("valid datetime"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epoch::{default_epochs, DateWindow};

    fn rec(ts: &str, status: &str) -> CdxRecord {
        parse_cdx_line(&format!(
            "gov,epa)/acidrain {ts} http://www.epa.gov/acidrain text/html {status} AAAA 10"
        ))
        .unwrap()
    }

    #[test]
    fn parse_examples() {
        let r = parse_cdx_line(
            "gov,epa)/acidrain 20080101120000 http://www.epa.gov/acidrain text/html 200 AAAABBBB 5120",
        )
        .unwrap();
        assert_eq!(r.status, CdxStatus::Code(200));
        assert_eq!(r.length, 5120);
        let r = parse_cdx_line("gov,epa)/x 20200701000000 http://epa.gov/x text/html - SHA123 100").unwrap();
        assert_eq!(r.status, CdxStatus::Revisit);
        assert_eq!(
            parse_cdx_line("bad line"),
            Err(CdxParseError::FieldCount { found: 2 })
        );
    }

    #[test]
    fn parse_rejects_bad_fields() {
        let bad_ts = "gov,epa)/x 2008010112 http://epa.gov/x text/html 200 D 1";
        assert!(matches!(parse_cdx_line(bad_ts), Err(CdxParseError::Timestamp(_))));
        let bad_status = "gov,epa)/x 20080101120000 http://epa.gov/x text/html 700 D 1";
        assert!(matches!(parse_cdx_line(bad_status), Err(CdxParseError::Status(_))));
        let bad_len = "gov,epa)/x 20080101120000 http://epa.gov/x text/html 200 D -";
        assert!(matches!(parse_cdx_line(bad_len), Err(CdxParseError::Length(_))));
    }

    #[test]
    fn window_classification() {
        let ia = ArchiveEndpoint::wayback();
        let e2008 = &default_epochs()[0];
        let e2020 = &default_epochs()[2];
        let ok = capture_status_in_window(&[rec("20080315000000", "200")], e2008, &ia);
        assert!(ok.is_success());
        let gap = [rec("20170301000000", "200"), rec("20220301000000", "200")];
        assert_eq!(capture_status_in_window(&gap, e2020, &ia), WindowStatus::NoCapture);
        let only404 = [rec("20080601000000", "404")];
        assert_eq!(
            capture_status_in_window(&only404, e2008, &ia),
            WindowStatus::NonSuccessOnly
        );
        let revisit = [rec("20080601000000", "-")];
        assert_eq!(
            capture_status_in_window(&revisit, e2008, &ia),
            WindowStatus::NonSuccessOnly
        );
    }

    #[test]
    fn nearest_success_wins_with_earlier_tie_break() {
        let ia = ArchiveEndpoint::wayback();
        let epoch = EpochSpec::new(
            "x",
            DateWindow::calendar_year(2016),
            crate::epoch::ymd(2016, 7, 1),
        );
        let rows = [
            rec("20160630000000", "200"),
            rec("20160702000000", "200"),
            rec("20160701000000", "404"),
        ];
        match capture_status_in_window(&rows, &epoch, &ia) {
            WindowStatus::SuccessCapture(c) => {
                assert_eq!(c.datetime, crate::epoch::ymd(2016, 6, 30))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn key_matchers() {
        let canon = Canonicalizer::default();
        let prefix = CdxQuery::prefix("osmre.gov/").key_matcher(&canon).unwrap();
        let domain = CdxQuery::domain("osmre.gov").key_matcher(&canon).unwrap();
        assert!(prefix.matches("gov,osmre)/index.shtm"));
        assert!(!prefix.matches("gov,osmre,techtransfer)/"));
        assert!(domain.matches("gov,osmre,techtransfer)/"));
        assert!(domain.matches("gov,osmre)/"));
        assert!(!domain.matches("gov,osmrex)/"));
        let exact = CdxQuery::exact("epa.gov/acidrain").key_matcher(&canon).unwrap();
        assert!(exact.matches("gov,epa)/acidrain"));
        let surt = CdxQuery::domain("gov,osmre)/").key_matcher(&canon).unwrap();
        assert!(surt.matches("gov,osmre,techtransfer)/x"));
    }

    #[test]
    fn time_bounds() {
        let b: TimeBound = "2008".parse().unwrap();
        assert_eq!(b.lower(), crate::epoch::ymd(2008, 1, 1));
        assert_eq!(b.upper(), year_end(2008));
        let feb: TimeBound = "200802".parse().unwrap();
        assert_eq!(feb.upper().format("%Y%m%d%H%M%S").to_string(), "20080229235959");
        assert!("20081".parse::<TimeBound>().is_err());
        assert!("200813".parse::<TimeBound>().is_err());
        let q = CdxQuery::exact("epa.gov/x").years(2008, 2008);
        assert!(q.in_time(&ts(2008, 12, 31, 23, 59, 59)));
        assert!(!q.in_time(&ts(2009, 1, 1, 0, 0, 0)));
    }
}
