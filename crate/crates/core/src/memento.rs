//! Memento TimeMaps: link-format parsing, multi-archive aggregation and
//! per-archive holdings.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{BackendError, TimeMapBackend};
use crate::cdx::CdxRecord;
use crate::epoch::{DateWindow, Timestamp};
use crate::url_keys::{canonicalize, SurtKey, UrlError};

/// A resolvable archived capture.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CaptureRef {
    pub original: SurtKey,
    pub archive_id: String,
    pub datetime: DateTime<Utc>,
    #[serde(default)]
    pub status: Option<u16>,
    pub uri_m: String,
}

impl CaptureRef {
    pub fn timestamp(&self) -> Timestamp {
        Timestamp::new(self.datetime)
    }
}

/// One archive in the registry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArchiveEndpoint {
    pub id: String,
    /// TimeMap URL with a `{url}` placeholder.
    pub timemap_template: String,
    /// Replay URL with `{timestamp}` and `{url}` placeholders.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay_template: Option<String>,
}

pub const WAYBACK_ID: &str = "web.archive.org";

impl ArchiveEndpoint {
    pub fn new(id: impl Into<String>, timemap_template: impl Into<String>) -> Self {
        ArchiveEndpoint {
            id: id.into(),
            timemap_template: timemap_template.into(),
            replay_template: None,
        }
    }

    pub fn wayback() -> Self {
        ArchiveEndpoint {
            id: WAYBACK_ID.to_string(),
            timemap_template: "https://web.archive.org/web/timemap/link/{url}".to_string(),
            replay_template: Some("https://web.archive.org/web/{timestamp}/{url}".to_string()),
        }
    }

    pub fn timemap_url(&self, url: &str) -> String {
        self.timemap_template.replace("{url}", url)
    }

    pub fn replay_url(&self, ts: &Timestamp, original: &str) -> String {
        let template = self
            .replay_template
            .clone()
            .unwrap_or_else(|| format!("https://{}/web/{{timestamp}}/{{url}}", self.id));
        template
            .replace("{timestamp}", &ts.to_string())
            .replace("{url}", original)
    }
}

/// The eight archives that held 2008 mementos for the source collection.
pub fn default_registry() -> Vec<ArchiveEndpoint> {
    let mut archives = vec![ArchiveEndpoint::wayback()];
    for (id, template) in [
        ("wayback.archive-it.org", "https://wayback.archive-it.org/all/timemap/link/{url}"),
        ("webarchive.loc.gov", "https://webarchive.loc.gov/all/timemap/link/{url}"),
        ("arquivo.pt", "https://arquivo.pt/wayback/timemap/link/{url}"),
        ("web.archive.org.au", "https://web.archive.org.au/awa/timemap/link/{url}"),
        ("swap.stanford.edu", "https://swap.stanford.edu/timemap/link/{url}"),
        ("archive.md", "https://archive.md/timemap/{url}"),
        ("wayback.vefsafn.is", "https://wayback.vefsafn.is/wayback/timemap/link/{url}"),
    ] {
        archives.push(ArchiveEndpoint::new(id, template));
    }
    archives
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("reading archive registry {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("archive registry {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("archive registry {0} is empty")]
    Empty(String),
}

/// Loads a registry file: `[{"id": ..., "timemap_template": ...}]`.
pub fn load_registry(path: &Path) -> Result<Vec<ArchiveEndpoint>, RegistryError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
        path: display.clone(),
        source,
    })?;
    let archives: Vec<ArchiveEndpoint> =
        serde_json::from_str(&text).map_err(|source| RegistryError::Json {
            path: display.clone(),
            source,
        })?;
    if archives.is_empty() {
        return Err(RegistryError::Empty(display));
    }
    Ok(archives)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TimeMapError {
    #[error("unbalanced link syntax at byte {0}")]
    Unbalanced(usize),
    #[error("unexpected character {ch:?} at byte {at}")]
    Unexpected { ch: char, at: usize },
    #[error("memento links present but no original URI could be determined")]
    MissingOriginal,
    #[error(transparent)]
    Url(#[from] UrlError),
}

/// One `<uri>; name="value"; ...` entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkEntry {
    pub uri: String,
    pub params: Vec<(String, String)>,
}

impl LinkEntry {
    pub fn param(&self, name: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn has_rel(&self, rel: &str) -> bool {
        self.param("rel")
            .is_some_and(|r| r.split_ascii_whitespace().any(|t| t.eq_ignore_ascii_case(rel)))
    }
}

/// Splits an `application/link-format` body into entries.
pub fn parse_link_format(body: &str) -> Result<Vec<LinkEntry>, TimeMapError> {
    let bytes = body.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    let skip_ws = |i: &mut usize| {
        while *i < bytes.len() && bytes[*i].is_ascii_whitespace() {
            *i += 1;
        }
    };
    loop {
        skip_ws(&mut i);
        while i < bytes.len() && bytes[i] == b',' {
            i += 1;
            skip_ws(&mut i);
        }
        if i >= bytes.len() {
            break;
        }
        if bytes[i] != b'<' {
            return Err(unexpected(body, i));
        }
        let close = body[i + 1..]
            .find('>')
            .ok_or(TimeMapError::Unbalanced(i))?;
        let uri = body[i + 1..i + 1 + close].trim().to_string();
        i += close + 2;
        let mut params = Vec::new();
        loop {
            skip_ws(&mut i);
            if i >= bytes.len() || bytes[i] == b',' {
                break;
            }
            if bytes[i] != b';' {
                return Err(unexpected(body, i));
            }
            i += 1;
            skip_ws(&mut i);
            let name_start = i;
            while i < bytes.len() && !matches!(bytes[i], b'=' | b';' | b',') && !bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            let name = body[name_start..i].to_ascii_lowercase();
            skip_ws(&mut i);
            let mut value = String::new();
            if i < bytes.len() && bytes[i] == b'=' {
                i += 1;
                skip_ws(&mut i);
                if i < bytes.len() && bytes[i] == b'"' {
                    let end = body[i + 1..]
                        .find('"')
                        .ok_or(TimeMapError::Unbalanced(i))?;
                    value = body[i + 1..i + 1 + end].to_string();
                    i += end + 2;
                } else {
                    let start = i;
                    while i < bytes.len() && !matches!(bytes[i], b';' | b',') {
                        i += 1;
                    }
                    value = body[start..i].trim().to_string();
                }
            }
            if !name.is_empty() {
                params.push((name, value));
            }
        }
        out.push(LinkEntry { uri, params });
    }
    Ok(out)
}

fn unexpected(body: &str, at: usize) -> TimeMapError {
    TimeMapError::Unexpected {
        ch: body[at..].chars().next().unwrap_or('\0'),
        at,
    }
}

/// Parsed TimeMap: memento captures plus the links skipped for lacking a datetime.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TimeMapParse {
    pub original: Option<String>,
    pub captures: Vec<CaptureRef>,
    pub missing_datetime: Vec<String>,
}

pub fn parse_timemap(body: &str, archive_id: &str) -> Result<TimeMapParse, TimeMapError> {
    let links = parse_link_format(body)?;
    let original = links
        .iter()
        .find(|l| l.has_rel("original"))
        .map(|l| l.uri.clone());
    let mut parse = TimeMapParse {
        original: original.clone(),
        ..TimeMapParse::default()
    };
    for link in links.iter().filter(|l| l.has_rel("memento")) {
        let Some(dt) = link
            .param("datetime")
            .and_then(|d| DateTime::parse_from_rfc2822(d).ok())
        else {
            tracing::debug!(uri_m = %link.uri, "memento link without usable datetime");
            parse.missing_datetime.push(link.uri.clone());
            continue;
        };
        let original_url = original
            .clone()
            .or_else(|| original_from_uri_m(&link.uri))
            .ok_or(TimeMapError::MissingOriginal)?;
        parse.captures.push(CaptureRef {
            original: canonicalize(&original_url)?,
            archive_id: archive_id.to_string(),
            datetime: dt.with_timezone(&Utc),
            status: None,
            uri_m: link.uri.clone(),
        });
    }
    Ok(parse)
}

/// Extracts the original URL from a wayback-style URI-M (`.../20080101000000/http://...`).
fn original_from_uri_m(uri_m: &str) -> Option<String> {
    let idx = uri_m.find("/http")?;
    let before = &uri_m[..idx];
    let ts = before.rsplit('/').next()?;
    let digits: String = ts.chars().take_while(|c| c.is_ascii_digit()).collect();
    (digits.len() == 14).then(|| uri_m[idx + 1..].to_string())
}

/// Renders captures as a TimeMap in RFC 7089 link-format.
pub fn render_timemap(original: &str, timemap_uri: &str, captures: &[CaptureRef]) -> String {
    let mut out = format!("<{original}>; rel=\"original\",\n<{timemap_uri}>; rel=\"self\"; type=\"application/link-format\"");
    for c in captures {
        out.push_str(&format!(
            ",\n<{}>; rel=\"memento\"; datetime=\"{}\"",
            c.uri_m,
            c.datetime.format("%a, %d %b %Y %H:%M:%S GMT")
        ));
    }
    out.push('\n');
    out
}

/// All known captures of one original URL across archives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergedTimeMap {
    pub original: SurtKey,
    pub captures: Vec<CaptureRef>,
}

impl MergedTimeMap {
    pub fn new(original: SurtKey, captures: impl IntoIterator<Item = CaptureRef>) -> Self {
        let mut map = MergedTimeMap {
            original,
            captures: Vec::new(),
        };
        map.extend(captures);
        map
    }

    /// Adds captures, keeping `(datetime, archive_id)` unique and sorted.
    pub fn extend(&mut self, captures: impl IntoIterator<Item = CaptureRef>) {
        self.captures.extend(captures);
        self.captures
            .sort_by(|a, b| (a.datetime, &a.archive_id, &a.uri_m).cmp(&(b.datetime, &b.archive_id, &b.uri_m)));
        self.captures
            .dedup_by(|b, a| a.datetime == b.datetime && a.archive_id == b.archive_id);
    }

    pub fn merge(mut self, other: MergedTimeMap) -> Self {
        self.extend(other.captures);
        self
    }

    /// Fills in archived statuses for `archive_id` captures from CDX rows.
    pub fn fill_statuses(&mut self, archive_id: &str, rows: &[CdxRecord]) {
        for capture in self.captures.iter_mut().filter(|c| c.archive_id == archive_id) {
            if let Some(row) = rows.iter().find(|r| r.timestamp.datetime() == capture.datetime) {
                capture.status = row.status.code();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchiveFailure {
    pub archive_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aggregation {
    pub map: MergedTimeMap,
    pub failures: Vec<ArchiveFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AggregateError {
    #[error("no archives configured")]
    NoArchives,
    #[error("every archive failed: {0:?}")]
    AllArchivesFailed(Vec<ArchiveFailure>),
    #[error(transparent)]
    Url(#[from] UrlError),
}

/// Queries every archive for `url` and merges the TimeMaps. Individual
/// archive failures are recorded; only a total failure is an error.
pub fn aggregate(
    url: &str,
    archives: &[ArchiveEndpoint],
    backend: &dyn TimeMapBackend,
) -> Result<Aggregation, AggregateError> {
    if archives.is_empty() {
        return Err(AggregateError::NoArchives);
    }
    let original = canonicalize(url)?;
    let results: Vec<(String, Result<Vec<CaptureRef>, String>)> = archives
        .par_iter()
        .map(|archive| {
            let result = backend
                .timemap(archive, url)
                .map_err(|e: BackendError| e.to_string())
                .and_then(|body| {
                    parse_timemap(&body, &archive.id)
                        .map(|p| p.captures)
                        .map_err(|e| e.to_string())
                });
            (archive.id.clone(), result)
        })
        .collect();

    let mut map = MergedTimeMap::new(original, Vec::new());
    let mut failures = Vec::new();
    for (archive_id, result) in results {
        match result {
            Ok(captures) => map.extend(captures),
            Err(error) => failures.push(ArchiveFailure { archive_id, error }),
        }
    }
    if failures.len() == archives.len() {
        return Err(AggregateError::AllArchivesFailed(failures));
    }
    Ok(Aggregation { map, failures })
}

/// Sorted archive ids holding at least one capture inside `window`.
pub fn archives_with_window(map: &MergedTimeMap, window: &DateWindow) -> Vec<String> {
    map.captures
        .iter()
        .filter(|c| window.contains(c.datetime))
        .map(|c| c.archive_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epoch::ymd;

    const THREE: &str = r#"<http://www.epa.gov/acidrain>; rel="original",
<https://web.archive.org/web/timemap/link/http://www.epa.gov/acidrain>; rel="self"; type="application/link-format",
<http://web.archive.org/web/http://www.epa.gov/acidrain>; rel="timegate",
<https://web.archive.org/web/20080101120000/http://www.epa.gov/acidrain>; rel="first memento"; datetime="Tue, 01 Jan 2008 12:00:00 GMT",
<https://web.archive.org/web/20160701000000/http://www.epa.gov/acidrain>; rel="memento"; datetime="Fri, 01 Jul 2016 00:00:00 GMT",
<https://web.archive.org/web/20200701000000/http://www.epa.gov/acidrain>; rel="last memento"; datetime="Wed, 01 Jul 2020 00:00:00 GMT"
"#;

    #[test]
    fn parses_three_mementos_in_order() {
        let parsed = parse_timemap(THREE, WAYBACK_ID).unwrap();
        let years: Vec<_> = parsed
            .captures
            .iter()
            .map(|c| c.datetime.format("%Y").to_string())
            .collect();
        assert_eq!(years, ["2008", "2016", "2020"]);
        assert_eq!(parsed.captures[0].original.key, "gov,epa)/acidrain");
    }

    #[test]
    fn original_and_timegate_only() {
        let body = "<http://epa.gov/>; rel=\"original\", <http://web.archive.org/web/http://epa.gov/>; rel=\"timegate\"";
        assert!(parse_timemap(body, WAYBACK_ID).unwrap().captures.is_empty());
        assert!(parse_timemap("", WAYBACK_ID).unwrap().captures.is_empty());
    }

    #[test]
    fn archive_it_memento() {
        let body = "<http://www.epa.gov/x>; rel=\"original\",\n\
            <https://wayback.archive-it.org/all/20080512000000/http://www.epa.gov/x>; rel=\"memento\"; datetime=\"Mon, 12 May 2008 00:00:00 GMT\"";
        let parsed = parse_timemap(body, "wayback.archive-it.org").unwrap();
        assert_eq!(parsed.captures.len(), 1);
        assert_eq!(parsed.captures[0].archive_id, "wayback.archive-it.org");
        assert_eq!(parsed.captures[0].datetime, ymd(2008, 5, 12));
    }

    #[test]
    fn missing_datetime_is_skipped_and_recorded() {
        let body = "<http://a.gov/>; rel=\"original\", <https://w/20080101000000/http://a.gov/>; rel=\"memento\"";
        let parsed = parse_timemap(body, "w").unwrap();
        assert!(parsed.captures.is_empty());
        assert_eq!(parsed.missing_datetime.len(), 1);
    }

    #[test]
    fn unbalanced_syntax() {
        assert!(matches!(
            parse_timemap("<http://a.gov/; rel=\"original\"", "w"),
            Err(TimeMapError::Unbalanced(_))
        ));
        assert!(matches!(
            parse_timemap("<http://a.gov/>; rel=\"original", "w"),
            Err(TimeMapError::Unbalanced(_))
        ));
        assert!(matches!(
            parse_timemap("garbage", "w"),
            Err(TimeMapError::Unexpected { .. })
        ));
    }

    #[test]
    fn original_recovered_from_uri_m() {
        assert_eq!(
            original_from_uri_m("https://web.archive.org/web/20080101000000/http://epa.gov/x").as_deref(),
            Some("http://epa.gov/x")
        );
        assert_eq!(original_from_uri_m("https://x.org/memento/1"), None);
    }

    #[test]
    fn render_then_parse() {
        let parsed = parse_timemap(THREE, WAYBACK_ID).unwrap();
        let body = render_timemap("http://www.epa.gov/acidrain", "https://tm", &parsed.captures);
        assert_eq!(parse_timemap(&body, WAYBACK_ID).unwrap().captures, parsed.captures);
    }

    #[test]
    fn merge_keeps_archive_in_dedupe_key() {
        let parsed = parse_timemap(THREE, WAYBACK_ID).unwrap();
        let mut other = parsed.captures[0].clone();
        other.archive_id = "wayback.archive-it.org".into();
        let map = MergedTimeMap::new(parsed.captures[0].original.clone(), [parsed.captures[0].clone(), other]);
        assert_eq!(map.captures.len(), 2);
        let window = DateWindow::calendar_year(2008);
        assert_eq!(
            archives_with_window(&map, &window),
            vec!["wayback.archive-it.org".to_string(), WAYBACK_ID.to_string()]
        );
        let empty = MergedTimeMap::new(map.original.clone(), Vec::new());
        assert!(archives_with_window(&empty, &window).is_empty());
    }
}
