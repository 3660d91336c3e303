//! URL identity layer: SURT keys, path-depth classes and host scoping.
//!
//! Every other module compares URLs through [`SurtKey`], so the rules here
//! decide what counts as "the same page" across archives and epochs.

use std::fmt;

use serde::{Deserialize, Serialize};
use url::{Host, Url};

/// Query/path parameters stripped during canonicalization.
pub const DEFAULT_SESSION_PARAMS: &[&str] = &["jsessionid", "phpsessid", "sid"];

/// Two-label public suffixes under which the registrable domain has three labels.
const MULTI_LABEL_SUFFIXES: &[&str] = &[
    "fed.us", "co.uk", "gov.uk", "ac.uk", "org.uk", "com.au", "gov.au", "edu.au", "co.jp",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UrlError {
    #[error("malformed url {0:?}")]
    MalformedUrl(String),
    #[error("unsupported scheme {scheme:?} in {url:?}")]
    UnsupportedScheme { url: String, scheme: String },
}

/// Canonical lookup key for a URL plus one original URL that maps to it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SurtKey {
    pub key: String,
    pub source_url: String,
}

impl SurtKey {
    pub fn as_str(&self) -> &str {
        &self.key
    }

    /// Host part of the key in reversed, comma-separated form (`gov,epa`).
    pub fn host_part(&self) -> &str {
        self.key.split(')').next().unwrap_or("")
    }
}

impl fmt::Display for SurtKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthClass {
    High,
    Deep,
}

impl DepthClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DepthClass::High => "high",
            DepthClass::Deep => "deep",
        }
    }
}

impl fmt::Display for DepthClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathDepthClass {
    pub class: DepthClass,
    pub segment_count: usize,
}

pub const DEFAULT_HIGH_THRESHOLD: usize = 1;

/// Host scoping rule. Suffix and domain matches are label-aligned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeRule {
    pub allowed_suffixes: Vec<String>,
    #[serde(default)]
    pub allowed_domains: Option<Vec<String>>,
}

impl ScopeRule {
    pub fn suffixes<I, S>(suffixes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScopeRule {
            allowed_suffixes: suffixes.into_iter().map(Into::into).collect(),
            allowed_domains: None,
        }
    }

    pub fn with_domains<I, S>(mut self, domains: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.allowed_domains = Some(domains.into_iter().map(Into::into).collect());
        self
    }

    pub fn matches_host(&self, host: &str) -> bool {
        let host = normalize_host(host);
        let suffix_ok = self
            .allowed_suffixes
            .iter()
            .any(|s| host_has_suffix(&host, s));
        if !suffix_ok {
            return false;
        }
        match &self.allowed_domains {
            None => true,
            Some(domains) => domains.iter().any(|d| host_has_suffix(&host, d)),
        }
    }
}

impl Default for ScopeRule {
    fn default() -> Self {
        ScopeRule::suffixes([".gov"])
    }
}

/// URL canonicalizer carrying the session-parameter deny-list.
#[derive(Debug, Clone)]
pub struct Canonicalizer {
    session_params: Vec<String>,
}

impl Default for Canonicalizer {
    fn default() -> Self {
        Canonicalizer::new(DEFAULT_SESSION_PARAMS.iter().copied())
    }
}

impl Canonicalizer {
    pub fn new<I, S>(session_params: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Canonicalizer {
            session_params: session_params
                .into_iter()
                .map(|s| s.as_ref().to_ascii_lowercase())
                .collect(),
        }
    }

    pub fn is_session_param(&self, name: &str) -> bool {
        let name = name.to_ascii_lowercase();
        self.session_params.iter().any(|p| *p == name)
    }

    pub fn canonicalize(&self, input: &str) -> Result<SurtKey, UrlError> {
        let url = parse_http_url(input)?;
        Ok(SurtKey {
            key: self.surt_of(&url),
            source_url: url.to_string(),
        })
    }

    pub fn surt_of(&self, url: &Url) -> String {
        let mut key = String::with_capacity(url.as_str().len());
        key.push_str(&reversed_host(url));
        if let Some(port) = url.port() {
            key.push(':');
            key.push_str(&port.to_string());
        }
        key.push(')');

        let path = self.strip_path_params(url.path()).to_ascii_lowercase();
        if path.len() > 1 && path.ends_with('/') {
            key.push_str(path.trim_end_matches('/'));
            if key.ends_with(')') {
                key.push('/');
            }
        } else if path.is_empty() {
            key.push('/');
        } else {
            key.push_str(&path);
        }

        if let Some(query) = url.query() {
            let mut params: Vec<String> = query
                .split('&')
                .filter(|p| !p.is_empty())
                .filter(|p| {
                    let name = p.split('=').next().unwrap_or("");
                    !self.is_session_param(name)
                })
                .map(|p| p.to_ascii_lowercase())
                .collect();
            params.sort();
            if !params.is_empty() {
                key.push('?');
                key.push_str(&params.join("&"));
            }
        }
        key
    }

    /// Returns true when any query or `;name=` path parameter is deny-listed.
    pub fn has_session_param(&self, url: &Url) -> bool {
        let in_query = url.query_pairs().any(|(k, _)| self.is_session_param(&k));
        let in_path = url.path().split(';').skip(1).any(|param| {
            let name = param.split('=').next().unwrap_or("");
            self.is_session_param(name)
        });
        in_query || in_path
    }

    fn strip_path_params<'a>(&self, path: &'a str) -> std::borrow::Cow<'a, str> {
        if !path.contains(';') {
            return path.into();
        }
        path.split('/')
            .map(|segment| {
                let mut parts = segment.split(';');
                let mut kept = parts.next().unwrap_or("").to_string();
                for param in parts {
                    if !self.is_session_param(param.split('=').next().unwrap_or("")) {
                        kept.push(';');
                        kept.push_str(param);
                    }
                }
                kept
            })
            .collect::<Vec<_>>()
            .join("/")
            .into()
    }
}

/// Canonicalizes with the default session-parameter deny-list.
pub fn canonicalize(url: &str) -> Result<SurtKey, UrlError> {
    Canonicalizer::default().canonicalize(url)
}

/// Parses an absolute http(s) URL.
pub fn parse_http_url(input: &str) -> Result<Url, UrlError> {
    let trimmed = input.trim();
    let url = Url::parse(trimmed).map_err(|_| UrlError::MalformedUrl(input.to_string()))?;
    match url.scheme() {
        "http" | "https" => {}
        other => {
            return Err(UrlError::UnsupportedScheme {
                url: input.to_string(),
                scheme: other.to_string(),
            })
        }
    }
    if url.host_str().map_or(true, str::is_empty) {
        return Err(UrlError::MalformedUrl(input.to_string()));
    }
    Ok(url)
}

/// Like [`parse_http_url`] but accepts scheme-less input such as `epa.gov/acidrain`.
pub fn parse_lenient(input: &str) -> Result<Url, UrlError> {
    let trimmed = input.trim();
    if trimmed.contains("://") {
        parse_http_url(trimmed)
    } else {
        parse_http_url(&format!("http://{trimmed}"))
    }
}

pub fn classify_depth(url: &str, high_threshold: usize) -> Result<PathDepthClass, UrlError> {
    let url = parse_http_url(url)?;
    Ok(depth_of(&url, high_threshold))
}

pub fn depth_of(url: &Url, high_threshold: usize) -> PathDepthClass {
    let segment_count = segment_count(url);
    let class = if segment_count <= high_threshold {
        DepthClass::High
    } else {
        DepthClass::Deep
    };
    PathDepthClass {
        class,
        segment_count,
    }
}

pub fn segment_count(url: &Url) -> usize {
    url.path_segments()
        .map(|segs| segs.filter(|s| !s.is_empty()).count())
        .unwrap_or(0)
}

pub fn in_scope(url: &str, rule: &ScopeRule) -> Result<bool, UrlError> {
    let url = parse_http_url(url)?;
    Ok(url.host_str().is_some_and(|h| rule.matches_host(h)))
}

/// Lowercased host with any trailing dot removed.
pub fn normalize_host(host: &str) -> String {
    host.trim_end_matches('.').to_ascii_lowercase()
}

/// Host with a leading `www`/`wwwN` label removed.
pub fn strip_www(host: &str) -> &str {
    if let Some((first, rest)) = host.split_once('.') {
        let is_www = first
            .strip_prefix("www")
            .is_some_and(|digits| digits.chars().all(|c| c.is_ascii_digit()));
        if is_www && rest.contains('.') {
            return rest;
        }
    }
    host
}

/// Label-aligned suffix test: `.gov` and `gov` both match `epa.gov` but not `notgov.com`.
pub fn host_has_suffix(host: &str, suffix: &str) -> bool {
    let suffix = suffix.trim_start_matches('.').to_ascii_lowercase();
    if suffix.is_empty() {
        return true;
    }
    host == suffix
        || host
            .strip_suffix(suffix.as_str())
            .is_some_and(|rest| rest.ends_with('.'))
}

/// Registrable domain (public suffix plus one label) of a host.
pub fn registrable_domain(host: &str) -> String {
    let host = normalize_host(host);
    let labels: Vec<&str> = host.split('.').collect();
    if labels.len() <= 2 {
        return host;
    }
    let last_two = labels[labels.len() - 2..].join(".");
    let take = if MULTI_LABEL_SUFFIXES.contains(&last_two.as_str()) {
        3
    } else {
        2
    };
    labels[labels.len().saturating_sub(take)..].join(".")
}

fn reversed_host(url: &Url) -> String {
    match url.host() {
        Some(Host::Domain(d)) => {
            let host = normalize_host(d);
            let host = strip_www(&host);
            host.rsplit('.').collect::<Vec<_>>().join(",")
        }
        Some(Host::Ipv4(ip)) => ip.to_string(),
        Some(Host::Ipv6(ip)) => format!("[{ip}]"),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(u: &str) -> String {
        canonicalize(u).unwrap().key
    }

    #[test]
    fn surt_examples() {
        assert_eq!(key("http://www.epa.gov/acidrain"), "gov,epa)/acidrain");
        assert_eq!(key("http://epa.gov/"), key("https://WWW.EPA.GOV/"));
        assert_eq!(key("http://fire.ak.blm.gov/"), "gov,blm,ak,fire)/");
    }

    // Vectors from the Internet Archive surt library test-suite.
    #[test]
    fn reference_vectors() {
        assert_eq!(key("http://www.archive.org/index.html"), "org,archive)/index.html");
        assert_eq!(key("http://archive.org/"), "org,archive)/");
        assert_eq!(key("http://archive.org/goo/"), "org,archive)/goo");
        assert_eq!(key("http://archive.org/goo/?"), "org,archive)/goo");
        assert_eq!(key("http://archive.org/goo/?b&a"), "org,archive)/goo?a&b");
        assert_eq!(key("http://archive.org/goo/?a=2&b&a=1"), "org,archive)/goo?a=1&a=2&b");
        assert_eq!(key("http://www.example.com:8080/a"), "com,example:8080)/a");
        assert_eq!(key("https://www.example.com:443/a"), "com,example)/a");
        assert_eq!(key("http://www23.example.com/x#frag"), "com,example)/x");
        assert_eq!(key("http://192.168.1.1/a"), "192.168.1.1)/a");
    }

    #[test]
    fn session_params_are_stripped() {
        assert_eq!(
            key("http://www.blm.gov/a.jsp;jsessionid=ABC123?x=1&PHPSESSID=9"),
            "gov,blm)/a.jsp?x=1"
        );
        assert_eq!(key("http://blm.gov/a?sid=4&b=2"), "gov,blm)/a?b=2");
    }

    #[test]
    fn url_errors() {
        assert!(matches!(canonicalize("not a url"), Err(UrlError::MalformedUrl(_))));
        assert!(matches!(
            canonicalize("ftp://epa.gov/x"),
            Err(UrlError::UnsupportedScheme { .. })
        ));
        assert!(parse_lenient("epa.gov/acidrain").is_ok());
    }

    #[test]
    fn depth_examples() {
        let d = classify_depth("http://www.epa.gov/acidrain", 1).unwrap();
        assert_eq!((d.class, d.segment_count), (DepthClass::High, 1));
        let d = classify_depth("http://www.nps.gov/history/archeology/EAM/landmarks.htm", 1).unwrap();
        assert_eq!((d.class, d.segment_count), (DepthClass::Deep, 4));
        let d = classify_depth("http://osmre.gov/", 1).unwrap();
        assert_eq!((d.class, d.segment_count), (DepthClass::High, 0));
    }

    #[test]
    fn scope_examples() {
        let gov = ScopeRule::suffixes([".gov"]);
        assert!(in_scope("http://www.usgs.gov/x", &gov).unwrap());
        assert!(!in_scope("http://example.com/x", &gov).unwrap());
        assert!(!in_scope("http://notgov.com/x", &gov).unwrap());
        let usda = ScopeRule::suffixes([".gov"]).with_domains(["usda.gov"]);
        assert!(in_scope("http://fs.usda.gov/x", &usda).unwrap());
    }

    // Hand-built table: label-aligned walk expectations for ten hosts.
    #[test]
    fn scope_table() {
        let rule = ScopeRule::suffixes([".gov"]).with_domains(["usda.gov", "epa.gov"]);
        let table = [
            ("fs.usda.gov", true),
            ("usda.gov", true),
            ("www.usda.gov", true),
            ("nrcs.usda.gov", true),
            ("epa.gov", true),
            ("yosemite.epa.gov", true),
            ("notusda.gov", false),
            ("usda.gov.evil.com", false),
            ("noaa.gov", false),
            ("epa.gov.", true),
        ];
        for (host, expected) in table {
            assert_eq!(rule.matches_host(host), expected, "{host}");
        }
    }

    #[test]
    fn registrable_domains() {
        assert_eq!(registrable_domain("techtransfer.osmre.gov"), "osmre.gov");
        assert_eq!(registrable_domain("www.fs.fed.us"), "fs.fed.us");
        assert_eq!(registrable_domain("epa.gov"), "epa.gov");
    }
}
