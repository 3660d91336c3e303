//! Blocking HTTP client for real archives (or the fixture server).

use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use ureq::Agent;

use crate::backend::{
    BackendError, CdxBackend, ProvenanceBackend, ProvenanceInfo, Replay, ReplayBackend,
    TimeMapBackend,
};
use crate::cdx::CdxQuery;
use crate::epoch::Timestamp;
use crate::memento::{render_timemap, ArchiveEndpoint, CaptureRef, WAYBACK_ID};
use crate::url_keys::Canonicalizer;

const MAX_REPLAY_HOPS: usize = 8;

/// Base URLs of the live interfaces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiveEndpoints {
    /// CDX server endpoint.
    pub cdx: String,
    /// Replay prefix; requests go to `{replay}/{timestamp}id_/{url}`.
    pub replay: String,
    /// Provenance lookup returning `{uri_m, collections, partner}` JSON;
    /// receives the URI-M as the `uri_m` query parameter.
    #[serde(default)]
    pub provenance: Option<String>,
    /// Template for the URI-Ms recorded in captures.
    #[serde(default = "default_uri_m_template")]
    pub uri_m_template: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_uri_m_template() -> String {
    "https://web.archive.org/web/{timestamp}/{url}".into()
}

fn default_timeout() -> u64 {
    60
}

impl Default for LiveEndpoints {
    fn default() -> Self {
        LiveEndpoints {
            cdx: "https://web.archive.org/cdx/search/cdx".into(),
            replay: "https://web.archive.org/web".into(),
            provenance: None,
            uri_m_template: default_uri_m_template(),
            timeout_secs: default_timeout(),
        }
    }
}

pub struct LiveBackend {
    endpoints: LiveEndpoints,
    agent: Agent,
    canon: Canonicalizer,
}

fn transport(e: ureq::Error) -> BackendError {
    BackendError::Transport(e.to_string())
}

fn check_status(status: u16, url: &str) -> Result<(), BackendError> {
    match status {
        200..=299 => Ok(()),
        429 => Err(BackendError::RateLimited),
        500..=599 => Err(BackendError::Transport(format!("{url}: HTTP {status}"))),
        _ => Err(BackendError::Protocol(format!("{url}: HTTP {status}"))),
    }
}

impl LiveBackend {
    pub fn new(endpoints: LiveEndpoints) -> Self {
        let config = Agent::config_builder()
            .http_status_as_error(false)
            .max_redirects(0)
            .max_redirects_will_error(false)
            .timeout_global(Some(Duration::from_secs(endpoints.timeout_secs)))
            .build();
        LiveBackend {
            endpoints,
            agent: Agent::new_with_config(config),
            canon: Canonicalizer::default(),
        }
    }

    pub fn endpoints(&self) -> &LiveEndpoints {
        &self.endpoints
    }

    fn cdx_request(&self, query: &CdxQuery, extra: &[(&str, String)]) -> Result<String, BackendError> {
        let mut req = self.agent.get(&self.endpoints.cdx);
        for (k, v) in query.to_params().into_iter() {
            req = req.query(k, v);
        }
        for (k, v) in extra {
            req = req.query(*k, v);
        }
        let mut resp = req.call().map_err(transport)?;
        check_status(resp.status().as_u16(), &self.endpoints.cdx)?;
        resp.body_mut().read_to_string().map_err(transport)
    }

    fn get_text(&self, url: &str) -> Result<(u16, String), BackendError> {
        let mut resp = self.agent.get(url).call().map_err(transport)?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(transport)?;
        Ok((status, body))
    }
}

impl CdxBackend for LiveBackend {
    fn num_pages(&self, query: &CdxQuery) -> Result<u32, BackendError> {
        let body = self.cdx_request(query, &[("showNumPages", "true".into())])?;
        body.trim()
            .parse()
            .map_err(|_| BackendError::Protocol(format!("page count {:?} is not a number", body.trim())))
    }

    fn fetch_page(&self, query: &CdxQuery, page: u32) -> Result<String, BackendError> {
        self.cdx_request(query, &[("page", page.to_string())])
    }
}

impl TimeMapBackend for LiveBackend {
    fn timemap(&self, archive: &ArchiveEndpoint, url: &str) -> Result<String, BackendError> {
        let tm = archive.timemap_url(url);
        let (status, body) = self.get_text(&tm)?;
        if status == 404 {
            return Ok(render_timemap(url, &tm, &[]));
        }
        check_status(status, &tm)?;
        Ok(body)
    }
}

impl ReplayBackend for LiveBackend {
    fn replay(&self, url: &str, at: DateTime<Utc>) -> Result<Option<Replay>, BackendError> {
        let original = self
            .canon
            .canonicalize(url)
            .map_err(|e| BackendError::Protocol(e.to_string()))?;
        let mut next = format!(
            "{}/{}id_/{}",
            self.endpoints.replay.trim_end_matches('/'),
            Timestamp::new(at),
            url
        );
        for _ in 0..MAX_REPLAY_HOPS {
            let mut resp = self.agent.get(&next).call().map_err(transport)?;
            let status = resp.status().as_u16();
            let header = |name: &str| {
                resp.headers()
                    .get(name)
                    .and_then(|v| v.to_str().ok())
                    .map(str::to_string)
            };
            if let Some(md) = header("memento-datetime") {
                let datetime = DateTime::parse_from_rfc2822(&md)
                    .map_err(|e| BackendError::Protocol(format!("Memento-Datetime {md:?}: {e}")))?
                    .with_timezone(&Utc);
                let body = resp.body_mut().read_to_string().map_err(transport)?;
                let ts = Timestamp::new(datetime);
                return Ok(Some(Replay {
                    capture: CaptureRef {
                        original: original.clone(),
                        archive_id: WAYBACK_ID.into(),
                        datetime,
                        status: Some(status),
                        uri_m: self
                            .endpoints
                            .uri_m_template
                            .replace("{timestamp}", &ts.to_string())
                            .replace("{url}", url),
                    },
                    body,
                }));
            }
            match (status, header("location")) {
                (300..=399, Some(loc)) => {
                    next = url::Url::parse(&next)
                        .and_then(|base| base.join(&loc))
                        .map_err(|e| BackendError::Protocol(e.to_string()))?
                        .to_string();
                }
                (404, _) => return Ok(None),
                _ => {
                    check_status(status, &next)?;
                    return Err(BackendError::Protocol(format!(
                        "{next}: response without Memento-Datetime"
                    )));
                }
            }
        }
        Err(BackendError::Protocol(format!("{url}: too many replay redirects")))
    }
}

impl ProvenanceBackend for LiveBackend {
    fn provenance(&self, uri_m: &str) -> Result<Option<ProvenanceInfo>, BackendError> {
        let Some(endpoint) = &self.endpoints.provenance else {
            return Ok(None);
        };
        let mut resp = self
            .agent
            .get(endpoint)
            .query("uri_m", uri_m)
            .call()
            .map_err(transport)?;
        let status = resp.status().as_u16();
        if status == 404 {
            return Ok(None);
        }
        check_status(status, endpoint)?;
        let body = resp.body_mut().read_to_string().map_err(transport)?;
        serde_json::from_str(&body)
            .map(Some)
            .map_err(|e| BackendError::Protocol(format!("provenance body: {e}")))
    }
}
