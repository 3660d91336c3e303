//! The fixture store over HTTP, in the Wayback dialect the live client speaks.

use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::Deserialize;
use tempex::cdx::CdxQuery;
use tempex::epoch::Timestamp;
use tempex::fixture::{ArchiveRequest, ArchiveResponse, FixtureStore};
use tempex::memento::ArchiveEndpoint;

pub fn router(store: Arc<FixtureStore>) -> Router {
    Router::new()
        .route("/cdx/search/cdx", get(cdx))
        .route("/web/{*rest}", get(replay))
        .route("/timemap/link/{*rest}", get(timemap))
        .route("/provenance", get(provenance))
        .with_state(store)
}

fn text(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "text/plain; charset=utf-8")], body).into_response()
}

async fn cdx(State(store): State<Arc<FixtureStore>>, Query(params): Query<Vec<(String, String)>>) -> Response {
    let query = match CdxQuery::from_params(params.iter().map(|(k, v)| (k.as_str(), v.as_str()))) {
        Ok(q) => q,
        Err(e) => return text(StatusCode::BAD_REQUEST, e),
    };
    let get = |name: &str| params.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str());
    let request = if get("showNumPages") == Some("true") {
        ArchiveRequest::CdxPageCount(query)
    } else {
        let page = query.page.unwrap_or(0);
        ArchiveRequest::CdxPage(query, page)
    };
    match store.serve(&request) {
        ArchiveResponse::PageCount(n) => text(StatusCode::OK, format!("{n}\n")),
        ArchiveResponse::Text(t) => text(StatusCode::OK, t),
        other => text(StatusCode::INTERNAL_SERVER_ERROR, format!("{other:?}")),
    }
}

/// Everything after `prefix` in the request target, query included.
fn tail(uri: &Uri, prefix: &str) -> Option<String> {
    let rest = uri.path().strip_prefix(prefix)?.to_string();
    Some(match uri.query() {
        Some(q) => format!("{rest}?{q}"),
        None => rest,
    })
}

fn parse_datetime(raw: &str) -> Option<DateTime<Utc>> {
    let digits = raw.trim_end_matches("id_");
    if digits.is_empty() || digits.len() > 14 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    const PAD: &str = "00000101000000";
    let full = format!("{digits}{}", &PAD[digits.len()..]);
    Timestamp::parse14(&full).ok().map(|t| t.datetime())
}

async fn replay(State(store): State<Arc<FixtureStore>>, uri: Uri) -> Response {
    let Some((raw_ts, url)) = tail(&uri, "/web/").and_then(|t| t.split_once('/').map(|(a, b)| (a.to_string(), b.to_string())))
    else {
        return text(StatusCode::BAD_REQUEST, "expected /web/<timestamp>/<url>".into());
    };
    let Some(at) = parse_datetime(&raw_ts) else {
        return text(StatusCode::BAD_REQUEST, format!("bad timestamp {raw_ts:?}"));
    };
    match store.serve(&ArchiveRequest::Replay { url, at }) {
        ArchiveResponse::Replay(Some(r)) => {
            let status = r
                .capture
                .status
                .and_then(|s| StatusCode::from_u16(s).ok())
                .unwrap_or(StatusCode::OK);
            let md = r.capture.datetime.format("%a, %d %b %Y %H:%M:%S GMT").to_string();
            let mut resp = (status, r.body).into_response();
            let headers = resp.headers_mut();
            headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("text/html; charset=utf-8"));
            if let Ok(v) = HeaderValue::from_str(&md) {
                headers.insert("memento-datetime", v);
            }
            resp
        }
        _ => text(StatusCode::NOT_FOUND, "no capture".into()),
    }
}

async fn timemap(State(store): State<Arc<FixtureStore>>, uri: Uri) -> Response {
    let Some(url) = tail(&uri, "/timemap/link/") else {
        return text(StatusCode::BAD_REQUEST, "expected /timemap/link/<url>".into());
    };
    let archive = ArchiveEndpoint::wayback();
    match store.serve(&ArchiveRequest::TimeMap { archive, url }) {
        ArchiveResponse::Text(t) => (StatusCode::OK, [(header::CONTENT_TYPE, "application/link-format")], t).into_response(),
        other => text(StatusCode::INTERNAL_SERVER_ERROR, format!("{other:?}")),
    }
}

#[derive(Deserialize)]
struct ProvenanceParams {
    uri_m: String,
}

async fn provenance(State(store): State<Arc<FixtureStore>>, Query(p): Query<ProvenanceParams>) -> Response {
    match store.serve(&ArchiveRequest::Provenance { uri_m: p.uri_m }) {
        ArchiveResponse::Provenance(Some(info)) => Json(info).into_response(),
        _ => text(StatusCode::NOT_FOUND, "unknown memento".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_timestamps() {
        assert_eq!(parse_datetime("20080102120000id_").unwrap().to_rfc3339(), "2008-01-02T12:00:00+00:00");
        assert_eq!(parse_datetime("2008").unwrap().to_rfc3339(), "2008-01-01T00:00:00+00:00");
        assert!(parse_datetime("x2008").is_none());
        assert!(parse_datetime("").is_none());
    }
}
