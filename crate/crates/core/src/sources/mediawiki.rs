//! Open-domain reference retrieval through the MediaWiki action API.
//!
//! A fetch is two GET requests against the configured `api.php` endpoint,
//! both with `format=json&formatversion=2`:
//!
//! 1. search: `action=query&list=search&srsearch=<keywords>&srnamespace=0&srlimit=1`;
//!    the first hit's `query.search[0].title` is the resolved page.
//! 2. extract: `action=query&prop=extracts&explaintext=1&redirects=1&titles=<title>`;
//!    `query.pages[0].extract` is the reference text and `query.pages[0].title`
//!    the final (post-redirect) title.
//!
//! Results are cached per keyword list; a warm cache is served without
//! touching the network, which makes reruns reproducible and offline-safe.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, SystemTime};

use serde_json::Value;
use url::Url;

use super::cache::{CachedExtract, ExtractCache};
use super::{KeywordSet, ReferenceAnswer, SourceError, SourceKind};
use crate::transport::{RateLimiter, Transport};

pub const DEFAULT_ENDPOINT: &str = "https://en.wikipedia.org/w/api.php";
pub const DEFAULT_MIN_INTERVAL: Duration = Duration::from_secs(1);

pub struct MediaWikiClient {
    endpoint: Url,
    transport: Arc<dyn Transport>,
    cache: ExtractCache,
    offline: bool,
    limiter: RateLimiter,
}

impl fmt::Debug for MediaWikiClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MediaWikiClient")
            .field("endpoint", &self.endpoint.as_str())
            .field("cache", &self.cache.dir())
            .field("offline", &self.offline)
            .field("min_interval", &self.limiter.min_interval())
            .finish()
    }
}

/// A fetched reference and whether it came from the cache.
#[derive(Debug, Clone)]
pub struct FetchOutcome {
    pub reference: ReferenceAnswer,
    pub from_cache: bool,
}

impl MediaWikiClient {
    pub fn new(endpoint: Url, transport: Arc<dyn Transport>, cache: ExtractCache) -> Self {
        Self {
            endpoint,
            transport,
            cache,
            offline: false,
            limiter: RateLimiter::new(DEFAULT_MIN_INTERVAL),
        }
    }

    /// Forbids network use; only cache hits succeed.
    pub fn offline(mut self, offline: bool) -> Self {
        self.offline = offline;
        self
    }

    pub fn min_interval(mut self, interval: Duration) -> Self {
        self.limiter = RateLimiter::new(interval);
        self
    }

    pub fn cache(&self) -> &ExtractCache {
        &self.cache
    }

    pub fn search_url(&self, keywords: &KeywordSet) -> Url {
        self.api_url(&[
            ("list", "search"),
            ("srsearch", &keywords.joined()),
            ("srnamespace", "0"),
            ("srlimit", "1"),
        ])
    }

    pub fn extract_url(&self, title: &str) -> Url {
        self.api_url(&[
            ("prop", "extracts"),
            ("explaintext", "1"),
            ("redirects", "1"),
            ("titles", title),
        ])
    }

    fn api_url(&self, params: &[(&str, &str)]) -> Url {
        let mut url = self.endpoint.clone();
        url.query_pairs_mut()
            .clear()
            .append_pair("action", "query")
            .append_pair("format", "json")
            .append_pair("formatversion", "2")
            .extend_pairs(params.iter().copied());
        url
    }

    pub fn fetch(&self, keywords: &KeywordSet) -> Result<ReferenceAnswer, SourceError> {
        self.fetch_with_origin(keywords).map(|o| o.reference)
    }

    pub fn fetch_with_origin(&self, keywords: &KeywordSet) -> Result<FetchOutcome, SourceError> {
        if let Some(hit) = self.cache.get(keywords).map_err(SourceError::Cache)? {
            return Ok(FetchOutcome {
                reference: open_domain(hit),
                from_cache: true,
            });
        }
        if self.offline {
            return Err(SourceError::Network(format!(
                "offline mode and no cached extract for [{}]",
                keywords.joined()
            )));
        }

        let search = self.request(&self.search_url(keywords))?;
        let title = parse_search(&search)?
            .ok_or_else(|| SourceError::NoPageFound(keywords.joined()))?;
        let body = self.request(&self.extract_url(&title))?;
        let (title, text) = parse_extract(&body)?.ok_or(SourceError::NoPageFound(title))?;

        let entry = CachedExtract {
            title,
            text,
            fetched_at: SystemTime::now(),
        };
        self.cache.put(keywords, &entry).map_err(SourceError::Cache)?;
        Ok(FetchOutcome {
            reference: open_domain(entry),
            from_cache: false,
        })
    }

    fn request(&self, url: &Url) -> Result<String, SourceError> {
        self.limiter
            .run(|| self.transport.get(url))
            .map_err(|e| SourceError::Network(e.to_string()))
    }
}

fn open_domain(entry: CachedExtract) -> ReferenceAnswer {
    ReferenceAnswer {
        text: entry.text,
        source: SourceKind::OpenDomain,
        source_detail: entry.title,
        fetched_at: entry.fetched_at,
    }
}

pub fn fetch_open_domain(keywords: &KeywordSet, client: &MediaWikiClient) -> Result<ReferenceAnswer, SourceError> {
    client.fetch(keywords)
}

fn parse_body(body: &str) -> Result<Value, SourceError> {
    let json: Value =
        serde_json::from_str(body).map_err(|e| SourceError::MalformedResponse(e.to_string()))?;
    if let Some(err) = json.get("error") {
        let code = err.get("code").and_then(Value::as_str).unwrap_or("unknown");
        let info = err.get("info").and_then(Value::as_str).unwrap_or("");
        return Err(SourceError::MalformedResponse(format!("API error {code}: {info}")));
    }
    Ok(json)
}

/// Title of the top search hit, `None` when the search is empty.
fn parse_search(body: &str) -> Result<Option<String>, SourceError> {
    let json = parse_body(body)?;
    let hits = json
        .pointer("/query/search")
        .and_then(Value::as_array)
        .ok_or_else(|| SourceError::MalformedResponse("missing query.search".into()))?;
    match hits.first() {
        None => Ok(None),
        Some(hit) => hit
            .get("title")
            .and_then(Value::as_str)
            .filter(|t| !t.is_empty())
            .map(|t| Some(t.to_owned()))
            .ok_or_else(|| SourceError::MalformedResponse("search hit without title".into())),
    }
}

/// `(title, extract)` of the first page, `None` when the page is missing
/// or has no text.
fn parse_extract(body: &str) -> Result<Option<(String, String)>, SourceError> {
    let json = parse_body(body)?;
    let page = json
        .pointer("/query/pages/0")
        .ok_or_else(|| SourceError::MalformedResponse("missing query.pages".into()))?;
    if page.get("missing").is_some() || page.get("invalid").is_some() {
        return Ok(None);
    }
    let title = page
        .get("title")
        .and_then(Value::as_str)
        .ok_or_else(|| SourceError::MalformedResponse("page without title".into()))?;
    let extract = page
        .get("extract")
        .and_then(Value::as_str)
        .ok_or_else(|| SourceError::MalformedResponse("page without extract".into()))?;
    if extract.trim().is_empty() {
        return Ok(None);
    }
    Ok(Some((title.to_owned(), extract.to_owned())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::ReplayTransport;

    fn client(transport: Arc<ReplayTransport>, dir: &std::path::Path) -> MediaWikiClient {
        MediaWikiClient::new(Url::parse(DEFAULT_ENDPOINT).unwrap(), transport, ExtractCache::new(dir))
            .min_interval(Duration::ZERO)
    }

    fn kw(words: &[&str]) -> KeywordSet {
        KeywordSet::new(words.iter().map(|w| w.to_string()).collect()).unwrap()
    }

    #[test]
    fn request_urls_are_stable() {
        let dir = tempfile::tempdir().unwrap();
        let c = client(Arc::new(ReplayTransport::new()), dir.path());
        assert_eq!(
            c.search_url(&kw(&["university", "dhaka"])).as_str(),
            "https://en.wikipedia.org/w/api.php?action=query&format=json&formatversion=2&list=search&srsearch=university+dhaka&srnamespace=0&srlimit=1"
        );
        assert_eq!(
            c.extract_url("University of Dhaka").as_str(),
            "https://en.wikipedia.org/w/api.php?action=query&format=json&formatversion=2&prop=extracts&explaintext=1&redirects=1&titles=University+of+Dhaka"
        );
    }

    #[test]
    fn parse_helpers_cover_edge_shapes() {
        assert_eq!(parse_search(r#"{"query":{"search":[]}}"#).unwrap(), None);
        assert!(matches!(parse_search(r#"{"query":{}}"#), Err(SourceError::MalformedResponse(_))));
        assert!(matches!(parse_search("<html>"), Err(SourceError::MalformedResponse(_))));
        assert!(matches!(
            parse_search(r#"{"error":{"code":"maxlag","info":"Waiting"}}"#),
            Err(SourceError::MalformedResponse(m)) if m.contains("maxlag")
        ));
        assert_eq!(
            parse_extract(r#"{"query":{"pages":[{"title":"X","missing":true}]}}"#).unwrap(),
            None
        );
        assert_eq!(
            parse_extract(r#"{"query":{"pages":[{"title":"X","extract":"  "}]}}"#).unwrap(),
            None
        );
        assert_eq!(
            parse_extract(r#"{"query":{"pages":[{"title":"X","extract":"Body."}]}}"#).unwrap(),
            Some(("X".into(), "Body.".into()))
        );
    }

    #[test]
    fn offline_without_cache_fails_fast() {
        let dir = tempfile::tempdir().unwrap();
        let transport = Arc::new(ReplayTransport::new());
        let c = client(transport.clone(), dir.path()).offline(true);
        assert!(matches!(c.fetch(&kw(&["anything"])), Err(SourceError::Network(_))));
        assert_eq!(transport.calls(), 0);
    }

    #[test]
    fn transport_failure_is_network_error() {
        let dir = tempfile::tempdir().unwrap();
        let c = client(Arc::new(ReplayTransport::new()), dir.path());
        assert!(matches!(c.fetch(&kw(&["anything"])), Err(SourceError::Network(_))));
    }
}
