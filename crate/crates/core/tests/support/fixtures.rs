//! Recorded MediaWiki responses and a replay client serving them.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use grader_core::sources::{DEFAULT_ENDPOINT, ExtractCache, KeywordSet, MediaWikiClient};
use grader_core::transport::ReplayTransport;
use url::Url;

pub const DHAKA_QUESTION: &str = "What do you know about University of Dhaka?";
pub const DHAKA_TITLE: &str = "University of Dhaka";
pub const GIBBERISH_KEYWORDS: [&str; 2] = ["zzqxv", "qqqq"];

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_dir().join(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn keywords(words: &[&str]) -> KeywordSet {
    KeywordSet::new(words.iter().map(|w| w.to_string()).collect()).unwrap()
}

/// A transport that knows the Dhaka search and extract and the empty search.
pub fn replay_transport() -> Arc<ReplayTransport> {
    let probe = MediaWikiClient::new(
        Url::parse(DEFAULT_ENDPOINT).unwrap(),
        Arc::new(ReplayTransport::new()),
        ExtractCache::new(std::env::temp_dir()),
    );
    Arc::new(
        ReplayTransport::new()
            .with_get(
                probe.search_url(&keywords(&["university", "dhaka"])).as_str(),
                fixture("mediawiki/search_university_dhaka.json"),
            )
            .with_get(
                probe.extract_url(DHAKA_TITLE).as_str(),
                fixture("mediawiki/extract_university_of_dhaka.json"),
            )
            .with_get(
                probe.search_url(&keywords(&GIBBERISH_KEYWORDS)).as_str(),
                fixture("mediawiki/search_empty.json"),
            ),
    )
}

pub fn client(cache_dir: &Path, transport: Arc<ReplayTransport>) -> MediaWikiClient {
    MediaWikiClient::new(Url::parse(DEFAULT_ENDPOINT).unwrap(), transport, ExtractCache::new(cache_dir))
        .min_interval(Duration::ZERO)
}
