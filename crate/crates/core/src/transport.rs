//! Blocking HTTP transport used by the network clients, plus a replaying
//! transport that serves recorded response bodies.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;
use url::Url;

pub const DEFAULT_USER_AGENT: &str = concat!(
    "grader/",
    env!("CARGO_PKG_VERSION"),
    " (answer-script grading; offline-first)"
);

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("request to {url} failed: {reason}")]
    Request { url: String, reason: String },
    #[error("no recorded response for {0}")]
    Unrecorded(String),
}

pub trait Transport: Send + Sync {
    fn get(&self, url: &Url) -> Result<String, TransportError>;

    /// POST an `application/x-www-form-urlencoded` body.
    fn post_form(&self, url: &Url, form: &[(&str, &str)]) -> Result<String, TransportError>;
}

/// Real network transport.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(user_agent: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .user_agent(user_agent)
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self { agent }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new(DEFAULT_USER_AGENT, Duration::from_secs(30))
    }
}

impl std::fmt::Debug for HttpTransport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpTransport").finish_non_exhaustive()
    }
}

fn request_error(url: &Url, err: ureq::Error) -> TransportError {
    TransportError::Request {
        url: url.to_string(),
        reason: err.to_string(),
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &Url) -> Result<String, TransportError> {
        self.agent
            .get(url.as_str())
            .call()
            .and_then(|mut resp| resp.body_mut().read_to_string())
            .map_err(|e| request_error(url, e))
    }

    fn post_form(&self, url: &Url, form: &[(&str, &str)]) -> Result<String, TransportError> {
        self.agent
            .post(url.as_str())
            .send_form(form.iter().copied())
            .and_then(|mut resp| resp.body_mut().read_to_string())
            .map_err(|e| request_error(url, e))
    }
}

/// Serves pre-recorded bodies keyed by request. GET requests are keyed by
/// the full URL; POST requests by the URL, a newline, and the urlencoded
/// form body. Every call, hit or miss, is counted and logged.
#[derive(Debug, Default)]
pub struct ReplayTransport {
    responses: HashMap<String, String>,
    calls: AtomicUsize,
    log: Mutex<Vec<String>>,
}

impl ReplayTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_get(mut self, url: &str, body: impl Into<String>) -> Self {
        self.responses.insert(url.to_owned(), body.into());
        self
    }

    pub fn with_post(mut self, url: &str, form: &[(&str, &str)], body: impl Into<String>) -> Self {
        self.responses.insert(post_key(url, form), body.into());
        self
    }

    /// Number of requests issued so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<String> {
        self.log.lock().expect("replay log poisoned").clone()
    }

    fn serve(&self, key: String) -> Result<String, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.log.lock().expect("replay log poisoned").push(key.clone());
        self.responses
            .get(&key)
            .cloned()
            .ok_or(TransportError::Unrecorded(key))
    }
}

fn post_key(url: &str, form: &[(&str, &str)]) -> String {
    let body = url::form_urlencoded::Serializer::new(String::new())
        .extend_pairs(form.iter().copied())
        .finish();
    format!("{url}\n{body}")
}

impl Transport for ReplayTransport {
    fn get(&self, url: &Url) -> Result<String, TransportError> {
        self.serve(url.to_string())
    }

    fn post_form(&self, url: &Url, form: &[(&str, &str)]) -> Result<String, TransportError> {
        self.serve(post_key(url.as_str(), form))
    }
}

/// Spaces successive requests at least `min_interval` apart. Callers are
/// serialized: the lock is held while waiting.
#[derive(Debug)]
pub struct RateLimiter {
    min_interval: Duration,
    last: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(min_interval: Duration) -> Self {
        Self {
            min_interval,
            last: Mutex::new(None),
        }
    }

    pub fn min_interval(&self) -> Duration {
        self.min_interval
    }

    /// Blocks until a request may be issued, then runs it while still holding
    /// the slot.
    pub fn run<T>(&self, request: impl FnOnce() -> T) -> T {
        let mut last = self.last.lock().expect("rate limiter poisoned");
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < self.min_interval {
                thread::sleep(self.min_interval - elapsed);
            }
        }
        let out = request();
        *last = Some(Instant::now());
        out
    }
}

/// Caps the number of concurrently outstanding requests.
#[derive(Debug)]
pub struct InFlightLimit {
    max: usize,
    current: Mutex<usize>,
    freed: Condvar,
}

pub struct InFlightPermit<'a> {
    limit: &'a InFlightLimit,
}

impl InFlightLimit {
    pub fn new(max: usize) -> Self {
        Self {
            max: max.max(1),
            current: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn max(&self) -> usize {
        self.max
    }

    pub fn acquire(&self) -> InFlightPermit<'_> {
        let mut current = self.current.lock().expect("in-flight limit poisoned");
        while *current >= self.max {
            current = self.freed.wait(current).expect("in-flight limit poisoned");
        }
        *current += 1;
        InFlightPermit { limit: self }
    }
}

impl Drop for InFlightPermit<'_> {
    fn drop(&mut self) {
        let mut current = self.limit.current.lock().expect("in-flight limit poisoned");
        *current -= 1;
        self.limit.freed.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_serves_and_counts() {
        let t = ReplayTransport::new()
            .with_get("https://example.org/api?a=1", "{}")
            .with_post("https://example.org/check", &[("text", "hi there")], "[]");
        let get = Url::parse("https://example.org/api?a=1").unwrap();
        let post = Url::parse("https://example.org/check").unwrap();
        assert_eq!(t.get(&get).unwrap(), "{}");
        assert_eq!(t.post_form(&post, &[("text", "hi there")]).unwrap(), "[]");
        assert!(matches!(
            t.get(&Url::parse("https://example.org/other").unwrap()),
            Err(TransportError::Unrecorded(_))
        ));
        assert_eq!(t.calls(), 3);
        assert_eq!(t.requests()[1], "https://example.org/check\ntext=hi+there");
    }

    #[test]
    fn rate_limiter_spaces_requests() {
        let limiter = RateLimiter::new(Duration::from_millis(30));
        let start = Instant::now();
        for _ in 0..3 {
            limiter.run(|| ());
        }
        assert!(start.elapsed() >= Duration::from_millis(60));
    }

    #[test]
    fn in_flight_limit_caps_concurrency() {
        use std::sync::Arc;
        let limit = Arc::new(InFlightLimit::new(2));
        let active = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let (limit, active, peak) = (limit.clone(), active.clone(), peak.clone());
                thread::spawn(move || {
                    let _permit = limit.acquire();
                    let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    thread::sleep(Duration::from_millis(5));
                    active.fetch_sub(1, Ordering::SeqCst);
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
