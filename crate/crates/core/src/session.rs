//! User identification and timeout-based session splitting.
//!
//! Users are `(IP, User-Agent)` pairs, except that an IP presenting more than
//! `ua_threshold` distinct agents is folded into a single collapsed user.
//! Each user's requests are split greedily: a gap strictly longer than the
//! timeout starts a new session.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::access_log::LogRecord;
use crate::archive_uri::{MementoDatetime, ResourceClass, UriKind};
use crate::request::Request;
use crate::stats;

pub const DEFAULT_TIMEOUT_S: i64 = 600;
pub const DEFAULT_UA_THRESHOLD: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UserKey {
    pub ip: String,
    /// Absent for collapsed users and for requests without a User-Agent.
    pub agent: Option<String>,
    /// The IP exceeded the agent threshold; all of its requests are one user.
    pub collapsed: bool,
}

impl UserKey {
    pub fn new(ip: impl Into<String>, agent: Option<impl Into<String>>) -> Self {
        UserKey { ip: ip.into(), agent: agent.map(Into::into), collapsed: false }
    }

    pub fn collapsed(ip: impl Into<String>) -> Self {
        UserKey { ip: ip.into(), agent: None, collapsed: true }
    }
}

/// Maps records onto user keys once the collapsed IPs are known.
#[derive(Debug, Clone, Default)]
pub struct UserDirectory {
    collapsed_ips: HashSet<String>,
}

impl UserDirectory {
    /// Count distinct agents per IP (absent agent counts as one value) and
    /// collapse every IP with strictly more than `threshold`.
    pub fn build<'a>(records: impl IntoIterator<Item = &'a LogRecord>, threshold: usize) -> Self {
        let mut agents: HashMap<&str, HashSet<Option<&str>>> = HashMap::new();
        for r in records {
            agents.entry(r.client_ip.as_str()).or_default().insert(r.user_agent.as_deref());
        }
        let collapsed_ips = agents
            .into_iter()
            .filter(|(_, set)| set.len() > threshold)
            .map(|(ip, _)| ip.to_string())
            .collect();
        UserDirectory { collapsed_ips }
    }

    pub fn is_collapsed(&self, ip: &str) -> bool {
        self.collapsed_ips.contains(ip)
    }

    pub fn key_for(&self, record: &LogRecord) -> UserKey {
        if self.is_collapsed(&record.client_ip) {
            UserKey::collapsed(record.client_ip.clone())
        } else {
            UserKey::new(record.client_ip.clone(), record.user_agent.clone())
        }
    }

    pub fn collapsed_count(&self) -> usize {
        self.collapsed_ips.len()
    }
}

/// Group requests by user. Each user's indices are ordered by request time,
/// ties kept in input order.
pub fn identify_users(requests: &[Request], threshold: usize) -> (UserDirectory, BTreeMap<UserKey, Vec<usize>>) {
    let directory = UserDirectory::build(requests.iter().map(|r| &r.record), threshold);
    let users = group_by_user(&directory, requests, 0..requests.len());
    (directory, users)
}

/// Group the given indices of `requests` by user key, time-ordered.
pub fn group_by_user(
    directory: &UserDirectory,
    requests: &[Request],
    indices: impl IntoIterator<Item = usize>,
) -> BTreeMap<UserKey, Vec<usize>> {
    let mut users: BTreeMap<UserKey, Vec<usize>> = BTreeMap::new();
    for i in indices {
        users.entry(directory.key_for(&requests[i].record)).or_default().push(i);
    }
    for idx in users.values_mut() {
        idx.sort_by_key(|&i| (requests[i].time(), i));
    }
    users
}

/// Greedy timeout split over ascending times.
pub fn split_by_timeout(times: &[i64], timeout: i64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..times.len() {
        if times[i] - times[i - 1] > timeout {
            out.push(start..i);
            start = i;
        }
    }
    if !times.is_empty() {
        out.push(start..times.len());
    }
    out
}

/// Image and HTML request counts behind the image-to-HTML ratio.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "IhRepr", from = "IhRepr")]
pub struct ImageHtmlRatio {
    pub images: u64,
    pub html: u64,
}

impl ImageHtmlRatio {
    /// `+inf` when there is no HTML request at all.
    pub fn value(&self) -> f64 {
        if self.html == 0 {
            f64::INFINITY
        } else {
            self.images as f64 / self.html as f64
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.html == 0
    }
}

#[derive(Serialize, Deserialize)]
struct IhRepr {
    images: u64,
    html: u64,
    /// A number, or the string `"inf"` when `html == 0`.
    ratio: serde_json::Value,
}

impl From<ImageHtmlRatio> for IhRepr {
    fn from(r: ImageHtmlRatio) -> Self {
        let ratio = if r.is_infinite() { "inf".into() } else { r.value().into() };
        IhRepr { images: r.images, html: r.html, ratio }
    }
}

impl From<IhRepr> for ImageHtmlRatio {
    fn from(r: IhRepr) -> Self {
        ImageHtmlRatio { images: r.images, html: r.html }
    }
}

/// Raw (pre-cleaning) requests of the user falling in a session's window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawWindow {
    pub requests: u64,
    pub bytes: u64,
    pub images: u64,
    pub html: u64,
}

impl RawWindow {
    pub fn tally<'a>(raw: impl IntoIterator<Item = &'a Request>) -> Self {
        let mut w = RawWindow::default();
        for r in raw {
            w.requests += 1;
            w.bytes += r.record.bytes_sent;
            match r.target.resource_class {
                ResourceClass::Image => w.images += 1,
                ResourceClass::Html => w.html += 1,
                _ => {}
            }
        }
        w
    }

    pub fn image_html(&self) -> ImageHtmlRatio {
        ImageHtmlRatio { images: self.images, html: self.html }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFeatures {
    /// Number of (cleaned) requests.
    pub length: usize,
    /// Last minus first request time, seconds.
    pub duration_s: i64,
    /// Requests per second; defined only when the duration is positive.
    pub browsing_speed: Option<f64>,
    /// Mean inter-request time; needs at least two requests.
    pub mean_irt: Option<f64>,
    /// Population standard deviation of the inter-request times.
    pub stdev_irt: Option<f64>,
    pub image_html: ImageHtmlRatio,
}

/// Features of a time-ordered, nonempty request run. The image-to-HTML ratio
/// comes from the raw window, since cleaning drops the images it counts.
pub fn compute_features(times: &[i64], raw: &RawWindow) -> SessionFeatures {
    assert!(!times.is_empty(), "session without requests");
    let length = times.len();
    let duration_s = times[length - 1] - times[0];
    let browsing_speed = (duration_s > 0).then(|| length as f64 / duration_s as f64);
    let gaps: Vec<f64> = times.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
    let (mean_irt, stdev_irt) = if gaps.is_empty() {
        (None, None)
    } else {
        let m = stats::mean(&gaps);
        (Some(m), Some(stats::population_stdev(&gaps, m)))
    };
    SessionFeatures { length, duration_s, browsing_speed, mean_irt, stdev_irt, image_html: raw.image_html() }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UriEntry {
    pub kind: UriKind,
    pub uri_r: String,
    pub memento_datetime: Option<MementoDatetime>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub user: UserKey,
    /// Position among this user's sessions, by start time.
    pub index: usize,
    pub requests: Vec<Request>,
    pub features: SessionFeatures,
    pub raw: RawWindow,
}

impl Session {
    pub fn start(&self) -> i64 {
        self.requests[0].time()
    }

    pub fn end(&self) -> i64 {
        self.requests[self.requests.len() - 1].time()
    }

    /// Distinct URI-Ms and URI-Ts visited.
    pub fn uri_set(&self) -> BTreeSet<UriEntry> {
        self.requests
            .iter()
            .filter(|r| r.target.is_pattern_eligible())
            .map(|r| UriEntry {
                kind: r.target.kind,
                uri_r: r.target.uri_r.clone().unwrap_or_default(),
                memento_datetime: r.target.memento_datetime,
            })
            .collect()
    }
}

/// Split one user's time-ordered requests into sessions.
///
/// `raw` holds the same user's pre-cleaning requests, time-ordered; each
/// session's raw window is `[first, last + timeout]`. Windows of consecutive
/// sessions cannot overlap because the gap between them exceeds the timeout.
pub fn sessionize(user: &UserKey, requests: Vec<Request>, raw: &[&Request], timeout: i64) -> Vec<Session> {
    let times: Vec<i64> = requests.iter().map(Request::time).collect();
    let ranges = split_by_timeout(&times, timeout);
    let mut remaining = requests.into_iter();
    let mut cursor = 0;
    ranges
        .into_iter()
        .enumerate()
        .map(|(index, range)| {
            let span = &times[range.clone()];
            let (lo, hi) = (span[0], span[span.len() - 1] + timeout);
            while cursor < raw.len() && raw[cursor].time() < lo {
                cursor += 1;
            }
            let begin = cursor;
            while cursor < raw.len() && raw[cursor].time() <= hi {
                cursor += 1;
            }
            let window = RawWindow::tally(raw[begin..cursor].iter().copied());
            let features = compute_features(span, &window);
            Session {
                user: user.clone(),
                index,
                requests: remaining.by_ref().take(range.len()).collect(),
                features,
                raw: window,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::access_log::parse_line_as;
    use crate::access_log::LogFormat;
    use crate::archive_uri::UriClassifier;

    fn reduced(line: &str) -> Request {
        Request::new(parse_line_as(line, LogFormat::Reduced, 0).unwrap(), &UriClassifier::default())
    }

    fn full(ip: &str, ua: &str, secs: u32, uri: &str) -> Request {
        let line = format!(
            r#"{ip} - - [02/Feb/2012:07:{:02}:{:02} +0000] "GET {uri} HTTP/1.1" 200 10 "-" "{ua}""#,
            secs / 60,
            secs % 60
        );
        Request::new(crate::access_log::parse_line(&line).unwrap(), &UriClassifier::default())
    }

    #[test]
    fn split_examples() {
        assert_eq!(split_by_timeout(&[0, 300, 960], 600), vec![0..2, 2..3]);
        assert_eq!(split_by_timeout(&[0, 600], 600), vec![0..2]);
        assert_eq!(split_by_timeout(&[0, 601], 600), vec![0..1, 1..2]);
        assert_eq!(split_by_timeout(&[5], 600), vec![0..1]);
        assert!(split_by_timeout(&[], 600).is_empty());
    }

    #[test]
    fn user_identification_threshold() {
        let mk = |n_agents: usize| -> Vec<Request> {
            (0..n_agents).map(|i| full("9.9.9.9", &format!("Agent{i}"), i as u32, "/web/*/a.com")).collect()
        };
        let (_, users) = identify_users(&mk(20), 20);
        assert_eq!(users.len(), 20);
        assert!(users.keys().all(|k| !k.collapsed));

        let (dir, users) = identify_users(&mk(21), 20);
        assert_eq!(users.len(), 1);
        let key = users.keys().next().unwrap();
        assert_eq!(key, &UserKey::collapsed("9.9.9.9"));
        assert_eq!(users[key].len(), 21);
        assert_eq!(dir.collapsed_count(), 1);

        let mut two = Vec::new();
        for i in 0..5 {
            two.push(full("1.1.1.1", "A", i, "/web/*/a.com"));
            two.push(full("1.1.1.1", "B", i, "/web/*/a.com"));
        }
        let (_, users) = identify_users(&two, 20);
        assert_eq!(users.len(), 2);
        assert!(users.values().all(|v| v.len() == 5));
    }

    #[test]
    fn users_are_time_ordered() {
        let reqs = vec![
            full("1.1.1.1", "A", 30, "/web/*/a.com"),
            full("1.1.1.1", "A", 10, "/web/*/b.com"),
            full("1.1.1.1", "A", 10, "/web/*/c.com"),
        ];
        let (_, users) = identify_users(&reqs, 20);
        assert_eq!(users.values().next().unwrap(), &vec![1, 2, 0]);
    }

    #[test]
    fn slide_excerpt_session() {
        let reqs: Vec<Request> = [
            "0.248.211.54 02/Feb/2012:07:04:52 http://wayback.archive.org/web/20000715000000*/http://google.com",
            "0.248.211.54 02/Feb/2012:07:04:59 http://web.archive.org/web/20000301105534/http://google.com/",
            "0.248.211.54 02/Feb/2012:07:05:12 http://web.archive.org/web/20051101145803/http://www.google.com",
            "0.248.211.54 02/Feb/2012:07:05:27 http://web.archive.org/web/20080730200402/http://www.google.com/",
            "0.248.211.54 02/Feb/2012:07:05:38 http://web.archive.org/web/20110215024256/http://www.google.com/",
        ]
        .iter()
        .map(|l| reduced(l))
        .collect();
        let raw: Vec<&Request> = reqs.iter().collect();
        let user = UserKey::new("0.248.211.54", None::<String>);
        let sessions = sessionize(&user, reqs.clone(), &raw, 600);
        assert_eq!(sessions.len(), 1);
        let f = &sessions[0].features;
        assert_eq!(f.length, 5);
        assert_eq!(f.duration_s, 46);
        // Gaps 7, 13, 15, 11: mean 11.5, population variance 35/4.
        assert_eq!(f.mean_irt, Some(11.5));
        assert!((f.stdev_irt.unwrap() - 8.75f64.sqrt()).abs() < 1e-12);
        assert!((f.browsing_speed.unwrap() - 5.0 / 46.0).abs() < 1e-12);
        // Five pages, no images.
        assert_eq!(f.image_html, ImageHtmlRatio { images: 0, html: 5 });
        assert_eq!(sessions[0].uri_set().len(), 5);
    }

    #[test]
    fn irt_statistics_by_hand() {
        // Gaps {7, 5, 15, 11}: mean 9.5, deviations (-2.5, -4.5, 5.5, 1.5),
        // squares sum to 59, population stdev sqrt(59/4) = 3.8406...
        let f = compute_features(&[0, 7, 12, 27, 38], &RawWindow::default());
        assert_eq!(f.mean_irt, Some(9.5));
        assert!((f.stdev_irt.unwrap() - 3.84).abs() < 0.005);
        assert!((f.stdev_irt.unwrap() - (59.0f64 / 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rates_and_single_requests() {
        let ten: Vec<i64> = (0..10).map(|i| i * 10 / 9).collect();
        assert_eq!(ten[9] - ten[0], 10);
        let f = compute_features(&ten, &RawWindow::default());
        assert_eq!(f.browsing_speed, Some(1.0));

        let one = compute_features(&[100], &RawWindow { requests: 1, bytes: 0, images: 0, html: 5 });
        assert_eq!((one.length, one.duration_s), (1, 0));
        assert_eq!((one.browsing_speed, one.mean_irt, one.stdev_irt), (None, None, None));
        assert_eq!(one.image_html.value(), 0.0);

        let two = compute_features(&[0, 30], &RawWindow::default());
        assert_eq!(two.stdev_irt, Some(0.0));
        assert!(two.image_html.value().is_infinite());
    }

    #[test]
    fn raw_window_counts_images_after_last_page() {
        let page = full("1.1.1.1", "A", 0, "/web/20100101000000/http://a.com/");
        let img1 = full("1.1.1.1", "A", 1, "/web/20100101000000im_/http://a.com/a.png");
        let img2 = full("1.1.1.1", "A", 2, "/web/20100101000000im_/http://a.com/b.png");
        let late = full("1.1.1.1", "A", 59 * 60, "/web/20100101000000/http://a.com/later.html");
        let raw = vec![&page, &img1, &img2, &late];
        let sessions = sessionize(&UserKey::new("1.1.1.1", Some("A")), vec![page.clone(), late.clone()], &raw, 600);
        assert_eq!(sessions.len(), 2);
        assert_eq!(sessions[0].features.image_html, ImageHtmlRatio { images: 2, html: 1 });
        assert_eq!(sessions[0].raw.requests, 3);
        assert_eq!(sessions[1].features.image_html, ImageHtmlRatio { images: 0, html: 1 });
        assert_eq!(sessions[1].index, 1);
    }

    #[test]
    fn ih_serializes_infinity_as_text() {
        let v = serde_json::to_value(ImageHtmlRatio { images: 3, html: 0 }).unwrap();
        assert_eq!(v["ratio"], "inf");
        let back: ImageHtmlRatio = serde_json::from_value(v).unwrap();
        assert_eq!(back, ImageHtmlRatio { images: 3, html: 0 });
        let v = serde_json::to_value(ImageHtmlRatio { images: 1, html: 4 }).unwrap();
        assert_eq!(v["ratio"], 0.25);
    }
}
