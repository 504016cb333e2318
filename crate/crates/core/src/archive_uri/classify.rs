use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::canonical::{canonicalize, CanonicalizeError};
use super::resource::{ResourceClass, ResourceClassLists, ResourceClassifier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UriKind {
    /// URI-M: a capture of a URI-R at a Memento-Datetime.
    Memento,
    /// URI-T: the list of captures of a URI-R.
    TimeMap,
    Other,
}

/// Capture instant encoded as 14 digits `YYYYMMDDHHMMSS` in Wayback paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MementoDatetime(DateTime<Utc>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid Memento-Datetime `{0}`")]
pub struct DatetimeError(pub String);

impl MementoDatetime {
    /// Parse exactly 14 ASCII digits into a valid calendar instant.
    pub fn parse(digits: &str) -> Result<Self, DatetimeError> {
        let b = digits.as_bytes();
        if b.len() != 14 || !b.iter().all(u8::is_ascii_digit) {
            return Err(DatetimeError(digits.to_string()));
        }
        let n = |r: std::ops::Range<usize>| b[r].iter().fold(0u32, |acc, d| acc * 10 + u32::from(d - b'0'));
        NaiveDate::from_ymd_opt(n(0..4) as i32, n(4..6), n(6..8))
            .and_then(|d| d.and_hms_opt(n(8..10), n(10..12), n(12..14)))
            .map(|dt| MementoDatetime(dt.and_utc()))
            .ok_or_else(|| DatetimeError(digits.to_string()))
    }

    pub fn instant(&self) -> DateTime<Utc> {
        self.0
    }

    pub fn year(&self) -> i32 {
        self.0.year()
    }

    pub fn unix_seconds(&self) -> i64 {
        self.0.timestamp()
    }

    /// `None` outside the four-digit-year range a 14-digit stamp can hold.
    pub fn from_unix_seconds(secs: i64) -> Option<Self> {
        let dt = DateTime::from_timestamp(secs, 0)?;
        (0..=9999).contains(&dt.year()).then_some(MementoDatetime(dt))
    }
}

impl fmt::Display for MementoDatetime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y%m%d%H%M%S"))
    }
}

impl FromStr for MementoDatetime {
    type Err = DatetimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MementoDatetime::parse(s)
    }
}

impl Serialize for MementoDatetime {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MementoDatetime {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        MementoDatetime::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Why a request counts as invalid during cleaning.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason", content = "detail")]
pub enum InvalidRequest {
    #[error("request target is not an absolute URI or path")]
    MalformedTarget,
    #[error("archive path has no URI-R")]
    MissingUriR,
    #[error("{0}")]
    BadDatetime(String),
    #[error("{0}")]
    Canonicalize(String),
}

impl From<CanonicalizeError> for InvalidRequest {
    fn from(e: CanonicalizeError) -> Self {
        InvalidRequest::Canonicalize(e.to_string())
    }
}

/// A requested URI placed in the Memento model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveUri {
    pub kind: UriKind,
    /// Canonical URI-R; present iff `kind != Other`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub uri_r: Option<String>,
    /// Present iff `kind == Memento`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub memento_datetime: Option<MementoDatetime>,
    /// Digits before `*` in TimeMap paths such as `/web/20000715000000*/`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub datetime_prefix: Option<String>,
    /// Wayback replay modifier (`im_`, `js_`, ...) stripped from the path.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub modifier: Option<String>,
    pub resource_class: ResourceClass,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub invalid: Option<InvalidRequest>,
}

impl ArchiveUri {
    fn other(resource_class: ResourceClass) -> Self {
        ArchiveUri {
            kind: UriKind::Other,
            uri_r: None,
            memento_datetime: None,
            datetime_prefix: None,
            modifier: None,
            resource_class,
            invalid: None,
        }
    }

    fn invalid(resource_class: ResourceClass, why: InvalidRequest) -> Self {
        ArchiveUri { invalid: Some(why), ..ArchiveUri::other(resource_class) }
    }

    pub fn is_invalid(&self) -> bool {
        self.invalid.is_some()
    }

    /// URI-M or URI-T: the requests access patterns are built from.
    pub fn is_pattern_eligible(&self) -> bool {
        matches!(self.kind, UriKind::Memento | UriKind::TimeMap)
    }
}

/// Configured URI classifier.
#[derive(Debug, Clone, Default)]
pub struct UriClassifier {
    resources: ResourceClassifier,
}

impl UriClassifier {
    pub fn new(lists: &ResourceClassLists) -> Self {
        Self { resources: ResourceClassifier::new(lists) }
    }

    pub fn resources(&self) -> &ResourceClassifier {
        &self.resources
    }

    pub fn classify(&self, request_uri: &str) -> ArchiveUri {
        let Some(path) = archive_path(request_uri) else {
            return ArchiveUri::invalid(ResourceClass::Html, InvalidRequest::MalformedTarget);
        };
        if let Some(class) = self.resources.site_class(path) {
            return ArchiveUri::other(class);
        }
        let Some(rest) = path.strip_prefix("/web/") else {
            return ArchiveUri::other(self.resources.classify_by_extension(path));
        };
        let Some((selector, target)) = rest.split_once('/') else {
            // `/web/` search page or `/web/<timestamp>` without a target.
            return ArchiveUri::other(ResourceClass::Html);
        };
        let class = self.resources.classify_target(target);

        match parse_selector(selector) {
            Selector::TimeMap { prefix } => match resolve_uri_r(target) {
                Ok(uri_r) => ArchiveUri {
                    kind: UriKind::TimeMap,
                    uri_r: Some(uri_r),
                    memento_datetime: None,
                    datetime_prefix: prefix.map(str::to_string),
                    modifier: None,
                    // The TimeMap itself is an HTML listing whatever the URI-R is.
                    resource_class: ResourceClass::Html,
                    invalid: None,
                },
                Err(why) => ArchiveUri::invalid(ResourceClass::Html, why),
            },
            Selector::Memento { digits, modifier } => {
                let datetime = match MementoDatetime::parse(digits) {
                    Ok(dt) => dt,
                    Err(e) => return ArchiveUri::invalid(class, InvalidRequest::BadDatetime(e.to_string())),
                };
                match resolve_uri_r(target) {
                    Ok(uri_r) => ArchiveUri {
                        kind: UriKind::Memento,
                        uri_r: Some(uri_r),
                        memento_datetime: Some(datetime),
                        datetime_prefix: None,
                        modifier: modifier.map(str::to_string),
                        resource_class: class,
                        invalid: None,
                    },
                    Err(why) => ArchiveUri::invalid(class, why),
                }
            }
            Selector::Partial { modifier } => match resolve_uri_r(target) {
                // Partial timestamps get redirected to the nearest capture.
                Ok(_) => ArchiveUri { modifier: modifier.map(str::to_string), ..ArchiveUri::other(class) },
                Err(why) => ArchiveUri::invalid(class, why),
            },
            Selector::NotATimestamp => match resolve_uri_r(rest) {
                Ok(_) => ArchiveUri::other(self.resources.classify_target(rest)),
                Err(why) => ArchiveUri::invalid(class, why),
            },
        }
    }
}

/// Classify with the default resource lists.
pub fn classify(request_uri: &str) -> ArchiveUri {
    thread_local! {
        static DEFAULT: UriClassifier = UriClassifier::default();
    }
    DEFAULT.with(|c| c.classify(request_uri))
}

fn resolve_uri_r(target: &str) -> Result<String, InvalidRequest> {
    if target.trim().is_empty() {
        return Err(InvalidRequest::MissingUriR);
    }
    canonicalize(target).map_err(InvalidRequest::from)
}

/// Path on the archive host, host and scheme removed.
fn archive_path(request_uri: &str) -> Option<&str> {
    if request_uri.starts_with('/') {
        return Some(request_uri);
    }
    let scheme_len = if starts_with_ignore_case(request_uri, "http://") {
        7
    } else if starts_with_ignore_case(request_uri, "https://") {
        8
    } else {
        return None;
    };
    let rest = &request_uri[scheme_len..];
    Some(rest.find('/').map_or("/", |i| &rest[i..]))
}

fn starts_with_ignore_case(s: &str, prefix: &str) -> bool {
    s.len() >= prefix.len() && s.as_bytes()[..prefix.len()].eq_ignore_ascii_case(prefix.as_bytes())
}

enum Selector<'a> {
    TimeMap { prefix: Option<&'a str> },
    Memento { digits: &'a str, modifier: Option<&'a str> },
    Partial { modifier: Option<&'a str> },
    NotATimestamp,
}

fn parse_selector(selector: &str) -> Selector<'_> {
    if let Some(digits) = selector.strip_suffix('*') {
        if digits.is_empty() {
            return Selector::TimeMap { prefix: None };
        }
        if digits.len() <= 14 && digits.bytes().all(|b| b.is_ascii_digit()) {
            return Selector::TimeMap { prefix: Some(digits) };
        }
        return Selector::NotATimestamp;
    }
    let digit_end = selector.bytes().position(|b| !b.is_ascii_digit()).unwrap_or(selector.len());
    if digit_end == 0 {
        return Selector::NotATimestamp;
    }
    let (digits, tail) = selector.split_at(digit_end);
    let modifier = if tail.is_empty() {
        None
    } else if tail.ends_with('_') && tail[..tail.len() - 1].bytes().all(|b| b.is_ascii_lowercase()) && tail.len() > 1 {
        Some(tail)
    } else {
        return Selector::NotATimestamp;
    };
    if digits.len() == 14 {
        Selector::Memento { digits, modifier }
    } else {
        Selector::Partial { modifier }
    }
}
