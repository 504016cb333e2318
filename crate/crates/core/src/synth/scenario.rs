//! Declarative scenario format for the synthetic log generator.

use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::access_log::LogFormat;
use crate::archive_uri::MementoDatetime;
use crate::pattern::{PatternKind, SegmentKind};
use crate::robot::{Cohort, DEFAULT_BS_THRESHOLD, DEFAULT_IH_THRESHOLD};
use crate::session::{DEFAULT_TIMEOUT_S, DEFAULT_UA_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    #[serde(default = "default_start")]
    pub start: DateTime<Utc>,
    #[serde(default)]
    pub format: LogFormat,
    /// The analysis settings the ground truth is computed against.
    #[serde(default = "default_timeout")]
    pub session_timeout_s: i64,
    #[serde(default = "default_ua_threshold")]
    pub ua_per_ip_threshold: usize,
    #[serde(default = "default_bs")]
    pub bs_threshold: f64,
    #[serde(default = "default_ih")]
    pub ih_threshold: f64,
    pub users: Vec<UserSpec>,
}

/// A scenario with no users and every setting at its default.
pub fn default_scenario() -> Scenario {
    Scenario {
        seed: 0,
        start: default_start(),
        format: LogFormat::Full,
        session_timeout_s: default_timeout(),
        ua_per_ip_threshold: default_ua_threshold(),
        bs_threshold: default_bs(),
        ih_threshold: default_ih(),
        users: Vec::new(),
    }
}

fn default_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2012, 2, 2, 0, 0, 0).unwrap()
}
fn default_timeout() -> i64 {
    DEFAULT_TIMEOUT_S
}
fn default_ua_threshold() -> usize {
    DEFAULT_UA_THRESHOLD
}
fn default_bs() -> f64 {
    DEFAULT_BS_THRESHOLD
}
fn default_ih() -> f64 {
    DEFAULT_IH_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSpec {
    /// The cohort the planted behaviour is meant to land in; generation
    /// fails if the timeline says otherwise.
    pub cohort: Cohort,
    pub ip: String,
    /// Defaults to a browser agent, or a crawler agent when
    /// `self_identified` is set.
    #[serde(default)]
    pub ua: Option<String>,
    #[serde(default)]
    pub self_identified: bool,
    /// Cycle through this many distinct agents; must exceed the UA threshold.
    #[serde(default)]
    pub rotate_uas: usize,
    pub sessions: Vec<SessionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSpec {
    pub pattern: PatternKind,
    /// Original resources to use, in order; generated when empty.
    #[serde(default)]
    pub uri_rs: Vec<String>,
    /// URI-M and URI-T requests in the session.
    #[serde(default)]
    pub length: Option<usize>,
    /// Composite layout; lengths count shared boundary requests.
    #[serde(default)]
    pub segments: Vec<SegmentSpec>,
    /// Open with the TimeMap of the first resource (Slide, Dive, Dip).
    #[serde(default)]
    pub timemap: bool,
    #[serde(default)]
    pub start: Option<DateTime<Utc>>,
    #[serde(default)]
    pub irt: IrtModel,
    /// Image requests after each page.
    #[serde(default)]
    pub embedded_per_html: usize,
    #[serde(default)]
    pub status_mix: StatusMix,
    #[serde(default)]
    pub fetch_robots_txt: bool,
    /// Memento-Datetimes to use, in order; random when exhausted.
    #[serde(default)]
    pub datetimes: Vec<MementoDatetime>,
    /// Exact requests; overrides every generated request of the session.
    #[serde(default)]
    pub steps: Vec<StepSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub kind: SegmentKind,
    pub length: usize,
}

/// Inter-request gaps in seconds: a normal truncated to `[min, max]`,
/// rounded to whole seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrtModel {
    pub mean: f64,
    pub stdev: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for IrtModel {
    fn default() -> Self {
        IrtModel { mean: 20.0, stdev: 5.0, min: 5.0, max: 60.0 }
    }
}

/// Extra requests mixed into a session.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatusMix {
    /// 302 responses in front of random pages.
    pub redirect: usize,
    /// Pages answered with 404 instead of 200.
    pub not_found: usize,
    /// HEAD requests for random pages.
    pub head: usize,
    /// Archive-site chrome requests.
    pub static_assets: usize,
}

impl StatusMix {
    pub fn is_empty(&self) -> bool {
        *self == StatusMix::default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    pub uri: String,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {message}")]
pub struct ScenarioError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ScenarioErrors(pub Vec<ScenarioError>);

impl fmt::Display for ScenarioErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid scenario ({} problem{})", self.0.len(), if self.0.len() == 1 { "" } else { "s" })?;
        for e in &self.0 {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Structural checks, every problem reported with its path.
    pub fn validate(&self) -> Result<(), ScenarioErrors> {
        let mut errs = Vec::new();
        let mut push = |path: String, message: &str| errs.push(ScenarioError { path, message: message.to_string() });
        if self.session_timeout_s <= 0 {
            push("session_timeout_s".into(), "must be positive");
        }
        if !(self.bs_threshold > 0.0) || !(self.ih_threshold > 0.0) {
            push("bs_threshold/ih_threshold".into(), "must be positive");
        }
        if self.users.is_empty() {
            push("users".into(), "at least one user is required");
        }
        let mut ips = BTreeSet::new();
        for (u, user) in self.users.iter().enumerate() {
            let up = format!("users[{u}]");
            if user.ip.is_empty() || user.ip.contains(char::is_whitespace) {
                push(format!("{up}.ip"), "must be a non-empty token");
            }
            if !ips.insert(user.ip.as_str()) {
                push(format!("{up}.ip"), "each user needs its own IP");
            }
            if user.ua.as_deref().is_some_and(|ua| ua.contains('\n')) {
                push(format!("{up}.ua"), "must be a single line");
            }
            if user.rotate_uas > 0 && user.rotate_uas <= self.ua_per_ip_threshold {
                push(format!("{up}.rotate_uas"), "must exceed ua_per_ip_threshold, or the user splits into several");
            }
            if self.format == LogFormat::Reduced && (user.rotate_uas > 0 || user.self_identified || user.ua.is_some()) {
                push(up.clone(), "the reduced format carries no User-Agent");
            }
            if user.sessions.is_empty() {
                push(format!("{up}.sessions"), "at least one session is required");
            }
            for (s, sess) in user.sessions.iter().enumerate() {
                let sp = format!("{up}.sessions[{s}]");
                for (path, message) in sess.problems(self) {
                    push(format!("{sp}{path}"), message);
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ScenarioErrors(errs))
        }
    }
}

impl SessionSpec {
    /// A session with every optional field at its default.
    pub fn new(pattern: PatternKind) -> Self {
        SessionSpec {
            pattern,
            uri_rs: Vec::new(),
            length: None,
            segments: Vec::new(),
            timemap: false,
            start: None,
            irt: IrtModel::default(),
            embedded_per_html: 0,
            status_mix: StatusMix::default(),
            fetch_robots_txt: false,
            datetimes: Vec::new(),
            steps: Vec::new(),
        }
    }

    /// Eligible request count, when it can be known before generation.
    pub fn planned_length(&self) -> Option<usize> {
        if !self.steps.is_empty() {
            return None;
        }
        if self.pattern == PatternKind::Composite {
            return Some(composite_length(&self.segments));
        }
        Some(self.length.unwrap_or(match self.pattern {
            PatternKind::Dip => 1,
            PatternKind::Slide => 4,
            PatternKind::Dive => if self.timemap { 4 } else { 3 },
            PatternKind::Skim => 3,
            PatternKind::Composite => unreachable!(),
        }))
    }

    fn problems(&self, scenario: &Scenario) -> Vec<(String, &'static str)> {
        let mut out: Vec<(String, &'static str)> = Vec::new();
        let irt = &self.irt;
        if !(irt.min >= 0.0 && irt.min <= irt.max && irt.stdev >= 0.0 && irt.mean.is_finite()) {
            out.push((".irt".into(), "needs 0 <= min <= max and stdev >= 0"));
        }
        if irt.max > scenario.session_timeout_s as f64 {
            out.push((".irt.max".into(), "gaps above the session timeout would split the session"));
        }
        if scenario.format == LogFormat::Reduced && !self.status_mix.is_empty() {
            out.push((".status_mix".into(), "the reduced format has no method or status"));
        }
        if !self.steps.is_empty() {
            if self.steps.windows(2).any(|w| w[1].at < w[0].at) {
                out.push((".steps".into(), "times must be ascending"));
            }
            if self.steps.windows(2).any(|w| (w[1].at - w[0].at).num_seconds() > scenario.session_timeout_s) {
                out.push((".steps".into(), "a gap above the session timeout would split the session"));
            }
            if self.steps.iter().any(|s| s.uri.contains(char::is_whitespace)) {
                out.push((".steps".into(), "URIs cannot contain whitespace"));
            }
            return out;
        }
        let len = self.planned_length().unwrap_or(0);
        match self.pattern {
            PatternKind::Dip if len != 1 => out.push((".length".into(), "a Dip is exactly one request")),
            PatternKind::Slide | PatternKind::Skim if len < 2 => {
                out.push((".length".into(), "needs at least two requests"))
            }
            PatternKind::Dive if len < 2 + usize::from(self.timemap) => {
                out.push((".length".into(), "needs two different resources after the optional TimeMap"))
            }
            PatternKind::Composite => {
                if self.segments.len() < 2 {
                    out.push((".segments".into(), "a Composite needs at least two segments"));
                }
                if self.segments.windows(2).any(|w| w[0].kind == w[1].kind) {
                    out.push((".segments".into(), "segment kinds must alternate"));
                }
                if self.segments.iter().any(|s| s.length < 2) {
                    out.push((".segments".into(), "every segment spans at least two requests"));
                }
                if !self.segments.iter().any(|s| s.kind == SegmentKind::Slide)
                    || !self.segments.iter().any(|s| s.kind == SegmentKind::Dive)
                {
                    out.push((".segments".into(), "needs both Slide and Dive segments"));
                }
                if self.timemap {
                    out.push((".timemap".into(), "not supported for Composite sessions"));
                }
                if self.length.is_some_and(|l| l != len) {
                    out.push((".length".into(), "disagrees with the segment lengths"));
                }
            }
            _ => {}
        }
        if self.pattern != PatternKind::Composite && !self.segments.is_empty() {
            out.push((".segments".into(), "only Composite sessions take segments"));
        }
        if self.timemap && matches!(self.pattern, PatternKind::Skim) {
            out.push((".timemap".into(), "a Skim is TimeMaps already"));
        }
        if !self.uri_rs.is_empty() && self.uri_rs.len() < self.needed_resources() {
            out.push((".uri_rs".into(), "fewer resources than the pattern visits"));
        }
        out
    }

    /// Distinct resources the generated request sequence visits.
    pub fn needed_resources(&self) -> usize {
        let len = self.planned_length().unwrap_or(0);
        match self.pattern {
            PatternKind::Dip | PatternKind::Slide => 1,
            PatternKind::Dive => len - usize::from(self.timemap),
            PatternKind::Skim => len,
            PatternKind::Composite => {
                let mut n = 0;
                for (i, seg) in self.segments.iter().enumerate() {
                    n += match (seg.kind, i) {
                        (SegmentKind::Slide, 0) => 1,
                        (SegmentKind::Slide, _) => 0,
                        (SegmentKind::Dive, 0) => seg.length,
                        (SegmentKind::Dive, _) => seg.length - 1,
                    };
                }
                n
            }
        }
    }
}

/// Requests spanned by segments sharing their boundaries.
pub fn composite_length(segments: &[SegmentSpec]) -> usize {
    match segments {
        [] => 0,
        [first, rest @ ..] => first.length + rest.iter().map(|s| s.length.saturating_sub(1)).sum::<usize>(),
    }
}
