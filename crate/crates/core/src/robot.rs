//! Robot detection heuristics over sessions.
//!
//! Five independent predicates; a session is a robot when any of them fires.

use std::collections::BTreeSet;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::archive_uri::ResourceClass;
use crate::session::Session;

pub const DEFAULT_BS_THRESHOLD: f64 = 0.5;
pub const DEFAULT_IH_THRESHOLD: f64 = 0.1;

/// Shipped self-identification patterns, matched as case-insensitive
/// substrings of the User-Agent. Version 1.
pub const DEFAULT_SI_PATTERNS: [&str; 10] = [
    "bot",
    "crawler",
    "spider",
    "slurp",
    "archiver",
    "wget",
    "curl",
    "libwww",
    "python-requests",
    "java/",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SelfIdPatterns(Vec<String>);

impl Default for SelfIdPatterns {
    fn default() -> Self {
        SelfIdPatterns(DEFAULT_SI_PATTERNS.iter().map(|s| s.to_string()).collect())
    }
}

impl SelfIdPatterns {
    pub fn new(patterns: impl IntoIterator<Item = impl Into<String>>) -> Self {
        SelfIdPatterns(
            patterns
                .into_iter()
                .map(|p| p.into().trim().to_ascii_lowercase())
                .filter(|p| !p.is_empty())
                .collect(),
        )
    }

    /// One pattern per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')))
    }

    pub fn from_file(path: &Path) -> io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn patterns(&self) -> &[String] {
        &self.0
    }

    pub fn matches(&self, user_agent: Option<&str>) -> bool {
        let Some(ua) = user_agent else {
            return false;
        };
        let ua = ua.to_ascii_lowercase();
        self.0.iter().any(|p| ua.contains(p.as_str()))
    }
}

/// True iff the agent is present and declares itself a robot.
pub fn detect_self_identified(user_agent: Option<&str>, patterns: &SelfIdPatterns) -> bool {
    patterns.matches(user_agent)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Heuristic {
    SelfIdentified,
    UaPerIp,
    RobotsTxt,
    BrowsingSpeed,
    ImageHtmlRatio,
}

impl Heuristic {
    pub const ALL: [Heuristic; 5] = [
        Heuristic::SelfIdentified,
        Heuristic::UaPerIp,
        Heuristic::RobotsTxt,
        Heuristic::BrowsingSpeed,
        Heuristic::ImageHtmlRatio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Heuristic::SelfIdentified => "SelfIdentified",
            Heuristic::UaPerIp => "UaPerIp",
            Heuristic::RobotsTxt => "RobotsTxt",
            Heuristic::BrowsingSpeed => "BrowsingSpeed",
            Heuristic::ImageHtmlRatio => "ImageHtmlRatio",
        }
    }

    pub fn fires(self, session: &Session, config: &RobotConfig) -> bool {
        match self {
            Heuristic::SelfIdentified => session
                .requests
                .iter()
                .any(|r| config.si_patterns.matches(r.user_agent())),
            Heuristic::UaPerIp => session.user.collapsed,
            Heuristic::RobotsTxt => session
                .requests
                .iter()
                .any(|r| r.target.resource_class == ResourceClass::RobotsTxt),
            Heuristic::BrowsingSpeed => session
                .features
                .browsing_speed
                .is_some_and(|bs| bs > config.bs_threshold),
            // An image-only session (no HTML at all) is not what this targets.
            Heuristic::ImageHtmlRatio => {
                let ih = session.features.image_html;
                !ih.is_infinite() && ih.value() < config.ih_threshold
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotConfig {
    pub bs_threshold: f64,
    pub ih_threshold: f64,
    pub si_patterns: SelfIdPatterns,
}

impl Default for RobotConfig {
    fn default() -> Self {
        RobotConfig {
            bs_threshold: DEFAULT_BS_THRESHOLD,
            ih_threshold: DEFAULT_IH_THRESHOLD,
            si_patterns: SelfIdPatterns::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotVerdict {
    pub is_robot: bool,
    pub triggered: BTreeSet<Heuristic>,
}

impl RobotVerdict {
    pub fn from_triggers(triggered: BTreeSet<Heuristic>) -> Self {
        RobotVerdict { is_robot: !triggered.is_empty(), triggered }
    }

    pub fn cohort(&self) -> Cohort {
        if self.is_robot {
            Cohort::Robots
        } else {
            Cohort::Humans
        }
    }
}

pub fn classify_session(session: &Session, config: &RobotConfig) -> RobotVerdict {
    RobotVerdict::from_triggers(
        Heuristic::ALL
            .into_iter()
            .filter(|h| h.fires(session, config))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cohort {
    #[serde(alias = "robot")]
    Robots,
    #[serde(alias = "human")]
    Humans,
}

impl Cohort {
    pub const ALL: [Cohort; 2] = [Cohort::Robots, Cohort::Humans];

    pub fn name(self) -> &'static str {
        match self {
            Cohort::Robots => "robots",
            Cohort::Humans => "humans",
        }
    }
}

/// Sessions and cleaned requests flagged by one heuristic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeuristicCount {
    pub sessions: u64,
    pub requests: u64,
}

/// Per-heuristic tallies, each heuristic evaluated on its own.
pub fn independent_counts(sessions: &[Session], config: &RobotConfig) -> Vec<(Heuristic, HeuristicCount)> {
    Heuristic::ALL
        .into_iter()
        .map(|h| {
            let mut c = HeuristicCount::default();
            for s in sessions.iter().filter(|s| h.fires(s, config)) {
                c.sessions += 1;
                c.requests += s.features.length as u64;
            }
            (h, c)
        })
        .collect()
}

/// Per-heuristic tallies reconstructed from combined-run trigger sets.
pub fn counts_from_verdicts<'a>(
    labeled: impl IntoIterator<Item = (&'a Session, &'a RobotVerdict)> + Clone,
) -> Vec<(Heuristic, HeuristicCount)> {
    Heuristic::ALL
        .into_iter()
        .map(|h| {
            let mut c = HeuristicCount::default();
            for (s, v) in labeled.clone() {
                if v.triggered.contains(&h) {
                    c.sessions += 1;
                    c.requests += s.features.length as u64;
                }
            }
            (h, c)
        })
        .collect()
}
