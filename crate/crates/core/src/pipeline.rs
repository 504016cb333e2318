//! End-to-end analysis: parse, classify, clean, identify users, sessionize,
//! label robots and patterns.
//!
//! Parallel work is done with rayon in whatever pool the caller installs.
//! Every parallel step collects in input order and every map is a BTreeMap,
//! so results do not depend on the thread count.

use std::io::{self, BufRead};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::access_log::{parse_bytes, LogFormat, ParseCounts, ParseError, StreamError};
use crate::archive_uri::{ResourceClassLists, UriClassifier};
use crate::clean::{clean_indices, CleanReport};
use crate::pattern::{classify_pattern, PatternLabel};
use crate::request::Request;
use crate::robot::{
    classify_session, Cohort, Heuristic, RobotConfig, RobotVerdict, SelfIdPatterns, DEFAULT_BS_THRESHOLD,
    DEFAULT_IH_THRESHOLD,
};
use crate::session::{group_by_user, sessionize, Session, UserDirectory, DEFAULT_TIMEOUT_S, DEFAULT_UA_THRESHOLD};

/// Lines handed to the parser pool at a time.
const BATCH_LINES: usize = 1 << 14;
/// Parse errors kept verbatim; the rest are only counted.
pub const MAX_ERROR_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub session_timeout_s: i64,
    pub ua_per_ip_threshold: usize,
    pub bs_threshold: f64,
    pub ih_threshold: f64,
    /// Self-identification patterns, one per line; the shipped list when unset.
    pub si_pattern_file: Option<PathBuf>,
    pub resource_class_lists: ResourceClassLists,
    pub format: LogFormat,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            session_timeout_s: DEFAULT_TIMEOUT_S,
            ua_per_ip_threshold: DEFAULT_UA_THRESHOLD,
            bs_threshold: DEFAULT_BS_THRESHOLD,
            ih_threshold: DEFAULT_IH_THRESHOLD,
            si_pattern_file: None,
            resource_class_lists: ResourceClassLists::default(),
            format: LogFormat::Full,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{field} must be positive, got {value}")]
    NotPositive { field: &'static str, value: String },
    #[error("reading self-identification patterns from {path}: {source}")]
    SiPatterns {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("config file: {0}")]
    Parse(#[from] toml::de::Error),
}

impl AnalysisConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: AnalysisConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field, value: String| Err(ConfigError::NotPositive { field, value });
        if self.session_timeout_s <= 0 {
            return bad("session_timeout_s", self.session_timeout_s.to_string());
        }
        if self.ua_per_ip_threshold == 0 {
            return bad("ua_per_ip_threshold", "0".into());
        }
        if !(self.bs_threshold > 0.0) {
            return bad("bs_threshold", self.bs_threshold.to_string());
        }
        if !(self.ih_threshold > 0.0) {
            return bad("ih_threshold", self.ih_threshold.to_string());
        }
        Ok(())
    }

    pub fn classifier(&self) -> UriClassifier {
        UriClassifier::new(&self.resource_class_lists)
    }

    /// Heuristic settings, loading the pattern file if one is configured.
    pub fn robot_config(&self) -> Result<RobotConfig, ConfigError> {
        let si_patterns = match &self.si_pattern_file {
            Some(path) => SelfIdPatterns::from_file(path)
                .map_err(|source| ConfigError::SiPatterns { path: path.clone(), source })?,
            None => SelfIdPatterns::default(),
        };
        Ok(RobotConfig { bs_threshold: self.bs_threshold, ih_threshold: self.ih_threshold, si_patterns })
    }
}

/// Parsed and classified requests of one or more inputs.
#[derive(Debug, Clone, Default)]
pub struct Ingest {
    pub requests: Vec<Request>,
    pub counts: ParseCounts,
    /// The first few parse errors, for reporting.
    pub errors: Vec<ParseError>,
}

impl Ingest {
    /// Parse and classify a whole stream, appending to `self`. Lines are
    /// parsed in parallel batches; output order is input order.
    pub fn read<R: BufRead>(&mut self, mut reader: R, format: LogFormat, classifier: &UriClassifier) -> Result<ParseCounts, StreamError> {
        let mut counts = ParseCounts::default();
        let mut line_no = 0u64;
        let mut batch: Vec<Vec<u8>> = Vec::with_capacity(BATCH_LINES);
        loop {
            let mut buf = Vec::with_capacity(256);
            let n = reader
                .read_until(b'\n', &mut buf)
                .map_err(|source| StreamError { line_no, source })?;
            if n > 0 {
                batch.push(buf);
            }
            if batch.len() == BATCH_LINES || (n == 0 && !batch.is_empty()) {
                let first = line_no + 1;
                line_no += batch.len() as u64;
                let parsed: Vec<Result<Request, ParseError>> = batch
                    .par_iter()
                    .enumerate()
                    .map(|(i, line)| {
                        parse_bytes(line, format, first + i as u64).map(|record| Request::new(record, classifier))
                    })
                    .collect();
                for outcome in parsed {
                    match outcome {
                        Ok(req) => {
                            counts.parsed += 1;
                            self.requests.push(req);
                        }
                        Err(e) => {
                            counts.failed += 1;
                            if self.errors.len() < MAX_ERROR_SAMPLES {
                                self.errors.push(e);
                            }
                        }
                    }
                }
                batch.clear();
            }
            if n == 0 {
                break;
            }
        }
        self.counts.merge(counts);
        Ok(counts)
    }
}

/// A session with its robot verdict and access pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSession {
    pub session: Session,
    pub verdict: RobotVerdict,
    /// `None` when the session holds no URI-M or URI-T request.
    pub pattern: Option<PatternLabel>,
}

impl LabeledSession {
    pub fn cohort(&self) -> Cohort {
        self.verdict.cohort()
    }

    pub fn self_identified(&self) -> bool {
        self.verdict.triggered.contains(&Heuristic::SelfIdentified)
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    /// Every parsed request, in input order.
    pub requests: Vec<Request>,
    pub clean: CleanReport,
    pub users: usize,
    pub collapsed_ips: usize,
    /// Ordered by user key, then by session start.
    pub sessions: Vec<LabeledSession>,
    pub robot_config: RobotConfig,
}

impl Analysis {
    pub fn cohort_sessions(&self, cohort: Cohort) -> impl Iterator<Item = &LabeledSession> {
        self.sessions.iter().filter(move |s| s.cohort() == cohort)
    }
}

/// Run everything after parsing.
pub fn analyze(requests: Vec<Request>, timeout: i64, ua_threshold: usize, robot: &RobotConfig) -> Analysis {
    let (retained, clean) = clean_indices(&requests);
    let directory = UserDirectory::build(retained.iter().map(|&i| &requests[i].record), ua_threshold);
    let users_clean = group_by_user(&directory, &requests, retained.iter().copied());
    let mut users_raw = group_by_user(&directory, &requests, 0..requests.len());

    let work: Vec<_> = users_clean
        .into_iter()
        .map(|(key, idx)| {
            let raw = users_raw.remove(&key).unwrap_or_default();
            (key, idx, raw)
        })
        .collect();
    let users = work.len();
    let sessions: Vec<LabeledSession> = work
        .into_par_iter()
        .flat_map_iter(|(key, idx, raw)| {
            let raw: Vec<&Request> = raw.iter().map(|&i| &requests[i]).collect();
            let cleaned: Vec<Request> = idx.iter().map(|&i| requests[i].clone()).collect();
            sessionize(&key, cleaned, &raw, timeout)
                .into_iter()
                .map(|session| {
                    let verdict = classify_session(&session, robot);
                    let pattern = classify_pattern(&session.requests);
                    LabeledSession { session, verdict, pattern }
                })
                .collect::<Vec<_>>()
        })
        .collect();

    Analysis {
        requests,
        clean,
        users,
        collapsed_ips: directory.collapsed_count(),
        sessions,
        robot_config: robot.clone(),
    }
}

/// Convenience wrapper taking the whole configuration.
pub fn analyze_with(requests: Vec<Request>, config: &AnalysisConfig) -> Result<Analysis, ConfigError> {
    config.validate()?;
    let robot = config.robot_config()?;
    Ok(analyze(requests, config.session_timeout_s, config.ua_per_ip_threshold, &robot))
}

/// Parse text held in memory and analyze it.
pub fn analyze_text(text: &str, config: &AnalysisConfig) -> Result<(Analysis, ParseCounts), ConfigError> {
    let mut ingest = Ingest::default();
    let counts = ingest
        .read(text.as_bytes(), config.format, &config.classifier())
        .expect("reading from memory cannot fail");
    Ok((analyze_with(ingest.requests, config)?, counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::PatternKind;

    const EXCERPTS: &str = "\
0.100.61.20 02/Feb/2012:06:48:24 http://wayback.archive.org/web/*/http://iyasizuku.com
0.248.211.54 02/Feb/2012:07:04:52 http://wayback.archive.org/web/20000715000000*/http://google.com
0.248.211.54 02/Feb/2012:07:04:59 http://web.archive.org/web/20000301105534/http://google.com/
0.248.211.54 02/Feb/2012:07:05:12 http://web.archive.org/web/20051101145803/http://www.google.com
0.248.211.54 02/Feb/2012:07:05:27 http://web.archive.org/web/20080730200402/http://www.google.com/
0.248.211.54 02/Feb/2012:07:05:38 http://web.archive.org/web/20110215024256/http://www.google.com/
";

    #[test]
    fn figure_sessions_end_to_end() {
        let cfg = AnalysisConfig { format: LogFormat::Reduced, ..Default::default() };
        let (analysis, counts) = analyze_text(EXCERPTS, &cfg).unwrap();
        assert_eq!(counts, ParseCounts { parsed: 6, failed: 0 });
        assert_eq!(analysis.sessions.len(), 2);
        let kinds: Vec<_> = analysis.sessions.iter().map(|s| s.pattern.as_ref().unwrap().kind).collect();
        assert_eq!(kinds, vec![PatternKind::Dip, PatternKind::Slide]);
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg = AnalysisConfig::from_toml("").unwrap();
        assert_eq!(cfg, AnalysisConfig::default());
        let cfg = AnalysisConfig::from_toml("session_timeout_s = 1800\n[resource_class_lists]\nimage_exts = [\"png\"]\n").unwrap();
        assert_eq!(cfg.session_timeout_s, 1800);
        assert!(AnalysisConfig::from_toml("bs_threshold = 0.0").is_err());
        assert!(AnalysisConfig::from_toml("no_such_key = 1").is_err());
    }

    #[test]
    fn batches_preserve_order() {
        let mut text = String::new();
        for i in 0..(BATCH_LINES + 7) {
            if i % 1000 == 3 {
                text.push_str("garbage\n");
            } else {
                text.push_str(&format!("10.0.0.1 02/Feb/2012:07:00:00 /web/*/http://s{i}.com\n"));
            }
        }
        let mut ingest = Ingest::default();
        let counts = ingest.read(text.as_bytes(), LogFormat::Reduced, &UriClassifier::default()).unwrap();
        assert_eq!(counts.parsed + counts.failed, (BATCH_LINES + 7) as u64);
        assert_eq!(counts.failed, 17);
        assert_eq!(ingest.errors[1].line_no, 1004);
        assert_eq!(ingest.requests[0].target.uri_r.as_deref(), Some("s0.com/"));
        assert_eq!(ingest.requests.last().unwrap().target.uri_r.as_deref(), Some(format!("s{}.com/", BATCH_LINES + 6).as_str()));
    }
}
