//! Aggregate reports over an analysis: sample features, robot heuristics,
//! cleaning, cohort activity, pattern distributions and lengths, session
//! distributions and the per-year memento histogram.

mod dump;
mod export;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::access_log::Method;
use crate::archive_uri::UriKind;
use crate::clean::{percent, CleanReport};
use crate::pattern::{pattern_stats, PatternKind, PatternStats, SegmentKind};
use crate::pipeline::{Analysis, AnalysisConfig, LabeledSession};
use crate::robot::{counts_from_verdicts, independent_counts, Cohort, Heuristic, HeuristicCount};
use crate::stats::median_opt;

pub use dump::{DumpedRequest, SessionDump};
pub use export::{write_outputs, OUTPUT_FILES};

pub const BYTES_PER_MB: f64 = 1_000_000.0;
/// Years before this are reported but flagged as too sparse to read much into.
pub const SPARSE_BEFORE_YEAR: i32 = 2001;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("no parsable log records")]
    EmptyInput,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleFeatures {
    /// Last minus first raw timestamp, `HH:MM:SS` (hours may exceed 24).
    pub duration: String,
    pub requests: u64,
    pub megabytes: f64,
    pub pct_get: f64,
    pub pct_embedded: f64,
    pub pct_si_robots: f64,
    pub pct_nullref: f64,
    pub pct_s2xx: f64,
    pub pct_s3xx: f64,
    pub pct_s4xx: f64,
    pub pct_s5xx: f64,
    pub pct_cleaned: f64,
    pub sessions: u64,
}

pub fn format_duration(secs: i64) -> String {
    format!("{:02}:{:02}:{:02}", secs / 3600, secs % 3600 / 60, secs % 60)
}

pub fn sample_features(analysis: &Analysis) -> Result<SampleFeatures, ReportError> {
    let raw = &analysis.requests;
    let n = raw.len() as u64;
    let (Some(first), Some(last)) = (raw.iter().map(|r| r.time()).min(), raw.iter().map(|r| r.time()).max()) else {
        return Err(ReportError::EmptyInput);
    };
    let count = |pred: &dyn Fn(&crate::request::Request) -> bool| raw.iter().filter(|r| pred(r)).count() as u64;
    let status = |class: u16| count(&|r| r.record.status / 100 == class);
    let si = &analysis.robot_config.si_patterns;
    Ok(SampleFeatures {
        duration: format_duration(last - first),
        requests: n,
        megabytes: raw.iter().map(|r| r.record.bytes_sent).sum::<u64>() as f64 / BYTES_PER_MB,
        pct_get: percent(count(&|r| r.record.method == Method::Get), n),
        pct_embedded: percent(count(&|r| r.target.resource_class.is_embedded()), n),
        pct_si_robots: percent(count(&|r| si.matches(r.user_agent())), n),
        pct_nullref: percent(count(&|r| r.record.referrer.is_none()), n),
        pct_s2xx: percent(status(2), n),
        pct_s3xx: percent(status(3), n),
        pct_s4xx: percent(status(4), n),
        pct_s5xx: percent(status(5), n),
        pct_cleaned: percent(analysis.clean.retained, n),
        sessions: analysis.sessions.len() as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeuristicRow {
    pub heuristic: Heuristic,
    pub sessions: u64,
    pub requests: u64,
    pub pct_sessions: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobotTable {
    /// Each heuristic evaluated on its own; rows overlap.
    pub heuristics: Vec<HeuristicRow>,
    pub total_sessions: u64,
    pub robot_sessions: u64,
    pub human_sessions: u64,
    /// Robot sessions per human session.
    pub robot_human_ratio: Option<f64>,
    /// Whether the independent tallies match those read off the combined
    /// trigger sets.
    pub accounting_consistent: bool,
}

pub fn robot_table(analysis: &Analysis) -> RobotTable {
    let sessions: Vec<_> = analysis.sessions.iter().map(|s| s.session.clone()).collect();
    let independent = independent_counts(&sessions, &analysis.robot_config);
    let combined = counts_from_verdicts(analysis.sessions.iter().map(|s| (&s.session, &s.verdict)));
    let total = sessions.len() as u64;
    let robots = analysis.cohort_sessions(Cohort::Robots).count() as u64;
    let humans = total - robots;
    RobotTable {
        heuristics: independent
            .iter()
            .map(|&(heuristic, HeuristicCount { sessions, requests })| HeuristicRow {
                heuristic,
                sessions,
                requests,
                pct_sessions: percent(sessions, total),
            })
            .collect(),
        total_sessions: total,
        robot_sessions: robots,
        human_sessions: humans,
        robot_human_ratio: (humans > 0).then(|| robots as f64 / humans as f64),
        accounting_consistent: independent == combined,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CleaningTable {
    #[serde(flatten)]
    pub counts: CleanReport,
    pub percentages: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CohortSummary {
    pub cohort: Option<Cohort>,
    pub sessions: u64,
    pub self_identified_sessions: u64,
    pub requests_filtered: u64,
    pub requests_raw: u64,
    pub megabytes: f64,
    pub uri_t_count: u64,
    pub uri_m_count: u64,
    pub pct_sessions: f64,
    pub pct_requests_filtered: f64,
    pub pct_requests_raw: f64,
    pub mb_per_session: Option<f64>,
    pub pct_uri_t: f64,
    pub pct_uri_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortTable {
    pub robots: CohortSummary,
    pub humans: CohortSummary,
    /// Raw requests outside every session window (invalid requests, noise
    /// before a user's first kept request, users with nothing kept).
    pub unattributed_raw: u64,
}

pub fn cohort_summary(analysis: &Analysis) -> CohortTable {
    let total_sessions = analysis.sessions.len() as u64;
    let total_raw = analysis.clean.total_raw;
    let total_filtered = analysis.clean.retained;
    let summarize = |cohort: Cohort| {
        let mut c = CohortSummary { cohort: Some(cohort), ..Default::default() };
        let mut bytes = 0u64;
        for s in analysis.cohort_sessions(cohort) {
            c.sessions += 1;
            c.self_identified_sessions += u64::from(s.self_identified());
            c.requests_filtered += s.session.features.length as u64;
            c.requests_raw += s.session.raw.requests;
            bytes += s.session.raw.bytes;
            for r in &s.session.requests {
                match r.target.kind {
                    UriKind::TimeMap => c.uri_t_count += 1,
                    UriKind::Memento => c.uri_m_count += 1,
                    UriKind::Other => {}
                }
            }
        }
        c.megabytes = bytes as f64 / BYTES_PER_MB;
        c.pct_sessions = percent(c.sessions, total_sessions);
        c.pct_requests_filtered = percent(c.requests_filtered, total_filtered);
        c.pct_requests_raw = percent(c.requests_raw, total_raw);
        c.mb_per_session = (c.sessions > 0).then(|| c.megabytes / c.sessions as f64);
        c.pct_uri_t = percent(c.uri_t_count, c.uri_t_count + c.uri_m_count);
        c.pct_uri_m = percent(c.uri_m_count, c.uri_t_count + c.uri_m_count);
        c
    };
    let robots = summarize(Cohort::Robots);
    let humans = summarize(Cohort::Humans);
    let unattributed_raw = total_raw - robots.requests_raw - humans.requests_raw;
    CohortTable { robots, humans, unattributed_raw }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct KindShare {
    pub sessions: u64,
    pub pct_sessions: f64,
    pub uri_t: u64,
    pub uri_m: u64,
    pub pct_uri_t: f64,
    pub pct_uri_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternDistribution {
    /// Sessions with at least one URI-M or URI-T request.
    pub sessions: u64,
    pub no_pattern: u64,
    pub kinds: BTreeMap<PatternKind, KindShare>,
    pub composite_sessions: u64,
    /// Segments found inside Composite sessions.
    pub slide_segments: u64,
    pub dive_segments: u64,
}

pub fn pattern_distribution<'a>(sessions: impl IntoIterator<Item = &'a LabeledSession>) -> PatternDistribution {
    let mut kinds: BTreeMap<PatternKind, KindShare> = PatternKind::ALL.iter().map(|k| (*k, KindShare::default())).collect();
    let mut d = PatternDistribution {
        sessions: 0,
        no_pattern: 0,
        kinds: BTreeMap::new(),
        composite_sessions: 0,
        slide_segments: 0,
        dive_segments: 0,
    };
    for s in sessions {
        let Some(label) = &s.pattern else {
            d.no_pattern += 1;
            continue;
        };
        d.sessions += 1;
        let share = kinds.get_mut(&label.kind).expect("all kinds seeded");
        share.sessions += 1;
        share.uri_t += label.timemaps as u64;
        share.uri_m += label.mementos as u64;
        if label.kind == PatternKind::Composite {
            d.composite_sessions += 1;
            d.slide_segments += label.slide_segments() as u64;
            d.dive_segments += label.dive_segments() as u64;
        }
    }
    for share in kinds.values_mut() {
        share.pct_sessions = percent(share.sessions, d.sessions);
        share.pct_uri_t = percent(share.uri_t, share.uri_t + share.uri_m);
        share.pct_uri_m = percent(share.uri_m, share.uri_t + share.uri_m);
    }
    d.kinds = kinds;
    d
}

/// Duration buckets for multi-request sessions, upper bounds exclusive.
pub const DURATION_BUCKETS: [(&str, i64); 6] = [
    ("<1m", 60),
    ("1-5m", 300),
    ("5-10m", 600),
    ("10-30m", 1800),
    ("30-60m", 3600),
    (">60m", i64::MAX),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BucketCount {
    pub bucket: &'static str,
    pub sessions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionDistribution {
    pub sessions: u64,
    /// Self-identified robot sessions, left out of every figure below.
    pub excluded_self_identified: u64,
    pub length_histogram: BTreeMap<usize, u64>,
    pub multi_request_sessions: u64,
    pub duration_buckets: Vec<BucketCount>,
    pub median_duration_s: Option<f64>,
    pub median_mean_irt: Option<f64>,
    pub median_stdev_irt: Option<f64>,
}

pub fn session_distribution<'a>(sessions: impl IntoIterator<Item = &'a LabeledSession>) -> SessionDistribution {
    let mut excluded = 0;
    let mut kept = 0;
    let mut lengths: BTreeMap<usize, u64> = BTreeMap::new();
    let mut buckets = [0u64; DURATION_BUCKETS.len()];
    let (mut durations, mut means, mut stdevs) = (Vec::new(), Vec::new(), Vec::new());
    for s in sessions {
        if s.self_identified() {
            excluded += 1;
            continue;
        }
        kept += 1;
        let f = &s.session.features;
        *lengths.entry(f.length).or_default() += 1;
        if f.length < 2 {
            continue;
        }
        let b = DURATION_BUCKETS.iter().position(|&(_, hi)| f.duration_s < hi).expect("last bucket is unbounded");
        buckets[b] += 1;
        durations.push(f.duration_s as f64);
        means.extend(f.mean_irt);
        stdevs.extend(f.stdev_irt);
    }
    SessionDistribution {
        sessions: kept,
        excluded_self_identified: excluded,
        length_histogram: lengths,
        multi_request_sessions: durations.len() as u64,
        duration_buckets: DURATION_BUCKETS
            .iter()
            .zip(buckets)
            .map(|(&(bucket, _), sessions)| BucketCount { bucket, sessions })
            .collect(),
        median_duration_s: median_opt(&durations),
        median_mean_irt: median_opt(&means),
        median_stdev_irt: median_opt(&stdevs),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct YearCount {
    pub year: i32,
    /// Distinct (URI-R, Memento-Datetime) pairs.
    pub unique_mementos: u64,
    pub total_requests: u64,
    pub sparse: bool,
}

/// URI-M requests per Memento-Datetime year, over the given sessions.
pub fn temporal_histogram<'a>(sessions: impl IntoIterator<Item = &'a LabeledSession>) -> Vec<YearCount> {
    let mut years: BTreeMap<i32, (BTreeSet<(&str, i64)>, u64)> = BTreeMap::new();
    for s in sessions {
        for r in &s.session.requests {
            let (UriKind::Memento, Some(dt), Some(uri_r)) = (r.target.kind, r.target.memento_datetime, r.target.uri_r.as_deref())
            else {
                continue;
            };
            let entry = years.entry(dt.year()).or_default();
            entry.0.insert((uri_r, dt.unix_seconds()));
            entry.1 += 1;
        }
    }
    years
        .into_iter()
        .map(|(year, (unique, total))| YearCount {
            year,
            unique_mementos: unique.len() as u64,
            total_requests: total,
            sparse: year < SPARSE_BEFORE_YEAR,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputSummary {
    pub lines: u64,
    pub parsed: u64,
    pub failed: u64,
    pub users: u64,
    pub collapsed_ips: u64,
}

/// Effective configuration, echoed for provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    #[serde(flatten)]
    pub config: AnalysisConfig,
    pub si_patterns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config: ConfigEcho,
    pub input: InputSummary,
    pub sample_features: SampleFeatures,
    pub robot_heuristics: RobotTable,
    pub cleaning: CleaningTable,
    pub cohorts: CohortTable,
    pub pattern_distribution: BTreeMap<Cohort, PatternDistribution>,
    pub pattern_lengths: PatternStats,
    pub session_distributions: BTreeMap<Cohort, SessionDistribution>,
    /// Human sessions only.
    pub temporal: Vec<YearCount>,
}

fn per_cohort<T>(f: impl Fn(Cohort) -> T) -> BTreeMap<Cohort, T> {
    Cohort::ALL.iter().map(|&c| (c, f(c))).collect()
}

/// Build the full report. `failed_lines` is the number of unparsable lines.
pub fn build_report(analysis: &Analysis, config: &AnalysisConfig, failed_lines: u64) -> Result<Report, ReportError> {
    let sample_features = sample_features(analysis)?;
    let parsed = analysis.requests.len() as u64;
    Ok(Report {
        config: ConfigEcho {
            config: config.clone(),
            si_patterns: analysis.robot_config.si_patterns.patterns().to_vec(),
        },
        input: InputSummary {
            lines: parsed + failed_lines,
            parsed,
            failed: failed_lines,
            users: analysis.users as u64,
            collapsed_ips: analysis.collapsed_ips as u64,
        },
        sample_features,
        robot_heuristics: robot_table(analysis),
        cleaning: CleaningTable { percentages: analysis.clean.percentages(), counts: analysis.clean.clone() },
        cohorts: cohort_summary(analysis),
        pattern_distribution: per_cohort(|c| pattern_distribution(analysis.cohort_sessions(c))),
        pattern_lengths: pattern_stats(
            analysis.sessions.iter().filter_map(|s| s.pattern.as_ref().map(|p| (s.cohort(), p))),
        ),
        session_distributions: per_cohort(|c| session_distribution(analysis.cohort_sessions(c))),
        temporal: temporal_histogram(analysis.cohort_sessions(Cohort::Humans)),
    })
}

/// Segment kinds of a label, in order; handy for comparisons.
pub fn segment_kinds(label: &crate::pattern::PatternLabel) -> Vec<SegmentKind> {
    label.segments.iter().map(|s| s.kind).collect()
}
