//! Access-pattern classification: Dip, Slide, Dive, Skim, and Slide/Dive
//! composites.
//!
//! Only URI-M and URI-T requests take part. Precedence, first match wins:
//!
//! 1. one request: Dip
//! 2. only TimeMaps: Skim
//! 3. a single URI-R throughout: Slide
//! 4. segment decomposition: only Dive segments gives Dive, a mix gives Composite
//!
//! Decomposition walks consecutive request pairs. Equal URI-Rs extend a Slide
//! run, different URI-Rs a Dive run. A Slide run must contain at least two
//! mementos; shorter runs (a TimeMap followed by its first memento) are folded
//! into the surrounding Dive. Adjacent segments share their boundary request.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::archive_uri::{MementoDatetime, UriKind};
use crate::request::Request;
use crate::robot::Cohort;
use crate::stats::Summary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PatternKind {
    Dip,
    Slide,
    Dive,
    Skim,
    Composite,
}

impl PatternKind {
    pub const ALL: [PatternKind; 5] = [
        PatternKind::Dip,
        PatternKind::Slide,
        PatternKind::Dive,
        PatternKind::Skim,
        PatternKind::Composite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PatternKind::Dip => "Dip",
            PatternKind::Slide => "Slide",
            PatternKind::Dive => "Dive",
            PatternKind::Skim => "Skim",
            PatternKind::Composite => "Composite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SegmentKind {
    Slide,
    Dive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    /// Index of the first request (among eligible requests) in the segment.
    pub start: usize,
    /// Requests spanned, boundary requests included.
    pub length: usize,
}

impl Segment {
    pub fn end(&self) -> usize {
        self.start + self.length
    }
}

/// One URI-M or URI-T request, reduced to what classification looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step<'a> {
    pub timemap: bool,
    pub uri_r: &'a str,
    pub datetime: Option<MementoDatetime>,
}

impl<'a> Step<'a> {
    pub fn memento(uri_r: &'a str, datetime: MementoDatetime) -> Self {
        Step { timemap: false, uri_r, datetime: Some(datetime) }
    }

    pub fn timemap(uri_r: &'a str) -> Self {
        Step { timemap: true, uri_r, datetime: None }
    }

    /// `None` for requests that are neither URI-M nor URI-T.
    pub fn from_request(req: &'a Request) -> Option<Self> {
        let uri_r = req.target.uri_r.as_deref()?;
        match req.target.kind {
            UriKind::Memento => Some(Step { timemap: false, uri_r, datetime: req.target.memento_datetime }),
            UriKind::TimeMap => Some(Step::timemap(uri_r)),
            UriKind::Other => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternLabel {
    pub kind: PatternKind,
    pub segments: Vec<Segment>,
    /// Eligible requests, each counted once.
    pub pattern_length: usize,
    pub timemaps: usize,
    pub mementos: usize,
    /// Latest minus earliest Memento-Datetime, seconds; reported, not used
    /// for classification.
    pub datetime_spread_s: Option<i64>,
}

impl PatternLabel {
    pub fn slide_segments(&self) -> usize {
        self.segments.iter().filter(|s| s.kind == SegmentKind::Slide).count()
    }

    pub fn dive_segments(&self) -> usize {
        self.segments.iter().filter(|s| s.kind == SegmentKind::Dive).count()
    }
}

/// Ordered Slide/Dive segments of a run of at least two eligible requests.
pub fn decompose_segments(steps: &[Step<'_>]) -> Vec<Segment> {
    if steps.len() < 2 {
        return Vec::new();
    }
    // same[i] describes the pair (i, i + 1).
    let mut same: Vec<bool> = steps.windows(2).map(|w| w[0].uri_r == w[1].uri_r).collect();
    if same.iter().all(|&s| s) {
        return vec![Segment { kind: SegmentKind::Slide, start: 0, length: steps.len() }];
    }
    for run in runs(&same) {
        if !run.same {
            continue;
        }
        let covered = &steps[run.first..=run.last + 1];
        if covered.iter().filter(|s| !s.timemap).count() < 2 {
            same[run.first..=run.last].fill(false);
        }
    }
    runs(&same)
        .into_iter()
        .map(|run| Segment {
            kind: if run.same { SegmentKind::Slide } else { SegmentKind::Dive },
            start: run.first,
            length: run.last - run.first + 2,
        })
        .collect()
}

struct Run {
    same: bool,
    first: usize,
    last: usize,
}

fn runs(pairs: &[bool]) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::new();
    for (i, &s) in pairs.iter().enumerate() {
        match out.last_mut() {
            Some(run) if run.same == s => run.last = i,
            _ => out.push(Run { same: s, first: i, last: i }),
        }
    }
    out
}

/// Classify a sequence of eligible requests; `None` when empty.
pub fn classify_steps(steps: &[Step<'_>]) -> Option<PatternLabel> {
    let n = steps.len();
    if n == 0 {
        return None;
    }
    let timemaps = steps.iter().filter(|s| s.timemap).count();
    let secs: Vec<i64> = steps.iter().filter_map(|s| s.datetime.map(|d| d.unix_seconds())).collect();
    let datetime_spread_s = secs.iter().max().zip(secs.iter().min()).map(|(hi, lo)| hi - lo);

    let (kind, segments) = if n == 1 {
        (PatternKind::Dip, Vec::new())
    } else if timemaps == n {
        (PatternKind::Skim, Vec::new())
    } else {
        let segments = decompose_segments(steps);
        let has_slide = segments.iter().any(|s| s.kind == SegmentKind::Slide);
        let has_dive = segments.iter().any(|s| s.kind == SegmentKind::Dive);
        let kind = match (has_slide, has_dive) {
            (true, false) => PatternKind::Slide,
            (false, true) => PatternKind::Dive,
            _ => PatternKind::Composite,
        };
        (kind, segments)
    };
    Some(PatternLabel {
        kind,
        segments,
        pattern_length: n,
        timemaps,
        mementos: n - timemaps,
        datetime_spread_s,
    })
}

/// Classify a session's requests; non-archive requests (robots.txt, partial
/// timestamps, site pages) are ignored.
pub fn classify_pattern(requests: &[Request]) -> Option<PatternLabel> {
    let steps: Vec<Step<'_>> = requests.iter().filter_map(Step::from_request).collect();
    classify_steps(&steps)
}

/// Length statistics per cohort and pattern. Composite sessions contribute
/// each of their segments to the Slide and Dive rows, and their full length
/// to the Composite row.
pub type PatternStats = BTreeMap<Cohort, BTreeMap<PatternKind, Summary>>;

pub fn pattern_stats<'a>(labeled: impl IntoIterator<Item = (Cohort, &'a PatternLabel)>) -> PatternStats {
    let mut lengths: BTreeMap<Cohort, BTreeMap<PatternKind, Vec<f64>>> = BTreeMap::new();
    for (cohort, label) in labeled {
        let by_kind = lengths.entry(cohort).or_default();
        by_kind.entry(label.kind).or_default().push(label.pattern_length as f64);
        if label.kind == PatternKind::Composite {
            for seg in &label.segments {
                let kind = match seg.kind {
                    SegmentKind::Slide => PatternKind::Slide,
                    SegmentKind::Dive => PatternKind::Dive,
                };
                by_kind.entry(kind).or_default().push(seg.length as f64);
            }
        }
    }
    lengths
        .into_iter()
        .map(|(cohort, kinds)| {
            let summaries = kinds
                .into_iter()
                .filter_map(|(k, v)| Summary::of(&v).map(|s| (k, s)))
                .collect();
            (cohort, summaries)
        })
        .collect()
}
