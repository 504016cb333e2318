//! Compare ground truth with a session dump.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::generate::TruthLine;
use crate::pattern::{PatternKind, SegmentKind};
use crate::report::SessionDump;
use crate::robot::{Cohort, Heuristic};
use crate::session::UserKey;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SessionKey {
    pub user: UserKey,
    pub session: usize,
}

impl fmt::Display for SessionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.user.agent, self.user.collapsed) {
            (_, true) => write!(f, "{} [collapsed] #{}", self.user.ip, self.session),
            (Some(ua), false) => write!(f, "{} \"{ua}\" #{}", self.user.ip, self.session),
            (None, false) => write!(f, "{} #{}", self.user.ip, self.session),
        }
    }
}

/// What the generator planted for one session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedSession {
    pub cohort: Cohort,
    pub pattern: PatternKind,
    pub triggers: BTreeSet<Heuristic>,
    pub segments: Vec<SegmentKind>,
    /// Requests that survive cleaning.
    pub length: usize,
}

/// Fold per-line truth into per-session expectations.
pub fn expected_sessions(truth: &[TruthLine]) -> BTreeMap<SessionKey, ExpectedSession> {
    let mut out: BTreeMap<SessionKey, ExpectedSession> = BTreeMap::new();
    for t in truth {
        let key = SessionKey { user: t.user.clone(), session: t.session };
        let e = out.entry(key).or_insert_with(|| ExpectedSession {
            cohort: t.cohort,
            pattern: t.pattern,
            triggers: t.triggers.clone(),
            segments: t.segments.clone(),
            length: 0,
        });
        e.length += usize::from(t.cleaned);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub key: SessionKey,
    pub field: String,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffReport {
    pub expected_sessions: usize,
    pub found_sessions: usize,
    pub matched: usize,
    /// Planted sessions the pipeline did not produce (merged or split).
    pub missing: Vec<SessionKey>,
    /// Pipeline sessions with no planted counterpart.
    pub unexpected: Vec<SessionKey>,
    pub mismatches: Vec<Mismatch>,
}

impl DiffReport {
    pub fn is_clean(&self) -> bool {
        self.missing.is_empty() && self.unexpected.is_empty() && self.mismatches.is_empty()
    }

    pub fn structural(&self) -> bool {
        !self.missing.is_empty() || !self.unexpected.is_empty()
    }

    /// Sessions whose cohort matched, over all planted sessions.
    pub fn cohort_accuracy(&self) -> f64 {
        self.field_accuracy("cohort")
    }

    pub fn pattern_accuracy(&self) -> f64 {
        self.field_accuracy("pattern")
    }

    fn field_accuracy(&self, field: &str) -> f64 {
        if self.expected_sessions == 0 {
            return 1.0;
        }
        let wrong = self.mismatches.iter().filter(|m| m.field == field).count();
        (self.matched - wrong) as f64 / self.expected_sessions as f64
    }
}

impl fmt::Display for DiffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "expected {} sessions, found {}, matched {}",
            self.expected_sessions, self.found_sessions, self.matched
        )?;
        for k in &self.missing {
            writeln!(f, "missing: {k}")?;
        }
        for k in &self.unexpected {
            writeln!(f, "unexpected: {k}")?;
        }
        for m in &self.mismatches {
            writeln!(f, "mismatch: {} {}: expected {}, found {}", m.key, m.field, m.expected, m.found)?;
        }
        Ok(())
    }
}

fn show<T: fmt::Debug>(x: &T) -> String {
    format!("{x:?}")
}

pub fn verify(truth: &[TruthLine], found: &[SessionDump]) -> DiffReport {
    let expected = expected_sessions(truth);
    let found: BTreeMap<SessionKey, &SessionDump> = found
        .iter()
        .map(|d| (SessionKey { user: d.user.clone(), session: d.session }, d))
        .collect();
    let mut report = DiffReport {
        expected_sessions: expected.len(),
        found_sessions: found.len(),
        ..Default::default()
    };
    for (key, exp) in &expected {
        let Some(got) = found.get(key) else {
            report.missing.push(key.clone());
            continue;
        };
        report.matched += 1;
        let mut check = |field: &str, e: String, g: String| {
            if e != g {
                report.mismatches.push(Mismatch { key: key.clone(), field: field.into(), expected: e, found: g });
            }
        };
        check("cohort", show(&exp.cohort), show(&got.cohort));
        check("pattern", show(&Some(exp.pattern)), show(&got.pattern.as_ref().map(|p| p.kind)));
        check("triggers", show(&exp.triggers), show(&got.triggered));
        let segs: Vec<SegmentKind> = got.pattern.iter().flat_map(|p| p.segments.iter().map(|s| s.kind)).collect();
        check("segments", show(&exp.segments), show(&segs));
        check("length", exp.length.to_string(), got.features.length.to_string());
    }
    report.unexpected = found.keys().filter(|k| !expected.contains_key(*k)).cloned().collect();
    report
}
