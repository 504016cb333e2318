//! Cleaning filters: drop requests that say nothing about user navigation.
//!
//! Each filter is an independent predicate over one request. A request is
//! retained only when no filter excludes it; per-filter tallies are taken
//! over the whole raw stream, so they overlap and may sum past the total.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::access_log::Method;
use crate::archive_uri::ResourceClass;
use crate::request::Request;

/// Status codes treated as user-executed requests.
pub const KEPT_STATUSES: [u16; 3] = [200, 404, 503];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Filter {
    StatusCode,
    Embedded,
    StaticLiveweb,
    Invalid,
    Head,
}

impl Filter {
    pub const ALL: [Filter; 5] = [
        Filter::StatusCode,
        Filter::Embedded,
        Filter::StaticLiveweb,
        Filter::Invalid,
        Filter::Head,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Filter::StatusCode => "status_code",
            Filter::Embedded => "embedded",
            Filter::StaticLiveweb => "static_liveweb",
            Filter::Invalid => "invalid",
            Filter::Head => "head",
        }
    }

    /// True when this filter removes the request.
    pub fn excludes(self, req: &Request) -> bool {
        match self {
            Filter::StatusCode => !KEPT_STATUSES.contains(&req.record.status),
            Filter::Embedded => req.target.resource_class.is_embedded(),
            Filter::StaticLiveweb => matches!(
                req.target.resource_class,
                ResourceClass::StaticSite | ResourceClass::Liveweb
            ),
            Filter::Invalid => req.target.is_invalid(),
            Filter::Head => req.record.method == Method::Head,
        }
    }
}

pub fn is_retained(req: &Request) -> bool {
    Filter::ALL.iter().all(|f| !f.excludes(req))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub total_raw: u64,
    /// Requests each filter would exclude on its own.
    pub excluded_by: BTreeMap<String, u64>,
    /// Requests excluded by at least one filter.
    pub excluded_any: u64,
    pub retained: u64,
}

impl CleanReport {
    fn empty() -> Self {
        CleanReport {
            excluded_by: Filter::ALL.iter().map(|f| (f.name().to_string(), 0)).collect(),
            ..Default::default()
        }
    }

    fn add(&mut self, req: &Request) -> bool {
        self.total_raw += 1;
        let mut excluded = false;
        for f in Filter::ALL {
            if f.excludes(req) {
                *self.excluded_by.get_mut(f.name()).expect("all filters pre-seeded") += 1;
                excluded = true;
            }
        }
        if excluded {
            self.excluded_any += 1;
        } else {
            self.retained += 1;
        }
        !excluded
    }

    pub fn merge(&mut self, other: &CleanReport) {
        self.total_raw += other.total_raw;
        self.excluded_any += other.excluded_any;
        self.retained += other.retained;
        for (k, v) in &other.excluded_by {
            *self.excluded_by.entry(k.clone()).or_default() += v;
        }
    }

    pub fn excluded(&self, filter: Filter) -> u64 {
        self.excluded_by.get(filter.name()).copied().unwrap_or(0)
    }

    /// Percent of raw requests each filter excludes, plus `all_filters`.
    pub fn percentages(&self) -> BTreeMap<String, f64> {
        let pct = |n: u64| percent(n, self.total_raw);
        let mut out: BTreeMap<String, f64> = self.excluded_by.iter().map(|(k, v)| (k.clone(), pct(*v))).collect();
        out.insert("all_filters".into(), pct(self.excluded_any));
        out
    }
}

pub(crate) fn percent(n: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * n as f64 / total as f64
    }
}

/// Indices of retained requests, in input order, plus the exclusion tallies.
pub fn clean_indices(records: &[Request]) -> (Vec<usize>, CleanReport) {
    let mut report = CleanReport::empty();
    let retained = records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| report.add(r).then_some(i))
        .collect();
    (retained, report)
}

pub fn clean(records: &[Request]) -> (Vec<&Request>, CleanReport) {
    let (idx, report) = clean_indices(records);
    (idx.into_iter().map(|i| &records[i]).collect(), report)
}
