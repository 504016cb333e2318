use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::archive_uri::{MementoDatetime, ResourceClass, UriKind};
use crate::pattern::PatternLabel;
use crate::pipeline::LabeledSession;
use crate::robot::{Cohort, Heuristic};
use crate::session::{RawWindow, SessionFeatures, UserKey};

/// One line of `sessions.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDump {
    pub user: UserKey,
    /// Position among the user's sessions, from 0.
    pub session: usize,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub cohort: Cohort,
    pub triggered: BTreeSet<Heuristic>,
    pub features: SessionFeatures,
    pub raw_window: RawWindow,
    pub pattern: Option<PatternLabel>,
    pub requests: Vec<DumpedRequest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpedRequest {
    pub time: DateTime<Utc>,
    pub method: String,
    pub uri: String,
    pub status: u16,
    pub kind: UriKind,
    pub uri_r: Option<String>,
    pub memento_datetime: Option<MementoDatetime>,
    pub resource_class: ResourceClass,
}

impl From<&LabeledSession> for SessionDump {
    fn from(s: &LabeledSession) -> Self {
        let session = &s.session;
        SessionDump {
            user: session.user.clone(),
            session: session.index,
            start: session.requests[0].record.timestamp,
            end: session.requests[session.requests.len() - 1].record.timestamp,
            cohort: s.cohort(),
            triggered: s.verdict.triggered.clone(),
            features: session.features.clone(),
            raw_window: session.raw,
            pattern: s.pattern.clone(),
            requests: session
                .requests
                .iter()
                .map(|r| DumpedRequest {
                    time: r.record.timestamp,
                    method: r.record.method.as_str().to_string(),
                    uri: r.record.request_uri.clone(),
                    status: r.record.status,
                    kind: r.target.kind,
                    uri_r: r.target.uri_r.clone(),
                    memento_datetime: r.target.memento_datetime,
                    resource_class: r.target.resource_class,
                })
                .collect(),
        }
    }
}
