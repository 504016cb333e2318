use serde::{Deserialize, Serialize};

use crate::access_log::LogRecord;
use crate::archive_uri::{ArchiveUri, UriClassifier};

/// A parsed log record together with its Memento classification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub record: LogRecord,
    pub target: ArchiveUri,
}

impl Request {
    pub fn new(record: LogRecord, classifier: &UriClassifier) -> Self {
        let target = classifier.classify(&record.request_uri);
        Request { record, target }
    }

    pub fn time(&self) -> i64 {
        self.record.time_secs()
    }

    pub fn user_agent(&self) -> Option<&str> {
        self.record.user_agent.as_deref()
    }
}
