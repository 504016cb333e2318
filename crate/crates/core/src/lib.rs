//! Mining web-archive access logs: parse Wayback-style log lines, classify
//! requests into the Memento model, clean, sessionize, separate robots from
//! humans and label each session with its access pattern.

pub mod access_log;
pub mod archive_uri;
pub mod clean;
pub mod pattern;
pub mod pipeline;
pub mod report;
pub mod request;
pub mod robot;
pub mod session;
pub mod stats;
pub mod synth;

pub use access_log::{parse_line, parse_line_as, LogFormat, LogRecord, Method, ParseError};
pub use archive_uri::{canonicalize, classify, ArchiveUri, MementoDatetime, ResourceClass, UriKind};
pub use clean::{clean, CleanReport, Filter};
pub use pattern::{classify_pattern, PatternKind, PatternLabel, Segment, SegmentKind};
pub use request::Request;
pub use robot::{classify_session, Cohort, Heuristic, RobotConfig, RobotVerdict};
pub use session::{Session, SessionFeatures, UserKey};
pub use stats::Summary;
pub use pipeline::{analyze_text, analyze_with, Analysis, AnalysisConfig, ConfigError, Ingest, LabeledSession};
pub use report::{build_report, write_outputs, Report, SessionDump, OUTPUT_FILES};
pub use synth::{generate, parse_truth, verify, DiffReport, Generated, Scenario, TruthLine};
