//! Synthetic access logs with ground truth, and the comparison against a
//! pipeline run.

mod generate;
pub mod presets;
mod scenario;
mod verify;

pub use generate::{generate, parse_truth, utc, Generated, Role, TruthLine, BROWSER_UAS, CRAWLER_UA};
pub use scenario::{
    composite_length, default_scenario, IrtModel, Scenario, ScenarioError, ScenarioErrors, SegmentSpec, SessionSpec,
    StatusMix, StepSpec, UserSpec,
};
pub use verify::{expected_sessions, verify, DiffReport, ExpectedSession, Mismatch, SessionKey};
