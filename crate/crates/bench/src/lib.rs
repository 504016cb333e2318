//! Corpus construction and the measured loop shared by the benchmarks and
//! the throughput acceptance check.

use std::time::{Duration, Instant};

use waylog_core::archive_uri::UriClassifier;
use waylog_core::synth::presets;
use waylog_core::{generate, parse_line_as, LogFormat, Request};

/// A full-format log of exactly `lines` lines, built by repeating a seeded
/// mixed synthetic corpus.
pub fn corpus(lines: usize, seed: u64) -> String {
    let base = generate(&presets::mixed(seed, 400)).expect("preset scenarios validate").log;
    let mut out = String::with_capacity(lines * 220);
    let mut n = 0;
    while n < lines {
        for line in base.lines().take(lines - n) {
            out.push_str(line);
            out.push('\n');
            n += 1;
        }
    }
    out
}

/// Parse and classify every line on the current thread. Returns how many
/// lines became requests.
pub fn parse_classify(text: &str, classifier: &UriClassifier) -> usize {
    let mut ok = 0;
    for (i, line) in text.lines().enumerate() {
        if let Ok(record) = parse_line_as(line, LogFormat::Full, i as u64 + 1) {
            std::hint::black_box(Request::new(record, classifier));
            ok += 1;
        }
    }
    ok
}

#[derive(Debug, Clone, Copy)]
pub struct Throughput {
    pub lines: usize,
    /// Lines that parsed and were classified.
    pub classified: usize,
    pub elapsed: Duration,
}

impl Throughput {
    pub fn lines_per_sec(&self) -> f64 {
        self.lines as f64 / self.elapsed.as_secs_f64()
    }
}

/// Time one single-threaded pass over `text`.
pub fn measure(text: &str) -> Throughput {
    let classifier = UriClassifier::default();
    let start = Instant::now();
    let classified = parse_classify(text, &classifier);
    Throughput { lines: text.lines().count(), classified, elapsed: start.elapsed() }
}
