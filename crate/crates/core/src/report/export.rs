//! File outputs: `report.json`, one CSV per table or figure, and the
//! session dump.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use super::{Report, SessionDump};
use crate::clean::Filter;
use crate::pattern::PatternKind;
use crate::pipeline::Analysis;
use crate::robot::Cohort;

pub const OUTPUT_FILES: [&str; 9] = [
    "report.json",
    "table1.csv",
    "table2.csv",
    "table3.csv",
    "table4.csv",
    "table5.csv",
    "fig6_patterns.csv",
    "fig7_temporal.csv",
    "sessions.jsonl",
];

fn num(x: f64) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_csv(dir: &Path, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> io::Result<()> {
    let mut w = csv::Writer::from_path(dir.join(name))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()
}

/// Write every output file into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, report: &Report, analysis: &Analysis) -> io::Result<()> {
    fs::create_dir_all(dir)?;

    let mut json = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
    json.push('\n');
    fs::write(dir.join("report.json"), json)?;

    let f = &report.sample_features;
    write_csv(
        dir,
        "table1.csv",
        &["feature", "value"],
        [
            ("duration", f.duration.clone()),
            ("requests", f.requests.to_string()),
            ("megabytes", num(f.megabytes)),
            ("pct_get", num(f.pct_get)),
            ("pct_embedded", num(f.pct_embedded)),
            ("pct_si_robots", num(f.pct_si_robots)),
            ("pct_nullref", num(f.pct_nullref)),
            ("pct_s2xx", num(f.pct_s2xx)),
            ("pct_s3xx", num(f.pct_s3xx)),
            ("pct_s4xx", num(f.pct_s4xx)),
            ("pct_s5xx", num(f.pct_s5xx)),
            ("pct_cleaned", num(f.pct_cleaned)),
            ("sessions", f.sessions.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| vec![k.to_string(), v])
        .collect(),
    )?;

    let t2 = &report.robot_heuristics;
    let mut rows: Vec<Vec<String>> = t2
        .heuristics
        .iter()
        .map(|h| vec![h.heuristic.name().into(), h.sessions.to_string(), h.requests.to_string(), num(h.pct_sessions)])
        .collect();
    rows.push(vec!["robots_total".into(), t2.robot_sessions.to_string(), String::new(), String::new()]);
    rows.push(vec!["humans_total".into(), t2.human_sessions.to_string(), String::new(), String::new()]);
    write_csv(dir, "table2.csv", &["heuristic", "sessions", "requests", "pct_sessions"], rows)?;

    let c = &report.cleaning;
    let mut rows: Vec<Vec<String>> = Filter::ALL
        .iter()
        .map(|flt| {
            let name = flt.name();
            vec![name.into(), c.counts.excluded(*flt).to_string(), num(c.percentages[name])]
        })
        .collect();
    rows.push(vec!["all_filters".into(), c.counts.excluded_any.to_string(), num(c.percentages["all_filters"])]);
    rows.push(vec![
        "retained".into(),
        c.counts.retained.to_string(),
        num(crate::clean::percent(c.counts.retained, c.counts.total_raw)),
    ]);
    write_csv(dir, "table3.csv", &["filter", "requests", "percent"], rows)?;

    let (r, h) = (&report.cohorts.robots, &report.cohorts.humans);
    let rows = vec![
        vec!["sessions".into(), r.sessions.to_string(), h.sessions.to_string()],
        vec!["pct_sessions".into(), num(r.pct_sessions), num(h.pct_sessions)],
        vec!["requests_filtered".into(), r.requests_filtered.to_string(), h.requests_filtered.to_string()],
        vec!["pct_requests_filtered".into(), num(r.pct_requests_filtered), num(h.pct_requests_filtered)],
        vec!["requests_raw".into(), r.requests_raw.to_string(), h.requests_raw.to_string()],
        vec!["pct_requests_raw".into(), num(r.pct_requests_raw), num(h.pct_requests_raw)],
        vec!["megabytes".into(), num(r.megabytes), num(h.megabytes)],
        vec!["mb_per_session".into(), opt(r.mb_per_session), opt(h.mb_per_session)],
        vec!["uri_t".into(), r.uri_t_count.to_string(), h.uri_t_count.to_string()],
        vec!["uri_m".into(), r.uri_m_count.to_string(), h.uri_m_count.to_string()],
        vec!["pct_uri_t".into(), num(r.pct_uri_t), num(h.pct_uri_t)],
        vec!["pct_uri_m".into(), num(r.pct_uri_m), num(h.pct_uri_m)],
        vec!["self_identified_sessions".into(), r.self_identified_sessions.to_string(), h.self_identified_sessions.to_string()],
        vec!["unattributed_raw".into(), report.cohorts.unattributed_raw.to_string(), String::new()],
    ];
    write_csv(dir, "table4.csv", &["metric", "robots", "humans"], rows)?;

    let mut rows = Vec::new();
    for cohort in Cohort::ALL {
        for kind in PatternKind::ALL {
            let s = report.pattern_lengths.get(&cohort).and_then(|m| m.get(&kind));
            rows.push(vec![
                cohort.name().into(),
                kind.name().into(),
                s.map(|s| s.count).unwrap_or(0).to_string(),
                opt(s.map(|s| s.median)),
                opt(s.map(|s| s.mean)),
                opt(s.map(|s| s.stdev)),
            ]);
        }
    }
    write_csv(dir, "table5.csv", &["cohort", "pattern", "count", "median", "mean", "stdev"], rows)?;

    let mut rows = Vec::new();
    for (cohort, d) in &report.pattern_distribution {
        for (kind, share) in &d.kinds {
            rows.push(vec![
                cohort.name().into(),
                kind.name().into(),
                share.sessions.to_string(),
                num(share.pct_sessions),
                share.uri_t.to_string(),
                share.uri_m.to_string(),
                num(share.pct_uri_t),
                num(share.pct_uri_m),
            ]);
        }
    }
    write_csv(
        dir,
        "fig6_patterns.csv",
        &["cohort", "pattern", "sessions", "pct_sessions", "uri_t", "uri_m", "pct_uri_t", "pct_uri_m"],
        rows,
    )?;

    let rows = report
        .temporal
        .iter()
        .map(|y| vec![y.year.to_string(), y.unique_mementos.to_string(), y.total_requests.to_string(), y.sparse.to_string()])
        .collect();
    write_csv(dir, "fig7_temporal.csv", &["year", "unique_mementos", "total_requests", "sparse"], rows)?;

    let mut w = BufWriter::new(File::create(dir.join("sessions.jsonl"))?);
    for s in &analysis.sessions {
        serde_json::to_writer(&mut w, &SessionDump::from(s)).map_err(io::Error::other)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
