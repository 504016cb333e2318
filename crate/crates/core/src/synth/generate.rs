//! Scenario → log text plus per-line ground truth.
//!
//! Everything is drawn from one ChaCha8 stream seeded by the scenario, users
//! in order, so identical scenarios give identical bytes. The expected robot
//! triggers are computed from the generated timeline itself, from the roles
//! the generator assigned, without going through the analysis code.

use std::collections::BTreeSet;

use chrono::{DateTime, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::scenario::{IrtModel, Scenario, ScenarioError, ScenarioErrors, SessionSpec, UserSpec};
use crate::access_log::LogFormat;
use crate::archive_uri::MementoDatetime;
use crate::pattern::{PatternKind, SegmentKind};
use crate::robot::{Cohort, Heuristic};
use crate::session::UserKey;

pub const BROWSER_UAS: [&str; 3] = [
    "Mozilla/5.0 (Macintosh; Intel Mac OS X 10_6_8) AppleWebKit/535.7 (KHTML, like Gecko) Chrome/16.0.912.77 Safari/535.7",
    "Mozilla/5.0 (Windows NT 6.1; rv:9.0.1) Gecko/20100101 Firefox/9.0.1",
    "Mozilla/5.0 (iPad; CPU OS 5_0_1 like Mac OS X) AppleWebKit/534.46 (KHTML, like Gecko) Version/5.1 Mobile/9A405 Safari/7534.48.3",
];
pub const CRAWLER_UA: &str = "ExampleBot/1.0 (+http://example.org/bot.html)";

const ARCHIVE: &str = "http://web.archive.org";
const TIMEMAP_HOST: &str = "http://wayback.archive.org";
/// Memento-Datetimes are drawn from this range unless given.
const DT_LO: i64 = 834_624_000; // 1996-06-13
const DT_HI: i64 = 1_325_376_000; // 2012-01-01
/// Spread of Memento-Datetimes within a Dive.
const DIVE_SPREAD_S: i64 = 3 * 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    TimeMap,
    Memento,
    RobotsTxt,
    Image,
    Redirect,
    Head,
    Static,
}

impl Role {
    /// Survives cleaning.
    pub fn cleaned(self) -> bool {
        matches!(self, Role::TimeMap | Role::Memento | Role::RobotsTxt)
    }

    /// Counts as an HTML request for the image-to-HTML ratio.
    pub fn html(self) -> bool {
        matches!(self, Role::TimeMap | Role::Memento | Role::Redirect | Role::Head)
    }
}

/// Ground truth for one generated line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthLine {
    /// 1-based line number in the generated log.
    pub line: u64,
    pub user: UserKey,
    pub session: usize,
    pub cohort: Cohort,
    pub pattern: PatternKind,
    pub triggers: BTreeSet<Heuristic>,
    pub segments: Vec<SegmentKind>,
    pub role: Role,
    pub cleaned: bool,
    /// Generator-side identity of the original resource.
    pub resource: Option<String>,
    pub datetime: Option<MementoDatetime>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub log: String,
    pub truth: Vec<TruthLine>,
}

impl Generated {
    pub fn truth_jsonl(&self) -> String {
        let mut out = String::new();
        for t in &self.truth {
            out.push_str(&serde_json::to_string(t).expect("truth lines serialize"));
            out.push('\n');
        }
        out
    }
}

pub fn parse_truth(text: &str) -> Result<Vec<TruthLine>, (usize, serde_json::Error)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| (i + 1, e)))
        .collect()
}

struct Resource {
    host: String,
    path: String,
    /// Given verbatim in the scenario; emitted and keyed as is.
    literal: Option<String>,
}

impl Resource {
    fn key(&self) -> String {
        self.literal.clone().unwrap_or_else(|| format!("{}{}", self.host, self.path))
    }

    /// One of several spellings that canonicalize to the same key.
    fn spelling(&self, rng: &mut ChaCha8Rng) -> String {
        if let Some(l) = &self.literal {
            return l.clone();
        }
        let (h, p) = (&self.host, &self.path);
        match rng.gen_range(0..5) {
            0 => format!("http://www.{h}{p}"),
            1 => format!("http://{}{p}", h.to_uppercase()),
            2 => format!("http://{h}:80{p}"),
            3 if p == "/" => format!("http://{h}"),
            _ => format!("http://{h}{p}"),
        }
    }

    fn image_host(&self) -> &str {
        if self.literal.is_some() {
            "img.example.org"
        } else {
            &self.host
        }
    }
}

#[derive(Clone, Copy)]
struct Step {
    timemap: bool,
    res: usize,
    dt: Option<MementoDatetime>,
}

struct Line {
    t: i64,
    role: Role,
    uri: String,
    status: u16,
    head: bool,
    bytes: u64,
    referrer: Option<String>,
    agent: usize,
    resource: Option<String>,
    datetime: Option<MementoDatetime>,
}

struct Datetimes<'a> {
    given: std::slice::Iter<'a, MementoDatetime>,
}

impl Datetimes<'_> {
    fn next(&mut self, rng: &mut ChaCha8Rng) -> MementoDatetime {
        self.given.next().copied().unwrap_or_else(|| random_datetime(rng))
    }

    fn near(&mut self, rng: &mut ChaCha8Rng, base: MementoDatetime) -> MementoDatetime {
        self.given.next().copied().unwrap_or_else(|| {
            MementoDatetime::from_unix_seconds(base.unix_seconds() + rng.gen_range(0..=DIVE_SPREAD_S)).unwrap_or(base)
        })
    }
}

fn random_datetime(rng: &mut ChaCha8Rng) -> MementoDatetime {
    MementoDatetime::from_unix_seconds(rng.gen_range(DT_LO..DT_HI)).expect("range is within 14-digit years")
}

fn gap(rng: &mut ChaCha8Rng, irt: &IrtModel) -> i64 {
    let x = if irt.stdev > 0.0 {
        let normal = Normal::new(irt.mean, irt.stdev).expect("stdev validated");
        (0..100)
            .map(|_| normal.sample(rng))
            .find(|x| (irt.min..=irt.max).contains(x))
            .unwrap_or(irt.mean)
    } else {
        irt.mean
    };
    (x.clamp(irt.min, irt.max).round() as i64).max(0)
}

fn archive_uri(step: &Step, spelling: String, rng: &mut ChaCha8Rng) -> String {
    match step.dt {
        Some(dt) if !step.timemap => format!("{ARCHIVE}/web/{dt}/{spelling}"),
        _ => match rng.gen_range(0..4) {
            0 => format!("{TIMEMAP_HOST}/web/{}*/{spelling}", rng.gen_range(1996..=2012)),
            _ => format!("{TIMEMAP_HOST}/web/*/{spelling}"),
        },
    }
}

/// Lay out the eligible requests of a generated (not step-listed) session.
fn plan_steps(
    spec: &SessionSpec,
    rng: &mut ChaCha8Rng,
    resources: &mut Vec<Resource>,
    tag: &str,
) -> (Vec<Step>, Vec<SegmentKind>) {
    let len = spec.planned_length().expect("generated sessions have a planned length");
    let base = resources.len();
    let host = format!("{tag}.example.org");
    for k in 0..spec.needed_resources() {
        let res = match spec.uri_rs.get(k) {
            Some(lit) => Resource { host: String::new(), path: String::new(), literal: Some(lit.clone()) },
            None if k == 0 => Resource { host: host.clone(), path: "/".into(), literal: None },
            None => Resource { host: host.clone(), path: format!("/page{k}.html"), literal: None },
        };
        resources.push(res);
    }
    let mut dts = Datetimes { given: spec.datetimes.iter() };
    let tm = |res| Step { timemap: true, res, dt: None };
    let m = |res, dt| Step { timemap: false, res, dt: Some(dt) };
    let mut steps = Vec::with_capacity(len);
    let segments;
    match spec.pattern {
        PatternKind::Dip => {
            steps.push(if spec.timemap { tm(base) } else { m(base, dts.next(rng)) });
            segments = vec![];
        }
        PatternKind::Skim => {
            steps.extend((0..len).map(|k| tm(base + k)));
            segments = vec![];
        }
        PatternKind::Slide => {
            if spec.timemap {
                steps.push(tm(base));
            }
            let mut times: Vec<MementoDatetime> = (steps.len()..len).map(|_| dts.next(rng)).collect();
            if spec.datetimes.is_empty() {
                times.sort();
            }
            steps.extend(times.into_iter().map(|dt| m(base, dt)));
            segments = vec![SegmentKind::Slide];
        }
        PatternKind::Dive => {
            if spec.timemap {
                steps.push(tm(base));
            }
            let anchor = dts.next(rng);
            steps.push(m(base, anchor));
            for k in 1..len - usize::from(spec.timemap) {
                steps.push(m(base + k, dts.near(rng, anchor)));
            }
            segments = vec![SegmentKind::Dive];
        }
        PatternKind::Composite => {
            let mut next_res = base;
            let mut cur: Option<Step> = None;
            for seg in &spec.segments {
                let fresh = if cur.is_none() { seg.length } else { seg.length - 1 };
                match seg.kind {
                    SegmentKind::Slide => {
                        let res = match cur {
                            Some(c) => c.res,
                            None => {
                                next_res += 1;
                                next_res - 1
                            }
                        };
                        let mut times: Vec<_> = (0..fresh).map(|_| dts.next(rng)).collect();
                        if spec.datetimes.is_empty() {
                            times.sort();
                        }
                        for dt in times {
                            steps.push(m(res, dt));
                        }
                    }
                    SegmentKind::Dive => {
                        let anchor = cur.and_then(|c| c.dt).unwrap_or_else(|| dts.next(rng));
                        for k in 0..fresh {
                            let dt = if k == 0 && cur.is_none() { anchor } else { dts.near(rng, anchor) };
                            steps.push(m(next_res, dt));
                            next_res += 1;
                        }
                    }
                }
                cur = steps.last().copied();
            }
            segments = spec.segments.iter().map(|s| s.kind).collect();
        }
    }
    (steps, segments)
}

/// Split a literal archive request into role, resource and datetime.
fn describe_literal(uri: &str) -> (Role, Option<String>, Option<MementoDatetime>) {
    if uri.ends_with("/robots.txt") && !uri.contains("/web/") {
        return (Role::RobotsTxt, None, None);
    }
    let Some(pos) = uri.find("/web/") else {
        return (Role::Memento, None, None);
    };
    let rest = &uri[pos + 5..];
    let (selector, target) = rest.split_once('/').unwrap_or((rest, ""));
    if selector.ends_with('*') {
        (Role::TimeMap, Some(target.to_string()), None)
    } else {
        let digits: String = selector.chars().take_while(char::is_ascii_digit).collect();
        (Role::Memento, Some(target.to_string()), MementoDatetime::parse(&digits).ok())
    }
}

struct SessionOut {
    lines: Vec<Line>,
    pattern: PatternKind,
    segments: Vec<SegmentKind>,
}

fn build_session(
    spec: &SessionSpec,
    start: i64,
    cohort: Cohort,
    rng: &mut ChaCha8Rng,
    resources: &mut Vec<Resource>,
    tag: &str,
) -> SessionOut {
    if !spec.steps.is_empty() {
        let lines = spec
            .steps
            .iter()
            .map(|s| {
                let (role, resource, datetime) = describe_literal(&s.uri);
                Line {
                    t: s.at.timestamp(),
                    role,
                    uri: s.uri.clone(),
                    status: 200,
                    head: false,
                    bytes: rng.gen_range(1_000..60_000),
                    referrer: None,
                    agent: 0,
                    resource,
                    datetime,
                }
            })
            .collect();
        let segments = match spec.pattern {
            PatternKind::Slide => vec![SegmentKind::Slide],
            PatternKind::Dive => vec![SegmentKind::Dive],
            PatternKind::Composite => spec.segments.iter().map(|s| s.kind).collect(),
            _ => vec![],
        };
        return SessionOut { lines, pattern: spec.pattern, segments };
    }

    let (steps, segments) = plan_steps(spec, rng, resources, tag);
    let human = cohort == Cohort::Humans;
    let mut not_found: Vec<usize> = (0..steps.len()).collect();
    not_found.shuffle(rng);
    not_found.truncate(spec.status_mix.not_found.min(steps.len()));

    // Noise attached to pages: (page index, role), placed around the page.
    let mut noise: Vec<(usize, Role)> = Vec::new();
    for (n, role) in [
        (spec.status_mix.redirect, Role::Redirect),
        (spec.status_mix.head, Role::Head),
        (spec.status_mix.static_assets, Role::Static),
    ] {
        for _ in 0..n {
            noise.push((rng.gen_range(0..steps.len()), role));
        }
    }

    let mut lines = Vec::new();
    let mut t = start;
    let mut first = true;
    if spec.fetch_robots_txt {
        lines.push(Line {
            t,
            role: Role::RobotsTxt,
            uri: format!("{ARCHIVE}/robots.txt"),
            status: 200,
            head: false,
            bytes: rng.gen_range(200..600),
            referrer: None,
            agent: 0,
            resource: None,
            datetime: None,
        });
        first = false;
    }
    let mut previous_page: Option<String> = None;
    for (k, step) in steps.iter().enumerate() {
        if !first {
            t += gap(rng, &spec.irt);
        }
        first = false;
        let res = &resources[step.res];
        let spelling = res.spelling(rng);
        let uri = archive_uri(step, spelling, rng);
        let role = if step.timemap { Role::TimeMap } else { Role::Memento };
        let referrer = if human { previous_page.clone() } else { None };
        let noise_line = |role: Role, rng: &mut ChaCha8Rng| Line {
            t,
            role,
            uri: match role {
                Role::Static => format!("{ARCHIVE}/static/js/analytics.js"),
                _ => uri.clone(),
            },
            status: if role == Role::Redirect { 302 } else { 200 },
            head: role == Role::Head,
            bytes: match role {
                Role::Static => rng.gen_range(500..5_000),
                _ => 0,
            },
            referrer: None,
            agent: 0,
            resource: (role != Role::Static).then(|| res.key()),
            datetime: if role == Role::Static { None } else { step.dt },
        };
        for &(_, r) in noise.iter().filter(|(p, r)| *p == k && *r == Role::Redirect) {
            let l = noise_line(r, rng);
            lines.push(l);
        }
        lines.push(Line {
            t,
            role,
            uri: uri.clone(),
            status: if not_found.contains(&k) { 404 } else { 200 },
            head: false,
            bytes: if step.timemap { rng.gen_range(1_000..100_000) } else { rng.gen_range(2_000..60_000) },
            referrer,
            agent: 0,
            resource: Some(res.key()),
            datetime: step.dt,
        });
        let stamp = step.dt.map(|d| d.to_string()).unwrap_or_else(|| "20120101000000".into());
        for i in 0..spec.embedded_per_html {
            let ext = ["gif", "jpg", "png"][i % 3];
            lines.push(Line {
                t,
                role: Role::Image,
                uri: format!("{ARCHIVE}/web/{stamp}im_/http://{}/img/{i}.{ext}", res.image_host()),
                status: 200,
                head: false,
                bytes: rng.gen_range(200..20_000),
                referrer: human.then(|| uri.clone()),
                agent: 0,
                resource: None,
                datetime: None,
            });
        }
        for &(_, r) in noise.iter().filter(|(p, r)| *p == k && *r != Role::Redirect) {
            let l = noise_line(r, rng);
            lines.push(l);
        }
        previous_page = Some(uri);
    }
    SessionOut { lines, pattern: spec.pattern, segments }
}

/// Triggers the planted timeline must produce.
fn expected_triggers(lines: &[Line], user: &UserSpec, scenario: &Scenario) -> BTreeSet<Heuristic> {
    let mut out = BTreeSet::new();
    if user.self_identified {
        out.insert(Heuristic::SelfIdentified);
    }
    if user.rotate_uas > scenario.ua_per_ip_threshold {
        out.insert(Heuristic::UaPerIp);
    }
    if lines.iter().any(|l| l.role == Role::RobotsTxt) {
        out.insert(Heuristic::RobotsTxt);
    }
    let kept: Vec<i64> = lines.iter().filter(|l| l.role.cleaned()).map(|l| l.t).collect();
    let duration = kept.iter().max().zip(kept.iter().min()).map(|(a, b)| a - b).unwrap_or(0);
    if duration > 0 && kept.len() as f64 / duration as f64 > scenario.bs_threshold {
        out.insert(Heuristic::BrowsingSpeed);
    }
    let html = lines.iter().filter(|l| l.role.html()).count();
    let images = lines.iter().filter(|l| l.role == Role::Image).count();
    if html > 0 && (images as f64 / html as f64) < scenario.ih_threshold {
        out.insert(Heuristic::ImageHtmlRatio);
    }
    out
}

fn format_line(format: LogFormat, ip: &str, agent: Option<&str>, l: &Line) -> String {
    let time = DateTime::from_timestamp(l.t, 0).expect("generated times are in range");
    match format {
        LogFormat::Reduced => format!("{ip} {} {}", time.format("%d/%b/%Y:%H:%M:%S"), l.uri),
        LogFormat::Full => format!(
            "{ip} - - [{}] \"{} {} HTTP/1.1\" {} {} \"{}\" \"{}\"",
            time.format("%d/%b/%Y:%H:%M:%S +0000"),
            if l.head { "HEAD" } else { "GET" },
            l.uri,
            l.status,
            l.bytes,
            l.referrer.as_deref().unwrap_or("-").replace('"', "\\\""),
            agent.unwrap_or("-").replace('"', "\\\""),
        ),
    }
}

/// Generate the log and its ground truth.
pub fn generate(scenario: &Scenario) -> Result<Generated, ScenarioErrors> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut errors = Vec::new();
    let timeout = scenario.session_timeout_s;
    let base = scenario.start.timestamp();
    // (time, user, seq) → text and truth without line numbers
    let mut out: Vec<((i64, usize, usize), String, TruthLine)> = Vec::new();

    for (u, user) in scenario.users.iter().enumerate() {
        let base_ua = match (&user.ua, user.self_identified) {
            (Some(ua), _) => ua.clone(),
            (None, true) => CRAWLER_UA.to_string(),
            (None, false) => BROWSER_UAS[u % BROWSER_UAS.len()].to_string(),
        };
        let agents: Vec<String> = if user.rotate_uas > 0 {
            (0..user.rotate_uas).map(|k| format!("{base_ua} (r{k})")).collect()
        } else {
            vec![base_ua]
        };
        let key = match (scenario.format, user.rotate_uas > 0) {
            (LogFormat::Reduced, _) => UserKey::new(user.ip.clone(), None::<String>),
            (_, true) => UserKey::collapsed(user.ip.clone()),
            (_, false) => UserKey::new(user.ip.clone(), Some(agents[0].clone())),
        };

        let mut resources = Vec::new();
        let mut prev_end: Option<i64> = None;
        let mut kept_total = 0usize;
        let mut agent_cursor = 0usize;
        let mut seq = 0usize;
        for (s, spec) in user.sessions.iter().enumerate() {
            let path = format!("users[{u}].sessions[{s}]");
            let start = match (spec.steps.first(), spec.start, prev_end) {
                (Some(step), _, _) => step.at.timestamp(),
                (None, Some(at), _) => at.timestamp(),
                (None, None, None) => base + rng.gen_range(0..3_600),
                (None, None, Some(end)) => end + timeout + rng.gen_range(1..=3_600),
            };
            if prev_end.is_some_and(|end| start - end <= timeout) {
                errors.push(ScenarioError {
                    path: format!("{path}.start"),
                    message: format!("must begin more than {timeout} s after the previous session"),
                });
            }
            let tag = format!("u{u}s{s}");
            let mut session = build_session(spec, start, user.cohort, &mut rng, &mut resources, &tag);

            // Agents rotate over kept requests. A redirect takes the agent of
            // the page it precedes; other extras that of the page before them.
            let mut current = agent_cursor;
            for line in session.lines.iter_mut() {
                let slot = if line.role.cleaned() {
                    current = agent_cursor;
                    agent_cursor += 1;
                    kept_total += 1;
                    current
                } else if line.role == Role::Redirect {
                    agent_cursor
                } else {
                    current
                };
                line.agent = slot % agents.len();
            }

            let triggers = expected_triggers(&session.lines, user, scenario);
            let planted = if triggers.is_empty() { Cohort::Humans } else { Cohort::Robots };
            if planted != user.cohort {
                let names: Vec<&str> = triggers.iter().map(|h| h.name()).collect();
                errors.push(ScenarioError {
                    path,
                    message: format!(
                        "planted as {} but the timeline gives {} (triggers: [{}])",
                        user.cohort.name(),
                        planted.name(),
                        names.join(", ")
                    ),
                });
            }
            prev_end = session.lines.iter().filter(|l| l.role.cleaned()).map(|l| l.t).max().or(prev_end);
            for line in &session.lines {
                seq += 1;
                let agent = (scenario.format == LogFormat::Full).then(|| agents[line.agent].as_str());
                let text = format_line(scenario.format, &user.ip, agent, line);
                out.push((
                    (line.t, u, seq),
                    text,
                    TruthLine {
                        line: 0,
                        user: key.clone(),
                        session: s,
                        cohort: user.cohort,
                        pattern: session.pattern,
                        triggers: triggers.clone(),
                        segments: session.segments.clone(),
                        role: line.role,
                        cleaned: line.role.cleaned(),
                        resource: line.resource.clone(),
                        datetime: line.datetime,
                    },
                ));
            }
        }
        if user.rotate_uas > 0 && kept_total < user.rotate_uas {
            errors.push(ScenarioError {
                path: format!("users[{u}].rotate_uas"),
                message: format!("{} agents need at least as many kept requests, the user has {kept_total}", user.rotate_uas),
            });
        }
    }
    if !errors.is_empty() {
        return Err(ScenarioErrors(errors));
    }

    out.sort_by_key(|(k, _, _)| *k);
    let mut log = String::new();
    let mut truth = Vec::with_capacity(out.len());
    for (i, (_, text, mut t)) in out.into_iter().enumerate() {
        log.push_str(&text);
        log.push('\n');
        t.line = i as u64 + 1;
        truth.push(t);
    }
    Ok(Generated { log, truth })
}

/// Convenience for tests: a UTC instant from its parts.
pub fn utc(y: i32, mo: u32, d: u32, h: u32, mi: u32, s: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(y, mo, d, h, mi, s).unwrap()
}
