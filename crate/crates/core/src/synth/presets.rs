//! Ready-made scenarios.

use chrono::{Datelike, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scenario::{default_scenario, IrtModel, Scenario, SegmentSpec, SessionSpec, StatusMix, UserSpec};
use crate::archive_uri::MementoDatetime;
use crate::pattern::{PatternKind, SegmentKind};
use crate::robot::Cohort;

pub const PROFILES: usize = 16;

const HUMAN_IRT: IrtModel = IrtModel { mean: 25.0, stdev: 10.0, min: 5.0, max: 120.0 };
const SLOW_IRT: IrtModel = IrtModel { mean: 30.0, stdev: 10.0, min: 8.0, max: 120.0 };
/// One request per second, exactly.
const FAST_IRT: IrtModel = IrtModel { mean: 1.0, stdev: 0.0, min: 1.0, max: 1.0 };
/// Zero or one second apart: about two requests per second.
const BURST_IRT: IrtModel = IrtModel { mean: 0.5, stdev: 0.5, min: 0.0, max: 1.0 };

fn seg(kind: SegmentKind, length: usize) -> SegmentSpec {
    SegmentSpec { kind, length }
}

fn session(pattern: PatternKind, length: Option<usize>, irt: IrtModel, embedded: usize) -> SessionSpec {
    SessionSpec { length, irt, embedded_per_html: embedded, ..SessionSpec::new(pattern) }
}

fn composite(segments: Vec<SegmentSpec>, irt: IrtModel, embedded: usize) -> SessionSpec {
    SessionSpec { segments, ..session(PatternKind::Composite, None, irt, embedded) }
}

fn ip(i: usize) -> String {
    format!("10.{}.{}.{}", (i >> 16) & 255, (i >> 8) & 255, i & 255)
}

/// One user of the mixed corpus. Profiles 0-7 are human, 8-15 robots, each
/// robot profile planting a known set of heuristics.
pub fn profile(i: usize, rng: &mut ChaCha8Rng) -> UserSpec {
    use PatternKind::*;
    use SegmentKind::{Dive as D, Slide as S};
    let images = rng.gen_range(1..=3);
    let human = |sessions: Vec<SessionSpec>| UserSpec {
        cohort: Cohort::Humans,
        ip: ip(i),
        ua: None,
        self_identified: false,
        rotate_uas: 0,
        sessions,
    };
    let robot = |sessions: Vec<SessionSpec>| UserSpec { cohort: Cohort::Robots, ..human(sessions) };
    let n = |lo: usize, hi: usize, rng: &mut ChaCha8Rng| Some(rng.gen_range(lo..=hi));
    match i % PROFILES {
        0 => human(vec![SessionSpec { timemap: rng.gen_bool(0.5), ..session(Dip, None, HUMAN_IRT, images) }]),
        1 => human(vec![SessionSpec { timemap: true, ..session(Slide, n(3, 8, rng), HUMAN_IRT, images) }]),
        2 => human(vec![SessionSpec { timemap: true, ..session(Dive, n(3, 7, rng), HUMAN_IRT, images) }]),
        3 => human(vec![session(Skim, n(2, 6, rng), HUMAN_IRT, images)]),
        4 => human(vec![composite(vec![seg(S, 3), seg(D, 2)], HUMAN_IRT, images)]),
        5 => human(vec![SessionSpec {
            status_mix: StatusMix { redirect: 1, not_found: 1, head: 1, static_assets: 2 },
            ..composite(vec![seg(D, 3), seg(S, 2)], HUMAN_IRT, images)
        }]),
        6 => human(vec![
            session(Slide, n(2, 5, rng), HUMAN_IRT, images),
            SessionSpec { timemap: true, ..session(Dip, None, HUMAN_IRT, images) },
            session(Dive, n(2, 5, rng), HUMAN_IRT, images),
        ]),
        7 => human(vec![composite(vec![seg(S, 2), seg(D, 3), seg(S, 2)], HUMAN_IRT, images)]),
        8 => UserSpec {
            self_identified: true,
            ua: Some("Mozilla/5.0 (compatible; Googlebot/2.1; +http://www.google.com/bot.html)".into()),
            ..robot(vec![session(Skim, n(3, 8, rng), SLOW_IRT, 1)])
        },
        9 => UserSpec { rotate_uas: 25, ..robot(vec![session(Skim, Some(30), SLOW_IRT, 1)]) },
        10 => robot(vec![SessionSpec { fetch_robots_txt: true, ..session(Dive, n(3, 6, rng), SLOW_IRT, 1) }]),
        11 => robot(vec![session(Dive, n(6, 12, rng), FAST_IRT, 1)]),
        12 => robot(vec![
            session(Slide, n(3, 6, rng), SLOW_IRT, 0),
            composite(vec![seg(S, 2), seg(D, 2)], SLOW_IRT, 0),
        ]),
        13 => robot(vec![session(Skim, Some(50), BURST_IRT, 0)]),
        14 => UserSpec {
            self_identified: true,
            ua: Some("Wget/1.12 (linux-gnu)".into()),
            ..robot(vec![session(Dip, None, SLOW_IRT, 0)])
        },
        15 => robot(vec![SessionSpec {
            fetch_robots_txt: true,
            ..composite(vec![seg(D, 2), seg(S, 3)], FAST_IRT, 0)
        }]),
        _ => unreachable!(),
    }
}

/// A corpus of `users` users cycling through every profile: all five
/// patterns in both cohorts and every heuristic.
pub fn mixed(seed: u64, users: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d69_7865_6421);
    let users = (0..users).map(|i| profile(i, &mut rng)).collect();
    Scenario { seed, users, ..default_scenario() }
}

/// Expected per-year counts of the temporal preset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalPlan {
    pub years: Vec<i32>,
    pub unique_per_year: u64,
    pub repeat_year: i32,
    pub repeat_factor: u64,
}

/// Human corpus where each year from `first_year` to `last_year` holds
/// `per_year` distinct mementos requested once, except that every memento of
/// `repeat_year` is requested `repeat_factor` times in all.
pub fn temporal(seed: u64, per_year: usize, first_year: i32, last_year: i32, repeat_year: i32, repeat_factor: usize) -> (Scenario, TemporalPlan) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7465_6d70);
    let years: Vec<i32> = (first_year..=last_year).collect();
    let mut users = Vec::new();
    let mut repeat_targets = Vec::new();
    for k in 0..per_year {
        let uri = format!("http://www.history{k}.example.com/");
        let datetimes: Vec<MementoDatetime> = years
            .iter()
            .map(|&y| {
                let start = Utc.with_ymd_and_hms(y, 1, 1, 0, 0, 0).unwrap().timestamp();
                let end = Utc.with_ymd_and_hms(y + 1, 1, 1, 0, 0, 0).unwrap().timestamp();
                MementoDatetime::from_unix_seconds(rng.gen_range(start..end)).unwrap()
            })
            .collect();
        if let Some(dt) = datetimes.iter().find(|d| d.instant().year() == repeat_year) {
            repeat_targets.push((uri.clone(), *dt));
        }
        users.push(UserSpec {
            cohort: Cohort::Humans,
            ip: ip(users.len()),
            ua: None,
            self_identified: false,
            rotate_uas: 0,
            sessions: vec![SessionSpec {
                uri_rs: vec![uri],
                datetimes: datetimes.clone(),
                ..session(PatternKind::Slide, Some(years.len()), HUMAN_IRT, 2)
            }],
        });
    }
    for _ in 1..repeat_factor {
        for (uri, dt) in &repeat_targets {
            users.push(UserSpec {
                cohort: Cohort::Humans,
                ip: ip(users.len()),
                ua: None,
                self_identified: false,
                rotate_uas: 0,
                sessions: vec![SessionSpec {
                    uri_rs: vec![uri.clone()],
                    datetimes: vec![*dt],
                    ..session(PatternKind::Dip, None, HUMAN_IRT, 2)
                }],
            });
        }
    }
    let plan = TemporalPlan {
        years,
        unique_per_year: per_year as u64,
        repeat_year,
        repeat_factor: repeat_factor as u64,
    };
    (Scenario { seed, users, ..default_scenario() }, plan)
}
