//! The `waylog` command line: `analyze`, `generate` and `verify`.
//!
//! Everything here is callable in-process so tests can drive the commands
//! without spawning the binary.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use waylog_core::access_log::{open_path, open_reader};
use waylog_core::pattern::PatternKind;
use waylog_core::robot::Cohort;
use waylog_core::synth::presets;
use waylog_core::{
    build_report, generate, parse_truth, verify, write_outputs, Analysis, AnalysisConfig, Ingest,
    LogFormat, Report, Scenario, SessionDump,
};

pub const EXIT_OK: i32 = 0;
/// Analysis or generation failed, or `verify` found differences.
pub const EXIT_FAILURE: i32 = 1;
/// Bad usage or unreadable/unparsable verify inputs.
pub const EXIT_USAGE: i32 = 2;

/// Log file written by `generate`.
pub const LOG_FILE: &str = "access.log";
pub const TRUTH_FILE: &str = "truth.jsonl";
pub const SCENARIO_FILE: &str = "scenario.json";

#[derive(Debug, Parser)]
#[command(name = "waylog", version, about = "Mine web-archive access logs for robots and access patterns")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, sessionize and label logs, then write the report files.
    Analyze(AnalyzeArgs),
    /// Write a synthetic log with ground truth.
    Generate(GenerateArgs),
    /// Compare ground truth with a `sessions.jsonl` dump.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Full,
    Reduced,
}

impl From<FormatArg> for LogFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Full => LogFormat::Full,
            FormatArg::Reduced => LogFormat::Reduced,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Log files (plain or gzip); `-` reads standard input.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// TOML file with analysis settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Session inactivity timeout in seconds [default: 600]
    #[arg(long, value_name = "SECS")]
    pub timeout: Option<i64>,
    /// Distinct user agents an IP may show before it is collapsed [default: 20]
    #[arg(long, value_name = "N")]
    pub ua_threshold: Option<usize>,
    /// Browsing speed above which a session is a robot [default: 0.5]
    #[arg(long, value_name = "REQ_PER_S")]
    pub bs_threshold: Option<f64>,
    /// Image-to-HTML ratio below which a session is a robot [default: 0.1]
    #[arg(long, value_name = "RATIO")]
    pub ih_threshold: Option<f64>,
    /// Self-identification patterns, one per line.
    #[arg(long, value_name = "FILE")]
    pub si_patterns: Option<PathBuf>,
    /// Report directory [default: waylog-report]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Skip unreadable inputs instead of stopping.
    #[arg(long)]
    pub keep_going: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Every pattern in both cohorts and every robot heuristic.
    Mixed,
    /// Humans spread over the years with one year requested repeatedly.
    Temporal,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// Scenario file (JSON, or TOML by extension).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub scenario: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Users for `mixed`, mementos per year for `temporal`.
    #[arg(long, default_value_t = 1000)]
    pub users: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Overrides the scenario's log format.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Output directory for the log, the truth file and the scenario echo.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// `truth.jsonl` from `generate`.
    pub truth: PathBuf,
    /// `sessions.jsonl` from `analyze`.
    pub sessions: PathBuf,
}

pub const DEFAULT_OUT: &str = "waylog-report";

/// Years and repeat settings of the `temporal` preset.
pub const TEMPORAL_YEARS: (i32, i32) = (1996, 2012);
pub const TEMPORAL_REPEAT_YEAR: i32 = 2011;
pub const TEMPORAL_REPEAT_FACTOR: usize = 4;

/// Parse arguments and run, writing human output to `out` and diagnostics to
/// `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Analyze(a) => cmd_analyze(&a, out, err).map(|_| EXIT_OK),
        Command::Generate(g) => cmd_generate(&g, out).map(|_| EXIT_OK),
        Command::Verify(v) => cmd_verify(&v, out, err),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_FAILURE
        }
    }
}

/// Settings file contents: analysis keys plus an optional output directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    pub analysis: AnalysisConfig,
    pub out_dir: Option<PathBuf>,
}

pub fn load_config(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

pub fn parse_config(text: &str) -> Result<FileConfig> {
    let mut table: toml::Table = toml::from_str(text)?;
    let out_dir = match table.remove("out_dir") {
        None => None,
        Some(toml::Value::String(s)) => Some(PathBuf::from(s)),
        Some(other) => bail!("out_dir must be a string, got {}", other.type_str()),
    };
    let analysis = AnalysisConfig::from_toml(&toml::to_string(&table)?)?;
    Ok(FileConfig { analysis, out_dir })
}

/// Effective configuration: file settings, then flags on top.
pub fn effective_config(args: &AnalyzeArgs) -> Result<(AnalysisConfig, PathBuf)> {
    let file = match &args.config {
        Some(path) => load_config(path)?,
        None => FileConfig::default(),
    };
    let mut cfg = file.analysis;
    if let Some(f) = args.format {
        cfg.format = f.into();
    }
    if let Some(t) = args.timeout {
        cfg.session_timeout_s = t;
    }
    if let Some(n) = args.ua_threshold {
        cfg.ua_per_ip_threshold = n;
    }
    if let Some(x) = args.bs_threshold {
        cfg.bs_threshold = x;
    }
    if let Some(x) = args.ih_threshold {
        cfg.ih_threshold = x;
    }
    if let Some(p) = &args.si_patterns {
        cfg.si_pattern_file = Some(p.clone());
    }
    cfg.validate()?;
    let out = args.out.clone().or(file.out_dir).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    Ok((cfg, out))
}

/// Everything `analyze` produced, for callers that want more than files.
#[derive(Debug)]
pub struct AnalyzeOutcome {
    pub analysis: Analysis,
    pub report: Report,
    pub out_dir: PathBuf,
    pub skipped_inputs: Vec<PathBuf>,
}

pub fn cmd_analyze(args: &AnalyzeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<AnalyzeOutcome> {
    let (cfg, out_dir) = effective_config(args)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .context("building thread pool")?;
    let robot = cfg.robot_config()?;
    let classifier = cfg.classifier();

    let mut ingest = Ingest::default();
    let mut skipped = Vec::new();
    for path in &args.inputs {
        let before = ingest.errors.len();
        match pool.install(|| read_input(&mut ingest, path, cfg.format, &classifier)) {
            Ok(counts) => {
                if counts.failed > 0 {
                    writeln!(err, "{}: {} of {} lines unparsable", path.display(), counts.failed, counts.parsed + counts.failed)?;
                    for e in ingest.errors.iter().skip(before).take(5) {
                        writeln!(err, "  {e}")?;
                    }
                }
            }
            Err(e) if args.keep_going => {
                writeln!(err, "{}: {e:#} (skipped)", path.display())?;
                skipped.push(path.clone());
            }
            Err(e) => return Err(e.context(format!("input {}", path.display()))),
        }
    }

    if ingest.requests.is_empty() {
        bail!("no parsable log records in {} input(s)", args.inputs.len());
    }
    let failed = ingest.counts.failed;
    let analysis = pool.install(|| {
        waylog_core::pipeline::analyze(ingest.requests, cfg.session_timeout_s, cfg.ua_per_ip_threshold, &robot)
    });
    let report = build_report(&analysis, &cfg, failed)?;
    write_outputs(&out_dir, &report, &analysis).with_context(|| format!("writing {}", out_dir.display()))?;
    write_summary(out, &report, &out_dir)?;
    Ok(AnalyzeOutcome { analysis, report, out_dir, skipped_inputs: skipped })
}

fn read_input(
    ingest: &mut Ingest,
    path: &Path,
    format: LogFormat,
    classifier: &waylog_core::archive_uri::UriClassifier,
) -> Result<waylog_core::access_log::ParseCounts> {
    let reader = if path.as_os_str() == "-" {
        if format != LogFormat::Full {
            bail!("standard input is read in the full format only");
        }
        open_reader(io::stdin())?
    } else {
        open_path(path)?
    };
    Ok(ingest.read(reader, format, classifier)?)
}

/// The text printed after a successful analysis.
pub fn write_summary(out: &mut dyn Write, report: &Report, out_dir: &Path) -> io::Result<()> {
    let t = &report.robot_heuristics;
    let input = &report.input;
    writeln!(out, "records: {} parsed, {} unparsable, {} retained after cleaning", input.parsed, input.failed, report.cleaning.counts.retained)?;
    writeln!(out, "sessions: {} (robots {}, humans {})", t.total_sessions, t.robot_sessions, t.human_sessions)?;
    match t.robot_human_ratio {
        Some(r) => writeln!(out, "robot:human ratio: {r:.2}:1")?,
        None => writeln!(out, "robot:human ratio: n/a (no human sessions)")?,
    }
    writeln!(out, "patterns:")?;
    write!(out, "  {:<8}", "")?;
    for kind in PatternKind::ALL {
        write!(out, " {:>10}", kind.name())?;
    }
    writeln!(out, " {:>10}", "none")?;
    for cohort in Cohort::ALL {
        let d = &report.pattern_distribution[&cohort];
        write!(out, "  {:<8}", cohort.name())?;
        for kind in PatternKind::ALL {
            write!(out, " {:>10}", d.kinds.get(&kind).map(|k| k.sessions).unwrap_or(0))?;
        }
        writeln!(out, " {:>10}", d.no_pattern)?;
    }
    writeln!(out, "report written to {}", out_dir.display())
}

/// Read a scenario file; `.toml` files are TOML, anything else JSON.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let scenario = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    } else {
        Scenario::from_json(&text).with_context(|| format!("parsing {}", path.display()))?
    };
    Ok(scenario)
}

pub fn preset_scenario(preset: Preset, users: usize, seed: u64) -> Scenario {
    match preset {
        Preset::Mixed => presets::mixed(seed, users),
        Preset::Temporal => {
            let (first, last) = TEMPORAL_YEARS;
            presets::temporal(seed, users, first, last, TEMPORAL_REPEAT_YEAR, TEMPORAL_REPEAT_FACTOR).0
        }
    }
}

pub fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let mut scenario = match (&args.scenario, args.preset) {
        (Some(path), _) => load_scenario(path)?,
        (None, Some(p)) => preset_scenario(p, args.users, args.seed),
        (None, None) => bail!("one of --scenario or --preset is required"),
    };
    if let Some(f) = args.format {
        scenario.format = f.into();
    }
    let generated = generate(&scenario)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    fs::write(args.out.join(LOG_FILE), &generated.log)?;
    fs::write(args.out.join(TRUTH_FILE), generated.truth_jsonl())?;
    let mut echo = serde_json::to_string_pretty(&scenario)?;
    echo.push('\n');
    fs::write(args.out.join(SCENARIO_FILE), echo)?;
    let sessions: usize = scenario.users.iter().map(|u| u.sessions.len()).sum();
    writeln!(
        out,
        "generated {} lines for {} users, {} sessions into {}",
        generated.truth.len(),
        scenario.users.len(),
        sessions,
        args.out.display()
    )?;
    Ok(())
}

/// Load a `sessions.jsonl` dump.
pub fn load_sessions(path: &Path) -> Result<Vec<SessionDump>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{} line {}", path.display(), i + 1)))
        .collect()
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let inputs = fs::read_to_string(&args.truth)
        .with_context(|| format!("reading {}", args.truth.display()))
        .and_then(|text| {
            parse_truth(&text).map_err(|(line, e)| anyhow::anyhow!("{} line {line}: {e}", args.truth.display()))
        })
        .and_then(|truth| Ok((truth, load_sessions(&args.sessions)?)));
    let (truth, found) = match inputs {
        Ok(x) => x,
        Err(e) => {
            writeln!(err, "error: {e:#}")?;
            return Ok(EXIT_USAGE);
        }
    };
    let diff = verify(&truth, &found);
    write!(out, "{diff}")?;
    writeln!(
        out,
        "cohort accuracy {:.2}%, pattern accuracy {:.2}%",
        100.0 * diff.cohort_accuracy(),
        100.0 * diff.pattern_accuracy()
    )?;
    Ok(if diff.is_clean() { EXIT_OK } else { EXIT_FAILURE })
}
