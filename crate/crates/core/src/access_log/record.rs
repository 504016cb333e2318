//! One access-log line: the Wayback flavour of the combined log format.
//!
//! ```text
//! 0.247.222.86 - - [02/Feb/2012:07:03:46 +0000] "GET http://wayback.archive.org/web/*/http://www.aura.vu HTTP/1.1" 200 96433 "http://www.archive.org/web/web.php" "Mozilla/5.0 ..."
//! ```
//!
//! Quoted fields keep their escape sequences verbatim except for `\"`, which
//! is unescaped on parse and re-escaped on output. That keeps
//! `to_string(parse(line))` equal to the input for every well-formed line.

use std::fmt;

use chrono::{DateTime, FixedOffset, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// HTTP request method. Only GET and HEAD matter downstream.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Get,
    Head,
    Other(String),
}

impl Method {
    pub fn parse(s: &str) -> Self {
        match s {
            "GET" => Method::Get,
            "HEAD" => Method::Head,
            other => Method::Other(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Method::Get => "GET",
            Method::Head => "HEAD",
            Method::Other(s) => s,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Input line layout.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogFormat {
    /// Nine-field combined log format.
    #[default]
    Full,
    /// Three columns: client IP, access time, requested URI. Missing fields
    /// default to GET / 200 / 0 bytes / no referrer / no user agent.
    Reduced,
}

impl std::str::FromStr for LogFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(LogFormat::Full),
            "reduced" => Ok(LogFormat::Reduced),
            other => Err(format!("unknown log format `{other}` (expected full|reduced)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub client_ip: String,
    pub remote_logname: String,
    pub remote_user: String,
    /// Access time normalized to UTC.
    pub timestamp: DateTime<Utc>,
    /// Offset the line was written with; kept only for faithful re-rendering.
    #[serde(with = "offset_seconds")]
    pub utc_offset: FixedOffset,
    pub method: Method,
    pub request_uri: String,
    pub protocol: String,
    pub status: u16,
    /// Response size; `-` in the log is 0 with `bytes_unknown` set.
    pub bytes_sent: u64,
    pub bytes_unknown: bool,
    pub referrer: Option<String>,
    pub user_agent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("empty line")]
    Empty,
    #[error("field count: expected {expected}, found {found}")]
    FieldCount { expected: usize, found: usize },
    #[error("unclosed quote")]
    UnclosedQuote,
    #[error("unclosed bracket")]
    UnclosedBracket,
    #[error("unparsable timestamp `{0}`")]
    Timestamp(String),
    #[error("malformed request segment `{0}`")]
    Request(String),
    #[error("invalid status `{0}`")]
    Status(String),
    #[error("invalid byte count `{0}`")]
    Bytes(String),
    #[error("line is not valid UTF-8")]
    Encoding,
}

impl ParseErrorKind {
    /// Short machine-friendly tag, used for error tallies.
    pub fn tag(&self) -> &'static str {
        match self {
            ParseErrorKind::Empty => "empty",
            ParseErrorKind::FieldCount { .. } => "field count",
            ParseErrorKind::UnclosedQuote => "unclosed quote",
            ParseErrorKind::UnclosedBracket => "unclosed bracket",
            ParseErrorKind::Timestamp(_) => "timestamp",
            ParseErrorKind::Request(_) => "request",
            ParseErrorKind::Status(_) => "status",
            ParseErrorKind::Bytes(_) => "bytes",
            ParseErrorKind::Encoding => "encoding",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line_no}: {reason}")]
pub struct ParseError {
    pub line_no: u64,
    pub reason: ParseErrorKind,
}

const FULL_FIELDS: usize = 9;
const MONTHS: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

/// Parse one line in the given format. `line_no` is only used for the error.
pub fn parse_line_as(line: &str, format: LogFormat, line_no: u64) -> Result<LogRecord, ParseError> {
    let result = match format {
        LogFormat::Full => parse_full(line),
        LogFormat::Reduced => parse_reduced(line),
    };
    result.map_err(|reason| ParseError { line_no, reason })
}

/// Parse one full-format line.
pub fn parse_line(line: &str) -> Result<LogRecord, ParseError> {
    parse_line_as(line, LogFormat::Full, 0)
}

fn parse_full(line: &str) -> Result<LogRecord, ParseErrorKind> {
    let line = line.trim_end_matches(['\r', '\n']);
    if line.trim().is_empty() {
        return Err(ParseErrorKind::Empty);
    }
    let mut fields: [Field<'_>; FULL_FIELDS] = Default::default();
    let found = tokenize(line, &mut fields)?;
    if found != FULL_FIELDS {
        return Err(ParseErrorKind::FieldCount { expected: FULL_FIELDS, found });
    }

    let (timestamp, utc_offset) = match fields[3] {
        Field::Bracketed(s) => parse_timestamp(s)?,
        f => return Err(ParseErrorKind::Timestamp(f.text().to_string())),
    };

    let request = fields[4].text();
    let mut parts = request.split_ascii_whitespace();
    let (method, request_uri, protocol) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
        (Some(m), Some(u), Some(p), None) => (m, u, p),
        _ => return Err(ParseErrorKind::Request(request.to_string())),
    };

    let status_text = fields[5].text();
    let status = status_text
        .parse::<u16>()
        .ok()
        .filter(|s| (100..=599).contains(s))
        .ok_or_else(|| ParseErrorKind::Status(status_text.to_string()))?;

    let bytes_text = fields[6].text();
    let (bytes_sent, bytes_unknown) = if bytes_text == "-" {
        (0, true)
    } else {
        let n = bytes_text
            .parse::<u64>()
            .map_err(|_| ParseErrorKind::Bytes(bytes_text.to_string()))?;
        (n, false)
    };

    Ok(LogRecord {
        client_ip: fields[0].text().to_string(),
        remote_logname: fields[1].text().to_string(),
        remote_user: fields[2].text().to_string(),
        timestamp,
        utc_offset,
        method: Method::parse(method),
        request_uri: request_uri.to_string(),
        protocol: protocol.to_string(),
        status,
        bytes_sent,
        bytes_unknown,
        referrer: optional_field(fields[7]),
        user_agent: optional_field(fields[8]),
    })
}

fn parse_reduced(line: &str) -> Result<LogRecord, ParseErrorKind> {
    let line = line.trim_end_matches(['\r', '\n']);
    if line.trim().is_empty() {
        return Err(ParseErrorKind::Empty);
    }
    let mut fields: [Field<'_>; 5] = Default::default();
    let found = tokenize(line, &mut fields)?;
    let (ip, time, uri) = match found {
        3 => (fields[0], fields[1].text().to_string(), fields[2]),
        // Time and offset as separate columns: `ip 02/Feb/2012:07:04:52 +0000 uri`.
        4 => (fields[0], format!("{} {}", fields[1].text(), fields[2].text()), fields[3]),
        found => return Err(ParseErrorKind::FieldCount { expected: 3, found }),
    };
    let (timestamp, utc_offset) = if time.contains(' ') {
        parse_timestamp(&time)?
    } else {
        parse_timestamp_parts(&time, "+0000")?
    };
    Ok(LogRecord {
        client_ip: ip.text().to_string(),
        remote_logname: "-".into(),
        remote_user: "-".into(),
        timestamp,
        utc_offset,
        method: Method::Get,
        request_uri: uri.text().to_string(),
        protocol: "HTTP/1.1".into(),
        status: 200,
        bytes_sent: 0,
        bytes_unknown: false,
        referrer: None,
        user_agent: None,
    })
}

fn optional_field(field: Field<'_>) -> Option<String> {
    match field.text() {
        "-" | "" => None,
        s => Some(unescape_quotes(s)),
    }
}

#[derive(Debug, Clone, Copy, Default)]
enum Field<'a> {
    #[default]
    Missing,
    Bare(&'a str),
    Quoted(&'a str),
    Bracketed(&'a str),
}

impl<'a> Field<'a> {
    fn text(self) -> &'a str {
        match self {
            Field::Missing => "",
            Field::Bare(s) | Field::Quoted(s) | Field::Bracketed(s) => s,
        }
    }
}

/// Split a line into bare, `"quoted"` and `[bracketed]` tokens. Returns the
/// total token count even when it exceeds `out.len()`.
fn tokenize<'a>(line: &'a str, out: &mut [Field<'a>]) -> Result<usize, ParseErrorKind> {
    let bytes = line.as_bytes();
    let mut i = 0;
    let mut count = 0;
    while i < bytes.len() {
        match bytes[i] {
            b' ' | b'\t' => {
                i += 1;
                continue;
            }
            b'"' => {
                let start = i + 1;
                let mut j = start;
                loop {
                    match bytes.get(j) {
                        None => return Err(ParseErrorKind::UnclosedQuote),
                        Some(b'\\') => j += 2,
                        Some(b'"') => break,
                        Some(_) => j += 1,
                    }
                }
                push(out, &mut count, Field::Quoted(&line[start..j]));
                i = j + 1;
            }
            b'[' => {
                let start = i + 1;
                let end = bytes[start..]
                    .iter()
                    .position(|&b| b == b']')
                    .ok_or(ParseErrorKind::UnclosedBracket)?;
                push(out, &mut count, Field::Bracketed(&line[start..start + end]));
                i = start + end + 1;
            }
            _ => {
                let start = i;
                while i < bytes.len() && bytes[i] != b' ' && bytes[i] != b'\t' {
                    i += 1;
                }
                push(out, &mut count, Field::Bare(&line[start..i]));
            }
        }
    }
    Ok(count)
}

fn push<'a>(out: &mut [Field<'a>], count: &mut usize, field: Field<'a>) {
    if let Some(slot) = out.get_mut(*count) {
        *slot = field;
    }
    *count += 1;
}

fn unescape_quotes(s: &str) -> String {
    if !s.contains('\\') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('"') => out.push('"'),
                Some(other) => {
                    out.push('\\');
                    out.push(other);
                }
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn escape_quotes(s: &str) -> std::borrow::Cow<'_, str> {
    if s.contains('"') {
        s.replace('"', "\\\"").into()
    } else {
        s.into()
    }
}

/// Parse `dd/Mon/yyyy:HH:MM:SS +ZZZZ`.
pub fn parse_timestamp(s: &str) -> Result<(DateTime<Utc>, FixedOffset), ParseErrorKind> {
    let (time, offset) = s
        .split_once(' ')
        .ok_or_else(|| ParseErrorKind::Timestamp(s.to_string()))?;
    parse_timestamp_parts(time, offset).map_err(|_| ParseErrorKind::Timestamp(s.to_string()))
}

fn parse_timestamp_parts(time: &str, offset: &str) -> Result<(DateTime<Utc>, FixedOffset), ParseErrorKind> {
    let bad = || ParseErrorKind::Timestamp(format!("{time} {offset}"));
    let b = time.as_bytes();
    if b.len() != 20 || b[2] != b'/' || b[6] != b'/' || b[11] != b':' || b[14] != b':' || b[17] != b':' {
        return Err(bad());
    }
    let num = |range: std::ops::Range<usize>| -> Result<u32, ParseErrorKind> {
        let part = &b[range];
        if part.iter().all(u8::is_ascii_digit) {
            Ok(part.iter().fold(0u32, |acc, d| acc * 10 + u32::from(d - b'0')))
        } else {
            Err(bad())
        }
    };
    let day = num(0..2)?;
    let month = MONTHS
        .iter()
        .position(|m| m.as_bytes() == &b[3..6])
        .ok_or_else(bad)? as u32
        + 1;
    let year = num(7..11)? as i32;
    let (hour, minute, second) = (num(12..14)?, num(15..17)?, num(18..20)?);

    let ob = offset.as_bytes();
    if ob.len() != 5 || !matches!(ob[0], b'+' | b'-') || !ob[1..].iter().all(u8::is_ascii_digit) {
        return Err(bad());
    }
    let digits = |i: usize| i32::from(ob[i] - b'0');
    let secs = (digits(1) * 10 + digits(2)) * 3600 + (digits(3) * 10 + digits(4)) * 60;
    let offset = if ob[0] == b'-' {
        FixedOffset::west_opt(secs)
    } else {
        FixedOffset::east_opt(secs)
    }
    .ok_or_else(bad)?;

    let local = NaiveDate::from_ymd_opt(year, month, day)
        .and_then(|d| d.and_hms_opt(hour, minute, second))
        .ok_or_else(bad)?;
    let utc = (local - chrono::Duration::seconds(i64::from(offset.local_minus_utc()))).and_utc();
    Ok((utc, offset))
}

/// Render a timestamp in the access-log form `dd/Mon/yyyy:HH:MM:SS +ZZZZ`.
pub fn format_timestamp(utc: DateTime<Utc>, offset: FixedOffset) -> String {
    utc.with_timezone(&offset).format("%d/%b/%Y:%H:%M:%S %z").to_string()
}

impl LogRecord {
    pub fn time_secs(&self) -> i64 {
        self.timestamp.timestamp()
    }

    pub fn formatted_time(&self) -> String {
        format_timestamp(self.timestamp, self.utc_offset)
    }

    /// Reduced three-column rendering: `ip dd/Mon/yyyy:HH:MM:SS uri`.
    pub fn to_reduced(&self) -> String {
        let local = self.timestamp.with_timezone(&self.utc_offset);
        format!(
            "{} {} {}",
            self.client_ip,
            local.format("%d/%b/%Y:%H:%M:%S"),
            self.request_uri
        )
    }
}

impl fmt::Display for LogRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} [{}] \"{} {} {}\" {} ",
            self.client_ip,
            self.remote_logname,
            self.remote_user,
            self.formatted_time(),
            self.method,
            self.request_uri,
            self.protocol,
            self.status,
        )?;
        if self.bytes_unknown {
            f.write_str("-")?;
        } else {
            write!(f, "{}", self.bytes_sent)?;
        }
        write!(
            f,
            " \"{}\" \"{}\"",
            escape_quotes(self.referrer.as_deref().unwrap_or("-")),
            escape_quotes(self.user_agent.as_deref().unwrap_or("-")),
        )
    }
}

mod offset_seconds {
    use chrono::FixedOffset;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(o: &FixedOffset, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i32(o.local_minus_utc())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<FixedOffset, D::Error> {
        let secs = i32::deserialize(d)?;
        FixedOffset::east_opt(secs).ok_or_else(|| D::Error::custom("utc offset out of range"))
    }
}
