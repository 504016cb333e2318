use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::record::{parse_line_as, LogFormat, LogRecord, ParseError, ParseErrorKind};

/// Stream-level failure; terminates the stream.
#[derive(Debug, Error)]
#[error("read failed after line {line_no}: {source}")]
pub struct StreamError {
    pub line_no: u64,
    #[source]
    pub source: io::Error,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseCounts {
    pub parsed: u64,
    pub failed: u64,
}

impl ParseCounts {
    pub fn merge(&mut self, other: ParseCounts) {
        self.parsed += other.parsed;
        self.failed += other.failed;
    }
}

/// Sequential line-by-line parser over any buffered reader.
///
/// Yields exactly one `Ok(Ok(record))` or `Ok(Err(parse_error))` per input
/// line, in input order. An I/O failure yields a single `Err` and ends the
/// stream.
pub struct RecordStream<R> {
    reader: R,
    format: LogFormat,
    line_no: u64,
    counts: ParseCounts,
    buf: Vec<u8>,
    done: bool,
}

impl<R: BufRead> RecordStream<R> {
    pub fn new(reader: R, format: LogFormat) -> Self {
        Self {
            reader,
            format,
            line_no: 0,
            counts: ParseCounts::default(),
            buf: Vec::with_capacity(512),
            done: false,
        }
    }

    pub fn counts(&self) -> ParseCounts {
        self.counts
    }
}

impl<R: BufRead> Iterator for RecordStream<R> {
    type Item = Result<Result<LogRecord, ParseError>, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        self.buf.clear();
        match self.reader.read_until(b'\n', &mut self.buf) {
            Ok(0) => {
                self.done = true;
                None
            }
            Ok(_) => {
                self.line_no += 1;
                let outcome = parse_bytes(&self.buf, self.format, self.line_no);
                match outcome {
                    Ok(_) => self.counts.parsed += 1,
                    Err(_) => self.counts.failed += 1,
                }
                Some(Ok(outcome))
            }
            Err(source) => {
                self.done = true;
                Some(Err(StreamError { line_no: self.line_no, source }))
            }
        }
    }
}

/// Parse one raw line (possibly with its trailing newline).
pub fn parse_bytes(line: &[u8], format: LogFormat, line_no: u64) -> Result<LogRecord, ParseError> {
    match std::str::from_utf8(line) {
        Ok(text) => parse_line_as(text, format, line_no),
        Err(_) => Err(ParseError { line_no, reason: ParseErrorKind::Encoding }),
    }
}

/// Convenience constructor matching the module's stream contract.
pub fn stream_records<R: BufRead>(source: R, format: LogFormat) -> RecordStream<R> {
    RecordStream::new(source, format)
}

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// Wrap a reader, transparently decompressing gzip input (detected by magic
/// bytes, not by file name).
pub fn open_reader<R: Read + Send + 'static>(inner: R) -> io::Result<Box<dyn BufRead + Send>> {
    let mut buffered = BufReader::with_capacity(1 << 16, inner);
    let is_gzip = buffered.fill_buf()?.starts_with(&GZIP_MAGIC);
    if is_gzip {
        Ok(Box::new(BufReader::with_capacity(1 << 16, MultiGzDecoder::new(buffered))))
    } else {
        Ok(Box::new(buffered))
    }
}

pub fn open_path(path: &Path) -> io::Result<Box<dyn BufRead + Send>> {
    open_reader(File::open(path)?)
}
