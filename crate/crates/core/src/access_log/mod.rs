//! Access-log parsing.

mod record;
mod stream;

pub use record::{
    format_timestamp, parse_line, parse_line_as, parse_timestamp, LogFormat, LogRecord, Method, ParseError,
    ParseErrorKind,
};
pub use stream::{open_path, open_reader, parse_bytes, stream_records, ParseCounts, RecordStream, StreamError};
