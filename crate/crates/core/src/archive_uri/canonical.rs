//! URI-R canonicalization.
//!
//! The canonical key is `host[:port]/path[?query]`: scheme dropped, host
//! lowercased with leading `www.` labels removed, default ports removed,
//! fragment removed, unreserved percent-escapes decoded in the path, and an
//! empty path written as `/`. The query is kept verbatim.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanonicalizeError {
    #[error("empty URI")]
    Empty,
    #[error("unsupported scheme `{0}`")]
    UnsupportedScheme(String),
    #[error("invalid host `{0}`")]
    InvalidHost(String),
    #[error("invalid port `{0}`")]
    InvalidPort(String),
}

const WEB_SCHEMES: [&str; 3] = ["http", "https", "ftp"];

/// Schemes that never denote an archivable resource, with or without `//`.
const NON_WEB_SCHEMES: [&str; 8] = ["about", "javascript", "data", "mailto", "file", "chrome", "blob", "tel"];

pub fn canonicalize(uri_r: &str) -> Result<String, CanonicalizeError> {
    let input = uri_r.trim();
    if input.is_empty() {
        return Err(CanonicalizeError::Empty);
    }
    let rest = strip_scheme(input)?;

    let authority_end = rest.find(['/', '?', '#']).unwrap_or(rest.len());
    let (authority, tail) = rest.split_at(authority_end);
    let authority = authority.rsplit_once('@').map_or(authority, |(_, host)| host);

    let (host, port) = split_port(authority)?;
    let mut host = host.to_ascii_lowercase();
    // `www.com` is a registrable name, so only strip when a dot remains.
    while let Some(stripped) = host.strip_prefix("www.").filter(|rest| rest.contains('.')) {
        host = stripped.to_string();
    }
    if !valid_host(&host) {
        return Err(CanonicalizeError::InvalidHost(authority.to_string()));
    }

    // Whitespace left before a fragment would be trimmed on a second pass.
    let tail = tail.split_once('#').map_or(tail, |(before, _)| before).trim_end();
    let (path, query) = match tail.split_once('?') {
        Some((p, q)) => (p, Some(q)),
        None => (tail, None),
    };

    let mut out = String::with_capacity(host.len() + tail.len() + 8);
    out.push_str(&host);
    if let Some(port) = port {
        out.push(':');
        out.push_str(port);
    }
    if path.is_empty() {
        out.push('/');
    } else {
        normalize_path_escapes(path, &mut out);
    }
    if let Some(q) = query {
        out.push('?');
        out.push_str(q);
    }
    Ok(out)
}

/// Remove `scheme://` (or the collapsed `scheme:/` some clients send).
/// Schemeless input is returned unchanged.
fn strip_scheme(input: &str) -> Result<&str, CanonicalizeError> {
    let Some(colon) = input.find(':') else {
        return Ok(input);
    };
    let scheme = &input[..colon];
    let looks_like_scheme = !scheme.is_empty()
        && scheme.as_bytes()[0].is_ascii_alphabetic()
        && scheme.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'+' | b'-' | b'.'));
    if !looks_like_scheme {
        return Ok(input);
    }
    let lower = scheme.to_ascii_lowercase();
    let after = &input[colon + 1..];
    let port_len = after.bytes().take_while(u8::is_ascii_digit).count();
    if port_len > 0 && matches!(after.as_bytes().get(port_len), None | Some(b'/' | b'?' | b'#')) {
        // `host:port`, even when the host is spelled like a scheme.
        return Ok(input);
    }
    if NON_WEB_SCHEMES.contains(&lower.as_str()) {
        return Err(CanonicalizeError::UnsupportedScheme(lower));
    }
    if let Some(rest) = after.strip_prefix("//") {
        if WEB_SCHEMES.contains(&lower.as_str()) {
            return Ok(rest);
        }
        return Err(CanonicalizeError::UnsupportedScheme(lower));
    }
    if WEB_SCHEMES.contains(&lower.as_str()) {
        if let Some(rest) = after.strip_prefix('/') {
            return Ok(rest);
        }
        // `http:example.com`
        return Ok(after);
    }
    // `host:port/...` without a scheme.
    Ok(input)
}

fn split_port(authority: &str) -> Result<(&str, Option<&str>), CanonicalizeError> {
    // Bracketed IPv6 literal.
    if authority.starts_with('[') {
        let close = authority
            .find(']')
            .ok_or_else(|| CanonicalizeError::InvalidHost(authority.to_string()))?;
        let (host, rest) = authority.split_at(close + 1);
        return match rest.strip_prefix(':') {
            Some(port) => Ok((host, check_port(port)?)),
            None if rest.is_empty() => Ok((host, None)),
            None => Err(CanonicalizeError::InvalidHost(authority.to_string())),
        };
    }
    match authority.rsplit_once(':') {
        Some((host, port)) => Ok((host, check_port(port)?)),
        None => Ok((authority, None)),
    }
}

fn check_port(port: &str) -> Result<Option<&str>, CanonicalizeError> {
    if port.is_empty() {
        return Ok(None);
    }
    match port.parse::<u16>() {
        Ok(80) | Ok(443) => Ok(None),
        Ok(_) if port.bytes().all(|b| b.is_ascii_digit()) => Ok(Some(port)),
        _ => Err(CanonicalizeError::InvalidPort(port.to_string())),
    }
}

fn valid_host(host: &str) -> bool {
    if host.is_empty() {
        return false;
    }
    if host.starts_with('[') {
        return host.ends_with(']') && host[1..host.len() - 1].bytes().all(|b| b.is_ascii_hexdigit() || b == b':' || b == b'.');
    }
    host.bytes()
        .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_') || b >= 0x80)
}

fn is_unreserved(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_' | b'~')
}

fn hex_value(b: u8) -> Option<u8> {
    match b {
        b'0'..=b'9' => Some(b - b'0'),
        b'a'..=b'f' => Some(b - b'a' + 10),
        b'A'..=b'F' => Some(b - b'A' + 10),
        _ => None,
    }
}

/// Decode `%XX` escapes of unreserved characters; uppercase the hex digits of
/// the escapes that remain.
fn normalize_path_escapes(path: &str, out: &mut String) {
    if !path.contains('%') {
        out.push_str(path);
        return;
    }
    let bytes = path.as_bytes();
    let mut i = 0;
    let mut start = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' && i + 2 < bytes.len() {
            if let (Some(hi), Some(lo)) = (hex_value(bytes[i + 1]), hex_value(bytes[i + 2])) {
                out.push_str(&path[start..i]);
                let decoded = hi * 16 + lo;
                if is_unreserved(decoded) {
                    out.push(decoded as char);
                } else {
                    out.push('%');
                    out.push(bytes[i + 1].to_ascii_uppercase() as char);
                    out.push(bytes[i + 2].to_ascii_uppercase() as char);
                }
                i += 3;
                start = i;
                continue;
            }
        }
        i += 1;
    }
    out.push_str(&path[start..]);
}
