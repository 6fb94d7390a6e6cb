//! Text formats read by the harness: `key = value` config files, the
//! `# key = value` header at the top of every output table, and value lists
//! such as `1e-4,1e-5` or `0:5:21`.

use std::fmt;

/// A syntax error with the 1-based line it occurred on (0 for value lists).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ParseError {}

fn error(line: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, message: message.into() }
}

/// One `key = value` entry and the line it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_')
        && key.starts_with(|c: char| c.is_ascii_lowercase())
}

fn parse_entry(text: &str, line: usize) -> Result<Entry, ParseError> {
    let (key, value) = text.split_once('=').ok_or_else(|| error(line, format!("expected `key = value`, got `{text}`")))?;
    let key = key.trim().replace('_', "-");
    if !valid_key(&key) {
        return Err(error(line, format!("invalid key `{}`", key)));
    }
    Ok(Entry { key, value: value.trim().to_string(), line })
}

fn check_duplicates(entries: &[Entry]) -> Result<(), ParseError> {
    for (i, e) in entries.iter().enumerate() {
        if let Some(first) = entries[..i].iter().find(|f| f.key == e.key) {
            return Err(error(e.line, format!("`{}` already set on line {}", e.key, first.line)));
        }
    }
    Ok(())
}

/// Parses a config file: one `key = value` per line, `#` starts a comment
/// line, blank lines are skipped, and a key may appear only once. Keys use
/// hyphens; underscores are accepted and normalized.
pub fn parse_config(text: &str) -> Result<Vec<Entry>, ParseError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        entries.push(parse_entry(line, i + 1)?);
    }
    check_duplicates(&entries)?;
    Ok(entries)
}

/// Reads the leading block of `#` lines of an output table. Every header
/// line must be `# key = value`; the block ends at the first other line.
pub fn parse_header(text: &str) -> Result<Vec<Entry>, ParseError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let Some(rest) = raw.strip_prefix('#') else {
            break;
        };
        entries.push(parse_entry(rest.trim(), i + 1)?);
    }
    if entries.is_empty() {
        return Err(error(1, "no header found"));
    }
    check_duplicates(&entries)?;
    Ok(entries)
}

/// Longest list a range item may expand to.
pub const MAX_RANGE: usize = 100_000;

fn parse_number(item: &str) -> Result<f64, ParseError> {
    let v: f64 = item.parse().map_err(|_| error(0, format!("`{item}` is not a number")))?;
    if !v.is_finite() {
        return Err(error(0, format!("`{item}` is not finite")));
    }
    Ok(v)
}

/// Parses a comma-separated list of numbers. An item `start:stop:count`
/// expands to `count` evenly spaced values including both ends. An empty
/// string is the empty list.
pub fn parse_list(text: &str) -> Result<Vec<f64>, ParseError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let mut values = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        if item.is_empty() {
            return Err(error(0, "empty item in list"));
        }
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [single] => values.push(parse_number(single)?),
            [start, stop, count] => {
                let (start, stop) = (parse_number(start.trim())?, parse_number(stop.trim())?);
                let count: usize =
                    count.trim().parse().map_err(|_| error(0, format!("range count `{count}` is not a positive integer")))?;
                if count == 0 || count > MAX_RANGE || values.len() + count > MAX_RANGE {
                    return Err(error(0, format!("range count must lie in 1..={MAX_RANGE}")));
                }
                if count == 1 {
                    values.push(start);
                } else {
                    let step = (stop - start) / (count - 1) as f64;
                    values.extend((0..count).map(|k| if k + 1 == count { stop } else { start + step * k as f64 }));
                }
            }
            _ => return Err(error(0, format!("`{item}` is neither a number nor start:stop:count"))),
        }
    }
    Ok(values)
}

/// Canonical text of a list, the inverse of [`parse_list`].
pub fn format_list(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}
