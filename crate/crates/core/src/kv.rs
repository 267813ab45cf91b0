//! `key=value` text files used for coefficient sets and bundle metadata.

use std::collections::BTreeMap;
use std::path::Path;

use crate::{Error, Result};

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse(text: &str, source: &Path) -> Result<BTreeMap<String, (usize, String)>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::format(source, i + 1, None, format!("expected key=value, found {line:?}")))?;
        let key = k.trim().to_string();
        if out.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
            return Err(Error::format(source, i + 1, None, format!("duplicate key {key:?}")));
        }
    }
    Ok(out)
}

pub fn read(path: &Path) -> Result<BTreeMap<String, (usize, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, path)
}

pub fn get_f64(map: &BTreeMap<String, (usize, String)>, key: &str, source: &Path) -> Result<f64> {
    let (line, raw) = map
        .get(key)
        .ok_or_else(|| Error::format(source, 0, None, format!("missing key {key:?}")))?;
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::format(source, *line, None, format!("{key}: cannot parse {raw:?}")))
}

pub fn write(path: &Path, pairs: &[(&str, String)]) -> Result<()> {
    let mut text = String::new();
    for (k, v) in pairs {
        text.push_str(k);
        text.push('=');
        text.push_str(v);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reports() {
        let p = Path::new("k.txt");
        let m = parse("# c\na = 1.5\n\nb=2\n", p).unwrap();
        assert_eq!(get_f64(&m, "a", p).unwrap(), 1.5);
        assert_eq!(m["b"].0, 4);
        assert!(get_f64(&m, "z", p).is_err());
        assert!(matches!(parse("a=1\nnope\n", p), Err(Error::Format { line: 2, .. })));
        assert!(parse("a=1\na=2\n", p).is_err());
        let m = parse("x=abc\n", p).unwrap();
        assert!(matches!(get_f64(&m, "x", p), Err(Error::Format { line: 1, .. })));
    }
}
