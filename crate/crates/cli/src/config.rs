//! `--config FILE` support: file entries become flags placed right after the
//! subcommand name, so anything given on the command line comes later and wins.

use std::fmt;
use std::path::Path;

const SUBCOMMANDS: [&str; 6] = ["synth", "train", "bundle", "estimate", "evaluate", "fit"];

#[derive(Debug)]
pub enum ConfigError {
    Read(String),
    Syntax(String),
}

impl ConfigError {
    pub fn exit_code(&self) -> u8 {
        match self {
            ConfigError::Read(_) => 1,
            ConfigError::Syntax(_) => 2,
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Read(m) | ConfigError::Syntax(m) => f.write_str(m),
        }
    }
}

fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--" {
            break;
        }
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// Turns `key = value` lines into `--key value` pairs. Underscores in keys become dashes.
pub fn file_flags(text: &str, source: &Path) -> Result<Vec<String>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            ConfigError::Syntax(format!(
                "{}:{}: expected key=value, found {line:?}",
                source.display(),
                i + 1
            ))
        })?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(ConfigError::Syntax(format!(
                "{}:{}: key {:?} is not allowed",
                source.display(),
                i + 1,
                k.trim()
            )));
        }
        out.push(format!("--{key}"));
        out.push(v.trim().to_string());
    }
    Ok(out)
}

/// Returns `argv` with the config file's flags spliced in after the subcommand.
pub fn merge(argv: Vec<String>) -> Result<Vec<String>, ConfigError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| ConfigError::Read(format!("{path}: {e}")))?;
    let flags = file_flags(&text, Path::new(&path))?;
    let Some(pos) = argv.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        // no subcommand: let clap report it
        return Ok(argv);
    };
    let mut out = argv[..=pos].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}
