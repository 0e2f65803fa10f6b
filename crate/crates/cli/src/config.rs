//! Flat `key = value` configuration files.
//!
//! Every key names a long option without its dashes (`epsilon = -0.5`,
//! `cache-dir = /tmp/c`). Blank lines and lines starting with `#` are
//! ignored. Options given on the command line win over the file.

use std::ffi::OsString;
use std::path::Path;

/// Parses a config file into `(key, value)` pairs.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value, got {raw:?}", i + 1))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key.starts_with('-') {
            return Err(format!("config line {}: bad key {k:?}", i + 1));
        }
        if key == "config" {
            return Err(format!("config line {}: nested config files are not supported", i + 1));
        }
        pairs.push((key, v.trim().to_string()));
    }
    Ok(pairs)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn has_option(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let with_value = format!("--{key}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag.as_str() || s.starts_with(&with_value)
    })
}

/// Appends options from the `--config` file that the command line does not
/// already set. Appending keeps them inside the subcommand's scope, so both
/// global and subcommand options work.
pub fn expand_args(mut args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    for (key, value) in parse(&text)? {
        if !has_option(&args, &key) {
            args.push(format!("--{key}").into());
            args.push(value.into());
        }
    }
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_pairs_and_comments() {
        let p = parse("# defaults\nepsilon = -0.5\n\ncache_dir=/tmp/x\n").unwrap();
        assert_eq!(p, vec![("epsilon".into(), "-0.5".into()), ("cache-dir".into(), "/tmp/x".into())]);
        assert!(parse("epsilon -0.5").is_err());
        assert!(parse("config = other").is_err());
    }

    #[test]
    fn command_line_wins() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.conf");
        std::fs::write(&file, "epsilon = -0.7\nseed = 9\n").unwrap();
        let args = os(&["prog", "effdim", "--config", file.to_str().unwrap(), "--epsilon=-0.5"]);
        let out = expand_args(args).unwrap();
        let joined: Vec<String> = out.iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert!(joined.contains(&"--epsilon=-0.5".to_string()));
        assert!(!joined.contains(&"-0.7".to_string()));
        assert!(joined.ends_with(&["--seed".to_string(), "9".to_string()]));
    }
}
