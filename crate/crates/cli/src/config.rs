//! Flat `key = value` scenario files.
//!
//! One entry per line; `#` starts a comment. Lists are separated by commas
//! or whitespace, and multi-record values (`mountains`, `t_overrides`) by
//! semicolons or commas respectively.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ridgeline_core::{Bounds, Point, Vec2};

use crate::error::{bad_value, CliError, Result};

/// Every key a scenario file may set.
pub const KNOWN_KEYS: &[&str] = &[
    "box",
    "N",
    "M",
    "K",
    "T",
    "sigma",
    "x0",
    "x_end",
    "scheme",
    "ext_mode",
    "n_directions",
    "n_ext_samples",
    "lf_alpha",
    "cfl_safety",
    "memory_cap",
    "check_invariants",
    "v0",
    "slope_shift",
    "denom",
    "pen_threshold",
    "pen_width",
    "terrain",
    "mountains",
    "wall",
    "dem_path",
    "nodata_policy",
    "method",
    "L",
    "seed",
    "realizations",
    "output",
    "value_format",
    "t_lo",
    "t_hi",
    "delta_reach",
    "tol_T",
    "sigma_list",
    "t_overrides",
    "snapshot_times",
    "stride",
];

/// Keys left out of the config echo: they name places on disk, not the
/// experiment, so reruns into other directories stay byte-identical.
const NOT_ECHOED: &[&str] = &["output"];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScenarioConfig {
    entries: BTreeMap<String, String>,
    /// Directory relative paths (`dem_path`) are resolved against.
    base_dir: PathBuf,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(CliError::Syntax { line })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(CliError::Syntax { line });
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::UnknownKey {
                    key: key.to_string(),
                    line,
                });
            }
            if entries
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(CliError::DuplicateKey {
                    key: key.to_string(),
                    line,
                });
            }
        }
        Ok(ScenarioConfig {
            entries,
            base_dir: base_dir.into(),
        })
    }

    /// Sets or replaces a key, e.g. from a command-line override.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::UnknownKey {
                key: key.to_string(),
                line: 0,
            });
        }
        self.entries.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn remove(&mut self, key: &str) {
        self.entries.remove(key);
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.raw(key)
            .ok_or_else(|| CliError::MissingKey(key.to_string()))
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    /// Sorted key/value pairs for summary files.
    pub fn echo(&self) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .filter(|(k, _)| !NOT_ECHOED.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key).map(|v| parse_scalar(key, v)).transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn need<T: FromStr>(&self, key: &str) -> Result<T> {
        parse_scalar(key, self.require(key)?)
    }

    /// A finite float.
    pub fn real(&self, key: &str) -> Result<Option<f64>> {
        match self.get::<f64>(key)? {
            Some(v) if !v.is_finite() => Err(bad_value(key, "must be finite")),
            v => Ok(v),
        }
    }

    pub fn need_real(&self, key: &str) -> Result<f64> {
        self.real(key)?
            .ok_or_else(|| CliError::MissingKey(key.to_string()))
    }

    pub fn reals(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.raw(key).map(|v| parse_reals(key, v)).transpose()
    }

    pub fn need_reals(&self, key: &str) -> Result<Vec<f64>> {
        parse_reals(key, self.require(key)?)
    }

    pub fn point(&self, key: &str) -> Result<Point> {
        match self.need_reals(key)?[..] {
            [x, y] => Ok(Vec2::new(x, y)),
            _ => Err(bad_value(key, "expected two numbers `x, y`")),
        }
    }

    pub fn bounds(&self) -> Result<Bounds> {
        match self.need_reals("box")?[..] {
            [a, b, c, d] => Ok(Bounds::new(a, b, c, d)?),
            _ => Err(bad_value(
                "box",
                "expected four numbers `x_min, x_max, y_min, y_max`",
            )),
        }
    }

    pub fn flag(&self, key: &str) -> Result<Option<bool>> {
        match self.raw(key) {
            None => Ok(None),
            Some("true" | "yes" | "1") => Ok(Some(true)),
            Some("false" | "no" | "0") => Ok(Some(false)),
            Some(other) => Err(bad_value(
                key,
                format!("expected true or false, got {other:?}"),
            )),
        }
    }

    /// One of `choices`, or `default` when unset.
    pub fn choice<'a>(&'a self, key: &str, choices: &[&str], default: &'a str) -> Result<&'a str> {
        let v = self.raw(key).unwrap_or(default);
        if choices.contains(&v) {
            Ok(v)
        } else {
            Err(bad_value(
                key,
                format!("expected one of {}, got {v:?}", choices.join(", ")),
            ))
        }
    }
}

fn parse_scalar<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| bad_value(key, format!("cannot parse {v:?}")))
}

pub(crate) fn parse_reals(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| match t.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(bad_value(key, format!("not a finite number: {t:?}"))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_lists() {
        let c = ScenarioConfig::parse(
            "# demo\nbox = 0, 4, 0,3 \nT=3.8 # horizon\n\nx0 = 0.4 1.5\n",
            "",
        )
        .unwrap();
        assert_eq!(c.need_real("T").unwrap(), 3.8);
        assert_eq!(c.point("x0").unwrap(), Vec2::new(0.4, 1.5));
        assert_eq!(c.bounds().unwrap().x_max, 4.0);
        assert_eq!(c.get_or("N", 7usize).unwrap(), 7);
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed() {
        let e = ScenarioConfig::parse("T = 1\nspeed = 2\n", "").unwrap_err();
        assert_eq!(e.to_string(), "unknown key: speed (line 2)");
        let e = ScenarioConfig::parse("T = 1\nT = 2\n", "").unwrap_err();
        assert!(matches!(e, CliError::DuplicateKey { line: 2, .. }));
        let e = ScenarioConfig::parse("T 1\n", "").unwrap_err();
        assert!(matches!(e, CliError::Syntax { line: 1 }));
    }

    #[test]
    fn missing_and_bad_values() {
        let c = ScenarioConfig::parse("N = ten\nx0 = 1\nsigma = inf\n", "").unwrap();
        assert_eq!(c.need_real("T").unwrap_err().to_string(), "missing key: T");
        assert!(c.need::<usize>("N").is_err());
        assert!(c.point("x0").is_err());
        assert!(c.real("sigma").is_err());
        assert!(c.choice("scheme", &["godunov"], "godunov").is_ok());
    }

    #[test]
    fn echo_is_sorted_and_skips_output() {
        let c = ScenarioConfig::parse("output = /tmp/x\nT = 1\nN = 4\n", "").unwrap();
        let keys: Vec<_> = c.echo().into_keys().collect();
        assert_eq!(keys, ["N", "T"]);
    }
}
