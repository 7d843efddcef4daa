//! Flat key = value config files for `simulate`.
//!
//! Lines are `key = value`; `#` starts a comment. Keys:
//!
//! - `beta`: comma-separated AR coefficients (empty or absent = white noise)
//! - `scheme`: `sk1` or `sk2`
//! - `gamma`: root for `sk1`, or the repeated root for `kind = repeated`
//! - `kind`: `real_distinct` | `conjugate_pair` | `repeated` (sk2 only)
//! - `gamma1`, `gamma2`: real roots for `kind = real_distinct`
//! - `r`, `theta`: modulus and angle for `kind = conjugate_pair`
//! - `horizon`, `trials`, `seed`: run geometry

use std::collections::BTreeMap;

use feedcap::noise::ArModel;
use feedcap::params::Sk2Params;
use feedcap::sim::{SchemeParams, SimConfig};

use crate::errors::CliError;

pub fn parse_beta_list(s: &str) -> Result<Vec<f64>, CliError> {
    let t = s.trim();
    if t.is_empty() {
        return Ok(Vec::new());
    }
    t.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliError::input(format!("invalid beta value '{}'", tok.trim())))
        })
        .collect()
}

struct RawConfig {
    values: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(_, v)| v.as_str())
    }

    fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::input(format!("config is missing required key '{key}'")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        let (line, raw) = self
            .values
            .get(key)
            .ok_or_else(|| CliError::input(format!("config is missing required key '{key}'")))?;
        raw.parse::<T>().map_err(|_| {
            CliError::input(format!("line {line}: key '{key}' has invalid value '{raw}'"))
        })
    }
}

fn parse_raw(text: &str) -> Result<RawConfig, CliError> {
    let mut values = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let stripped = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(CliError::input(format!(
                "line {lineno}: expected 'key = value', got '{stripped}'"
            )));
        };
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(CliError::input(format!("line {lineno}: empty key")));
        }
        if values.contains_key(&key) {
            return Err(CliError::input(format!("line {lineno}: duplicate key '{key}'")));
        }
        values.insert(key, (lineno, value.trim().to_string()));
    }
    Ok(RawConfig { values })
}

pub fn parse_sim_config(text: &str) -> Result<SimConfig, CliError> {
    let raw = parse_raw(text)?;
    let known = [
        "beta", "scheme", "kind", "gamma", "gamma1", "gamma2", "r", "theta", "horizon",
        "trials", "seed",
    ];
    for (key, (line, _)) in &raw.values {
        if !known.contains(&key.as_str()) {
            return Err(CliError::input(format!("line {line}: unknown key '{key}'")));
        }
    }
    let betas = parse_beta_list(raw.get("beta").unwrap_or(""))?;
    let model = ArModel::new(betas).map_err(|e| CliError::input(e.to_string()))?;
    let scheme = match raw.require("scheme")? {
        "sk1" => SchemeParams::Sk1 { gamma: raw.parse::<f64>("gamma")? },
        "sk2" => {
            let params = match raw.require("kind")? {
                "real_distinct" => Sk2Params::real_distinct(
                    raw.parse::<f64>("gamma1")?,
                    raw.parse::<f64>("gamma2")?,
                ),
                "conjugate_pair" => {
                    Sk2Params::conjugate(raw.parse::<f64>("r")?, raw.parse::<f64>("theta")?)
                }
                "repeated" => Sk2Params::repeated(raw.parse::<f64>("gamma")?),
                other => {
                    return Err(CliError::input(format!(
                        "key 'kind' must be real_distinct, conjugate_pair or repeated, got '{other}'"
                    )))
                }
            }
            .map_err(|e| CliError::input(e.to_string()))?;
            SchemeParams::Sk2(params)
        }
        other => {
            return Err(CliError::input(format!(
                "key 'scheme' must be sk1 or sk2, got '{other}'"
            )))
        }
    };
    Ok(SimConfig {
        model,
        scheme,
        horizon: raw.parse::<usize>("horizon")?,
        trials: raw.parse::<u64>("trials")?,
        seed: raw.parse::<u64>("seed")?,
        log_domain: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_sk2_config() {
        let cfg = parse_sim_config(
            "# awgn\nbeta =\nscheme = sk2\nkind = conjugate_pair\nr = 1.4\ntheta = 1.0\nhorizon = 20\ntrials = 10\nseed = 1\n",
        )
        .unwrap();
        assert_eq!(cfg.horizon, 20);
        assert!(matches!(cfg.scheme, SchemeParams::Sk2(_)));
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_sim_config("scheme = sk1\ngamma = oops\nhorizon = 5\ntrials = 1\nseed = 0")
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("gamma"), "{msg}");
    }

    #[test]
    fn rejects_unknown_keys_and_duplicates() {
        assert!(parse_sim_config("bogus = 3").unwrap_err().to_string().contains("unknown key"));
        let err = parse_sim_config("seed = 1\nseed = 2").unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }
}
