//! Experiment configuration: a command plus a flat `key = value` map,
//! validated against the command's schema and completed with defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expander::{parse_rational, Q};
use crate::major::WeightSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SumEval,
    ArcClassify,
    VerifyIdentities,
    VerifyEnvelopes,
    MajorApprox,
    Expander,
    BoundTable,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::SumEval,
        Command::ArcClassify,
        Command::VerifyIdentities,
        Command::VerifyEnvelopes,
        Command::MajorApprox,
        Command::Expander,
        Command::BoundTable,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::SumEval => "sum-eval",
            Self::ArcClassify => "arc-classify",
            Self::VerifyIdentities => "verify-identities",
            Self::VerifyEnvelopes => "verify-envelopes",
            Self::MajorApprox => "major-approx",
            Self::Expander => "expander",
            Self::BoundTable => "bound-table",
        }
    }

    /// Accepted keys with their defaults.
    fn schema(&self) -> &'static [(&'static str, &'static str)] {
        match self {
            Self::SumEval => &[
                ("sum", "F_w"),
                ("alpha", "0.25"),
                ("P", "400"),
                ("w", "1"),
                ("q", "1"),
                ("a", "0"),
                ("b", "0"),
                ("beta1", "0"),
                ("beta2", "0"),
                ("X", "1000"),
                ("Y", "10"),
            ],
            Self::ArcClassify => &[("alpha", "0.5"), ("P", "100"), ("w", "1")],
            Self::VerifyIdentities => &[
                ("identity_tol", "1e-8"),
                ("t_samples", "10000"),
                ("t_q_max", "200"),
                ("h0_q_max", "60"),
                ("w_r_max", "40"),
                ("reduction_cases", "1000"),
                ("mobius_p_grid", "400,2500,10000"),
                ("mobius_samples", "100"),
                ("rearrangement_samples", "50"),
                ("vanishing_q_max", "150"),
                ("w_table_r_max", "2500"),
                ("w_bound_p_max", "500"),
                ("kappa_q_max", "1000000"),
                ("kappa_w", "1,6,30,210,primorial"),
                ("kappa_primorial_bound", "31"),
            ],
            Self::VerifyEnvelopes => &[
                ("suite", "lemmas"),
                ("slope_threshold", "0.15"),
                ("weyl_slope_threshold", "0.1"),
                ("gauss_q_max", "200"),
                ("gauss_c_max", "2"),
                ("hua_q_max", "300"),
                ("hua_a_samples", "4"),
                ("quadweyl_x_exp", "10,11,12,13,14,15,16"),
                ("quadweyl_samples", "150"),
                ("quadweyl_q_max", "30"),
                ("lj_p_grid", "100,1000,10000,100000"),
                ("lj_samples", "250"),
                ("j310_samples", "200"),
                ("k_beta_samples", "40"),
                ("weyl_x_exp", "10,11,12,13,14"),
                ("weyl_samples", "200"),
                ("gcd_r_max", "500"),
                ("gcd_h_grid", "10,100,1000,10000"),
                ("minor_samples", "1000"),
                ("near_samples", "1000"),
                ("cubic_q", "27"),
            ],
            Self::MajorApprox => &[("w_list", "1,6,primorial"), ("rungs", "8"), ("slope_threshold", "0.15"), ("alpha", "")],
            Self::Expander => &[
                ("N", "1000000"),
                ("delta", "0.5"),
                ("trend_n_grid", "10000,100000,1000000"),
                ("oracle_runs", "20"),
                ("oracle_n_max", "100000"),
                ("trend_decay", "0.05"),
                ("slope_threshold", "0.15"),
            ],
            Self::BoundTable => &[("delta_start", "0"), ("delta_stop", "1"), ("delta_step", "0.05")],
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command `{s}`")))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Keys every command accepts.
const COMMON: &[(&str, &str)] = &[
    ("seed", "20240607"),
    ("epsilon", "0.1"),
    ("tolerance_scale", "1"),
    ("p_grid", "1000,4000,16000"),
    ("out", ""),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    /// Fully resolved parameters, sorted by key.
    pub params: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// Defaults for `command`, then `overrides` in order; unknown keys fail.
    pub fn resolve<'a, I>(command: Command, overrides: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut params: BTreeMap<String, String> = COMMON
            .iter()
            .chain(command.schema())
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        for (k, v) in overrides {
            let k = k.trim();
            match params.get_mut(k) {
                Some(slot) => *slot = v.trim().to_string(),
                None => {
                    return Err(Error::Config(format!(
                        "unknown key `{k}` for command `{command}`"
                    )))
                }
            }
        }
        let cfg = Self { command, params };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses a flat `key = value` file; `#` starts a comment.
    pub fn parse_file(text: &str) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", i + 1)));
            }
            out.push((k.to_string(), v.trim().to_string()));
        }
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        self.f64("epsilon")?;
        let s = self.f64("tolerance_scale")?;
        if !(s > 0.0) {
            return Err(Error::Config("tolerance_scale must be positive".into()));
        }
        self.u64("seed")?;
        self.f64_list("p_grid")?;
        Ok(())
    }

    pub fn str(&self, key: &str) -> &str {
        self.params.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self.str(key);
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::Config(format!("`{key}` must be a finite number, got `{v}`")))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        let v = self.str(key);
        // accept `1e6`-style integers as well
        v.parse::<u64>()
            .ok()
            .or_else(|| v.parse::<f64>().ok().filter(|x| *x >= 0.0 && x.fract() == 0.0 && *x < 1.8e19).map(|x| x as u64))
            .ok_or_else(|| Error::Config(format!("`{key}` must be a non-negative integer, got `{v}`")))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        Ok(self.u64(key)? as usize)
    }

    pub fn i64(&self, key: &str) -> Result<i64> {
        let v = self.str(key);
        v.parse::<i64>()
            .map_err(|_| Error::Config(format!("`{key}` must be an integer, got `{v}`")))
    }

    pub fn rational(&self, key: &str) -> Result<Q> {
        parse_rational(self.str(key))
    }

    fn items(&self, key: &str) -> Vec<String> {
        self.str(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect()
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.items(key)
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::Config(format!("`{key}`: not a number: `{s}`")))
            })
            .collect()
    }

    pub fn u64_list(&self, key: &str) -> Result<Vec<u64>> {
        self.items(key)
            .iter()
            .map(|s| s.parse::<u64>().map_err(|_| Error::Config(format!("`{key}`: not an integer: `{s}`"))))
            .collect()
    }

    pub fn weights(&self, key: &str) -> Result<Vec<WeightSpec>> {
        self.items(key).iter().map(|s| WeightSpec::parse(s)).collect()
    }

    pub fn weight(&self, key: &str) -> Result<WeightSpec> {
        WeightSpec::parse(self.str(key))
    }

    pub fn seed(&self) -> u64 {
        self.u64("seed").unwrap_or(0)
    }

    pub fn epsilon(&self) -> f64 {
        self.f64("epsilon").unwrap_or(0.1)
    }

    pub fn tolerance_scale(&self) -> f64 {
        self.f64("tolerance_scale").unwrap_or(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = ExperimentConfig::resolve(Command::SumEval, [("P", "900"), ("alpha", "0.3141")]).unwrap();
        assert_eq!(cfg.f64("P").unwrap(), 900.0);
        assert_eq!(cfg.str("sum"), "F_w");
        assert_eq!(cfg.epsilon(), 0.1);
        assert!(ExperimentConfig::resolve(Command::SumEval, [("N", "5")]).is_err());
        assert!(ExperimentConfig::resolve(Command::SumEval, [("epsilon", "x")]).is_err());
        assert_eq!(
            ExperimentConfig::resolve(Command::Expander, [("N", "1e6")]).unwrap().u64("N").unwrap(),
            1_000_000
        );
    }

    #[test]
    fn file_format() {
        let kv = ExperimentConfig::parse_file("# comment\nP = 400\n\nw=6 # trailing\n").unwrap();
        assert_eq!(kv, vec![("P".into(), "400".into()), ("w".into(), "6".into())]);
        assert!(ExperimentConfig::parse_file("nonsense").is_err());
        assert_eq!("major-approx".parse::<Command>().unwrap(), Command::MajorApprox);
        assert!("frobnicate".parse::<Command>().is_err());
    }
}
