//! Plain-text `key = value` experiment configs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    Duplicate(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    Invalid { key: String, value: String, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    Circle,
    Torus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Identity,
    Perturbed,
    BlockGeneralized,
    AlmostRep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rep {
    Voiculescu,
    Trivial,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EpsilonChoice {
    /// Smallest value above the measured pair defect.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionChoice {
    Cosine,
    Quadratic,
    Both,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub space: Space,
    pub n: usize,
    pub charts: usize,
    pub chart_side: f64,
    pub source: Source,
    pub fiber_dim: usize,
    pub strength: f64,
    pub seed: u64,
    pub voiculescu_n: usize,
    pub rep_plus: Rep,
    pub rep_minus: Rep,
    pub f_radius: i64,
    pub epsilon: EpsilonChoice,
    pub partition: PartitionChoice,
    pub out_dir: PathBuf,
    pub dump_fields: bool,
}

pub const KEYS: &[&str] = &[
    "space",
    "n",
    "charts",
    "chart_side",
    "source",
    "fiber_dim",
    "strength",
    "seed",
    "voiculescu_n",
    "rep_plus",
    "rep_minus",
    "F_radius",
    "group",
    "epsilon",
    "partition",
    "out_dir",
    "dump_fields",
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            space: Space::Torus,
            n: 32,
            charts: 4,
            chart_side: 0.6,
            source: Source::Identity,
            fiber_dim: 1,
            strength: 0.05,
            seed: 0,
            voiculescu_n: 8,
            rep_plus: Rep::Voiculescu,
            rep_minus: Rep::Trivial,
            f_radius: 2,
            epsilon: EpsilonChoice::Auto,
            partition: PartitionChoice::Cosine,
            out_dir: PathBuf::from("out"),
            dump_fields: false,
        }
    }
}

fn invalid(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), value: value.into(), reason: reason.into() }
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| invalid(key, value, e.to_string()))
}

fn choice<T: Copy>(key: &str, value: &str, options: &[(&str, T)]) -> Result<T, ConfigError> {
    options.iter().find(|(name, _)| *name == value).map(|&(_, v)| v).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        invalid(key, value, format!("expected one of {}", names.join(", ")))
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut pairs = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1 });
            }
            if !KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey(k.into()));
            }
            if pairs.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError::Duplicate(k.into()));
            }
        }
        Self::from_pairs(&pairs)
    }

    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        // The circle defaults differ from the torus ones.
        if pairs.get("space").map(String::as_str) == Some("circle") {
            cfg.charts = 3;
            cfg.chart_side = 0.4;
        }
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key without cross-key validation.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "space" => self.space = choice(key, v, &[("circle", Space::Circle), ("torus", Space::Torus)])?,
            "n" => self.n = number(key, v)?,
            "charts" => self.charts = number(key, v)?,
            "chart_side" => self.chart_side = number(key, v)?,
            "source" => {
                self.source = choice(
                    key,
                    v,
                    &[
                        ("identity", Source::Identity),
                        ("perturbed", Source::Perturbed),
                        ("block_generalized", Source::BlockGeneralized),
                        ("almostrep", Source::AlmostRep),
                    ],
                )?
            }
            "fiber_dim" => self.fiber_dim = number(key, v)?,
            "strength" => self.strength = number(key, v)?,
            "seed" => self.seed = number(key, v)?,
            "voiculescu_n" => self.voiculescu_n = number(key, v)?,
            "rep_plus" => self.rep_plus = choice(key, v, &[("voiculescu", Rep::Voiculescu), ("trivial", Rep::Trivial)])?,
            "rep_minus" => self.rep_minus = choice(key, v, &[("voiculescu", Rep::Voiculescu), ("trivial", Rep::Trivial)])?,
            "F_radius" => self.f_radius = number(key, v)?,
            "group" => {
                choice(key, v, &[("Z2", ())])?;
            }
            "epsilon" => {
                self.epsilon = if v == "auto" { EpsilonChoice::Auto } else { EpsilonChoice::Fixed(number(key, v)?) }
            }
            "partition" => {
                self.partition = choice(
                    key,
                    v,
                    &[
                        ("cosine", PartitionChoice::Cosine),
                        ("quadratic", PartitionChoice::Quadratic),
                        ("both", PartitionChoice::Both),
                    ],
                )?
            }
            "out_dir" => self.out_dir = PathBuf::from(v),
            "dump_fields" => self.dump_fields = number(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, key: &str, value: String, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(invalid(key, &value, reason))
            }
        };
        check(self.n >= 4, "n", self.n.to_string(), "must be at least 4")?;
        check(self.chart_side > 0.0 && self.chart_side < 1.0, "chart_side", self.chart_side.to_string(), "must lie in (0, 1)")?;
        check(self.fiber_dim >= 1, "fiber_dim", self.fiber_dim.to_string(), "must be at least 1")?;
        check((0.0..=0.5).contains(&self.strength), "strength", self.strength.to_string(), "must lie in [0, 0.5]")?;
        check(self.voiculescu_n >= 2, "voiculescu_n", self.voiculescu_n.to_string(), "must be at least 2")?;
        check(self.f_radius >= 0, "F_radius", self.f_radius.to_string(), "must be nonnegative")?;
        if let EpsilonChoice::Fixed(e) = self.epsilon {
            check(e > 0.0 && e.is_finite(), "epsilon", e.to_string(), "must be positive")?;
        }
        match self.space {
            Space::Circle => check(self.charts >= 3, "charts", self.charts.to_string(), "circle needs at least 3 arcs")?,
            Space::Torus => {
                let k = (self.charts as f64).sqrt().round() as usize;
                check(k >= 2 && k * k == self.charts, "charts", self.charts.to_string(), "torus needs k² charts, k ≥ 2")?
            }
        }
        if matches!(self.source, Source::BlockGeneralized | Source::AlmostRep) {
            check(self.space == Space::Torus, "space", "circle".into(), "this source needs the torus")?;
        }
        if self.source == Source::BlockGeneralized {
            check(self.fiber_dim >= 2, "fiber_dim", self.fiber_dim.to_string(), "block source needs N ≥ 2")?;
        }
        Ok(())
    }

    /// Fiber dimension actually used: the almostrep source takes it from the
    /// representation.
    pub fn effective_fiber_dim(&self) -> usize {
        match self.source {
            Source::AlmostRep => self.voiculescu_n,
            _ => self.fiber_dim,
        }
    }

    /// Canonical key/value echo, sorted by key.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let rep = |r: Rep| match r {
            Rep::Voiculescu => "voiculescu",
            Rep::Trivial => "trivial",
        };
        let mut out = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            out.insert(k.to_string(), v);
        };
        put("space", match self.space {
            Space::Circle => "circle".into(),
            Space::Torus => "torus".into(),
        });
        put("n", self.n.to_string());
        put("charts", self.charts.to_string());
        put("chart_side", self.chart_side.to_string());
        put("source", match self.source {
            Source::Identity => "identity".into(),
            Source::Perturbed => "perturbed".into(),
            Source::BlockGeneralized => "block_generalized".into(),
            Source::AlmostRep => "almostrep".into(),
        });
        put("fiber_dim", self.effective_fiber_dim().to_string());
        put("strength", self.strength.to_string());
        put("seed", self.seed.to_string());
        put("voiculescu_n", self.voiculescu_n.to_string());
        put("rep_plus", rep(self.rep_plus).into());
        put("rep_minus", rep(self.rep_minus).into());
        put("F_radius", self.f_radius.to_string());
        put("group", "Z2".into());
        put("epsilon", match self.epsilon {
            EpsilonChoice::Auto => "auto".into(),
            EpsilonChoice::Fixed(e) => e.to_string(),
        });
        put("partition", match self.partition {
            PartitionChoice::Cosine => "cosine".into(),
            PartitionChoice::Quadratic => "quadratic".into(),
            PartitionChoice::Both => "both".into(),
        });
        put("dump_fields", self.dump_fields.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_echoes() {
        let cfg = ExperimentConfig::parse(
            "# torus run\nspace = torus\nn = 16\nsource = perturbed   # comment\nstrength = 0.01\nepsilon = auto\n",
        )
        .unwrap();
        assert_eq!(cfg.n, 16);
        assert_eq!(cfg.source, Source::Perturbed);
        let echo = cfg.echo();
        assert_eq!(echo["strength"], "0.01");
        assert_eq!(echo["charts"], "4");
        let again = ExperimentConfig::from_pairs(&echo).unwrap();
        assert_eq!(again.echo(), echo);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(ExperimentConfig::parse("colour = red"), Err(ConfigError::UnknownKey("colour".into())));
        assert_eq!(ExperimentConfig::parse("n = 8\nn = 9"), Err(ConfigError::Duplicate("n".into())));
        assert_eq!(ExperimentConfig::parse("n 8"), Err(ConfigError::Syntax { line: 1 }));
        assert!(matches!(ExperimentConfig::parse("n = 3"), Err(ConfigError::Invalid { .. })));
        assert!(matches!(ExperimentConfig::parse("charts = 5"), Err(ConfigError::Invalid { .. })));
        assert!(matches!(ExperimentConfig::parse("strength = 0.7"), Err(ConfigError::Invalid { .. })));
        assert!(matches!(ExperimentConfig::parse("space = circle\nsource = almostrep"), Err(ConfigError::Invalid { .. })));
        assert!(matches!(ExperimentConfig::parse("epsilon = -1"), Err(ConfigError::Invalid { .. })));
    }

    #[test]
    fn circle_defaults() {
        let cfg = ExperimentConfig::parse("space = circle").unwrap();
        assert_eq!((cfg.charts, cfg.chart_side), (3, 0.4));
    }
}
