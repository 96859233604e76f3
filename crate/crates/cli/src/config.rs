//! Settings from a `key=value` file, overridden by command-line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use ramkit::attention::{AttentionModelSpec, SubsetWeights};
use ramkit::domain::{GrandSet, Preference};
use ramkit::inference::{InferenceOptions, Kappa, Method};

pub const KNOWN_KEYS: &[&str] = &[
    "alpha", "attention", "beta", "collection", "data", "draws", "hypotheses", "k", "kappa", "method",
    "min_count", "mode", "n", "ns", "out", "perturb", "phi", "phis", "pref", "prefers", "replications",
    "seed", "sigma_floor", "sizes", "total",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    map: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected key=value", i + 1))?;
            s.set(k.trim(), v.trim()).with_context(|| format!("config line {}", i + 1))?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            bail!("unknown setting `{key}`");
        }
        self.map.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.map
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("setting `{key}` = `{v}`: {e}")))
            .transpose()
    }

    pub fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<T>().map_err(|e| anyhow!("setting `{key}` item `{s}`: {e}")))
                    .collect()
            })
            .transpose()
    }

    pub fn inference_options(&self) -> Result<InferenceOptions> {
        let d = InferenceOptions::default();
        let kappa = match self.get("kappa") {
            None | Some("logn") => Kappa::LogN,
            Some(v) => Kappa::Fixed(v.parse().map_err(|e| anyhow!("setting `kappa`: {e}"))?),
        };
        let opts = InferenceOptions {
            method: self.get("method").map(Method::parse).transpose()?.unwrap_or(d.method),
            alpha: self.parsed_or("alpha", d.alpha)?,
            draws: self.parsed_or("draws", d.draws)?,
            kappa,
            beta: self.parsed("beta")?,
            sigma_floor: self.parsed_or("sigma_floor", d.sigma_floor)?,
            seed: self.parsed_or("seed", d.seed)?,
        };
        opts.validate()?;
        Ok(opts)
    }

    pub fn phi(&self) -> Result<Option<f64>> {
        self.parsed("phi")
    }

    pub fn preference(&self, grand: &GrandSet) -> Result<Preference> {
        let text = self.get("pref").ok_or_else(|| anyhow!("missing --pref"))?;
        Ok(Preference::parse(text, grand)?)
    }

    pub fn attention(&self, k: usize) -> Result<AttentionModelSpec> {
        parse_attention(self.get("attention").unwrap_or("logit:2"), k)
    }
}

/// `full`, `uniform`, `logit:<power>`, `atmost:<k>`, `ic:<g>` (same
/// probability for every alternative) or `ic:<g1>,<g2>,...`.
pub fn parse_attention(text: &str, k: usize) -> Result<AttentionModelSpec> {
    let (name, arg) = text.split_once(':').unwrap_or((text, ""));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| anyhow!("attention `{text}`: {e}"));
    Ok(match name {
        "full" => AttentionModelSpec::FullAttention,
        "uniform" => AttentionModelSpec::Uniform,
        "logit" => AttentionModelSpec::LogitWeights(SubsetWeights::SizePower(num(arg)?)),
        "atmost" => AttentionModelSpec::AtMostK { k: arg.trim().parse().map_err(|e| anyhow!("attention `{text}`: {e}"))? },
        "ic" => {
            let gamma: Vec<f64> = arg.split(',').map(num).collect::<Result<_>>()?;
            let gamma = if gamma.len() == 1 { vec![gamma[0]; k] } else { gamma };
            AttentionModelSpec::IndependentConsideration { gamma }
        }
        _ => bail!("unknown attention model `{text}`"),
    })
}
