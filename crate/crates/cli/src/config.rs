use std::path::{Path, PathBuf};

use clap::ValueEnum;
use occflow::pricing::PayoffSpec;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Experiment file. Every section is optional; keys not listed here are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Subcommand the file was written for; checked against the one invoked.
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub numeric: NumericFile,
    #[serde(default)]
    pub model: ModelFile,
    #[serde(default)]
    pub grid: GridFile,
    pub payoff: Option<PayoffSpec>,
    #[serde(default)]
    pub stop: StopFile,
    #[serde(default)]
    pub converge: ConvergeFile,
    #[serde(default)]
    pub lov: LovFile,
    #[serde(default)]
    pub replicate: ReplicateFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericFile {
    pub horizon: Option<f64>,
    pub steps: Option<usize>,
    pub paths: Option<usize>,
    pub eps: Option<f64>,
    pub antithetic: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub kind: Option<ModelKind>,
    pub sigma: Option<f64>,
    pub sigma_loc: Option<PathBuf>,
    pub x0: Option<f64>,
    pub rate: Option<f64>,
    pub dividend: Option<f64>,
    pub kappa: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub center: Option<f64>,
    pub half_span: Option<f64>,
    pub bins: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopFile {
    pub method: Option<StopMethod>,
    pub t: Option<Vec<f64>>,
    pub iota: Option<Vec<f64>>,
    pub mbar: Option<Vec<usize>>,
    pub hit_rule: Option<HitRuleArg>,
    pub weighted_basis: Option<bool>,
    pub offline_paths: Option<usize>,
    pub scan_lo: Option<f64>,
    pub scan_hi: Option<f64>,
    pub scan_intervals: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeFile {
    pub strategy: Option<SweepArg>,
    pub eps: Option<Vec<f64>>,
    pub iota: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LovFile {
    pub sigma_loc: Option<PathBuf>,
    pub kappa: Option<f64>,
    pub multiplicative: Option<bool>,
    pub var_floor: Option<f64>,
    pub gamma: Option<GammaArg>,
    #[serde(default)]
    pub ell: EllFile,
    #[serde(default)]
    pub bandwidth: BandwidthFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllFile {
    pub kind: Option<EllKind>,
    pub beta: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub amplitude: Option<f64>,
    pub alpha: Option<f64>,
    pub center: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthFile {
    pub kappa_b: Option<f64>,
    pub exponent: Option<f64>,
    pub floor: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicateFile {
    pub quotes: Option<PathBuf>,
    pub corridor: Option<[f64; 2]>,
    pub maturity: Option<f64>,
    pub spot: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Arithmetic Brownian motion `x0 + sigma W`.
    Bm,
    /// Constant volatility.
    Gbm,
    /// Local volatility read from `sigma_loc`.
    Local,
    /// Trend-dependent volatility of an exponentially weighted average.
    Guyon,
    /// Local occupied volatility by the particle method.
    Lov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StopMethod {
    European,
    TwoDate,
    Inspection,
    Lsmc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum HitRuleArg {
    Corridor,
    GridProximity,
    Crossing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepArg {
    European,
    Inspection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EllKind {
    Zero,
    OneFactor,
    Ema,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GammaArg {
    Mass,
    ClosedForm,
}

pub fn load(path: &Path) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> CliResult<FileConfig> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

/// Reads a standalone payoff file, e.g. `kind = "range_accrual"` plus its fields.
pub fn load_payoff(path: &Path) -> CliResult<PayoffSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read payoff {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Flattens a resolved section into `section.key=value` pairs for the CSV header.
pub fn echo<T: Serialize>(section: &str, value: &T) -> Vec<(String, String)> {
    let mut out = Vec::new();
    match toml::Value::try_from(value) {
        Ok(v) => flatten(section, &v, &mut out),
        Err(e) => out.push((section.to_string(), format!("<unserializable: {e}>"))),
    }
    out
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn scalar(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Float(f) => format!("{f}"),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(a) => a.iter().map(scalar).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse("seed = 1\n[numeric]\nstepz = 3\n").is_err());
        assert!(parse("sed = 1\n").is_err());
        assert!(parse("[lov.ell]\nkind = \"tanh\"\nalpah = 2.0\n").is_err());
        let ok = parse("seed = 1\n[numeric]\nsteps = 3\n[payoff]\nkind = \"vanilla_call\"\nstrike = 100.0\n").unwrap();
        assert_eq!(ok.numeric.steps, Some(3));
        assert!(ok.payoff.is_some());
    }

    #[test]
    fn echo_flattens_nested_tables() {
        #[derive(Serialize)]
        struct Inner {
            a: f64,
        }
        #[derive(Serialize)]
        struct Outer {
            kind: ModelKind,
            list: Vec<f64>,
            inner: Inner,
        }
        let e = echo("m", &Outer { kind: ModelKind::Guyon, list: vec![0.5, 1.0], inner: Inner { a: 0.1 } });
        assert_eq!(
            e,
            vec![
                ("m.inner.a".to_string(), "0.1".to_string()),
                ("m.kind".to_string(), "guyon".to_string()),
                ("m.list".to_string(), "0.5,1".to_string()),
            ]
        );
    }
}
