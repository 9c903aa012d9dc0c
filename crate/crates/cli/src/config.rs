//! Run configuration: a TOML file with `chain`, `protocol`, `numerics`,
//! `output` and `oracle` sections plus a top-level `seed`.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use pontus_core::dynamics::{ProtocolKind, RunOptions, TrelMode};
use pontus_core::ChainParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub chain: ChainSection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub oracle: OracleSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub l: usize,
    #[serde(default = "one")]
    pub j: f64,
    #[serde(default)]
    pub eps: f64,
    pub j_r: f64,
    pub j_l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// `|1><1|`
    First,
    /// `|L><L|`
    Last,
}

impl InitialState {
    pub fn label(self) -> &'static str {
        match self {
            Self::First => "first",
            Self::Last => "last",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    #[serde(default = "default_kinds")]
    pub kinds: Vec<ProtocolKind>,
    #[serde(default = "default_states")]
    pub initial_states: Vec<InitialState>,
    /// Preparation time of the two-step protocol in `relax`.
    pub tau: Option<f64>,
    /// Swap rate override; defaults to `pi / (2 tau)`.
    pub eps1: Option<f64>,
    pub tau_grid: Option<Vec<f64>>,
    pub tau_range: Option<TauRange>,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            kinds: default_kinds(),
            initial_states: default_states(),
            tau: None,
            eps1: None,
            tau_grid: None,
            tau_range: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub trel_mode: TrelMode,
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self {
            threshold: default_threshold(),
            dt: default_dt(),
            horizon: default_horizon(),
            trel_mode: TrelMode::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: Format,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            format: Format::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    /// Run the classical comparison even if the chain has `J != 0` or `eps != 0`
    /// (both are then set to zero).
    #[serde(default)]
    pub force: bool,
    #[serde(default = "default_r_values")]
    pub r_values: Vec<f64>,
    #[serde(default = "default_ratio_sizes")]
    pub ratio_sizes: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            force: false,
            r_values: default_r_values(),
            ratio_sizes: default_ratio_sizes(),
            samples: default_samples(),
            t_max: default_t_max(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_kinds() -> Vec<ProtocolKind> {
    vec![ProtocolKind::Direct]
}
fn default_states() -> Vec<InitialState> {
    vec![InitialState::First]
}
fn default_threshold() -> f64 {
    0.01
}
fn default_dt() -> f64 {
    0.01
}
fn default_horizon() -> f64 {
    200.0
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_r_values() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 2.0, 4.0]
}
fn default_ratio_sizes() -> Vec<usize> {
    (8..=16).collect()
}
fn default_samples() -> usize {
    100
}
fn default_t_max() -> f64 {
    20.0
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("malformed config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.chain_params()?;
        let n = &self.numerics;
        ensure!(n.threshold > 0.0 && n.threshold < 1.0, "threshold must lie in (0, 1), got {}", n.threshold);
        ensure!(n.dt > 0.0 && n.dt.is_finite(), "dt must be positive, got {}", n.dt);
        ensure!(n.horizon > 0.0 && n.horizon.is_finite(), "horizon must be positive, got {}", n.horizon);
        let p = &self.protocol;
        ensure!(!p.kinds.is_empty(), "protocol.kinds is empty");
        ensure!(!p.initial_states.is_empty(), "protocol.initial_states is empty");
        for (name, v) in [("tau", p.tau), ("eps1", p.eps1)] {
            if let Some(v) = v {
                ensure!(v > 0.0 && v.is_finite(), "protocol.{name} must be positive, got {v}");
            }
        }
        if p.tau_grid.is_some() && p.tau_range.is_some() {
            bail!("give either protocol.tau_grid or protocol.tau_range, not both");
        }
        if let Some(r) = p.tau_range {
            ensure!(
                r.start > 0.0 && r.step > 0.0 && r.stop >= r.start,
                "tau_range needs 0 < start <= stop and step > 0"
            );
        }
        if let Some(g) = &p.tau_grid {
            ensure!(g.iter().all(|&t| t > 0.0 && t.is_finite()), "tau_grid entries must be positive");
        }
        let o = &self.oracle;
        ensure!(o.r_values.iter().all(|&r| r > 0.0 && r.is_finite()), "oracle.r_values must be positive");
        ensure!(o.ratio_sizes.iter().all(|&l| l >= 2), "oracle.ratio_sizes must be >= 2");
        ensure!(o.samples >= 1 && o.t_max > 0.0, "oracle needs samples >= 1 and t_max > 0");
        Ok(())
    }

    pub fn chain_params(&self) -> Result<ChainParams> {
        let c = &self.chain;
        Ok(ChainParams::new(c.l, c.j, c.eps, c.j_r, c.j_l)?)
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            threshold: self.numerics.threshold,
            horizon: self.numerics.horizon,
            dt: self.numerics.dt,
            mode: self.numerics.trel_mode,
        }
    }

    /// `(tau, eps1)` for a single two-step run.
    pub fn preparation(&self) -> Result<(f64, f64)> {
        match (self.protocol.tau, self.protocol.eps1) {
            (Some(tau), Some(eps1)) => Ok((tau, eps1)),
            (Some(tau), None) => Ok((tau, FRAC_PI_2 / tau)),
            (None, Some(eps1)) => Ok((FRAC_PI_2 / eps1, eps1)),
            (None, None) => bail!("two-step protocol needs protocol.tau or protocol.eps1"),
        }
    }

    pub fn tau_grid(&self) -> Result<Vec<f64>> {
        if let Some(g) = &self.protocol.tau_grid {
            ensure!(!g.is_empty(), "protocol.tau_grid is empty");
            return Ok(g.clone());
        }
        if let Some(r) = self.protocol.tau_range {
            let n = ((r.stop - r.start) / r.step + 1e-9).floor() as usize;
            // multiply rather than accumulate so grid points are reproducible
            return Ok((0..=n).map(|k| r.start + k as f64 * r.step).collect());
        }
        if let Some(t) = self.protocol.tau {
            return Ok(vec![t]);
        }
        bail!("sweep needs protocol.tau_grid, protocol.tau_range or protocol.tau")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[chain]\nl = 4\nj_r = 1.0\nj_l = 0.5\n";

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.chain.j, 1.0);
        assert_eq!(c.numerics.threshold, 0.01);
        assert_eq!(c.numerics.horizon, 200.0);
        assert_eq!(c.protocol.kinds, vec![ProtocolKind::Direct]);
        assert_eq!(c.output.format, Format::Csv);
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn rejects_bad_values() {
        for extra in [
            "[numerics]\nthreshold = 1.5\n",
            "[numerics]\ndt = 0.0\n",
            "[protocol]\ntau = -1.0\n",
            "[protocol]\ntau_grid = [1.0]\ntau_range = { start = 1.0, stop = 2.0, step = 0.5 }\n",
            "[chain_typo]\nx = 1\n",
        ] {
            assert!(RunConfig::from_toml(&format!("{MINIMAL}{extra}")).is_err(), "{extra}");
        }
        assert!(RunConfig::from_toml("[chain]\nl = 1\nj_r = 1.0\nj_l = 1.0\n").is_err());
    }

    #[test]
    fn tau_range_expands() {
        let c = RunConfig::from_toml(&format!(
            "{MINIMAL}[protocol]\ntau_range = {{ start = 0.5, stop = 2.0, step = 0.5 }}\n"
        ))
        .unwrap();
        assert_eq!(c.tau_grid().unwrap(), vec![0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn preparation_defaults_to_full_swap() {
        let c = RunConfig::from_toml(&format!("{MINIMAL}[protocol]\ntau = 2.0\n")).unwrap();
        let (tau, eps1) = c.preparation().unwrap();
        assert_eq!(tau, 2.0);
        assert!((eps1 - FRAC_PI_2 / 2.0).abs() < 1e-15);
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert!(c.preparation().is_err());
    }
}
