//! Experiment definitions as TOML files.
//!
//! The schema is strict: unknown keys anywhere are fatal, because a
//! misspelled hyperparameter silently falling back to a default would
//! change the experiment while leaving the config looking right.
//!
//! ```toml
//! [experiment]
//! env = "simple-maze"           # simple-maze | mountain-car | bairds | riverswim
//! algorithm = "esarsa"          # esarsa | sarsa-lambda | offpolicy-td | offpolicy-td-momentum
//! step_budget = 30000
//! cutoff = 500                  # optional: truncate episodes after this many steps
//! cutoff_mode = "discard"       # optional: discard | bootstrap (default discard)
//!
//! [experiment.env_params]      # optional environment overrides
//! noise_scale = 0.05
//!
//! [experiment.hypers]
//! alpha = 0.1
//! epsilon = 0.2
//! tiles = 4
//! tilings = 8
//!
//! [eval]                       # optional: offline greedy evaluation
//! interval = 1000
//! rollouts = 10
//!
//! [plan]                       # optional; flags override these
//! runs = 30
//! base_seed = 1234
//! pairing = "repeated-measures" # repeated-measures | independent
//! parallelism = 4
//!
//! [sweep]                      # optional; required by the sweep command
//! runs_per_config = 10
//!
//! [[sweep.axes]]               # several axes form a cross product
//! key = "alpha"
//! base = 2.0                   # powers base^lo .. base^hi ...
//! lo = -6
//! hi = -1
//! # ... or an explicit list: values = [0.0625, 0.125]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::agents::{Algorithm, CutoffMode, HyperConfig};
use crate::envs::EnvParams;
use crate::error::{Error, Result};
use crate::harness::{EvalMode, ExperimentSpec, PairingMode};
use crate::hyperstudy::power_grid;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: ExperimentSection,
    pub eval: Option<EvalSection>,
    #[serde(default)]
    pub plan: PlanSection,
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub env: String,
    pub algorithm: String,
    pub step_budget: usize,
    pub cutoff: Option<usize>,
    pub cutoff_mode: Option<String>,
    #[serde(default)]
    pub env_params: BTreeMap<String, f64>,
    #[serde(default)]
    pub hypers: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub interval: usize,
    pub rollouts: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub runs: Option<usize>,
    pub base_seed: Option<u64>,
    pub pairing: Option<String>,
    pub parallelism: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub runs_per_config: Option<usize>,
    pub axes: Vec<SweepAxis>,
}

/// One swept hyperparameter: either an explicit value list or a power
/// grid, never both.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub key: String,
    pub values: Option<Vec<f64>>,
    pub base: Option<f64>,
    pub lo: Option<i32>,
    pub hi: Option<i32>,
}

impl SweepAxis {
    pub fn resolve_values(&self) -> Result<Vec<f64>> {
        match (&self.values, self.base, self.lo, self.hi) {
            (Some(values), None, None, None) => {
                if values.is_empty() {
                    return Err(Error::Config(format!(
                        "sweep axis {} has an empty value list",
                        self.key
                    )));
                }
                Ok(values.clone())
            }
            (None, Some(base), Some(lo), Some(hi)) => power_grid(base, lo, hi),
            _ => Err(Error::Config(format!(
                "sweep axis {} needs either `values` or all of `base`, `lo`, `hi`",
                self.key
            ))),
        }
    }
}

pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

impl ConfigFile {
    /// Build and validate the experiment this config describes.
    pub fn experiment_spec(&self) -> Result<ExperimentSpec> {
        let spec = self.spec_skeleton()?;
        spec.validate()?;
        Ok(spec)
    }

    /// Same experiment but with the hyperparameters replaced, validated
    /// against the substituted set. Sweeps go through here so the base
    /// hypers may omit the swept keys.
    pub fn experiment_spec_with(&self, config: HyperConfig) -> Result<ExperimentSpec> {
        let mut spec = self.spec_skeleton()?;
        spec.config = config;
        spec.validate()?;
        Ok(spec)
    }

    fn spec_skeleton(&self) -> Result<ExperimentSpec> {
        let exp = &self.experiment;
        let algorithm: Algorithm = exp.algorithm.parse()?;
        let cutoff_mode = match &exp.cutoff_mode {
            Some(s) => s.parse()?,
            None => CutoffMode::Discard,
        };
        let eval = match &self.eval {
            Some(section) => EvalMode::Offline {
                interval: section.interval,
                rollouts: section.rollouts,
            },
            None => EvalMode::Online,
        };
        Ok(ExperimentSpec {
            env: exp.env.clone(),
            env_params: EnvParams::from_map(exp.env_params.clone()),
            algorithm,
            config: HyperConfig::from_map(exp.hypers.clone()),
            step_budget: exp.step_budget,
            cutoff: exp.cutoff,
            cutoff_mode,
            eval,
        })
    }

    pub fn pairing(&self) -> Result<PairingMode> {
        match &self.plan.pairing {
            Some(s) => s.parse(),
            None => Ok(PairingMode::RepeatedMeasures),
        }
    }

    /// Hyperparameter configurations for the sweep section: the cross
    /// product of all axes, applied over the base hypers. Axis order is
    /// the file order; earlier axes vary slowest.
    pub fn sweep_configs(&self) -> Result<Vec<(HyperConfig, String)>> {
        let sweep = self.sweep.as_ref().ok_or_else(|| {
            Error::Config("this command needs a [sweep] section in the config".into())
        })?;
        if sweep.axes.is_empty() {
            return Err(Error::Config("[sweep] needs at least one axis".into()));
        }
        let mut axis_values = Vec::with_capacity(sweep.axes.len());
        for axis in &sweep.axes {
            axis_values.push((axis.key.clone(), axis.resolve_values()?));
        }
        let base = HyperConfig::from_map(self.experiment.hypers.clone());
        let mut configs = vec![base];
        for (key, values) in &axis_values {
            let mut grown = Vec::with_capacity(configs.len() * values.len());
            for config in &configs {
                for &v in values {
                    grown.push(config.clone().set(key, v));
                }
            }
            configs = grown;
        }
        let swept_keys: Vec<&str> = axis_values.iter().map(|(k, _)| k.as_str()).collect();
        Ok(configs
            .into_iter()
            .map(|c| {
                let shown: Vec<String> = swept_keys
                    .iter()
                    .map(|k| format!("{k}={}", c.get(k).expect("set above")))
                    .collect();
                (c, shown.join(","))
            })
            .collect())
    }

    pub fn runs_per_config(&self) -> usize {
        self.sweep
            .as_ref()
            .and_then(|s| s.runs_per_config)
            .unwrap_or(10)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAZE_CONFIG: &str = r#"
[experiment]
env = "simple-maze"
algorithm = "esarsa"
step_budget = 30000

[experiment.hypers]
alpha = 0.1
epsilon = 0.2
tiles = 4
tilings = 8
gamma_agent = 0.99

[plan]
runs = 30
base_seed = 1234
pairing = "repeated-measures"
"#;

    fn parse(text: &str) -> Result<ConfigFile> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    #[test]
    fn the_documented_example_parses_and_validates() {
        let config = parse(MAZE_CONFIG).unwrap();
        let spec = config.experiment_spec().unwrap();
        assert_eq!(spec.env, "simple-maze");
        assert_eq!(spec.step_budget, 30000);
        assert_eq!(spec.eval, EvalMode::Online);
        assert_eq!(config.plan.runs, Some(30));
        assert_eq!(config.pairing().unwrap(), PairingMode::RepeatedMeasures);
    }

    #[test]
    fn unknown_keys_are_fatal() {
        let text = MAZE_CONFIG.replace("[plan]", "[plan]\ntypo_key = 1");
        assert!(parse(&text).is_err());
        let text = MAZE_CONFIG.replace("step_budget", "step_budge");
        assert!(parse(&text).is_err());
    }

    #[test]
    fn bad_hypers_fail_validation_not_parsing() {
        let text = MAZE_CONFIG.replace("alpha = 0.1", "alpha = -0.1");
        let config = parse(&text).unwrap();
        assert!(config.experiment_spec().is_err());
    }

    #[test]
    fn eval_section_switches_the_mode() {
        let text = format!("{MAZE_CONFIG}\n[eval]\ninterval = 1000\nrollouts = 5\n");
        let spec = parse(&text).unwrap().experiment_spec().unwrap();
        assert_eq!(
            spec.eval,
            EvalMode::Offline {
                interval: 1000,
                rollouts: 5
            }
        );
    }

    #[test]
    fn sweep_axes_cross_product_in_file_order() {
        let text = format!(
            "{MAZE_CONFIG}
[sweep]
runs_per_config = 5

[[sweep.axes]]
key = \"alpha\"
base = 2.0
lo = -2
hi = -1

[[sweep.axes]]
key = \"tilings\"
values = [4.0, 8.0]
"
        );
        let config = parse(&text).unwrap();
        assert_eq!(config.runs_per_config(), 5);
        let configs = config.sweep_configs().unwrap();
        let labels: Vec<&str> = configs.iter().map(|(_, l)| l.as_str()).collect();
        assert_eq!(
            labels,
            vec![
                "alpha=0.25,tilings=4",
                "alpha=0.25,tilings=8",
                "alpha=0.5,tilings=4",
                "alpha=0.5,tilings=8",
            ]
        );
        // Unswept hypers carry through from the experiment section.
        assert_eq!(configs[0].0.get("epsilon"), Some(0.2));
    }

    #[test]
    fn sweep_axis_forms_are_mutually_exclusive() {
        let both = format!(
            "{MAZE_CONFIG}
[sweep]
[[sweep.axes]]
key = \"alpha\"
values = [0.1]
base = 2.0
lo = -1
hi = 0
"
        );
        assert!(parse(&both).unwrap().sweep_configs().is_err());

        let neither = format!("{MAZE_CONFIG}\n[sweep]\n[[sweep.axes]]\nkey = \"alpha\"\n");
        assert!(parse(&neither).unwrap().sweep_configs().is_err());

        let missing = parse(MAZE_CONFIG).unwrap();
        assert!(missing.sweep_configs().is_err());
        assert_eq!(missing.runs_per_config(), 10);
    }

    #[test]
    fn loader_reports_the_offending_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, "not toml [").unwrap();
        let err = load_config(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("exp.toml"));
        assert!(load_config(&dir.path().join("absent.toml")).is_err());
    }
}
