//! Run configuration: one TOML document, validated strictly before any
//! computation. Optional keys default per model preset; [`RunConfig::resolve`]
//! fills them in so the resolved form reproduces a run on its own.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gateopt::krotov::{flattop_shape, OptimizationProblem, StopCriteria};
use gateopt::lindblad::{ControlPulse, Integrator, TimeGrid};
use gateopt::models::{
    build_rydberg, build_transmon, cphase_target, guess_pulse, sqrt_iswap_target, BuiltModel,
    GuessShape, Preset, RydbergParams, TransmonParams,
};
use gateopt::states::{
    build_set, SetKind, StateSet, BASIS_EMPHASIS_WEIGHTS, PHASE_EMPHASIS_WEIGHTS,
};
use gateopt::units::mhz;
use gateopt::Operator;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] gateopt::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub stateset: StateSetSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub guess: GuessSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gate {
    Cphase,
    SqrtIswap,
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub preset: Preset,
    /// Target gate on the logical block; defaults to the preset's gate.
    pub gate: Option<Gate>,
    /// Phase of the controlled-phase gate (rad).
    pub cphase_chi: Option<f64>,
    /// Overrides of the Rydberg parameters (only with the Rydberg preset).
    pub rydberg: Option<RydbergParams>,
    /// Overrides of the transmon parameters (only with the transmon preset).
    pub transmon: Option<TransmonParams>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Defaults to the model's gate duration.
    pub t_final_ns: Option<f64>,
    pub nt: Option<usize>,
    pub substeps: Option<usize>,
}

/// Named weight choices or explicit numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weights {
    Named(WeightPreset),
    Explicit(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightPreset {
    /// Equal weights.
    Equal,
    /// `w2/w3 = 10` for the two-state set, `w1/w2 = w1/w3 = 20` for three states.
    Emphasis,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSetSection {
    pub kind: Option<SetKind>,
    pub weights: Option<Weights>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub lambda_a: Option<f64>,
    /// Ramp of the update shape at both ends.
    pub shape_ramp_ns: Option<f64>,
    pub max_iterations: Option<usize>,
    pub j_t_threshold: Option<f64>,
    pub min_decrease: Option<f64>,
    /// Gate error every this many iterations; 0 switches it off.
    pub fidelity_every: Option<usize>,
    pub integrator: Option<Integrator>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuessSection {
    pub shape: Option<GuessKind>,
    pub amplitude_mhz: Option<f64>,
    /// Standard deviation of the Gaussian guess.
    pub width_ns: Option<f64>,
    /// Ramp length of the flattop guess.
    pub ramp_ns: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuessKind {
    Gaussian,
    Flattop,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    /// Also write population trajectories when evaluating.
    pub populations: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            populations: true,
        }
    }
}

fn preset_defaults(preset: Preset) -> RunConfig {
    match preset {
        Preset::RydbergTable1 => {
            let p = RydbergParams::default();
            RunConfig {
                seed: 0,
                model: ModelSection {
                    preset,
                    gate: Some(Gate::Cphase),
                    cphase_chi: Some(std::f64::consts::PI),
                    rydberg: Some(p),
                    transmon: None,
                },
                grid: GridSection {
                    t_final_ns: Some(p.t_final_ns),
                    nt: Some(3000),
                    substeps: Some(1),
                },
                stateset: StateSetSection {
                    kind: Some(SetKind::Diagonal2),
                    weights: Some(Weights::Named(WeightPreset::Emphasis)),
                },
                optimizer: OptimizerSection {
                    lambda_a: Some(0.05),
                    shape_ramp_ns: Some(5.0),
                    max_iterations: Some(300),
                    j_t_threshold: Some(0.0),
                    min_decrease: Some(0.0),
                    fidelity_every: Some(10),
                    integrator: Some(Integrator::LawsonRk4),
                },
                guess: GuessSection {
                    shape: Some(GuessKind::Gaussian),
                    amplitude_mhz: Some(300.0),
                    width_ns: Some(p.t_final_ns / 8.0),
                    ramp_ns: Some(5.0),
                },
                output: OutputSection::default(),
            }
        }
        Preset::TransmonTable2 => {
            let p = TransmonParams::default();
            RunConfig {
                seed: 0,
                model: ModelSection {
                    preset,
                    gate: Some(Gate::SqrtIswap),
                    cphase_chi: Some(std::f64::consts::PI),
                    rydberg: None,
                    transmon: Some(p),
                },
                grid: GridSection {
                    t_final_ns: Some(p.t_final_ns),
                    nt: Some(4000),
                    substeps: Some(1),
                },
                stateset: StateSetSection {
                    kind: Some(SetKind::Minimal3),
                    weights: Some(Weights::Named(WeightPreset::Emphasis)),
                },
                optimizer: OptimizerSection {
                    lambda_a: Some(0.1),
                    shape_ramp_ns: Some(20.0),
                    max_iterations: Some(1000),
                    j_t_threshold: Some(0.0),
                    min_decrease: Some(0.0),
                    fidelity_every: Some(25),
                    integrator: Some(Integrator::LawsonRk4),
                },
                guess: GuessSection {
                    shape: Some(GuessKind::Flattop),
                    amplitude_mhz: Some(35.0),
                    width_ns: Some(p.t_final_ns / 8.0),
                    ramp_ns: Some(20.0),
                },
                output: OutputSection::default(),
            }
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path)?.resolve()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Fills every optional key from the preset and validates the result.
    pub fn resolve(self) -> Result<Self, ConfigError> {
        let d = preset_defaults(self.model.preset);
        let pick = |a: Option<f64>, b: Option<f64>| a.or(b);
        match self.model.preset {
            Preset::RydbergTable1 if self.model.transmon.is_some() => {
                return Err(ConfigError::Invalid(
                    "model.transmon given with a Rydberg preset".into(),
                ))
            }
            Preset::TransmonTable2 if self.model.rydberg.is_some() => {
                return Err(ConfigError::Invalid(
                    "model.rydberg given with a transmon preset".into(),
                ))
            }
            _ => {}
        }
        let rydberg = self.model.rydberg.or(d.model.rydberg);
        let transmon = self.model.transmon.or(d.model.transmon);
        let model_t = rydberg
            .map(|p| p.t_final_ns)
            .or(transmon.map(|p| p.t_final_ns))
            .expect("preset has parameters");
        let t_final = self.grid.t_final_ns.unwrap_or(model_t);
        let kind = self.stateset.kind.or(d.stateset.kind);
        let resolved = RunConfig {
            seed: self.seed,
            model: ModelSection {
                preset: self.model.preset,
                gate: self.model.gate.or(d.model.gate),
                cphase_chi: pick(self.model.cphase_chi, d.model.cphase_chi),
                rydberg: rydberg.map(|p| RydbergParams {
                    t_final_ns: t_final,
                    ..p
                }),
                transmon: transmon.map(|p| TransmonParams {
                    t_final_ns: t_final,
                    ..p
                }),
            },
            grid: GridSection {
                t_final_ns: Some(t_final),
                nt: self.grid.nt.or(d.grid.nt),
                substeps: self.grid.substeps.or(d.grid.substeps),
            },
            stateset: StateSetSection {
                kind,
                weights: self.stateset.weights.or(d.stateset.weights),
            },
            optimizer: OptimizerSection {
                lambda_a: pick(self.optimizer.lambda_a, d.optimizer.lambda_a),
                shape_ramp_ns: pick(self.optimizer.shape_ramp_ns, d.optimizer.shape_ramp_ns),
                max_iterations: self.optimizer.max_iterations.or(d.optimizer.max_iterations),
                j_t_threshold: pick(self.optimizer.j_t_threshold, d.optimizer.j_t_threshold),
                min_decrease: pick(self.optimizer.min_decrease, d.optimizer.min_decrease),
                fidelity_every: self.optimizer.fidelity_every.or(d.optimizer.fidelity_every),
                integrator: self.optimizer.integrator.or(d.optimizer.integrator),
            },
            guess: GuessSection {
                shape: self.guess.shape.or(d.guess.shape),
                amplitude_mhz: pick(self.guess.amplitude_mhz, d.guess.amplitude_mhz),
                width_ns: pick(self.guess.width_ns, d.guess.width_ns),
                ramp_ns: pick(self.guess.ramp_ns, d.guess.ramp_ns),
            },
            output: self.output,
        };
        resolved.validate()?;
        Ok(resolved)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let t = self.t_final();
        if !(t > 0.0 && t.is_finite()) {
            return bad(format!("grid.t_final_ns must be positive, got {t}"));
        }
        if self.grid.nt == Some(0) || self.grid.substeps == Some(0) {
            return bad("grid.nt and grid.substeps must be at least 1".into());
        }
        let lambda = self.optimizer.lambda_a.unwrap_or(0.0);
        if !(lambda > 0.0 && lambda.is_finite()) {
            return bad(format!("optimizer.lambda_a must be positive, got {lambda}"));
        }
        for (name, v) in [
            ("optimizer.shape_ramp_ns", self.optimizer.shape_ramp_ns),
            ("guess.amplitude_mhz", self.guess.amplitude_mhz),
            ("guess.ramp_ns", self.guess.ramp_ns),
        ] {
            if !v.is_some_and(|x| x >= 0.0 && x.is_finite()) {
                return bad(format!("{name} must be >= 0"));
            }
        }
        if !self.guess.width_ns.is_some_and(|w| w > 0.0 && w.is_finite()) {
            return bad("guess.width_ns must be positive".into());
        }
        let kind = self.stateset.kind.expect("resolved");
        let fixed = match kind {
            SetKind::Diagonal2 => Some(2),
            SetKind::Minimal3 => Some(3),
            _ => None,
        };
        if let Some(Weights::Explicit(w)) = &self.stateset.weights {
            match fixed {
                Some(n) if n == w.len() => {}
                Some(n) => return bad(format!("{kind} takes {n} weights, got {}", w.len())),
                None => return bad(format!("{kind} does not take weights")),
            }
        }
        if self.model.gate == Some(Gate::Cphase)
            && !self.model.cphase_chi.is_some_and(f64::is_finite)
        {
            return bad("model.cphase_chi must be finite".into());
        }
        Ok(())
    }

    pub fn t_final(&self) -> f64 {
        self.grid.t_final_ns.unwrap_or(f64::NAN)
    }

    pub fn time_grid(&self) -> Result<TimeGrid, ConfigError> {
        Ok(TimeGrid::new(
            self.t_final(),
            self.grid.nt.expect("resolved"),
            self.grid.substeps.expect("resolved"),
        )?)
    }

    pub fn build_model(&self) -> Result<BuiltModel, ConfigError> {
        Ok(match self.model.preset {
            Preset::RydbergTable1 => build_rydberg(&self.model.rydberg.expect("resolved"))?,
            Preset::TransmonTable2 => build_transmon(&self.model.transmon.expect("resolved"))?,
        })
    }

    pub fn target(&self) -> Operator {
        match self.model.gate.expect("resolved") {
            Gate::Cphase => cphase_target(self.model.cphase_chi.expect("resolved")),
            Gate::SqrtIswap => sqrt_iswap_target(),
            Gate::Identity => Operator::identity(4),
        }
    }

    pub fn state_set(&self, built: &BuiltModel) -> Result<StateSet, ConfigError> {
        let kind = self.stateset.kind.expect("resolved");
        let weights: Option<Vec<f64>> = match &self.stateset.weights {
            None | Some(Weights::Named(WeightPreset::Equal)) => None,
            Some(Weights::Named(WeightPreset::Emphasis)) => match kind {
                SetKind::Diagonal2 => Some(PHASE_EMPHASIS_WEIGHTS.to_vec()),
                SetKind::Minimal3 => Some(BASIS_EMPHASIS_WEIGHTS.to_vec()),
                _ => None,
            },
            Some(Weights::Explicit(w)) => Some(w.clone()),
        };
        Ok(build_set(kind, &built.embedding, weights.as_deref())?)
    }

    pub fn guess_pulse(&self, grid: TimeGrid, n_controls: usize) -> Result<ControlPulse, ConfigError> {
        let shape = match self.guess.shape.expect("resolved") {
            GuessKind::Gaussian => GuessShape::Gaussian {
                width_ns: self.guess.width_ns.expect("resolved"),
            },
            GuessKind::Flattop => GuessShape::Flattop {
                ramp_ns: self.guess.ramp_ns.expect("resolved"),
            },
        };
        let amplitude = mhz(self.guess.amplitude_mhz.expect("resolved"));
        Ok(guess_pulse(grid, n_controls, shape, amplitude)?)
    }

    /// The optimization problem with `guess` as the starting pulse.
    pub fn problem(&self, built: BuiltModel, guess: ControlPulse) -> Result<OptimizationProblem, ConfigError> {
        let o = &self.optimizer;
        let set = self.state_set(&built)?;
        Ok(OptimizationProblem {
            shape: flattop_shape(guess.grid(), o.shape_ramp_ns.expect("resolved")),
            model: built.model,
            set,
            target: self.target(),
            guess,
            lambda_a: o.lambda_a.expect("resolved"),
            stop: StopCriteria {
                max_iterations: o.max_iterations.expect("resolved"),
                j_t_threshold: o.j_t_threshold.expect("resolved"),
                min_decrease: o.min_decrease.expect("resolved"),
            },
            fidelity_every: o.fidelity_every.expect("resolved"),
            integrator: o.integrator.expect("resolved"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::from_toml(text, Path::new("test.toml"))?.resolve()
    }

    #[test]
    fn minimal_config_takes_preset_defaults() {
        let c = parse("[model]\npreset = \"rydberg-table1\"\n").unwrap();
        assert_eq!(c.grid.nt, Some(3000));
        assert_eq!(c.stateset.kind, Some(SetKind::Diagonal2));
        assert_eq!(c.model.gate, Some(Gate::Cphase));
        let t = parse("[model]\npreset = \"transmon-table2\"\n").unwrap();
        assert_eq!(t.t_final(), 400.0);
        assert_eq!(t.stateset.kind, Some(SetKind::Minimal3));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse("[model]\npreset = \"rydberg-table1\"\ncolour = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }));
        let err = parse("[model]\npreset = \"rydberg-table1\"\n[model.rydberg]\ntau = 3\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }));
        assert!(parse("[model]\npreset = \"nope\"\n").is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = parse(
            "seed = 4\n[model]\npreset = \"transmon-table2\"\n[model.transmon]\ndissipation_scale = 0.1\n[stateset]\nkind = \"minimal-3\"\nweights = [20.0, 1.0, 1.0]\n",
        )
        .unwrap();
        assert_eq!(c.model.transmon.unwrap().dissipation_scale, 0.1);
        let again = parse(&c.to_toml()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn inconsistent_values_are_rejected() {
        let base = "[model]\npreset = \"rydberg-table1\"\n";
        for extra in [
            "[optimizer]\nlambda_a = 0.0\n",
            "[grid]\nnt = 0\n",
            "[stateset]\nkind = \"full-d2\"\nweights = [1.0]\n",
            "[stateset]\nkind = \"diagonal-2\"\nweights = [1.0, 2.0, 3.0]\n",
            "[model.transmon]\nlevels = 3\n",
        ] {
            assert!(parse(&format!("{base}{extra}")).is_err(), "{extra}");
        }
    }

    #[test]
    fn grid_duration_propagates_into_the_model() {
        let c = parse("[model]\npreset = \"rydberg-table1\"\n[grid]\nt_final_ns = 60.0\n").unwrap();
        assert_eq!(c.model.rydberg.unwrap().t_final_ns, 60.0);
    }
}
