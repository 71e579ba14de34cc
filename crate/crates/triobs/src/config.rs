//! TOML configuration schema, presets, and scenario construction.
//!
//! A config document has sections `[system]`, `[observer]`, `[scenario]`,
//! `[noise]`, `[sweep]`; unknown keys in any section are rejected, and
//! parse -> serialize -> parse is the identity on the content. Presets
//! return ready-made documents for the benchmark experiments, so a table
//! reproduction is one command.

use crate::numerics::{saturate, SignRule};
use crate::observers::{
    default_highgain_k, zero_phi_hat, BlockGains, ObserverConfig, ObserverKind, WHatMode,
};
use crate::plant::{g3, h4, phi3, PhiFn, TriangularSystem};
use crate::sim::{
    Disturbance, InputSignal, NoiseConfig, ObserverSetup, PlantKind, Scenario,
};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config serialize error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("config io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown preset '{0}' (available: {1})")]
    UnknownPreset(String, String),
}

pub const PRESET_NAMES: [&str; 5] =
    ["example-plant", "table3", "table4", "cascade-hg", "cascade-hom"];

/// Root document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub system: SystemSec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observer: Option<ObserverSec>,
    pub scenario: ScenarioSec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    /// Benchmark oscillator observed through its degree-4 immersion.
    Example,
    /// Pure chain of integrators.
    Chain,
    /// Chain with linear per-line feedback of strength `coefficient`.
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSec {
    pub kind: SystemKind,
    /// State dimension (chain/linear; the example system is fixed at 4).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<f64>,
    /// Initial plant state: x for the example system...
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<[f64; 3]>,
    /// ...or z for explicit triangular systems.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z0: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObsKind {
    HighGain,
    Homogeneous,
    CascadeHighGain,
    CascadeHomogeneous,
}

/// How per-line nonlinearity estimates are built from the system's known
/// lines.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiMode {
    /// All estimates zero.
    #[default]
    None,
    /// Known lines evaluated at the estimates.
    Known,
    /// Known lines saturated at `sat_bound` (for the example system the
    /// saturation applies to the input-independent factor of line 3).
    KnownSaturated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSec {
    pub dim: usize,
    pub gain: f64,
    pub k: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSec {
    pub kind: ObsKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    /// Per-line coefficients; default is the binomial row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<f64>>,
    /// Homogeneity degree for the homogeneous kinds (default -1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d0: Option<f64>,
    #[serde(default)]
    pub sign_rule: SignRule,
    #[serde(default)]
    pub phi: PhiMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sat_bound: Option<f64>,
    /// Observer initialization through the immersion (example system).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xhat0: Option<[f64; 3]>,
    /// Direct flat initialization (takes precedence).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zhat0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<BlockSec>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InputSec {
    Zero,
    Constant { value: f64 },
    Sinusoid { amplitude: f64, frequency: f64 },
    Series { values: Vec<f64> },
}

impl Default for InputSec {
    fn default() -> Self {
        InputSec::Zero
    }
}

/// Plant disturbance on one line; constant when `frequency` is absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSec {
    pub line: usize,
    pub amplitude: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
}

fn default_dt() -> f64 {
    1e-5
}
fn default_stride() -> usize {
    100
}
fn default_tail() -> f64 {
    0.1
}
fn default_threshold() -> f64 {
    1e-2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSec {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(alias = "T")]
    pub t_final: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub input: InputSec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<DisturbanceSec>,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
    #[serde(default = "default_threshold")]
    pub conv_threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSec {
    pub gains: Vec<f64>,
}

pub fn parse_config(text: &str) -> Result<ConfigDoc, ConfigError> {
    Ok(toml::from_str(text)?)
}

pub fn to_toml(doc: &ConfigDoc) -> Result<String, ConfigError> {
    Ok(toml::to_string(doc)?)
}

pub fn load_config(path: &Path) -> Result<ConfigDoc, ConfigError> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Saturation level for the example system's known nonlinearity factor.
///
/// The factor's measured peak along the benchmark trajectory (amplitude-5
/// input, 10 s horizon) is 9.06, reached where |z1| = 1.43 and |z3| = 1.96.
/// The clamp level is set from an operating box that inflates those extremes
/// by 1.75x (|z1| <= 2.5, |z3| <= 3.4, factor max ~= 24.9): the box must
/// strictly contain every trajectory the observer should track, not merely
/// the nominal one, so the clamp only acts on the large excursions of the
/// estimates during peaking.
pub const EXAMPLE_SAT_BOUND: f64 = 25.0;

fn scenario_sec_default(t_final: f64) -> ScenarioSec {
    ScenarioSec {
        dt: default_dt(),
        t_final,
        seed: 0,
        input: InputSec::Sinusoid { amplitude: 5.0, frequency: 10.0 },
        disturbance: None,
        record_stride: default_stride(),
        tail_fraction: default_tail(),
        conv_threshold: default_threshold(),
    }
}

fn example_system_sec() -> SystemSec {
    SystemSec {
        kind: SystemKind::Example,
        dim: None,
        coefficient: None,
        x0: Some([1.0, 1.0, 0.0]),
        z0: None,
    }
}

fn preset_noise() -> NoiseConfig {
    NoiseConfig { sigma: 0.03, filter_a: 50.0, seed: 1 }
}

/// Built-in experiment configurations.
pub fn preset(name: &str) -> Result<ConfigDoc, ConfigError> {
    let doc = match name {
        "example-plant" => ConfigDoc {
            system: example_system_sec(),
            observer: None,
            scenario: scenario_sec_default(10.0),
            noise: None,
            sweep: None,
        },
        // Noise-free high-gain benchmark; sweep over the reference gains.
        "table3" => ConfigDoc {
            system: example_system_sec(),
            observer: Some(ObserverSec {
                kind: ObsKind::HighGain,
                gain: Some(5.0),
                k: Some(vec![14.0, 99.0, 408.0, 833.0]),
                d0: None,
                sign_rule: SignRule::ZeroAtZero,
                phi: PhiMode::KnownSaturated,
                sat_bound: Some(EXAMPLE_SAT_BOUND),
                xhat0: Some([0.1, 0.1, 0.0]),
                zhat0: None,
                blocks: None,
            }),
            scenario: scenario_sec_default(10.0),
            noise: None,
            sweep: Some(SweepSec { gains: vec![2.0, 5.0, 8.0, 10.0, 15.0] }),
        },
        // Noisy homogeneous benchmark at degree -1.
        "table4" => ConfigDoc {
            system: example_system_sec(),
            observer: Some(ObserverSec {
                kind: ObsKind::Homogeneous,
                gain: Some(3.0),
                k: Some(vec![5.0, 8.77, 4.44, 1.1]),
                d0: Some(-1.0),
                sign_rule: SignRule::ZeroAtZero,
                phi: PhiMode::KnownSaturated,
                sat_bound: Some(EXAMPLE_SAT_BOUND),
                xhat0: Some([0.1, 0.1, 0.0]),
                zhat0: None,
                blocks: None,
            }),
            scenario: scenario_sec_default(10.0),
            noise: Some(preset_noise()),
            sweep: Some(SweepSec { gains: vec![2.5, 3.0, 4.0, 5.0, 6.0] }),
        },
        // Cascaded high-gain counterpart (same block shape as the
        // homogeneous cascade, binomial coefficients).
        "cascade-hg" => ConfigDoc {
            system: example_system_sec(),
            observer: Some(ObserverSec {
                kind: ObsKind::CascadeHighGain,
                gain: None,
                k: None,
                d0: None,
                sign_rule: SignRule::ZeroAtZero,
                phi: PhiMode::KnownSaturated,
                sat_bound: Some(EXAMPLE_SAT_BOUND),
                xhat0: Some([0.1, 0.1, 0.0]),
                zhat0: None,
                blocks: Some(vec![
                    BlockSec { dim: 3, gain: 5.0, k: vec![3.0, 3.0, 1.0] },
                    BlockSec { dim: 4, gain: 5.0, k: vec![4.0, 6.0, 4.0, 1.0] },
                ]),
            }),
            scenario: scenario_sec_default(10.0),
            noise: Some(preset_noise()),
            sweep: None,
        },
        // Reference two-block homogeneous cascade.
        "cascade-hom" => ConfigDoc {
            system: example_system_sec(),
            observer: Some(ObserverSec {
                kind: ObsKind::CascadeHomogeneous,
                gain: None,
                k: None,
                d0: Some(-1.0),
                sign_rule: SignRule::ZeroAtZero,
                phi: PhiMode::KnownSaturated,
                sat_bound: Some(EXAMPLE_SAT_BOUND),
                xhat0: Some([0.1, 0.1, 0.0]),
                zhat0: None,
                blocks: Some(vec![
                    BlockSec { dim: 3, gain: 2.5, k: vec![3.0, 2.6, 1.1] },
                    BlockSec { dim: 4, gain: 3.0, k: vec![5.0, 8.77, 4.44, 1.1] },
                ]),
            }),
            scenario: scenario_sec_default(10.0),
            noise: Some(preset_noise()),
            sweep: None,
        },
        other => {
            return Err(ConfigError::UnknownPreset(other.into(), PRESET_NAMES.join(", ")))
        }
    };
    Ok(doc)
}

/// System dimension implied by the `[system]` section.
fn system_dim(sys: &SystemSec) -> Result<usize, ConfigError> {
    match sys.kind {
        SystemKind::Example => Ok(4),
        SystemKind::Chain | SystemKind::Linear => sys
            .dim
            .ok_or_else(|| ConfigError::Invalid("system dim required for chain/linear".into())),
    }
}

fn build_plant(sys: &SystemSec) -> Result<(PlantKind, Option<Arc<TriangularSystem>>), ConfigError> {
    match sys.kind {
        SystemKind::Example => {
            let x0 = sys.x0.unwrap_or([1.0, 1.0, 0.0]);
            Ok((PlantKind::Example { x0 }, None))
        }
        SystemKind::Chain | SystemKind::Linear => {
            let m = system_dim(sys)?;
            let system = match sys.kind {
                SystemKind::Chain => TriangularSystem::chain(m),
                _ => {
                    let c = sys.coefficient.ok_or_else(|| {
                        ConfigError::Invalid("linear system needs a coefficient".into())
                    })?;
                    TriangularSystem::linear(m, c)
                }
            }
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            let system = Arc::new(system);
            let z0 = sys.z0.clone().unwrap_or_else(|| vec![0.0; m]);
            if z0.len() != m {
                return Err(ConfigError::Invalid(format!(
                    "z0 has {} entries for an {m}-line system",
                    z0.len()
                )));
            }
            Ok((PlantKind::Triangular { system: system.clone(), z0 }, Some(system)))
        }
    }
}

/// Nonlinearity estimates for the observer lines, resolved from the
/// system's known lines according to the mode.
fn build_phi_hat(
    sys: &SystemSec,
    system: Option<&Arc<TriangularSystem>>,
    m: usize,
    mode: PhiMode,
    sat_bound: Option<f64>,
) -> Result<Vec<PhiFn>, ConfigError> {
    if mode == PhiMode::None {
        return Ok(zero_phi_hat(m));
    }
    let need_bound = || {
        sat_bound.ok_or_else(|| {
            ConfigError::Invalid("phi = \"known-saturated\" needs sat_bound".into())
        })
    };
    match sys.kind {
        SystemKind::Example => {
            // Lines 1, 2 are zero; line 4 is unknown (estimated as 0);
            // line 3 is the known input-affine nonlinearity.
            let mut phi = zero_phi_hat(m);
            phi[2] = match mode {
                PhiMode::Known => Arc::new(|u, z: &[f64]| phi3(u, z[0], z[2])) as PhiFn,
                PhiMode::KnownSaturated => {
                    let bound = need_bound()?;
                    Arc::new(move |u, z: &[f64]| saturate(g3(z[0], z[2]), bound) * u) as PhiFn
                }
                PhiMode::None => unreachable!(),
            };
            Ok(phi)
        }
        _ => {
            let system = system.expect("explicit system present for chain/linear");
            let mut phi = zero_phi_hat(m);
            for (i, line) in system.phi.iter().enumerate() {
                if !line.known {
                    continue;
                }
                let f = line.f.clone();
                phi[i] = match mode {
                    PhiMode::Known => f,
                    PhiMode::KnownSaturated => {
                        let bound = need_bound()?;
                        Arc::new(move |u, z: &[f64]| saturate(f(u, z), bound)) as PhiFn
                    }
                    PhiMode::None => unreachable!(),
                };
            }
            Ok(phi)
        }
    }
}

/// Initial flat observer state: explicit `zhat0`, or `xhat0` mapped
/// through the immersion (per block for cascades), or zero.
fn build_zhat0(
    obs: &ObserverSec,
    sys: &SystemSec,
    cfg: &ObserverConfig,
) -> Result<Vec<f64>, ConfigError> {
    if let Some(z) = &obs.zhat0 {
        return Ok(z.clone());
    }
    if let Some(xhat) = obs.xhat0 {
        if sys.kind != SystemKind::Example {
            return Err(ConfigError::Invalid(
                "xhat0 initialization is defined for the example system only".into(),
            ));
        }
        let z = h4(xhat);
        return Ok(match &cfg.kind {
            ObserverKind::HighGain { .. } | ObserverKind::Homogeneous { .. } => z.to_vec(),
            ObserverKind::CascadeHighGain { blocks }
            | ObserverKind::CascadeHomogeneous { blocks, .. } => {
                let mut out = Vec::with_capacity(cfg.state_dim());
                for b in blocks {
                    out.extend_from_slice(&z[..b.dim]);
                }
                out
            }
        });
    }
    Ok(vec![0.0; cfg.state_dim()])
}

fn build_observer(
    doc: &ConfigDoc,
    m: usize,
    system: Option<&Arc<TriangularSystem>>,
) -> Result<Option<ObserverSetup>, ConfigError> {
    let Some(obs) = &doc.observer else {
        return Ok(None);
    };
    let k = obs.k.clone().unwrap_or_else(|| default_highgain_k(m));
    let gain = || {
        obs.gain
            .ok_or_else(|| ConfigError::Invalid("observer gain required".into()))
    };
    let blocks = || -> Result<Vec<BlockGains>, ConfigError> {
        obs.blocks
            .clone()
            .ok_or_else(|| ConfigError::Invalid("cascade observer needs [[observer.blocks]]".into()))
            .map(|bs| {
                bs.into_iter()
                    .map(|b| BlockGains { dim: b.dim, gain: b.gain, k: b.k })
                    .collect()
            })
    };
    let kind = match obs.kind {
        ObsKind::HighGain => ObserverKind::HighGain { gain: gain()?, k },
        ObsKind::Homogeneous => {
            ObserverKind::Homogeneous { gain: gain()?, k, d0: obs.d0.unwrap_or(-1.0) }
        }
        ObsKind::CascadeHighGain => ObserverKind::CascadeHighGain { blocks: blocks()? },
        ObsKind::CascadeHomogeneous => {
            ObserverKind::CascadeHomogeneous { blocks: blocks()?, d0: obs.d0.unwrap_or(-1.0) }
        }
    };
    let phi_hat = build_phi_hat(&doc.system, system, m, obs.phi, obs.sat_bound)?;
    let cfg = ObserverConfig::new(m, kind, obs.sign_rule, phi_hat, WHatMode::Zero)
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let zhat0 = build_zhat0(obs, &doc.system, &cfg)?;
    let label = format!("{:?}", obs.kind);
    Ok(Some(ObserverSetup { cfg, zhat0, label }))
}

/// Turn a parsed document into a runnable scenario.
pub fn build_scenario(doc: &ConfigDoc) -> Result<Scenario, ConfigError> {
    let (plant, system) = build_plant(&doc.system)?;
    let m = plant.dim();
    let observer = build_observer(doc, m, system.as_ref())?;
    let input = match &doc.scenario.input {
        InputSec::Zero => InputSignal::Zero,
        InputSec::Constant { value } => InputSignal::Constant(*value),
        InputSec::Sinusoid { amplitude, frequency } => {
            InputSignal::Sinusoid { amplitude: *amplitude, frequency: *frequency }
        }
        InputSec::Series { values } => InputSignal::Series(Arc::new(values.clone())),
    };
    let disturbance = match &doc.scenario.disturbance {
        None => Disturbance::None,
        Some(d) => match d.frequency {
            None => Disturbance::ConstantLine { line: d.line, value: d.amplitude },
            Some(f) => {
                Disturbance::SinusoidLine { line: d.line, amplitude: d.amplitude, frequency: f }
            }
        },
    };
    let sc = Scenario {
        plant,
        observers: observer.into_iter().collect(),
        input,
        disturbance,
        noise: doc.noise.clone(),
        dt: doc.scenario.dt,
        t_final: doc.scenario.t_final,
        seed: doc.scenario.seed,
        record_stride: doc.scenario.record_stride,
        tail_fraction: doc.scenario.tail_fraction,
        conv_threshold: doc.scenario.conv_threshold,
    };
    sc.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_build() {
        for name in PRESET_NAMES {
            let doc = preset(name).unwrap();
            let sc = build_scenario(&doc).unwrap();
            assert_eq!(sc.plant.dim(), 4, "preset {name}");
            if name == "example-plant" {
                assert!(sc.observers.is_empty());
            } else {
                assert_eq!(sc.observers.len(), 1);
            }
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn preset_roundtrip_identity() {
        for name in PRESET_NAMES {
            let doc = preset(name).unwrap();
            let text = to_toml(&doc).unwrap();
            let doc2 = parse_config(&text).unwrap();
            assert_eq!(doc, doc2, "round trip for {name}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"
[system]
kind = "example"
bogus = 1

[scenario]
t_final = 1.0
"#;
        assert!(parse_config(text).is_err());

        let text = r#"
[system]
kind = "example"

[scenario]
t_final = 1.0
mystery = "x"
"#;
        assert!(parse_config(text).is_err());
    }

    #[test]
    fn benchmark_initialization_through_immersion() {
        let doc = preset("table3").unwrap();
        let sc = build_scenario(&doc).unwrap();
        let z = &sc.observers[0].zhat0;
        assert_eq!(z.as_slice(), &[0.1, 0.1, -0.1, -0.1]);

        let doc = preset("cascade-hom").unwrap();
        let sc = build_scenario(&doc).unwrap();
        let z = &sc.observers[0].zhat0;
        assert_eq!(z.as_slice(), &[0.1, 0.1, -0.1, 0.1, 0.1, -0.1, -0.1]);
    }

    #[test]
    fn chain_config_with_overridden_defaults() {
        let text = r#"
[system]
kind = "chain"
dim = 3
z0 = [0.5, -0.3, 0.2]

[observer]
kind = "high-gain"
gain = 4.0

[scenario]
dt = 1e-3
T = 2.0
seed = 7
input = { kind = "constant", value = 1.5 }

[sweep]
gains = [2.0, 4.0]
"#;
        let doc = parse_config(text).unwrap();
        assert_eq!(doc.scenario.t_final, 2.0);
        let sc = build_scenario(&doc).unwrap();
        assert_eq!(sc.dt, 1e-3);
        assert_eq!(sc.seed, 7);
        // Default k is the binomial row for dim 3.
        match &sc.observers[0].cfg.kind {
            ObserverKind::HighGain { gain, k } => {
                assert_eq!(*gain, 4.0);
                assert_eq!(k.as_slice(), &[3.0, 3.0, 1.0]);
            }
            other => panic!("unexpected kind {other:?}"),
        }
    }

    #[test]
    fn saturated_phi_needs_bound() {
        let mut doc = preset("cascade-hom").unwrap();
        doc.observer.as_mut().unwrap().sat_bound = None;
        assert!(matches!(build_scenario(&doc), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn bad_scenario_rejected_at_build() {
        let mut doc = preset("table3").unwrap();
        doc.scenario.dt = -1.0;
        assert!(build_scenario(&doc).is_err());
    }

    #[test]
    fn disturbance_mapping() {
        let text = r#"
[system]
kind = "chain"
dim = 2

[scenario]
t_final = 1.0
dt = 1e-3

[scenario.disturbance]
line = 2
amplitude = 0.05
frequency = 5.0
"#;
        let sc = build_scenario(&parse_config(text).unwrap()).unwrap();
        match sc.disturbance {
            Disturbance::SinusoidLine { line, amplitude, frequency } => {
                assert_eq!((line, amplitude, frequency), (2, 0.05, 5.0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
