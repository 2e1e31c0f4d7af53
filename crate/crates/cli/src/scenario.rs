//! Scenario files: `{name, kind, seed?, parameters}` in JSON.

use std::path::Path;

use bellhist::hidden::{CandidateClass, SearchOutcome};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Seed used when neither the file nor the command line gives one.
pub const DEFAULT_SEED: u64 = 20_100_601;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Epr,
    Golf,
    Chsh,
    Circuit,
    HiddenSearch,
    Locality,
    Wavepacket,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::Epr,
        Kind::Golf,
        Kind::Chsh,
        Kind::Circuit,
        Kind::HiddenSearch,
        Kind::Locality,
        Kind::Wavepacket,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Epr => "epr",
            Kind::Golf => "golf",
            Kind::Chsh => "chsh",
            Kind::Circuit => "circuit",
            Kind::HiddenSearch => "hidden_search",
            Kind::Locality => "locality",
            Kind::Wavepacket => "wavepacket",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Kind::Epr => "singlet outcome table along one axis, by three routes, plus conditionals",
            Kind::Golf => "normalized spin commutator scaling over a list of dimensions",
            Kind::Chsh => "CHSH operator spectrum and a sweep of random local models",
            Kind::Circuit => "route agreement, deferred measurement and ancilla independence on random circuits",
            Kind::HiddenSearch => "hidden-variable search on a named circuit setup",
            Kind::Locality => "A-history invariance under changes to C and to the B-C dynamics",
            Kind::Wavepacket => "commutator of a localized pulse with interval projectors on a grid",
        }
    }

    pub fn default_parameters(self) -> serde_json::Value {
        let v = match self {
            Kind::Epr => serde_json::to_value(EprParams::default()),
            Kind::Golf => serde_json::to_value(GolfParams::default()),
            Kind::Chsh => serde_json::to_value(ChshParams::default()),
            Kind::Circuit => serde_json::to_value(CircuitParams::default()),
            Kind::HiddenSearch => serde_json::to_value(HiddenSearchParams::default()),
            Kind::Locality => serde_json::to_value(LocalityParams::default()),
            Kind::Wavepacket => serde_json::to_value(WavepacketParams::default()),
        };
        v.expect("parameter defaults serialize")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "empty_object")]
    pub parameters: serde_json::Value,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

impl ScenarioFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Parse {
            origin: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Kind-specific parameters with defaults filled in.
    pub fn params<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(self.parameters.clone()).map_err(|e| CliError::field("parameters", e))
    }
}

fn axis_x() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

fn axis_z() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EprParams {
    /// Bloch axis measured on both particles.
    pub axis: [f64; 3],
}

impl Default for EprParams {
    fn default() -> Self {
        EprParams { axis: axis_x() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GolfParams {
    /// Spin multiplet dimensions `2J + 1`.
    pub dims: Vec<usize>,
}

impl Default for GolfParams {
    fn default() -> Self {
        GolfParams {
            dims: vec![2, 3, 5, 9, 17, 41],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChshParams {
    pub a: [f64; 3],
    pub a_prime: [f64; 3],
    pub b: [f64; 3],
    pub b_prime: [f64; 3],
    pub n_models: usize,
    pub n_lambda: usize,
}

impl Default for ChshParams {
    fn default() -> Self {
        ChshParams {
            a: axis_z(),
            a_prime: axis_x(),
            b: axis_z(),
            b_prime: axis_x(),
            n_models: 1000,
            n_lambda: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitParams {
    pub n_specs: usize,
    pub dim_a: usize,
    pub dim_b: usize,
    pub settings_a: usize,
    pub settings_b: usize,
}

impl Default for CircuitParams {
    fn default() -> Self {
        CircuitParams {
            n_specs: 50,
            dim_a: 2,
            dim_b: 2,
            settings_a: 2,
            settings_b: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setup {
    /// Singlet, `S_x`/`S_z` on both sides, examined with the von Neumann family.
    VonNeumannSinglet,
    /// Singlet with commuting projectors on `A`.
    CommutingA,
    /// Singlet with tilted `B` axes.
    TiltedSinglet,
    /// Singlet, `S_x`/`S_z` on both sides.
    LiteralXz,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HiddenSearchParams {
    pub setup: Setup,
    pub class: CandidateClass,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect: Option<SearchOutcome>,
}

impl Default for HiddenSearchParams {
    fn default() -> Self {
        HiddenSearchParams {
            setup: Setup::CommutingA,
            class: CandidateClass::LocalBasisA,
            tol: 1e-10,
            expect: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalityParams {
    pub dims: [usize; 3],
    pub n_times: usize,
    pub n_variations: usize,
}

impl Default for LocalityParams {
    fn default() -> Self {
        LocalityParams {
            dims: [2, 2, 2],
            n_times: 3,
            n_variations: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WavepacketParams {
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
    /// Support `[x₁, x₂]` of the triangle pulse.
    pub support: [f64; 2],
    /// Cut strictly inside the support.
    pub cut: f64,
}

impl Default for WavepacketParams {
    fn default() -> Self {
        WavepacketParams {
            n_points: 64,
            x_min: 0.0,
            x_max: 1.0,
            support: [0.25, 0.75],
            cut: 0.5,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let top = ScenarioFile::parse(r#"{"name": "x", "kind": "epr", "extra": 1}"#, "t");
        assert!(matches!(top, Err(CliError::Parse { line: 1, .. })));
        let f = ScenarioFile::parse(r#"{"name": "x", "kind": "golf", "parameters": {"dimz": [2]}}"#, "t").unwrap();
        assert!(matches!(f.params::<GolfParams>(), Err(CliError::Field { .. })));
        assert!(ScenarioFile::parse(r#"{"name": "x", "kind": "nope"}"#, "t").is_err());
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = ScenarioFile::parse("{\n  \"name\": \"x\",\n  \"kind\": 3\n}", "t").unwrap_err();
        match err {
            CliError::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn defaults_fill_missing_parameters() {
        let f = ScenarioFile::parse(r#"{"name": "x", "kind": "chsh", "parameters": {"n_models": 5}}"#, "t").unwrap();
        let p: ChshParams = f.params().unwrap();
        assert_eq!(p.n_models, 5);
        assert_eq!(p.n_lambda, 8);
        let f = ScenarioFile::parse(r#"{"name": "x", "kind": "hidden_search"}"#, "t").unwrap();
        let p: HiddenSearchParams = f.params().unwrap();
        assert_eq!(p.class, CandidateClass::LocalBasisA);
    }

    #[test]
    fn every_kind_has_round_tripping_defaults() {
        for k in Kind::ALL {
            let f = ScenarioFile {
                name: k.name().into(),
                kind: k,
                seed: None,
                parameters: k.default_parameters(),
            };
            let s = serde_json::to_string(&f).unwrap();
            assert_eq!(ScenarioFile::parse(&s, "t").unwrap(), f);
        }
    }
}
