use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use scarlab::analysis::CutoffRule;
use scarlab::dynamics::{Method, ObservableSpec};
use scarlab::models::dipolar::Cutoff;
use scarlab::models::disorder::DisorderKind;
use scarlab::models::hhbh::Gauge;
use scarlab::spectral::AnchorMode;
use scarlab::symmetry::SymmetrySector;
use scarlab::Boundary;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<ObservableSpec>,
    pub model: ModelConfig,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolution: Option<EvolutionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Angles are in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelConfig {
    Ladder(LadderModel),
    Hhbh(HhbhModel),
    Dipolar(DipolarModel),
    FermiHubbard(FermiHubbardModel),
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderModel {
    pub l: usize,
    #[serde(default = "one")]
    pub t_perp: f64,
    #[serde(default = "one")]
    pub t_par: f64,
    #[serde(default)]
    pub t_nn: f64,
    #[serde(default)]
    pub t_nnn: f64,
    #[serde(default)]
    pub boundary: Boundary,
    /// Symmetry sector for spectra; ignored by dynamics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sector: Option<SymmetrySector>,
    /// Fix total S^z (twice its value) instead of the particle number of the initial state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sz2: Option<i32>,
}

fn two_u8() -> u8 {
    2
}

fn pi() -> f64 {
    PI
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HhbhModel {
    pub l: usize,
    pub u: f64,
    #[serde(default = "two_u8")]
    pub n_max: u8,
    #[serde(default = "one")]
    pub j: f64,
    #[serde(default = "one")]
    pub j_prime: f64,
    #[serde(default = "pi")]
    pub flux: f64,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub gauge: Gauge,
}

fn thirty() -> f64 {
    30.0
}

fn ratio_tol() -> f64 {
    1e-3
}

/// Zig-zag chain of 2l spins. Either `ratio` (J02/J01, α solved), or `alpha` (β solved for
/// frustration), or both `alpha` and `beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipolarModel {
    pub l: usize,
    #[serde(default = "thirty")]
    pub tilt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default = "ratio_tol")]
    pub ratio_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<i8>,
    #[serde(default)]
    pub cutoff: Cutoff,
}

fn hundred() -> f64 {
    100.0
}

fn two() -> f64 {
    2.0
}

fn minus_two() -> f64 {
    -2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FermiHubbardModel {
    pub l: usize,
    #[serde(default = "one")]
    pub t: f64,
    #[serde(default = "hundred")]
    pub u: f64,
    #[serde(default = "one")]
    pub w: f64,
    #[serde(default = "two")]
    pub h_x: f64,
    #[serde(default = "minus_two")]
    pub h_z: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl ModelConfig {
    pub fn l(&self) -> usize {
        match self {
            ModelConfig::Ladder(m) => m.l,
            ModelConfig::Hhbh(m) => m.l,
            ModelConfig::Dipolar(m) => m.l,
            ModelConfig::FermiHubbard(m) => m.l,
        }
    }

    pub fn with_l(&self, l: usize) -> Self {
        let mut c = self.clone();
        match &mut c {
            ModelConfig::Ladder(m) => m.l = l,
            ModelConfig::Hhbh(m) => m.l = l,
            ModelConfig::Dipolar(m) => m.l = l,
            ModelConfig::FermiHubbard(m) => m.l = l,
        }
        c
    }

    pub fn family(&self) -> &'static str {
        match self {
            ModelConfig::Ladder(_) => "ladder",
            ModelConfig::Hhbh(_) => "hhbh",
            ModelConfig::Dipolar(_) => "dipolar",
            ModelConfig::FermiHubbard(_) => "fermi_hubbard",
        }
    }
}

/// Named state (`scar`, `thermal-1`, `thermal-2`, `all-up`) or an explicit occupation word
/// such as "01100110".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(default = "scar")]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<String>,
}

fn scar() -> String {
    "scar".into()
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState { name: scar(), word: None }
    }
}

fn dt() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default = "dt")]
    pub dt: f64,
    #[serde(default)]
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floquet: Option<FloquetConfig>,
}

fn one_usize() -> usize {
    1
}

/// Built-in four-rung sequence; `samples_per_period = 1` records stroboscopically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloquetConfig {
    pub period: f64,
    pub n_periods: usize,
    #[serde(default)]
    pub pulse_duration: f64,
    #[serde(default = "one_usize")]
    pub samples_per_period: usize,
    #[serde(default)]
    pub palindrome: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderConfig {
    pub shots: usize,
    #[serde(default)]
    pub seed: u64,
    pub model: DisorderKind,
}

fn lanczos_steps() -> usize {
    200
}

fn fitted() -> AnchorMode {
    AnchorMode::Fitted
}

fn generalized() -> ObservableSpec {
    ObservableSpec::GeneralizedImbalance
}

fn true_() -> bool {
    true
}

/// Scans one numeric model field. Each point is evolved, fitted, and optionally given σ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: String,
    pub values: Vec<f64>,
    #[serde(default = "generalized")]
    pub observable: ObservableSpec,
    #[serde(default)]
    pub cutoff: FitCutoff,
    #[serde(default = "true_")]
    pub sigma: bool,
    /// System size for σ when it differs from the dynamics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_l: Option<usize>,
    #[serde(default = "lanczos_steps")]
    pub lanczos_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_e: Option<f64>,
    #[serde(default = "fitted")]
    pub anchor: AnchorMode,
}

/// `CutoffRule` with a default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FitCutoff(pub CutoffRule);

impl Default for FitCutoff {
    fn default() -> Self {
        FitCutoff(CutoffRule::FirstEnvelopeMinimum)
    }
}

fn half() -> f64 {
    0.5
}

fn bins() -> usize {
    40
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Central fraction of the sorted levels used for r statistics.
    #[serde(default = "half")]
    pub window: f64,
    #[serde(default = "bins")]
    pub bins: usize,
    /// Overlap spectrum and fractional energies of the initial state.
    #[serde(default = "true_")]
    pub overlap: bool,
    #[serde(default = "lanczos_steps")]
    pub lanczos_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_e: Option<f64>,
    #[serde(default = "fitted")]
    pub anchor: AnchorMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

fn runs() -> String {
    "runs".into()
}

fn csv() -> Vec<Format> {
    vec![Format::Csv]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "runs")]
    pub dir: String,
    #[serde(default = "csv")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: runs(), formats: csv() }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e: toml::de::Error| match unknown_key_line(text, e.message()) {
            Some((n, key)) => format!("line {n}: unknown field `{key}`\n{}", e.message()),
            None => e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Replaces one numeric field of the model table.
    pub fn with_model_value(&self, field: &str, value: f64) -> Result<Self, String> {
        let mut table = toml::Value::try_from(&self.model).map_err(|e| e.to_string())?;
        let t = table.as_table_mut().expect("model is a table");
        if field == "family" {
            return Err("cannot sweep the model family".into());
        }
        let v = match t.get(field) {
            Some(toml::Value::Integer(_)) | None if value.fract() == 0.0 && is_integer_field(field) => {
                toml::Value::Integer(value as i64)
            }
            _ => toml::Value::Float(value),
        };
        t.insert(field.into(), v);
        let model: ModelConfig = table.try_into().map_err(|e: toml::de::Error| format!("sweep parameter `{field}`: {e}"))?;
        Ok(ExperimentConfig { model, ..self.clone() })
    }
}

/// Tagged tables lose spans, so find the offending key by name.
fn unknown_key_line(text: &str, message: &str) -> Option<(usize, String)> {
    let key = message.strip_prefix("unknown field `")?.split('`').next()?.to_string();
    let n = text.lines().position(|l| l.split('=').next().is_some_and(|k| k.trim() == key) && l.contains('='))?;
    Some((n + 1, key))
}

fn is_integer_field(field: &str) -> bool {
    matches!(field, "l" | "n_max" | "sz2" | "branch")
}
