//! JSON problem configuration and its resolution into core types.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use chanproj::measures::{noisy_wire_specs, pairwise_specs};
use chanproj::{
    control_channel, interaction_example, make_gate, Channel, Encoding, Gate, InputDistribution, InteractionParams,
    LogBase, MarginalSpec, ProductSpace, SolverOptions,
};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

/// A config problem the user has to fix. Maps to exit status 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinName {
    Xor,
    And,
    Interaction,
    Control,
}

impl BuiltinName {
    fn is_gate(self) -> bool {
        matches!(self, BuiltinName::Xor | BuiltinName::And)
    }

    fn label(self) -> &'static str {
        match self {
            BuiltinName::Xor => "xor",
            BuiltinName::And => "and",
            BuiltinName::Interaction => "interaction",
            BuiltinName::Control => "control",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EncodingName {
    /// States 0, 1 read as -1, +1
    Signed,
    /// States 0, 1 read as 0, 1
    Binary,
}

impl EncodingName {
    fn encoding(self) -> Encoding {
        match self {
            EncodingName::Signed => Encoding::SIGNED,
            EncodingName::Binary => Encoding::BINARY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UniformToken {
    #[serde(rename = "uniform")]
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, expecting = "\"uniform\" or a list of probabilities")]
pub enum DistributionSource {
    Token(UniformToken),
    Probs(Vec<f64>),
}

impl Default for DistributionSource {
    fn default() -> Self {
        DistributionSource::Token(UniformToken::Uniform)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, expecting = "\"uniform\" or a list of channel rows")]
pub enum ReferenceSource {
    Token(UniformToken),
    Rows(Vec<Vec<f64>>),
}

impl Default for ReferenceSource {
    fn default() -> Self {
        ReferenceSource::Token(UniformToken::Uniform)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoding: Option<EncodingName>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinChannel {
    pub builtin: BuiltinName,
    #[serde(default)]
    pub params: BuiltinParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, expecting = "a list of channel rows or {\"builtin\": NAME, \"params\": {...}}")]
pub enum ChannelSource {
    Rows(Vec<Vec<f64>>),
    Builtin(BuiltinChannel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    #[serde(rename = "I")]
    pub inputs: Vec<usize>,
    #[serde(rename = "J")]
    pub outputs: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogBaseName {
    #[serde(rename = "e")]
    E,
    #[serde(rename = "2")]
    Two,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptionsConfig {
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub log_base: LogBaseName,
    pub trace: bool,
}

impl Default for OptionsConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        OptionsConfig { tolerance: d.tolerance, max_sweeps: d.max_sweeps, log_base: LogBaseName::E, trace: d.trace }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_alphabets: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_alphabets: Option<Vec<usize>>,
    #[serde(default)]
    pub input_distribution: DistributionSource,
    pub channel: ChannelSource,
    #[serde(default)]
    pub constraints: Vec<ConstraintConfig>,
    #[serde(default)]
    pub reference_channel: ReferenceSource,
    #[serde(default)]
    pub options: OptionsConfig,
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tolerance: Option<f64>,
    pub max_sweeps: Option<usize>,
    pub bits: bool,
    pub trace: bool,
    pub noise: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub encoding: Option<EncodingName>,
}

/// A config resolved into validated core values.
#[derive(Debug, Clone)]
pub struct Problem {
    pub space: Arc<ProductSpace>,
    pub input: InputDistribution,
    pub channel: Channel,
    pub specs: Vec<MarginalSpec>,
    pub reference: Channel,
    pub options: SolverOptions,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                invalid(e.into_inner().to_string())
            } else {
                invalid(format!("{path}: {}", e.into_inner()))
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// A builtin channel with a uniform input, a uniform reference and, when
    /// `with_family` is set, the family the builtin is usually measured
    /// against: pairwise interactions for the gates, noisy parallel wires for
    /// the interaction and control channels.
    pub fn builtin(name: BuiltinName, with_family: bool) -> Self {
        let constraints = if !with_family {
            Vec::new()
        } else {
            let specs = if name.is_gate() { pairwise_specs() } else { noisy_wire_specs() };
            specs
                .iter()
                .map(|s| ConstraintConfig { inputs: s.inputs().to_vec(), outputs: s.outputs().to_vec() })
                .collect()
        };
        ProblemConfig {
            input_alphabets: None,
            output_alphabets: None,
            input_distribution: DistributionSource::default(),
            channel: ChannelSource::Builtin(BuiltinChannel { builtin: name, params: BuiltinParams::default() }),
            constraints,
            reference_channel: ReferenceSource::default(),
            options: OptionsConfig::default(),
        }
    }

    /// Applies command-line overrides and fills in defaulted builtin
    /// parameters, so the result is fully explicit.
    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(t) = o.tolerance {
            self.options.tolerance = t;
        }
        if let Some(n) = o.max_sweeps {
            self.options.max_sweeps = n;
        }
        if o.bits {
            self.options.log_base = LogBaseName::Two;
        }
        if o.trace {
            self.options.trace = true;
        }
        let flags = [
            ("--noise", o.noise.is_some()),
            ("--alpha", o.alpha.is_some()),
            ("--beta", o.beta.is_some()),
            ("--encoding", o.encoding.is_some()),
        ];
        match &mut self.channel {
            ChannelSource::Rows(_) => {
                if let Some((flag, _)) = flags.iter().find(|f| f.1) {
                    return Err(invalid(format!("{flag} applies only to builtin channels")));
                }
            }
            ChannelSource::Builtin(b) => {
                let p = &mut b.params;
                p.noise = o.noise.or(p.noise);
                p.alpha = o.alpha.or(p.alpha);
                p.beta = o.beta.or(p.beta);
                p.encoding = o.encoding.or(p.encoding);
                let name = b.builtin.label();
                if b.builtin.is_gate() {
                    if let Some(field) = [("alpha", p.alpha.is_some()), ("beta", p.beta.is_some()), ("encoding", p.encoding.is_some())]
                        .iter()
                        .find(|f| f.1)
                    {
                        return Err(invalid(format!("channel.params.{}: not a parameter of the {name} builtin", field.0)));
                    }
                    p.noise.get_or_insert(0.0);
                } else {
                    if p.noise.is_some() {
                        return Err(invalid(format!("channel.params.noise: not a parameter of the {name} builtin")));
                    }
                    let d = InteractionParams::default();
                    p.alpha.get_or_insert(d.alpha);
                    p.beta.get_or_insert(d.beta);
                    p.encoding.get_or_insert(EncodingName::Signed);
                }
            }
        }
        Ok(())
    }

    pub fn log_base(&self) -> LogBase {
        match self.options.log_base {
            LogBaseName::E => LogBase::Nats,
            LogBaseName::Two => LogBase::Bits,
        }
    }

    pub fn has_uniform_reference(&self) -> bool {
        matches!(self.reference_channel, ReferenceSource::Token(_))
    }

    fn builtin_channel(b: &BuiltinChannel) -> Result<Channel, ConfigError> {
        let p = &b.params;
        let built = if b.builtin.is_gate() {
            let gate = if b.builtin == BuiltinName::Xor { Gate::Xor } else { Gate::And };
            make_gate(gate, p.noise.unwrap_or(0.0))
        } else {
            let d = InteractionParams::default();
            let enc = p.encoding.unwrap_or(EncodingName::Signed).encoding();
            let params = InteractionParams {
                alpha: p.alpha.unwrap_or(d.alpha),
                beta: p.beta.unwrap_or(d.beta),
                input_encoding: enc,
                output_encoding: enc,
            };
            if b.builtin == BuiltinName::Interaction {
                interaction_example(&params)
            } else {
                control_channel(&params)
            }
        };
        built.map_err(|e| invalid(format!("channel.params: {e}")))
    }

    pub fn resolve(&self) -> Result<Problem, ConfigError> {
        let (space, channel) = match &self.channel {
            ChannelSource::Rows(rows) => {
                let ins = self
                    .input_alphabets
                    .clone()
                    .ok_or_else(|| invalid("input_alphabets: required with explicit channel rows"))?;
                let outs = self
                    .output_alphabets
                    .clone()
                    .ok_or_else(|| invalid("output_alphabets: required with explicit channel rows"))?;
                let space = ProductSpace::new(ins, outs).map_err(|e| invalid(format!("alphabets: {e}")))?;
                let k = Channel::from_rows(space.clone(), rows).map_err(|e| invalid(format!("channel: {e}")))?;
                (space, k)
            }
            ChannelSource::Builtin(b) => {
                let k = Self::builtin_channel(b)?;
                let space = k.space().clone();
                for (field, given, actual) in [
                    ("input_alphabets", &self.input_alphabets, space.input_cards()),
                    ("output_alphabets", &self.output_alphabets, space.output_cards()),
                ] {
                    if let Some(g) = given {
                        if g.as_slice() != actual {
                            return Err(invalid(format!(
                                "{field}: {g:?} does not match the {} builtin ({actual:?})",
                                b.builtin.label()
                            )));
                        }
                    }
                }
                (space, k)
            }
        };

        let input = match &self.input_distribution {
            DistributionSource::Token(_) => InputDistribution::uniform(space.clone()),
            DistributionSource::Probs(v) => InputDistribution::new(space.clone(), v.clone())
                .map_err(|e| invalid(format!("input_distribution: {e}")))?,
        };

        let specs = self
            .constraints
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let spec = MarginalSpec::new(c.inputs.clone(), c.outputs.clone())
                    .and_then(|s| s.validate(&space).map(|_| s))
                    .map_err(|e| invalid(format!("constraints[{i}]: {e}")))?;
                Ok(spec)
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;

        let reference = match &self.reference_channel {
            ReferenceSource::Token(_) => Channel::uniform(space.clone()),
            ReferenceSource::Rows(rows) => Channel::from_rows(space.clone(), rows)
                .map_err(|e| invalid(format!("reference_channel: {e}")))?,
        };

        let options = SolverOptions {
            tolerance: self.options.tolerance,
            max_sweeps: self.options.max_sweeps,
            trace: self.options.trace,
            log_base: self.log_base(),
        };
        options.validate().map_err(|e| invalid(format!("options: {e}")))?;

        Ok(Problem { space, input, channel, specs, reference, options })
    }
}
