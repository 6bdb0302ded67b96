//! Synergy and complexity measures built on rI-projections, plus the example
//! channels they are usually evaluated on.

use crate::divergence::Divergence;
use crate::error::{Error, Result};
use crate::prob::{channel_marginal, Channel, InputDistribution};
use crate::projection::{ri_project, ProjectionResult, SolverOptions};
use crate::space::{MarginalSpec, ProductSpace};

/// A divergence-from-family value with the projection run that produced it.
#[derive(Debug, Clone)]
pub struct Measure {
    pub value: Divergence,
    pub projection: ProjectionResult,
}

/// `D_p(k || E)` for the exponential family through the uniform channel
/// generated by the indicator functions of `specs`.
pub fn divergence_from_family(
    p: &InputDistribution,
    k: &Channel,
    specs: &[MarginalSpec],
    opts: &SolverOptions,
) -> Result<Measure> {
    let k0 = Channel::uniform(k.space().clone());
    let r = ri_project(k, specs, &k0, p, opts)?;
    Ok(Measure { value: r.divergence, projection: r.projection })
}

fn spec(inputs: &[usize], outputs: &[usize]) -> MarginalSpec {
    MarginalSpec::new(inputs.to_vec(), outputs.to_vec()).expect("static spec has outputs")
}

/// Single-input/output interactions `({0},{0}), ({1},{0})`.
pub fn pairwise_specs() -> Vec<MarginalSpec> {
    vec![spec(&[0], &[0]), spec(&[1], &[0])]
}

/// Parallel wires `({0},{0}), ({1},{1})`.
pub fn wire_specs() -> Vec<MarginalSpec> {
    vec![spec(&[0], &[0]), spec(&[1], &[1])]
}

/// Parallel wires plus an output-only interaction `(empty,{0,1})`.
pub fn noisy_wire_specs() -> Vec<MarginalSpec> {
    vec![spec(&[0], &[0]), spec(&[1], &[1]), spec(&[], &[0, 1])]
}

/// Outputs conditionally independent given both inputs.
pub fn conditional_independence_specs() -> Vec<MarginalSpec> {
    vec![spec(&[0, 1], &[0]), spec(&[0, 1], &[1])]
}

fn check_shape(k: &Channel, inputs: usize, outputs: usize, what: &str) -> Result<()> {
    let s = k.space();
    if s.n_inputs() != inputs || s.n_outputs() != outputs {
        return Err(Error::Shape(format!(
            "{what} needs {inputs} input and {outputs} output factors, got {} and {}",
            s.n_inputs(),
            s.n_outputs()
        )));
    }
    Ok(())
}

/// Pairwise synergy `d_2(k)` of a two-input, one-output channel.
pub fn synergy_d2(p: &InputDistribution, k: &Channel, opts: &SolverOptions) -> Result<Measure> {
    check_shape(k, 2, 1, "synergy")?;
    divergence_from_family(p, k, &pairwise_specs(), opts)
}

/// Complexity `c_1(k)`: divergence from the parallel-wire family.
pub fn complexity_c1(p: &InputDistribution, k: &Channel, opts: &SolverOptions) -> Result<Measure> {
    check_shape(k, 2, 2, "complexity")?;
    divergence_from_family(p, k, &wire_specs(), opts)
}

/// Complexity `c_2(k)`: divergence from the noisy parallel-wire family.
pub fn complexity_c2(p: &InputDistribution, k: &Channel, opts: &SolverOptions) -> Result<Measure> {
    check_shape(k, 2, 2, "complexity")?;
    divergence_from_family(p, k, &noisy_wire_specs(), opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Xor,
    And,
}

/// Two-input binary gate on `{0,1}`, mixed with uniform rows by weight `noise`.
pub fn make_gate(kind: Gate, noise: f64) -> Result<Channel> {
    if !(0.0..1.0).contains(&noise) {
        return Err(Error::InvalidChannel(format!("noise must lie in [0, 1), got {noise}")));
    }
    let space = ProductSpace::new(vec![2, 2], vec![2])?;
    let mut rows = Vec::with_capacity(8);
    for x in 0..4 {
        let (a, b) = (x >> 1, x & 1);
        let out = match kind {
            Gate::Xor => a ^ b,
            Gate::And => a & b,
        };
        for y in 0..2 {
            let hit = if y == out { 1.0 } else { 0.0 };
            rows.push((1.0 - noise) * hit + noise * 0.5);
        }
    }
    Channel::new(space, rows)
}

/// Values assigned to the two states of a binary node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Encoding(pub f64, pub f64);

impl Encoding {
    pub const SIGNED: Encoding = Encoding(-1.0, 1.0);
    pub const BINARY: Encoding = Encoding(0.0, 1.0);

    pub fn value(self, state: usize) -> f64 {
        if state == 0 {
            self.0
        } else {
            self.1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionParams {
    pub alpha: f64,
    pub beta: f64,
    pub input_encoding: Encoding,
    pub output_encoding: Encoding,
}

impl Default for InteractionParams {
    fn default() -> Self {
        InteractionParams {
            alpha: 1.0,
            beta: 2.0,
            input_encoding: Encoding::SIGNED,
            output_encoding: Encoding::SIGNED,
        }
    }
}

impl InteractionParams {
    pub fn validate(&self) -> Result<()> {
        for (name, e) in [("input", self.input_encoding), ("output", self.output_encoding)] {
            if !(e.0.is_finite() && e.1.is_finite()) || e.0 == e.1 {
                return Err(Error::InvalidChannel(format!("{name} encoding needs two distinct finite values")));
            }
        }
        if !(self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::InvalidChannel("alpha and beta must be finite".into()));
        }
        Ok(())
    }
}

/// `k(x; y) ∝ exp((alpha x1 x2 + beta x3)(y1 - y2))` on binary nodes.
///
/// With `with_x3 = false` the `beta` term is dropped and the channel has two
/// inputs (the control channel `h`).
pub fn make_interaction_channel(params: &InteractionParams, with_x3: bool) -> Result<Channel> {
    params.validate()?;
    let n_in = if with_x3 { 3 } else { 2 };
    let space = ProductSpace::new(vec![2; n_in], vec![2, 2])?;
    let mut rows = Vec::with_capacity(space.joint_size());
    for x in 0..space.input_size() {
        let xs: Vec<f64> = space.decode_input(x).into_iter().map(|s| params.input_encoding.value(s)).collect();
        let mut field = params.alpha * xs[0] * xs[1];
        if with_x3 {
            field += params.beta * xs[2];
        }
        let weights: Vec<f64> = (0..space.output_size())
            .map(|y| {
                let ys = space.decode_output(y);
                let (y1, y2) = (params.output_encoding.value(ys[0]), params.output_encoding.value(ys[1]));
                field * (y1 - y2)
            })
            .collect();
        let shift = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = weights.iter().map(|w| (w - shift).exp()).sum();
        rows.extend(weights.iter().map(|w| (w - shift).exp() / z));
    }
    Channel::new(space, rows)
}

/// The three-input interaction channel with `X3` averaged out under a
/// uniform input distribution.
pub fn interaction_example(params: &InteractionParams) -> Result<Channel> {
    let full = make_interaction_channel(params, true)?;
    let p = InputDistribution::uniform(full.space().clone());
    channel_marginal(&p, &full, &spec(&[0, 1], &[0, 1]))
}

/// The control channel `h` (no `X3` term).
pub fn control_channel(params: &InteractionParams) -> Result<Channel> {
    make_interaction_channel(params, false)
}
