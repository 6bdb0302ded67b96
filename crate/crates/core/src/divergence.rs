//! KL divergences between joints and between channels, and mutual information.

use std::fmt;

use crate::error::Result;
use crate::prob::{channel_marginal, Channel, InputDistribution, JointDistribution};
use crate::space::{ensure_same, MarginalSpec};

/// Logarithm base used when presenting a divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Nats,
    Bits,
}

impl LogBase {
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            LogBase::Nats => nats,
            LogBase::Bits => nats / std::f64::consts::LN_2,
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            LogBase::Nats => "nats",
            LogBase::Bits => "bits",
        }
    }
}

/// A divergence in nats, or `Infinite` when the support condition fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    Finite(f64),
    Infinite,
}

impl Divergence {
    /// Value in nats; `Infinite` maps to `f64::INFINITY`.
    pub fn nats(self) -> f64 {
        match self {
            Divergence::Finite(v) => v,
            Divergence::Infinite => f64::INFINITY,
        }
    }

    pub fn bits(self) -> f64 {
        LogBase::Bits.convert(self.nats())
    }

    pub fn in_base(self, base: LogBase) -> f64 {
        base.convert(self.nats())
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Divergence::Finite(_))
    }
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Divergence::Finite(v) => write!(f, "{v} nats"),
            Divergence::Infinite => write!(f, "+inf"),
        }
    }
}

/// `sum a log(a / b)` with `0 log(0 / b) = 0`; clamped at zero against rounding.
pub(crate) fn kl_slices(a: &[f64], b: &[f64]) -> Divergence {
    let mut sum = 0.0;
    for (&u, &v) in a.iter().zip(b) {
        if u > 0.0 {
            if v <= 0.0 {
                return Divergence::Infinite;
            }
            sum += u * (u / v).ln();
        }
    }
    Divergence::Finite(sum.max(0.0))
}

pub fn kl_joint(q1: &JointDistribution, q2: &JointDistribution) -> Result<Divergence> {
    ensure_same(q1.space(), q2.space())?;
    Ok(kl_slices(q1.probs(), q2.probs()))
}

/// `D_p(k || m) = sum_{x,y} p(x) k(x; y) log(k(x; y) / m(x; y))`
pub fn kl_channel(p: &InputDistribution, k: &Channel, m: &Channel) -> Result<Divergence> {
    ensure_same(p.space(), k.space())?;
    ensure_same(p.space(), m.space())?;
    let mut sum = 0.0;
    for (x, &px) in p.probs().iter().enumerate() {
        for (&u, &v) in k.row(x).iter().zip(m.row(x)) {
            if u > 0.0 {
                if v <= 0.0 {
                    return Ok(Divergence::Infinite);
                }
                sum += px * u * (u / v).ln();
            }
        }
    }
    Ok(Divergence::Finite(sum.max(0.0)))
}

/// `I(X; Y) = D_p(k || k_Y)` where every row of `k_Y` is the output marginal.
pub fn mutual_information(p: &InputDistribution, k: &Channel) -> Result<Divergence> {
    ensure_same(p.space(), k.space())?;
    let all_outputs = MarginalSpec::new(Vec::new(), (0..k.space().n_outputs()).collect())?;
    let out = channel_marginal(p, k, &all_outputs)?;
    let rows = out.as_slice().repeat(k.space().input_size());
    let product = Channel::from_parts(k.space().clone(), rows);
    kl_channel(p, k, &product)
}
