//! Single-constraint scalings: joint `(I, J)`-scaling, input scaling, and the
//! unnormalized and normalized channel `(I, J)`-scalings.
//!
//! All ratios follow `0 / 0 := 0`. A positive prescription over a zero current
//! marginal is infeasible and reported, never clamped.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::prob::{Channel, InputDistribution, JointDistribution, MarginalOperator};
use crate::space::{ensure_same, JointSpec, MarginalSpec, ProductSpace, Projector};

/// Nonnegative function on `X x Y` whose rows need not sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegativeKernel {
    space: Arc<ProductSpace>,
    values: Vec<f64>,
}

impl NonnegativeKernel {
    pub fn new(space: Arc<ProductSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.joint_size() {
            return Err(Error::InvalidChannel(format!(
                "expected {} entries, got {}",
                space.joint_size(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidChannel(format!("kernel entry {i} is {}", values[i])));
        }
        Ok(NonnegativeKernel { space, values })
    }

    pub fn space(&self) -> &Arc<ProductSpace> {
        &self.space
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let ny = self.space.output_size();
        &self.values[x * ny..(x + 1) * ny]
    }
}

/// Row sums `Z(x)` removed by [`normalize_rows`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationVector(Vec<f64>);

impl NormalizationVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `prescribed / current` per reduced cell, with `0 / 0 := 0`.
fn scaling_ratios(current: &[f64], prescribed: &[f64]) -> Result<Vec<f64>> {
    current
        .iter()
        .zip(prescribed)
        .enumerate()
        .map(|(cell, (&c, &t))| {
            if c > 0.0 {
                Ok(t / c)
            } else if t > 0.0 {
                Err(Error::InfeasibleScaling { cell, prescribed: t })
            } else {
                Ok(0.0)
            }
        })
        .collect()
}

/// `q'(x, y) = q(x, y) * prescribed(x_I, y_J) / q(x_I, y_J)`.
///
/// The result is the I-projection of `q` onto the joints with marginal
/// `prescribed` on `X_I x Y_J`.
pub fn joint_scale(
    q: &JointDistribution,
    spec: &JointSpec,
    prescribed: &JointDistribution,
) -> Result<JointDistribution> {
    let proj = Projector::new(q.space(), spec)?;
    joint_scale_with(&proj, q, prescribed)
}

pub(crate) fn joint_scale_with(
    proj: &Projector,
    q: &JointDistribution,
    prescribed: &JointDistribution,
) -> Result<JointDistribution> {
    ensure_same(proj.reduced(), prescribed.space())?;
    let space = q.space();
    let current = crate::prob::project_joint(proj, space, q.probs());
    let ratios = scaling_ratios(&current, prescribed.probs())?;
    let ny = space.output_size();
    let red_ny = proj.reduced().output_size();
    let mut out = Vec::with_capacity(q.probs().len());
    for (x, row) in q.probs().chunks(ny).enumerate() {
        let base = proj.input(x) * red_ny;
        out.extend(row.iter().zip(proj.output_map()).map(|(&v, &yj)| v * ratios[base + yj]));
    }
    Ok(JointDistribution::from_parts(space.clone(), out))
}

/// `p` viewed as a joint on `X x Y_{empty}`, the prescription for input scaling.
pub fn input_prescription(p: &InputDistribution) -> Result<JointDistribution> {
    let reduced = p.space().restrict(&JointSpec::all_inputs(p.space()))?;
    Ok(JointDistribution::from_parts(reduced, p.probs().to_vec()))
}

/// Input scaling: rescales `q` so its `X`-marginal becomes `p`.
pub fn input_scale(q: &JointDistribution, p: &InputDistribution) -> Result<JointDistribution> {
    ensure_same(q.space(), p.space())?;
    joint_scale(q, &JointSpec::all_inputs(q.space()), &input_prescription(p)?)
}

/// Unnormalized channel scaling `k(x; y) * kbar(x_I; y_J) / k(x_I; y_J)`.
///
/// `kbar_marg` is already the channel marginal on `X_I; Y_J`.
pub fn ij_scale_raw(
    p: &InputDistribution,
    k: &Channel,
    kbar_marg: &Channel,
    spec: &MarginalSpec,
) -> Result<NonnegativeKernel> {
    ensure_same(p.space(), k.space())?;
    let op = MarginalOperator::new(p, spec)?;
    ij_scale_with(&op, k, kbar_marg)
}

pub(crate) fn ij_scale_with(
    op: &MarginalOperator,
    k: &Channel,
    kbar_marg: &Channel,
) -> Result<NonnegativeKernel> {
    ensure_same(op.reduced(), kbar_marg.space())?;
    let current = op.apply(k)?;
    let ratios = scaling_ratios(current.as_slice(), kbar_marg.as_slice())?;
    let proj = op.projector();
    let space = k.space();
    let red_ny = proj.reduced().output_size();
    let mut out = Vec::with_capacity(space.joint_size());
    for (x, row) in k.rows().enumerate() {
        let base = proj.input(x) * red_ny;
        out.extend(row.iter().zip(proj.output_map()).map(|(&v, &yj)| v * ratios[base + yj]));
    }
    Ok(NonnegativeKernel { space: space.clone(), values: out })
}

/// Divides each row by its sum `Z(x)`.
pub fn normalize_rows(raw: &NonnegativeKernel) -> Result<(Channel, NormalizationVector)> {
    let ny = raw.space.output_size();
    let mut rows = raw.values.clone();
    let mut z = Vec::with_capacity(raw.space.input_size());
    for (x, row) in rows.chunks_mut(ny).enumerate() {
        let sum: f64 = row.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::DegenerateRow { x });
        }
        row.iter_mut().for_each(|v| *v /= sum);
        z.push(sum);
    }
    Ok((Channel::from_parts(raw.space.clone(), rows), NormalizationVector(z)))
}

/// Normalized channel scaling: [`ij_scale_raw`] followed by [`normalize_rows`].
pub fn normalized_ij_scale(
    p: &InputDistribution,
    k: &Channel,
    kbar_marg: &Channel,
    spec: &MarginalSpec,
) -> Result<Channel> {
    normalize_rows(&ij_scale_raw(p, k, kbar_marg, spec)?).map(|(c, _)| c)
}

/// As [`normalized_ij_scale`], taking the full prescription channel `kbar`.
pub fn normalized_ij_scale_toward(
    p: &InputDistribution,
    k: &Channel,
    kbar: &Channel,
    spec: &MarginalSpec,
) -> Result<Channel> {
    let op = MarginalOperator::new(p, spec)?;
    let target = op.apply(kbar)?;
    normalize_rows(&ij_scale_with(&op, k, &target)?).map(|(c, _)| c)
}
