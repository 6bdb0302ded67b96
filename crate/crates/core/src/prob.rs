//! Input distributions, channels, joints, and the marginal operators between them.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::{ensure_same, JointSpec, MarginalSpec, ProductSpace, Projector};

/// Slack allowed on a total (or row) mass before construction fails.
pub const NORMALIZATION_SLACK: f64 = 1e-12;

/// Input probabilities must exceed this to count as strictly positive.
pub const POSITIVITY_THRESHOLD: f64 = 1e-15;

fn check_finite_nonneg(values: &[f64], what: &str) -> std::result::Result<(), String> {
    match values.iter().position(|v| !v.is_finite() || *v < 0.0) {
        Some(i) => Err(format!("{what} entry {i} is {} (must be finite and >= 0)", values[i])),
        None => Ok(()),
    }
}

fn renormalize(values: &mut [f64], what: &str) -> std::result::Result<(), String> {
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_SLACK {
        return Err(format!("{what} sums to {sum}, expected 1"));
    }
    if sum != 1.0 {
        values.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(())
}

/// A strictly positive distribution `p` on the input space `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistribution {
    space: Arc<ProductSpace>,
    probs: Vec<f64>,
}

impl InputDistribution {
    pub fn new(space: Arc<ProductSpace>, mut probs: Vec<f64>) -> Result<Self> {
        if probs.len() != space.input_size() {
            return Err(Error::InvalidDistribution(format!(
                "expected {} input probabilities, got {}",
                space.input_size(),
                probs.len()
            )));
        }
        check_finite_nonneg(&probs, "input distribution").map_err(Error::InvalidDistribution)?;
        if let Some(x) = probs.iter().position(|&v| v <= POSITIVITY_THRESHOLD) {
            return Err(Error::InvalidDistribution(format!(
                "input probability at x = {x} is {} (must exceed {POSITIVITY_THRESHOLD})",
                probs[x]
            )));
        }
        renormalize(&mut probs, "input distribution").map_err(Error::InvalidDistribution)?;
        Ok(InputDistribution { space, probs })
    }

    pub fn uniform(space: Arc<ProductSpace>) -> Self {
        let n = space.input_size();
        InputDistribution { space, probs: vec![1.0 / n as f64; n] }
    }

    pub fn space(&self) -> &Arc<ProductSpace> {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `p(x_I)` on the reduced input space of `spec` (outputs are ignored).
    pub fn marginal(&self, spec: &JointSpec) -> Result<Vec<f64>> {
        let inputs_only = JointSpec::new(spec.inputs().to_vec(), Vec::new());
        let proj = Projector::new(&self.space, &inputs_only)?;
        let mut out = vec![0.0; proj.reduced().input_size()];
        for (x, &px) in self.probs.iter().enumerate() {
            out[proj.input(x)] += px;
        }
        Ok(out)
    }
}

/// A row-stochastic kernel `k(x; y)` stored row-major as `|X| x |Y|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    space: Arc<ProductSpace>,
    rows: Vec<f64>,
}

impl Channel {
    /// Validates nonnegativity and row sums; rows within slack are renormalized.
    pub fn new(space: Arc<ProductSpace>, mut rows: Vec<f64>) -> Result<Self> {
        if rows.len() != space.joint_size() {
            return Err(Error::InvalidChannel(format!(
                "expected {} entries, got {}",
                space.joint_size(),
                rows.len()
            )));
        }
        check_finite_nonneg(&rows, "channel").map_err(Error::InvalidChannel)?;
        let ny = space.output_size();
        for (x, row) in rows.chunks_mut(ny).enumerate() {
            renormalize(row, &format!("channel row {x}")).map_err(Error::InvalidChannel)?;
        }
        Ok(Channel { space, rows })
    }

    pub fn from_rows(space: Arc<ProductSpace>, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != space.input_size() {
            return Err(Error::InvalidChannel(format!(
                "expected {} rows, got {}",
                space.input_size(),
                rows.len()
            )));
        }
        if let Some(x) = rows.iter().position(|r| r.len() != space.output_size()) {
            return Err(Error::InvalidChannel(format!(
                "row {x} has {} entries, expected {}",
                rows[x].len(),
                space.output_size()
            )));
        }
        Self::new(space, rows.concat())
    }

    pub fn uniform(space: Arc<ProductSpace>) -> Self {
        let ny = space.output_size();
        Channel { rows: vec![1.0 / ny as f64; space.joint_size()], space }
    }

    pub(crate) fn from_parts(space: Arc<ProductSpace>, rows: Vec<f64>) -> Self {
        debug_assert_eq!(rows.len(), space.joint_size());
        Channel { space, rows }
    }

    pub fn space(&self) -> &Arc<ProductSpace> {
        &self.space
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let ny = self.space.output_size();
        &self.rows[x * ny..(x + 1) * ny]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks(self.space.output_size())
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x * self.space.output_size() + y]
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.rows.iter().all(|&v| v > 0.0)
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Channel) -> f64 {
        max_abs_diff(&self.rows, &other.rows)
    }
}

/// A distribution `q` on `X x Y`, flattened as `x * |Y| + y`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    space: Arc<ProductSpace>,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(space: Arc<ProductSpace>, mut probs: Vec<f64>) -> Result<Self> {
        if probs.len() != space.joint_size() {
            return Err(Error::InvalidDistribution(format!(
                "expected {} joint probabilities, got {}",
                space.joint_size(),
                probs.len()
            )));
        }
        check_finite_nonneg(&probs, "joint distribution").map_err(Error::InvalidDistribution)?;
        renormalize(&mut probs, "joint distribution").map_err(Error::InvalidDistribution)?;
        Ok(JointDistribution { space, probs })
    }

    pub(crate) fn from_parts(space: Arc<ProductSpace>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), space.joint_size());
        JointDistribution { space, probs }
    }

    pub fn space(&self) -> &Arc<ProductSpace> {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.space.output_size() + y]
    }

    /// `q(x) = sum_y q(x, y)`
    pub fn input_marginal(&self) -> Vec<f64> {
        self.probs.chunks(self.space.output_size()).map(|r| r.iter().sum()).collect()
    }

    pub fn max_abs_diff(&self, other: &JointDistribution) -> f64 {
        max_abs_diff(&self.probs, &other.probs)
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

/// `pk(x, y) = p(x) k(x; y)`
pub fn compose(p: &InputDistribution, k: &Channel) -> Result<JointDistribution> {
    ensure_same(p.space(), k.space())?;
    let ny = k.space.output_size();
    let mut probs = Vec::with_capacity(k.rows.len());
    for (x, &px) in p.probs.iter().enumerate() {
        probs.extend(k.rows[x * ny..(x + 1) * ny].iter().map(|&v| px * v));
    }
    Ok(JointDistribution::from_parts(k.space.clone(), probs))
}

/// Splits `q` into its input marginal and the conditional channel `q(y | x)`.
pub fn disintegrate(q: &JointDistribution) -> Result<(InputDistribution, Channel)> {
    let ny = q.space.output_size();
    let px = q.input_marginal();
    if let Some(x) = px.iter().position(|&v| v <= POSITIVITY_THRESHOLD) {
        return Err(Error::DegenerateInput { x });
    }
    let mut rows = Vec::with_capacity(q.probs.len());
    for (x, &m) in px.iter().enumerate() {
        rows.extend(q.probs[x * ny..(x + 1) * ny].iter().map(|&v| v / m));
    }
    let p = InputDistribution::new(q.space.clone(), px)?;
    Ok((p, Channel::from_parts(q.space.clone(), rows)))
}

/// Sums `q` over every factor outside `spec`, giving a joint on `X_I x Y_J`.
pub fn joint_marginal(q: &JointDistribution, spec: &JointSpec) -> Result<JointDistribution> {
    let proj = Projector::new(&q.space, spec)?;
    Ok(JointDistribution::from_parts(proj.reduced().clone(), project_joint(&proj, &q.space, &q.probs)))
}

pub(crate) fn project_joint(proj: &Projector, space: &ProductSpace, values: &[f64]) -> Vec<f64> {
    let ny = space.output_size();
    let red_ny = proj.reduced().output_size();
    let mut out = vec![0.0; proj.reduced().joint_size()];
    for (x, row) in values.chunks(ny).enumerate() {
        let base = proj.input(x) * red_ny;
        for (&v, &yj) in row.iter().zip(proj.output_map()) {
            out[base + yj] += v;
        }
    }
    out
}

/// The channel marginal `k(x_I; y_J)` under `p`, as a reusable operator.
///
/// Holds the conditional weights `p(x_{I^c} | x_I)` so repeated marginals of
/// different channels against the same `p` and `(I, J)` skip the setup.
#[derive(Debug, Clone)]
pub struct MarginalOperator {
    space: Arc<ProductSpace>,
    proj: Projector,
    input_marginal: Vec<f64>,
    cond_weights: Vec<f64>,
}

impl MarginalOperator {
    pub fn new(p: &InputDistribution, spec: &MarginalSpec) -> Result<Self> {
        let proj = Projector::new(p.space(), spec.joint())?;
        let mut input_marginal = vec![0.0; proj.reduced().input_size()];
        for (x, &px) in p.probs.iter().enumerate() {
            input_marginal[proj.input(x)] += px;
        }
        let cond_weights = p
            .probs
            .iter()
            .enumerate()
            .map(|(x, &px)| px / input_marginal[proj.input(x)])
            .collect();
        Ok(MarginalOperator { space: p.space().clone(), proj, input_marginal, cond_weights })
    }

    pub fn projector(&self) -> &Projector {
        &self.proj
    }

    /// The reduced space `X_I x Y_J`.
    pub fn reduced(&self) -> &Arc<ProductSpace> {
        self.proj.reduced()
    }

    /// `p(x_I)`
    pub fn input_marginal(&self) -> &[f64] {
        &self.input_marginal
    }

    pub fn apply(&self, k: &Channel) -> Result<Channel> {
        ensure_same(&self.space, k.space())?;
        Ok(Channel::from_parts(self.reduced().clone(), self.apply_raw(&k.rows)))
    }

    /// `sum_{x_{I^c}, y_{J^c}} p(x_{I^c} | x_I) k(x; y)` over raw row-major values.
    pub(crate) fn apply_raw(&self, rows: &[f64]) -> Vec<f64> {
        let ny = self.space.output_size();
        let red_ny = self.reduced().output_size();
        let mut out = vec![0.0; self.reduced().joint_size()];
        for (x, row) in rows.chunks(ny).enumerate() {
            let w = self.cond_weights[x];
            let base = self.proj.input(x) * red_ny;
            for (&v, &yj) in row.iter().zip(self.proj.output_map()) {
                out[base + yj] += w * v;
            }
        }
        out
    }
}

/// `k(x_I; y_J) = sum_{x_{I^c}, y_{J^c}} p(x_{I^c} | x_I) k(x; y)`.
///
/// With `I` empty the result has a single row, the output marginal of `pk`.
pub fn channel_marginal(p: &InputDistribution, k: &Channel, spec: &MarginalSpec) -> Result<Channel> {
    ensure_same(p.space(), k.space())?;
    MarginalOperator::new(p, spec)?.apply(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::JointSpec;

    fn space(ins: &[usize], outs: &[usize]) -> Arc<ProductSpace> {
        ProductSpace::new(ins.to_vec(), outs.to_vec()).unwrap()
    }

    fn xor(s: &Arc<ProductSpace>) -> Channel {
        Channel::from_rows(s.clone(), &[vec![1., 0.], vec![0., 1.], vec![0., 1.], vec![1., 0.]]).unwrap()
    }

    fn and(s: &Arc<ProductSpace>) -> Channel {
        Channel::from_rows(s.clone(), &[vec![1., 0.], vec![1., 0.], vec![1., 0.], vec![0., 1.]]).unwrap()
    }

    #[test]
    fn compose_identity() {
        let s = space(&[2], &[2]);
        let p = InputDistribution::uniform(s.clone());
        let k = Channel::from_rows(s, &[vec![1., 0.], vec![0., 1.]]).unwrap();
        assert_eq!(compose(&p, &k).unwrap().probs(), &[0.5, 0., 0., 0.5]);
    }

    #[test]
    fn compose_xor() {
        let s = space(&[2, 2], &[2]);
        let q = compose(&InputDistribution::uniform(s.clone()), &xor(&s)).unwrap();
        assert_eq!(q.probs(), &[0.25, 0., 0., 0.25, 0., 0.25, 0.25, 0.]);
    }

    #[test]
    fn disintegrate_examples() {
        let s = space(&[2], &[2]);
        let q = JointDistribution::new(s.clone(), vec![0.5, 0., 0., 0.5]).unwrap();
        let (p, k) = disintegrate(&q).unwrap();
        assert_eq!(p.probs(), &[0.5, 0.5]);
        assert_eq!(k.as_slice(), &[1., 0., 0., 1.]);

        let q = JointDistribution::new(s.clone(), vec![0.25; 4]).unwrap();
        let (_, k) = disintegrate(&q).unwrap();
        assert_eq!(k.as_slice(), &[0.5; 4]);

        let q = JointDistribution::new(s, vec![0., 0., 0.5, 0.5]).unwrap();
        assert_eq!(disintegrate(&q).unwrap_err(), Error::DegenerateInput { x: 0 });
    }

    #[test]
    fn joint_marginal_examples() {
        let s = space(&[2, 2], &[2]);
        let q = JointDistribution::new(s.clone(), vec![0.125; 8]).unwrap();
        let m = joint_marginal(&q, &JointSpec::new(vec![0], vec![0])).unwrap();
        assert_eq!(m.probs(), &[0.25; 4]);

        let q = compose(&InputDistribution::uniform(s.clone()), &and(&s)).unwrap();
        let m = joint_marginal(&q, &JointSpec::new(vec![], vec![0])).unwrap();
        assert_eq!(m.probs(), &[0.75, 0.25]);

        let m = joint_marginal(&q, &JointSpec::full(&s)).unwrap();
        assert_eq!(m.probs(), q.probs());
    }

    #[test]
    fn channel_marginal_of_and() {
        let s = space(&[2, 2], &[2]);
        let p = InputDistribution::uniform(s.clone());
        let m = channel_marginal(&p, &and(&s), &MarginalSpec::new(vec![0], vec![0]).unwrap()).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(1, 1), 0.5);
        assert_eq!(m.space().input_cards(), &[2]);
    }

    #[test]
    fn channel_marginal_of_constant_extension() {
        // k depends on x_0 and y_0 only; its ({0},{0}) marginal is that restriction
        let s = space(&[2, 3], &[2, 2]);
        let base = [[0.2, 0.8], [0.7, 0.3]];
        let mut rows = Vec::new();
        for x in 0..s.input_size() {
            let x0 = s.decode_input(x)[0];
            for y in 0..s.output_size() {
                let y0 = s.decode_output(y)[0];
                rows.push(base[x0][y0] / 2.0);
            }
        }
        let k = Channel::new(s.clone(), rows).unwrap();
        let p = InputDistribution::new(s.clone(), vec![0.1, 0.2, 0.05, 0.3, 0.15, 0.2]).unwrap();
        let m = channel_marginal(&p, &k, &MarginalSpec::new(vec![0], vec![0]).unwrap()).unwrap();
        for (x0, row) in base.iter().enumerate() {
            for (y0, &v) in row.iter().enumerate() {
                assert!((m.get(x0, y0) - v).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn empty_inputs_give_output_marginal() {
        let s = space(&[2, 2], &[2]);
        let p = InputDistribution::uniform(s.clone());
        let m = channel_marginal(&p, &and(&s), &MarginalSpec::new(vec![], vec![0]).unwrap()).unwrap();
        assert_eq!(m.as_slice(), &[0.75, 0.25]);
    }

    #[test]
    fn validation() {
        let s = space(&[2], &[2]);
        assert!(InputDistribution::new(s.clone(), vec![1.0, 0.0]).is_err());
        assert!(InputDistribution::new(s.clone(), vec![0.5, 0.6]).is_err());
        let p = InputDistribution::new(s.clone(), vec![0.5 + 4e-13, 0.5]).unwrap();
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(Channel::new(s.clone(), vec![0.5, 0.5, -0.1, 1.1]).is_err());
        assert!(Channel::new(s.clone(), vec![0.5, 0.5, 0.1, 0.1]).is_err());
        assert!(Channel::from_rows(s.clone(), &[vec![1.0], vec![1.0]]).is_err());
        assert!(JointDistribution::new(s.clone(), vec![f64::NAN, 0., 0., 1.]).is_err());
        let other = space(&[3], &[2]);
        assert!(matches!(
            compose(&InputDistribution::uniform(other), &Channel::uniform(s)),
            Err(Error::SpaceMismatch(_))
        ));
    }
}
