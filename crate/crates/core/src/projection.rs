//! Iterative-scaling drivers.
//!
//! [`channel_ipf`] cycles normalized channel scalings and converges to the
//! I-projection of the start channel onto the channels sharing the
//! prescription's marginals. Started from a reference channel `k0` with the
//! prescription `k`, that limit is also the rI-projection of `k` onto the
//! exponential family through `k0` ([`ri_project`]).
//!
//! [`joint_ipf`] is classical iterative proportional fitting on joints. It is
//! kept separate from the channel path and serves as the oracle for it: with
//! the constraint list from [`lifted_constraints`], every second joint iterate
//! equals `p * k^j`.

use std::time::Instant;

use crate::divergence::{kl_channel, kl_joint, Divergence, LogBase};
use crate::error::{Error, Result};
use crate::prob::{compose, joint_marginal, max_abs_diff, Channel, InputDistribution, JointDistribution, MarginalOperator};
use crate::scaling::{input_prescription, ij_scale_with, joint_scale_with, normalize_rows};
use crate::space::{ensure_same, JointSpec, MarginalSpec, Projector};

/// An ordered list of marginal constraints and the channel whose marginals
/// they prescribe.
#[derive(Debug, Clone)]
pub struct FamilySpec {
    specs: Vec<MarginalSpec>,
    prescription: Channel,
}

impl FamilySpec {
    pub fn new(specs: Vec<MarginalSpec>, prescription: Channel) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidSpec("family needs at least one marginal constraint".into()));
        }
        for (i, s) in specs.iter().enumerate() {
            s.validate(prescription.space())
                .map_err(|e| Error::InvalidSpec(format!("constraint {i}: {e}")))?;
        }
        Ok(FamilySpec { specs, prescription })
    }

    pub fn specs(&self) -> &[MarginalSpec] {
        &self.specs
    }

    pub fn prescription(&self) -> &Channel {
        &self.prescription
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the L-infinity marginal residual drops to this value.
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Record divergences per sweep (costs one divergence evaluation each).
    pub trace: bool,
    pub log_base: LogBase,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tolerance: 1e-9, max_sweeps: 100_000, trace: false, log_base: LogBase::Nats }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidSpec(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidSpec("max_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

/// One row of a convergence trace; `sweep` counts full passes over the constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub sweep: usize,
    /// `D_p(k^j || kbar)` (channel runs only).
    pub divergence_to_prescription: Option<Divergence>,
    /// Divergence from the caller's target to the iterate, when one was given.
    pub divergence_to_target: Option<Divergence>,
    pub residual: f64,
    /// Cumulative scaling time, excluding trace bookkeeping.
    pub elapsed_ns: u128,
}

#[derive(Debug, Clone)]
pub struct ProjectionResult {
    pub limit: Channel,
    pub sweeps_used: usize,
    pub converged: bool,
    pub residual: f64,
    pub trace: Vec<SweepRecord>,
    /// `D_p(kbar || k0) - D_p(kbar || l) - D_p(l || k0)` when all three are finite.
    pub pythagoras_defect: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct JointProjectionResult {
    pub limit: JointDistribution,
    pub sweeps_used: usize,
    pub converged: bool,
    pub residual: f64,
    pub trace: Vec<SweepRecord>,
}

impl JointProjectionResult {
    /// `D(qbar || q0) - D(qbar || q) - D(q || q0)` for a member `qbar` of the
    /// constraint family.
    pub fn pythagoras_defect(&self, q0: &JointDistribution, qbar: &JointDistribution) -> Result<Option<f64>> {
        let whole = kl_joint(qbar, q0)?;
        let first = kl_joint(qbar, &self.limit)?;
        let second = kl_joint(&self.limit, q0)?;
        Ok(match (whole, first, second) {
            (Divergence::Finite(a), Divergence::Finite(b), Divergence::Finite(c)) => Some(a - b - c),
            _ => None,
        })
    }
}

struct ChannelConstraint {
    op: MarginalOperator,
    target: Channel,
    /// `p(x_I) kbar(x_I; y_J)`, the joint form of the prescription.
    weighted_target: Vec<f64>,
}

/// Step-by-step normalized channel scaling over a [`FamilySpec`].
pub struct ChannelScaler {
    p: InputDistribution,
    constraints: Vec<ChannelConstraint>,
    current: Channel,
    steps: usize,
}

impl ChannelScaler {
    pub fn new(k0: &Channel, p: &InputDistribution, family: &FamilySpec) -> Result<Self> {
        ensure_same(p.space(), k0.space())?;
        ensure_same(p.space(), family.prescription().space())?;
        let constraints = family
            .specs()
            .iter()
            .map(|spec| {
                let op = MarginalOperator::new(p, spec)?;
                let target = op.apply(family.prescription())?;
                let weighted_target = weight_by_input(&op, target.as_slice());
                Ok(ChannelConstraint { op, target, weighted_target })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ChannelScaler { p: p.clone(), constraints, current: k0.clone(), steps: 0 })
    }

    /// Applies the next constraint in cyclic order.
    pub fn step(&mut self) -> Result<&Channel> {
        let c = &self.constraints[self.steps % self.constraints.len()];
        let raw = ij_scale_with(&c.op, &self.current, &c.target)?;
        self.current = normalize_rows(&raw)?.0;
        self.steps += 1;
        Ok(&self.current)
    }

    /// One full pass over the constraints.
    pub fn sweep(&mut self) -> Result<&Channel> {
        for _ in 0..self.constraints.len() {
            self.step()?;
        }
        Ok(&self.current)
    }

    pub fn current(&self) -> &Channel {
        &self.current
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn input(&self) -> &InputDistribution {
        &self.p
    }

    /// `max |p(x_I) (k(x_I; y_J) - kbar(x_I; y_J))|` over constraints and cells.
    pub fn residual(&self) -> f64 {
        self.constraints
            .iter()
            .map(|c| {
                let cur = weight_by_input(&c.op, &c.op.apply_raw(self.current.as_slice()));
                max_abs_diff(&cur, &c.weighted_target)
            })
            .fold(0.0, f64::max)
    }
}

fn weight_by_input(op: &MarginalOperator, reduced_rows: &[f64]) -> Vec<f64> {
    let ny = op.reduced().output_size();
    reduced_rows
        .chunks(ny)
        .zip(op.input_marginal())
        .flat_map(|(row, &pi)| row.iter().map(move |&v| pi * v))
        .collect()
}

/// Cyclic normalized channel scaling from `k0` toward the marginals of
/// `family.prescription()`.
pub fn channel_ipf(
    k0: &Channel,
    p: &InputDistribution,
    family: &FamilySpec,
    opts: &SolverOptions,
) -> Result<ProjectionResult> {
    channel_ipf_tracking(k0, p, family, opts, None)
}

/// [`channel_ipf`] that also traces `D_p(target || k^j)` when `opts.trace` is set.
pub fn channel_ipf_tracking(
    k0: &Channel,
    p: &InputDistribution,
    family: &FamilySpec,
    opts: &SolverOptions,
    target: Option<&Channel>,
) -> Result<ProjectionResult> {
    opts.validate()?;
    if let Some(t) = target {
        ensure_same(p.space(), t.space())?;
    }
    let kbar = family.prescription();
    let mut scaler = ChannelScaler::new(k0, p, family)?;
    let mut trace = Vec::new();
    let mut elapsed = 0u128;
    let mut best = (f64::INFINITY, k0.clone());
    let mut sweeps = 0;
    let mut converged = false;

    while sweeps < opts.max_sweeps {
        let start = Instant::now();
        scaler.sweep()?;
        let residual = scaler.residual();
        elapsed += start.elapsed().as_nanos();
        sweeps += 1;

        if opts.trace {
            let current = scaler.current();
            trace.push(SweepRecord {
                sweep: sweeps,
                divergence_to_prescription: Some(kl_channel(p, current, kbar)?),
                divergence_to_target: target.map(|t| kl_channel(p, t, current)).transpose()?,
                residual,
                elapsed_ns: elapsed,
            });
        }
        if residual <= best.0 {
            best = (residual, scaler.current().clone());
        }
        if residual <= opts.tolerance {
            converged = true;
            break;
        }
    }

    let (residual, limit) = best;
    let pythagoras_defect = match (
        kl_channel(p, kbar, k0)?,
        kl_channel(p, kbar, &limit)?,
        kl_channel(p, &limit, k0)?,
    ) {
        (Divergence::Finite(a), Divergence::Finite(b), Divergence::Finite(c)) => Some(a - b - c),
        _ => None,
    };
    Ok(ProjectionResult { limit, sweeps_used: sweeps, converged, residual, trace, pythagoras_defect })
}

/// A joint-marginal constraint: the `(I, J)`-marginal must equal `prescribed`.
#[derive(Debug, Clone)]
pub struct JointConstraint {
    pub spec: JointSpec,
    pub prescribed: JointDistribution,
}

impl JointConstraint {
    pub fn new(spec: JointSpec, prescribed: JointDistribution) -> Self {
        JointConstraint { spec, prescribed }
    }

    /// The constraint that `q` satisfies on `spec`.
    pub fn from_joint(q: &JointDistribution, spec: JointSpec) -> Result<Self> {
        let prescribed = joint_marginal(q, &spec)?;
        Ok(JointConstraint { spec, prescribed })
    }
}

/// Step-by-step classical iterative proportional fitting.
pub struct JointScaler {
    constraints: Vec<(Projector, JointDistribution)>,
    current: JointDistribution,
    steps: usize,
}

impl JointScaler {
    pub fn new(q0: &JointDistribution, constraints: &[JointConstraint]) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::InvalidSpec("at least one joint constraint is required".into()));
        }
        let constraints = constraints
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let proj = Projector::new(q0.space(), &c.spec)
                    .map_err(|e| Error::InvalidSpec(format!("constraint {i}: {e}")))?;
                ensure_same(proj.reduced(), c.prescribed.space())?;
                Ok((proj, c.prescribed.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(JointScaler { constraints, current: q0.clone(), steps: 0 })
    }

    pub fn step(&mut self) -> Result<&JointDistribution> {
        let (proj, prescribed) = &self.constraints[self.steps % self.constraints.len()];
        self.current = joint_scale_with(proj, &self.current, prescribed)?;
        self.steps += 1;
        Ok(&self.current)
    }

    pub fn sweep(&mut self) -> Result<&JointDistribution> {
        for _ in 0..self.constraints.len() {
            self.step()?;
        }
        Ok(&self.current)
    }

    pub fn current(&self) -> &JointDistribution {
        &self.current
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `max |q(x_I, y_J) - prescribed(x_I, y_J)|` over constraints and cells.
    pub fn residual(&self) -> f64 {
        let space = self.current.space();
        self.constraints
            .iter()
            .map(|(proj, prescribed)| {
                let cur = crate::prob::project_joint(proj, space, self.current.probs());
                max_abs_diff(&cur, prescribed.probs())
            })
            .fold(0.0, f64::max)
    }
}

pub fn joint_ipf(
    q0: &JointDistribution,
    constraints: &[JointConstraint],
    opts: &SolverOptions,
) -> Result<JointProjectionResult> {
    joint_ipf_tracking(q0, constraints, opts, None)
}

/// [`joint_ipf`] that also traces `D(target || q^j)` when `opts.trace` is set.
pub fn joint_ipf_tracking(
    q0: &JointDistribution,
    constraints: &[JointConstraint],
    opts: &SolverOptions,
    target: Option<&JointDistribution>,
) -> Result<JointProjectionResult> {
    opts.validate()?;
    if let Some(t) = target {
        ensure_same(q0.space(), t.space())?;
    }
    let mut scaler = JointScaler::new(q0, constraints)?;
    let mut trace = Vec::new();
    let mut elapsed = 0u128;
    let mut best = (f64::INFINITY, q0.clone());
    let mut sweeps = 0;
    let mut converged = false;

    while sweeps < opts.max_sweeps {
        let start = Instant::now();
        scaler.sweep()?;
        let residual = scaler.residual();
        elapsed += start.elapsed().as_nanos();
        sweeps += 1;

        if opts.trace {
            trace.push(SweepRecord {
                sweep: sweeps,
                divergence_to_prescription: None,
                divergence_to_target: target.map(|t| kl_joint(t, scaler.current())).transpose()?,
                residual,
                elapsed_ns: elapsed,
            });
        }
        if residual <= best.0 {
            best = (residual, scaler.current().clone());
        }
        if residual <= opts.tolerance {
            converged = true;
            break;
        }
    }

    let (residual, limit) = best;
    Ok(JointProjectionResult { limit, sweeps_used: sweeps, converged, residual, trace })
}

/// Constraints `[C_1, X, C_2, X, ...]` where `C_i` prescribes the joint
/// `(I_i, J_i)`-marginal of `p * kbar` and `X` rescales the input to `p`.
/// Joint iterate `2j` of this list equals `p * k^j` of [`channel_ipf`].
pub fn lifted_constraints(p: &InputDistribution, family: &FamilySpec) -> Result<Vec<JointConstraint>> {
    let qbar = compose(p, family.prescription())?;
    let input = JointConstraint::new(JointSpec::all_inputs(p.space()), input_prescription(p)?);
    let mut out = Vec::with_capacity(2 * family.specs().len());
    for spec in family.specs() {
        out.push(JointConstraint::from_joint(&qbar, spec.joint().clone())?);
        out.push(input.clone());
    }
    Ok(out)
}

/// Classical joint formulation of the same projection: `[C_1, ..., C_n, X]`,
/// with a single input rescaling per sweep.
pub fn standard_joint_constraints(p: &InputDistribution, family: &FamilySpec) -> Result<Vec<JointConstraint>> {
    let qbar = compose(p, family.prescription())?;
    let mut out = family
        .specs()
        .iter()
        .map(|spec| JointConstraint::from_joint(&qbar, spec.joint().clone()))
        .collect::<Result<Vec<_>>>()?;
    out.push(JointConstraint::new(JointSpec::all_inputs(p.space()), input_prescription(p)?));
    Ok(out)
}

/// Result of an rI-projection: the projection and `D_p(k || family)`.
#[derive(Debug, Clone)]
pub struct RiProjection {
    pub projection: ProjectionResult,
    pub divergence: Divergence,
}

impl RiProjection {
    pub fn limit(&self) -> &Channel {
        &self.projection.limit
    }
}

/// rI-projection of `k` onto the exponential family through `k0` generated
/// by the indicator functions of `specs`.
pub fn ri_project(
    k: &Channel,
    specs: &[MarginalSpec],
    k0: &Channel,
    p: &InputDistribution,
    opts: &SolverOptions,
) -> Result<RiProjection> {
    let family = FamilySpec::new(specs.to_vec(), k.clone())?;
    let projection = channel_ipf_tracking(k0, p, &family, opts, Some(k))?;
    let divergence = kl_channel(p, k, &projection.limit)?;
    Ok(RiProjection { projection, divergence })
}

/// The family member `k0(x; y) exp(sum_i phi_i(x_{I_i}, y_{J_i})) / Z(x)`.
///
/// `potentials[i]` holds `phi_i` on the reduced space of `specs[i]`,
/// flattened as `x_I * |Y_J| + y_J`.
pub fn exp_tilt(k0: &Channel, specs: &[MarginalSpec], potentials: &[Vec<f64>]) -> Result<Channel> {
    if specs.len() != potentials.len() {
        return Err(Error::Shape(format!("{} specs but {} potentials", specs.len(), potentials.len())));
    }
    let space = k0.space();
    let projs = specs
        .iter()
        .zip(potentials)
        .map(|(s, phi)| {
            let proj = Projector::new(space, s.joint())?;
            if phi.len() != proj.reduced().joint_size() {
                return Err(Error::Shape(format!(
                    "potential has {} entries, expected {}",
                    phi.len(),
                    proj.reduced().joint_size()
                )));
            }
            Ok(proj)
        })
        .collect::<Result<Vec<_>>>()?;

    let ny = space.output_size();
    let mut rows = Vec::with_capacity(space.joint_size());
    for x in 0..space.input_size() {
        let exponents: Vec<f64> = (0..ny)
            .map(|y| projs.iter().zip(potentials).map(|(pr, phi)| phi[pr.cell(x, y)]).sum())
            .collect();
        // shift by the row maximum before exponentiating
        let shift = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let row: Vec<f64> = k0.row(x).iter().zip(&exponents).map(|(&b, &e)| b * (e - shift).exp()).collect();
        let z: f64 = row.iter().sum();
        if !(z > 0.0) {
            return Err(Error::DegenerateRow { x });
        }
        rows.extend(row.into_iter().map(|v| v / z));
    }
    Ok(Channel::from_parts(space.clone(), rows))
}
