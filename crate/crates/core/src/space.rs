//! Finite product spaces and the index bookkeeping behind marginals.
//!
//! Every flattened index is mixed-radix with the last coordinate varying
//! fastest. Joint cells are laid out input-major: `cell = x * |Y| + y`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Cardinalities of the input factors `X_1..X_N` and output factors `Y_1..Y_M`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProductSpace {
    input_cards: Vec<usize>,
    output_cards: Vec<usize>,
    input_size: usize,
    output_size: usize,
}

impl ProductSpace {
    /// Builds a space with at least one input and one output factor.
    pub fn new(input_cards: Vec<usize>, output_cards: Vec<usize>) -> Result<Arc<Self>> {
        if input_cards.is_empty() {
            return Err(Error::InvalidSpace("at least one input factor is required".into()));
        }
        if output_cards.is_empty() {
            return Err(Error::InvalidSpace("at least one output factor is required".into()));
        }
        Self::build(input_cards, output_cards).map(Arc::new)
    }

    /// Reduced spaces may have no factors on either side; an empty side has a
    /// single (trivial) state.
    fn build(input_cards: Vec<usize>, output_cards: Vec<usize>) -> Result<Self> {
        let size = |cards: &[usize], side: &str| -> Result<usize> {
            cards.iter().enumerate().try_fold(1usize, |acc, (i, &c)| {
                if c == 0 {
                    return Err(Error::InvalidSpace(format!("{side} factor {i} has cardinality 0")));
                }
                acc.checked_mul(c)
                    .ok_or_else(|| Error::InvalidSpace(format!("{side} size overflows")))
            })
        };
        let input_size = size(&input_cards, "input")?;
        let output_size = size(&output_cards, "output")?;
        input_size
            .checked_mul(output_size)
            .ok_or_else(|| Error::InvalidSpace("joint size overflows".into()))?;
        Ok(ProductSpace { input_cards, output_cards, input_size, output_size })
    }

    pub fn input_cards(&self) -> &[usize] {
        &self.input_cards
    }

    pub fn output_cards(&self) -> &[usize] {
        &self.output_cards
    }

    pub fn n_inputs(&self) -> usize {
        self.input_cards.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.output_cards.len()
    }

    /// `|X|`
    pub fn input_size(&self) -> usize {
        self.input_size
    }

    /// `|Y|`
    pub fn output_size(&self) -> usize {
        self.output_size
    }

    /// `|X| * |Y|`
    pub fn joint_size(&self) -> usize {
        self.input_size * self.output_size
    }

    pub fn encode_input(&self, coords: &[usize]) -> usize {
        encode(&self.input_cards, coords)
    }

    pub fn decode_input(&self, index: usize) -> Vec<usize> {
        decode(&self.input_cards, index)
    }

    pub fn encode_output(&self, coords: &[usize]) -> usize {
        encode(&self.output_cards, coords)
    }

    pub fn decode_output(&self, index: usize) -> Vec<usize> {
        decode(&self.output_cards, index)
    }

    /// The space `X_I x Y_J` obtained by keeping the listed factors.
    pub fn restrict(&self, spec: &JointSpec) -> Result<Arc<ProductSpace>> {
        spec.validate(self)?;
        let ins = spec.inputs.iter().map(|&i| self.input_cards[i]).collect();
        let outs = spec.outputs.iter().map(|&j| self.output_cards[j]).collect();
        Self::build(ins, outs).map(Arc::new)
    }
}

impl fmt::Display for ProductSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} -> {:?}", self.input_cards, self.output_cards)
    }
}

pub(crate) fn same_space(a: &Arc<ProductSpace>, b: &Arc<ProductSpace>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

pub(crate) fn ensure_same(a: &Arc<ProductSpace>, b: &Arc<ProductSpace>) -> Result<()> {
    if same_space(a, b) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch(format!("{a} vs {b}")))
    }
}

fn encode(cards: &[usize], coords: &[usize]) -> usize {
    assert_eq!(cards.len(), coords.len(), "coordinate count does not match factor count");
    cards.iter().zip(coords).fold(0, |acc, (&c, &v)| {
        assert!(v < c, "coordinate {v} out of range for cardinality {c}");
        acc * c + v
    })
}

fn decode(cards: &[usize], mut index: usize) -> Vec<usize> {
    let mut coords = vec![0; cards.len()];
    for (slot, &c) in coords.iter_mut().zip(cards).rev() {
        *slot = index % c;
        index /= c;
    }
    assert_eq!(index, 0, "index out of range");
    coords
}

/// A pair of factor subsets `(I, J)` selecting a joint marginal `X_I x Y_J`.
///
/// Either side may be empty; `JointSpec::inputs_only` with every input is the
/// input-marginal constraint used for input scaling.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointSpec {
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

impl JointSpec {
    pub fn new(mut inputs: Vec<usize>, mut outputs: Vec<usize>) -> Self {
        inputs.sort_unstable();
        inputs.dedup();
        outputs.sort_unstable();
        outputs.dedup();
        JointSpec { inputs, outputs }
    }

    /// Every input factor of `space`, no outputs.
    pub fn all_inputs(space: &ProductSpace) -> Self {
        JointSpec { inputs: (0..space.n_inputs()).collect(), outputs: Vec::new() }
    }

    /// Every factor of `space`.
    pub fn full(space: &ProductSpace) -> Self {
        JointSpec {
            inputs: (0..space.n_inputs()).collect(),
            outputs: (0..space.n_outputs()).collect(),
        }
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn validate(&self, space: &ProductSpace) -> Result<()> {
        if let Some(&i) = self.inputs.iter().find(|&&i| i >= space.n_inputs()) {
            return Err(Error::InvalidSpec(format!(
                "input index {i} out of range for {} inputs",
                space.n_inputs()
            )));
        }
        if let Some(&j) = self.outputs.iter().find(|&&j| j >= space.n_outputs()) {
            return Err(Error::InvalidSpec(format!(
                "output index {j} out of range for {} outputs",
                space.n_outputs()
            )));
        }
        Ok(())
    }
}

/// A channel marginal selector `(I, J)` with `J` nonempty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MarginalSpec(JointSpec);

impl MarginalSpec {
    pub fn new(inputs: Vec<usize>, outputs: Vec<usize>) -> Result<Self> {
        if outputs.is_empty() {
            return Err(Error::InvalidSpec("output subset J must be nonempty".into()));
        }
        Ok(MarginalSpec(JointSpec::new(inputs, outputs)))
    }

    /// `(I, J) = ([N], [M])`, which pins the whole channel.
    pub fn full(space: &ProductSpace) -> Self {
        MarginalSpec(JointSpec::full(space))
    }

    pub fn inputs(&self) -> &[usize] {
        self.0.inputs()
    }

    pub fn outputs(&self) -> &[usize] {
        self.0.outputs()
    }

    pub fn joint(&self) -> &JointSpec {
        &self.0
    }

    pub fn validate(&self, space: &ProductSpace) -> Result<()> {
        self.0.validate(space)
    }
}

impl From<MarginalSpec> for JointSpec {
    fn from(spec: MarginalSpec) -> Self {
        spec.0
    }
}

/// Precomputed maps from full input/output indices to reduced indices.
#[derive(Debug, Clone)]
pub struct Projector {
    reduced: Arc<ProductSpace>,
    input_map: Vec<usize>,
    output_map: Vec<usize>,
}

impl Projector {
    pub fn new(space: &ProductSpace, spec: &JointSpec) -> Result<Self> {
        let reduced = space.restrict(spec)?;
        let input_map = reduce_map(&space.input_cards, spec.inputs());
        let output_map = reduce_map(&space.output_cards, spec.outputs());
        Ok(Projector { reduced, input_map, output_map })
    }

    pub fn reduced(&self) -> &Arc<ProductSpace> {
        &self.reduced
    }

    /// Reduced input index `x_I` of full input index `x`.
    pub fn input(&self, x: usize) -> usize {
        self.input_map[x]
    }

    /// Reduced output index `y_J` of full output index `y`.
    pub fn output(&self, y: usize) -> usize {
        self.output_map[y]
    }

    /// Reduced joint cell of the full cell `(x, y)`.
    pub fn cell(&self, x: usize, y: usize) -> usize {
        self.input_map[x] * self.reduced.output_size() + self.output_map[y]
    }

    pub(crate) fn output_map(&self) -> &[usize] {
        &self.output_map
    }
}

fn reduce_map(cards: &[usize], keep: &[usize]) -> Vec<usize> {
    let size: usize = cards.iter().product();
    let kept_cards: Vec<usize> = keep.iter().map(|&i| cards[i]).collect();
    (0..size)
        .map(|idx| {
            let coords = decode(cards, idx);
            let kept: Vec<usize> = keep.iter().map(|&i| coords[i]).collect();
            encode(&kept_cards, &kept)
        })
        .collect()
}
