//! Shared test helpers: random instances and brute-force oracles that do not
//! go through the library's marginal or scaling code.
#![allow(dead_code)]

use std::sync::Arc;

use chanproj::{Channel, InputDistribution, JointDistribution, MarginalSpec, ProductSpace};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_space(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize, max_card: usize) -> Arc<ProductSpace> {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    let ins = (0..n).map(|_| rng.gen_range(2..=max_card)).collect();
    let outs = (0..m).map(|_| rng.gen_range(2..=max_card)).collect();
    ProductSpace::new(ins, outs).unwrap()
}

fn positive_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

pub fn random_input(rng: &mut ChaCha8Rng, space: &Arc<ProductSpace>) -> InputDistribution {
    InputDistribution::new(space.clone(), positive_weights(rng, space.input_size())).unwrap()
}

pub fn random_channel(rng: &mut ChaCha8Rng, space: &Arc<ProductSpace>) -> Channel {
    let rows: Vec<f64> = (0..space.input_size()).flat_map(|_| positive_weights(rng, space.output_size())).collect();
    Channel::new(space.clone(), rows).unwrap()
}

pub fn random_joint(rng: &mut ChaCha8Rng, space: &Arc<ProductSpace>) -> JointDistribution {
    JointDistribution::new(space.clone(), positive_weights(rng, space.joint_size())).unwrap()
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize, nonempty: bool) -> Vec<usize> {
    loop {
        let s: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        if !nonempty || !s.is_empty() {
            return s;
        }
    }
}

pub fn random_spec(rng: &mut ChaCha8Rng, space: &ProductSpace) -> MarginalSpec {
    let i = random_subset(rng, space.n_inputs(), false);
    let j = random_subset(rng, space.n_outputs(), true);
    MarginalSpec::new(i, j).unwrap()
}

pub fn random_specs(rng: &mut ChaCha8Rng, space: &ProductSpace, max_len: usize) -> Vec<MarginalSpec> {
    let n = rng.gen_range(1..=max_len);
    (0..n).map(|_| random_spec(rng, space)).collect()
}

pub fn shuffled<T: Clone>(rng: &mut ChaCha8Rng, v: &[T]) -> Vec<T> {
    let mut out = v.to_vec();
    out.shuffle(rng);
    out
}

/// Reduced cell index of `(x, y)` computed from decoded coordinates.
pub fn direct_cell(space: &ProductSpace, inputs: &[usize], outputs: &[usize], x: usize, y: usize) -> usize {
    let xc = space.decode_input(x);
    let yc = space.decode_output(y);
    let mut idx = 0;
    for &i in inputs {
        idx = idx * space.input_cards()[i] + xc[i];
    }
    for &j in outputs {
        idx = idx * space.output_cards()[j] + yc[j];
    }
    idx
}

fn reduced_sizes(space: &ProductSpace, inputs: &[usize], outputs: &[usize]) -> (usize, usize) {
    let xi: usize = inputs.iter().map(|&i| space.input_cards()[i]).product();
    let yj: usize = outputs.iter().map(|&j| space.output_cards()[j]).product();
    (xi, yj)
}

/// `q(x_I, y_J)` by brute-force summation.
pub fn direct_joint_marginal(q: &JointDistribution, inputs: &[usize], outputs: &[usize]) -> Vec<f64> {
    let s = q.space();
    let (xi, yj) = reduced_sizes(s, inputs, outputs);
    let mut out = vec![0.0; xi * yj];
    for x in 0..s.input_size() {
        for y in 0..s.output_size() {
            out[direct_cell(s, inputs, outputs, x, y)] += q.get(x, y);
        }
    }
    out
}

/// `k(x_I; y_J) = sum p(x_{I^c} | x_I) k(x; y)` with the conditional formed explicitly.
pub fn direct_channel_marginal(p: &InputDistribution, k: &Channel, inputs: &[usize], outputs: &[usize]) -> Vec<f64> {
    let s = k.space();
    let (xi, yj) = reduced_sizes(s, inputs, outputs);
    let mut p_i = vec![0.0; xi];
    for x in 0..s.input_size() {
        p_i[direct_cell(s, inputs, &[], x, 0)] += p.probs()[x];
    }
    let mut out = vec![0.0; xi * yj];
    for x in 0..s.input_size() {
        let cond = p.probs()[x] / p_i[direct_cell(s, inputs, &[], x, 0)];
        for y in 0..s.output_size() {
            out[direct_cell(s, inputs, outputs, x, y)] += cond * k.get(x, y);
        }
    }
    out
}

/// `D_p(k || m)` summed directly, `+inf` on a support violation.
pub fn direct_kl_channel(p: &[f64], k: &[f64], m: &[f64], ny: usize) -> f64 {
    let mut sum = 0.0;
    for (i, (&a, &b)) in k.iter().zip(m).enumerate() {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            sum += p[i / ny] * a * (a / b).ln();
        }
    }
    sum
}

pub fn direct_kl(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .filter(|(&u, _)| u > 0.0)
        .map(|(&u, &v)| if v > 0.0 { u * (u / v).ln() } else { f64::INFINITY })
        .sum()
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

/// `k_theta(x; y) ∝ k0(x; y) exp(sum_j theta_j f_j(x, y))` where the `f_j`
/// are the indicator functions of the reduced cells of each spec.
pub struct ThetaFamily<'a> {
    k0: &'a Channel,
    /// For every `(x, y)`, the basis indices that are 1 there.
    active: Vec<Vec<usize>>,
    pub dim: usize,
}

impl<'a> ThetaFamily<'a> {
    pub fn new(k0: &'a Channel, specs: &[MarginalSpec]) -> Self {
        let s = k0.space();
        let mut offsets = Vec::new();
        let mut dim = 0;
        for spec in specs {
            offsets.push(dim);
            let (xi, yj) = reduced_sizes(s, spec.inputs(), spec.outputs());
            dim += xi * yj;
        }
        let mut active = Vec::new();
        for x in 0..s.input_size() {
            for y in 0..s.output_size() {
                active.push(
                    specs
                        .iter()
                        .zip(&offsets)
                        .map(|(spec, &off)| off + direct_cell(s, spec.inputs(), spec.outputs(), x, y))
                        .collect(),
                );
            }
        }
        ThetaFamily { k0, active, dim }
    }

    pub fn member(&self, theta: &[f64]) -> Vec<f64> {
        let ny = self.k0.space().output_size();
        let mut out = Vec::with_capacity(self.active.len());
        for x in 0..self.k0.space().input_size() {
            let row: Vec<f64> = (0..ny)
                .map(|y| {
                    let e: f64 = self.active[x * ny + y].iter().map(|&j| theta[j]).sum();
                    self.k0.get(x, y) * e.exp()
                })
                .collect();
            let z: f64 = row.iter().sum();
            out.extend(row.into_iter().map(|v| v / z));
        }
        out
    }
}

/// `min_theta D_p(k || k_theta)` by coordinate descent with step halving,
/// started at `theta = 0`.
pub fn theta_oracle(p: &InputDistribution, k: &Channel, k0: &Channel, specs: &[MarginalSpec]) -> f64 {
    let fam = ThetaFamily::new(k0, specs);
    assert!(fam.dim <= 12, "oracle dimension {} too large", fam.dim);
    let ny = k.space().output_size();
    let objective = |theta: &[f64]| direct_kl_channel(p.probs(), k.as_slice(), &fam.member(theta), ny);

    let mut theta = vec![0.0; fam.dim];
    let mut best = objective(&theta);
    let mut step = 1.0;
    while step > 1e-10 {
        let mut improved = false;
        for j in 0..fam.dim {
            for dir in [1.0, -1.0] {
                loop {
                    theta[j] += dir * step;
                    let f = objective(&theta);
                    if f < best {
                        best = f;
                        improved = true;
                    } else {
                        theta[j] -= dir * step;
                        break;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}
