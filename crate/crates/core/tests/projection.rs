mod support;

use chanproj::{
    channel_ipf, channel_marginal, compose, disintegrate, exp_tilt, joint_ipf, joint_marginal, kl_channel,
    lifted_constraints, make_gate, ri_project, standard_joint_constraints, Channel, ChannelScaler, FamilySpec,
    Gate, InputDistribution, JointConstraint, JointScaler, JointSpec, MarginalSpec, ProductSpace, SolverOptions,
};
use rand::Rng;
use support::*;

fn tight() -> SolverOptions {
    SolverOptions { tolerance: 1e-13, max_sweeps: 20_000, ..Default::default() }
}

fn pair_specs() -> Vec<MarginalSpec> {
    vec![MarginalSpec::new(vec![0], vec![0]).unwrap(), MarginalSpec::new(vec![1], vec![0]).unwrap()]
}

#[test]
fn even_joint_iterates_track_channel_iterates() {
    let mut r = rng(11);
    for _ in 0..40 {
        let s = random_space(&mut r, 2, 2, 3);
        let p = random_input(&mut r, &s);
        let kbar = random_channel(&mut r, &s);
        let k0 = random_channel(&mut r, &s);
        let family = FamilySpec::new(random_specs(&mut r, &s, 3), kbar).unwrap();

        let mut channel = ChannelScaler::new(&k0, &p, &family).unwrap();
        let mut joint = JointScaler::new(&compose(&p, &k0).unwrap(), &lifted_constraints(&p, &family).unwrap()).unwrap();
        for _ in 0..60 {
            let k = channel.step().unwrap().clone();
            joint.step().unwrap();
            let q = joint.step().unwrap();
            assert!(compose(&p, &k).unwrap().max_abs_diff(q) < 1e-10);
        }
    }
}

#[test]
fn channel_limit_matches_classical_joint_limit() {
    let mut r = rng(12);
    for _ in 0..30 {
        let s = random_space(&mut r, 2, 2, 3);
        let p = random_input(&mut r, &s);
        let kbar = random_channel(&mut r, &s);
        let family = FamilySpec::new(random_specs(&mut r, &s, 3), kbar).unwrap();
        let k0 = Channel::uniform(s.clone());
        let ch = channel_ipf(&k0, &p, &family, &tight()).unwrap();
        let jt = joint_ipf(&compose(&p, &k0).unwrap(), &standard_joint_constraints(&p, &family).unwrap(), &tight())
            .unwrap();
        assert!(ch.converged && jt.converged);
        assert!(compose(&p, &ch.limit).unwrap().max_abs_diff(&jt.limit) < 1e-8);
        let defect = ch.pythagoras_defect.unwrap();
        assert!(defect.abs() < 1e-9, "{defect}");
    }
}

#[test]
fn joint_ipf_reproduces_overlapping_marginals() {
    let s = ProductSpace::new(vec![2, 2], vec![2]).unwrap();
    let mut r = rng(13);
    let qbar = random_joint(&mut r, &s);
    let specs = [JointSpec::new(vec![0], vec![0]), JointSpec::new(vec![0, 1], vec![])];
    let constraints: Vec<_> = specs.iter().map(|sp| JointConstraint::from_joint(&qbar, sp.clone()).unwrap()).collect();
    let q0 = chanproj::JointDistribution::new(s.clone(), vec![0.125; 8]).unwrap();
    let res = joint_ipf(&q0, &constraints, &SolverOptions::default()).unwrap();
    assert!(res.converged);
    for c in &constraints {
        assert!(joint_marginal(&res.limit, &c.spec).unwrap().max_abs_diff(&c.prescribed) <= 1e-9);
    }
    assert!(res.pythagoras_defect(&q0, &qbar).unwrap().unwrap().abs() < 1e-9);
}

#[test]
fn member_of_family_projects_to_itself() {
    let mut r = rng(14);
    for _ in 0..20 {
        let s = random_space(&mut r, 2, 2, 3);
        let p = random_input(&mut r, &s);
        let specs = random_specs(&mut r, &s, 3);
        let k0 = Channel::uniform(s.clone());
        let phis = random_potentials(&mut r, &s, &specs);
        let member = exp_tilt(&k0, &specs, &phis).unwrap();
        let res = ri_project(&member, &specs, &k0, &p, &SolverOptions::default()).unwrap();
        assert!(res.divergence.nats() < 1e-8);
    }
}

#[test]
fn full_constraint_pins_the_channel() {
    let mut r = rng(15);
    let s = random_space(&mut r, 2, 2, 3);
    let p = random_input(&mut r, &s);
    let k = random_channel(&mut r, &s);
    let res = ri_project(&k, &[MarginalSpec::full(&s)], &Channel::uniform(s.clone()), &p, &SolverOptions::default())
        .unwrap();
    assert_eq!(res.projection.sweeps_used, 1);
    assert!(res.limit().max_abs_diff(&k) < 1e-15);
    assert!(res.divergence.nats() < 1e-15);
}

#[test]
fn ri_projection_matches_theta_oracle() {
    let s = ProductSpace::new(vec![2, 2], vec![2]).unwrap();
    let mut r = rng(16);
    for _ in 0..5 {
        let p = random_input(&mut r, &s);
        let k = random_channel(&mut r, &s);
        let k0 = Channel::uniform(s.clone());
        let res = ri_project(&k, &pair_specs(), &k0, &p, &tight()).unwrap();
        let oracle = theta_oracle(&p, &k, &k0, &pair_specs());
        assert!((res.divergence.nats() - oracle).abs() < 1e-5, "{} vs {oracle}", res.divergence.nats());
    }
}

#[test]
fn xor_converges_immediately() {
    let k = make_gate(Gate::Xor, 0.0).unwrap();
    let s = k.space().clone();
    let res = ri_project(&k, &pair_specs(), &Channel::uniform(s.clone()), &InputDistribution::uniform(s), &tight())
        .unwrap();
    assert!(res.projection.converged);
    assert!(res.projection.sweeps_used <= 2);
    assert!((res.divergence.bits() - 1.0).abs() < 1e-12);
}

pub fn random_potentials(
    r: &mut rand_chacha::ChaCha8Rng,
    s: &ProductSpace,
    specs: &[MarginalSpec],
) -> Vec<Vec<f64>> {
    specs
        .iter()
        .map(|sp| {
            let n = s.restrict(sp.joint()).unwrap().joint_size();
            (0..n).map(|_| r.gen_range(-1.5..1.5)).collect()
        })
        .collect()
}

#[test]
fn pythagoras_for_exponential_family() {
    let mut r = rng(17);
    for _ in 0..40 {
        let s = random_space(&mut r, 2, 2, 3);
        let p = random_input(&mut r, &s);
        let k = random_channel(&mut r, &s);
        let specs = random_specs(&mut r, &s, 3);
        let k0 = Channel::uniform(s.clone());
        let proj = ri_project(&k, &specs, &k0, &p, &tight()).unwrap();
        let pi = proj.limit();
        for _ in 0..3 {
            let m = exp_tilt(&k0, &specs, &random_potentials(&mut r, &s, &specs)).unwrap();
            let whole = kl_channel(&p, &k, &m).unwrap().nats();
            let split = proj.divergence.nats() + kl_channel(&p, pi, &m).unwrap().nats();
            assert!((whole - split).abs() < 1e-6, "defect {}", whole - split);
        }
    }
}

#[test]
fn limit_is_the_closest_mixture_member_to_the_reference() {
    let mut r = rng(18);
    for _ in 0..25 {
        let s = random_space(&mut r, 2, 2, 3);
        let p = random_input(&mut r, &s);
        let k = random_channel(&mut r, &s);
        let specs = random_specs(&mut r, &s, 3);
        let k0 = Channel::uniform(s.clone());
        let proj = ri_project(&k, &specs, &k0, &p, &tight()).unwrap();
        let l = proj.limit();
        for spec in &specs {
            let a = channel_marginal(&p, l, spec).unwrap();
            let b = channel_marginal(&p, &k, spec).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-9);
        }
        let best = kl_channel(&p, l, &k0).unwrap().nats();

        let family = FamilySpec::new(specs.clone(), k.clone()).unwrap();
        let constraints = standard_joint_constraints(&p, &family).unwrap();
        for _ in 0..4 {
            let start = random_joint(&mut r, &s);
            let m = joint_ipf(&start, &constraints, &tight()).unwrap().limit;
            let (_, m) = disintegrate(&m).unwrap();
            assert!(best <= kl_channel(&p, &m, &k0).unwrap().nats() + 1e-6);
        }
    }
}

#[test]
fn residual_trace_is_eventually_nonincreasing() {
    let mut r = rng(19);
    for _ in 0..25 {
        let s = random_space(&mut r, 2, 2, 3);
        let p = random_input(&mut r, &s);
        let k = random_channel(&mut r, &s);
        let specs = random_specs(&mut r, &s, 3);
        let opts = SolverOptions { tolerance: 1e-14, max_sweeps: 400, trace: true, ..Default::default() };
        let res = ri_project(&k, &specs, &Channel::uniform(s.clone()), &p, &opts).unwrap();
        let tr = &res.projection.trace;
        for w in tr[tr.len() / 2..].windows(2) {
            assert!(w[1].residual <= w[0].residual + 1e-12);
        }
    }

    let and = make_gate(Gate::And, 0.0).unwrap();
    let s = and.space().clone();
    let opts = SolverOptions { max_sweeps: 2000, trace: true, ..Default::default() };
    let res = ri_project(&and, &pair_specs(), &Channel::uniform(s.clone()), &InputDistribution::uniform(s), &opts)
        .unwrap();
    for w in res.projection.trace[10..].windows(2) {
        assert!(w[1].residual <= w[0].residual + 1e-12);
    }
}

#[test]
fn limit_does_not_depend_on_sweep_order() {
    let mut r = rng(20);
    for _ in 0..25 {
        let s = random_space(&mut r, 2, 2, 3);
        let p = random_input(&mut r, &s);
        let k = random_channel(&mut r, &s);
        let specs = random_specs(&mut r, &s, 4);
        let k0 = random_channel(&mut r, &s);
        let a = ri_project(&k, &specs, &k0, &p, &tight()).unwrap();
        let b = ri_project(&k, &shuffled(&mut r, &specs), &k0, &p, &tight()).unwrap();
        assert!(a.limit().max_abs_diff(b.limit()) < 1e-8);
    }
}
