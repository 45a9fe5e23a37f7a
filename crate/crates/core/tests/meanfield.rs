mod common;

use branchsim_core::exactprop::{evolve_joint, PropagatorConfig};
use branchsim_core::hamiltonian::{bath_product_state, build_dephasing_model, HamiltonianSpec, ProductTerm};
use branchsim_core::hilbert::{overlap, tensor_product};
use branchsim_core::meanfield::{
    accumulate_phase, evolve_meanfield, meanfield_fidelity, rate_evaluation, tdh_step, MeanFieldState, RecordOptions,
};
use branchsim_core::operator::pauli_x;
use branchsim_core::oracles::dense_propagate;
use branchsim_core::{Capacity, StateVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spec(rng: &mut ChaCha8Rng, da: usize, db: usize, terms: usize) -> HamiltonianSpec {
    let interaction = (0..terms)
        .map(|_| ProductTerm {
            a: common::random_hermitian(rng, da),
            b: common::random_hermitian(rng, db),
            g: rng.gen_range(-1.0..1.0),
        })
        .collect();
    HamiltonianSpec::new(common::random_hermitian(rng, da), common::random_hermitian(rng, db), interaction, 1.0).unwrap()
}

#[test]
fn rate_is_real_and_routes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for _ in 0..50 {
        let (da, db) = (rng.gen_range(2..6), rng.gen_range(2..6));
        let spec = random_spec(&mut rng, da, db, 3);
        let s = MeanFieldState::new(StateVector::random_unit(&mut rng, da), StateVector::random_unit(&mut rng, db), &spec).unwrap();
        let r = rate_evaluation(&s, &spec).unwrap();
        assert!(r.bath_route.im.abs() < 1e-10);
        assert!((r.bath_route.re - r.joint).abs() < 1e-10);
    }
}

#[test]
fn uncoupled_run_is_exact_product_evolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(203);
    let spec = random_spec(&mut rng, 3, 4, 2).with_coupling_scale(0.0);
    let phi = StateVector::random_unit(&mut rng, 3);
    let psi = StateVector::random_unit(&mut rng, 4);
    let s0 = MeanFieldState::new(phi.clone(), psi.clone(), &spec).unwrap();
    let run = evolve_meanfield(&s0, &spec, 5.0, 1e-2, RecordOptions::default()).unwrap();
    let h = spec.assemble_joint(0.0, Capacity::default()).unwrap();
    let exact = dense_propagate(&tensor_product(&phi, &psi).unwrap(), &h, 5.0, 1.0).unwrap();
    assert!(meanfield_fidelity(&exact, &run.final_state).unwrap() >= 1.0 - 1e-9);
    assert!(run.record.big_lambda.iter().all(|&l| l == 0.0));
}

#[test]
fn weak_coupling_infidelity_scales_quadratically() {
    let mut rng = ChaCha8Rng::seed_from_u64(204);
    let base = random_spec(&mut rng, 2, 2, 1);
    let phi = StateVector::random_unit(&mut rng, 2);
    let psi = StateVector::random_unit(&mut rng, 2);
    let t = 2.0;
    let gs = [0.01, 0.02, 0.04];
    let infid: Vec<f64> = gs
        .iter()
        .map(|&g| {
            let scale = g / base.interaction[0].g.abs();
            let spec = base.with_coupling_scale(scale);
            let s0 = MeanFieldState::new(phi.clone(), psi.clone(), &spec).unwrap();
            let run = evolve_meanfield(&s0, &spec, t, 1e-3, RecordOptions::default()).unwrap();
            let h = spec.assemble_joint(0.0, Capacity::default()).unwrap();
            let exact = dense_propagate(&tensor_product(&phi, &psi).unwrap(), &h, t, 1.0).unwrap();
            1.0 - meanfield_fidelity(&exact, &run.final_state).unwrap()
        })
        .collect();
    // least-squares slope of log(1 - F) against log g
    let xs: Vec<f64> = gs.iter().map(|g| g.ln()).collect();
    let ys: Vec<f64> = infid.iter().map(|f| f.ln()).collect();
    let mx = xs.iter().sum::<f64>() / 3.0;
    let my = ys.iter().sum::<f64>() / 3.0;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    println!("infidelities {infid:?} slope {slope:.3}");
    assert!((slope - 2.0).abs() <= 0.3);
}

#[test]
fn dephasing_fidelity_matches_dense_oracle_at_every_sample() {
    let spec = build_dephasing_model(&[0.05, 0.05], pauli_x().scaled(0.5), 1.0, Capacity::default()).unwrap();
    let phi = StateVector::from_real(&[0.6, 0.8]).unwrap();
    let psi = bath_product_state(&[(1.0, 0.0), (2.0, 0.5)]);
    let joint0 = tensor_product(&phi, &psi).unwrap();
    let dt = 1e-2;
    let mut exact_states = Vec::new();
    let mut obs = |_t: f64, x: &StateVector| exact_states.push(x.clone());
    evolve_joint(&joint0, &spec, 5.0, &PropagatorConfig::new(dt).unwrap(), &mut [&mut obs]).unwrap();
    let h = spec.assemble_joint(0.0, Capacity::default()).unwrap();
    let mut s = MeanFieldState::new(phi, psi, &spec).unwrap();
    for (n, exact) in exact_states.iter().enumerate() {
        if n > 0 {
            s = tdh_step(&s, &spec, dt).unwrap();
        }
        let dense = dense_propagate(&joint0, &h, n as f64 * dt, 1.0).unwrap();
        let want = overlap(&dense, &tensor_product(&s.phi, &s.psi).unwrap()).unwrap().norm_sqr();
        assert!((meanfield_fidelity(exact, &s).unwrap() - want).abs() < 1e-9);
    }
}

#[test]
fn accumulation_converges_at_second_order() {
    let f = |t: f64| (1.3 * t).sin() + 0.4 * (3.1 * t).cos() + t * t / 5.0;
    let exact = |t: f64| (1.0 - (1.3 * t).cos()) / 1.3 + 0.4 * (3.1 * t).sin() / 3.1 + t.powi(3) / 15.0;
    let err = |n: usize| {
        let series: Vec<(f64, f64)> = (0..=n).map(|i| (2.0 * i as f64 / n as f64, f(2.0 * i as f64 / n as f64))).collect();
        (accumulate_phase(&series).unwrap().last().unwrap().1 - exact(2.0)).abs()
    };
    let ratio = err(100) / err(200);
    assert!((3.8..=4.2).contains(&ratio), "ratio {ratio}");
}

proptest! {
    #[test]
    fn accumulated_phase_differentiates_back(c in -3.0f64..3.0, w in 0.1f64..4.0) {
        let n = 400;
        let series: Vec<(f64, f64)> = (0..=n).map(|i| { let t = i as f64 / n as f64; (t, c + (w * t).sin()) }).collect();
        let out = accumulate_phase(&series).unwrap();
        prop_assert_eq!(out[0].1, 0.0);
        for i in 1..n {
            let d = (out[i + 1].1 - out[i - 1].1) / (out[i + 1].0 - out[i - 1].0);
            prop_assert!((d - series[i].1).abs() < w * w * 1e-5 + 1e-12);
        }
    }
}
