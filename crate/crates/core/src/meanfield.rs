//! Time-dependent Hartree propagation of a product state `phi (x) psi`.
//!
//! The bath factor obeys `i hbar d/dt psi = (h_B + V_psi) psi` and the system
//! factor carries the whole multiplier, `i hbar d/dt phi = (h + V - lambda) phi`,
//! with `lambda = <h_int>`. The state stores the isolated factor `phi_iso`
//! (propagated without `lambda`); the physical factor is
//! `phi = phi_iso * exp(i Lambda / hbar)` with `d Lambda/dt = lambda`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::exactprop::{lanczos, step_count};
use crate::hamiltonian::HamiltonianSpec;
use crate::hilbert::{overlap, tensor_product, StateVector};
use crate::observables;
use crate::operator::{Apply, OperatorSum};
use crate::trajectory::TrajectoryRecord;

/// Largest tolerated norm drift of either factor over one step.
pub const STEP_NORM_TOLERANCE: f64 = 1e-10;
/// Largest tolerated imaginary part of the bath-side evaluation of `lambda`.
pub const LAMBDA_IMAG_TOLERANCE: f64 = 1e-10;
/// Disagreement between the two `lambda` routes that is treated as an error.
pub const GAUGE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Gauge {
    /// Whole multiplier in the system equation; none in the bath equation.
    #[default]
    SystemMultiplier,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanFieldState {
    /// Isolated system factor, without the `exp(i Lambda / hbar)` phase.
    pub phi: StateVector,
    pub psi: StateVector,
    pub lambda: f64,
    pub big_lambda: f64,
    pub t: f64,
    pub gauge: Gauge,
}

impl MeanFieldState {
    /// Product state at `t = 0` with `Lambda = 0`.
    pub fn new(phi: StateVector, psi: StateVector, spec: &HamiltonianSpec) -> Result<Self> {
        if phi.dim() != spec.dim_a() || psi.dim() != spec.dim_b() {
            return Err(Error::shape(format!(
                "factors have dims ({}, {}), model expects ({}, {})",
                phi.dim(),
                psi.dim(),
                spec.dim_a(),
                spec.dim_b()
            )));
        }
        phi.require_normalized(1e-8)?;
        psi.require_normalized(1e-8)?;
        let mut s = MeanFieldState { phi, psi, lambda: 0.0, big_lambda: 0.0, t: 0.0, gauge: Gauge::SystemMultiplier };
        s.lambda = dissipation_rate(&s, spec)?;
        Ok(s)
    }

    /// `phi_iso * exp(i Lambda / hbar)`.
    pub fn dressed_phi(&self, hbar: f64) -> StateVector {
        self.phi.scaled(C64::from_polar(1.0, self.big_lambda / hbar))
    }

    pub fn product(&self, hbar: f64) -> Result<StateVector> {
        tensor_product(&self.dressed_phi(hbar), &self.psi)
    }
}

/// Both evaluations of the dissipation rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateEvaluation {
    /// `<psi| i hbar d/dt psi - h_B psi>` with the equation of motion substituted.
    pub bath_route: C64,
    /// `<phi psi| h_int |phi psi>` evaluated on the joint vector.
    pub joint: f64,
}

pub fn rate_evaluation(state: &MeanFieldState, spec: &HamiltonianSpec) -> Result<RateEvaluation> {
    state.phi.require_normalized(1e-8)?;
    state.psi.require_normalized(1e-8)?;
    let coeff_a = spec.coefficients_a(&state.phi);
    let psi = &state.psi;
    let i_hbar_dpsi = spec.effective_b(&coeff_a).apply(psi);
    let h_b_psi = spec.h_b.apply(psi);
    let bath_route = overlap(psi, &i_hbar_dpsi)? - overlap(psi, &h_b_psi)?;
    let joint_state = tensor_product(&state.phi, psi)?;
    let joint = spec.interaction_operator().expectation(&joint_state).re;
    Ok(RateEvaluation { bath_route, joint })
}

/// The dissipation rate `lambda(t)`, checked for reality and cross-checked
/// against the joint interaction expectation.
pub fn dissipation_rate(state: &MeanFieldState, spec: &HamiltonianSpec) -> Result<f64> {
    let r = rate_evaluation(state, spec)?;
    if r.bath_route.im.abs() > LAMBDA_IMAG_TOLERANCE {
        return Err(Error::HermiticityError(r.bath_route.im));
    }
    if (r.bath_route.re - r.joint).abs() > GAUGE_TOLERANCE {
        return Err(Error::GaugeInconsistency { bath_route: r.bath_route.re, joint: r.joint });
    }
    Ok(r.bath_route.re)
}

/// Mirror rate with the roles of the factors exchanged:
/// `<phi| i hbar d/dt phi - (h_A + V_ext + V_drive) phi>`, i.e. `<V> - lambda`.
pub fn complementary_rate(state: &MeanFieldState, spec: &HamiltonianSpec) -> Result<f64> {
    let coeff_b = spec.coefficients_b(&state.psi);
    let v_mf: f64 = spec.interaction.iter().zip(&coeff_b).map(|(term, c)| term.g * c * term.a.expectation(&state.phi).re).sum();
    Ok(v_mf - dissipation_rate(state, spec)?)
}

fn exp_step(op: &dyn Apply, x: &StateVector, dt: f64, hbar: f64) -> Result<StateVector> {
    let y = StateVector::new(lanczos::expm_apply(op, x.amplitudes(), dt / hbar)?)?;
    let drift = (y.norm() - x.norm()).abs();
    if drift > STEP_NORM_TOLERANCE || !drift.is_finite() {
        return Err(Error::IntegratorDiverged(format!("mean-field norm drift {drift:.3e}")));
    }
    Ok(y)
}

/// One self-consistent step: predictor half-step for the midpoint fields, then a
/// full exponential step of each factor in its midpoint field.
pub fn tdh_step(state: &MeanFieldState, spec: &HamiltonianSpec, dt: f64) -> Result<MeanFieldState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    state.phi.require_normalized(1e-8)?;
    state.psi.require_normalized(1e-8)?;
    let hbar = spec.hbar;
    let t0 = state.t;
    let coeff_a0 = spec.coefficients_a(&state.phi);
    let coeff_b0 = spec.coefficients_b(&state.psi);

    let phi_half = exp_step(&spec.effective_a(t0 + 0.25 * dt, &coeff_b0), &state.phi, 0.5 * dt, hbar)?;
    let psi_half = exp_step(&spec.effective_b(&coeff_a0), &state.psi, 0.5 * dt, hbar)?;
    let coeff_a_mid = spec.coefficients_a(&phi_half);
    let coeff_b_mid = spec.coefficients_b(&psi_half);

    let phi = exp_step(&spec.effective_a(t0 + 0.5 * dt, &coeff_b_mid), &state.phi, dt, hbar)?;
    let psi = exp_step(&spec.effective_b(&coeff_a_mid), &state.psi, dt, hbar)?;

    let mut next = MeanFieldState { phi, psi, lambda: 0.0, big_lambda: state.big_lambda, t: t0 + dt, gauge: state.gauge };
    next.lambda = dissipation_rate(&next, spec)?;
    next.big_lambda += 0.5 * dt * (state.lambda + next.lambda);
    Ok(next)
}

/// Cumulative trapezoid of `(t, lambda)` samples, starting from zero.
pub fn accumulate_phase(series: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(series.len());
    let mut acc = 0.0;
    for (i, &(t, l)) in series.iter().enumerate() {
        if i > 0 {
            let (tp, lp) = series[i - 1];
            if t <= tp {
                return Err(Error::TimeOrderError(i));
            }
            acc += 0.5 * (t - tp) * (l + lp);
        }
        out.push((t, acc));
    }
    Ok(out)
}

/// `|<exact | phi (x) psi>|^2`.
pub fn meanfield_fidelity(exact: &StateVector, state: &MeanFieldState) -> Result<f64> {
    if exact.dim() != state.phi.dim() * state.psi.dim() {
        return Err(Error::shape(format!(
            "exact state has dim {}, product has dim {}",
            exact.dim(),
            state.phi.dim() * state.psi.dim()
        )));
    }
    Ok(overlap(exact, &tensor_product(&state.phi, &state.psi)?)?.norm_sqr())
}

/// `d/dt <V(t)>` at fixed `phi`: explicit drive plus the motion of the bath
/// expectations, `d<B_k>/dt = (2/hbar) Im <B_k psi | (h_B + V_psi) psi>`.
pub fn potential_rate(state: &MeanFieldState, spec: &HamiltonianSpec) -> Result<f64> {
    let phi = &state.phi;
    let mut rate = spec.drive_a.as_ref().map_or(0.0, |d| d.rate * d.op.expectation(phi).re);
    if spec.interaction.is_empty() {
        return Ok(rate);
    }
    let coeff_a = spec.coefficients_a(phi);
    let h_psi = spec.effective_b(&coeff_a).apply(&state.psi);
    for (term, a) in spec.interaction.iter().zip(&coeff_a) {
        let b_psi = term.b.apply(&state.psi);
        let db = 2.0 / spec.hbar * overlap(&b_psi, &h_psi)?.im;
        rate += term.g * db * a;
    }
    Ok(rate)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct RecordOptions {
    /// Keep the dressed `phi(t)` at every sample.
    pub states: bool,
}

#[derive(Clone, Debug)]
pub struct MeanFieldRun {
    pub record: TrajectoryRecord,
    pub final_state: MeanFieldState,
}

struct Sample {
    dressed: StateVector,
    coeff_b: Vec<f64>,
}

/// Runs `tdh_step` over `[0, t_final]` and records every observable the
/// conservation-law bookkeeping needs.
pub fn evolve_meanfield(
    state0: &MeanFieldState,
    spec: &HamiltonianSpec,
    t_final: f64,
    dt: f64,
    opts: RecordOptions,
) -> Result<MeanFieldRun> {
    if !(dt > 0.0) || t_final < 0.0 {
        return Err(Error::InvalidArgument("need dt > 0 and t_final >= 0".into()));
    }
    let (n, dt) = step_count(t_final, dt);
    let hbar = spec.hbar;
    let mut rec = TrajectoryRecord::new(hbar);
    rec.mass = spec.grid_a.map(|g| g.mass);
    rec.initial_state = Some(state0.dressed_phi(hbar));

    let mut state = state0.clone();
    let mut prev = record_sample(&mut rec, &state, spec, opts)?;
    rec.action_increments.push(0.0);
    for _ in 0..n {
        let t_prev = state.t;
        state = tdh_step(&state, spec, dt)?;
        let cur = record_sample(&mut rec, &state, spec, opts)?;
        let h_prev = spec.effective_a(t_prev, &prev.coeff_b);
        let h_cur = spec.effective_a(state.t, &cur.coeff_b);
        rec.action_increments.push(observables::action_increment(
            &prev.dressed,
            &cur.dressed,
            &h_prev,
            &h_cur,
            dt,
            hbar,
        )?);
        prev = cur;
    }
    rec.final_state = Some(state.dressed_phi(hbar));
    Ok(MeanFieldRun { record: rec, final_state: state })
}

fn record_sample(
    rec: &mut TrajectoryRecord,
    state: &MeanFieldState,
    spec: &HamiltonianSpec,
    opts: RecordOptions,
) -> Result<Sample> {
    let hbar = spec.hbar;
    let coeff_b = spec.coefficients_b(&state.psi);
    let h: OperatorSum<'_> = spec.effective_a(state.t, &coeff_b);
    let h_expect = h.expectation(&state.phi).re;
    let dressed = state.dressed_phi(hbar);

    rec.times.push(state.t);
    rec.norm.push(state.phi.norm());
    rec.lambda.push(state.lambda);
    rec.big_lambda.push(state.big_lambda);
    rec.hamiltonian.push(h_expect);
    rec.energy.push(h_expect - state.lambda);
    rec.dv_dt.push(potential_rate(state, spec)?);
    rec.field_coefficients.push(coeff_b.clone());
    if state.phi.dim() >= 2 {
        let a = state.phi.amplitudes();
        rec.coherence.push((a[0] * a[1].conj()).norm());
    }
    if let Some(grid) = spec.grid_a {
        rec.momentum.push(observables::momentum(&state.phi, &grid, hbar)?);
        let (mean, var) = observables::position_moments(&state.phi, &grid);
        rec.center_of_mass.push(mean);
        rec.dispersion.push(var);
        if let Some(v) = spec.potential_a(state.t, &coeff_b).diagonal() {
            rec.force.push(observables::lattice_force(&state.phi, &grid, &v));
        }
    }
    if opts.states {
        rec.states.push(dressed.clone());
    }
    Ok(Sample { dressed, coeff_b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_dephasing_model, ProductTerm};
    use crate::hilbert::Capacity;
    use crate::operator::{kron, pauli_x, pauli_z, LinearOperator};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> LinearOperator {
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            m[[i, i]] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in i + 1..n {
                let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[[i, j]] = z;
                m[[j, i]] = z.conj();
            }
        }
        LinearOperator::dense(m).unwrap()
    }

    fn random_spec(rng: &mut ChaCha8Rng, da: usize, db: usize, terms: usize) -> HamiltonianSpec {
        let interaction = (0..terms)
            .map(|_| ProductTerm { a: random_hermitian(rng, da), b: random_hermitian(rng, db), g: rng.gen_range(-1.0..1.0) })
            .collect();
        HamiltonianSpec::new(random_hermitian(rng, da), random_hermitian(rng, db), interaction, 1.0).unwrap()
    }

    fn zz(g: f64) -> HamiltonianSpec {
        HamiltonianSpec::new(
            LinearOperator::zeros(2),
            LinearOperator::zeros(2),
            vec![ProductTerm { a: pauli_z(), b: pauli_z(), g }],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn isolated_rate_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = random_spec(&mut rng, 3, 3, 2).with_coupling_scale(0.0);
        let s = MeanFieldState::new(StateVector::random_unit(&mut rng, 3), StateVector::random_unit(&mut rng, 3), &spec).unwrap();
        assert_eq!(s.lambda, 0.0);
    }

    #[test]
    fn zz_rate_is_coupling() {
        let s = MeanFieldState::new(StateVector::basis(2, 0), StateVector::basis(2, 0), &zz(0.7)).unwrap();
        assert!((s.lambda - 0.7).abs() < 1e-15);
    }

    #[test]
    fn rate_matches_dense_joint_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let spec = random_spec(&mut rng, 3, 4, 3);
            let phi = StateVector::random_unit(&mut rng, 3);
            let psi = StateVector::random_unit(&mut rng, 4);
            let s = MeanFieldState::new(phi.clone(), psi.clone(), &spec).unwrap();
            let mut hint = Array2::<C64>::zeros((12, 12));
            for t in &spec.interaction {
                hint = hint + kron(&t.a.to_dense(), &t.b.to_dense()).mapv(|z| z * t.g);
            }
            let x = tensor_product(&phi, &psi).unwrap();
            let v = ndarray::Array1::from(x.amplitudes().to_vec());
            let want: C64 = v.mapv(|z| z.conj()).dot(&hint.dot(&v));
            assert!((s.lambda - want.re).abs() < 1e-12);
            let r = rate_evaluation(&s, &spec).unwrap();
            assert!(r.bath_route.im.abs() < 1e-12);
        }
    }

    #[test]
    fn eigenstates_without_coupling_only_acquire_phases() {
        let h_a = LinearOperator::diagonal(vec![0.3, -1.0]);
        let h_b = LinearOperator::diagonal(vec![2.0, 0.5, 1.0]);
        let spec = HamiltonianSpec::new(h_a, h_b, vec![], 1.0).unwrap();
        let mut s = MeanFieldState::new(StateVector::basis(2, 1), StateVector::basis(3, 2), &spec).unwrap();
        for _ in 0..50 {
            s = tdh_step(&s, &spec, 0.05).unwrap();
        }
        assert!((s.phi.amplitudes()[1].norm() - 1.0).abs() < 1e-14);
        assert!((s.psi.amplitudes()[2].norm() - 1.0).abs() < 1e-14);
        assert_eq!(s.lambda, 0.0);
        assert_eq!(s.big_lambda, 0.0);
    }

    #[test]
    fn diagonal_interaction_keeps_populations() {
        let spec = HamiltonianSpec::new(
            LinearOperator::zeros(2),
            pauli_x().scaled(0.4),
            vec![ProductTerm { a: pauli_z(), b: pauli_z(), g: 0.3 }],
            1.0,
        )
        .unwrap();
        let mut s = MeanFieldState::new(StateVector::basis(2, 0), StateVector::basis(2, 0), &spec).unwrap();
        let z0 = pauli_z().expectation(&s.phi).re;
        for _ in 0..200 {
            s = tdh_step(&s, &spec, 0.01).unwrap();
            assert!((pauli_z().expectation(&s.phi).re - z0).abs() < 1e-12);
        }
        // the bath precesses in the static field of the pinned system
        let zz_spec = zz(0.3);
        let plus = StateVector::from_real(&[1.0, 1.0]).unwrap().normalized().unwrap();
        let mut s = MeanFieldState::new(StateVector::basis(2, 0), plus, &zz_spec).unwrap();
        for _ in 0..200 {
            s = tdh_step(&s, &zz_spec, 0.01).unwrap();
            assert!(pauli_z().expectation(&s.phi).re - 1.0 < 1e-12);
            assert!(pauli_z().expectation(&s.psi).re.abs() < 1e-12);
        }
    }

    #[test]
    fn constant_rate_accumulates_linearly() {
        let series: Vec<(f64, f64)> = (0..11).map(|i| (0.1 * i as f64, 2.5)).collect();
        let out = accumulate_phase(&series).unwrap();
        for (t, l) in out {
            assert!((l - 2.5 * t).abs() < 1e-15);
        }
    }

    #[test]
    fn sine_rate_integrates_to_two() {
        let n = 1000;
        let series: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / n as f64;
                (t, t.sin())
            })
            .collect();
        let out = accumulate_phase(&series).unwrap();
        assert!((out.last().unwrap().1 - 2.0).abs() < 1e-5);
    }

    #[test]
    fn accumulation_rejects_non_monotone_times() {
        let err = accumulate_phase(&[(0.0, 1.0), (0.2, 1.0), (0.1, 1.0)]).unwrap_err();
        assert_eq!(err, Error::TimeOrderError(2));
    }

    #[test]
    fn fidelity_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = random_spec(&mut rng, 2, 3, 1);
        let phi = StateVector::random_unit(&mut rng, 2);
        let psi = StateVector::random_unit(&mut rng, 3);
        let s = MeanFieldState::new(phi.clone(), psi.clone(), &spec).unwrap();
        let prod = tensor_product(&phi, &psi).unwrap();
        assert!((meanfield_fidelity(&prod, &s).unwrap() - 1.0).abs() < 1e-12);
        // orthogonal complement along A
        let a = phi.amplitudes();
        let perp = StateVector::new(vec![-a[1].conj(), a[0].conj()]).unwrap();
        let orth = tensor_product(&perp, &psi).unwrap();
        assert!(meanfield_fidelity(&orth, &s).unwrap() < 1e-24);
        assert!(matches!(meanfield_fidelity(&StateVector::basis(5, 0), &s), Err(Error::ShapeError(_))));
    }

    #[test]
    fn static_field_keeps_energy_plus_rate_constant() {
        let spec = build_dephasing_model(&[0.4, 0.9], pauli_x().scaled(0.5), 1.0, Capacity::default()).unwrap();
        let psi = crate::hamiltonian::bath_product_state(&[(0.7, 0.2), (1.2, -0.4)]);
        let s = MeanFieldState::new(StateVector::basis(2, 0), psi, &spec).unwrap();
        let run = evolve_meanfield(&s, &spec, 5.0, 1e-2, RecordOptions::default()).unwrap();
        let r = &run.record;
        let c0 = r.energy[0] + r.lambda[0];
        let lam_span = r.lambda.iter().cloned().fold(f64::MIN, f64::max) - r.lambda.iter().cloned().fold(f64::MAX, f64::min);
        assert!(lam_span > 0.1, "lambda should vary, span {lam_span}");
        for (e, l) in r.energy.iter().zip(&r.lambda) {
            assert!((e + l - c0).abs() < 1e-9);
        }
    }

    #[test]
    fn complementary_rates_sum_constant_for_static_fields() {
        let spec = build_dephasing_model(&[0.4, 0.9], LinearOperator::zeros(2), 1.0, Capacity::default()).unwrap();
        let psi = crate::hamiltonian::bath_product_state(&[(0.7, 0.2), (1.2, -0.4)]);
        let phi = StateVector::from_real(&[0.6, 0.8]).unwrap();
        let mut s = MeanFieldState::new(phi, psi, &spec).unwrap();
        let c0 = s.lambda + complementary_rate(&s, &spec).unwrap();
        let scale = s.lambda.abs().max(1e-300);
        for _ in 0..300 {
            s = tdh_step(&s, &spec, 1e-2).unwrap();
            let c = s.lambda + complementary_rate(&s, &spec).unwrap();
            assert!((c - c0).abs() < 1e-8 * scale);
        }
    }

    #[test]
    fn energy_matches_finite_difference_definition() {
        let spec = build_dephasing_model(&[0.4, 0.9], pauli_x().scaled(0.5), 1.0, Capacity::default()).unwrap();
        let psi = crate::hamiltonian::bath_product_state(&[(0.7, 0.2), (1.2, -0.4)]);
        let s = MeanFieldState::new(StateVector::basis(2, 0), psi, &spec).unwrap();
        let dt = 1e-3;
        let run = evolve_meanfield(&s, &spec, 0.2, dt, RecordOptions { states: true }).unwrap();
        let r = &run.record;
        for n in 1..r.len() - 1 {
            let d = r.states[n + 1].add_scaled(C64::new(-1.0, 0.0), &r.states[n - 1]).unwrap();
            let e = overlap(&r.states[n], &d).unwrap() * C64::new(0.0, 1.0 / (2.0 * dt));
            assert!((e.re - r.energy[n]).abs() < 1e-5, "{} vs {}", e.re, r.energy[n]);
        }
    }
}
