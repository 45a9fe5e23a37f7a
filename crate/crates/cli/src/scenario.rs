//! Scenario presets. Each returns its artifacts in memory; [`crate::run`] writes them.

use branchsim_core::branches::{
    evolve_branches, init_branches, interference_kernel, offdiagonal_overlaps_with, partial_wave, phase_spread,
    select_dominant, BranchEnsemble,
};
use branchsim_core::exactprop::lanczos::symmetric_tridiagonal_eigen;
use branchsim_core::exactprop::{evolve_joint, step_count, PropagatorConfig};
use branchsim_core::hamiltonian::{
    bath_product_state, build_dephasing_model, build_grid_pair, build_grid_single, build_pointer_model, qubit_state,
    Drive, Grid, GridPairParams, HamiltonianSpec,
};
use branchsim_core::hilbert::{reduced_coherence, tensor_product};
use branchsim_core::meanfield::{evolve_meanfield, MeanFieldState, RecordOptions};
use branchsim_core::observables::{
    action_identity_residual, classical_oracle, ehrenfest_trajectory, energy_ledger, energy_plus_rate_drift,
    gaussian_packet, newton_residual, relative_phase_space_error, ClassicalState, Free, Harmonic, Linear, Potential,
};
use branchsim_core::operator::{pauli_x, pauli_z};
use branchsim_core::{Capacity, LinearOperator, OperatorSum, StateVector, TrajectoryRecord};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{BranchBasis, PointerProfile, Potential as PotentialKind, Scenario, ScenarioConfig};
use crate::error::{CliError, ConfigError};
use crate::output::{BranchRow, OracleEntry, Summary, TrajectoryRow, Validity};

/// In-memory artifacts of one run.
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub trajectory: Option<Vec<TrajectoryRow>>,
    pub branches: Option<Vec<BranchRow>>,
    pub summary: Summary,
}

pub fn execute(cfg: &ScenarioConfig) -> Result<Artifacts, CliError> {
    match cfg.scenario {
        Scenario::Dephasing => dephasing(cfg),
        Scenario::Grid2Body => grid2body(cfg),
        Scenario::ClassicalLimit => classical_limit(cfg),
        Scenario::BranchStudy => branch_study(cfg),
        Scenario::Check => check(cfg),
    }
}

fn capacity(cfg: &ScenarioConfig) -> Capacity {
    Capacity { max_joint_dim: cfg.max_joint_dim }
}

/// Couplings `g_k` and bath polar angles `theta_k`, drawn in pairs from a seeded
/// stream so that the first `K` qubits agree across runs with different `K`.
/// Explicit `couplings` replace the drawn values; `g_scale` multiplies either.
pub fn bath_parameters(cfg: &ScenarioConfig) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut g = Vec::with_capacity(cfg.k);
    let mut theta = Vec::with_capacity(cfg.k);
    for _ in 0..cfg.k {
        g.push(rng.gen_range(0.5..1.5));
        theta.push(if cfg.theta_max > cfg.theta_min { rng.gen_range(cfg.theta_min..cfg.theta_max) } else { cfg.theta_min });
    }
    if let Some(c) = &cfg.couplings {
        g.clone_from(c);
    }
    (g.into_iter().map(|x| cfg.g_scale * x).collect(), theta)
}

fn basis(n: usize) -> Vec<StateVector> {
    (0..n).map(|i| StateVector::basis(n, i)).collect()
}

fn mean_over_time(t: &[f64], y: &[f64]) -> f64 {
    let span = t.last().copied().unwrap_or(0.0) - t.first().copied().unwrap_or(0.0);
    if y.len() < 2 || span <= 0.0 {
        return y.first().copied().unwrap_or(0.0);
    }
    let area: f64 = (1..y.len()).map(|n| 0.5 * (t[n] - t[n - 1]) * (y[n] + y[n - 1])).sum();
    area / span
}

fn norm_drift(rec: &TrajectoryRecord) -> f64 {
    rec.norm.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max)
}

fn rows(rec: &TrajectoryRecord, coherence: Option<&[f64]>, grid: bool) -> Vec<TrajectoryRow> {
    (0..rec.len())
        .map(|n| TrajectoryRow {
            t: rec.times[n],
            norm: rec.norm[n],
            lambda: rec.lambda[n],
            big_lambda: rec.big_lambda[n],
            px: grid.then(|| rec.momentum[n]),
            energy: rec.energy[n],
            coherence: coherence.map(|c| c[n]),
            qcom: grid.then(|| rec.center_of_mass[n]),
        })
        .collect()
}

/// `|rho_A[0][1]|` of the exact joint state at every sample.
fn exact_coherence(
    spec: &HamiltonianSpec,
    joint0: &StateVector,
    cfg: &ScenarioConfig,
    basis_a: &[StateVector],
) -> Result<Vec<f64>, CliError> {
    let space = spec.space();
    let mut out = Vec::new();
    let mut failure = None;
    let mut obs = |_t: f64, x: &StateVector| match reduced_coherence(x, space, basis_a) {
        Ok(rho) => out.push(rho[[0, 1]].norm()),
        Err(e) => failure = failure.take().or(Some(e)),
    };
    let prop = PropagatorConfig::new(cfg.dt)?.with_method(cfg.method);
    evolve_joint(joint0, spec, cfg.t_final, &prop, &mut [&mut obs])?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(out),
    }
}

/// Steps the ensemble on the mean-field time grid and records the branch diagnostics.
fn branch_series(
    mut ens: BranchEnsemble,
    spec: &HamiltonianSpec,
    cfg: &ScenarioConfig,
) -> Result<(BranchEnsemble, Vec<BranchRow>), CliError> {
    let (n, dt) = step_count(cfg.t_final, cfg.dt);
    let mut out = Vec::with_capacity(n + 1);
    for step in 0..=n {
        if step > 0 {
            ens = evolve_branches(&ens, spec, dt, 1)?;
        }
        let overlaps = offdiagonal_overlaps_with(&ens, cfg.offdiag_threshold)?;
        let spread = phase_spread(&ens)?;
        out.push(BranchRow {
            t: ens.time(),
            max_off_diag: overlaps.max_off_diag,
            spread_rate: spread.spread_rate,
            density: spread.density,
            nu_c: select_dominant(&ens)?.nu_c,
        });
    }
    Ok((ens, out))
}

fn branch_summary(summary: &mut Summary, ens: &BranchEnsemble, series: &[BranchRow], cfg: &ScenarioConfig) -> Result<(), CliError> {
    let overlaps = offdiagonal_overlaps_with(ens, cfg.offdiag_threshold)?;
    let spread = phase_spread(ens)?;
    let selection = select_dominant(ens)?;
    summary.nu_c = Some(selection.nu_c);
    summary.max_off_diag = Some(overlaps.max_off_diag);
    summary.validity = Validity {
        phases_dense: Some(spread.flags.phases_dense),
        phases_spread: Some(spread.flags.phases_spread),
        off_diagonal_flagged: Some(overlaps.flagged),
    };
    let t: Vec<f64> = series.iter().map(|r| r.t).collect();
    let omega: Vec<f64> = series.iter().map(|r| r.max_off_diag).collect();
    summary.headline.insert("mean_off_diag".into(), mean_over_time(&t, &omega));
    summary.headline.insert("spread_rate".into(), spread.spread_rate);
    summary.headline.insert("phase_density".into(), spread.density);
    let kernel = interference_kernel(&ens.weights(), &ens.big_lambdas(), ens.hbar)?;
    summary.headline.insert("kernel_modulus".into(), kernel.norm());
    let (_, wave_norm) = partial_wave(ens, cfg.weight_mode)?;
    summary.headline.insert("partial_wave_norm".into(), wave_norm);
    Ok(())
}

fn meanfield_residuals(summary: &mut Summary, rec: &TrajectoryRecord) -> Result<(), CliError> {
    let action = action_identity_residual(rec)?;
    let first_law = energy_ledger(rec)?.residual;
    summary.residuals.insert("norm_drift".into(), norm_drift(rec));
    summary.residuals.insert("action_identity".into(), action);
    summary.residuals.insert("first_law".into(), first_law);
    summary.headline.insert("action_identity".into(), action);
    summary.headline.insert("first_law".into(), first_law);
    summary.headline.insert("final_lambda".into(), *rec.lambda.last().unwrap_or(&0.0));
    summary.headline.insert("final_Lambda".into(), *rec.big_lambda.last().unwrap_or(&0.0));
    Ok(())
}

fn dephasing(cfg: &ScenarioConfig) -> Result<Artifacts, CliError> {
    let (g, theta) = bath_parameters(cfg);
    let system = OperatorSum::new(2).with(cfg.system_x, &pauli_x()).with(cfg.system_z, &pauli_z()).collapse();
    let mut spec = build_dephasing_model(&g, system, cfg.hbar, capacity(cfg))?;
    if cfg.drive_rate != 0.0 {
        spec = spec.with_drive(Drive { op: pauli_z(), rate: cfg.drive_rate })?;
    }
    let q = qubit_state(cfg.system_theta, 0.0);
    let phi0 = StateVector::new(q.to_vec())?;
    let psi0 = bath_product_state(&theta.iter().map(|&t| (t, 0.0)).collect::<Vec<_>>());

    let run = evolve_meanfield(&MeanFieldState::new(phi0.clone(), psi0.clone(), &spec)?, &spec, cfg.t_final, cfg.dt, RecordOptions::default())?;
    let rec = &run.record;
    let joint0 = tensor_product(&phi0, &psi0)?;
    let coherence = exact_coherence(&spec, &joint0, cfg, &basis(2))?;
    let ens = init_branches(&joint0, spec.space(), &basis(2), &psi0, &spec)?;
    let (ens, series) = branch_series(ens, &spec, cfg)?;

    let mut summary = Summary::new(cfg.scenario.name(), cfg.seed, cfg.t_final, cfg.dt);
    summary.samples = rec.len();
    summary.model.couplings = g;
    summary.model.bath_theta = theta;
    meanfield_residuals(&mut summary, rec)?;
    if cfg.drive_rate == 0.0 {
        summary.residuals.insert("energy_rate_drift".into(), energy_plus_rate_drift(rec)?);
    }
    summary.headline.insert("mean_coherence".into(), mean_over_time(&rec.times, &coherence));
    branch_summary(&mut summary, &ens, &series, cfg)?;
    Ok(Artifacts { trajectory: Some(rows(rec, Some(&coherence), false)), branches: Some(series), summary })
}

fn grid2body(cfg: &ScenarioConfig) -> Result<Artifacts, CliError> {
    let n = cfg.points();
    capacity(cfg).check(n * n)?;
    let trap = match cfg.potential {
        PotentialKind::Harmonic => (cfg.omega, 0.0),
        _ => (0.0, 0.0),
    };
    let spec = build_grid_pair(&GridPairParams {
        n_a: n,
        n_b: n,
        spacing: cfg.length / n as f64,
        origin: -0.5 * cfg.length,
        mass_a: cfg.mass,
        mass_b: cfg.mass_b,
        q_product: cfg.q_product,
        softening: cfg.softening,
        boundary: cfg.boundary,
        hbar: cfg.hbar,
        trap_a: trap,
        trap_b: trap,
    })?;
    let (grid_a, grid_b) = (spec.grid_a.expect("grid model"), spec.grid_b.expect("grid model"));
    let spec = if cfg.drive_rate != 0.0 {
        spec.with_drive(Drive { op: LinearOperator::diagonal(grid_a.positions()), rate: cfg.drive_rate })?
    } else {
        spec
    };
    let phi0 = gaussian_packet(&grid_a, cfg.x0, cfg.p0, cfg.sigma, cfg.hbar)?;
    let psi0 = gaussian_packet(&grid_b, cfg.x0_b, cfg.p0_b, cfg.sigma, cfg.hbar)?;
    let run = evolve_meanfield(&MeanFieldState::new(phi0, psi0, &spec)?, &spec, cfg.t_final, cfg.dt, RecordOptions::default())?;
    let rec = &run.record;

    let mut summary = Summary::new(cfg.scenario.name(), cfg.seed, cfg.t_final, cfg.dt);
    summary.samples = rec.len();
    meanfield_residuals(&mut summary, rec)?;
    let newton = newton_residual(rec)?;
    summary.residuals.insert("newton".into(), newton);
    summary.headline.insert("newton".into(), newton);
    summary.headline.insert("final_px".into(), *rec.momentum.last().unwrap_or(&0.0));
    summary.headline.insert("final_qCoM".into(), *rec.center_of_mass.last().unwrap_or(&0.0));
    Ok(Artifacts { trajectory: Some(rows(rec, None, true)), branches: None, summary })
}

fn classical_limit(cfg: &ScenarioConfig) -> Result<Artifacts, CliError> {
    let grid = Grid::centered(cfg.points(), cfg.length, cfg.boundary, cfg.mass)?;
    let (mass, omega, force) = (cfg.mass, cfg.omega, cfg.force);
    let potential: Box<dyn Potential> = match cfg.potential {
        PotentialKind::Harmonic => Box::new(Harmonic { mass, omega, center: 0.0 }),
        PotentialKind::Free => Box::new(Free),
        PotentialKind::Linear => Box::new(Linear { slope: force }),
    };
    let spec = build_grid_single(grid, cfg.hbar, |x| potential.value(x))?;
    let phi0 = gaussian_packet(&grid, cfg.x0, cfg.p0, cfg.sigma, cfg.hbar)?;
    let run = evolve_meanfield(
        &MeanFieldState::new(phi0, StateVector::basis(1, 0), &spec)?,
        &spec,
        cfg.t_final,
        cfg.dt,
        RecordOptions::default(),
    )?;
    let rec = &run.record;
    let quantum = ehrenfest_trajectory(rec)?;
    let start = ClassicalState::new(quantum.states[0].q, quantum.states[0].p, mass)?;
    let (_, dt) = step_count(cfg.t_final, cfg.dt);
    let classical = classical_oracle(start, potential.as_ref(), cfg.t_final, dt)?;
    let (dq, dp) = relative_phase_space_error(&quantum.states, &classical);

    let mut summary = Summary::new(cfg.scenario.name(), cfg.seed, cfg.t_final, cfg.dt);
    summary.samples = rec.len();
    let newton = newton_residual(rec)?;
    summary.residuals.insert("norm_drift".into(), norm_drift(rec));
    summary.residuals.insert("newton".into(), newton);
    summary.residuals.insert("relative_q".into(), dq);
    summary.residuals.insert("relative_p".into(), dp);
    if cfg.potential != PotentialKind::Harmonic {
        // uniform force: p(t) = p(0) - F t
        let slope = if cfg.potential == PotentialKind::Linear { force } else { 0.0 };
        let p0 = rec.momentum[0];
        let dev = rec.momentum.iter().zip(&rec.times).map(|(p, t)| (p - (p0 - slope * t)).abs()).fold(0.0, f64::max);
        summary.residuals.insert("momentum_law".into(), dev);
        summary.headline.insert("momentum_law".into(), dev);
    }
    summary.headline.insert("newton".into(), newton);
    summary.headline.insert("relative_q".into(), dq);
    summary.headline.insert("relative_p".into(), dp);
    Ok(Artifacts { trajectory: Some(rows(rec, None, true)), branches: None, summary })
}

fn pointer_values(cfg: &ScenarioConfig) -> Vec<f64> {
    let n = cfg.branches;
    let c = 0.5 * (n as f64 - 1.0);
    (0..n)
        .map(|nu| {
            let x = nu as f64 - c;
            match cfg.pointer {
                PointerProfile::Linear => x,
                PointerProfile::Quadratic => x * x / n as f64,
            }
        })
        .collect()
}

/// Eigenvectors of the real symmetric tridiagonal system Hamiltonian, ordered by energy.
fn energy_basis(diag: &[f64], hop: f64) -> Result<Vec<StateVector>, CliError> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![hop; n];
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    symmetric_tridiagonal_eigen(&mut d, &mut e, &mut z)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    order
        .into_iter()
        .map(|k| StateVector::from_real(&(0..n).map(|i| z[i * n + k]).collect::<Vec<_>>()).map_err(CliError::from))
        .collect()
}

fn branch_study(cfg: &ScenarioConfig) -> Result<Artifacts, CliError> {
    let (g, theta) = bath_parameters(cfg);
    let values = pointer_values(cfg);
    let n = values.len();
    let diag: Vec<f64> = values.iter().map(|v| cfg.system_z * v).collect();
    let hop: Vec<C64> = vec![C64::new(cfg.system_x, 0.0); n - 1];
    let system = LinearOperator::tridiagonal(diag.clone(), hop, None)?;
    let spec = build_pointer_model(&values, &g, Some(system), cfg.hbar, capacity(cfg))?;
    let basis_a = match cfg.basis {
        BranchBasis::Pointer => basis(n),
        BranchBasis::Energy => energy_basis(&diag, cfg.system_x)?,
    };
    let phi0 = StateVector::from_real(&vec![1.0; n])?.normalized()?;
    let psi0 = bath_product_state(&theta.iter().map(|&t| (t, 0.0)).collect::<Vec<_>>());

    let run = evolve_meanfield(&MeanFieldState::new(phi0.clone(), psi0.clone(), &spec)?, &spec, cfg.t_final, cfg.dt, RecordOptions::default())?;
    let rec = &run.record;
    let joint0 = tensor_product(&phi0, &psi0)?;
    let coherence = exact_coherence(&spec, &joint0, cfg, &basis_a)?;
    let ens = init_branches(&joint0, spec.space(), &basis_a, &psi0, &spec)?;
    let (ens, series) = branch_series(ens, &spec, cfg)?;

    let mut summary = Summary::new(cfg.scenario.name(), cfg.seed, cfg.t_final, cfg.dt);
    summary.samples = rec.len();
    summary.model.couplings = g;
    summary.model.bath_theta = theta;
    summary.model.pointer_values = values;
    meanfield_residuals(&mut summary, rec)?;
    summary.headline.insert("mean_coherence".into(), mean_over_time(&rec.times, &coherence));
    branch_summary(&mut summary, &ens, &series, cfg)?;
    Ok(Artifacts { trajectory: Some(rows(rec, Some(&coherence), false)), branches: Some(series), summary })
}

fn check(cfg: &ScenarioConfig) -> Result<Artifacts, CliError> {
    let reports = branchsim_core::oracles::battery(cfg.seed, cfg.filter.as_deref())?;
    if reports.is_empty() {
        return Err(ConfigError::global(format!(
            "filter {:?} matches no oracle (available: {})",
            cfg.filter.as_deref().unwrap_or(""),
            branchsim_core::oracles::BATTERY.join(", ")
        ))
        .into());
    }
    let mut summary = Summary::new(cfg.scenario.name(), cfg.seed, 0.0, 0.0);
    summary.samples = reports.len();
    for r in &reports {
        summary.residuals.insert(r.name.clone(), r.max_abs_error);
        summary.headline.insert(r.name.clone(), r.max_abs_error);
    }
    summary.oracles = reports
        .into_iter()
        .map(|r| OracleEntry {
            name: r.name,
            max_abs_error: r.max_abs_error,
            samples: r.samples,
            seed: r.seed,
            threshold: r.threshold,
            passed: r.passed,
        })
        .collect();
    Ok(Artifacts { trajectory: None, branches: None, summary })
}
