//! Post-processing of trajectories: lattice momentum and force, the energy and
//! action ledgers, variational stationarity, and the classical limit.

pub mod classical;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonian::{Boundary, Grid, HamiltonianSpec};
use crate::hilbert::{overlap, StateVector};
use crate::operator::Apply;
use crate::trajectory::TrajectoryRecord;

pub use classical::{classical_oracle, ClassicalState, Free, Harmonic, Linear, Potential, Quartic};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Imaginary residue of the momentum expectation reported as an error; smaller residues are dropped.
pub const MOMENTUM_IMAG_ERROR: f64 = 1e-8;

fn neighbor(a: &[C64], j: isize, boundary: Boundary) -> C64 {
    let n = a.len() as isize;
    match boundary {
        Boundary::Periodic => a[j.rem_euclid(n) as usize],
        Boundary::HardWall if j < 0 || j >= n => ZERO,
        Boundary::HardWall => a[j as usize],
    }
}

/// `<phi| (hbar/i) d/dx |phi>` with the central difference; hard walls use a
/// zero ghost point so the operator stays Hermitian.
pub fn momentum(phi: &StateVector, grid: &Grid, hbar: f64) -> Result<f64> {
    if phi.dim() != grid.n {
        return Err(Error::shape(format!("state has dim {}, grid has {} points", phi.dim(), grid.n)));
    }
    let a = phi.amplitudes();
    let mut s = ZERO;
    for j in 0..a.len() {
        let d = neighbor(a, j as isize + 1, grid.boundary) - neighbor(a, j as isize - 1, grid.boundary);
        s += a[j].conj() * d;
    }
    // (hbar / i) * s / (2 dx)
    let p = C64::new(0.0, -hbar) * s / (2.0 * grid.spacing);
    if p.im.abs() > MOMENTUM_IMAG_ERROR {
        return Err(Error::HermiticityError(p.im));
    }
    Ok(p.re)
}

/// Mean and variance of the position distribution `|phi|^2 / ||phi||^2`.
pub fn position_moments(phi: &StateVector, grid: &Grid) -> (f64, f64) {
    let w: f64 = phi.norm_sqr();
    let mut mean = 0.0;
    let mut second = 0.0;
    for (j, a) in phi.amplitudes().iter().enumerate() {
        let x = grid.x(j);
        mean += a.norm_sqr() * x;
        second += a.norm_sqr() * x * x;
    }
    mean /= w;
    (mean, second / w - mean * mean)
}

/// Lattice form of `<|phi|^2, dV/dx>`: `sum_j (V[j+1] - V[j]) / dx * Re(conj(phi_j) phi_{j+1})`.
/// It is the quantity for which the central-difference momentum obeys
/// `dp/dt = -force` exactly on the lattice (away from hard walls).
pub fn lattice_force(phi: &StateVector, grid: &Grid, v: &[f64]) -> f64 {
    let a = phi.amplitudes();
    let n = a.len();
    let bond = |j: usize, k: usize| (v[k] - v[j]) / grid.spacing * (a[j].conj() * a[k]).re;
    let mut f: f64 = (0..n - 1).map(|j| bond(j, j + 1)).sum();
    if grid.boundary == Boundary::Periodic {
        f += bond(n - 1, 0);
    }
    f
}

/// `max_n |(p[n+1] - p[n-1]) / (t[n+1] - t[n-1]) + force[n]|` over interior samples.
pub fn newton_residual(traj: &TrajectoryRecord) -> Result<f64> {
    traj.require(&traj.momentum, "momentum")?;
    traj.require(&traj.force, "force")?;
    if traj.len() < 3 {
        return Err(Error::InvalidArgument("Newton residual needs at least 3 samples".into()));
    }
    let t = &traj.times;
    let p = &traj.momentum;
    Ok((1..traj.len() - 1)
        .map(|n| ((p[n + 1] - p[n - 1]) / (t[n + 1] - t[n - 1]) + traj.force[n]).abs())
        .fold(0.0, f64::max))
}

fn trapezoid(t: &[f64], y: &[f64], i1: usize, i2: usize) -> f64 {
    (i1..i2).map(|n| 0.5 * (t[n + 1] - t[n]) * (y[n] + y[n + 1])).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyLedger {
    /// `|dE + d(lambda) - int <dV/dt> dt|`.
    pub residual: f64,
    /// `lambda(t2) - lambda(t1)`.
    pub heat_out: f64,
    pub work: f64,
}

/// First-law balance over the whole trajectory.
pub fn energy_ledger(traj: &TrajectoryRecord) -> Result<EnergyLedger> {
    energy_ledger_between(traj, 0, traj.len().saturating_sub(1))
}

pub fn energy_ledger_between(traj: &TrajectoryRecord, i1: usize, i2: usize) -> Result<EnergyLedger> {
    traj.require(&traj.lambda, "lambda")?;
    traj.require(&traj.energy, "energy")?;
    traj.require(&traj.dv_dt, "dv_dt")?;
    if i1 > i2 || i2 >= traj.len() {
        return Err(Error::InvalidArgument(format!("bad sample range {i1}..{i2}")));
    }
    let d_energy = traj.energy[i2] - traj.energy[i1];
    let heat_out = traj.lambda[i2] - traj.lambda[i1];
    let work = trapezoid(&traj.times, &traj.dv_dt, i1, i2);
    Ok(EnergyLedger { residual: (d_energy + heat_out - work).abs(), heat_out, work })
}

/// `max_n |(E + lambda)(t_n) - (E + lambda)(t_0)|`, the static-field restatement
/// of the first law.
pub fn energy_plus_rate_drift(traj: &TrajectoryRecord) -> Result<f64> {
    traj.require(&traj.lambda, "lambda")?;
    traj.require(&traj.energy, "energy")?;
    let c0 = traj.energy[0] + traj.lambda[0];
    Ok(traj.energy.iter().zip(&traj.lambda).map(|(e, l)| (e + l - c0).abs()).fold(0.0, f64::max))
}

fn midpoint(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    Ok(a.add_scaled(C64::new(1.0, 0.0), b)?.scaled(C64::new(0.5, 0.0)))
}

/// Action accumulated over one step,
/// `hbar arg<phi0|phi1> + dt (<phi0|h0|phi0> + <phi1|h1|phi1>) / 2` for
/// normalized states. The overlap phase makes the increment vanish identically
/// on stationary states.
pub fn action_increment(
    phi0: &StateVector,
    phi1: &StateVector,
    h0: &dyn Apply,
    h1: &dyn Apply,
    dt: f64,
    hbar: f64,
) -> Result<f64> {
    let kinetic = hbar * overlap(phi0, phi1)?.arg();
    let h = 0.5 * (h0.expectation(phi0).re / phi0.norm_sqr() + h1.expectation(phi1).re / phi1.norm_sqr());
    Ok(kinetic + h * dt)
}

/// Complex increment of the action with the multiplier term `-lambda <m|m>`.
fn constrained_increment(
    phi0: &StateVector,
    phi1: &StateVector,
    h0: &dyn Apply,
    h1: &dyn Apply,
    lambda_mid: f64,
    dt: f64,
    hbar: f64,
) -> Result<C64> {
    let m = midpoint(phi0, phi1)?;
    let d = phi1.add_scaled(C64::new(-1.0, 0.0), phi0)?;
    let kinetic = C64::new(0.0, -hbar) * overlap(&m, &d)?;
    let h = 0.5 * (h0.expectation(&m) + h1.expectation(&m));
    Ok(kinetic + (h - lambda_mid * m.norm_sqr()) * dt)
}

/// `S` over the whole trajectory.
pub fn action_value(traj: &TrajectoryRecord) -> Result<f64> {
    action_between(traj, 0, traj.len().saturating_sub(1))
}

/// `S` over `[t[i1], t[i2]]`.
pub fn action_between(traj: &TrajectoryRecord, i1: usize, i2: usize) -> Result<f64> {
    traj.require(&traj.action_increments, "action increments")?;
    if i1 > i2 || i2 >= traj.len() {
        return Err(Error::InvalidArgument(format!("bad sample range {i1}..{i2}")));
    }
    Ok(traj.action_increments[i1 + 1..=i2].iter().sum())
}

/// `|S - (Lambda(t2) - Lambda(t1))|` over the whole trajectory.
pub fn action_identity_residual(traj: &TrajectoryRecord) -> Result<f64> {
    traj.require(&traj.big_lambda, "Lambda")?;
    let n = traj.len() - 1;
    Ok((action_value(traj)? - (traj.big_lambda[n] - traj.big_lambda[0])).abs())
}

/// Constrained action `sum_n [-i hbar <m|d phi> + dt <m|(h - lambda)|m>]` of the
/// recorded states, with the mean fields and `lambda` taken from the record.
pub fn constrained_action(traj: &TrajectoryRecord, spec: &HamiltonianSpec, states: &[StateVector]) -> Result<C64> {
    traj.require(&traj.lambda, "lambda")?;
    if traj.field_coefficients.len() != traj.len() {
        return Err(Error::IncompleteTrajectory("field coefficients"));
    }
    if states.len() != traj.len() {
        return Err(Error::IncompleteTrajectory("states"));
    }
    let mut s = ZERO;
    for n in 0..traj.len() - 1 {
        let h0 = spec.effective_a(traj.times[n], &traj.field_coefficients[n]);
        let h1 = spec.effective_a(traj.times[n + 1], &traj.field_coefficients[n + 1]);
        let lam = 0.5 * (traj.lambda[n] + traj.lambda[n + 1]);
        let dt = traj.times[n + 1] - traj.times[n];
        s += constrained_increment(&states[n], &states[n + 1], &h0, &h1, lam, dt, traj.hbar)?;
    }
    Ok(s)
}

/// Endpoint norm above which a perturbation is rejected.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// `|S_c[phi + eps dphi] - S_c[phi]| / eps` for the constrained action, varying
/// the state (and hence its conjugate) along `direction`.
pub fn stationarity_check(
    traj: &TrajectoryRecord,
    spec: &HamiltonianSpec,
    epsilon: f64,
    direction: &[StateVector],
) -> Result<f64> {
    if traj.states.is_empty() {
        return Err(Error::IncompleteTrajectory("states"));
    }
    if direction.len() != traj.len() {
        return Err(Error::shape(format!("{} perturbation samples for {} times", direction.len(), traj.len())));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let ends = direction[0].norm().max(direction[direction.len() - 1].norm());
    if ends > BOUNDARY_TOLERANCE {
        return Err(Error::BoundaryError(ends));
    }
    if direction.iter().all(|d| d.norm() == 0.0) {
        return Ok(0.0);
    }
    let base = constrained_action(traj, spec, &traj.states)?;
    let varied: Vec<StateVector> = traj
        .states
        .iter()
        .zip(direction)
        .map(|(s, d)| s.add_scaled(C64::new(epsilon, 0.0), d))
        .collect::<Result<_>>()?;
    let s = constrained_action(traj, spec, &varied)?;
    Ok((s - base).norm() / epsilon)
}

/// `sin(pi (t - t1)/(t2 - t1)) exp(i omega t) chi` at each sample time; vanishes
/// at both ends of the trajectory.
pub fn bump_perturbation(times: &[f64], chi: &StateVector, omega: f64) -> Vec<StateVector> {
    let (t1, t2) = (times[0], times[times.len() - 1]);
    let last = times.len() - 1;
    times
        .iter()
        .enumerate()
        .map(|(n, &t)| {
            let envelope = if n == 0 || n == last { 0.0 } else { (std::f64::consts::PI * (t - t1) / (t2 - t1)).sin() };
            chi.scaled(C64::from_polar(envelope, omega * t))
        })
        .collect()
}

/// Center-of-mass trajectory of a grid run.
#[derive(Clone, Debug, PartialEq)]
pub struct EhrenfestTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<ClassicalState>,
    pub dispersion: Vec<f64>,
}

pub fn ehrenfest_trajectory(traj: &TrajectoryRecord) -> Result<EhrenfestTrajectory> {
    traj.require(&traj.center_of_mass, "center of mass")?;
    traj.require(&traj.momentum, "momentum")?;
    let m = traj.mass.ok_or(Error::IncompleteTrajectory("mass"))?;
    let states = traj
        .center_of_mass
        .iter()
        .zip(&traj.momentum)
        .map(|(&q, &p)| ClassicalState::new(q, p, m))
        .collect::<Result<_>>()?;
    Ok(EhrenfestTrajectory { times: traj.times.clone(), states, dispersion: traj.dispersion.clone() })
}

/// Relative deviation `max|dq| / max|q_ref|`, `max|dp| / max|p_ref|` between two
/// classical trajectories sampled on the same grid.
pub fn relative_phase_space_error(a: &[ClassicalState], reference: &[ClassicalState]) -> (f64, f64) {
    let max_q = reference.iter().map(|s| s.q.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let max_p = reference.iter().map(|s| s.p.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let dq = a.iter().zip(reference).map(|(x, y)| (x.q - y.q).abs()).fold(0.0, f64::max);
    let dp = a.iter().zip(reference).map(|(x, y)| (x.p - y.p).abs()).fold(0.0, f64::max);
    (dq / max_q, dp / max_p)
}

/// The two terms of the lattice translation balance
/// `p(t2) - p(t1) + int <dV/dx> dt = 0`, with the momentum evaluated by index
/// rolls of the recorded states.
pub fn translation_decomposition(traj: &TrajectoryRecord, spec: &HamiltonianSpec, delta_x: f64) -> Result<(f64, f64)> {
    let grid = spec.grid_a.ok_or_else(|| Error::InvalidArgument("translation needs a grid model".into()))?;
    if grid.boundary != Boundary::Periodic {
        return Err(Error::TopologyError);
    }
    if (delta_x - grid.spacing).abs() > 1e-12 * grid.spacing {
        return Err(Error::InvalidArgument(format!(
            "translation step {delta_x} must equal the lattice spacing {}",
            grid.spacing
        )));
    }
    traj.require(&traj.force, "force")?;
    if traj.states.len() != traj.len() {
        return Err(Error::IncompleteTrajectory("states"));
    }
    let rolled_momentum = |phi: &StateVector| -> Result<f64> {
        let a = phi.amplitudes();
        let n = a.len();
        let fwd: Vec<C64> = (0..n).map(|j| a[(j + 1) % n]).collect();
        let back: Vec<C64> = (0..n).map(|j| a[(j + n - 1) % n]).collect();
        let d = StateVector::new(fwd)?.add_scaled(C64::new(-1.0, 0.0), &StateVector::new(back)?)?;
        let p = C64::new(0.0, -traj.hbar) * overlap(phi, &d)? / (2.0 * delta_x);
        if p.im.abs() > MOMENTUM_IMAG_ERROR {
            return Err(Error::HermiticityError(p.im));
        }
        Ok(p.re)
    };
    let last = traj.len() - 1;
    let boundary = rolled_momentum(&traj.states[last])? - rolled_momentum(&traj.states[0])?;
    let bulk = trapezoid(&traj.times, &traj.force, 0, last);
    Ok((boundary, bulk))
}

/// Normalized Gaussian `exp(-(x - x0)^2 / (4 s^2) + i p0 x / hbar)` on the grid.
pub fn gaussian_packet(grid: &Grid, x0: f64, p0: f64, sigma: f64, hbar: f64) -> Result<StateVector> {
    let amps = grid
        .positions()
        .into_iter()
        .map(|x| C64::from_polar((-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp(), p0 * x / hbar))
        .collect();
    StateVector::new(amps)?.normalized()
}
