use branchsim_core::hamiltonian::{build_grid_single, Boundary, Grid, HamiltonianSpec};
use branchsim_core::meanfield::{evolve_meanfield, MeanFieldState, RecordOptions};
use branchsim_core::observables::{
    classical_oracle, ehrenfest_trajectory, gaussian_packet, newton_residual, relative_phase_space_error,
    translation_decomposition, ClassicalState, Harmonic,
};
use branchsim_core::{StateVector, TrajectoryRecord};

fn run(grid: Grid, v: impl Fn(f64) -> f64, phi0: StateVector, t: f64, dt: f64, states: bool) -> (HamiltonianSpec, TrajectoryRecord) {
    let spec = build_grid_single(grid, 1.0, v).unwrap();
    let s = MeanFieldState::new(phi0, StateVector::basis(1, 0), &spec).unwrap();
    (spec.clone(), evolve_meanfield(&s, &spec, t, dt, RecordOptions { states }).unwrap().record)
}

#[test]
fn newton_residual_in_harmonic_well_converges() {
    let grid = Grid::centered(256, 20.0, Boundary::HardWall, 1.0).unwrap();
    let phi0 = gaussian_packet(&grid, 1.0, 0.0, std::f64::consts::FRAC_1_SQRT_2, 1.0).unwrap();
    let res = |dt| newton_residual(&run(grid, |x| 0.5 * x * x, phi0.clone(), 1.0, dt, false).1).unwrap();
    let (r1, r2) = (res(1e-3), res(5e-4));
    println!("newton residual {r1:.3e} {r2:.3e}");
    assert!(r1 < 1e-4 && r2 < 2.5e-5);
}

#[test]
fn harmonic_packet_follows_classical_orbit() {
    let grid = Grid::centered(2048, 20.0, Boundary::HardWall, 1.0).unwrap();
    let sigma = std::f64::consts::FRAC_1_SQRT_2;
    let period = 2.0 * std::f64::consts::PI;
    let phi0 = gaussian_packet(&grid, 1.0, 0.0, sigma, 1.0).unwrap();
    let (_, rec) = run(grid, |x| 0.5 * x * x, phi0, period, 1e-3, false);
    let e = ehrenfest_trajectory(&rec).unwrap();
    let start = ClassicalState::new(e.states[0].q, e.states[0].p, 1.0).unwrap();
    let reference = classical_oracle(start, &Harmonic { mass: 1.0, omega: 1.0, center: 0.0 }, period, 1e-3).unwrap();
    let (dq, dp) = relative_phase_space_error(&e.states, &reference);
    println!("harmonic relative error q {dq:.3e} p {dp:.3e}");
    assert!(dq < 1e-3 && dp < 1e-3);
}

#[test]
fn free_packet_moves_uniformly() {
    let grid = Grid::centered(1024, 40.0, Boundary::Periodic, 1.0).unwrap();
    let phi0 = gaussian_packet(&grid, -3.0, 1.0, 1.0, 1.0).unwrap();
    let (_, rec) = run(grid, |_| 0.0, phi0, 2.0, 1e-3, false);
    let e = ehrenfest_trajectory(&rec).unwrap();
    let (q0, p0) = (e.states[0].q, e.states[0].p);
    let worst = e
        .states
        .iter()
        .zip(&e.times)
        .map(|(s, t)| ((s.q - (q0 + p0 * t)) / (q0 + p0 * t)).abs())
        .fold(0.0, f64::max);
    println!("free relative error {worst:.3e}");
    assert!(worst < 1e-8);
}

#[test]
fn harmonic_translation_balance() {
    let grid = Grid::centered(256, 20.0, Boundary::Periodic, 1.0).unwrap();
    let phi0 = gaussian_packet(&grid, 1.0, 0.0, std::f64::consts::FRAC_1_SQRT_2, 1.0).unwrap();
    let (spec, rec) = run(grid, |x| 0.5 * x * x, phi0, 1.0, 1e-3, true);
    let (b, k) = translation_decomposition(&rec, &spec, grid.spacing).unwrap();
    println!("translation boundary {b:.6} bulk {k:.6} sum {:.3e}", b + k);
    assert!((b + k).abs() < 1e-5);
}

/// Largest `|p(t) - (p0 - F t)|` for a packet in the potential `F x`.
fn constant_force_error(n: usize, length: f64, sigma: f64, p0: f64, force: f64) -> f64 {
    let grid = Grid::centered(n, length, Boundary::Periodic, 1.0).unwrap();
    let phi0 = gaussian_packet(&grid, 0.0, p0, sigma, 1.0).unwrap();
    let (_, rec) = run(grid, move |x| force * x, phi0, 1.0, 1e-3, false);
    let p_start = rec.momentum[0];
    rec.momentum.iter().zip(&rec.times).map(|(p, t)| (p - (p_start - force * t)).abs()).fold(0.0, f64::max)
}

#[test]
fn constant_force_momentum_error_is_lattice_dispersion() {
    // deviation tracks F T dx^2 <k^2> / 2 and shrinks with the lattice spacing
    let coarse = constant_force_error(512, 40.0, 2.0, 0.5, 0.2);
    let fine = constant_force_error(2048, 40.0, 2.0, 0.5, 0.2);
    println!("constant force |dp| coarse {coarse:.3e} fine {fine:.3e} ratio {:.2}", coarse / fine);
    assert!((12.0..=20.0).contains(&(coarse / fine)));
}
