//! Independent reference implementations. They use different algorithms from
//! the production paths (dense eigendecomposition, compensated summation,
//! brute-force index loops) and exist to cross-check them.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{Capacity, StateVector};

fn to_nalgebra(h: &Array2<C64>) -> DMatrix<C64> {
    let n = h.nrows();
    DMatrix::from_fn(n, n, |i, j| h[[i, j]])
}

/// Eigenvalues of a Hermitian matrix.
pub fn dense_eigenvalues(h: &Array2<C64>) -> Vec<f64> {
    to_nalgebra(h).symmetric_eigen().eigenvalues.iter().copied().collect()
}

/// `exp(-i H t / hbar) phi` through a full Hermitian eigendecomposition.
pub fn dense_propagate(phi: &StateVector, h: &Array2<C64>, t: f64, hbar: f64) -> Result<StateVector> {
    let n = h.nrows();
    Capacity::default().check(n)?;
    if phi.dim() != n || h.ncols() != n {
        return Err(Error::shape("oracle propagation dimension mismatch"));
    }
    let eig = to_nalgebra(h).symmetric_eigen();
    let v = DVector::from_iterator(n, phi.amplitudes().iter().copied());
    let mut c = eig.eigenvectors.adjoint() * v;
    for (ci, &e) in c.iter_mut().zip(eig.eigenvalues.iter()) {
        *ci *= C64::from_polar(1.0, -e * t / hbar);
    }
    let out = &eig.eigenvectors * c;
    StateVector::new(out.iter().copied().collect())
}

/// Kahan-compensated complex sum.
pub fn kahan_sum(terms: &[C64]) -> C64 {
    let (mut re, mut im) = (0.0f64, 0.0f64);
    let (mut cre, mut cim) = (0.0f64, 0.0f64);
    for z in terms {
        let y = z.re - cre;
        let t = re + y;
        cre = (t - re) - y;
        re = t;
        let y = z.im - cim;
        let t = im + y;
        cim = (t - im) - y;
        im = t;
    }
    C64::new(re, im)
}

/// `rho_A[i][j] = sum_b joint[i, b] conj(joint[j, b])` by explicit index loops.
pub fn dense_partial_trace(joint: &StateVector, dim_a: usize, dim_b: usize) -> Array2<C64> {
    let x = joint.amplitudes();
    Array2::from_shape_fn((dim_a, dim_a), |(i, j)| {
        let terms: Vec<C64> = (0..dim_b).map(|b| x[i * dim_b + b] * x[j * dim_b + b].conj()).collect();
        kahan_sum(&terms)
    })
}

/// Lowest eigenvector of a Hermitian matrix.
pub fn dense_ground_state(h: &Array2<C64>) -> StateVector {
    let eig = to_nalgebra(h).symmetric_eigen();
    let k = eig.eigenvalues.imin();
    StateVector::new(eig.eigenvectors.column(k).iter().copied().collect()).expect("nonempty")
}

/// `prod_k <b_k| exp(-2 i g_k sigma_z t / hbar) |b_k>` for the product bath state
/// with polar angles `bath[k] = (theta_k, phase_k)`. This is the overlap
/// `<psi_-|psi_+>` of the bath factors conditioned on the two system
/// pointer states.
pub fn dephasing_closed_form(g: &[f64], bath: &[(f64, f64)], t: f64, hbar: f64) -> C64 {
    g.iter()
        .zip(bath)
        .map(|(&gk, &(theta, _))| {
            let up = (0.5 * theta).cos().powi(2);
            let down = (0.5 * theta).sin().powi(2);
            let w = 2.0 * gk * t / hbar;
            C64::from_polar(up, -w) + C64::from_polar(down, w)
        })
        .fold(C64::new(1.0, 0.0), |acc, z| acc * z)
}

/// Centre of the width-`window` block with the largest `|sum w e^{i L / hbar}|`;
/// blocks are truncated at the ends, ties go to the lowest centre.
pub fn windowed_kernel_argmax(weights: &[f64], big_lambdas: &[f64], hbar: f64, window: usize) -> usize {
    assert!(window >= 3 && window % 2 == 1, "window must be odd and at least 3");
    let n = weights.len();
    let half = window / 2;
    let mut best = (0usize, f64::MIN);
    for c in 0..n {
        let lo = c.saturating_sub(half);
        let hi = (c + half).min(n - 1);
        let terms: Vec<C64> = (lo..=hi)
            .map(|nu| {
                let ph = big_lambdas[nu] / hbar;
                C64::new(weights[nu] * ph.cos(), weights[nu] * ph.sin())
            })
            .collect();
        let v = kahan_sum(&terms).norm();
        if v > best.1 {
            best = (c, v);
        }
    }
    best.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub name: String,
    pub max_abs_error: f64,
    pub samples: usize,
    pub seed: u64,
    pub threshold: f64,
    pub passed: bool,
}

impl OracleReport {
    fn new(name: &str, max_abs_error: f64, samples: usize, seed: u64, threshold: f64) -> Self {
        OracleReport {
            name: name.to_string(),
            max_abs_error,
            samples,
            seed,
            threshold,
            passed: max_abs_error.is_finite() && max_abs_error <= threshold,
        }
    }
}

/// Names of the checks run by [`battery`].
pub const BATTERY: [&str; 8] = [
    "dense_propagate",
    "partial_trace",
    "dirichlet_kernel",
    "dephasing_closed_form",
    "dephasing_dense",
    "windowed_kernel",
    "joint_rate",
    "leapfrog_harmonic",
];

fn random_hermitian<R: rand::Rng>(rng: &mut R, n: usize) -> crate::operator::LinearOperator {
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        m[[i, i]] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
        for j in i + 1..n {
            let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            m[[i, j]] = z;
            m[[j, i]] = z.conj();
        }
    }
    crate::operator::LinearOperator::dense(m).expect("square")
}

/// Random smooth stationary-phase profile with a single interior vertex.
pub fn random_phase_profile<R: rand::Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let a = rng.gen_range(0.02..0.04);
    let lo = n as f64 / 4.0;
    let nu0 = rng.gen_range(lo..3.0 * lo);
    let b = rng.gen_range(-a / 96.0..a / 96.0);
    (0..n)
        .map(|nu| {
            let x = nu as f64 - nu0;
            a * x * x + b * x * x * x
        })
        .collect()
}

/// Runs every oracle whose name contains `filter`, cross-checking the main code
/// paths against the independent references above.
pub fn battery(seed: u64, filter: Option<&str>) -> Result<Vec<OracleReport>> {
    use crate::branches::{interference_kernel, select_stationary};
    use crate::exactprop::{step_exact, PropagatorConfig};
    use crate::hamiltonian::{bath_product_state, build_dephasing_model, ProductTerm};
    use crate::hilbert::{reduced_coherence, tensor_product, BipartiteSpace};
    use crate::meanfield::MeanFieldState;
    use crate::operator::{kron, Apply, LinearOperator};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let mut out = Vec::new();
    let wanted = |name: &str| filter.is_none_or(|f| name.contains(f));

    if wanted(BATTERY[0]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut err = 0.0f64;
        for _ in 0..5 {
            let h = random_hermitian(&mut rng, 32);
            let phi = StateVector::random_unit(&mut rng, 32);
            let got = step_exact(&phi, &h, &PropagatorConfig::new(1.0)?)?;
            let want = dense_propagate(&phi, &h.to_dense(), 1.0, 1.0)?;
            err = err.max(got.max_abs_diff(&want));
        }
        out.push(OracleReport::new(BATTERY[0], err, 5, seed, 1e-9));
    }
    if wanted(BATTERY[1]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let mut err = 0.0f64;
        for _ in 0..5 {
            let joint = StateVector::random_unit(&mut rng, 24);
            let space = BipartiteSpace::new(4, 6)?;
            let basis: Vec<_> = (0..4).map(|i| StateVector::basis(4, i)).collect();
            let rho = reduced_coherence(&joint, space, &basis)?;
            let want = dense_partial_trace(&joint, 4, 6);
            err = err.max(rho.iter().zip(want.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
        }
        out.push(OracleReport::new(BATTERY[1], err, 5, seed, 1e-12));
    }
    if wanted(BATTERY[2]) {
        let mut err = 0.0f64;
        let mut samples = 0;
        for n in [8usize, 64] {
            for theta in [0.1, 0.5, 1.0] {
                let l: Vec<f64> = (0..n).map(|nu| nu as f64 * theta).collect();
                let k = interference_kernel(&vec![1.0 / n as f64; n], &l, 1.0)?;
                let closed = ((n as f64 * theta / 2.0).sin() / (n as f64 * (theta / 2.0).sin())).abs();
                err = err.max((k.norm() - closed).abs());
                samples += 1;
            }
        }
        out.push(OracleReport::new(BATTERY[2], err, samples, seed, 1e-12));
    }
    if wanted(BATTERY[3]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
        let g: Vec<f64> = (0..4).map(|_| rng.gen_range(0.5..1.5)).collect();
        let bath: Vec<(f64, f64)> = (0..4).map(|_| (rng.gen_range(0.3..2.8), rng.gen_range(-3.0..3.0))).collect();
        let spec = build_dephasing_model(&g, LinearOperator::zeros(2), 1.0, Capacity::default())?;
        let psi0 = bath_product_state(&bath);
        let plus = MeanFieldState::new(StateVector::basis(2, 0), psi0.clone(), &spec)?;
        let minus = MeanFieldState::new(StateVector::basis(2, 1), psi0, &spec)?;
        let (mut p, mut m) = (plus, minus);
        let mut err = 0.0f64;
        let dt = 0.01;
        for step in 1..=200 {
            p = crate::meanfield::tdh_step(&p, &spec, dt)?;
            m = crate::meanfield::tdh_step(&m, &spec, dt)?;
            let got = crate::hilbert::overlap(&m.psi, &p.psi)?;
            let want = dephasing_closed_form(&g, &bath, step as f64 * dt, 1.0);
            err = err.max((got - want).norm());
        }
        out.push(OracleReport::new(BATTERY[3], err, 200, seed, 1e-8));
    }
    if wanted(BATTERY[4]) {
        // K identical couplings, equatorial bath: Omega = cos^K(2 g t)
        let g = 0.4;
        let mut err = 0.0f64;
        for k in 1..=4usize {
            let spec = build_dephasing_model(&vec![g; k], LinearOperator::zeros(2), 1.0, Capacity::default())?;
            let h = spec.assemble_joint(0.0, Capacity::default())?;
            let bath = vec![(std::f64::consts::FRAC_PI_2, 0.0); k];
            let psi0 = bath_product_state(&bath);
            let dim_b = 1usize << k;
            for t in [0.3, 0.9, 1.7] {
                let up = dense_propagate(&tensor_product(&StateVector::basis(2, 0), &psi0)?, &h, t, 1.0)?;
                let down = dense_propagate(&tensor_product(&StateVector::basis(2, 1), &psi0)?, &h, t, 1.0)?;
                let bath_up = &up.amplitudes()[..dim_b];
                let bath_down = &down.amplitudes()[dim_b..];
                let terms: Vec<C64> = bath_down.iter().zip(bath_up).map(|(d, u)| d.conj() * u).collect();
                let got = kahan_sum(&terms);
                let want = (2.0 * g * t).cos().powi(k as i32);
                err = err.max((got - C64::new(want, 0.0)).norm());
                err = err.max((dephasing_closed_form(&vec![g; k], &bath, t, 1.0) - got).norm());
            }
        }
        out.push(OracleReport::new(BATTERY[4], err, 12, seed, 1e-10));
    }
    if wanted(BATTERY[5]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(5));
        let mut disagree = 0usize;
        let trials = 100;
        for _ in 0..trials {
            let l = random_phase_profile(&mut rng, 64);
            let w = vec![1.0 / 64.0; 64];
            if select_stationary(&l, &w)?.nu_c != windowed_kernel_argmax(&w, &l, 1.0, 5) {
                disagree += 1;
            }
        }
        out.push(OracleReport::new(BATTERY[5], disagree as f64 / trials as f64, trials, seed, 0.05));
    }
    if wanted(BATTERY[6]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(6));
        let mut err = 0.0f64;
        for _ in 0..10 {
            let terms: Vec<ProductTerm> = (0..3)
                .map(|_| ProductTerm { a: random_hermitian(&mut rng, 3), b: random_hermitian(&mut rng, 4), g: rng.gen_range(-1.0..1.0) })
                .collect();
            let mut hint = Array2::<C64>::zeros((12, 12));
            for t in &terms {
                hint = hint + kron(&t.a.to_dense(), &t.b.to_dense()).mapv(|z| z * t.g);
            }
            let spec = crate::hamiltonian::HamiltonianSpec::new(random_hermitian(&mut rng, 3), random_hermitian(&mut rng, 4), terms, 1.0)?;
            let phi = StateVector::random_unit(&mut rng, 3);
            let psi = StateVector::random_unit(&mut rng, 4);
            let s = MeanFieldState::new(phi.clone(), psi.clone(), &spec)?;
            let x = tensor_product(&phi, &psi)?;
            let hx = DMatrix::from_fn(12, 12, |i, j| hint[[i, j]]) * DVector::from_iterator(12, x.amplitudes().iter().copied());
            let terms: Vec<C64> = x.amplitudes().iter().zip(hx.iter()).map(|(a, b)| a.conj() * b).collect();
            err = err.max((s.lambda - kahan_sum(&terms).re).abs());
        }
        out.push(OracleReport::new(BATTERY[6], err, 10, seed, 1e-10));
    }
    if wanted(BATTERY[7]) {
        use crate::observables::{classical_oracle, ClassicalState, Harmonic};
        let v = Harmonic { mass: 1.0, omega: 1.0, center: 0.0 };
        let dt = 1e-3;
        let traj = classical_oracle(ClassicalState::new(1.0, 0.0, 1.0)?, &v, 2.0 * std::f64::consts::PI, dt)?;
        let period_dt = 2.0 * std::f64::consts::PI / (traj.len() - 1) as f64;
        let err = traj
            .iter()
            .enumerate()
            .map(|(n, s)| {
                let t = n as f64 * period_dt;
                (s.q - t.cos()).abs().max((s.p + t.sin()).abs())
            })
            .fold(0.0, f64::max);
        out.push(OracleReport::new(BATTERY[7], err, traj.len(), seed, 1e-5));
    }
    Ok(out)
}
