//! Expansion of a joint state over mean-field branches `phi_nu (x) psi_nu`,
//! per-branch phases `Lambda_nu`, and the interference and selection
//! diagnostics built on them.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::hilbert::{overlap, require_orthonormal, tensor_product, BipartiteSpace, StateVector};
use crate::meanfield::{tdh_step, MeanFieldState};

/// `max |Omega_{nu nu'}|` above which the neglect of cross terms is flagged.
pub const DEFAULT_OFFDIAG_THRESHOLD: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub nu: usize,
    /// Fixed at initialization.
    pub alpha: C64,
    pub state: MeanFieldState,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchEnsemble {
    pub branches: Vec<Branch>,
    pub hbar: f64,
    /// Step size of the last evolution, used as the synchronization scale.
    pub last_dt: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WeightMode {
    /// `|alpha_nu|^2`.
    #[default]
    ModSquared,
    /// `alpha_nu` itself.
    Amplitude,
}

impl WeightMode {
    fn weight(self, alpha: C64) -> C64 {
        match self {
            WeightMode::ModSquared => C64::new(alpha.norm_sqr(), 0.0),
            WeightMode::Amplitude => alpha,
        }
    }
}

/// Branch `nu` starts as `basis_a[nu] (x) psi0` with
/// `alpha_nu = <basis_a[nu] (x) psi0 | phi0>`.
pub fn init_branches(
    phi0: &StateVector,
    space: BipartiteSpace,
    basis_a: &[StateVector],
    psi0: &StateVector,
    spec: &HamiltonianSpec,
) -> Result<BranchEnsemble> {
    if space.dim_a != spec.dim_a() || space.dim_b != spec.dim_b() {
        return Err(Error::shape("space does not match the model"));
    }
    if phi0.dim() != space.joint_dim() {
        return Err(Error::shape(format!("joint state has dim {}, expected {}", phi0.dim(), space.joint_dim())));
    }
    require_orthonormal(basis_a)?;
    psi0.require_normalized(1e-8)?;
    let branches = basis_a
        .iter()
        .enumerate()
        .map(|(nu, chi)| {
            let alpha = overlap(&tensor_product(chi, psi0)?, phi0)?;
            let state = MeanFieldState::new(chi.clone(), psi0.clone(), spec)?;
            Ok(Branch { nu, alpha, state })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BranchEnsemble { branches, hbar: spec.hbar, last_dt: None })
}

impl BranchEnsemble {
    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn weight_total(&self) -> f64 {
        self.branches.iter().map(|b| b.alpha.norm_sqr()).sum()
    }

    pub fn big_lambdas(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.state.big_lambda).collect()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.state.lambda).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.alpha.norm_sqr()).collect()
    }

    /// Common time of the branches (that of branch 0).
    pub fn time(&self) -> f64 {
        self.branches.first().map_or(0.0, |b| b.state.t)
    }
}

/// Advances every branch by `steps` mean-field steps. Branches are independent,
/// so the result does not depend on how the work is scheduled.
pub fn evolve_branches(ens: &BranchEnsemble, spec: &HamiltonianSpec, dt: f64, steps: usize) -> Result<BranchEnsemble> {
    let branches = ens
        .branches
        .par_iter()
        .map(|b| {
            let mut state = b.state.clone();
            for _ in 0..steps {
                state = tdh_step(&state, spec, dt).map_err(|e| Error::Branch { nu: b.nu, source: Box::new(e) })?;
            }
            Ok(Branch { nu: b.nu, alpha: b.alpha, state })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BranchEnsemble { branches, hbar: ens.hbar, last_dt: Some(dt) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OverlapReport {
    /// `matrix[nu][nu'] = <psi_nu' | psi_nu>`.
    pub matrix: Array2<C64>,
    pub max_off_diag: f64,
    pub flagged: bool,
}

pub fn offdiagonal_overlaps(ens: &BranchEnsemble) -> Result<OverlapReport> {
    offdiagonal_overlaps_with(ens, DEFAULT_OFFDIAG_THRESHOLD)
}

pub fn offdiagonal_overlaps_with(ens: &BranchEnsemble, threshold: f64) -> Result<OverlapReport> {
    let n = ens.len();
    if n < 2 {
        return Err(Error::InvalidArgument("overlaps need at least two branches".into()));
    }
    let mut matrix = Array2::zeros((n, n));
    let mut max_off_diag = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let w = overlap(&ens.branches[j].state.psi, &ens.branches[i].state.psi)?;
            matrix[[i, j]] = w;
            if i != j {
                max_off_diag = max_off_diag.max(w.norm());
            }
        }
    }
    Ok(OverlapReport { matrix, max_off_diag, flagged: max_off_diag >= threshold })
}

fn check_weights(weights: &[f64]) -> Result<f64> {
    for (index, &value) in weights.iter().enumerate() {
        if !(value >= 0.0) {
            return Err(Error::WeightError { index, value });
        }
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("weights must not all vanish".into()));
    }
    Ok(total)
}

/// `sum_nu w_nu exp(i Lambda_nu / hbar)`.
pub fn interference_kernel(weights: &[f64], big_lambdas: &[f64], hbar: f64) -> Result<C64> {
    if weights.len() != big_lambdas.len() {
        return Err(Error::shape(format!("{} weights for {} phases", weights.len(), big_lambdas.len())));
    }
    check_weights(weights)?;
    Ok(weights.iter().zip(big_lambdas).map(|(&w, &l)| C64::from_polar(w, l / hbar)).sum())
}

/// `sum_nu w_nu phi_nu exp(i Lambda_nu / hbar)`, not renormalized, with its norm.
pub fn partial_wave(ens: &BranchEnsemble, mode: WeightMode) -> Result<(StateVector, f64)> {
    let first = ens.branches.first().ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
    let times = ens.branches.iter().map(|b| b.state.t);
    let spread = times.clone().fold(f64::MIN, f64::max) - times.fold(f64::MAX, f64::min);
    let tolerance = ens.last_dt.map_or(1e-12, |dt| 0.5 * dt);
    if spread > tolerance {
        return Err(Error::SyncError { spread });
    }
    let mut out = StateVector::zeros(first.state.phi.dim());
    for b in &ens.branches {
        out = out.add_scaled(mode.weight(b.alpha), &b.state.dressed_phi(ens.hbar))?;
    }
    let norm = out.norm();
    Ok((out, norm))
}

/// Assumption flags. The thresholds are this crate's operational definitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ValidityFlags {
    /// Neighbouring phases differ by less than pi (median gap).
    pub phases_dense: bool,
    /// Phases span at least one full turn, `(max - min) / hbar >= 2 pi`.
    pub phases_spread: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSpread {
    /// Median `|Lambda_{nu+1} - Lambda_nu| / hbar` over consecutive branches.
    pub density: f64,
    /// `(max Lambda - min Lambda) / (hbar t)`, zero at `t = 0`.
    pub spread_rate: f64,
    pub flags: ValidityFlags,
}

pub fn phase_spread(ens: &BranchEnsemble) -> Result<PhaseSpread> {
    phase_spread_of(&ens.big_lambdas(), ens.hbar, ens.time())
}

pub fn phase_spread_of(big_lambdas: &[f64], hbar: f64, t: f64) -> Result<PhaseSpread> {
    if big_lambdas.len() < 2 {
        return Err(Error::InvalidArgument("phase spread needs at least two branches".into()));
    }
    let mut gaps: Vec<f64> = big_lambdas.windows(2).map(|w| (w[1] - w[0]).abs() / hbar).collect();
    gaps.sort_by(f64::total_cmp);
    let m = gaps.len();
    let density = if m % 2 == 1 { gaps[m / 2] } else { 0.5 * (gaps[m / 2 - 1] + gaps[m / 2]) };
    let max = big_lambdas.iter().cloned().fold(f64::MIN, f64::max);
    let min = big_lambdas.iter().cloned().fold(f64::MAX, f64::min);
    let total = (max - min) / hbar;
    let spread_rate = if t > 0.0 { total / t } else { 0.0 };
    let flags = ValidityFlags {
        phases_dense: density < std::f64::consts::PI,
        phases_spread: total >= 2.0 * std::f64::consts::PI,
    };
    Ok(PhaseSpread { density, spread_rate, flags })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub nu_c: usize,
    /// `|Lambda_{nu+1} - Lambda_{nu-1}| / 2` (one-sided at the ends).
    pub profile: Vec<f64>,
    /// `Lambda_nu / t`, the time-averaged rate of each branch (empty at `t = 0`).
    pub rate_profile: Vec<f64>,
}

/// Discrete stationary phase: argmin of the central-difference slope of
/// `Lambda_nu`, ties broken by larger weight and then lower index.
pub fn select_stationary(big_lambdas: &[f64], weights: &[f64]) -> Result<Selection> {
    let n = big_lambdas.len();
    if n == 0 {
        return Err(Error::InvalidArgument("selection needs at least one branch".into()));
    }
    if weights.len() != n {
        return Err(Error::shape(format!("{} weights for {} branches", weights.len(), n)));
    }
    if n == 1 {
        return Ok(Selection { nu_c: 0, profile: vec![0.0], rate_profile: Vec::new() });
    }
    let l = big_lambdas;
    let profile: Vec<f64> = (0..n)
        .map(|nu| match nu {
            0 => (l[1] - l[0]).abs(),
            _ if nu == n - 1 => (l[n - 1] - l[n - 2]).abs(),
            _ => 0.5 * (l[nu + 1] - l[nu - 1]).abs(),
        })
        .collect();
    let scale = profile.iter().cloned().fold(0.0, f64::max);
    let tie = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut best = 0;
    for nu in 1..n {
        let (p, q) = (profile[nu], profile[best]);
        if p < q - tie || ((p - q).abs() <= tie && weights[nu] > weights[best]) {
            best = nu;
        }
    }
    Ok(Selection { nu_c: best, profile, rate_profile: Vec::new() })
}

pub fn select_dominant(ens: &BranchEnsemble) -> Result<Selection> {
    let mut sel = select_stationary(&ens.big_lambdas(), &ens.weights())?;
    let t = ens.time();
    if t > 0.0 {
        sel.rate_profile = ens.big_lambdas().iter().map(|l| l / t).collect();
    }
    Ok(sel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{bath_product_state, build_dephasing_model};
    use crate::hilbert::Capacity;
    use crate::operator::LinearOperator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn sigma_basis() -> Vec<StateVector> {
        vec![StateVector::basis(2, 0), StateVector::basis(2, 1)]
    }

    fn equatorial(k: usize) -> StateVector {
        bath_product_state(&vec![(PI / 2.0, 0.0); k])
    }

    #[test]
    fn product_initial_state_selects_one_branch() {
        let spec = build_pointer_spec(4);
        let psi0 = equatorial(2);
        let basis: Vec<_> = (0..4).map(|i| StateVector::basis(4, i)).collect();
        let joint = tensor_product(&basis[2], &psi0).unwrap();
        let ens = init_branches(&joint, spec.space(), &basis, &psi0, &spec).unwrap();
        let alphas: Vec<f64> = ens.branches.iter().map(|b| b.alpha.norm()).collect();
        assert_eq!(alphas, vec![0.0, 0.0, 1.0, 0.0]);
        assert!(ens.big_lambdas().iter().all(|&l| l == 0.0));
        let (wave, norm) = partial_wave(&ens, WeightMode::ModSquared).unwrap();
        assert!((norm - 1.0).abs() < 1e-15);
        assert!(wave.max_abs_diff(&basis[2]) < 1e-15);
    }

    fn build_pointer_spec(n: usize) -> HamiltonianSpec {
        let values: Vec<f64> = (0..n).map(|i| i as f64).collect();
        crate::hamiltonian::build_pointer_model(&values, &[0.3, 0.5], None, 1.0, Capacity::default()).unwrap()
    }

    #[test]
    fn superposition_splits_weights_linearly() {
        let spec = build_pointer_spec(4);
        let psi0 = equatorial(2);
        let basis: Vec<_> = (0..4).map(|i| StateVector::basis(4, i)).collect();
        let sup = StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0]).unwrap();
        let joint = tensor_product(&sup, &psi0).unwrap();
        let ens = init_branches(&joint, spec.space(), &basis, &psi0, &spec).unwrap();
        assert!((ens.branches[0].alpha.re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((ens.branches[1].alpha.re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(ens.branches[2].alpha.norm(), 0.0);
        assert!((ens.weight_total() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_joint_weights_match_brute_contraction() {
        let spec = build_pointer_spec(4);
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let psi0 = StateVector::random_unit(&mut rng, 4);
        let joint = StateVector::random_unit(&mut rng, 16);
        let basis: Vec<_> = (0..4).map(|i| StateVector::basis(4, i)).collect();
        let ens = init_branches(&joint, spec.space(), &basis, &psi0, &spec).unwrap();
        for (nu, b) in ens.branches.iter().enumerate() {
            let mut want = C64::new(0.0, 0.0);
            for j in 0..4 {
                want += psi0.amplitudes()[j].conj() * joint.amplitudes()[nu * 4 + j];
            }
            assert!((b.alpha - want).norm() < 1e-14);
        }
        assert!(ens.weight_total() <= 1.0 + 1e-8);
    }

    #[test]
    fn init_rejects_non_orthonormal_basis() {
        let spec = build_pointer_spec(2);
        let psi0 = equatorial(2);
        let bad = vec![StateVector::basis(2, 0), StateVector::basis(2, 0)];
        let joint = tensor_product(&bad[0], &psi0).unwrap();
        assert!(matches!(init_branches(&joint, spec.space(), &bad, &psi0, &spec), Err(Error::BasisError { .. })));
    }

    #[test]
    fn uncoupled_branches_keep_zero_phase() {
        let spec = build_dephasing_model(&[0.0, 0.0], LinearOperator::zeros(2), 1.0, Capacity::default()).unwrap();
        let psi0 = equatorial(2);
        let joint = tensor_product(&StateVector::from_real(&[0.6, 0.8]).unwrap(), &psi0).unwrap();
        let ens = init_branches(&joint, spec.space(), &sigma_basis(), &psi0, &spec).unwrap();
        let ens = evolve_branches(&ens, &spec, 0.01, 100).unwrap();
        assert!(ens.big_lambdas().iter().all(|&l| l == 0.0));
        let r = offdiagonal_overlaps(&ens).unwrap();
        assert!((r.max_off_diag - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dephasing_branch_rates_start_at_plus_minus_total_coupling() {
        let g = [0.3, 0.7];
        let spec = build_dephasing_model(&g, LinearOperator::zeros(2), 1.0, Capacity::default()).unwrap();
        let psi0 = StateVector::basis(4, 0);
        let joint = tensor_product(&StateVector::from_real(&[0.6, 0.8]).unwrap(), &psi0).unwrap();
        let ens = init_branches(&joint, spec.space(), &sigma_basis(), &psi0, &spec).unwrap();
        assert!((ens.branches[0].state.lambda - 1.0).abs() < 1e-15);
        assert!((ens.branches[1].state.lambda + 1.0).abs() < 1e-15);
    }

    #[test]
    fn equatorial_bath_overlap_is_cosine_product() {
        let g = [0.3, 0.7];
        let spec = build_dephasing_model(&g, LinearOperator::zeros(2), 1.0, Capacity::default()).unwrap();
        let psi0 = equatorial(2);
        let joint = tensor_product(&StateVector::from_real(&[0.6, 0.8]).unwrap(), &psi0).unwrap();
        let mut ens = init_branches(&joint, spec.space(), &sigma_basis(), &psi0, &spec).unwrap();
        let r = offdiagonal_overlaps(&ens).unwrap();
        assert!(r.matrix.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-14));
        for step in 1..=100 {
            ens = evolve_branches(&ens, &spec, 0.02, 1).unwrap();
            let t = 0.02 * step as f64;
            let want: f64 = g.iter().map(|g| (2.0 * g * t).cos()).product();
            let r = offdiagonal_overlaps(&ens).unwrap();
            assert!((r.matrix[[0, 1]].norm() - want.abs()).abs() < 1e-10);
            assert!((r.matrix[[0, 0]].re - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn evolution_is_schedule_independent() {
        let g = [0.3, 0.7, 1.1];
        let spec = build_dephasing_model(&g, crate::operator::pauli_x().scaled(0.2), 1.0, Capacity::default()).unwrap();
        let psi0 = bath_product_state(&[(0.4, 0.0), (0.9, 0.3), (1.3, -0.2)]);
        let joint = tensor_product(&StateVector::from_real(&[0.6, 0.8]).unwrap(), &psi0).unwrap();
        let ens = init_branches(&joint, spec.space(), &sigma_basis(), &psi0, &spec).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| evolve_branches(&ens, &spec, 0.01, 50).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a, b);
        let bits = |e: &BranchEnsemble| e.big_lambdas().iter().map(|l| l.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn kernel_basic_values() {
        let k = interference_kernel(&[0.5, 0.25, 0.25], &[0.0; 3], 1.0).unwrap();
        assert!((k - C64::new(1.0, 0.0)).norm() < 1e-15);
        let l: Vec<f64> = (0..4).map(|nu| nu as f64 * PI).collect();
        assert!(interference_kernel(&[0.25; 4], &l, 1.0).unwrap().norm() < 1e-15);
        assert_eq!(
            interference_kernel(&[0.5, -0.1], &[0.0, 0.0], 1.0).unwrap_err(),
            Error::WeightError { index: 1, value: -0.1 }
        );
    }

    #[test]
    fn partial_wave_of_identical_states_traces_cosine() {
        let spec = build_dephasing_model(&[0.0], LinearOperator::zeros(2), 1.0, Capacity::default()).unwrap();
        let psi0 = equatorial(1);
        let mk = |l: f64| {
            let s = MeanFieldState::new(StateVector::basis(2, 0), psi0.clone(), &spec).unwrap();
            MeanFieldState { big_lambda: l, ..s }
        };
        for k in 0..=20 {
            let d = k as f64 * PI / 10.0;
            let ens = BranchEnsemble {
                branches: vec![
                    Branch { nu: 0, alpha: C64::new(FRAC_1_SQRT_2, 0.0), state: mk(0.0) },
                    Branch { nu: 1, alpha: C64::new(FRAC_1_SQRT_2, 0.0), state: mk(d) },
                ],
                hbar: 1.0,
                last_dt: None,
            };
            let (_, norm) = partial_wave(&ens, WeightMode::ModSquared).unwrap();
            assert!((norm - (0.5 * d).cos().abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_wave_of_orthogonal_states_is_phase_blind() {
        let spec = build_dephasing_model(&[0.0], LinearOperator::zeros(2), 1.0, Capacity::default()).unwrap();
        let psi0 = equatorial(1);
        for d in [0.0, PI, 0.3] {
            let mut branches = Vec::new();
            for (nu, l) in [(0usize, 0.0), (1, d)] {
                let s = MeanFieldState::new(StateVector::basis(2, nu), psi0.clone(), &spec).unwrap();
                branches.push(Branch { nu, alpha: C64::new(FRAC_1_SQRT_2, 0.0), state: MeanFieldState { big_lambda: l, ..s } });
            }
            let ens = BranchEnsemble { branches, hbar: 1.0, last_dt: None };
            let (_, norm) = partial_wave(&ens, WeightMode::ModSquared).unwrap();
            assert!((norm * norm - 0.5).abs() < 1e-15);
            let (_, norm) = partial_wave(&ens, WeightMode::Amplitude).unwrap();
            assert!((norm - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn partial_wave_detects_desynchronized_branches() {
        let spec = build_dephasing_model(&[0.0], LinearOperator::zeros(2), 1.0, Capacity::default()).unwrap();
        let s = MeanFieldState::new(StateVector::basis(2, 0), equatorial(1), &spec).unwrap();
        let late = MeanFieldState { t: 0.1, ..s.clone() };
        let ens = BranchEnsemble {
            branches: vec![
                Branch { nu: 0, alpha: C64::new(1.0, 0.0), state: s },
                Branch { nu: 1, alpha: C64::new(0.0, 0.0), state: late },
            ],
            hbar: 1.0,
            last_dt: Some(0.01),
        };
        assert!(matches!(partial_wave(&ens, WeightMode::ModSquared), Err(Error::SyncError { .. })));
    }

    #[test]
    fn linear_rates_give_linear_spread() {
        let eps = 0.3;
        let t = 2.0;
        let l: Vec<f64> = (0..8).map(|nu| nu as f64 * eps * t).collect();
        let s = phase_spread_of(&l, 1.0, t).unwrap();
        assert!((s.spread_rate * t - 7.0 * eps * t).abs() < 1e-12);
        assert!((s.density - eps * t).abs() < 1e-12);
        let s = phase_spread_of(&[1.0; 5], 1.0, t).unwrap();
        assert_eq!((s.density, s.spread_rate), (0.0, 0.0));
        assert!(!s.flags.phases_spread);
        assert_eq!(phase_spread_of(&l, 1.0, 0.0).unwrap().spread_rate, 0.0);
    }

    #[test]
    fn selection_of_parabola_and_single_branch() {
        let delta = 0.7;
        let t = 1.5;
        let l: Vec<f64> = (0..7).map(|nu| ((nu as f64) - 3.0).powi(2) * delta * t).collect();
        assert_eq!(select_stationary(&l, &[1.0; 7]).unwrap().nu_c, 3);
        assert_eq!(select_stationary(&[4.2], &[1.0]).unwrap().nu_c, 0);
    }

    #[test]
    fn selection_ties_prefer_weight_then_index() {
        let l = [0.0, 0.0, 0.0, 0.0];
        assert_eq!(select_stationary(&l, &[0.1, 0.1, 0.1, 0.1]).unwrap().nu_c, 0);
        assert_eq!(select_stationary(&l, &[0.1, 0.1, 0.5, 0.1]).unwrap().nu_c, 2);
    }
}
