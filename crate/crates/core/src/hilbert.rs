//! Finite-dimensional state vectors and the two-factor tensor structure.
//!
//! Joint indices are row-major with subsystem A slowest: `(a, b) -> a * dim_b + b`.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};

pub use crate::operator::{Apply, LinearOperator, OperatorSum};

/// Default ceiling on the joint dimension `dim_a * dim_b`.
pub const DEFAULT_MAX_JOINT_DIM: usize = 4096;

const GRAM_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Capacity {
    pub max_joint_dim: usize,
}

impl Default for Capacity {
    fn default() -> Self {
        Capacity { max_joint_dim: DEFAULT_MAX_JOINT_DIM }
    }
}

impl Capacity {
    pub fn check(&self, requested: usize) -> Result<()> {
        if requested > self.max_joint_dim {
            Err(Error::CapacityExceeded { requested, max: self.max_joint_dim })
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::shape("state vector must have positive dimension"));
        }
        Ok(StateVector { amps })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "state vector must have positive dimension");
        StateVector { amps: vec![C64::new(0.0, 0.0); dim] }
    }

    /// Computational basis vector `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.amps[index] = C64::new(1.0, 0.0);
        v
    }

    /// Haar-like random unit vector (normalized complex Gaussian-free box sample).
    pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Self {
        let amps = (0..dim)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let v = StateVector { amps };
        v.normalized().expect("random vector has nonzero norm")
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    /// Errors with [`Error::NormError`] when the norm deviates from one by more than `tol`.
    pub fn require_normalized(&self, tol: f64) -> Result<()> {
        let deviation = (self.norm() - 1.0).abs();
        if deviation > tol {
            Err(Error::NormError { deviation })
        } else {
            Ok(())
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NormError { deviation: (n - 1.0).abs() });
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, factor: C64) -> Self {
        StateVector { amps: self.amps.iter().map(|&c| c * factor).collect() }
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, factor: C64, other: &StateVector) -> Result<Self> {
        same_dim(self, other)?;
        Ok(StateVector {
            amps: self.amps.iter().zip(&other.amps).map(|(&a, &b)| a + factor * b).collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn same_dim(a: &StateVector, b: &StateVector) -> Result<()> {
    if a.dim() != b.dim() {
        Err(Error::shape(format!("dimensions {} and {} differ", a.dim(), b.dim())))
    } else {
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BipartiteSpace {
    pub dim_a: usize,
    pub dim_b: usize,
}

impl BipartiteSpace {
    pub fn new(dim_a: usize, dim_b: usize) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::shape("subsystem dimensions must be positive"));
        }
        Ok(BipartiteSpace { dim_a, dim_b })
    }

    pub fn joint_dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    #[inline]
    pub fn joint_index(&self, a: usize, b: usize) -> usize {
        a * self.dim_b + b
    }

    fn check_joint(&self, joint: &StateVector) -> Result<()> {
        if joint.dim() != self.joint_dim() {
            return Err(Error::shape(format!(
                "joint state has dim {}, space expects {}x{}",
                joint.dim(),
                self.dim_a,
                self.dim_b
            )));
        }
        Ok(())
    }
}

pub fn tensor_product(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    tensor_product_with(a, b, Capacity::default())
}

pub fn tensor_product_with(a: &StateVector, b: &StateVector, cap: Capacity) -> Result<StateVector> {
    let requested = a.dim().checked_mul(b.dim()).unwrap_or(usize::MAX);
    cap.check(requested)?;
    let mut amps = Vec::with_capacity(requested);
    for &x in a.amplitudes() {
        amps.extend(b.amplitudes().iter().map(|&y| x * y));
    }
    StateVector::new(amps)
}

/// Projects out the B factor: `result[a] = sum_b conj(psi[b]) * joint[a, b]`.
pub fn contract_b(joint: &StateVector, space: BipartiteSpace, psi: &StateVector) -> Result<StateVector> {
    space.check_joint(joint)?;
    if psi.dim() != space.dim_b {
        return Err(Error::shape(format!("psi has dim {}, expected {}", psi.dim(), space.dim_b)));
    }
    let amps = joint
        .amplitudes()
        .chunks_exact(space.dim_b)
        .map(|row| row.iter().zip(psi.amplitudes()).map(|(&j, p)| p.conj() * j).sum())
        .collect();
    StateVector::new(amps)
}

/// Projects out the A factor: `result[b] = sum_a conj(phi[a]) * joint[a, b]`.
pub fn contract_a(joint: &StateVector, space: BipartiteSpace, phi: &StateVector) -> Result<StateVector> {
    space.check_joint(joint)?;
    if phi.dim() != space.dim_a {
        return Err(Error::shape(format!("phi has dim {}, expected {}", phi.dim(), space.dim_a)));
    }
    let mut out = vec![C64::new(0.0, 0.0); space.dim_b];
    for (row, p) in joint.amplitudes().chunks_exact(space.dim_b).zip(phi.amplitudes()) {
        let pc = p.conj();
        for (o, &j) in out.iter_mut().zip(row) {
            *o += pc * j;
        }
    }
    StateVector::new(out)
}

/// Inner product, antilinear in the first argument.
pub fn overlap(a: &StateVector, b: &StateVector) -> Result<C64> {
    same_dim(a, b)?;
    Ok(a.amplitudes().iter().zip(b.amplitudes()).map(|(x, &y)| x.conj() * y).sum())
}

/// Largest deviation of the Gram matrix of `basis` from the identity.
pub fn gram_deviation(basis: &[StateVector]) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, u) in basis.iter().enumerate() {
        for (j, v) in basis.iter().enumerate().skip(i) {
            let g = overlap(u, v)?;
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - C64::new(target, 0.0)).norm());
        }
    }
    Ok(worst)
}

pub fn require_orthonormal(basis: &[StateVector]) -> Result<()> {
    let deviation = gram_deviation(basis)?;
    if deviation > GRAM_TOLERANCE {
        Err(Error::BasisError { deviation })
    } else {
        Ok(())
    }
}

/// Reduced density matrix of subsystem A expressed in `basis_a`:
/// `rho[i][j] = sum_b <i,b|joint> <joint|j,b>`.
pub fn reduced_coherence(
    joint: &StateVector,
    space: BipartiteSpace,
    basis_a: &[StateVector],
) -> Result<Array2<C64>> {
    space.check_joint(joint)?;
    if basis_a.iter().any(|e| e.dim() != space.dim_a) {
        return Err(Error::shape("basis vectors must live in subsystem A"));
    }
    require_orthonormal(basis_a)?;
    // coefficient rows: c[i][b] = <i,b|joint>
    let rows: Vec<StateVector> = basis_a
        .iter()
        .map(|e| contract_a(joint, space, e))
        .collect::<Result<_>>()?;
    let n = basis_a.len();
    let mut rho = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            // rho_ij = sum_b c_i(b) conj(c_j(b)) = conj(<c_i|c_j>)
            let v = overlap(&rows[i], &rows[j])?.conj();
            rho[[i, j]] = v;
            rho[[j, i]] = v.conj();
        }
        rho[[i, i]] = C64::new(rho[[i, i]].re, 0.0);
    }
    Ok(rho)
}

/// `tr(rho^2)`.
pub fn purity(rho: &Array2<C64>) -> f64 {
    rho.iter().map(|c| c.norm_sqr()).sum()
}
