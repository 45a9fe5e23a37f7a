//! Bipartite Hamiltonians `h_A (x) I + I (x) h_B + sum_k g_k A_k (x) B_k`, their
//! model builders, and the mean fields each factor exerts on the other.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{BipartiteSpace, Capacity, StateVector};
use crate::operator::{kron, pauli_z, Apply, LinearOperator, OperatorSum};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct ProductTerm {
    pub a: LinearOperator,
    pub b: LinearOperator,
    pub g: f64,
}

/// Linear ramp `V_drive(t) = rate * t * op` acting on subsystem A.
#[derive(Clone, Debug, PartialEq)]
pub struct Drive {
    pub op: LinearOperator,
    pub rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    HardWall,
    Periodic,
}

/// Uniform 1D grid carrying one particle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub spacing: f64,
    pub origin: f64,
    pub boundary: Boundary,
    pub mass: f64,
}

impl Grid {
    pub fn new(n: usize, spacing: f64, origin: f64, boundary: Boundary, mass: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("grid needs at least 2 points, got {n}")));
        }
        if !(spacing > 0.0) || !(mass > 0.0) {
            return Err(Error::InvalidArgument("grid spacing and mass must be positive".into()));
        }
        Ok(Grid { n, spacing, origin, boundary, mass })
    }

    /// Grid of `n` points spanning `[-length/2, length/2)`.
    pub fn centered(n: usize, length: f64, boundary: Boundary, mass: f64) -> Result<Self> {
        Self::new(n, length / n as f64, -0.5 * length, boundary, mass)
    }

    pub fn x(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.spacing
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.spacing
    }
}

/// Second-difference kinetic energy `-hbar^2/(2m) d^2/dx^2`.
pub fn kinetic(grid: &Grid, hbar: f64) -> LinearOperator {
    let t = hbar * hbar / (2.0 * grid.mass * grid.spacing * grid.spacing);
    let corner = match grid.boundary {
        Boundary::Periodic => Some(C64::new(-t, 0.0)),
        Boundary::HardWall => None,
    };
    LinearOperator::tridiagonal(vec![2.0 * t; grid.n], vec![C64::new(-t, 0.0); grid.n - 1], corner)
        .expect("grid has at least two points")
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub h_a: LinearOperator,
    pub h_b: LinearOperator,
    pub interaction: Vec<ProductTerm>,
    /// Static field on A supplied from outside both factors (traps, tilts).
    pub external_a: Option<LinearOperator>,
    pub drive_a: Option<Drive>,
    pub hbar: f64,
    pub masses: Vec<f64>,
    pub grid_a: Option<Grid>,
    pub grid_b: Option<Grid>,
}

impl HamiltonianSpec {
    pub fn new(h_a: LinearOperator, h_b: LinearOperator, interaction: Vec<ProductTerm>, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
        }
        h_a.require_hermitian()?;
        h_b.require_hermitian()?;
        for (k, term) in interaction.iter().enumerate() {
            if term.a.dim() != h_a.dim() || term.b.dim() != h_b.dim() {
                return Err(Error::shape(format!("interaction term {k} has mismatched factor dimensions")));
            }
            term.a.require_hermitian()?;
            term.b.require_hermitian()?;
        }
        Ok(HamiltonianSpec {
            h_a,
            h_b,
            interaction,
            external_a: None,
            drive_a: None,
            hbar,
            masses: Vec::new(),
            grid_a: None,
            grid_b: None,
        })
    }

    pub fn with_external(mut self, v: LinearOperator) -> Result<Self> {
        if v.dim() != self.dim_a() {
            return Err(Error::shape("external field must act on subsystem A"));
        }
        v.require_hermitian()?;
        self.external_a = Some(v);
        Ok(self)
    }

    pub fn with_drive(mut self, drive: Drive) -> Result<Self> {
        if drive.op.dim() != self.dim_a() {
            return Err(Error::shape("drive must act on subsystem A"));
        }
        drive.op.require_hermitian()?;
        self.drive_a = Some(drive);
        Ok(self)
    }

    pub fn dim_a(&self) -> usize {
        self.h_a.dim()
    }

    pub fn dim_b(&self) -> usize {
        self.h_b.dim()
    }

    pub fn space(&self) -> BipartiteSpace {
        BipartiteSpace { dim_a: self.dim_a(), dim_b: self.dim_b() }
    }

    /// Same model with every coupling multiplied by `s`.
    pub fn with_coupling_scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.interaction {
            t.g *= s;
        }
        out
    }

    pub fn drive_amplitude(&self, t: f64) -> f64 {
        self.drive_a.as_ref().map_or(0.0, |d| d.rate * t)
    }

    /// `<psi|B_k|psi>` for every interaction term.
    pub fn coefficients_b(&self, psi: &StateVector) -> Vec<f64> {
        self.interaction.iter().map(|t| t.b.expectation(psi).re).collect()
    }

    /// `<phi|A_k|phi>` for every interaction term.
    pub fn coefficients_a(&self, phi: &StateVector) -> Vec<f64> {
        self.interaction.iter().map(|t| t.a.expectation(phi).re).collect()
    }

    /// Total field on A: external + drive(t) + sum_k g_k c_k A_k.
    pub fn potential_a(&self, t: f64, coeff_b: &[f64]) -> OperatorSum<'_> {
        let mut v = OperatorSum::new(self.dim_a());
        if let Some(ext) = &self.external_a {
            v.push(1.0, ext);
        }
        if let Some(d) = &self.drive_a {
            v.push(d.rate * t, &d.op);
        }
        for (term, c) in self.interaction.iter().zip(coeff_b) {
            v.push(term.g * c, &term.a);
        }
        v
    }

    /// `h_A + V(t)`, the partial-system Hamiltonian without the multiplier.
    pub fn effective_a(&self, t: f64, coeff_b: &[f64]) -> OperatorSum<'_> {
        let mut h = self.potential_a(t, coeff_b);
        h.push(1.0, &self.h_a);
        h
    }

    /// `h_B + V_Psi`.
    pub fn effective_b(&self, coeff_a: &[f64]) -> OperatorSum<'_> {
        let mut h = OperatorSum::new(self.dim_b()).with(1.0, &self.h_b);
        for (term, c) in self.interaction.iter().zip(coeff_a) {
            h.push(term.g * c, &term.b);
        }
        h
    }

    /// Matrix-free joint Hamiltonian at time `t`.
    pub fn joint_operator(&self, t: f64) -> JointOperator<'_> {
        JointOperator { spec: self, t, interaction_only: false }
    }

    /// Matrix-free `sum_k g_k A_k (x) B_k`.
    pub fn interaction_operator(&self) -> JointOperator<'_> {
        JointOperator { spec: self, t: 0.0, interaction_only: true }
    }

    /// Dense joint matrix at time `t`.
    pub fn assemble_joint(&self, t: f64, cap: Capacity) -> Result<Array2<C64>> {
        cap.check(self.dim_a() * self.dim_b())?;
        let ia = Array2::from_diag_elem(self.dim_a(), C64::new(1.0, 0.0));
        let ib = Array2::from_diag_elem(self.dim_b(), C64::new(1.0, 0.0));
        let mut a_part = self.h_a.to_dense();
        if let Some(ext) = &self.external_a {
            a_part = a_part + ext.to_dense();
        }
        if let Some(d) = &self.drive_a {
            a_part = a_part + d.op.to_dense().mapv(|z| z * (d.rate * t));
        }
        let mut h = kron(&a_part, &ib) + kron(&ia, &self.h_b.to_dense());
        for term in &self.interaction {
            h = h + kron(&term.a.to_dense(), &term.b.to_dense()).mapv(|z| z * term.g);
        }
        Ok(h)
    }
}

/// `(O (x) I) x` for `x` laid out as a `dim_a x dim_b` row-major matrix.
fn apply_left(op: &LinearOperator, dim_b: usize, x: &[C64], y: &mut [C64], coeff: f64) {
    let dim_a = op.dim();
    if let Some(d) = op.diagonal() {
        for (a, &da) in d.iter().enumerate() {
            let c = da * coeff;
            for (yi, xi) in y[a * dim_b..(a + 1) * dim_b].iter_mut().zip(&x[a * dim_b..(a + 1) * dim_b]) {
                *yi += xi * c;
            }
        }
        return;
    }
    let mut col = vec![ZERO; dim_a];
    let mut out = vec![ZERO; dim_a];
    for b in 0..dim_b {
        for a in 0..dim_a {
            col[a] = x[a * dim_b + b];
        }
        op.apply_into(&col, &mut out);
        for a in 0..dim_a {
            y[a * dim_b + b] += out[a] * coeff;
        }
    }
}

/// `(I (x) O) x`.
fn apply_right(op: &LinearOperator, x: &[C64], y: &mut [C64], coeff: f64) {
    let dim_b = op.dim();
    let mut out = vec![ZERO; dim_b];
    for (xr, yr) in x.chunks_exact(dim_b).zip(y.chunks_exact_mut(dim_b)) {
        op.apply_into(xr, &mut out);
        for (yi, o) in yr.iter_mut().zip(&out) {
            *yi += o * coeff;
        }
    }
}

pub struct JointOperator<'a> {
    spec: &'a HamiltonianSpec,
    t: f64,
    interaction_only: bool,
}

impl Apply for JointOperator<'_> {
    fn dim(&self) -> usize {
        self.spec.dim_a() * self.spec.dim_b()
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        let s = self.spec;
        let dim_b = s.dim_b();
        y.iter_mut().for_each(|v| *v = ZERO);
        if !self.interaction_only {
            apply_left(&s.h_a, dim_b, x, y, 1.0);
            apply_right(&s.h_b, x, y, 1.0);
            if let Some(ext) = &s.external_a {
                apply_left(ext, dim_b, x, y, 1.0);
            }
            if let Some(d) = &s.drive_a {
                apply_left(&d.op, dim_b, x, y, d.rate * self.t);
            }
        }
        let mut tmp = vec![ZERO; x.len()];
        for term in &s.interaction {
            tmp.iter_mut().for_each(|v| *v = ZERO);
            apply_right(&term.b, x, &mut tmp, 1.0);
            apply_left(&term.a, dim_b, &tmp, y, term.g);
        }
    }

    fn norm_bound(&self) -> f64 {
        let s = self.spec;
        let mut b: f64 = s.interaction.iter().map(|t| t.g.abs() * t.a.norm_bound() * t.b.norm_bound()).sum();
        if !self.interaction_only {
            b += s.h_a.norm_bound() + s.h_b.norm_bound();
            b += s.external_a.as_ref().map_or(0.0, |e| e.norm_bound());
            b += s.drive_a.as_ref().map_or(0.0, |d| (d.rate * self.t).abs() * d.op.norm_bound());
        }
        b
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        let s = self.spec;
        let (da, db) = (s.dim_a(), s.dim_b());
        let mut out = vec![0.0; da * db];
        let mut add = |left: Option<&LinearOperator>, right: Option<&LinearOperator>, c: f64| -> Option<()> {
            let l = match left {
                Some(o) => o.diagonal()?,
                None => vec![1.0; da],
            };
            let r = match right {
                Some(o) => o.diagonal()?,
                None => vec![1.0; db],
            };
            for a in 0..da {
                for b in 0..db {
                    out[a * db + b] += c * l[a] * r[b];
                }
            }
            Some(())
        };
        if !self.interaction_only {
            add(Some(&s.h_a), None, 1.0)?;
            add(None, Some(&s.h_b), 1.0)?;
            if let Some(ext) = &s.external_a {
                add(Some(ext), None, 1.0)?;
            }
            if let Some(d) = &s.drive_a {
                add(Some(&d.op), None, d.rate * self.t)?;
            }
        }
        for term in &s.interaction {
            add(Some(&term.a), Some(&term.b), term.g)?;
        }
        Some(out)
    }
}

/// A mean field acting on one factor.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectivePotential {
    pub op: LinearOperator,
    /// Expectations of the partner-side factors, one per interaction term.
    pub coefficients: Vec<f64>,
    pub timestamp: f64,
}

impl EffectivePotential {
    pub fn at_time(mut self, t: f64) -> Self {
        self.timestamp = t;
        self
    }
}

/// `V = sum_k g_k <psi|B_k|psi> A_k`, the field the bath exerts on A.
pub fn mean_field_potential(spec: &HamiltonianSpec, psi: &StateVector) -> Result<EffectivePotential> {
    if psi.dim() != spec.dim_b() {
        return Err(Error::shape("psi must live in subsystem B"));
    }
    psi.require_normalized(1e-8)?;
    let coefficients = spec.coefficients_b(psi);
    let mut v = OperatorSum::new(spec.dim_a());
    for (term, c) in spec.interaction.iter().zip(&coefficients) {
        v.push(term.g * c, &term.a);
    }
    Ok(EffectivePotential { op: v.collapse(), coefficients, timestamp: 0.0 })
}

/// `V_Psi = sum_k g_k <phi|A_k|phi> B_k`, the field A exerts on the bath.
pub fn mean_field_potential_b(spec: &HamiltonianSpec, phi: &StateVector) -> Result<EffectivePotential> {
    if phi.dim() != spec.dim_a() {
        return Err(Error::shape("phi must live in subsystem A"));
    }
    phi.require_normalized(1e-8)?;
    let coefficients = spec.coefficients_a(phi);
    let mut v = OperatorSum::new(spec.dim_b());
    for (term, c) in spec.interaction.iter().zip(&coefficients) {
        v.push(term.g * c, &term.b);
    }
    Ok(EffectivePotential { op: v.collapse(), coefficients, timestamp: 0.0 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPairParams {
    pub n_a: usize,
    pub n_b: usize,
    pub spacing: f64,
    pub origin: f64,
    pub mass_a: f64,
    pub mass_b: f64,
    pub q_product: f64,
    pub softening: f64,
    pub boundary: Boundary,
    pub hbar: f64,
    /// Harmonic trap frequencies and centres (zero frequency disables a trap).
    pub trap_a: (f64, f64),
    pub trap_b: (f64, f64),
}

impl Default for GridPairParams {
    fn default() -> Self {
        GridPairParams {
            n_a: 32,
            n_b: 32,
            spacing: 0.25,
            origin: -4.0,
            mass_a: 1.0,
            mass_b: 1.0,
            q_product: 1.0,
            softening: 0.25,
            boundary: Boundary::HardWall,
            hbar: 1.0,
            trap_a: (0.0, 0.0),
            trap_b: (0.0, 0.0),
        }
    }
}

fn trap(grid: &Grid, omega: f64, centre: f64) -> Option<LinearOperator> {
    (omega != 0.0).then(|| {
        LinearOperator::diagonal(
            grid.positions().iter().map(|x| 0.5 * grid.mass * omega * omega * (x - centre).powi(2)).collect(),
        )
    })
}

/// Two particles on a shared 1D grid with softened Coulomb coupling
/// `q / (|x_i - y_j| + softening)`, written as one diagonal product term per A site.
pub fn build_grid_pair(p: &GridPairParams) -> Result<HamiltonianSpec> {
    if !(p.softening > 0.0) {
        return Err(Error::SingularPotential(p.softening));
    }
    let grid_a = Grid::new(p.n_a, p.spacing, p.origin, p.boundary, p.mass_a)?;
    let grid_b = Grid::new(p.n_b, p.spacing, p.origin, p.boundary, p.mass_b)?;
    Capacity::default().check(p.n_a * p.n_b)?;
    let mut h_b = kinetic(&grid_b, p.hbar);
    if let Some(v) = trap(&grid_b, p.trap_b.0, p.trap_b.1) {
        h_b = OperatorSum::new(p.n_b).with(1.0, &h_b).with(1.0, &v).collapse();
    }
    let mut interaction = Vec::new();
    if p.q_product != 0.0 {
        let ys = grid_b.positions();
        for i in 0..p.n_a {
            let xi = grid_a.x(i);
            let mut proj = vec![0.0; p.n_a];
            proj[i] = 1.0;
            interaction.push(ProductTerm {
                a: LinearOperator::diagonal(proj),
                b: LinearOperator::diagonal(
                    ys.iter().map(|y| p.q_product / ((xi - y).abs() + p.softening)).collect(),
                ),
                g: 1.0,
            });
        }
    }
    let mut spec = HamiltonianSpec::new(kinetic(&grid_a, p.hbar), h_b, interaction, p.hbar)?;
    if let Some(v) = trap(&grid_a, p.trap_a.0, p.trap_a.1) {
        spec = spec.with_external(v)?;
    }
    spec.masses = vec![p.mass_a, p.mass_b];
    spec.grid_a = Some(grid_a);
    spec.grid_b = Some(grid_b);
    Ok(spec)
}

/// One particle on a grid in the static external potential `v(x)`; the partner
/// factor is a trivial one-dimensional space.
pub fn build_grid_single(grid: Grid, hbar: f64, v: impl Fn(f64) -> f64) -> Result<HamiltonianSpec> {
    let mut spec = HamiltonianSpec::new(kinetic(&grid, hbar), LinearOperator::zeros(1), Vec::new(), hbar)?
        .with_external(LinearOperator::diagonal(grid.positions().into_iter().map(v).collect()))?;
    spec.masses = vec![grid.mass];
    spec.grid_a = Some(grid);
    Ok(spec)
}

/// `sigma_z` on qubit `k` of a `qubits`-qubit register (qubit 0 is the slowest index).
pub fn sigma_z_on(k: usize, qubits: usize) -> LinearOperator {
    let dim = 1usize << qubits;
    let shift = qubits - 1 - k;
    LinearOperator::diagonal((0..dim).map(|b| if (b >> shift) & 1 == 0 { 1.0 } else { -1.0 }).collect())
}

/// Two-level system coupled to `couplings.len()` bath qubits through
/// `sigma_z (x) sum_k g_k sigma_z^(k)`; the bath has no Hamiltonian of its own.
pub fn build_dephasing_model(
    couplings: &[f64],
    system: LinearOperator,
    hbar: f64,
    cap: Capacity,
) -> Result<HamiltonianSpec> {
    if system.dim() != 2 {
        return Err(Error::shape("dephasing system Hamiltonian must be 2x2"));
    }
    build_pointer_model(&[1.0, -1.0], couplings, Some(system), hbar, cap)
}

/// `N`-level pointer system `A = diag(pointer_values)` coupled to bath qubits through
/// `A (x) sum_k g_k sigma_z^(k)`.
pub fn build_pointer_model(
    pointer_values: &[f64],
    couplings: &[f64],
    system: Option<LinearOperator>,
    hbar: f64,
    cap: Capacity,
) -> Result<HamiltonianSpec> {
    let k = couplings.len();
    if k == 0 {
        return Err(Error::InvalidArgument("at least one bath qubit is required".into()));
    }
    if k >= usize::BITS as usize - 1 {
        return Err(Error::CapacityExceeded { requested: usize::MAX, max: cap.max_joint_dim });
    }
    let n = pointer_values.len();
    cap.check(n.saturating_mul(1usize << k))?;
    let system = system.unwrap_or_else(|| LinearOperator::zeros(n));
    if system.dim() != n {
        return Err(Error::shape("system Hamiltonian does not match pointer dimension"));
    }
    let a = if n == 2 && pointer_values == [1.0, -1.0] {
        pauli_z()
    } else {
        LinearOperator::diagonal(pointer_values.to_vec())
    };
    let interaction = couplings
        .iter()
        .enumerate()
        .map(|(q, &g)| ProductTerm { a: a.clone(), b: sigma_z_on(q, k), g })
        .collect();
    HamiltonianSpec::new(system, LinearOperator::zeros(1 << k), interaction, hbar)
}

/// Product of single-qubit states `cos(theta/2)|0> + e^{i phase} sin(theta/2)|1>`.
pub fn bath_product_state(angles: &[(f64, f64)]) -> StateVector {
    let mut amps = vec![C64::new(1.0, 0.0)];
    for &(theta, phase) in angles {
        let q = qubit_state(theta, phase);
        amps = amps.iter().flat_map(|&x| [x * q[0], x * q[1]]).collect();
    }
    StateVector::new(amps).expect("nonempty")
}

pub fn qubit_state(theta: f64, phase: f64) -> [C64; 2] {
    [C64::new((0.5 * theta).cos(), 0.0), C64::from_polar((0.5 * theta).sin(), phase)]
}
