//! Norm-preserving propagation of a whole-system state under a Hermitian
//! Hamiltonian. This is the reference dynamics every approximation is checked
//! against.

pub mod lanczos;
pub mod split;

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::hilbert::StateVector;
use crate::operator::{Apply, LinearOperator};
use crate::trajectory::TrajectoryRecord;

pub use split::SplitStepper;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Method {
    /// Lanczos projection of the matrix exponential, accurate to ~1e-13 per step.
    #[default]
    Krylov,
    /// Symmetric (Strang) product of exact pair rotations; second order in dt.
    SplitSecondOrder,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorConfig {
    pub dt: f64,
    pub method: Method,
    pub norm_tolerance_per_step: f64,
    pub hbar: f64,
}

impl PropagatorConfig {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        Ok(PropagatorConfig { dt, method: Method::Krylov, norm_tolerance_per_step: 1e-10, hbar: 1.0 })
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }
}

/// Number of uniform steps covering `[0, t_final]` with step at most `dt`.
pub fn step_count(t_final: f64, dt: f64) -> (usize, f64) {
    if t_final <= 0.0 {
        return (0, dt);
    }
    let n = ((t_final / dt) - 1e-9).ceil().max(1.0) as usize;
    (n, t_final / n as f64)
}

/// Applies `exp(-i H dt / hbar)` with the configured method.
pub fn propagate(op: &dyn Apply, x: &[num_complex::Complex64], dt: f64, cfg: &PropagatorConfig) -> Result<Vec<num_complex::Complex64>> {
    let tau = dt / cfg.hbar;
    match cfg.method {
        Method::Krylov => lanczos::expm_apply(op, x, tau),
        Method::SplitSecondOrder => {
            let dense = LinearOperator::dense(op.to_dense())?;
            let mut y = x.to_vec();
            SplitStepper::new(&dense).step(&mut y, tau);
            Ok(y)
        }
    }
}

/// Stepper bound to one time-independent Hamiltonian.
pub struct Propagator<'a> {
    op: &'a dyn Apply,
    cfg: PropagatorConfig,
    split: Option<SplitStepper>,
}

impl<'a> Propagator<'a> {
    pub fn new(h: &'a LinearOperator, cfg: PropagatorConfig) -> Result<Self> {
        h.require_hermitian()?;
        let split = (cfg.method == Method::SplitSecondOrder).then(|| SplitStepper::new(h));
        Ok(Propagator { op: h, cfg, split })
    }

    /// For operators whose Hermiticity is guaranteed by construction.
    pub fn for_apply(op: &'a dyn Apply, cfg: PropagatorConfig) -> Result<Self> {
        let split = match cfg.method {
            Method::SplitSecondOrder => Some(SplitStepper::new(&LinearOperator::dense(op.to_dense())?)),
            Method::Krylov => None,
        };
        Ok(Propagator { op, cfg, split })
    }

    pub fn config(&self) -> &PropagatorConfig {
        &self.cfg
    }

    pub fn step(&self, x: &StateVector) -> Result<StateVector> {
        self.step_by(x, self.cfg.dt)
    }

    pub fn step_by(&self, x: &StateVector, dt: f64) -> Result<StateVector> {
        if x.dim() != self.op.dim() {
            return Err(Error::shape(format!("state dim {} vs operator dim {}", x.dim(), self.op.dim())));
        }
        let tau = dt / self.cfg.hbar;
        let y = match &self.split {
            Some(s) => {
                let mut y = x.amplitudes().to_vec();
                s.step(&mut y, tau);
                y
            }
            None => lanczos::expm_apply(self.op, x.amplitudes(), tau)?,
        };
        let y = StateVector::new(y)?;
        check_norm(x, &y, self.cfg.norm_tolerance_per_step)?;
        Ok(y)
    }
}

fn check_norm(before: &StateVector, after: &StateVector, tol: f64) -> Result<()> {
    let drift = (after.norm() - before.norm()).abs();
    if drift > tol || !drift.is_finite() {
        Err(Error::IntegratorDiverged(format!("norm drift {drift:.3e} in one step")))
    } else {
        Ok(())
    }
}

/// One step of `exp(-i H dt / hbar)` on a normalized state.
pub fn step_exact(phi: &StateVector, h: &LinearOperator, cfg: &PropagatorConfig) -> Result<StateVector> {
    phi.require_normalized(1e-8)?;
    Propagator::new(h, *cfg)?.step(phi)
}

pub type Observer<'o> = dyn FnMut(f64, &StateVector) + 'o;

/// Result of an exact run: sampled series plus the final state.
#[derive(Clone, Debug)]
pub struct ExactRun {
    pub record: TrajectoryRecord,
    pub final_state: StateVector,
}

/// Propagates under a time-independent Hamiltonian, calling each observer at
/// every sample (including t = 0).
pub fn evolve(
    phi0: &StateVector,
    h: &LinearOperator,
    t_final: f64,
    cfg: &PropagatorConfig,
    observers: &mut [&mut Observer<'_>],
) -> Result<ExactRun> {
    if t_final < 0.0 {
        return Err(Error::InvalidArgument("final time must be non-negative".into()));
    }
    let prop = Propagator::new(h, *cfg)?;
    run_steps(phi0, t_final, cfg, observers, |x, _t, dt| prop.step_by(x, dt), |x, _| h.expectation(x).re)
}

/// Propagates the joint state of a bipartite model. Any drive is sampled at
/// the step midpoint.
pub fn evolve_joint(
    phi0: &StateVector,
    spec: &HamiltonianSpec,
    t_final: f64,
    cfg: &PropagatorConfig,
    observers: &mut [&mut Observer<'_>],
) -> Result<ExactRun> {
    if t_final < 0.0 {
        return Err(Error::InvalidArgument("final time must be non-negative".into()));
    }
    let cfg = cfg.with_hbar(spec.hbar);
    run_steps(
        phi0,
        t_final,
        &cfg,
        observers,
        |x, t, dt| {
            let h = spec.joint_operator(t + 0.5 * dt);
            let y = StateVector::new(propagate(&h, x.amplitudes(), dt, &cfg)?)?;
            check_norm(x, &y, cfg.norm_tolerance_per_step)?;
            Ok(y)
        },
        |x, t| spec.joint_operator(t).expectation(x).re,
    )
}

fn run_steps(
    phi0: &StateVector,
    t_final: f64,
    cfg: &PropagatorConfig,
    observers: &mut [&mut Observer<'_>],
    mut step: impl FnMut(&StateVector, f64, f64) -> Result<StateVector>,
    energy: impl Fn(&StateVector, f64) -> f64,
) -> Result<ExactRun> {
    let (n, dt) = step_count(t_final, cfg.dt);
    let mut record = TrajectoryRecord::new(cfg.hbar);
    record.initial_state = Some(phi0.clone());
    let mut x = phi0.clone();
    let sample = |t: f64, x: &StateVector, record: &mut TrajectoryRecord, observers: &mut [&mut Observer<'_>]| {
        record.times.push(t);
        record.norm.push(x.norm());
        record.energy.push(energy(x, t));
        for obs in observers.iter_mut() {
            obs(t, x);
        }
    };
    sample(0.0, &x, &mut record, observers);
    for k in 0..n {
        let t = k as f64 * dt;
        x = step(&x, t, dt)?;
        sample((k + 1) as f64 * dt, &x, &mut record, observers);
    }
    record.final_state = Some(x.clone());
    Ok(ExactRun { record, final_state: x })
}
