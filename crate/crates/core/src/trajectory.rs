use crate::error::{Error, Result};
use crate::hilbert::StateVector;

/// Time series sampled along a run. A series left empty is "not recorded";
/// every recorded series has one entry per sample time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub norm: Vec<f64>,
    /// Dissipation rate λ(t).
    pub lambda: Vec<f64>,
    /// Accumulated phase Λ(t).
    pub big_lambda: Vec<f64>,
    pub momentum: Vec<f64>,
    /// ℰ = <φ| iħ∂t φ>.
    pub energy: Vec<f64>,
    /// <φ| ĥ |φ> with ĥ = h_A + V(t).
    pub hamiltonian: Vec<f64>,
    /// <φ| ∂t V |φ>.
    pub dv_dt: Vec<f64>,
    /// Lattice form of <|φ|², ∂x V>.
    pub force: Vec<f64>,
    /// Action accumulated over (t[n-1], t[n]]; the first entry is zero.
    pub action_increments: Vec<f64>,
    pub coherence: Vec<f64>,
    pub center_of_mass: Vec<f64>,
    /// Position variance <x²> - <x>².
    pub dispersion: Vec<f64>,
    /// <Ψ|B_k|Ψ> per sample, one entry per interaction term.
    pub field_coefficients: Vec<Vec<f64>>,
    /// φ(t) snapshots including the Λ phase (only when requested).
    pub states: Vec<StateVector>,
    pub initial_state: Option<StateVector>,
    pub final_state: Option<StateVector>,
    pub hbar: f64,
    pub mass: Option<f64>,
}

impl TrajectoryRecord {
    pub fn new(hbar: f64) -> Self {
        TrajectoryRecord { hbar, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        let series: [(&'static str, usize); 13] = [
            ("norm", self.norm.len()),
            ("lambda", self.lambda.len()),
            ("Lambda", self.big_lambda.len()),
            ("momentum", self.momentum.len()),
            ("energy", self.energy.len()),
            ("hamiltonian", self.hamiltonian.len()),
            ("dv_dt", self.dv_dt.len()),
            ("force", self.force.len()),
            ("action increments", self.action_increments.len()),
            ("coherence", self.coherence.len()),
            ("center of mass", self.center_of_mass.len()),
            ("dispersion", self.dispersion.len()),
            ("field coefficients", self.field_coefficients.len()),
        ];
        for (name, len) in series {
            if len != 0 && len != n {
                return Err(Error::shape(format!("{name} has {len} samples, times has {n}")));
            }
        }
        if !self.states.is_empty() && self.states.len() != n {
            return Err(Error::shape("state snapshots do not match sample count"));
        }
        for (i, w) in self.times.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::TimeOrderError(i + 1));
            }
        }
        Ok(())
    }

    pub(crate) fn require(&self, series: &[f64], name: &'static str) -> Result<()> {
        if series.is_empty() || series.len() != self.times.len() {
            Err(Error::IncompleteTrajectory(name))
        } else {
            Ok(())
        }
    }
}
