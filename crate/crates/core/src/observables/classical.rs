//! Center-of-mass classical mechanics, integrated with kick-drift-kick leapfrog.

use crate::error::{Error, Result};

/// Point in one-dimensional phase space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalState {
    pub q: f64,
    pub p: f64,
    /// Total mass.
    pub m: f64,
}

impl ClassicalState {
    pub fn new(q: f64, p: f64, m: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::InvalidArgument(format!("mass must be positive, got {m}")));
        }
        Ok(ClassicalState { q, p, m })
    }

    pub fn energy(&self, v: &dyn Potential) -> f64 {
        self.p * self.p / (2.0 * self.m) + v.value(self.q)
    }
}

pub trait Potential: Sync {
    fn value(&self, q: f64) -> f64;
    fn gradient(&self, q: f64) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Free;

impl Potential for Free {
    fn value(&self, _q: f64) -> f64 {
        0.0
    }
    fn gradient(&self, _q: f64) -> f64 {
        0.0
    }
}

/// `F * q`, a constant force `-F`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Linear {
    pub slope: f64,
}

impl Potential for Linear {
    fn value(&self, q: f64) -> f64 {
        self.slope * q
    }
    fn gradient(&self, _q: f64) -> f64 {
        self.slope
    }
}

/// `m w^2 (q - c)^2 / 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Harmonic {
    pub mass: f64,
    pub omega: f64,
    pub center: f64,
}

impl Potential for Harmonic {
    fn value(&self, q: f64) -> f64 {
        0.5 * self.mass * self.omega * self.omega * (q - self.center).powi(2)
    }
    fn gradient(&self, q: f64) -> f64 {
        self.mass * self.omega * self.omega * (q - self.center)
    }
}

/// `k q^4 / 4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quartic {
    pub k: f64,
}

impl Potential for Quartic {
    fn value(&self, q: f64) -> f64 {
        0.25 * self.k * q.powi(4)
    }
    fn gradient(&self, q: f64) -> f64 {
        self.k * q.powi(3)
    }
}

/// Leapfrog trajectory over `[0, t_final]`, one entry per step including `t = 0`.
pub fn classical_oracle(initial: ClassicalState, v: &dyn Potential, t_final: f64, dt: f64) -> Result<Vec<ClassicalState>> {
    if !(dt > 0.0) || t_final < 0.0 {
        return Err(Error::InvalidArgument("need dt > 0 and t_final >= 0".into()));
    }
    let (n, dt) = crate::exactprop::step_count(t_final, dt);
    let mut out = Vec::with_capacity(n + 1);
    let mut s = initial;
    out.push(s);
    for _ in 0..n {
        let p_half = s.p - 0.5 * dt * v.gradient(s.q);
        let q = s.q + dt * p_half / s.m;
        let p = p_half - 0.5 * dt * v.gradient(q);
        s = ClassicalState { q, p, m: s.m };
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn free_motion_is_a_straight_line() {
        let s0 = ClassicalState::new(0.5, 1.5, 2.0).unwrap();
        let traj = classical_oracle(s0, &Free, 2.0, 0.01).unwrap();
        for (n, s) in traj.iter().enumerate() {
            let t = n as f64 * 0.01;
            assert!((s.q - (0.5 + 0.75 * t)).abs() < 1e-13);
            assert_eq!(s.p, 1.5);
        }
    }

    #[test]
    fn harmonic_orbit_closes_and_conserves_energy() {
        let v = Harmonic { mass: 1.0, omega: 1.0, center: 0.0 };
        let s0 = ClassicalState::new(1.0, 0.0, 1.0).unwrap();
        let traj = classical_oracle(s0, &v, 2.0 * PI, 1e-3).unwrap();
        let last = traj.last().unwrap();
        assert!((last.q - 1.0).abs() < 1e-6 && last.p.abs() < 1e-6);
        let e0 = s0.energy(&v);
        for s in &traj {
            assert!((s.energy(&v) - e0).abs() / e0 < 1e-6);
        }
    }

    #[test]
    fn quartic_well_converges_at_second_order() {
        let v = Quartic { k: 1.0 };
        let s0 = ClassicalState::new(1.0, 0.3, 1.0).unwrap();
        let end = |dt: f64| classical_oracle(s0, &v, 3.0, dt).unwrap().last().unwrap().q;
        let reference = end(1e-5);
        let ratio = (end(0.02) - reference).abs() / (end(0.01) - reference).abs();
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn rejects_nonpositive_mass() {
        assert!(ClassicalState::new(0.0, 0.0, 0.0).is_err());
    }
}
