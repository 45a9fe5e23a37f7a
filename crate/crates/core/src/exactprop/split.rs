//! Second-order symmetric splitting of a Hermitian matrix into its diagonal and
//! two-level (pair) couplings. Every factor is an exact 2x2 unitary, so the
//! scheme preserves the norm to rounding.

use num_complex::Complex64 as C64;

use crate::operator::{Apply, LinearOperator};

#[derive(Clone, Debug)]
pub struct SplitStepper {
    diag: Vec<f64>,
    pairs: Vec<(usize, usize, C64)>,
}

impl SplitStepper {
    pub fn new(op: &LinearOperator) -> Self {
        let n = op.dim();
        let diag = (0..n).map(|i| op.entry(i, i).re).collect();
        let mut pairs = Vec::new();
        match op.repr() {
            crate::operator::Repr::Diagonal(_) => {}
            crate::operator::Repr::Tridiagonal { .. } => {
                for i in 0..n.saturating_sub(1) {
                    push_pair(&mut pairs, i, i + 1, op.entry(i, i + 1));
                }
                if n > 2 {
                    push_pair(&mut pairs, 0, n - 1, op.entry(0, n - 1));
                }
            }
            crate::operator::Repr::Dense(_) => {
                for i in 0..n {
                    for j in i + 1..n {
                        push_pair(&mut pairs, i, j, op.entry(i, j));
                    }
                }
            }
        }
        SplitStepper { diag, pairs }
    }

    /// Advances `x` by `exp(-i H tau)` to second order in `tau`.
    pub fn step(&self, x: &mut [C64], tau: f64) {
        let half = 0.5 * tau;
        self.diagonal_phase(x, half);
        for &(i, j, c) in &self.pairs {
            rotate(x, i, j, c, half);
        }
        for &(i, j, c) in self.pairs.iter().rev() {
            rotate(x, i, j, c, half);
        }
        self.diagonal_phase(x, half);
    }

    fn diagonal_phase(&self, x: &mut [C64], tau: f64) {
        for (xi, &d) in x.iter_mut().zip(&self.diag) {
            *xi *= C64::from_polar(1.0, -d * tau);
        }
    }
}

fn push_pair(pairs: &mut Vec<(usize, usize, C64)>, i: usize, j: usize, c: C64) {
    if c.norm() > 0.0 {
        pairs.push((i, j, c));
    }
}

/// Applies `exp(-i tau (c|i><j| + c*|j><i|))`.
#[inline]
fn rotate(x: &mut [C64], i: usize, j: usize, c: C64, tau: f64) {
    let r = c.norm();
    let (s, co) = (r * tau).sin_cos();
    let u = c / r;
    let minus_i = C64::new(0.0, -1.0);
    let (xi, xj) = (x[i], x[j]);
    x[i] = xi * co + minus_i * s * u * xj;
    x[j] = xj * co + minus_i * s * u.conj() * xi;
}
