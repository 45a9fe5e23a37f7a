//! Krylov (Lanczos) evaluation of `exp(-i H tau) v` for Hermitian `H`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::Apply;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Largest Krylov subspace built per substep.
pub const MAX_KRYLOV_DIM: usize = 40;
/// Substeps keep `||H|| tau` below this.
const MAX_PHASE_PER_SUBSTEP: f64 = 10.0;
/// Full reorthogonalization below this dimension.
const REORTH_DIM: usize = 512;
const TOLERANCE: f64 = 1e-13;

/// Returns `exp(-i H tau) v`, with `tau = dt / hbar`.
pub fn expm_apply(op: &dyn Apply, v: &[C64], tau: f64) -> Result<Vec<C64>> {
    if let Some(d) = op.diagonal() {
        return Ok(v
            .iter()
            .zip(&d)
            .map(|(&x, &e)| x * C64::from_polar(1.0, -e * tau))
            .collect());
    }
    let n = op.dim();
    if n <= MAX_KRYLOV_DIM {
        // Krylov space spans everything reachable; exact up to rounding.
        return krylov_step(op, v, tau, n, true).map(|(y, _)| y);
    }
    let phase = op.norm_bound() * tau.abs();
    let substeps = ((phase / MAX_PHASE_PER_SUBSTEP).ceil() as usize).max(1);
    let sub_tau = tau / substeps as f64;
    let mut x = v.to_vec();
    for _ in 0..substeps {
        x = adaptive(op, &x, sub_tau, 0)?;
    }
    Ok(x)
}

fn adaptive(op: &dyn Apply, v: &[C64], tau: f64, depth: u32) -> Result<Vec<C64>> {
    let n = op.dim();
    let (y, err) = krylov_step(op, v, tau, MAX_KRYLOV_DIM.min(n), n <= REORTH_DIM)?;
    if err <= TOLERANCE {
        return Ok(y);
    }
    if depth >= 12 {
        return Err(Error::IntegratorDiverged(format!(
            "Krylov error estimate {err:.3e} did not converge"
        )));
    }
    let half = adaptive(op, v, tau / 2.0, depth + 1)?;
    adaptive(op, &half, tau / 2.0, depth + 1)
}

/// One Lanczos projection. Returns the propagated vector and an a-posteriori
/// error estimate `beta_m |e_m^T exp(-i T tau) e_1|`.
fn krylov_step(op: &dyn Apply, v: &[C64], tau: f64, m_max: usize, reorth: bool) -> Result<(Vec<C64>, f64)> {
    let n = op.dim();
    let beta0 = norm(v);
    if beta0 == 0.0 {
        return Ok((v.to_vec(), 0.0));
    }
    let scale = op.norm_bound().max(1e-300);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m_max);
    basis.push(v.iter().map(|&x| x / beta0).collect());
    let mut alpha: Vec<f64> = Vec::with_capacity(m_max);
    let mut beta: Vec<f64> = Vec::with_capacity(m_max);
    let mut w = vec![ZERO; n];
    let mut residual = 0.0;

    for j in 0..m_max {
        op.apply_into(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        axpy(&mut w, -a, &basis[j]);
        if j > 0 {
            axpy(&mut w, -beta[j - 1], &basis[j - 1]);
        }
        if reorth {
            for q in &basis {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let b = norm(&w);
        if b <= 1e-14 * scale {
            residual = 0.0;
            break;
        }
        // stop early once the error estimate is already below tolerance
        if j + 1 < m_max && (j + 1) % 6 == 0 {
            let coeffs = tridiag_exp_first_column(&alpha, &beta, tau)?;
            if b * coeffs[j].norm() <= TOLERANCE {
                residual = b * coeffs[j].norm();
                break;
            }
        }
        if j + 1 == m_max {
            residual = b;
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|&x| x / b).collect());
    }

    let m = alpha.len();
    let coeffs = tridiag_exp_first_column(&alpha, &beta[..m - 1], tau)?;
    let err = residual * coeffs[m - 1].norm();
    let mut y = vec![ZERO; n];
    for (q, &c) in basis.iter().zip(&coeffs) {
        axpy_c(&mut y, c * beta0, q);
    }
    Ok((y, err))
}

/// `exp(-i T tau) e_1` for the symmetric tridiagonal `T = tridiag(beta, alpha, beta)`.
fn tridiag_exp_first_column(alpha: &[f64], beta: &[f64], tau: f64) -> Result<Vec<C64>> {
    let m = alpha.len();
    let mut d = alpha.to_vec();
    let mut e = vec![0.0; m];
    e[..beta.len().min(m.saturating_sub(1))].copy_from_slice(&beta[..beta.len().min(m.saturating_sub(1))]);
    let mut z = vec![0.0; m * m];
    for i in 0..m {
        z[i * m + i] = 1.0;
    }
    symmetric_tridiagonal_eigen(&mut d, &mut e, &mut z)?;
    // y_i = sum_k z[i][k] exp(-i d_k tau) z[0][k]
    let mut y = vec![ZERO; m];
    for k in 0..m {
        let f = C64::from_polar(z[k], -d[k] * tau);
        for i in 0..m {
            y[i] += f * z[i * m + k];
        }
    }
    Ok(y)
}

/// Implicit QL with Wilkinson-style shifts on a symmetric tridiagonal matrix.
///
/// `d` holds the diagonal and receives the eigenvalues; `e[0..n-1]` holds the
/// subdiagonal and is destroyed. `z` (row-major `n x n`) accumulates the
/// rotations, so starting from the identity its columns become eigenvectors.
pub fn symmetric_tridiagonal_eigen(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(Error::IntegratorDiverged("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zk = &mut z[k * n..(k + 1) * n];
                    let f = zk[i + 1];
                    zk[i + 1] = s * zk[i] + c * f;
                    zk[i] = c * zk[i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, &y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], a: f64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += xi * a;
    }
}

fn axpy_c(y: &mut [C64], a: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += xi * a;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_eigen_reconstructs_matrix() {
        let alpha = [2.0, -1.0, 0.5, 3.0, 1.5];
        let beta = [1.0, 0.3, -2.0, 0.7];
        let n = alpha.len();
        let mut d = alpha.to_vec();
        let mut e = beta.to_vec();
        e.push(0.0);
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        symmetric_tridiagonal_eigen(&mut d, &mut e, &mut z).unwrap();
        for i in 0..n {
            for j in 0..n {
                let rebuilt: f64 = (0..n).map(|k| z[i * n + k] * d[k] * z[j * n + k]).sum();
                let want = if i == j {
                    alpha[i]
                } else if j == i + 1 {
                    beta[i]
                } else if i == j + 1 {
                    beta[j]
                } else {
                    0.0
                };
                assert!((rebuilt - want).abs() < 1e-13, "({i},{j}) {rebuilt} vs {want}");
            }
        }
        // trace preserved
        let tr: f64 = d.iter().sum();
        assert!((tr - alpha.iter().sum::<f64>()).abs() < 1e-13);
    }
}
