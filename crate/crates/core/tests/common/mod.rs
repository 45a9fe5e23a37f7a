#![allow(dead_code)]

use branchsim_core::operator::LinearOperator;
use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::Rng;

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> LinearOperator {
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        m[[i, i]] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
        for j in i + 1..n {
            let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            m[[i, j]] = z;
            m[[j, i]] = z.conj();
        }
    }
    LinearOperator::dense(m).unwrap()
}

pub fn trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0];
    for n in 1..t.len() {
        out.push(out[n - 1] + 0.5 * (t[n] - t[n - 1]) * (y[n] + y[n - 1]));
    }
    out
}
