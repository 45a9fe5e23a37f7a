//! Operators on a single finite Hilbert space.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::StateVector;

/// Tolerance below which an operator counts as Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Anything that can act on an amplitude slice.
pub trait Apply: Sync {
    fn dim(&self) -> usize;

    /// `y = O x`; `y` is overwritten.
    fn apply_into(&self, x: &[C64], y: &mut [C64]);

    /// Upper bound on the spectral radius (row-sum norm).
    fn norm_bound(&self) -> f64;

    /// Real diagonal, when the operator is diagonal in the computational basis.
    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }

    fn apply(&self, x: &StateVector) -> StateVector {
        let mut y = vec![ZERO; self.dim()];
        self.apply_into(x.amplitudes(), &mut y);
        StateVector::new(y).expect("operator dimension is positive")
    }

    /// `<x|O|x>`.
    fn expectation(&self, x: &StateVector) -> C64 {
        let mut y = vec![ZERO; self.dim()];
        self.apply_into(x.amplitudes(), &mut y);
        x.amplitudes().iter().zip(&y).map(|(a, &b)| a.conj() * b).sum()
    }

    /// Dense matrix built column by column from basis vectors.
    fn to_dense(&self) -> Array2<C64> {
        let n = self.dim();
        let mut m = Array2::zeros((n, n));
        let mut e = vec![ZERO; n];
        let mut col = vec![ZERO; n];
        for j in 0..n {
            e[j] = C64::new(1.0, 0.0);
            self.apply_into(&e, &mut col);
            for i in 0..n {
                m[[i, j]] = col[i];
            }
            e[j] = ZERO;
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Repr {
    Dense(Array2<C64>),
    /// Real diagonal.
    Diagonal(Vec<f64>),
    /// Hermitian tridiagonal: `upper[j] = O[j][j+1]`, optional `corner = O[0][n-1]`
    /// for periodic closure.
    Tridiagonal {
        diag: Vec<f64>,
        upper: Vec<C64>,
        corner: Option<C64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearOperator {
    repr: Repr,
    bound: f64,
}

impl LinearOperator {
    pub fn dense(m: Array2<C64>) -> Result<Self> {
        let (r, c) = m.dim();
        if r != c || r == 0 {
            return Err(Error::shape(format!("operator must be square and nonempty, got {r}x{c}")));
        }
        let bound = m
            .rows()
            .into_iter()
            .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        Ok(LinearOperator { repr: Repr::Dense(m), bound })
    }

    pub fn from_rows(rows: &[&[C64]]) -> Result<Self> {
        let n = rows.len();
        let mut m = Array2::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::shape("ragged operator rows"));
            }
            for (j, &v) in row.iter().enumerate() {
                m[[i, j]] = v;
            }
        }
        Self::dense(m)
    }

    pub fn diagonal(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "operator dimension must be positive");
        let bound = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        LinearOperator { repr: Repr::Diagonal(values), bound }
    }

    pub fn tridiagonal(diag: Vec<f64>, upper: Vec<C64>, corner: Option<C64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || upper.len() + 1 != n {
            return Err(Error::shape("tridiagonal needs n diagonal and n-1 upper entries"));
        }
        let mut bound = 0.0f64;
        for j in 0..n {
            let mut s = diag[j].abs();
            if j + 1 < n {
                s += upper[j].norm();
            }
            if j > 0 {
                s += upper[j - 1].norm();
            }
            if let Some(c) = corner {
                if j == 0 || j == n - 1 {
                    s += c.norm();
                }
            }
            bound = bound.max(s);
        }
        Ok(LinearOperator { repr: Repr::Tridiagonal { diag, upper, corner }, bound })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(vec![1.0; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self::diagonal(vec![0.0; n])
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.repr, Repr::Diagonal(_))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let repr = match &self.repr {
            Repr::Dense(m) => Repr::Dense(m.mapv(|z| z * s)),
            Repr::Diagonal(d) => Repr::Diagonal(d.iter().map(|x| x * s).collect()),
            Repr::Tridiagonal { diag, upper, corner } => Repr::Tridiagonal {
                diag: diag.iter().map(|x| x * s).collect(),
                upper: upper.iter().map(|z| z * s).collect(),
                corner: corner.map(|z| z * s),
            },
        };
        LinearOperator { repr, bound: self.bound * s.abs() }
    }

    /// `max |O - O^dagger|` over entries.
    pub fn hermitian_deviation(&self) -> f64 {
        match &self.repr {
            Repr::Dense(m) => {
                let n = m.nrows();
                let mut worst = 0.0f64;
                for i in 0..n {
                    for j in i..n {
                        worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
                    }
                }
                worst
            }
            Repr::Diagonal(_) | Repr::Tridiagonal { .. } => 0.0,
        }
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() < HERMITIAN_TOLERANCE
    }

    pub fn require_hermitian(&self) -> Result<()> {
        let dev = self.hermitian_deviation();
        if dev < HERMITIAN_TOLERANCE {
            Ok(())
        } else {
            Err(Error::OperatorError(format!("operator is not Hermitian (deviation {dev:.3e})")))
        }
    }

    /// Matrix element `<i|O|j>`.
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        match &self.repr {
            Repr::Dense(m) => m[[i, j]],
            Repr::Diagonal(d) => {
                if i == j {
                    C64::new(d[i], 0.0)
                } else {
                    ZERO
                }
            }
            Repr::Tridiagonal { diag, upper, corner } => {
                let n = diag.len();
                let mut v = ZERO;
                if i == j {
                    v += diag[i];
                }
                if j == i + 1 {
                    v += upper[i];
                }
                if i == j + 1 {
                    v += upper[j].conj();
                }
                if let Some(c) = corner {
                    if n > 1 && i == 0 && j == n - 1 {
                        v += c;
                    }
                    if n > 1 && i == n - 1 && j == 0 {
                        v += c.conj();
                    }
                }
                v
            }
        }
    }
}

impl Apply for LinearOperator {
    fn dim(&self) -> usize {
        match &self.repr {
            Repr::Dense(m) => m.nrows(),
            Repr::Diagonal(d) => d.len(),
            Repr::Tridiagonal { diag, .. } => diag.len(),
        }
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        match &self.repr {
            Repr::Dense(m) => {
                for (yi, row) in y.iter_mut().zip(m.rows()) {
                    *yi = row.iter().zip(x).map(|(&a, &b)| a * b).sum();
                }
            }
            Repr::Diagonal(d) => {
                for ((yi, &xi), &di) in y.iter_mut().zip(x).zip(d) {
                    *yi = xi * di;
                }
            }
            Repr::Tridiagonal { diag, upper, corner } => {
                let n = diag.len();
                for j in 0..n {
                    y[j] = x[j] * diag[j];
                }
                for j in 0..n - 1 {
                    y[j] += upper[j] * x[j + 1];
                    y[j + 1] += upper[j].conj() * x[j];
                }
                if let Some(c) = corner {
                    if n > 1 {
                        y[0] += c * x[n - 1];
                        y[n - 1] += c.conj() * x[0];
                    }
                }
            }
        }
    }

    fn norm_bound(&self) -> f64 {
        self.bound
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        match &self.repr {
            Repr::Diagonal(d) => Some(d.clone()),
            _ => None,
        }
    }

    fn to_dense(&self) -> Array2<C64> {
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            _ => {
                let n = self.dim();
                Array2::from_shape_fn((n, n), |(i, j)| self.entry(i, j))
            }
        }
    }
}

/// Lazy linear combination `shift * I + sum_k c_k O_k` of borrowed operators.
#[derive(Clone, Debug)]
pub struct OperatorSum<'a> {
    dim: usize,
    shift: f64,
    terms: Vec<(f64, &'a LinearOperator)>,
}

impl<'a> OperatorSum<'a> {
    pub fn new(dim: usize) -> Self {
        OperatorSum { dim, shift: 0.0, terms: Vec::new() }
    }

    pub fn with(mut self, coeff: f64, op: &'a LinearOperator) -> Self {
        self.push(coeff, op);
        self
    }

    pub fn push(&mut self, coeff: f64, op: &'a LinearOperator) {
        assert_eq!(op.dim(), self.dim, "operator sum dimension mismatch");
        if coeff != 0.0 {
            self.terms.push((coeff, op));
        }
    }

    pub fn shifted(mut self, s: f64) -> Self {
        self.shift += s;
        self
    }

    pub fn terms(&self) -> &[(f64, &'a LinearOperator)] {
        &self.terms
    }

    /// Materializes the sum, keeping diagonal or tridiagonal structure when every
    /// term shares it.
    pub fn collapse(&self) -> LinearOperator {
        let n = self.dim;
        if let Some(d) = Apply::diagonal(self) {
            return LinearOperator::diagonal(d);
        }
        let banded = self
            .terms
            .iter()
            .all(|(_, o)| matches!(o.repr(), Repr::Diagonal(_) | Repr::Tridiagonal { .. }));
        if banded {
            let mut diag = vec![self.shift; n];
            let mut upper = vec![ZERO; n - 1];
            let mut corner: Option<C64> = None;
            for (c, o) in &self.terms {
                match o.repr() {
                    Repr::Diagonal(d) => diag.iter_mut().zip(d).for_each(|(a, b)| *a += c * b),
                    Repr::Tridiagonal { diag: d, upper: u, corner: k } => {
                        diag.iter_mut().zip(d).for_each(|(a, b)| *a += c * b);
                        upper.iter_mut().zip(u).for_each(|(a, b)| *a += b * c);
                        if let Some(k) = k {
                            *corner.get_or_insert(ZERO) += k * c;
                        }
                    }
                    Repr::Dense(_) => unreachable!(),
                }
            }
            return LinearOperator::tridiagonal(diag, upper, corner).expect("consistent band shape");
        }
        let mut m = Array2::from_diag_elem(n, C64::new(self.shift, 0.0));
        for (c, o) in &self.terms {
            m = m + o.to_dense().mapv(|z| z * c);
        }
        LinearOperator::dense(m).expect("square by construction")
    }
}

impl Apply for OperatorSum<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        for (yi, &xi) in y.iter_mut().zip(x) {
            *yi = xi * self.shift;
        }
        let mut tmp = vec![ZERO; self.dim];
        for (c, o) in &self.terms {
            o.apply_into(x, &mut tmp);
            for (yi, t) in y.iter_mut().zip(&tmp) {
                *yi += t * c;
            }
        }
    }

    fn norm_bound(&self) -> f64 {
        self.shift.abs() + self.terms.iter().map(|(c, o)| c.abs() * o.norm_bound()).sum::<f64>()
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        let mut d = vec![self.shift; self.dim];
        for (c, o) in &self.terms {
            match o.repr() {
                Repr::Diagonal(v) => d.iter_mut().zip(v).for_each(|(a, b)| *a += c * b),
                _ => return None,
            }
        }
        Some(d)
    }
}

/// Dense Kronecker product `a (x) b` with A as the slow index.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    Array2::from_shape_fn((ra * rb, ca * cb), |(i, j)| a[[i / rb, j / cb]] * b[[i % rb, j % cb]])
}

pub fn pauli_x() -> LinearOperator {
    let (o, l) = (ZERO, C64::new(1.0, 0.0));
    LinearOperator::from_rows(&[&[o, l], &[l, o]]).unwrap()
}

pub fn pauli_y() -> LinearOperator {
    let (o, i) = (ZERO, C64::new(0.0, 1.0));
    LinearOperator::from_rows(&[&[o, -i], &[i, o]]).unwrap()
}

pub fn pauli_z() -> LinearOperator {
    LinearOperator::diagonal(vec![1.0, -1.0])
}
