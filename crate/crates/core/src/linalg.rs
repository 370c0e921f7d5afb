//! Dense Hermitian helpers shared by every module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Ascending eigenvalues and matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

/// Largest entry of |A - A^dagger|.
pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entry of |U^dagger U - 1|.
pub fn unitary_deviation(u: &CMatrix) -> f64 {
    let g = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Hermitian part (A + A^dagger)/2.
pub fn symmetrize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Rotates every column so that its largest-magnitude entry is real and positive.
pub fn fix_phases(v: &mut CMatrix) {
    for mut col in v.column_iter_mut() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (i, z) in col.iter().enumerate() {
            let a = z.norm();
            if a > best_abs * (1.0 + 1e-12) + 1e-15 {
                best_abs = a;
                best = i;
            }
        }
        if best_abs > 0.0 {
            let phase = col[best].conj() / best_abs;
            for z in col.iter_mut() {
                *z *= phase;
            }
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix with ascending eigenvalues.
///
/// Inputs within 1e-10 (relative to the largest entry) of Hermitian are
/// symmetrized first; anything further off is rejected.
pub fn eigh(a: &CMatrix) -> Result<Eigh> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    let scale = max_abs(a).max(1.0);
    let dev = hermitian_deviation(a);
    if dev > 1e-10 * scale {
        return Err(Error::NotHermitian(dev));
    }
    let mut h = symmetrize(a);
    flush_tiny(&mut h);
    let e = eigh_unchecked(&h);
    let dev = unitary_deviation(&e.vectors);
    if dev > 1e-8 {
        return Err(Error::NotUnitary(dev));
    }
    Ok(e)
}

/// Zeroes entries below the working precision of the matrix scale; the
/// iterative solver can lose orthogonality on entries spanning hundreds of
/// decades.
fn flush_tiny(a: &mut CMatrix) {
    let floor = max_abs(a) * 1e-20;
    for z in a.iter_mut() {
        if z.re.abs() < floor {
            z.re = 0.0;
        }
        if z.im.abs() < floor {
            z.im = 0.0;
        }
    }
}

pub(crate) fn eigh_unchecked(a: &CMatrix) -> Eigh {
    let n = a.nrows();
    if n == 0 {
        return Eigh { values: vec![], vectors: CMatrix::zeros(0, 0) };
    }
    if is_diagonal(a) {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re).then(i.cmp(&j)));
        let values = order.iter().map(|&i| a[(i, i)].re).collect();
        let mut vectors = CMatrix::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            vectors[(i, col)] = ONE;
        }
        return Eigh { values, vectors };
    }
    let se = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &se.eigenvectors.column(i));
    }
    fix_phases(&mut vectors);
    Eigh { values, vectors }
}

fn is_diagonal(a: &CMatrix) -> bool {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..n {
            if i != j && a[(i, j)] != ZERO {
                return false;
            }
        }
    }
    true
}

/// Real symmetric eigen-decomposition, ascending.
pub fn eigh_real(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let se = SymmetricEigen::new((a + a.transpose()).scale(0.5));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut c = se.eigenvectors.column(i).clone_owned();
        let (imax, _) = c.iter().enumerate().fold((0, -1.0), |(bi, ba), (k, x)| {
            if x.abs() > ba * (1.0 + 1e-12) + 1e-15 {
                (k, x.abs())
            } else {
                (bi, ba)
            }
        });
        if c[imax] < 0.0 {
            c.neg_mut();
        }
        vectors.set_column(col, &c);
    }
    (values, vectors)
}

/// V diag(f(lambda)) V^dagger.
pub fn spectral_map(e: &Eigh, f: impl Fn(f64) -> C64) -> CMatrix {
    let mut scaled = e.vectors.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        let w = f(e.values[k]);
        col.iter_mut().for_each(|z| *z *= w);
    }
    scaled * e.vectors.adjoint()
}

/// exp(-i t H) for Hermitian H.
pub fn unitary_propagator(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let e = eigh(h)?;
    Ok(spectral_map(&e, |l| C64::from_polar(1.0, -l * t)))
}

/// Real part of v^dagger A v.
pub fn quad_form(v: &CVector, a: &CMatrix) -> f64 {
    v.dotc(&(a * v)).re
}

/// Trace of A B without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|&x| C64::new(x, 0.0))))
}

/// Binomial coefficient as a float; exact for the sizes used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}
