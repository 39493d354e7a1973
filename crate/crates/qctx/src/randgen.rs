//! Random operators for property checks and sanity sweeps.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::lindblad::{dissipator_matrix, hamiltonian_generator, matrix_exp, Dissipator};
use crate::linalg::{CMatrix, Matrix};
use crate::liouville::{MapMatrix, OperatorBasis};
use crate::real::Real;

fn gauss<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

fn cgauss<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    Complex::new(gauss(rng), gauss(rng))
}

/// Modified Gram-Schmidt on the columns.
fn orthonormalize_columns<T: Real>(m: &mut CMatrix<T>) {
    let (n, k) = m.shape();
    for j in 0..k {
        for i in 0..j {
            let mut dot = Complex::new(T::zero(), T::zero());
            for r in 0..n {
                dot += m[(r, i)].conj() * m[(r, j)];
            }
            for r in 0..n {
                let v = m[(r, i)] * dot;
                m[(r, j)] -= v;
            }
        }
        let norm = (0..n).map(|r| m[(r, j)].norm_sqr()).sum::<T>().sqrt();
        for r in 0..n {
            m[(r, j)] = m[(r, j)] / norm;
        }
    }
}

/// Haar-distributed `d × d` unitary (QR of a Ginibre matrix).
pub fn haar_unitary<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix<T> {
    let mut m = Matrix::from_fn(d, d, |_, _| cgauss(rng));
    orthonormalize_columns(&mut m);
    m
}

/// Haar-distributed real orthogonal matrix.
pub fn random_orthogonal<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix<T> {
    let mut m: CMatrix<T> = Matrix::from_fn(n, n, |_, _| Complex::new(gauss(rng), T::zero()));
    orthonormalize_columns(&mut m);
    m.real_part()
}

/// Full-rank density matrix from the Hilbert-Schmidt ensemble.
pub fn random_density<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix<T> {
    let g = Matrix::from_fn(d, d, |_, _| cgauss::<T, _>(rng));
    let rho = g.matmul(&g.dagger());
    let tr = rho.trace();
    rho.scale(Complex::new(T::one(), T::zero()) / tr)
}

/// Uniformly random pure state.
pub fn random_pure_state<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Complex<T>> {
    let mut v: Vec<Complex<T>> = (0..d).map(|_| cgauss(rng)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    v.iter_mut().for_each(|z| *z = *z / n);
    v
}

/// `k` Kraus operators of a random CPTP map, cut from a Haar isometry.
pub fn random_kraus<T: Real, R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Vec<CMatrix<T>> {
    let u = haar_unitary::<T, _>(d * k, rng);
    (0..k).map(|j| u.block(j * d, 0, d, d)).collect()
}

pub fn apply_kraus<T: Real>(kraus: &[CMatrix<T>], a: &CMatrix<T>) -> CMatrix<T> {
    let mut out = CMatrix::zeros(a.rows(), a.cols());
    for k in kraus {
        out = &out + &k.matmul(a).matmul(&k.dagger());
    }
    out
}

/// `exp(t(ℋ + Σγ_k𝒟_k))` with a Gaussian Hamiltonian, `k_ops` Ginibre jump
/// operators, rates uniform in `(0, γ_max)` and `t` uniform in `(0, 1)`.
pub fn random_lindblad_map<T: Real, R: Rng + ?Sized>(basis: &OperatorBasis<T>, k_ops: usize, gamma_max: T, rng: &mut R) -> Result<MapMatrix<T>> {
    let d = basis.dim;
    let g = Matrix::from_fn(d, d, |_, _| cgauss::<T, _>(rng));
    let h = (&g + &g.dagger()).scale(Complex::new(T::lit(0.5), T::zero()));
    let mut diss = Dissipator::new();
    for _ in 0..k_ops {
        let f = Matrix::from_fn(d, d, |_, _| cgauss::<T, _>(rng));
        diss = diss.with(gamma_max * T::lit(rng.random::<f64>()), f)?;
    }
    let t = T::lit(rng.random::<f64>());
    let gen = &hamiltonian_generator(&h, basis)? + &dissipator_matrix(&diss, basis)?;
    MapMatrix::new(matrix_exp(&gen.scale(t))?, basis.id)
}
