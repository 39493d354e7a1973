//! Operator bases and the real Liouville representation of linear maps on
//! operators.
//!
//! With a Hermitian basis `{P_n}` normalised as `Tr[P_n P_m] = D δ_nm`, a
//! Hermiticity-preserving map `S` becomes the real matrix
//! `S_nm = Tr[P_n S(P_m)] / D`, and an operator `A` has coordinates
//! `c_m(A) = Tr[P_m A]`. Composition of maps is then the matrix product.
//!
//! The basis is always ordered with the identity first, and for qubits the
//! single-site order is `(I, X, Y, Z)`. Multi-qudit bases are tensor products
//! with the first factor most significant.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Matrix};
use crate::real::Real;

/// Identifies a product basis: `n` qudits of local dimension `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisId {
    pub d: usize,
    pub n: usize,
}

impl BasisId {
    pub fn qubits(n: usize) -> Self {
        BasisId { d: 2, n }
    }

    /// Hilbert-space dimension `D = dⁿ`.
    pub fn hilbert_dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    /// Number of basis elements `D²`.
    pub fn size(&self) -> usize {
        self.hilbert_dim().pow(2)
    }

    pub fn tensor(&self, other: &BasisId) -> Result<BasisId> {
        if self.d != other.d {
            return Err(Error::Config(format!(
                "tensor of bases with different local dimension {} and {}",
                self.d, other.d
            )));
        }
        Ok(BasisId { d: self.d, n: self.n + other.n })
    }
}

/// Hermitian operator basis with `Tr[P_n P_m] = D δ_nm`.
#[derive(Clone, Debug)]
pub struct OperatorBasis<T> {
    pub id: BasisId,
    pub dim: usize,
    pub elements: Vec<CMatrix<T>>,
    pub labels: Vec<String>,
}

fn cm<T: Real>(rows: &[[(f64, f64); 3]]) -> CMatrix<T> {
    Matrix::from_fn(3, 3, |r, c| Complex::new(T::lit(rows[r][c].0), T::lit(rows[r][c].1)))
}

/// Single-qubit Pauli matrices (I, X, Y, Z).
pub fn pauli_matrices<T: Real>() -> [CMatrix<T>; 4] {
    let z = T::zero();
    let o = T::one();
    let c = |re: T, im: T| Complex::new(re, im);
    [
        Matrix::from_rows(&[vec![c(o, z), c(z, z)], vec![c(z, z), c(o, z)]]),
        Matrix::from_rows(&[vec![c(z, z), c(o, z)], vec![c(o, z), c(z, z)]]),
        Matrix::from_rows(&[vec![c(z, z), c(z, -o)], vec![c(z, o), c(z, z)]]),
        Matrix::from_rows(&[vec![c(o, z), c(z, z)], vec![c(z, z), c(-o, z)]]),
    ]
}

/// The eight Gell-Mann matrices, `Tr[λ_i λ_j] = 2δ_ij`.
pub fn gell_mann_matrices<T: Real>() -> Vec<CMatrix<T>> {
    let s3 = 1.0 / 3f64.sqrt();
    let o = (0.0, 0.0);
    vec![
        cm(&[[o, (1.0, 0.0), o], [(1.0, 0.0), o, o], [o, o, o]]),
        cm(&[[o, (0.0, -1.0), o], [(0.0, 1.0), o, o], [o, o, o]]),
        cm(&[[(1.0, 0.0), o, o], [o, (-1.0, 0.0), o], [o, o, o]]),
        cm(&[[o, o, (1.0, 0.0)], [o, o, o], [(1.0, 0.0), o, o]]),
        cm(&[[o, o, (0.0, -1.0)], [o, o, o], [(0.0, 1.0), o, o]]),
        cm(&[[o, o, o], [o, o, (1.0, 0.0)], [o, (1.0, 0.0), o]]),
        cm(&[[o, o, o], [o, o, (0.0, -1.0)], [o, (0.0, 1.0), o]]),
        cm(&[[(s3, 0.0), o, o], [o, (s3, 0.0), o], [o, o, (-2.0 * s3, 0.0)]]),
    ]
}

fn local_basis<T: Real>(d: usize) -> Result<(Vec<CMatrix<T>>, Vec<String>)> {
    match d {
        2 => Ok((
            pauli_matrices::<T>().to_vec(),
            ["I", "X", "Y", "Z"].iter().map(|s| s.to_string()).collect(),
        )),
        3 => {
            let scale = Complex::new(T::lit(1.5).sqrt(), T::zero());
            let mut els = vec![Matrix::identity(3)];
            els.extend(gell_mann_matrices::<T>().into_iter().map(|g| g.scale(scale)));
            let mut labels = vec!["I".to_string()];
            labels.extend((1..=8).map(|k| format!("L{k}")));
            Ok((els, labels))
        }
        _ => Err(Error::Config(format!("unsupported local dimension d={d}; expected 2 or 3"))),
    }
}

/// Generalised Pauli basis on `n_qudits` sites of dimension `d ∈ {2, 3}`.
///
/// Qutrits use `{I, √(3/2)·λ_j}` so that the trace normalisation matches the
/// qubit convention.
pub fn pauli_basis<T: Real>(n_qudits: usize, d: usize) -> Result<OperatorBasis<T>> {
    if n_qudits == 0 {
        return Err(Error::Config("a basis needs at least one qudit".into()));
    }
    let (loc, loc_labels) = local_basis::<T>(d)?;
    let mut els = loc.clone();
    let mut labels = loc_labels.clone();
    for _ in 1..n_qudits {
        let mut next = Vec::with_capacity(els.len() * loc.len());
        let mut next_labels = Vec::with_capacity(els.len() * loc.len());
        for (a, la) in els.iter().zip(&labels) {
            for (b, lb) in loc.iter().zip(&loc_labels) {
                next.push(a.kron(b));
                next_labels.push(format!("{la}{lb}"));
            }
        }
        els = next;
        labels = next_labels;
    }
    let id = BasisId { d, n: n_qudits };
    Ok(OperatorBasis { id, dim: id.hilbert_dim(), elements: els, labels })
}

impl<T: Real> OperatorBasis<T> {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Coordinates `c_m(A) = Re Tr[P_m A]`; exact for Hermitian `A`.
    pub fn coords(&self, a: &CMatrix<T>) -> Vec<T> {
        self.elements.iter().map(|p| p.trace_product(a).re).collect()
    }

    /// Inverse of [`coords`](Self::coords): `A = Σ c_m P_m / D`.
    pub fn from_coords(&self, c: &[T]) -> CMatrix<T> {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        let inv_d = T::one() / T::from_usize(self.dim);
        for (p, &cm) in self.elements.iter().zip(c) {
            if cm != T::zero() {
                out = &out + &p.scale(Complex::new(cm * inv_d, T::zero()));
            }
        }
        out
    }

    /// `τ = [Tr P_1, …, Tr P_{D²}] / D`.
    pub fn tau(&self) -> Vec<T> {
        let d = T::from_usize(self.dim);
        self.elements.iter().map(|p| p.trace().re / d).collect()
    }

    /// Liouville matrix of an arbitrary linear operator map.
    ///
    /// Only the real part is kept, which is exact for Hermiticity-preserving
    /// maps.
    pub fn liouville_of(&self, f: impl Fn(&CMatrix<T>) -> CMatrix<T>) -> MapMatrix<T> {
        let n = self.len();
        let inv_d = T::one() / T::from_usize(self.dim);
        let images: Vec<CMatrix<T>> = self.elements.iter().map(&f).collect();
        let entries = Matrix::from_fn(n, n, |r, c| self.elements[r].trace_product(&images[c]).re * inv_d);
        MapMatrix { dim: self.dim, entries, basis: self.id }
    }

    /// Largest deviation from the orthogonality and Hermiticity conditions.
    pub fn structure_error(&self) -> T {
        let d = T::from_usize(self.dim);
        let mut worst = T::zero();
        for (i, a) in self.elements.iter().enumerate() {
            worst = worst.max((a - &a.dagger()).max_abs_c());
            for (j, b) in self.elements.iter().enumerate() {
                let want = if i == j { d } else { T::zero() };
                worst = worst.max((a.trace_product(b) - Complex::new(want, T::zero())).norm());
            }
        }
        worst
    }
}

/// Real `D² × D²` Liouville matrix of a Hermiticity-preserving map.
#[derive(Clone, Debug, PartialEq)]
pub struct MapMatrix<T> {
    pub dim: usize,
    pub entries: Matrix<T>,
    pub basis: BasisId,
}

/// Block form `[[1, 0], [κ, W]]` of a trace-preserving map.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitalDecomposition<T> {
    pub kappa: Vec<T>,
    pub w: Matrix<T>,
}

impl<T: Real> UnitalDecomposition<T> {
    pub fn reassemble(&self, basis: BasisId) -> MapMatrix<T> {
        let n = self.kappa.len() + 1;
        let entries = Matrix::from_fn(n, n, |r, c| match (r, c) {
            (0, 0) => T::one(),
            (0, _) => T::zero(),
            (_, 0) => self.kappa[r - 1],
            _ => self.w[(r - 1, c - 1)],
        });
        MapMatrix { dim: basis.hilbert_dim(), entries, basis }
    }
}

impl<T: Real> MapMatrix<T> {
    pub fn new(entries: Matrix<T>, basis: BasisId) -> Result<Self> {
        let n = basis.size();
        if entries.shape() != (n, n) {
            return Err(Error::dims(format!("{n}x{n}"), format!("{:?}", entries.shape())));
        }
        Ok(MapMatrix { dim: basis.hilbert_dim(), entries, basis })
    }

    pub fn identity(basis: BasisId) -> Self {
        MapMatrix { dim: basis.hilbert_dim(), entries: Matrix::identity(basis.size()), basis }
    }

    pub fn size(&self) -> usize {
        self.entries.rows()
    }

    /// Acts on operator coordinates.
    pub fn apply(&self, coords: &[T]) -> Vec<T> {
        self.entries.mul_vec(coords)
    }

    /// Map of the Hilbert-Schmidt adjoint, `Sᵀ`.
    pub fn adjoint(&self) -> Self {
        MapMatrix { dim: self.dim, entries: self.entries.transpose(), basis: self.basis }
    }

    pub fn det(&self) -> T {
        self.entries.det()
    }

    /// `self^m` for an iterated gate.
    pub fn pow(&self, m: u64) -> Self {
        MapMatrix { dim: self.dim, entries: self.entries.powi(m), basis: self.basis }
    }

    /// Map on the composite system, `self ⊗ other`.
    pub fn tensor(&self, other: &MapMatrix<T>) -> Result<Self> {
        let basis = self.basis.tensor(&other.basis)?;
        Ok(MapMatrix { dim: basis.hilbert_dim(), entries: self.entries.kron(&other.entries), basis })
    }
}

/// `S_U` for `A ↦ U A U†`. Orthogonal with unit determinant.
pub fn liouville_of_unitary<T: Real>(u: &CMatrix<T>, basis: &OperatorBasis<T>) -> Result<MapMatrix<T>> {
    if u.shape() != (basis.dim, basis.dim) {
        return Err(Error::dims(format!("{0}x{0}", basis.dim), format!("{:?}", u.shape())));
    }
    if !u.is_unitary(T::default_tol()) {
        return Err(Error::Validation("operator is not unitary to 1e-10".into()));
    }
    let ud = u.dagger();
    Ok(basis.liouville_of(|a| u.matmul(a).matmul(&ud)))
}

/// `S₂ S₁`: apply `s1` first.
pub fn compose<T: Real>(s2: &MapMatrix<T>, s1: &MapMatrix<T>) -> Result<MapMatrix<T>> {
    if s2.basis != s1.basis {
        return Err(Error::dims(format!("{:?}", s2.basis), format!("{:?}", s1.basis)));
    }
    Ok(MapMatrix { dim: s1.dim, entries: s2.entries.matmul(&s1.entries), basis: s1.basis })
}

/// `O S Oᵀ` for an orthogonal change of operator basis.
pub fn change_basis<T: Real>(s: &MapMatrix<T>, o: &Matrix<T>) -> Result<MapMatrix<T>> {
    if o.shape() != s.entries.shape() {
        return Err(Error::dims(format!("{:?}", s.entries.shape()), format!("{:?}", o.shape())));
    }
    if !o.is_orthogonal(T::default_tol()) {
        return Err(Error::Validation("basis change is not orthogonal to 1e-10".into()));
    }
    Ok(MapMatrix { dim: s.dim, entries: o.matmul(&s.entries).matmul(&o.transpose()), basis: s.basis })
}

/// `‖Sᵀτ − τ‖∞ ≤ tol` with τ taken from the standard (identity-first) basis.
pub fn is_trace_preserving<T: Real>(s: &MapMatrix<T>, tol: T) -> bool {
    let n = s.size();
    (0..n).all(|c| {
        let tc = if c == 0 { T::one() } else { T::zero() };
        // (Sᵀτ)_c = Σ_r S_rc τ_r = S_0c since τ = e_0
        (s.entries[(0, c)] - tc).abs() <= tol
    })
}

/// Splits a trace-preserving map into its non-unital vector κ and unital block W.
pub fn unital_decomposition<T: Real>(s: &MapMatrix<T>) -> Result<UnitalDecomposition<T>> {
    if !is_trace_preserving(s, T::default_tol()) {
        return Err(Error::Validation("map is not trace preserving; first row must be [1, 0, …, 0]".into()));
    }
    let n = s.size();
    Ok(UnitalDecomposition {
        kappa: (1..n).map(|r| s.entries[(r, 0)]).collect(),
        w: s.entries.block(1, 1, n - 1, n - 1),
    })
}

/// `u′ = |det S|^{2/(D²−1)}`.
pub fn unitarity_det<T: Real>(s: &MapMatrix<T>) -> T {
    let n = s.size();
    let (sign, logdet) = s.entries.log_abs_det();
    if sign == T::zero() {
        return T::zero();
    }
    (T::lit(2.0) * logdet / T::from_usize(n - 1)).exp()
}

/// `u = Tr[WᵀW]/(D²−1)` on the unital block.
pub fn unitarity_frobenius<T: Real>(s: &MapMatrix<T>) -> Result<T> {
    let dec = unital_decomposition(s)?;
    Ok(dec.w.frobenius_sq() / T::from_usize(s.size() - 1))
}

pub fn spectrum<T: Real>(s: &MapMatrix<T>) -> Result<Vec<Complex<T>>> {
    s.entries.eigenvalues().map_err(|e| e.with_context(format!("spectrum of {}x{} map", s.size(), s.size())))
}

pub fn spectral_radius<T: Real>(s: &MapMatrix<T>) -> Result<T> {
    Ok(spectrum(s)?.iter().fold(T::zero(), |m, z| m.max(z.norm())))
}
