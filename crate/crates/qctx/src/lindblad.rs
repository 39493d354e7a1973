//! Lindblad generators in the Liouville representation and the noisy gate
//! models built from them.
//!
//! The two-qubit ZZ model realises every gate as
//! `𝔾 = exp(𝒥_G + t_g𝒱 + t_g𝒟)` with a control generator `𝒥_G` acting on
//! qubit A, an always-on coupling `V = (J/2) Z⊗Z` and local relaxation,
//! excitation and dephasing on both qubits. Qubit B is an unobserved memory.
//!
//! Units: rates in 1/ns, times in ns.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Matrix};
use crate::liouville::{pauli_basis, pauli_matrices, BasisId, MapMatrix, OperatorBasis};
use crate::real::Real;

/// `σ₋ = |g⟩⟨e|` with `|g⟩ = (1, 0)`.
pub fn sigma_minus<T: Real>() -> CMatrix<T> {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 1)] = Complex::new(T::one(), T::zero());
    m
}

pub fn sigma_plus<T: Real>() -> CMatrix<T> {
    sigma_minus::<T>().transpose()
}

/// Weighted Lindblad operators `{(γ_k, F_k)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dissipator<T> {
    pub ops: Vec<(T, CMatrix<T>)>,
}

impl<T: Real> Default for Dissipator<T> {
    fn default() -> Self {
        Dissipator { ops: Vec::new() }
    }
}

impl<T: Real> Dissipator<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `γ·𝒟[F]`. Rejects negative rates.
    pub fn with(mut self, rate: T, op: CMatrix<T>) -> Result<Self> {
        if rate < T::zero() || !rate.is_finite() {
            return Err(Error::Validation(format!("Lindblad rate must be finite and nonnegative, got {rate}")));
        }
        if !op.is_square() {
            return Err(Error::dims("square Lindblad operator", format!("{:?}", op.shape())));
        }
        if let Some((_, f)) = self.ops.first() {
            if f.shape() != op.shape() {
                return Err(Error::dims(format!("{:?}", f.shape()), format!("{:?}", op.shape())));
            }
        }
        self.ops.push((rate, op));
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (g, _) in &self.ops {
            if *g < T::zero() || !g.is_finite() {
                return Err(Error::Validation(format!("Lindblad rate must be finite and nonnegative, got {g}")));
            }
        }
        Ok(())
    }

    /// `Σ γ_k 𝒟_k(ρ)`.
    pub fn apply(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        let half = Complex::new(T::lit(0.5), T::zero());
        let mut out = CMatrix::zeros(rho.rows(), rho.cols());
        for (g, f) in &self.ops {
            let fd = f.dagger();
            let fdf = fd.matmul(f);
            let jump = f.matmul(rho).matmul(&fd);
            let anti = &fdf.matmul(rho) + &rho.matmul(&fdf);
            let term = &jump - &anti.scale(half);
            out = &out + &term.scale(Complex::new(*g, T::zero()));
        }
        out
    }

    /// Scaled copy `c·𝒟`.
    pub fn scaled(&self, c: T) -> Self {
        Dissipator { ops: self.ops.iter().map(|(g, f)| (*g * c, f.clone())).collect() }
    }
}

fn check_dim<T: Real>(op: &CMatrix<T>, basis: &OperatorBasis<T>) -> Result<()> {
    if op.shape() != (basis.dim, basis.dim) {
        return Err(Error::dims(format!("{0}x{0}", basis.dim), format!("{:?}", op.shape())));
    }
    Ok(())
}

/// Liouville matrix of `ρ ↦ −i[H, ρ]` for Hermitian `H`.
pub fn hamiltonian_generator<T: Real>(h: &CMatrix<T>, basis: &OperatorBasis<T>) -> Result<Matrix<T>> {
    check_dim(h, basis)?;
    if !h.is_hermitian(T::default_tol()) {
        return Err(Error::Validation("Hamiltonian is not Hermitian".into()));
    }
    let mi = Complex::new(T::zero(), -T::one());
    Ok(basis.liouville_of(|r| (&h.matmul(r) - &r.matmul(h)).scale(mi)).entries)
}

/// Liouville matrix of `Σ γ_k 𝒟_k`.
pub fn dissipator_matrix<T: Real>(d: &Dissipator<T>, basis: &OperatorBasis<T>) -> Result<Matrix<T>> {
    d.validate()?;
    for (_, f) in &d.ops {
        check_dim(f, basis)?;
    }
    if d.ops.is_empty() {
        return Ok(Matrix::zeros(basis.len(), basis.len()));
    }
    Ok(basis.liouville_of(|r| d.apply(r)).entries)
}

/// `Tr 𝒟[F] = −d(Tr[F†F] − |Tr F|²/d)`, always ≤ 0.
pub fn dissipator_trace<T: Real>(f: &CMatrix<T>) -> T {
    let d = T::from_usize(f.rows());
    let ff = f.dagger().trace_product(f).re;
    -d * (ff - f.trace().norm_sqr() / d)
}

/// Matrix exponential; rejects non-finite input.
pub fn matrix_exp<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() {
        return Err(Error::dims("square matrix", format!("{:?}", a.shape())));
    }
    a.expm()
}

/// Closed-form single-qubit relaxation, dephasing and precession under
/// `H = −(ω/2)Z` for time `t`.
///
/// With `1/T₁ = γ₁` and `1/T₂ = γ₁/2 + γ_φ`, the Bloch vector precesses with
/// the transverse part decaying as `e^{−t/T₂}` and `z` relaxing towards
/// `+1` (the ground state) as `e^{−t/T₁}`.
pub fn qubit_relaxation_map<T: Real>(t: T, gamma1: T, gammaphi: T, omega: T) -> MapMatrix<T> {
    let half = T::lit(0.5);
    let e1 = (-t * gamma1).exp();
    let e2 = (-t * (gamma1 * half + gammaphi)).exp();
    let (s, c) = (omega * t).sin_cos();
    let mut m = Matrix::identity(4);
    m[(1, 1)] = c * e2;
    m[(1, 2)] = s * e2;
    m[(2, 1)] = -s * e2;
    m[(2, 2)] = c * e2;
    m[(3, 0)] = T::one() - e1;
    m[(3, 3)] = e1;
    MapMatrix { dim: 2, entries: m, basis: BasisId::qubits(1) }
}

/// Rotation axis of a control pulse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// Primitive gate instruction acting on qubit A.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GateLabel {
    /// Idle of duration `t_g` (𝒥 = 0).
    Idle,
    /// Rotation by `angle` radians about `axis`.
    Rot { axis: Axis, angle: f64 },
}

impl GateLabel {
    pub fn x(angle: f64) -> Self {
        GateLabel::Rot { axis: Axis::X, angle }
    }

    pub fn y(angle: f64) -> Self {
        GateLabel::Rot { axis: Axis::Y, angle }
    }

    /// Ideal unitary `exp(−i(θ/2)σ)` on one qubit.
    pub fn unitary<T: Real>(&self) -> CMatrix<T> {
        match *self {
            GateLabel::Idle => CMatrix::identity(2),
            GateLabel::Rot { axis, angle } => {
                let p = pauli_matrices::<T>();
                let s = match axis {
                    Axis::X => &p[1],
                    Axis::Y => &p[2],
                };
                let (sn, cs) = (T::lit(angle) * T::lit(0.5)).sin_cos();
                &p[0].scale(Complex::new(cs, T::zero())) + &s.scale(Complex::new(T::zero(), -sn))
            }
        }
    }
}

fn parse_angle(s: &str) -> Option<f64> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let v = if let Some(rest) = body.strip_prefix("pi") {
        if rest.is_empty() {
            std::f64::consts::PI
        } else {
            let den: f64 = rest.strip_prefix('/')?.parse().ok()?;
            std::f64::consts::PI / den
        }
    } else {
        body.parse().ok()?
    };
    Some(if neg { -v } else { v })
}

fn format_angle(a: f64) -> String {
    let pi = std::f64::consts::PI;
    let sign = if a < 0.0 { "-" } else { "" };
    let r = a.abs() / pi;
    if (r - 1.0).abs() < 1e-12 {
        return format!("{sign}pi");
    }
    for den in 2..=8 {
        if (r * den as f64 - 1.0).abs() < 1e-12 {
            return format!("{sign}pi/{den}");
        }
    }
    format!("{a}")
}

impl fmt::Display for GateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateLabel::Idle => write!(f, "I"),
            GateLabel::Rot { axis, angle } => {
                let a = match axis {
                    Axis::X => 'X',
                    Axis::Y => 'Y',
                };
                write!(f, "{a}_{}", format_angle(*angle))
            }
        }
    }
}

impl FromStr for GateLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "I" {
            return Ok(GateLabel::Idle);
        }
        let bad = || Error::Config(format!("unknown gate label '{s}'; expected I, X_<angle> or Y_<angle>"));
        let (axis, rest) = match s.split_at_checked(2).ok_or_else(bad)? {
            ("X_", r) => (Axis::X, r),
            ("Y_", r) => (Axis::Y, r),
            _ => return Err(bad()),
        };
        let angle = parse_angle(rest).ok_or_else(bad)?;
        Ok(GateLabel::Rot { axis, angle })
    }
}

/// A product of primitive gates, written left to right as a matrix product
/// (the rightmost acts first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateWord(pub Vec<GateLabel>);

impl FromStr for GateWord {
    type Err = Error;

    /// Accepts a primitive label, `Z_pi` (= X_π·Y_π), `Z_pi/2`
    /// (= X_π/2·Y_π/2·X_−π/2), or labels joined by `*`.
    fn from_str(s: &str) -> Result<Self> {
        let pi = std::f64::consts::PI;
        match s.trim() {
            "Z_pi" => Ok(GateWord(vec![GateLabel::x(pi), GateLabel::y(pi)])),
            "Z_pi/2" => Ok(GateWord(vec![GateLabel::x(pi / 2.0), GateLabel::y(pi / 2.0), GateLabel::x(-pi / 2.0)])),
            other => Ok(GateWord(other.split('*').map(str::parse).collect::<Result<_>>()?)),
        }
    }
}

impl fmt::Display for GateWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|g| g.to_string()).collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// Physical parameters of the two-qubit ZZ model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZZModelParams<T> {
    pub gamma1_a: T,
    pub gamma1_b: T,
    pub gamma3_a: T,
    pub gamma3_b: T,
    pub gammaphi_a: T,
    pub gammaphi_b: T,
    /// Gate time in ns.
    pub t_g: T,
    /// `φ = J·t_g`.
    pub phi: T,
    pub nz_a: T,
    pub nz_b: T,
    /// Detector efficiency.
    pub eta: T,
}

/// `n_z = (γ₁ − γ₃)/(γ₁ + γ₃)`; `γ₁ = γ₃ = 0` is undefined.
pub fn stationary_polarization<T: Real>(gamma1: T, gamma3: T) -> Result<T> {
    let s = gamma1 + gamma3;
    if s <= T::zero() {
        return Err(Error::Validation("stationary polarization undefined for γ₁ + γ₃ = 0".into()));
    }
    Ok((gamma1 - gamma3) / s)
}

/// `γ₃ = γ₁(1 − n_z)/(1 + n_z)`.
pub fn excitation_rate<T: Real>(gamma1: T, nz: T) -> Result<T> {
    if nz <= -T::one() || nz > T::one() {
        return Err(Error::Config(format!("polarization n_z={nz} outside (-1, 1]")));
    }
    Ok(gamma1 * (T::one() - nz) / (T::one() + nz))
}

impl<T: Real> ZZModelParams<T> {
    /// Identical stationary qubits with `γ₃` fixed by `n_z`.
    pub fn stationary(gamma1: T, gammaphi: T, nz: T, t_g: T, phi: T, eta: T) -> Result<Self> {
        let g3 = excitation_rate(gamma1, nz)?;
        Ok(ZZModelParams {
            gamma1_a: gamma1,
            gamma1_b: gamma1,
            gamma3_a: g3,
            gamma3_b: g3,
            gammaphi_a: gammaphi,
            gammaphi_b: gammaphi,
            t_g,
            phi,
            nz_a: nz,
            nz_b: nz,
            eta,
        })
    }

    /// Range checks on every field.
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("gamma1_a", self.gamma1_a),
            ("gamma1_b", self.gamma1_b),
            ("gamma3_a", self.gamma3_a),
            ("gamma3_b", self.gamma3_b),
            ("gammaphi_a", self.gammaphi_a),
            ("gammaphi_b", self.gammaphi_b),
            ("t_g", self.t_g),
        ];
        for (name, v) in rates {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        for (name, v) in [("nz_a", self.nz_a), ("nz_b", self.nz_b)] {
            if !(v.abs() <= T::one()) {
                return Err(Error::Config(format!("{name} must lie in [-1, 1], got {v}")));
            }
        }
        if !(self.eta > T::zero() && self.eta <= T::one()) {
            return Err(Error::Config(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if !self.phi.is_finite() {
            return Err(Error::Config("phi must be finite".into()));
        }
        Ok(())
    }

    /// Largest mismatch between the stored `n_z` and the rate ratio. A qubit
    /// with `γ₁ = γ₃ = 0` is not constrained.
    pub fn stationarity_error(&self) -> T {
        let one = |g1: T, g3: T, nz: T| match stationary_polarization(g1, g3) {
            Ok(v) => (v - nz).abs(),
            Err(_) => T::zero(),
        };
        one(self.gamma1_a, self.gamma3_a, self.nz_a).max(one(self.gamma1_b, self.gamma3_b, self.nz_b))
    }

    pub fn t1_a(&self) -> T {
        T::one() / self.gamma1_a
    }

    pub fn t2_a(&self) -> T {
        T::one() / (self.gamma1_a * T::lit(0.5) + self.gammaphi_a)
    }

    fn local_dissipator(g1: T, g3: T, gp: T) -> Result<Dissipator<T>> {
        let zs = pauli_matrices::<T>()[3].scale(Complex::new(T::lit(0.5).sqrt(), T::zero()));
        Dissipator::new().with(g1, sigma_minus())?.with(g3, sigma_plus())?.with(gp, zs)
    }

    /// `𝒟` on qubit A alone.
    pub fn dissipator_a(&self) -> Result<Dissipator<T>> {
        Self::local_dissipator(self.gamma1_a, self.gamma3_a, self.gammaphi_a)
    }

    pub fn dissipator_b(&self) -> Result<Dissipator<T>> {
        Self::local_dissipator(self.gamma1_b, self.gamma3_b, self.gammaphi_b)
    }

    /// `𝒟` on the pair, with each local operator embedded in the product space.
    pub fn dissipator_ab(&self) -> Result<Dissipator<T>> {
        let id = CMatrix::identity(2);
        let mut d = Dissipator::new();
        for (g, f) in self.dissipator_a()?.ops {
            d = d.with(g, f.kron(&id))?;
        }
        for (g, f) in self.dissipator_b()?.ops {
            d = d.with(g, id.kron(&f))?;
        }
        Ok(d)
    }
}

/// Generators of one noisy gate. `exp(generator_j + interaction_v + dissipation)`
/// is the gate.
#[derive(Clone, Debug, PartialEq)]
pub struct GateModel<T> {
    pub generator_j: Matrix<T>,
    /// `t_g 𝒱`.
    pub interaction_v: Matrix<T>,
    /// `t_g 𝒟`.
    pub dissipation: Matrix<T>,
    pub t_g: T,
    pub phi: T,
    pub basis: BasisId,
}

impl<T: Real> GateModel<T> {
    pub fn total_generator(&self) -> Matrix<T> {
        &(&self.generator_j + &self.interaction_v) + &self.dissipation
    }

    pub fn map(&self) -> Result<MapMatrix<T>> {
        let entries = matrix_exp(&self.total_generator()).map_err(|e| e.with_context("gate exponential"))?;
        MapMatrix::new(entries, self.basis)
    }
}

fn control_hamiltonian<T: Real>(label: GateLabel) -> CMatrix<T> {
    let p = pauli_matrices::<T>();
    match label {
        GateLabel::Idle => CMatrix::zeros(2, 2),
        GateLabel::Rot { axis, angle } => {
            let s = match axis {
                Axis::X => &p[1],
                Axis::Y => &p[2],
            };
            s.scale(Complex::new(T::lit(angle) * T::lit(0.5), T::zero()))
        }
    }
}

/// Generators of `label` in the two-qubit ZZ model.
pub fn gate_model<T: Real>(params: &ZZModelParams<T>, label: GateLabel, basis: &OperatorBasis<T>) -> Result<GateModel<T>> {
    params.validate()?;
    if basis.id != BasisId::qubits(2) {
        return Err(Error::dims("two-qubit Pauli basis", format!("{:?}", basis.id)));
    }
    let id = CMatrix::identity(2);
    let zz = pauli_matrices::<T>()[3].kron(&pauli_matrices::<T>()[3]);
    let generator_j = hamiltonian_generator(&control_hamiltonian::<T>(label).kron(&id), basis)?;
    let interaction_v = hamiltonian_generator(&zz.scale(Complex::new(params.phi * T::lit(0.5), T::zero())), basis)?;
    let dissipation = dissipator_matrix(&params.dissipator_ab()?.scaled(params.t_g), basis)?;
    Ok(GateModel { generator_j, interaction_v, dissipation, t_g: params.t_g, phi: params.phi, basis: basis.id })
}

/// Noisy 16×16 gate in the ZZ model.
pub fn build_gate<T: Real>(params: &ZZModelParams<T>, label: GateLabel) -> Result<MapMatrix<T>> {
    let basis = pauli_basis::<T>(2, 2)?;
    gate_model(params, label, &basis)?.map()
}

/// Product of noisy gates as written in `word`.
pub fn build_word<T: Real>(params: &ZZModelParams<T>, word: &GateWord) -> Result<MapMatrix<T>> {
    let mut out = MapMatrix::identity(BasisId::qubits(2));
    for &g in &word.0 {
        out = crate::liouville::compose(&out, &build_gate(params, g)?)?;
    }
    Ok(out)
}

/// Single-qubit gate on A with A's local noise only, `exp(𝒥 + t_g𝒟_A)`.
/// Equals the reduced action of [`build_gate`] when `φ = 0`.
pub fn build_local_gate<T: Real>(params: &ZZModelParams<T>, label: GateLabel) -> Result<MapMatrix<T>> {
    params.validate()?;
    let basis = pauli_basis::<T>(1, 2)?;
    let j = hamiltonian_generator(&control_hamiltonian::<T>(label), &basis)?;
    let d = dissipator_matrix(&params.dissipator_a()?.scaled(params.t_g), &basis)?;
    MapMatrix::new(matrix_exp(&(&j + &d))?, basis.id)
}

/// B's free evolution over one gate time, `exp(t_g𝒟_B)`.
pub fn memory_map<T: Real>(params: &ZZModelParams<T>) -> Result<MapMatrix<T>> {
    params.validate()?;
    let basis = pauli_basis::<T>(1, 2)?;
    let d = dissipator_matrix(&params.dissipator_b()?.scaled(params.t_g), &basis)?;
    MapMatrix::new(matrix_exp(&d)?, basis.id)
}

/// `(I + n_z Z)/2`.
pub fn polarized_state<T: Real>(nz: T) -> CMatrix<T> {
    let h = T::lit(0.5);
    CMatrix::from_diag(&[Complex::new(h * (T::one() + nz), T::zero()), Complex::new(h * (T::one() - nz), T::zero())])
}

/// `ρ_A ⊗ ρ_B` with each polarization fixed by its rates; a qubit with
/// `γ₃ = 0` relaxes fully to `|g⟩`.
pub fn stationary_state<T: Real>(params: &ZZModelParams<T>) -> Result<CMatrix<T>> {
    let nza = stationary_polarization(params.gamma1_a, params.gamma3_a).map_err(|e| match e {
        Error::Validation(m) => Error::Validation(format!("qubit A: {m}")),
        e => e,
    })?;
    let nzb = stationary_polarization(params.gamma1_b, params.gamma3_b).map_err(|e| match e {
        Error::Validation(m) => Error::Validation(format!("qubit B: {m}")),
        e => e,
    })?;
    Ok(polarized_state(nza).kron(&polarized_state(nzb)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::{
        is_trace_preserving, liouville_of_unitary, unital_decomposition, unitarity_det, unitarity_frobenius,
    };
    use crate::randgen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const G1: f64 = 1.0 / 60000.0;

    fn sec5() -> ZZModelParams<f64> {
        ZZModelParams::stationary(G1, G1 / 2.0, 0.84, 40.0, 0.0, 0.95).unwrap()
    }

    fn b1() -> OperatorBasis<f64> {
        pauli_basis(1, 2).unwrap()
    }

    #[test]
    fn dissipator_exponential_matches_closed_form() {
        let b = b1();
        let (g1, gp, w, t) = (0.013, 0.007, 0.9, 3.1);
        let zs = pauli_matrices::<f64>()[3].scale(Complex::new(0.5f64.sqrt(), 0.0));
        let d = Dissipator::new().with(g1, sigma_minus()).unwrap().with(gp, zs).unwrap();
        let h = pauli_matrices::<f64>()[3].scale(Complex::new(-w / 2.0, 0.0));
        let gen = &dissipator_matrix(&d, &b).unwrap() + &hamiltonian_generator(&h, &b).unwrap();
        let s = matrix_exp(&gen.scale(t)).unwrap();
        let closed = qubit_relaxation_map(t, g1, gp, w);
        assert!((&s - &closed.entries).max_abs() < 1e-12);
        let s0 = matrix_exp(&dissipator_matrix(&d, &b).unwrap().scale(t)).unwrap();
        assert!((&s0 - &qubit_relaxation_map(t, g1, gp, 0.0).entries).max_abs() < 1e-12);
    }

    #[test]
    fn relaxation_map_structure() {
        assert_eq!(qubit_relaxation_map(0.0, 0.1, 0.2, 3.0).entries, Matrix::identity(4));
        let (t, g1, gp): (f64, f64, f64) = (7.0, 0.02, 0.01);
        let s = qubit_relaxation_map(t, g1, gp, 0.4);
        assert!(is_trace_preserving(&s, 1e-12));
        assert!((s.det() - (-2.0 * t * (g1 + gp)).exp()).abs() < 1e-14);
        let dec = unital_decomposition(&s).unwrap();
        assert_eq!(dec.kappa[0], 0.0);
        assert!((dec.kappa[2] - (1.0 - (-t * g1).exp())).abs() < 1e-15);
        let ud = unitarity_det(&s);
        assert!((ud - (-2.0 * t * (g1 + gp)).exp().powf(2.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn tensor_relaxation_det() {
        let t: f64 = 5.0;
        let a = qubit_relaxation_map(t, 0.01, 0.02, 0.0);
        let b = qubit_relaxation_map(t, 0.03, 0.005, 1.0);
        let ab = a.tensor(&b).unwrap();
        let want = (-8.0 * t * (0.01 + 0.02 + 0.03 + 0.005)).exp();
        assert!((ab.det() / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_dissipator_is_zero() {
        let m = dissipator_matrix(&Dissipator::<f64>::new(), &b1()).unwrap();
        assert_eq!(m, Matrix::zeros(4, 4));
    }

    #[test]
    fn negative_rate_rejected() {
        assert!(matches!(Dissipator::<f64>::new().with(-0.1, sigma_minus()), Err(Error::Validation(_))));
        let d = Dissipator { ops: vec![(-1.0, sigma_minus::<f64>())] };
        assert!(dissipator_matrix(&d, &b1()).is_err());
    }

    #[test]
    fn pumping_drives_to_excited_state() {
        let d = Dissipator::new().with(0.3, sigma_plus::<f64>()).unwrap();
        let ee = polarized_state(-1.0);
        assert!(d.apply(&ee).max_abs_c() < 1e-15);
        let s = matrix_exp(&dissipator_matrix(&d, &b1()).unwrap().scale(200.0)).unwrap();
        let out = s.mul_vec(&[1.0, 0.0, 0.0, 1.0]);
        assert!((out[3] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn dissipator_trace_values() {
        let b = b1();
        assert_eq!(dissipator_trace(&sigma_minus::<f64>()), -2.0);
        let zs = pauli_matrices::<f64>()[3].scale(Complex::new(0.5f64.sqrt(), 0.0));
        assert!((dissipator_trace(&zs) + 2.0).abs() < 1e-15);
        assert!(dissipator_trace(&CMatrix::<f64>::identity(2).scale(Complex::new(0.3, 0.2))).abs() < 1e-15);
        let tr = dissipator_matrix(&Dissipator::new().with(1.0, sigma_minus()).unwrap(), &b).unwrap().trace();
        assert!((tr + 2.0).abs() < 1e-14);
    }

    fn random_op(d: usize, rng: &mut ChaCha8Rng) -> CMatrix<f64> {
        Matrix::from_fn(d, d, |_, _| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn shift_and_mixing_invariance() {
        let b = b1();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let f = random_op(2, &mut rng);
            let c = Complex::new(rng.random::<f64>(), rng.random::<f64>());
            let shifted = &f + &CMatrix::identity(2).scale(c);
            assert!((dissipator_trace(&f) - dissipator_trace(&shifted)).abs() < 1e-12);
            let d1 = Dissipator::new().with(1.0, f.clone()).unwrap();
            let d2 = Dissipator::new().with(1.0, shifted).unwrap();
            let e1 = matrix_exp(&dissipator_matrix(&d1, &b).unwrap()).unwrap().det();
            let e2 = matrix_exp(&dissipator_matrix(&d2, &b).unwrap()).unwrap().det();
            assert!((e1 - e2).abs() < 1e-10);

            let fs = [random_op(2, &mut rng), random_op(2, &mut rng)];
            let u = randgen::haar_unitary::<f64, _>(2, &mut rng);
            let mixed: Vec<CMatrix<f64>> =
                (0..2).map(|j| &fs[0].scale(u[(j, 0)]) + &fs[1].scale(u[(j, 1)])).collect();
            let t0: f64 = fs.iter().map(dissipator_trace).sum();
            let t1: f64 = mixed.iter().map(dissipator_trace).sum();
            assert!((t0 - t1).abs() < 1e-12);
            let da = Dissipator { ops: fs.iter().map(|f| (1.0, f.clone())).collect() };
            let db = Dissipator { ops: mixed.iter().map(|f| (1.0, f.clone())).collect() };
            let ma = dissipator_matrix(&da, &b).unwrap();
            let mb = dissipator_matrix(&db, &b).unwrap();
            assert!((&ma - &mb).max_abs() < 1e-12);
        }
    }

    #[test]
    fn det_independent_of_hamiltonian() {
        let b2: OperatorBasis<f64> = pauli_basis(2, 2).unwrap();
        let d = dissipator_matrix(&sec5().dissipator_ab().unwrap().scaled(300.0), &b2).unwrap();
        let base = matrix_exp(&d).unwrap().det();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let a = random_op(4, &mut rng);
            let h = &a + &a.dagger();
            let j = hamiltonian_generator(&h, &b2).unwrap();
            let g = matrix_exp(&(&j + &d)).unwrap().det();
            assert!((g / base - 1.0).abs() < 1e-10);
            assert!((base.ln() - d.trace()).abs() < 1e-10);
        }
    }

    #[test]
    fn expm_basics() {
        let z: Matrix<f64> = Matrix::zeros(3, 3);
        assert_eq!(matrix_exp(&z).unwrap(), Matrix::identity(3));
        let n = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert_eq!(matrix_exp(&n).unwrap(), Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]));
        let bad = Matrix::from_rows(&[vec![f64::NAN]]);
        assert!(matrix_exp(&bad).is_err());
    }

    #[test]
    fn labels_parse_and_print() {
        for s in ["I", "X_pi", "X_pi/2", "X_-pi/2", "Y_pi/2", "Y_-pi"] {
            let g: GateLabel = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
        }
        assert_eq!("X_0.25".parse::<GateLabel>().unwrap(), GateLabel::x(0.25));
        assert!("Z_pi/3".parse::<GateLabel>().is_err());
        assert!("Q".parse::<GateLabel>().is_err());
        let w: GateWord = "Z_pi".parse().unwrap();
        assert_eq!(w.0, vec![GateLabel::x(PI), GateLabel::y(PI)]);
        assert_eq!("X_pi*I".parse::<GateWord>().unwrap().0.len(), 2);
    }

    #[test]
    fn noiseless_gate_factorizes() {
        let mut p = sec5();
        p.gamma1_a = 0.0;
        p.gamma1_b = 0.0;
        p.gamma3_a = 0.0;
        p.gamma3_b = 0.0;
        p.gammaphi_a = 0.0;
        p.gammaphi_b = 0.0;
        let g = build_gate(&p, GateLabel::x(PI)).unwrap();
        let b = b1();
        let want = liouville_of_unitary(&GateLabel::x(PI).unitary(), &b).unwrap().tensor(&MapMatrix::identity(b.id)).unwrap();
        assert!((&g.entries - &want.entries).max_abs() < 1e-12);
    }

    #[test]
    fn zero_coupling_factorizes_with_noise() {
        let p = sec5();
        for lab in [GateLabel::Idle, GateLabel::x(PI), GateLabel::y(PI / 2.0), GateLabel::x(-PI / 2.0)] {
            let g = build_gate(&p, lab).unwrap();
            let f = build_local_gate(&p, lab).unwrap().tensor(&memory_map(&p).unwrap()).unwrap();
            assert!((&g.entries - &f.entries).max_abs() < 1e-12, "{lab}");
            assert!(is_trace_preserving(&g, 1e-12));
        }
    }

    #[test]
    fn idle_unitarity_closed_form() {
        let p = sec5();
        let s = build_local_gate(&p, GateLabel::Idle).unwrap();
        let want = (-(4.0 * p.t_g / 3.0) * (p.gamma1_a + p.gammaphi_a + p.gamma3_a)).exp();
        assert!((unitarity_det(&s) - want).abs() < 1e-14);
    }

    #[test]
    fn slope_of_idle_gate() {
        let s = build_local_gate(&sec5(), GateLabel::Idle).unwrap();
        assert!((s.det().ln() - -2.11594e-3).abs() < 5e-9);
        // oracle value from an independent scipy expm
        assert!((unitarity_det(&s) - 0.9985903664487177).abs() < 1e-13);
    }

    #[test]
    fn idle_unitarity_gap() {
        let s = build_local_gate(&sec5(), GateLabel::Idle).unwrap();
        let gap = unitarity_frobenius(&s).unwrap() - unitarity_det(&s);
        assert!((gap - 3.728755e-10).abs() < 1e-15);
    }

    #[test]
    fn unital_block_is_contractive() {
        let mut p = sec5();
        p.phi = 1e-2;
        for lab in [GateLabel::Idle, GateLabel::x(PI), GateLabel::y(PI / 2.0)] {
            let g = build_gate(&p, lab).unwrap();
            let w = unital_decomposition(&g).unwrap().w;
            let smax = w.transpose().matmul(&w).spectral_radius().unwrap().sqrt();
            assert!(smax <= 1.0 + 1e-9);
        }
        // unital noise: the whole matrix contracts
        let u = ZZModelParams::stationary(G1, G1, 0.0, 400.0, 1e-2, 1.0).unwrap();
        let g = build_gate(&u, GateLabel::x(0.3)).unwrap();
        let smax = g.entries.transpose().matmul(&g.entries).spectral_radius().unwrap().sqrt();
        assert!(smax <= 1.0 + 1e-9);
    }

    #[test]
    fn stationary_state_is_fixed() {
        let p = sec5();
        let rho = stationary_state(&p).unwrap();
        assert!((&rho - &polarized_state(0.84).kron(&polarized_state(0.84))).max_abs_c() < 1e-15);
        let d = p.dissipator_ab().unwrap();
        assert!(d.apply(&rho).max_abs_c() < 1e-12);
        let zz = pauli_matrices::<f64>()[3].kron(&pauli_matrices::<f64>()[3]);
        assert!((&zz.matmul(&rho) - &rho.matmul(&zz)).max_abs_c() < 1e-15);
        assert!(p.stationarity_error() < 1e-15);

        let mut q = p;
        q.gamma3_a = 0.0;
        let r = stationary_state(&q).unwrap();
        assert!((r[(0, 0)].re - 0.92).abs() < 1e-12);
        assert!(q.stationarity_error() > 0.1);
        q.gamma1_a = 0.0;
        assert!(stationary_state(&q).is_err());
    }

    #[test]
    fn random_stationary_rates() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let nz = rng.random::<f64>() * 1.8 - 0.9;
            let p = ZZModelParams::stationary(rng.random::<f64>(), rng.random::<f64>(), nz, 10.0, 0.1, 1.0).unwrap();
            let rho = stationary_state(&p).unwrap();
            assert!(p.dissipator_ab().unwrap().apply(&rho).max_abs_c() < 1e-12);
        }
    }

    #[test]
    fn invalid_params() {
        let mut p = sec5();
        p.eta = 0.0;
        assert!(build_gate(&p, GateLabel::Idle).is_err());
        let mut q = sec5();
        q.nz_a = 1.5;
        assert!(q.validate().is_err());
        assert!(excitation_rate(1.0, -1.0).is_err());
    }

    #[test]
    fn composites_are_z_rotations() {
        let mut p = sec5();
        for g in [&mut p.gamma1_a, &mut p.gamma1_b, &mut p.gamma3_a, &mut p.gamma3_b, &mut p.gammaphi_a, &mut p.gammaphi_b] {
            *g = 0.0;
        }
        let b2: OperatorBasis<f64> = pauli_basis(2, 2).unwrap();
        for (w, th) in [("Z_pi", PI), ("Z_pi/2", PI / 2.0)] {
            let g = build_word(&p, &w.parse().unwrap()).unwrap();
            let p3 = &pauli_matrices::<f64>();
            let (s, c) = (th / 2.0).sin_cos();
            let rz = &p3[0].scale(Complex::new(c, 0.0)) + &p3[3].scale(Complex::new(0.0, -s));
            let want = liouville_of_unitary(&rz.kron(&CMatrix::identity(2)), &b2).unwrap();
            assert!((&g.entries - &want.entries).max_abs() < 1e-12, "{w}");
        }
    }
}
