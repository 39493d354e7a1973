//! Tomographic frames, probability matrices and log-determinant variances.
//!
//! A frame is `d²` input states `ρ_i` and `d²` effects `Π_k`. Together with
//! a fixed preparation and measurement they define matrices `Φ_in`, `Φ_out`
//! through which every sequence map `S` produces the probability matrix
//! `𝒫(S) = Φ_outᵀ S Φ_in`, entry `(k, i)` being the probability of effect
//! `k` given input `i`.

use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Matrix};
use crate::liouville::{MapMatrix, OperatorBasis};
use crate::real::Real;

/// Condition number above which inverses of 𝒫 are refused.
pub const MAX_CONDITION: f64 = 1e12;

/// How a frame was built.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetLabel {
    Standard,
    Sic,
    Trivial,
    Custom,
    Tensor(Vec<SetLabel>),
}

impl fmt::Display for SetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetLabel::Standard => write!(f, "standard"),
            SetLabel::Sic => write!(f, "sic"),
            SetLabel::Trivial => write!(f, "trivial"),
            SetLabel::Custom => write!(f, "custom"),
            SetLabel::Tensor(parts) => {
                let s: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
                write!(f, "tensor({})", s.join(","))
            }
        }
    }
}

/// `d²` input states and `d²` effects.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSet<T> {
    pub dim: usize,
    pub states: Vec<CMatrix<T>>,
    pub effects: Vec<CMatrix<T>>,
    pub label: SetLabel,
}

fn ket<T: Real>(entries: &[(f64, f64)]) -> Vec<Complex<T>> {
    entries.iter().map(|&(re, im)| Complex::new(T::lit(re), T::lit(im))).collect()
}

/// Kets `|n⟩`, then `(|n⟩+|m⟩)/√2` and `(|n⟩+i|m⟩)/√2` for each `n < m`.
pub fn standard_kets<T: Real>(d: usize) -> Vec<Vec<Complex<T>>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let basis = |n: usize| {
        let mut v = vec![(0.0, 0.0); d];
        v[n] = (1.0, 0.0);
        v
    };
    let mut out: Vec<Vec<Complex<T>>> = (0..d).map(|n| ket(&basis(n))).collect();
    for n in 0..d {
        for m in n + 1..d {
            let mut a = vec![(0.0, 0.0); d];
            a[n] = (s, 0.0);
            a[m] = (s, 0.0);
            out.push(ket(&a));
            a[m] = (0.0, s);
            out.push(ket(&a));
        }
    }
    out
}

/// Qubit tetrahedron or the nine-state qutrit set.
pub fn sic_kets<T: Real>(d: usize) -> Result<Vec<Vec<Complex<T>>>> {
    let tau = 2.0 * std::f64::consts::PI / 3.0;
    match d {
        2 => {
            let a = 1.0 / 3f64.sqrt();
            let b = (2.0f64 / 3.0).sqrt();
            let mut out = vec![ket(&[(1.0, 0.0), (0.0, 0.0)])];
            for th in [0.0, tau, -tau] {
                out.push(ket(&[(a, 0.0), (b * f64::cos(th), b * f64::sin(th))]));
            }
            Ok(out)
        }
        3 => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let mut out = Vec::with_capacity(9);
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                for k in 0..3 {
                    let th = tau * k as f64;
                    let mut v = vec![(0.0, 0.0); 3];
                    v[a] = (s, 0.0);
                    v[b] = (s * th.cos(), s * th.sin());
                    out.push(ket(&v));
                }
            }
            Ok(out)
        }
        _ => Err(Error::Config(format!("no SIC construction for d={d}; expected 2 or 3"))),
    }
}

impl<T: Real> StateSet<T> {
    /// Frame whose states and effects are the same rank-one projectors.
    pub fn from_kets(kets: &[Vec<Complex<T>>], label: SetLabel) -> Result<Self> {
        let dim = kets.first().map(|k| k.len()).unwrap_or(0);
        if kets.len() != dim * dim {
            return Err(Error::dims(format!("{} kets", dim * dim), kets.len()));
        }
        let states: Vec<CMatrix<T>> = kets.iter().map(|k| CMatrix::projector(k)).collect();
        Ok(StateSet { dim, effects: states.clone(), states, label })
    }

    /// One-dimensional stub, the unit of [`tensor_set`].
    pub fn trivial() -> Self {
        let one = CMatrix::identity(1);
        StateSet { dim: 1, states: vec![one.clone()], effects: vec![one], label: SetLabel::Trivial }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `(𝒫^{ideal})_{k|i} = Tr[Π_k ρ_i]`.
    pub fn ideal_prob(&self) -> ProbMatrix<T> {
        let n = self.len();
        let entries = Matrix::from_fn(n, n, |k, i| self.effects[k].trace_product(&self.states[i]).re);
        ProbMatrix::exact(entries)
    }

    /// Checks unit trace and positivity of states, `0 ≤ Π ≤ I`, and
    /// informational completeness.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim * self.dim;
        if self.states.len() != n || self.effects.len() != n {
            return Err(Error::dims(format!("{n} states and effects"), format!("{}/{}", self.states.len(), self.effects.len())));
        }
        let tol = T::lit(1e-12).max(T::default_tol());
        for (i, r) in self.states.iter().enumerate() {
            if r.shape() != (self.dim, self.dim) {
                return Err(Error::dims(format!("{0}x{0}", self.dim), format!("{:?}", r.shape())));
            }
            if (r.trace().re - T::one()).abs() > tol || !r.is_hermitian(tol) {
                return Err(Error::Validation(format!("state {i} is not a unit-trace Hermitian matrix")));
            }
            if hermitian_eigen_range(r)?.0 < -tol {
                return Err(Error::Validation(format!("state {i} is not positive semidefinite")));
            }
        }
        for (k, e) in self.effects.iter().enumerate() {
            if !e.is_hermitian(tol) {
                return Err(Error::Validation(format!("effect {k} is not Hermitian")));
            }
            let (lo, hi) = hermitian_eigen_range(e)?;
            if lo < -tol || hi > T::one() + tol {
                return Err(Error::Validation(format!("effect {k} violates 0 ≤ Π ≤ I")));
            }
        }
        if self.ideal_prob().entries.det().abs() <= T::lit(1e-12) {
            return Err(Error::Validation("frame is not informationally complete (det 𝒫₀ = 0)".into()));
        }
        Ok(())
    }

    /// Largest deviation of the overlaps from `(dδ_ij + 1)/(d + 1)`.
    pub fn sic_error(&self) -> T {
        let d = T::from_usize(self.dim);
        let p = self.ideal_prob();
        let mut worst = T::zero();
        for k in 0..self.len() {
            for i in 0..self.len() {
                let want = if i == k { T::one() } else { T::one() / (d + T::one()) };
                worst = worst.max((p.entries[(k, i)] - want).abs());
            }
        }
        worst
    }
}

/// Smallest and largest eigenvalue of a Hermitian matrix, via its real
/// symmetric embedding `[[Re, −Im], [Im, Re]]`.
pub fn hermitian_eigen_range<T: Real>(a: &CMatrix<T>) -> Result<(T, T)> {
    let n = a.rows();
    let emb = Matrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = a[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let ev = emb.eigenvalues()?;
    let lo = ev.iter().fold(T::infinity(), |m, z| m.min(z.re));
    let hi = ev.iter().fold(T::neg_infinity(), |m, z| m.max(z.re));
    Ok((lo, hi))
}

/// Standard frame on `n_factors` copies of a `d`-level system.
pub fn standard_set<T: Real>(d: usize, n_factors: usize) -> Result<StateSet<T>> {
    if d < 2 {
        return Err(Error::Config(format!("standard set needs d ≥ 2, got {d}")));
    }
    let one = StateSet::from_kets(&standard_kets::<T>(d), SetLabel::Standard)?;
    power_set(one, n_factors)
}

/// SIC frame for `d ∈ {2, 3}`.
pub fn sic_set<T: Real>(d: usize) -> Result<StateSet<T>> {
    StateSet::from_kets(&sic_kets::<T>(d)?, SetLabel::Sic)
}

fn power_set<T: Real>(one: StateSet<T>, n: usize) -> Result<StateSet<T>> {
    if n == 0 {
        return Err(Error::Config("a frame needs at least one factor".into()));
    }
    let mut out = one.clone();
    for _ in 1..n {
        out = tensor_set(&out, &one);
    }
    Ok(out)
}

/// Product frame `{ρ_i ⊗ ρ_j}`, first factor most significant.
pub fn tensor_set<T: Real>(a: &StateSet<T>, b: &StateSet<T>) -> StateSet<T> {
    if b.label == SetLabel::Trivial {
        return a.clone();
    }
    if a.label == SetLabel::Trivial {
        return b.clone();
    }
    let prod = |x: &[CMatrix<T>], y: &[CMatrix<T>]| -> Vec<CMatrix<T>> {
        x.iter().flat_map(|p| y.iter().map(move |q| p.kron(q))).collect()
    };
    let mut parts = Vec::new();
    for l in [&a.label, &b.label] {
        match l {
            SetLabel::Tensor(inner) => parts.extend(inner.iter().cloned()),
            other => parts.push(other.clone()),
        }
    }
    StateSet {
        dim: a.dim * b.dim,
        states: prod(&a.states, &b.states),
        effects: prod(&a.effects, &b.effects),
        label: SetLabel::Tensor(parts),
    }
}

/// Whether a probability matrix is exact or a finite-sample estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbKind {
    True,
    Sampled,
}

/// `d² × d²` matrix of outcome probabilities, entry `(k, i) = 𝒫_{k|i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbMatrix<T> {
    pub entries: Matrix<T>,
    pub kind: ProbKind,
    pub n_s: Option<u64>,
}

impl<T: Real> ProbMatrix<T> {
    pub fn exact(entries: Matrix<T>) -> Self {
        ProbMatrix { entries, kind: ProbKind::True, n_s: None }
    }

    pub fn sampled(entries: Matrix<T>, n_s: u64) -> Self {
        ProbMatrix { entries, kind: ProbKind::Sampled, n_s: Some(n_s) }
    }

    pub fn size(&self) -> usize {
        self.entries.rows()
    }

    /// `log|det 𝒫|`, `-∞` when singular.
    pub fn log_abs_det(&self) -> T {
        let (s, l) = self.entries.log_abs_det();
        if s == T::zero() {
            T::neg_infinity()
        } else {
            l
        }
    }

    /// Inverse, refused above [`MAX_CONDITION`].
    pub fn checked_inverse(&self) -> Result<Matrix<T>> {
        let cond = self.entries.condition1();
        if !(cond.as_f64() <= MAX_CONDITION) {
            return Err(Error::Numerical {
                msg: format!("probability matrix is ill-conditioned (cond₁ = {:.3e}); use shorter sequences", cond.as_f64()),
                context: None,
            });
        }
        self.entries.inverse()
    }
}

/// Preparation and measurement matrices, `𝒫 = Φ_outᵀ S Φ_in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spam<T> {
    pub phi_in: Matrix<T>,
    pub phi_out: Matrix<T>,
}

/// Gate-based SPAM: `ρ_i = G_i^in(ρ₀)` and `M_k = G_k^{out†}(M₀)`.
#[derive(Clone, Debug)]
pub struct SpamConfig<T> {
    pub input_gates: Vec<MapMatrix<T>>,
    pub output_gates: Vec<MapMatrix<T>>,
    pub rho0: CMatrix<T>,
    pub m0: CMatrix<T>,
}

impl<T: Real> Spam<T> {
    /// From explicit operators: columns `c(ρ_i)/√D` and `c(M_k)/√D`.
    pub fn from_operators(states: &[CMatrix<T>], effects: &[CMatrix<T>], basis: &OperatorBasis<T>) -> Result<Self> {
        let n = basis.len();
        if states.len() != effects.len() {
            return Err(Error::dims(format!("{} effects", states.len()), effects.len()));
        }
        for op in states.iter().chain(effects) {
            if op.shape() != (basis.dim, basis.dim) {
                return Err(Error::dims(format!("{0}x{0}", basis.dim), format!("{:?}", op.shape())));
            }
        }
        let s = T::one() / T::from_usize(basis.dim).sqrt();
        let build = |ops: &[CMatrix<T>]| {
            let cols: Vec<Vec<T>> = ops.iter().map(|o| basis.coords(o)).collect();
            Matrix::from_fn(n, ops.len(), |r, c| cols[c][r] * s)
        };
        Ok(Spam { phi_in: build(states), phi_out: build(effects) })
    }

    /// SPAM realising `set` exactly.
    pub fn ideal(set: &StateSet<T>, basis: &OperatorBasis<T>) -> Result<Self> {
        Self::from_operators(&set.states, &set.effects, basis)
    }

    /// Exact frame on the system, with a memory prepared in `rho_mem` and
    /// left unmeasured.
    pub fn ideal_with_memory(set: &StateSet<T>, rho_mem: &CMatrix<T>, basis: &OperatorBasis<T>) -> Result<Self> {
        let id = CMatrix::identity(rho_mem.rows());
        let states: Vec<CMatrix<T>> = set.states.iter().map(|r| r.kron(rho_mem)).collect();
        let effects: Vec<CMatrix<T>> = set.effects.iter().map(|e| e.kron(&id)).collect();
        Self::from_operators(&states, &effects, basis)
    }

    /// `det(Φ_outᵀ Φ_in)`, nonzero for invertible SPAM.
    pub fn null_det(&self) -> T {
        self.phi_out.transpose().matmul(&self.phi_in).det()
    }

    /// Probability matrix of the null instruction.
    pub fn null_prob(&self) -> ProbMatrix<T> {
        ProbMatrix::exact(self.phi_out.transpose().matmul(&self.phi_in))
    }
}

impl<T: Real> SpamConfig<T> {
    pub fn frames(&self, basis: &OperatorBasis<T>) -> Result<Spam<T>> {
        let n = basis.len();
        let r0 = basis.coords(&self.rho0);
        let m0 = basis.coords(&self.m0);
        for g in self.input_gates.iter().chain(&self.output_gates) {
            if g.size() != n {
                return Err(Error::dims(format!("{n}x{n} gate"), format!("{0}x{0}", g.size())));
            }
        }
        let s = T::one() / T::from_usize(basis.dim).sqrt();
        let ins: Vec<Vec<T>> = self.input_gates.iter().map(|g| g.apply(&r0)).collect();
        let outs: Vec<Vec<T>> = self.output_gates.iter().map(|g| g.adjoint().apply(&m0)).collect();
        Ok(Spam {
            phi_in: Matrix::from_fn(n, ins.len(), |r, c| ins[c][r] * s),
            phi_out: Matrix::from_fn(n, outs.len(), |r, c| outs[c][r] * s),
        })
    }
}

/// `𝒫(S) = Φ_outᵀ S Φ_in`.
pub fn probability_matrix<T: Real>(seq: &MapMatrix<T>, spam: &Spam<T>) -> Result<ProbMatrix<T>> {
    if seq.size() != spam.phi_in.rows() || seq.size() != spam.phi_out.rows() {
        return Err(Error::dims(format!("{0}x{0} map", spam.phi_in.rows()), format!("{0}x{0}", seq.size())));
    }
    Ok(ProbMatrix::exact(spam.phi_out.transpose().matmul(&seq.entries.matmul(&spam.phi_in))))
}

/// `S^raw = (Φ_outᵀ)⁻¹ 𝒫 Φ_in⁻¹` for the ideal frame.
pub fn raw_map<T: Real>(p: &ProbMatrix<T>, ideal: &StateSet<T>, basis: &OperatorBasis<T>) -> Result<MapMatrix<T>> {
    let spam = Spam::ideal(ideal, basis)?;
    if p.size() != spam.phi_in.cols() {
        return Err(Error::dims(format!("{0}x{0}", spam.phi_in.cols()), format!("{0}x{0}", p.size())));
    }
    let out_t = spam.phi_out.transpose().lu();
    let in_lu = spam.phi_in.lu();
    if out_t.is_singular() || in_lu.is_singular() {
        return Err(Error::numerical("ideal frame is singular"));
    }
    let left = out_t.solve(&p.entries)?;
    // X Φ_in = left  ⇔  Φ_inᵀ Xᵀ = leftᵀ
    let x = spam.phi_in.transpose().lu().solve(&left.transpose())?.transpose();
    MapMatrix::new(x, basis.id)
}

/// `σ̃² = Σ (𝒫⁻¹)²_{ik} 𝒫_{ki}(1 − 𝒫_{ki}) / N_s`.
pub fn logdet_variance<T: Real>(p: &ProbMatrix<T>, n_s: f64) -> Result<T> {
    let inv = p.checked_inverse()?;
    let n = p.size();
    let mut s = T::zero();
    for k in 0..n {
        for i in 0..n {
            let q = p.entries[(k, i)];
            s += inv[(i, k)] * inv[(i, k)] * q * (T::one() - q);
        }
    }
    Ok(s / T::lit(n_s))
}

/// `Tr[(𝒫⁻¹∘𝒫⁻¹)(𝒫∘Q[𝒫])] / N_s` with `Q = 1 − 𝒫`.
pub fn logdet_variance_hadamard<T: Real>(p: &ProbMatrix<T>, n_s: f64) -> Result<T> {
    let inv = p.checked_inverse()?;
    let q = p.entries.map(|x| T::one() - x);
    Ok(inv.hadamard(&inv).trace_product(&p.entries.hadamard(&q)) / T::lit(n_s))
}

/// `‖𝒫⁻¹‖²_F / (4N_s)`, an upper bound on [`logdet_variance`].
pub fn frobenius_bound<T: Real>(p: &ProbMatrix<T>, n_s: f64) -> Result<T> {
    Ok(p.checked_inverse()?.frobenius_sq() / T::lit(4.0 * n_s))
}

/// `(d − 1)/(d(d + 1)N_s)`.
pub fn sic_variance_closed_form(d: usize, n_s: f64) -> f64 {
    let d = d as f64;
    (d - 1.0) / (d * (d + 1.0) * n_s)
}

fn sic_r(d: f64) -> f64 {
    d * d + 2.0 * d - 1.0 - 1.0 / d
}

fn sic_q(d: f64) -> f64 {
    d * d + 2.0 * d - 1.0 - 2.0 / (d + 1.0)
}

/// Variance for a product of local SIC frames of the given dimensions.
pub fn sic_product_variance(dims: &[usize], n_s: f64) -> f64 {
    let r: f64 = dims.iter().map(|&d| sic_r(d as f64)).product();
    let q: f64 = dims.iter().map(|&d| sic_q(d as f64)).product();
    (r - q) / n_s
}

/// `n`-fold product of a `d`-dimensional SIC frame.
pub fn sic_tensor_variance(d: usize, n: usize, n_s: f64) -> f64 {
    sic_product_variance(&vec![d; n], n_s)
}

pub fn mixed_sic_variance(d1: usize, d2: usize, n_s: f64) -> f64 {
    sic_product_variance(&[d1, d2], n_s)
}

/// `(𝒫_sic)⁻¹ = ((d+2)/d) I − ((d+1)/d²) 𝒫_sic`.
pub fn sic_inverse<T: Real>(d: usize, p: &Matrix<T>) -> Matrix<T> {
    let df = T::from_usize(d);
    &Matrix::identity(p.rows()).scale((df + T::lit(2.0)) / df) - &p.scale((df + T::one()) / (df * df))
}

/// U₃(θ, φ, λ) with `cos θ = 1/√3`, `φ = π/4`, `λ = π`; maps `|g⟩` to the
/// magic state with Bloch vector `(1, 1, 1)/√3`.
pub fn magic_state_unitary<T: Real>() -> CMatrix<T> {
    let c = ((1.0 + 1.0 / 3f64.sqrt()) / 2.0).sqrt();
    let s = (1.0 - c * c).sqrt();
    let phi = std::f64::consts::FRAC_PI_4;
    let lam = std::f64::consts::PI;
    let e = |a: f64, m: f64| Complex::new(T::lit(m * a.cos()), T::lit(m * a.sin()));
    Matrix::from_rows(&[vec![e(0.0, c), -e(-lam, s)], vec![e(phi, s), e(lam + phi, c)]])
}

#[derive(Serialize, Deserialize)]
struct StateSetJson {
    dim: usize,
    label: SetLabel,
    states: Vec<Vec<Vec<[f64; 2]>>>,
    effects: Vec<Vec<Vec<[f64; 2]>>>,
}

#[derive(Serialize, Deserialize)]
struct ProbMatrixJson {
    kind: ProbKind,
    n_s: Option<u64>,
    entries: Vec<Vec<f64>>,
}

fn op_to_json<T: Real>(m: &CMatrix<T>) -> Vec<Vec<[f64; 2]>> {
    m.to_rows().into_iter().map(|r| r.into_iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect()).collect()
}

fn op_from_json<T: Real>(rows: &[Vec<[f64; 2]>], dim: usize) -> Result<CMatrix<T>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::dims(format!("{dim}x{dim} operator"), "ragged or mis-sized array"));
    }
    Ok(Matrix::from_fn(dim, dim, |r, c| Complex::new(T::lit(rows[r][c][0]), T::lit(rows[r][c][1]))))
}

impl<T: Real> StateSet<T> {
    /// JSON with complex entries as `[re, im]` pairs.
    pub fn to_json(&self) -> String {
        let j = StateSetJson {
            dim: self.dim,
            label: self.label.clone(),
            states: self.states.iter().map(op_to_json).collect(),
            effects: self.effects.iter().map(op_to_json).collect(),
        };
        serde_json::to_string_pretty(&j).expect("state set serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: StateSetJson = serde_json::from_str(s).map_err(|e| Error::Config(format!("state set JSON: {e}")))?;
        let set = StateSet {
            dim: j.dim,
            states: j.states.iter().map(|o| op_from_json(o, j.dim)).collect::<Result<_>>()?,
            effects: j.effects.iter().map(|o| op_from_json(o, j.dim)).collect::<Result<_>>()?,
            label: j.label,
        };
        set.validate()?;
        Ok(set)
    }
}

impl<T: Real> ProbMatrix<T> {
    pub fn to_json(&self) -> String {
        let j = ProbMatrixJson {
            kind: self.kind,
            n_s: self.n_s,
            entries: self.entries.to_rows().into_iter().map(|r| r.into_iter().map(|x| x.as_f64()).collect()).collect(),
        };
        serde_json::to_string(&j).expect("probability matrix serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: ProbMatrixJson = serde_json::from_str(s).map_err(|e| Error::Config(format!("probability matrix JSON: {e}")))?;
        let n = j.entries.len();
        if j.entries.iter().any(|r| r.len() != n) {
            return Err(Error::dims("square matrix", "ragged rows"));
        }
        if j.entries.iter().flatten().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::Validation("probabilities must lie in [0, 1]".into()));
        }
        Ok(ProbMatrix { entries: Matrix::from_fn(n, n, |r, c| T::lit(j.entries[r][c])), kind: j.kind, n_s: j.n_s })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{build_gate, stationary_state, GateLabel, ZZModelParams};
    use crate::liouville::{pauli_basis, liouville_of_unitary};
    use crate::randgen;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn qubit() -> OperatorBasis<f64> {
        pauli_basis(1, 2).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a / b - 1.0).abs()
    }

    #[test]
    fn standard_qubit_prob_matrix() {
        let s = standard_set::<f64>(2, 1).unwrap();
        s.validate().unwrap();
        let p = s.ideal_prob();
        let want = Matrix::from_rows(&[
            vec![1.0, 0.0, 0.5, 0.5],
            vec![0.0, 1.0, 0.5, 0.5],
            vec![0.5, 0.5, 1.0, 0.5],
            vec![0.5, 0.5, 0.5, 1.0],
        ]);
        assert!((&p.entries - &want).max_abs() < 1e-15);
        assert!((p.entries.det() - 0.25).abs() < 1e-15);
        assert!(rel(logdet_variance(&p, 1.0).unwrap(), 2.0) < 1e-12);
    }

    #[test]
    fn standard_qutrit() {
        let s = standard_set::<f64>(3, 1).unwrap();
        s.validate().unwrap();
        assert_eq!(s.len(), 9);
        assert!(rel(logdet_variance(&s.ideal_prob(), 1.0).unwrap(), 6.0) < 1e-12);
        assert!(standard_set::<f64>(1, 1).is_err());
    }

    #[test]
    fn sic_sets() {
        for d in [2, 3] {
            let s = sic_set::<f64>(d).unwrap();
            s.validate().unwrap();
            assert!(s.sic_error() < 1e-14);
            let p = s.ideal_prob();
            let v = logdet_variance(&p, 1.0).unwrap();
            assert!(rel(v, 1.0 / 6.0) < 1e-12);
            assert!(rel(v, sic_variance_closed_form(d, 1.0)) < 1e-12);
            let inv = p.entries.inverse().unwrap();
            assert!((&inv - &sic_inverse(d, &p.entries)).max_abs() < 1e-12);
            // constant-diagonal determinant ((n−1)a + b)(b − a)^{n−1}
            let (n, a) = ((d * d) as f64, 1.0 / (d as f64 + 1.0));
            let want = ((n - 1.0) * a + 1.0) * (1.0 - a).powf(n - 1.0);
            assert!(rel(p.entries.det(), want) < 1e-12);
            let df = d as f64;
            let shift = (df * df - 1.0) * (df + 1.0).ln() - df * df * df.ln();
            assert!((-p.log_abs_det() - shift).abs() < 1e-12);
        }
        assert!((sic_set::<f64>(2).unwrap().ideal_prob().entries.det() - 16.0 / 27.0).abs() < 1e-14);
        assert!(sic_set::<f64>(4).is_err());
    }

    #[test]
    fn tensor_sets_are_kronecker_products() {
        let a = sic_set::<f64>(2).unwrap();
        let aa = tensor_set(&a, &a);
        assert_eq!(aa.len(), 16);
        assert_eq!(aa.label.to_string(), "tensor(sic,sic)");
        let pa = a.ideal_prob().entries;
        assert!((&aa.ideal_prob().entries - &pa.kron(&pa)).max_abs() < 1e-14);
        assert_eq!(tensor_set(&a, &StateSet::trivial()), a);
        assert_eq!(tensor_set(&StateSet::trivial(), &a), a);
    }

    #[test]
    fn product_variance_closed_forms() {
        let n_s = 1.0;
        assert!(rel(sic_tensor_variance(2, 2, n_s), 77.0 / 36.0) < 1e-13);
        assert!(rel(sic_tensor_variance(2, 3, n_s), 4447.0 / 216.0) < 1e-13);
        assert!(rel(mixed_sic_variance(2, 3, n_s), 10.0 / 3.0) < 1e-13);
        assert!(rel(sic_tensor_variance(2, 1, n_s), 1.0 / 6.0) < 1e-13);
        let s2 = sic_set::<f64>(2).unwrap();
        let s3 = sic_set::<f64>(3).unwrap();
        let v = logdet_variance(&tensor_set(&s2, &s3).ideal_prob(), n_s).unwrap();
        assert!(rel(v, mixed_sic_variance(2, 3, n_s)) < 1e-12);
        let d: f64 = 3.0;
        let two = (d - 1.0) * (2.0 * d.powi(4) + 6.0 * d.powi(3) + 2.0 * d * d - 5.0 * d - 1.0) / (d * d * (d + 1.0).powi(2));
        assert!(rel(sic_tensor_variance(3, 2, 1.0), two) < 1e-13);
    }

    #[test]
    fn hadamard_form_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = qubit();
        let k = randgen::random_kraus::<f64, _>(2, 2, &mut rng);
        let s = b.liouville_of(|a| randgen::apply_kraus(&k, a));
        let p = probability_matrix(&s, &Spam::ideal(&standard_set(2, 1).unwrap(), &b).unwrap()).unwrap();
        let a = logdet_variance(&p, 1e4).unwrap();
        let h = logdet_variance_hadamard(&p, 1e4).unwrap();
        assert!(rel(a, h) < 1e-12);
        assert!(frobenius_bound(&p, 1e4).unwrap() > a);
    }

    #[test]
    fn frobenius_bound_for_sic() {
        let p = sic_set::<f64>(2).unwrap().ideal_prob();
        let bound = frobenius_bound(&p, 1.0).unwrap();
        assert!(rel(bound, 7.0 / 4.0) < 1e-12);
        assert!(rel(bound - logdet_variance(&p, 1.0).unwrap(), 19.0 / 12.0) < 1e-12);
    }

    #[test]
    fn free_precession_variance() {
        let set = standard_set::<f64>(2, 1).unwrap();
        let b = qubit();
        let spam = Spam::ideal(&set, &b).unwrap();
        for &(w, t) in &[(1.0, 0.3), (2.0, 0.77), (0.5, 2.0)] {
            let u = CMatrix::from_diag(&[Complex::new(1.0, 0.0), Complex::from_polar(1.0, -w * t)]);
            let p = probability_matrix(&liouville_of_unitary(&u, &b).unwrap(), &spam).unwrap();
            let want = 2.0 + (2.0 * w * t).sin().powi(2);
            assert!(rel(logdet_variance(&p, 1.0).unwrap(), want) < 1e-10);
        }
    }

    #[test]
    fn prob_matrix_matches_direct_evaluation() {
        let p = ZZModelParams::stationary(1.0 / 60000.0, 1.0 / 120000.0, 0.84, 20.0, 0.01, 0.95).unwrap();
        let b2: OperatorBasis<f64> = pauli_basis(2, 2).unwrap();
        let ins: Vec<GateLabel> = ["I", "X_pi", "Y_pi/2", "X_-pi/2"].iter().map(|s| s.parse().unwrap()).collect();
        let outs: Vec<GateLabel> = ["X_pi", "I", "Y_pi/2", "X_-pi/2"].iter().map(|s| s.parse().unwrap()).collect();
        let gi: Vec<_> = ins.iter().map(|&g| build_gate(&p, g).unwrap()).collect();
        let go: Vec<_> = outs.iter().map(|&g| build_gate(&p, g).unwrap()).collect();
        let rho0 = stationary_state(&p).unwrap();
        let mut m0 = CMatrix::zeros(2, 2);
        m0[(1, 1)] = Complex::new(0.95, 0.0);
        let m0 = m0.kron(&CMatrix::identity(2));
        let cfg = SpamConfig { input_gates: gi.clone(), output_gates: go.clone(), rho0: rho0.clone(), m0: m0.clone() };
        let spam = cfg.frames(&b2).unwrap();
        let seq = build_gate(&p, GateLabel::Idle).unwrap().pow(37);
        let pm = probability_matrix(&seq, &spam).unwrap();
        let apply = |s: &MapMatrix<f64>, r: &CMatrix<f64>| b2.from_coords(&s.apply(&b2.coords(r)));
        for k in 0..4 {
            for i in 0..4 {
                let rho = apply(&go[k], &apply(&seq, &apply(&gi[i], &rho0)));
                let direct = m0.trace_product(&rho).re;
                assert!((direct - pm.entries[(k, i)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn raw_map_recovers_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let b = qubit();
        let set = standard_set(2, 1).unwrap();
        let k = randgen::random_kraus::<f64, _>(2, 3, &mut rng);
        let s = b.liouville_of(|a| randgen::apply_kraus(&k, a));
        let p = probability_matrix(&s, &Spam::ideal(&set, &b).unwrap()).unwrap();
        let raw = raw_map(&p, &set, &b).unwrap();
        assert!((&raw.entries - &s.entries).max_abs() < 1e-10);
        let id = raw_map(&set.ideal_prob(), &set, &b).unwrap();
        assert!((&id.entries - &Matrix::identity(4)).max_abs() < 1e-12);
    }

    #[test]
    fn raw_map_logdet_is_shifted_logdet() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let b = qubit();
        let set = standard_set(2, 1).unwrap();
        let noisy: Vec<CMatrix<f64>> = (0..4).map(|_| randgen::random_density(2, &mut rng)).collect();
        let spam = Spam::from_operators(&noisy, &set.effects, &b).unwrap();
        let k = randgen::random_kraus::<f64, _>(2, 2, &mut rng);
        let s = b.liouville_of(|a| randgen::apply_kraus(&k, a));
        let p = probability_matrix(&s, &spam).unwrap();
        let raw = raw_map(&p, &set, &b).unwrap();
        let l = -set.ideal_prob().log_abs_det() + p.log_abs_det();
        assert!((raw.entries.log_abs_det().1 - l).abs() < 1e-10);
    }

    #[test]
    fn ill_conditioned_matrix_rejected() {
        let p = ProbMatrix::exact(Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5 + 1e-15]]));
        assert!(matches!(logdet_variance(&p, 1.0), Err(Error::Numerical { .. })));
    }

    #[test]
    fn magic_state() {
        let u = magic_state_unitary::<f64>();
        assert!(u.is_unitary(1e-14));
        let b = qubit();
        let g = CMatrix::projector(&[Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)]);
        let c = b.coords(&u.matmul(&g).matmul(&u.dagger()));
        let s = 1.0 / 3f64.sqrt();
        for x in &c[1..] {
            assert!((x - s).abs() < 1e-14);
        }
    }

    #[test]
    fn json_round_trip() {
        let s = tensor_set(&sic_set::<f64>(2).unwrap(), &standard_set(2, 1).unwrap());
        let back = StateSet::<f64>::from_json(&s.to_json()).unwrap();
        assert_eq!(back.label, s.label);
        for (a, b) in back.states.iter().zip(&s.states) {
            assert!((a - b).max_abs_c() < 1e-15);
        }
        let p = ProbMatrix::sampled(Matrix::from_rows(&[vec![0.25, 1.0], vec![0.0, 0.5]]), 4);
        assert_eq!(ProbMatrix::<f64>::from_json(&p.to_json()).unwrap(), p);
        assert!(ProbMatrix::<f64>::from_json(r#"{"kind":"true","n_s":null,"entries":[[1.5]]}"#).is_err());
        let mut bad = sic_set::<f64>(2).unwrap();
        bad.states[0] = bad.states[0].scale(Complex::new(2.0, 0.0));
        assert!(StateSet::<f64>::from_json(&bad.to_json()).is_err());
    }

    #[test]
    fn non_complete_frame_rejected() {
        let k = vec![vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)]; 4];
        let s = StateSet::<f64>::from_kets(&k, SetLabel::Custom).unwrap();
        assert!(s.validate().is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let spam = Spam::ideal(&standard_set::<f64>(2, 1).unwrap(), &qubit()).unwrap();
        let s = MapMatrix::identity(crate::liouville::BasisId::qubits(2));
        assert!(probability_matrix(&s, &spam).is_err());
        let _ = PI;
    }
}
