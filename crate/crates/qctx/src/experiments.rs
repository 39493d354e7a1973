//! Ready-made ZZ-model setups: the single-qubit witnesses with noisy
//! gate-based SPAM, and the two-qubit idle gate under ideal local frames.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::context_tests::{cycle_family, grid, id_family, pd_family, sequence_probs, GateSequence, GateTable, TestKind, ToyModel};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::lindblad::{build_gate, build_word, stationary_state, GateLabel, GateWord, ZZModelParams};
use crate::liouville::{pauli_basis, unitarity_det, unitarity_frobenius, BasisId, MapMatrix, OperatorBasis};
use crate::stats::TestDesign;
use crate::tomography::{probability_matrix, sic_set, standard_set, tensor_set, Spam, SpamConfig, StateSet};

/// Relaxation rate `γ₁ = 1/(60 μs)` in ns⁻¹.
pub const GAMMA1: f64 = 1.0 / 60_000.0;
pub const NZ: f64 = 0.84;
pub const ETA: f64 = 0.95;

/// Instruction labels every single-qubit setup provides.
pub const SINGLE_QUBIT_GATES: [&str; 8] = ["I", "X_pi", "X_pi/2", "X_-pi/2", "Y_pi", "Y_pi/2", "Z_pi", "Z_pi/2"];

/// Qubit A coupled to memory B, read out through noisy gates on A.
#[derive(Clone, Debug)]
pub struct SingleQubitSetup {
    pub params: ZZModelParams<f64>,
    pub gates: GateTable<f64>,
    pub spam: Spam<f64>,
    pub ideal: StateSet<f64>,
    pub basis: OperatorBasis<f64>,
}

impl SingleQubitSetup {
    /// `SPAM` gates `{I, X_π, Y_π/2, X_−π/2}` in and `{X_π, I, Y_π/2,
    /// X_−π/2}` out, stationary `ρ₀` and `M₀ = η|e⟩⟨e| ⊗ I`.
    pub fn new(params: ZZModelParams<f64>) -> Result<Self> {
        let basis = pauli_basis::<f64>(2, 2)?;
        let mut gates = GateTable::new();
        for l in SINGLE_QUBIT_GATES {
            let w: GateWord = l.parse()?;
            gates.insert(l.to_string(), build_word(&params, &w)?);
        }
        let pick = |ls: [&str; 4]| ls.iter().map(|l| gates[*l].clone()).collect::<Vec<_>>();
        let e = CMatrix::from_diag(&[Complex::new(0.0, 0.0), Complex::new(params.eta, 0.0)]);
        let cfg = SpamConfig {
            input_gates: pick(["I", "X_pi", "Y_pi/2", "X_-pi/2"]),
            output_gates: pick(["X_pi", "I", "Y_pi/2", "X_-pi/2"]),
            rho0: stationary_state(&params)?,
            m0: e.kron(&CMatrix::identity(2)),
        };
        let spam = cfg.frames(&basis)?;
        Ok(SingleQubitSetup { params, gates, spam, ideal: standard_set(2, 1)?, basis })
    }

    /// Gate time `t_g` (ns) with the default rates, `γ_φ = γ₁/2`, `n_z = 0.84`,
    /// `η = 0.95`.
    pub fn with_defaults(t_g: f64, phi: f64) -> Result<Self> {
        Self::new(ZZModelParams::stationary(GAMMA1, GAMMA1 / 2.0, NZ, t_g, phi, ETA)?)
    }

    pub fn offset(&self) -> f64 {
        -self.ideal.ideal_prob().log_abs_det()
    }

    fn design(&self, kind: TestKind, xs: Vec<f64>, seqs: &[GateSequence], q1: usize, q2: usize) -> Result<TestDesign> {
        curve(kind, xs, seqs, &self.gates, &self.spam, self.offset(), q1, q2)
    }

    /// PD-test on `𝕀^{n−k+1}X_π^{n−k+1}(X_π𝕀)^{k−1}`, `k = 1, 1+step, …`.
    pub fn pd_design(&self, n: usize, step: usize) -> Result<TestDesign> {
        let ks = grid(1, n + 1, step);
        let seqs = pd_family(n, &ks, "I", "X_pi")?;
        self.design(TestKind::Pd, ks.iter().map(|&k| k as f64).collect(), &seqs, 1, 3)
    }

    /// Cycle test (`r = 2`) on `𝕀^{k−1}X_π𝕀^{n−k+1}`.
    pub fn cycle_design(&self, n: usize, step: usize) -> Result<TestDesign> {
        let ks = grid(1, n + 1, step);
        let seqs = cycle_family(n, &ks, "I", "X_pi")?;
        self.design(TestKind::Cycle, ks.iter().map(|&k| k as f64).collect(), &seqs, 1, 3)
    }

    /// ID-test of `gate` over `0, step, …, m_max`.
    pub fn id_design(&self, gate: &str, m_max: usize, step: usize) -> Result<TestDesign> {
        if !self.gates.contains_key(gate) {
            return Err(Error::Config(format!("unknown gate '{gate}'; available: {}", SINGLE_QUBIT_GATES.join(", "))));
        }
        let ms = grid(0, m_max, step);
        let seqs = id_family(gate, &ms);
        self.design(TestKind::Id, ms.iter().map(|&m| m as f64).collect(), &seqs, 2, 3)
    }

    /// `log|det 𝒫₀| − log|det 𝒫₀^{ideal}|`, the exact intercept.
    pub fn true_intercept(&self) -> f64 {
        self.offset() + self.spam.null_prob().log_abs_det()
    }

}

#[allow(clippy::too_many_arguments)]
fn curve(kind: TestKind, xs: Vec<f64>, seqs: &[GateSequence], gates: &GateTable<f64>, spam: &Spam<f64>, offset: f64, q1: usize, q2: usize) -> Result<TestDesign> {
    let basis = gates.values().next().map(|g| g.basis).ok_or_else(|| Error::Config("empty gate table".into()))?;
    let truth = sequence_probs(seqs, gates, spam, basis)?;
    let reference = (kind == TestKind::Cycle).then(|| spam.null_prob());
    Ok(TestDesign { kind, xs, truth, reference, offset, moment: 2, q1, q2 })
}

/// The toy model wired into the three witness curves.
#[derive(Clone, Debug)]
pub struct ToySetup {
    pub model: ToyModel<f64>,
    pub gates: GateTable<f64>,
    pub spam: Spam<f64>,
    pub offset: f64,
}

impl ToySetup {
    pub fn new(model: ToyModel<f64>) -> Result<Self> {
        let b2 = pauli_basis::<f64>(2, 2)?;
        let offset = -model.ideal_set()?.ideal_prob().log_abs_det();
        Ok(ToySetup { gates: model.gates(&b2)?, spam: model.spam(&b2)?, model, offset })
    }

    /// Permutations of `𝕀^n 𝕏_π^n`.
    pub fn pd_design(&self, n: usize, step: usize) -> Result<TestDesign> {
        let ks = grid(1, n + 1, step);
        let seqs = pd_family(n, &ks, "I", "X_pi")?;
        curve(TestKind::Pd, ks.iter().map(|&k| k as f64).collect(), &seqs, &self.gates, &self.spam, self.offset, 1, 3)
    }

    /// Cyclic shifts of `𝕏_π 𝕀^n`.
    pub fn cycle_design(&self, n: usize, step: usize) -> Result<TestDesign> {
        let ks = grid(1, n + 1, step);
        let seqs = cycle_family(n, &ks, "I", "X_pi")?;
        curve(TestKind::Cycle, ks.iter().map(|&k| k as f64).collect(), &seqs, &self.gates, &self.spam, self.offset, 1, 3)
    }

    /// `𝕀^m 𝕏_π` with the `𝕏_π` folded into the preparation.
    pub fn id_design(&self, m_max: usize, step: usize) -> Result<TestDesign> {
        let ms = grid(0, m_max, step);
        let spam = Spam { phi_in: self.gates["X_pi"].entries.matmul(&self.spam.phi_in), phi_out: self.spam.phi_out.clone() };
        curve(TestKind::Id, ms.iter().map(|&m| m as f64).collect(), &id_family("I", &ms), &self.gates, &spam, self.offset, 2, 3)
    }
}

/// Local frame used for both qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwoQubitScheme {
    /// Standard set on each qubit.
    Standard,
    /// Qubit SIC set on each qubit.
    Sic,
}

/// Two-qubit idle gate `exp(t_g𝒱 + t_g𝒟)` probed with ideal product frames.
#[derive(Clone, Debug)]
pub struct TwoQubitSetup {
    pub params: ZZModelParams<f64>,
    pub gate: MapMatrix<f64>,
    pub spam: Spam<f64>,
    pub ideal: StateSet<f64>,
    pub scheme: TwoQubitScheme,
}

impl TwoQubitSetup {
    pub fn new(params: ZZModelParams<f64>, scheme: TwoQubitScheme) -> Result<Self> {
        let basis = pauli_basis::<f64>(2, 2)?;
        let one = match scheme {
            TwoQubitScheme::Standard => standard_set(2, 1)?,
            TwoQubitScheme::Sic => sic_set(2)?,
        };
        let ideal = tensor_set(&one, &one);
        let spam = Spam::ideal(&ideal, &basis)?;
        Ok(TwoQubitSetup { gate: build_gate(&params, GateLabel::Idle)?, params, spam, ideal, scheme })
    }

    /// `t_g = 20 ns`, `γ₃ = 0`, `γ_φ = γ₁/2`, coupling `φ`.
    pub fn with_defaults(phi: f64, scheme: TwoQubitScheme) -> Result<Self> {
        let p = ZZModelParams {
            gamma1_a: GAMMA1,
            gamma1_b: GAMMA1,
            gamma3_a: 0.0,
            gamma3_b: 0.0,
            gammaphi_a: GAMMA1 / 2.0,
            gammaphi_b: GAMMA1 / 2.0,
            t_g: 20.0,
            phi,
            nz_a: 1.0,
            nz_b: 1.0,
            eta: 1.0,
        };
        Self::new(p, scheme)
    }

    pub fn offset(&self) -> f64 {
        -self.ideal.ideal_prob().log_abs_det()
    }

    /// ID-test over `0, step, …, m_max`, optionally with the first `shift`
    /// iterations folded into the preparation.
    pub fn id_design(&self, m_max: usize, step: usize, shift: usize) -> Result<TestDesign> {
        let ms = grid(0, m_max, step);
        let spam = self.shifted_spam(shift);
        let truth = ms.iter().map(|&m| probability_matrix(&self.gate.pow(m as u64), &spam)).collect::<Result<Vec<_>>>()?;
        Ok(TestDesign { kind: TestKind::Id, xs: ms.iter().map(|&m| m as f64).collect(), truth, reference: None, offset: self.offset(), moment: 2, q1: 2, q2: 3 })
    }

    /// Preparation `|ρ′_i) = G^n|ρ_i)`.
    pub fn shifted_spam(&self, n: usize) -> Spam<f64> {
        Spam { phi_in: self.gate.pow(n as u64).entries.matmul(&self.spam.phi_in), phi_out: self.spam.phi_out.clone() }
    }

    /// `ℱ_n = Tr[G^n]/16`.
    pub fn spam_fidelity(&self, n: usize) -> f64 {
        self.gate.pow(n as u64).entries.trace() / 16.0
    }

    /// Closed form of `ℱ_n` for identical qubits with `γ₃ = 0`.
    pub fn spam_fidelity_closed_form(&self, n: usize) -> f64 {
        let p = &self.params;
        let t = n as f64 * p.t_g;
        let e1 = (-t * p.gamma1_a).exp();
        let e2 = (-t * (p.gamma1_a / 2.0 + p.gammaphi_a)).exp();
        (1.0 + 2.0 * e2 + e1).powi(2) / 16.0 - 0.5 * e2 * (1.0 + e1) * (n as f64 * p.phi / 2.0).sin().powi(2)
    }

    /// `(u, u′)` of the gate.
    pub fn unitarities(&self) -> Result<(f64, f64)> {
        Ok((unitarity_frobenius(&self.gate)?, unitarity_det(&self.gate)))
    }

    pub fn basis(&self) -> BasisId {
        BasisId::qubits(2)
    }
}
