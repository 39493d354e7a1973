//! Finite-sample machinery: binomial sampling of probability matrices,
//! bootstrap, weighted least squares with χ² and nested-model F tests,
//! power sweeps and unitarity estimates.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use crate::context_tests::{cycle_observation, logdet_observation, TestKind, TestObservations};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::tomography::{ProbKind, ProbMatrix};

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator owned by one `(tag, experiment, sequence)` triple. The key is
/// the user seed; the stream id mixes the triple, so draws do not depend on
/// the order in which work is scheduled.
pub fn substream(seed: u64, tag: u64, experiment: u64, sequence: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(splitmix(splitmix(splitmix(tag) ^ experiment) ^ sequence));
    rng
}

/// `n_{k|i} ~ Bin(N_s, 𝒫_{k|i})`, returned as relative frequencies. Entries
/// are drawn in row-major order.
pub fn sample_probmatrix<R: Rng + ?Sized>(p: &ProbMatrix<f64>, n_s: u64, rng: &mut R) -> Result<ProbMatrix<f64>> {
    if n_s == 0 {
        return Err(Error::Config("N_s must be at least 1".into()));
    }
    let n = p.size();
    let mut data = Vec::with_capacity(n * n);
    for k in 0..n {
        for i in 0..n {
            let q = p.entries[(k, i)];
            if !(-1e-12..=1.0 + 1e-12).contains(&q) {
                return Err(Error::Validation(format!("probability entry ({k},{i}) = {q} outside [0, 1]")));
            }
            let q = q.clamp(0.0, 1.0);
            let c = Binomial::new(n_s, q).map_err(|e| Error::Validation(format!("binomial({n_s}, {q}): {e}")))?.sample(rng);
            data.push(c as f64 / n_s as f64);
        }
    }
    Ok(ProbMatrix::sampled(Matrix::from_vec(n, n, data), n_s))
}

pub fn sample_probmatrix_seeded(p: &ProbMatrix<f64>, n_s: u64, seed: u64) -> Result<ProbMatrix<f64>> {
    sample_probmatrix(p, n_s, &mut substream(seed, 0, 0, 0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub variance: f64,
    pub used: usize,
    /// Replicas on which the statistic was undefined.
    pub skipped: usize,
}

/// Sample variance of `statistic` over `b` replicas of several estimates,
/// each resampled entrywise from `Bin(N_s, 𝒫̂_{k|i})`.
pub fn bootstrap_variance_multi<R, F>(p_hats: &[&ProbMatrix<f64>], statistic: F, b: usize, rng: &mut R) -> Result<BootstrapResult>
where
    R: Rng + ?Sized,
    F: Fn(&[ProbMatrix<f64>]) -> Result<f64>,
{
    if b < 100 {
        return Err(Error::Config(format!("bootstrap needs B ≥ 100 replicas, got {b}")));
    }
    let mut shots = Vec::with_capacity(p_hats.len());
    for p in p_hats {
        match (p.kind, p.n_s) {
            (ProbKind::Sampled, Some(n)) => shots.push(n),
            _ => return Err(Error::Validation("bootstrap needs sampled probability matrices".into())),
        }
    }
    let (mut mean, mut m2, mut used, mut skipped) = (0.0, 0.0, 0usize, 0usize);
    for _ in 0..b {
        let reps = p_hats.iter().zip(&shots).map(|(p, &n)| sample_probmatrix(p, n, rng)).collect::<Result<Vec<_>>>()?;
        match statistic(&reps) {
            Ok(y) if y.is_finite() => {
                used += 1;
                let d = y - mean;
                mean += d / used as f64;
                m2 += d * (y - mean);
            }
            _ => skipped += 1,
        }
    }
    if used < 2 {
        return Err(Error::numerical(format!("bootstrap statistic undefined on {skipped} of {b} replicas")));
    }
    Ok(BootstrapResult { variance: m2 / (used - 1) as f64, used, skipped })
}

pub fn bootstrap_variance<R, F>(p_hat: &ProbMatrix<f64>, statistic: F, b: usize, rng: &mut R) -> Result<BootstrapResult>
where
    R: Rng + ?Sized,
    F: Fn(&ProbMatrix<f64>) -> Result<f64>,
{
    bootstrap_variance_multi(&[p_hat], |r| statistic(&r[0]), b, rng)
}

/// Upper tail of `χ²_n`.
pub fn chi2_survival(x: f64, n: usize) -> Result<f64> {
    if n == 0 || !(x >= 0.0) {
        return Err(Error::Config(format!("χ² survival needs x ≥ 0 and n ≥ 1 (x={x}, n={n})")));
    }
    Ok(ChiSquared::new(n as f64).map_err(|e| Error::Config(e.to_string()))?.sf(x))
}

/// Upper tail of `F_{n₁,n₂}`.
pub fn f_survival(x: f64, n1: usize, n2: usize) -> Result<f64> {
    if n1 == 0 || n2 == 0 || !(x >= 0.0) {
        return Err(Error::Config(format!("F survival needs x ≥ 0 and dof ≥ 1 (x={x}, n1={n1}, n2={n2})")));
    }
    Ok(FisherSnedecor::new(n1 as f64, n2 as f64).map_err(|e| Error::Config(e.to_string()))?.sf(x))
}

/// Polynomial design `X_{mn} = x_m^n`, `n < q`.
pub fn design_matrix(xs: &[f64], q: usize) -> Matrix<f64> {
    Matrix::from_fn(xs.len(), q, |m, n| xs[m].powi(n as i32))
}

/// Weighted polynomial fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: Vec<f64>,
    /// `Σ_q = (X_qᵀ W X_q)⁻¹`.
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    pub pvalue: f64,
}

impl FitResult {
    pub fn sd(&self, n: usize) -> f64 {
        self.covariance[n][n].sqrt()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit serializes")
    }
}

fn check_fit_inputs(xs: &[f64], y: &[f64], variances: &[f64], q: usize) -> Result<()> {
    if y.len() != xs.len() || variances.len() != xs.len() {
        return Err(Error::dims(format!("{} points", xs.len()), format!("{} ys, {} variances", y.len(), variances.len())));
    }
    if q == 0 || xs.len() <= q {
        return Err(Error::Config(format!("fit needs M > q ≥ 1 (M={}, q={q})", xs.len())));
    }
    if variances.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Validation("fit variances must be positive and finite".into()));
    }
    Ok(())
}

/// WLS fit of `y = Σ β_n x^n` with weights `1/σ²`.
///
/// The abscissae are rescaled to `[-1, 1]` before solving the normal
/// equations; coefficients and covariance are mapped back.
pub fn wls_fit(xs: &[f64], y: &[f64], variances: &[f64], q: usize) -> Result<FitResult> {
    check_fit_inputs(xs, y, variances, q)?;
    let s = xs.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let s = if s > 0.0 { s } else { 1.0 };
    let ts: Vec<f64> = xs.iter().map(|x| x / s).collect();
    let x = design_matrix(&ts, q);
    let m = xs.len();
    let gram = Matrix::from_fn(q, q, |a, b| (0..m).map(|i| x[(i, a)] * x[(i, b)] / variances[i]).sum());
    let rhs: Vec<f64> = (0..q).map(|a| (0..m).map(|i| x[(i, a)] * y[i] / variances[i]).sum()).collect();
    let scale = (0..q).map(|a| gram[(a, a)]).fold(0.0f64, f64::max);
    let lu = gram.scale(1.0 / scale).lu();
    if lu.is_singular() || gram.scale(1.0 / scale).condition1() > 1e13 {
        return Err(Error::numerical(format!("rank-deficient design (M={m}, q={q})")));
    }
    let cov_t = gram.inverse()?;
    let bt = lu.solve_vec(&rhs)?.into_iter().map(|b| b / scale).collect::<Vec<_>>();
    let chi2 = (0..m)
        .map(|i| {
            let r = y[i] - (0..q).map(|a| x[(i, a)] * bt[a]).sum::<f64>();
            r * r / variances[i]
        })
        .sum::<f64>();
    let beta = (0..q).map(|a| bt[a] / s.powi(a as i32)).collect();
    let covariance = (0..q).map(|a| (0..q).map(|b| cov_t[(a, b)] / s.powi((a + b) as i32)).collect()).collect();
    let dof = m - q;
    Ok(FitResult { beta, covariance, chi2, dof, pvalue: chi2_survival(chi2.max(0.0), dof)? })
}

/// Residual projector `P_w = I − √W X (XᵀWX)⁻¹ Xᵀ √W`.
pub fn residual_projector(xs: &[f64], variances: &[f64], q: usize) -> Result<Matrix<f64>> {
    let h = hat_matrix(xs, variances, q)?;
    Ok(&Matrix::identity(xs.len()) - &h)
}

/// Hat matrix of the whitened design `X' = √W X`.
pub fn hat_matrix(xs: &[f64], variances: &[f64], q: usize) -> Result<Matrix<f64>> {
    check_fit_inputs(xs, &vec![0.0; xs.len()], variances, q)?;
    let s = xs.iter().fold(1e-300f64, |a, x| a.max(x.abs()));
    let ts: Vec<f64> = xs.iter().map(|x| x / s).collect();
    let x = design_matrix(&ts, q);
    let xw = Matrix::from_fn(xs.len(), q, |i, a| x[(i, a)] / variances[i].sqrt());
    let g = xw.transpose().matmul(&xw).inverse()?;
    Ok(xw.matmul(&g).matmul(&xw.transpose()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FTestResult {
    pub f: f64,
    pub pvalue: f64,
    pub chi2_1: f64,
    pub chi2_2: f64,
    pub dof1: usize,
    pub dof2: usize,
}

/// `F = ((M−q₂)/(q₂−q₁))(𝒳₁²/𝒳₂² − 1)` for nested polynomial models.
pub fn f_test_nested(xs: &[f64], y: &[f64], variances: &[f64], q1: usize, q2: usize) -> Result<FTestResult> {
    if !(q1 < q2 && q2 < xs.len()) {
        return Err(Error::Config(format!("nested F test needs q1 < q2 < M (q1={q1}, q2={q2}, M={})", xs.len())));
    }
    let f1 = wls_fit(xs, y, variances, q1)?;
    let f2 = wls_fit(xs, y, variances, q2)?;
    let (n1, n2) = (q2 - q1, xs.len() - q2);
    let floor = 1e-20 * xs.len() as f64;
    if f1.chi2 <= floor {
        return Ok(FTestResult { f: 0.0, pvalue: 1.0, chi2_1: f1.chi2, chi2_2: f2.chi2, dof1: n1, dof2: n2 });
    }
    if f2.chi2 <= floor {
        return Err(Error::numerical("degenerate fit: larger model has zero residual"));
    }
    let f = ((n2 as f64 / n1 as f64) * (f1.chi2 / f2.chi2 - 1.0)).max(0.0);
    Ok(FTestResult { f, pvalue: f_survival(f, n1, n2)?, chi2_1: f1.chi2, chi2_2: f2.chi2, dof1: n1, dof2: n2 })
}

/// Homoskedastic `(σ_{β̂₀}, σ_{β̂₁})` for `M` lengths spaced by `b`.
pub fn homoskedastic_sd(sigma0: f64, m: usize, b: f64) -> (f64, f64) {
    let mf = m as f64;
    ((2.0 / mf * (2.0 * mf - 1.0) / (mf + 1.0)).sqrt() * sigma0, 2.0 * 3f64.sqrt() / (mf * (mf * mf - 1.0) * b * b).sqrt() * sigma0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdBounds {
    pub beta0: (f64, f64),
    pub beta1: (f64, f64),
}

impl SdBounds {
    /// Interval for `σ_{û′} ≈ 2σ_{β̂₁}/(d²−1)`.
    pub fn unitarity(&self, d: usize) -> (f64, f64) {
        let c = 2.0 / ((d * d - 1) as f64);
        (c * self.beta1.0, c * self.beta1.1)
    }
}

/// Bounds on the WLS standard deviations from the extreme observation
/// spreads, valid for evenly spaced lengths and `M ≫ 1`.
pub fn slope_sd_bounds(sigma_min: f64, sigma_max: f64, m: usize, b: f64) -> Result<SdBounds> {
    if !(sigma_min > 0.0 && sigma_min <= sigma_max) || m < 2 || !(b > 0.0) {
        return Err(Error::Config(format!("need 0 < σ_min ≤ σ_max, M ≥ 2, b > 0 (σ_min={sigma_min}, σ_max={sigma_max}, M={m}, b={b})")));
    }
    let (a0, a1) = homoskedastic_sd(1.0, m, b);
    let lo = sigma_min * sigma_min / sigma_max;
    let hi = sigma_max * sigma_max / sigma_min;
    Ok(SdBounds { beta0: (a0 * lo, a0 * hi), beta1: (a1 * lo, a1 * hi) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitarityEstimate {
    pub u_hat: f64,
    pub sigma_u: f64,
    pub beta1_hat: f64,
    pub sigma_beta1: f64,
    pub d: usize,
}

impl UnitarityEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serializes")
    }
}

/// `û′ = exp(2β̂₁/(d²−1))`, `σ̂_{û′} = 2û′σ_{β̂₁}/(d²−1)`.
pub fn unitarity_from_fit(fit: &FitResult, d: usize) -> Result<UnitarityEstimate> {
    if fit.beta.len() != 2 {
        return Err(Error::Config(format!("unitarity needs a linear fit, got q={}", fit.beta.len())));
    }
    if d < 2 {
        return Err(Error::Config(format!("dimension must be ≥ 2, got {d}")));
    }
    let n = (d * d - 1) as f64;
    let b1 = fit.beta[1];
    let sb1 = fit.sd(1);
    let u = (2.0 * b1 / n).exp();
    Ok(UnitarityEstimate { u_hat: u, sigma_u: 2.0 * u * sb1 / n, beta1_hat: b1, sigma_beta1: sb1, d })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub pvalue: f64,
}

/// `Q_KS(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let t = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * t;
        if t < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if samples.is_empty() || samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config("KS test needs finite samples".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let d = s.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    });
    let sn = n.sqrt();
    Ok(KsResult { statistic: d, pvalue: kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d) })
}

pub fn pearson_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// How observation variances are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceSource {
    /// First-order propagation evaluated at the estimate.
    Linearized,
    /// Entrywise binomial bootstrap with this many replicas.
    Bootstrap(usize),
}

/// True probability matrices of one witness curve plus its null model.
#[derive(Clone, Debug)]
pub struct TestDesign {
    pub kind: TestKind,
    pub xs: Vec<f64>,
    pub truth: Vec<ProbMatrix<f64>>,
    /// Null-instruction matrix; a fresh estimate is drawn for every cycle
    /// point.
    pub reference: Option<ProbMatrix<f64>>,
    /// `−log|det 𝒫₀^{ideal}|`.
    pub offset: f64,
    /// Moment `r` of the cycle test.
    pub moment: u32,
    pub q1: usize,
    pub q2: usize,
}

impl TestDesign {
    pub fn validate(&self) -> Result<()> {
        if self.xs.len() != self.truth.len() {
            return Err(Error::dims(format!("{} abscissae", self.xs.len()), self.truth.len()));
        }
        if self.kind == TestKind::Cycle && self.reference.is_none() {
            return Err(Error::Config("cycle test needs a reference matrix".into()));
        }
        if !(self.q1 < self.q2 && self.q2 < self.xs.len()) {
            return Err(Error::Config(format!("need q1 < q2 < M (q1={}, q2={}, M={})", self.q1, self.q2, self.xs.len())));
        }
        Ok(())
    }

    pub fn exact_observations(&self) -> Result<TestObservations> {
        self.observe(&self.truth, None, 1, VarianceSource::Linearized, &mut substream(0, 0, 0, 0))
    }

    fn observe(&self, ps: &[ProbMatrix<f64>], p0s: Option<&[ProbMatrix<f64>]>, n_s: u64, var: VarianceSource, rng: &mut ChaCha20Rng) -> Result<TestObservations> {
        let (mut ys, mut vs) = (Vec::with_capacity(ps.len()), Vec::with_capacity(ps.len()));
        let fallback;
        let p0s = match p0s {
            Some(p) => p,
            None => {
                fallback = vec![self.reference.clone().unwrap_or_else(|| ps[0].clone()); ps.len()];
                &fallback[..]
            }
        };
        for (j, p) in ps.iter().enumerate() {
            let ctx = |e: Error| e.with_context(format!("{} point x={}", self.kind, self.xs[j]));
            let (y, v) = match self.kind {
                TestKind::Cycle => cycle_observation(p, &p0s[j], self.moment, n_s as f64).map_err(ctx)?,
                _ => logdet_observation(p, self.offset, n_s as f64).map_err(ctx)?,
            };
            let v = match var {
                VarianceSource::Linearized => v,
                VarianceSource::Bootstrap(b) => match self.kind {
                    TestKind::Cycle => bootstrap_variance_multi(&[p, &p0s[j]], |r| Ok(cycle_observation(&r[0], &r[1], self.moment, 1.0)?.0), b, rng)?.variance,
                    _ => bootstrap_variance(p, |r| Ok(logdet_observation(r, self.offset, 1.0)?.0), b, rng)?.variance,
                },
            };
            ys.push(y);
            vs.push(v);
        }
        TestObservations::new(self.kind, self.xs.clone(), ys, vs)
    }

    fn tag(&self) -> u64 {
        match self.kind {
            TestKind::Pd => 1,
            TestKind::Cycle => 2,
            TestKind::Id => 3,
        }
    }

    /// One hypothetical experiment `r` at `N_s` shots.
    pub fn simulate(&self, n_s: u64, seed: u64, r: u64, var: VarianceSource) -> Result<TestObservations> {
        let m = self.truth.len() as u64;
        let ps = (0..m).map(|j| sample_probmatrix(&self.truth[j as usize], n_s, &mut substream(seed, self.tag(), r, j))).collect::<Result<Vec<_>>>()?;
        let p0s = match (&self.reference, self.kind) {
            (Some(p0), TestKind::Cycle) => Some((0..m).map(|j| sample_probmatrix(p0, n_s, &mut substream(seed, self.tag(), r, m + j))).collect::<Result<Vec<_>>>()?),
            _ => None,
        };
        let mut boot = substream(seed, self.tag() + 16, r, 0);
        self.observe(&ps, p0s.as_deref(), n_s, var, &mut boot)
    }
}

/// Statistics of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub fit: FitResult,
    pub ftest: FTestResult,
}

pub fn evaluate_observations(obs: &TestObservations, q1: usize, q2: usize) -> Result<ExperimentOutcome> {
    Ok(ExperimentOutcome { fit: wls_fit(&obs.xs, &obs.ys, &obs.variances, q1)?, ftest: f_test_nested(&obs.xs, &obs.ys, &obs.variances, q1, q2)? })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentBatch {
    pub outcomes: Vec<ExperimentOutcome>,
    /// Experiments lost to a singular estimate or degenerate fit.
    pub failed: usize,
}

/// `count` independent experiments run in parallel; results are in
/// experiment order.
pub fn run_experiments(design: &TestDesign, n_s: u64, count: usize, seed: u64, var: VarianceSource) -> Result<ExperimentBatch> {
    design.validate()?;
    let res: Vec<Result<ExperimentOutcome>> = (0..count as u64)
        .into_par_iter()
        .map(|r| evaluate_observations(&design.simulate(n_s, seed, r, var)?, design.q1, design.q2))
        .collect();
    let failed = res.iter().filter(|r| r.is_err()).count();
    Ok(ExperimentBatch { outcomes: res.into_iter().filter_map(|r| r.ok()).collect(), failed })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub phi: f64,
    pub n_s: u64,
    pub chi2_ratio: f64,
    pub f_ratio: f64,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSweepResult {
    pub cells: Vec<PowerCell>,
    pub p_cr: f64,
    pub r: usize,
}

impl PowerSweepResult {
    /// Columns `phi, n_s, chi2_ratio, f_ratio, failed`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["phi", "n_s", "chi2_ratio", "f_ratio", "failed"])?;
        for c in &self.cells {
            wr.write_record([format!("{:e}", c.phi), c.n_s.to_string(), c.chi2_ratio.to_string(), c.f_ratio.to_string(), c.failed.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn cell(&self, phi: f64, n_s: u64) -> Option<&PowerCell> {
        self.cells.iter().find(|c| c.phi == phi && c.n_s == n_s)
    }
}

/// Rejection ratios `N_rejc/R` of the χ² and F variants over a `(φ, N_s)`
/// grid. `design_for` builds the exact curve for a coupling `φ`.
pub fn power_sweep(
    design_for: impl Fn(f64) -> Result<TestDesign>,
    phis: &[f64],
    n_ss: &[u64],
    r: usize,
    p_cr: f64,
    seed: u64,
    var: VarianceSource,
) -> Result<PowerSweepResult> {
    if r < 100 {
        return Err(Error::Config(format!("power sweep needs R ≥ 100 experiments, got {r}")));
    }
    if !(p_cr > 0.0 && p_cr < 1.0) {
        return Err(Error::Config(format!("p_cr must lie in (0, 1), got {p_cr}")));
    }
    let mut cells = Vec::with_capacity(phis.len() * n_ss.len());
    for &phi in phis {
        let design = design_for(phi)?;
        for &n_s in n_ss {
            let batch = run_experiments(&design, n_s, r, seed, var)?;
            let n = batch.outcomes.len().max(1) as f64;
            let chi2_rej = batch.outcomes.iter().filter(|o| o.fit.pvalue < p_cr).count() as f64;
            let f_rej = batch.outcomes.iter().filter(|o| o.ftest.pvalue < p_cr).count() as f64;
            cells.push(PowerCell { phi, n_s, chi2_ratio: chi2_rej / n, f_ratio: f_rej / n, failed: batch.failed });
        }
    }
    Ok(PowerSweepResult { cells, p_cr, r })
}
