//! One function per experiment. Each writes `<name>.csv` plus companion
//! tables into the output directory and returns the file names.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use qctx::experiments::{SingleQubitSetup, ToySetup, TwoQubitSetup};
use qctx::mc_frames::{frame_search, Frame, Metric, SearchConfig};
use qctx::stats::{
    bootstrap_variance, evaluate_observations, sample_probmatrix, slope_sd_bounds, substream, unitarity_from_fit, wls_fit, ExperimentOutcome, PowerSweepResult,
    TestDesign, VarianceSource,
};
use qctx::tomography::{frobenius_bound, logdet_variance, sic_set, sic_variance_closed_form, standard_set, tensor_set};
use qctx::StateSet;

use crate::config::{Config, Experiment};
use crate::error::CliError;

type Res<T> = std::result::Result<T, CliError>;

const FIG6_TAG: u64 = 0xF16;
const FIG7_TAG: u64 = 0xF17;

fn num(x: f64) -> String {
    format!("{x:e}")
}

struct Writer {
    dir: PathBuf,
    files: Vec<String>,
}

impl Writer {
    fn table(&mut self, file: String, header: &[&str], rows: Vec<Vec<String>>) -> Res<()> {
        let path = self.dir.join(&file);
        let mut wr = csv::Writer::from_path(&path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        wr.write_record(header)?;
        for r in rows {
            wr.write_record(&r)?;
        }
        wr.flush().map_err(|e| CliError::io(path.display().to_string(), e))?;
        self.files.push(file);
        Ok(())
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    alias: Option<&'a str>,
    library_version: &'a str,
    seed: u64,
    config_sha256: String,
    phi_display_scale: Option<f64>,
    outputs: &'a [String],
    config: &'a Config,
}

pub fn config_hash(cfg: &Config) -> String {
    Sha256::digest(cfg.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn variance_source(cfg: &Config) -> VarianceSource {
    match cfg.sampling.bootstrap {
        0 => VarianceSource::Linearized,
        b => VarianceSource::Bootstrap(b as usize),
    }
}

/// Experiments of a design keyed by their index; failed ones are dropped
/// unless every experiment failed.
fn batch(design: &TestDesign, n_s: u64, r: u64, seed: u64, var: VarianceSource) -> Res<Vec<(u64, ExperimentOutcome)>> {
    design.validate()?;
    let res: Vec<_> = (0..r).into_par_iter().map(|k| (k, design.simulate(n_s, seed, k, var).and_then(|o| evaluate_observations(&o, design.q1, design.q2)))).collect();
    let mut first_err = None;
    let mut ok = Vec::with_capacity(res.len());
    for (k, o) in res {
        match o {
            Ok(o) => ok.push((k, o)),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match (ok.is_empty(), first_err) {
        (true, Some(e)) => Err(e.into()),
        _ => Ok(ok),
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, v.sqrt())
}

fn seeded(seed: u64, j: usize) -> u64 {
    seed.wrapping_add(j as u64)
}

pub fn run(cfg: &Config, out: &Path) -> Res<Vec<String>> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out.display().to_string(), e))?;
    let exp = cfg.experiment();
    let mut w = Writer { dir: out.to_path_buf(), files: Vec::new() };
    match exp {
        Experiment::Fig2 => {
            let s = SingleQubitSetup::new(cfg.zz_params()?)?;
            let t = &cfg.test;
            let designs = vec![
                ("pd", s.pd_design(t.pd_n as usize, t.pd_step as usize)?),
                ("cycle", s.cycle_design(t.cycle_n as usize, t.cycle_step as usize)?),
                ("id", s.id_design(&t.gates[0], t.m_max as usize, t.step as usize)?),
            ];
            witnesses(cfg, &mut w, exp.name(), designs)?;
        }
        Experiment::Fig3 | Experiment::Fig4 => {
            let base = cfg.zz_params()?;
            let t = &cfg.test;
            let design_for = |phi: f64| {
                let s = SingleQubitSetup::new(qctx::ZZModelParams { phi, ..base })?;
                match t.kind.as_str() {
                    "pd" => s.pd_design(t.pd_n as usize, t.pd_step as usize),
                    "cycle" => s.cycle_design(t.cycle_n as usize, t.cycle_step as usize),
                    _ => s.id_design(&t.gates[0], t.m_max as usize, t.step as usize),
                }
            };
            let sweep = qctx::stats::power_sweep(design_for, &t.phis, &t.n_s_grid, cfg.sampling.experiments as usize, t.p_cr, cfg.seed, variance_source(cfg))?;
            power(&mut w, exp.name(), &sweep)?;
        }
        Experiment::Fig5 => fig5(cfg, &mut w)?,
        Experiment::Fig6 => fig6(cfg, &mut w)?,
        Experiment::Fig7 => fig7(cfg, &mut w)?,
        Experiment::Fig8 => fig8(cfg, &mut w)?,
        Experiment::Fig9 => fig9(cfg, &mut w)?,
        Experiment::ToyModel => {
            let s = ToySetup::new(cfg.toy_model()?)?;
            let t = &cfg.test;
            let designs = vec![
                ("pd", s.pd_design(t.pd_n as usize, t.pd_step as usize)?),
                ("cycle", s.cycle_design(t.cycle_n as usize, t.cycle_step as usize)?),
                ("id", s.id_design(t.m_max as usize, t.step as usize)?),
            ];
            witnesses(cfg, &mut w, exp.name(), designs)?;
        }
    }
    let manifest_name = format!("{}.manifest.json", exp.name());
    let m = Manifest {
        experiment: exp.name(),
        alias: exp.alias(),
        library_version: qctx::VERSION,
        seed: cfg.seed,
        config_sha256: config_hash(cfg),
        phi_display_scale: exp.phi_display_scale(),
        outputs: &w.files,
        config: cfg,
    };
    let path = out.join(&manifest_name);
    let text = serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n";
    fs::write(&path, text).map_err(|e| CliError::io(path.display().to_string(), e))?;
    w.files.push(manifest_name);
    Ok(w.files)
}

/// Per-experiment statistics, one example curve and rejection summary for
/// each witness.
fn witnesses(cfg: &Config, w: &mut Writer, name: &str, designs: Vec<(&str, TestDesign)>) -> Res<()> {
    let (n_s, r, p_cr) = (cfg.sampling.n_s, cfg.sampling.experiments, cfg.test.p_cr);
    let var = variance_source(cfg);
    let (mut stats, mut curves, mut summary) = (Vec::new(), Vec::new(), Vec::new());
    for (label, d) in &designs {
        let exact = d.exact_observations()?;
        let example = d.simulate(n_s, cfg.seed, 0, var)?;
        for i in 0..exact.len() {
            curves.push(vec![label.to_string(), num(d.xs[i]), num(example.ys[i]), num(example.variances[i].sqrt()), num(exact.ys[i])]);
        }
        let res = batch(d, n_s, r, cfg.seed, var)?;
        let (mut chi2_rej, mut f_rej) = (0usize, 0usize);
        for (k, o) in &res {
            chi2_rej += (o.fit.pvalue < p_cr) as usize;
            f_rej += (o.ftest.pvalue < p_cr) as usize;
            stats.push(vec![label.to_string(), k.to_string(), num(o.fit.chi2), o.fit.dof.to_string(), num(o.fit.pvalue), num(o.ftest.f), num(o.ftest.pvalue)]);
        }
        let n = res.len().max(1) as f64;
        summary.push(vec![
            label.to_string(),
            d.xs.len().to_string(),
            res.len().to_string(),
            (r as usize - res.len()).to_string(),
            num(chi2_rej as f64 / n),
            num(f_rej as f64 / n),
        ]);
    }
    w.table(format!("{name}.csv"), &["test", "experiment", "chi2", "dof", "chi2_pvalue", "f", "f_pvalue"], stats)?;
    w.table(format!("{name}_curves.csv"), &["test", "x", "y", "sigma", "y_exact"], curves)?;
    w.table(format!("{name}_summary.csv"), &["test", "points", "experiments", "failed", "chi2_rejection_ratio", "f_rejection_ratio"], summary)
}

fn power(w: &mut Writer, name: &str, sweep: &PowerSweepResult) -> Res<()> {
    let rows = sweep.cells.iter().map(|c| vec![num(c.phi), c.n_s.to_string(), num(c.chi2_ratio), num(c.f_ratio), c.failed.to_string()]).collect();
    w.table(format!("{name}.csv"), &["phi", "n_s", "chi2_rejection_ratio", "f_rejection_ratio", "failed"], rows)
}

/// Exact linear fit of an ID design, `(β₀, β₁, σ_min, σ_max)` at `n_s` shots.
fn exact_line(d: &TestDesign, n_s: f64) -> Res<(f64, f64, f64, f64)> {
    let obs = d.exact_observations()?;
    let fit = wls_fit(&obs.xs, &obs.ys, &obs.variances, 2)?;
    let sds: Vec<f64> = obs.variances.iter().map(|v| (v / n_s).sqrt()).collect();
    let lo = sds.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sds.iter().cloned().fold(0.0, f64::max);
    Ok((fit.beta[0], fit.beta[1], lo, hi))
}

struct IdSamples {
    rows: Vec<Vec<String>>,
    beta0: Vec<f64>,
    beta1: Vec<f64>,
    u: Vec<f64>,
}

fn id_samples(label: &str, d: &TestDesign, cfg: &Config, seed: u64, dim: usize) -> Res<IdSamples> {
    let res = batch(d, cfg.sampling.n_s, cfg.sampling.experiments, seed, variance_source(cfg))?;
    let mut s = IdSamples { rows: Vec::new(), beta0: Vec::new(), beta1: Vec::new(), u: Vec::new() };
    for (k, o) in &res {
        let u = unitarity_from_fit(&o.fit, dim)?;
        s.rows.push(vec![label.to_string(), k.to_string(), num(o.fit.beta[0]), num(o.fit.beta[1]), num(u.u_hat), num(u.sigma_u)]);
        s.beta0.push(o.fit.beta[0]);
        s.beta1.push(o.fit.beta[1]);
        s.u.push(u.u_hat);
    }
    Ok(s)
}

fn fig5(cfg: &Config, w: &mut Writer) -> Res<()> {
    let s = SingleQubitSetup::new(cfg.zz_params()?)?;
    let t = &cfg.test;
    let n_s = cfg.sampling.n_s as f64;
    let (mut rows, mut summary) = (Vec::new(), Vec::new());
    for (j, g) in t.gates.iter().enumerate() {
        let d = s.id_design(g, t.m_max as usize, t.step as usize)?;
        let (b0, b1, lo, hi) = exact_line(&d, n_s)?;
        let bounds = slope_sd_bounds(lo, hi, d.xs.len(), t.step as f64)?;
        let (ulo, uhi) = bounds.unitarity(2);
        let smp = id_samples(g, &d, cfg, seeded(cfg.seed, j), 2)?;
        let ((m0, s0), (m1, s1), (mu, su)) = (mean_sd(&smp.beta0), mean_sd(&smp.beta1), mean_sd(&smp.u));
        summary.push(vec![
            g.clone(),
            smp.u.len().to_string(),
            num(m0),
            num(s0),
            num(m1),
            num(s1),
            num(mu),
            num(su),
            num(b0),
            num(b1),
            num((2.0 * b1 / 3.0).exp()),
            num(ulo),
            num(uhi),
        ]);
        rows.extend(smp.rows);
    }
    w.table("fig5.csv".into(), &["gate", "experiment", "beta0", "beta1", "u_prime", "sigma_u_prime"], rows)?;
    w.table(
        "fig5_summary.csv".into(),
        &[
            "gate",
            "experiments",
            "mean_beta0",
            "sd_beta0",
            "mean_beta1",
            "sd_beta1",
            "mean_u_prime",
            "sd_u_prime",
            "beta0_exact",
            "beta1_exact",
            "u_prime_exact",
            "sd_u_prime_lower",
            "sd_u_prime_upper",
        ],
        summary,
    )
}

/// Log-det spread along one ID curve: bootstrap, linearized at the
/// estimate, exact at the truth and the Frobenius bound.
fn fig6(cfg: &Config, w: &mut Writer) -> Res<()> {
    let s = SingleQubitSetup::new(cfg.zz_params()?)?;
    let t = &cfg.test;
    let d = s.id_design(&t.gates[0], t.m_max as usize, t.step as usize)?;
    let n_s = cfg.sampling.n_s;
    let b = cfg.sampling.bootstrap as usize;
    let rows = d
        .truth
        .par_iter()
        .enumerate()
        .map(|(j, p)| -> Res<Vec<String>> {
            let at = |e: qctx::Error| e.with_context(format!("ID point x={}", d.xs[j]));
            let est = sample_probmatrix(p, n_s, &mut substream(cfg.seed, FIG6_TAG, 0, j as u64))?;
            let boot = match b {
                0 => String::new(),
                b => {
                    let r = bootstrap_variance(&est, |r| Ok(r.log_abs_det()), b, &mut substream(cfg.seed, FIG6_TAG, 1, j as u64)).map_err(at)?;
                    num(r.variance.sqrt())
                }
            };
            Ok(vec![
                num(d.xs[j]),
                num(est.log_abs_det() + d.offset),
                boot,
                num(logdet_variance(&est, n_s as f64).map_err(at)?.sqrt()),
                num(logdet_variance(p, n_s as f64).map_err(at)?.sqrt()),
                num(frobenius_bound(p, n_s as f64).map_err(at)?.sqrt()),
            ])
        })
        .collect::<Res<Vec<_>>>()?;
    w.table("fig6.csv".into(), &["m", "logdet", "sd_bootstrap", "sd_linearized", "sd_exact", "sd_upper_bound"], rows)
}

fn fig7(cfg: &Config, w: &mut Writer) -> Res<()> {
    let (n_s, r) = (cfg.sampling.n_s, cfg.sampling.experiments);
    let (mut rows, mut summary) = (Vec::new(), Vec::new());
    for &d in &cfg.test.dims {
        let p = sic_set::<f64>(d as usize)?.ideal_prob();
        let shift = p.log_abs_det();
        let xs = (0..r)
            .into_par_iter()
            .map(|k| Ok(sample_probmatrix(&p, n_s, &mut substream(cfg.seed, FIG7_TAG, d, k))?.log_abs_det() - shift))
            .collect::<qctx::Result<Vec<f64>>>()?;
        let finite: Vec<f64> = xs.iter().cloned().filter(|x| x.is_finite()).collect();
        let (m, sd) = mean_sd(&finite);
        summary.push(vec![d.to_string(), finite.len().to_string(), num(m), num(sd), num(sic_variance_closed_form(d as usize, n_s as f64).sqrt())]);
        rows.extend(xs.iter().enumerate().map(|(k, x)| vec![d.to_string(), k.to_string(), num(*x)]));
    }
    w.table("fig7.csv".into(), &["d", "experiment", "logdet_deviation"], rows)?;
    w.table("fig7_summary.csv".into(), &["d", "experiments", "mean", "sd", "sd_closed_form"], summary)
}

fn fig8(cfg: &Config, w: &mut Writer) -> Res<()> {
    let q = &cfg.search;
    let sc = SearchConfig { trials: q.trials, keep: q.keep as usize, det_floor: q.det_floor, seed: cfg.seed, inject: if q.inject_sic { vec![Frame::sic()] } else { Vec::new() } };
    let res = frame_search(&sc)?;
    let path = w.dir.join("fig8.csv");
    let f = fs::File::create(&path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    res.write_csv(std::io::BufWriter::new(f))?;
    w.files.push("fig8.csv".into());
    let targets = [(Metric::Variance, 1.0 / 6.0), (Metric::DeltaF, 19.0 / 12.0), (Metric::Det, 16.0 / 27.0)];
    let mut summary = Vec::new();
    for (m, target) in targets {
        let best = res.records(m).iter().find(|r| r.trial >= 0);
        let first = &res.records(m)[0];
        summary.push(vec![
            m.name().to_string(),
            best.map(|r| num(r.value)).unwrap_or_default(),
            num(target),
            best.map(|r| num((r.value - target).abs() / target)).unwrap_or_default(),
            best.map(|r| num(r.distance_to_sic)).unwrap_or_default(),
            (first.trial < 0).to_string(),
            res.trials.to_string(),
            res.discarded.to_string(),
        ]);
    }
    w.table(
        "fig8_summary.csv".into(),
        &["metric", "best_random", "sic_value", "relative_gap", "distance_to_sic", "injected_sic_first", "trials", "discarded"],
        summary,
    )
}

fn fig9(cfg: &Config, w: &mut Writer) -> Res<()> {
    let params = cfg.zz_params()?;
    let t = &cfg.test;
    let (mut rows, mut summary) = (Vec::new(), Vec::new());
    for (j, scheme) in cfg.schemes()?.into_iter().enumerate() {
        let s = TwoQubitSetup::new(params.clone(), scheme)?;
        let label = match scheme {
            qctx::experiments::TwoQubitScheme::Standard => "standard",
            qctx::experiments::TwoQubitScheme::Sic => "sic",
        };
        let d = s.id_design(t.m_max as usize, t.step as usize, t.shift as usize)?;
        let smp = id_samples(label, &d, cfg, seeded(cfg.seed, j), 4)?;
        let (u, u_det) = s.unitarities()?;
        let (mu, su) = mean_sd(&smp.u);
        summary.push(vec![
            label.to_string(),
            smp.u.len().to_string(),
            num(mu),
            num(su),
            num(u),
            num(u_det),
            t.shift.to_string(),
            num(s.spam_fidelity(t.shift as usize)),
            num(s.spam_fidelity_closed_form(t.shift as usize)),
        ]);
        rows.extend(smp.rows);
    }
    w.table("fig9.csv".into(), &["scheme", "experiment", "beta0", "beta1", "u_prime", "sigma_u_prime"], rows)?;
    w.table(
        "fig9_summary.csv".into(),
        &["scheme", "experiments", "mean_u_prime", "sd_u_prime", "u_exact", "u_prime_exact", "shift", "spam_fidelity", "spam_fidelity_closed_form"],
        summary,
    )?;
    w.table("fig9_table2.csv".into(), &["frame", "states", "sd_logdet_sqrt_ns"], composite_frames()?)
}

/// `σ·√N_s` of the log-det for the composite frames of the SD table.
fn composite_frames() -> Res<Vec<Vec<String>>> {
    let std2 = standard_set::<f64>(2, 1)?;
    let std3 = standard_set::<f64>(3, 1)?;
    let sic2 = sic_set::<f64>(2)?;
    let sic3 = sic_set::<f64>(3)?;
    let t = |a: &StateSet, b: &StateSet| tensor_set(a, b);
    let frames = [
        ("2x2 standard", t(&std2, &std2)),
        ("2x2 sic", t(&sic2, &sic2)),
        ("2x3 standard", t(&std2, &std3)),
        ("2x3 sic", t(&sic2, &sic3)),
        ("2x2x2 standard", t(&t(&std2, &std2), &std2)),
        ("2x2x2 sic", t(&t(&sic2, &sic2), &sic2)),
        ("3x3 standard", t(&std3, &std3)),
        ("3x3 sic", t(&sic3, &sic3)),
        ("4 global standard", standard_set::<f64>(4, 1)?),
    ];
    frames.iter().map(|(n, s)| Ok(vec![n.to_string(), s.len().to_string(), num(logdet_variance(&s.ideal_prob(), 1.0)?.sqrt())])).collect()
}

/// The design whose longest sequence `validate` inspects.
pub fn longest_design(cfg: &Config) -> Res<Option<TestDesign>> {
    let t = &cfg.test;
    Ok(match cfg.experiment() {
        Experiment::Fig7 | Experiment::Fig8 => None,
        Experiment::Fig9 => {
            let s = TwoQubitSetup::new(cfg.zz_params()?, cfg.schemes()?.first().copied().unwrap_or(qctx::experiments::TwoQubitScheme::Standard))?;
            Some(s.id_design(t.m_max as usize, t.step as usize, t.shift as usize)?)
        }
        Experiment::ToyModel => Some(ToySetup::new(cfg.toy_model()?)?.id_design(t.m_max as usize, t.step as usize)?),
        _ => {
            let s = SingleQubitSetup::new(cfg.zz_params()?)?;
            let gate = t.gates.first().map(String::as_str).unwrap_or("I");
            Some(match (cfg.experiment(), t.kind.as_str()) {
                (Experiment::Fig3 | Experiment::Fig4, "cycle") => s.cycle_design(t.cycle_n as usize, t.cycle_step as usize)?,
                (Experiment::Fig3 | Experiment::Fig4, "pd") => s.pd_design(t.pd_n as usize, t.pd_step as usize)?,
                _ => s.id_design(gate, t.m_max as usize, t.step as usize)?,
            })
        }
    })
}

/// `(label, det of the ideal frame, det of the configured frame)`.
pub fn frames(cfg: &Config) -> Res<Vec<(String, f64, f64)>> {
    let t = &cfg.test;
    Ok(match cfg.experiment() {
        Experiment::Fig7 => t.dims.iter().map(|&d| sic_set::<f64>(d as usize).map(|s| (format!("sic d={d}"), s.ideal_prob().entries.det(), s.ideal_prob().entries.det()))).collect::<qctx::Result<_>>()?,
        Experiment::Fig8 => {
            let p = Frame::sic().prob();
            vec![("injected sic".into(), p.entries.det(), p.entries.det())]
        }
        Experiment::Fig9 => cfg
            .schemes()?
            .into_iter()
            .map(|sc| {
                let s = TwoQubitSetup::new(cfg.zz_params()?, sc)?;
                Ok((format!("{sc:?} product").to_lowercase(), s.ideal.ideal_prob().entries.det(), s.shifted_spam(t.shift as usize).null_prob().entries.det()))
            })
            .collect::<Res<_>>()?,
        Experiment::ToyModel => {
            let m = cfg.toy_model()?;
            let s = ToySetup::new(m.clone())?;
            vec![("toy standard".into(), m.ideal_set()?.ideal_prob().entries.det(), s.spam.null_prob().entries.det())]
        }
        _ => {
            let s = SingleQubitSetup::new(cfg.zz_params()?)?;
            vec![("standard qubit".into(), s.ideal.ideal_prob().entries.det(), s.spam.null_prob().entries.det())]
        }
    })
}
