//! Monte Carlo search over random single-qubit frames for extremal log-det
//! variance, Frobenius-bound gap and determinant.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::stats::substream;
use crate::tomography::{frobenius_bound, logdet_variance, ProbMatrix};

const FRAME_TAG: u64 = 0xF3A3;
const CHUNK: u64 = 4096;

/// Four Bloch directions and the overlap matrix `(1 + n̂_k·n̂_i)/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub bloch_vectors: [[f64; 3]; 4],
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Uniform direction on the sphere from three normalised standard normals.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let x: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let n = dot(&x, &x).sqrt();
        if n > 1e-300 {
            return [x[0] / n, x[1] / n, x[2] / n];
        }
    }
}

impl Frame {
    pub fn new(bloch_vectors: [[f64; 3]; 4]) -> Result<Self> {
        for (i, v) in bloch_vectors.iter().enumerate() {
            if (dot(v, v).sqrt() - 1.0).abs() > 1e-12 {
                return Err(Error::Validation(format!("Bloch vector {i} is not a unit vector")));
            }
        }
        Ok(Frame { bloch_vectors })
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Frame { bloch_vectors: std::array::from_fn(|_| random_direction(rng)) }
    }

    /// Regular tetrahedron, i.e. the qubit SIC set.
    pub fn sic() -> Self {
        let s = 1.0 / 3f64.sqrt();
        Frame { bloch_vectors: [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]] }
    }

    pub fn prob(&self) -> ProbMatrix<f64> {
        let v = &self.bloch_vectors;
        ProbMatrix::exact(Matrix::from_fn(4, 4, |k, i| 0.5 * (1.0 + dot(&v[k], &v[i]))))
    }

    pub fn rotated(&self, r: &Matrix<f64>) -> Self {
        Frame { bloch_vectors: self.bloch_vectors.map(|v| std::array::from_fn(|a| (0..3).map(|b| r[(a, b)] * v[b]).sum())) }
    }
}

/// Frame of trial `trial` under `seed`.
pub fn random_frame(seed: u64, trial: u64) -> Frame {
    Frame::random(&mut substream(seed, FRAME_TAG, trial, 0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `σ̃²[𝒫]` at `N_s = 1`, minimised.
    Variance,
    /// `Δ_F = ‖𝒫⁻¹‖²_F/4 − σ̃²`, minimised.
    DeltaF,
    /// `det 𝒫`, maximised.
    Det,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Variance, Metric::DeltaF, Metric::Det];

    fn maximise(self) -> bool {
        self == Metric::Det
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Variance => "variance",
            Metric::DeltaF => "delta_f",
            Metric::Det => "det",
        }
    }
}

/// Metric values of a frame, `None` when the frame is ill-conditioned.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameValues {
    pub variance: f64,
    pub delta_f: f64,
    pub det: f64,
}

impl FrameValues {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Variance => self.variance,
            Metric::DeltaF => self.delta_f,
            Metric::Det => self.det,
        }
    }
}

pub fn evaluate_frame(frame: &Frame, det_floor: f64) -> Option<FrameValues> {
    let p = frame.prob();
    let det = p.entries.det();
    if !(det > det_floor) {
        return None;
    }
    let variance = logdet_variance(&p, 1.0).ok()?;
    let bound = frobenius_bound(&p, 1.0).ok()?;
    Some(FrameValues { variance, delta_f: bound - variance, det })
}

/// `‖𝒫 − 𝒫_sic‖_max`.
pub fn distance_to_sic(p: &ProbMatrix<f64>) -> f64 {
    let sic = Frame::sic().prob();
    (&p.entries - &sic.entries).max_abs()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchRecord {
    pub metric: Metric,
    pub value: f64,
    pub frame: Frame,
    pub distance_to_sic: f64,
    /// Trial index; injected frames are numbered `−1, −2, …`.
    pub trial: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Best `k` records per metric, best first.
    pub variance: Vec<SearchRecord>,
    pub delta_f: Vec<SearchRecord>,
    pub det: Vec<SearchRecord>,
    pub trials: u64,
    /// Frames discarded by the determinant floor.
    pub discarded: u64,
}

impl SearchResult {
    pub fn records(&self, m: Metric) -> &[SearchRecord] {
        match m {
            Metric::Variance => &self.variance,
            Metric::DeltaF => &self.delta_f,
            Metric::Det => &self.det,
        }
    }

    /// Columns `metric, rank, value, distance_to_sic, n1x … n4z`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["metric".to_string(), "rank".into(), "value".into(), "distance_to_sic".into()];
        for i in 1..=4 {
            for a in ["x", "y", "z"] {
                header.push(format!("n{i}{a}"));
            }
        }
        wr.write_record(&header)?;
        for m in Metric::ALL {
            for (rank, r) in self.records(m).iter().enumerate() {
                let mut row = vec![m.name().to_string(), (rank + 1).to_string(), format!("{:.15e}", r.value), format!("{:.6e}", r.distance_to_sic)];
                row.extend(r.frame.bloch_vectors.iter().flatten().map(|x| format!("{x:.15}")));
                wr.write_record(&row)?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Heap entry ordered so that the worst kept candidate sits on top.
#[derive(Clone, Copy, Debug)]
struct Cand {
    key: f64,
    trial: i64,
}

impl PartialEq for Cand {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Cand {}
impl PartialOrd for Cand {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cand {
    // smaller key is better; ties go to the earlier trial
    fn cmp(&self, o: &Self) -> Ordering {
        self.key.total_cmp(&o.key).then(self.trial.cmp(&o.trial))
    }
}

#[derive(Clone, Debug, Default)]
struct TopK {
    k: usize,
    heap: BinaryHeap<Cand>,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK { k, heap: BinaryHeap::with_capacity(k + 1) }
    }

    fn push(&mut self, c: Cand) {
        if self.heap.len() < self.k {
            self.heap.push(c);
        } else if let Some(top) = self.heap.peek() {
            if c < *top {
                self.heap.pop();
                self.heap.push(c);
            }
        }
    }

    fn merge(mut self, other: TopK) -> TopK {
        for c in other.heap {
            self.push(c);
        }
        self
    }

    fn sorted(self) -> Vec<Cand> {
        self.heap.into_sorted_vec()
    }
}

#[derive(Clone, Debug)]
struct Partial {
    tops: [TopK; 3],
    discarded: u64,
}

impl Partial {
    fn new(k: usize) -> Self {
        Partial { tops: std::array::from_fn(|_| TopK::new(k)), discarded: 0 }
    }

    fn offer(&mut self, vals: Option<FrameValues>, trial: i64) {
        match vals {
            None => self.discarded += 1,
            Some(v) => {
                for (j, m) in Metric::ALL.iter().enumerate() {
                    let x = v.get(*m);
                    self.tops[j].push(Cand { key: if m.maximise() { -x } else { x }, trial });
                }
            }
        }
    }

    fn merge(self, o: Partial) -> Partial {
        let [a0, a1, a2] = self.tops;
        let [b0, b1, b2] = o.tops;
        Partial { tops: [a0.merge(b0), a1.merge(b1), a2.merge(b2)], discarded: self.discarded + o.discarded }
    }
}

/// Search options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub trials: u64,
    pub keep: usize,
    pub det_floor: f64,
    pub seed: u64,
    /// Extra frames evaluated alongside the random pool.
    #[serde(default)]
    pub inject: Vec<Frame>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { trials: 1_000_000, keep: 100, det_floor: 1e-5, seed: 0, inject: Vec::new() }
    }
}

/// Best `keep` frames per metric over `trials` random frames plus the
/// injected ones. The result does not depend on the number of workers.
pub fn frame_search(cfg: &SearchConfig) -> Result<SearchResult> {
    if cfg.keep == 0 || cfg.trials < cfg.keep as u64 {
        return Err(Error::Config(format!("frame search needs trials ≥ keep ≥ 1 (trials={}, keep={})", cfg.trials, cfg.keep)));
    }
    let k = cfg.keep;
    let chunks = cfg.trials.div_ceil(CHUNK);
    let mut acc = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut part = Partial::new(k);
            for t in c * CHUNK..((c + 1) * CHUNK).min(cfg.trials) {
                part.offer(evaluate_frame(&random_frame(cfg.seed, t), cfg.det_floor), t as i64);
            }
            part
        })
        .reduce(|| Partial::new(k), Partial::merge);
    for (j, f) in cfg.inject.iter().enumerate() {
        acc.offer(evaluate_frame(f, cfg.det_floor), -1 - j as i64);
    }
    let frame_of = |trial: i64| if trial < 0 { cfg.inject[(-1 - trial) as usize].clone() } else { random_frame(cfg.seed, trial as u64) };
    let [t0, t1, t2] = acc.tops;
    let build = |m: Metric, top: TopK| -> Vec<SearchRecord> {
        top.sorted()
            .into_iter()
            .map(|c| {
                let frame = frame_of(c.trial);
                SearchRecord { metric: m, value: if m.maximise() { -c.key } else { c.key }, distance_to_sic: distance_to_sic(&frame.prob()), frame, trial: c.trial }
            })
            .collect()
    };
    Ok(SearchResult {
        variance: build(Metric::Variance, t0),
        delta_f: build(Metric::DeltaF, t1),
        det: build(Metric::Det, t2),
        trials: cfg.trials,
        discarded: acc.discarded,
    })
}
