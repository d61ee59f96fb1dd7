//! One-vs-rest linear SVM probes, one block per articulatory feature.
//!
//! Each binary problem minimises the averaged hinge loss plus
//! `(alpha / 2) * ||w||^2` with plain SGD and the "optimal" step schedule
//! `eta_t = 1 / (alpha * (t0 + t - 1))`, where `t0` follows the usual heuristic
//! for the hinge loss. Weights are stored as `scale * v` so that the L2
//! shrinkage costs O(1) per update.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::af::{AfInventory, AfVector, LabeledFrameSet, LeReader, N_FEATURES};
use crate::seed::component_rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// L2 regularisation strength.
    pub alpha: f64,
    /// Minimum number of passes over the training data.
    pub epochs: u32,
    /// Epochs are raised until every binary problem sees at least this many updates.
    pub min_updates: u64,
    pub seed: u64,
    /// Reshuffle the training order every epoch.
    pub shuffle: bool,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            alpha: 1e-4,
            epochs: 5,
            min_updates: 1_000_000,
            seed: 17,
            shuffle: true,
        }
    }
}

impl ProbeConfig {
    pub fn effective_epochs(&self, n: usize) -> u64 {
        let n = n.max(1) as u64;
        u64::from(self.epochs).max(self.min_updates.div_ceil(n))
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::invalid(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Z-score transform fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Standardizer {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Population mean and std per column; std below 1e-12 becomes 1.
    pub fn fit(x: ArrayView2<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::Empty(
                "cannot fit a standardizer on zero rows".into(),
            ));
        }
        let mean = x.mean_axis(Axis(0)).expect("non-empty").to_vec();
        let std = x
            .std_axis(Axis(0), 0.0)
            .iter()
            .map(|&s| if s < 1e-12 { 1.0 } else { s })
            .collect();
        Ok(Standardizer { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::Shape(format!(
                "expected {} columns, got {}",
                self.dim(),
                x.ncols()
            )));
        }
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockStatus {
    Trained,
    /// Every training frame carried the same class; the block always predicts it.
    Untrainable {
        class: u8,
    },
}

/// One-vs-rest classifiers for a single articulatory feature.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeBlock {
    /// n_classes x dim
    pub weights: Array2<f64>,
    pub biases: Vec<f64>,
    /// False for classes absent from the training data; those never win the argmax.
    pub trained: Vec<bool>,
    pub status: BlockStatus,
}

impl ProbeBlock {
    pub fn n_classes(&self) -> usize {
        self.biases.len()
    }

    pub fn scores(&self, x: ArrayView1<f64>) -> Array1<f64> {
        self.weights.dot(&x) + Array1::from(self.biases.clone())
    }

    /// Highest-scoring trained class; ties go to the lowest index.
    pub fn argmax(&self, scores: ArrayView1<f64>) -> u8 {
        if let BlockStatus::Untrainable { class } = self.status {
            return class;
        }
        let mut best: Option<(usize, f64)> = None;
        for (c, &s) in scores.iter().enumerate() {
            if !self.trained[c] {
                continue;
            }
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((c, s));
            }
        }
        best.map_or(0, |(c, _)| c as u8)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbe {
    pub standardizer: Standardizer,
    pub blocks: Vec<ProbeBlock>,
    pub config: ProbeConfig,
}

impl LinearProbe {
    pub fn dim(&self) -> usize {
        self.standardizer.dim()
    }

    /// Per-feature class scores for one standardized frame.
    pub fn block_scores(&self, x_std: ArrayView1<f64>) -> Vec<Array1<f64>> {
        self.blocks.iter().map(|b| b.scores(x_std)).collect()
    }

    pub fn predict(&self, frames: ArrayView2<f64>) -> Result<Vec<AfVector>> {
        let x = self.standardizer.apply(frames)?;
        Ok(x.rows()
            .into_iter()
            .map(|row| {
                let mut v = [0u8; N_FEATURES];
                for (slot, block) in v.iter_mut().zip(&self.blocks) {
                    *slot = block.argmax(block.scores(row).view());
                }
                AfVector(v)
            })
            .collect())
    }
}

/// Weight vector and bias of one binary problem.
type Binary = (Array1<f64>, f64);

/// Plain SGD on the hinge loss for labels in {-1, +1}; returns (w, b).
fn sgd_hinge(x: ArrayView2<f64>, y: &[f64], cfg: &ProbeConfig, component: &str) -> Binary {
    let (n, dim) = x.dim();
    let alpha = cfg.alpha;
    let typw = (1.0 / alpha.sqrt()).sqrt();
    // hinge: |dloss(-typw, 1)| = 1, so eta0 = typw
    let t0 = 1.0 / (typw * alpha);

    let mut v = vec![0.0; dim];
    let mut scale = 1.0f64;
    let mut bias = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = component_rng(cfg.seed, component);
    let mut t = 1.0f64;
    for _ in 0..cfg.effective_epochs(n) {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        for &i in &order {
            let row = x.row(i);
            let row = row.as_slice().expect("standard layout");
            let eta = 1.0 / (alpha * (t0 + t - 1.0));
            let dot: f64 = v.iter().zip(row).map(|(a, b)| a * b).sum();
            let p = scale * dot + bias;
            let update = if y[i] * p < 1.0 { eta * y[i] } else { 0.0 };

            scale *= (1.0 - eta * alpha).max(0.0);
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
            if update != 0.0 {
                let step = update / scale;
                for (w, xi) in v.iter_mut().zip(row) {
                    *w += step * xi;
                }
                bias += update;
            }
            t += 1.0;
        }
    }
    (Array1::from_iter(v.into_iter().map(|w| w * scale)), bias)
}

/// Trains one OvR block per articulatory feature on standardized frames.
pub fn fit_probe(
    train: &LabeledFrameSet,
    inventory: &AfInventory,
    cfg: &ProbeConfig,
) -> Result<LinearProbe> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training set has no frames".into()));
    }
    let raw = train.vectors.mapv(f64::from);
    let standardizer = Standardizer::fit(raw.view())?;
    let x = standardizer.apply(raw.view())?;
    fit_standardized(&x, &train.labels, standardizer, inventory, cfg)
}

/// Trains on rows that are already standardized by `standardizer`.
pub fn fit_standardized(
    x: &Array2<f64>,
    labels: &[AfVector],
    standardizer: Standardizer,
    inventory: &AfInventory,
    cfg: &ProbeConfig,
) -> Result<LinearProbe> {
    cfg.validate()?;
    if x.nrows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} labels",
            x.nrows(),
            labels.len()
        )));
    }
    if x.nrows() == 0 {
        return Err(Error::Empty("training set has no frames".into()));
    }
    for l in labels {
        inventory.validate(l)?;
    }
    let x = x.as_standard_layout();
    let counts = inventory.class_counts();

    let present: Vec<Vec<bool>> = (0..N_FEATURES)
        .map(|f| {
            let mut seen = vec![false; counts[f]];
            for l in labels {
                seen[l.class(f) as usize] = true;
            }
            seen
        })
        .collect();

    let problems: Vec<(usize, usize)> = (0..N_FEATURES)
        .flat_map(|f| (0..counts[f]).map(move |c| (f, c)))
        .filter(|&(f, c)| present[f][c] && present[f].iter().filter(|&&p| p).count() >= 2)
        .collect();

    let solved: Vec<((usize, usize), Binary)> = problems
        .par_iter()
        .map(|&(f, c)| {
            let y: Vec<f64> = labels
                .iter()
                .map(|l| if l.class(f) as usize == c { 1.0 } else { -1.0 })
                .collect();
            let component = format!(
                "probe/{}/{}",
                inventory.features()[f].name,
                inventory.features()[f].classes[c]
            );
            ((f, c), sgd_hinge(x.view(), &y, cfg, &component))
        })
        .collect();

    let dim = x.ncols();
    let mut blocks: Vec<ProbeBlock> = (0..N_FEATURES)
        .map(|f| {
            let n_present = present[f].iter().filter(|&&p| p).count();
            let status = if n_present < 2 {
                let class = present[f].iter().position(|&p| p).expect("non-empty") as u8;
                BlockStatus::Untrainable { class }
            } else {
                BlockStatus::Trained
            };
            ProbeBlock {
                weights: Array2::zeros((counts[f], dim)),
                biases: vec![0.0; counts[f]],
                trained: if n_present < 2 {
                    vec![false; counts[f]]
                } else {
                    present[f].clone()
                },
                status,
            }
        })
        .collect();
    for ((f, c), (w, b)) in solved {
        blocks[f].weights.row_mut(c).assign(&w);
        blocks[f].biases[c] = b;
    }
    Ok(LinearProbe {
        standardizer,
        blocks,
        config: *cfg,
    })
}

// Probe container: "AFPB" | version u16 | reserved u16 | dim u32 |
// alpha f64 | epochs u32 | min_updates u64 | seed u64 | shuffle u8 |
// mean f64 x dim | std f64 x dim | n_blocks u16 | per block: n_classes u16,
// status u8 (0 trained, 1 untrainable), untrainable class u8,
// per class: trained u8, bias f64, weights f64 x dim. All little-endian.
pub const PROBE_MAGIC: [u8; 4] = *b"AFPB";
pub const PROBE_VERSION: u16 = 1;

pub fn write_probe<W: Write>(probe: &LinearProbe, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    w.write_all(&PROBE_MAGIC)?;
    w.write_all(&PROBE_VERSION.to_le_bytes())?;
    w.write_all(&0u16.to_le_bytes())?;
    w.write_all(&(probe.dim() as u32).to_le_bytes())?;
    let cfg = &probe.config;
    w.write_all(&cfg.alpha.to_le_bytes())?;
    w.write_all(&cfg.epochs.to_le_bytes())?;
    w.write_all(&cfg.min_updates.to_le_bytes())?;
    w.write_all(&cfg.seed.to_le_bytes())?;
    w.write_all(&[u8::from(cfg.shuffle)])?;
    for v in probe
        .standardizer
        .mean
        .iter()
        .chain(&probe.standardizer.std)
    {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&(probe.blocks.len() as u16).to_le_bytes())?;
    for b in &probe.blocks {
        w.write_all(&(b.n_classes() as u16).to_le_bytes())?;
        match b.status {
            BlockStatus::Trained => w.write_all(&[0, 0])?,
            BlockStatus::Untrainable { class } => w.write_all(&[1, class])?,
        }
        for c in 0..b.n_classes() {
            w.write_all(&[u8::from(b.trained[c])])?;
            w.write_all(&b.biases[c].to_le_bytes())?;
            for v in b.weights.row(c) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_probe<R: Read>(r: R, inventory: &AfInventory) -> Result<LinearProbe> {
    let mut r = LeReader::new(std::io::BufReader::new(r), "probe");
    r.header(PROBE_MAGIC, PROBE_VERSION)?;
    let dim = r.u32()? as usize;
    let config = ProbeConfig {
        alpha: r.f64()?,
        epochs: r.u32()?,
        min_updates: r.u64()?,
        seed: r.u64()?,
        shuffle: r.u8()? != 0,
    };
    let mean = (0..dim).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let std = (0..dim).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let n_blocks = r.u16()? as usize;
    let counts = inventory.class_counts();
    if n_blocks != N_FEATURES {
        return Err(Error::Shape(format!(
            "probe has {n_blocks} blocks, expected {N_FEATURES}"
        )));
    }
    let mut blocks = Vec::with_capacity(n_blocks);
    for &expected in &counts {
        let n_classes = r.u16()? as usize;
        if n_classes != expected {
            return Err(Error::Shape(format!(
                "probe block has {n_classes} classes, inventory has {expected}"
            )));
        }
        let status = match (r.u8()?, r.u8()?) {
            (0, _) => BlockStatus::Trained,
            (1, class) if (class as usize) < n_classes => BlockStatus::Untrainable { class },
            (s, c) => return Err(Error::invalid(format!("bad block status ({s}, {c})"))),
        };
        let mut weights = Array2::zeros((n_classes, dim));
        let mut biases = Vec::with_capacity(n_classes);
        let mut trained = Vec::with_capacity(n_classes);
        for c in 0..n_classes {
            trained.push(r.u8()? != 0);
            biases.push(r.f64()?);
            for j in 0..dim {
                weights[[c, j]] = r.f64()?;
            }
        }
        blocks.push(ProbeBlock {
            weights,
            biases,
            trained,
            status,
        });
    }
    Ok(LinearProbe {
        standardizer: Standardizer { mean, std },
        blocks,
        config,
    })
}

pub fn write_probe_file(probe: &LinearProbe, path: &Path) -> Result<()> {
    write_probe(probe, File::create(path)?)
}

pub fn read_probe_file(path: &Path, inventory: &AfInventory) -> Result<LinearProbe> {
    read_probe(File::open(path)?, inventory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn block(biases: Vec<f64>) -> ProbeBlock {
        let n = biases.len();
        ProbeBlock {
            weights: Array2::zeros((n, 1)),
            biases,
            trained: vec![true; n],
            status: BlockStatus::Trained,
        }
    }

    #[test]
    fn argmax_picks_highest() {
        let b = block(vec![0.0; 3]);
        assert_eq!(b.argmax(array![2.0, -1.0, 0.5].view()), 0);
        assert_eq!(b.argmax(array![-2.0, -1.0, 0.5].view()), 2);
    }

    #[test]
    fn argmax_tie_goes_to_lowest_index() {
        let b = block(vec![0.0; 3]);
        assert_eq!(b.argmax(array![1.0, 0.0, 1.0].view()), 0);
    }

    #[test]
    fn untrained_classes_never_win() {
        let mut b = block(vec![0.0; 3]);
        b.trained[0] = false;
        assert_eq!(b.argmax(array![5.0, -1.0, -2.0].view()), 1);
    }

    #[test]
    fn standardizer_replaces_tiny_std() {
        let x = array![[1.0, 5.0], [3.0, 5.0]];
        let s = Standardizer::fit(x.view()).unwrap();
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.std, vec![1.0, 1.0]);
        assert_eq!(s.apply(x.view()).unwrap(), array![[-1.0, 0.0], [1.0, 0.0]]);
        assert!(s.apply(array![[1.0]].view()).is_err());
    }

    #[test]
    fn effective_epochs_reaches_min_updates() {
        let cfg = ProbeConfig::default();
        assert_eq!(cfg.effective_epochs(5000), 200);
        assert_eq!(cfg.effective_epochs(1_000_000), 5);
        assert_eq!(cfg.effective_epochs(300_000), 5);
        assert_eq!(cfg.effective_epochs(300_001), 5);
    }

    #[test]
    fn separable_binary_problem() {
        let x = array![[-2.0], [-1.5], [-1.0], [1.0], [1.5], [2.0]];
        let y = [-1.0, -1.0, -1.0, 1.0, 1.0, 1.0];
        let cfg = ProbeConfig {
            min_updates: 5000,
            ..Default::default()
        };
        let (w, b) = sgd_hinge(x.view(), &y, &cfg, "t");
        for (row, yi) in x.rows().into_iter().zip(y) {
            assert!(yi * (w.dot(&row) + b) > 0.0);
        }
    }
}
