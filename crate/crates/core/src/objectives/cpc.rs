use ndarray::{Array2, Array3};

use super::softmax_xent;
use crate::{Error, Result};

/// One scored prediction: context step `t` predicts latent `t + k` against
/// the latent rows listed in `candidates` (which must include `t + k`).
#[derive(Debug, Clone, PartialEq)]
pub struct CpcTerm {
    pub t: usize,
    /// Prediction horizon, 1-based.
    pub k: usize,
    pub candidates: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpcBatch {
    /// Latents, T x d.
    pub z: Array2<f64>,
    /// Contexts, T x d_c.
    pub c: Array2<f64>,
    /// One prediction matrix per horizon, K x d x d_c.
    pub w: Array3<f64>,
    pub terms: Vec<CpcTerm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpcGrad {
    pub z: Array2<f64>,
    pub c: Array2<f64>,
    pub w: Array3<f64>,
}

impl CpcBatch {
    pub fn horizon(&self) -> usize {
        self.w.shape()[0]
    }

    fn validate(&self) -> Result<()> {
        let (t_len, d) = self.z.dim();
        let (kk, wd, wdc) = self.w.dim();
        if self.c.nrows() != t_len {
            return Err(Error::Shape(format!(
                "z has {t_len} steps but c has {}",
                self.c.nrows()
            )));
        }
        if wd != d || wdc != self.c.ncols() {
            return Err(Error::Shape(format!(
                "prediction matrices are {wd}x{wdc}, expected {d}x{}",
                self.c.ncols()
            )));
        }
        if self.terms.is_empty() {
            return Err(Error::Empty("no (t, k) prediction terms".into()));
        }
        for term in &self.terms {
            if term.k == 0 || term.k > kk {
                return Err(Error::invalid(format!(
                    "horizon k={} outside 1..={kk}",
                    term.k
                )));
            }
            if term.t + term.k >= t_len {
                return Err(Error::invalid(format!(
                    "target step {} beyond sequence length {t_len}",
                    term.t + term.k
                )));
            }
            if term.candidates.is_empty() {
                return Err(Error::Empty(format!(
                    "candidate set for (t={}, k={})",
                    term.t, term.k
                )));
            }
            if let Some(&j) = term.candidates.iter().find(|&&j| j >= t_len) {
                return Err(Error::invalid(format!("candidate index {j} out of range")));
            }
            if !term.candidates.contains(&(term.t + term.k)) {
                return Err(Error::invalid(format!(
                    "positive {} missing from candidates of (t={}, k={})",
                    term.t + term.k,
                    term.t,
                    term.k
                )));
            }
        }
        let finite = self
            .z
            .iter()
            .chain(&self.c)
            .chain(&self.w)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("non-finite input"));
        }
        Ok(())
    }
}

/// InfoNCE loss with bilinear scores `z_j^T W_k c_t`: the per-horizon mean
/// over its terms, averaged over the horizons that have terms.
pub fn cpc_loss(b: &CpcBatch) -> Result<(f64, CpcGrad)> {
    b.validate()?;
    let kk = b.horizon();
    let mut per_k = vec![0usize; kk];
    for term in &b.terms {
        per_k[term.k - 1] += 1;
    }
    let active = per_k.iter().filter(|&&n| n > 0).count() as f64;

    let mut grad = CpcGrad {
        z: Array2::zeros(b.z.raw_dim()),
        c: Array2::zeros(b.c.raw_dim()),
        w: Array3::zeros(b.w.raw_dim()),
    };
    let mut loss = 0.0;
    for term in &b.terms {
        let wk = b.w.index_axis(ndarray::Axis(0), term.k - 1);
        let ct = b.c.row(term.t);
        let pred = wk.dot(&ct);
        let scores: Vec<f64> = term
            .candidates
            .iter()
            .map(|&j| b.z.row(j).dot(&pred))
            .collect();
        let pos = term
            .candidates
            .iter()
            .position(|&j| j == term.t + term.k)
            .expect("validated");
        let (l, dscores) = softmax_xent(&scores, pos);
        let weight = 1.0 / (active * per_k[term.k - 1] as f64);
        loss += weight * l;

        // d s_j = z_j . (W_k c_t): gradient flows to z_j, c_t and W_k
        let mut zbar = ndarray::Array1::<f64>::zeros(b.z.ncols());
        for (&j, &g) in term.candidates.iter().zip(&dscores) {
            let g = weight * g;
            grad.z.row_mut(j).scaled_add(g, &pred);
            zbar.scaled_add(g, &b.z.row(j));
        }
        grad.c.row_mut(term.t).scaled_add(1.0, &wk.t().dot(&zbar));
        let mut gw = grad.w.index_axis_mut(ndarray::Axis(0), term.k - 1);
        for (i, &zi) in zbar.iter().enumerate() {
            gw.row_mut(i).scaled_add(zi, &ct);
        }
    }
    Ok((loss, grad))
}
