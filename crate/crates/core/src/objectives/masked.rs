use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::softmax_xent;
use crate::{Error, Result};

pub const DEFAULT_TEMPERATURE: f64 = 0.1;

/// Context step `t` must pick row `positive` of the target table out of
/// `candidates` (which include `positive`).
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionStep {
    pub t: usize,
    pub positive: usize,
    pub candidates: Vec<usize>,
}

/// Inputs shared by the masked-prediction objectives.
///
/// `targets` holds the candidate vectors: quantized latents for wav2vec 2.0,
/// or the cluster-embedding table for HuBERT.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedBatch {
    /// T x d
    pub context: Array2<f64>,
    /// M x d
    pub targets: Array2<f64>,
    pub steps: Vec<PredictionStep>,
    /// Length T; masked steps feed the masked term, the rest the unmasked term.
    pub mask: Vec<bool>,
    /// Softmax temperature applied to cosine similarities.
    pub temperature: f64,
    pub alpha: f64,
    /// G x V average codebook usage probabilities, for the diversity term.
    pub codebook_usage: Option<Array2<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskedGrad {
    pub context: Array2<f64>,
    pub targets: Array2<f64>,
    pub codebook_usage: Option<Array2<f64>>,
}

impl MaskedBatch {
    fn validate(&self) -> Result<()> {
        let t_len = self.context.nrows();
        if self.targets.ncols() != self.context.ncols() {
            return Err(Error::Shape(format!(
                "targets have {} dims, context has {}",
                self.targets.ncols(),
                self.context.ncols()
            )));
        }
        if self.mask.len() != t_len {
            return Err(Error::Shape(format!(
                "mask has {} entries for {t_len} steps",
                self.mask.len()
            )));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::invalid("temperature must be positive"));
        }
        if !self.alpha.is_finite() {
            return Err(Error::invalid("alpha must be finite"));
        }
        let m = self.targets.nrows();
        for step in &self.steps {
            if step.t >= t_len {
                return Err(Error::invalid(format!("step {} out of range", step.t)));
            }
            if step.candidates.is_empty() {
                return Err(Error::Empty(format!("candidate set for step {}", step.t)));
            }
            if step.positive >= m || step.candidates.iter().any(|&j| j >= m) {
                return Err(Error::invalid(format!(
                    "target index out of range at step {}",
                    step.t
                )));
            }
            if !step.candidates.contains(&step.positive) {
                return Err(Error::invalid(format!(
                    "true target missing from candidates at step {}",
                    step.t
                )));
            }
        }
        if !self
            .context
            .iter()
            .chain(&self.targets)
            .all(|v| v.is_finite())
        {
            return Err(Error::invalid("non-finite input"));
        }
        Ok(())
    }

    fn zero_grad(&self) -> MaskedGrad {
        MaskedGrad {
            context: Array2::zeros(self.context.raw_dim()),
            targets: Array2::zeros(self.targets.raw_dim()),
            codebook_usage: None,
        }
    }
}

fn norm(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

/// Cosine similarity and its gradients with respect to both arguments.
fn cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Result<(f64, Array1<f64>, Array1<f64>)> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("cosine similarity of a zero-norm vector"));
    }
    let sim = a.dot(&b) / (na * nb);
    let da = &b / (na * nb) - &a * (sim / (na * na));
    let db = &a / (na * nb) - &b * (sim / (nb * nb));
    Ok((sim, da, db))
}

/// Mean contrastive loss over the steps whose mask bit equals `masked`,
/// with its gradient accumulated into `grad` scaled by `weight`.
fn contrastive_term(
    b: &MaskedBatch,
    masked: bool,
    weight: f64,
    grad: &mut MaskedGrad,
) -> Result<f64> {
    let steps: Vec<&PredictionStep> = b.steps.iter().filter(|s| b.mask[s.t] == masked).collect();
    if steps.is_empty() {
        let which = if masked { "masked" } else { "unmasked" };
        return Err(Error::Empty(format!("no {which} prediction steps")));
    }
    let n = steps.len() as f64;
    let scale = weight / n;
    let mut total = 0.0;
    for step in steps {
        let ct = b.context.row(step.t);
        let mut scores = Vec::with_capacity(step.candidates.len());
        let mut partials = Vec::with_capacity(step.candidates.len());
        for &j in &step.candidates {
            let (sim, dc, dq) = cosine(ct, b.targets.row(j))?;
            scores.push(sim / b.temperature);
            partials.push((dc, dq));
        }
        let pos = step
            .candidates
            .iter()
            .position(|&j| j == step.positive)
            .expect("validated");
        let (loss, dscores) = softmax_xent(&scores, pos);
        total += loss;
        for ((&j, &g), (dc, dq)) in step.candidates.iter().zip(&dscores).zip(&partials) {
            let g = scale * g / b.temperature;
            grad.context.row_mut(step.t).scaled_add(g, dc);
            grad.targets.row_mut(j).scaled_add(g, dq);
        }
    }
    Ok(total / n)
}

/// Codebook diversity penalty `sum_g (V - exp(H(p_g))) / (G V)` over the
/// average usage `p` (G x V), with its gradient. Rows are used as given and
/// not renormalised; zero entries contribute `0 ln 0 = 0` and an infinite
/// gradient.
pub fn diversity_loss(usage: ArrayView2<f64>) -> Result<(f64, Array2<f64>)> {
    let (g, v) = usage.dim();
    if g == 0 || v == 0 {
        return Err(Error::Shape("empty codebook usage".into()));
    }
    if usage.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::invalid(
            "codebook usage must be finite and non-negative",
        ));
    }
    let gv = (g * v) as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros((g, v));
    for (row, mut grow) in usage.rows().into_iter().zip(grad.rows_mut()) {
        let entropy: f64 = -row
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>();
        let perplexity = entropy.exp();
        loss += (v as f64 - perplexity) / gv;
        for (gp, &p) in grow.iter_mut().zip(row) {
            *gp = if p > 0.0 {
                perplexity * (p.ln() + 1.0) / gv
            } else {
                f64::NEG_INFINITY
            };
        }
    }
    Ok((loss, grad))
}

/// Masked contrastive loss plus `alpha` times the diversity penalty.
pub fn w2v2_loss(b: &MaskedBatch) -> Result<(f64, MaskedGrad)> {
    b.validate()?;
    let mut grad = b.zero_grad();
    let mut loss = contrastive_term(b, true, 1.0, &mut grad)?;
    match &b.codebook_usage {
        Some(usage) => {
            let (ld, gd) = diversity_loss(usage.view())?;
            loss += b.alpha * ld;
            grad.codebook_usage = Some(gd * b.alpha);
        }
        None if b.alpha != 0.0 => {
            return Err(Error::invalid(
                "diversity weight set but no codebook usage given",
            ));
        }
        None => {}
    }
    Ok((loss, grad))
}

/// `alpha * L_masked + (1 - alpha) * L_unmasked` over cluster-embedding targets.
pub fn hubert_loss(b: &MaskedBatch) -> Result<(f64, MaskedGrad)> {
    b.validate()?;
    if !(0.0..=1.0).contains(&b.alpha) {
        return Err(Error::invalid(format!("alpha {} outside [0, 1]", b.alpha)));
    }
    let mut grad = b.zero_grad();
    let mut loss = 0.0;
    if b.alpha > 0.0 {
        loss += b.alpha * contrastive_term(b, true, b.alpha, &mut grad)?;
    }
    if b.alpha < 1.0 {
        loss += (1.0 - b.alpha) * contrastive_term(b, false, 1.0 - b.alpha, &mut grad)?;
    }
    Ok((loss, grad))
}
