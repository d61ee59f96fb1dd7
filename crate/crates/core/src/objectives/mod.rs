//! Reference self-supervised and sequence objectives over supplied tensors.
//!
//! Every loss returns its value together with analytic gradients. Candidate
//! sets (negatives, distractors) are always supplied by the caller; nothing
//! here samples internally.

mod cpc;
mod ctc;
mod masked;
mod quantize;

pub use cpc::{cpc_loss, CpcBatch, CpcGrad, CpcTerm};
pub use ctc::{ctc_log_prob, joint_objective, CtcScore};
pub use masked::{
    diversity_loss, hubert_loss, w2v2_loss, MaskedBatch, MaskedGrad, PredictionStep,
    DEFAULT_TEMPERATURE,
};
pub use quantize::ProductQuantizer;

/// Numerically stable `ln(sum(exp(xs)))`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Softmax cross-entropy of the entry at `positive`: `-s[positive] + lse(s)`,
/// together with `d loss / d s`.
fn softmax_xent(scores: &[f64], positive: usize) -> (f64, Vec<f64>) {
    let lse = log_sum_exp(scores);
    let mut grad: Vec<f64> = scores.iter().map(|s| (s - lse).exp()).collect();
    grad[positive] -= 1.0;
    (lse - scores[positive], grad)
}
