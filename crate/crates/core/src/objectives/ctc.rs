use ndarray::ArrayView2;

use super::log_sum_exp;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtcScore {
    /// `ln p(target | frames)`, summed over every CTC alignment.
    pub log_prob: f64,
    /// False when the target needs more frames than are available; the
    /// log-probability is then negative infinity.
    pub feasible: bool,
}

/// Exact CTC log-likelihood via the forward recursion in log space.
///
/// `log_probs` is T x (P + 1) with per-frame log-distributions over the
/// phones and the blank at column `blank`; `target` holds column indices.
pub fn ctc_log_prob(
    log_probs: ArrayView2<f64>,
    target: &[usize],
    blank: usize,
) -> Result<CtcScore> {
    let (t_len, n_sym) = log_probs.dim();
    if blank >= n_sym {
        return Err(Error::invalid(format!(
            "blank index {blank} outside {n_sym} symbols"
        )));
    }
    if let Some(&bad) = target.iter().find(|&&l| l >= n_sym || l == blank) {
        return Err(Error::invalid(format!(
            "target label {bad} is blank or out of range"
        )));
    }
    for (t, row) in log_probs.rows().into_iter().enumerate() {
        if row.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::invalid(format!(
                "invalid log-probability in frame {t}"
            )));
        }
        let mass: f64 = row.iter().map(|v| v.exp()).sum();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "frame {t} probabilities sum to {mass}, not 1"
            )));
        }
    }

    let repeats = target.windows(2).filter(|w| w[0] == w[1]).count();
    if target.len() + repeats > t_len {
        return Ok(CtcScore {
            log_prob: f64::NEG_INFINITY,
            feasible: false,
        });
    }
    if t_len == 0 {
        // only the empty target is feasible with no frames
        return Ok(CtcScore {
            log_prob: 0.0,
            feasible: true,
        });
    }

    // blank-interleaved target: b l1 b l2 ... lL b
    let ext: Vec<usize> = std::iter::once(blank)
        .chain(target.iter().flat_map(|&l| [l, blank]))
        .collect();
    let s_len = ext.len();
    let mut alpha = vec![f64::NEG_INFINITY; s_len];
    alpha[0] = log_probs[[0, ext[0]]];
    if s_len > 1 {
        alpha[1] = log_probs[[0, ext[1]]];
    }
    let mut next = vec![f64::NEG_INFINITY; s_len];
    for t in 1..t_len {
        for s in 0..s_len {
            let mut terms = [alpha[s], f64::NEG_INFINITY, f64::NEG_INFINITY];
            if s >= 1 {
                terms[1] = alpha[s - 1];
            }
            if s >= 2 && ext[s] != blank && ext[s] != ext[s - 2] {
                terms[2] = alpha[s - 2];
            }
            next[s] = log_sum_exp(&terms) + log_probs[[t, ext[s]]];
        }
        std::mem::swap(&mut alpha, &mut next);
    }
    let log_prob = if s_len > 1 {
        log_sum_exp(&[alpha[s_len - 1], alpha[s_len - 2]])
    } else {
        alpha[0]
    };
    Ok(CtcScore {
        log_prob,
        feasible: true,
    })
}

/// `lambda * log_p_ctc + (1 - lambda) * log_p_att`, an objective to maximise.
pub fn joint_objective(log_p_ctc: f64, log_p_att: f64, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("lambda {lambda} outside [0, 1]")));
    }
    Ok(lambda * log_p_ctc + (1.0 - lambda) * log_p_att)
}
