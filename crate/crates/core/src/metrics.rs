//! Scoring: macro-averaged F1 for probes, phone error rate for recognisers,
//! and the Pearson correlation between the two across systems.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::af::{AfInventory, LabeledFrameSet, N_FEATURES};
use crate::probe::{BlockStatus, LinearProbe, ProbeConfig};
use crate::{Error, Result};

pub const PROBE_REPORT_SCHEMA: &str = "afprobe.probe_report/1";
pub const PER_REPORT_SCHEMA: &str = "afprobe.per_report/1";
pub const CORRELATION_SCHEMA: &str = "afprobe.correlation/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Frames whose true label is this class.
    pub support: usize,
    /// Frames predicted as this class.
    pub predicted: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 for every class in `0..n_classes`; 0/0 counts as 0.
pub fn class_scores(truth: &[usize], pred: &[usize], n_classes: usize) -> Result<Vec<ClassScore>> {
    if truth.len() != pred.len() {
        return Err(Error::Shape(format!(
            "{} true labels vs {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    let mut tp = vec![0usize; n_classes];
    let mut n_true = vec![0usize; n_classes];
    let mut n_pred = vec![0usize; n_classes];
    for (&t, &p) in truth.iter().zip(pred) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::invalid(format!(
                "label {} outside the {n_classes}-class set",
                t.max(p)
            )));
        }
        n_true[t] += 1;
        n_pred[p] += 1;
        if t == p {
            tp[t] += 1;
        }
    }
    Ok((0..n_classes)
        .map(|c| {
            let precision = ratio(tp[c], n_pred[c]);
            let recall = ratio(tp[c], n_true[c]);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassScore {
                precision,
                recall,
                f1,
                support: n_true[c],
                predicted: n_pred[c],
            }
        })
        .collect())
}

/// Unweighted mean of per-class F1 over the whole class set.
pub fn macro_f1(truth: &[usize], pred: &[usize], n_classes: usize) -> Result<f64> {
    if n_classes == 0 {
        return Err(Error::invalid("empty class set"));
    }
    let scores = class_scores(truth, pred, n_classes)?;
    Ok(scores.iter().map(|s| s.f1).sum::<f64>() / n_classes as f64)
}

/// Mean and sample standard deviation (n - 1 denominator).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedClassScore {
    pub class: String,
    #[serde(flatten)]
    pub score: ClassScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature: String,
    pub macro_f1: f64,
    pub classes: Vec<NamedClassScore>,
    /// Classes with no classifier (absent from training data).
    pub untrained_classes: Vec<String>,
    pub untrainable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub schema: String,
    pub features: Vec<FeatureScore>,
    /// Mean of the per-feature macro-F1 scores.
    pub averaged: f64,
    /// Sample standard deviation of the per-feature macro-F1 scores.
    pub std: f64,
    pub n_frames: usize,
    pub config: ProbeConfig,
    pub drop_list: Vec<String>,
}

impl ProbeReport {
    pub fn per_feature(&self) -> Vec<f64> {
        self.features.iter().map(|f| f.macro_f1).collect()
    }

    /// Recomputes `averaged` and `std` from the per-feature scores.
    pub fn summary(&self) -> (f64, f64) {
        mean_std(&self.per_feature())
    }
}

/// Applies the probe to `test` and scores every articulatory feature.
pub fn probe_report(
    probe: &LinearProbe,
    test: &LabeledFrameSet,
    inventory: &AfInventory,
) -> Result<ProbeReport> {
    if test.is_empty() {
        return Err(Error::Empty("test set has no frames".into()));
    }
    let predicted = probe.predict(test.vectors.mapv(f64::from).view())?;
    let mut features = Vec::with_capacity(N_FEATURES);
    for (f, feature) in inventory.features().iter().enumerate() {
        let truth = test.feature_labels(f);
        let pred: Vec<usize> = predicted.iter().map(|v| v.class(f) as usize).collect();
        let n_classes = feature.classes.len();
        let scores = class_scores(&truth, &pred, n_classes)?;
        let block = &probe.blocks[f];
        features.push(FeatureScore {
            feature: feature.name.clone(),
            macro_f1: scores.iter().map(|s| s.f1).sum::<f64>() / n_classes as f64,
            classes: scores
                .into_iter()
                .zip(&feature.classes)
                .map(|(score, class)| NamedClassScore {
                    class: class.clone(),
                    score,
                })
                .collect(),
            untrained_classes: feature
                .classes
                .iter()
                .zip(&block.trained)
                .filter(|(_, &t)| !t)
                .map(|(c, _)| c.clone())
                .collect(),
            untrainable: matches!(block.status, BlockStatus::Untrainable { .. }),
        });
    }
    let per: Vec<f64> = features.iter().map(|f| f.macro_f1).collect();
    let (averaged, std) = mean_std(&per);
    Ok(ProbeReport {
        schema: PROBE_REPORT_SCHEMA.into(),
        features,
        averaged,
        std,
        n_frames: test.len(),
        config: probe.config,
        drop_list: test.drop_list.clone(),
    })
}

/// Edit operation counts of a minimal alignment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditCounts {
    pub matches: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
}

impl EditCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Unit-cost Levenshtein alignment of `hyp` against `reference`.
///
/// The backtrace runs from the end of both sequences and prefers, in order,
/// match, substitution, deletion, insertion. The preference only changes the
/// breakdown, never the total.
pub fn align<T: PartialEq>(reference: &[T], hyp: &[T]) -> EditCounts {
    let (n, m) = (reference.len(), hyp.len());
    let width = m + 1;
    let mut d = vec![0usize; (n + 1) * width];
    for i in 0..=n {
        d[i * width] = i;
    }
    for (j, cell) in d[..width].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = d[(i - 1) * width + j - 1] + usize::from(reference[i - 1] != hyp[j - 1]);
            let up = d[(i - 1) * width + j] + 1;
            let left = d[i * width + j - 1] + 1;
            d[i * width + j] = diag.min(up).min(left);
        }
    }

    let mut counts = EditCounts::default();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * width + j];
        if i > 0 && j > 0 {
            let diag = d[(i - 1) * width + j - 1];
            if reference[i - 1] == hyp[j - 1] && here == diag {
                counts.matches += 1;
                i -= 1;
                j -= 1;
                continue;
            }
            if here == diag + 1 {
                counts.substitutions += 1;
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == d[(i - 1) * width + j] + 1 {
            counts.deletions += 1;
            i -= 1;
        } else {
            counts.insertions += 1;
            j -= 1;
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtterancePer {
    pub utterance_id: String,
    pub n_ref: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerReport {
    pub schema: String,
    /// (S + D + I) / n_ref, pooled over utterances; may exceed 1.
    pub per: f64,
    pub n_ref: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub utterances: Vec<UtterancePer>,
}

impl PerReport {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// PER of a single utterance.
pub fn per<T: PartialEq>(reference: &[T], hyp: &[T]) -> Result<PerReport> {
    corpus_per([("", reference, hyp)])
}

/// Corpus PER: edit counts are summed over utterances before dividing.
/// Per-utterance details are listed in utterance-id order.
pub fn corpus_per<'a, I, T>(utterances: I) -> Result<PerReport>
where
    I: IntoIterator<Item = (&'a str, &'a [T], &'a [T])>,
    T: PartialEq + 'a,
{
    let mut details: Vec<UtterancePer> = utterances
        .into_iter()
        .map(|(id, r, h)| {
            let c = align(r, h);
            UtterancePer {
                utterance_id: id.to_string(),
                n_ref: r.len(),
                substitutions: c.substitutions,
                deletions: c.deletions,
                insertions: c.insertions,
            }
        })
        .collect();
    details.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));
    let n_ref: usize = details.iter().map(|u| u.n_ref).sum();
    if n_ref == 0 {
        return Err(Error::Empty(
            "reference transcripts contain no phones".into(),
        ));
    }
    let substitutions = details.iter().map(|u| u.substitutions).sum();
    let deletions = details.iter().map(|u| u.deletions).sum();
    let insertions = details.iter().map(|u| u.insertions).sum();
    Ok(PerReport {
        schema: PER_REPORT_SCHEMA.into(),
        per: (substitutions + deletions + insertions) as f64 / n_ref as f64,
        n_ref,
        substitutions,
        deletions,
        insertions,
        utterances: details,
    })
}

/// Parses "utterance_id<TAB>space-separated phones" lines.
pub fn read_trn<R: BufRead>(r: R) -> Result<BTreeMap<String, Vec<String>>> {
    let mut out = BTreeMap::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (id, phones) = line.split_once('\t').unwrap_or((line.as_str(), ""));
        let id = id.trim();
        if id.is_empty() {
            return Err(Error::parse(idx + 1, "missing utterance id"));
        }
        let phones = phones.split_whitespace().map(str::to_string).collect();
        if out.insert(id.to_string(), phones).is_some() {
            return Err(Error::parse(
                idx + 1,
                format!("duplicate utterance id {id:?}"),
            ));
        }
    }
    Ok(out)
}

/// Scores hypothesis transcripts against references with matching ids.
pub fn per_from_transcripts(
    refs: &BTreeMap<String, Vec<String>>,
    hyps: &BTreeMap<String, Vec<String>>,
) -> Result<PerReport> {
    if let Some(id) = hyps.keys().find(|k| !refs.contains_key(*k)) {
        return Err(Error::invalid(format!(
            "hypothesis {id:?} has no reference"
        )));
    }
    if let Some(id) = refs.keys().find(|k| !hyps.contains_key(*k)) {
        return Err(Error::invalid(format!(
            "reference {id:?} has no hypothesis"
        )));
    }
    corpus_per(
        refs.iter()
            .map(|(id, r)| (id.as_str(), r.as_slice(), hyps[id].as_slice())),
    )
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} vs {} values", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation(
            "need at least two points".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant sequence".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRow {
    pub name: String,
    pub averaged_f1: f64,
    pub per: f64,
}

/// Probing-versus-recognition correlation across representation systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub schema: String,
    /// Signed Pearson r between averaged macro-F1 and PER.
    pub r: f64,
    pub abs_r: f64,
    /// r between averaged macro-F1 and accuracy (1 - PER); equals -r.
    pub r_accuracy: f64,
    pub systems: Vec<SystemRow>,
}

impl Correlation {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("system,averaged_f1,per\n");
        for s in &self.systems {
            out.push_str(&format!("{},{},{}\n", s.name, s.averaged_f1, s.per));
        }
        out
    }
}

pub fn correlate_report(systems: &[(String, ProbeReport, PerReport)]) -> Result<Correlation> {
    if systems.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 3 systems to correlate, got {}",
            systems.len()
        )));
    }
    let rows: Vec<SystemRow> = systems
        .iter()
        .map(|(name, probe, per)| SystemRow {
            name: name.clone(),
            averaged_f1: probe.averaged,
            per: per.per,
        })
        .collect();
    let f1: Vec<f64> = rows.iter().map(|r| r.averaged_f1).collect();
    let per: Vec<f64> = rows.iter().map(|r| r.per).collect();
    let acc: Vec<f64> = per.iter().map(|p| 1.0 - p).collect();
    let r = pearson(&f1, &per)?;
    // constant columns are reported first, they are the more useful diagnosis
    if systems.len() < 3 {
        return Err(Error::invalid(format!(
            "need at least 3 systems to correlate, got {}",
            systems.len()
        )));
    }
    Ok(Correlation {
        schema: CORRELATION_SCHEMA.into(),
        r,
        abs_r: r.abs(),
        r_accuracy: pearson(&f1, &acc)?,
        systems: rows,
    })
}
