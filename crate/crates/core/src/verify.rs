//! Verification suite for the objectives: central finite differences against
//! the analytic gradients, exhaustive path enumeration against the CTC
//! forward recursion, and the loss invariants.
//!
//! The oracles here only ever call the loss functions for their values, so
//! they stay independent of the gradient and dynamic-programming code they
//! check.

use std::collections::{HashMap, VecDeque};

use ndarray::{Array, Array2, Array3};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::af::{AfInventory, AfVector, FrameRef, LabeledFrameSet, N_FEATURES};
use crate::metrics::align;
use crate::objectives::{
    cpc_loss, ctc_log_prob, diversity_loss, hubert_loss, joint_objective, w2v2_loss, CpcBatch,
    CpcTerm, MaskedBatch, PredictionStep, ProductQuantizer, DEFAULT_TEMPERATURE,
};
use crate::Result;

pub const FD_STEP: f64 = 1e-5;
pub const GRAD_REL_TOL: f64 = 1e-4;
/// Denominator floor for relative errors, so entries whose true gradient is
/// essentially zero are judged on absolute error.
pub const GRAD_REL_FLOOR: f64 = 1e-6;
pub const UNIFORM_TOL: f64 = 1e-12;
pub const CTC_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckRow {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckRow {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_REL_FLOOR)
}

fn normal<R: Rng>(rng: &mut R, scale: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    scale * z
}

fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array::from_shape_simple_fn((rows, cols), || normal(rng, scale))
}

/// T=8, d=4, d_c=3, K=2, five candidates (positive plus four negatives) per term.
pub fn random_cpc_batch<R: Rng>(rng: &mut R) -> CpcBatch {
    let (t_len, d, dc, kk, n) = (8, 4, 3, 2, 5);
    let z = random_matrix(rng, t_len, d, 0.7);
    let c = random_matrix(rng, t_len, dc, 0.7);
    let w = Array3::from_shape_simple_fn((kk, d, dc), || normal(rng, 0.5));
    let mut terms = Vec::new();
    for k in 1..=kk {
        for t in 0..t_len - k {
            let pos = t + k;
            let others: Vec<usize> = (0..t_len).filter(|&j| j != pos).collect();
            let mut candidates: Vec<usize> = sample(rng, others.len(), n - 1)
                .into_iter()
                .map(|i| others[i])
                .collect();
            candidates.insert(rng.random_range(0..n), pos);
            terms.push(CpcTerm { t, k, candidates });
        }
    }
    CpcBatch { z, c, w, terms }
}

fn random_mask<R: Rng>(rng: &mut R, t_len: usize) -> Vec<bool> {
    loop {
        let mask: Vec<bool> = (0..t_len).map(|_| rng.random_bool(0.5)).collect();
        if mask.iter().any(|&m| m) && mask.iter().any(|&m| !m) {
            return mask;
        }
    }
}

/// Quantized-target batch: each step's true target is its own row, with four
/// distractors drawn from the other rows, plus random codebook usage (G=2, V=4).
pub fn random_w2v2_batch<R: Rng>(rng: &mut R) -> MaskedBatch {
    let (t_len, d, n) = (8, 4, 5);
    let context = random_matrix(rng, t_len, d, 1.0);
    let targets = random_matrix(rng, t_len, d, 1.0);
    let steps = (0..t_len)
        .map(|t| {
            let others: Vec<usize> = (0..t_len).filter(|&j| j != t).collect();
            let mut candidates: Vec<usize> = sample(rng, others.len(), n - 1)
                .into_iter()
                .map(|i| others[i])
                .collect();
            candidates.insert(rng.random_range(0..n), t);
            PredictionStep {
                t,
                positive: t,
                candidates,
            }
        })
        .collect();
    let mut usage = Array2::from_shape_simple_fn((2, 4), || rng.random_range(0.05..1.0));
    for mut row in usage.rows_mut() {
        let s = row.sum();
        row /= s;
    }
    MaskedBatch {
        context,
        targets,
        steps,
        mask: random_mask(rng, t_len),
        temperature: DEFAULT_TEMPERATURE,
        alpha: 0.1,
        codebook_usage: Some(usage),
    }
}

/// Cluster-embedding batch: C=6 embeddings, every step scored against all of
/// them with a random pseudo label as the positive.
pub fn random_hubert_batch<R: Rng>(rng: &mut R) -> MaskedBatch {
    let (t_len, d, n_clusters) = (8, 4, 6);
    let context = random_matrix(rng, t_len, d, 1.0);
    let targets = random_matrix(rng, n_clusters, d, 1.0);
    let steps = (0..t_len)
        .map(|t| PredictionStep {
            t,
            positive: rng.random_range(0..n_clusters),
            candidates: (0..n_clusters).collect(),
        })
        .collect();
    MaskedBatch {
        context,
        targets,
        steps,
        mask: random_mask(rng, t_len),
        temperature: DEFAULT_TEMPERATURE,
        alpha: rng.random_range(0.1..0.9),
        codebook_usage: None,
    }
}

/// Central differences of `loss` over every entry of `param`, compared with `analytic`.
fn fd_max_rel_error<B: Clone>(
    batch: &B,
    param: fn(&mut B) -> &mut [f64],
    analytic: &[f64],
    loss: &dyn Fn(&B) -> Result<f64>,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let mut plus = batch.clone();
        param(&mut plus)[i] += FD_STEP;
        let mut minus = batch.clone();
        param(&mut minus)[i] -= FD_STEP;
        let numeric = (loss(&plus)? - loss(&minus)?) / (2.0 * FD_STEP);
        worst = worst.max(rel_error(a, numeric));
    }
    Ok(worst)
}

fn slice_mut<D: ndarray::Dimension>(a: &mut Array<f64, D>) -> &mut [f64] {
    a.as_slice_mut().expect("standard layout")
}

pub fn cpc_gradient_error(b: &CpcBatch) -> Result<f64> {
    let (_, g) = cpc_loss(b)?;
    let loss = |b: &CpcBatch| cpc_loss(b).map(|(l, _)| l);
    let ez = fd_max_rel_error(b, |b| slice_mut(&mut b.z), g.z.as_slice().unwrap(), &loss)?;
    let ec = fd_max_rel_error(b, |b| slice_mut(&mut b.c), g.c.as_slice().unwrap(), &loss)?;
    let ew = fd_max_rel_error(b, |b| slice_mut(&mut b.w), g.w.as_slice().unwrap(), &loss)?;
    Ok(ez.max(ec).max(ew))
}

pub fn masked_gradient_error(
    b: &MaskedBatch,
    objective: fn(&MaskedBatch) -> Result<(f64, crate::objectives::MaskedGrad)>,
) -> Result<f64> {
    let (_, g) = objective(b)?;
    let loss = |b: &MaskedBatch| objective(b).map(|(l, _)| l);
    let ec = fd_max_rel_error(
        b,
        |b| slice_mut(&mut b.context),
        g.context.as_slice().unwrap(),
        &loss,
    )?;
    let et = fd_max_rel_error(
        b,
        |b| slice_mut(&mut b.targets),
        g.targets.as_slice().unwrap(),
        &loss,
    )?;
    let eu = match &g.codebook_usage {
        Some(gu) => fd_max_rel_error(
            b,
            |b| slice_mut(b.codebook_usage.as_mut().unwrap()),
            gu.as_slice().unwrap(),
            &loss,
        )?,
        None => 0.0,
    };
    Ok(ec.max(et).max(eu))
}

/// Sums the probability of every frame-level path that collapses to `target`.
pub fn ctc_brute_force(log_probs: &Array2<f64>, target: &[usize], blank: usize) -> f64 {
    let (t_len, n_sym) = log_probs.dim();
    let mut total = 0.0;
    let mut path = vec![0usize; t_len];
    loop {
        let mut collapsed = Vec::new();
        let mut prev = None;
        for &s in &path {
            if Some(s) != prev && s != blank {
                collapsed.push(s);
            }
            prev = Some(s);
        }
        if collapsed == target {
            total += path
                .iter()
                .enumerate()
                .map(|(t, &s)| log_probs[[t, s]])
                .sum::<f64>()
                .exp();
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == t_len {
                return total.ln();
            }
            path[i] += 1;
            if path[i] < n_sym {
                break;
            }
            path[i] = 0;
            i += 1;
        }
    }
}

/// Random T x (P+1) log-softmax matrix.
pub fn random_log_probs<R: Rng>(rng: &mut R, t_len: usize, n_sym: usize) -> Array2<f64> {
    let mut m = random_matrix(rng, t_len, n_sym, 1.5);
    for mut row in m.rows_mut() {
        let lse = crate::objectives::log_sum_exp(row.as_slice().unwrap());
        row -= lse;
    }
    m
}

/// Finite-difference checks for the three contrastive objectives.
pub fn gradient_checks(seeds: u64) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    type Check = (&'static str, fn(&mut ChaCha8Rng) -> Result<f64>);
    let checks: [Check; 3] = [
        ("cpc gradient vs finite differences", |r| {
            cpc_gradient_error(&random_cpc_batch(r))
        }),
        ("w2v2 gradient vs finite differences", |r| {
            masked_gradient_error(&random_w2v2_batch(r), w2v2_loss)
        }),
        ("hubert gradient vs finite differences", |r| {
            masked_gradient_error(&random_hubert_batch(r), hubert_loss)
        }),
    ];
    for (name, check) in checks {
        let mut worst: f64 = 0.0;
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            worst = worst.max(check(&mut rng)?);
        }
        rows.push(CheckRow::new(
            name,
            worst < GRAD_REL_TOL,
            format!("max rel error {worst:.2e} over {seeds} seeds (tol {GRAD_REL_TOL:.0e})"),
        ));
    }
    Ok(rows)
}

/// Score-uniform candidates must give exactly ln N.
pub fn uniform_checks() -> Result<Vec<CheckRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut rows = Vec::new();

    let mut b = random_cpc_batch(&mut rng);
    let row = b.z.row(0).to_owned();
    for mut r in b.z.rows_mut() {
        r.assign(&row);
    }
    let (l, _) = cpc_loss(&b)?;
    let err = (l - 5f64.ln()).abs();
    rows.push(CheckRow::new(
        "cpc uniform scores give ln N",
        err < UNIFORM_TOL,
        format!("|loss - ln 5| = {err:.1e}"),
    ));

    let mut b = random_w2v2_batch(&mut rng);
    let row = b.targets.row(0).to_owned();
    for (i, mut r) in b.targets.rows_mut().into_iter().enumerate() {
        // positive rescaling keeps cosine scores equal
        r.assign(&(&row * (1.0 + i as f64)));
    }
    b.codebook_usage = Some(Array2::from_elem((2, 4), 0.25));
    let (l, _) = w2v2_loss(&b)?;
    let err = (l - 5f64.ln()).abs();
    rows.push(CheckRow::new(
        "w2v2 uniform scores give ln N",
        err < UNIFORM_TOL,
        format!("|loss - ln 5| = {err:.1e}"),
    ));

    let mut b = random_hubert_batch(&mut rng);
    let row = b.targets.row(0).to_owned();
    for mut r in b.targets.rows_mut() {
        r.assign(&row);
    }
    let (l, _) = hubert_loss(&b)?;
    let err = (l - 6f64.ln()).abs();
    rows.push(CheckRow::new(
        "hubert uniform scores give ln N",
        err < UNIFORM_TOL,
        format!("|loss - ln 6| = {err:.1e}"),
    ));
    Ok(rows)
}

pub fn invariant_checks(seeds: u64) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let (mut nonneg, mut monotone, mut cos_inv, mut cpc_var) = (true, true, true, true);
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let cpc = random_cpc_batch(&mut rng);
        let w2 = random_w2v2_batch(&mut rng);
        let hb = random_hubert_batch(&mut rng);
        let (lc, _) = cpc_loss(&cpc)?;
        let (lw, _) = w2v2_loss(&MaskedBatch {
            alpha: 0.0,
            ..w2.clone()
        })?;
        let (lh, _) = hubert_loss(&hb)?;
        nonneg &= lc >= 0.0 && lw >= 0.0 && lh >= 0.0;

        // raising the positive's score (others fixed) lowers the loss
        let term = CpcTerm {
            candidates: cpc.terms[0].candidates.clone(),
            ..cpc.terms[0].clone()
        };
        let mut one = CpcBatch {
            terms: vec![term.clone()],
            ..cpc.clone()
        };
        let (before, _) = cpc_loss(&one)?;
        let pos = term.t + term.k;
        let pred = one
            .w
            .index_axis(ndarray::Axis(0), term.k - 1)
            .dot(&one.c.row(term.t));
        let norm2 = pred.dot(&pred);
        if norm2 > 0.0
            && !term
                .candidates
                .iter()
                .any(|&j| j != pos && one.z.row(j) == one.z.row(pos))
        {
            one.z.row_mut(pos).scaled_add(0.5 / norm2, &pred);
            let (after, _) = cpc_loss(&one)?;
            monotone &= after < before;
        }

        // cosine losses ignore positive rescaling of a candidate; the bilinear score does not
        let mut scaled = hb.clone();
        scaled.targets.row_mut(0).mapv_inplace(|v| v * 3.7);
        let (lh2, _) = hubert_loss(&scaled)?;
        cos_inv &= (lh - lh2).abs() < 1e-12;
        let mut scaled = cpc.clone();
        let j = cpc.terms[0].candidates[0];
        scaled.z.row_mut(j).mapv_inplace(|v| v * 3.7);
        let (lc2, _) = cpc_loss(&scaled)?;
        cpc_var &= (lc - lc2).abs() > 1e-9;
    }
    rows.push(CheckRow::new(
        "contrastive losses are non-negative",
        nonneg,
        format!("{seeds} seeds"),
    ));
    rows.push(CheckRow::new(
        "loss decreases as the positive score rises",
        monotone,
        format!("{seeds} seeds"),
    ));
    rows.push(CheckRow::new(
        "cosine losses invariant to candidate rescaling",
        cos_inv,
        format!("{seeds} seeds"),
    ));
    rows.push(CheckRow::new(
        "cpc loss changes under candidate rescaling",
        cpc_var,
        format!("{seeds} seeds"),
    ));

    let (ld, _) = diversity_loss(Array2::from_elem((2, 5), 0.2).view())?;
    let onehot = Array2::from_shape_fn((2, 5), |(g, v)| if v == g { 1.0 } else { 0.0 });
    let (lo, _) = diversity_loss(onehot.view())?;
    rows.push(CheckRow::new(
        "diversity penalty: uniform 0, one-hot (V-1)/V",
        ld.abs() < 1e-15 && (lo - 0.8).abs() < 1e-15,
        format!("uniform {ld:.1e}, one-hot {lo}"),
    ));

    let pq = ProductQuantizer::new(ndarray::array![
        [[0.0, 0.0], [1.0, 1.0]],
        [[2.0, 2.0], [0.0, 0.0]]
    ])?;
    let (_, idx) = pq.quantize(ndarray::array![0.9, 0.8, 1.0, 1.0].view())?;
    rows.push(CheckRow::new(
        "product quantizer nearest entry, ties to lowest index",
        idx == vec![1, 0],
        format!("indices {idx:?}"),
    ));

    let j = joint_objective(-1.0, -3.0, 0.5)?;
    rows.push(CheckRow::new(
        "joint objective convex combination",
        j == -2.0 && joint_objective(-1.0, -3.0, 1.0)? == -1.0,
        format!("lambda 0.5 -> {j}"),
    ));
    Ok(rows)
}

/// Forward recursion against exhaustive paths, plus relabeling and the
/// uniform-frame closed form.
pub fn ctc_checks(instances: u64) -> Result<Vec<CheckRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut worst: f64 = 0.0;
    let mut feasibility_ok = true;
    for _ in 0..instances {
        let t_len = rng.random_range(1..=6);
        let n_phones = rng.random_range(1..=3);
        let lp = random_log_probs(&mut rng, t_len, n_phones + 1);
        let len = rng.random_range(0..=3);
        let target: Vec<usize> = (0..len).map(|_| rng.random_range(0..n_phones)).collect();
        let score = ctc_log_prob(lp.view(), &target, n_phones)?;
        let oracle = ctc_brute_force(&lp, &target, n_phones);
        if oracle == f64::NEG_INFINITY {
            feasibility_ok &= !score.feasible && score.log_prob == f64::NEG_INFINITY;
        } else {
            feasibility_ok &= score.feasible;
            worst = worst.max((score.log_prob - oracle).abs());
        }
    }
    let mut rows = vec![CheckRow::new(
        "ctc forward vs exhaustive path enumeration",
        worst < CTC_TOL && feasibility_ok,
        format!("max abs error {worst:.1e} over {instances} instances (tol {CTC_TOL:.0e})"),
    )];

    // relabel phones with a permutation, applied to both matrix columns and target
    let lp = random_log_probs(&mut rng, 6, 4);
    let perm = [2usize, 0, 1];
    let target = [0usize, 1, 1];
    let mut permuted = lp.clone();
    for (old, &new) in perm.iter().enumerate() {
        permuted.column_mut(new).assign(&lp.column(old));
    }
    let mapped: Vec<usize> = target.iter().map(|&l| perm[l]).collect();
    let a = ctc_log_prob(lp.view(), &target, 3)?.log_prob;
    let b = ctc_log_prob(permuted.view(), &mapped, 3)?.log_prob;
    rows.push(CheckRow::new(
        "ctc permutation covariance",
        (a - b).abs() < 1e-12,
        format!("{a:.6} vs {b:.6}"),
    ));

    // Uniform frames: a repeat-free target of length L has C(T+L, 2L) alignments
    // out of (P+1)^T paths, which rises and then falls with L.
    let (t_len, n_sym) = (6usize, 4usize);
    let uniform = Array2::from_elem((t_len, n_sym), -(n_sym as f64).ln());
    let mut worst: f64 = 0.0;
    for len in 0..=t_len {
        let target: Vec<usize> = (0..len).map(|i| i % 3).collect();
        let v = ctc_log_prob(uniform.view(), &target, 3)?.log_prob;
        let expected = ln_binomial(t_len + len, 2 * len) - t_len as f64 * (n_sym as f64).ln();
        worst = worst.max((v - expected).abs());
    }
    rows.push(CheckRow::new(
        "ctc uniform frames match closed-form alignment count",
        worst < 1e-12,
        format!("max abs error {worst:.1e}, lengths 0..={t_len}"),
    ));
    Ok(rows)
}

fn all_strings(max_len: usize, alphabet: u8) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    let mut start = 0;
    for _ in 0..max_len {
        let end = out.len();
        for i in start..end {
            for c in 0..alphabet {
                let mut t = out[i].clone();
                t.push(c);
                out.push(t);
            }
        }
        start = end;
    }
    out
}

/// Graph whose edges are single-symbol insertions, deletions and
/// substitutions among strings of length <= max_len. Optimal edit chains
/// never need a longer intermediate string, so shortest paths here are
/// edit distances.
fn edit_graph(strings: &[Vec<u8>], alphabet: u8) -> Vec<Vec<u32>> {
    let index: HashMap<&[u8], u32> = strings
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_slice(), i as u32))
        .collect();
    strings
        .iter()
        .map(|s| {
            let mut out = Vec::new();
            let mut push = |t: Vec<u8>| {
                if let Some(&v) = index.get(t.as_slice()) {
                    out.push(v);
                }
            };
            for i in 0..s.len() {
                let mut t = s.clone();
                t.remove(i);
                push(t);
                for c in (0..alphabet).filter(|&c| c != s[i]) {
                    let mut t = s.clone();
                    t[i] = c;
                    push(t);
                }
            }
            for i in 0..=s.len() {
                for c in 0..alphabet {
                    let mut t = s.clone();
                    t.insert(i, c);
                    push(t);
                }
            }
            out
        })
        .collect()
}

fn bfs(graph: &[Vec<u32>], source: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; graph.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source as u32]);
    while let Some(u) = queue.pop_front() {
        for &v in &graph[u as usize] {
            if dist[v as usize] == u32::MAX {
                dist[v as usize] = dist[u as usize] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Compares the PER alignment with breadth-first edit distances for every
/// ref/hyp pair up to `max_len` symbols, and checks that the S/D/I
/// breakdown accounts for both sequence lengths.
pub fn per_exhaustive_check(max_len: usize, alphabet: u8) -> CheckRow {
    let strings = all_strings(max_len, alphabet);
    let graph = edit_graph(&strings, alphabet);
    let mut mismatches = 0usize;
    let mut first = None;
    for (i, r) in strings.iter().enumerate() {
        let dist = bfs(&graph, i);
        for (j, h) in strings.iter().enumerate() {
            let c = align(r, h);
            let ok = c.errors() as u32 == dist[j]
                && c.matches + c.substitutions + c.deletions == r.len()
                && c.matches + c.substitutions + c.insertions == h.len();
            if !ok {
                mismatches += 1;
                first.get_or_insert_with(|| format!("; first {r:?} -> {h:?}"));
            }
        }
    }
    let n = strings.len();
    CheckRow::new(
        "per distance vs exhaustive edit distance",
        mismatches == 0,
        format!(
            "{} pairs, {mismatches} mismatches{}",
            n * n,
            first.unwrap_or_default()
        ),
    )
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| ((n - i) as f64 / (k - i) as f64).ln()).sum()
}

fn frame_set(rows: Vec<Vec<f64>>, labels: Vec<AfVector>) -> LabeledFrameSet {
    let dim = rows.first().map_or(0, Vec::len);
    let n = rows.len();
    let flat: Vec<f32> = rows.into_iter().flatten().map(|v| v as f32).collect();
    LabeledFrameSet {
        vectors: Array2::from_shape_vec((n, dim), flat).expect("rectangular rows"),
        labels,
        provenance: (0..n as u32)
            .map(|frame| FrameRef {
                utterance: 0,
                frame,
            })
            .collect(),
        utterances: vec!["synthetic".into()],
        drop_list: Vec::new(),
    }
}

/// Linearly separable AF data: every feature gets a one-hot block (one
/// column per class) whose active entry sits `margin` noise deviations
/// above the rest, followed by `noise_dims` pure-noise columns. Classes are
/// drawn uniformly and independently per feature.
pub fn separable_frames<R: Rng>(
    rng: &mut R,
    inventory: &AfInventory,
    n: usize,
    margin: f64,
    noise_dims: usize,
) -> LabeledFrameSet {
    let counts = inventory.class_counts();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut v = [0u8; N_FEATURES];
        let mut row = Vec::new();
        for (f, &k) in counts.iter().enumerate() {
            v[f] = rng.random_range(0..k) as u8;
            row.extend((0..k).map(|c| {
                let shift = if c == v[f] as usize { margin } else { 0.0 };
                shift + normal(rng, 1.0)
            }));
        }
        row.extend((0..noise_dims).map(|_| normal(rng, 1.0)));
        rows.push(row);
        labels.push(AfVector(v));
    }
    frame_set(rows, labels)
}

/// Pure-noise frames with balanced binary `voice` labels assigned by a random
/// permutation; every other feature holds class 0.
pub fn shuffled_binary_frames<R: Rng>(
    rng: &mut R,
    inventory: &AfInventory,
    n: usize,
    dims: usize,
) -> LabeledFrameSet {
    use rand::seq::SliceRandom;
    let voice = inventory.feature_index("voice").expect("voice feature");
    let mut classes: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    classes.shuffle(rng);
    let rows = (0..n)
        .map(|_| (0..dims).map(|_| normal(rng, 1.0)).collect())
        .collect();
    let labels = classes
        .into_iter()
        .map(|c| {
            let mut v = [0u8; N_FEATURES];
            v[voice] = c;
            AfVector(v)
        })
        .collect();
    frame_set(rows, labels)
}

/// Runs the whole objective suite with `seeds` random batches per gradient check.
pub fn run_suite(seeds: u64) -> Result<Vec<CheckRow>> {
    let mut rows = gradient_checks(seeds)?;
    rows.extend(uniform_checks()?);
    rows.extend(invariant_checks(seeds)?);
    rows.extend(ctc_checks(200)?);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_matches_hand_count() {
        let lp = Array2::from_elem((2, 2), 0.5f64.ln());
        assert!((ctc_brute_force(&lp, &[0], 1) - 0.75f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn string_enumeration() {
        let s = all_strings(2, 3);
        assert_eq!(s.len(), 13);
        assert_eq!(s[4], vec![0, 0]);
    }

    #[test]
    fn small_per_oracle_passes() {
        let row = per_exhaustive_check(3, 2);
        assert!(row.passed, "{}", row.detail);
    }

    #[test]
    fn quick_suite_passes() {
        for row in run_suite(3).unwrap() {
            assert!(row.passed, "{}: {}", row.name, row.detail);
        }
    }
}
