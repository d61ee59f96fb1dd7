use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use afprobe_core::af::{
    label_utterance, load_af_map_file, read_labeled_file, write_labeled_file, AfInventory, AfMap,
    LabelCounts, LabeledFrameSet,
};
use afprobe_core::metrics::{correlate_report, per_from_transcripts, probe_report, read_trn};
use afprobe_core::mfcc::{splice, Mfcc, MfccConfig};
use afprobe_core::probe::{fit_probe, read_probe_file, write_probe_file, BlockStatus, ProbeConfig};
use afprobe_core::store::{
    read_alignment, read_features_file, read_manifest_file, write_features_file,
};
use afprobe_core::verify::run_suite;
use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::systems::load_system;
use crate::{
    CorrelateArgs, EvalArgs, LabelArgs, LossCheckArgs, MfccArgs, PerArgs, TrainArgs, UsageError,
};

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn wav_inputs(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .with_context(|| format!("listing {}", path.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")));
    files.sort();
    if files.is_empty() {
        bail!("no .wav files in {}", path.display());
    }
    Ok(files)
}

fn read_wav(path: &Path, sample_rate: u32) -> Result<Vec<f64>> {
    let reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1
        || spec.bits_per_sample != 16
        || spec.sample_format != hound::SampleFormat::Int
    {
        bail!(
            "expected 16-bit PCM mono, found {} channel(s), {} bits, {:?}",
            spec.channels,
            spec.bits_per_sample,
            spec.sample_format
        );
    }
    if spec.sample_rate != sample_rate {
        bail!(
            "sample rate {} Hz, expected {sample_rate} Hz",
            spec.sample_rate
        );
    }
    reader
        .into_samples::<i16>()
        .map(|s| Ok(f64::from(s?) / 32768.0))
        .collect()
}

pub fn mfcc(a: MfccArgs) -> Result<()> {
    if a.context.is_multiple_of(2) {
        return Err(UsageError(format!("--context must be odd, got {}", a.context)).into());
    }
    let cfg = MfccConfig {
        sample_rate: a.sample_rate,
        context_frames: a.context,
        ..MfccConfig::default()
    };
    let frontend = Mfcc::new(cfg).map_err(|e| UsageError(e.to_string()))?;
    let inputs = wav_inputs(&a.wav)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;

    let dims: Vec<(usize, usize)> = inputs
        .par_iter()
        .map(|path| -> Result<(usize, usize)> {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .with_context(|| format!("{} has no UTF-8 file stem", path.display()))?;
            let samples =
                read_wav(path, a.sample_rate).with_context(|| path.display().to_string())?;
            let m = frontend
                .features(&samples, stem)
                .and_then(|m| splice(&m, a.context))
                .with_context(|| path.display().to_string())?;
            let out = a.out.join(format!("{stem}.afpr"));
            write_features_file(&m, &out).with_context(|| format!("writing {}", out.display()))?;
            log::info!("{}: {} frames", path.display(), m.n_frames());
            Ok((m.n_frames(), m.dim()))
        })
        .collect::<Result<_>>()?;
    let frames: usize = dims.iter().map(|d| d.0).sum();
    println!(
        "wrote {} feature files ({frames} frames, dim {})",
        dims.len(),
        dims[0].1
    );
    Ok(())
}

fn parse_drop_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(String::from)
        .collect()
}

pub fn label(a: LabelArgs) -> Result<()> {
    let inventory = AfInventory::standard();
    let map = match &a.af_map {
        Some(p) => load_af_map_file(p, &inventory).with_context(|| p.display().to_string())?,
        None => AfMap::timit39(),
    };
    let drop = parse_drop_list(&a.drop);
    let manifest =
        read_manifest_file(&a.manifest).with_context(|| a.manifest.display().to_string())?;
    let entries: Vec<_> = match a.split {
        Some(s) => manifest.split(s).collect(),
        None => manifest.entries.iter().collect(),
    };
    if entries.is_empty() {
        bail!("{}: no utterances selected", a.manifest.display());
    }

    let labeled: Vec<Result<(LabeledFrameSet, LabelCounts)>> = entries
        .par_iter()
        .map(|e| -> Result<_> {
            let feats = read_features_file(&e.feature_path)
                .with_context(|| e.feature_path.display().to_string())?;
            let file = File::open(&e.alignment_path)
                .with_context(|| e.alignment_path.display().to_string())?;
            let align =
                read_alignment(BufReader::new(file), e.utterance_id.as_str(), a.sample_rate)
                    .with_context(|| e.alignment_path.display().to_string())?;
            label_utterance(&feats, &align, &map, &drop)
                .with_context(|| format!("utterance {}", e.utterance_id))
        })
        .collect();

    // report every unmapped phone in the corpus at once
    let mut unmapped = BTreeSet::new();
    for r in &labeled {
        if let Err(e) = r {
            if let Some(afprobe_core::Error::UnmappedPhones(p)) = e.downcast_ref() {
                unmapped.extend(p.iter().cloned());
            }
        }
    }
    if !unmapped.is_empty() {
        return Err(afprobe_core::Error::UnmappedPhones(
            unmapped.into_iter().collect(),
        ))
        .context(a.manifest.display().to_string());
    }

    let mut total = LabelCounts::default();
    let mut set: Option<LabeledFrameSet> = None;
    for r in labeled {
        let (part, counts) = r?;
        total.kept += counts.kept;
        total.dropped += counts.dropped;
        total.out_of_segment += counts.out_of_segment;
        match &mut set {
            Some(s) => s.append(part)?,
            None => set = Some(part),
        }
    }
    let mut set = set.expect("at least one entry");
    set.drop_list = drop;
    if set.is_empty() {
        return Err(afprobe_core::Error::Empty(
            "no frames survived labeling".into(),
        ))
        .context(a.manifest.display().to_string());
    }
    write_labeled_file(&set, &inventory, &a.out)
        .with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "labeled {} frames from {} utterances ({} dropped, {} outside segments)",
        total.kept,
        set.utterances.len(),
        total.dropped,
        total.out_of_segment
    );
    Ok(())
}

pub fn train_probe(a: TrainArgs, seed: u64) -> Result<()> {
    let inventory = AfInventory::standard();
    let mut train =
        read_labeled_file(&a.train, &inventory).with_context(|| a.train.display().to_string())?;
    if let Some(cap) = a.max_frames_per_utt {
        if cap == 0 {
            return Err(UsageError("--max-frames-per-utt must be positive".into()).into());
        }
        train = train.cap_per_utterance(cap);
    }
    let cfg = ProbeConfig {
        alpha: a.alpha,
        epochs: a.epochs,
        min_updates: a.min_updates,
        seed,
        shuffle: !a.no_shuffle,
    };
    let probe = fit_probe(&train, &inventory, &cfg)?;
    write_probe_file(&probe, &a.out).with_context(|| format!("writing {}", a.out.display()))?;

    println!(
        "trained on {} frames x {} dims, {} epochs",
        train.len(),
        train.dim(),
        cfg.effective_epochs(train.len())
    );
    for (feature, block) in inventory.features().iter().zip(&probe.blocks) {
        let state = match block.status {
            BlockStatus::Untrainable { class } => {
                format!("untrainable, always {}", feature.classes[class as usize])
            }
            BlockStatus::Trained => {
                let missing: Vec<&str> = feature
                    .classes
                    .iter()
                    .zip(&block.trained)
                    .filter(|(_, &t)| !t)
                    .map(|(c, _)| c.as_str())
                    .collect();
                if missing.is_empty() {
                    "trained".to_string()
                } else {
                    format!("trained, no data for {}", missing.join(" "))
                }
            }
        };
        println!("  {:<8} {state}", feature.name);
    }
    Ok(())
}

pub fn eval_probe(a: EvalArgs) -> Result<()> {
    let inventory = AfInventory::standard();
    let probe =
        read_probe_file(&a.probe, &inventory).with_context(|| a.probe.display().to_string())?;
    let test =
        read_labeled_file(&a.test, &inventory).with_context(|| a.test.display().to_string())?;
    let report = probe_report(&probe, &test, &inventory)?;
    if let Some(path) = &a.report {
        write_json(&report, path)?;
    }
    println!("{:<8} {:>8}", "feature", "macro-F1");
    for f in &report.features {
        println!("{:<8} {:>8.3}", f.feature, f.macro_f1);
    }
    println!("{:<8} {:>8.3}", "Avg", report.averaged);
    println!("{:<8} {:>8.3}", "Std", report.std);
    Ok(())
}

pub fn per(a: PerArgs) -> Result<()> {
    let load = |p: &Path| -> Result<_> {
        let f = File::open(p).with_context(|| p.display().to_string())?;
        read_trn(BufReader::new(f)).with_context(|| p.display().to_string())
    };
    let report = per_from_transcripts(&load(&a.reference)?, &load(&a.hyp)?)?;
    if let Some(path) = &a.report {
        write_json(&report, path)?;
    }
    let pct = |n: usize| 100.0 * n as f64 / report.n_ref as f64;
    println!("%PER          {:6.2}", 100.0 * report.per);
    println!("%substitution {:6.2}", pct(report.substitutions));
    println!("%deletion     {:6.2}", pct(report.deletions));
    println!("%insertion    {:6.2}", pct(report.insertions));
    println!("reference phones {}", report.n_ref);
    Ok(())
}

pub fn correlate(a: CorrelateArgs) -> Result<()> {
    let systems = a
        .inputs
        .iter()
        .map(|p| load_system(p).with_context(|| p.display().to_string()))
        .collect::<Result<Vec<_>>>()?;
    let c = correlate_report(&systems)?;
    if let Some(path) = &a.report {
        write_json(&c, path)?;
    }
    if let Some(path) = &a.csv {
        fs::write(path, c.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{:<16} {:>8} {:>8}", "system", "Avg F1", "%PER");
    for s in &c.systems {
        println!(
            "{:<16} {:>8.3} {:>8.2}",
            s.name,
            s.averaged_f1,
            100.0 * s.per
        );
    }
    println!("r = {:.4}  |r| = {:.3}", c.r, c.abs_r);
    Ok(())
}

pub fn loss_check(a: LossCheckArgs) -> Result<()> {
    if a.seeds == 0 {
        return Err(UsageError("--seeds must be positive".into()).into());
    }
    let rows = run_suite(a.seeds)?;
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &rows {
        let verdict = if r.passed { "pass" } else { "FAIL" };
        println!("{verdict}  {:<width$}  {}", r.name, r.detail);
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(afprobe_core::Error::Internal(format!(
            "{failed} of {} checks failed",
            rows.len()
        ))
        .into());
    }
    Ok(())
}
