//! Synthetic speech-like corpus: phones rendered as harmonic stacks or
//! noise, with sample-exact alignments and a manifest.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BIN: &str = env!("CARGO_BIN_EXE_afprobe");
pub const SAMPLE_RATE: u32 = 16000;

enum Sound {
    Voiced { formants: [f64; 2] },
    Noise { gain: f64, voiced: bool },
    Silence,
}

const PHONES: [(&str, Sound); 8] = [
    (
        "iy",
        Sound::Voiced {
            formants: [280.0, 2250.0],
        },
    ),
    (
        "aa",
        Sound::Voiced {
            formants: [730.0, 1090.0],
        },
    ),
    (
        "uw",
        Sound::Voiced {
            formants: [310.0, 870.0],
        },
    ),
    (
        "m",
        Sound::Voiced {
            formants: [250.0, 1200.0],
        },
    ),
    (
        "s",
        Sound::Noise {
            gain: 0.3,
            voiced: false,
        },
    ),
    (
        "z",
        Sound::Noise {
            gain: 0.2,
            voiced: true,
        },
    ),
    (
        "f",
        Sound::Noise {
            gain: 0.08,
            voiced: false,
        },
    ),
    ("sil", Sound::Silence),
];

fn render(sound: &Sound, n: usize, rng: &mut ChaCha8Rng, t0: usize) -> Vec<f64> {
    let f0 = 120.0;
    let fs = f64::from(SAMPLE_RATE);
    (0..n)
        .map(|i| {
            let t = (t0 + i) as f64 / fs;
            match sound {
                Sound::Voiced { formants } => (1..30)
                    .map(|k| {
                        let f = k as f64 * f0;
                        let w = (-((f - formants[0]) / 150.0).powi(2)).exp()
                            + 0.5 * (-((f - formants[1]) / 200.0).powi(2)).exp();
                        0.2 * w * (2.0 * PI * f * t).sin()
                    })
                    .sum(),
                Sound::Noise { gain, voiced } => {
                    let buzz = if *voiced {
                        0.1 * (2.0 * PI * f0 * t).sin()
                    } else {
                        0.0
                    };
                    gain * rng.random_range(-1.0..1.0) + buzz
                }
                Sound::Silence => 0.002 * rng.random_range(-1.0..1.0),
            }
        })
        .collect()
}

pub struct Corpus {
    pub root: PathBuf,
    pub ids: Vec<String>,
}

/// Writes `n` utterances under `root/{wav,align}` plus `root/manifest.tsv`
/// pointing at `features_dir/<id>.afpr`; the first 70% are train, the rest test.
pub fn write_corpus(root: &Path, n: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fs::create_dir_all(root.join("wav")).unwrap();
    fs::create_dir_all(root.join("align")).unwrap();
    let mut ids = Vec::new();
    for u in 0..n {
        let id = format!("utt{u:02}");
        let mut samples = Vec::new();
        let mut align = String::new();
        let n_phones = rng.random_range(6..10);
        for p in 0..n_phones {
            let idx = if p == 0 || p == n_phones - 1 {
                7
            } else {
                rng.random_range(0..7)
            };
            let len = rng.random_range(800..2400);
            let start = samples.len();
            samples.extend(render(&PHONES[idx].1, len, &mut rng, start));
            align.push_str(&format!("{start} {} {}\n", start + len, PHONES[idx].0));
        }
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: SAMPLE_RATE,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w =
            hound::WavWriter::create(root.join("wav").join(format!("{id}.wav")), spec).unwrap();
        for s in samples {
            w.write_sample((s.clamp(-1.0, 1.0) * 32767.0).round() as i16)
                .unwrap();
        }
        w.finalize().unwrap();
        fs::write(root.join("align").join(format!("{id}.phn")), align).unwrap();
        ids.push(id);
    }
    Corpus {
        root: root.to_path_buf(),
        ids,
    }
}

impl Corpus {
    /// Manifest for features living in `features_dir` (relative to the manifest).
    pub fn write_manifest(&self, path: &Path, features_dir: &str, align_dir: &str) {
        let n_train = self.ids.len() * 7 / 10;
        let mut text = String::from("utterance_id\tfeatures\talignment\tsplit\n");
        for (i, id) in self.ids.iter().enumerate() {
            let split = if i < n_train { "train" } else { "test" };
            text.push_str(&format!(
                "{id}\t{features_dir}/{id}.afpr\t{align_dir}/{id}.phn\t{split}\n"
            ));
        }
        fs::write(path, text).unwrap();
    }
}

pub fn afprobe(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("AFPROBE_THREADS")
        .output()
        .expect("run afprobe")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn fixture(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(rel)
        .display()
        .to_string()
}

pub fn fixture_list(corpus: &str) -> String {
    ["mfcc", "cpc", "wav2vec2", "hubert"]
        .map(|s| fixture(&format!("{corpus}/{s}.json")))
        .join(",")
}

/// Runs mfcc, label (train and test), train-probe and eval-probe into
/// `out`, returning every stdout in order.
pub fn run_pipeline(
    corpus: &Corpus,
    out: &Path,
    threads: usize,
    extra_train: &[&str],
) -> Vec<String> {
    fs::create_dir_all(out).unwrap();
    let rel_align = pathdiff(&corpus.root.join("align"), out);
    corpus.write_manifest(&out.join("manifest.tsv"), "feats", &rel_align);
    let t = threads.to_string();
    let p = |name: &str| out.join(name).display().to_string();
    let wav = corpus.root.join("wav").display().to_string();
    let steps: Vec<Vec<String>> = vec![
        vec![
            "mfcc".into(),
            "--wav".into(),
            wav,
            "--out".into(),
            p("feats"),
        ],
        vec![
            "label".into(),
            "--manifest".into(),
            p("manifest.tsv"),
            "--split".into(),
            "train".into(),
            "--out".into(),
            p("train.aflb"),
        ],
        vec![
            "label".into(),
            "--manifest".into(),
            p("manifest.tsv"),
            "--split".into(),
            "test".into(),
            "--out".into(),
            p("test.aflb"),
        ],
        [
            vec![
                "train-probe".into(),
                "--train".into(),
                p("train.aflb"),
                "--out".into(),
                p("probe.afpb"),
            ],
            extra_train.iter().map(|s| s.to_string()).collect(),
        ]
        .concat(),
        vec![
            "eval-probe".into(),
            "--probe".into(),
            p("probe.afpb"),
            "--test".into(),
            p("test.aflb"),
            "--report".into(),
            p("report.json"),
        ],
    ];
    let mut outputs = Vec::new();
    for mut args in steps {
        args.extend(["--threads".to_string(), t.clone()]);
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = afprobe(&argv);
        assert!(o.status.success(), "{argv:?}: {}", stderr(&o));
        outputs.push(stdout(&o));
    }
    outputs
}

/// `target` relative to `base`, for two directories under the same root.
fn pathdiff(target: &Path, base: &Path) -> String {
    let t: Vec<_> = target.components().collect();
    let b: Vec<_> = base.components().collect();
    let common = t.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let mut parts: Vec<String> = vec!["..".into(); b.len() - common];
    parts.extend(
        t[common..]
            .iter()
            .map(|c| c.as_os_str().to_string_lossy().into_owned()),
    );
    parts.join("/")
}

/// Every file under `dir` (recursively) as (relative path, bytes), sorted.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for e in fs::read_dir(dir).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                let rel = path.strip_prefix(base).unwrap().display().to_string();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
