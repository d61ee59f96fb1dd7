//! 39-dimensional MFCC baseline with optional context splicing.
//!
//! Pipeline: pre-emphasis, Hamming window, power spectrum, triangular mel
//! filterbank (HTK mel scale, 0 Hz to Nyquist), floored natural log,
//! orthonormal DCT-II keeping c0..c(n_ceps-1), then regression deltas and
//! delta-deltas with edge replication. No liftering, no mean normalisation.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{s, Array2, ArrayView2};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::store::FeatureMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MfccConfig {
    pub sample_rate: u32,
    /// Window length in seconds.
    pub window_len: f64,
    /// Hop in seconds.
    pub hop: f64,
    pub n_fft: usize,
    pub n_mels: usize,
    pub n_ceps: usize,
    pub pre_emphasis: f64,
    /// Half-width of the delta regression window, in frames.
    pub delta_window: usize,
    pub context_frames: usize,
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            sample_rate: 16000,
            window_len: 0.025,
            hop: 0.010,
            n_fft: 512,
            n_mels: 26,
            n_ceps: 13,
            pre_emphasis: 0.97,
            delta_window: 2,
            context_frames: 5,
            log_floor: 1e-10,
        }
    }
}

impl MfccConfig {
    pub fn window_samples(&self) -> usize {
        (self.window_len * f64::from(self.sample_rate)).round() as usize
    }

    pub fn hop_samples(&self) -> usize {
        (self.hop * f64::from(self.sample_rate)).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::invalid("sample_rate must be positive"));
        }
        if !(self.hop > 0.0 && self.window_len >= self.hop) {
            return Err(Error::invalid("require window_len >= hop > 0"));
        }
        if self.hop_samples() == 0 {
            return Err(Error::invalid("hop is shorter than one sample"));
        }
        if self.n_fft < self.window_samples() {
            return Err(Error::invalid(format!(
                "n_fft {} is shorter than the window ({} samples)",
                self.n_fft,
                self.window_samples()
            )));
        }
        if self.n_ceps == 0 || self.n_ceps > self.n_mels {
            return Err(Error::invalid("require 0 < n_ceps <= n_mels"));
        }
        if self.context_frames.is_multiple_of(2) {
            return Err(Error::invalid("context_frames must be odd"));
        }
        if self.log_floor.is_nan() || self.log_floor <= 0.0 {
            return Err(Error::invalid("log_floor must be positive"));
        }
        Ok(())
    }
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Reusable extractor holding the window, filterbank, DCT basis and FFT plan.
pub struct Mfcc {
    cfg: MfccConfig,
    window: Vec<f64>,
    /// n_mels x (n_fft/2 + 1)
    filterbank: Array2<f64>,
    /// n_ceps x n_mels
    dct: Array2<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl Mfcc {
    pub fn new(cfg: MfccConfig) -> Result<Self> {
        cfg.validate()?;
        let win = cfg.window_samples();
        let window = (0..win)
            .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (win as f64 - 1.0)).cos())
            .collect();

        let n_bins = cfg.n_fft / 2 + 1;
        let nyquist = f64::from(cfg.sample_rate) / 2.0;
        let mel_max = hz_to_mel(nyquist);
        let edges: Vec<f64> = (0..cfg.n_mels + 2)
            .map(|i| mel_to_hz(mel_max * i as f64 / (cfg.n_mels + 1) as f64))
            .collect();
        let mut filterbank = Array2::zeros((cfg.n_mels, n_bins));
        for m in 0..cfg.n_mels {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            for k in 0..n_bins {
                let f = k as f64 * f64::from(cfg.sample_rate) / cfg.n_fft as f64;
                let w = ((f - lo) / (mid - lo)).min((hi - f) / (hi - mid));
                filterbank[[m, k]] = w.max(0.0);
            }
        }

        let m_f = cfg.n_mels as f64;
        let dct = Array2::from_shape_fn((cfg.n_ceps, cfg.n_mels), |(k, m)| {
            let scale = if k == 0 {
                (1.0 / m_f).sqrt()
            } else {
                (2.0 / m_f).sqrt()
            };
            scale * (PI * k as f64 * (m as f64 + 0.5) / m_f).cos()
        });

        let fft = FftPlanner::new().plan_fft_forward(cfg.n_fft);
        Ok(Mfcc {
            cfg,
            window,
            filterbank,
            dct,
            fft,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.cfg
    }

    pub fn n_frames(&self, n_samples: usize) -> usize {
        let win = self.cfg.window_samples();
        if n_samples < win {
            0
        } else {
            (n_samples - win) / self.cfg.hop_samples() + 1
        }
    }

    /// Static cepstra c0..c(n_ceps-1), one row per frame, in 64-bit.
    pub fn static_cepstra(&self, samples: &[f64]) -> Result<Array2<f64>> {
        let win = self.cfg.window_samples();
        let hop = self.cfg.hop_samples();
        if samples.len() < win {
            return Err(Error::invalid(format!(
                "input has {} samples, shorter than one {}-sample window",
                samples.len(),
                win
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        let a = self.cfg.pre_emphasis;
        let emphasized: Vec<f64> = std::iter::once(samples[0])
            .chain(samples.windows(2).map(|w| w[1] - a * w[0]))
            .collect();

        let n_frames = self.n_frames(samples.len());
        let n_bins = self.cfg.n_fft / 2 + 1;
        let mut out = Array2::zeros((n_frames, self.cfg.n_ceps));
        let mut buf = vec![Complex::new(0.0, 0.0); self.cfg.n_fft];
        let mut power = vec![0.0; n_bins];
        let mut log_mel = vec![0.0; self.cfg.n_mels];
        for f in 0..n_frames {
            let frame = &emphasized[f * hop..f * hop + win];
            for (slot, (x, w)) in buf.iter_mut().zip(frame.iter().zip(&self.window)) {
                *slot = Complex::new(x * w, 0.0);
            }
            buf[win..].fill(Complex::new(0.0, 0.0));
            self.fft.process(&mut buf);
            for (p, c) in power.iter_mut().zip(&buf) {
                *p = c.norm_sqr() / self.cfg.n_fft as f64;
            }
            for (m, lm) in log_mel.iter_mut().enumerate() {
                let energy: f64 = self
                    .filterbank
                    .row(m)
                    .iter()
                    .zip(&power)
                    .map(|(w, p)| w * p)
                    .sum();
                *lm = energy.max(self.cfg.log_floor).ln();
            }
            for k in 0..self.cfg.n_ceps {
                out[[f, k]] = self
                    .dct
                    .row(k)
                    .iter()
                    .zip(&log_mel)
                    .map(|(d, l)| d * l)
                    .sum();
            }
        }
        Ok(out)
    }

    /// Static cepstra followed by deltas and delta-deltas (3 * n_ceps columns).
    pub fn cepstra(&self, samples: &[f64]) -> Result<Array2<f64>> {
        let stat = self.static_cepstra(samples)?;
        let d1 = deltas(stat.view(), self.cfg.delta_window);
        let d2 = deltas(d1.view(), self.cfg.delta_window);
        let n = self.cfg.n_ceps;
        let mut out = Array2::zeros((stat.nrows(), 3 * n));
        out.slice_mut(s![.., 0..n]).assign(&stat);
        out.slice_mut(s![.., n..2 * n]).assign(&d1);
        out.slice_mut(s![.., 2 * n..]).assign(&d2);
        Ok(out)
    }

    /// Unspliced 39-dimensional features in the interchange format.
    pub fn features(&self, samples: &[f64], utterance_id: &str) -> Result<FeatureMatrix> {
        let data = self.cepstra(samples)?.mapv(|v| v as f32);
        FeatureMatrix::new(
            utterance_id,
            (1.0 / self.cfg.hop) as f32,
            (self.cfg.window_len / 2.0) as f32,
            data,
        )
    }
}

/// MFCC features of `samples` (no splicing).
pub fn mfcc(samples: &[f64], cfg: &MfccConfig, utterance_id: &str) -> Result<FeatureMatrix> {
    Mfcc::new(cfg.clone())?.features(samples, utterance_id)
}

/// Regression deltas over `+-window` frames with edge replication.
pub fn deltas(x: ArrayView2<f64>, window: usize) -> Array2<f64> {
    let n = x.nrows();
    let mut out = Array2::zeros(x.raw_dim());
    if n == 0 || window == 0 {
        return out;
    }
    let denom = 2.0 * (1..=window).map(|k| (k * k) as f64).sum::<f64>();
    let last = n as isize - 1;
    let at = |i: isize| i.clamp(0, last) as usize;
    for t in 0..n {
        for k in 1..=window {
            let ahead = x.row(at(t as isize + k as isize));
            let behind = x.row(at(t as isize - k as isize));
            let mut row = out.row_mut(t);
            for ((o, a), b) in row.iter_mut().zip(ahead).zip(behind) {
                *o += k as f64 * (a - b);
            }
        }
    }
    out /= denom;
    out
}

/// Concatenates each frame with its `(context - 1) / 2` neighbours on each
/// side, replicating edge frames.
pub fn splice(m: &FeatureMatrix, context_frames: usize) -> Result<FeatureMatrix> {
    if context_frames.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "context must be odd, got {context_frames}"
        )));
    }
    let half = (context_frames / 2) as isize;
    let (n, dim) = m.data.dim();
    let mut data = Array2::zeros((n, dim * context_frames));
    if n > 0 {
        let last = n as isize - 1;
        for i in 0..n {
            for (slot, off) in (-half..=half).enumerate() {
                let src = (i as isize + off).clamp(0, last) as usize;
                data.slice_mut(s![i, slot * dim..(slot + 1) * dim])
                    .assign(&m.data.row(src));
            }
        }
    }
    FeatureMatrix::new(m.utterance_id.clone(), m.frame_rate, m.offset, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sine(freq: f64, seconds: f64, amp: f64) -> Vec<f64> {
        let n = (16000.0 * seconds) as usize;
        (0..n)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / 16000.0).sin())
            .collect()
    }

    #[test]
    fn framing_arithmetic() {
        let m = mfcc(&vec![0.1; 4000], &MfccConfig::default(), "u").unwrap();
        assert_eq!(m.n_frames(), 23);
        assert_eq!(m.dim(), 39);
        assert_eq!(m.frame_rate, 100.0);
        assert_eq!(m.offset, 0.0125);
    }

    #[test]
    fn too_short_input() {
        assert!(mfcc(&vec![0.0; 399], &MfccConfig::default(), "u").is_err());
        assert_eq!(
            mfcc(&vec![0.0; 400], &MfccConfig::default(), "u")
                .unwrap()
                .n_frames(),
            1
        );
    }

    #[test]
    fn silence_is_constant() {
        let m = mfcc(&vec![0.0; 3200], &MfccConfig::default(), "u").unwrap();
        let first = m.data.row(0).to_owned();
        for row in m.data.rows() {
            assert_eq!(row, first);
        }
        assert!(m.data.slice(s![.., 13..]).iter().all(|&v| v == 0.0));
        // log floor everywhere: c0 = sqrt(26) * ln(1e-10)
        let c0 = (26f64).sqrt() * (1e-10f64).ln();
        assert!((f64::from(first[0]) - c0).abs() < 1e-4);
    }

    #[test]
    fn stationary_sine_whole_periods_per_hop() {
        // 400 Hz: the 160-sample hop spans exactly 4 periods
        let ex = Mfcc::new(MfccConfig::default()).unwrap();
        let c = ex.static_cepstra(&sine(400.0, 1.0, 1.0)).unwrap();
        let interior: Vec<f64> = c.column(0).iter().skip(1).copied().collect();
        for v in &interior {
            assert!((v - interior[0]).abs() < 1e-6, "{v} vs {}", interior[0]);
        }
    }

    #[test]
    fn stationary_sine_440_recurs_every_five_frames() {
        // 440 Hz advances 4.4 periods per hop, so frame phase repeats every 5 frames
        let ex = Mfcc::new(MfccConfig::default()).unwrap();
        let c = ex.static_cepstra(&sine(440.0, 1.0, 1.0)).unwrap();
        assert_eq!(c.nrows(), 98);
        for i in 1..c.nrows() - 5 {
            assert!((c[[i, 0]] - c[[i + 5, 0]]).abs() < 1e-6);
        }
    }

    #[test]
    fn amplitude_scaling_shifts_only_c0() {
        let ex = Mfcc::new(MfccConfig::default()).unwrap();
        let mut x = sine(300.0, 0.3, 0.5);
        for (i, v) in x.iter_mut().enumerate() {
            *v += 0.2 * (2.0 * PI * 2100.0 * i as f64 / 16000.0).sin()
                + 0.01 * ((i * 7919) % 13) as f64;
        }
        let scaled: Vec<f64> = x.iter().map(|v| v * 3.0).collect();
        let a = ex.static_cepstra(&x).unwrap();
        let b = ex.static_cepstra(&scaled).unwrap();
        let shift = b[[0, 0]] - a[[0, 0]];
        // orthonormal c0 picks up sqrt(n_mels) * ln(s^2)
        assert!((shift - (26f64).sqrt() * 9f64.ln()).abs() < 1e-6);
        for i in 0..a.nrows() {
            assert!((b[[i, 0]] - a[[i, 0]] - shift).abs() < 1e-6);
            for k in 1..13 {
                assert!((b[[i, k]] - a[[i, k]]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn deltas_of_linear_ramp() {
        let x = Array2::from_shape_fn((9, 1), |(i, _)| i as f64);
        let d = deltas(x.view(), 2);
        for t in 2..7 {
            assert!((d[[t, 0]] - 1.0).abs() < 1e-12);
        }
        // replicated edges flatten the slope at the ends
        assert!((d[[0, 0]] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn splice_identity_and_edges() {
        let m = FeatureMatrix::new("u", 100.0, 0.0, array![[0.0f32], [1.0], [2.0]]).unwrap();
        assert_eq!(splice(&m, 1).unwrap(), m);
        let s5 = splice(&m, 5).unwrap();
        assert_eq!(s5.data.row(0).to_vec(), vec![0.0, 0.0, 0.0, 1.0, 2.0]);
        assert_eq!(s5.data.row(2).to_vec(), vec![0.0, 1.0, 2.0, 2.0, 2.0]);
        assert!(splice(&m, 4).is_err());
    }
}
