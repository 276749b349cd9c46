//! Oscillation frequencies of `|c_c(t)|²` from a sampled trajectory.

use std::f64::consts::TAU;

use rustfft::{num_complex::Complex, FftPlanner};

use super::Trajectory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeatOptions {
    /// Peaks below this fraction of the strongest peak power are dropped.
    pub power_threshold: f64,
    /// Peaks whose amplitude estimate falls below this are dropped.
    pub min_amplitude: f64,
    /// FFT length as a multiple of the next power of two above the sample count.
    pub zero_pad: usize,
    /// Minimum number of samples.
    pub min_samples: usize,
    /// Minimum duration in Rabi periods `2π/ω_g`.
    pub min_periods: f64,
}

impl Default for BeatOptions {
    fn default() -> Self {
        Self {
            power_threshold: 1e-2,
            min_amplitude: 1e-12,
            zero_pad: 4,
            min_samples: 64,
            min_periods: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeatPeak {
    /// Angular frequency.
    pub frequency: f64,
    /// Interpolated spectral power of the windowed signal.
    pub power: f64,
    /// Estimated amplitude of the cosine component in `p_c`.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeatSpectrum {
    /// Peaks sorted by frequency.
    pub peaks: Vec<BeatPeak>,
    /// `2π/t_end`.
    pub resolution: f64,
    /// Angular frequency of each FFT bin `0..=L/2`.
    pub frequencies: Vec<f64>,
    /// Power of each bin.
    pub power: Vec<f64>,
}

impl BeatSpectrum {
    /// Strongest peak.
    pub fn dominant(&self) -> Option<&BeatPeak> {
        self.peaks.iter().max_by(|a, b| a.power.total_cmp(&b.power))
    }
}

/// Hann-windowed, zero-padded FFT of `p_c(t) − mean(p_c)`.
pub fn beat_spectrum(traj: &Trajectory, options: &BeatOptions) -> Result<BeatSpectrum> {
    let n = traj.p_c.len();
    if n < options.min_samples.max(3) {
        return Err(Error::Analysis(format!(
            "{n} samples, need at least {}",
            options.min_samples.max(3)
        )));
    }
    let duration = traj.duration();
    let min_duration = options.min_periods * TAU / traj.omega_g;
    if duration < min_duration * (1.0 - 1e-12) {
        return Err(Error::Analysis(format!(
            "trajectory spans {duration}, need at least {min_duration}"
        )));
    }
    let dt = duration / (n - 1) as f64;
    let uneven = traj
        .times
        .windows(2)
        .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0));
    if uneven {
        return Err(Error::Analysis(
            "trajectory is not uniformly sampled".into(),
        ));
    }

    let mean = traj.p_c.iter().sum::<f64>() / n as f64;
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 * (1.0 - (TAU * i as f64 / (n - 1) as f64).cos()))
        .collect();
    let window_sum: f64 = window.iter().sum();

    let len = n.next_power_of_two() * options.zero_pad.max(1);
    let mut buf: Vec<Complex<f64>> = traj
        .p_c
        .iter()
        .zip(&window)
        .map(|(p, w)| Complex::new((p - mean) * w, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(len)
        .collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);

    let half = len / 2;
    let bin = TAU / (len as f64 * dt);
    let power: Vec<f64> = buf[..=half].iter().map(|c| c.norm_sqr()).collect();
    let frequencies: Vec<f64> = (0..=half).map(|k| k as f64 * bin).collect();
    let amplitude = |p: f64| 2.0 * p.sqrt() / window_sum;

    let mut peaks = Vec::new();
    let pmax = power[1..half].iter().copied().fold(0.0, f64::max);
    for k in 1..half {
        let p = power[k];
        if !(p > power[k - 1] && p >= power[k + 1]) {
            continue;
        }
        if p < options.power_threshold * pmax || amplitude(p) < options.min_amplitude {
            continue;
        }
        let (l, c, r) = (power[k - 1].ln(), p.ln(), power[k + 1].ln());
        let denom = l - 2.0 * c + r;
        let (offset, log_peak) = if denom < 0.0 && denom.is_finite() {
            let d = 0.5 * (l - r) / denom;
            (d, c - 0.25 * (l - r) * d)
        } else {
            (0.0, c)
        };
        let peak_power = log_peak.exp();
        peaks.push(BeatPeak {
            frequency: (k as f64 + offset) * bin,
            power: peak_power,
            amplitude: amplitude(peak_power),
        });
    }

    Ok(BeatSpectrum {
        peaks,
        resolution: TAU / duration,
        frequencies,
        power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::WaveFunction;

    fn synthetic(f: impl Fn(f64) -> f64, t_end: f64, dt: f64) -> Trajectory {
        let n = (t_end / dt).round() as usize + 1;
        let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let p_c: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        Trajectory {
            omega_g: 1.0,
            dt,
            p_e: vec![0.0; n],
            p_bath: vec![0.0; n],
            energy: vec![0.0; n],
            snapshots: Vec::new(),
            final_state: WaveFunction::excited(0),
            times,
            p_c,
        }
    }

    #[test]
    fn constant_signal_has_no_peaks() {
        let tr = synthetic(|_| 0.3, 200.0, 0.05);
        let s = beat_spectrum(&tr, &BeatOptions::default()).unwrap();
        assert!(s.peaks.is_empty());
    }

    #[test]
    fn single_tone_is_located_within_resolution() {
        let w = 2.0;
        let tr = synthetic(|t| 0.1 + 1e-3 * (w * t + 0.4).cos(), 130.0, 0.01);
        let s = beat_spectrum(&tr, &BeatOptions::default()).unwrap();
        let d = s.dominant().unwrap();
        assert!(
            (d.frequency - w).abs() < 0.1 * s.resolution,
            "{}",
            d.frequency
        );
        assert!((d.amplitude - 1e-3).abs() < 1e-4);
        assert_eq!(s.peaks.len(), 1);
    }

    #[test]
    fn two_tones_are_resolved() {
        let tr = synthetic(|t| (1.3 * t).cos() + 0.5 * (2.7 * t).cos(), 200.0, 0.02);
        let s = beat_spectrum(&tr, &BeatOptions::default()).unwrap();
        let f: Vec<f64> = s.peaks.iter().map(|p| p.frequency).collect();
        assert_eq!(f.len(), 2, "{f:?}");
        assert!((f[0] - 1.3).abs() < s.resolution);
        assert!((f[1] - 2.7).abs() < s.resolution);
    }

    #[test]
    fn short_or_sparse_trajectories_are_rejected() {
        let tr = synthetic(|t| t.cos(), 50.0, 0.01);
        assert!(matches!(
            beat_spectrum(&tr, &BeatOptions::default()),
            Err(Error::Analysis(_))
        ));
        let tr = synthetic(|t| t.cos(), 200.0, 10.0);
        assert!(matches!(
            beat_spectrum(&tr, &BeatOptions::default()),
            Err(Error::Analysis(_))
        ));
    }
}
