//! One-sided amplitude spectra and harmonic bookkeeping.

use std::fmt;
use std::str::FromStr;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::{Error, Result};

/// Harmonic peak search half-width used when none is given.
pub const DEFAULT_TOL_BINS: usize = 2;

/// A harmonic counts as present when its peak exceeds this multiple of the
/// median spectral magnitude.
pub const NOISE_FLOOR_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Window::Rectangular => f.write_str("none"),
            Window::Hann => f.write_str("hann"),
        }
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "rect" | "rectangular" => Ok(Window::Rectangular),
            "hann" => Ok(Window::Hann),
            other => Err(Error::invalid(format!("unknown window '{other}' (none | hann)"))),
        }
    }
}

/// One-sided spectrum on the grid `k·df`, `k = 0..=N/2`. Magnitudes are
/// sinusoid amplitudes (a unit sine on a bin reads 1) until normalised.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub df: f64,
    pub window: Window,
    pub normalized: bool,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn nyquist(&self) -> f64 {
        self.frequencies.last().copied().unwrap_or(0.0)
    }

    /// Largest magnitude away from DC.
    pub fn max_oscillatory(&self) -> f64 {
        self.magnitudes.iter().skip(1).fold(0.0, |m, &x| m.max(x))
    }

    /// Linear interpolation of the magnitude at `f`; zero outside the grid.
    pub fn magnitude_at(&self, f: f64) -> f64 {
        if f < 0.0 || f > self.nyquist() || self.is_empty() {
            return 0.0;
        }
        let x = f / self.df;
        let i = (x.floor() as usize).min(self.len() - 1);
        if i + 1 >= self.len() {
            return self.magnitudes[i];
        }
        let s = x - i as f64;
        self.magnitudes[i] * (1.0 - s) + self.magnitudes[i + 1] * s
    }
}

/// Raw two-sided DFT `X_k = Σ x_n e^{−2πikn/N}`.
pub fn dft(samples: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn window_weights(window: Window, n: usize) -> Vec<f64> {
    match window {
        Window::Rectangular => vec![1.0; n],
        Window::Hann => (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
            .collect(),
    }
}

/// Amplitude spectrum of a uniformly sampled series.
pub fn fft_spectrum(samples: &[f64], dt: f64, window: Window) -> Result<Spectrum> {
    let n = samples.len();
    if n < 8 {
        return Err(Error::invalid(format!("need at least 8 samples, got {n}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("samples contain non-finite values"));
    }
    let w = window_weights(window, n);
    let gain: f64 = w.iter().sum();
    let weighted: Vec<f64> = samples.iter().zip(&w).map(|(x, w)| x * w).collect();
    let x = dft(&weighted);

    let half = n / 2;
    let df = 1.0 / (n as f64 * dt);
    let frequencies = (0..=half).map(|k| k as f64 * df).collect();
    let magnitudes = (0..=half)
        .map(|k| {
            let one_sided = if k == 0 || (n.is_multiple_of(2) && k == half) {
                1.0
            } else {
                2.0
            };
            one_sided * x[k].norm() / gain
        })
        .collect();
    Ok(Spectrum {
        frequencies,
        magnitudes,
        df,
        window,
        normalized: false,
    })
}

/// [`fft_spectrum`] for a timestamped series; rejects non-uniform spacing.
pub fn spectrum_of_series(times: &[f64], values: &[f64], window: Window) -> Result<Spectrum> {
    if times.len() != values.len() {
        return Err(Error::invalid("times and values differ in length"));
    }
    if times.len() < 8 {
        return Err(Error::invalid(format!("need at least 8 samples, got {}", times.len())));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for (i, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
            return Err(Error::invalid(format!(
                "samples are not uniformly spaced at index {i} (step {} vs mean {dt})",
                w[1] - w[0]
            )));
        }
    }
    fft_spectrum(values, dt, window)
}

/// Trailing part of a series covering at most `duration`, trimmed to a power
/// of two samples.
pub fn steady_window(samples: &[f64], dt: f64, duration: f64) -> &[f64] {
    let wanted = ((duration / dt) + 1e-9).floor() as usize;
    let available = wanted.min(samples.len());
    if available == 0 {
        return &samples[samples.len()..];
    }
    let n = 1usize << (usize::BITS - 1 - available.leading_zeros());
    &samples[samples.len() - n..]
}

/// Divide every magnitude by the largest non-DC magnitude.
pub fn normalize_by_max(s: &Spectrum) -> Result<Spectrum> {
    let max = s.max_oscillatory();
    if !(max > 0.0) {
        return Err(Error::invalid(
            "cannot normalise a spectrum with no oscillatory content",
        ));
    }
    Ok(Spectrum {
        magnitudes: s.magnitudes.iter().map(|m| m / max).collect(),
        normalized: true,
        ..s.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub k: usize,
    pub f_peak: f64,
    pub magnitude: f64,
    pub present: bool,
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Magnitude below which a peak is treated as absent.
pub fn noise_floor(s: &Spectrum) -> f64 {
    NOISE_FLOOR_FACTOR * median(&s.magnitudes[1.min(s.len())..])
}

/// Largest bin within `±tol_bins` of `f`: `(bin, magnitude)`.
fn local_peak(s: &Spectrum, f: f64, tol_bins: usize) -> Option<(usize, f64)> {
    let centre = (f / s.df).round() as usize;
    if centre >= s.len() {
        return None;
    }
    let lo = centre.saturating_sub(tol_bins).max(1);
    let hi = (centre + tol_bins).min(s.len() - 1);
    (lo..=hi)
        .map(|i| (i, s.magnitudes[i]))
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

/// Peak near each multiple `k·f0`, `k = 1..=k_max`. Multiples beyond the
/// Nyquist frequency are reported absent with zero magnitude.
pub fn find_harmonics(s: &Spectrum, f0: f64, k_max: usize, tol_bins: usize) -> Vec<Harmonic> {
    let floor = noise_floor(s);
    (1..=k_max)
        .map(|k| {
            let target = k as f64 * f0;
            match local_peak(s, target, tol_bins) {
                Some((bin, magnitude)) => Harmonic {
                    k,
                    f_peak: s.frequencies[bin],
                    magnitude,
                    present: magnitude > floor,
                },
                None => Harmonic {
                    k,
                    f_peak: target,
                    magnitude: 0.0,
                    present: false,
                },
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicComparison {
    pub k: usize,
    /// `f_b − f_a` of the two peaks.
    pub df: f64,
    /// Normalised height of `b` over that of `a`.
    pub ratio: f64,
}

/// Regrid `s` onto the frequency grid of `grid` by linear interpolation.
pub fn resample_onto(s: &Spectrum, grid: &Spectrum) -> Spectrum {
    Spectrum {
        frequencies: grid.frequencies.clone(),
        magnitudes: grid.frequencies.iter().map(|&f| s.magnitude_at(f)).collect(),
        df: grid.df,
        window: s.window,
        normalized: s.normalized,
    }
}

/// Per-harmonic frequency offset and height ratio between two spectra, each
/// normalised by its own maximum. The coarser spectrum is interpolated onto
/// the finer grid first.
pub fn compare_spectra(a: &Spectrum, b: &Spectrum, f0: f64, k_max: usize) -> Result<Vec<HarmonicComparison>> {
    let (a, b) = if (a.df - b.df).abs() <= 1e-12 * a.df.max(b.df) {
        (a.clone(), b.clone())
    } else if a.df < b.df {
        (a.clone(), resample_onto(b, a))
    } else {
        (resample_onto(a, b), b.clone())
    };
    let a = normalize_by_max(&a)?;
    let b = normalize_by_max(&b)?;
    let ha = find_harmonics(&a, f0, k_max, DEFAULT_TOL_BINS);
    let hb = find_harmonics(&b, f0, k_max, DEFAULT_TOL_BINS);
    Ok(ha
        .iter()
        .zip(&hb)
        .map(|(x, y)| HarmonicComparison {
            k: x.k,
            df: y.f_peak - x.f_peak,
            ratio: y.magnitude / x.magnitude,
        })
        .collect())
}
