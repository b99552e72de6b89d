//! FMCW intermediate-frequency synthesis, range spectrum and metal-plate
//! calibration.
//!
//! Traces are produced directly in the complex post-mixer form
//! `S[n] = (A₀²/2)·Γ·L·e^{j2π(S τ nΔt + f₀τ)}` with chirp slope `S = B/T_c`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::em::{self, ComplexPermittivity, SlabGeometry, SPEED_OF_LIGHT};
use crate::error::{Result, SdiError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpConfig {
    /// Chirp start frequency `f₀`, Hz.
    pub start_frequency: f64,
    /// Swept bandwidth `B`, Hz.
    pub bandwidth: f64,
    /// Chirp duration `T_c`, s.
    pub chirp_duration: f64,
    /// Samples per chirp `N`.
    pub sample_count: usize,
    /// ADC sampling interval `Δt`, s.
    pub sample_interval: f64,
    /// Transmit amplitude `A₀`, arbitrary linear units.
    pub amplitude: f64,
    /// Complex path loss `L_path`.
    pub path_loss: Complex64,
}

impl Default for ChirpConfig {
    /// 79 GHz start, 1 GHz over 50 µs, 128 samples at 10 MS/s.
    fn default() -> Self {
        ChirpConfig {
            start_frequency: 79e9,
            bandwidth: 1e9,
            chirp_duration: 50e-6,
            sample_count: 128,
            sample_interval: 1e-7,
            amplitude: 1.0,
            path_loss: Complex64::new(1.0, 0.0),
        }
    }
}

impl ChirpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count < 2 {
            return Err(SdiError::invalid("chirp needs at least 2 samples"));
        }
        if !(self.sample_interval > 0.0) {
            return Err(SdiError::invalid("sample interval must be positive"));
        }
        if !(self.bandwidth > 0.0 && self.start_frequency > 0.0) {
            return Err(SdiError::invalid("bandwidth and start frequency must be positive"));
        }
        if self.sample_count as f64 * self.sample_interval > self.chirp_duration * (1.0 + 1e-12) {
            return Err(SdiError::invalid(format!(
                "{} samples at {} s do not fit in a {} s chirp",
                self.sample_count, self.sample_interval, self.chirp_duration
            )));
        }
        if !(self.amplitude.is_finite() && self.path_loss.is_finite()) {
            return Err(SdiError::invalid("amplitude and path loss must be finite"));
        }
        Ok(())
    }

    /// Chirp slope `B/T_c`, Hz/s.
    pub fn slope(&self) -> f64 {
        self.bandwidth / self.chirp_duration
    }

    /// Fractional DFT bin of a target at round-trip delay `tau`.
    pub fn beat_bin(&self, tau: f64) -> f64 {
        self.slope() * tau * self.sample_count as f64 * self.sample_interval
    }

    /// Round-trip delay that lands exactly on bin `k`.
    pub fn delay_for_bin(&self, k: f64) -> f64 {
        k / (self.slope() * self.sample_count as f64 * self.sample_interval)
    }
}

/// One reflected component: complex reflection and round-trip delay (s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoComponent {
    pub reflection: Complex64,
    pub delay: f64,
}

impl EchoComponent {
    pub fn new(reflection: Complex64, delay: f64) -> Result<Self> {
        if !(delay >= 0.0 && delay.is_finite()) {
            return Err(SdiError::invalid(format!("echo delay {delay} s must be non-negative")));
        }
        Ok(EchoComponent { reflection, delay })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IfTrace {
    pub samples: Vec<Complex64>,
}

impl IfTrace {
    /// Euclidean norm of the samples.
    pub fn norm(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Multiplies every sample by `factor`.
    pub fn scale(&mut self, factor: Complex64) {
        for s in &mut self.samples {
            *s *= factor;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeSpectrum {
    pub bins: Vec<Complex64>,
}

/// Superposes the IF response of every echo.
pub fn synth_if_trace(cfg: &ChirpConfig, echoes: &[EchoComponent]) -> Result<IfTrace> {
    cfg.validate()?;
    if echoes.is_empty() {
        return Err(SdiError::invalid("at least one echo is required"));
    }
    let scale = 0.5 * cfg.amplitude * cfg.amplitude * cfg.path_loss;
    let slope = cfg.slope();
    let mut samples = vec![Complex64::new(0.0, 0.0); cfg.sample_count];
    for echo in echoes {
        let carrier_phase = 2.0 * PI * cfg.start_frequency * echo.delay;
        let beat = 2.0 * PI * slope * echo.delay * cfg.sample_interval;
        let amp = scale * echo.reflection;
        for (n, s) in samples.iter_mut().enumerate() {
            *s += amp * Complex64::from_polar(1.0, beat * n as f64 + carrier_phase);
        }
    }
    Ok(IfTrace { samples })
}

/// Echo list of a slab: the front-face reflection followed by `q − 1`
/// internal bounces, amplitudes evaluated at the chirp start frequency.
///
/// In-slab delay uses `Re(√ε)` as the group index.
pub fn synth_slab_echoes(
    eps_r: ComplexPermittivity,
    geom: &SlabGeometry,
    cfg: &ChirpConfig,
    q: usize,
) -> Result<Vec<EchoComponent>> {
    if q < 1 {
        return Err(SdiError::invalid("bounce count must be at least 1"));
    }
    let tau_front = 2.0 * geom.standoff() / SPEED_OF_LIGHT;
    let slab_delay = 2.0 * geom.thickness() * em::complex_sqrt_lossy(eps_r).re / SPEED_OF_LIGHT;
    em::bounce_series(eps_r, geom, cfg.start_frequency, q)?
        .into_iter()
        .enumerate()
        .filter(|(i, amp)| *i == 0 || *amp != Complex64::new(0.0, 0.0))
        .map(|(i, amp)| EchoComponent::new(amp, tau_front + i as f64 * slab_delay))
        .collect()
}

/// Unnormalized forward DFT, `X[k] = Σ x[n]·e^{-j2πnk/N}`.
pub fn dft(trace: &IfTrace) -> RangeSpectrum {
    let mut bins = trace.samples.clone();
    if !bins.is_empty() {
        FftPlanner::new().plan_fft_forward(bins.len()).process(&mut bins);
    }
    RangeSpectrum { bins }
}

/// Index of the largest-magnitude bin, lowest index on ties.
pub fn peak_bin(spec: &RangeSpectrum) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in spec.bins.iter().enumerate() {
        let mag = v.norm_sqr();
        if mag > best.map_or(0.0, |(_, m)| m) {
            best = Some((k, mag));
        }
    }
    best.map(|(k, _)| k).ok_or(SdiError::AllZeroSpectrum)
}

/// `−mut_peak / metal_peak`: the reflection of the material relative to a
/// metal plate (reflection −1) at the same position.
pub fn calibrate_ratio(mut_peak: Complex64, metal_peak: Complex64) -> Result<Complex64> {
    let mag = metal_peak.norm();
    if !(mag > 0.0) || !mag.is_finite() {
        return Err(SdiError::ZeroCalibration(mag));
    }
    Ok(-(mut_peak / metal_peak))
}

/// Runs the extraction chain (DFT, peak bin, metal ratio) over one material
/// trace and a sequence of metal traces.
///
/// The peak bin is taken from the material spectrum and the metal spectra are
/// read at that same bin.
pub fn extract_gammas(mut_trace: &IfTrace, metal_traces: &[IfTrace]) -> Result<Vec<Complex64>> {
    let mut_spec = dft(mut_trace);
    let k_max = peak_bin(&mut_spec)?;
    let mut_peak = mut_spec.bins[k_max];
    metal_traces
        .iter()
        .map(|metal| {
            if metal.samples.len() != mut_trace.samples.len() {
                return Err(SdiError::invalid(format!(
                    "metal trace has {} samples, material trace has {}",
                    metal.samples.len(),
                    mut_trace.samples.len()
                )));
            }
            let metal_peak = dft(metal).bins[k_max];
            let norm = metal.norm();
            if metal_peak.norm() < 1e-15 * norm || norm == 0.0 {
                return Err(SdiError::ZeroCalibration(metal_peak.norm()));
            }
            calibrate_ratio(mut_peak, metal_peak)
        })
        .collect()
}
