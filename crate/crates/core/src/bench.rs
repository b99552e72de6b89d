//! Synthetic datasets and Monte-Carlo sweeps.
//!
//! Randomness comes from ChaCha20 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)`; independent trials use separate ChaCha streams, so
//! a report depends only on the seed and the requested sweep, not on thread
//! scheduling or platform.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::em::{self, ComplexPermittivity, SlabGeometry, SPEED_OF_LIGHT};
use crate::error::{Result, SdiError};
use crate::estimator::{
    self, fit_permittivity, model_gamma, wrap_phase, FitBounds, SdiDataset, StageDirection, Starts,
};
use crate::fmcw::{self, ChirpConfig, EchoComponent, IfTrace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Standard deviation of the multiplicative amplitude error.
    pub amplitude_rel_sigma: f64,
    /// Standard deviation of the additive phase error, radians.
    pub phase_sigma: f64,
    /// End-to-end relative amplitude drift across the sweep.
    pub amplitude_drift_rel: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            amplitude_rel_sigma: 5e-4,
            phase_sigma: 0.8_f64.to_radians(),
            amplitude_drift_rel: 1.22e-2,
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel { amplitude_rel_sigma: 0.0, phase_sigma: 0.0, amplitude_drift_rel: 0.0, seed: 0 }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        NoiseModel { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let sigmas = [self.amplitude_rel_sigma, self.phase_sigma, self.amplitude_drift_rel];
        if !sigmas.iter().all(|s| s.is_finite() && *s >= 0.0) {
            return Err(SdiError::invalid(format!("noise parameters must be finite and non-negative: {self:?}")));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude_rel_sigma == 0.0 && self.phase_sigma == 0.0 && self.amplitude_drift_rel == 0.0
    }

    /// Generator for one independent stream of this model's seed.
    pub fn rng(&self, stream: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// Complex multiplicative error for each of `count` steps:
    /// `(1 + drift(m) + ε_a(m))·e^{jε_φ(m)}`.
    ///
    /// The drift is linear and centered on the sweep, running from
    /// `−drift/2` at the first step to `+drift/2` at the last.
    pub fn factors(&self, count: usize, rng: &mut ChaCha20Rng) -> Result<Vec<Complex64>> {
        self.validate()?;
        let amp = Normal::new(0.0, self.amplitude_rel_sigma).map_err(|e| SdiError::invalid(e.to_string()))?;
        let phase = Normal::new(0.0, self.phase_sigma).map_err(|e| SdiError::invalid(e.to_string()))?;
        let span = count.saturating_sub(1).max(1) as f64;
        Ok((0..count)
            .map(|m| {
                let drift = if self.amplitude_drift_rel == 0.0 {
                    0.0
                } else {
                    self.amplitude_drift_rel * (m as f64 / span - 0.5)
                };
                let da: f64 = amp.sample(rng);
                let dp: f64 = phase.sample(rng);
                Complex64::from_polar(1.0 + drift + da, dp)
            })
            .collect())
    }
}

/// Noisy samples of the reflection model, one per step.
#[allow(clippy::too_many_arguments)]
pub fn generate_dataset(
    truth: ComplexPermittivity,
    phase_offset: f64,
    m_count: usize,
    step: f64,
    carrier: f64,
    direction: StageDirection,
    noise: &NoiseModel,
    stream: u64,
) -> Result<SdiDataset> {
    let c1 = direction.sign() * estimator::per_step_phase(step, carrier);
    let factors = noise.factors(m_count, &mut noise.rng(stream))?;
    let (a, b) = (truth.real_part(), truth.imag_part());
    let gammas = factors
        .iter()
        .enumerate()
        .map(|(m, f)| model_gamma(a, b, phase_offset, m, c1) * f)
        .collect();
    SdiDataset::new(gammas, step, carrier, direction)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FarFieldVerdict {
    /// Standoff at least twice the Fraunhofer distance.
    Pass,
    /// Between one and two Fraunhofer distances.
    Warn,
    Fail,
}

impl FarFieldVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            FarFieldVerdict::Pass => "pass",
            FarFieldVerdict::Warn => "warn",
            FarFieldVerdict::Fail => "fail",
        }
    }
}

/// Returns `(d_F, verdict)` for a standoff.
pub fn farfield_verdict(aperture: f64, wavelength: f64, standoff: f64) -> Result<(f64, FarFieldVerdict)> {
    if !(standoff > 0.0 && standoff.is_finite()) {
        return Err(SdiError::invalid(format!("standoff {standoff} m must be positive")));
    }
    let d_f = em::fraunhofer_distance(aperture, wavelength)?;
    let verdict = if standoff >= 2.0 * d_f {
        FarFieldVerdict::Pass
    } else if standoff >= d_f {
        FarFieldVerdict::Warn
    } else {
        FarFieldVerdict::Fail
    };
    Ok((d_f, verdict))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IfOptions {
    /// Number of slab components in the material echo (1 = front face only).
    pub bounces: usize,
    /// Extra one-way distance of the material relative to the metal's first
    /// position, meters.
    pub mut_offset: f64,
    /// Radar aperture used for the far-field check, meters.
    pub aperture: f64,
}

impl Default for IfOptions {
    fn default() -> Self {
        IfOptions { bounces: 1, mut_offset: 0.0, aperture: 0.015 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IfDatasets {
    pub mut_trace: IfTrace,
    pub metal_traces: Vec<IfTrace>,
    pub farfield: FarFieldVerdict,
}

/// Raw IF traces of a fixed material and a metal plate stepped backwards
/// `m_count` times by `step` from the material's standoff.
///
/// Noise multiplies each metal trace as a whole, mimicking peak-level
/// fluctuation between acquisitions.
pub fn generate_if_datasets(
    truth: ComplexPermittivity,
    geom: &SlabGeometry,
    cfg: &ChirpConfig,
    m_count: usize,
    step: f64,
    noise: &NoiseModel,
    opts: &IfOptions,
    stream: u64,
) -> Result<IfDatasets> {
    cfg.validate()?;
    if m_count == 0 || !(step > 0.0) {
        return Err(SdiError::invalid("need at least one step of positive length"));
    }
    let wavelength = SPEED_OF_LIGHT / cfg.start_frequency;
    let (_, farfield) = farfield_verdict(opts.aperture, wavelength, geom.standoff())?;

    let shifted = SlabGeometry::new(geom.thickness(), geom.standoff() + opts.mut_offset, geom.backing())?;
    let echoes = fmcw::synth_slab_echoes(truth, &shifted, cfg, opts.bounces)?;
    let mut_trace = fmcw::synth_if_trace(cfg, &echoes)?;

    let factors = noise.factors(m_count, &mut noise.rng(stream))?;
    let metal_traces = factors
        .iter()
        .enumerate()
        .map(|(m, f)| {
            let delay = 2.0 * (geom.standoff() + m as f64 * step) / SPEED_OF_LIGHT;
            let mut trace = fmcw::synth_if_trace(cfg, &[EchoComponent::new(Complex64::new(-1.0, 0.0), delay)?])?;
            if *f != Complex64::new(1.0, 0.0) {
                trace.scale(*f);
            }
            Ok(trace)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IfDatasets { mut_trace, metal_traces, farfield })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseOffset {
    Fixed(f64),
    /// Uniform on `[−π, π)`, drawn per trial.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub m_count: usize,
    pub step: f64,
    pub carrier: f64,
    pub direction: StageDirection,
    pub phase_offset: PhaseOffset,
    pub bounds: FitBounds,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            m_count: 40,
            step: 1e-4,
            carrier: 79e9,
            direction: StageDirection::Receding,
            phase_offset: PhaseOffset::Fixed(0.0),
            bounds: FitBounds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub truth_index: usize,
    pub trial: usize,
    pub true_phase_offset: f64,
    /// `(a, b, c)` of the fit, `None` when the fit failed.
    pub fitted: Option<[f64; 3]>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub error: Option<String>,
    pub wall_time: f64,
}

impl TrialRecord {
    /// `(a − a₀, b − b₀, wrap(c − c₀))`.
    pub fn errors(&self, truth: ComplexPermittivity) -> Option<[f64; 3]> {
        self.fitted.map(|[a, b, c]| {
            [a - truth.real_part(), b - truth.imag_part(), wrap_phase(c - self.true_phase_offset)]
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthSummary {
    pub truth: ComplexPermittivity,
    pub trials: usize,
    pub converged: usize,
    pub mean_fitted: [f64; 3],
    /// Mean of `(a, b, c)` errors over converged trials.
    pub mean_error: [f64; 3],
    /// Population standard deviation of the errors.
    pub std_error: [f64; 3],
    pub mean_abs_error: [f64; 3],
    pub mean_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub noise: NoiseModel,
    pub options: SweepOptions,
    pub trials_per_truth: usize,
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<TruthSummary>,
}

/// Stream index of one trial; truths and trials never share a stream.
pub fn trial_stream(truth_index: usize, trial: usize) -> u64 {
    ((truth_index as u64) << 32) | trial as u64
}

/// Fits `trials` noisy datasets per truth.
pub fn run_sweep(
    truths: &[ComplexPermittivity],
    noise: &NoiseModel,
    trials: usize,
    opts: &SweepOptions,
) -> Result<BenchReport> {
    if trials == 0 {
        return Err(SdiError::invalid("trial count must be at least 1"));
    }
    if truths.is_empty() {
        return Err(SdiError::invalid("no truths given"));
    }
    noise.validate()?;
    let jobs: Vec<(usize, usize)> = (0..truths.len()).flat_map(|t| (0..trials).map(move |k| (t, k))).collect();
    let records: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(t, k)| run_trial(truths[t], t, k, noise, opts))
        .collect::<Result<_>>()?;
    let summaries = truths
        .iter()
        .enumerate()
        .map(|(t, truth)| summarize(*truth, records.iter().filter(|r| r.truth_index == t)))
        .collect();
    Ok(BenchReport { noise: *noise, options: opts.clone(), trials_per_truth: trials, records, summaries })
}

fn run_trial(
    truth: ComplexPermittivity,
    truth_index: usize,
    trial: usize,
    noise: &NoiseModel,
    opts: &SweepOptions,
) -> Result<TrialRecord> {
    let stream = trial_stream(truth_index, trial);
    let c0 = match opts.phase_offset {
        PhaseOffset::Fixed(c) => c,
        PhaseOffset::Random => {
            // separate from the noise draws of the same stream
            let mut rng = noise.rng(stream);
            rng.set_word_pos(1 << 40);
            rng.random_range(-PI..PI)
        }
    };
    let data = generate_dataset(truth, c0, opts.m_count, opts.step, opts.carrier, opts.direction, noise, stream)?;
    let start = Instant::now();
    let fit = fit_permittivity(&data, &opts.bounds, &Starts::Auto);
    let wall_time = start.elapsed().as_secs_f64();
    let mut record = TrialRecord {
        truth_index,
        trial,
        true_phase_offset: c0,
        fitted: None,
        residual_norm: f64::NAN,
        iterations: 0,
        converged: false,
        error: None,
        wall_time,
    };
    match fit {
        Ok(f) => {
            record.fitted = Some([f.permittivity.real_part(), f.permittivity.imag_part(), f.phase_offset]);
            record.residual_norm = f.residual_norm;
            record.iterations = f.iterations;
            record.converged = f.converged;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    Ok(record)
}

/// Aggregates the records of one truth.
pub fn summarize<'a>(truth: ComplexPermittivity, records: impl Iterator<Item = &'a TrialRecord>) -> TruthSummary {
    let records: Vec<&TrialRecord> = records.collect();
    let ok: Vec<&TrialRecord> = records.iter().copied().filter(|r| r.converged && r.fitted.is_some()).collect();
    let n = ok.len() as f64;
    let mut mean_fitted = [f64::NAN; 3];
    let mut mean_error = [f64::NAN; 3];
    let mut std_error = [f64::NAN; 3];
    let mut mean_abs_error = [f64::NAN; 3];
    let mut mean_residual = f64::NAN;
    if !ok.is_empty() {
        let errs: Vec<[f64; 3]> = ok.iter().map(|r| r.errors(truth).unwrap()).collect();
        for i in 0..3 {
            mean_fitted[i] = ok.iter().map(|r| r.fitted.unwrap()[i]).sum::<f64>() / n;
            mean_error[i] = errs.iter().map(|e| e[i]).sum::<f64>() / n;
            std_error[i] = (errs.iter().map(|e| (e[i] - mean_error[i]).powi(2)).sum::<f64>() / n).sqrt();
            mean_abs_error[i] = errs.iter().map(|e| e[i].abs()).sum::<f64>() / n;
        }
        mean_residual = ok.iter().map(|r| r.residual_norm).sum::<f64>() / n;
    }
    TruthSummary {
        truth,
        trials: records.len(),
        converged: ok.len(),
        mean_fitted,
        mean_error,
        std_error,
        mean_abs_error,
        mean_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::Backing;
    use crate::estimator::{phase_slope_diagnostic, residuals};

    const F0: f64 = 79e9;
    const STEP: f64 = 1e-4;

    fn eps(a: f64, b: f64) -> ComplexPermittivity {
        ComplexPermittivity::new(a, b).unwrap()
    }

    fn dataset(noise: &NoiseModel, stream: u64) -> SdiDataset {
        generate_dataset(eps(2.6, 0.1), 0.4, 40, STEP, F0, StageDirection::Receding, noise, stream).unwrap()
    }

    #[test]
    fn zero_noise_is_exact_model() {
        let data = dataset(&NoiseModel::none(), 0);
        let r = residuals([2.6, 0.1, 0.4], &data).unwrap();
        assert!(r.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn seeded_reproducibility() {
        let noise = NoiseModel::default().with_seed(17);
        assert_eq!(dataset(&noise, 3), dataset(&noise, 3));
        assert_ne!(dataset(&noise, 3), dataset(&noise, 4));
        assert_ne!(dataset(&noise, 3), dataset(&noise.with_seed(18), 3));
    }

    #[test]
    fn noise_rejects_negative_sigma() {
        let noise = NoiseModel { phase_sigma: -1.0, ..NoiseModel::none() };
        assert!(noise.validate().is_err());
    }

    #[test]
    fn drift_is_linear_and_centered() {
        let noise = NoiseModel { amplitude_drift_rel: 0.02, ..NoiseModel::none() };
        let f = noise.factors(5, &mut noise.rng(0)).unwrap();
        let expect = [0.99, 0.995, 1.0, 1.005, 1.01];
        for (got, want) in f.iter().zip(expect) {
            assert!((got.re - want).abs() < 1e-15 && got.im == 0.0);
        }
    }

    #[test]
    fn noise_statistics_match_model() {
        let noise = NoiseModel { amplitude_drift_rel: 0.0, ..NoiseModel::default() };
        let f = noise.factors(20_000, &mut noise.rng(0)).unwrap();
        let n = f.len() as f64;
        let amp: Vec<f64> = f.iter().map(|z| z.norm() - 1.0).collect();
        let ph: Vec<f64> = f.iter().map(|z| z.arg()).collect();
        let sd = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
        assert!((sd(&amp) / 5e-4 - 1.0).abs() < 0.05);
        assert!((sd(&ph) / 0.8_f64.to_radians() - 1.0).abs() < 0.05);
    }

    #[test]
    fn default_noise_slope_within_budget() {
        let data = dataset(&NoiseModel::default().with_seed(1), 0);
        let s = phase_slope_diagnostic(&data).unwrap();
        assert!((s.slope_deg_per_mm + 189.73).abs() < 2.0, "{s:?}");
        assert!(s.r_squared > 0.999);
    }

    #[test]
    fn farfield_bands() {
        let (d_f, v) = farfield_verdict(0.015, 0.0038, 0.25).unwrap();
        assert!((d_f - 0.118421).abs() < 1e-6);
        // 0.25 ≥ 2 × 0.1184
        assert_eq!(v, FarFieldVerdict::Pass);
        assert_eq!(farfield_verdict(0.015, 0.0038, d_f / 2.0).unwrap().1, FarFieldVerdict::Fail);
        assert_eq!(farfield_verdict(0.015, 0.0038, 1.5 * d_f).unwrap().1, FarFieldVerdict::Warn);
        assert_eq!(farfield_verdict(0.015, 0.0038, 10.0 * d_f).unwrap().1, FarFieldVerdict::Pass);
        assert!(farfield_verdict(0.015, 0.0038, 0.0).is_err());
    }

    fn narrowband() -> ChirpConfig {
        ChirpConfig { bandwidth: 1e5, ..ChirpConfig::default() }
    }

    #[test]
    fn if_identical_delay_reproduces_front_face() {
        let truth = eps(3.0, 0.15);
        let geom = SlabGeometry::new(0.01, 0.25, Backing::Metal).unwrap();
        let sets = generate_if_datasets(
            truth,
            &geom,
            &ChirpConfig::default(),
            1,
            STEP,
            &NoiseModel::none(),
            &IfOptions::default(),
            0,
        )
        .unwrap();
        let g = fmcw::extract_gammas(&sets.mut_trace, &sets.metal_traces).unwrap();
        let (gamma, _) = em::fresnel_normal(ComplexPermittivity::AIR, truth);
        assert!((g[0] - gamma).norm() < 1e-9);
        assert_eq!(sets.farfield, FarFieldVerdict::Pass);
        assert_eq!(sets.metal_traces.len(), 1);
    }

    #[test]
    fn if_metal_steps_advance_phase() {
        let geom = SlabGeometry::new(0.01, 0.25, Backing::Metal).unwrap();
        let sets = generate_if_datasets(
            eps(2.6, 0.1),
            &geom,
            &ChirpConfig::default(),
            40,
            STEP,
            &NoiseModel::none(),
            &IfOptions::default(),
            0,
        )
        .unwrap();
        let g = fmcw::extract_gammas(&sets.mut_trace, &sets.metal_traces).unwrap();
        for w in g.windows(2) {
            let d = (w[1] / w[0]).arg().to_degrees();
            assert!((d + 18.97).abs() < 0.05, "{d}");
        }
    }

    #[test]
    fn if_delay_offset_absorbed_by_phase() {
        let truth = eps(2.6, 0.1);
        let geom = SlabGeometry::new(0.01, 0.25, Backing::Metal).unwrap();
        let run = |offset: f64| {
            let opts = IfOptions { mut_offset: offset, ..IfOptions::default() };
            let sets =
                generate_if_datasets(truth, &geom, &narrowband(), 40, STEP, &NoiseModel::none(), &opts, 0).unwrap();
            let g = fmcw::extract_gammas(&sets.mut_trace, &sets.metal_traces).unwrap();
            SdiDataset::new(g, STEP, F0, StageDirection::Receding).unwrap()
        };
        let base = run(0.0);
        let shifted = run(30e-6);
        let err = (shifted.gammas()[0] / base.gammas()[0]).arg().to_degrees();
        assert!((err - 5.69).abs() < 0.01, "{err}");

        // Only |F(a, b)| and arg F(a, b) + c are pinned by the data, so the
        // check is on the fitted curve rather than on (a, b) separately.
        let fit_base = fit_permittivity(&base, &FitBounds::default(), &Starts::Auto).unwrap();
        let fit_shift = fit_permittivity(&shifted, &FitBounds::default(), &Starts::Auto).unwrap();
        let curve = |f: &estimator::FitResult| estimator::fitted_curve(f, base.c1(), 40);
        for (b, s) in curve(&fit_base).iter().zip(curve(&fit_shift)) {
            assert!((s.norm() - b.norm()).abs() < 1e-6);
            assert!(((s / b).arg().to_degrees() - 5.69).abs() < 0.01);
        }
    }

    #[test]
    fn if_noise_multiplies_calibrated_gamma() {
        let truth = eps(2.6, 0.1);
        let geom = SlabGeometry::new(0.01, 0.25, Backing::Metal).unwrap();
        let noise = NoiseModel::default().with_seed(5);
        let clean =
            generate_if_datasets(truth, &geom, &narrowband(), 10, STEP, &NoiseModel::none(), &IfOptions::default(), 0)
                .unwrap();
        let noisy =
            generate_if_datasets(truth, &geom, &narrowband(), 10, STEP, &noise, &IfOptions::default(), 0).unwrap();
        let g0 = fmcw::extract_gammas(&clean.mut_trace, &clean.metal_traces).unwrap();
        let g1 = fmcw::extract_gammas(&noisy.mut_trace, &noisy.metal_traces).unwrap();
        let factors = noise.factors(10, &mut noise.rng(0)).unwrap();
        for ((a, b), f) in g0.iter().zip(&g1).zip(&factors) {
            assert!((b * f - a).norm() < 1e-12);
        }
    }

    #[test]
    fn sweep_rejects_bad_requests() {
        let o = SweepOptions::default();
        assert!(run_sweep(&[eps(2.0, 0.1)], &NoiseModel::none(), 0, &o).is_err());
        assert!(run_sweep(&[], &NoiseModel::none(), 1, &o).is_err());
    }

    #[test]
    fn sweep_records_and_statistics() {
        let truths = [eps(2.0, 0.1), eps(7.0, 0.3)];
        let noise = NoiseModel::default().with_seed(9);
        let opts = SweepOptions { phase_offset: PhaseOffset::Random, ..SweepOptions::default() };
        let report = run_sweep(&truths, &noise, 6, &opts).unwrap();
        assert_eq!(report.records.len(), 12);
        assert_eq!(report.summaries.len(), 2);
        for (t, s) in report.summaries.iter().enumerate() {
            let again = summarize(truths[t], report.records.iter().filter(|r| r.truth_index == t));
            assert_eq!(&again, s);
            assert_eq!(s.trials, 6);
        }
        let offsets: Vec<f64> = report.records.iter().map(|r| r.true_phase_offset).collect();
        assert!(offsets.iter().all(|c| (-PI..PI).contains(c)));
        assert!(offsets.windows(2).any(|w| w[0] != w[1]));
    }

    fn strip_times(mut r: BenchReport) -> BenchReport {
        for rec in &mut r.records {
            rec.wall_time = 0.0;
        }
        r
    }

    #[test]
    fn sweep_is_reproducible() {
        let truths = [eps(2.6, 0.1)];
        let noise = NoiseModel::default().with_seed(2);
        let opts = SweepOptions { phase_offset: PhaseOffset::Random, ..SweepOptions::default() };
        let a = strip_times(run_sweep(&truths, &noise, 8, &opts).unwrap());
        let b = strip_times(run_sweep(&truths, &noise, 8, &opts).unwrap());
        let bits = |r: &BenchReport| -> Vec<u64> {
            r.records.iter().flat_map(|x| x.fitted.unwrap()).map(f64::to_bits).collect()
        };
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a, b);
    }
}
