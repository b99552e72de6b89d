//! Text file formats.
//!
//! Every file shares one envelope:
//!
//! ```text
//! # free comment lines
//! mode: gamma
//! carrier_hz: 79000000000
//! ...
//! ---
//! m re im
//! 0 -0.2346 0.0091
//! ```
//!
//! Header lines are `key: value`; a line of `---` ends the header, the next
//! line names the columns and every further non-blank line is a record with
//! whitespace-separated fields. Units are SI and named in the keys. Floats are
//! written with Rust's shortest round-trip formatting, so reading a written
//! file reproduces every value bit for bit.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::bench::{BenchReport, TrialRecord};
use crate::em::ComplexPermittivity;
use crate::error::{Result, SdiError};
use crate::estimator::{model_gamma, FitResult, SdiDataset, StageDirection};
use crate::fmcw::{ChirpConfig, IfTrace};

const SEPARATOR: &str = "---";

#[derive(Debug, Clone, PartialEq)]
struct Envelope {
    header: Vec<(String, String, usize)>,
    columns: Vec<String>,
    /// Fields and source line of every record.
    rows: Vec<(Vec<String>, usize)>,
}

impl Envelope {
    fn parse(text: &str) -> Result<Envelope> {
        let mut header = Vec::new();
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut closed = false;
        for (no, line) in lines.by_ref() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == SEPARATOR {
                closed = true;
                break;
            }
            let Some((k, v)) = line.split_once(':') else {
                return Err(SdiError::malformed(no, format!("expected `key: value`, got `{line}`")));
            };
            header.push((k.trim().to_string(), v.trim().to_string(), no));
        }
        if !closed {
            return Err(SdiError::malformed(0, "missing `---` after the header"));
        }
        let mut body = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let columns = match body.next() {
            Some((_, l)) => l.split_whitespace().map(str::to_string).collect(),
            None => return Err(SdiError::malformed(0, "missing column line")),
        };
        let rows = body.map(|(no, l)| (l.split_whitespace().map(str::to_string).collect(), no)).collect();
        Ok(Envelope { header, columns, rows })
    }

    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.header.iter().find(|(k, _, _)| k == key).map(|(_, v, n)| (v.as_str(), *n))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let (v, no) = self.raw(key).ok_or_else(|| SdiError::malformed(0, format!("missing header key `{key}`")))?;
        v.parse().map_err(|_| SdiError::malformed(no, format!("cannot parse `{key}` value `{v}`")))
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        if self.raw(key).is_some() {
            self.get(key)
        } else {
            Ok(default)
        }
    }

    fn text(&self, key: &str) -> String {
        self.raw(key).map(|(v, _)| v.to_string()).unwrap_or_default()
    }

    fn expect_mode(&self, mode: &str) -> Result<()> {
        let got: String = self.get("mode")?;
        if got != mode {
            return Err(SdiError::malformed(self.raw("mode").map_or(0, |r| r.1), format!("expected mode `{mode}`, found `{got}`")));
        }
        Ok(())
    }
}

fn field<T: FromStr>(row: &[String], idx: usize, line: usize) -> Result<T> {
    let s = row.get(idx).ok_or_else(|| SdiError::malformed(line, format!("missing field {}", idx + 1)))?;
    s.parse().map_err(|_| SdiError::malformed(line, format!("cannot parse field `{s}`")))
}

fn check_width(row: &[String], width: usize, line: usize) -> Result<()> {
    if row.len() != width {
        return Err(SdiError::malformed(line, format!("expected {width} fields, found {}", row.len())));
    }
    Ok(())
}

fn direction_name(d: StageDirection) -> &'static str {
    match d {
        StageDirection::Receding => "receding",
        StageDirection::Approaching => "approaching",
    }
}

fn parse_direction(env: &Envelope) -> Result<StageDirection> {
    match env.raw("direction") {
        None => Ok(StageDirection::Receding),
        Some(("receding", _)) => Ok(StageDirection::Receding),
        Some(("approaching", _)) => Ok(StageDirection::Approaching),
        Some((v, no)) => Err(SdiError::malformed(no, format!("direction `{v}` is not receding|approaching"))),
    }
}

fn single_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

fn put(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key}: {value}");
}

/// Calibrated reflection samples.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaFile {
    pub dataset: SdiDataset,
    pub provenance: String,
}

impl GammaFile {
    pub fn to_text(&self) -> String {
        let d = &self.dataset;
        let mut out = String::from("# sdi calibrated reflection samples\n");
        put(&mut out, "mode", "gamma");
        put(&mut out, "carrier_hz", d.carrier());
        put(&mut out, "step_m", d.step());
        put(&mut out, "step_count", d.step_count());
        put(&mut out, "direction", direction_name(d.direction()));
        put(&mut out, "provenance", single_line(&self.provenance));
        out.push_str("---\nm re im\n");
        for (m, g) in d.gammas().iter().enumerate() {
            let _ = writeln!(out, "{m} {} {}", g.re, g.im);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let env = Envelope::parse(text)?;
        env.expect_mode("gamma")?;
        let count: usize = env.get("step_count")?;
        if env.rows.len() != count {
            return Err(SdiError::malformed(0, format!("step_count is {count} but {} records follow", env.rows.len())));
        }
        let mut gammas = Vec::with_capacity(count);
        for (i, (row, no)) in env.rows.iter().enumerate() {
            check_width(row, 3, *no)?;
            let m: usize = field(row, 0, *no)?;
            if m != i {
                return Err(SdiError::malformed(*no, format!("expected index {i}, found {m}")));
            }
            gammas.push(Complex64::new(field(row, 1, *no)?, field(row, 2, *no)?));
        }
        let dataset = SdiDataset::new(gammas, env.get("step_m")?, env.get("carrier_hz")?, parse_direction(&env)?)?;
        Ok(GammaFile { dataset, provenance: env.text("provenance") })
    }
}

/// Raw IF traces: one material trace and one metal trace per step.
#[derive(Debug, Clone, PartialEq)]
pub struct RawIfFile {
    pub carrier: f64,
    pub step: f64,
    pub direction: StageDirection,
    pub chirp: ChirpConfig,
    pub mut_trace: IfTrace,
    pub metal_traces: Vec<IfTrace>,
    pub provenance: String,
}

impl RawIfFile {
    pub fn to_text(&self) -> String {
        let c = &self.chirp;
        let mut out = String::from("# sdi raw IF traces\n");
        put(&mut out, "mode", "raw-if");
        put(&mut out, "carrier_hz", self.carrier);
        put(&mut out, "step_m", self.step);
        put(&mut out, "step_count", self.metal_traces.len());
        put(&mut out, "direction", direction_name(self.direction));
        put(&mut out, "start_frequency_hz", c.start_frequency);
        put(&mut out, "bandwidth_hz", c.bandwidth);
        put(&mut out, "chirp_duration_s", c.chirp_duration);
        put(&mut out, "sample_count", c.sample_count);
        put(&mut out, "sample_interval_s", c.sample_interval);
        put(&mut out, "amplitude", c.amplitude);
        put(&mut out, "path_loss_re", c.path_loss.re);
        put(&mut out, "path_loss_im", c.path_loss.im);
        put(&mut out, "provenance", single_line(&self.provenance));
        out.push_str("---\ntarget m re_0 im_0 ... re_N-1 im_N-1\n");
        let mut row = |target: &str, m: usize, trace: &IfTrace| {
            let _ = write!(out, "{target} {m}");
            for s in &trace.samples {
                let _ = write!(out, " {} {}", s.re, s.im);
            }
            out.push('\n');
        };
        row("mut", 0, &self.mut_trace);
        for (m, t) in self.metal_traces.iter().enumerate() {
            row("metal", m, t);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let env = Envelope::parse(text)?;
        env.expect_mode("raw-if")?;
        let chirp = ChirpConfig {
            start_frequency: env.get("start_frequency_hz")?,
            bandwidth: env.get("bandwidth_hz")?,
            chirp_duration: env.get("chirp_duration_s")?,
            sample_count: env.get("sample_count")?,
            sample_interval: env.get("sample_interval_s")?,
            amplitude: env.get_or("amplitude", 1.0)?,
            path_loss: Complex64::new(env.get_or("path_loss_re", 1.0)?, env.get_or("path_loss_im", 0.0)?),
        };
        chirp.validate()?;
        let count: usize = env.get("step_count")?;
        let n = chirp.sample_count;
        let mut mut_trace = None;
        let mut metal_traces = Vec::with_capacity(count);
        for (row, no) in &env.rows {
            check_width(row, 2 + 2 * n, *no)?;
            let m: usize = field(row, 1, *no)?;
            let samples = (0..n)
                .map(|i| Ok(Complex64::new(field(row, 2 + 2 * i, *no)?, field(row, 3 + 2 * i, *no)?)))
                .collect::<Result<Vec<_>>>()?;
            match row[0].as_str() {
                "mut" if mut_trace.is_none() => mut_trace = Some(IfTrace { samples }),
                "mut" => return Err(SdiError::malformed(*no, "more than one material trace")),
                "metal" if m == metal_traces.len() => metal_traces.push(IfTrace { samples }),
                "metal" => {
                    return Err(SdiError::malformed(*no, format!("expected metal index {}, found {m}", metal_traces.len())))
                }
                other => return Err(SdiError::malformed(*no, format!("unknown target `{other}`"))),
            }
        }
        let mut_trace = mut_trace.ok_or_else(|| SdiError::malformed(0, "no material trace"))?;
        if metal_traces.len() != count {
            return Err(SdiError::malformed(
                0,
                format!("step_count is {count} but {} metal traces follow", metal_traces.len()),
            ));
        }
        Ok(RawIfFile {
            carrier: env.get_or("carrier_hz", chirp.start_frequency)?,
            step: env.get("step_m")?,
            direction: parse_direction(&env)?,
            chirp,
            mut_trace,
            metal_traces,
            provenance: env.text("provenance"),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetFile {
    Gamma(GammaFile),
    RawIf(RawIfFile),
}

impl DatasetFile {
    pub fn to_text(&self) -> String {
        match self {
            DatasetFile::Gamma(g) => g.to_text(),
            DatasetFile::RawIf(r) => r.to_text(),
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let env = Envelope::parse(text)?;
        match env.text("mode").as_str() {
            "gamma" => GammaFile::from_text(text).map(DatasetFile::Gamma),
            "raw-if" => RawIfFile::from_text(text).map(DatasetFile::RawIf),
            other => Err(SdiError::malformed(
                env.raw("mode").map_or(0, |r| r.1),
                format!("mode `{other}` is not gamma|raw-if"),
            )),
        }
    }
}

/// A fit and the measured and fitted curves it was made from.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFile {
    pub fit: FitResult,
    pub step: f64,
    pub carrier: f64,
    pub direction: StageDirection,
    pub measured: Vec<Complex64>,
}

impl ReportFile {
    pub fn new(fit: FitResult, data: &SdiDataset) -> Self {
        ReportFile {
            fit,
            step: data.step(),
            carrier: data.carrier(),
            direction: data.direction(),
            measured: data.gammas().to_vec(),
        }
    }

    fn c1(&self) -> f64 {
        self.direction.sign() * crate::estimator::per_step_phase(self.step, self.carrier)
    }

    /// Model values at the reported parameters.
    pub fn fitted(&self) -> Vec<Complex64> {
        let (a, b) = (self.fit.permittivity.real_part(), self.fit.permittivity.imag_part());
        (0..self.measured.len()).map(|m| model_gamma(a, b, self.fit.phase_offset, m, self.c1())).collect()
    }

    pub fn to_text(&self) -> String {
        let f = &self.fit;
        let mut out = String::from("# sdi permittivity fit\n");
        put(&mut out, "mode", "report");
        put(&mut out, "eps_real", f.permittivity.real_part());
        put(&mut out, "eps_imag", f.permittivity.imag_part());
        put(&mut out, "phase_offset_rad", f.phase_offset);
        put(&mut out, "residual_norm", f.residual_norm);
        put(&mut out, "iterations", f.iterations);
        put(&mut out, "converged", f.converged);
        put(&mut out, "start_index", f.start_index);
        if let Some(m) = f.covariance_proxy {
            let flat: Vec<String> = m.iter().flatten().map(f64::to_string).collect();
            put(&mut out, "jtj", flat.join(" "));
        }
        put(&mut out, "carrier_hz", self.carrier);
        put(&mut out, "step_m", self.step);
        put(&mut out, "step_count", self.measured.len());
        put(&mut out, "direction", direction_name(self.direction));
        out.push_str("---\nm distance_m measured_re measured_im fitted_re fitted_im\n");
        for (m, (g, fit)) in self.measured.iter().zip(self.fitted()).enumerate() {
            let _ = writeln!(out, "{m} {} {} {} {} {}", m as f64 * self.step, g.re, g.im, fit.re, fit.im);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let env = Envelope::parse(text)?;
        env.expect_mode("report")?;
        let covariance_proxy = match env.raw("jtj") {
            None => None,
            Some((v, no)) => {
                let vals: Vec<f64> = v
                    .split_whitespace()
                    .map(|s| s.parse().map_err(|_| SdiError::malformed(no, format!("bad jtj entry `{s}`"))))
                    .collect::<Result<_>>()?;
                if vals.len() != 9 {
                    return Err(SdiError::malformed(no, "jtj needs 9 entries"));
                }
                Some(std::array::from_fn(|i| std::array::from_fn(|j| vals[3 * i + j])))
            }
        };
        let fit = FitResult {
            permittivity: ComplexPermittivity::new(env.get("eps_real")?, env.get("eps_imag")?)?,
            phase_offset: env.get("phase_offset_rad")?,
            residual_norm: env.get("residual_norm")?,
            iterations: env.get("iterations")?,
            converged: env.get("converged")?,
            covariance_proxy,
            start_index: env.get_or("start_index", 0)?,
        };
        let count: usize = env.get("step_count")?;
        if env.rows.len() != count {
            return Err(SdiError::malformed(0, format!("step_count is {count} but {} records follow", env.rows.len())));
        }
        let mut measured = Vec::with_capacity(count);
        for (row, no) in &env.rows {
            check_width(row, 6, *no)?;
            measured.push(Complex64::new(field(row, 2, *no)?, field(row, 3, *no)?));
        }
        Ok(ReportFile {
            fit,
            step: env.get("step_m")?,
            carrier: env.get("carrier_hz")?,
            direction: parse_direction(&env)?,
            measured,
        })
    }

    /// Fitted samples as written in the records, for checking against
    /// [`ReportFile::fitted`].
    pub fn fitted_from_text(text: &str) -> Result<Vec<Complex64>> {
        let env = Envelope::parse(text)?;
        env.rows
            .iter()
            .map(|(row, no)| Ok(Complex64::new(field(row, 4, *no)?, field(row, 5, *no)?)))
            .collect()
    }
}

const TRIAL_COLUMNS: &str =
    "kind truth_index trial eps_real_true eps_imag_true phase_offset_true a b c residual_norm iterations converged wall_time_s error";
const SUMMARY_COLUMNS: &str = "kind truth_index eps_real_true eps_imag_true trials converged mean_a mean_b mean_c \
mean_err_a mean_err_b mean_err_c std_err_a std_err_b std_err_c mean_abs_err_a mean_abs_err_b mean_abs_err_c mean_residual";

/// Machine-readable sweep report: one `summary` record per truth followed by
/// one `trial` record per fit.
pub fn bench_report_text(report: &BenchReport) -> String {
    let n = &report.noise;
    let o = &report.options;
    let mut out = String::from("# sdi Monte-Carlo sweep\n");
    put(&mut out, "mode", "bench");
    put(&mut out, "trials_per_truth", report.trials_per_truth);
    put(&mut out, "truth_count", report.summaries.len());
    put(&mut out, "amplitude_rel_sigma", n.amplitude_rel_sigma);
    put(&mut out, "phase_sigma_rad", n.phase_sigma);
    put(&mut out, "amplitude_drift_rel", n.amplitude_drift_rel);
    put(&mut out, "seed", n.seed);
    put(&mut out, "step_count", o.m_count);
    put(&mut out, "step_m", o.step);
    put(&mut out, "carrier_hz", o.carrier);
    put(&mut out, "direction", direction_name(o.direction));
    match o.phase_offset {
        crate::bench::PhaseOffset::Fixed(c) => put(&mut out, "phase_offset_rad", c),
        crate::bench::PhaseOffset::Random => put(&mut out, "phase_offset_rad", "random"),
    }
    put(&mut out, "a_max", o.bounds.a_max);
    put(&mut out, "b_max", o.bounds.b_max);
    put(&mut out, "summary_columns", SUMMARY_COLUMNS);
    out.push_str("---\n");
    out.push_str(TRIAL_COLUMNS);
    out.push('\n');
    for (t, s) in report.summaries.iter().enumerate() {
        let _ = write!(out, "summary {t} {} {} {} {}", s.truth.real_part(), s.truth.imag_part(), s.trials, s.converged);
        for v in s.mean_fitted.iter().chain(&s.mean_error).chain(&s.std_error).chain(&s.mean_abs_error) {
            let _ = write!(out, " {v}");
        }
        let _ = writeln!(out, " {}", s.mean_residual);
    }
    for r in &report.records {
        let truth = report.summaries[r.truth_index].truth;
        let [a, b, c] = r.fitted.unwrap_or([f64::NAN; 3]);
        let err = r.error.as_deref().map_or("-".to_string(), |e| single_line(e).replace(' ', "_"));
        let _ = writeln!(
            out,
            "trial {} {} {} {} {} {a} {b} {c} {} {} {} {} {err}",
            r.truth_index,
            r.trial,
            truth.real_part(),
            truth.imag_part(),
            r.true_phase_offset,
            r.residual_norm,
            r.iterations,
            r.converged,
            r.wall_time
        );
    }
    out
}

/// Trial records and their truths from a bench report.
pub fn read_bench_trials(text: &str) -> Result<Vec<(ComplexPermittivity, TrialRecord)>> {
    let env = Envelope::parse(text)?;
    env.expect_mode("bench")?;
    let mut out = Vec::new();
    for (row, no) in env.rows.iter().filter(|(r, _)| r.first().is_some_and(|k| k == "trial")) {
        check_width(row, 14, *no)?;
        let truth = ComplexPermittivity::new(field(row, 3, *no)?, field(row, 4, *no)?)?;
        let fitted: [f64; 3] = [field(row, 6, *no)?, field(row, 7, *no)?, field(row, 8, *no)?];
        let error = (row[13] != "-").then(|| row[13].replace('_', " "));
        out.push((
            truth,
            TrialRecord {
                truth_index: field(row, 1, *no)?,
                trial: field(row, 2, *no)?,
                true_phase_offset: field(row, 5, *no)?,
                fitted: (!fitted[0].is_nan()).then_some(fitted),
                residual_norm: field(row, 9, *no)?,
                iterations: field(row, 10, *no)?,
                converged: field(row, 11, *no)?,
                error,
                wall_time: field(row, 12, *no)?,
            },
        ));
    }
    Ok(out)
}

/// Plot columns of a reflection curve against cumulative displacement.
pub fn curve_text(title: &str, step: f64, gammas: &[Complex64]) -> String {
    let mut out = format!("# {}\n", single_line(title));
    put(&mut out, "mode", "curve");
    put(&mut out, "step_m", step);
    put(&mut out, "step_count", gammas.len());
    out.push_str("---\ndistance_m re im abs phase_rad\n");
    for (m, g) in gammas.iter().enumerate() {
        let _ = writeln!(out, "{} {} {} {} {}", m as f64 * step, g.re, g.im, g.norm(), g.arg());
    }
    out
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(SdiError::from)
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(SdiError::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{run_sweep, NoiseModel, PhaseOffset, SweepOptions};
    use proptest::prelude::*;

    fn gamma_file(gammas: Vec<Complex64>) -> GammaFile {
        GammaFile {
            dataset: SdiDataset::new(gammas, 1e-4, 79e9, StageDirection::Receding).unwrap(),
            provenance: "unit test".into(),
        }
    }

    #[test]
    fn gamma_round_trip_is_bit_exact() {
        let g = gamma_file((0..40).map(|m| Complex64::new(0.1 / 3.0 * m as f64, -1e-300 * m as f64)).collect());
        let text = g.to_text();
        assert_eq!(GammaFile::from_text(&text).unwrap(), g);
        assert_eq!(DatasetFile::from_text(&text).unwrap(), DatasetFile::Gamma(g));
    }

    proptest! {
        #[test]
        fn gamma_round_trip_any_values(vals in prop::collection::vec((any::<f64>(), any::<f64>()), 3..20),
                                       step in 1e-7f64..9e-4, approaching in any::<bool>()) {
            prop_assume!(vals.iter().all(|(a, b)| a.is_finite() && b.is_finite()));
            let gammas: Vec<Complex64> = vals.iter().map(|(a, b)| Complex64::new(*a, *b)).collect();
            let dir = if approaching { StageDirection::Approaching } else { StageDirection::Receding };
            let file = GammaFile { dataset: SdiDataset::new(gammas, step, 79e9, dir).unwrap(), provenance: String::new() };
            let back = GammaFile::from_text(&file.to_text()).unwrap();
            for (a, b) in back.dataset.gammas().iter().zip(file.dataset.gammas()) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
            prop_assert_eq!(back.dataset.step().to_bits(), step.to_bits());
            prop_assert_eq!(back.dataset.direction(), dir);
        }
    }

    #[test]
    fn record_count_mismatch_is_malformed() {
        let text = gamma_file(vec![Complex64::new(0.1, 0.0); 4]).to_text().replace("step_count: 4", "step_count: 5");
        assert!(matches!(GammaFile::from_text(&text), Err(SdiError::Malformed { .. })));
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(GammaFile::from_text("mode: gamma\n"), Err(SdiError::Malformed { .. })));
        let good = gamma_file(vec![Complex64::new(0.1, 0.0); 3]).to_text();
        let bad_number = good.replacen("0 0.1 0", "0 0.1x 0", 1);
        assert!(matches!(GammaFile::from_text(&bad_number), Err(SdiError::Malformed { .. })));
        let bad_mode = good.replace("mode: gamma", "mode: nope");
        assert!(matches!(DatasetFile::from_text(&bad_mode), Err(SdiError::Malformed { .. })));
        let bad_dir = good.replace("direction: receding", "direction: sideways");
        assert!(matches!(GammaFile::from_text(&bad_dir), Err(SdiError::Malformed { .. })));
        let missing_key = good.replace("carrier_hz", "carrier");
        assert!(matches!(GammaFile::from_text(&missing_key), Err(SdiError::Malformed { .. })));
    }

    #[test]
    fn raw_if_round_trip() {
        let chirp = ChirpConfig { sample_count: 4, ..ChirpConfig::default() };
        let trace = |k: f64| IfTrace { samples: (0..4).map(|n| Complex64::new(k + n as f64 / 7.0, -k)).collect() };
        let file = RawIfFile {
            carrier: 79e9,
            step: 1e-4,
            direction: StageDirection::Approaching,
            chirp,
            mut_trace: trace(0.5),
            metal_traces: vec![trace(1.0), trace(2.0), trace(3.0)],
            provenance: "x\ny".into(),
        };
        let text = file.to_text();
        let back = RawIfFile::from_text(&text).unwrap();
        assert_eq!(back.provenance, "x y");
        assert_eq!(RawIfFile { provenance: "x y".into(), ..file.clone() }, back);

        let short = text.lines().filter(|l| !l.starts_with("metal 2")).collect::<Vec<_>>().join("\n");
        assert!(matches!(RawIfFile::from_text(&short), Err(SdiError::Malformed { .. })));
    }

    #[test]
    fn report_round_trip_and_curve_consistency() {
        let data = gamma_file((0..10).map(|m| Complex64::from_polar(0.2, -0.33 * m as f64)).collect()).dataset;
        let fit = crate::estimator::fit_permittivity(&data, &Default::default(), &Default::default()).unwrap();
        let report = ReportFile::new(fit, &data);
        let text = report.to_text();
        let back = ReportFile::from_text(&text).unwrap();
        assert_eq!(back, report);
        let written = ReportFile::fitted_from_text(&text).unwrap();
        let (a, b) = (back.fit.permittivity.real_part(), back.fit.permittivity.imag_part());
        for (m, w) in written.iter().enumerate() {
            let direct = model_gamma(a, b, back.fit.phase_offset, m, data.c1());
            assert!((w - direct).norm() <= 1e-12);
        }
    }

    #[test]
    fn bench_report_records_recompute_statistics() {
        let truths = [ComplexPermittivity::new(2.6, 0.1).unwrap(), ComplexPermittivity::new(7.0, 0.3).unwrap()];
        let opts = SweepOptions { phase_offset: PhaseOffset::Random, ..SweepOptions::default() };
        let report = run_sweep(&truths, &NoiseModel::default().with_seed(4), 3, &opts).unwrap();
        let text = bench_report_text(&report);
        let trials = read_bench_trials(&text).unwrap();
        assert_eq!(trials.len(), 6);
        for (t, truth) in truths.iter().enumerate() {
            let recs: Vec<TrialRecord> =
                trials.iter().filter(|(_, r)| r.truth_index == t).map(|(_, r)| r.clone()).collect();
            assert!(trials.iter().filter(|(_, r)| r.truth_index == t).all(|(tr, _)| tr == truth));
            let again = crate::bench::summarize(*truth, recs.iter());
            assert_eq!(again, report.summaries[t]);
        }
    }

    #[test]
    fn curve_columns() {
        let text = curve_text("t", 1e-4, &[Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0)]);
        let env = Envelope::parse(&text).unwrap();
        assert_eq!(env.columns, ["distance_m", "re", "im", "abs", "phase_rad"]);
        assert_eq!(env.rows[1].0, ["0.0001", "-1", "0", "1", &std::f64::consts::PI.to_string()]);
    }
}
