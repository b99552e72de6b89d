//! `sdi` subcommands. Each `cmd_*` returns the text printed on stdout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{self, IfOptions, NoiseModel, PhaseOffset, SweepOptions};
use crate::em::{Backing, ComplexPermittivity, SlabGeometry, SPEED_OF_LIGHT};
use crate::error::{Result, SdiError};
use crate::estimator::{self, FitBounds, StageDirection, Starts};
use crate::fmcw::{self, ChirpConfig};
use crate::io::{self, DatasetFile, GammaFile, RawIfFile, ReportFile};

#[derive(Debug, Parser)]
#[command(name = "sdi", version, about = "Permittivity from small-distance-increment FMCW radar sweeps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset (calibrated reflections or raw IF traces).
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Turn a raw IF file into calibrated reflections.
    Extract(ExtractArgs),
    /// Fit permittivity and phase offset to a calibrated reflection file.
    Estimate(EstimateArgs),
    /// Compare a standoff with the Fraunhofer distance 2D²/λ.
    ///
    /// Bands are a convention of this tool: pass at two or more Fraunhofer
    /// distances, warn between one and two, fail below one.
    #[command(allow_negative_numbers = true)]
    CheckFarfield(FarfieldArgs),
    /// Monte-Carlo sweep over several materials with plot-ready curves.
    #[command(allow_negative_numbers = true)]
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Gamma,
    RawIf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    Receding,
    Approaching,
}

impl From<Direction> for StageDirection {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Receding => StageDirection::Receding,
            Direction::Approaching => StageDirection::Approaching,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackingArg {
    Metal,
    Air,
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    /// Relative amplitude noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    pub amplitude_rel_sigma: f64,
    /// Phase noise standard deviation, radians.
    #[arg(long, default_value_t = 0.0)]
    pub phase_sigma_rad: f64,
    /// End-to-end linear amplitude drift across the sweep.
    #[arg(long, default_value_t = 0.0)]
    pub amplitude_drift_rel: f64,
    /// Use the measured noise levels (5e-4, 0.8°, 1.22e-2) instead of the flags above.
    #[arg(long)]
    pub default_noise: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl NoiseArgs {
    fn model(&self) -> Result<NoiseModel> {
        let noise = if self.default_noise {
            NoiseModel::default().with_seed(self.seed)
        } else {
            NoiseModel {
                amplitude_rel_sigma: self.amplitude_rel_sigma,
                phase_sigma: self.phase_sigma_rad,
                amplitude_drift_rel: self.amplitude_drift_rel,
                seed: self.seed,
            }
        };
        noise.validate()?;
        Ok(noise)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ChirpArgs {
    #[arg(long, default_value_t = 1e9)]
    pub bandwidth_hz: f64,
    #[arg(long, default_value_t = 50e-6)]
    pub chirp_duration_s: f64,
    #[arg(long, default_value_t = 128)]
    pub sample_count: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub sample_interval_s: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 2.6)]
    pub eps_real: f64,
    /// Loss part ε″ of ε = ε′ − jε″ (non-negative).
    #[arg(long, default_value_t = 0.1)]
    pub eps_imag: f64,
    /// Phase offset Δφ in gamma mode, radians.
    #[arg(long, default_value_t = 0.0)]
    pub phase_offset_rad: f64,
    #[arg(long, default_value_t = 40)]
    pub step_count: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub step_m: f64,
    /// Carrier f₀; also the chirp start frequency in raw-if mode.
    #[arg(long, default_value_t = 79e9)]
    pub carrier_hz: f64,
    #[arg(long, value_enum, default_value_t = Direction::Receding)]
    pub direction: Direction,
    #[arg(long, value_enum, default_value_t = Mode::Gamma)]
    pub mode: Mode,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub chirp: ChirpArgs,
    #[arg(long, default_value_t = 0.01)]
    pub thickness_m: f64,
    #[arg(long, default_value_t = 0.25)]
    pub standoff_m: f64,
    #[arg(long, value_enum, default_value_t = BackingArg::Metal)]
    pub backing: BackingArg,
    /// Slab components in the material echo (1 = front face only).
    #[arg(long, default_value_t = 1)]
    pub bounces: usize,
    /// Material distance offset from the first metal position, meters.
    #[arg(long, default_value_t = 0.0)]
    pub mut_offset_m: f64,
    #[arg(long, default_value_t = 0.015)]
    pub aperture_m: f64,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 100.0)]
    pub a_max: f64,
    #[arg(long, default_value_t = 50.0)]
    pub b_max: f64,
    /// Report file with the fit and measured/fitted curve columns.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FarfieldArgs {
    /// Largest antenna aperture dimension D, meters.
    #[arg(long)]
    pub aperture_m: f64,
    /// Wavelength, meters. Give this or --frequency-hz.
    #[arg(long, conflicts_with = "frequency_hz", required_unless_present = "frequency_hz")]
    pub wavelength_m: Option<f64>,
    #[arg(long)]
    pub frequency_hz: Option<f64>,
    #[arg(long)]
    pub standoff_m: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Material `ε′,ε″` meaning ε′ − jε″; repeat for several.
    #[arg(long = "truth", value_parser = parse_truth)]
    pub truths: Vec<(f64, f64)>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Draw Δφ uniformly per trial instead of using --phase-offset-rad.
    #[arg(long)]
    pub random_phase: bool,
    #[arg(long, default_value_t = 0.0)]
    pub phase_offset_rad: f64,
    #[arg(long, default_value_t = 40)]
    pub step_count: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub step_m: f64,
    #[arg(long, default_value_t = 79e9)]
    pub carrier_hz: f64,
    #[arg(long, value_enum, default_value_t = Direction::Receding)]
    pub direction: Direction,
    #[arg(long, default_value_t = 100.0)]
    pub a_max: f64,
    #[arg(long, default_value_t = 50.0)]
    pub b_max: f64,
    /// Machine-readable sweep report.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Directory for per-material curve files `curve_<i>.dat`.
    #[arg(long)]
    pub curve_dir: Option<PathBuf>,
}

fn parse_truth(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `eps_real,eps_imag`, got `{s}`"))?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad eps_real `{a}`"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad eps_imag `{b}`"))?;
    Ok((a, b))
}

fn check_count(count: usize) -> Result<()> {
    if count < 3 {
        return Err(SdiError::invalid(format!("step count {count} must be at least 3")));
    }
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String> {
    let truth = ComplexPermittivity::new(args.eps_real, args.eps_imag)?;
    let noise = args.noise.model()?;
    check_count(args.step_count)?;
    let direction: StageDirection = args.direction.into();
    let provenance = format!("simulated eps={truth} seed={}", noise.seed);
    let mut out = String::new();
    let text = match args.mode {
        Mode::Gamma => {
            let dataset = bench::generate_dataset(
                truth,
                args.phase_offset_rad,
                args.step_count,
                args.step_m,
                args.carrier_hz,
                direction,
                &noise,
                0,
            )?;
            GammaFile { dataset, provenance }.to_text()
        }
        Mode::RawIf => {
            if direction != StageDirection::Receding {
                return Err(SdiError::invalid("raw-if simulation moves the metal away from the radar; use --direction receding"));
            }
            // fail early on aliasing, as the gamma path would
            estimator::SdiDataset::new(vec![num_complex::Complex64::new(0.0, 0.0); 3], args.step_m, args.carrier_hz, direction)?;
            let chirp = ChirpConfig {
                start_frequency: args.carrier_hz,
                bandwidth: args.chirp.bandwidth_hz,
                chirp_duration: args.chirp.chirp_duration_s,
                sample_count: args.chirp.sample_count,
                sample_interval: args.chirp.sample_interval_s,
                ..ChirpConfig::default()
            };
            let backing = match args.backing {
                BackingArg::Metal => Backing::Metal,
                BackingArg::Air => Backing::AIR,
            };
            let geom = SlabGeometry::new(args.thickness_m, args.standoff_m, backing)?;
            let opts = IfOptions { bounces: args.bounces, mut_offset: args.mut_offset_m, aperture: args.aperture_m };
            let sets = bench::generate_if_datasets(truth, &geom, &chirp, args.step_count, args.step_m, &noise, &opts, 0)?;
            if sets.farfield != bench::FarFieldVerdict::Pass {
                eprintln!(
                    "warning: standoff {} m is {} against twice the Fraunhofer distance",
                    args.standoff_m,
                    sets.farfield.as_str()
                );
            }
            RawIfFile {
                carrier: args.carrier_hz,
                step: args.step_m,
                direction,
                chirp,
                mut_trace: sets.mut_trace,
                metal_traces: sets.metal_traces,
                provenance,
            }
            .to_text()
        }
    };
    io::write_file(&args.output, &text)?;
    let _ = writeln!(out, "wrote {} steps to {}", args.step_count, args.output.display());
    Ok(out)
}

pub fn cmd_extract(args: &ExtractArgs) -> Result<String> {
    let raw = match DatasetFile::from_text(&io::read_file(&args.input)?)? {
        DatasetFile::RawIf(r) => r,
        DatasetFile::Gamma(_) => return Err(SdiError::invalid("extract needs a raw-if file, got a gamma file")),
    };
    let gammas = fmcw::extract_gammas(&raw.mut_trace, &raw.metal_traces)?;
    let dataset = estimator::SdiDataset::new(gammas, raw.step, raw.carrier, raw.direction)?;
    let provenance = format!("extracted from {}; {}", args.input.display(), raw.provenance);
    io::write_file(&args.output, &GammaFile { dataset, provenance }.to_text())?;
    Ok(format!("wrote {} calibrated steps to {}\n", raw.metal_traces.len(), args.output.display()))
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<String> {
    let data = match DatasetFile::from_text(&io::read_file(&args.input)?)? {
        DatasetFile::Gamma(g) => g.dataset,
        DatasetFile::RawIf(_) => return Err(SdiError::invalid("estimate needs a gamma file; run extract first")),
    };
    let bounds = FitBounds::new(args.a_max, args.b_max)?;
    let fit = estimator::fit_permittivity(&data, &bounds, &Starts::Auto)?;
    let mut out = String::new();
    let eps = fit.permittivity;
    let _ = writeln!(out, "eps_real        {}", eps.real_part());
    let _ = writeln!(out, "eps_imag        {}", eps.imag_part());
    let _ = writeln!(out, "permittivity    {eps}");
    let _ = writeln!(out, "phase_offset    {} rad ({:.4} deg)", fit.phase_offset, fit.phase_offset.to_degrees());
    let _ = writeln!(out, "residual_norm   {:e}", fit.residual_norm);
    let _ = writeln!(out, "converged       {} after {} iterations", fit.converged, fit.iterations);
    if let Some(cond) = fit.curvature_conditioning() {
        let _ = writeln!(out, "curvature_ratio {cond:e}");
    }
    match estimator::phase_slope_diagnostic(&data) {
        Ok(s) => {
            let _ = writeln!(out, "phase_slope     {:.4} deg/mm (R^2 {:.9})", s.slope_deg_per_mm, s.r_squared);
        }
        Err(e) => {
            let _ = writeln!(out, "phase_slope     unavailable: {e}");
        }
    }
    if let Some(path) = &args.output {
        io::write_file(path, &ReportFile::new(fit, &data).to_text())?;
        let _ = writeln!(out, "wrote report to {}", path.display());
    }
    Ok(out)
}

pub fn cmd_check_farfield(args: &FarfieldArgs) -> Result<String> {
    let wavelength = match (args.wavelength_m, args.frequency_hz) {
        (Some(w), _) => w,
        (None, Some(f)) if f > 0.0 => SPEED_OF_LIGHT / f,
        _ => return Err(SdiError::invalid("give a positive --wavelength-m or --frequency-hz")),
    };
    let (d_f, verdict) = bench::farfield_verdict(args.aperture_m, wavelength, args.standoff_m)?;
    Ok(format!(
        "fraunhofer_distance_m {d_f}\nstandoff_ratio {}\nverdict {}\n",
        args.standoff_m / d_f,
        verdict.as_str()
    ))
}

pub fn cmd_report(args: &ReportArgs) -> Result<String> {
    if args.truths.is_empty() {
        return Err(SdiError::invalid("give at least one --truth"));
    }
    check_count(args.step_count)?;
    let truths: Vec<ComplexPermittivity> =
        args.truths.iter().map(|&(a, b)| ComplexPermittivity::new(a, b)).collect::<Result<_>>()?;
    let noise = args.noise.model()?;
    let opts = SweepOptions {
        m_count: args.step_count,
        step: args.step_m,
        carrier: args.carrier_hz,
        direction: args.direction.into(),
        phase_offset: if args.random_phase { PhaseOffset::Random } else { PhaseOffset::Fixed(args.phase_offset_rad) },
        bounds: FitBounds::new(args.a_max, args.b_max)?,
    };
    // the sweep validates the step against the carrier through the datasets
    let report = bench::run_sweep(&truths, &noise, args.trials, &opts)?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:>6} {:>9} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "truth", "trials", "converged", "mean_a", "mean_b", "err_a", "err_b", "std_a", "std_b"
    );
    for s in &report.summaries {
        let _ = writeln!(
            out,
            "{:<16} {:>6} {:>9} {:>12.6} {:>12.6} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e}",
            s.truth.to_string(),
            s.trials,
            s.converged,
            s.mean_fitted[0],
            s.mean_fitted[1],
            s.mean_error[0],
            s.mean_error[1],
            s.std_error[0],
            s.std_error[1]
        );
    }
    if let Some(path) = &args.output {
        io::write_file(path, &io::bench_report_text(&report))?;
        let _ = writeln!(out, "wrote report to {}", path.display());
    }
    if let Some(dir) = &args.curve_dir {
        std::fs::create_dir_all(dir)?;
        let c1 = StageDirection::from(args.direction).sign() * estimator::per_step_phase(args.step_m, args.carrier_hz);
        for (i, truth) in truths.iter().enumerate() {
            let c0 = match opts.phase_offset {
                PhaseOffset::Fixed(c) => c,
                PhaseOffset::Random => 0.0,
            };
            let curve: Vec<_> = (0..args.step_count)
                .map(|m| estimator::model_gamma(truth.real_part(), truth.imag_part(), c0, m, c1))
                .collect();
            let path = curve_path(dir, i);
            io::write_file(&path, &io::curve_text(&format!("model reflection, eps = {truth}"), args.step_m, &curve))?;
        }
        let _ = writeln!(out, "wrote {} curve files to {}", truths.len(), dir.display());
    }
    Ok(out)
}

pub fn curve_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("curve_{index}.dat"))
}

pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::CheckFarfield(a) => cmd_check_farfield(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Parses `std::env::args`, runs the command and returns the exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("sdi").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn truth_parser() {
        assert_eq!(parse_truth("2.6,0.1").unwrap(), (2.6, 0.1));
        assert!(parse_truth("2.6").is_err());
        assert!(parse_truth("x,1").is_err());
    }

    #[test]
    fn farfield_command() {
        let cli = parse(&["check-farfield", "--aperture-m", "0.015", "--wavelength-m", "0.0038", "--standoff-m", "0.25"]);
        let out = run(&cli).unwrap();
        assert!(out.contains("verdict pass"), "{out}");
        let cli = parse(&["check-farfield", "--aperture-m", "0.015", "--frequency-hz", "79e9", "--standoff-m", "0.2"]);
        assert!(run(&cli).unwrap().contains("verdict warn"));
        let cli = parse(&["check-farfield", "--aperture-m", "-1", "--wavelength-m", "0.0038", "--standoff-m", "0.2"]);
        assert_eq!(run(&cli).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn farfield_requires_wavelength_or_frequency() {
        let r = Cli::try_parse_from(["sdi", "check-farfield", "--aperture-m", "0.015", "--standoff-m", "0.25"]);
        assert!(r.is_err());
    }

    #[test]
    fn report_needs_truths() {
        let cli = parse(&["report"]);
        assert_eq!(run(&cli).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn simulate_rejects_bad_flags() {
        let dir = std::env::temp_dir();
        let out = dir.join("sdi-cli-unit-never-written.txt");
        let out = out.to_str().unwrap();
        for bad in [
            vec!["simulate", "--eps-real", "0.5", "-o", out],
            vec!["simulate", "--step-count", "2", "-o", out],
            vec!["simulate", "--phase-sigma-rad", "-1", "-o", out],
            vec!["simulate", "--step-m", "1e-3", "-o", out],
        ] {
            assert_eq!(run(&parse(&bad)).unwrap_err().exit_code(), 2, "{bad:?}");
        }
    }
}
