//! Fitting `(ε', ε'', Δφ)` to a calibrated small-distance-increment sweep.
//!
//! The measured sequence is modelled as
//! `Γ(m) = (1 − √ε)/(1 + √ε) · e^{j(c − C₁m)}` with `ε = a − jb`, `c` the
//! unknown phase offset and `C₁ = 2πf₀·2Δl/c₀` the per-step phase advance.
//! Residuals are the interleaved real and imaginary misfits, minimized under
//! `1 ≤ a ≤ a_max`, `0 ≤ b ≤ b_max`, with `c` free and wrapped on output.

use std::f64::consts::{PI, SQRT_2, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::em::{self, ComplexPermittivity, SlabGeometry, SPEED_OF_LIGHT};
use crate::error::{Result, SdiError};
use crate::solver::{self, LeastSquaresProblem, SolverOptions};

const DEGENERATE_MAGNITUDE: f64 = 1e-12;

/// Which way the reference moves between successive measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StageDirection {
    /// Reference moves away from the radar; phase falls as `e^{−jC₁m}`.
    #[default]
    Receding,
    /// Reference moves toward the radar; phase rises as `e^{+jC₁m}`.
    Approaching,
}

impl StageDirection {
    pub fn sign(self) -> f64 {
        match self {
            StageDirection::Receding => 1.0,
            StageDirection::Approaching => -1.0,
        }
    }
}

/// Calibrated reflection coefficients `Γ_mea(m)`, `m = 0..M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdiDataset {
    gammas: Vec<Complex64>,
    /// Δl, meters.
    step: f64,
    /// f₀, Hz.
    carrier: f64,
    direction: StageDirection,
}

impl SdiDataset {
    pub fn new(gammas: Vec<Complex64>, step: f64, carrier: f64, direction: StageDirection) -> Result<Self> {
        if gammas.len() < 3 {
            return Err(SdiError::invalid(format!("need at least 3 steps, got {}", gammas.len())));
        }
        if !gammas.iter().all(|g| g.is_finite()) {
            return Err(SdiError::invalid("reflection samples must be finite"));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(SdiError::invalid(format!("step {step} m must be positive")));
        }
        if !(carrier > 0.0 && carrier.is_finite()) {
            return Err(SdiError::invalid(format!("carrier {carrier} Hz must be positive")));
        }
        let c1 = per_step_phase(step, carrier);
        if c1 >= PI {
            return Err(SdiError::Aliasing(c1));
        }
        Ok(SdiDataset { gammas, step, carrier, direction })
    }

    pub fn gammas(&self) -> &[Complex64] {
        &self.gammas
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn step_count(&self) -> usize {
        self.gammas.len()
    }

    pub fn carrier(&self) -> f64 {
        self.carrier
    }

    pub fn direction(&self) -> StageDirection {
        self.direction
    }

    /// Signed `C₁` used by the model (positive for a receding reference).
    pub fn c1(&self) -> f64 {
        self.direction.sign() * per_step_phase(self.step, self.carrier)
    }

    /// A copy with every sample multiplied by `e^{jθ}`.
    pub fn rotated(&self, theta: f64) -> SdiDataset {
        let rot = Complex64::from_polar(1.0, theta);
        SdiDataset { gammas: self.gammas.iter().map(|g| g * rot).collect(), ..self.clone() }
    }
}

/// `2πf₀·2Δl/c₀`, radians per step.
pub fn per_step_phase(step: f64, carrier: f64) -> f64 {
    2.0 * PI * carrier * 2.0 * step / SPEED_OF_LIGHT
}

/// Wraps an angle into `[−π, π)`.
pub fn wrap_phase(x: f64) -> f64 {
    let w = x - TAU * ((x + PI) / TAU).floor();
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitBounds {
    pub a_max: f64,
    pub b_max: f64,
}

impl Default for FitBounds {
    fn default() -> Self {
        FitBounds { a_max: 100.0, b_max: 50.0 }
    }
}

impl FitBounds {
    pub fn new(a_max: f64, b_max: f64) -> Result<Self> {
        if !(a_max > 1.0 && b_max > 0.0) {
            return Err(SdiError::invalid(format!("bounds need a_max > 1 and b_max > 0 (got {a_max}, {b_max})")));
        }
        Ok(FitBounds { a_max, b_max })
    }

    fn contains(&self, a: f64, b: f64) -> bool {
        (1.0..=self.a_max).contains(&a) && (0.0..=self.b_max).contains(&b)
    }
}

/// Initial guesses for the multi-start fit.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Starts {
    /// `a ∈ {1.5, 3, 6, 12}`, `b ∈ {0.01, 0.5}`, `c` seeded from the phase
    /// of the first sample.
    #[default]
    Auto,
    Explicit(Vec<[f64; 3]>),
}

const AUTO_A: [f64; 4] = [1.5, 3.0, 6.0, 12.0];
const AUTO_B: [f64; 2] = [0.01, 0.5];

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub permittivity: ComplexPermittivity,
    /// Fitted phase offset in `[−π, π)`, radians.
    pub phase_offset: f64,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `JᵀJ` at the solution, ordered `(a, b, c)`.
    pub covariance_proxy: Option<[[f64; 3]; 3]>,
    /// Index into the start list of the reported solution.
    pub start_index: usize,
}

impl FitResult {
    /// Ratio of smallest to largest eigenvalue of the curvature proxy.
    ///
    /// Near zero when some parameter combination leaves the model unchanged.
    pub fn curvature_conditioning(&self) -> Option<f64> {
        let m = self.covariance_proxy?;
        let mat = nalgebra::Matrix3::from_fn(|i, j| m[i][j]);
        let eig = mat.symmetric_eigenvalues();
        let max = eig.max();
        (max > 0.0).then(|| eig.min().max(0.0) / max)
    }
}

/// `g₁`, `g₂`, `g₃` of the real-valued reformulation at step `m`.
fn g_terms(a: f64, b: f64, c: f64, m: f64, c1: f64) -> (f64, f64, f64) {
    let r = a.hypot(b);
    let plus = (r + a).sqrt();
    // √(r − a) without cancellation
    let minus = b / plus;
    let (sin, cos) = (c - c1 * m).sin_cos();
    let g1 = 1.0 + r + SQRT_2 * plus;
    let g2 = (1.0 - r) * cos - SQRT_2 * minus * sin;
    let g3 = (1.0 - r) * sin + SQRT_2 * minus * cos;
    (g1, g2, g3)
}

/// `(1 − √(a − jb))/(1 + √(a − jb)) · e^{j(c − C₁m)}`.
pub fn model_gamma(a: f64, b: f64, c: f64, m: usize, c1: f64) -> Complex64 {
    let (g1, g2, g3) = g_terms(a, b, c, m as f64, c1);
    Complex64::new(g2 / g1, g3 / g1)
}

fn check_params(a: f64, b: f64) -> Result<()> {
    if !(a >= 1.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
        return Err(SdiError::invalid(format!("parameters (a={a}, b={b}) outside a ≥ 1, b ≥ 0")));
    }
    Ok(())
}

/// Interleaved `[Re, Im]` misfits `Γ_mea(m) − model(m)`, length `2M`.
pub fn residuals(params: [f64; 3], data: &SdiDataset) -> Result<Vec<f64>> {
    let [a, b, c] = params;
    check_params(a, b)?;
    Ok(residuals_unchecked(a, b, c, data))
}

fn residuals_unchecked(a: f64, b: f64, c: f64, data: &SdiDataset) -> Vec<f64> {
    let c1 = data.c1();
    let mut out = Vec::with_capacity(2 * data.gammas.len());
    for (m, g) in data.gammas.iter().enumerate() {
        let (g1, g2, g3) = g_terms(a, b, c, m as f64, c1);
        out.push(g.re - g2 / g1);
        out.push(g.im - g3 / g1);
    }
    out
}

/// `∂residual/∂(a, b, c)`, a `2M × 3` matrix.
pub fn jacobian(params: [f64; 3], data: &SdiDataset) -> Result<DMatrix<f64>> {
    let [a, b, c] = params;
    check_params(a, b)?;
    Ok(jacobian_unchecked(a, b, c, data))
}

fn jacobian_unchecked(a: f64, b: f64, c: f64, data: &SdiDataset) -> DMatrix<f64> {
    // F(ε) = (1 − s)/(1 + s), s = √ε:  dF/dε = −1/(s(1 + s)²).
    // ε = a − jb, so ∂F/∂a = F' and ∂F/∂b = −jF'.
    let r = a.hypot(b);
    let plus = (r + a).sqrt();
    let s = Complex64::new(plus, -b / plus) / SQRT_2;
    let f = (1.0 - s) / (1.0 + s);
    let df = -1.0 / (s * (1.0 + s) * (1.0 + s));
    let c1 = data.c1();
    let n = data.gammas.len();
    let mut jac = DMatrix::zeros(2 * n, 3);
    for m in 0..n {
        let rot = Complex64::from_polar(1.0, c - c1 * m as f64);
        let da = df * rot;
        let db = Complex64::new(0.0, -1.0) * df * rot;
        let dc = Complex64::new(0.0, 1.0) * f * rot;
        for (col, d) in [da, db, dc].into_iter().enumerate() {
            jac[(2 * m, col)] = -d.re;
            jac[(2 * m + 1, col)] = -d.im;
        }
    }
    jac
}

struct SdiProblem<'a> {
    data: &'a SdiDataset,
}

impl LeastSquaresProblem for SdiProblem<'_> {
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(residuals_unchecked(x[0], x[1], x[2], self.data))
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        jacobian_unchecked(x[0], x[1], x[2], self.data)
    }
}

fn is_degenerate(gammas: &[Complex64]) -> bool {
    gammas.iter().all(|g| g.norm() < DEGENERATE_MAGNITUDE)
}

/// Picks the lowest residual among converged candidates. Residuals equal to
/// within floating-point noise count as ties and go to the earliest start.
fn pick_best(candidates: &[(f64, bool)]) -> Option<usize> {
    let best = candidates
        .iter()
        .filter(|(_, ok)| *ok)
        .map(|(r, _)| *r)
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return None;
    }
    let tie = best * (1.0 + 1e-8) + 1e-12;
    candidates.iter().position(|(r, ok)| *ok && *r <= tie)
}

/// Multi-start bounded least-squares fit of `(a, b, c)`.
pub fn fit_permittivity(data: &SdiDataset, bounds: &FitBounds, starts: &Starts) -> Result<FitResult> {
    fit_permittivity_with(data, bounds, starts, &SolverOptions::default())
}

pub fn fit_permittivity_with(
    data: &SdiDataset,
    bounds: &FitBounds,
    starts: &Starts,
    opts: &SolverOptions,
) -> Result<FitResult> {
    if is_degenerate(&data.gammas) {
        return Err(SdiError::DegenerateData);
    }
    let start_list: Vec<[f64; 3]> = match starts {
        Starts::Auto => {
            let phase0 = data.gammas[0].arg();
            AUTO_A
                .iter()
                .flat_map(|&a| AUTO_B.iter().map(move |&b| (a, b)))
                .filter(|&(a, b)| bounds.contains(a, b))
                .map(|(a, b)| [a, b, wrap_phase(phase0 - model_gamma(a, b, 0.0, 0, 0.0).arg())])
                .collect()
        }
        Starts::Explicit(list) => {
            if list.is_empty() {
                return Err(SdiError::invalid("empty start list"));
            }
            for s in list {
                if !bounds.contains(s[0], s[1]) || !s[2].is_finite() {
                    return Err(SdiError::invalid(format!("start {s:?} outside bounds")));
                }
            }
            list.clone()
        }
    };
    if start_list.is_empty() {
        return Err(SdiError::invalid("no automatic start lies inside the bounds"));
    }

    let lower = DVector::from_row_slice(&[1.0, 0.0, f64::NEG_INFINITY]);
    let upper = DVector::from_row_slice(&[bounds.a_max, bounds.b_max, f64::INFINITY]);
    // Each start solves for the offset relative to its own c₀ on data
    // de-rotated by c₀, so rotating the data rotates every trajectory
    // without changing the solver's view of ‖x‖.
    let solutions: Vec<_> = start_list
        .par_iter()
        .map(|s| {
            let local = data.rotated(-s[2]);
            let problem = SdiProblem { data: &local };
            let mut sol = solver::solve(&problem, &DVector::from_row_slice(&[s[0], s[1], 0.0]), &lower, &upper, opts);
            sol.x[2] += s[2];
            sol
        })
        .collect();

    let scores: Vec<_> = solutions.iter().map(|s| (s.residual_norm, s.converged())).collect();
    let Some(best) = pick_best(&scores) else {
        return Err(SdiError::NoConvergence { starts: start_list.len(), max_iterations: opts.max_iterations });
    };
    let sol = &solutions[best];
    let jtj = &sol.jtj;
    Ok(FitResult {
        permittivity: ComplexPermittivity::new(sol.x[0], sol.x[1])?,
        phase_offset: wrap_phase(sol.x[2]),
        residual_norm: sol.residual_norm,
        iterations: sol.iterations,
        converged: true,
        covariance_proxy: Some(std::array::from_fn(|i| std::array::from_fn(|j| jtj[(i, j)]))),
        start_index: best,
    })
}

/// Model values of a fit over `m = 0..count`.
pub fn fitted_curve(fit: &FitResult, c1: f64, count: usize) -> Vec<Complex64> {
    let (a, b) = (fit.permittivity.real_part(), fit.permittivity.imag_part());
    (0..count).map(|m| model_gamma(a, b, fit.phase_offset, m, c1)).collect()
}

struct IdealProblem<'a> {
    gammas: &'a [Complex64],
    geom: &'a SlabGeometry,
    step: f64,
    freq: f64,
}

impl IdealProblem<'_> {
    fn eval(&self, a: f64, b: f64) -> DVector<f64> {
        let n = self.gammas.len();
        let face = ComplexPermittivity::new(a, b)
            .and_then(|eps| em::effective_reflection(eps, self.geom, self.freq));
        let Ok(face) = face else {
            return DVector::from_element(2 * n, f64::NAN);
        };
        let mut out = DVector::zeros(2 * n);
        for (m, g) in self.gammas.iter().enumerate() {
            let dist = self.geom.standoff() + m as f64 * self.step;
            let model = em::translate_reflection(face, dist, self.freq);
            out[2 * m] = g.re - model.re;
            out[2 * m + 1] = g.im - model.im;
        }
        out
    }
}

impl LeastSquaresProblem for IdealProblem<'_> {
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        self.eval(x[0], x[1])
    }

    /// Central differences, one-sided at the `a = 1` and `b = 0` bounds.
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = 2 * self.gammas.len();
        let mut jac = DMatrix::zeros(n, 2);
        let lower = [1.0, 0.0];
        for col in 0..2 {
            let h = 1e-7 * x[col].abs().max(1.0);
            let mut hi = [x[0], x[1]];
            let mut lo = [x[0], x[1]];
            hi[col] += h;
            lo[col] = (lo[col] - h).max(lower[col]);
            let span = hi[col] - lo[col];
            let diff = (self.eval(hi[0], hi[1]) - self.eval(lo[0], lo[1])) / span;
            jac.set_column(col, &diff);
        }
        jac
    }
}

/// Fits `ε` to reflections recorded at absolute distances `l + mΔl` with the
/// full slab model and no phase offset.
///
/// Requires the absolute standoff and the slab geometry to be known exactly;
/// `geom.standoff()` is `l`.
pub fn fit_ideal(
    gammas_at_radar: &[Complex64],
    geom: &SlabGeometry,
    step: f64,
    freq: f64,
    bounds: &FitBounds,
) -> Result<FitResult> {
    if gammas_at_radar.is_empty() {
        return Err(SdiError::invalid("no samples"));
    }
    if !(step >= 0.0 && freq > 0.0) {
        return Err(SdiError::invalid("step must be non-negative and frequency positive"));
    }
    if is_degenerate(gammas_at_radar) {
        return Err(SdiError::DegenerateData);
    }
    let problem = IdealProblem { gammas: gammas_at_radar, geom, step, freq };
    let opts = SolverOptions::default();
    let lower = DVector::from_row_slice(&[1.0, 0.0]);
    let upper = DVector::from_row_slice(&[bounds.a_max, bounds.b_max]);
    let starts: Vec<[f64; 2]> = AUTO_A
        .iter()
        .flat_map(|&a| AUTO_B.iter().map(move |&b| [a, b]))
        .filter(|s| bounds.contains(s[0], s[1]))
        .collect();
    let solutions: Vec<_> = starts
        .par_iter()
        .map(|s| solver::solve(&problem, &DVector::from_row_slice(s), &lower, &upper, &opts))
        .collect();
    let scores: Vec<_> = solutions.iter().map(|s| (s.residual_norm, s.converged())).collect();
    let Some(best) = pick_best(&scores) else {
        return Err(SdiError::NoConvergence { starts: starts.len(), max_iterations: opts.max_iterations });
    };
    let sol = &solutions[best];
    Ok(FitResult {
        permittivity: ComplexPermittivity::new(sol.x[0], sol.x[1])?,
        phase_offset: 0.0,
        residual_norm: sol.residual_norm,
        iterations: sol.iterations,
        converged: true,
        covariance_proxy: None,
        start_index: best,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSlope {
    /// Degrees per millimeter of cumulative displacement.
    pub slope_deg_per_mm: f64,
    pub r_squared: f64,
}

/// Linear regression of the unwrapped sample phase against displacement.
pub fn phase_slope_diagnostic(data: &SdiDataset) -> Result<PhaseSlope> {
    let phases = unwrap(&data.gammas.iter().map(|g| g.arg()).collect::<Vec<_>>());
    let xs: Vec<f64> = (0..phases.len()).map(|m| m as f64 * data.step * 1e3).collect();
    let ys: Vec<f64> = phases.iter().map(|p| p.to_degrees()).collect();
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    if ss_tot <= f64::EPSILON * f64::EPSILON * (1.0 + mean_y * mean_y) * n {
        return Err(SdiError::DegenerateRegression { slope: 0.0 });
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(PhaseSlope { slope_deg_per_mm: slope, r_squared: 1.0 - ss_res / ss_tot })
}

/// Removes 2π jumps between consecutive phases.
pub fn unwrap(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let d = p - phases[i - 1];
            offset -= TAU * ((d + PI) / TAU).floor();
        }
        out.push(p + offset);
    }
    out
}
