//! Box-constrained nonlinear least squares by an interior trust-region
//! reflective Gauss-Newton method.
//!
//! Minimizes `½‖r(x)‖²` subject to `lower ≤ x ≤ upper` (either side may be
//! infinite). Iterates stay strictly inside the box. Each iteration scales the
//! variables with the Coleman-Li vector `v` (distance to the bound the
//! gradient points at), solves the trust-region subproblem in the scaled
//! space exactly by eigendecomposition, and then picks the best of three
//! candidate steps: the trust-region step truncated at the first bound, its
//! reflection off that bound, and the scaled steepest-descent step.
//!
//! Problems here have a handful of parameters, so dense `n × n` linear
//! algebra is used throughout.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// A residual vector and its Jacobian as functions of the parameters.
pub trait LeastSquaresProblem {
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Cap on trial steps (accepted or rejected).
    pub max_iterations: usize,
    /// Converged once `‖clamp(x − g) − x‖∞` falls below this.
    pub gradient_tol: f64,
    /// Converged once `‖Δx‖ < step_tol·(step_tol + ‖x‖)`.
    pub step_tol: f64,
    /// Converged once an unconstrained model step promises to lower the
    /// cost by less than `cost_tol·cost`.
    pub cost_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iterations: 500, gradient_tol: 1e-10, step_tol: 1e-12, cost_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Gradient,
    Step,
    /// Predicted reduction fell to rounding level.
    Cost,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: DVector<f64>,
    pub residuals: DVector<f64>,
    /// `‖r‖`, not the half-squared cost.
    pub residual_norm: f64,
    /// `JᵀJ` at the solution.
    pub jtj: DMatrix<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

impl Solution {
    pub fn converged(&self) -> bool {
        self.termination != Termination::MaxIterations
    }
}

pub fn solve<P: LeastSquaresProblem>(
    problem: &P,
    x0: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
    opts: &SolverOptions,
) -> Solution {
    let n = x0.len();
    assert_eq!(lower.len(), n);
    assert_eq!(upper.len(), n);

    let mut x = strictly_feasible(x0, lower, upper, 1e-10);
    let mut f = problem.residuals(&x);
    let mut jac = problem.jacobian(&x);
    let mut cost = 0.5 * f.norm_squared();
    let mut g = jac.tr_mul(&f);

    let (v, _) = cl_scaling(&x, &g, lower, upper);
    let mut delta = x.component_div(&v.map(f64::sqrt)).norm();
    if delta == 0.0 || !delta.is_finite() {
        delta = 1.0;
    }

    let mut iterations = 0;
    let termination = 'outer: loop {
        if projected_gradient_norm(&x, &g, lower, upper) < opts.gradient_tol {
            break Termination::Gradient;
        }
        let (v, dv) = cl_scaling(&x, &g, lower, upper);
        let d = v.map(f64::sqrt);
        let diag_h = g.component_mul(&dv);
        let g_h = d.component_mul(&g);
        let jac_h = &jac * DMatrix::from_diagonal(&d);
        let hess_h = jac_h.tr_mul(&jac_h) + DMatrix::from_diagonal(&diag_h);
        let theta = f64::max(0.995, 1.0 - v.component_mul(&g).amax());
        let model = QuadraticModel { jac_h: &jac_h, g_h: &g_h, diag_h: &diag_h };

        loop {
            if iterations >= opts.max_iterations {
                break 'outer Termination::MaxIterations;
            }
            iterations += 1;

            let p_h = trust_region_step(&hess_h, &g_h, delta);
            let p = d.component_mul(&p_h);
            let interior = p_h.norm() < delta;
            let (step, step_h, predicted) = select_step(&x, &model, p, p_h, &d, delta, lower, upper, theta);
            // Past this point accept/reject decisions are made on rounding
            // noise, and on a flat valley the iterate would wander.
            if interior && predicted < opts.cost_tol * cost {
                break 'outer Termination::Cost;
            }

            let x_new = strictly_feasible(&(&x + &step), lower, upper, 0.0);
            let step = &x_new - &x;
            let step_h_norm = step_h.norm();
            let f_new = problem.residuals(&x_new);

            if !f_new.iter().all(|r| r.is_finite()) {
                delta = 0.25 * step_h_norm;
                continue;
            }
            let cost_new = 0.5 * f_new.norm_squared();
            let actual = cost - cost_new;

            let ratio = if predicted > 0.0 {
                actual / predicted
            } else if predicted == 0.0 && actual == 0.0 {
                1.0
            } else {
                0.0
            };
            if ratio < 0.25 {
                delta = 0.25 * step_h_norm;
            } else if ratio > 0.75 && step_h_norm > 0.95 * delta {
                delta *= 2.0;
            }

            let small_step = step.norm() < opts.step_tol * (opts.step_tol + x.norm());
            if actual > 0.0 {
                x = x_new;
                f = f_new;
                cost = cost_new;
                jac = problem.jacobian(&x);
                g = jac.tr_mul(&f);
                if small_step {
                    break 'outer Termination::Step;
                }
                break;
            }
            if small_step {
                break 'outer Termination::Step;
            }
        }
    };

    Solution {
        residual_norm: f.norm(),
        jtj: jac.tr_mul(&jac),
        residuals: f,
        x,
        iterations,
        termination,
    }
}

/// Scaled quadratic model `½‖J_h s‖² + ½ sᵀ diag(diag_h) s + g_hᵀ s`.
struct QuadraticModel<'a> {
    jac_h: &'a DMatrix<f64>,
    g_h: &'a DVector<f64>,
    diag_h: &'a DVector<f64>,
}

impl QuadraticModel<'_> {
    fn value(&self, s: &DVector<f64>) -> f64 {
        let js = self.jac_h * s;
        0.5 * (js.norm_squared() + s.component_mul(s).dot(self.diag_h)) + self.g_h.dot(s)
    }

    /// Coefficients of `t ↦ a t² + b t + c` along `s0 + t s`.
    fn along(&self, s: &DVector<f64>, s0: Option<&DVector<f64>>) -> (f64, f64, f64) {
        let v = self.jac_h * s;
        let a = 0.5 * (v.norm_squared() + s.component_mul(s).dot(self.diag_h));
        let mut b = self.g_h.dot(s);
        let mut c = 0.0;
        if let Some(s0) = s0 {
            let u = self.jac_h * s0;
            b += u.dot(&v) + s0.component_mul(s).dot(self.diag_h);
            c = 0.5 * (u.norm_squared() + s0.component_mul(s0).dot(self.diag_h)) + self.g_h.dot(s0);
        }
        (a, b, c)
    }
}

fn minimize_quadratic_1d(a: f64, b: f64, lo: f64, hi: f64, c: f64) -> (f64, f64) {
    let eval = |t: f64| t * (a * t + b) + c;
    let mut best = (lo, eval(lo));
    let mut consider = |t: f64| {
        let y = eval(t);
        if y < best.1 {
            best = (t, y);
        }
    };
    consider(hi);
    if a != 0.0 {
        let t = -0.5 * b / a;
        if lo < t && t < hi {
            consider(t);
        }
    }
    best
}

/// Coleman-Li scaling vector and its (sign) derivative.
fn cl_scaling(
    x: &DVector<f64>,
    g: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let n = x.len();
    let mut v = DVector::from_element(n, 1.0);
    let mut dv = DVector::zeros(n);
    for i in 0..n {
        if g[i] < 0.0 && upper[i].is_finite() {
            v[i] = upper[i] - x[i];
            dv[i] = -1.0;
        } else if g[i] > 0.0 && lower[i].is_finite() {
            v[i] = x[i] - lower[i];
            dv[i] = 1.0;
        }
    }
    (v, dv)
}

fn projected_gradient_norm(x: &DVector<f64>, g: &DVector<f64>, lower: &DVector<f64>, upper: &DVector<f64>) -> f64 {
    (0..x.len())
        .map(|i| ((x[i] - g[i]).clamp(lower[i], upper[i]) - x[i]).abs())
        .fold(0.0, f64::max)
}

/// Moves `x` into the open box. With `rstep == 0` points on a bound are
/// nudged one ulp inward, otherwise by `rstep·max(1, |bound|)`.
fn strictly_feasible(x: &DVector<f64>, lower: &DVector<f64>, upper: &DVector<f64>, rstep: f64) -> DVector<f64> {
    let mut out = x.clone();
    for i in 0..x.len() {
        let (lo, hi) = (lower[i], upper[i]);
        let xi = x[i];
        out[i] = if rstep == 0.0 {
            let c = xi.clamp(lo, hi);
            if c == lo {
                next_toward(lo, hi)
            } else if c == hi {
                next_toward(hi, lo)
            } else {
                c
            }
        } else if xi <= lo {
            lo + rstep * lo.abs().max(1.0)
        } else if xi >= hi {
            hi - rstep * hi.abs().max(1.0)
        } else {
            xi
        };
        if !(lo < out[i] && out[i] < hi) {
            // box narrower than the nudge
            out[i] = 0.5 * (lo + hi);
        }
    }
    out
}

fn next_toward(from: f64, to: f64) -> f64 {
    if from == to || !from.is_finite() {
        return from;
    }
    let bits = from.to_bits();
    let up = to > from;
    let next = if from == 0.0 {
        if up { f64::from_bits(1) } else { -f64::from_bits(1) }
    } else if (from > 0.0) == up {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    };
    next
}

/// Largest `t ≥ 0` keeping `x + t s` in the box, and which coordinates hit
/// a bound at that `t` (sign of `s`, or 0).
fn step_to_bound(x: &DVector<f64>, s: &DVector<f64>, lower: &DVector<f64>, upper: &DVector<f64>) -> (f64, Vec<i8>) {
    let n = x.len();
    let mut steps = vec![f64::INFINITY; n];
    for i in 0..n {
        if s[i] != 0.0 {
            steps[i] = f64::max((lower[i] - x[i]) / s[i], (upper[i] - x[i]) / s[i]);
        }
    }
    let min_step = steps.iter().copied().fold(f64::INFINITY, f64::min);
    let hits = (0..n)
        .map(|i| {
            let close = (steps[i] - min_step).abs() <= 1e-8 * min_step.abs() + 1e-12;
            if min_step.is_finite() && close && s[i] != 0.0 {
                s[i].signum() as i8
            } else {
                0
            }
        })
        .collect();
    (min_step, hits)
}

/// Positive root `t` of `‖z + t s‖ = delta`, for `‖z‖ ≤ delta`.
fn intersect_trust_region(z: &DVector<f64>, s: &DVector<f64>, delta: f64) -> f64 {
    let a = s.norm_squared();
    if a == 0.0 {
        return f64::INFINITY;
    }
    let b = z.dot(s);
    let c = z.norm_squared() - delta * delta;
    let disc = (b * b - a * c).max(0.0).sqrt();
    let q = -(b + disc.copysign(b));
    let (t1, t2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    t1.max(t2)
}

fn in_bounds(x: &DVector<f64>, lower: &DVector<f64>, upper: &DVector<f64>) -> bool {
    (0..x.len()).all(|i| x[i] >= lower[i] && x[i] <= upper[i])
}

#[allow(clippy::too_many_arguments)]
fn select_step(
    x: &DVector<f64>,
    model: &QuadraticModel<'_>,
    mut p: DVector<f64>,
    mut p_h: DVector<f64>,
    d: &DVector<f64>,
    delta: f64,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
    theta: f64,
) -> (DVector<f64>, DVector<f64>, f64) {
    if in_bounds(&(x + &p), lower, upper) {
        let value = model.value(&p_h);
        return (p, p_h, -value);
    }

    let (p_stride, hits) = step_to_bound(x, &p, lower, upper);

    // reflected direction
    let mut r_h = p_h.clone();
    for (i, hit) in hits.iter().enumerate() {
        if *hit != 0 {
            r_h[i] = -r_h[i];
        }
    }
    let r = d.component_mul(&r_h);

    p *= p_stride;
    p_h *= p_stride;
    let x_on_bound = x + &p;

    let to_tr = intersect_trust_region(&p_h, &r_h, delta);
    let (to_bound, _) = step_to_bound(&x_on_bound, &r, lower, upper);
    let r_stride = to_bound.min(to_tr);
    let (r_lo, r_hi) = if r_stride > 0.0 {
        let lo = (1.0 - theta) * p_stride / r_stride;
        let hi = if r_stride == to_bound { theta * to_bound } else { to_tr };
        (lo, hi)
    } else {
        (0.0, -1.0)
    };

    let (r_full, r_full_h, r_value) = if r_lo <= r_hi {
        let (a, b, c) = model.along(&r_h, Some(&p_h));
        let (t, value) = minimize_quadratic_1d(a, b, r_lo, r_hi, c);
        let rh = &p_h + &r_h * t;
        (d.component_mul(&rh), rh, value)
    } else {
        (r.clone(), r_h.clone(), f64::INFINITY)
    };

    // keep the truncated step strictly interior
    p *= theta;
    p_h *= theta;
    let p_value = model.value(&p_h);

    let ag_h = -model.g_h;
    let ag = d.component_mul(&ag_h);
    let ag_norm = ag_h.norm();
    let to_tr = if ag_norm > 0.0 { delta / ag_norm } else { 0.0 };
    let (to_bound, _) = step_to_bound(x, &ag, lower, upper);
    let ag_max = if to_bound < to_tr { theta * to_bound } else { to_tr };
    let (a, b, _) = model.along(&ag_h, None);
    let (t, ag_value) = minimize_quadratic_1d(a, b, 0.0, ag_max, 0.0);

    if p_value < r_value && p_value < ag_value {
        (p, p_h, -p_value)
    } else if r_value < p_value && r_value < ag_value {
        (r_full, r_full_h, -r_value)
    } else {
        (ag * t, ag_h * t, -ag_value)
    }
}

/// Minimizer of `gᵀp + ½pᵀHp` over `‖p‖ ≤ delta` for symmetric PSD `H`.
///
/// Directions with (numerically) zero curvature and zero gradient component
/// are left untouched, so a flat valley yields the minimum-norm step.
fn trust_region_step(hess: &DMatrix<f64>, g: &DVector<f64>, delta: f64) -> DVector<f64> {
    let eig = SymmetricEigen::new(hess.clone());
    let lam = eig.eigenvalues.map(|l| l.max(0.0));
    let w = eig.eigenvectors.tr_mul(g);
    let lam_max = lam.max();
    let floor = 1e-10 * lam_max.max(f64::MIN_POSITIVE);

    let step_for = |mu: f64| -> DVector<f64> {
        let coeffs = DVector::from_iterator(
            w.len(),
            (0..w.len()).map(|i| {
                let denom = lam[i] + mu;
                if denom <= floor {
                    0.0
                } else {
                    -w[i] / denom
                }
            }),
        );
        &eig.eigenvectors * coeffs
    };

    let gauss_newton = step_for(0.0);
    if gauss_newton.norm() <= delta {
        return gauss_newton;
    }

    // ‖p(μ)‖ decreases monotonically in μ; bracket then Newton on 1/‖p‖ − 1/Δ.
    let mut lo = 0.0;
    let mut hi = g.norm() / delta;
    let mut mu = 1e-3 * hi;
    for _ in 0..100 {
        let mut norm_sq = 0.0;
        let mut deriv = 0.0;
        for i in 0..w.len() {
            let denom = lam[i] + mu;
            if denom > floor {
                norm_sq += w[i] * w[i] / (denom * denom);
                deriv += w[i] * w[i] / (denom * denom * denom);
            }
        }
        let norm = norm_sq.sqrt();
        if (norm - delta).abs() <= 1e-12 * delta {
            break;
        }
        if norm > delta {
            lo = mu;
        } else {
            hi = mu;
        }
        // φ(μ) = 1/‖p‖ − 1/Δ, φ'(μ) = Σ w²/(λ+μ)³ / ‖p‖³
        let phi = 1.0 / norm - 1.0 / delta;
        let dphi = deriv / (norm * norm_sq);
        let mut next = mu - phi / dphi;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == mu {
            break;
        }
        mu = next;
    }
    let p = step_for(mu);
    let norm = p.norm();
    if norm > delta {
        p * (delta / norm)
    } else {
        p
    }
}
