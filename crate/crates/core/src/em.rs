//! Normal-incidence plane-wave reflection from a dielectric slab.
//!
//! Time convention is `e^{+jωt}` with waves travelling as `e^{-jkx}`, so a
//! lossy permittivity is written `ε' − jε''` and its wavenumber has a
//! non-positive imaginary part. Air on the incident side has `ε = 1` and all
//! materials are non-magnetic.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Result, SdiError};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const RESONANCE_GUARD: f64 = 1e-12;

/// Relative permittivity `ε' − jε''` of a passive dielectric.
///
/// `imag_part` stores the loss magnitude `ε''` as a non-negative number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPermittivity {
    real_part: f64,
    imag_part: f64,
}

impl ComplexPermittivity {
    pub const AIR: ComplexPermittivity = ComplexPermittivity { real_part: 1.0, imag_part: 0.0 };

    /// Requires `real_part ≥ 1` and `imag_part ≥ 0`.
    pub fn new(real_part: f64, imag_part: f64) -> Result<Self> {
        if !(real_part.is_finite() && imag_part.is_finite()) {
            return Err(SdiError::invalid("permittivity components must be finite"));
        }
        if real_part < 1.0 {
            return Err(SdiError::invalid(format!("ε' = {real_part} is below 1")));
        }
        if imag_part < 0.0 {
            return Err(SdiError::invalid(format!("ε'' = {imag_part} is negative")));
        }
        Ok(ComplexPermittivity { real_part, imag_part })
    }

    pub fn real_part(&self) -> f64 {
        self.real_part
    }

    pub fn imag_part(&self) -> f64 {
        self.imag_part
    }

    /// The permittivity as a complex number, `ε' − jε''`.
    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.real_part, -self.imag_part)
    }
}

impl std::fmt::Display for ComplexPermittivity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} - j{}", self.real_part, self.imag_part)
    }
}

/// Medium behind the slab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backing {
    /// Perfect conductor, reflection exactly −1.
    Metal,
    Dielectric(ComplexPermittivity),
}

impl Backing {
    pub const AIR: Backing = Backing::Dielectric(ComplexPermittivity::AIR);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabGeometry {
    /// Slab thickness `d` in meters.
    thickness: f64,
    /// Radar to front face distance `l` in meters.
    standoff: f64,
    backing: Backing,
}

impl SlabGeometry {
    pub fn new(thickness: f64, standoff: f64, backing: Backing) -> Result<Self> {
        if !(thickness > 0.0 && thickness.is_finite()) {
            return Err(SdiError::invalid(format!("slab thickness {thickness} m must be positive")));
        }
        if !(standoff > 0.0 && standoff.is_finite()) {
            return Err(SdiError::invalid(format!("standoff {standoff} m must be positive")));
        }
        Ok(SlabGeometry { thickness, standoff, backing })
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    pub fn standoff(&self) -> f64 {
        self.standoff
    }

    pub fn backing(&self) -> Backing {
        self.backing
    }
}

/// A monochromatic plane wave in a homogeneous medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveParams {
    /// Hz.
    frequency: f64,
    medium: ComplexPermittivity,
}

impl WaveParams {
    pub fn new(frequency: f64, medium: ComplexPermittivity) -> Result<Self> {
        if !(frequency > 0.0 && frequency.is_finite()) {
            return Err(SdiError::invalid(format!("frequency {frequency} Hz must be positive")));
        }
        Ok(WaveParams { frequency, medium })
    }

    pub fn in_air(frequency: f64) -> Result<Self> {
        Self::new(frequency, ComplexPermittivity::AIR)
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn medium(&self) -> ComplexPermittivity {
        self.medium
    }

    /// Free-space wavelength in meters.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency
    }

    /// `k = (ω/c)·√ε`, imaginary part ≤ 0.
    pub fn wavenumber(&self) -> Complex64 {
        complex_sqrt_lossy(self.medium) * (2.0 * PI * self.frequency / SPEED_OF_LIGHT)
    }
}

/// Square root of `a − jb` on the decaying-wave branch:
/// `(√2/2)(√(r + a) − j√(r − a))` with `r = √(a² + b²)`.
pub fn complex_sqrt_lossy(eps: ComplexPermittivity) -> Complex64 {
    let (a, b) = (eps.real_part, eps.imag_part);
    let r = a.hypot(b);
    let re = (0.5 * (r + a)).sqrt();
    // √((r − a)/2) = b/(2·re); a ≥ 1 keeps re away from zero.
    Complex64::new(re, -b / (2.0 * re))
}

/// Normal-incidence reflection and transmission going from `eps_from` into
/// `eps_to`.
pub fn fresnel_normal(eps_from: ComplexPermittivity, eps_to: ComplexPermittivity) -> (Complex64, Complex64) {
    let n_from = complex_sqrt_lossy(eps_from);
    let n_to = complex_sqrt_lossy(eps_to);
    let denom = n_from + n_to;
    ((n_from - n_to) / denom, 2.0 * n_from / denom)
}

/// Interface coefficients and round-trip factor of one slab configuration.
struct SlabTerms {
    gamma_1r: Complex64,
    /// `T_r1·Γ_r2·T_1r·e^{-j2k_r d}`, amplitude of the first internal bounce.
    first_bounce: Complex64,
    /// `Γ_r1·Γ_r2·e^{-j2k_r d}`, ratio between successive bounces.
    bounce_ratio: Complex64,
}

fn slab_terms(eps_r: ComplexPermittivity, geom: &SlabGeometry, freq: f64) -> Result<SlabTerms> {
    let (gamma_1r, t_1r) = fresnel_normal(ComplexPermittivity::AIR, eps_r);
    let (gamma_r1, t_r1) = fresnel_normal(eps_r, ComplexPermittivity::AIR);
    let gamma_r2 = match geom.backing {
        Backing::Metal => Complex64::new(-1.0, 0.0),
        Backing::Dielectric(eps_2) => fresnel_normal(eps_r, eps_2).0,
    };
    let k_r = WaveParams::new(freq, eps_r)?.wavenumber();
    let round_trip = (Complex64::new(0.0, -2.0) * k_r * geom.thickness).exp();
    Ok(SlabTerms {
        gamma_1r,
        first_bounce: t_r1 * gamma_r2 * t_1r * round_trip,
        bounce_ratio: gamma_r1 * gamma_r2 * round_trip,
    })
}

/// Total reflection at the slab front face including every internal bounce
/// (closed-form geometric series).
pub fn effective_reflection(eps_r: ComplexPermittivity, geom: &SlabGeometry, freq: f64) -> Result<Complex64> {
    let t = slab_terms(eps_r, geom, freq)?;
    let denom = Complex64::new(1.0, 0.0) - t.bounce_ratio;
    if denom.norm() < RESONANCE_GUARD {
        return Err(SdiError::DegenerateGeometry(denom.norm()));
    }
    Ok(t.gamma_1r + t.first_bounce / denom)
}

/// Front-face reflection with the first reflection plus transmitted
/// components `2..=q`, summed term by term.
pub fn effective_reflection_truncated(
    eps_r: ComplexPermittivity,
    geom: &SlabGeometry,
    freq: f64,
    q: usize,
) -> Result<Complex64> {
    if q < 2 {
        return Err(SdiError::invalid(format!("bounce count q = {q} must be at least 2")));
    }
    Ok(bounce_series(eps_r, geom, freq, q)?.into_iter().sum())
}

/// The first `q` components seen at the front face: `Γ_1r`, then
/// `T_r1·Γ_r2·T_1r·e^{-j2k_r d}·(Γ_r1·Γ_r2·e^{-j2k_r d})^{i-2}` for `i = 2..=q`.
pub fn bounce_series(eps_r: ComplexPermittivity, geom: &SlabGeometry, freq: f64, q: usize) -> Result<Vec<Complex64>> {
    let t = slab_terms(eps_r, geom, freq)?;
    let mut out = Vec::with_capacity(q);
    if q >= 1 {
        out.push(t.gamma_1r);
    }
    let mut term = t.first_bounce;
    for _ in 2..=q {
        out.push(term);
        term *= t.bounce_ratio;
    }
    Ok(out)
}

/// Moves a reflection coefficient from the slab face to a point `standoff`
/// meters in front of it: multiplies by `e^{j2k₁l}`.
pub fn translate_reflection(gamma_at_face: Complex64, standoff: f64, freq: f64) -> Complex64 {
    let k1 = 2.0 * PI * freq / SPEED_OF_LIGHT;
    gamma_at_face * Complex64::from_polar(1.0, 2.0 * k1 * standoff)
}

/// Near/far-field boundary `2D²/λ` for an aperture of size `aperture`.
pub fn fraunhofer_distance(aperture: f64, wavelength: f64) -> Result<f64> {
    if !(aperture > 0.0 && wavelength > 0.0) {
        return Err(SdiError::invalid("aperture and wavelength must be positive"));
    }
    Ok(2.0 * aperture * aperture / wavelength)
}
