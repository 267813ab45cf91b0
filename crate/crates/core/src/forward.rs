//! Adjusted Dubois forward model.
//!
//! The co-polarised reflectivity of a (possibly vegetated) soil surface is
//!
//! ```text
//! σ⁰ = f(θ) · g(kh, θ)^a · m(ε, θ) · λ^b · n_H(h) · n_w(λ)
//!
//! f(θ)    = cos(θ)^1.5 / sin(θ)^5
//! g(kh,θ) = kh · sin θ,                 k = 2π/λ
//! m(ε,θ)  = 10^(c·ε·tan θ + d)
//! n_H(h)  = 10^(a0·h + b0)               h: crop height in metres
//! n_w(λ)  = 10^(c0·λ_m² + d0·λ_m)        λ_m: wavelength in metres
//! ```
//!
//! One set of eight constants covers the P-HH, L-HH and C-VV channels.
//!
//! **Wavelength units.** `λ^b` takes the wavelength in centimetres, but
//! `n_w` takes it in **metres**. With centimetres the fitted `c0 = −2.4`
//! would drive `n_w` to ~10⁻⁶⁵ at C band; in metres it stays between about
//! 1.1 and 1.9 over P/L/C and peaks near 0.37 m. Every public function takes
//! centimetres and converts internally.
//!
//! Reflectivities are carried as linear power ratios; dB appears only at
//! I/O boundaries. All angles at the public surface are in degrees.

use crate::{Error, Result};

/// Fitted coefficients of the adjusted model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuboisConstants {
    /// Roughness exponent.
    pub a: f64,
    /// Wavelength exponent (λ in cm).
    pub b: f64,
    /// Moisture slope in `c·ε·tan θ`.
    pub c: f64,
    /// Moisture offset.
    pub d: f64,
    /// Crop-height slope, per metre.
    pub a0: f64,
    /// Crop-height offset (absorbs the constant of the wavelength term).
    pub b0: f64,
    /// Quadratic wavelength coefficient, per m².
    pub c0: f64,
    /// Linear wavelength coefficient, per m.
    pub d0: f64,
}

impl DuboisConstants {
    pub const PUBLISHED: DuboisConstants = DuboisConstants {
        a: 1.4,
        b: 0.47,
        c: 0.014,
        d: -0.72,
        a0: 0.42,
        b0: 0.17,
        c0: -2.4,
        d0: 1.76,
    };

    pub const NAMES: [&'static str; 8] = ["a", "b", "c", "d", "a0", "b0", "c0", "d0"];

    pub fn to_array(&self) -> [f64; 8] {
        [self.a, self.b, self.c, self.d, self.a0, self.b0, self.c0, self.d0]
    }

    pub fn from_array(v: [f64; 8]) -> Self {
        let [a, b, c, d, a0, b0, c0, d0] = v;
        Self {
            a,
            b,
            c,
            d,
            a0,
            b0,
            c0,
            d0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

impl Default for DuboisConstants {
    fn default() -> Self {
        Self::PUBLISHED
    }
}

/// Radar band of the three-band system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Band {
    P,
    L,
    C,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::P, Band::L, Band::C];

    pub fn name(self) -> &'static str {
        match self {
            Band::P => "P",
            Band::L => "L",
            Band::C => "C",
        }
    }
}

/// Centre wavelengths of the three bands, in centimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandProfile {
    pub p_cm: f64,
    pub l_cm: f64,
    pub c_cm: f64,
}

impl BandProfile {
    /// P 70.5 cm, L 22.8 cm, C 5.6 cm.
    pub const DRONE_SAR: BandProfile = BandProfile {
        p_cm: 70.5,
        l_cm: 22.8,
        c_cm: 5.6,
    };

    pub fn wavelength_cm(&self, band: Band) -> f64 {
        match band {
            Band::P => self.p_cm,
            Band::L => self.l_cm,
            Band::C => self.c_cm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for band in Band::ALL {
            let w = self.wavelength_cm(band);
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Config(format!(
                    "{} wavelength must be positive, got {w}",
                    band.name()
                )));
            }
        }
        Ok(())
    }
}

impl Default for BandProfile {
    fn default() -> Self {
        Self::DRONE_SAR
    }
}

/// Sensor geometry and surface state for one forward evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneParams {
    /// Incidence angle, degrees.
    pub theta: f64,
    /// Surface rms height, cm.
    pub h_rms: f64,
    /// Soil relative permittivity.
    pub eps: f64,
    /// Radar wavelength, cm.
    pub lambda_cm: f64,
    /// Crop height, m.
    pub crop_height: f64,
}

impl SceneParams {
    pub fn new(theta: f64, h_rms: f64, eps: f64, lambda_cm: f64, crop_height: f64) -> Result<Self> {
        let scene = Self {
            theta,
            h_rms,
            eps,
            lambda_cm,
            crop_height,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 90.0) {
            return Err(Error::domain(format!(
                "incidence angle {}° outside (0, 90)",
                self.theta
            )));
        }
        if !(self.h_rms > 0.0) {
            return Err(Error::domain(format!(
                "rms height must be positive, got {}",
                self.h_rms
            )));
        }
        if !(self.lambda_cm > 0.0) {
            return Err(Error::domain(format!(
                "wavelength must be positive, got {}",
                self.lambda_cm
            )));
        }
        if !(self.crop_height >= 0.0) || !self.crop_height.is_finite() {
            return Err(Error::domain(format!(
                "crop height must be >= 0, got {}",
                self.crop_height
            )));
        }
        if !self.eps.is_finite() {
            return Err(Error::domain("dielectric constant must be finite"));
        }
        Ok(())
    }

    pub fn normalized_roughness(&self) -> Result<f64> {
        normalized_roughness(self.h_rms, self.lambda_cm)
    }
}

/// A backscatter coefficient in both linear power and decibels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflectivity {
    pub linear: f64,
    pub db: f64,
}

impl Reflectivity {
    pub fn from_linear(linear: f64) -> Result<Self> {
        Ok(Self {
            linear,
            db: db_from_linear(linear)?,
        })
    }

    pub fn from_db(db: f64) -> Self {
        Self {
            linear: linear_from_db(db),
            db,
        }
    }
}

pub fn db_from_linear(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("cannot take dB of non-positive power {x}")));
    }
    Ok(10.0 * x.log10())
}

pub fn linear_from_db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

/// `k·h_rms` with `k = 2π/λ`; both lengths in cm.
pub fn normalized_roughness(h_rms: f64, lambda_cm: f64) -> Result<f64> {
    if !(h_rms > 0.0) || !(lambda_cm > 0.0) {
        return Err(Error::domain(format!(
            "rms height and wavelength must be positive, got {h_rms} and {lambda_cm}"
        )));
    }
    Ok(std::f64::consts::TAU / lambda_cm * h_rms)
}

/// `cos(θ)^1.5 / sin(θ)^5`. Exactly zero at grazing (90°).
pub fn angular_term(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= 90.0) {
        return Err(Error::domain(format!("incidence angle {theta}° outside (0, 90]")));
    }
    if theta == 90.0 {
        return Ok(0.0);
    }
    let t = theta.to_radians();
    Ok(t.cos().powf(1.5) / t.sin().powi(5))
}

pub fn roughness_term(h_lambda: f64, theta: f64) -> Result<f64> {
    if !(h_lambda >= 0.0) {
        return Err(Error::domain(format!(
            "normalized roughness must be >= 0, got {h_lambda}"
        )));
    }
    Ok(h_lambda * theta.to_radians().sin())
}

/// `10^(c·ε·tan θ + d)`.
pub fn moisture_term(eps: f64, theta: f64, k: &DuboisConstants) -> Result<f64> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::domain(format!("dielectric constant must be >= 0, got {eps}")));
    }
    if !(theta > 0.0 && theta < 90.0) {
        return Err(Error::domain(format!("incidence angle {theta}° outside (0, 90)")));
    }
    Ok(10f64.powf(k.c * eps * theta.to_radians().tan() + k.d))
}

/// `10^(a0·h + b0)`, crop height in metres.
pub fn height_term(crop_height: f64, k: &DuboisConstants) -> Result<f64> {
    if !(crop_height >= 0.0) {
        return Err(Error::domain(format!("crop height must be >= 0, got {crop_height}")));
    }
    Ok(10f64.powf(k.a0 * crop_height + k.b0))
}

/// `10^(c0·λ² + d0·λ)` with λ converted from cm to **metres**.
pub fn wavelength_term(lambda_cm: f64, k: &DuboisConstants) -> Result<f64> {
    if !(lambda_cm > 0.0) {
        return Err(Error::domain(format!("wavelength must be positive, got {lambda_cm}")));
    }
    let lm = lambda_cm / 100.0;
    Ok(10f64.powf(k.c0 * lm * lm + k.d0 * lm))
}

fn soil_and_height(scene: &SceneParams, k: &DuboisConstants) -> Result<f64> {
    scene.validate()?;
    let kh = scene.normalized_roughness()?;
    Ok(angular_term(scene.theta)?
        * roughness_term(kh, scene.theta)?.powf(k.a)
        * moisture_term(scene.eps, scene.theta, k)?
        * scene.lambda_cm.powf(k.b)
        * height_term(scene.crop_height, k)?)
}

/// Full adjusted model including the wavelength term.
pub fn forward_reflectivity(scene: &SceneParams, k: &DuboisConstants) -> Result<Reflectivity> {
    let linear = soil_and_height(scene, k)? * wavelength_term(scene.lambda_cm, k)?;
    Reflectivity::from_linear(linear)
}

/// The model with the crop-height term but `n_w ≡ 1`. Residuals against this
/// form expose the wavelength trend that `n_w` is fitted to.
pub fn forward_reflectivity_height_only(scene: &SceneParams, k: &DuboisConstants) -> Result<Reflectivity> {
    Reflectivity::from_linear(soil_and_height(scene, k)?)
}

/// Conditions outside which the original Dubois fit was validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Violation {
    /// m_v ≥ 0.35 cm³·cm⁻³.
    MoistureHigh,
    /// k·h_rms ≥ 3.
    RoughnessHigh,
    /// θ ≤ 30°.
    AngleLow,
}

impl Violation {
    pub fn name(self) -> &'static str {
        match self {
            Violation::MoistureHigh => "MoistureHigh",
            Violation::RoughnessHigh => "RoughnessHigh",
            Violation::AngleLow => "AngleLow",
        }
    }
}

pub const VALIDITY_MV_MAX: f64 = 0.35;
pub const VALIDITY_KH_MAX: f64 = 3.0;
pub const VALIDITY_THETA_MIN: f64 = 30.0;

/// Advisory check against the validity envelope; never fails.
pub fn validity_flags(theta: f64, kh: f64, mv: f64) -> Vec<Violation> {
    let mut flags = Vec::new();
    if !(mv < VALIDITY_MV_MAX) {
        flags.push(Violation::MoistureHigh);
    }
    if !(kh < VALIDITY_KH_MAX) {
        flags.push(Violation::RoughnessHigh);
    }
    if !(theta > VALIDITY_THETA_MIN) {
        flags.push(Violation::AngleLow);
    }
    flags
}

pub fn validity_check(scene: &SceneParams, mv: f64) -> Vec<Violation> {
    let kh = std::f64::consts::TAU / scene.lambda_cm * scene.h_rms;
    validity_flags(scene.theta, kh, mv)
}
