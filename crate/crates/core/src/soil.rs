//! Soil moisture quantities and the moisture/dielectric mixing model.
//!
//! The mixing model is the Topp (1980) cubic, valid for mineral soils over
//! `0 ≤ m_v ≤ 0.5`. It is the only place the crate maps moisture to
//! permittivity, so swapping the model means replacing the two functions
//! below and nothing else.

use crate::{Error, Result};

/// Upper end of the mixing-model domain, cm³·cm⁻³.
pub const MV_MAX: f64 = 0.5;

const TOPP: [f64; 4] = [3.03, 9.3, 146.0, -76.7];

/// A gravimetric sample with the densities needed to express it volumetrically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoistureSample {
    /// g water per g dry soil.
    pub gravimetric: f64,
    /// g·cm⁻³.
    pub bulk_density: f64,
    /// g·cm⁻³.
    pub water_density: f64,
    /// cm³·cm⁻³.
    pub volumetric: f64,
}

impl MoistureSample {
    /// Builds a sample with water density 1.0 g·cm⁻³.
    pub fn new(gravimetric: f64, bulk_density: f64) -> Result<Self> {
        Self::with_water_density(gravimetric, bulk_density, 1.0)
    }

    pub fn with_water_density(gravimetric: f64, bulk_density: f64, water_density: f64) -> Result<Self> {
        let volumetric = volumetric_from_gravimetric(gravimetric, bulk_density, water_density)?;
        Ok(Self {
            gravimetric,
            bulk_density,
            water_density,
            volumetric,
        })
    }
}

/// Volumetric moisture `W·ρa/ρw` from gravimetric moisture and the soil and water densities.
pub fn volumetric_from_gravimetric(gravimetric: f64, bulk_density: f64, water_density: f64) -> Result<f64> {
    if !(gravimetric >= 0.0) || !gravimetric.is_finite() {
        return Err(Error::domain(format!(
            "gravimetric moisture must be >= 0, got {gravimetric}"
        )));
    }
    if !(bulk_density > 0.0) || !(water_density > 0.0) {
        return Err(Error::domain(format!(
            "densities must be positive, got bulk {bulk_density}, water {water_density}"
        )));
    }
    Ok(gravimetric * bulk_density / water_density)
}

fn topp(mv: f64) -> f64 {
    TOPP[0] + mv * (TOPP[1] + mv * (TOPP[2] + mv * TOPP[3]))
}

/// Relative permittivity of moist soil for volumetric moisture `mv`.
pub fn dielectric_from_moisture(mv: f64) -> Result<f64> {
    if !(0.0..=MV_MAX).contains(&mv) {
        return Err(Error::domain(format!("moisture {mv} outside [0, {MV_MAX}]")));
    }
    Ok(topp(mv))
}

/// Inverse of [`dielectric_from_moisture`], by bisection on the monotone cubic.
pub fn moisture_from_dielectric(eps: f64) -> Result<f64> {
    let lo_eps = topp(0.0);
    let hi_eps = topp(MV_MAX);
    if !(lo_eps..=hi_eps).contains(&eps) {
        return Err(Error::domain(format!(
            "dielectric constant {eps} outside [{lo_eps}, {hi_eps}]"
        )));
    }
    let (mut lo, mut hi) = (0.0_f64, MV_MAX);
    // 60 halvings of 0.5 is well below 1e-12.
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if topp(mid) < eps {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
