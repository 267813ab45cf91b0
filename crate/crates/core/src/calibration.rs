//! Refitting the empirical coefficients from tuning data.
//!
//! - The crop-height linear model `h = intercept + coef_l·σL + coef_p·σP` (dB inputs).
//! - The eight constants of the adjusted forward model, by least squares in dB.
//! - Residuals against the model without its wavelength term, which expose
//!   the per-band trend that term absorbs.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::forward::{forward_reflectivity_height_only, Band, BandProfile, DuboisConstants, SceneParams};
use crate::lm::{self, LeastSquaresProblem, LmOptions, NormalEquations, StopReason};
use crate::soil::dielectric_from_moisture;
use crate::synth::SampleRecord;
use crate::{kv, Error, Result};

/// Records used for fitting share the sample-table layout.
pub type TuningRecord = SampleRecord;

/// Upper clamp of the height estimate, m. Matches the top of the vegetated training range.
pub const HEIGHT_MAX: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightLmCoeffs {
    /// m.
    pub intercept: f64,
    /// m per dB of L-band reflectivity.
    pub coef_l: f64,
    /// m per dB of P-band reflectivity.
    pub coef_p: f64,
}

impl HeightLmCoeffs {
    pub const PUBLISHED: HeightLmCoeffs = HeightLmCoeffs {
        intercept: 3.119,
        coef_l: 0.1372,
        coef_p: 0.1117,
    };

    pub fn raw(&self, sigma_l_db: f64, sigma_p_db: f64) -> f64 {
        self.intercept + self.coef_l * sigma_l_db + self.coef_p * sigma_p_db
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        kv::write(
            path.as_ref(),
            &[
                ("intercept", self.intercept.to_string()),
                ("coef_l", self.coef_l.to_string()),
                ("coef_p", self.coef_p.to_string()),
            ],
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let m = kv::read(path)?;
        Ok(Self {
            intercept: kv::get_f64(&m, "intercept", path)?,
            coef_l: kv::get_f64(&m, "coef_l", path)?,
            coef_p: kv::get_f64(&m, "coef_p", path)?,
        })
    }
}

impl Default for HeightLmCoeffs {
    fn default() -> Self {
        Self::PUBLISHED
    }
}

/// Crop height from L and P reflectivities, clamped to `[0, HEIGHT_MAX]`.
pub fn estimate_height(sigma_l_db: f64, sigma_p_db: f64, coeffs: &HeightLmCoeffs) -> f64 {
    coeffs.raw(sigma_l_db, sigma_p_db).clamp(0.0, HEIGHT_MAX)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeightLmFit {
    pub coeffs: HeightLmCoeffs,
    /// Root-mean-square of the unclamped residuals, m.
    pub rmse: f64,
    /// `measured − fitted` per record, unclamped.
    pub residuals: Vec<f64>,
}

/// Ordinary least squares of crop height on `[1, σL, σP]`.
pub fn fit_height_lm(records: &[TuningRecord]) -> Result<HeightLmFit> {
    if records.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 records, got {}", records.len())));
    }
    let n = records.len();
    let x = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => records[i].sigma_l_db,
        _ => records[i].sigma_p_db,
    });
    let y = DVector::from_iterator(n, records.iter().map(|r| r.crop_height));
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > smax * 1e-10) {
        return Err(Error::Fit(
            "design [1, σL, σP] is rank deficient; records need distinct, non-collinear reflectivities".into(),
        ));
    }
    let beta = svd
        .solve(&y, 0.0)
        .map_err(|e| Error::Fit(format!("least squares solve failed: {e}")))?;
    let residuals: Vec<f64> = (&y - &x * &beta).iter().copied().collect();
    let rmse = (residuals.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
    Ok(HeightLmFit {
        coeffs: HeightLmCoeffs {
            intercept: beta[0],
            coef_l: beta[1],
            coef_p: beta[2],
        },
        rmse,
        residuals,
    })
}

/// `measured − σ_model` in dB, where the model keeps the crop-height term but drops the wavelength term.
pub fn residual_sigma_dif(measured_db: f64, scene: &SceneParams, constants: &DuboisConstants) -> Result<f64> {
    Ok(measured_db - forward_reflectivity_height_only(scene, constants)?.db)
}

/// One reflectivity measurement in one band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandObservation {
    pub band: Band,
    pub lambda_cm: f64,
    pub theta: f64,
    pub h_rms: f64,
    pub crop_height: f64,
    pub mv: f64,
    pub sigma_db: f64,
}

impl BandObservation {
    pub fn scene(&self) -> Result<SceneParams> {
        SceneParams::new(
            self.theta,
            self.h_rms,
            dielectric_from_moisture(self.mv)?,
            self.lambda_cm,
            self.crop_height,
        )
    }
}

/// Flattens records into one observation per available band.
pub fn observations(records: &[TuningRecord], bands: &BandProfile) -> Vec<BandObservation> {
    let mut out = Vec::with_capacity(records.len() * 3);
    for r in records {
        for band in Band::ALL {
            if let Some(sigma_db) = r.sigma_db(band) {
                out.push(BandObservation {
                    band,
                    lambda_cm: bands.wavelength_cm(band),
                    theta: r.theta,
                    h_rms: r.h_rms,
                    crop_height: r.crop_height,
                    mv: r.mv,
                    sigma_db,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSummary {
    pub band: Band,
    pub lambda_cm: f64,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-band distribution of [`residual_sigma_dif`], ordered P, L, C. Bands with no data are omitted.
pub fn residual_summaries(obs: &[BandObservation], constants: &DuboisConstants) -> Result<Vec<ResidualSummary>> {
    let mut out = Vec::new();
    for band in Band::ALL {
        let mut vals = Vec::new();
        let mut lambda_cm = 0.0;
        for o in obs.iter().filter(|o| o.band == band) {
            vals.push(residual_sigma_dif(o.sigma_db, &o.scene()?, constants)?);
            lambda_cm = o.lambda_cm;
        }
        if vals.is_empty() {
            continue;
        }
        vals.sort_by(f64::total_cmp);
        out.push(ResidualSummary {
            band,
            lambda_cm,
            n: vals.len(),
            min: vals[0],
            q1: quantile(&vals, 0.25),
            median: quantile(&vals, 0.5),
            q3: quantile(&vals, 0.75),
            max: vals[vals.len() - 1],
            mean: vals.iter().sum::<f64>() / vals.len() as f64,
        });
    }
    Ok(out)
}

/// Quadratic wavelength trend of the residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavelengthTrend {
    /// Per m².
    pub c0: f64,
    /// Per m.
    pub d0: f64,
    pub e0: f64,
}

/// Least squares of `residual_db / 10` on `[λ², λ, 1]`, λ in metres.
/// Needs observations at three or more distinct wavelengths.
pub fn fit_wavelength_trend(obs: &[BandObservation], constants: &DuboisConstants) -> Result<WavelengthTrend> {
    let mut lambdas: Vec<f64> = obs.iter().map(|o| o.lambda_cm).collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    if lambdas.len() < 3 {
        return Err(Error::Fit(format!(
            "wavelength trend needs three distinct wavelengths, got {}",
            lambdas.len()
        )));
    }
    let n = obs.len();
    let x = DMatrix::from_fn(n, 3, |i, j| {
        let l = obs[i].lambda_cm / 100.0;
        [l * l, l, 1.0][j]
    });
    let mut y = DVector::zeros(n);
    for (i, o) in obs.iter().enumerate() {
        y[i] = residual_sigma_dif(o.sigma_db, &o.scene()?, constants)? / 10.0;
    }
    let beta = x
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| Error::Fit(e.to_string()))?;
    Ok(WavelengthTrend {
        c0: beta[0],
        d0: beta[1],
        e0: beta[2],
    })
}

/// `∂(10·log10 σ)/∂k` for each constant; the log-model is linear in all eight,
/// so this row is also the regressor row of the dB-domain fit.
fn db_gradient(o: &BandObservation, eps: f64) -> [f64; 8] {
    let t = o.theta.to_radians();
    let kh = std::f64::consts::TAU / o.lambda_cm * o.h_rms;
    let lm = o.lambda_cm / 100.0;
    [
        10.0 * (kh * t.sin()).log10(),
        10.0 * o.lambda_cm.log10(),
        10.0 * eps * t.tan(),
        10.0,
        10.0 * o.crop_height,
        10.0,
        10.0 * lm * lm,
        10.0 * lm,
    ]
}

/// Model reflectivity in dB for an observation's conditions.
pub fn model_db(o: &BandObservation, constants: &DuboisConstants) -> Result<f64> {
    Ok(crate::forward::forward_reflectivity(&o.scene()?, constants)?.db)
}

/// Mean squared dB error between observations and the full model.
pub fn dubois_objective(obs: &[BandObservation], constants: &DuboisConstants) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::Input("no observations".into()));
    }
    let mut sse = 0.0;
    for o in obs {
        sse += (model_db(o, constants)? - o.sigma_db).powi(2);
    }
    Ok(sse / obs.len() as f64)
}

struct DuboisProblem<'a> {
    obs: &'a [BandObservation],
    eps: Vec<f64>,
    k: DuboisConstants,
}

impl DuboisProblem<'_> {
    fn residuals(&self) -> Result<DVector<f64>> {
        let mut r = DVector::zeros(self.obs.len());
        for (i, o) in self.obs.iter().enumerate() {
            r[i] = model_db(o, &self.k)? - o.sigma_db;
        }
        Ok(r)
    }
}

impl LeastSquaresProblem for DuboisProblem<'_> {
    fn num_params(&self) -> usize {
        8
    }

    fn params(&self) -> DVector<f64> {
        DVector::from_row_slice(&self.k.to_array())
    }

    fn set_params(&mut self, params: &DVector<f64>) {
        let mut a = [0.0; 8];
        a.copy_from_slice(params.as_slice());
        self.k = DuboisConstants::from_array(a);
    }

    fn sse(&self) -> Result<(f64, usize)> {
        let r = self.residuals()?;
        Ok((r.norm_squared(), r.len()))
    }

    fn normal_equations(&self) -> Result<NormalEquations> {
        let r = self.residuals()?;
        let j = DMatrix::from_fn(self.obs.len(), 8, |i, c| db_gradient(&self.obs[i], self.eps[i])[c]);
        Ok(NormalEquations::from_jacobian(&j, &r))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DuboisFit {
    pub constants: DuboisConstants,
    /// Mean squared dB error at the fitted constants.
    pub mse: f64,
    pub iterations: usize,
    pub stop: StopReason,
}

/// Options for [`fit_dubois_constants`]: tight goal and a relative-improvement stop.
pub fn dubois_fit_options() -> LmOptions {
    LmOptions {
        max_iter: 200,
        mse_goal: 1e-24,
        rel_improvement_tol: 1e-12,
        ..LmOptions::default()
    }
}

/// Minimises the dB-domain mean squared error over all eight constants.
///
/// `b`, `c0` and `d0` (plus the shared offset of `d` and `b0`) are not
/// separately identifiable from three wavelengths; the damped solver settles
/// on one member of the equivalent family, so judge fits by prediction.
pub fn fit_dubois_constants(obs: &[BandObservation], init: &DuboisConstants, opts: &LmOptions) -> Result<DuboisFit> {
    let mut bands: Vec<Band> = obs.iter().map(|o| o.band).collect();
    bands.sort();
    bands.dedup();
    if bands.len() < 3 {
        return Err(Error::Fit(format!(
            "constant fit needs all three bands, found {}",
            bands.iter().map(|b| b.name()).collect::<Vec<_>>().join(", ")
        )));
    }
    let distinct = |f: fn(&BandObservation) -> f64| {
        let mut v: Vec<f64> = obs.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.len()
    };
    if distinct(|o| o.mv) < 2 || distinct(|o| o.crop_height) < 2 {
        return Err(Error::Fit(
            "constant fit needs at least two moisture values and two crop heights".into(),
        ));
    }
    if !init.is_finite() {
        return Err(Error::Config("initial constants must be finite".into()));
    }
    let eps = obs
        .iter()
        .map(|o| dielectric_from_moisture(o.mv))
        .collect::<Result<Vec<_>>>()?;
    let mut problem = DuboisProblem { obs, eps, k: *init };
    let report = lm::minimize(&mut problem, opts)?;
    if report.stop == StopReason::MaxIterations {
        return Err(Error::NotConverged {
            what: "Dubois constant fit".into(),
            best: problem.k.to_array().to_vec(),
            mse: report.final_mse,
        });
    }
    Ok(DuboisFit {
        constants: problem.k,
        mse: report.final_mse,
        iterations: report.iterations,
        stop: report.stop,
    })
}

pub fn save_constants(k: &DuboisConstants, path: impl AsRef<Path>) -> Result<()> {
    let pairs: Vec<(&str, String)> = DuboisConstants::NAMES
        .iter()
        .zip(k.to_array())
        .map(|(n, v)| (*n, v.to_string()))
        .collect();
    kv::write(path.as_ref(), &pairs)
}

pub fn load_constants(path: impl AsRef<Path>) -> Result<DuboisConstants> {
    let path = path.as_ref();
    let m = kv::read(path)?;
    let mut a = [0.0; 8];
    for (slot, name) in a.iter_mut().zip(DuboisConstants::NAMES) {
        *slot = kv::get_f64(&m, name, path)?;
    }
    Ok(DuboisConstants::from_array(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::forward_reflectivity;
    use crate::synth::{generate, Range, RangeSpec, Scenario, SynthConfig};

    const H: HeightLmCoeffs = HeightLmCoeffs::PUBLISHED;

    #[test]
    fn height_examples() {
        // raw 3.119, clamped
        assert_eq!(estimate_height(0.0, 0.0, &H), 3.0);
        // 3.119 − 1.5092 − 1.3404
        assert!((estimate_height(-11.0, -12.0, &H) - 0.2694).abs() < 1e-12);
        assert!((H.raw(-14.0, -14.0) + 0.3656).abs() < 1e-12);
        assert_eq!(estimate_height(-14.0, -14.0, &H), 0.0);
    }

    #[test]
    fn height_is_affine_before_clamp() {
        for (l, p, d) in [(-11.0, -12.0, 0.5), (-10.0, -12.5, -0.3), (-12.0, -9.0, 1.25)] {
            let diff = estimate_height(l + d, p, &H) - estimate_height(l, p, &H);
            assert!((diff - H.coef_l * d).abs() < 1e-12);
        }
    }

    fn exact_records() -> Vec<TuningRecord> {
        let mut out = Vec::new();
        for i in 0..6 {
            for j in 0..5 {
                let l = -13.0 + 0.7 * i as f64;
                let p = -15.0 + 1.1 * j as f64 + 0.05 * i as f64;
                out.push(TuningRecord {
                    theta: 61.0,
                    h_rms: 2.21,
                    crop_height: H.raw(l, p),
                    sigma_p_db: p,
                    sigma_l_db: l,
                    sigma_c_db: None,
                    mv: 0.25,
                });
            }
        }
        out
    }

    #[test]
    fn ols_recovers_exact_coefficients() {
        let fit = fit_height_lm(&exact_records()).unwrap();
        assert!((fit.coeffs.intercept - 3.119).abs() < 1e-9);
        assert!((fit.coeffs.coef_l - 0.1372).abs() < 1e-9);
        assert!((fit.coeffs.coef_p - 0.1117).abs() < 1e-9);
        assert!(fit.rmse < 1e-9);
    }

    #[test]
    fn ols_residuals_are_orthogonal_to_design() {
        let set = generate(&SynthConfig::new(Scenario::Vegetated).n(300).seed(4)).unwrap();
        let fit = fit_height_lm(&set.records).unwrap();
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for (r, e) in set.records.iter().zip(&fit.residuals) {
            s0 += e;
            s1 += e * r.sigma_l_db;
            s2 += e * r.sigma_p_db;
        }
        assert!(s0.abs() < 1e-9 && s1.abs() < 1e-9 && s2.abs() < 1e-9, "{s0} {s1} {s2}");
    }

    #[test]
    fn degenerate_design_is_rejected() {
        let mut recs = exact_records();
        for r in &mut recs {
            r.sigma_l_db = -10.0;
            r.sigma_p_db = -12.0;
        }
        assert!(matches!(fit_height_lm(&recs), Err(Error::Fit(_))));
        assert!(fit_height_lm(&recs[..2]).is_err());
    }

    #[test]
    fn residual_examples() {
        let k = DuboisConstants::PUBLISHED;
        let s = SceneParams::new(60.0, 2.21, 16.8891, 22.8, 0.4).unwrap();
        let base = forward_reflectivity_height_only(&s, &k).unwrap().db;
        assert_eq!(residual_sigma_dif(base, &s, &k).unwrap(), 0.0);
        assert!((residual_sigma_dif(base + 3.0, &s, &k).unwrap() - 3.0).abs() < 1e-12);
        // against the full model the residual is exactly 10·log10 n_w
        let full = forward_reflectivity(&s, &k).unwrap().db;
        let nw = crate::forward::wavelength_term(22.8, &k).unwrap();
        assert!((residual_sigma_dif(full, &s, &k).unwrap() - 10.0 * nw.log10()).abs() < 1e-12);
    }

    fn noiseless_obs(n: usize, seed: u64) -> Vec<BandObservation> {
        let ranges = RangeSpec {
            crop_height: Range::new(0.0, 3.0),
            ..RangeSpec::BARE
        };
        let set = generate(
            &SynthConfig::new(Scenario::Bare)
                .n(n)
                .seed(seed)
                .noise_db(0.0)
                .ranges(ranges),
        )
        .unwrap();
        observations(&set.records, &BandProfile::default())
    }

    #[test]
    fn wavelength_trend_recovers_quadratic() {
        let obs = noiseless_obs(60, 1);
        let trend = fit_wavelength_trend(&obs, &DuboisConstants::PUBLISHED).unwrap();
        assert!((trend.c0 + 2.4).abs() < 1e-9, "{trend:?}");
        assert!((trend.d0 - 1.76).abs() < 1e-9);
        assert!(trend.e0.abs() < 1e-9);
        let summaries = residual_summaries(&obs, &DuboisConstants::PUBLISHED).unwrap();
        assert_eq!(summaries.len(), 3);
        for s in &summaries {
            let lm = s.lambda_cm / 100.0;
            let expect = 10.0 * (-2.4 * lm * lm + 1.76 * lm);
            assert!((s.median - expect).abs() < 1e-9);
            assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
        }
    }

    #[test]
    fn objective_is_scaled_log_least_squares() {
        let k = DuboisConstants::PUBLISHED;
        let obs = [
            BandObservation {
                band: Band::P,
                lambda_cm: 70.5,
                theta: 60.0,
                h_rms: 2.21,
                crop_height: 0.0,
                mv: 0.30,
                sigma_db: -4.0,
            },
            BandObservation {
                band: Band::L,
                lambda_cm: 22.8,
                theta: 60.0,
                h_rms: 2.21,
                crop_height: 0.0,
                mv: 0.30,
                sigma_db: 2.0,
            },
            BandObservation {
                band: Band::C,
                lambda_cm: 5.6,
                theta: 62.0,
                h_rms: 2.0,
                crop_height: 1.0,
                mv: 0.2,
                sigma_db: 9.0,
            },
        ];
        // hand evaluation of log10 σ for each case
        let log_sigma = |theta: f64, h_rms: f64, mv: f64, lam: f64, h: f64| {
            let t: f64 = theta.to_radians();
            let eps = 3.03 + 9.3 * mv + 146.0 * mv * mv - 76.7 * mv * mv * mv;
            let lm = lam / 100.0;
            1.5 * t.cos().log10() - 5.0 * t.sin().log10()
                + 1.4 * (std::f64::consts::TAU / lam * h_rms * t.sin()).log10()
                + (0.014 * eps * t.tan() - 0.72)
                + 0.47 * lam.log10()
                + (0.42 * h + 0.17)
                + (-2.4 * lm * lm + 1.76 * lm)
        };
        let expect = obs
            .iter()
            .map(|o| (10.0 * log_sigma(o.theta, o.h_rms, o.mv, o.lambda_cm, o.crop_height) - o.sigma_db).powi(2))
            .sum::<f64>()
            / 3.0;
        let got = dubois_objective(&obs, &k).unwrap();
        assert!((got - expect).abs() < 1e-10 * expect, "{got} vs {expect}");
    }

    #[test]
    fn db_gradient_matches_finite_differences() {
        let obs = noiseless_obs(4, 3);
        let k = DuboisConstants::PUBLISHED;
        for o in &obs {
            let eps = dielectric_from_moisture(o.mv).unwrap();
            let g = db_gradient(o, eps);
            for (c, gc) in g.iter().enumerate() {
                let mut up = k.to_array();
                let mut dn = k.to_array();
                up[c] += 1e-6;
                dn[c] -= 1e-6;
                let fd = (model_db(o, &DuboisConstants::from_array(up)).unwrap()
                    - model_db(o, &DuboisConstants::from_array(dn)).unwrap())
                    / 2e-6;
                assert!((fd - gc).abs() < 1e-5 * gc.abs().max(1.0), "param {c}: {fd} vs {gc}");
            }
        }
    }

    #[test]
    fn fit_from_truth_is_immediate() {
        let obs = noiseless_obs(40, 2);
        let fit = fit_dubois_constants(&obs, &DuboisConstants::PUBLISHED, &dubois_fit_options()).unwrap();
        assert!(fit.mse < 1e-18);
        assert_eq!(fit.iterations, 0);
    }

    #[test]
    fn fit_from_perturbed_start_predicts_generator() {
        let obs = noiseless_obs(200, 5);
        let mut init = DuboisConstants::PUBLISHED.to_array();
        for (i, v) in init.iter_mut().enumerate() {
            *v *= if i % 2 == 0 { 1.1 } else { 0.9 };
        }
        let fit = fit_dubois_constants(&obs, &DuboisConstants::from_array(init), &dubois_fit_options()).unwrap();
        let check = noiseless_obs(50, 99);
        for o in &check {
            let a = model_db(o, &fit.constants).unwrap();
            assert!((a - o.sigma_db).abs() < 0.1);
        }
        let hist_ok = fit.mse <= dubois_objective(&obs, &DuboisConstants::from_array(init)).unwrap();
        assert!(hist_ok);
    }

    #[test]
    fn fit_preconditions() {
        let obs = noiseless_obs(20, 6);
        let l_only: Vec<_> = obs.iter().copied().filter(|o| o.band == Band::L).collect();
        assert!(matches!(
            fit_dubois_constants(&l_only, &DuboisConstants::PUBLISHED, &dubois_fit_options()),
            Err(Error::Fit(_))
        ));
        let mut flat = obs.clone();
        for o in &mut flat {
            o.crop_height = 0.2;
        }
        assert!(fit_dubois_constants(&flat, &DuboisConstants::PUBLISHED, &dubois_fit_options()).is_err());
    }

    #[test]
    fn coefficient_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let hp = dir.path().join("h.txt");
        let coeffs = HeightLmCoeffs {
            intercept: 0.41,
            coef_l: 0.113_3,
            coef_p: 0.0971,
        };
        coeffs.save(&hp).unwrap();
        assert_eq!(HeightLmCoeffs::load(&hp).unwrap(), coeffs);
        let kp = dir.path().join("k.txt");
        let k = DuboisConstants {
            b0: 0.123_456_789,
            ..DuboisConstants::PUBLISHED
        };
        save_constants(&k, &kp).unwrap();
        assert_eq!(load_constants(&kp).unwrap(), k);
    }
}
