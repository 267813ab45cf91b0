//! Complete retrieval: crop height from the linear model gates between the
//! bare-soil network (6 inputs, uses C band) and the vegetated-surface
//! network (5 inputs, ignores C band).

use std::path::Path;

use rayon::prelude::*;

use crate::calibration::{estimate_height, load_constants, save_constants, HeightLmCoeffs};
use crate::forward::{linear_from_db, validity_flags, Band, BandProfile, DuboisConstants, Violation};
use crate::nn::{lm_train, Mlp, MlpSpec, TrainOptions, TrainReport};
use crate::raster::{Raster, DEFAULT_NODATA};
use crate::soil::MV_MAX;
use crate::synth::{nn_input, to_nn_dataset, SampleSet, Scenario};
use crate::{kv, Error, Result};

pub const BUNDLE_VERSION: u32 = 1;
pub const DEFAULT_THRESHOLD_M: f64 = 0.5;
pub const DEFAULT_H_RMS_CM: f64 = 2.21;

pub type Branch = Scenario;

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalModel {
    pub constants: DuboisConstants,
    pub height_lm: HeightLmCoeffs,
    /// Bare-soil inverter, 6 inputs.
    pub bnn: Option<Mlp>,
    /// Vegetated-surface inverter, 5 inputs.
    pub vnn: Option<Mlp>,
    /// Heights at or above this use the vegetated network, m.
    pub height_threshold: f64,
    pub h_rms_default: f64,
    /// Used only for the roughness validity flag.
    pub bands: BandProfile,
}

impl Default for RetrievalModel {
    fn default() -> Self {
        Self {
            constants: DuboisConstants::default(),
            height_lm: HeightLmCoeffs::default(),
            bnn: None,
            vnn: None,
            height_threshold: DEFAULT_THRESHOLD_M,
            h_rms_default: DEFAULT_H_RMS_CM,
            bands: BandProfile::default(),
        }
    }
}

impl RetrievalModel {
    pub fn new(height_lm: HeightLmCoeffs, bnn: Mlp, vnn: Mlp) -> Result<Self> {
        let model = Self {
            height_lm,
            bnn: Some(bnn),
            vnn: Some(vnn),
            ..Self::default()
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(n) = &self.bnn {
            if n.inputs() != 6 {
                return Err(Error::Config(format!(
                    "bare-soil network must take 6 inputs, has {}",
                    n.inputs()
                )));
            }
        }
        if let Some(n) = &self.vnn {
            if n.inputs() != 5 {
                return Err(Error::Config(format!(
                    "vegetated network must take 5 inputs, has {}",
                    n.inputs()
                )));
            }
        }
        if !(self.height_threshold > 0.0 && self.height_threshold < crate::calibration::HEIGHT_MAX) {
            return Err(Error::Config(format!(
                "height threshold {} outside (0, 3) m",
                self.height_threshold
            )));
        }
        if !(self.h_rms_default > 0.0) {
            return Err(Error::Config("default rms height must be positive".into()));
        }
        self.bands.validate()
    }

    pub fn branch_for(&self, height: f64) -> Branch {
        if height < self.height_threshold {
            Branch::Bare
        } else {
            Branch::Vegetated
        }
    }

    fn network(&self, branch: Branch) -> Result<&Mlp> {
        let net = match branch {
            Branch::Bare => self.bnn.as_ref(),
            Branch::Vegetated => self.vnn.as_ref(),
        };
        net.ok_or_else(|| Error::Config(format!("model has no trained {} network", branch.name())))
    }

    /// Writes `constants.txt`, `height_lm.txt`, `meta.txt` and whichever networks are present.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_constants(&self.constants, dir.join("constants.txt"))?;
        self.height_lm.save(dir.join("height_lm.txt"))?;
        if let Some(n) = &self.bnn {
            n.save(dir.join("bnn.mlpw"))?;
        }
        if let Some(n) = &self.vnn {
            n.save(dir.join("vnn.mlpw"))?;
        }
        kv::write(
            &dir.join("meta.txt"),
            &[
                ("format_version", BUNDLE_VERSION.to_string()),
                ("height_threshold", self.height_threshold.to_string()),
                ("h_rms_default", self.h_rms_default.to_string()),
                ("lambda_p_cm", self.bands.p_cm.to_string()),
                ("lambda_l_cm", self.bands.l_cm.to_string()),
                ("lambda_c_cm", self.bands.c_cm.to_string()),
            ],
        )
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta_path = dir.join("meta.txt");
        let meta = kv::read(&meta_path)?;
        let version = kv::get_f64(&meta, "format_version", &meta_path)?;
        if version != BUNDLE_VERSION as f64 {
            let line = meta["format_version"].0;
            return Err(Error::format(
                &meta_path,
                line,
                None,
                format!("unsupported bundle version {version}"),
            ));
        }
        let opt_f64 = |key: &str, default: f64| {
            if meta.contains_key(key) {
                kv::get_f64(&meta, key, &meta_path)
            } else {
                Ok(default)
            }
        };
        let bands = BandProfile {
            p_cm: opt_f64("lambda_p_cm", BandProfile::DRONE_SAR.p_cm)?,
            l_cm: opt_f64("lambda_l_cm", BandProfile::DRONE_SAR.l_cm)?,
            c_cm: opt_f64("lambda_c_cm", BandProfile::DRONE_SAR.c_cm)?,
        };
        let net = |name: &str| {
            let p = dir.join(name);
            if p.exists() {
                Mlp::load(p).map(Some)
            } else {
                Ok(None)
            }
        };
        let model = Self {
            constants: load_constants(dir.join("constants.txt"))?,
            height_lm: HeightLmCoeffs::load(dir.join("height_lm.txt"))?,
            bnn: net("bnn.mlpw")?,
            vnn: net("vnn.mlpw")?,
            height_threshold: kv::get_f64(&meta, "height_threshold", &meta_path)?,
            h_rms_default: kv::get_f64(&meta, "h_rms_default", &meta_path)?,
            bands,
        };
        model.validate()?;
        Ok(model)
    }
}

/// Trains the `[inputs, 20, 20, 1]` inverter for `scenario` on a sample set,
/// with scalers set from the data bounds.
pub fn train_network(
    set: &SampleSet,
    scenario: Scenario,
    seed: u64,
    opts: &TrainOptions,
) -> Result<(Mlp, TrainReport)> {
    let (inputs, targets) = to_nn_dataset(set, scenario)?;
    let mut net = Mlp::init(MlpSpec::two_hidden_twenty(scenario.input_width())?, seed);
    net.fit_scalers(&inputs, &targets)?;
    let report = lm_train(&mut net, &inputs, &targets, opts)?;
    Ok((net, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimate {
    /// cm³·cm⁻³, within `[0, 0.5]`.
    pub mv: f64,
    /// Clamped crop height from the linear model, m.
    pub height: f64,
    pub branch: Branch,
    pub validity_flags: Vec<Violation>,
    /// The network output fell outside `[0, 0.5]` and was clamped.
    pub clamped: bool,
}

pub fn estimate_point(
    sigma_p_db: f64,
    sigma_l_db: f64,
    sigma_c_db: Option<f64>,
    theta: f64,
    h_rms: f64,
    model: &RetrievalModel,
) -> Result<PointEstimate> {
    if !sigma_p_db.is_finite() || !sigma_l_db.is_finite() {
        return Err(Error::Input("P and L reflectivities must be finite".into()));
    }
    if !(theta > 0.0 && theta < 90.0) || !(h_rms > 0.0) {
        return Err(Error::Input(format!(
            "invalid geometry: theta {theta}°, h_rms {h_rms} cm"
        )));
    }
    let sigma_c_db = sigma_c_db.filter(|v| v.is_finite());
    let height = estimate_height(sigma_l_db, sigma_p_db, &model.height_lm);
    let branch = model.branch_for(height);
    let net = model.network(branch)?;
    let input = nn_input(branch, theta, h_rms, height, sigma_p_db, sigma_l_db, sigma_c_db)?;
    let raw = net.forward(&input)?;
    let mv = raw.clamp(0.0, MV_MAX);
    // roughness is judged at the shortest wavelength the branch consumes
    let band = match branch {
        Branch::Bare => Band::C,
        Branch::Vegetated => Band::L,
    };
    let kh = std::f64::consts::TAU / model.bands.wavelength_cm(band) * h_rms;
    Ok(PointEstimate {
        mv,
        height,
        branch,
        validity_flags: validity_flags(theta, kh, mv),
        clamped: raw != mv,
    })
}

/// Incidence angle for a raster retrieval: one value or one per pixel.
#[derive(Debug, Clone, Copy)]
pub enum ThetaInput<'a> {
    Constant(f64),
    Raster(&'a Raster),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RasterOptions {
    /// Boxcar speckle filter side, m. Applied to each band in linear power.
    pub speckle_window_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RasterEstimate {
    pub mv: Raster,
    pub height: Raster,
    /// 0 bare, 1 vegetated.
    pub branch: Raster,
    /// Pixels left NODATA because the bare branch needed a missing C-band value.
    pub missing_c: usize,
    /// Pixels left NODATA for any reason.
    pub nodata: usize,
}

pub const BRANCH_BARE: f64 = 0.0;
pub const BRANCH_VEGETATED: f64 = 1.0;

fn despeckle(r: &Raster, window_m: f64) -> Result<Raster> {
    let lin = r.with_values(
        r.values
            .iter()
            .map(|&v| if r.is_nodata(v) { r.nodata } else { linear_from_db(v) })
            .collect(),
    )?;
    let smooth = lin.moving_average(window_m)?;
    r.with_values(
        smooth
            .values
            .iter()
            .map(|&v| {
                if smooth.is_nodata(v) {
                    r.nodata
                } else {
                    10.0 * v.log10()
                }
            })
            .collect(),
    )
}

enum Pixel {
    Done(f64, f64, f64),
    NoData,
    MissingC,
}

pub fn estimate_raster(
    sigma_p: &Raster,
    sigma_l: &Raster,
    sigma_c: Option<&Raster>,
    theta: ThetaInput<'_>,
    h_rms: f64,
    model: &RetrievalModel,
    opts: &RasterOptions,
) -> Result<RasterEstimate> {
    let check = |name: &str, r: &Raster| {
        if r.same_grid(sigma_p) {
            Ok(())
        } else {
            Err(Error::Grid(format!(
                "{name} is {}×{} at ({}, {}) cell {}, sigma_p is {}×{} at ({}, {}) cell {}",
                r.ncols,
                r.nrows,
                r.xll,
                r.yll,
                r.cellsize,
                sigma_p.ncols,
                sigma_p.nrows,
                sigma_p.xll,
                sigma_p.yll,
                sigma_p.cellsize
            )))
        }
    };
    check("sigma_l", sigma_l)?;
    if let Some(c) = sigma_c {
        check("sigma_c", c)?;
    }
    if let ThetaInput::Raster(t) = theta {
        check("theta", t)?;
    }

    let (p, l, c) = match opts.speckle_window_m {
        Some(w) => (
            despeckle(sigma_p, w)?,
            despeckle(sigma_l, w)?,
            sigma_c.map(|c| despeckle(c, w)).transpose()?,
        ),
        None => (sigma_p.clone(), sigma_l.clone(), sigma_c.cloned()),
    };

    let pixels: Vec<Pixel> = (0..p.len())
        .into_par_iter()
        .map(|i| {
            let (Some(sp), Some(sl)) = (p.valid(i), l.valid(i)) else {
                return Ok(Pixel::NoData);
            };
            let th = match theta {
                ThetaInput::Constant(v) => v,
                ThetaInput::Raster(t) => match t.valid(i) {
                    Some(v) => v,
                    None => return Ok(Pixel::NoData),
                },
            };
            let sc = c.as_ref().and_then(|c| c.valid(i));
            let height = estimate_height(sl, sp, &model.height_lm);
            if sc.is_none() && model.branch_for(height) == Branch::Bare {
                return Ok(Pixel::MissingC);
            }
            let est = estimate_point(sp, sl, sc, th, h_rms, model)?;
            let b = match est.branch {
                Branch::Bare => BRANCH_BARE,
                Branch::Vegetated => BRANCH_VEGETATED,
            };
            Ok(Pixel::Done(est.mv, est.height, b))
        })
        .collect::<Result<_>>()?;

    let n = pixels.len();
    let (mut mv, mut height, mut branch) = (
        vec![DEFAULT_NODATA; n],
        vec![DEFAULT_NODATA; n],
        vec![DEFAULT_NODATA; n],
    );
    let (mut missing_c, mut nodata) = (0, 0);
    for (i, px) in pixels.into_iter().enumerate() {
        match px {
            Pixel::Done(m, h, b) => {
                mv[i] = m;
                height[i] = h;
                branch[i] = b;
            }
            Pixel::MissingC => {
                missing_c += 1;
                nodata += 1;
            }
            Pixel::NoData => nodata += 1,
        }
    }
    let out = |values| Raster::new(p.ncols, p.nrows, p.xll, p.yll, p.cellsize, DEFAULT_NODATA, values);
    Ok(RasterEstimate {
        mv: out(mv)?,
        height: out(height)?,
        branch: out(branch)?,
        missing_c,
        nodata,
    })
}

/// One estimate paired with its reference value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPair {
    pub estimate: f64,
    pub truth: f64,
    pub branch: Option<Branch>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalStats {
    pub n: usize,
    pub rmse: f64,
    /// Mean of `estimate − truth`.
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub overall: EvalStats,
    pub per_branch: Vec<(Branch, EvalStats)>,
}

fn stats<'a>(pairs: impl Iterator<Item = &'a EvalPair>) -> Option<EvalStats> {
    let (mut n, mut sq, mut sum) = (0usize, 0.0, 0.0);
    for p in pairs {
        let e = p.estimate - p.truth;
        n += 1;
        sq += e * e;
        sum += e;
    }
    (n > 0).then(|| EvalStats {
        n,
        rmse: (sq / n as f64).sqrt(),
        bias: sum / n as f64,
    })
}

pub fn evaluate(pairs: &[EvalPair]) -> Result<EvalReport> {
    let overall = stats(pairs.iter()).ok_or_else(|| Error::Input("nothing to evaluate".into()))?;
    let per_branch = [Branch::Bare, Branch::Vegetated]
        .into_iter()
        .filter_map(|b| stats(pairs.iter().filter(|p| p.branch == Some(b))).map(|s| (b, s)))
        .collect();
    Ok(EvalReport { overall, per_branch })
}
