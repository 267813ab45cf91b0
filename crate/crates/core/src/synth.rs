//! Synthetic P/L/C reflectivity records drawn from the forward model.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::forward::{forward_reflectivity, Band, BandProfile, DuboisConstants, SceneParams};
use crate::soil::dielectric_from_moisture;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Bare,
    Vegetated,
}

impl Scenario {
    /// Number of network inputs for this scenario.
    pub fn input_width(self) -> usize {
        match self {
            Scenario::Bare => 6,
            Scenario::Vegetated => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Bare => "bare",
            Scenario::Vegetated => "veg",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bare" => Ok(Scenario::Bare),
            "veg" | "vegetated" => Ok(Scenario::Vegetated),
            other => Err(Error::Config(format!(
                "unknown scenario {other:?} (expected bare or veg)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.max > self.min {
            rng.random_range(self.min..=self.max)
        } else {
            self.min
        }
    }
}

/// Parameter ranges for synthetic generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeSpec {
    /// Incidence angle, degrees.
    pub theta: Range,
    /// Volumetric moisture, cm³·cm⁻³.
    pub mv: Range,
    /// rms height, cm.
    pub h_rms: Range,
    /// Crop height, m.
    pub crop_height: Range,
}

impl RangeSpec {
    pub const BARE: RangeSpec = RangeSpec {
        theta: Range::new(60.0, 65.0),
        mv: Range::new(0.05, 0.45),
        h_rms: Range::new(1.5, 3.5),
        crop_height: Range::new(0.0, 0.5),
    };

    pub const VEGETATED: RangeSpec = RangeSpec {
        crop_height: Range::new(0.5, 3.0),
        ..Self::BARE
    };

    pub fn for_scenario(scenario: Scenario) -> Self {
        match scenario {
            Scenario::Bare => Self::BARE,
            Scenario::Vegetated => Self::VEGETATED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("theta", self.theta, 0.0, 90.0),
            ("mv", self.mv, 0.0, crate::soil::MV_MAX),
            ("h_rms", self.h_rms, 0.0, f64::INFINITY),
            ("crop_height", self.crop_height, 0.0, f64::INFINITY),
        ];
        for (name, r, lo, hi) in checks {
            if !(r.min <= r.max) || !r.min.is_finite() || !r.max.is_finite() {
                return Err(Error::Config(format!("{name} range [{}, {}] is empty", r.min, r.max)));
            }
            if r.min < lo || r.max > hi {
                return Err(Error::Config(format!(
                    "{name} range [{}, {}] leaves the physical domain [{lo}, {hi}]",
                    r.min, r.max
                )));
            }
        }
        if self.theta.min <= 0.0 || self.theta.max >= 90.0 || self.h_rms.min <= 0.0 {
            return Err(Error::Config(
                "theta must lie in (0, 90) and h_rms must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One training/tuning record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord {
    pub theta: f64,
    pub h_rms: f64,
    pub crop_height: f64,
    pub sigma_p_db: f64,
    pub sigma_l_db: f64,
    pub sigma_c_db: Option<f64>,
    pub mv: f64,
}

impl SampleRecord {
    pub fn sigma_db(&self, band: Band) -> Option<f64> {
        match band {
            Band::P => Some(self.sigma_p_db),
            Band::L => Some(self.sigma_l_db),
            Band::C => self.sigma_c_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    /// `None` for tables read from disk, which carry no tag.
    pub scenario: Option<Scenario>,
    pub records: Vec<SampleRecord>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub scenario: Scenario,
    pub ranges: RangeSpec,
    pub bands: BandProfile,
    pub constants: DuboisConstants,
    pub n: usize,
    pub seed: u64,
    /// Standard deviation of the Gaussian noise added to each band, dB.
    pub noise_db: f64,
}

impl SynthConfig {
    pub const DEFAULT_N: usize = 10_000;
    pub const DEFAULT_NOISE_DB: f64 = 0.5;

    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            ranges: RangeSpec::for_scenario(scenario),
            bands: BandProfile::default(),
            constants: DuboisConstants::default(),
            n: Self::DEFAULT_N,
            seed: 0,
            noise_db: Self::DEFAULT_NOISE_DB,
        }
    }

    pub fn n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn noise_db(mut self, noise_db: f64) -> Self {
        self.noise_db = noise_db;
        self
    }

    pub fn ranges(mut self, ranges: RangeSpec) -> Self {
        self.ranges = ranges;
        self
    }

    pub fn constants(mut self, constants: DuboisConstants) -> Self {
        self.constants = constants;
        self
    }
}

/// Noiseless P, L and C reflectivities in dB for one surface state.
pub fn simulate_bands_db(
    theta: f64,
    h_rms: f64,
    mv: f64,
    crop_height: f64,
    bands: &BandProfile,
    constants: &DuboisConstants,
) -> Result<[f64; 3]> {
    let eps = dielectric_from_moisture(mv)?;
    let mut out = [0.0; 3];
    for (slot, band) in out.iter_mut().zip(Band::ALL) {
        let scene = SceneParams::new(theta, h_rms, eps, bands.wavelength_cm(band), crop_height)?;
        *slot = forward_reflectivity(&scene, constants)?.db;
    }
    Ok(out)
}

/// Draws `n` i.i.d. uniform surface states and their (optionally noisy) reflectivities.
pub fn generate(cfg: &SynthConfig) -> Result<SampleSet> {
    if cfg.n == 0 {
        return Err(Error::Config("sample count must be positive".into()));
    }
    if !(cfg.noise_db >= 0.0) || !cfg.noise_db.is_finite() {
        return Err(Error::Config(format!(
            "noise level must be >= 0 dB, got {}",
            cfg.noise_db
        )));
    }
    cfg.ranges.validate()?;
    cfg.bands.validate()?;
    let noise = Normal::new(0.0, cfg.noise_db).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut records = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let theta = cfg.ranges.theta.sample(&mut rng);
        let mv = cfg.ranges.mv.sample(&mut rng);
        let h_rms = cfg.ranges.h_rms.sample(&mut rng);
        let crop_height = cfg.ranges.crop_height.sample(&mut rng);
        let mut sigma = simulate_bands_db(theta, h_rms, mv, crop_height, &cfg.bands, &cfg.constants)?;
        if cfg.noise_db > 0.0 {
            for s in &mut sigma {
                *s += noise.sample(&mut rng);
            }
        }
        records.push(SampleRecord {
            theta,
            h_rms,
            crop_height,
            sigma_p_db: sigma[0],
            sigma_l_db: sigma[1],
            sigma_c_db: Some(sigma[2]),
            mv,
        });
    }
    Ok(SampleSet {
        scenario: Some(cfg.scenario),
        records,
    })
}

/// Seeded shuffle, then the first `⌊n·fraction⌋` records go to the first set.
pub fn split(set: &SampleSet, fraction: f64, seed: u64) -> Result<(SampleSet, SampleSet)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("split fraction {fraction} outside (0, 1)")));
    }
    let mut idx: Vec<usize> = (0..set.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = (set.len() as f64 * fraction).floor() as usize;
    let pick = |ids: &[usize]| SampleSet {
        scenario: set.scenario,
        records: ids.iter().map(|&i| set.records[i]).collect(),
    };
    Ok((pick(&idx[..cut]), pick(&idx[cut..])))
}

/// Network input vector for one record.
///
/// Bare: `[θ, h_rms, h, σP, σL, σC]`. Vegetated: `[θ, h_rms, h, σP, σL]`.
pub fn nn_input(
    scenario: Scenario,
    theta: f64,
    h_rms: f64,
    crop_height: f64,
    sigma_p_db: f64,
    sigma_l_db: f64,
    sigma_c_db: Option<f64>,
) -> Result<Vec<f64>> {
    let mut v = vec![theta, h_rms, crop_height, sigma_p_db, sigma_l_db];
    if scenario == Scenario::Bare {
        v.push(sigma_c_db.ok_or_else(|| Error::Input("bare-soil input needs the C-band reflectivity".into()))?);
    }
    Ok(v)
}

pub fn to_nn_dataset(set: &SampleSet, scenario: Scenario) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if let Some(tag) = set.scenario {
        if tag != scenario {
            return Err(Error::Input(format!(
                "sample set is tagged {} but {} inputs were requested",
                tag.name(),
                scenario.name()
            )));
        }
    }
    let mut inputs = Vec::with_capacity(set.len());
    let mut targets = Vec::with_capacity(set.len());
    for (i, r) in set.records.iter().enumerate() {
        let x = nn_input(
            scenario,
            r.theta,
            r.h_rms,
            r.crop_height,
            r.sigma_p_db,
            r.sigma_l_db,
            r.sigma_c_db,
        )
        .map_err(|e| Error::Input(format!("record {}: {e}", i + 1)))?;
        inputs.push(x);
        targets.push(r.mv);
    }
    Ok((inputs, targets))
}

pub const CSV_HEADER: [&str; 7] = [
    "theta_deg",
    "h_rms_cm",
    "height_m",
    "sigma_p_db",
    "sigma_l_db",
    "sigma_c_db",
    "mv",
];

pub fn write_csv(set: &SampleSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(CSV_HEADER).map_err(|e| csv_error(path, e))?;
    for r in &set.records {
        let c = r.sigma_c_db.map_or_else(|| "NA".to_string(), |v| v.to_string());
        w.write_record([
            r.theta.to_string(),
            r.h_rms.to_string(),
            r.crop_height.to_string(),
            r.sigma_p_db.to_string(),
            r.sigma_l_db.to_string(),
            c,
            r.mv.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a sample or tuning table. Columns are matched by name; extra
/// columns such as `site` or `date` are ignored.
pub fn read_csv(path: impl AsRef<Path>) -> Result<SampleSet> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let mut cols = [0usize; 7];
    for (slot, name) in cols.iter_mut().zip(CSV_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::format(path, 1, None, format!("missing column {name}")))?;
    }
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |k: usize| -> Result<Option<f64>> {
            let raw = row.get(cols[k]).unwrap_or("");
            if k == 5 && (raw == "NA" || raw.is_empty()) {
                return Ok(None);
            }
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Some)
                .ok_or_else(|| {
                    Error::format(
                        path,
                        line,
                        Some(cols[k] + 1),
                        format!("bad {} value {raw:?}", CSV_HEADER[k]),
                    )
                })
        };
        records.push(SampleRecord {
            theta: field(0)?.unwrap(),
            h_rms: field(1)?.unwrap(),
            crop_height: field(2)?.unwrap(),
            sigma_p_db: field(3)?.unwrap(),
            sigma_l_db: field(4)?.unwrap(),
            sigma_c_db: field(5)?,
            mv: field(6)?.unwrap(),
        });
    }
    Ok(SampleSet {
        scenario: None,
        records,
    })
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::format(path, line, None, format!("{kind:?}")),
    }
}
