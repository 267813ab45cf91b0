use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sarsoil::calibration::{
    dubois_fit_options, fit_dubois_constants, fit_height_lm, load_constants, model_db, observations,
    residual_summaries, save_constants, HeightLmCoeffs,
};
use sarsoil::forward::DuboisConstants;
use sarsoil::nn::{Mlp, TrainOptions};
use sarsoil::pipeline::{
    estimate_raster, evaluate as eval_pairs, train_network, Branch, EvalPair, EvalStats, RasterOptions, RetrievalModel,
    ThetaInput, BRANCH_BARE, BRANCH_VEGETATED, DEFAULT_THRESHOLD_M,
};
use sarsoil::raster::{read_samples, Raster};
use sarsoil::synth::{generate, read_csv, to_nn_dataset, write_csv, RangeSpec, Scenario, SynthConfig};
use sarsoil::{Error, Result};

use crate::{BundleArgs, EstimateArgs, EvaluateArgs, FitArgs, FitTarget, SynthArgs, TrainArgs};

/// `dir/stem<suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let scenario: Scenario = a.scenario.into();
    let mut cfg = SynthConfig::new(scenario)
        .n(a.n as usize)
        .seed(a.seed)
        .noise_db(a.noise_db)
        .ranges(RangeSpec::for_scenario(scenario));
    cfg.bands = a.bands.profile();
    let set = generate(&cfg)?;
    write_csv(&set, &a.out)?;
    println!("wrote {} {} records to {}", set.len(), scenario.name(), a.out.display());
    Ok(())
}

/// Rejects data whose heights or bands cannot belong to `scenario`.
fn check_scenario(set: &sarsoil::synth::SampleSet, scenario: Scenario) -> Result<()> {
    for (i, r) in set.records.iter().enumerate() {
        let problem = match scenario {
            Scenario::Bare if r.sigma_c_db.is_none() => Some("has no C-band value".to_string()),
            Scenario::Bare if r.crop_height > DEFAULT_THRESHOLD_M => Some(format!(
                "has crop height {} m, above the bare-soil limit",
                r.crop_height
            )),
            Scenario::Vegetated if r.crop_height < DEFAULT_THRESHOLD_M => Some(format!(
                "has crop height {} m, below the vegetated range",
                r.crop_height
            )),
            _ => None,
        };
        if let Some(p) = problem {
            return Err(Error::Input(format!(
                "data does not fit the {} scenario: record {} {p}",
                scenario.name(),
                i + 1
            )));
        }
    }
    Ok(())
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let scenario: Scenario = a.scenario.into();
    let set = read_csv(&a.data)?;
    check_scenario(&set, scenario)?;
    let opts = TrainOptions {
        max_iter: a.max_iter as usize,
        mse_goal: a.mse_goal,
        ..TrainOptions::default()
    };
    let (net, report) = train_network(&set, scenario, a.seed, &opts)?;
    net.save(&a.out)?;

    let (x, y) = to_nn_dataset(&set, scenario)?;
    let est = net.forward_batch(&x)?;
    let rmse = (est.iter().zip(&y).map(|(e, t)| (e - t).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let sizes: Vec<String> = net.spec().layer_sizes().iter().map(usize::to_string).collect();
    let mut text = String::new();
    writeln!(text, "scenario={}", scenario.name()).unwrap();
    writeln!(text, "data={}", a.data.display()).unwrap();
    writeln!(text, "samples={}", set.len()).unwrap();
    writeln!(text, "layers={}", sizes.join(",")).unwrap();
    writeln!(text, "seed={}", a.seed).unwrap();
    writeln!(text, "mse_goal={}", a.mse_goal).unwrap();
    write!(text, "{report}").unwrap();
    writeln!(text, "train_rmse_mv={rmse}").unwrap();
    let report_path = sibling(&a.out, ".report.txt");
    write_text(&report_path, &text)?;
    println!(
        "trained {} network: {} iterations, final mse {:e} ({}), training RMSE {rmse:.4}",
        scenario.name(),
        report.iterations,
        report.final_mse,
        if report.converged {
            "goal reached"
        } else {
            "goal not reached"
        }
    );
    Ok(())
}

pub fn bundle(a: &BundleArgs) -> Result<()> {
    if a.bnn.is_none() && a.vnn.is_none() {
        return Err(Error::Config("bundle needs --bnn, --vnn or both".into()));
    }
    let model = RetrievalModel {
        constants: match &a.constants {
            Some(p) => load_constants(p)?,
            None => DuboisConstants::PUBLISHED,
        },
        height_lm: match &a.height_lm {
            Some(p) => HeightLmCoeffs::load(p)?,
            None => HeightLmCoeffs::PUBLISHED,
        },
        bnn: a.bnn.as_ref().map(Mlp::load).transpose()?,
        vnn: a.vnn.as_ref().map(Mlp::load).transpose()?,
        height_threshold: a.threshold,
        h_rms_default: a.h_rms,
        bands: a.bands.profile(),
    };
    model.validate()?;
    model.save(&a.out)?;
    println!("wrote model to {}", a.out.display());
    Ok(())
}

pub fn estimate(a: &EstimateArgs) -> Result<()> {
    let model = RetrievalModel::load(&a.model)?;
    let sp = Raster::read_asc(&a.sigma_p)?;
    let sl = Raster::read_asc(&a.sigma_l)?;
    let sc = a.sigma_c.as_ref().map(Raster::read_asc).transpose()?;
    let theta_raster;
    let theta = match a.theta.trim().parse::<f64>() {
        Ok(v) => ThetaInput::Constant(v),
        Err(_) => {
            theta_raster = Raster::read_asc(&a.theta)?;
            ThetaInput::Raster(&theta_raster)
        }
    };
    let h_rms = a.h_rms.unwrap_or(model.h_rms_default);
    let opts = RasterOptions {
        speckle_window_m: a.speckle_window_m,
    };
    let est = estimate_raster(&sp, &sl, sc.as_ref(), theta, h_rms, &model, &opts)?;
    if est.missing_c > 0 {
        log::warn!(
            "{} bare-soil pixels left NODATA for lack of a C-band value",
            est.missing_c
        );
    }
    for (suffix, r) in [
        ("_mv.asc", &est.mv),
        ("_height.asc", &est.height),
        ("_branch.asc", &est.branch),
    ] {
        r.write_asc(format!("{}{suffix}", a.out_prefix))?;
    }
    let count = |code: f64| est.branch.values.iter().filter(|&&b| b == code).count();
    println!(
        "estimated {} pixels: {} bare, {} vegetated, {} NODATA ({} missing C band)",
        est.mv.len(),
        count(BRANCH_BARE),
        count(BRANCH_VEGETATED),
        est.nodata,
        est.missing_c
    );
    Ok(())
}

fn stats_line(label: &str, s: &EvalStats) -> String {
    format!("{label}: n={} rmse={:.6} bias={:+.6}", s.n, s.rmse, s.bias)
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let est = Raster::read_asc(&a.estimates)?;
    let branch = a.branch.as_ref().map(Raster::read_asc).transpose()?;
    if let Some(b) = &branch {
        if !b.same_grid(&est) {
            return Err(Error::Grid("branch raster and estimates are on different grids".into()));
        }
    }
    let table = read_samples(&a.samples)?;
    if table.rows.is_empty() {
        return Err(Error::Input(format!("{} has no ground samples", a.samples.display())));
    }

    let points_path = sibling(&a.out, "_points.csv");
    let mut w = csv_writer(&points_path)?;
    w.write_record(["id", "x", "y", "mv_true", "mv_est", "error", "branch"])
        .map_err(|e| csv_io(&points_path, e))?;
    let (mut outside, mut empty) = (0usize, 0usize);
    let mut pairs = Vec::new();
    for s in &table.rows {
        let v = match est.window_mean(s.x, s.y, a.window_m) {
            Err(Error::Bounds { .. }) => {
                outside += 1;
                continue;
            }
            other => other?,
        };
        let Some(v) = v else {
            empty += 1;
            continue;
        };
        let br = match &branch {
            Some(b) => {
                let (r, c) = b.cell_of(s.x, s.y)?;
                let code = b.get(r, c);
                (!b.is_nodata(code)).then_some(if code == BRANCH_BARE {
                    Branch::Bare
                } else {
                    Branch::Vegetated
                })
            }
            None => None,
        };
        w.write_record([
            s.id.clone(),
            s.x.to_string(),
            s.y.to_string(),
            s.mv.to_string(),
            v.to_string(),
            (v - s.mv).to_string(),
            br.map(|b| b.name().to_string()).unwrap_or_default(),
        ])
        .map_err(|e| csv_io(&points_path, e))?;
        pairs.push(EvalPair {
            estimate: v,
            truth: s.mv,
            branch: br,
        });
    }
    w.flush().map_err(|e| Error::Io {
        path: points_path.clone(),
        source: e,
    })?;
    if outside == table.rows.len() {
        return Err(Error::Input(
            "every ground sample lies outside the raster extent".into(),
        ));
    }
    if outside > 0 {
        log::warn!("{outside} ground samples lie outside the raster and were skipped");
    }
    if empty > 0 {
        log::warn!("{empty} ground samples have only NODATA in their window and were skipped");
    }
    let report = eval_pairs(&pairs)?;

    let mut text = String::new();
    writeln!(text, "estimates={}", a.estimates.display()).unwrap();
    writeln!(text, "samples={}", a.samples.display()).unwrap();
    writeln!(text, "window_m={}", a.window_m).unwrap();
    writeln!(text, "skipped_outside={outside}").unwrap();
    writeln!(text, "skipped_nodata={empty}").unwrap();
    writeln!(text, "{}", stats_line("overall", &report.overall)).unwrap();
    for (b, s) in &report.per_branch {
        writeln!(text, "{}", stats_line(b.name(), s)).unwrap();
    }
    write_text(&a.out, &text)?;
    print!("{text}");
    Ok(())
}

fn quartiles(v: &mut [f64]) -> [f64; 5] {
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    };
    [v[0], q(0.25), q(0.5), q(0.75), v[v.len() - 1]]
}

pub fn fit(a: &FitArgs) -> Result<()> {
    let set = read_csv(&a.data)?;
    let resid_path = sibling(&a.out, "_residuals.csv");
    let mut w = csv_writer(&resid_path)?;
    w.write_record(["band", "lambda_cm", "n", "min", "q1", "median", "q3", "max", "mean"])
        .map_err(|e| csv_io(&resid_path, e))?;
    match a.what {
        FitTarget::HeightLm => {
            let fit = fit_height_lm(&set.records)?;
            fit.coeffs.save(&a.out)?;
            let mut r = fit.residuals.clone();
            let mean = r.iter().sum::<f64>() / r.len() as f64;
            let q = quartiles(&mut r);
            let mut row = vec!["height".to_string(), String::new(), r.len().to_string()];
            row.extend(q.iter().chain([&mean]).map(f64::to_string));
            w.write_record(&row).map_err(|e| csv_io(&resid_path, e))?;
            println!(
                "height = {} + {}·σL + {}·σP, residual RMSE {:.4} m over {} records",
                fit.coeffs.intercept,
                fit.coeffs.coef_l,
                fit.coeffs.coef_p,
                fit.rmse,
                set.len()
            );
        }
        FitTarget::Dubois => {
            let obs = observations(&set.records, &a.bands.profile());
            let init = match &a.init {
                Some(p) => load_constants(p)?,
                None => DuboisConstants::PUBLISHED,
            };
            let opts = sarsoil::lm::LmOptions {
                max_iter: a.max_iter as usize,
                ..dubois_fit_options()
            };
            let fit = fit_dubois_constants(&obs, &init, &opts)?;
            save_constants(&fit.constants, &a.out)?;
            for s in residual_summaries(&obs, &fit.constants)? {
                w.write_record([
                    s.band.name().to_string(),
                    s.lambda_cm.to_string(),
                    s.n.to_string(),
                    s.min.to_string(),
                    s.q1.to_string(),
                    s.median.to_string(),
                    s.q3.to_string(),
                    s.max.to_string(),
                    s.mean.to_string(),
                ])
                .map_err(|e| csv_io(&resid_path, e))?;
            }
            let mut worst = 0.0f64;
            for o in &obs {
                worst = worst.max((model_db(o, &fit.constants)? - o.sigma_db).abs());
            }
            let names = DuboisConstants::NAMES;
            let vals = fit.constants.to_array();
            let listed: Vec<String> = names.iter().zip(vals).map(|(n, v)| format!("{n}={v:.6}")).collect();
            println!(
                "fitted {}; rmse {:.3e} dB, max prediction error {worst:.3e} dB over {} observations, {} iterations",
                listed.join(" "),
                fit.mse.sqrt(),
                obs.len(),
                fit.iterations
            );
        }
    }
    w.flush().map_err(|e| Error::Io {
        path: resid_path.clone(),
        source: e,
    })?;
    Ok(())
}
