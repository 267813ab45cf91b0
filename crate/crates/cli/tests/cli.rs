use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sarsoil::calibration::{load_constants, save_constants, HeightLmCoeffs};
use sarsoil::forward::{forward_reflectivity, Band, BandProfile, DuboisConstants, SceneParams};
use sarsoil::pipeline::{estimate_point, RetrievalModel};
use sarsoil::raster::Raster;
use sarsoil::soil::dielectric_from_moisture;
use sarsoil::synth::{generate, write_csv, Range, RangeSpec, SampleRecord, SampleSet, Scenario, SynthConfig};

fn sarsoil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sarsoil"))
        .args(args)
        .env_remove("SARSOIL_THREADS")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[track_caller]
fn ok(args: &[&str]) -> String {
    let out = sarsoil(args);
    assert_eq!(code(&out), 0, "{args:?}\n{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        ok(&[
            "synth",
            "--scenario",
            "bare",
            "--n",
            "100",
            "--seed",
            "1",
            "--out",
            s(p),
        ]);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 101);
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    assert_eq!(code(&sarsoil(&["synth", "--scenario", "pasture", "--out", s(&out)])), 2);
    assert_eq!(
        code(&sarsoil(&["synth", "--scenario", "bare", "--n", "0", "--out", s(&out)])),
        2
    );
    assert_eq!(
        code(&sarsoil(&[
            "synth",
            "--scenario",
            "bare",
            "--noise-db",
            "-1",
            "--out",
            s(&out)
        ])),
        2
    );
    assert_eq!(
        code(&sarsoil(&[
            "train",
            "--scenario",
            "bare",
            "--data",
            "d.csv",
            "--out",
            "n.mlpw",
            "--max-iter",
            "0"
        ])),
        2
    );
    assert_eq!(code(&sarsoil(&[])), 2);
    assert_eq!(code(&sarsoil(&["frobnicate"])), 2);
    assert_eq!(code(&sarsoil(&["--help"])), 0);
    assert!(!out.exists());

    let bad = Command::new(env!("CARGO_BIN_EXE_sarsoil"))
        .args(["synth", "--scenario", "bare", "--n", "5", "--out", s(&out)])
        .env("SARSOIL_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# synth defaults\nscenario = veg\nn = 7\nnoise_db = 0\n").unwrap();
    let a = dir.path().join("a.csv");
    ok(&["synth", "--config", s(&cfg), "--out", s(&a)]);
    assert_eq!(std::fs::read_to_string(&a).unwrap().lines().count(), 8);
    ok(&["synth", "--config", s(&cfg), "--n", "3", "--out", s(&a)]);
    assert_eq!(std::fs::read_to_string(&a).unwrap().lines().count(), 4);

    std::fs::write(&cfg, "unknown_key = 1\n").unwrap();
    assert_eq!(
        code(&sarsoil(&[
            "synth",
            "--config",
            s(&cfg),
            "--scenario",
            "bare",
            "--out",
            s(&a)
        ])),
        2
    );
    let missing = dir.path().join("none.cfg");
    assert_eq!(
        code(&sarsoil(&[
            "synth",
            "--config",
            s(&missing),
            "--scenario",
            "bare",
            "--out",
            s(&a)
        ])),
        1
    );
}

#[test]
fn train_rejects_mismatched_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bare.csv");
    ok(&["synth", "--scenario", "bare", "--n", "50", "--out", s(&data)]);
    let out = sarsoil(&[
        "train",
        "--scenario",
        "veg",
        "--data",
        s(&data),
        "--out",
        s(&dir.path().join("v.mlpw")),
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("veg"));
    let missing = sarsoil(&[
        "train",
        "--scenario",
        "bare",
        "--data",
        "/nonexistent.csv",
        "--out",
        "x.mlpw",
    ]);
    assert_eq!(code(&missing), 1);
}

fn write_grid(path: &Path, values: Vec<f64>, ncols: usize, nrows: usize) {
    Raster::new(ncols, nrows, 0.0, 0.0, 1.0, -9999.0, values)
        .unwrap()
        .write_asc(path)
        .unwrap();
}

struct Trained {
    _dir: tempfile::TempDir,
    model: PathBuf,
    root: PathBuf,
}

fn trained_model() -> Trained {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let p = |n: &str| root.join(n);
    for (sc, file, net) in [("bare", "bare.csv", "bnn.mlpw"), ("veg", "veg.csv", "vnn.mlpw")] {
        ok(&[
            "synth",
            "--scenario",
            sc,
            "--n",
            "400",
            "--seed",
            "3",
            "--noise-db",
            "0",
            "--out",
            s(&p(file)),
        ]);
        let stdout = ok(&[
            "train",
            "--scenario",
            sc,
            "--data",
            s(&p(file)),
            "--out",
            s(&p(net)),
            "--max-iter",
            "30",
        ]);
        assert!(stdout.contains("trained"));
        let report = std::fs::read_to_string(p(&net.replace(".mlpw", ".report.txt"))).unwrap();
        assert!(report.contains("iterations="));
        assert!(report.contains("final_mse="));
    }
    ok(&[
        "bundle",
        "--bnn",
        s(&p("bnn.mlpw")),
        "--vnn",
        s(&p("vnn.mlpw")),
        "--out",
        s(&p("model")),
    ]);
    Trained {
        model: p("model"),
        root,
        _dir: dir,
    }
}

#[test]
fn end_to_end_exit_codes_and_outputs() {
    let t = trained_model();
    let p = |n: &str| t.root.join(n);
    let model = RetrievalModel::load(&t.model).unwrap();

    // 1×1 rasters agree with the point estimate
    for (sp, sl, sc) in [(-8.0, -9.0, -7.5), (-13.0, -14.0, -12.0)] {
        write_grid(&p("p.asc"), vec![sp], 1, 1);
        write_grid(&p("l.asc"), vec![sl], 1, 1);
        write_grid(&p("c.asc"), vec![sc], 1, 1);
        let prefix = p("one");
        ok(&[
            "estimate",
            "--model",
            s(&t.model),
            "--sigma-p",
            s(&p("p.asc")),
            "--sigma-l",
            s(&p("l.asc")),
            "--sigma-c",
            s(&p("c.asc")),
            "--theta",
            "62",
            "--h-rms",
            "2.2",
            "--out-prefix",
            s(&prefix),
        ]);
        let want = estimate_point(sp, sl, Some(sc), 62.0, 2.2, &model).unwrap();
        let mv = Raster::read_asc(p("one_mv.asc")).unwrap();
        let h = Raster::read_asc(p("one_height.asc")).unwrap();
        let br = Raster::read_asc(p("one_branch.asc")).unwrap();
        assert_eq!(mv.values[0], want.mv);
        assert_eq!(h.values[0], want.height);
        assert_eq!(br.values[0], if want.branch == Scenario::Bare { 0.0 } else { 1.0 });
    }

    // a fully vegetated scene needs no C band
    let n = 9;
    write_grid(&p("vp.asc"), vec![-6.0; n], 3, 3);
    write_grid(&p("vl.asc"), (0..n).map(|i| -6.0 - 0.1 * i as f64).collect(), 3, 3);
    write_grid(&p("theta.asc"), vec![61.0; n], 3, 3);
    ok(&[
        "estimate",
        "--model",
        s(&t.model),
        "--sigma-p",
        s(&p("vp.asc")),
        "--sigma-l",
        s(&p("vl.asc")),
        "--theta",
        s(&p("theta.asc")),
        "--speckle-window-m",
        "3",
        "--out-prefix",
        s(&p("veg")),
    ]);
    let mv = Raster::read_asc(p("veg_mv.asc")).unwrap();
    assert!(mv.values.iter().all(|&v| !mv.is_nodata(v)));

    // grid mismatch names the raster
    write_grid(&p("small.asc"), vec![-6.0; 4], 2, 2);
    let out = sarsoil(&[
        "estimate",
        "--model",
        s(&t.model),
        "--sigma-p",
        s(&p("vp.asc")),
        "--sigma-l",
        s(&p("small.asc")),
        "--theta",
        "61",
        "--out-prefix",
        s(&p("bad")),
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma_l"));

    // evaluation against ground points
    std::fs::write(
        p("samples.csv"),
        "id,x,y,mv,height\na,0.5,0.5,0.30,1.2\nb,2.5,2.5,0.25,1.0\nfar,100,100,0.2,1.0\n",
    )
    .unwrap();
    let report = p("eval.txt");
    let stdout = ok(&[
        "evaluate",
        "--estimates",
        s(&p("veg_mv.asc")),
        "--samples",
        s(&p("samples.csv")),
        "--branch",
        s(&p("veg_branch.asc")),
        "--out",
        s(&report),
    ]);
    assert!(stdout.contains("overall: n=2"));
    assert!(stdout.contains("skipped_outside=1"));
    let points = std::fs::read_to_string(p("eval_points.csv")).unwrap();
    assert_eq!(points.lines().count(), 3);

    std::fs::write(p("empty.csv"), "id,x,y,mv,height\n").unwrap();
    let out = sarsoil(&[
        "evaluate",
        "--estimates",
        s(&p("veg_mv.asc")),
        "--samples",
        s(&p("empty.csv")),
        "--out",
        s(&report),
    ]);
    assert_eq!(code(&out), 1);
    std::fs::write(p("outside.csv"), "id,x,y,mv,height\nz,50,50,0.2,1\n").unwrap();
    let out = sarsoil(&[
        "evaluate",
        "--estimates",
        s(&p("veg_mv.asc")),
        "--samples",
        s(&p("outside.csv")),
        "--out",
        s(&report),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn evaluate_reports_known_offset() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    let truth: Vec<f64> = (0..25).map(|i| 0.1 + 0.01 * i as f64).collect();
    write_grid(&p("est.asc"), truth.iter().map(|v| v + 0.05).collect(), 5, 5);
    write_grid(&p("exact.asc"), vec![0.2; 25], 5, 5);
    std::fs::write(p("s.csv"), "id,x,y,mv,height\na,1.5,1.5,0.2,0\nb,3.5,2.5,0.2,0\n").unwrap();
    let stdout = ok(&[
        "evaluate",
        "--estimates",
        s(&p("exact.asc")),
        "--samples",
        s(&p("s.csv")),
        "--out",
        s(&p("r.txt")),
    ]);
    assert!(stdout.contains("rmse=0.000000"), "{stdout}");

    // window of one cell reads the pixel itself
    let mut rows = String::from("id,x,y,mv,height\n");
    for r in 0..5 {
        for c in 0..5 {
            let (x, y) = (c as f64 + 0.5, 4.5 - r as f64);
            rows.push_str(&format!("p{r}{c},{x},{y},{},0\n", truth[r * 5 + c]));
        }
    }
    std::fs::write(p("all.csv"), rows).unwrap();
    let stdout = ok(&[
        "evaluate",
        "--estimates",
        s(&p("est.asc")),
        "--samples",
        s(&p("all.csv")),
        "--window-m",
        "1",
        "--out",
        s(&p("r2.txt")),
    ]);
    assert!(
        stdout.contains("overall: n=25 rmse=0.050000 bias=+0.050000"),
        "{stdout}"
    );
}

fn record(sl: f64, sp: f64, h: f64) -> SampleRecord {
    SampleRecord {
        theta: 60.0,
        h_rms: 2.21,
        crop_height: h,
        sigma_p_db: sp,
        sigma_l_db: sl,
        sigma_c_db: None,
        mv: 0.2,
    }
}

#[test]
fn fit_height_lm_recovers_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let k = HeightLmCoeffs::PUBLISHED;
    let records = (0..40)
        .map(|i| {
            let sl = -18.0 + 0.37 * i as f64;
            let sp = -15.0 + 0.5 * ((i * 7) % 13) as f64;
            record(sl, sp, k.raw(sl, sp))
        })
        .collect();
    let data = dir.path().join("h.csv");
    write_csv(
        &SampleSet {
            scenario: None,
            records,
        },
        &data,
    )
    .unwrap();
    let out = dir.path().join("hlm.txt");
    ok(&["fit", "--what", "height-lm", "--data", s(&data), "--out", s(&out)]);
    let got = HeightLmCoeffs::load(&out).unwrap();
    assert!((got.intercept - 3.119).abs() < 1e-9 * 3.119);
    assert!((got.coef_l - 0.1372).abs() < 1e-9 * 0.1372);
    assert!((got.coef_p - 0.1117).abs() < 1e-9 * 0.1117);
    let resid = std::fs::read_to_string(dir.path().join("hlm_residuals.csv")).unwrap();
    assert!(resid.starts_with("band,lambda_cm,n,min,q1,median,q3,max,mean"));
    assert!(resid.contains("height,,40,"));
}

#[test]
fn fit_dubois_from_perturbed_start() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig::new(Scenario::Vegetated)
        .ranges(RangeSpec {
            theta: Range::new(40.0, 65.0),
            mv: Range::new(0.05, 0.45),
            h_rms: Range::new(1.5, 3.5),
            crop_height: Range::new(0.0, 3.0),
        })
        .n(150)
        .seed(5)
        .noise_db(0.0);
    let set = generate(&cfg).unwrap();
    let data = dir.path().join("tune.csv");
    write_csv(&set, &data).unwrap();
    let mut init = DuboisConstants::PUBLISHED.to_array();
    for (i, v) in init.iter_mut().enumerate() {
        *v *= if i % 3 == 0 { 0.9 } else { 1.1 };
    }
    let init_path = dir.path().join("init.txt");
    save_constants(&DuboisConstants::from_array(init), &init_path).unwrap();
    let out = dir.path().join("k.txt");
    let stdout = ok(&[
        "fit",
        "--what",
        "dubois",
        "--data",
        s(&data),
        "--init",
        s(&init_path),
        "--out",
        s(&out),
    ]);
    assert!(stdout.contains("max prediction error"));
    let fitted = load_constants(&out).unwrap();
    let bands = BandProfile::DRONE_SAR;
    for mv in [0.05, 0.25, 0.45] {
        for h in [0.0, 1.5, 3.0] {
            for theta in [40.0, 52.0, 65.0] {
                for band in Band::ALL {
                    let sc = SceneParams::new(
                        theta,
                        2.21,
                        dielectric_from_moisture(mv).unwrap(),
                        bands.wavelength_cm(band),
                        h,
                    )
                    .unwrap();
                    let d = forward_reflectivity(&sc, &fitted).unwrap().db
                        - forward_reflectivity(&sc, &DuboisConstants::PUBLISHED).unwrap().db;
                    assert!(d.abs() < 0.1, "{d} dB at mv {mv} h {h} θ {theta} {band:?}");
                }
            }
        }
    }
    let resid = std::fs::read_to_string(dir.path().join("k_residuals.csv")).unwrap();
    assert_eq!(resid.lines().count(), 4);
}

#[test]
fn fit_dubois_needs_three_bands() {
    let dir = tempfile::tempdir().unwrap();
    let records = (0..20)
        .map(|i| record(-10.0 - i as f64 * 0.1, -9.0, 0.1 * i as f64))
        .collect();
    let data = dir.path().join("pl.csv");
    write_csv(
        &SampleSet {
            scenario: None,
            records,
        },
        &data,
    )
    .unwrap();
    let out = sarsoil(&[
        "fit",
        "--what",
        "dubois",
        "--data",
        s(&data),
        "--out",
        s(&dir.path().join("k.txt")),
    ]);
    assert_eq!(code(&out), 1);
}
