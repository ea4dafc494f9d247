use std::process::Command;

use fade_exp::output::{
    emit_plotdata, read_rows, write_all, write_rows, MANIFEST_FILE, PLOT_DIR, RESULTS_FILE,
};
use fade_exp::{run, ExperimentSpec, Mode};

fn small(mode: Mode) -> ExperimentSpec {
    ExperimentSpec {
        mode,
        noise_levels: vec![0.0, 0.03],
        n_list: vec![3, 4],
        l1_list: vec![6.0, 9.0],
        per_unit: vec![150.0],
        seeds: vec![1, 2],
        truth: fade_exp::config::Truth {
            nu: 0.2,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn csv_bytes(spec: &ExperimentSpec) -> Vec<u8> {
    let mut out = Vec::new();
    write_rows(&mut out, &run(spec, &|_| {}).unwrap()).unwrap();
    out
}

#[test]
fn identical_specs_give_identical_csv() {
    for mode in [Mode::TwoParam, Mode::ThreeParam] {
        let spec = small(mode);
        let parallel = ExperimentSpec {
            jobs: 4,
            ..spec.clone()
        };
        let serial = ExperimentSpec {
            jobs: 1,
            ..spec.clone()
        };
        let a = csv_bytes(&parallel);
        assert_eq!(a, csv_bytes(&serial));
        assert_eq!(a, csv_bytes(&spec));
    }
}

#[test]
fn csv_round_trip() {
    let rows = run(&small(Mode::ThreeParam), &|_| {}).unwrap();
    let mut buf = Vec::new();
    write_rows(&mut buf, &rows).unwrap();
    assert_eq!(read_rows(buf.as_slice()).unwrap(), rows);

    // failed cells carry NaN, which never compares equal
    let mut spec = small(Mode::TwoParam);
    spec.l1_list = vec![0.001];
    let failed = run(&spec, &|_| {}).unwrap();
    let mut buf = Vec::new();
    write_rows(&mut buf, &failed).unwrap();
    let back = read_rows(buf.as_slice()).unwrap();
    for (a, b) in failed.iter().zip(&back) {
        assert_eq!(
            (a.cell, a.seed, &a.error, a.converged),
            (b.cell, b.seed, &b.error, b.converged)
        );
        assert!(b.nu.is_nan() && b.err_combined.is_nan());
    }
}

#[test]
fn floats_carry_seventeen_digits() {
    let text = String::from_utf8(csv_bytes(&small(Mode::TwoParam))).unwrap();
    let line = text.lines().nth(1).unwrap();
    let nu = line.split(',').nth(9).unwrap();
    let mantissa = nu.trim_start_matches('-').split('e').next().unwrap();
    assert_eq!(mantissa.replace('.', "").len(), 17, "{nu}");
}

#[test]
fn empty_rows_give_header_only_plot_files() {
    let files = emit_plotdata(&[]);
    assert_eq!(files.len(), 6);
    for (_, body) in files {
        assert_eq!(body, "x,series,value\n");
    }
}

#[test]
fn plot_data_averages_over_seeds() {
    let spec = small(Mode::TwoParam);
    let rows = run(&spec, &|_| {}).unwrap();
    let files = emit_plotdata(&rows);
    let (_, errors_vs_l1) = files
        .iter()
        .find(|(n, _)| *n == "errors_vs_l1.csv")
        .unwrap();
    let want: f64 = rows
        .iter()
        .filter(|r| r.l1 == 9.0 && r.noise == 0.03 && r.n == 3)
        .map(|r| r.err_nu)
        .sum::<f64>()
        / 2.0;
    let line = errors_vs_l1
        .lines()
        .find(|l| l.starts_with("9.0000000000000000e0,err_nu noise=0.03 n=3,"))
        .unwrap();
    let got: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
    assert!((got - want).abs() <= 1e-15 * want);
    // two-parameter runs have no order series
    assert!(!errors_vs_l1.contains("err_alpha"));
    let (_, by_noise) = files.iter().find(|(n, _)| *n == "err_d_vs_n.csv").unwrap();
    assert!(by_noise.lines().skip(1).all(|l| l.contains(",noise=0")));
}

#[test]
fn noise_free_cells_are_quadrature_accurate() {
    let spec = ExperimentSpec {
        mode: Mode::TwoParam,
        noise_levels: vec![0.0],
        n_list: vec![3, 6],
        l1_list: vec![5.0, 9.0],
        per_unit: vec![1500.0],
        truth: fade_exp::config::Truth {
            nu: 0.2,
            ..Default::default()
        },
        ..Default::default()
    };
    for row in run(&spec, &|_| {}).unwrap() {
        assert!(row.err_nu <= 1e-3 && row.err_d <= 1e-3, "{row:?}");
    }
    let three = ExperimentSpec {
        mode: Mode::ThreeParam,
        per_unit: vec![1500.0],
        n_list: vec![5],
        noise_levels: vec![0.0],
        ..Default::default()
    };
    let row = &run(&three, &|_| {}).unwrap()[0];
    assert!(row.converged);
    assert!(
        row.err_nu <= 1e-3 && row.err_d <= 1e-3 && row.err_alpha <= 1e-3,
        "{row:?}"
    );
}

#[test]
fn table_one_cell() {
    // defaults are the seven-member, 2% noise, dx = 1/3500 design
    let rows = run(&ExperimentSpec::default(), &|_| {}).unwrap();
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert!(row.converged, "{row:?}");
    for e in [row.err_nu, row.err_d, row.err_alpha] {
        assert!(e <= 2e-2, "{row:?}");
    }
    assert!((row.dx - 1.0 / 3500.0).abs() < 1e-15);
}

#[test]
fn manifest_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec {
        output_dir: dir.path().to_path_buf(),
        ..small(Mode::ThreeParam)
    };
    let rows = run(&spec, &|_| {}).unwrap();
    write_all(dir.path(), &spec, &rows).unwrap();

    let manifest: toml::Table = std::fs::read_to_string(dir.path().join(MANIFEST_FILE))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(
        manifest["library_version"].as_str(),
        Some(fade_modfun::VERSION)
    );
    assert_eq!(manifest["cells"].as_integer(), Some(rows.len() as i64));
    let config = toml::to_string(&manifest["config"]).unwrap();
    let again = ExperimentSpec::from_toml(&config).unwrap();
    assert_eq!(again, spec);

    let mut rerun = Vec::new();
    write_rows(&mut rerun, &run(&again, &|_| {}).unwrap()).unwrap();
    assert_eq!(std::fs::read(dir.path().join(RESULTS_FILE)).unwrap(), rerun);
    assert_eq!(
        std::fs::read_dir(dir.path().join(PLOT_DIR))
            .unwrap()
            .count(),
        6
    );
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fade-exp"))
}

#[test]
fn binary_sweep_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        "mode = \"two-param\"\nnoise_levels = [0.03]\nn_list = [3]\nl1_list = [9.0]\nper_unit = [150.0]\nseeds = [1, 2, 3]\n\n[truth]\nnu = 0.2\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = binary()
        .args(["sweep", "--quiet", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let rows = read_rows(std::fs::File::open(out.join(RESULTS_FILE)).unwrap()).unwrap();
    assert_eq!(rows.iter().map(|r| r.seed).collect::<Vec<_>>(), [1, 2, 3]);

    // --seed replaces the seed list
    let single = dir.path().join("single");
    let status = binary()
        .args(["sweep", "--quiet", "--seed", "2", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&single)
        .status()
        .unwrap();
    assert!(status.success());
    let one = read_rows(std::fs::File::open(single.join(RESULTS_FILE)).unwrap()).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].nu, rows[1].nu);

    // a cell that cannot be estimated makes the exit code non-zero
    std::fs::write(
        &config,
        "mode = \"two-param\"\nl1_list = [0.001]\nper_unit = [150.0]\n",
    )
    .unwrap();
    let status = binary()
        .args(["sweep", "--quiet", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("bad"))
        .status()
        .unwrap();
    assert!(!status.success());

    let status = binary()
        .args(["sweep", "--config"])
        .arg(dir.path().join("missing.toml"))
        .status()
        .unwrap();
    assert!(!status.success());
}

#[test]
fn binary_estimate_and_selftest() {
    let dir = tempfile::tempdir().unwrap();
    let out = binary()
        .args(["estimate", "--seed", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("alpha") && stdout.contains("combined error"));
    let rows = read_rows(std::fs::File::open(dir.path().join("estimate.csv")).unwrap()).unwrap();
    assert_eq!(rows[0].seed, 3);
    assert!(dir.path().join("data.csv").exists());

    let out = binary().arg("selftest").output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 7);

    let help = binary().arg("--help").output().unwrap();
    assert!(String::from_utf8(help.stdout)
        .unwrap()
        .contains("step_clamp = 0.2"));
}
