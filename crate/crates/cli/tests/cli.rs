use std::path::Path;
use std::process::{Command, Output};

use piv_core::fieldcore::{read_flo, write_flo, write_pgm};
use piv_core::{BoundaryMode, GridSpec, ScalarField2D, VectorField2D};

fn pivctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pivctl")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, flow: &str, n: &str, seed: &str) -> Output {
    pivctl(&[
        "generate",
        "--out",
        s(dir),
        "--flow",
        flow,
        "--n",
        n,
        "--seed",
        seed,
        "--width",
        "64",
        "--height",
        "48",
    ])
}

fn texture(spec: GridSpec) -> ScalarField2D {
    ScalarField2D::from_fn(spec, |x, y| {
        let (x, y) = (x as f64, y as f64);
        (127.5 + 60.0 * (0.31 * x).sin() * (0.23 * y).cos() + 40.0 * (0.17 * x + 0.29 * y).sin()).round()
    })
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&pivctl(&["--help"])), 0);
    assert_eq!(code(&pivctl(&["--version"])), 0);
    assert_eq!(code(&pivctl(&["estimate", "--help"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&pivctl(&[])), 1);
    assert_eq!(code(&pivctl(&["frobnicate"])), 1);
    assert_eq!(code(&pivctl(&["generate", "--flow", "uniform:12,0"])), 1);
    assert_eq!(code(&pivctl(&["generate", "--flow", "uniform:1"])), 1);
    assert_eq!(code(&pivctl(&["generate", "--flow", "random", "--max-disp", "11"])), 1);
    assert_eq!(code(&pivctl(&["estimate", "--img1", "a.pgm"])), 1);
    assert_eq!(code(&pivctl(&["diagnose", "--tests", "spectrum"])), 1);
    assert_eq!(code(&pivctl(&["diagnose", "--flo", "x.flo", "--tests", "density"])), 1);
    assert_eq!(code(&pivctl(&["bench", "--methods", "cc"])), 1);
    assert_eq!(code(&pivctl(&["bench", "--synthetic", "--threads", "0"])), 1);
}

#[test]
fn missing_and_malformed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.pgm");
    let out = pivctl(&["estimate", "--img1", s(&missing), "--img2", s(&missing)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.pgm"));

    let junk = dir.path().join("junk.pgm");
    std::fs::write(&junk, b"P2\n2 2\n255\n0 0 0 0\n").unwrap();
    assert_eq!(code(&pivctl(&["estimate", "--img1", s(&junk), "--img2", s(&junk)])), 3);

    let bad_flo = dir.path().join("bad.flo");
    std::fs::write(&bad_flo, [0u8; 12]).unwrap();
    assert_eq!(
        code(&pivctl(&["diagnose", "--flo", s(&bad_flo), "--out", s(dir.path())])),
        3
    );
}

#[test]
fn estimator_failure_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GridSpec::new(64, 64, BoundaryMode::Clamp).unwrap();
    let flat = dir.path().join("flat.pgm");
    write_pgm(
        &ScalarField2D::constant(spec, 90.0),
        std::fs::File::create(&flat).unwrap(),
    )
    .unwrap();
    let out = pivctl(&["estimate", "--img1", s(&flat), "--img2", s(&flat), "--method", "cc"]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn generate_writes_named_triples() {
    let dir = tempfile::tempdir().unwrap();
    let out = generate(dir.path(), "uniform:2.5,-1", "3", "4");
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 3);
    for i in 0..3 {
        for suffix in ["img1.pgm", "img2.pgm", "flow.flo"] {
            assert!(dir.path().join(format!("pair_{i:04}_{suffix}")).is_file());
        }
    }
    let flow = read_flo(std::fs::File::open(dir.path().join("pair_0001_flow.flo")).unwrap()).unwrap();
    assert_eq!((flow.width(), flow.height()), (64, 48));
    assert!(flow.u().iter().all(|&u| u == 2.5) && flow.v().iter().all(|&v| v == -1.0));
}

#[test]
fn same_seed_same_bytes_and_pairs_independent_of_count() {
    let (a, b, c) = (
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
    );
    generate(a.path(), "random", "2", "7");
    generate(b.path(), "random", "2", "7");
    generate(c.path(), "random", "1", "8");
    let read = |d: &Path, n: &str| std::fs::read(d.join(n)).unwrap();
    for n in ["pair_0000_img1.pgm", "pair_0001_img2.pgm", "pair_0001_flow.flo"] {
        assert_eq!(read(a.path(), n), read(b.path(), n));
    }
    assert_ne!(
        read(a.path(), "pair_0000_flow.flo"),
        read(a.path(), "pair_0001_flow.flo")
    );
    assert_ne!(
        read(a.path(), "pair_0000_flow.flo"),
        read(c.path(), "pair_0000_flow.flo")
    );

    let d = tempfile::tempdir().unwrap();
    generate(d.path(), "random", "1", "7");
    assert_eq!(
        read(a.path(), "pair_0000_img1.pgm"),
        read(d.path(), "pair_0000_img1.pgm")
    );
}

#[test]
fn identical_images_estimate_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GridSpec::new(64, 64, BoundaryMode::Clamp).unwrap();
    let img = dir.path().join("t_img1.pgm");
    write_pgm(&texture(spec), std::fs::File::create(&img).unwrap()).unwrap();
    let truth = dir.path().join("zero.flo");
    write_flo(&VectorField2D::zeros(spec), std::fs::File::create(&truth).unwrap()).unwrap();
    for method in ["cc", "hs"] {
        let out = pivctl(&[
            "estimate",
            "--img1",
            s(&img),
            "--img2",
            s(&img),
            "--truth",
            s(&truth),
            "--method",
            method,
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let text = stdout(&out);
        assert!(text.lines().any(|l| l == "rmse=0"), "{text}");
        let pred = dir.path().join("t_pred.flo");
        assert!(text.contains(&format!("wrote {}", pred.display())));
        let f = read_flo(std::fs::File::open(&pred).unwrap()).unwrap();
        assert!(f.u().iter().chain(f.v()).all(|&x| x == 0.0));
    }
}

#[test]
fn estimate_recovers_a_generated_shift() {
    let dir = tempfile::tempdir().unwrap();
    let gen = pivctl(&[
        "generate",
        "--out",
        s(dir.path()),
        "--flow",
        "uniform:2,1",
        "--width",
        "96",
        "--height",
        "96",
        "--seed",
        "3",
    ]);
    assert_eq!(code(&gen), 0);
    let p = |n: &str| dir.path().join(n);
    let out = pivctl(&[
        "estimate",
        "--img1",
        s(&p("pair_0000_img1.pgm")),
        "--img2",
        s(&p("pair_0000_img2.pgm")),
        "--truth",
        s(&p("pair_0000_flow.flo")),
        "--method",
        "hs",
        "--out",
        s(&p("hs.flo")),
    ]);
    let text = stdout(&out);
    let rmse: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("rmse="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(rmse < 0.15, "{text}");
    assert!(text.lines().any(|l| l.starts_with("time=")));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# shared settings\nflow = uniform:1,1\nwidth = 40\nheight = 40\nn = 2\n",
    )
    .unwrap();
    let out = pivctl(&["generate", "--config", s(&cfg), "--out", s(dir.path()), "--n", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 1);
    let f = read_flo(std::fs::File::open(dir.path().join("pair_0000_flow.flo")).unwrap()).unwrap();
    assert_eq!((f.width(), f.at(0, 0)), (40, (1.0, 1.0)));

    std::fs::write(&cfg, "flow uniform\n").unwrap();
    assert_eq!(code(&pivctl(&["generate", "--config", s(&cfg)])), 1);
    assert_eq!(
        code(&pivctl(&[
            "generate",
            "--flow",
            "random",
            "--config",
            s(&dir.path().join("none.cfg"))
        ])),
        2
    );
}

#[test]
fn diagnose_writes_requested_tables() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "random", "2", "1");
    let f = |n: &str| dir.path().join(n);
    let out_dir = f("diag");
    let out = pivctl(&[
        "diagnose",
        "--flo",
        s(&f("pair_0000_flow.flo")),
        s(&f("pair_0001_flow.flo")),
        "--tests",
        "spectrum,sf",
        "--orders",
        "2,4",
        "--radii",
        "2,4",
        "--prefix",
        "truth_",
        "--out",
        s(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let mut names: Vec<_> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["truth_sf.csv", "truth_spectrum.csv"]);
    let sf = std::fs::read_to_string(out_dir.join("truth_sf.csv")).unwrap();
    let lines: Vec<&str> = sf.lines().collect();
    assert_eq!(lines[0], "n,r,S");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("2,2,"));

    // spectra need periodic fields
    let clamp = pivctl(&[
        "diagnose",
        "--flo",
        s(&f("pair_0000_flow.flo")),
        "--tests",
        "spectrum",
        "--boundary",
        "clamp",
        "--out",
        s(&out_dir),
    ]);
    assert_eq!(code(&clamp), 3);
    let mismatch = pivctl(&[
        "diagnose",
        "--flo",
        s(&f("pair_0000_flow.flo")),
        "--pgm",
        s(&f("pair_0000_img1.pgm")),
        s(&f("pair_0001_img1.pgm")),
        "--tests",
        "flux",
    ]);
    assert_eq!(code(&mismatch), 1);
}

#[test]
fn bench_suite_matches_estimate() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "uniform:1.5,0.5", "2", "2");
    let out_dir = dir.path().join("report");
    let out = pivctl(&[
        "bench",
        "--suite",
        s(dir.path()),
        "--methods",
        "hs",
        "--levels",
        "3",
        "--out",
        s(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = std::fs::read_to_string(out_dir.join("bench_rows.csv")).unwrap();
    let first: Vec<&str> = rows.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&first[..3], ["pair_0000", "hs", "0"]);
    assert_eq!(rows.lines().count(), 3);
    assert_eq!(
        std::fs::read_to_string(out_dir.join("bench_summary.csv"))
            .unwrap()
            .lines()
            .count(),
        3
    );

    let p = |n: &str| dir.path().join(n);
    let est = pivctl(&[
        "estimate",
        "--img1",
        s(&p("pair_0000_img1.pgm")),
        "--img2",
        s(&p("pair_0000_img2.pgm")),
        "--truth",
        s(&p("pair_0000_flow.flo")),
        "--method",
        "hs",
        "--levels",
        "3",
    ]);
    let printed: f64 = stdout(&est)
        .lines()
        .find_map(|l| l.strip_prefix("rmse="))
        .unwrap()
        .parse()
        .unwrap();
    let benched: f64 = first[3].parse().unwrap();
    assert!((printed - benched).abs() <= 1e-12, "{printed} vs {benched}");
}

#[test]
fn bench_renders_bare_flow_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GridSpec::new(64, 64, BoundaryMode::Clamp).unwrap();
    let swirl = VectorField2D::from_fn(spec, |x, y| (0.04 * (y as f64 - 31.5), -0.04 * (x as f64 - 31.5)));
    write_flo(&swirl, std::fs::File::create(dir.path().join("swirl.flo")).unwrap()).unwrap();
    write_flo(
        &VectorField2D::uniform(spec, 1.0, 0.5),
        std::fs::File::create(dir.path().join("drift.flo")).unwrap(),
    )
    .unwrap();
    let run = || pivctl(&["bench", "--suite", s(dir.path()), "--methods", "cc,hs", "--seed", "4"]);
    let out = run();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let cases: Vec<&str> = text.lines().map(|l| l.split(' ').next().unwrap()).collect();
    assert_eq!(cases, ["drift", "drift", "swirl", "swirl"]);
    let strip = |t: String| {
        t.lines()
            .map(|l| l.rsplit_once(' ').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(text), strip(stdout(&run())));

    write_flo(
        &VectorField2D::uniform(spec, 11.0, 0.0),
        std::fs::File::create(dir.path().join("fast.flo")).unwrap(),
    )
    .unwrap();
    assert_eq!(code(&run()), 3);
    let empty = tempfile::tempdir().unwrap();
    assert_eq!(code(&pivctl(&["bench", "--suite", s(empty.path())])), 1);
}

#[test]
fn synthetic_bench_reports_each_case_and_method() {
    let out = pivctl(&["bench", "--synthetic", "--n", "1", "--width", "64", "--height", "64"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let heads: Vec<String> = text
        .lines()
        .map(|l| l.split(' ').take(2).collect::<Vec<_>>().join(" "))
        .collect();
    assert_eq!(heads, ["uniform cc", "uniform hs", "random cc", "random hs"]);
    for line in text.lines() {
        let rmse: f64 = line
            .split(' ')
            .find_map(|w| w.strip_prefix("rmse="))
            .unwrap()
            .parse()
            .unwrap();
        assert!(rmse.is_finite() && rmse >= 0.0);
    }
}

#[test]
fn diagnose_examples() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GridSpec::new(32, 32, BoundaryMode::Clamp).unwrap();
    let rot = dir.path().join("rot.flo");
    write_flo(
        &VectorField2D::from_fn(spec, |x, y| (-0.5 * (y as f64 - 16.0), 0.5 * (x as f64 - 16.0))),
        std::fs::File::create(&rot).unwrap(),
    )
    .unwrap();
    let out = pivctl(&[
        "diagnose",
        "--flo",
        s(&rot),
        "--tests",
        "div",
        "--boundary",
        "clamp",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let div = std::fs::read_to_string(dir.path().join("div.csv")).unwrap();
    assert_eq!(div.lines().nth(1).unwrap().split(',').nth(1), Some("0"));

    let mode = dir.path().join("mode.flo");
    let wave = |x: usize| (2.0 * std::f64::consts::PI * 4.0 * x as f64 / 32.0).cos();
    write_flo(
        &VectorField2D::from_fn(spec, |x, _| (0.0, wave(x))),
        std::fs::File::create(&mode).unwrap(),
    )
    .unwrap();
    let out = pivctl(&[
        "diagnose",
        "--flo",
        s(&mode),
        "--tests",
        "spectrum",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0);
    let e: Vec<f64> = std::fs::read_to_string(dir.path().join("spectrum.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(e[4] / e.iter().sum::<f64>() >= 0.999);
}
