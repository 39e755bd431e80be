use std::path::Path;
use std::process::{Command, Output};

fn nugsdp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nugsdp"))
        .args(args)
        .current_dir(cwd)
        .env_remove("NUGSDP_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn generate_defaults_write_sixty_records() {
    let dir = tempfile::tempdir().unwrap();
    let o = nugsdp(&["generate", "--output", "d.txt"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("n=60 M=4 K=5"));
    let text = std::fs::read_to_string(dir.path().join("d.txt")).unwrap();
    assert_eq!(text.lines().count(), 61);
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.txt", "b.txt"] {
        let o = nugsdp(&["generate", "--seed", "9", "--noise-level", "0.5", "-o", name], dir.path());
        assert_eq!(code(&o), 0);
    }
    let a = std::fs::read(dir.path().join("a.txt")).unwrap();
    let b = std::fs::read(dir.path().join("b.txt")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&nugsdp(&["generate", "--copies", "0"], dir.path())), 2);
    assert_eq!(code(&nugsdp(&["generate", "--bogus"], dir.path())), 2);
    assert_eq!(code(&nugsdp(&["solve", "missing.txt"], dir.path())), 2);
    assert_eq!(code(&nugsdp(&["baseline", "missing.txt"], dir.path())), 2);
    assert_eq!(code(&nugsdp(&[], dir.path())), 2);
}

#[test]
fn unwritable_output_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = nugsdp(&["generate", "-o", "no/such/dir/d.txt"], dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn malformed_dataset_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.txt"), "2 2 1 0 0\n0 0 1 0 1\n").unwrap();
    assert_eq!(code(&nugsdp(&["solve", "bad.txt"], dir.path())), 2);
}

#[test]
fn solve_noiseless_dataset_reports_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = nugsdp(&["generate", "--classes", "2", "--copies", "4", "--bandwidth", "2", "-o", "d.txt"], p);
    assert_eq!(code(&o), 0);
    let o = nugsdp(
        &[
            "solve",
            "d.txt",
            "--report",
            "r.csv",
            "--assignments",
            "a.csv",
            "--trace",
            "t.csv",
            "--dump-coefficients",
            "f.txt",
            "--dump-variables",
            "x.txt",
        ],
        p,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(p.join("r.csv")).unwrap();
    let row: Vec<&str> = report.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "8");
    assert_eq!(row[4], "0");
    assert_eq!(std::fs::read_to_string(p.join("a.csv")).unwrap().lines().count(), 9);
    assert!(std::fs::read_to_string(p.join("t.csv")).unwrap().starts_with("iteration,"));
    assert!(std::fs::read_to_string(p.join("f.txt")).unwrap().starts_with("8 2\n"));
    assert!(std::fs::read_to_string(p.join("x.txt")).unwrap().starts_with("8 2\n"));
}

#[test]
fn nonconvergence_exits_three_and_still_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    nugsdp(&["generate", "--classes", "2", "--copies", "3", "--bandwidth", "2", "--noise-level", "0.5", "-o", "d.txt"], p);
    let o = nugsdp(&["solve", "d.txt", "--max-iterations", "2", "--report", "r.csv"], p);
    assert_eq!(code(&o), 3);
    assert!(p.join("r.csv").exists());
}

#[test]
fn baseline_on_noiseless_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    nugsdp(&["generate", "--copies", "3", "-o", "d.txt"], p);
    for sig in ["bispectrum", "autocorrelation"] {
        let o = nugsdp(&["baseline", "d.txt", "--signature", sig], p);
        assert_eq!(code(&o), 0);
        assert!(stdout(&o).contains("classification_error=0"), "{}", stdout(&o));
    }
    assert_eq!(code(&nugsdp(&["baseline", "d.txt", "--signature", "power"], p)), 2);
}

#[test]
fn maxkcut_two_cliques() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("g.txt"),
        "# two triangles\n0 1 1\n0 2 1\n1 2 1\n3 4 1\n3 5 1\n4 5 1\n",
    )
    .unwrap();
    let o = nugsdp(&["maxkcut", "g.txt", "--classes", "2", "--dump-y", "y.txt"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    // Two clusters cannot cut every edge of a triangle: the optimum keeps one
    // edge per triangle.
    assert!(out.contains("retained_weight=2 "), "{out}");
    let labels: Vec<&str> = out.lines().skip(1).take(6).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert!(!(labels[0] == labels[1] && labels[1] == labels[2]));
    assert!(!(labels[3] == labels[4] && labels[4] == labels[5]));
    assert!(std::fs::read_to_string(p.join("y.txt")).unwrap().starts_with("6 0\n"));
}

#[test]
fn maxkcut_single_edge_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("e.txt"), "0 1 2.5\n").unwrap();
    let o = nugsdp(&["maxkcut", "e.txt"], p);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("0,0,0\n1,1,0\n"), "{out}");
    assert!(out.contains("retained_weight=0 "));
    assert_eq!(code(&nugsdp(&["maxkcut", "e.txt", "--classes", "3"], p)), 2);
    std::fs::write(p.join("bad.txt"), "0 1\n").unwrap();
    assert_eq!(code(&nugsdp(&["maxkcut", "bad.txt"], p)), 2);
}

#[test]
fn config_file_supplies_flags_and_cli_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("run.conf"), "# defaults\nclasses = 3\ncopies = 2\nbandwidth=1\noutput = c.txt\n").unwrap();
    let o = nugsdp(&["--config", "run.conf", "generate", "--copies", "4"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("n=12 M=3 K=1"), "{}", stdout(&o));
    assert!(p.join("c.txt").exists());
    std::fs::write(p.join("bad.conf"), "classes\n").unwrap();
    assert_eq!(code(&nugsdp(&["--config", "bad.conf", "generate"], p)), 2);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    std::fs::create_dir(&out).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_nugsdp"))
        .args(["generate", "--copies", "1", "--bandwidth", "1"])
        .current_dir(dir.path())
        .env("NUGSDP_OUTPUT_DIR", &out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(out.join("dataset.txt").exists());
}

#[test]
fn benchmark_rerun_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let args = |o: &'static str, s: &'static str| {
        vec![
            "benchmark", "--classes", "2", "--copies", "3", "--bandwidth", "2", "--levels", "0,0.5", "--trials", "2",
            "--seed", "5", "--no-wall-time", "-o", o, "--summary", s,
        ]
    };
    assert_eq!(code(&nugsdp(&args("a.csv", "as.csv"), p)), 0);
    assert_eq!(code(&nugsdp(&args("b.csv", "bs.csv"), p)), 0);
    let a = std::fs::read_to_string(p.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read_to_string(p.join("b.csv")).unwrap());
    assert_eq!(
        std::fs::read_to_string(p.join("as.csv")).unwrap(),
        std::fs::read_to_string(p.join("bs.csv")).unwrap()
    );
    assert!(a.starts_with("# noise_level"));
    assert_eq!(a.lines().nth(1).unwrap(), "noise_level,trial,method,classification_error,objective,converged,wall_time");
    assert_eq!(a.lines().count(), 2 + 8);
    assert_eq!(code(&nugsdp(&["benchmark", "--trials", "0"], p)), 2);
    assert_eq!(code(&nugsdp(&["benchmark", "--methods", "sdp"], p)), 2);
}

#[test]
fn help_documents_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = nugsdp(&["--help"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("3  the solver did not converge"));
}

#[test]
fn unknown_preset_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = nugsdp(&["benchmark", "--preset", "huge"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("full or reduced"));
}
