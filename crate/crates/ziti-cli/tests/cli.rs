use std::path::Path;
use std::process::{Command, Output};

fn ziti(args: &[&str]) -> Output {
    ziti_env(args, &[])
}

fn ziti_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ziti"));
    for (k, _) in std::env::vars() {
        if k.starts_with("ZITI_") {
            cmd.env_remove(k);
        }
    }
    cmd.args(args).envs(env.iter().copied()).output().expect("run ziti")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

#[test]
fn integrate_table_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("int.csv");
    let o = ziti(&[
        "integrate", "--integrand", "inv_quarter", "--strategy", "polar", "--n", "40",
        "--csv", file.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&file).unwrap();
    assert!(text.starts_with("# ziti "));
    let (header, rows) = read_csv(&file);
    assert_eq!(header, ["integrand", "strategy", "N", "value", "exact", "abs_error"]);
    assert_eq!(rows.len(), 1);
    let num = |k: usize| rows[0][k].parse::<f64>().unwrap();
    assert_eq!(rows[0][0], "inv_quarter");
    assert_eq!(rows[0][2], "40");
    assert!((num(4) - 0.4545285537).abs() < 1e-9);
    assert!((num(5) - (num(3) - num(4)).abs()).abs() < 1e-15);
    assert!(num(5) < 1e-4);
}

#[test]
fn deterministic_output_is_reproducible() {
    let args = ["poisson", "--n", "24", "--deterministic"];
    let a = ziti(&args);
    let b = ziti(&args);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(!text.starts_with('#'));
    assert!(!text.lines().next().unwrap().contains("wall_s"));
    let stamped = ziti(&["poisson", "--n", "24"]);
    let text = String::from_utf8(stamped.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# ziti "));
    assert!(lines.next().unwrap().split(',').any(|c| c == "wall_s"));
    // The alias behaves the same.
    assert_eq!(ziti(&["poisson", "--n", "24", "--no-timestamp"]).stdout, b.stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&ziti(&["mesh", "--n", "3"])), 2);
    assert_eq!(code(&ziti(&["poisson", "--strategy", "hexagonal"])), 2);
    assert_eq!(code(&ziti(&["mesh", "--strategy", "cartesian", "--nr", "10"])), 2);
    assert_eq!(code(&ziti(&["integrate", "--integrand", "nope"])), 2);
    let blow = ziti(&["heat", "--n", "20", "--mu", "2", "--tf", "1"]);
    assert_eq!(code(&blow), 3, "{}", stderr(&blow));
    assert_eq!(code(&ziti(&["--config", "/nonexistent/ziti.conf", "mesh", "--n", "10"])), 4);
    assert_eq!(code(&ziti(&["mesh", "--n", "10", "--csv", "/nonexistent/dir/m.csv"])), 4);
    assert_eq!(code(&ziti(&["heat", "--n", "12", "--tf", "0.001", "--snapshot-every", "2"])), 2);
}

#[test]
fn settings_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("ziti.conf");
    std::fs::write(&conf, "# sizes\nn = 10\nstrategy = cartesian\n").unwrap();
    let c = conf.to_str().unwrap();
    let run = |extra: &[&str], env: &[(&str, &str)]| {
        let mut args = vec!["--config", c, "--deterministic", "mesh"];
        args.extend_from_slice(extra);
        let o = ziti_env(&args, env);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        o.stdout
    };
    let plain = |n: &str| ziti(&["--deterministic", "mesh", "--n", n]).stdout;
    assert_eq!(run(&[], &[]), plain("10"));
    assert_eq!(run(&[], &[("ZITI_N", "12")]), plain("12"));
    assert_eq!(run(&["--n", "14"], &[("ZITI_N", "12")]), plain("14"));
    assert_ne!(plain("10"), plain("12"));

    std::fs::write(&conf, "colour = blue\n").unwrap();
    let o = ziti(&["--config", c, "mesh"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown key"));
}

#[test]
fn convergence_sweep() {
    let o = ziti(&["convergence", "--sizes", ""]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no grid sizes"));
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("conv.csv");
    let o = ziti(&[
        "--deterministic", "convergence", "--strategy", "polar", "--sizes", "12,24",
        "--csv", file.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = read_csv(&file);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][col("nr")], "24");
    let er = |k: usize| rows[k][col("er_max")].parse::<f64>().unwrap();
    assert!(er(1) < er(0));
    assert!(rows.iter().all(|r| r[col("status")] == "ok"));
}

#[test]
fn bench_flags_failed_rules() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bench.csv");
    let o = ziti(&[
        "--deterministic", "bench", "--n", "40", "--integrands", "inv_sqrt_2pi_r,xy",
        "--csv", file.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = read_csv(&file);
    assert!(!header.iter().any(|h| h == "wall_s"));
    let status = |ig: &str, rule: &str| {
        rows.iter()
            .find(|r| r[0] == ig && r[1] == rule)
            .map(|r| r[6].clone())
            .unwrap()
    };
    assert_eq!(status("inv_sqrt_2pi_r", "polar-rect"), "ok");
    assert!(status("inv_sqrt_2pi_r", "trapezoid").starts_with("failed"));
    assert!(status("inv_sqrt_2pi_r", "simpson").starts_with("failed"));
    for rule in ["cartesian", "polar", "trapezoid", "simpson"] {
        assert_eq!(status("xy", rule), "ok");
    }
    let o = ziti(&["bench", "--integrands", ","]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("catalog empty"));
}

#[test]
fn heat_snapshots_and_basis_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("field.csv");
    let o = ziti(&[
        "--deterministic", "heat", "--n", "12", "--tf", "0.002", "--snapshot-every", "5",
        "--dump-field", dump.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = read_csv(&dump);
    assert_eq!(header, ["step", "t", "i", "j", "x", "y", "u", "u_exact", "abs_err"]);
    let steps: std::collections::BTreeSet<usize> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(steps.len() >= 2);
    assert!(steps.iter().all(|s| s % 5 == 0) || steps.iter().rev().skip(1).all(|s| s % 5 == 0));

    let o = ziti(&["--deterministic", "basis", "--a", "-1", "--b", "2", "--n", "10", "--gram"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(!o.stdout.is_empty());
}
