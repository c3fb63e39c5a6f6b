use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use ziti::bump_basis::{BasisOptions, BumpProfile, WeightRule};
use ziti::disk_mesh::{build_cartesian_disk, build_polar};
use ziti::pde_heat::{heat_exact, heat_source_space, run_heat, HeatOptions, HeatSign, Source};
use ziti::pde_poisson::{
    solve_poisson, DiskMesh, GridSize, PoissonOptions, RowKind, Stencil,
};
use ziti::quadrature::{
    baseline_integrate_rect, catalog, find_integrand, integrate_disk_cartesian,
    integrate_disk_polar, integrate_polar_rect, Arity, BaselineRule,
};
use ziti::{Basis1D, Integrand, SolveReport};

use crate::config::{parse_sizes, Settings};
use crate::report::{format_num, Field, TableReport, WALL_COLUMN};
use crate::{Cli, CliError, Command, GridArgs, HeatParams, SolverArgs};

const DEFAULT_SIZES: &str = "60,100,150,200";

struct Output {
    deterministic: bool,
    stamp: String,
}

impl Output {
    fn emit(&self, report: TableReport, path: Option<PathBuf>) -> Result<(), CliError> {
        report.check_finite()?;
        if self.deterministic {
            report.without_column(WALL_COLUMN).emit(path.as_deref(), None)
        } else {
            report.emit(path.as_deref(), Some(&self.stamp))
        }
    }
}

pub fn run(cli: &Cli, s: &Settings) -> Result<(), CliError> {
    let name = match &cli.command {
        Command::Basis(_) => "basis",
        Command::Mesh(_) => "mesh",
        Command::Integrate(_) => "integrate",
        Command::Poisson(_) => "poisson",
        Command::Heat(_) => "heat",
        Command::Convergence(_) => "convergence",
        Command::Bench(_) => "bench",
    };
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let out = Output {
        deterministic: s.flag(cli.deterministic, "deterministic")?,
        stamp: format!("ziti {} {name} unix_time={secs}", env!("CARGO_PKG_VERSION")),
    };
    // Reserved; the computations are deterministic.
    let _seed: Option<u64> = s.opt(None, "seed")?;
    match &cli.command {
        Command::Basis(a) => basis(a, s, &out),
        Command::Mesh(a) => mesh(a, s, &out),
        Command::Integrate(a) => integrate(a, s, &out),
        Command::Poisson(a) => poisson(a, s, &out),
        Command::Heat(a) => heat(a, s, &out),
        Command::Convergence(a) => convergence(a, s, &out),
        Command::Bench(a) => bench(a, s, &out),
    }
}

fn parse_with<T>(v: &str, what: &str, f: impl Fn(&str) -> ziti::Result<T>) -> Result<T, CliError> {
    f(v).map_err(|e| CliError::Validation(format!("{what}: {e}")))
}

fn path(s: &Settings, cli: &Option<PathBuf>, key: &str) -> Option<PathBuf> {
    cli.clone().or_else(|| s.raw(key).map(PathBuf::from))
}

fn basis(a: &crate::BasisArgs, s: &Settings, out: &Output) -> Result<(), CliError> {
    let lo = s.get(a.a, "a", 0.0)?;
    let hi = s.get(a.b, "b", 1.0)?;
    let n = s.get(a.n, "n", 20)?;
    let rule: String = s.get(a.rule.clone(), "rule", "calibrated".into())?;
    let rule = parse_with(&rule, "rule", |v| v.parse::<WeightRule>())?;
    let profile = BumpProfile::new()?;
    let opts = BasisOptions {
        rule,
        ..Default::default()
    };
    let b = Basis1D::with_profile(&profile, lo, hi, n, &opts)?;
    if s.flag(a.gram, "gram")? {
        let tol = s.get(a.tol_int, "tol_int", 1e-12)?;
        let g = b.gram_matrix(tol)?;
        let mut dev = 0.0f64;
        for (i, row) in g.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((v - target).abs());
            }
        }
        eprintln!("max |G - I| = {}", format_num(dev));
    }
    let mut t = TableReport::new("basis", &["i", "x_i", "lambda_i", "r_i", "psi_at_root_i", "w_i"]);
    for i in 0..b.n {
        t.push(vec![
            (i + 1).into(),
            b.nodes[i].into(),
            b.lambdas[i].into(),
            b.roots[i].into(),
            b.psi_at_root[i].into(),
            b.weights[i].into(),
        ]);
    }
    out.emit(t, path(s, &a.csv, "csv"))
}

/// Strategy name and grid size from flags and settings.
fn grid(g: &GridArgs, s: &Settings, polar_like: &[&str]) -> Result<(String, GridSize), CliError> {
    let strategy: String = s.get(g.strategy.clone(), "strategy", "cartesian".into())?;
    let polar = polar_like.contains(&strategy.as_str());
    if !polar && (g.nr.is_some() || g.ntheta.is_some()) {
        return Err(CliError::Validation(format!(
            "--nr and --ntheta need a polar strategy, got '{strategy}'"
        )));
    }
    let n: Option<usize> = s.opt(g.n, "n")?;
    if polar {
        let nr = s.opt(g.nr, "nr")?.or(n).unwrap_or(100);
        let nt = s.opt(g.ntheta, "ntheta")?.or(n).unwrap_or(nr);
        Ok((strategy, GridSize::Polar(nr, nt)))
    } else {
        Ok((strategy, GridSize::Cartesian(n.unwrap_or(100))))
    }
}

fn mesh(a: &crate::MeshArgs, s: &Settings, out: &Output) -> Result<(), CliError> {
    let (_, size) = grid(&a.grid, s, &["polar"])?;
    let mut t = TableReport::new("mesh", &["i", "j", "x", "y", "h_row", "h_col", "boundary"]);
    match size {
        GridSize::Cartesian(n) => {
            let m = build_cartesian_disk::<f64>(n)?;
            let last = m.rows.len() - 1;
            for (p, row) in m.rows.iter().enumerate() {
                for (k, &x) in row.interior_roots().iter().enumerate() {
                    let i = k + 1;
                    let h_col = m
                        .cols
                        .iter()
                        .find(|c| c.index == i)
                        .map_or(Field::Missing, |c| c.step().into());
                    // Next to a chord end, or a neighbouring row that does not reach x.
                    let boundary = i == 1
                        || i == n - 1
                        || p == 0
                        || p == last
                        || x.abs() >= m.rows[p - 1].half_len
                        || x.abs() >= m.rows[p + 1].half_len;
                    t.push(vec![
                        i.into(),
                        row.index.into(),
                        x.into(),
                        row.offset.into(),
                        row.step().into(),
                        h_col,
                        usize::from(boundary).into(),
                    ]);
                }
            }
        }
        GridSize::Polar(nr, nt) => {
            let m = build_polar::<f64>(nr, nt)?;
            let op = DiskMesh::Polar(m.clone()).operator(&PoissonOptions::default())?;
            for k in 0..op.len() {
                let (i, j) = op.labels[k];
                let (x, y) = op.points[k];
                t.push(vec![
                    i.into(),
                    j.into(),
                    x.into(),
                    y.into(),
                    m.h_r().into(),
                    m.h_theta().into(),
                    usize::from(op.kinds[k] != RowKind::Interior).into(),
                ]);
            }
        }
    }
    out.emit(t, path(s, &a.csv, "csv"))
}

/// Plain integral and node count of `ig` under `strategy`.
fn integrate_with(ig: &Integrand, strategy: &str, size: GridSize) -> Result<(f64, usize), CliError> {
    let eval = ig.eval;
    let tau = std::f64::consts::TAU;
    match strategy {
        "cartesian" => {
            if ig.arity != Arity::CartesianXY {
                return Err(CliError::Validation(format!(
                    "{} is written in (r, theta); use a polar strategy",
                    ig.name
                )));
            }
            let n = size.n();
            let m = build_cartesian_disk::<f64>(n)?;
            let v = integrate_disk_cartesian(eval, &m)?;
            Ok((v, 2 * m.rows.len() * n))
        }
        "polar" | "polar-rect" => {
            let GridSize::Polar(nr, nt) = size else {
                unreachable!("polar strategies carry polar sizes")
            };
            let m = build_polar::<f64>(nr, nt)?;
            let v = match ig.arity {
                Arity::CartesianXY => integrate_disk_polar(eval, &m)?,
                Arity::PolarRTheta => integrate_polar_rect(eval, &m)?,
            };
            Ok((v, (nr - 1) * (nt - 1)))
        }
        "trapezoid" | "simpson" => {
            let rule: BaselineRule = parse_with(strategy, "strategy", |v| v.parse())?;
            let n = size.n();
            let v = match ig.arity {
                Arity::CartesianXY => baseline_integrate_rect(
                    rule,
                    |r: f64, t: f64| eval(r * t.cos(), r * t.sin()) * r,
                    (0.0, 1.0),
                    (0.0, tau),
                    n,
                )?,
                Arity::PolarRTheta => baseline_integrate_rect(rule, eval, (0.0, 1.0), (0.0, tau), n)?,
            };
            Ok((v, (n + 1) * (n + 1)))
        }
        other => Err(CliError::Validation(format!("unknown strategy '{other}'"))),
    }
}

const INTEGRATE_STRATEGIES: &[&str] = &["cartesian", "polar", "polar-rect", "trapezoid", "simpson"];

fn integrate(a: &crate::IntegrateArgs, s: &Settings, out: &Output) -> Result<(), CliError> {
    let (strategy, size) = grid(&a.grid, s, &["polar", "polar-rect"])?;
    if !INTEGRATE_STRATEGIES.contains(&strategy.as_str()) {
        return Err(CliError::Validation(format!("unknown strategy '{strategy}'")));
    }
    let name: String = s
        .opt(a.integrand.clone(), "integrand")?
        .ok_or_else(|| CliError::Validation("--integrand is required".into()))?;
    let ig = find_integrand::<f64>(&name).map_err(|e| CliError::Validation(e.to_string()))?;
    if let Some(w) = ig.warning {
        eprintln!("ziti: warning: {}: {w}", ig.name);
    }
    let (value, _) = integrate_with(&ig, &strategy, size)?;
    let scale = ig.report_scale();
    let exact = ig.exact_reported();
    let v = value * scale;
    let mut t = TableReport::new(
        "integrate",
        &["integrand", "strategy", "N", "value", "exact", "abs_error"],
    );
    t.push(vec![
        ig.name.into(),
        strategy.as_str().into(),
        size.n().into(),
        v.into(),
        Field::num_opt(exact),
        Field::num_opt(exact.map(|e| (v - e).abs())),
    ]);
    out.emit(t, path(s, &a.csv, "csv"))
}

fn poisson_options(a: &SolverArgs, s: &Settings) -> Result<PoissonOptions, CliError> {
    let stencil = if s.flag(a.second_order, "second_order")? {
        Stencil::SecondOrder
    } else {
        let v: String = s.get(a.stencil.clone(), "stencil", "second-order".into())?;
        match v.as_str() {
            "second-order" => Stencil::SecondOrder,
            "compact" => Stencil::Compact,
            other => return Err(CliError::Validation(format!("unknown stencil '{other}'"))),
        }
    };
    Ok(PoissonOptions {
        stencil,
        periodic_theta: s.flag(a.periodic_theta, "periodic_theta")?,
    })
}

fn size_columns(polar: bool) -> [&'static str; 4] {
    if polar {
        ["nr", "ntheta", "h_r", "h_theta"]
    } else {
        ["n", "n_chords", "h_min", "h_max"]
    }
}

fn size_fields(size: GridSize, steps: Option<(f64, f64)>) -> Vec<Field> {
    let (a, b) = match size {
        GridSize::Cartesian(n) => (n, n - 1),
        GridSize::Polar(nr, nt) => (nr, nt),
    };
    let (h1, h2) = steps.map_or((Field::Missing, Field::Missing), |(x, y)| (x.into(), y.into()));
    vec![a.into(), b.into(), h1, h2]
}

fn poisson_table(polar: bool) -> TableReport {
    let mut cols = size_columns(polar).to_vec();
    cols.extend(["er_max", "er_mean", "residual", WALL_COLUMN, "status"]);
    TableReport::new(if polar { "poisson-polar" } else { "poisson-cartesian" }, &cols)
}

fn poisson_row(size: GridSize, r: Result<&SolveReport, String>) -> Vec<Field> {
    match r {
        Ok(r) => {
            let mut row = size_fields(size, Some(r.steps));
            row.extend([
                Field::num_opt(r.er_max),
                Field::num_opt(r.er_mean),
                Field::num_opt(r.residual),
                r.wall_time.as_secs_f64().into(),
                "ok".into(),
            ]);
            row
        }
        Err(e) => {
            let mut row = size_fields(size, None);
            row.extend([Field::Missing, Field::Missing, Field::Missing, Field::Missing, e.into()]);
            row
        }
    }
}

fn solve_test_problem(
    size: GridSize,
    f: f64,
    opts: &PoissonOptions,
) -> ziti::Result<(ziti::ScalarField2D, SolveReport)> {
    let exact = move |x: f64, y: f64| f / 4.0 * (1.0 - x * x - y * y);
    solve_poisson(size, |_, _| f, Some(exact), opts)
}

fn write_field_rows<W: Write>(
    w: &mut csv::Writer<W>,
    prefix: &[String],
    field: &ziti::ScalarField2D,
    exact: impl Fn(f64, f64) -> f64,
) -> Result<(), CliError> {
    for ((&(i, j), &(x, y)), &u) in field.labels.iter().zip(&field.points).zip(&field.values) {
        let e = exact(x, y);
        let mut rec: Vec<String> = prefix.to_vec();
        rec.extend([
            i.to_string(),
            j.to_string(),
            format_num(x),
            format_num(y),
            format_num(u),
            format_num(e),
            format_num((u - e).abs()),
        ]);
        w.write_record(&rec).map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}

fn field_writer(p: &Path, extra: &[&str]) -> Result<csv::Writer<std::fs::File>, CliError> {
    let mut w = csv::Writer::from_path(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    let mut header: Vec<&str> = extra.to_vec();
    header.extend(["i", "j", "x", "y", "u", "u_exact", "abs_err"]);
    w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(w)
}

fn poisson(a: &crate::PoissonArgs, s: &Settings, out: &Output) -> Result<(), CliError> {
    let (strategy, size) = grid(&a.grid, s, &["polar"])?;
    if strategy != "cartesian" && strategy != "polar" {
        return Err(CliError::Validation(format!("unknown strategy '{strategy}'")));
    }
    let opts = poisson_options(&a.solver, s)?;
    let f = s.get(a.f, "f", 4.0)?;
    let (field, report) = solve_test_problem(size, f, &opts)?;
    if let Some(p) = path(s, &a.dump_field, "dump_field") {
        let mut w = field_writer(&p, &[])?;
        write_field_rows(&mut w, &[], &field, |x, y| f / 4.0 * (1.0 - x * x - y * y))?;
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    let mut t = poisson_table(strategy == "polar");
    t.push(poisson_row(size, Ok(&report)));
    out.emit(t, path(s, &a.csv, "csv"))
}

fn heat_options(h: &HeatParams, solver: &SolverArgs, s: &Settings) -> Result<HeatOptions<f64>, CliError> {
    let sign: String = s.get(h.sign.clone(), "sign", "diffusive".into())?;
    let sign = match sign.as_str() {
        "diffusive" => HeatSign::Diffusive,
        "anti-diffusive" => HeatSign::AntiDiffusive,
        other => return Err(CliError::Validation(format!("unknown sign '{other}'"))),
    };
    let opts = HeatOptions {
        d: s.get(h.d, "d", 1.0)?,
        mu: s.get(h.mu, "mu", 0.1)?,
        t_final: s.get(h.tf, "tf", 1.0)?,
        sign,
        poisson: poisson_options(solver, s)?,
    };
    if !(opts.mu > 0.0 && opts.d > 0.0 && opts.t_final > 0.0) {
        return Err(CliError::Validation("mu, d and tf must be positive".into()));
    }
    Ok(opts)
}

fn heat_table(polar: bool) -> TableReport {
    let mut cols = size_columns(polar).to_vec();
    cols.extend([
        "d",
        "mu",
        "dt",
        "steps",
        "t_final",
        "er_max",
        "er_mean",
        "rel_er_max",
        WALL_COLUMN,
        "status",
    ]);
    TableReport::new(if polar { "heat-polar" } else { "heat-cartesian" }, &cols)
}

fn heat_row(size: GridSize, opts: &HeatOptions<f64>, r: Result<&ziti::HeatRun, String>) -> Vec<Field> {
    match r {
        Ok(r) => {
            let mut row = size_fields(size, Some(r.report.steps));
            row.extend([
                r.d.into(),
                r.mu.into(),
                r.dt.into(),
                r.steps.into(),
                r.t_final.into(),
                Field::num_opt(r.report.er_max),
                Field::num_opt(r.report.er_mean),
                Field::num_opt(r.relative_er_max),
                r.report.wall_time.as_secs_f64().into(),
                "ok".into(),
            ]);
            row
        }
        Err(e) => {
            let mut row = size_fields(size, None);
            row.extend([opts.d.into(), opts.mu.into()]);
            row.extend(std::iter::repeat_n(Field::Missing, 7));
            row.push(e.into());
            row
        }
    }
}

/// Manufactured problem `u = (1 - x^2 - y^2) e^t`.
fn run_test_heat(
    size: GridSize,
    opts: &HeatOptions<f64>,
    observe: impl FnMut(usize, f64, &[f64]),
) -> ziti::Result<ziti::HeatRun> {
    let (sign, d) = (opts.sign, opts.d);
    let space = move |x: f64, y: f64| heat_source_space(sign, d, x, y);
    let time = |t: f64| t.exp();
    let u0 = |x: f64, y: f64| heat_exact(x, y, 0.0);
    run_heat(
        size,
        opts,
        &u0,
        Source::Separable {
            space: &space,
            time: &time,
        },
        Some(heat_exact::<f64>),
        observe,
    )
}

fn heat(a: &crate::HeatArgs, s: &Settings, out: &Output) -> Result<(), CliError> {
    let (strategy, size) = grid(&a.grid, s, &["polar"])?;
    if strategy != "cartesian" && strategy != "polar" {
        return Err(CliError::Validation(format!("unknown strategy '{strategy}'")));
    }
    let opts = heat_options(&a.heat, &a.solver, s)?;
    let every: Option<usize> = s.opt(a.snapshot_every, "snapshot_every")?;
    let dump = path(s, &a.dump_field, "dump_field");
    if every == Some(0) {
        return Err(CliError::Validation("--snapshot-every must be positive".into()));
    }
    if every.is_some() && dump.is_none() {
        return Err(CliError::Validation("--snapshot-every needs --dump-field".into()));
    }
    let mut writer = match &dump {
        Some(p) => Some(field_writer(p, &["step", "t"])?),
        None => None,
    };
    let mut io_error: Option<CliError> = None;
    let run = match (every, writer.as_mut()) {
        (Some(k), Some(w)) => {
            let op = DiskMesh::<f64>::build(size)?.operator(&opts.poisson)?;
            run_test_heat(size, &opts, |step, t, u| {
                if step % k != 0 || io_error.is_some() {
                    return;
                }
                let snap = ziti::ScalarField2D::new(&op, u.to_vec(), Some(t));
                let prefix = [step.to_string(), format_num(t)];
                if let Err(e) = write_field_rows(w, &prefix, &snap, |x, y| heat_exact(x, y, t)) {
                    io_error = Some(e);
                }
            })
        }
        _ => run_test_heat(size, &opts, |_, _, _| {}),
    };
    if let Some(e) = io_error {
        return Err(e);
    }
    let run = run?;
    if let Some(w) = writer.as_mut() {
        let last_written = every.is_some_and(|k| run.steps % k == 0);
        if !last_written {
            let prefix = [run.steps.to_string(), format_num(run.t_final)];
            let tf = run.t_final;
            write_field_rows(w, &prefix, &run.field, |x, y| heat_exact(x, y, tf))?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    let mut t = heat_table(strategy == "polar");
    t.push(heat_row(size, &opts, Ok(&run)));
    out.emit(t, path(s, &a.csv, "csv"))
}

fn convergence(a: &crate::ConvergenceArgs, s: &Settings, out: &Output) -> Result<(), CliError> {
    let problem: String = s.get(a.problem.clone(), "problem", "poisson".into())?;
    let strategy: String = s.get(a.strategy.clone(), "strategy", "cartesian".into())?;
    let polar = match strategy.as_str() {
        "cartesian" => false,
        "polar" => true,
        other => return Err(CliError::Validation(format!("unknown strategy '{other}'"))),
    };
    let sizes_text: String = s.get(a.sizes.clone(), "sizes", DEFAULT_SIZES.into())?;
    let sizes = parse_sizes(&sizes_text)?;
    if sizes.is_empty() {
        return Err(CliError::Validation("no grid sizes".into()));
    }
    let size_of = |n: usize| {
        if polar {
            GridSize::Polar(n, n)
        } else {
            GridSize::Cartesian(n)
        }
    };
    let t = match problem.as_str() {
        "poisson" => {
            let opts = poisson_options(&a.solver, s)?;
            let f = s.get(None, "f", 4.0)?;
            let mut t = poisson_table(polar);
            for &n in &sizes {
                let size = size_of(n);
                let r = solve_test_problem(size, f, &opts);
                t.push(poisson_row(size, r.as_ref().map(|r| &r.1).map_err(|e| e.to_string())));
            }
            t
        }
        "heat" => {
            let opts = heat_options(&a.heat, &a.solver, s)?;
            let mut t = heat_table(polar);
            for &n in &sizes {
                let size = size_of(n);
                let r = run_test_heat(size, &opts, |_, _, _| {});
                t.push(heat_row(size, &opts, r.as_ref().map_err(|e| e.to_string())));
            }
            t
        }
        other => return Err(CliError::Validation(format!("unknown problem '{other}'"))),
    };
    out.emit(t, path(s, &a.csv, "csv"))
}

fn bench(a: &crate::BenchArgs, s: &Settings, out: &Output) -> Result<(), CliError> {
    let n = s.get(a.n, "n", 100)?;
    let wanted: Option<String> = s.opt(a.integrands.clone(), "integrands")?;
    let mut list = catalog::<f64>();
    if let Some(w) = wanted {
        let names: Vec<&str> = w.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
        if let Some(bad) = names.iter().find(|v| !list.iter().any(|i| i.name == **v)) {
            return Err(CliError::Validation(format!("unknown integrand '{bad}'")));
        }
        list.retain(|i| names.contains(&i.name));
    }
    if list.is_empty() {
        return Err(CliError::Validation("catalog empty".into()));
    }
    let mut t = TableReport::new(
        "bench",
        &["integrand", "rule", "nodes", "value", "exact", "abs_error", "status", WALL_COLUMN],
    );
    for ig in &list {
        let rules: &[&str] = match ig.arity {
            Arity::CartesianXY => &["cartesian", "polar", "trapezoid", "simpson"],
            Arity::PolarRTheta => &["polar-rect", "trapezoid", "simpson"],
        };
        let scale = ig.report_scale();
        let exact = ig.exact_reported();
        for &rule in rules {
            let size = if rule.starts_with("polar") {
                GridSize::Polar(n, n)
            } else {
                GridSize::Cartesian(n)
            };
            let start = Instant::now();
            let r = integrate_with(ig, rule, size);
            let wall = start.elapsed().as_secs_f64();
            let row = match r {
                Ok((v, nodes)) => {
                    let v = v * scale;
                    vec![
                        ig.name.into(),
                        rule.into(),
                        nodes.into(),
                        v.into(),
                        Field::num_opt(exact),
                        Field::num_opt(exact.map(|e| (v - e).abs())),
                        "ok".into(),
                        wall.into(),
                    ]
                }
                Err(e) => vec![
                    ig.name.into(),
                    rule.into(),
                    Field::Missing,
                    Field::Missing,
                    Field::num_opt(exact),
                    Field::Missing,
                    format!("failed: {e}").into(),
                    wall.into(),
                ],
            };
            t.push(row);
        }
    }
    out.emit(t, path(s, &a.csv, "csv"))
}
