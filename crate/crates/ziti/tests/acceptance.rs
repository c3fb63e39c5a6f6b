//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! The heat criteria are long on a single core (the N = 200 stability run
//! takes the better part of an hour). `ZITI_ACCEPTANCE_ONLY=7,8` runs a subset.

mod common;

use std::f64::consts::TAU;
use std::io::Write;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use ziti::bump_basis::{lambda_fixed_point, lambda_sequence, root_quartic, stationary_rank, bump};
use ziti::disk_mesh::{build_cartesian_disk, build_polar};
use ziti::linalg::{BlockTridiagonalSystem, SparseBlock};
use ziti::pde_heat::{heat_exact, heat_source_space, run_heat, HeatOptions, HeatSign, Source};
use ziti::pde_poisson::{solve_poisson, GridSize, PoissonOptions, Stencil, RESIDUAL_LIMIT};
use ziti::quadrature::{
    baseline_integrate_rect, find_integrand, integrate_disk_cartesian, integrate_disk_polar,
    integrate_polar_rect, BaselineRule,
};
use ziti::{Basis1D, BumpProfile, Error};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Recursive adaptive Simpson with the usual `|S2 - S1| <= 15 tol` stop.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn criterion_1() -> Outcome {
    let b = Basis1D::new(0.0, 1.0, 20).unwrap();
    let m = b.n + 1;
    let mut worst = 0.0f64;
    for i in 1..=m {
        for j in i..=m {
            let g: f64 = (0..b.n)
                .map(|c| {
                    let f = |x: f64| b.eval_psi(i, x).unwrap() * b.eval_psi(j, x).unwrap();
                    adaptive_simpson(&f, b.nodes[c], b.nodes[c + 1], 1e-12)
                })
                .sum();
            worst = worst.max((g - f64::from(i == j)).abs());
        }
    }
    outcome(worst < 1e-7, format!("max |G - I| = {worst:.3e} over {m}x{m}"))
}

fn criterion_2() -> Outcome {
    let l1 = BumpProfile::new().unwrap().lambda1();
    let seq = lambda_sequence(l1, 200).unwrap();
    let in_range = seq.iter().all(|&l| -1.0 < l && l < 0.0);
    let star = (1.0 - (1.0 - l1 * l1).sqrt()) / l1;
    let mut ok = in_range;
    let mut detail = Vec::new();
    for eps in [1e-6, 1e-12] {
        let n0 = stationary_rank(eps, l1).unwrap();
        let gap = (seq[n0] - seq[n0 - 1]).abs();
        ok &= gap < eps;
        detail.push(format!("eps {eps:e}: N0 {n0}, gap {gap:.2e}"));
    }
    let to_star = (seq[199] - star).abs().max((lambda_fixed_point(l1).unwrap() - star).abs());
    ok &= to_star < 1e-12;
    detail.push(format!("|lambda - lambda*| {to_star:.2e}"));
    outcome(ok, detail.join("; "))
}

fn criterion_3() -> Outcome {
    let b = Basis1D::new(0.0, 1.0, 100).unwrap();
    let (mut quartic, mut ratio) = (0.0f64, 0.0f64);
    for (k, &y) in b.offsets.iter().enumerate() {
        let lam = b.lambdas[k];
        quartic = quartic.max(root_quartic((-lam).ln(), y).abs());
        ratio = ratio.max((bump(y - 1.0) / bump(y) + lam).abs());
    }
    outcome(
        quartic < 1e-12 && ratio < 1e-9,
        format!("max |P(y*)| {quartic:.2e}, max ratio residual {ratio:.2e} over {} cells", b.offsets.len()),
    )
}

/// Exact value and error columns of the published integration tables, divided by 2 pi.
const TABLE_ROWS: [(&str, f64, f64); 4] = [
    ("inv_quarter", 0.4545285537, 3.20937813496069e-5),
    ("inv_sqrt", 0.4142135624, 2.271300675258380e-4),
    ("exp_inv", 0.7508533738, 8.13364799567839e-5),
    ("log_inv", -0.4547712524, 1.14795456094602e-3),
];

fn table_rows(eval: impl Fn(fn(f64, f64) -> f64) -> f64) -> (bool, Vec<String>) {
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, ex, err) in TABLE_ROWS {
        let ig = find_integrand::<f64>(name).unwrap();
        let v = eval(ig.eval) / TAU;
        let e = (v - ex).abs();
        // The catalog's exact value agrees with the printed one.
        let printed = (ig.exact_reported().unwrap() - ex).abs() < 1e-9;
        ok &= e <= 5.0 * err && printed;
        detail.push(format!("{name} {e:.2e} (limit {:.2e})", 5.0 * err));
    }
    (ok, detail)
}

fn criterion_4() -> Outcome {
    let mesh = build_cartesian_disk::<f64>(100).unwrap();
    let (ok, detail) = table_rows(|g| integrate_disk_cartesian(g, &mesh).unwrap());
    outcome(ok, detail.join("; "))
}

fn criterion_5() -> Outcome {
    let mesh = build_polar::<f64>(100, 100).unwrap();
    let (mut ok, mut detail) = table_rows(|g| integrate_disk_polar(g, &mesh).unwrap());
    let xy = integrate_disk_polar(find_integrand::<f64>("xy").unwrap().eval, &mesh).unwrap();
    ok &= xy.abs() <= 5e-4;
    detail.push(format!("xy {:.2e} (limit 5e-4)", xy.abs()));
    let lr = integrate_disk_polar(find_integrand::<f64>("log_r_over_r").unwrap().eval, &mesh).unwrap();
    let e = (lr / TAU + 1.0).abs();
    ok &= e <= 6e-4;
    detail.push(format!("log_r_over_r {e:.2e} (limit 6e-4)"));
    outcome(ok, detail.join("; "))
}

fn criterion_6() -> Outcome {
    let mesh = build_polar::<f64>(100, 100).unwrap();
    let s = integrate_polar_rect(find_integrand::<f64>("sin_over_sqrt_r").unwrap().eval, &mesh).unwrap();
    let ig = find_integrand::<f64>("inv_sqrt_2pi_r").unwrap();
    let ziti = integrate_polar_rect(ig.eval, &mesh);
    let rect = (0.0, 1.0);
    let ang = (0.0, TAU);
    let simpson = baseline_integrate_rect(BaselineRule::Simpson, ig.eval, rect, ang, 100);
    let trapezoid = baseline_integrate_rect(BaselineRule::Trapezoid, ig.eval, rect, ang, 100);
    let ok = s.abs() <= 4e-3
        && matches!(ziti, Ok(v) if v.is_finite())
        && simpson.is_err()
        && trapezoid.is_err();
    outcome(
        ok,
        format!(
            "sin/sqrt(r) {:.2e}; inv_sqrt_2pi_r ziti {:?}, simpson failed {}, trapezoid failed {}",
            s.abs(),
            ziti.as_ref().map(|v| format!("{v:.6}")),
            simpson.is_err(),
            trapezoid.is_err()
        ),
    )
}

const SIZES: [usize; 4] = [60, 100, 150, 200];

/// Er_max per size, and every linear-solve residual.
fn poisson_bowl(size: impl Fn(usize) -> GridSize, opts: &PoissonOptions, residuals: &mut Vec<f64>) -> Vec<f64> {
    SIZES
        .iter()
        .map(|&n| {
            let (_, r) = solve_poisson(size(n), |_, _| 4.0, Some(common::bowl), opts).unwrap();
            residuals.push(r.residual.unwrap());
            r.er_max.unwrap()
        })
        .collect()
}

fn against_table(errs: &[f64], table: [f64; 4]) -> Outcome {
    let within = errs.iter().zip(table).all(|(&e, t)| e <= 3.0 * t && e >= t / 3.0);
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let list: Vec<String> = errs
        .iter()
        .zip(table)
        .zip(SIZES)
        .map(|((e, t), n)| format!("N {n} {e:.3e} (table {t:.3e})"))
        .collect();
    outcome(
        within && decreasing,
        format!("{}; within 3x {within}, decreasing {decreasing}", list.join(", ")),
    )
}

/// Judged on the default options; the compact stencil is listed for reference.
fn poisson_criterion(size: impl Fn(usize) -> GridSize + Copy, table: [f64; 4], residuals: &mut Vec<f64>) -> Outcome {
    let errs = poisson_bowl(size, &PoissonOptions::default(), residuals);
    let mut o = against_table(&errs, table);
    let compact = PoissonOptions {
        stencil: Stencil::Compact,
        ..Default::default()
    };
    let alt: Vec<String> = poisson_bowl(size, &compact, residuals)
        .iter()
        .map(|e| format!("{e:.3e}"))
        .collect();
    o.detail.push_str(&format!(" [compact stencil, not judged: {}]", alt.join(", ")));
    o
}

fn criterion_7(residuals: &mut Vec<f64>) -> Outcome {
    poisson_criterion(GridSize::Cartesian, [0.01174, 0.0046, 0.00204, 0.00167], residuals)
}

fn criterion_8(residuals: &mut Vec<f64>) -> Outcome {
    poisson_criterion(|n| GridSize::Polar(n, n), [8.86e-4, 3.82e-4, 1.91e-4, 1.15e-4], residuals)
}

fn heat_run(n: usize, mu: f64) -> ziti::Result<ziti::HeatRun> {
    let opts = HeatOptions {
        d: 1.0,
        mu,
        t_final: 1.0,
        sign: HeatSign::Diffusive,
        poisson: PoissonOptions::default(),
    };
    let space = |x, y| heat_source_space(HeatSign::Diffusive, 1.0, x, y);
    run_heat(
        GridSize::Cartesian(n),
        &opts,
        &|x, y| heat_exact(x, y, 0.0),
        Source::Separable { space: &space, time: &f64::exp },
        Some(heat_exact),
        |_, _, _| {},
    )
}

fn criterion_9() -> Outcome {
    let rel = |n| -> Result<(f64, usize), Error> {
        let r = heat_run(n, 0.1)?;
        Ok((r.relative_er_max.unwrap(), r.steps))
    };
    match (rel(60), rel(100)) {
        (Ok((r60, s60)), Ok((r100, s100))) => outcome(
            r100 <= 1e-3 && r100 < r60,
            format!("relative Er_max N 60 {r60:.3e} ({s60} steps), N 100 {r100:.3e} ({s100} steps)"),
        ),
        (a, b) => outcome(false, format!("run failed: {:?} / {:?}", a.err(), b.err())),
    }
}

fn criterion_10() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for n in [20, 60, 100, 200] {
        let start = Instant::now();
        let stable = heat_run(n, 0.5);
        let bounded = matches!(&stable, Ok(r) if r.field.values.iter().all(|v| v.is_finite()));
        let unstable = heat_run(n, 2.0);
        let blew = matches!(unstable, Err(Error::BlowUp { .. }));
        ok &= bounded && blew;
        detail.push(format!(
            "N {n}: mu 0.5 bounded {bounded}, mu 2 blow-up {blew}{}",
            match unstable {
                Err(Error::BlowUp { step, .. }) => format!(" at step {step}"),
                _ => String::new(),
            }
        ));
        eprintln!("  criterion 10, N {n} done in {:.0} s", start.elapsed().as_secs_f64());
    }
    outcome(ok, detail.join("; "))
}

fn random_system() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..=5, 1usize..=4).prop_flat_map(|(n, nb)| {
        (Just(n), Just(nb), proptest::collection::vec(-1.0..1.0f64, (3 * n + 2) * n * nb))
    })
}

fn criterion_11(residuals: &mut Vec<f64>) -> Outcome {
    if residuals.is_empty() {
        let opts = PoissonOptions::default();
        poisson_bowl(GridSize::Cartesian, &opts, residuals);
        poisson_bowl(|n| GridSize::Polar(n, n), &opts, residuals);
    }
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    let accepted = worst <= RESIDUAL_LIMIT;
    let mut runner = TestRunner::new(Config {
        cases: 500,
        failure_persistence: None,
        ..Config::default()
    });
    let max_dev = std::cell::Cell::new(0.0f64);
    let res = runner.run(&random_system(), |(n, nb, vals)| {
        let mut it = vals.into_iter();
        let dim = n * nb;
        let mut dense = vec![vec![0.0; dim]; dim];
        let mut blocks = [
            vec![SparseBlock::zeros(n); nb],
            vec![SparseBlock::zeros(n); nb],
            vec![SparseBlock::zeros(n); nb],
        ];
        for k in 0..nb {
            for i in 0..n {
                let r = k * n + i;
                let mut off = 0.0;
                for (which, blk) in blocks.iter_mut().enumerate() {
                    for j in 0..n {
                        let v = it.next().unwrap();
                        let kk = k as i64 + which as i64 - 1;
                        if kk < 0 || kk >= nb as i64 || (which == 1 && j == i) {
                            continue;
                        }
                        blk[k].add(i, j, v);
                        dense[r][kk as usize * n + j] = v;
                        off += v.abs();
                    }
                }
                let d = off + 0.1 + it.next().unwrap().abs();
                blocks[1][k].add(i, i, d);
                dense[r][r] = d;
            }
        }
        let rhs: Vec<f64> = it.collect();
        let [lower, diag, upper] = blocks;
        let sys = BlockTridiagonalSystem { block_size: n, lower, diag, upper, rhs: rhs.clone() };
        let x = sys.solve().map_err(|e| TestCaseError::fail(e.to_string()))?;
        let oracle = common::gauss_solve(dense, rhs);
        let dev = x.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        max_dev.set(max_dev.get().max(dev));
        prop_assert!(dev <= 1e-12, "deviation {dev:e} at size {dim}");
        Ok(())
    });
    outcome(
        accepted && res.is_ok(),
        format!(
            "{} Poisson solves, max residual {worst:.2e}; block vs dense over 500 random systems: max deviation {:.2e}{}",
            residuals.len(),
            max_dev.get(),
            res.err().map(|e| format!(" ({e})")).unwrap_or_default()
        ),
    )
}

fn main() {
    let mut residuals = Vec::new();
    let criteria: Vec<(&str, Box<dyn FnOnce(&mut Vec<f64>) -> Outcome>)> = vec![
        ("basis orthonormality", Box::new(|_| criterion_1())),
        ("lambda sequence", Box::new(|_| criterion_2())),
        ("quartic roots", Box::new(|_| criterion_3())),
        ("Cartesian integration", Box::new(|_| criterion_4())),
        ("polar integration", Box::new(|_| criterion_5())),
        ("singular integrands", Box::new(|_| criterion_6())),
        ("Poisson, chord mesh", Box::new(criterion_7)),
        ("Poisson, polar mesh", Box::new(criterion_8)),
        ("heat trend", Box::new(|_| criterion_9())),
        ("stability bracket", Box::new(|_| criterion_10())),
        ("solver exactness", Box::new(criterion_11)),
    ];
    let only: Option<Vec<usize>> = std::env::var("ZITI_ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let (mut failed, mut ran) = (0, 0);
    for (k, (name, run)) in criteria.into_iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(k + 1))) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let o = run(&mut residuals);
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {name} [{:.1} s] {}",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        std::io::stdout().flush().ok();
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
