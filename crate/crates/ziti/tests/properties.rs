mod common;

use proptest::prelude::*;
use ziti::bump_basis::{lambda_map, root_quartic, BumpProfile};
use ziti::linalg::{BlockTridiagonalSystem, SparseBlock};
use ziti::pde_poisson::{solve_poisson, GridSize, PoissonOptions};
use ziti::quadrature::integrate_1d;
use ziti::Basis1D;

fn interval() -> impl Strategy<Value = (f64, f64, usize)> {
    (-50.0..50.0f64, 1e-3..20.0f64, 4usize..120).prop_map(|(a, len, n)| (a, a + len, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lambdas_stay_in_range((a, b, n) in interval()) {
        let basis = Basis1D::new(a, b, n).unwrap();
        prop_assert!(basis.lambdas.iter().all(|&l| -1.0 < l && l < 0.0));
    }

    #[test]
    fn lambda_map_keeps_the_range(x in -0.999..-1e-3f64) {
        let l1 = BumpProfile::new().unwrap().lambda1();
        let y = lambda_map(l1, x);
        prop_assert!(-1.0 < y && y < 0.0);
    }

    #[test]
    fn weights_are_positive_and_sum_to_the_length((a, b, n) in interval()) {
        let basis = Basis1D::new(a, b, n).unwrap();
        prop_assert!(basis.weights.iter().all(|&w| w > 0.0));
        let s: f64 = basis.weights.iter().sum();
        prop_assert!((s - (b - a)).abs() < 1e-12 * (b - a).max(1.0));
    }

    #[test]
    fn roots_sit_in_their_cells((a, b, n) in interval()) {
        let basis = Basis1D::new(a, b, n).unwrap();
        for k in 0..n - 1 {
            prop_assert!(basis.nodes[k] < basis.roots[k] && basis.roots[k] < basis.nodes[k + 1]);
        }
        for (k, &y) in basis.offsets.iter().enumerate() {
            prop_assert!(root_quartic((-basis.lambdas[k]).ln(), y).abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_is_linear(
        (a, b, n) in interval(),
        p in -5.0..5.0f64,
        q in -5.0..5.0f64,
    ) {
        let basis = Basis1D::new(a, b, n).unwrap();
        let f = |x: f64| (0.3 * x).sin();
        let g = |x: f64| 1.0 / (1.0 + x * x);
        let lhs = integrate_1d(|x| p * f(x) + q * g(x), &basis).unwrap();
        let rhs = p * integrate_1d(f, &basis).unwrap() + q * integrate_1d(g, &basis).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()) * (b - a).max(1.0));
    }

    #[test]
    fn block_solver_matches_dense_elimination(
        n in 1usize..5,
        nb in 1usize..5,
        seed in proptest::collection::vec(-1.0..1.0f64, 3 * 25 * 4 + 20),
    ) {
        let mut it = seed.into_iter().cycle();
        let dim = n * nb;
        let mut dense = vec![vec![0.0; dim]; dim];
        let mut lower = vec![SparseBlock::zeros(n); nb];
        let mut diag = vec![SparseBlock::zeros(n); nb];
        let mut upper = vec![SparseBlock::zeros(n); nb];
        for k in 0..nb {
            for i in 0..n {
                let r = k * n + i;
                let mut off = 0.0;
                for j in 0..n {
                    for (blk, dk) in [(&mut lower, -1i64), (&mut upper, 1)] {
                        let kk = k as i64 + dk;
                        if kk < 0 || kk >= nb as i64 {
                            continue;
                        }
                        let v = it.next().unwrap();
                        blk[k].add(i, j, v);
                        dense[r][kk as usize * n + j] = v;
                        off += v.abs();
                    }
                    if j != i {
                        let v = it.next().unwrap();
                        diag[k].add(i, j, v);
                        dense[r][k * n + j] = v;
                        off += v.abs();
                    }
                }
                let d = off + 0.5 + it.next().unwrap().abs();
                diag[k].add(i, i, d);
                dense[r][r] = d;
            }
        }
        let rhs: Vec<f64> = (0..dim).map(|_| it.next().unwrap()).collect();
        let sys = BlockTridiagonalSystem { block_size: n, lower, diag, upper, rhs: rhs.clone() };
        let x = sys.solve().unwrap();
        let oracle = common::gauss_solve(dense, rhs);
        for (a, b) in x.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn polar_errors_are_ordered(nr in 6usize..30, nt in 6usize..30) {
        let (_, r) = solve_poisson(
            GridSize::Polar(nr, nt),
            |x: f64, _| 4.0 + x,
            Some(|x: f64, y: f64| common::bowl(x, y)),
            &PoissonOptions::default(),
        )
        .unwrap();
        prop_assert!(r.er_max.unwrap() >= r.er_mean.unwrap());
        prop_assert!(r.er_mean.unwrap() >= 0.0);
    }

    #[test]
    fn cartesian_bowl_is_exact_on_every_grid(n in 8usize..60) {
        let (_, r) = solve_poisson(
            GridSize::Cartesian(n),
            |_, _| 4.0,
            Some(|x: f64, y: f64| common::bowl(x, y)),
            &PoissonOptions::default(),
        )
        .unwrap();
        prop_assert!(r.er_max.unwrap() < 1e-10);
    }
}
