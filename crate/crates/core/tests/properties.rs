//! Cross-module properties of the discretization and the solvers.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fractau::assembly::{OperatorCache, SolverOptions};
use fractau::basis::{eval_basis_vector, project_2d, BasisConfig};
use fractau::fractional::{basis_monomial, distributed_series, WeightFunction};
use fractau::linalg::{kron, unvec, vec_of, LuFactor};
use fractau::oracle::adaptive_integrate_vec;
use fractau::problem::{builtin_example, ExampleParams, Problem, Problem1D};
use fractau::report::{solve, SolveReport, DEFAULT_GRID};
use fractau::separable::project_source_2d;
use fractau::special::gamma;
use fractau::tau1d::{assemble_1d_with, Operators1D};

mod common;
use common::caputo_by_definition;

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

fn ex1() -> Problem1D {
    match builtin_example("ex1", ExampleParams::default()).unwrap().problem {
        Problem::OneD(p) => p,
        Problem::TwoD(_) => unreachable!(),
    }
}

fn linf(name: &str, lambda: usize, points: usize) -> f64 {
    let def = builtin_example(name, ExampleParams::default()).unwrap();
    let sol = solve(&def.problem, &SolverOptions::new(lambda, points), &OperatorCache::new()).unwrap();
    let r = SolveReport::build(&def.problem, &sol, def.t_eval, DEFAULT_GRID).unwrap();
    r.metrics.unwrap().linf
}

#[test]
fn lu_residual_bound_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..100 {
        let n = 1 + (k * 37) % 200;
        // Diagonally shifted random matrices are well conditioned.
        let m = random_matrix(&mut rng, n, n) + DMatrix::identity(n, n) * (n as f64).sqrt() * 2.0;
        let b = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let x = LuFactor::new(&m).unwrap().solve(&b).unwrap();
        let r = (&m * &x - &b).amax();
        let norm_inf = (0..n).map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let bound = r / (norm_inf * x.amax() + b.amax());
        assert!(bound <= 1e-10, "n = {n}: {bound:e}");
    }
}

proptest! {
    #[test]
    fn kron_associative_and_mixed_product(seed in 0u64..500, dims in prop::array::uniform6(1usize..4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [p, q, r, s, u, v] = dims;
        let a = random_matrix(&mut rng, p, q);
        let b = random_matrix(&mut rng, r, s);
        let c = random_matrix(&mut rng, u, v);
        let lhs = kron(&kron(&a, &b), &c);
        let rhs = kron(&a, &kron(&b, &c));
        prop_assert!((lhs - rhs).amax() <= 1e-13);
        // (A⊗B)(C⊗D) = AC⊗BD
        let c2 = random_matrix(&mut rng, q, u);
        let d2 = random_matrix(&mut rng, s, v);
        let lhs = kron(&a, &b) * kron(&c2, &d2);
        let rhs = kron(&(&a * &c2), &(&b * &d2));
        prop_assert!((lhs - rhs).amax() <= 1e-13);
    }

    #[test]
    fn kron_preserves_triangularity(seed in 0u64..500, n in 1usize..5, m in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut rng, n, n).lower_triangle();
        let b = random_matrix(&mut rng, m, m).lower_triangle();
        let k = kron(&a, &b);
        prop_assert_eq!(k.upper_triangle() - DMatrix::from_diagonal(&k.diagonal()), DMatrix::zeros(n * m, n * m));
    }

    #[test]
    fn vec_unvec_round_trip(seed in 0u64..500, r in 1usize..7, c in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut rng, r, c);
        prop_assert_eq!(unvec(&vec_of(&a), r, c).unwrap(), a);
    }
}

/// The Gauss-discretized distributed derivative of Σ c_i ψ_i at interior
/// points agrees with the order integral of definition-based Caputo values.
#[test]
fn distributed_series_matches_definition() {
    fn w1(a: f64) -> f64 {
        gamma(3.0 - a)
    }
    fn w2(a: f64) -> f64 {
        gamma(2.0 - a)
    }
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let probes: Vec<f64> = (0..10).map(|k| 0.05 + 0.09 * k as f64).collect();
    for lambda in [3, 6] {
        let cfg = BasisConfig::global(lambda);
        let monos: Vec<_> = (0..lambda).map(|i| basis_monomial(&cfg, i).unwrap()).collect();
        for (name, rho) in [("gamma(3-a)", w1 as fn(f64) -> f64), ("gamma(2-a)", w2)] {
            let w = WeightFunction::new(name, 0.0, 1.0, move |a| Ok(rho(a))).unwrap();
            let series: Vec<_> = (0..lambda).map(|i| distributed_series(&cfg, i, &w, 12, 1.0).unwrap()).collect();
            let c: Vec<f64> = (0..lambda).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for &t in &probes {
                let got: f64 = series.iter().zip(&c).map(|(q, ci)| ci * q.eval(t)).sum();
                let each = adaptive_integrate_vec(
                    |s| Ok(caputo_by_definition(&monos, s, t, 1e-14)?.into_iter().map(|d| rho(s) * d).collect()),
                    0.0,
                    1.0,
                    lambda,
                    1e-13,
                )
                .unwrap();
                let want: f64 = each.iter().zip(&c).map(|(v, ci)| ci * v).sum();
                let scale = each.iter().zip(&c).map(|(v, ci)| (ci * v).abs()).sum::<f64>().max(1e-300);
                assert!((got - want).abs() / scale <= 1e-7, "Λ={lambda} {name} t={t}: {got} vs {want}");
            }
        }
    }
}

fn eval_poly2(coef: &DMatrix<f64>, x: f64, t: f64) -> f64 {
    // Σ coef[(i, j)] t^i x^j
    let mut acc = 0.0;
    for i in 0..coef.nrows() {
        for j in 0..coef.ncols() {
            acc += coef[(i, j)] * t.powi(i as i32) * x.powi(j as i32);
        }
    }
    acc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// A polynomial in the span solves its own consistently projected
    /// problem to round-off.
    #[test]
    fn exact_on_span(seed in 0u64..1000, lambda in 3usize..6, points in 9usize..13) {
        let p = ex1();
        let ops = Operators1D::build(&p, &SolverOptions::new(lambda, points), &OperatorCache::new()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let poly = random_matrix(&mut rng, lambda, lambda);
        let u = |x: f64, t: f64| eval_poly2(&poly, x, t);
        let nq = 2 * lambda + 2;
        let a = project_2d(|x, t| Ok(u(x, t)), &ops.cfg_t, &ops.cfg_x, nq).unwrap();
        let f = ops.residual(&a, &DMatrix::zeros(lambda, lambda));
        let sys = assemble_1d_with(&ops, &f, &|x| Ok(u(x, 0.0)), &|t| Ok(u(0.0, t)), &|t| Ok(u(1.0, t))).unwrap();
        let got = unvec(&LuFactor::new(&sys.matrix).unwrap().solve(&sys.rhs).unwrap(), lambda, lambda).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..=10 {
            for l in 0..=10 {
                let (x, t) = (k as f64 / 10.0, l as f64 / 10.0);
                let approx = eval_basis_vector(&ops.cfg_t, t).unwrap().dot(&(&got * eval_basis_vector(&ops.cfg_x, x).unwrap()));
                worst = worst.max((approx - u(x, t)).abs());
            }
        }
        prop_assert!(worst <= 1e-10, "max error {worst:e}");
    }
}

/// Kernel images and the matching source terms cancel in the tau residual.
#[test]
fn source_and_kernel_terms_cancel() {
    let p = ex1();
    for nq in [32, 48] {
        let ops = Operators1D::build(&p, &SolverOptions::new(4, 12), &OperatorCache::new()).unwrap();
        let a = project_2d(|x, t| Ok(x * x * t * t), &ops.cfg_t, &ops.cfg_x, 16).unwrap();
        let f = project_source_2d(&p.source, &ops.cfg_t, &ops.cfg_x, nq).unwrap();
        let g = ops.residual(&a, &f);
        let tau = g.view((0, 0), (3, 2)).amax();
        assert!(tau <= 1e-12, "Nq = {nq}: tau residual {tau:e}");
    }
}

#[test]
fn convergence_spans_orders_of_magnitude() {
    let e1: Vec<f64> = [3, 5, 7, 9].iter().map(|&p| linf("ex1", 4, p)).collect();
    for w in e1.windows(2) {
        assert!(w[1] <= 5.0 * w[0], "{e1:?}");
    }
    assert!(e1[0] / e1[3] >= 1e8, "{e1:?}");
    let e3: Vec<f64> = [5, 7, 9, 11].iter().map(|&p| linf("ex3", 4, p)).collect();
    for w in e3.windows(2) {
        assert!(w[1] <= w[0] * 5.0, "{e3:?}");
    }
    assert!(e3[0] / e3[3] >= 1e6, "{e3:?}");
}
