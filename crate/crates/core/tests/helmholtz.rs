use std::f64::consts::PI;

use ksgd_core::domain::{integrate, laplacian_neumann, GridSpec, ScalarField};
use ksgd_core::solvers::{helmholtz_residual, helmholtz_solve};

fn manufactured(n: usize) -> (ScalarField, ScalarField) {
    let grid = GridSpec::new(2, n, 1.0).unwrap();
    let k = 1.0 + 2.0 * PI * PI;
    let exact = ScalarField::from_fn(grid, |[x, y]| 1.0 + (PI * x).cos() * (PI * y).cos());
    let rhs = ScalarField::from_fn(grid, |[x, y]| 1.0 + k * (PI * x).cos() * (PI * y).cos());
    (exact, rhs)
}

fn l2(a: &ScalarField, b: &ScalarField) -> f64 {
    let vol = a.grid().cell_volume();
    (vol * a.values().iter().zip(b.values()).map(|(x, y)| (x - y).powi(2)).sum::<f64>()).sqrt()
}

#[test]
fn cosine_product_converges_at_second_order() {
    let errors: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| {
            let (exact, rhs) = manufactured(n);
            let v = helmholtz_solve(&rhs, 1e-13, 50_000).unwrap();
            l2(&v, &exact)
        })
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn solution_keeps_the_integral_and_solves_the_system() {
    let (_, rhs) = manufactured(32);
    let v = helmholtz_solve(&rhs, 1e-12, 50_000).unwrap();
    assert!((integrate(&v) - integrate(&rhs)).abs() <= 1e-10 * integrate(&rhs).abs());
    assert!(helmholtz_residual(&v, &rhs) <= 1e-11);
    // direct residual with the public Laplacian
    let lap = laplacian_neumann(&v);
    let worst = v
        .values()
        .iter()
        .zip(lap.values())
        .zip(rhs.values())
        .map(|((v, l), r)| (v - l - r).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn nonnegative_source_gives_nonnegative_signal() {
    let grid = GridSpec::new(2, 24, 1.0).unwrap();
    let rhs = ScalarField::from_fn(grid, |[x, y]| if (x - 0.3).abs() < 0.05 && y > 0.7 { 5.0 } else { 0.0 });
    let v = helmholtz_solve(&rhs, 1e-12, 50_000).unwrap();
    assert!(v.min() >= -1e-12);
}
