use hav_core::filter::lfilter;
use hav_core::{fit_bj, order_sweep, Error, FitOptions, Orders};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const RATE: f64 = 400.0;

fn gaussian(n: usize, seed: u64) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
}

/// Order-2 Box-Jenkins data: y = B/A u(t-1) + C/D e with `noise` scaling e.
fn order_two_data(n: usize, noise: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let u = gaussian(n, seed);
    let mut ud = vec![0.0];
    ud.extend_from_slice(&u[..n - 1]);
    let w = lfilter(&[0.8, 0.4], &[1.0, -0.9, 0.4], &ud);
    let e: Vec<f64> = gaussian(n, seed + 1000).iter().map(|v| noise * v).collect();
    let v = lfilter(&[1.0, 0.5, 0.2], &[1.0, -1.2, 0.5], &e);
    let y = w.iter().zip(&v).map(|(a, b)| a + b).collect();
    (u, y)
}

#[test]
fn order_sweep_flattens_past_the_true_order() {
    let (u, y) = order_two_data(4000, 0.3, 1);
    let sweep = order_sweep(&u, &y, RATE, &[5, 1, 3, 2, 4, 2], &FitOptions::default()).unwrap();
    let orders: Vec<usize> = sweep.iter().map(|e| e.order).collect();
    assert_eq!(orders, vec![1, 2, 3, 4, 5]);
    let rmse: Vec<f64> = sweep.iter().map(|e| e.report.as_ref().unwrap().rmse_predicted).collect();
    assert!(rmse[1] < rmse[0], "{rmse:?}");
    for r in &rmse[2..] {
        assert!((r - rmse[1]).abs() <= 0.01 * rmse[1], "{rmse:?}");
    }
    let recommended: Vec<usize> = sweep.iter().filter(|e| e.recommended).map(|e| e.order).collect();
    assert_eq!(recommended, vec![2]);
}

#[test]
fn prediction_is_never_worse_than_simulation() {
    for (noise, seed) in [(0.05, 2), (0.5, 3), (2.0, 4)] {
        let (u, y) = order_two_data(3000, noise, seed);
        let (_, report) = fit_bj(&u, &y, RATE, Orders::uniform(2), &FitOptions::default()).unwrap();
        assert!(report.rmse_predicted <= report.rmse_simulated, "noise {noise}: {report:?}");
        assert!(report.nrmse_fit_percent >= report.nrmse_sim_percent);
    }
}

#[test]
fn fitted_polynomials_are_stable() {
    let (u, y) = order_two_data(3000, 1.0, 5);
    for n in [1, 3, 6] {
        let (m, report) = fit_bj(&u, &y, RATE, Orders::uniform(n), &FitOptions::default()).unwrap();
        for p in [&m.a, &m.c, &m.d] {
            assert!(p.max_root_radius() < 1.0, "order {n}: {p:?}");
        }
        assert!(report.iterations <= FitOptions::default().max_iterations);
    }
}

#[test]
fn fit_is_deterministic() {
    let (u, y) = order_two_data(2000, 0.2, 6);
    let a = fit_bj(&u, &y, RATE, Orders::uniform(3), &FitOptions::default()).unwrap();
    let b = fit_bj(&u, &y, RATE, Orders::uniform(3), &FitOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn iteration_cap_is_reported_as_unconverged() {
    let (u, y) = order_two_data(2000, 0.5, 7);
    let options = FitOptions {
        max_iterations: 1,
        tolerance: 0.0,
        ..FitOptions::default()
    };
    let (_, report) = fit_bj(&u, &y, RATE, Orders::uniform(4), &options).unwrap();
    assert_eq!(report.iterations, 1);
    assert!(!report.converged);
}

#[test]
fn bad_inputs_are_rejected() {
    let (u, y) = order_two_data(500, 0.1, 8);
    let opts = FitOptions::default();
    assert!(matches!(
        fit_bj(&u[..100], &y, RATE, Orders::uniform(2), &opts),
        Err(Error::LengthMismatch { .. })
    ));
    assert!(matches!(
        fit_bj(&u[..50], &y[..50], RATE, Orders::uniform(2), &opts),
        Err(Error::InsufficientData { .. })
    ));
    assert!(matches!(
        fit_bj(&vec![1.0; 500], &y, RATE, Orders::uniform(2), &opts),
        Err(Error::DegenerateInput)
    ));
}
