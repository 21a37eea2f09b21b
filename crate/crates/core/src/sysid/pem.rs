//! Prediction-error estimation of Box-Jenkins models.
//!
//! The estimator minimizes the sum of squared one-step-ahead prediction
//! errors with a damped Gauss-Newton (Levenberg-Marquardt) iteration. The
//! starting point comes from a high-order ARX fit whose simulated output is
//! reduced to the requested system orders with a few Steiglitz-McBride
//! passes, followed by a Hannan-Rissanen fit of the noise model to the
//! remaining output error. After every step the denominators and the noise
//! numerator are projected back to stability by root reflection.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{nrmse_fit, rms, rmse};
use super::model::BoxJenkinsModel;
use super::poly::{convolve, Polynomial};
use crate::error::{Error, Result};
use crate::filter::lfilter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orders {
    /// Number of B coefficients.
    pub nb: usize,
    /// Number of free A coefficients (after the leading one).
    pub na: usize,
    pub nc: usize,
    pub nd: usize,
}

impl Orders {
    pub fn uniform(n: usize) -> Self {
        Orders {
            nb: n,
            na: n,
            nc: n,
            nd: n,
        }
    }

    pub fn total(&self) -> usize {
        self.nb + self.na + self.nc + self.nd
    }

    pub fn validate(&self) -> Result<()> {
        if self.nb == 0 || self.na == 0 || self.nc == 0 || self.nd == 0 {
            return Err(Error::InvalidOrder(format!(
                "all orders must be at least 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub input_delay: usize,
    pub max_iterations: usize,
    /// Stop once the relative cost decrease of an accepted step drops below this.
    pub tolerance: f64,
    /// Order of the initial ARX fit; derived from the target orders when unset.
    pub prefit_order: Option<usize>,
    pub refine_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            input_delay: 1,
            max_iterations: 200,
            tolerance: 1e-9,
            prefit_order: None,
            refine_iterations: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub orders: Orders,
    pub input_delay: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Mean squared one-step prediction error at the optimum.
    pub cost: f64,
    pub rmse_simulated: f64,
    pub rmse_predicted: f64,
    /// Normalized fit of the one-step predictor, percent.
    pub nrmse_fit_percent: f64,
    /// Normalized fit of the noise-free simulation, percent.
    pub nrmse_sim_percent: f64,
    /// `100 (rms(y_pred) - rms(y)) / rms(y)`.
    pub rms_discrepancy_percent: f64,
}

impl FitReport {
    /// Scores `model` on `(u, y)`.
    pub fn evaluate(model: &BoxJenkinsModel, u: &[f64], y: &[f64], iterations: usize, converged: bool) -> Result<Self> {
        let y_sim = model.simulate(u)?;
        let y_pred = model.predict_one_step(u, y)?;
        let rmse_predicted = rmse(y, &y_pred)?;
        let rms_y = rms(y);
        Ok(FitReport {
            orders: Orders {
                nb: model.b.coeffs.len(),
                na: model.a.degree(),
                nc: model.c.degree(),
                nd: model.d.degree(),
            },
            input_delay: model.input_delay,
            iterations,
            converged,
            cost: rmse_predicted * rmse_predicted,
            rmse_simulated: rmse(y, &y_sim)?,
            rmse_predicted,
            nrmse_fit_percent: nrmse_fit(y, &y_pred)?,
            nrmse_sim_percent: nrmse_fit(y, &y_sim)?,
            rms_discrepancy_percent: 100.0 * (rms(&y_pred) - rms_y) / rms_y,
        })
    }
}

fn delayed(u: &[f64], delay: usize) -> Vec<f64> {
    let d = delay.min(u.len());
    let mut out = vec![0.0; d];
    out.extend_from_slice(&u[..u.len() - d]);
    out
}

fn sum_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Ridge-stabilized normal equations; the ridge is relative to the mean diagonal.
fn least_squares(phi: &DMatrix<f64>, target: &DVector<f64>) -> Result<DVector<f64>> {
    let mut gram = phi.tr_mul(phi);
    let rhs = phi.tr_mul(target);
    let p = gram.nrows();
    let scale = (gram.trace() / p as f64).max(f64::MIN_POSITIVE);
    for i in 0..p {
        gram[(i, i)] += 1e-10 * scale;
    }
    gram.cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::Numerical("least-squares normal equations not positive definite".into()))
}

/// Equation-error fit `A y = B x`: returns (B coefficients, A tail).
fn arx(y: &[f64], x: &[f64], na: usize, nb: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let start = na.max(nb.saturating_sub(1));
    let rows = y.len() - start;
    let cols = na + nb;
    let phi = DMatrix::from_fn(rows, cols, |r, c| {
        let t = r + start;
        if c < na {
            -y[t - c - 1]
        } else {
            x[t - (c - na)]
        }
    });
    let target = DVector::from_fn(rows, |r, _| y[r + start]);
    let theta = least_squares(&phi, &target)?;
    Ok((theta.rows(na, nb).iter().copied().collect(), theta.rows(0, na).iter().copied().collect()))
}

fn stable_monic(tail: &[f64]) -> Vec<f64> {
    Polynomial::monic(tail).stabilized().coeffs
}

/// Full coefficient vectors of the four polynomials (A, C, D include the leading one).
#[derive(Debug, Clone)]
struct Coeffs {
    b: Vec<f64>,
    a: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
}

impl Coeffs {
    fn pack(&self) -> Vec<f64> {
        let mut th = self.b.clone();
        th.extend_from_slice(&self.a[1..]);
        th.extend_from_slice(&self.c[1..]);
        th.extend_from_slice(&self.d[1..]);
        th
    }

    fn unpack(theta: &[f64], o: &Orders) -> Self {
        let mut i = 0;
        let mut take = |n: usize, monic: bool| {
            let mut v = if monic { vec![1.0] } else { Vec::new() };
            v.extend_from_slice(&theta[i..i + n]);
            i += n;
            v
        };
        let b = take(o.nb, false);
        let a = take(o.na, true);
        let c = take(o.nc, true);
        let d = take(o.nd, true);
        Coeffs { b, a, c, d }
    }

    fn stabilized(mut self) -> Self {
        self.a = stable_monic(&self.a[1..]);
        self.c = stable_monic(&self.c[1..]);
        self.d = stable_monic(&self.d[1..]);
        self
    }
}

struct Evaluation {
    w: Vec<f64>,
    v: Vec<f64>,
    e: Vec<f64>,
    cost: f64,
}

fn evaluate(co: &Coeffs, ud: &[f64], y: &[f64]) -> Evaluation {
    let w = lfilter(&co.b, &co.a, ud);
    let v: Vec<f64> = y.iter().zip(&w).map(|(a, b)| a - b).collect();
    let e = lfilter(&co.d, &co.c, &v);
    let cost = sum_sq(&e);
    Evaluation { w, v, e, cost }
}

/// Jacobian of the prediction errors with respect to the packed parameters.
fn jacobian(co: &Coeffs, ev: &Evaluation, ud: &[f64], o: &Orders) -> DMatrix<f64> {
    let ca = convolve(&co.c, &co.a);
    let psi_b = lfilter(&co.d, &ca, ud);
    let psi_a = lfilter(&co.d, &ca, &ev.w);
    let psi_c = lfilter(&[1.0], &co.c, &ev.e);
    let psi_d = lfilter(&[1.0], &co.c, &ev.v);
    let n = ud.len();
    let mut j = DMatrix::<f64>::zeros(n, o.total());
    let mut col = 0;
    let mut fill = |psi: &[f64], lags: std::ops::Range<usize>, sign: f64| {
        for k in lags {
            let mut column = j.column_mut(col);
            for t in k..n {
                column[t] = sign * psi[t - k];
            }
            col += 1;
        }
    };
    fill(&psi_b, 0..o.nb, -1.0);
    fill(&psi_a, 1..o.na + 1, 1.0);
    fill(&psi_c, 1..o.nc + 1, -1.0);
    fill(&psi_d, 1..o.nd + 1, 1.0);
    j
}

fn initial_estimate(ud: &[f64], y: &[f64], o: &Orders, options: &FitOptions) -> Result<Coeffs> {
    let n = y.len();
    let max_lag = (n / 20).max(1);
    let nh = options
        .prefit_order
        .unwrap_or_else(|| (2 * o.na.max(o.nb)).max(10))
        .min(max_lag);

    // High-order ARX, then use its simulated output as a cleaner target.
    let (bh, ah_tail) = arx(y, ud, nh, nh)?;
    let ah = stable_monic(&ah_tail);
    let target = lfilter(&bh, &ah, ud);

    // Steiglitz-McBride reduction to the requested system orders.
    let mut a = vec![1.0];
    let mut b = Vec::new();
    for _ in 0..options.refine_iterations.max(1) {
        let uf = lfilter(&[1.0], &a, ud);
        let yf = lfilter(&[1.0], &a, &target);
        let (bn, an_tail) = arx(&yf, &uf, o.na, o.nb)?;
        b = bn;
        a = stable_monic(&an_tail);
    }

    // Hannan-Rissanen on the output error for the noise model.
    let w = lfilter(&b, &a, ud);
    let v: Vec<f64> = y.iter().zip(&w).map(|(p, q)| p - q).collect();
    let (mut c, mut d) = (vec![1.0; 1], vec![1.0; 1]);
    if sum_sq(&v) > 1e-20 * sum_sq(y) {
        let nar = (2 * (o.nc + o.nd)).max(10).min(max_lag);
        let (_, ar_tail) = arx(&v, &vec![0.0; n], nar, 0).or_else(|_| -> Result<_> { Ok((vec![], vec![0.0; nar])) })?;
        let mut ar = vec![1.0];
        ar.extend_from_slice(&ar_tail);
        let innov = lfilter(&ar, &[1.0], &v);
        let start = o.nc.max(o.nd);
        let rows = n - start;
        let phi = DMatrix::from_fn(rows, o.nd + o.nc, |r, col| {
            let t = r + start;
            if col < o.nd {
                -v[t - col - 1]
            } else {
                innov[t - (col - o.nd) - 1]
            }
        });
        let tgt = DVector::from_fn(rows, |r, _| v[r + start] - innov[r + start]);
        if let Ok(theta) = least_squares(&phi, &tgt) {
            d = stable_monic(theta.rows(0, o.nd).as_slice());
            c = stable_monic(theta.rows(o.nd, o.nc).as_slice());
        }
    }
    c.resize(o.nc + 1, 0.0);
    d.resize(o.nd + 1, 0.0);
    Ok(Coeffs { b, a, c, d })
}

/// Fits a Box-Jenkins model to input `u` and output `y` sampled at `rate_hz`.
pub fn fit_bj(u: &[f64], y: &[f64], rate_hz: f64, orders: Orders, options: &FitOptions) -> Result<(BoxJenkinsModel, FitReport)> {
    orders.validate()?;
    if u.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: y.len(),
        });
    }
    let needed = 10 * orders.total();
    if u.len() < needed {
        return Err(Error::InsufficientData { needed, got: u.len() });
    }
    if u.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample in identification data".into()));
    }
    let (lo, hi) = u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if lo == hi {
        return Err(Error::DegenerateInput);
    }

    let ud = delayed(u, options.input_delay);
    let y_energy = sum_sq(y);
    let mut co = initial_estimate(&ud, y, &orders, options)?;
    let mut ev = evaluate(&co, &ud, y);
    let mut mu = 1e-4;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iterations {
        if ev.cost <= 1e-30 * y_energy {
            converged = true;
            break;
        }
        iterations += 1;
        let j = jacobian(&co, &ev, &ud, &orders);
        let gram = j.tr_mul(&j);
        let grad = j.tr_mul(&DVector::from_column_slice(&ev.e));
        let p = gram.nrows();
        let diag_mean = (gram.trace() / p as f64).max(f64::MIN_POSITIVE);
        let theta = DVector::from_vec(co.pack());

        let mut step: Option<(Coeffs, Evaluation)> = None;
        while mu <= 1e10 {
            let mut m = gram.clone();
            for i in 0..p {
                m[(i, i)] += mu * (gram[(i, i)] + 1e-9 * diag_mean);
            }
            if let Some(chol) = m.cholesky() {
                let delta = chol.solve(&(-&grad));
                let cand = Coeffs::unpack((&theta + delta).as_slice(), &orders).stabilized();
                let cand_ev = evaluate(&cand, &ud, y);
                if cand_ev.cost.is_finite() && cand_ev.cost < ev.cost {
                    step = Some((cand, cand_ev));
                    mu = (mu / 10.0).max(1e-15);
                    break;
                }
            }
            mu *= 10.0;
        }
        let Some((cand, cand_ev)) = step else {
            // no descent direction left: stationary point
            converged = true;
            break;
        };
        let rel = (ev.cost - cand_ev.cost) / ev.cost;
        co = cand;
        ev = cand_ev;
        if rel < options.tolerance {
            converged = true;
            break;
        }
    }
    if !converged && ev.cost <= 1e-30 * y_energy {
        converged = true;
    }

    let model = BoxJenkinsModel {
        b: Polynomial::new(co.b)?,
        a: Polynomial::monic(&co.a[1..]),
        c: Polynomial::monic(&co.c[1..]),
        d: Polynomial::monic(&co.d[1..]),
        input_delay: options.input_delay,
        rate_hz,
    };
    let report = FitReport::evaluate(&model, u, y, iterations, converged)?;
    Ok((model, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub order: usize,
    pub report: Option<FitReport>,
    pub error: Option<String>,
    /// Smallest order within 1% of the best one-step prediction RMSE.
    pub recommended: bool,
}

/// Fits every order in `orders` with all four polynomial orders set to it.
pub fn order_sweep(u: &[f64], y: &[f64], rate_hz: f64, orders: &[usize], options: &FitOptions) -> Result<Vec<SweepEntry>> {
    if orders.is_empty() {
        return Err(Error::InvalidOrder("empty order range".into()));
    }
    let mut sorted = orders.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut entries: Vec<SweepEntry> = sorted
        .par_iter()
        .map(|&n| match fit_bj(u, y, rate_hz, Orders::uniform(n), options) {
            Ok((_, report)) => SweepEntry {
                order: n,
                report: Some(report),
                error: None,
                recommended: false,
            },
            Err(e) => SweepEntry {
                order: n,
                report: None,
                error: Some(e.to_string()),
                recommended: false,
            },
        })
        .collect();
    let best = entries
        .iter()
        .filter_map(|e| e.report.as_ref().map(|r| r.rmse_predicted))
        .fold(f64::INFINITY, f64::min);
    if best.is_finite() {
        if let Some(e) = entries
            .iter_mut()
            .find(|e| e.report.as_ref().is_some_and(|r| r.rmse_predicted <= best * 1.01))
        {
            e.recommended = true;
        }
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn white(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn truth() -> BoxJenkinsModel {
        BoxJenkinsModel::new(
            vec![1.0, 0.5],
            vec![1.0, -1.2, 0.5],
            vec![1.0, 0.5],
            vec![1.0, -0.8],
            1,
            400.0,
        )
        .unwrap()
    }

    #[test]
    fn pack_unpack_roundtrip() {
        let o = Orders { nb: 2, na: 1, nc: 3, nd: 1 };
        let th = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7];
        let co = Coeffs::unpack(&th, &o);
        assert_eq!(co.a, vec![1.0, 0.3]);
        assert_eq!(co.c, vec![1.0, 0.4, 0.5, 0.6]);
        assert_eq!(co.pack(), th);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let o = Orders { nb: 2, na: 2, nc: 1, nd: 1 };
        let u = white(300, 1);
        let ud = delayed(&u, 1);
        let y: Vec<f64> = white(300, 2);
        let co = Coeffs {
            b: vec![0.8, 0.3],
            a: vec![1.0, -0.6, 0.2],
            c: vec![1.0, 0.3],
            d: vec![1.0, -0.5],
        };
        let ev = evaluate(&co, &ud, &y);
        let j = jacobian(&co, &ev, &ud, &o);
        let theta = co.pack();
        let h = 1e-6;
        for p in 0..theta.len() {
            let mut tp = theta.clone();
            tp[p] += h;
            let mut tm = theta.clone();
            tm[p] -= h;
            let ep = evaluate(&Coeffs::unpack(&tp, &o), &ud, &y).e;
            let em = evaluate(&Coeffs::unpack(&tm, &o), &ud, &y).e;
            for t in (0..300).step_by(17) {
                let fd = (ep[t] - em[t]) / (2.0 * h);
                assert!((fd - j[(t, p)]).abs() < 1e-6 * (1.0 + fd.abs()), "param {p} t {t}: {fd} vs {}", j[(t, p)]);
            }
        }
    }

    #[test]
    fn exact_recovery_without_noise() {
        let m = truth();
        let u = white(4000, 3);
        let y = m.simulate(&u).unwrap();
        let (fit, report) = fit_bj(&u, &y, 400.0, Orders { nb: 2, na: 2, nc: 1, nd: 1 }, &FitOptions::default()).unwrap();
        assert!(report.converged);
        assert!(report.rmse_predicted < 1e-6 * rms(&y));
        for f in [0.0, 40.0, 100.0, 160.0] {
            let g0 = m.gain_at(f).unwrap().gain_g;
            let g1 = fit.gain_at(f).unwrap().gain_g;
            assert!((g1 / g0 - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn input_validation() {
        let o = Orders::uniform(2);
        let u = vec![1.0; 400];
        let y = white(400, 1);
        assert!(matches!(fit_bj(&u, &y, 400.0, o, &FitOptions::default()), Err(Error::DegenerateInput)));
        let u = white(50, 1);
        assert!(matches!(
            fit_bj(&u, &u, 400.0, o, &FitOptions::default()),
            Err(Error::InsufficientData { needed: 80, got: 50 })
        ));
        assert!(matches!(
            fit_bj(&u, &u, 400.0, Orders { nb: 0, ..o }, &FitOptions::default()),
            Err(Error::InvalidOrder(_))
        ));
    }

    #[test]
    fn max_iterations_reported_as_not_converged() {
        let m = truth();
        let u = white(1000, 7);
        let noise = lfilter(&[1.0, 0.5], &[1.0, -0.8], &white(1000, 8));
        let y: Vec<f64> = m.simulate(&u).unwrap().iter().zip(&noise).map(|(a, b)| a + 0.5 * b).collect();
        let opts = FitOptions {
            max_iterations: 1,
            refine_iterations: 1,
            prefit_order: Some(2),
            ..FitOptions::default()
        };
        let (_, r) = fit_bj(&u, &y, 400.0, Orders::uniform(3), &opts).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(!r.converged);
    }

    #[test]
    fn sweep_of_one_matches_direct_fit() {
        let m = truth();
        let u = white(1500, 9);
        let y = m.simulate(&u).unwrap();
        let direct = fit_bj(&u, &y, 400.0, Orders::uniform(2), &FitOptions::default()).unwrap().1;
        let sweep = order_sweep(&u, &y, 400.0, &[2], &FitOptions::default()).unwrap();
        assert_eq!(sweep.len(), 1);
        assert_eq!(sweep[0].report.as_ref().unwrap(), &direct);
        assert!(sweep[0].recommended);
    }
}
