//! Derivative-free minimisers for circuit parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Method and evaluation budget for one θ phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ThetaOptimizer {
    /// Adaptive Nelder–Mead simplex, restarted from the best vertex until a
    /// restart stops improving.
    NelderMead { budget: usize, initial_step: f64 },
    /// Exact line minimisation along one parameter at a time. The objective
    /// is a trigonometric polynomial of degree two in each angle, so five
    /// samples determine it. After the run from the incoming point,
    /// `restarts` further runs start from seeded uniform random angles and the
    /// best point wins; `budget` applies to each run.
    Coordinate {
        budget: usize,
        tol: f64,
        #[serde(default)]
        restarts: usize,
        #[serde(default)]
        seed: u64,
    },
}

impl Default for ThetaOptimizer {
    fn default() -> Self {
        ThetaOptimizer::NelderMead {
            budget: 2000,
            initial_step: 0.1,
        }
    }
}

impl ThetaOptimizer {
    pub fn budget(&self) -> usize {
        match *self {
            ThetaOptimizer::NelderMead { budget, .. } => budget,
            ThetaOptimizer::Coordinate { budget, restarts, .. } => budget * (restarts + 1),
        }
    }

    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, f: F, x0: &[f64]) -> Outcome {
        match *self {
            ThetaOptimizer::NelderMead {
                budget,
                initial_step,
            } => nelder_mead(f, x0, budget, initial_step),
            ThetaOptimizer::Coordinate {
                budget,
                tol,
                restarts,
                seed,
            } => multistart_coordinate(f, x0, budget, tol, restarts, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub budget_exhausted: bool,
    /// Best value after each accepted iteration.
    pub history: Vec<f64>,
}

struct Counted<F> {
    f: F,
    evaluations: usize,
    budget: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> Option<f64> {
        if self.evaluations >= self.budget {
            return None;
        }
        self.evaluations += 1;
        let v = (self.f)(x);
        Some(if v.is_nan() { f64::INFINITY } else { v })
    }
}

/// Nelder–Mead with dimension-adaptive coefficients (Gao & Han).
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], budget: usize, initial_step: f64) -> Outcome {
    let n = x0.len();
    let mut fun = Counted {
        f,
        evaluations: 0,
        budget: budget.max(1),
    };
    let f0 = fun.call(x0).expect("budget of at least one");
    let mut best_x = x0.to_vec();
    let mut best_f = f0;
    let mut history = vec![f0];
    if n == 0 {
        return Outcome {
            x: best_x,
            value: best_f,
            evaluations: fun.evaluations,
            budget_exhausted: false,
            history,
        };
    }
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let sigma = if n == 1 { 0.5 } else { sigma };
    let mut step = initial_step;
    let mut exhausted = false;

    'restarts: loop {
        let restart_from = best_f;
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(best_x.clone(), best_f)];
        for i in 0..n {
            let mut x = best_x.clone();
            x[i] += step;
            match fun.call(&x) {
                Some(v) => simplex.push((x, v)),
                None => {
                    exhausted = true;
                    break 'restarts;
                }
            }
        }
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            if simplex[0].1 < best_f {
                best_f = simplex[0].1;
                best_x = simplex[0].0.clone();
                history.push(best_f);
            }
            let spread = simplex[n].1 - simplex[0].1;
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if spread.abs() <= 1e-13 * (1.0 + simplex[0].1.abs()) && diameter < 1e-8 || diameter < 1e-10 {
                break;
            }
            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / nf;
                }
            }
            let worst = simplex[n].clone();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
            };
            let xr = along(alpha);
            let Some(fr) = fun.call(&xr) else {
                exhausted = true;
                break 'restarts;
            };
            if fr < simplex[0].1 {
                let xe = along(gamma);
                let Some(fe) = fun.call(&xe) else {
                    simplex[n] = (xr, fr);
                    exhausted = true;
                    break;
                };
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, outside) = if fr < worst.1 {
                (along(rho), true)
            } else {
                (along(-rho), false)
            };
            let Some(fc) = fun.call(&xc) else {
                exhausted = true;
                break;
            };
            if (outside && fc <= fr) || (!outside && fc < worst.1) {
                simplex[n] = (xc, fc);
                continue;
            }
            // shrink towards the best vertex
            let x_best = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let x: Vec<f64> = x_best.iter().zip(&vertex.0).map(|(b, v)| b + sigma * (v - b)).collect();
                let Some(v) = fun.call(&x) else {
                    exhausted = true;
                    break;
                };
                *vertex = (x, v);
            }
            if exhausted {
                break;
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best_f {
            best_f = simplex[0].1;
            best_x = simplex[0].0.clone();
            history.push(best_f);
        }
        if exhausted || restart_from - best_f <= 1e-12 * (1.0 + best_f.abs()) {
            break;
        }
        step = (step * 0.5).max(1e-4);
    }
    Outcome {
        x: best_x,
        value: best_f,
        evaluations: fun.evaluations,
        budget_exhausted: exhausted,
        history,
    }
}

/// Coefficients of `a0 + a1 cos t + b1 sin t + a2 cos 2t + b2 sin 2t` through
/// five equispaced samples `t_j = 2πj/5` (relative to the current angle).
fn trig_fit(samples: &[f64; 5]) -> [f64; 5] {
    let mut c = [0.0; 5];
    for (j, &y) in samples.iter().enumerate() {
        let t = 2.0 * std::f64::consts::PI * j as f64 / 5.0;
        c[0] += y / 5.0;
        c[1] += 2.0 * y * t.cos() / 5.0;
        c[2] += 2.0 * y * t.sin() / 5.0;
        c[3] += 2.0 * y * (2.0 * t).cos() / 5.0;
        c[4] += 2.0 * y * (2.0 * t).sin() / 5.0;
    }
    c
}

fn trig_eval(c: &[f64; 5], t: f64) -> (f64, f64, f64) {
    let (s1, c1) = t.sin_cos();
    let (s2, c2) = (2.0 * t).sin_cos();
    let f = c[0] + c[1] * c1 + c[2] * s1 + c[3] * c2 + c[4] * s2;
    let d1 = -c[1] * s1 + c[2] * c1 - 2.0 * c[3] * s2 + 2.0 * c[4] * c2;
    let d2 = -c[1] * c1 - c[2] * s1 - 4.0 * c[3] * c2 - 4.0 * c[4] * s2;
    (f, d1, d2)
}

/// Global minimiser of the fitted polynomial on `(-π, π]`.
fn trig_argmin(c: &[f64; 5]) -> (f64, f64) {
    let grid = 96;
    let mut best = (0.0, trig_eval(c, 0.0).0);
    for g in 0..grid {
        let t = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (g as f64 + 1.0) / grid as f64;
        let f = trig_eval(c, t).0;
        if f < best.1 {
            best = (t, f);
        }
    }
    let mut t = best.0;
    for _ in 0..30 {
        let (_, d1, d2) = trig_eval(c, t);
        if d2 <= 0.0 {
            break;
        }
        let dt = d1 / d2;
        t -= dt;
        if dt.abs() < 1e-15 {
            break;
        }
    }
    let f = trig_eval(c, t).0;
    if f <= best.1 {
        (t, f)
    } else {
        best
    }
}

/// Sweeps of exact single-angle minimisation until a sweep gains less than `tol`.
pub fn coordinate_trig<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], budget: usize, tol: f64) -> Outcome {
    let mut fun = Counted {
        f,
        evaluations: 0,
        budget: budget.max(1),
    };
    let mut x = x0.to_vec();
    let mut fx = fun.call(&x).expect("budget of at least one");
    let mut history = vec![fx];
    let mut exhausted = false;
    'sweeps: loop {
        let sweep_start = fx;
        for i in 0..x.len() {
            let base = x[i];
            let mut samples = [fx, 0.0, 0.0, 0.0, 0.0];
            for (j, slot) in samples.iter_mut().enumerate().skip(1) {
                x[i] = base + 2.0 * std::f64::consts::PI * j as f64 / 5.0;
                match fun.call(&x) {
                    Some(v) => *slot = v,
                    None => {
                        x[i] = base;
                        exhausted = true;
                        break 'sweeps;
                    }
                }
            }
            let coeffs = trig_fit(&samples);
            let (t, predicted) = trig_argmin(&coeffs);
            x[i] = base;
            if predicted < fx - 1e-15 * (1.0 + fx.abs()) {
                let mut trial = x.clone();
                trial[i] = wrap_angle(base + t);
                match fun.call(&trial) {
                    Some(v) if v < fx => {
                        x = trial;
                        fx = v;
                        history.push(fx);
                    }
                    Some(_) => {}
                    None => {
                        exhausted = true;
                        break 'sweeps;
                    }
                }
            }
        }
        if sweep_start - fx < tol {
            break;
        }
    }
    Outcome {
        x,
        value: fx,
        evaluations: fun.evaluations,
        budget_exhausted: exhausted,
        history,
    }
}

/// [`coordinate_trig`] from `x0`, then from `restarts` random points in `[-π, π)`.
pub fn multistart_coordinate<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    budget: usize,
    tol: f64,
    restarts: usize,
    seed: u64,
) -> Outcome {
    let mut best = coordinate_trig(&mut f, x0, budget, tol);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi = std::f64::consts::PI;
    for _ in 0..restarts {
        let start: Vec<f64> = x0.iter().map(|_| rng.random_range(-pi..pi)).collect();
        let run = coordinate_trig(&mut f, &start, budget, tol);
        best.evaluations += run.evaluations;
        best.budget_exhausted |= run.budget_exhausted;
        if run.value < best.value {
            best.value = run.value;
            best.x = run.x;
            best.history.push(run.value);
        }
    }
    best
}

fn wrap_angle(t: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = t % two_pi;
    if r > std::f64::consts::PI {
        r -= two_pi;
    } else if r <= -std::f64::consts::PI {
        r += two_pi;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosen(x: &[f64]) -> f64 {
        x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2)).sum()
    }

    #[test]
    fn nelder_mead_finds_rosenbrock_minimum() {
        let out = nelder_mead(rosen, &[-1.2, 1.0, 0.5], 5000, 0.5);
        assert!(out.value < 1e-8, "{}", out.value);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn budget_is_respected() {
        let out = nelder_mead(rosen, &[-1.2, 1.0, 0.5, 0.3], 50, 0.5);
        assert!(out.evaluations <= 50);
        assert!(out.budget_exhausted);
    }

    #[test]
    fn trig_fit_is_exact() {
        let g = |t: f64| 0.3 + 0.2 * t.cos() - 0.7 * t.sin() + 0.05 * (2.0 * t).cos() + 0.4 * (2.0 * t).sin();
        let mut s = [0.0; 5];
        for (j, v) in s.iter_mut().enumerate() {
            *v = g(2.0 * std::f64::consts::PI * j as f64 / 5.0);
        }
        let c = trig_fit(&s);
        for (a, b) in c.iter().zip([0.3, 0.2, -0.7, 0.05, 0.4]) {
            assert!((a - b).abs() < 1e-14);
        }
        let (t, f) = trig_argmin(&c);
        for k in 0..1000 {
            let tt = -3.2 + 6.4 * k as f64 / 1000.0;
            assert!(g(tt) >= f - 1e-12);
        }
        assert!((g(t) - f).abs() < 1e-14);
    }

    #[test]
    fn coordinate_minimises_separable_trig() {
        let f = |x: &[f64]| x.iter().enumerate().map(|(i, t)| (t - 0.1 * i as f64).cos() * -1.0).sum::<f64>();
        let out = coordinate_trig(f, &[0.0; 4], 1000, 1e-12);
        assert!((out.value + 4.0).abs() < 1e-12);
    }

    #[test]
    fn restarts_never_lose_to_the_first_run_and_are_seeded() {
        // coupled angles with several coordinate-wise minima
        let f = |x: &[f64]| (x[0] - x[1]).cos() * 0.8 + (2.0 * x[0]).sin() * 0.3 + (x[1] + 1.0).cos() * 0.5;
        let single = coordinate_trig(f, &[0.0, 0.0], 300, 1e-12);
        let opt = ThetaOptimizer::Coordinate {
            budget: 300,
            tol: 1e-12,
            restarts: 6,
            seed: 11,
        };
        let a = opt.minimize(f, &[0.0, 0.0]);
        let b = opt.minimize(f, &[0.0, 0.0]);
        assert!(a.value <= single.value);
        assert_eq!(a.x, b.x);
        assert!(a.evaluations <= opt.budget());
        assert!(a.history.windows(2).all(|w| w[1] <= w[0]));
    }
}
