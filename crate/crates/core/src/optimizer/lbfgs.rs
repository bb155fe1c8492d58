//! Limited-memory BFGS on the parameter torus with a strong-Wolfe line search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::simulator::{energy_and_gradient, DiagonalHamiltonian, QaoaParams};

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_EVALS: usize = 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Convergence threshold on the gradient's ∞-norm.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Objective-angle period; `None` takes the encoding's default.
    pub period: Option<f64>,
    /// Accepted runs per level below the trajectory switch.
    pub restarts: usize,
    /// Attempts allowed per level, as a multiple of `restarts`.
    pub retry_factor: usize,
    /// First level optimized by extending trajectories.
    pub trajectory_from: usize,
    pub memory: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-5,
            max_iters: 1000,
            period: None,
            restarts: 100,
            retry_factor: 5,
            trajectory_from: 5,
            memory: 10,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(crate::Error::InvalidArgument(format!(
                "grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        if self.memory == 0 || self.restarts == 0 || self.retry_factor == 0 {
            return Err(crate::Error::InvalidArgument(
                "memory, restarts and retry_factor must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimizeResult {
    pub params: QaoaParams,
    pub energy: f64,
    pub grad_inf_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Energy after each accepted step, starting with the initial point.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

struct Objective<'a> {
    h: &'a DiagonalHamiltonian,
    r: usize,
}

impl Objective<'_> {
    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        energy_and_gradient(self.h, &x[..self.r], &x[self.r..])
    }
}

struct Trial {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
    dphi: f64,
}

fn trial(obj: &Objective, x: &[f64], d: &[f64], alpha: f64) -> Trial {
    let xt: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + alpha * b).collect();
    let (f, g) = obj.eval(&xt);
    let dphi = dot(&g, d);
    Trial { alpha, f, g, dphi }
}

/// Strong-Wolfe line search along `d` from `x`.
fn line_search(obj: &Objective, x: &[f64], d: &[f64], f0: f64, dphi0: f64, alpha0: f64) -> Option<Trial> {
    let sufficient = |t: &Trial| t.f <= f0 + C1 * t.alpha * dphi0;
    let curvature = |t: &Trial| t.dphi.abs() <= -C2 * dphi0;
    let mut prev = Trial {
        alpha: 0.0,
        f: f0,
        g: Vec::new(),
        dphi: dphi0,
    };
    let mut alpha = alpha0;
    let mut evals = 0;
    let (mut lo, mut hi);
    loop {
        let t = trial(obj, x, d, alpha);
        evals += 1;
        if !sufficient(&t) || (evals > 1 && t.f >= prev.f) {
            lo = prev;
            hi = t;
            break;
        }
        if curvature(&t) {
            return Some(t);
        }
        if t.dphi >= 0.0 {
            lo = t;
            hi = prev;
            break;
        }
        if evals >= MAX_LINE_EVALS {
            return Some(t);
        }
        prev = t;
        alpha *= 2.0;
    }
    // Zoom between lo (satisfies sufficient decrease) and hi.
    while evals < MAX_LINE_EVALS {
        let a = interpolate(&lo, &hi);
        let t = trial(obj, x, d, a);
        evals += 1;
        if !sufficient(&t) || t.f >= lo.f {
            hi = t;
        } else {
            if curvature(&t) {
                return Some(t);
            }
            if t.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = t;
        }
        if (hi.alpha - lo.alpha).abs() < 1e-16 * lo.alpha.abs().max(1.0) {
            break;
        }
    }
    (lo.alpha > 0.0 && lo.f < f0).then_some(lo)
}

/// Minimizer of the quadratic through `lo` (value and slope) and `hi` (value),
/// kept inside the middle of the bracket.
fn interpolate(lo: &Trial, hi: &Trial) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let span = b - a;
    let denom = 2.0 * (hi.f - lo.f - lo.dphi * span);
    let mut t = if denom.abs() > 1e-300 {
        a - lo.dphi * span * span / denom
    } else {
        a + 0.5 * span
    };
    let (min, max) = (a.min(b), a.max(b));
    let margin = 0.1 * (max - min);
    if !t.is_finite() || t < min + margin || t > max - margin {
        t = a + 0.5 * span;
    }
    t
}

fn two_loop(g: &[f64], mem: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = mem.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in mem.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Minimizes the QAOA energy from `init`, wrapping every iterate onto the torus.
pub fn minimize(h: &DiagonalHamiltonian, init: &QaoaParams, cfg: &OptimizerConfig) -> MinimizeResult {
    let period = init.period;
    let r = init.levels();
    let obj = Objective { h, r };
    let mut params = init.clone();
    params.wrap();
    let mut x = params.to_vec();
    let (mut f, mut g) = obj.eval(&x);
    let mut history = vec![f];
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut converged = r == 0 || inf_norm(&g) < cfg.grad_tol;

    while !converged && iterations < cfg.max_iters {
        iterations += 1;
        let mut d = two_loop(&g, &mem);
        let mut dphi = dot(&g, &d);
        if !(dphi < 0.0) {
            mem.clear();
            d = g.iter().map(|v| -v).collect();
            dphi = dot(&g, &d);
        }
        let alpha0 = if mem.is_empty() {
            (1.0 / dot(&g, &g).sqrt()).min(1.0)
        } else {
            1.0
        };
        let step = match line_search(&obj, &x, &d, f, dphi, alpha0) {
            Some(t) => t,
            None if !mem.is_empty() => {
                mem.clear();
                continue;
            }
            None => break,
        };
        let x_new: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step.alpha * b).collect();
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = step.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            mem.push_back((s, y, 1.0 / sy));
            if mem.len() > cfg.memory {
                mem.pop_front();
            }
        }
        let wrapped = QaoaParams::from_vec(&x_new, period).expect("even length").to_vec();
        if wrapped != x_new {
            let (fw, gw) = obj.eval(&wrapped);
            if (fw - step.f).abs() > 1e-9 * step.f.abs().max(1.0) {
                // The objective is not periodic in R here; curvature pairs are stale.
                mem.clear();
            }
            x = wrapped;
            f = fw;
            g = gw;
        } else {
            x = x_new;
            f = step.f;
            g = step.g;
        }
        history.push(f);
        converged = inf_norm(&g) < cfg.grad_tol;
    }

    MinimizeResult {
        params: QaoaParams::from_vec(&x, period).expect("even length"),
        energy: f,
        grad_inf_norm: inf_norm(&g),
        converged,
        iterations,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::{encode_hobo, random_instance, TspInstance};
    use crate::simulator::{build_diagonal, gradient};
    use std::f64::consts::PI;

    fn hobo_zero() -> DiagonalHamiltonian {
        build_diagonal(&encode_hobo(&TspInstance::zero(3).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn converges_and_decreases() {
        let h = hobo_zero();
        let init = QaoaParams::new(vec![0.4], vec![1.1], 2.0 * PI).unwrap();
        let e0 = energy_and_gradient(&h, &init.theta_mix, &init.theta_obj).0;
        let res = minimize(&h, &init, &OptimizerConfig::default());
        assert!(res.converged);
        assert!(res.energy <= e0);
        assert!(inf_norm(&gradient(&h, &res.params)) < 1e-5);
    }

    #[test]
    fn stationary_start_returns_immediately() {
        let h = hobo_zero();
        let res = minimize(&h, &QaoaParams::zeros(2, 2.0 * PI), &OptimizerConfig::default());
        assert!(res.converged);
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn energy_never_increases_on_periodic_objective() {
        let h = build_diagonal(&encode_hobo(&random_instance(3, 2).unwrap()).unwrap()).unwrap();
        let h = DiagonalHamiltonian::new(h.energies.iter().map(|e| e.round()).collect(), h.feasible).unwrap();
        let init = QaoaParams::new(vec![0.3, 2.0, 1.0], vec![0.5, 4.0, 0.1], 2.0 * PI).unwrap();
        let res = minimize(&h, &init, &OptimizerConfig::default());
        for w in res.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{:?}", w);
        }
        assert!(res.params.theta_mix.iter().all(|&t| (0.0..PI).contains(&t)));
        assert!(res.params.theta_obj.iter().all(|&t| (0.0..2.0 * PI).contains(&t)));
    }

    #[test]
    fn config_json_round_trip() {
        let cfg: OptimizerConfig = serde_json::from_str(r#"{"restarts": 7, "seed": 3}"#).unwrap();
        assert_eq!(cfg.restarts, 7);
        assert_eq!(cfg.grad_tol, 1e-5);
        assert!(OptimizerConfig { grad_tol: 0.0, ..Default::default() }.validate().is_err());
    }
}
