//! Limited-memory BFGS with a monotone backtracking line search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizationConfig {
    /// Converged once `‖∇f‖∞` falls to this value.
    pub gradient_tolerance: f64,
    pub max_evaluations: usize,
    /// Number of `(s, y)` pairs kept for the inverse-Hessian estimate.
    pub memory_depth: usize,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        OptimizationConfig {
            gradient_tolerance: 1e-8,
            max_evaluations: 200,
            memory_depth: 10,
        }
    }
}

impl OptimizationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_tolerance > 0.0) || self.max_evaluations == 0 || self.memory_depth == 0 {
            return Err(Error::InvalidArgument(format!("optimizer settings must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub t_opt: Vec<f64>,
    pub energy: f64,
    pub gradient: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;

/// Near a minimum the predicted decrease drops below the rounding error of
/// `f`, and Armijo alone rejects every step. There we accept a step that
/// keeps `f` within a few ulps and shrinks the directional derivative.
fn approximately_wolfe(f: f64, ft: f64, slope: f64, slope_t: f64) -> bool {
    let noise = 8.0 * f64::EPSILON * f.abs().max(1.0);
    ft <= f + noise && slope_t >= 0.9 * slope && slope_t <= -0.8 * slope
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` given a closure returning `(f(x), ∇f(x))`.
///
/// Accepted steps satisfy the Armijo condition, or stay within rounding of
/// the current value once the predicted decrease is below it, so the result
/// never exceeds `f(t0)` by more than a few ulps.
pub fn minimize<F>(mut eval: F, t0: &[f64], cfg: &OptimizationConfig) -> Result<OptimizationResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    cfg.validate()?;
    let mut evaluations = 0;
    let mut call = |x: &[f64], evaluations: &mut usize| -> Result<(f64, Vec<f64>)> {
        *evaluations += 1;
        let (f, g) = eval(x)?;
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(x.to_vec()));
        }
        Ok((f, g))
    };

    let mut x = t0.to_vec();
    let (mut f, mut g) = call(&x, &mut evaluations)?;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut first = true;

    loop {
        if inf_norm(&g) <= cfg.gradient_tolerance {
            return Ok(OptimizationResult {
                t_opt: x,
                energy: f,
                gradient: g,
                evaluations,
                converged: true,
            });
        }
        if evaluations >= cfg.max_evaluations {
            break;
        }

        let mut d = two_loop(&g, &history);
        let mut slope = dot(&d, &g);
        if slope >= 0.0 {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&d, &g);
        }
        let mut step = if first && history.is_empty() {
            (1.0 / inf_norm(&g)).min(1.0)
        } else {
            1.0
        };
        first = false;

        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = call(&trial, &mut evaluations)?;
            if ft <= f + ARMIJO * step * slope || approximately_wolfe(f, ft, slope, dot(&gt, &d)) {
                break Some((trial, ft, gt));
            }
            if evaluations >= cfg.max_evaluations {
                break None;
            }
            // Minimizer of the quadratic through f, slope and f(step).
            let q = -slope * step * step / (2.0 * (ft - f - slope * step));
            step = if q.is_finite() { q.clamp(0.1 * step, 0.5 * step) } else { 0.5 * step };
            if step < MIN_STEP {
                break None;
            }
        };
        let Some((xn, fn_, gn)) = accepted else { break };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == cfg.memory_depth {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        f = fn_;
        g = gn;
    }

    let converged = inf_norm(&g) <= cfg.gradient_tolerance;
    Ok(OptimizationResult {
        t_opt: x,
        energy: f,
        gradient: g,
        evaluations,
        converged,
    })
}

/// `−H_k ∇f` from the stored curvature pairs.
fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let r = minimize(
            |t| {
                let f = t.iter().map(|x| (x - 1.0).powi(2)).sum();
                Ok((f, t.iter().map(|x| 2.0 * (x - 1.0)).collect()))
            },
            &[0.0; 5],
            &OptimizationConfig::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert!(r.t_opt.iter().all(|x| (x - 1.0).abs() < 1e-8));
    }

    #[test]
    fn already_optimal_start() {
        let r = minimize(
            |t| Ok((t[0].cos(), vec![-t[0].sin()])),
            &[std::f64::consts::PI],
            &OptimizationConfig::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert!(r.evaluations <= 2);
        assert_eq!(r.t_opt, vec![std::f64::consts::PI]);
    }

    #[test]
    fn rosenbrock_with_monotone_descent() {
        let mut seen = Vec::new();
        let r = minimize(
            |t| {
                let (a, b) = (t[0], t[1]);
                let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
                seen.push(f);
                Ok((f, vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)]))
            },
            &[-1.2, 1.0],
            &OptimizationConfig {
                max_evaluations: 500,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.converged, "{r:?}");
        assert!((r.t_opt[0] - 1.0).abs() < 1e-6 && (r.t_opt[1] - 1.0).abs() < 1e-6);
        assert!(r.energy <= seen[0]);
    }

    #[test]
    fn non_finite_is_reported() {
        let e = minimize(|t| Ok((f64::NAN, vec![t[0]])), &[0.5], &OptimizationConfig::default()).unwrap_err();
        assert_eq!(e, Error::NonFinite(vec![0.5]));
    }

    #[test]
    fn evaluation_budget_respected() {
        let cfg = OptimizationConfig {
            max_evaluations: 3,
            ..Default::default()
        };
        let r = minimize(|t| Ok(((t[0] - 3.0).powi(4), vec![4.0 * (t[0] - 3.0).powi(3)])), &[0.0], &cfg).unwrap();
        assert!(r.evaluations <= 3);
        assert!(!r.converged);
    }

    #[test]
    fn invalid_config() {
        let cfg = OptimizationConfig {
            memory_depth: 0,
            ..Default::default()
        };
        assert!(minimize(|_| Ok((0.0, vec![0.0])), &[0.0], &cfg).is_err());
    }
}
