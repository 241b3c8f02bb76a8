//! Riemannian conjugate gradient engine with Armijo backtracking line search,
//! Polak-Ribière direction updates, stopping control and flop accounting.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{RadcomError, Result};
use crate::manifolds::{inner, Manifold, TangentVector};
use crate::CMat;

/// Backtracking line-search parameters.
#[derive(Debug, Clone)]
pub struct ArmijoParams {
    pub initial_step: f64,
    pub contraction: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        Self { initial_step: 1.0, contraction: 0.5, sufficient_decrease: 1e-4, max_backtracks: 50 }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Gradient-norm stopping threshold.
    pub delta: f64,
    /// Iteration cap.
    pub i_max: usize,
    pub armijo: ArmijoParams,
    /// Clamp the Polak-Ribière coefficient at zero (PR+).
    pub pr_plus: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { delta: 1e-6, i_max: 1000, armijo: ArmijoParams::default(), pr_plus: true }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delta <= 0.0 || self.i_max < 1 {
            return Err(RadcomError::Config("delta must be > 0 and i_max >= 1".into()));
        }
        let a = &self.armijo;
        if !(0.0..1.0).contains(&a.contraction)
            || a.contraction == 0.0
            || !(0.0..1.0).contains(&a.sufficient_decrease)
            || a.sufficient_decrease == 0.0
            || a.initial_step <= 0.0
        {
            return Err(RadcomError::Config("armijo parameters out of range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientConverged,
    MaxIterations,
    LineSearchFailure,
}

/// One line of the per-iteration trace.
#[derive(Debug, Clone, Copy)]
pub struct IterRecord {
    pub cost: f64,
    pub grad_norm: f64,
    pub step: f64,
}

/// Solver outcome: trace, termination reason, flop model and the worst
/// manifold/tangency residuals observed over the whole run.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub iterations: usize,
    pub final_cost: f64,
    pub final_grad_norm: f64,
    pub trace: Vec<IterRecord>,
    pub termination: Termination,
    /// Modeled flop count: per-iteration total × iterations.
    pub flops_model: u64,
    pub max_power_residual: f64,
    pub max_tangency_residual: f64,
}

impl SolverReport {
    /// Trace export: iteration, cost, grad_norm, step, cumulative_flops.
    pub fn write_trace_csv(&self, path: &Path, flops_per_iter: u64) -> Result<()> {
        let mut f = File::create(path)?;
        writeln!(f, "iteration,cost,grad_norm,step,cumulative_flops")?;
        for (i, rec) in self.trace.iter().enumerate() {
            writeln!(
                f,
                "{},{:.17e},{:.17e},{:.17e},{}",
                i,
                rec.cost,
                rec.grad_norm,
                rec.step,
                i as u64 * flops_per_iter
            )?;
        }
        Ok(())
    }
}

/// Per-iteration flop model, by operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlopBreakdown {
    pub retraction: u64,
    pub euclidean_gradient: u64,
    pub riemannian_gradient: u64,
    pub transport: u64,
    pub inner_product: u64,
    pub total: u64,
}

/// Flop counts per RCG iteration; only the highest-order terms are kept, so
/// the total coincides with the Euclidean-gradient row.
pub fn flops_per_iteration(n: usize, k: usize) -> FlopBreakdown {
    let (n, k) = (n as u64, k as u64);
    FlopBreakdown {
        retraction: 14 * n * k,
        euclidean_gradient: 23 * n * n * k + 12 * n * k * k,
        riemannian_gradient: 12 * n * k,
        transport: 12 * n * k,
        inner_product: 8 * n * k,
        total: 23 * n * n * k + 12 * n * k * k,
    }
}

/// Polak-Ribière coefficient, optionally clamped at zero.
pub fn pr_beta(
    grad_new: &TangentVector,
    grad_old_transported: &TangentVector,
    grad_old_norm_sq: f64,
    pr_plus: bool,
) -> f64 {
    debug_assert!(grad_old_norm_sq > 0.0);
    let diff = &grad_new.mat - &grad_old_transported.mat;
    let beta = inner(&grad_new.mat, &diff) / grad_old_norm_sq;
    if pr_plus {
        beta.max(0.0)
    } else {
        beta
    }
}

/// Backtracking Armijo search along a tangent descent direction. Returns the
/// accepted step, the retracted point and its cost.
pub fn armijo_search<M: Manifold + ?Sized>(
    cost_fn: impl Fn(&CMat) -> f64,
    manifold: &M,
    point: &CMat,
    current_cost: f64,
    direction: &TangentVector,
    grad: &TangentVector,
    params: &ArmijoParams,
) -> Result<(f64, CMat, f64)> {
    let slope = inner(&grad.mat, &direction.mat);
    if slope >= 0.0 {
        return Err(RadcomError::NotDescentDirection { slope });
    }
    let mut step = params.initial_step;
    for _ in 0..=params.max_backtracks {
        let candidate = manifold.retract(point, direction, step)?;
        let cost = cost_fn(&candidate);
        if cost <= current_cost + params.sufficient_decrease * step * slope {
            return Ok((step, candidate, cost));
        }
        step *= params.contraction;
    }
    Err(RadcomError::LineSearchFailure { backtracks: params.max_backtracks })
}

/// Minimize a smooth cost on a power manifold by Riemannian conjugate
/// gradient with projection transport. The returned point satisfies the
/// manifold constraint exactly (it is produced by a retraction); a line
/// search failure is reported in the termination reason and the best iterate
/// is returned.
pub fn rcg_minimize<M: Manifold + ?Sized>(
    cost_and_grad: impl Fn(&CMat) -> (f64, CMat),
    manifold: &M,
    start: CMat,
    cfg: &SolverConfig,
) -> Result<(CMat, SolverReport)> {
    cfg.validate()?;
    if manifold.constraint_residual(&start) > 1e-9 {
        return Err(RadcomError::Domain("start point is not on the manifold".into()));
    }

    let mut point = start;
    let (mut cost, egrad) = cost_and_grad(&point);
    let mut grad = manifold.project(&point, &egrad);
    let mut grad_norm = grad.norm();

    let mut max_power_residual = manifold.constraint_residual(&point);
    let mut max_tangency_residual = manifold.tangency_residual(&point, &grad.mat);
    let mut trace = vec![IterRecord { cost, grad_norm, step: 0.0 }];
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0usize;

    if grad_norm < cfg.delta {
        termination = Termination::GradientConverged;
    } else {
        let mut dir = grad.scaled(-1.0);
        for i in 1..=cfg.i_max {
            // fall back to steepest descent when PR yields a non-descent direction
            if inner(&grad.mat, &dir.mat) >= 0.0 {
                dir = grad.scaled(-1.0);
            }
            let cost_only = |t: &CMat| cost_and_grad(t).0;
            let (step, new_point, new_cost) = match armijo_search(
                cost_only,
                manifold,
                &point,
                cost,
                &dir,
                &grad,
                &cfg.armijo,
            ) {
                Ok(res) => res,
                Err(RadcomError::LineSearchFailure { .. }) => {
                    termination = Termination::LineSearchFailure;
                    break;
                }
                Err(e) => return Err(e),
            };

            let (_, new_egrad) = cost_and_grad(&new_point);
            let new_grad = manifold.project(&new_point, &new_egrad);
            let new_grad_norm = new_grad.norm();

            let old_grad_transported = manifold.transport(&new_point, &grad);
            let dir_transported = manifold.transport(&new_point, &dir);
            let beta = pr_beta(&new_grad, &old_grad_transported, grad_norm * grad_norm, cfg.pr_plus);
            dir = new_grad.scaled(-1.0).add_scaled(&dir_transported, beta);

            point = new_point;
            cost = new_cost;
            grad = new_grad;
            grad_norm = new_grad_norm;
            iterations = i;

            max_power_residual = max_power_residual.max(manifold.constraint_residual(&point));
            max_tangency_residual =
                max_tangency_residual.max(manifold.tangency_residual(&point, &grad.mat));
            trace.push(IterRecord { cost, grad_norm, step });

            if grad_norm < cfg.delta {
                termination = Termination::GradientConverged;
                break;
            }
        }
    }

    let (n, k) = manifold.shape();
    let report = SolverReport {
        iterations,
        final_cost: cost,
        final_grad_norm: grad_norm,
        trace,
        termination,
        flops_model: flops_per_iteration(n, k).total * iterations as u64,
        max_power_residual,
        max_tangency_residual,
    };
    Ok((point, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complex_gaussian, trial_rng};
    use crate::manifolds::Sphere;
    use num_complex::Complex64;

    /// Pure covariance-fit cost on the sphere, used as a known-solution toy.
    fn fit_cost(r: &CMat) -> impl Fn(&CMat) -> (f64, CMat) + '_ {
        move |t: &CMat| {
            let e = t * t.adjoint() - r;
            (e.norm().powi(2), e * t * Complex64::new(4.0, 0.0))
        }
    }

    #[test]
    fn flops_table_rows() {
        let b = flops_per_iteration(20, 10);
        assert_eq!(b.retraction, 2800);
        assert_eq!(b.euclidean_gradient, 116_000);
        assert_eq!(b.riemannian_gradient, 2400);
        assert_eq!(b.transport, 2400);
        assert_eq!(b.inner_product, 1600);
        assert_eq!(b.total, 116_000);
        assert_eq!(flops_per_iteration(1, 1).total, 35);
    }

    #[test]
    fn pr_beta_cases() {
        let mut rng = trial_rng(30, 0);
        let sphere = Sphere::new(3, 2, 1.0).unwrap();
        let p = sphere.random_point(&mut rng).unwrap();
        let g = sphere.project(&p, &complex_gaussian(3, 2, &mut rng));
        // identical vectors -> 0
        assert!(pr_beta(&g, &g, g.norm() * g.norm(), true).abs() < 1e-14);
        // zero transported old gradient with matching norm -> 1
        let zero = TangentVector { mat: CMat::zeros(3, 2), base: g.base.clone() };
        let b = pr_beta(&g, &zero, g.norm() * g.norm(), true);
        assert!((b - 1.0).abs() < 1e-12);
        // random pair matches the inner-product formula
        let h = sphere.project(&p, &complex_gaussian(3, 2, &mut rng));
        let expect = inner(&g.mat, &(&g.mat - &h.mat)) / (h.norm() * h.norm());
        let got = pr_beta(&g, &h, h.norm() * h.norm(), false);
        assert!((got - expect).abs() < 1e-12 * expect.abs().max(1.0));
    }

    #[test]
    fn armijo_accepts_full_step_on_easy_descent() {
        let mut rng = trial_rng(31, 0);
        let sphere = Sphere::new(4, 2, 1.0).unwrap();
        let t_star = sphere.random_point(&mut rng).unwrap();
        let r = &t_star * t_star.adjoint();
        let f = fit_cost(&r);
        // start close to the optimum: tiny gradient, quadratic basin
        let p = sphere
            .retract(&t_star, &sphere.project(&t_star, &complex_gaussian(4, 2, &mut rng)), 1e-3)
            .unwrap();
        let (c0, eg) = f(&p);
        let g = sphere.project(&p, &eg);
        let dir = g.scaled(-1.0);
        let params = ArmijoParams::default();
        let (step, _, c1) =
            armijo_search(|t| f(t).0, &sphere, &p, c0, &dir, &g, &params).unwrap();
        assert!(c1 < c0);
        assert!(step > 0.0);
    }

    #[test]
    fn armijo_rejects_ascent_direction() {
        let mut rng = trial_rng(32, 0);
        let sphere = Sphere::new(4, 2, 1.0).unwrap();
        let t_star = sphere.random_point(&mut rng).unwrap();
        let r = CMat::identity(4, 4);
        let f = fit_cost(&r);
        let p = sphere.random_point(&mut rng).unwrap();
        let (c0, eg) = f(&p);
        let g = sphere.project(&p, &eg);
        let ascent = g.clone();
        let err = armijo_search(|t| f(t).0, &sphere, &p, c0, &ascent, &g, &ArmijoParams::default());
        assert!(matches!(err, Err(RadcomError::NotDescentDirection { .. })));
        let _ = t_star;
    }

    #[test]
    fn rcg_converges_on_known_solution() {
        let mut rng = trial_rng(33, 0);
        let sphere = Sphere::new(8, 3, 1.0).unwrap();
        let t_star = sphere.random_point(&mut rng).unwrap();
        let r = &t_star * t_star.adjoint();
        let f = fit_cost(&r);
        let start = sphere.random_point(&mut rng).unwrap();
        let cfg = SolverConfig { i_max: 500, ..Default::default() };
        let (_, report) = rcg_minimize(&f, &sphere, start, &cfg).unwrap();
        assert!(report.final_cost <= 1e-8, "final cost {}", report.final_cost);
        // cost trace is non-increasing
        for w in report.trace.windows(2) {
            assert!(w[1].cost <= w[0].cost + 1e-12);
        }
        assert!(report.max_power_residual < 1e-12);
        assert!(report.max_tangency_residual < 1e-9);
    }

    #[test]
    fn rcg_stops_immediately_at_stationary_point() {
        let sphere = Sphere::new(3, 2, 1.0).unwrap();
        let mut rng = trial_rng(34, 0);
        let p = sphere.random_point(&mut rng).unwrap();
        let r = &p * p.adjoint();
        let f = fit_cost(&r);
        let (out, report) = rcg_minimize(&f, &sphere, p.clone(), &SolverConfig::default()).unwrap();
        assert_eq!(report.iterations, 0);
        assert_eq!(report.termination, Termination::GradientConverged);
        assert_eq!(out, p);
    }

    #[test]
    fn rcg_rejects_off_manifold_start() {
        let sphere = Sphere::new(3, 2, 1.0).unwrap();
        let bad = CMat::from_element(3, 2, Complex64::new(1.0, 0.0));
        let r = CMat::identity(3, 3);
        let f = fit_cost(&r);
        assert!(rcg_minimize(&f, &sphere, bad, &SolverConfig::default()).is_err());
    }

    #[test]
    fn rcg_deterministic_given_seed() {
        let mut rng = trial_rng(35, 0);
        let sphere = Sphere::new(6, 2, 2.0).unwrap();
        let t_star = sphere.random_point(&mut rng).unwrap();
        let r = &t_star * t_star.adjoint();
        let f = fit_cost(&r);
        let start = sphere.random_point(&mut rng).unwrap();
        let cfg = SolverConfig { i_max: 100, ..Default::default() };
        let (a, ra) = rcg_minimize(&f, &sphere, start.clone(), &cfg).unwrap();
        let (b, rb) = rcg_minimize(&f, &sphere, start, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.iterations, rb.iterations);
    }

    #[test]
    fn trace_csv_shape() {
        let dir = tempfile::tempdir().unwrap();
        let report = SolverReport {
            iterations: 2,
            final_cost: 1.0,
            final_grad_norm: 0.1,
            trace: vec![
                IterRecord { cost: 3.0, grad_norm: 1.0, step: 0.0 },
                IterRecord { cost: 2.0, grad_norm: 0.5, step: 1.0 },
                IterRecord { cost: 1.0, grad_norm: 0.1, step: 0.5 },
            ],
            termination: Termination::MaxIterations,
            flops_model: 70,
            max_power_residual: 0.0,
            max_tangency_residual: 0.0,
        };
        let path = dir.path().join("trace.csv");
        report.write_trace_csv(&path, 35).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("iteration,cost"));
        assert!(lines[2].ends_with(",35"));
    }
}
