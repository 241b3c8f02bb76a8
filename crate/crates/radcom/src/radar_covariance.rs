//! Design of the radar-only covariance matrix by least-squares beampattern
//! matching under total-power or per-antenna constraints, with optional
//! zero-forcing constraints, via projected gradient descent with Dykstra
//! cyclic projections onto the constraint intersection.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::array_model::{beampattern, Beampattern, IdealPattern, SteeringGrid};
use crate::error::{RadcomError, Result};
use crate::{CMat, CVec};

/// Power constraint carried by a covariance design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMode {
    /// tr(R) = P₀.
    Total,
    /// diag(R) = P₀/N'·1.
    PerAntenna,
}

/// Hermitian PSD radar covariance with its power constraint and fitted scale.
#[derive(Debug, Clone)]
pub struct CovarianceTarget {
    pub r: CMat,
    pub power_mode: PowerMode,
    pub p0: f64,
    /// Radar-side channel columns the design is zero-forced against, if any.
    pub zf_channels: Option<CMat>,
    /// Fitted ideal-pattern scale α ≥ 0.
    pub alpha_scale: f64,
    /// Final least-squares objective value.
    pub objective: f64,
}

impl CovarianceTarget {
    /// Leakage power tr(f_i* f_i^T R) for ZF channel column i.
    pub fn leakage(&self, i: usize) -> f64 {
        let f = self.zf_channels.as_ref().expect("no ZF channels");
        let v = CVec::from_iterator(f.nrows(), f.column(i).iter().map(|z| z.conj()));
        (v.adjoint() * &self.r * &v)[(0, 0)].re
    }
}

/// Convergence knobs for the covariance designer.
#[derive(Debug, Clone)]
pub struct DesignerConfig {
    /// Relative objective-change stopping threshold.
    pub tol: f64,
    pub max_iters: usize,
    /// Dykstra cycles per projection call.
    pub dykstra_max_cycles: usize,
    /// Dykstra per-set residual target.
    pub dykstra_tol: f64,
}

impl Default for DesignerConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_iters: 5000, dykstra_max_cycles: 300, dykstra_tol: 1e-10 }
    }
}

/// Nearest Hermitian PSD matrix in Frobenius norm: Hermitianize, then clamp
/// negative eigenvalues to zero.
pub fn psd_project(m: &CMat) -> CMat {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let n = eig.eigenvalues.len();
    let mut d = CMat::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = Complex64::new(eig.eigenvalues[i].max(0.0), 0.0);
    }
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Closed-form nonnegative least-squares scale: α* minimizing
/// Σ_m (α·P̃_d(θ_m) − p_m)² over α ≥ 0; zero for an all-zero ideal.
pub fn fit_alpha(pattern: &Beampattern, ideal: &IdealPattern) -> Result<f64> {
    if pattern.values.len() != ideal.gains.len() {
        return Err(RadcomError::DimensionMismatch("pattern vs ideal length".into()));
    }
    let denom: f64 = ideal.gains.iter().map(|g| g * g).sum();
    if denom == 0.0 {
        return Ok(0.0);
    }
    let num: f64 = ideal.gains.iter().zip(&pattern.values).map(|(g, p)| g * p).sum();
    Ok((num / denom).max(0.0))
}

fn project_power(r: &CMat, mode: PowerMode, p0: f64) -> CMat {
    let n = r.nrows();
    let mut out = r.clone();
    match mode {
        PowerMode::PerAntenna => {
            let level = p0 / n as f64;
            for i in 0..n {
                out[(i, i)] = Complex64::new(level, 0.0);
            }
        }
        PowerMode::Total => {
            let shift = (r.trace().re - p0) / n as f64;
            for i in 0..n {
                out[(i, i)] -= Complex64::new(shift, 0.0);
            }
        }
    }
    out
}

fn power_residual(r: &CMat, mode: PowerMode, p0: f64) -> f64 {
    let n = r.nrows();
    match mode {
        PowerMode::PerAntenna => {
            let level = p0 / n as f64;
            (0..n)
                .map(|i| (r[(i, i)].re - level).abs().max(r[(i, i)].im.abs()))
                .fold(0.0, f64::max)
        }
        PowerMode::Total => (r.trace().re - p0).abs(),
    }
}

/// Orthogonal projector onto the null space of the conjugated ZF channels,
/// so that P⊥·conj(f_i) = 0 for every user.
fn null_space_projector(zf: &CMat) -> CMat {
    let n = zf.nrows();
    let v = zf.map(|z| z.conj());
    // Gram-based pseudoinverse; K is small and V is generically full rank
    let gram = v.adjoint() * &v;
    let inv = gram
        .try_inverse()
        .expect("ZF channel matrix is rank deficient");
    CMat::identity(n, n) - &v * inv * v.adjoint()
}

fn min_eigenvalue(r: &CMat) -> f64 {
    let herm = (r + r.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Eigenvalue projection onto the scaled simplex {λ ≥ 0, Σλ = c}:
/// λ_i = max(0, d_i − τ) with τ chosen so the sum matches.
fn simplex_project(d: &[f64], c: f64) -> Vec<f64> {
    let mut sorted: Vec<f64> = d.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = (sorted.iter().sum::<f64>() - c) / sorted.len() as f64;
    for (j, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - c) / (j + 1) as f64;
        if j + 1 == sorted.len() || sorted[j + 1] <= t {
            tau = t;
            break;
        }
    }
    d.iter().map(|&v| (v - tau).max(0.0)).collect()
}

/// Exact projection onto {PSD, tr = c}: spectral simplex projection.
fn project_psd_trace(y: &CMat, c: f64) -> CMat {
    let herm = (y + y.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let lam = simplex_project(eig.eigenvalues.as_slice(), c);
    let n = lam.len();
    let mut d = CMat::zeros(n, n);
    for (i, &v) in lam.iter().enumerate() {
        d[(i, i)] = Complex64::new(v, 0.0);
    }
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

struct ConstraintSet {
    mode: PowerMode,
    p0: f64,
    nsp: Option<CMat>,
    /// Orthonormal basis of the zero-forcing subspace range, N'×(N'−K).
    basis: Option<CMat>,
}

impl ConstraintSet {
    fn new(mode: PowerMode, p0: f64, zf_channels: Option<&CMat>) -> Self {
        let nsp = zf_channels.map(null_space_projector);
        let basis = nsp.as_ref().map(|p| {
            let eig = SymmetricEigen::new(p.clone());
            let cols: Vec<_> = (0..eig.eigenvalues.len())
                .filter(|&i| eig.eigenvalues[i] > 0.5)
                .map(|i| eig.eigenvectors.column(i).into_owned())
                .collect();
            CMat::from_columns(&cols)
        });
        Self { mode, p0, nsp, basis }
    }

    fn zf_residual(&self, r: &CMat) -> f64 {
        match &self.nsp {
            Some(p) => (r - p * r * p).norm() / r.norm().max(1.0),
            None => 0.0,
        }
    }

    /// Exact projection onto {PSD ∩ ZF subspace}: clamp inside the subspace.
    fn project_psd_zf(&self, y: &CMat) -> CMat {
        match &self.basis {
            Some(q) => {
                let y11 = q.adjoint() * y * q;
                q * psd_project(&y11) * q.adjoint()
            }
            None => psd_project(y),
        }
    }

    /// Projection onto the full intersection. Exact and closed-form for the
    /// total-power mode (spectral simplex, restricted to the ZF subspace when
    /// present); Dykstra between {PSD ∩ ZF} and {diag = c} otherwise, with
    /// the correction increments run until they settle.
    fn project(&self, y: &CMat, cfg: &DesignerConfig) -> (CMat, f64) {
        match (self.mode, &self.basis) {
            (PowerMode::Total, None) => {
                let x = project_psd_trace(y, self.p0);
                (x, 0.0)
            }
            (PowerMode::Total, Some(q)) => {
                let y11 = q.adjoint() * y * q;
                let x = q * project_psd_trace(&y11, self.p0) * q.adjoint();
                (x, 0.0)
            }
            (PowerMode::PerAntenna, _) => self.dykstra(y, cfg),
        }
    }

    /// Two-set Dykstra: A = {PSD ∩ ZF} (closed form), B = {diag = P₀/N'·1}.
    fn dykstra(&self, start: &CMat, cfg: &DesignerConfig) -> (CMat, f64) {
        let n = start.nrows();
        let mut x = start.clone();
        let mut inc_a = CMat::zeros(n, n);
        let mut inc_b = CMat::zeros(n, n);
        let mut residual = f64::INFINITY;
        let mut prev = x.clone();
        for cycle in 0..cfg.dykstra_max_cycles {
            let y = &x + &inc_a;
            let pa = self.project_psd_zf(&y);
            inc_a = y - &pa;
            let y = &pa + &inc_b;
            let pb = project_power(&y, self.mode, self.p0);
            inc_b = y - &pb;
            x = pb;
            residual = self.max_residual(&x);
            let settled = (&x - &prev).norm() < cfg.dykstra_tol * x.norm().max(1.0);
            if cycle > 0 && settled && residual < 1e-8 {
                break;
            }
            prev = x.clone();
        }
        (x, residual)
    }

    fn max_residual(&self, r: &CMat) -> f64 {
        let scale = self.p0.max(1.0);
        let psd = (-min_eigenvalue(r)).max(0.0) / scale;
        let pow = power_residual(r, self.mode, self.p0) / scale;
        psd.max(pow).max(self.zf_residual(r))
    }
}

/// Largest eigenvalue of the fit Hessian 2·𝒜*𝒜 (with 𝒜(R)_m = a_m^H R a_m)
/// by power iteration; sets the projected-gradient step size.
fn fit_lipschitz(a_cols: &CMat) -> f64 {
    let n = a_cols.nrows();
    let m = a_cols.ncols();
    let mut z = CMat::identity(n, n);
    let mut lam = 1.0;
    for _ in 0..60 {
        // apply 𝒜*𝒜: y_m = a_m^H Z a_m, out = Σ y_m a_m a_m^H
        let mut y = CVec::zeros(m);
        for j in 0..m {
            let a = a_cols.column(j);
            y[j] = Complex64::new((a.adjoint() * &z * a)[(0, 0)].re, 0.0);
        }
        let mut out = CMat::zeros(n, n);
        for j in 0..m {
            let a = a_cols.column(j).into_owned();
            out += &a * a.adjoint() * y[j];
        }
        lam = out.norm();
        if lam < 1e-30 {
            break;
        }
        z = out * Complex64::new(1.0 / lam, 0.0);
    }
    2.0 * lam
}

/// Least-squares beampattern matching of a covariance matrix: alternating
/// closed-form α updates with projected gradient steps on R, the projection
/// being a Dykstra cycle over the PSD cone, the power constraint and the
/// optional zero-forcing subspace.
pub fn design_covariance(
    ideal: &IdealPattern,
    grid: &SteeringGrid,
    power_mode: PowerMode,
    p0: f64,
    zf_channels: Option<&CMat>,
    cfg: &DesignerConfig,
) -> Result<CovarianceTarget> {
    let n = grid.n_antennas;
    if ideal.gains.len() != grid.len() {
        return Err(RadcomError::DimensionMismatch("ideal pattern vs grid".into()));
    }
    if p0 <= 0.0 {
        return Err(RadcomError::Domain("power budget must be > 0".into()));
    }
    if let Some(zf) = zf_channels {
        if zf.nrows() != n {
            return Err(RadcomError::DimensionMismatch("ZF channels vs antenna count".into()));
        }
        if zf.ncols() >= n {
            return Err(RadcomError::Infeasible(format!(
                "zero-forcing needs K < N_R (got K = {}, N_R = {n})",
                zf.ncols()
            )));
        }
    }

    let a_cols = CMat::from_columns(
        &grid.steering.iter().map(|v| v.clone()).collect::<Vec<_>>(),
    );
    let sets = ConstraintSet::new(power_mode, p0, zf_channels);

    let base_step = 1.0 / fit_lipschitz(&a_cols);

    // deterministic complex random start; a symmetric start (e.g. a scaled
    // identity) confines the whole trajectory to real symmetric iterates and
    // can trap the descent in that subspace
    let mut start_rng = crate::channel::trial_rng(0x5eed, 0);
    let g = crate::channel::complex_gaussian(n, n, &mut start_rng);
    let start = (&g * g.adjoint()) * Complex64::new(p0 / (n * n) as f64, 0.0);
    let (mut r, start_residual) = sets.project(&start, cfg);
    if start_residual > 1e-4 {
        return Err(RadcomError::Infeasible(format!(
            "constraint projection stagnated at residual {start_residual}"
        )));
    }

    let evaluate = |r: &CMat| -> Result<(f64, f64, Vec<f64>)> {
        let pattern = beampattern(r, grid)?;
        let alpha = fit_alpha(&pattern, ideal)?;
        let resid: Vec<f64> = pattern
            .values
            .iter()
            .zip(&ideal.gains)
            .map(|(p, g)| p - alpha * g)
            .collect();
        let obj = resid.iter().map(|x| x * x).sum();
        Ok((obj, alpha, resid))
    };

    let (mut objective, mut alpha, mut resid) = evaluate(&r)?;
    // monotone projected gradient with backtracking; a step at or below 1/L
    // is guaranteed to descend, larger steps are accepted opportunistically
    let mut step = 64.0 * base_step;
    for _ in 0..cfg.max_iters {
        // ∇ = A diag(2·resid) A^H, with the diagonal folded into a column
        // scaling of A so no M×M intermediate is built
        let mut scaled = a_cols.clone();
        for (j, &x) in resid.iter().enumerate() {
            for v in scaled.column_mut(j).iter_mut() {
                *v *= 2.0 * x;
            }
        }
        let gradient = scaled * a_cols.adjoint();

        let mut accepted = false;
        while step >= base_step * 0.49 {
            let (next, residual) =
                sets.project(&(&r - &gradient * Complex64::new(step, 0.0)), cfg);
            if residual > 1e-4 {
                // projection did not settle for this trial point; shorten
                step *= 0.5;
                continue;
            }
            let (obj, a, rs) = evaluate(&next)?;
            // sufficient decrease against the gradient mapping; always
            // satisfiable at step <= 1/L, rejects overshooting limit cycles
            let travel = (&next - &r).norm_squared();
            if obj <= objective - 0.25 / step * travel && obj < objective {
                let converged = (objective - obj) <= cfg.tol * objective.max(1e-30);
                r = next;
                objective = obj;
                alpha = a;
                resid = rs;
                step = (step * 2.0).min(1024.0 * base_step);
                accepted = true;
                if converged {
                    return finish(r, sets, power_mode, p0, zf_channels, alpha, objective);
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    finish(r, sets, power_mode, p0, zf_channels, alpha, objective)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    mut r: CMat,
    sets: ConstraintSet,
    power_mode: PowerMode,
    p0: f64,
    zf_channels: Option<&CMat>,
    alpha: f64,
    objective: f64,
) -> Result<CovarianceTarget> {
    // total-power projections are exact; per-antenna results get polished by
    // alternating projections, ending on the PSD∩ZF step so the cone and
    // leakage invariants hold exactly and the diagonal sits within the travel
    if sets.mode == PowerMode::PerAntenna {
        for _ in 0..2_000 {
            r = sets.project_psd_zf(&project_power(&r, sets.mode, sets.p0));
            if sets.max_residual(&r) < 1e-9 {
                break;
            }
        }
    }

    Ok(CovarianceTarget {
        r,
        power_mode,
        p0,
        zf_channels: zf_channels.cloned(),
        alpha_scale: alpha,
        objective,
    })
}
