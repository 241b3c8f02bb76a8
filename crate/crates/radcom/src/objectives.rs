//! SINR quantities, penalty terms and the weighted cost functions with
//! analytic Euclidean gradients, plus the separated-deployment communication
//! objective.
//!
//! Gradients follow the real-inner-product convention: for a real cost f of a
//! complex matrix T, grad g satisfies df = Re tr(g^H dT), so g stacks the
//! partial derivatives with respect to the real and imaginary parts. All
//! penalty gradients carry the (α_i − Γ_i N₀) factor, the literal derivative
//! of the sum-square penalty.

use num_complex::Complex64;

use crate::error::{RadcomError, Result};
use crate::{CMat, CVec};

/// Shared-deployment problem instance: channel, covariance target, SINR
/// thresholds and penalty weights.
#[derive(Debug, Clone)]
pub struct ProblemData {
    /// Channel, N×K, column i is the channel of user i.
    pub h: CMat,
    /// Radar covariance target, Hermitian N×N.
    pub r: CMat,
    /// Per-user SINR thresholds, linear.
    pub gamma: Vec<f64>,
    /// Noise power, linear.
    pub n0: f64,
    /// Weights [radar fit, SINR penalty].
    pub rho: [f64; 2],
    /// Log-sum-exp smoothing parameter.
    pub epsilon: f64,
}

impl ProblemData {
    pub fn new(h: CMat, r: CMat, gamma: Vec<f64>, n0: f64, rho: [f64; 2], epsilon: f64) -> Result<Self> {
        if r.nrows() != h.nrows() || r.ncols() != h.nrows() {
            return Err(RadcomError::DimensionMismatch("covariance vs channel".into()));
        }
        if gamma.len() != h.ncols() {
            return Err(RadcomError::DimensionMismatch("gamma vs user count".into()));
        }
        let herm_err = (&r - r.adjoint()).norm() / r.norm().max(1.0);
        if herm_err > 1e-10 {
            return Err(RadcomError::Domain(format!("R not Hermitian, residual {herm_err}")));
        }
        if gamma.iter().any(|&g| g <= 0.0) {
            return Err(RadcomError::Domain("SINR thresholds must be > 0".into()));
        }
        if n0 <= 0.0 {
            return Err(RadcomError::Domain("noise power must be > 0".into()));
        }
        if rho[0] < 0.0 || rho[1] < 0.0 || (rho[0] == 0.0 && rho[1] == 0.0) {
            return Err(RadcomError::Domain("weights must be >= 0 and not both 0".into()));
        }
        if epsilon <= 0.0 {
            return Err(RadcomError::Domain("epsilon must be > 0".into()));
        }
        Ok(Self { h, r, gamma, n0, rho, epsilon })
    }
}

/// Separated-deployment communication problem: beampattern matching against a
/// fixed zero-forced radar covariance, with the SINR penalty on the
/// communication channel.
#[derive(Debug, Clone)]
pub struct SeparatedProblemData {
    /// Communication channel, N_C×K.
    pub g: CMat,
    /// Radar-side channel, N_R×K.
    pub f: CMat,
    /// Zero-forced radar covariance, N_R×N_R.
    pub r1: CMat,
    /// Radar steering partition, N_R×M.
    pub a1: CMat,
    /// Communication steering partition, N_C×M.
    pub a2: CMat,
    pub gamma: Vec<f64>,
    pub n0: f64,
    pub rho: [f64; 2],
    pub epsilon: f64,
    /// Radar partial pattern a₁^H R₁ a₁ per grid angle, precomputed.
    radar_pattern: Vec<f64>,
    /// Per-user effective noise N₀ + tr(f_i* f_i^T R₁); the leakage term
    /// vanishes under zero-forcing.
    n0_eff: Vec<f64>,
}

impl SeparatedProblemData {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        g: CMat,
        f: CMat,
        r1: CMat,
        a1: CMat,
        a2: CMat,
        gamma: Vec<f64>,
        n0: f64,
        rho: [f64; 2],
        epsilon: f64,
    ) -> Result<Self> {
        let k = g.ncols();
        if f.ncols() != k || gamma.len() != k {
            return Err(RadcomError::DimensionMismatch("user counts disagree".into()));
        }
        if r1.nrows() != f.nrows() || a1.nrows() != f.nrows() || a2.nrows() != g.nrows() {
            return Err(RadcomError::DimensionMismatch("radar-side dimensions disagree".into()));
        }
        if a1.ncols() != a2.ncols() {
            return Err(RadcomError::DimensionMismatch("steering partitions disagree".into()));
        }
        let radar_pattern = (0..a1.ncols())
            .map(|m| {
                let a = a1.column(m);
                (a.adjoint() * &r1 * a)[(0, 0)].re
            })
            .collect();
        let n0_eff = (0..k)
            .map(|i| n0 + radar_leakage(&f, &r1, i))
            .collect();
        Ok(Self { g, f, r1, a1, a2, gamma, n0, rho, epsilon, radar_pattern, n0_eff })
    }

    pub fn radar_pattern(&self) -> &[f64] {
        &self.radar_pattern
    }

    pub fn n0_eff(&self) -> &[f64] {
        &self.n0_eff
    }
}

/// tr(f_i* f_i^T R₁) = f_i^T R₁ f_i*, the radar power leaked onto user i.
pub fn radar_leakage(f: &CMat, r1: &CMat, i: usize) -> f64 {
    let fi = f.column(i);
    let v: CVec = CVec::from_iterator(fi.len(), fi.iter().map(|z| z.conj()));
    (v.adjoint() * r1 * &v)[(0, 0)].re
}

/// K×K matrix of channel-beamformer couplings: entry (i, k) = h_i^T t_k.
fn coupling(t: &CMat, h: &CMat) -> CMat {
    h.transpose() * t
}

/// Received SINR of user i in the shared deployment:
/// |h_i^T t_i|² / (Σ_{k≠i} |h_i^T t_k|² + N₀).
pub fn sinr_shared(t: &CMat, h: &CMat, n0: f64, i: usize) -> f64 {
    let m = coupling(t, h);
    let k = m.ncols();
    let sig = m[(i, i)].norm_sqr();
    let interf: f64 = (0..k).filter(|&j| j != i).map(|j| m[(i, j)].norm_sqr()).sum();
    sig / (interf + n0)
}

/// Received SINR of user i in the separated deployment, including the radar
/// leakage term tr(f_i* f_i^T R₁) in the denominator.
pub fn sinr_separated(w: &CMat, g: &CMat, f: &CMat, r1: &CMat, n0: f64, i: usize) -> f64 {
    let m = coupling(w, g);
    let k = m.ncols();
    let sig = m[(i, i)].norm_sqr();
    let interf: f64 = (0..k).filter(|&j| j != i).map(|j| m[(i, j)].norm_sqr()).sum();
    sig / (interf + radar_leakage(f, r1, i) + n0)
}

/// α_i = (1+Γ_i)·tr(B_i t_i t_i^H) − Γ_i·tr(B_i T T^H) with B_i = h_i* h_i^T.
pub fn alpha(t: &CMat, h: &CMat, gamma: &[f64], i: usize) -> f64 {
    let m = coupling(t, h);
    alpha_from_coupling(&m, gamma, i)
}

fn alpha_from_coupling(m: &CMat, gamma: &[f64], i: usize) -> f64 {
    let total: f64 = (0..m.ncols()).map(|j| m[(i, j)].norm_sqr()).sum();
    (1.0 + gamma[i]) * m[(i, i)].norm_sqr() - gamma[i] * total
}

fn alpha_all(m: &CMat, gamma: &[f64]) -> Vec<f64> {
    (0..m.ncols()).map(|i| alpha_from_coupling(m, gamma, i)).collect()
}

/// G_i = B_i·((1+Γ_i)·t_i e_i^T − Γ_i·T); 2·G_i is the gradient of α_i.
pub fn g_matrix(t: &CMat, h: &CMat, gamma: &[f64], i: usize) -> CMat {
    let m = coupling(t, h);
    let k = t.ncols();
    // row i of the coupling gives h_i^T T; B_i X = conj(h_i)·(h_i^T X)
    let mut u = CVec::zeros(k);
    for j in 0..k {
        u[j] = -Complex64::new(gamma[i], 0.0) * m[(i, j)];
    }
    u[i] += Complex64::new(1.0 + gamma[i], 0.0) * m[(i, i)];
    let hi_conj = CVec::from_iterator(h.nrows(), h.column(i).iter().map(|z| z.conj()));
    hi_conj * u.transpose()
}

/// Σ_i c_i·G_i assembled as conj(H)·U, with U row i = c_i·u_i.
fn weighted_g_sum(m: &CMat, h: &CMat, gamma: &[f64], coeffs: &[f64]) -> CMat {
    let k = m.ncols();
    let mut u = CMat::zeros(k, k);
    for i in 0..k {
        let c = coeffs[i];
        for j in 0..k {
            u[(i, j)] = -Complex64::new(c * gamma[i], 0.0) * m[(i, j)];
        }
        u[(i, i)] += Complex64::new(c * (1.0 + gamma[i]), 0.0) * m[(i, i)];
    }
    let h_conj = h.map(|z| z.conj());
    h_conj * u
}

/// ε·log Σ_i exp(−α_i/ε), computed with max-shift for overflow safety.
pub fn lse(alphas: &[f64], epsilon: f64) -> f64 {
    assert!(epsilon > 0.0, "epsilon must be > 0");
    let m = alphas.iter().map(|&a| -a / epsilon).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = alphas.iter().map(|&a| (-a / epsilon - m).exp()).sum();
    epsilon * (m + sum.ln())
}

/// Softmax weights exp(−α_i/ε)/Σ exp(−α_j/ε), with max-shift.
fn softmax_weights(alphas: &[f64], epsilon: f64) -> Vec<f64> {
    let m = alphas.iter().map(|&a| -a / epsilon).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = alphas.iter().map(|&a| (-a / epsilon - m).exp()).collect();
    let sum: f64 = w.iter().sum();
    w.into_iter().map(|x| x / sum).collect()
}

/// Covariance-fit residual T T^H − R.
fn fit_residual(t: &CMat, r: &CMat) -> CMat {
    t * t.adjoint() - r
}

/// Sum-square penalty cost under the total power constraint:
/// ρ₁‖T T^H − R‖_F² + ρ₂ Σ_i (α_i − Γ_i N₀)².
pub fn f1_cost(t: &CMat, data: &ProblemData) -> f64 {
    let e = fit_residual(t, &data.r);
    let m = coupling(t, &data.h);
    let pen: f64 = alpha_all(&m, &data.gamma)
        .iter()
        .zip(&data.gamma)
        .map(|(&a, &g)| (a - g * data.n0).powi(2))
        .sum();
    data.rho[0] * e.norm().powi(2) + data.rho[1] * pen
}

pub fn f1_grad(t: &CMat, data: &ProblemData) -> CMat {
    let e = fit_residual(t, &data.r);
    let m = coupling(t, &data.h);
    let alphas = alpha_all(&m, &data.gamma);
    let coeffs: Vec<f64> = alphas
        .iter()
        .zip(&data.gamma)
        .map(|(&a, &g)| a - g * data.n0)
        .collect();
    let pen = weighted_g_sum(&m, &data.h, &data.gamma, &coeffs);
    e * t * Complex64::new(4.0 * data.rho[0], 0.0) + pen * Complex64::new(4.0 * data.rho[1], 0.0)
}

/// Smoothed max penalty cost under the total power constraint:
/// ρ₁‖T T^H − R‖_F² + ρ₂·lse(α, ε).
pub fn f2_cost(t: &CMat, data: &ProblemData) -> f64 {
    let e = fit_residual(t, &data.r);
    let m = coupling(t, &data.h);
    let alphas = alpha_all(&m, &data.gamma);
    data.rho[0] * e.norm().powi(2) + data.rho[1] * lse(&alphas, data.epsilon)
}

pub fn f2_grad(t: &CMat, data: &ProblemData) -> CMat {
    let e = fit_residual(t, &data.r);
    let m = coupling(t, &data.h);
    let alphas = alpha_all(&m, &data.gamma);
    let w = softmax_weights(&alphas, data.epsilon);
    let pen = weighted_g_sum(&m, &data.h, &data.gamma, &w);
    e * t * Complex64::new(4.0 * data.rho[0], 0.0) - pen * Complex64::new(2.0 * data.rho[1], 0.0)
}

/// Per-antenna (oblique) counterpart of [`f1_cost`], on X = T̃^H.
pub fn f3_cost(x: &CMat, data: &ProblemData) -> f64 {
    f1_cost(&x.adjoint(), data)
}

pub fn f3_grad(x: &CMat, data: &ProblemData) -> CMat {
    f1_grad(&x.adjoint(), data).adjoint()
}

/// Per-antenna (oblique) counterpart of [`f2_cost`], on X = T̃^H.
pub fn f4_cost(x: &CMat, data: &ProblemData) -> f64 {
    f2_cost(&x.adjoint(), data)
}

pub fn f4_grad(x: &CMat, data: &ProblemData) -> CMat {
    f2_grad(&x.adjoint(), data).adjoint()
}

/// Closed-form nonnegative scale σ* minimizing Σ_m (p_m − σ q_m)² given the
/// communication pattern p and radar pattern q.
pub fn fit_sigma(comm_pattern: &[f64], radar_pattern: &[f64]) -> f64 {
    let qq: f64 = radar_pattern.iter().map(|q| q * q).sum();
    if qq == 0.0 {
        return 0.0;
    }
    let qp: f64 = radar_pattern.iter().zip(comm_pattern).map(|(q, p)| q * p).sum();
    (qp / qq).max(0.0)
}

fn comm_pattern(w: &CMat, a2: &CMat) -> Vec<f64> {
    let wa = w.adjoint() * a2; // K×M
    (0..a2.ncols()).map(|m| wa.column(m).norm_squared()).collect()
}

/// Separated-deployment communication cost: beampattern match against the
/// σ-scaled radar pattern plus the sum-square SINR penalty on G. σ is
/// eliminated in closed form at every evaluation.
pub fn zf_comm_cost(w: &CMat, data: &SeparatedProblemData) -> f64 {
    let p = comm_pattern(w, &data.a2);
    let sigma = fit_sigma(&p, &data.radar_pattern);
    let fit: f64 = p
        .iter()
        .zip(&data.radar_pattern)
        .map(|(pm, qm)| (pm - sigma * qm).powi(2))
        .sum();
    let m = coupling(w, &data.g);
    let pen: f64 = alpha_all(&m, &data.gamma)
        .iter()
        .enumerate()
        .map(|(i, &a)| (a - data.gamma[i] * data.n0_eff[i]).powi(2))
        .sum();
    data.rho[0] * fit + data.rho[1] * pen
}

/// Gradient of [`zf_comm_cost`]. Holding σ at its inner minimizer is exact
/// (Danskin), so the partial gradient in W is the total gradient.
pub fn zf_comm_grad(w: &CMat, data: &SeparatedProblemData) -> CMat {
    let p = comm_pattern(w, &data.a2);
    let sigma = fit_sigma(&p, &data.radar_pattern);
    // fit term: 4 Σ_m (p_m − σ q_m) a2_m a2_m^H W = 4 A2 D A2^H W, with the
    // diagonal applied by row-scaling A2^H W so no M×M intermediate is built
    let mut s = data.a2.adjoint() * w; // M×K
    for m in 0..s.nrows() {
        let c = p[m] - sigma * data.radar_pattern[m];
        for v in s.row_mut(m).iter_mut() {
            *v *= c;
        }
    }
    let fit_grad = &data.a2 * s;

    let m = coupling(w, &data.g);
    let alphas = alpha_all(&m, &data.gamma);
    let coeffs: Vec<f64> = alphas
        .iter()
        .enumerate()
        .map(|(i, &a)| a - data.gamma[i] * data.n0_eff[i])
        .collect();
    let pen = weighted_g_sum(&m, &data.g, &data.gamma, &coeffs);
    fit_grad * Complex64::new(4.0 * data.rho[0], 0.0)
        + pen * Complex64::new(4.0 * data.rho[1], 0.0)
}

/// Cost/gradient pair used by the solver; keeps one coupling/residual
/// computation per evaluation site.
pub fn cost_and_grad<'a>(
    cost: impl Fn(&CMat, &ProblemData) -> f64 + 'a,
    grad: impl Fn(&CMat, &ProblemData) -> CMat + 'a,
    data: &'a ProblemData,
) -> impl Fn(&CMat) -> (f64, CMat) + 'a {
    move |t| (cost(t, data), grad(t, data))
}

/// Sanity identity used in tests and the harness: α_i − Γ_i N₀ has the same
/// sign as γ_i − Γ_i.
pub fn alpha_offset(t: &CMat, h: &CMat, gamma: &[f64], n0: f64, i: usize) -> f64 {
    alpha(t, h, gamma, i) - gamma[i] * n0
}
