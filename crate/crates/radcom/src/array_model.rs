//! Uniform linear array geometry, steering vectors, beampattern evaluation,
//! ideal-pattern construction and pattern-quality metrics.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{RadcomError, Result};
use crate::{CMat, CVec};

/// Angular grid over [−π/2, π/2] with precomputed steering vectors.
#[derive(Debug, Clone)]
pub struct SteeringGrid {
    /// Grid angles in radians, strictly increasing.
    pub angles: Vec<f64>,
    /// Antenna spacing in wavelengths.
    pub spacing: f64,
    /// Number of antennas.
    pub n_antennas: usize,
    /// One steering vector per grid angle.
    pub steering: Vec<CVec>,
}

impl SteeringGrid {
    /// Grid with `m` uniformly spaced angles covering [−π/2, π/2] inclusive.
    pub fn uniform(n_antennas: usize, spacing: f64, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(RadcomError::Domain("grid needs at least 2 points".into()));
        }
        let angles: Vec<f64> = (0..m)
            .map(|i| -PI / 2.0 + PI * i as f64 / (m - 1) as f64)
            .collect();
        Self::from_angles(angles, n_antennas, spacing)
    }

    pub fn from_angles(angles: Vec<f64>, n_antennas: usize, spacing: f64) -> Result<Self> {
        if angles.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RadcomError::Domain("grid angles must be strictly increasing".into()));
        }
        let steering = angles
            .iter()
            .map(|&th| steering_vector(th, n_antennas, spacing))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { angles, spacing, n_antennas, steering })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Index of the grid angle closest to `theta`.
    pub fn nearest(&self, theta: f64) -> usize {
        self.angles
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - theta).abs().partial_cmp(&(b.1 - theta).abs()).unwrap()
            })
            .map(|(i, _)| i)
            .unwrap()
    }
}

/// A 0/1 rectangular mask of desired beampattern gains on a grid.
#[derive(Debug, Clone)]
pub struct IdealPattern {
    /// Gain at each grid angle, 0 or 1.
    pub gains: Vec<f64>,
    /// Beams as (center angle, half-width) pairs in radians.
    pub beams: Vec<(f64, f64)>,
}

/// Transmit power versus angle, linear power units.
#[derive(Debug, Clone)]
pub struct Beampattern {
    pub values: Vec<f64>,
}

/// Array phase response toward `theta`: entry k is exp(j·2π·delta·k·sin θ).
pub fn steering_vector(theta: f64, n: usize, delta: f64) -> Result<CVec> {
    if n < 1 {
        return Err(RadcomError::Domain("antenna count must be >= 1".into()));
    }
    if delta <= 0.0 {
        return Err(RadcomError::Domain("antenna spacing must be > 0".into()));
    }
    if !(-PI / 2.0..=PI / 2.0).contains(&theta) {
        return Err(RadcomError::Domain(format!(
            "steering angle {theta} outside [-pi/2, pi/2]"
        )));
    }
    let phase_inc = 2.0 * PI * delta * theta.sin();
    Ok(CVec::from_iterator(n, (0..n).map(|k| {
        Complex64::from_polar(1.0, phase_inc * k as f64)
    })))
}

/// Beampattern of a Hermitian covariance: value m is a(θ_m)^H R a(θ_m).
pub fn beampattern(r: &CMat, grid: &SteeringGrid) -> Result<Beampattern> {
    if r.nrows() != grid.n_antennas || r.ncols() != grid.n_antennas {
        return Err(RadcomError::DimensionMismatch(format!(
            "covariance is {}x{}, grid expects {0}x{0} with N = {}",
            r.nrows(),
            r.ncols(),
            grid.n_antennas
        )));
    }
    let scale = r.norm().max(1.0);
    let values = grid
        .steering
        .iter()
        .map(|a| {
            let q = (a.adjoint() * r * a)[(0, 0)];
            debug_assert!(q.im.abs() < 1e-9 * scale, "imaginary residue {}", q.im);
            q.re
        })
        .collect();
    Ok(Beampattern { values })
}

/// Rectangular 0/1 mask: gain 1 wherever |θ_m − center| ≤ half_width for some
/// beam, 0 elsewhere. Empty beam list yields an all-zero mask.
pub fn ideal_pattern(beams: &[(f64, f64)], grid: &SteeringGrid) -> IdealPattern {
    let gains = grid
        .angles
        .iter()
        .map(|&th| {
            let hit = beams.iter().any(|&(c, hw)| (th - c).abs() <= hw + 1e-12);
            if hit {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    IdealPattern { gains, beams: beams.to_vec() }
}

/// Mainlobe indicator for PSLR: grid points within each beam's half-width plus
/// one guard point on either side.
pub fn mainlobe_mask(beams: &[(f64, f64)], grid: &SteeringGrid) -> Vec<bool> {
    let mut mask = vec![false; grid.len()];
    for &(c, hw) in beams {
        let inside: Vec<usize> = grid
            .angles
            .iter()
            .enumerate()
            .filter(|(_, &th)| (th - c).abs() <= hw + 1e-12)
            .map(|(i, _)| i)
            .collect();
        if let (Some(&lo), Some(&hi)) = (inside.first(), inside.last()) {
            let lo = lo.saturating_sub(1);
            let hi = (hi + 1).min(grid.len() - 1);
            for slot in mask.iter_mut().take(hi + 1).skip(lo) {
                *slot = true;
            }
        }
    }
    mask
}

/// Peak-to-sidelobe ratio in dB: 10·log10(max mainlobe / max sidelobe).
pub fn pslr(pattern: &Beampattern, mainlobe: &[bool]) -> Result<f64> {
    if pattern.values.len() != mainlobe.len() {
        return Err(RadcomError::DimensionMismatch(
            "pattern and mainlobe mask lengths differ".into(),
        ));
    }
    let peak = |want: bool| {
        pattern
            .values
            .iter()
            .zip(mainlobe)
            .filter(|(_, &m)| m == want)
            .map(|(&v, _)| v)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let main = peak(true);
    let side = peak(false);
    if !main.is_finite() || !side.is_finite() {
        return Err(RadcomError::EmptyRegion(
            "PSLR needs at least one mainlobe and one sidelobe point".into(),
        ));
    }
    Ok(10.0 * (main / side).log10())
}

/// Mean squared error between two beampatterns over the grid.
pub fn pattern_mse(p_radar: &Beampattern, p_radcom: &Beampattern) -> Result<f64> {
    if p_radar.values.len() != p_radcom.values.len() {
        return Err(RadcomError::DimensionMismatch("pattern lengths differ".into()));
    }
    let m = p_radar.values.len() as f64;
    let sum: f64 = p_radar
        .values
        .iter()
        .zip(&p_radcom.values)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / m)
}
