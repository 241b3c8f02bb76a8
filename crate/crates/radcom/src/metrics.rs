//! Deployment-level evaluation: composite beampatterns for the separated
//! split, PSLR/MSE trade-off points and achieved-SINR statistics.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::array_model::{Beampattern, SteeringGrid};
use crate::error::{RadcomError, Result};
use crate::objectives::sinr_shared;
use crate::{lin_to_db, CMat};

/// One point of a PSLR-vs-SINR trade-off sweep.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TradeoffPoint {
    pub rho: [f64; 2],
    pub avg_sinr_db: f64,
    pub pslr_db: f64,
    pub mse: f64,
    pub trials: usize,
}

impl TradeoffPoint {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(RadcomError::Domain("trade-off point needs trials >= 1".into()));
        }
        if !(self.avg_sinr_db.is_finite() && self.pslr_db.is_finite() && self.mse.is_finite()) {
            return Err(RadcomError::Numeric("non-finite trade-off point".into()));
        }
        Ok(())
    }
}

/// Pattern of the separated deployment: the radar subarray radiates R₁ and
/// the communication subarray radiates W·W^H, so the gain at θ is
/// a₁^H R₁ a₁ + a₂^H (W W^H) a₂ with a = [a₁; a₂].
pub fn composite_pattern_separated(
    r1: &CMat,
    w: &CMat,
    grid: &SteeringGrid,
) -> Result<Beampattern> {
    let n_r = r1.nrows();
    let n_c = w.nrows();
    if r1.ncols() != n_r {
        return Err(RadcomError::DimensionMismatch("radar covariance not square".into()));
    }
    if n_r + n_c != grid.n_antennas {
        return Err(RadcomError::DimensionMismatch(format!(
            "subarray split {n_r}+{n_c} does not match grid N = {}",
            grid.n_antennas
        )));
    }
    let cw = w * w.adjoint();
    let values = grid
        .steering
        .iter()
        .map(|a| {
            let a1 = a.rows(0, n_r);
            let a2 = a.rows(n_r, n_c);
            let radar = (a1.adjoint() * r1 * a1)[(0, 0)].re;
            let comm = (a2.adjoint() * &cw * a2)[(0, 0)].re;
            radar + comm
        })
        .collect();
    Ok(Beampattern { values })
}

/// Per-user achieved SINRs with mean/min and a 0.5 dB histogram.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SinrStats {
    /// Achieved SINR per user, dB.
    pub per_user_db: Vec<f64>,
    pub mean_db: f64,
    pub min_db: f64,
    /// (bin lower edge in dB, count) at 0.5 dB width.
    pub histogram: Vec<(f64, usize)>,
}

const HIST_BIN_DB: f64 = 0.5;

/// Downlink SINR of every user for beamformer T, plus summary statistics.
pub fn achieved_sinr_stats(t: &CMat, h: &CMat, n0: f64) -> Result<SinrStats> {
    if t.ncols() != h.ncols() || t.nrows() != h.nrows() {
        return Err(RadcomError::DimensionMismatch("beamformer vs channel shape".into()));
    }
    let k = h.ncols();
    if k == 0 {
        return Err(RadcomError::Domain("SINR statistics need at least one user".into()));
    }
    let per_user_db: Vec<f64> =
        (0..k).map(|i| lin_to_db(sinr_shared(t, h, n0, i))).collect();
    Ok(summarize(per_user_db))
}

/// Build [`SinrStats`] from already-computed per-sample SINRs in dB.
pub fn summarize(per_user_db: Vec<f64>) -> SinrStats {
    let mean_db = per_user_db.iter().sum::<f64>() / per_user_db.len() as f64;
    let min_db = per_user_db.iter().copied().fold(f64::INFINITY, f64::min);
    let mut counts = std::collections::BTreeMap::new();
    for &v in &per_user_db {
        let bin = (v / HIST_BIN_DB).floor() as i64;
        *counts.entry(bin).or_insert(0usize) += 1;
    }
    let histogram = counts
        .into_iter()
        .map(|(bin, c)| (bin as f64 * HIST_BIN_DB, c))
        .collect();
    SinrStats { per_user_db, mean_db, min_db, histogram }
}

/// CSV rows `trial,user,sinr_db` for per-trial SINR lists.
pub fn write_sinr_csv(per_trial: &[Vec<f64>], path: &Path) -> Result<()> {
    let mut f = File::create(path)?;
    writeln!(f, "trial,user,sinr_db")?;
    for (trial, users) in per_trial.iter().enumerate() {
        for (user, v) in users.iter().enumerate() {
            writeln!(f, "{trial},{user},{v:.12e}")?;
        }
    }
    Ok(())
}

/// CSV rows `bin_lower_db,count` for a pooled histogram.
pub fn write_hist_csv(stats: &SinrStats, path: &Path) -> Result<()> {
    let mut f = File::create(path)?;
    writeln!(f, "bin_lower_db,count")?;
    for (edge, count) in &stats.histogram {
        writeln!(f, "{edge:.1},{count}")?;
    }
    Ok(())
}

/// CSV rows `rho1,rho2,avg_sinr_db,pslr_db,mse` for a sweep.
pub fn write_tradeoff_csv(points: &[TradeoffPoint], path: &Path) -> Result<()> {
    let mut f = File::create(path)?;
    writeln!(f, "rho1,rho2,avg_sinr_db,pslr_db,mse")?;
    for p in points {
        writeln!(
            f,
            "{},{},{:.12e},{:.12e},{:.12e}",
            p.rho[0], p.rho[1], p.avg_sinr_db, p.pslr_db, p.mse
        )?;
    }
    Ok(())
}

/// CSV rows `theta_deg,gain` for a beampattern.
pub fn write_pattern_csv(grid: &SteeringGrid, pattern: &Beampattern, path: &Path) -> Result<()> {
    if grid.len() != pattern.values.len() {
        return Err(RadcomError::DimensionMismatch("grid vs pattern length".into()));
    }
    let mut f = File::create(path)?;
    writeln!(f, "theta_deg,gain")?;
    for (&th, &g) in grid.angles.iter().zip(&pattern.values) {
        writeln!(f, "{:.6},{g:.12e}", th.to_degrees())?;
    }
    Ok(())
}
