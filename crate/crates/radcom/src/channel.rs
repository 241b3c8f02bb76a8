//! Deterministic generation of Rayleigh downlink channels and their
//! separated-deployment partition.
//!
//! Entries are i.i.d. circularly-symmetric complex Gaussian with unit
//! variance, sampled as (x + j·y)/√2 with x, y standard normal. The generator
//! is ChaCha8 keyed by the experiment seed with the trial index as the stream,
//! so Monte Carlo trials are order-independent.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{RadcomError, Result};
use crate::CMat;

/// One Rayleigh channel draw. Column i is the channel to user i.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h: CMat,
    pub seed: u64,
}

/// Separated-deployment split of a channel: radar-antenna rows F on top,
/// communication-antenna rows G below.
#[derive(Debug, Clone)]
pub struct PartitionedChannel {
    pub f: CMat,
    pub g: CMat,
}

/// RNG for a given (experiment seed, trial) pair. Stream separation keeps
/// trials independent of their execution order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    // stream width is u64 in this rand_chacha release
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Fill an n×k matrix with i.i.d. CN(0, 1) entries from the given RNG.
pub fn complex_gaussian(n: usize, k: usize, rng: &mut ChaCha8Rng) -> CMat {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    // column-major fill so the layout matches the storage order
    CMat::from_fn(n, k, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * scale, im * scale)
    })
}

/// Draw an n×k Rayleigh channel. Same (n, k, seed) always yields the same
/// matrix.
pub fn generate_channel(n: usize, k: usize, seed: u64) -> ChannelRealization {
    let mut rng = trial_rng(seed, 0);
    ChannelRealization { h: complex_gaussian(n, k, &mut rng), seed }
}

/// Split H into the first `n_r` rows (radar) and the last `n_c` rows
/// (communication).
pub fn partition(ch: &ChannelRealization, n_r: usize, n_c: usize) -> Result<PartitionedChannel> {
    let n = ch.h.nrows();
    if n_r + n_c != n {
        return Err(RadcomError::DimensionMismatch(format!(
            "n_r + n_c = {} does not match N = {n}",
            n_r + n_c
        )));
    }
    Ok(PartitionedChannel {
        f: ch.h.rows(0, n_r).into_owned(),
        g: ch.h.rows(n_r, n_c).into_owned(),
    })
}

/// Write a complex matrix as CSV of interleaved real,imag values, row-major.
pub fn dump_matrix_csv(m: &CMat, path: &Path) -> Result<()> {
    let mut f = File::create(path)?;
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .flat_map(|c| {
                let z = m[(r, c)];
                [format!("{:.17e}", z.re), format!("{:.17e}", z.im)]
            })
            .collect();
        writeln!(f, "{}", row.join(","))?;
    }
    Ok(())
}

/// Read a complex matrix written by [`dump_matrix_csv`].
pub fn load_matrix_csv(path: &Path) -> Result<CMat> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| RadcomError::Numeric(format!("bad CSV float: {e}")))
            })
            .collect::<Result<_>>()?;
        if vals.len() % 2 != 0 {
            return Err(RadcomError::Numeric("odd number of CSV values in row".into()));
        }
        rows.push(vals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect());
    }
    if rows.is_empty() {
        return Err(RadcomError::Numeric("empty matrix CSV".into()));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(RadcomError::DimensionMismatch("ragged matrix CSV".into()));
    }
    Ok(CMat::from_fn(rows.len(), ncols, |r, c| rows[r][c]))
}
