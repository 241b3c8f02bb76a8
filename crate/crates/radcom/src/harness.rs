//! Experiment runner: configuration, preset bundles, Monte Carlo
//! orchestration across trials, and CSV/JSON artifact emission.

use std::f64::consts::PI;
use std::fs::File;
use std::path::Path;

use rayon::prelude::*;

use crate::array_model::{
    beampattern, ideal_pattern, mainlobe_mask, pattern_mse, pslr, Beampattern, IdealPattern,
    SteeringGrid,
};
use crate::channel::{partition, trial_rng};
use crate::error::{RadcomError, Result};
use crate::manifolds::{Manifold, Oblique, Sphere};
use crate::metrics::{
    achieved_sinr_stats, composite_pattern_separated, summarize, write_hist_csv,
    write_pattern_csv, write_sinr_csv, write_tradeoff_csv, SinrStats, TradeoffPoint,
};
use crate::objectives::{
    cost_and_grad, f1_cost, f1_grad, f2_cost, f2_grad, f3_cost, f3_grad, f4_cost, f4_grad,
    sinr_separated, zf_comm_cost, zf_comm_grad, ProblemData, SeparatedProblemData,
};
use crate::radar_covariance::{design_covariance, CovarianceTarget, DesignerConfig, PowerMode};
use crate::rcg_solver::{
    flops_per_iteration, rcg_minimize, ArmijoParams, SolverConfig, SolverReport, Termination,
};
use crate::{db_to_lin, dbm_to_mw, CMat};

/// Antenna split and power split of the transmitter.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Deployment {
    Shared,
    /// Radar/communication subarrays with linear (mW) power split.
    Separated { n_r: usize, n_c: usize, p_r: f64, p_c: f64 },
}

/// SINR penalty flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    SumSquare,
    Max,
}

/// One beam of the desired radar pattern, degrees.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpec {
    pub center_deg: f64,
    /// Full width; the rectangular mask extends half this on each side.
    pub width_deg: f64,
}

/// Serializable solver knobs; converted to [`SolverConfig`] per run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub delta: f64,
    pub i_max: usize,
    pub initial_step: f64,
    pub contraction: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            delta: 1e-6,
            i_max: 1000,
            initial_step: 1.0,
            contraction: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 50,
        }
    }
}

impl SolverSettings {
    pub fn to_config(&self) -> SolverConfig {
        SolverConfig {
            delta: self.delta,
            i_max: self.i_max,
            armijo: ArmijoParams {
                initial_step: self.initial_step,
                contraction: self.contraction,
                sufficient_decrease: self.sufficient_decrease,
                max_backtracks: self.max_backtracks,
            },
            pr_plus: true,
        }
    }
}

/// Full experiment description; JSON fields are snake_case and unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_antennas: usize,
    pub n_users: usize,
    pub p0_dbm: f64,
    pub n0_dbm: f64,
    /// Per-user SINR targets in dB; empty means 10 dB for every user.
    pub gamma_db: Vec<f64>,
    pub deployment: Deployment,
    pub power_mode: PowerMode,
    pub penalty: Penalty,
    /// Weights [radar fit, SINR penalty].
    pub rho: [f64; 2],
    pub epsilon: f64,
    pub grid_size: usize,
    pub beams: Vec<BeamSpec>,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverSettings,
    /// Weight pairs for `sweep`; unused by single runs.
    pub rho_sweep: Vec<[f64; 2]>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_antennas: 20,
            n_users: 4,
            p0_dbm: 20.0,
            n0_dbm: 0.0,
            gamma_db: Vec::new(),
            deployment: Deployment::Shared,
            power_mode: PowerMode::Total,
            penalty: Penalty::SumSquare,
            rho: [10.0, 1.0],
            epsilon: 0.1,
            grid_size: 181,
            beams: vec![BeamSpec { center_deg: 0.0, width_deg: 10.0 }],
            trials: 100,
            seed: 0,
            solver: SolverSettings::default(),
            rho_sweep: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_antennas == 0 || self.n_users == 0 {
            return Err(RadcomError::Config("need at least one antenna and one user".into()));
        }
        if self.trials < 1 {
            return Err(RadcomError::Config("trials must be >= 1".into()));
        }
        if !self.gamma_db.is_empty() && self.gamma_db.len() != self.n_users {
            return Err(RadcomError::Config(format!(
                "gamma_db has {} entries for {} users",
                self.gamma_db.len(),
                self.n_users
            )));
        }
        if !(self.p0_dbm.is_finite() && self.n0_dbm.is_finite()) {
            return Err(RadcomError::Config("power fields must be finite".into()));
        }
        if let Deployment::Separated { n_r, n_c, p_r, p_c } = self.deployment {
            if n_r + n_c != self.n_antennas {
                return Err(RadcomError::Config(format!(
                    "n_r + n_c = {} does not match n_antennas = {}",
                    n_r + n_c,
                    self.n_antennas
                )));
            }
            let p0 = dbm_to_mw(self.p0_dbm);
            if (p_r + p_c - p0).abs() > 1e-6 * p0 {
                return Err(RadcomError::Config(format!(
                    "p_r + p_c = {} does not match P0 = {p0}",
                    p_r + p_c
                )));
            }
            if p_r <= 0.0 || p_c <= 0.0 {
                return Err(RadcomError::Config("subarray powers must be > 0".into()));
            }
        }
        self.solver.to_config().validate()
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_reader(File::open(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn gamma_lin(&self) -> Vec<f64> {
        if self.gamma_db.is_empty() {
            vec![db_to_lin(10.0); self.n_users]
        } else {
            self.gamma_db.iter().map(|&g| db_to_lin(g)).collect()
        }
    }

    pub fn p0_lin(&self) -> f64 {
        dbm_to_mw(self.p0_dbm)
    }

    pub fn n0_lin(&self) -> f64 {
        dbm_to_mw(self.n0_dbm)
    }

    pub fn grid(&self) -> Result<SteeringGrid> {
        SteeringGrid::uniform(self.n_antennas, 0.5, self.grid_size)
    }

    pub fn beams_rad(&self) -> Vec<(f64, f64)> {
        self.beams
            .iter()
            .map(|b| (b.center_deg * PI / 180.0, b.width_deg / 2.0 * PI / 180.0))
            .collect()
    }
}

/// Named config bundles mirroring the experiment suite.
pub const PRESET_NAMES: [&str; 6] = [
    "fig3_multibeam",
    "fig5_tradeoff",
    "fig7_8_rho_sweep",
    "fig9_sinr_hist",
    "fig10_convergence",
    "fig12_perf_vs_time",
];

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    // narrow masks keep each least-squares beam single-peaked at its center
    let five_beams = || {
        [-60.0, -36.0, 0.0, 36.0, 60.0]
            .iter()
            .map(|&c| BeamSpec { center_deg: c, width_deg: 5.0 })
            .collect::<Vec<_>>()
    };
    let cfg = match name {
        "fig3_multibeam" => ExperimentConfig {
            beams: five_beams(),
            trials: 1,
            ..Default::default()
        },
        "fig5_tradeoff" => ExperimentConfig {
            trials: 100,
            ..Default::default()
        },
        "fig7_8_rho_sweep" => ExperimentConfig {
            trials: 20,
            rho_sweep: vec![
                [100.0, 1.0],
                [30.0, 1.0],
                [10.0, 1.0],
                [3.0, 1.0],
                [1.0, 1.0],
                [1.0, 3.0],
                [1.0, 10.0],
            ],
            ..Default::default()
        },
        "fig9_sinr_hist" => ExperimentConfig {
            n_users: 10,
            gamma_db: vec![18.0; 10],
            rho: [58.0, 1.0],
            trials: 100,
            ..Default::default()
        },
        "fig10_convergence" => ExperimentConfig {
            n_users: 6,
            trials: 1,
            ..Default::default()
        },
        "fig12_perf_vs_time" => ExperimentConfig {
            trials: 20,
            rho_sweep: vec![[10.0, 1.0], [3.0, 1.0], [1.0, 1.0], [1.0, 3.0]],
            ..Default::default()
        },
        other => {
            return Err(RadcomError::Config(format!(
                "unknown preset '{other}'; expected one of {PRESET_NAMES:?}"
            )))
        }
    };
    Ok(cfg)
}

type CostFn = fn(&CMat, &ProblemData) -> f64;
type GradFn = fn(&CMat, &ProblemData) -> CMat;

/// Outcome of one Monte Carlo trial.
#[derive(Debug, Clone)]
struct TrialResult {
    beamformer: CMat,
    report: SolverReport,
    pattern: Beampattern,
    reference: Beampattern,
    sinr_db: Vec<f64>,
    pslr_db: f64,
    mse: f64,
}

/// Aggregated run: trial-0 artifacts plus Monte Carlo summaries.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub beamformer: CMat,
    pub report: SolverReport,
    pub tradeoff: TradeoffPoint,
    /// Achieved SINRs in dB, indexed [trial][user].
    pub per_trial_sinr_db: Vec<Vec<f64>>,
    /// RadCom pattern of trial 0.
    pub pattern: Beampattern,
    /// Radar-only reference pattern used for the MSE (trial 0 design).
    pub reference_pattern: Beampattern,
    pub terminations: Vec<Termination>,
}

impl RunOutput {
    pub fn pooled_sinr_stats(&self) -> SinrStats {
        summarize(self.per_trial_sinr_db.iter().flatten().copied().collect())
    }
}

fn aggregate(config: &ExperimentConfig, results: Vec<TrialResult>) -> RunOutput {
    let trials = results.len();
    let avg_sinr_db = results
        .iter()
        .flat_map(|r| r.sinr_db.iter())
        .sum::<f64>()
        / (trials * config.n_users) as f64;
    let pslr_db = results.iter().map(|r| r.pslr_db).sum::<f64>() / trials as f64;
    let mse = results.iter().map(|r| r.mse).sum::<f64>() / trials as f64;
    let tradeoff =
        TradeoffPoint { rho: config.rho, avg_sinr_db, pslr_db, mse, trials };
    let per_trial_sinr_db = results.iter().map(|r| r.sinr_db.clone()).collect();
    let terminations = results.iter().map(|r| r.report.termination).collect();
    let first = results.into_iter().next().expect("at least one trial");
    RunOutput {
        beamformer: first.beamformer,
        report: first.report,
        tradeoff,
        per_trial_sinr_db,
        pattern: first.pattern,
        reference_pattern: first.reference,
        terminations,
    }
}

/// Shared-deployment pipeline: one radar covariance design for the whole run,
/// then per-trial channel draw, weighted RCG solve and metric evaluation.
pub fn run_shared(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    if config.deployment != Deployment::Shared {
        return Err(RadcomError::Config("run_shared needs a shared deployment".into()));
    }
    let grid = config.grid()?;
    let beams = config.beams_rad();
    let ideal = ideal_pattern(&beams, &grid);
    let design = design_covariance(
        &ideal,
        &grid,
        config.power_mode,
        config.p0_lin(),
        None,
        &DesignerConfig::default(),
    )?;
    let reference = beampattern(&design.r, &grid)?;
    let mainlobe = mainlobe_mask(&beams, &grid);

    let results: Vec<Result<TrialResult>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| shared_trial(config, &grid, &design, &reference, &mainlobe, trial as u64))
        .collect();
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(aggregate(config, results))
}

fn shared_trial(
    config: &ExperimentConfig,
    grid: &SteeringGrid,
    design: &CovarianceTarget,
    reference: &Beampattern,
    mainlobe: &[bool],
    trial: u64,
) -> Result<TrialResult> {
    let n = config.n_antennas;
    let k = config.n_users;
    let mut rng = trial_rng(config.seed, trial);
    let h = crate::channel::complex_gaussian(n, k, &mut rng);
    let data = ProblemData::new(
        h.clone(),
        design.r.clone(),
        config.gamma_lin(),
        config.n0_lin(),
        config.rho,
        config.epsilon,
    )?;
    let solver_cfg = config.solver.to_config();

    let (t, report) = match config.power_mode {
        PowerMode::Total => {
            let manifold = Sphere::new(n, k, config.p0_lin())?;
            let start = manifold.random_point(&mut rng)?;
            let (cost, grad): (CostFn, GradFn) = match config.penalty {
                Penalty::SumSquare => (f1_cost, f1_grad),
                Penalty::Max => (f2_cost, f2_grad),
            };
            rcg_minimize(cost_and_grad(cost, grad, &data), &manifold, start, &solver_cfg)?
        }
        PowerMode::PerAntenna => {
            let manifold = Oblique::new(k, n, config.p0_lin())?;
            let start = manifold.random_point(&mut rng)?;
            let (cost, grad): (CostFn, GradFn) = match config.penalty {
                Penalty::SumSquare => (f3_cost, f3_grad),
                Penalty::Max => (f4_cost, f4_grad),
            };
            let (x, report) =
                rcg_minimize(cost_and_grad(cost, grad, &data), &manifold, start, &solver_cfg)?;
            (x.adjoint(), report)
        }
    };

    let pattern = beampattern(&(&t * t.adjoint()), grid)?;
    let stats = achieved_sinr_stats(&t, &h, config.n0_lin())?;
    Ok(TrialResult {
        beamformer: t,
        report,
        pslr_db: pslr(&pattern, mainlobe)?,
        mse: pattern_mse(reference, &pattern)?,
        pattern,
        sinr_db: stats.per_user_db,
        reference: reference.clone(),
    })
}

/// Separated-deployment pipeline: per-trial zero-forced radar covariance on
/// the radar subarray, weighted RCG solve for the communication beamformer on
/// the √P_C sphere, composite-pattern metrics.
pub fn run_separated(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let Deployment::Separated { n_r, n_c, p_r, p_c } = config.deployment else {
        return Err(RadcomError::Config("run_separated needs a separated deployment".into()));
    };
    if config.n_users >= n_r {
        return Err(RadcomError::Infeasible(format!(
            "zero-forcing needs K < N_R (got K = {}, N_R = {n_r})",
            config.n_users
        )));
    }
    let grid = config.grid()?;
    let beams = config.beams_rad();
    let sub_grid = SteeringGrid::uniform(n_r, 0.5, config.grid_size)?;
    let ideal = ideal_pattern(&beams, &sub_grid);
    let mainlobe = mainlobe_mask(&beams, &grid);
    let a_full = CMat::from_columns(&grid.steering.iter().cloned().collect::<Vec<_>>());
    let a1 = a_full.rows(0, n_r).into_owned();
    let a2 = a_full.rows(n_r, n_c).into_owned();

    let results: Vec<Result<TrialResult>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            separated_trial(
                config, &grid, &sub_grid, &ideal, &mainlobe, &a1, &a2, n_r, n_c, p_r, p_c,
                trial as u64,
            )
        })
        .collect();
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(aggregate(config, results))
}

#[allow(clippy::too_many_arguments)]
fn separated_trial(
    config: &ExperimentConfig,
    grid: &SteeringGrid,
    sub_grid: &SteeringGrid,
    ideal: &IdealPattern,
    mainlobe: &[bool],
    a1: &CMat,
    a2: &CMat,
    n_r: usize,
    n_c: usize,
    p_r: f64,
    p_c: f64,
    trial: u64,
) -> Result<TrialResult> {
    let k = config.n_users;
    let mut rng = trial_rng(config.seed, trial);
    let h = crate::channel::complex_gaussian(config.n_antennas, k, &mut rng);
    let ch = crate::channel::ChannelRealization { h, seed: config.seed };
    let parts = partition(&ch, n_r, n_c)?;

    let design = design_covariance(
        ideal,
        sub_grid,
        config.power_mode,
        p_r,
        Some(&parts.f),
        &DesignerConfig::default(),
    )?;
    let data = SeparatedProblemData::new(
        parts.g.clone(),
        parts.f.clone(),
        design.r.clone(),
        a1.clone(),
        a2.clone(),
        config.gamma_lin(),
        config.n0_lin(),
        config.rho,
        config.epsilon,
    )?;

    let manifold = Sphere::new(n_c, k, p_c)?;
    let start = manifold.random_point(&mut rng)?;
    let cg = |w: &CMat| (zf_comm_cost(w, &data), zf_comm_grad(w, &data));
    let (w, report) = rcg_minimize(cg, &manifold, start, &config.solver.to_config())?;

    let pattern = composite_pattern_separated(&design.r, &w, grid)?;
    let reference = composite_pattern_separated(&design.r, &CMat::zeros(n_c, k), grid)?;
    let sinr_db: Vec<f64> = (0..k)
        .map(|i| {
            crate::lin_to_db(sinr_separated(&w, &parts.g, &parts.f, &design.r, config.n0_lin(), i))
        })
        .collect();
    Ok(TrialResult {
        beamformer: w,
        report,
        pslr_db: pslr(&pattern, mainlobe)?,
        mse: pattern_mse(&reference, &pattern)?,
        pattern,
        sinr_db,
        reference,
    })
}

/// Run the configured deployment.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    match config.deployment {
        Deployment::Shared => run_shared(config),
        Deployment::Separated { .. } => run_separated(config),
    }
}

/// One trade-off point per weight pair; failed points are recorded and the
/// sweep continues.
pub struct SweepOutput {
    pub points: Vec<TradeoffPoint>,
    pub failures: Vec<(usize, String)>,
}

pub fn run_sweep(config: &ExperimentConfig, rho_list: &[[f64; 2]]) -> Result<SweepOutput> {
    if rho_list.is_empty() {
        return Err(RadcomError::Config("sweep needs at least one weight pair".into()));
    }
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (idx, &rho) in rho_list.iter().enumerate() {
        let point_cfg = ExperimentConfig { rho, ..config.clone() };
        match run(&point_cfg) {
            Ok(out) => points.push(out.tradeoff),
            Err(e) => failures.push((idx, e.to_string())),
        }
    }
    Ok(SweepOutput { points, failures })
}

/// JSON run summary: config echo, artifact version, aggregate numbers and
/// per-trial termination statuses.
#[derive(Debug, serde::Serialize)]
pub struct RunSummary<'a> {
    pub artifact_version: &'static str,
    pub config: &'a ExperimentConfig,
    pub tradeoff: &'a TradeoffPoint,
    pub mean_sinr_db: f64,
    pub terminations: &'a [Termination],
    pub flops_per_iteration: u64,
}

/// Write the full artifact set for one run: pattern.csv, sinr.csv,
/// sinr_hist.csv, trace.csv and summary.json.
pub fn write_run_artifacts(
    config: &ExperimentConfig,
    out: &RunOutput,
    out_dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let grid = config.grid()?;
    write_pattern_csv(&grid, &out.pattern, &out_dir.join("pattern.csv"))?;
    write_sinr_csv(&out.per_trial_sinr_db, &out_dir.join("sinr.csv"))?;
    let pooled = out.pooled_sinr_stats();
    write_hist_csv(&pooled, &out_dir.join("sinr_hist.csv"))?;
    let (n, k) = solver_shape(config);
    let flops = flops_per_iteration(n, k).total;
    out.report.write_trace_csv(&out_dir.join("trace.csv"), flops)?;
    let summary = RunSummary {
        artifact_version: env!("CARGO_PKG_VERSION"),
        config,
        tradeoff: &out.tradeoff,
        mean_sinr_db: pooled.mean_db,
        terminations: &out.terminations,
        flops_per_iteration: flops,
    };
    serde_json::to_writer_pretty(File::create(out_dir.join("summary.json"))?, &summary)?;
    Ok(())
}

fn solver_shape(config: &ExperimentConfig) -> (usize, usize) {
    match config.deployment {
        Deployment::Shared => (config.n_antennas, config.n_users),
        Deployment::Separated { n_c, .. } => (n_c, config.n_users),
    }
}

/// Write sweep artifacts: tradeoff.csv plus a JSON summary with failures.
pub fn write_sweep_artifacts(
    config: &ExperimentConfig,
    sweep: &SweepOutput,
    out_dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    write_tradeoff_csv(&sweep.points, &out_dir.join("tradeoff.csv"))?;
    #[derive(serde::Serialize)]
    struct SweepSummary<'a> {
        artifact_version: &'static str,
        config: &'a ExperimentConfig,
        points: &'a [TradeoffPoint],
        failures: &'a [(usize, String)],
    }
    let summary = SweepSummary {
        artifact_version: env!("CARGO_PKG_VERSION"),
        config,
        points: &sweep.points,
        failures: &sweep.failures,
    };
    serde_json::to_writer_pretty(File::create(out_dir.join("summary.json"))?, &summary)?;
    Ok(())
}
