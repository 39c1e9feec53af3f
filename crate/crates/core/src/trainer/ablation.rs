use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{evaluate, train, TrainConfig};
use crate::dataset::Dataset;
use crate::model::{Autoencoder, AutoencoderConfig};
use crate::{Error, Result};

/// One row of the grid: the three switches varied in the ablation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationEntry {
    pub skip_connections: bool,
    pub gamma: f64,
    pub noise_sigma: f64,
}

impl AblationEntry {
    pub fn new(skip_connections: bool, gamma: f64, noise_sigma: f64) -> Self {
        AblationEntry {
            skip_connections,
            gamma,
            noise_sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationGrid {
    pub configs: Vec<AblationEntry>,
    pub repeats: usize,
    /// Index of the row every other row is compared with.
    pub baseline: usize,
}

impl Default for AblationGrid {
    fn default() -> Self {
        AblationGrid::reference_grid()
    }
}

impl AblationGrid {
    /// The seven-row grid: the full model, each component removed or varied
    /// in turn, and everything disabled.
    pub fn reference_grid() -> Self {
        let e = AblationEntry::new;
        AblationGrid {
            configs: vec![
                e(true, 2.0, 0.02),
                e(false, 2.0, 0.02),
                e(true, 2.0, 0.0),
                e(true, 0.5, 0.02),
                e(true, 1.0, 0.02),
                e(true, 4.0, 0.02),
                e(false, 1.0, 0.0),
            ],
            repeats: 5,
            baseline: 0,
        }
    }

    pub fn baseline_only(repeats: usize) -> Self {
        AblationGrid {
            configs: vec![AblationEntry::new(true, 2.0, 0.02)],
            repeats,
            baseline: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.configs.is_empty() {
            return Err(Error::InvalidConfig("ablation grid is empty".into()));
        }
        if self.repeats < 1 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        if self.baseline >= self.configs.len() {
            return Err(Error::InvalidConfig(format!(
                "baseline index {} outside a grid of {} configurations",
                self.baseline,
                self.configs.len()
            )));
        }
        for c in &self.configs {
            if !(c.gamma > 0.0 && c.gamma.is_finite()) || !(c.noise_sigma >= 0.0) {
                return Err(Error::InvalidConfig(format!("invalid grid entry {c:?}")));
            }
        }
        Ok(())
    }
}

/// Shared model and training settings; each grid entry overrides the skip
/// connections, γ and noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationSetup {
    pub model: AutoencoderConfig,
    pub train: TrainConfig,
    /// Upper bound on concurrently trained runs.
    pub threads: usize,
}

impl Default for AblationSetup {
    fn default() -> Self {
        AblationSetup {
            model: AutoencoderConfig::default(),
            train: TrainConfig::default(),
            threads: threads_from_env(),
        }
    }
}

/// Worker count from `HALU_THREADS`, else the available parallelism.
pub fn threads_from_env() -> usize {
    std::env::var("HALU_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigResult {
    pub index: usize,
    #[serde(flatten)]
    pub entry: AblationEntry,
    /// Test RMSLE of each repeat, in repeat order.
    pub runs: Vec<f64>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub rel_mean_pct: Option<f64>,
    pub rel_std_pct: Option<f64>,
    /// Why the configuration has no statistics, if it failed.
    pub failure: Option<String>,
}

impl ConfigResult {
    /// A row known only through its summary statistics.
    pub fn from_stats(index: usize, entry: AblationEntry, mean: f64, std: f64) -> Self {
        ConfigResult {
            index,
            entry,
            runs: Vec::new(),
            mean: Some(mean),
            std: Some(std),
            rel_mean_pct: None,
            rel_std_pct: None,
            failure: None,
        }
    }

    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub baseline: usize,
    pub repeats: usize,
    pub base_seed: u64,
    pub rows: Vec<ConfigResult>,
}

impl AblationReport {
    /// Fills the relative columns of every row from the baseline row.
    pub fn with_relative(mut self) -> Self {
        let base = self.rows.get(self.baseline).map(|r| (r.mean, r.std));
        for row in &mut self.rows {
            let (bm, bs) = base.unwrap_or((None, None));
            row.rel_mean_pct = row.mean.zip(bm).map(|(v, b)| relative_percent(v, b));
            row.rel_std_pct = row.std.zip(bs).map(|(v, b)| relative_percent(v, b));
        }
        if let Some(b) = self.rows.get_mut(self.baseline) {
            if !b.failed() {
                b.rel_mean_pct = Some(0.0);
                b.rel_std_pct = Some(0.0);
            }
        }
        self
    }
}

/// Change of `value` relative to `baseline`, in percent. A zero baseline
/// yields `0` for a zero value and an infinite change otherwise.
pub fn relative_percent(value: f64, baseline: f64) -> f64 {
    if baseline == 0.0 {
        return if value == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(value)
        };
    }
    (value / baseline - 1.0) * 100.0
}

/// Sample standard deviation with Bessel's correction; `0` for fewer than
/// two values.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Outcome of one training run inside the ablation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: usize,
    pub repeat: usize,
    pub seed: u64,
    pub result: std::result::Result<f64, String>,
    pub seconds: f64,
}

pub fn run_ablation(
    grid: &AblationGrid,
    setup: &AblationSetup,
    train_set: &Dataset,
    test_set: &Dataset,
    base_seed: u64,
) -> Result<AblationReport> {
    run_ablation_with_progress(grid, setup, train_set, test_set, base_seed, |_| {})
}

fn one_run(
    entry: &AblationEntry,
    setup: &AblationSetup,
    train_set: &Dataset,
    test_set: &Dataset,
    seed: u64,
) -> Result<f64> {
    let model_cfg = AutoencoderConfig {
        skip_connections: entry.skip_connections,
        gamma: entry.gamma,
        ..setup.model.clone()
    };
    let train_cfg = TrainConfig {
        noise_sigma: entry.noise_sigma,
        seed,
        ..setup.train.clone()
    };
    let mut model = Autoencoder::build(model_cfg, seed)?;
    train(&mut model, train_set, &train_cfg)?;
    let score = evaluate(&model, test_set)?;
    if !score.is_finite() {
        return Err(Error::Domain(format!("test RMSLE is {score}")));
    }
    Ok(score)
}

/// Trains every configuration `repeats` times with seeds `base_seed + repeat`
/// and aggregates test RMSLE. A failing run marks its configuration failed
/// without stopping the others. `progress` is called as runs finish.
pub fn run_ablation_with_progress(
    grid: &AblationGrid,
    setup: &AblationSetup,
    train_set: &Dataset,
    test_set: &Dataset,
    base_seed: u64,
    progress: impl Fn(&RunRecord) + Sync,
) -> Result<AblationReport> {
    grid.validate()?;
    setup.model.validate()?;
    setup.train.validate()?;
    train_set.check_compatible(setup.model.n_points, setup.model.max_range)?;
    test_set.check_compatible(setup.model.n_points, setup.model.max_range)?;

    let jobs: Vec<(usize, usize)> = (0..grid.configs.len())
        .flat_map(|c| (0..grid.repeats).map(move |r| (c, r)))
        .collect();
    let results: Mutex<Vec<Option<RunRecord>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    let workers = setup.threads.clamp(1, jobs.len());
    let work = || loop {
        let j = next.fetch_add(1, Ordering::Relaxed);
        let Some(&(config, repeat)) = jobs.get(j) else {
            break;
        };
        let seed = base_seed.wrapping_add(repeat as u64);
        let start = Instant::now();
        let result = one_run(&grid.configs[config], setup, train_set, test_set, seed)
            .map_err(|e| e.to_string());
        let record = RunRecord {
            config,
            repeat,
            seed,
            result,
            seconds: start.elapsed().as_secs_f64(),
        };
        progress(&record);
        results
            .lock()
            .expect("no worker panics while holding the lock")[j] = Some(record);
    };
    if workers == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(work);
            }
        });
    }

    let records: Vec<RunRecord> = results
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect();
    let rows = grid
        .configs
        .iter()
        .enumerate()
        .map(|(index, entry)| {
            let mine: Vec<&RunRecord> = records.iter().filter(|r| r.config == index).collect();
            let failure = mine.iter().find_map(|r| {
                r.result
                    .as_ref()
                    .err()
                    .map(|e| format!("repeat {} (seed {}): {e}", r.repeat, r.seed))
            });
            let runs: Vec<f64> = mine
                .iter()
                .filter_map(|r| r.result.as_ref().ok().copied())
                .collect();
            let (mean, std) = if failure.is_none() {
                (
                    Some(runs.iter().sum::<f64>() / runs.len() as f64),
                    Some(sample_std(&runs)),
                )
            } else {
                (None, None)
            };
            ConfigResult {
                index,
                entry: entry.clone(),
                runs,
                mean,
                std,
                rel_mean_pct: None,
                rel_std_pct: None,
                failure,
            }
        })
        .collect();
    Ok(AblationReport {
        baseline: grid.baseline,
        repeats: grid.repeats,
        base_seed,
        rows,
    }
    .with_relative())
}
