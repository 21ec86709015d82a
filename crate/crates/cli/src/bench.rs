//! Simulated-crowd benchmarks for both pipelines.
//!
//! Output layout under the output directory:
//!
//! ```text
//! summary.json              per-trial outcome
//! distances.csv             photo/optimize with two or more trials only
//! trial-0/trace.csv         optimize: one row per iteration
//! trial-0/values.csv        estimate: samples, estimated and true goodness
//! trial-0/comparisons.csv   estimate: headerless i,j,likert rows
//! trial-0/field.json        estimate: fitted RBF field
//! ```

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use crowdopt_core::linesearch::{run_simulated, write_trace_csv, OptConfig};
use crowdopt_core::photo::{enhance, mean_perceptual_distance, EnhanceParams, Image};
use crowdopt_core::preference_field::{
    default_kernel_width, estimate_goodness_values, fit_rbf, make_pairwise_tasks, write_comparisons_csv,
    PairwiseComparison,
};
use crowdopt_core::sim_crowd::{simulate_pairwise_response, SynthGoodness, WorkerModel};
use crowdopt_core::stats::spearman;
use crowdopt_core::{uniform_sample, DesignPoint, DesignSpace, Goodness, Rng};
use crowdopt_service::session::EstimateConfig;
use crowdopt_service::simulate::default_truth;
use crowdopt_service::{Domain, Mode};
use serde::{Deserialize, Serialize};

/// Uniform draws used to locate a field's maximum above two dimensions.
const ARGMAX_SAMPLES: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub mode: Mode,
    pub domain: Domain,
    /// Dimension of synthetic spaces; 2 when absent.
    pub n: Option<usize>,
    /// Ground truth the simulated crowd perceives.
    pub truth: Option<SynthGoodness>,
    pub workers: usize,
    pub worker: WorkerModel,
    pub trials: usize,
    /// Trial `k` runs with seed `seed + k`.
    pub seed: u64,
    pub optimize: OptConfig,
    pub estimate: EstimateConfig,
    /// Photo rendered for distance matrices; a generated test pattern
    /// when absent.
    pub base_image: Option<PathBuf>,
    pub render_size: (u32, u32),
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Optimize,
            domain: Domain::Synthetic,
            n: None,
            truth: None,
            workers: 5,
            worker: WorkerModel::default(),
            trials: 1,
            seed: 0,
            optimize: OptConfig::default(),
            estimate: EstimateConfig::default(),
            base_image: None,
            render_size: (64, 48),
        }
    }
}

impl BenchConfig {
    pub fn dim(&self) -> Result<usize> {
        match (self.domain.fixed_dim(), self.n) {
            (Some(d), Some(n)) if n != d => bail!("domain requires n = {d}, got {n}"),
            (Some(d), _) => Ok(d),
            (None, Some(0)) => bail!("n must be at least 1"),
            (None, n) => Ok(n.unwrap_or(2)),
        }
    }

    pub fn truth(&self) -> Result<SynthGoodness> {
        let n = self.dim()?;
        let truth = self.truth.clone().unwrap_or_else(|| default_truth(self.domain, n));
        if truth.dim() != n {
            bail!("truth has {} dimensions, the design space has {n}", truth.dim());
        }
        Ok(truth)
    }

    pub fn validate(&self) -> Result<()> {
        self.truth()?;
        self.worker.validate()?;
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if self.workers == 0 {
            bail!("workers must be at least 1");
        }
        match self.mode {
            Mode::Optimize => self.optimize.validate()?,
            Mode::Estimate => self.estimate.validate().map_err(|e| anyhow::anyhow!("{e}"))?,
        }
        Ok(())
    }

    fn base_image(&self) -> Result<Image> {
        match &self.base_image {
            Some(p) => Ok(Image::load(p).with_context(|| format!("loading {}", p.display()))?),
            None => Ok(Image::test_pattern(self.render_size.0, self.render_size.1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub seed: u64,
    pub best: DesignPoint,
    pub true_goodness: f64,
    /// ℓ∞ distance from `best` to the true maximizer.
    pub argmax_error: f64,
    /// Estimate mode: rank correlation of estimated and true sample values.
    pub spearman: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub mode: Mode,
    pub domain: Domain,
    pub n: usize,
    pub trials: Vec<TrialSummary>,
}

/// One row of the trial-distance table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDistance {
    pub iteration: usize,
    pub trial_a: usize,
    pub trial_b: usize,
    pub distance: f64,
}

pub fn run(cfg: &BenchConfig, out: &Path) -> Result<BenchSummary> {
    cfg.validate()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let summary = match cfg.mode {
        Mode::Optimize => run_optimize(cfg, out)?,
        Mode::Estimate => run_estimate(cfg, out)?,
    };
    let file = File::create(out.join("summary.json"))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &summary)?;
    Ok(summary)
}

fn trial_dir(out: &Path, k: usize) -> Result<PathBuf> {
    let dir = out.join(format!("trial-{k}"));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn run_optimize(cfg: &BenchConfig, out: &Path) -> Result<BenchSummary> {
    let n = cfg.dim()?;
    let truth = cfg.truth()?;
    let argmax = truth.argmax();
    let workers = vec![cfg.worker; cfg.workers];
    let mut trials = Vec::new();
    let mut histories = Vec::new();
    for k in 0..cfg.trials {
        let seed = cfg.seed + k as u64;
        let state = run_simulated(&truth, DesignSpace::new(n)?, cfg.optimize.clone(), &workers, seed)?;
        let file = File::create(trial_dir(out, k)?.join("trace.csv"))?;
        write_trace_csv(BufWriter::new(file), state.history(), Some(&truth))?;
        let best = state.best_design()?.clone();
        trials.push(TrialSummary {
            trial: k,
            seed,
            true_goodness: truth.eval(&best)?,
            argmax_error: best.linf_distance(&argmax),
            best,
            spearman: None,
        });
        histories.push(state.history().iter().map(|r| r.best.clone()).collect::<Vec<_>>());
    }
    if cfg.domain == Domain::Photo && cfg.trials >= 2 {
        let rows = trial_distances(&cfg.base_image()?, &histories)?;
        let mut w = csv::Writer::from_path(out.join("distances.csv"))?;
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    Ok(BenchSummary { mode: Mode::Optimize, domain: cfg.domain, n, trials })
}

/// Pairwise mean perceptual distance between the trials' best renders at
/// every iteration. `bests[k][i]` is trial `k`'s best after iteration `i + 1`.
pub fn trial_distances(base: &Image, bests: &[Vec<DesignPoint>]) -> Result<Vec<TrialDistance>> {
    let iterations = bests.iter().map(Vec::len).min().unwrap_or(0);
    let mut rows = Vec::new();
    for i in 0..iterations {
        let renders = bests
            .iter()
            .map(|b| Ok(enhance(base, &EnhanceParams::from_point(&b[i])?)))
            .collect::<Result<Vec<_>>>()?;
        for a in 0..renders.len() {
            for b in a + 1..renders.len() {
                rows.push(TrialDistance {
                    iteration: i + 1,
                    trial_a: a,
                    trial_b: b,
                    distance: mean_perceptual_distance(&renders[a], &renders[b])?,
                });
            }
        }
    }
    Ok(rows)
}

fn run_estimate(cfg: &BenchConfig, out: &Path) -> Result<BenchSummary> {
    let n = cfg.dim()?;
    let truth = cfg.truth()?;
    let argmax = truth.argmax();
    let space = DesignSpace::new(n)?;
    let est_cfg = &cfg.estimate;
    let mut trials = Vec::new();
    for k in 0..cfg.trials {
        let seed = cfg.seed + k as u64;
        let root = Rng::new(seed);
        let points = uniform_sample(&space, est_cfg.samples, &mut root.split(1))?;
        let tasks = make_pairwise_tasks(&points, est_cfg.pairs_per_task, est_cfg.tasks, &mut root.split(2))?;
        let mut worker_rngs: Vec<Rng> = (0..cfg.workers).map(|w| root.split(10 + w as u64)).collect();
        let mut comparisons = Vec::new();
        for (t, task) in tasks.iter().enumerate() {
            let rng = &mut worker_rngs[t % cfg.workers];
            for &(i, j) in &task.pairs {
                let s = simulate_pairwise_response(&truth, &points[i], &points[j], &cfg.worker, rng)?;
                comparisons.push(PairwiseComparison::new(i, j, s)?);
            }
        }
        let est = estimate_goodness_values(&points, &comparisons, &est_cfg.estimation)?;
        let width = est_cfg.kernel_width.unwrap_or_else(|| default_kernel_width(n));
        let field = fit_rbf(&points, est.values.as_slice(), width, est_cfg.ridge)?;

        let dir = trial_dir(out, k)?;
        write_comparisons_csv(File::create(dir.join("comparisons.csv"))?, &comparisons)?;
        serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("field.json"))?), &field)?;
        let true_values = points.iter().map(|p| truth.eval(p)).collect::<crowdopt_core::Result<Vec<_>>>()?;
        let mut w = csv::Writer::from_path(dir.join("values.csv"))?;
        let mut header: Vec<String> = (0..n).map(|d| format!("x_{d}")).collect();
        header.extend(["y".into(), "true_g".into()]);
        w.write_record(&header)?;
        for ((p, y), g) in points.iter().zip(est.values.as_slice()).zip(&true_values) {
            let mut rec: Vec<String> = p.coords().iter().map(|c| c.to_string()).collect();
            rec.extend([y.to_string(), g.to_string()]);
            w.write_record(&rec)?;
        }
        w.flush()?;

        let best = field_argmax(&field, n, &mut root.split(3))?;
        trials.push(TrialSummary {
            trial: k,
            seed,
            true_goodness: truth.eval(&best)?,
            argmax_error: best.linf_distance(&argmax),
            best,
            spearman: spearman(est.values.as_slice(), &true_values),
        });
    }
    Ok(BenchSummary { mode: Mode::Estimate, domain: cfg.domain, n, trials })
}

/// Grid maximum for up to two dimensions (101 ticks per axis), best of
/// uniform draws above that.
fn field_argmax<G: Goodness>(field: &G, n: usize, rng: &mut Rng) -> Result<DesignPoint> {
    let candidates: Vec<DesignPoint> = if n <= 2 {
        let ticks = 101usize;
        (0..ticks.pow(n as u32))
            .map(|k| {
                let coords = (0..n).map(|d| ((k / ticks.pow(d as u32)) % ticks) as f64 / (ticks - 1) as f64);
                DesignPoint::new(coords.collect())
            })
            .collect::<crowdopt_core::Result<_>>()?
    } else {
        uniform_sample(&DesignSpace::new(n)?, ARGMAX_SAMPLES, rng)?
    };
    let mut best = (f64::NEG_INFINITY, 0);
    for (k, x) in candidates.iter().enumerate() {
        let v = field.eval_raw(x.coords());
        if v > best.0 {
            best = (v, k);
        }
    }
    Ok(candidates[best.1].clone())
}
