//! Goodness estimation from pairwise comparisons.
//!
//! The pipeline is: sample points uniformly, gather 5-point Likert
//! comparisons between random pairs of them, solve for one absolute goodness
//! value per point ([`estimate_goodness_values`]), then interpolate those
//! values with a Gaussian RBF ([`fit_rbf`]).

mod estimate;
mod rbf;

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{DesignPoint, Error, Result, Rng};

pub use estimate::{estimate_goodness_values, Estimate, EstimationConfig, EstimationProblem, GoodnessValues};
pub use rbf::{default_kernel_width, eval_field, fit_rbf, GoodnessField, DEFAULT_RIDGE};

/// One 5-point Likert answer comparing sample `i` (left) with sample `j`
/// (right). 1 means the left design is definitely better, 5 the opposite,
/// 3 that they are equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub i: usize,
    pub j: usize,
    pub likert: u8,
}

impl PairwiseComparison {
    pub fn new(i: usize, j: usize, likert: u8) -> Result<Self> {
        if i == j {
            return Err(Error::argument(format!("comparison of sample {i} with itself")));
        }
        if !(1..=5).contains(&likert) {
            return Err(Error::Range(format!("likert value {likert} is outside 1..=5")));
        }
        Ok(Self { i, j, likert })
    }

    /// The same judgement with left and right swapped.
    pub fn mirrored(&self) -> Self {
        Self { i: self.j, j: self.i, likert: 6 - self.likert }
    }
}

/// Reads `i,j,likert` lines. A header line is not expected.
pub fn read_comparisons_csv<R: Read>(reader: R) -> Result<Vec<PairwiseComparison>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (line, rec) in rdr.deserialize::<(usize, usize, u8)>().enumerate() {
        let (i, j, likert) = rec.map_err(|e| Error::argument(format!("line {}: {e}", line + 1)))?;
        out.push(PairwiseComparison::new(i, j, likert)?);
    }
    Ok(out)
}

pub fn write_comparisons_csv<W: Write>(writer: W, comparisons: &[PairwiseComparison]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for c in comparisons {
        w.serialize((c.i, c.j, c.likert))
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// A pairwise microtask: a fixed list of `(left, right)` sample indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseTask {
    pub pairs: Vec<(usize, usize)>,
}

/// Builds `task_count` tasks of `pairs_per_task` distinct unordered pairs
/// each. Pairs never repeat inside a task; left/right order is random.
pub fn make_pairwise_tasks(
    points: &[DesignPoint],
    pairs_per_task: usize,
    task_count: usize,
    rng: &mut Rng,
) -> Result<Vec<PairwiseTask>> {
    let m = points.len();
    if m < 2 {
        return Err(Error::argument("pairwise tasks need at least two points"));
    }
    if pairs_per_task == 0 {
        return Err(Error::argument("pairs_per_task must be positive"));
    }
    let available = m * (m - 1) / 2;
    if pairs_per_task > available {
        return Err(Error::argument(format!(
            "{pairs_per_task} unique pairs requested but only {available} exist"
        )));
    }

    let mut tasks = Vec::with_capacity(task_count);
    for _ in 0..task_count {
        let mut pairs = Vec::with_capacity(pairs_per_task);
        if 2 * pairs_per_task > available {
            // Dense request: partial Fisher-Yates over every pair.
            let mut all: Vec<(usize, usize)> =
                (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
            for k in 0..pairs_per_task {
                let pick = k + rng.index(all.len() - k);
                all.swap(k, pick);
                pairs.push(all[k]);
            }
        } else {
            let mut seen = HashSet::with_capacity(pairs_per_task);
            while pairs.len() < pairs_per_task {
                let i = rng.index(m);
                let j = rng.index(m - 1);
                let j = if j >= i { j + 1 } else { j };
                if seen.insert((i.min(j), i.max(j))) {
                    pairs.push((i.min(j), i.max(j)));
                }
            }
        }
        for pair in &mut pairs {
            if rng.bernoulli(0.5) {
                *pair = (pair.1, pair.0);
            }
        }
        tasks.push(PairwiseTask { pairs });
    }
    Ok(tasks)
}
