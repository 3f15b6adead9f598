//! Generic Lloyd iteration shared by the codebook designers.
//!
//! A quantizer scores a (sample, codeword) pair, higher being better, and
//! knows how to build a codeword from a cell of samples. The driver
//! alternates nearest-codeword partitioning with centroid updates, repairs
//! empty cells from the worst-served samples, and keeps the best codebook
//! seen over all rounds and restarts.

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::seeded_rng;
use crate::error::{Error, Result};
use crate::waterfill::IwfOptions;

pub(crate) trait Quantizer: Sync {
    type Entry: Clone + Send + Sync;

    fn samples(&self) -> usize;
    fn score(&self, sample: usize, entry: &Self::Entry) -> f64;
    fn centroid(&self, members: &[usize]) -> Result<Self::Entry>;
    /// Codeword built from a single sample, used for initialization and
    /// empty-cell repair.
    fn seed(&self, sample: usize) -> Result<Self::Entry>;
}

/// Options for the Lloyd-based designers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignOptions {
    pub restarts: usize,
    pub max_rounds: usize,
    /// Stop once the training objective improves by less than this (bits).
    pub tol: f64,
    pub seed: u64,
    #[serde(default)]
    pub iwf: IwfOptions,
}

impl Default for DesignOptions {
    fn default() -> Self {
        DesignOptions {
            restarts: 4,
            max_rounds: 50,
            tol: 1e-4,
            seed: 0,
            iwf: IwfOptions::default(),
        }
    }
}

/// Training draws required per cell.
pub const MIN_DRAWS_PER_CELL: usize = 20;

pub(crate) fn check_training_size(samples: usize, cells: usize) -> Result<()> {
    let need = MIN_DRAWS_PER_CELL * cells;
    if samples < need {
        return Err(Error::TrainingTooSmall {
            got: samples,
            cells,
            need,
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub(crate) struct LloydRun<E> {
    pub entries: Vec<E>,
    pub objective: f64,
    pub restart: usize,
    pub rounds: usize,
    pub converged: bool,
    /// Training objective at every evaluated round of the winning restart.
    pub history: Vec<f64>,
}

/// Best codeword index and its score for every sample; ties go low.
pub(crate) fn assign<Q: Quantizer>(q: &Q, entries: &[Q::Entry]) -> Vec<(usize, f64)> {
    (0..q.samples())
        .into_par_iter()
        .map(|i| {
            let mut best = (0, q.score(i, &entries[0]));
            for (j, e) in entries.iter().enumerate().skip(1) {
                let s = q.score(i, e);
                if s > best.1 {
                    best = (j, s);
                }
            }
            best
        })
        .collect()
}

pub(crate) fn mean_score(assignment: &[(usize, f64)]) -> f64 {
    assignment.iter().map(|a| a.1).sum::<f64>() / assignment.len() as f64
}

/// One centroid pass. Cells that are empty, or whose centroid is
/// undefined, are reseeded from the worst-served samples.
pub(crate) fn update<Q: Quantizer>(
    q: &Q,
    cells: usize,
    assignment: &[(usize, f64)],
) -> Result<Vec<Q::Entry>> {
    let mut members = vec![Vec::new(); cells];
    for (i, &(cell, _)) in assignment.iter().enumerate() {
        members[cell].push(i);
    }
    let updated: Vec<Result<Q::Entry>> = members
        .par_iter()
        .enumerate()
        .map(|(cell, m)| {
            if m.is_empty() {
                Err(Error::EmptyCell(cell))
            } else {
                q.centroid(m)
            }
        })
        .collect();

    let mut worst: Vec<usize> = (0..assignment.len()).collect();
    worst.sort_by(|&a, &b| assignment[a].1.total_cmp(&assignment[b].1).then(a.cmp(&b)));
    let mut worst = worst.into_iter();

    let mut out = Vec::with_capacity(cells);
    for r in updated {
        match r {
            Ok(e) => out.push(e),
            Err(Error::EmptyCell(_)) | Err(Error::ZeroGramian) => {
                let i = worst.next().ok_or_else(|| {
                    Error::InvalidArgument("not enough samples to repair empty cells".into())
                })?;
                out.push(q.seed(i)?);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Starting codebook for a larger design: `base` followed by codewords
/// seeded from the samples `base` serves worst.
pub(crate) fn grown<Q: Quantizer>(q: &Q, base: &[Q::Entry], cells: usize) -> Result<Vec<Q::Entry>> {
    let assignment = assign(q, base);
    let mut order: Vec<usize> = (0..assignment.len()).collect();
    order.sort_by(|&a, &b| assignment[a].1.total_cmp(&assignment[b].1).then(a.cmp(&b)));
    let mut out = base.to_vec();
    for &i in order.iter().take(cells.saturating_sub(base.len())) {
        out.push(q.seed(i)?);
    }
    Ok(out)
}

fn run_once<Q: Quantizer>(
    q: &Q,
    cells: usize,
    opts: &DesignOptions,
    restart: usize,
    initial: Option<&[Q::Entry]>,
    frozen: &[Q::Entry],
) -> Result<LloydRun<Q::Entry>> {
    let mut entries = match initial {
        Some(init) => init.to_vec(),
        None => {
            let mut rng = seeded_rng(opts.seed, restart as u64);
            let fresh = sample_indices(&mut rng, q.samples(), cells - frozen.len())
                .into_iter()
                .map(|i| q.seed(i))
                .collect::<Result<Vec<_>>>()?;
            frozen.iter().cloned().chain(fresh).collect()
        }
    };

    let mut best = LloydRun {
        entries: entries.clone(),
        objective: f64::NEG_INFINITY,
        restart,
        rounds: 0,
        converged: false,
        history: Vec::new(),
    };
    let mut previous = f64::NEG_INFINITY;
    for round in 0..=opts.max_rounds {
        let assignment = assign(q, &entries);
        let objective = mean_score(&assignment);
        best.history.push(objective);
        best.rounds = round;
        if objective > best.objective {
            best.objective = objective;
            best.entries = entries.clone();
        }
        if objective - previous < opts.tol {
            best.converged = true;
            break;
        }
        if round == opts.max_rounds {
            break;
        }
        previous = objective;
        entries = update(q, cells, &assignment)?;
        entries[..frozen.len()].clone_from_slice(frozen);
    }
    Ok(best)
}

/// Runs `opts.restarts` independent Lloyd designs and keeps the best.
///
/// With `initial`, restart 0 starts from the given codebook instead of a
/// random draw. The first `frozen.len()` codewords are pinned to `frozen`
/// in every restart.
pub(crate) fn design<Q: Quantizer>(
    q: &Q,
    cells: usize,
    opts: &DesignOptions,
    initial: Option<&[Q::Entry]>,
    frozen: &[Q::Entry],
) -> Result<LloydRun<Q::Entry>> {
    check_training_size(q.samples(), cells)?;
    if frozen.len() > cells {
        return Err(Error::Dimension(format!(
            "{} pinned codewords exceed {cells} cells",
            frozen.len()
        )));
    }
    if let Some(init) = initial {
        if init.len() != cells {
            return Err(Error::Dimension(format!(
                "initial codebook has {} entries, expected {cells}",
                init.len()
            )));
        }
    }
    let restarts = opts.restarts.max(1);
    let runs: Vec<LloydRun<Q::Entry>> = (0..restarts)
        .into_par_iter()
        .map(|r| run_once(q, cells, opts, r, if r == 0 { initial } else { None }, frozen))
        .collect::<Result<_>>()?;
    let mut best: Option<LloydRun<Q::Entry>> = None;
    for run in runs {
        if best.as_ref().is_none_or(|b| run.objective > b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}
