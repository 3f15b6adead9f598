//! Covariance codebooks: `2^B` block-diagonal covariance assignments
//! designed with Lloyd's algorithm for the sum-rate objective.
//!
//! Partitioning uses the instantaneous sum rate of each codeword, which is
//! the same rule the receiver applies when it picks the index to feed
//! back. The centroid step replaces the conditional expectation of the
//! log-determinant by the log-determinant of the cell's mean Gramian
//! `R = E[H* H]`, factors `R = S* S` with the Hermitian square root and
//! runs iterative waterfilling on the per-user column blocks of `S`.
//! Because that centroid is approximate, a full Lloyd round may lose
//! objective; the designer therefore returns the best codebook seen.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, ChannelRealization, SystemDims};
use crate::error::{Error, Result};
use crate::lloyd::{self, DesignOptions, Quantizer};
use crate::numerics::{CMatrix, HermitianPsd};
use crate::rates::{select, sum_rate_unchecked, FeedbackCodebook};
use crate::waterfill::{iwf, CovarianceSet, IwfOptions, PowerBudget};

/// Channel draws used to design a codebook, with the noise variance.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    draws: Vec<ChannelRealization>,
    sigma2: f64,
}

impl TrainingSet {
    pub fn new(draws: Vec<ChannelRealization>, sigma2: f64) -> Result<Self> {
        let first = draws
            .first()
            .ok_or_else(|| Error::InvalidArgument("training set is empty".into()))?;
        let dims = first.dims();
        if draws.iter().any(|d| d.dims() != dims) {
            return Err(Error::Dimension("training draws differ in dimensions".into()));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be positive, got {sigma2}"
            )));
        }
        Ok(TrainingSet { draws, sigma2 })
    }

    pub fn sample<R: rand::Rng + ?Sized>(
        model: &ChannelModel,
        count: usize,
        sigma2: f64,
        rng: &mut R,
    ) -> Result<Self> {
        Self::new(model.sample_many(count, rng), sigma2)
    }

    pub fn draws(&self) -> &[ChannelRealization] {
        &self.draws
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn dims(&self) -> SystemDims {
        self.draws[0].dims()
    }
}

/// Provenance of a designed codebook.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMeta {
    pub seed: u64,
    pub restarts: usize,
    /// Lloyd rounds run by the winning restart.
    pub rounds: usize,
    pub winning_restart: usize,
    pub training_size: usize,
    /// Training-average selected sum rate (bits) of the returned codebook.
    pub training_objective: f64,
    pub converged: bool,
    /// Training objective after every round of the winning restart.
    #[serde(default)]
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceCodebook {
    bits: u32,
    entries: Vec<CovarianceSet>,
    budget: PowerBudget,
    dims: SystemDims,
    meta: DesignMeta,
}

pub(crate) fn cells_for(bits: u32) -> Result<usize> {
    if bits > 16 {
        return Err(Error::InvalidArgument(format!("{bits} feedback bits is too many")));
    }
    Ok(1usize << bits)
}

impl CovarianceCodebook {
    pub fn new(
        bits: u32,
        entries: Vec<CovarianceSet>,
        budget: PowerBudget,
        dims: SystemDims,
        meta: DesignMeta,
    ) -> Result<Self> {
        dims.validate()?;
        budget.validate(dims.users)?;
        let cells = cells_for(bits)?;
        if entries.len() != cells {
            return Err(Error::Dimension(format!(
                "{} entries for {bits} bits (need {cells})",
                entries.len()
            )));
        }
        for (q, e) in entries.iter().enumerate() {
            if e.users() != dims.users || e.tx_antennas() != dims.tx_antennas {
                return Err(Error::Dimension(format!("entry {q} does not match {dims}")));
            }
            if !budget.is_satisfied_by(e) {
                return Err(Error::InvalidArgument(format!("entry {q} violates the power budget")));
            }
        }
        Ok(CovarianceCodebook {
            bits,
            entries,
            budget,
            dims,
            meta,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn entries(&self) -> &[CovarianceSet] {
        &self.entries
    }

    pub fn budget(&self) -> &PowerBudget {
        &self.budget
    }

    pub fn dims(&self) -> SystemDims {
        self.dims
    }

    pub fn meta(&self) -> &DesignMeta {
        &self.meta
    }

    /// Codebook with `extra` appended; the result must have `2^B` entries.
    pub fn extended_with(&self, extra: &[CovarianceSet]) -> Result<Self> {
        let total = self.entries.len() + extra.len();
        if !total.is_power_of_two() {
            return Err(Error::Dimension(format!(
                "extended codebook would have {total} entries"
            )));
        }
        let mut entries = self.entries.clone();
        entries.extend_from_slice(extra);
        Self::new(
            total.trailing_zeros(),
            entries,
            self.budget.clone(),
            self.dims,
            self.meta.clone(),
        )
    }
}

impl FeedbackCodebook for CovarianceCodebook {
    fn size(&self) -> usize {
        self.entries.len()
    }

    fn entry_rate(&self, h: &ChannelRealization, index: usize, sigma2: f64) -> f64 {
        sum_rate_unchecked(h, &self.entries[index], sigma2)
    }
}

fn check_dims(training: &TrainingSet, dims: SystemDims) -> Result<()> {
    if training.dims() != dims {
        return Err(Error::Dimension(format!(
            "codebook is {dims}, training draws are {}",
            training.dims()
        )));
    }
    Ok(())
}

/// Zero-based index of the best codeword for every training draw.
pub fn assign_partition(training: &TrainingSet, codebook: &CovarianceCodebook) -> Result<Vec<usize>> {
    check_dims(training, codebook.dims())?;
    Ok(training
        .draws()
        .iter()
        .map(|h| select(h, codebook, training.sigma2()).index)
        .collect())
}

/// Mean Gramian `E[H* H]` over `draws` (`K Mt x K Mt`).
pub fn mean_gram(draws: &[&ChannelRealization]) -> CMatrix {
    let n = draws[0].stacked().ncols();
    let mut acc = CMatrix::zeros(n, n);
    for d in draws {
        acc += d.gram();
    }
    acc.unscale(draws.len() as f64)
}

/// Effective per-user channels `S(k)` with `S* S = R`: the column blocks
/// of the Hermitian square root of `R`.
pub fn effective_channels(mean_gram: &CMatrix, dims: SystemDims) -> Vec<CMatrix> {
    let root = HermitianPsd::from_trusted(mean_gram.clone()).sqrt();
    let mt = dims.tx_antennas;
    (0..dims.users)
        .map(|k| root.columns(k * mt, mt).into_owned())
        .collect()
}

/// Covariance codeword for one cell.
pub fn centroid_update(
    region: &[&ChannelRealization],
    budget: &PowerBudget,
    sigma2: f64,
    opts: &IwfOptions,
) -> Result<CovarianceSet> {
    if region.is_empty() {
        return Err(Error::EmptyCell(0));
    }
    let dims = region[0].dims();
    let channels = effective_channels(&mean_gram(region), dims);
    Ok(iwf(&channels, budget, sigma2, opts)?.covariances)
}

struct CovQuantizer<'a> {
    training: &'a TrainingSet,
    budget: &'a PowerBudget,
    iwf: IwfOptions,
}

impl Quantizer for CovQuantizer<'_> {
    type Entry = CovarianceSet;

    fn samples(&self) -> usize {
        self.training.len()
    }

    fn score(&self, sample: usize, entry: &CovarianceSet) -> f64 {
        sum_rate_unchecked(&self.training.draws()[sample], entry, self.training.sigma2())
    }

    fn centroid(&self, members: &[usize]) -> Result<CovarianceSet> {
        let region: Vec<&ChannelRealization> =
            members.iter().map(|&i| &self.training.draws()[i]).collect();
        centroid_update(&region, self.budget, self.training.sigma2(), &self.iwf)
    }

    fn seed(&self, sample: usize) -> Result<CovarianceSet> {
        let h = &self.training.draws()[sample];
        Ok(iwf(h.blocks(), self.budget, self.training.sigma2(), &self.iwf)?.covariances)
    }
}

/// Lloyd design of a `2^bits`-entry covariance codebook.
pub fn design(
    training: &TrainingSet,
    bits: u32,
    budget: &PowerBudget,
    opts: &DesignOptions,
) -> Result<CovarianceCodebook> {
    design_inner(training, bits, budget, opts, Start::Random)
}

/// As [`design`], but restart 0 starts from `base` plus codewords seeded
/// from the draws `base` serves worst, so its training objective can
/// only improve on `base`.
pub fn design_grown(
    training: &TrainingSet,
    base: &CovarianceCodebook,
    bits: u32,
    opts: &DesignOptions,
) -> Result<CovarianceCodebook> {
    design_inner(training, bits, base.budget(), opts, Start::Grown(base.entries()))
}

/// A `2^bits`-entry codebook whose first codewords are exactly those of
/// `base`; only the added codewords are trained.
pub fn design_extension(
    training: &TrainingSet,
    base: &CovarianceCodebook,
    bits: u32,
    opts: &DesignOptions,
) -> Result<CovarianceCodebook> {
    design_inner(training, bits, base.budget(), opts, Start::Frozen(base.entries()))
}

enum Start<'a> {
    Random,
    Grown(&'a [CovarianceSet]),
    Frozen(&'a [CovarianceSet]),
}

fn design_inner(
    training: &TrainingSet,
    bits: u32,
    budget: &PowerBudget,
    opts: &DesignOptions,
    start: Start<'_>,
) -> Result<CovarianceCodebook> {
    let dims = training.dims();
    budget.validate(dims.users)?;
    let cells = cells_for(bits)?;
    let quantizer = CovQuantizer {
        training,
        budget,
        iwf: opts.iwf,
    };
    let run = match start {
        Start::Random => lloyd::design(&quantizer, cells, opts, None, &[])?,
        Start::Grown(base) => {
            check_base(base, cells, dims)?;
            lloyd::check_training_size(training.len(), cells)?;
            let init = lloyd::grown(&quantizer, base, cells)?;
            lloyd::design(&quantizer, cells, opts, Some(&init), &[])?
        }
        Start::Frozen(base) => {
            check_base(base, cells, dims)?;
            lloyd::design(&quantizer, cells, opts, None, base)?
        }
    };
    let meta = DesignMeta {
        seed: opts.seed,
        restarts: opts.restarts.max(1),
        rounds: run.rounds,
        winning_restart: run.restart,
        training_size: training.len(),
        training_objective: run.objective,
        converged: run.converged,
        history: run.history,
    };
    CovarianceCodebook::new(bits, run.entries, budget.clone(), dims, meta)
}

fn check_base(base: &[CovarianceSet], cells: usize, dims: SystemDims) -> Result<()> {
    if base.len() > cells {
        return Err(Error::Dimension(format!("base codebook has {} entries, more than {cells}", base.len())));
    }
    if base.iter().any(|e| e.users() != dims.users || e.tx_antennas() != dims.tx_antennas) {
        return Err(Error::Dimension(format!("base codebook does not match {dims}")));
    }
    Ok(())
}

/// Training-average selected sum rate of `codebook`.
pub fn training_objective(training: &TrainingSet, codebook: &CovarianceCodebook) -> f64 {
    let total: f64 = training
        .draws()
        .iter()
        .map(|h| select(h, codebook, training.sigma2()).bits)
        .sum();
    total / training.len() as f64
}
