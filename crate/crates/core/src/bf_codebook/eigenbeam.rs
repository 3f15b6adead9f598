use crate::channel::ChannelRealization;
use crate::cov_codebook::{cells_for, TrainingSet};
use crate::error::{Error, Result};
use crate::lloyd::{self, DesignOptions, Quantizer};
use crate::numerics::{eig_unchecked, CMatrix, ACTIVITY_FLOOR};
use crate::waterfill::PowerBudget;

use super::{BeamDesign, BeamMeta, Beamformer, BeamformingCodebook};

/// Eigenbeam codeword for a cell of channel draws.
///
/// User `k` beams along the top eigenvector of its mean Gramian, and the
/// total power is split in proportion to the top eigenvalues.
pub fn eigenbeam_centroid(region: &[&ChannelRealization], power: f64) -> Result<Beamformer> {
    let first = region.first().ok_or(Error::EmptyCell(0))?;
    let dims = first.dims();
    let mut tops = Vec::with_capacity(dims.users);
    let mut directions = Vec::with_capacity(dims.users);
    for k in 0..dims.users {
        let mut r = CMatrix::zeros(dims.tx_antennas, dims.tx_antennas);
        for h in region {
            r += h.user_gram(k);
        }
        r.unscale_mut(region.len() as f64);
        let (lambda, v) = eig_unchecked(&r).top();
        tops.push(lambda.max(0.0));
        directions.push(v);
    }
    let total: f64 = tops.iter().sum();
    if total <= ACTIVITY_FLOOR {
        return Err(Error::ZeroGramian);
    }
    let amplitudes: Vec<f64> = tops.iter().map(|t| (power * t / total).sqrt()).collect();
    Ok(Beamformer::from_parts(&amplitudes, &directions))
}

struct EigenQuantizer<'a> {
    training: &'a TrainingSet,
    power: f64,
}

impl Quantizer for EigenQuantizer<'_> {
    type Entry = Beamformer;

    fn samples(&self) -> usize {
        self.training.len()
    }

    fn score(&self, sample: usize, entry: &Beamformer) -> f64 {
        entry.sum_rate(&self.training.draws()[sample], self.training.sigma2())
    }

    fn centroid(&self, members: &[usize]) -> Result<Beamformer> {
        let region: Vec<&ChannelRealization> =
            members.iter().map(|&i| &self.training.draws()[i]).collect();
        eigenbeam_centroid(&region, self.power)
    }

    fn seed(&self, sample: usize) -> Result<Beamformer> {
        eigenbeam_centroid(&[&self.training.draws()[sample]], self.power)
    }
}

/// Lloyd design of a `2^bits`-entry eigenbeam codebook under sum power.
pub fn eigenbeam_design(
    training: &TrainingSet,
    bits: u32,
    power: f64,
    opts: &DesignOptions,
) -> Result<BeamformingCodebook> {
    eigenbeam_inner(training, bits, power, opts, None)
}

/// As [`eigenbeam_design`], with restart 0 grown from `base` the same way
/// as the covariance designer's warm start.
pub fn eigenbeam_design_grown(
    training: &TrainingSet,
    base: &BeamformingCodebook,
    bits: u32,
    opts: &DesignOptions,
) -> Result<BeamformingCodebook> {
    eigenbeam_inner(training, bits, base.budget().total(), opts, Some(base.entries()))
}

fn eigenbeam_inner(
    training: &TrainingSet,
    bits: u32,
    power: f64,
    opts: &DesignOptions,
    base: Option<&[Beamformer]>,
) -> Result<BeamformingCodebook> {
    let budget = PowerBudget::sum(power);
    budget.validate(1)?;
    let cells = cells_for(bits)?;
    let q = EigenQuantizer { training, power };
    let initial = match base {
        Some(b) if b.len() <= cells => {
            lloyd::check_training_size(training.len(), cells)?;
            Some(lloyd::grown(&q, b, cells)?)
        }
        Some(b) => return Err(Error::Dimension(format!("base codebook has {} entries, more than {cells}", b.len()))),
        None => None,
    };
    let run = lloyd::design(&q, cells, opts, initial.as_deref(), &[])?;
    let meta = BeamMeta {
        design: BeamDesign::Eigenbeam,
        seed: opts.seed,
        rounds: run.rounds,
        training_size: training.len(),
        training_objective: Some(run.objective),
        min_distance: None,
        converged: run.converged,
    };
    BeamformingCodebook::new(bits, run.entries, budget, training.dims(), meta)
}
