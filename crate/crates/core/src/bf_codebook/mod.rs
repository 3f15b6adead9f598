//! Rank-one (beamforming) codebooks.
//!
//! Every codeword gives each user a unit direction `v(k)` and an amplitude
//! `a(k)`, so user `k` transmits along `w(k) = a(k) v(k)`. Three families
//! are built here: Lloyd-designed eigenbeam codebooks, Grassmannian
//! direction packings with random power splits, and the single-entry
//! statistical beamformer for correlated channels.

mod eigenbeam;
mod grassmann;

pub use eigenbeam::{eigenbeam_centroid, eigenbeam_design, eigenbeam_design_grown};
pub use grassmann::{
    d2, fubini_study, grassmann_codebook, grassmann_design, min_distance, random_codebook,
    random_directions, random_power, rotate_codebook, statistical_beams, statistical_codebook,
    with_random_power, DirectionCodebook, GrassmannOptions, SnapshotPolicy,
};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, SystemDims};
use crate::cov_codebook::cells_for;
use crate::error::{Error, Result};
use crate::numerics::{CVector, HermitianPsd};
use crate::rates::{beam_sum_rate_unchecked, FeedbackCodebook};
use crate::waterfill::{CovarianceSet, PowerBudget, BUDGET_SLACK};

/// Tolerance on `|v| = 1` for stored directions.
pub const UNIT_NORM_TOL: f64 = 1e-10;

/// Relative tolerance on the sum-power equality of beamforming codewords.
pub const SUM_POWER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct BeamEntry {
    pub amplitude: f64,
    pub direction: CVector,
}

impl BeamEntry {
    pub fn new(amplitude: f64, direction: CVector) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::InvalidArgument(format!("amplitude {amplitude} is not a nonnegative number")));
        }
        if (direction.norm() - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "direction has norm {}, expected 1",
                direction.norm()
            )));
        }
        Ok(BeamEntry { amplitude, direction })
    }

    /// The transmit vector `a v`.
    pub fn beam(&self) -> CVector {
        self.direction.scale(self.amplitude)
    }
}

/// One codeword: a beam for every user.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    users: Vec<BeamEntry>,
    beams: Vec<CVector>,
}

impl Beamformer {
    pub fn new(users: Vec<BeamEntry>) -> Result<Self> {
        let first = users
            .first()
            .ok_or_else(|| Error::Dimension("beamformer needs at least one user".into()))?;
        let mt = first.direction.len();
        if users.iter().any(|u| u.direction.len() != mt) {
            return Err(Error::Dimension("beam directions differ in length".into()));
        }
        Ok(Self::from_entries(users))
    }

    pub(crate) fn from_parts(amplitudes: &[f64], directions: &[CVector]) -> Self {
        Self::from_entries(
            amplitudes
                .iter()
                .zip(directions)
                .map(|(&amplitude, v)| BeamEntry {
                    amplitude,
                    direction: v.clone(),
                })
                .collect(),
        )
    }

    fn from_entries(users: Vec<BeamEntry>) -> Self {
        let beams = users.iter().map(BeamEntry::beam).collect();
        Beamformer { users, beams }
    }

    pub fn users(&self) -> &[BeamEntry] {
        &self.users
    }

    pub fn beams(&self) -> &[CVector] {
        &self.beams
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.amplitude).collect()
    }

    pub fn directions(&self) -> Vec<CVector> {
        self.users.iter().map(|u| u.direction.clone()).collect()
    }

    pub fn total_power(&self) -> f64 {
        self.users.iter().map(|u| u.amplitude * u.amplitude).sum()
    }

    /// Rank-one covariances `w w*`.
    pub fn covariances(&self) -> CovarianceSet {
        let blocks = self
            .beams
            .iter()
            .map(|w| HermitianPsd::from_trusted(w * w.adjoint()))
            .collect();
        CovarianceSet::new(blocks).expect("beams share a length")
    }

    pub fn sum_rate(&self, h: &ChannelRealization, sigma2: f64) -> f64 {
        beam_sum_rate_unchecked(h, &self.beams, sigma2)
    }

    fn scaled(&self, factor: f64) -> Self {
        Self::from_entries(
            self.users
                .iter()
                .map(|u| BeamEntry {
                    amplitude: u.amplitude * factor,
                    direction: u.direction.clone(),
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamDesign {
    Eigenbeam,
    Grassmann,
    Random,
    Statistical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamMeta {
    pub design: BeamDesign,
    pub seed: u64,
    pub rounds: usize,
    pub training_size: usize,
    /// Training-average selected rate for rate-driven designs.
    pub training_objective: Option<f64>,
    /// Minimum pairwise Fubini-Study distance of the directions.
    pub min_distance: Option<f64>,
    pub converged: bool,
}

impl BeamMeta {
    pub(crate) fn plain(design: BeamDesign, seed: u64) -> Self {
        BeamMeta {
            design,
            seed,
            rounds: 0,
            training_size: 0,
            training_objective: None,
            min_distance: None,
            converged: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingCodebook {
    bits: u32,
    entries: Vec<Beamformer>,
    budget: PowerBudget,
    dims: SystemDims,
    meta: BeamMeta,
}

fn meets_budget(entry: &Beamformer, budget: &PowerBudget) -> bool {
    match budget {
        PowerBudget::Sum { total } => (entry.total_power() - total).abs() <= SUM_POWER_TOL * total.max(1e-300),
        PowerBudget::Individual { per_user } => entry
            .users
            .iter()
            .zip(per_user)
            .all(|(u, p)| u.amplitude * u.amplitude <= p * (1.0 + BUDGET_SLACK) + BUDGET_SLACK),
    }
}

impl BeamformingCodebook {
    /// Validated codebook. Under a sum budget every codeword must spend the
    /// full power; under individual budgets each user stays within its own.
    pub fn new(
        bits: u32,
        entries: Vec<Beamformer>,
        budget: PowerBudget,
        dims: SystemDims,
        meta: BeamMeta,
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
            if e.users.len() != dims.users || e.users[0].direction.len() != dims.tx_antennas {
                return Err(Error::Dimension(format!("entry {q} does not match {dims}")));
            }
            if !meets_budget(e, &budget) {
                return Err(Error::InvalidArgument(format!(
                    "entry {q} uses power {} against budget {}",
                    e.total_power(),
                    budget.total()
                )));
            }
        }
        Ok(BeamformingCodebook {
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

    pub fn entries(&self) -> &[Beamformer] {
        &self.entries
    }

    pub fn budget(&self) -> &PowerBudget {
        &self.budget
    }

    pub fn dims(&self) -> SystemDims {
        self.dims
    }

    pub fn meta(&self) -> &BeamMeta {
        &self.meta
    }

    /// Same directions and power split at a new total power.
    pub fn scaled_to_power(&self, power: f64) -> Result<Self> {
        let total = self.budget.total();
        if !(power > 0.0) || !(total > 0.0) {
            return Err(Error::InvalidArgument(format!("cannot rescale power {total} to {power}")));
        }
        let factor = power / total;
        let amp = factor.sqrt();
        Self::new(
            self.bits,
            self.entries.iter().map(|e| e.scaled(amp)).collect(),
            self.budget.scaled(factor),
            self.dims,
            self.meta.clone(),
        )
    }

    /// Codewords as rank-one covariance sets.
    pub fn covariance_entries(&self) -> Vec<CovarianceSet> {
        self.entries.iter().map(Beamformer::covariances).collect()
    }
}

impl FeedbackCodebook for BeamformingCodebook {
    fn size(&self) -> usize {
        self.entries.len()
    }

    fn entry_rate(&self, h: &ChannelRealization, index: usize, sigma2: f64) -> f64 {
        self.entries[index].sum_rate(h, sigma2)
    }
}
