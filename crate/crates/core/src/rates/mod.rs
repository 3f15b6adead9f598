//! Sum-rate evaluation, codeword selection and the reference schemes.

mod region;

pub use region::{region_2user, Pentagon, RatePoint2U, RegionEstimate, RegionPolygon};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::numerics::{log2_det_i_plus_unchecked, CMatrix, CVector};
use crate::waterfill::{iwf, single_user_capacity, CovarianceSet, IwfOptions, PowerBudget};

fn check_cov_dims(h: &ChannelRealization, q: &CovarianceSet) -> Result<()> {
    let dims = h.dims();
    if q.users() != dims.users || q.tx_antennas() != dims.tx_antennas {
        return Err(Error::Dimension(format!(
            "covariance set is {} users x {} antennas, channel is {dims}",
            q.users(),
            q.tx_antennas()
        )));
    }
    Ok(())
}

/// `log2 det(I + sigma^-2 sum_k H(k) Q(k) H(k)*)`.
pub fn sum_rate(h: &ChannelRealization, q: &CovarianceSet, sigma2: f64) -> Result<f64> {
    check_cov_dims(h, q)?;
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument("noise variance must be positive".into()));
    }
    Ok(sum_rate_unchecked(h, q, sigma2))
}

pub(crate) fn sum_rate_unchecked(h: &ChannelRealization, q: &CovarianceSet, sigma2: f64) -> f64 {
    let rows = h.dims().rx_antennas;
    let mut acc = CMatrix::zeros(rows, rows);
    for (b, qk) in h.blocks().iter().zip(q.blocks()) {
        acc += b * qk.matrix() * b.adjoint();
    }
    log2_det_i_plus_unchecked(1.0 / sigma2, &acc)
}

/// Rate of user `user` alone: `log2 det(I + sigma^-2 H(k) Q(k) H(k)*)`.
pub(crate) fn user_rate_unchecked(
    h: &ChannelRealization,
    q: &CovarianceSet,
    user: usize,
    sigma2: f64,
) -> f64 {
    let b = h.block(user);
    log2_det_i_plus_unchecked(1.0 / sigma2, &(b * q.block(user).matrix() * b.adjoint()))
}

/// Sum rate of rank-one transmission with per-user vectors `w(k)`,
/// evaluated on the `K x K` Gramian of the effective vectors `H(k) w(k)`.
pub fn beam_sum_rate(h: &ChannelRealization, beams: &[CVector], sigma2: f64) -> Result<f64> {
    let dims = h.dims();
    if beams.len() != dims.users || beams.iter().any(|w| w.len() != dims.tx_antennas) {
        return Err(Error::Dimension(format!(
            "beamformer shape does not match channel {dims}"
        )));
    }
    Ok(beam_sum_rate_unchecked(h, beams, sigma2))
}

pub(crate) fn beam_sum_rate_unchecked(h: &ChannelRealization, beams: &[CVector], sigma2: f64) -> f64 {
    let rows = h.dims().rx_antennas;
    let mut effective = CMatrix::zeros(rows, beams.len());
    for (k, w) in beams.iter().enumerate() {
        effective.set_column(k, &(h.block(k) * w));
    }
    log2_det_i_plus_unchecked(1.0 / sigma2, &(effective.adjoint() * effective))
}

/// A finite set of transmit strategies indexed by the fed-back index.
pub trait FeedbackCodebook: Sync {
    fn size(&self) -> usize;
    fn entry_rate(&self, h: &ChannelRealization, index: usize, sigma2: f64) -> f64;
}

impl FeedbackCodebook for [CovarianceSet] {
    fn size(&self) -> usize {
        self.len()
    }

    fn entry_rate(&self, h: &ChannelRealization, index: usize, sigma2: f64) -> f64 {
        sum_rate_unchecked(h, &self[index], sigma2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    /// Zero-based codeword index.
    pub index: usize,
    pub bits: f64,
}

/// Best codeword for `h`; ties go to the lowest index.
pub fn select<C: FeedbackCodebook + ?Sized>(h: &ChannelRealization, codebook: &C, sigma2: f64) -> Selection {
    let mut best = Selection {
        index: 0,
        bits: codebook.entry_rate(h, 0, sigma2),
    };
    for index in 1..codebook.size() {
        let bits = codebook.entry_rate(h, index, sigma2);
        if bits > best.bits {
            best = Selection { index, bits };
        }
    }
    best
}

/// Sum rate with perfect transmit CSI: iterative waterfilling on `h`.
pub fn full_csi_rate(h: &ChannelRealization, budget: &PowerBudget, sigma2: f64) -> Result<f64> {
    full_csi_rate_with(h, budget, sigma2, &IwfOptions::default())
}

pub fn full_csi_rate_with(
    h: &ChannelRealization,
    budget: &PowerBudget,
    sigma2: f64,
    opts: &IwfOptions,
) -> Result<f64> {
    budget.validate(h.dims().users)?;
    let sol = iwf(h.blocks(), budget, sigma2, opts)?;
    Ok(sum_rate_unchecked(h, &sol.covariances, sigma2))
}

/// Equal power over all antennas of each user (no transmit CSI).
pub fn no_feedback_covariances(dims: crate::channel::SystemDims, budget: &PowerBudget) -> CovarianceSet {
    let powers = match budget {
        PowerBudget::Sum { total } => vec![total / dims.users as f64; dims.users],
        PowerBudget::Individual { per_user } => per_user.clone(),
    };
    CovarianceSet::uniform(dims.tx_antennas, &powers)
}

pub fn no_feedback_rate(h: &ChannelRealization, budget: &PowerBudget, sigma2: f64) -> Result<f64> {
    budget.validate(h.dims().users)?;
    Ok(sum_rate_unchecked(
        h,
        &no_feedback_covariances(h.dims(), budget),
        sigma2,
    ))
}

/// Time sharing: each user alone for `1/K` of the time with full power and
/// full CSI.
pub fn tdma_rate(h: &ChannelRealization, power: f64, sigma2: f64) -> Result<f64> {
    let users = h.blocks().len();
    let mut total = 0.0;
    for b in h.blocks() {
        total += single_user_capacity(b, power, sigma2)?;
    }
    Ok(total / users as f64)
}

/// Pointwise ratio `numerator[i] / denominator[i]`.
pub fn rate_ratio(numerator: &[f64], denominator: &[f64]) -> Result<Vec<f64>> {
    if numerator.len() != denominator.len() {
        return Err(Error::Dimension("curves differ in length".into()));
    }
    Ok(numerator
        .iter()
        .zip(denominator)
        .map(|(a, b)| a / b)
        .collect())
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub draws: usize,
}

impl MonteCarloEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return MonteCarloEstimate {
                mean: f64::NAN,
                stderr: f64::NAN,
                draws: 0,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        MonteCarloEstimate {
            mean,
            stderr,
            draws: n,
        }
    }
}

/// Evaluates `f` on every draw in parallel and averages in draw order,
/// so the result does not depend on the worker count.
pub fn monte_carlo<F>(draws: &[ChannelRealization], f: F) -> Result<MonteCarloEstimate>
where
    F: Fn(&ChannelRealization) -> Result<f64> + Sync + Send,
{
    let samples: Vec<f64> = draws.par_iter().map(f).collect::<Result<_>>()?;
    Ok(MonteCarloEstimate::from_samples(&samples))
}

/// Monte Carlo mean of the selected rate over `draws`.
pub fn expected_selected_rate<C: FeedbackCodebook + ?Sized>(
    draws: &[ChannelRealization],
    codebook: &C,
    sigma2: f64,
) -> MonteCarloEstimate {
    let samples: Vec<f64> = draws
        .par_iter()
        .map(|h| select(h, codebook, sigma2).bits)
        .collect();
    MonteCarloEstimate::from_samples(&samples)
}
