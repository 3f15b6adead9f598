//! Power allocation: single-user waterfilling and the two iterative
//! waterfilling schemes for the multiple-access sum-rate problem.
//!
//! Both iterative solvers maximize
//! `log2 det(I + sigma^-2 * sum_k S(k) Q(k) S(k)*)` over per-user
//! covariances `Q(k)`. The individual-power version is cyclic block
//! coordinate ascent; the sum-power version waterfills all users jointly
//! against their interference-whitened channels under one shared water
//! level and then averages with the previous iterate (weight `1/K`), which
//! keeps the objective monotone for any number of users.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    eig_unchecked, hpd_inverse, log2_det_i_plus_unchecked, max_abs, CMatrix, HermitianPsd,
    ACTIVITY_FLOOR,
};

/// Channels with every entry below this magnitude are treated as absent.
const ZERO_CHANNEL: f64 = 1e-150;

/// Relative slack allowed on trace constraints.
pub const BUDGET_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PowerBudget {
    /// `sum_k Tr Q(k) <= total`.
    Sum { total: f64 },
    /// `Tr Q(k) <= per_user[k]`.
    Individual { per_user: Vec<f64> },
}

impl PowerBudget {
    pub fn sum(total: f64) -> Self {
        PowerBudget::Sum { total }
    }

    pub fn individual(per_user: Vec<f64>) -> Self {
        PowerBudget::Individual { per_user }
    }

    pub fn validate(&self, users: usize) -> Result<()> {
        let ok = |p: f64| p > 0.0 && p.is_finite();
        match self {
            PowerBudget::Sum { total } if ok(*total) => Ok(()),
            PowerBudget::Sum { total } => Err(Error::InvalidArgument(format!(
                "sum power must be positive and finite, got {total}"
            ))),
            PowerBudget::Individual { per_user } => {
                if per_user.len() != users {
                    return Err(Error::Dimension(format!(
                        "{} individual powers for {users} users",
                        per_user.len()
                    )));
                }
                if let Some(p) = per_user.iter().find(|&&p| !ok(p)) {
                    return Err(Error::InvalidArgument(format!(
                        "individual powers must be positive and finite, got {p}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn total(&self) -> f64 {
        match self {
            PowerBudget::Sum { total } => *total,
            PowerBudget::Individual { per_user } => per_user.iter().sum(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            PowerBudget::Sum { total } => PowerBudget::Sum {
                total: total * factor,
            },
            PowerBudget::Individual { per_user } => PowerBudget::Individual {
                per_user: per_user.iter().map(|p| p * factor).collect(),
            },
        }
    }

    pub fn is_satisfied_by(&self, cov: &CovarianceSet) -> bool {
        let traces = cov.traces();
        match self {
            PowerBudget::Sum { total } => traces.iter().sum::<f64>() <= total * (1.0 + BUDGET_SLACK),
            PowerBudget::Individual { per_user } => {
                traces.len() == per_user.len()
                    && traces
                        .iter()
                        .zip(per_user)
                        .all(|(t, p)| *t <= p * (1.0 + BUDGET_SLACK))
            }
        }
    }
}

/// Per-user transmit covariances `Q(1) ... Q(K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSet {
    blocks: Vec<HermitianPsd>,
}

impl CovarianceSet {
    pub fn new(blocks: Vec<HermitianPsd>) -> Result<Self> {
        let dim = blocks
            .first()
            .map(HermitianPsd::dim)
            .ok_or_else(|| Error::Dimension("covariance set needs at least one user".into()))?;
        if blocks.iter().any(|b| b.dim() != dim) {
            return Err(Error::Dimension("covariance blocks differ in size".into()));
        }
        Ok(CovarianceSet { blocks })
    }

    pub fn zeros(users: usize, tx_antennas: usize) -> Self {
        CovarianceSet {
            blocks: vec![HermitianPsd::zeros(tx_antennas); users],
        }
    }

    /// `Q(k) = (powers[k] / Mt) I`.
    pub fn uniform(tx_antennas: usize, powers: &[f64]) -> Self {
        CovarianceSet {
            blocks: powers
                .iter()
                .map(|&p| HermitianPsd::scaled_identity(tx_antennas, p / tx_antennas as f64))
                .collect(),
        }
    }

    pub fn users(&self) -> usize {
        self.blocks.len()
    }

    pub fn tx_antennas(&self) -> usize {
        self.blocks[0].dim()
    }

    pub fn blocks(&self) -> &[HermitianPsd] {
        &self.blocks
    }

    pub fn block(&self, user: usize) -> &HermitianPsd {
        &self.blocks[user]
    }

    pub fn traces(&self) -> Vec<f64> {
        self.blocks.iter().map(HermitianPsd::trace).collect()
    }

    pub fn total_power(&self) -> f64 {
        self.traces().iter().sum()
    }

    pub fn block_diagonal(&self) -> CMatrix {
        let mt = self.tx_antennas();
        let n = mt * self.users();
        let mut out = CMatrix::zeros(n, n);
        for (k, b) in self.blocks.iter().enumerate() {
            out.view_mut((k * mt, k * mt), (mt, mt)).copy_from(b.matrix());
        }
        out
    }
}

/// Classic waterfilling over parallel modes with gains `eigenvalues`.
///
/// Returns `p[i] = max(0, mu - sigma2 / eigenvalues[i])` with the water
/// level `mu` chosen so the powers sum to `power`. Modes at or below
/// `1e-300` get no power. Output order matches input order.
pub fn waterfill_single(eigenvalues: &[f64], power: f64, sigma2: f64) -> Result<Vec<f64>> {
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::InvalidArgument(format!("power must be positive, got {power}")));
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    let mut active: Vec<usize> = (0..eigenvalues.len())
        .filter(|&i| eigenvalues[i] > ACTIVITY_FLOOR)
        .collect();
    if active.is_empty() {
        return Err(Error::NoActiveModes);
    }
    // Strongest first; floor levels sigma2/lambda are then ascending.
    active.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
    let floors: Vec<f64> = active.iter().map(|&i| sigma2 / eigenvalues[i]).collect();

    let mut prefix = 0.0;
    let mut level = floors[0] + power;
    let mut count = 1;
    for m in 1..=floors.len() {
        prefix += floors[m - 1];
        let mu = (power + prefix) / m as f64;
        if mu > floors[m - 1] {
            level = mu;
            count = m;
        } else {
            break;
        }
    }
    let mut out = vec![0.0; eigenvalues.len()];
    for (&i, &floor) in active.iter().zip(&floors).take(count) {
        out[i] = (level - floor).max(0.0);
    }
    Ok(out)
}

/// Capacity in bits of one user alone on `h` with power `power`.
pub fn single_user_capacity(h: &CMatrix, power: f64, sigma2: f64) -> Result<f64> {
    let eig = eig_unchecked(&(h.adjoint() * h));
    match waterfill_single(&eig.values, power, sigma2) {
        Ok(p) => Ok(eig
            .values
            .iter()
            .zip(&p)
            .map(|(l, p)| (1.0 + l.max(0.0) * p / sigma2).log2())
            .sum()),
        Err(Error::NoActiveModes) => Ok(0.0),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IwfOptions {
    /// Stop when the relative objective change falls below this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for IwfOptions {
    fn default() -> Self {
        IwfOptions {
            tol: 1e-9,
            max_iters: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IwfSolution {
    pub covariances: CovarianceSet,
    /// Objective in bits at `covariances`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each iteration, starting with the initial point.
    pub history: Vec<f64>,
    /// Users whose channel is zero; they hold zero (sum budget) or
    /// uniform (individual budget) covariance.
    pub inactive_users: Vec<usize>,
}

/// `log2 det(I + sigma^-2 sum_k S(k) Q(k) S(k)*)`.
pub fn mac_objective(channels: &[CMatrix], cov: &CovarianceSet, sigma2: f64) -> f64 {
    log2_det_i_plus_unchecked(1.0 / sigma2, &received_covariance(channels, cov))
}

fn received_covariance(channels: &[CMatrix], cov: &CovarianceSet) -> CMatrix {
    let rows = channels[0].nrows();
    let mut acc = CMatrix::zeros(rows, rows);
    for (s, q) in channels.iter().zip(cov.blocks()) {
        acc += s * q.matrix() * s.adjoint();
    }
    acc
}

fn check_inputs(channels: &[CMatrix], sigma2: f64) -> Result<(usize, usize)> {
    let first = channels
        .first()
        .ok_or_else(|| Error::Dimension("no channels given".into()))?;
    let shape = first.shape();
    if shape.0 == 0 || shape.1 == 0 {
        return Err(Error::Dimension("empty channel matrix".into()));
    }
    if channels.iter().any(|c| c.shape() != shape) {
        return Err(Error::Dimension("channel matrices differ in shape".into()));
    }
    if !channels.iter().all(crate::numerics::all_finite) {
        return Err(Error::NonFinite);
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    Ok(shape)
}

/// Whitened Gramian `S(k)* Z^-1 S(k)` with `Z` the noise-plus-interference
/// covariance seen by user `k`.
fn whitened_gram(s: &CMatrix, interference: &CMatrix) -> CMatrix {
    let zinv = hpd_inverse(interference);
    s.adjoint() * zinv * s
}

fn noise_plus(received: &CMatrix, sigma2: f64) -> CMatrix {
    let mut z = received.clone();
    for i in 0..z.nrows() {
        z[(i, i)] += Complex64::new(sigma2, 0.0);
    }
    z
}

/// Sum-power iterative waterfilling.
pub fn iwf_sum_power(
    channels: &[CMatrix],
    power: f64,
    sigma2: f64,
    opts: &IwfOptions,
) -> Result<IwfSolution> {
    let (_, mt) = check_inputs(channels, sigma2)?;
    PowerBudget::sum(power).validate(channels.len())?;
    let users = channels.len();
    let live: Vec<bool> = channels.iter().map(|s| max_abs(s) > ZERO_CHANNEL).collect();
    let inactive_users: Vec<usize> = (0..users).filter(|&k| !live[k]).collect();
    let n_live = users - inactive_users.len();
    if n_live == 0 {
        return Ok(IwfSolution {
            covariances: CovarianceSet::zeros(users, mt),
            objective: 0.0,
            iterations: 0,
            converged: true,
            history: vec![0.0],
            inactive_users,
        });
    }

    let start: Vec<f64> = live
        .iter()
        .map(|&l| if l { power / n_live as f64 } else { 0.0 })
        .collect();
    let mut cov = CovarianceSet::uniform(mt, &start);
    let mut objective = mac_objective(channels, &cov, sigma2);
    let mut history = vec![objective];
    let mut converged = false;
    let mut iterations = 0;
    let weight = 1.0 / n_live as f64;

    while iterations < opts.max_iters {
        iterations += 1;
        let total = received_covariance(channels, &cov);
        let mut gains = Vec::with_capacity(users);
        for k in 0..users {
            if !live[k] {
                gains.push(None);
                continue;
            }
            let own = &channels[k] * cov.block(k).matrix() * channels[k].adjoint();
            let z = noise_plus(&(&total - own), sigma2);
            gains.push(Some(eig_unchecked(&whitened_gram(&channels[k], &z))));
        }
        let all_modes: Vec<f64> = gains
            .iter()
            .flat_map(|g| match g {
                Some(e) => e.values.clone(),
                None => vec![0.0; mt],
            })
            .collect();
        let powers = match waterfill_single(&all_modes, power, 1.0) {
            Ok(p) => p,
            Err(Error::NoActiveModes) => break,
            Err(e) => return Err(e),
        };
        let fresh: Vec<HermitianPsd> = gains
            .iter()
            .enumerate()
            .map(|(k, g)| match g {
                Some(e) => HermitianPsd::from_eigen_parts(&e.vectors, &powers[k * mt..(k + 1) * mt]),
                None => HermitianPsd::zeros(mt),
            })
            .collect();
        let fresh = CovarianceSet { blocks: fresh };
        let averaged = CovarianceSet {
            blocks: fresh
                .blocks
                .iter()
                .zip(&cov.blocks)
                .map(|(f, o)| {
                    HermitianPsd::from_trusted(
                        f.matrix().scale(weight) + o.matrix().scale(1.0 - weight),
                    )
                })
                .collect(),
        };
        let f_fresh = mac_objective(channels, &fresh, sigma2);
        let f_avg = mac_objective(channels, &averaged, sigma2);
        let (next, f_next) = if f_fresh > f_avg {
            (fresh, f_fresh)
        } else {
            (averaged, f_avg)
        };
        if f_next < objective {
            // Roundoff at the fixed point; keep the better iterate.
            history.push(objective);
            converged = true;
            break;
        }
        let change = f_next - objective;
        cov = next;
        objective = f_next;
        history.push(objective);
        if change <= opts.tol * objective.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    Ok(IwfSolution {
        covariances: cov,
        objective,
        iterations,
        converged,
        history,
        inactive_users,
    })
}

/// Individual-power iterative waterfilling (cyclic over users).
pub fn iwf_individual(
    channels: &[CMatrix],
    powers: &[f64],
    sigma2: f64,
    opts: &IwfOptions,
) -> Result<IwfSolution> {
    let (_, mt) = check_inputs(channels, sigma2)?;
    let users = channels.len();
    PowerBudget::individual(powers.to_vec()).validate(users)?;
    let live: Vec<bool> = channels.iter().map(|s| max_abs(s) > ZERO_CHANNEL).collect();
    let mut inactive_users: Vec<usize> = (0..users).filter(|&k| !live[k]).collect();

    let mut blocks: Vec<HermitianPsd> = (0..users)
        .map(|k| {
            if live[k] {
                HermitianPsd::zeros(mt)
            } else {
                HermitianPsd::scaled_identity(mt, powers[k] / mt as f64)
            }
        })
        .collect();
    let mut cov = CovarianceSet {
        blocks: blocks.clone(),
    };
    let mut objective = mac_objective(channels, &cov, sigma2);
    let mut history = vec![objective];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        for k in 0..users {
            if !live[k] {
                continue;
            }
            let current = CovarianceSet {
                blocks: blocks.clone(),
            };
            let total = received_covariance(channels, &current);
            let own = &channels[k] * blocks[k].matrix() * channels[k].adjoint();
            let z = noise_plus(&(&total - own), sigma2);
            let eig = eig_unchecked(&whitened_gram(&channels[k], &z));
            match waterfill_single(&eig.values, powers[k], 1.0) {
                Ok(p) => blocks[k] = HermitianPsd::from_eigen_parts(&eig.vectors, &p),
                Err(Error::NoActiveModes) => {
                    blocks[k] = HermitianPsd::scaled_identity(mt, powers[k] / mt as f64);
                    if !inactive_users.contains(&k) {
                        inactive_users.push(k);
                    }
                }
                Err(e) => return Err(e),
            }
        }
        let next = CovarianceSet {
            blocks: blocks.clone(),
        };
        let f_next = mac_objective(channels, &next, sigma2);
        if f_next < objective && iterations > 1 {
            history.push(objective);
            converged = true;
            break;
        }
        let change = (f_next - objective).abs();
        cov = next;
        objective = f_next;
        history.push(objective);
        if iterations > 1 && change <= opts.tol * objective.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    inactive_users.sort_unstable();

    Ok(IwfSolution {
        covariances: cov,
        objective,
        iterations,
        converged,
        history,
        inactive_users,
    })
}

/// Dispatches on the budget kind.
pub fn iwf(
    channels: &[CMatrix],
    budget: &PowerBudget,
    sigma2: f64,
    opts: &IwfOptions,
) -> Result<IwfSolution> {
    match budget {
        PowerBudget::Sum { total } => iwf_sum_power(channels, *total, sigma2, opts),
        PowerBudget::Individual { per_user } => iwf_individual(channels, per_user, sigma2, opts),
    }
}
