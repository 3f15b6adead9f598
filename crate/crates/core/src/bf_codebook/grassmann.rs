//! Grassmannian packing of block-diagonal beam directions.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_gaussian, seeded_rng, uniform_unit_vector, SystemDims};
use crate::cov_codebook::cells_for;
use crate::error::{Error, Result};
use crate::lloyd::{self, check_training_size, Quantizer};
use crate::numerics::{eig_unchecked, CMatrix, CVector, HermitianPsd};
use crate::waterfill::PowerBudget;

use super::{BeamDesign, BeamMeta, Beamformer, BeamformingCodebook};

/// One unit direction per user.
pub type Directions = Vec<CVector>;

fn alignment(a: &[CVector], b: &[CVector]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dotc(y).norm()).product()
}

/// Fubini-Study distance between two block-diagonal direction sets.
pub fn fubini_study(a: &[CVector], b: &[CVector]) -> f64 {
    alignment(a, b).clamp(-1.0, 1.0).acos()
}

/// Packing distortion `-prod |<a(k), b(k)>|^2`, in `[-1, 0]`.
pub fn d2(a: &[CVector], b: &[CVector]) -> f64 {
    let p = alignment(a, b).min(1.0);
    -(p * p)
}

/// Minimum pairwise Fubini-Study distance; a single entry scores `pi/2`.
pub fn min_distance(entries: &[Directions]) -> f64 {
    let mut best = std::f64::consts::FRAC_PI_2;
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            best = best.min(fubini_study(&entries[i], &entries[j]));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotPolicy {
    /// Keep the round with the largest minimum distance.
    #[default]
    MaxMinDistance,
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrassmannOptions {
    pub training_size: usize,
    pub rounds: usize,
    pub restarts: usize,
    pub snapshot: SnapshotPolicy,
    pub seed: u64,
}

impl Default for GrassmannOptions {
    fn default() -> Self {
        GrassmannOptions {
            training_size: 4000,
            rounds: 60,
            restarts: 4,
            snapshot: SnapshotPolicy::MaxMinDistance,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionCodebook {
    pub bits: u32,
    pub dims: SystemDims,
    pub entries: Vec<Directions>,
    pub min_distance: f64,
    /// Minimum distance after every round of the returned run.
    pub history: Vec<f64>,
    pub rounds: usize,
    pub seed: u64,
}

impl DirectionCodebook {
    pub fn new(bits: u32, dims: SystemDims, entries: Vec<Directions>, seed: u64) -> Result<Self> {
        dims.validate()?;
        if entries.len() != cells_for(bits)? {
            return Err(Error::Dimension(format!("{} entries for {bits} bits", entries.len())));
        }
        for e in &entries {
            if e.len() != dims.users
                || e.iter().any(|v| v.len() != dims.tx_antennas || (v.norm() - 1.0).abs() > super::UNIT_NORM_TOL)
            {
                return Err(Error::Dimension(format!("direction entry does not match {dims}")));
            }
        }
        Ok(DirectionCodebook {
            bits,
            dims,
            min_distance: min_distance(&entries),
            entries,
            history: Vec::new(),
            rounds: 0,
            seed,
        })
    }
}

struct PackingQuantizer {
    training: Vec<Directions>,
}

impl Quantizer for PackingQuantizer {
    type Entry = Directions;

    fn samples(&self) -> usize {
        self.training.len()
    }

    fn score(&self, sample: usize, entry: &Directions) -> f64 {
        -d2(entry, &self.training[sample])
    }

    fn centroid(&self, members: &[usize]) -> Result<Directions> {
        let first = &self.training[members[0]];
        let mt = first[0].len();
        Ok((0..first.len())
            .map(|k| {
                let mut r = CMatrix::zeros(mt, mt);
                for &i in members {
                    let g = &self.training[i][k];
                    r += g * g.adjoint();
                }
                eig_unchecked(&r).top().1
            })
            .collect())
    }

    fn seed(&self, sample: usize) -> Result<Directions> {
        Ok(self.training[sample].clone())
    }
}

fn random_set<R: Rng + ?Sized>(dims: SystemDims, rng: &mut R) -> Directions {
    (0..dims.users)
        .map(|_| uniform_unit_vector(dims.tx_antennas, rng))
        .collect()
}

/// Codebook of `2^bits` independent uniformly random direction sets.
pub fn random_directions<R: Rng + ?Sized>(bits: u32, dims: SystemDims, rng: &mut R) -> Result<Vec<Directions>> {
    Ok((0..cells_for(bits)?).map(|_| random_set(dims, rng)).collect())
}

fn pack_once(q: &PackingQuantizer, cells: usize, opts: &GrassmannOptions, restart: usize) -> Result<DirectionCodebook> {
    let mut rng = seeded_rng(opts.seed, 1 + restart as u64);
    let mut entries: Vec<Directions> = rand::seq::index::sample(&mut rng, q.samples(), cells)
        .into_iter()
        .map(|i| q.training[i].clone())
        .collect();
    let dims = SystemDims {
        users: entries[0].len(),
        tx_antennas: entries[0][0].len(),
        rx_antennas: 1,
    };
    let mut history = vec![min_distance(&entries)];
    let mut best = (history[0], 0, entries.clone());
    for round in 1..=opts.rounds {
        let assignment = lloyd::assign(q, &entries);
        entries = lloyd::update(q, cells, &assignment)?;
        let delta = min_distance(&entries);
        history.push(delta);
        let keep = match opts.snapshot {
            SnapshotPolicy::MaxMinDistance => delta > best.0,
            SnapshotPolicy::Last => true,
        };
        if keep {
            best = (delta, round, entries.clone());
        }
    }
    Ok(DirectionCodebook {
        bits: cells.trailing_zeros(),
        dims,
        entries: best.2,
        min_distance: best.0,
        history,
        rounds: best.1,
        seed: opts.seed,
    })
}

/// Lloyd packing of `2^bits` block-diagonal directions on synthetic
/// uniform training directions. `rx_antennas` of `dims` is irrelevant.
pub fn grassmann_design(bits: u32, dims: SystemDims, opts: &GrassmannOptions) -> Result<DirectionCodebook> {
    dims.validate()?;
    if bits == 0 {
        return Err(Error::InvalidArgument("a packing needs at least one bit".into()));
    }
    let cells = cells_for(bits)?;
    check_training_size(opts.training_size, cells)?;
    let mut rng = seeded_rng(opts.seed, 0);
    let q = PackingQuantizer {
        training: (0..opts.training_size).map(|_| random_set(dims, &mut rng)).collect(),
    };
    let runs: Vec<DirectionCodebook> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| pack_once(&q, cells, opts, r))
        .collect::<Result<_>>()?;
    let mut best: Option<DirectionCodebook> = None;
    for mut run in runs {
        run.dims = dims;
        if best.as_ref().is_none_or(|b| run.min_distance > b.min_distance) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Amplitudes `sqrt(P) |x(k)| / |x|` for complex Gaussian `x`: squared
/// amplitudes are uniform on the simplex scaled to `P`.
pub fn random_power<R: Rng + ?Sized>(power: f64, users: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mags: Vec<f64> = (0..users).map(|_| complex_gaussian(rng).norm()).collect();
        let norm = mags.iter().map(|m| m * m).sum::<f64>().sqrt();
        if norm > 1e-150 {
            return mags.iter().map(|m| power.sqrt() * m / norm).collect();
        }
    }
}

/// Attaches an independent random power split to every direction set.
pub fn with_random_power<R: Rng + ?Sized>(entries: &[Directions], power: f64, rng: &mut R) -> Vec<Beamformer> {
    entries
        .iter()
        .map(|v| Beamformer::from_parts(&random_power(power, v.len(), rng), v))
        .collect()
}

fn beam_codebook(
    bits: u32,
    dims: SystemDims,
    entries: &[Directions],
    power: f64,
    meta: BeamMeta,
) -> Result<BeamformingCodebook> {
    let mut rng = seeded_rng(meta.seed, 0x5057);
    let beams = with_random_power(entries, power, &mut rng);
    BeamformingCodebook::new(bits, beams, PowerBudget::sum(power), dims, meta)
}

/// Beamforming codebook from a packing with frozen random power splits.
pub fn grassmann_codebook(directions: &DirectionCodebook, power: f64) -> Result<BeamformingCodebook> {
    let meta = BeamMeta {
        design: BeamDesign::Grassmann,
        seed: directions.seed,
        rounds: directions.rounds,
        training_size: 0,
        training_objective: None,
        min_distance: Some(directions.min_distance),
        converged: true,
    };
    beam_codebook(directions.bits, directions.dims, &directions.entries, power, meta)
}

/// Random-direction, random-power codebook.
pub fn random_codebook(bits: u32, dims: SystemDims, power: f64, seed: u64) -> Result<BeamformingCodebook> {
    let entries = random_directions(bits, dims, &mut seeded_rng(seed, 0))?;
    let mut meta = BeamMeta::plain(BeamDesign::Random, seed);
    meta.min_distance = Some(min_distance(&entries));
    beam_codebook(bits, dims, &entries, power, meta)
}

/// Top eigenvector of each user's transmit correlation.
pub fn statistical_beams(correlations: &[HermitianPsd]) -> Directions {
    correlations.iter().map(|r| r.eig().top().1).collect()
}

/// The single-entry statistical beamformer with equal power `P/K`.
pub fn statistical_codebook(
    correlations: &[HermitianPsd],
    dims: SystemDims,
    power: f64,
) -> Result<BeamformingCodebook> {
    if correlations.len() != dims.users || correlations.iter().any(|r| r.dim() != dims.tx_antennas) {
        return Err(Error::Dimension(format!("correlations do not match {dims}")));
    }
    let amp = (power / dims.users as f64).sqrt();
    let entry = Beamformer::from_parts(&vec![amp; dims.users], &statistical_beams(correlations));
    BeamformingCodebook::new(0, vec![entry], PowerBudget::sum(power), dims, BeamMeta::plain(BeamDesign::Statistical, 0))
}

/// Unitary reflection taking unit `x` to `y` times a phase.
fn householder(x: &CVector, y: &CVector) -> Option<(CVector, CVector)> {
    let inner = y.dotc(x);
    let phase = if inner.norm() > 0.0 { inner / inner.norm() } else { num_complex::Complex64::new(1.0, 0.0) };
    let u = x - y * phase;
    let n2 = u.norm_squared();
    (n2 > 1e-24).then(|| (u.clone(), u.unscale(n2)))
}

/// Rotates a packing so its first entry lines up with `target`.
///
/// Each user gets the reflection `I - 2 u u* / |u|^2` with
/// `u = v1 - e^{i phi} target`, which maps the first direction onto the
/// target up to a phase and keeps all pairwise distances.
pub fn rotate_codebook(codebook: &DirectionCodebook, target: &[CVector]) -> Result<DirectionCodebook> {
    let first = &codebook.entries[0];
    if target.len() != first.len() || target.iter().zip(first).any(|(t, v)| t.len() != v.len()) {
        return Err(Error::Dimension("rotation target does not match the codebook".into()));
    }
    let reflections: Vec<Option<(CVector, CVector)>> = first
        .iter()
        .zip(target)
        .map(|(v, t)| householder(v, &t.unscale(t.norm())))
        .collect();
    let entries = codebook
        .entries
        .iter()
        .map(|e| {
            e.iter()
                .zip(&reflections)
                .map(|(v, r)| match r {
                    Some((u, w)) => v - u * (w.dotc(v) * 2.0),
                    None => v.clone(),
                })
                .collect()
        })
        .collect();
    Ok(DirectionCodebook {
        entries,
        history: codebook.history.clone(),
        ..codebook.clone()
    })
}
