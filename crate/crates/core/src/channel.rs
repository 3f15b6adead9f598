//! Flat Rayleigh fading models for the multi-user uplink.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{c64, CMatrix, CVector, HermitianPsd};
use num_complex::Complex64;

/// Number of users and antennas: a `(K, Mt, Mr)` system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemDims {
    pub users: usize,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
}

impl SystemDims {
    pub fn new(users: usize, tx_antennas: usize, rx_antennas: usize) -> Result<Self> {
        let dims = SystemDims {
            users,
            tx_antennas,
            rx_antennas,
        };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.tx_antennas == 0 || self.rx_antennas == 0 {
            return Err(Error::InvalidArgument(format!(
                "system dimensions must be positive, got {self}"
            )));
        }
        Ok(())
    }

    /// Columns of the stacked channel `[H1 ... HK]`.
    pub fn stacked_cols(&self) -> usize {
        self.users * self.tx_antennas
    }
}

impl std::fmt::Display for SystemDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.users, self.tx_antennas, self.rx_antennas)
    }
}

/// Deterministic generator for a `(seed, stream)` pair.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Circular-symmetric complex Gaussian with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Unit vector drawn uniformly from the complex sphere in `dim` dimensions.
pub fn uniform_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    loop {
        let v = CVector::from_fn(dim, |_, _| complex_gaussian(rng));
        let n = v.norm();
        if n > 1e-12 {
            return v.unscale(n);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelKind {
    IidRayleigh,
    /// Transmit-correlated fading `H(k) = Hw(k) * Rt(k)^(1/2)`, one
    /// correlation matrix per user.
    Kronecker { correlations: Vec<HermitianPsd> },
}

#[derive(Debug, Clone)]
pub struct ChannelModel {
    dims: SystemDims,
    kind: ChannelKind,
    roots: Vec<CMatrix>,
}

impl ChannelModel {
    pub fn iid(dims: SystemDims) -> Self {
        ChannelModel {
            dims,
            kind: ChannelKind::IidRayleigh,
            roots: Vec::new(),
        }
    }

    /// Kronecker model; each correlation must be `Mt x Mt` with trace `Mt`.
    pub fn kronecker(dims: SystemDims, correlations: Vec<HermitianPsd>) -> Result<Self> {
        dims.validate()?;
        if correlations.len() != dims.users {
            return Err(Error::Dimension(format!(
                "expected {} correlation matrices, got {}",
                dims.users,
                correlations.len()
            )));
        }
        let mt = dims.tx_antennas as f64;
        for (k, r) in correlations.iter().enumerate() {
            if r.dim() != dims.tx_antennas {
                return Err(Error::Dimension(format!(
                    "correlation of user {k} is {0}x{0}, expected {1}x{1}",
                    r.dim(),
                    dims.tx_antennas
                )));
            }
            if (r.trace() - mt).abs() > 1e-9 * mt {
                return Err(Error::InvalidArgument(format!(
                    "correlation of user {k} has trace {}, expected {mt}",
                    r.trace()
                )));
            }
        }
        let roots = correlations.iter().map(HermitianPsd::sqrt).collect();
        Ok(ChannelModel {
            dims,
            kind: ChannelKind::Kronecker { correlations },
            roots,
        })
    }

    /// Kronecker model with the same diagonal correlation for every user.
    pub fn kronecker_diagonal(dims: SystemDims, eigenvalues: &[f64]) -> Result<Self> {
        if eigenvalues.len() != dims.tx_antennas {
            return Err(Error::Dimension(format!(
                "expected {} correlation eigenvalues, got {}",
                dims.tx_antennas,
                eigenvalues.len()
            )));
        }
        let r = HermitianPsd::diagonal(eigenvalues)?;
        Self::kronecker(dims, vec![r; dims.users])
    }

    pub fn dims(&self) -> SystemDims {
        self.dims
    }

    pub fn kind(&self) -> &ChannelKind {
        &self.kind
    }

    /// Transmit correlation of `user` (identity for i.i.d. fading).
    pub fn correlation(&self, user: usize) -> HermitianPsd {
        match &self.kind {
            ChannelKind::IidRayleigh => HermitianPsd::scaled_identity(self.dims.tx_antennas, 1.0),
            ChannelKind::Kronecker { correlations } => correlations[user].clone(),
        }
    }

    pub fn correlations(&self) -> Vec<HermitianPsd> {
        (0..self.dims.users).map(|k| self.correlation(k)).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let SystemDims {
            users,
            tx_antennas,
            rx_antennas,
        } = self.dims;
        let blocks = (0..users)
            .map(|k| {
                let white = CMatrix::from_fn(rx_antennas, tx_antennas, |_, _| complex_gaussian(rng));
                match self.kind {
                    ChannelKind::IidRayleigh => white,
                    ChannelKind::Kronecker { .. } => white * &self.roots[k],
                }
            })
            .collect();
        ChannelRealization::from_blocks_unchecked(blocks)
    }

    pub fn sample_many<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<ChannelRealization> {
        (0..count).map(|_| self.sample(rng)).collect()
    }
}

/// One fading draw: per-user `Mr x Mt` blocks and their horizontal stack.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    blocks: Vec<CMatrix>,
    stacked: CMatrix,
}

impl ChannelRealization {
    pub fn from_blocks(blocks: Vec<CMatrix>) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::Dimension("a realization needs at least one user".into()))?;
        let (rows, cols) = first.shape();
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("empty channel block".into()));
        }
        if let Some(k) = blocks.iter().position(|b| b.shape() != (rows, cols)) {
            return Err(Error::Dimension(format!(
                "block {k} has shape {:?}, expected {:?}",
                blocks[k].shape(),
                (rows, cols)
            )));
        }
        if !blocks.iter().all(crate::numerics::all_finite) {
            return Err(Error::NonFinite);
        }
        Ok(Self::from_blocks_unchecked(blocks))
    }

    pub(crate) fn from_blocks_unchecked(blocks: Vec<CMatrix>) -> Self {
        let rows = blocks[0].nrows();
        let cols = blocks[0].ncols();
        let mut stacked = CMatrix::zeros(rows, cols * blocks.len());
        for (k, b) in blocks.iter().enumerate() {
            stacked.view_mut((0, k * cols), (rows, cols)).copy_from(b);
        }
        ChannelRealization { blocks, stacked }
    }

    /// Scalar-channel convenience: one `Mr x 1` column per user.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Result<Self> {
        let blocks = columns
            .iter()
            .map(|c| CMatrix::from_column_slice(c.len(), 1, c))
            .collect();
        Self::from_blocks(blocks)
    }

    pub fn dims(&self) -> SystemDims {
        SystemDims {
            users: self.blocks.len(),
            tx_antennas: self.blocks[0].ncols(),
            rx_antennas: self.blocks[0].nrows(),
        }
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, user: usize) -> &CMatrix {
        &self.blocks[user]
    }

    pub fn stacked(&self) -> &CMatrix {
        &self.stacked
    }

    /// `H* H` of the stacked channel.
    pub fn gram(&self) -> CMatrix {
        self.stacked.adjoint() * &self.stacked
    }

    /// `H(k)* H(k)` for one user.
    pub fn user_gram(&self, user: usize) -> CMatrix {
        self.blocks[user].adjoint() * &self.blocks[user]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_blocks_unchecked(self.blocks.iter().map(|b| b.scale(factor)).collect())
    }
}
