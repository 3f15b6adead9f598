//! JSON storage for codebooks.
//!
//! Complex matrices are written as `{rows, cols, re, im}` with row-major
//! real and imaginary parts. Floats round-trip exactly, and every loaded
//! codebook passes the same validation as a freshly designed one.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bf_codebook::{BeamEntry, BeamMeta, Beamformer, BeamformingCodebook};
use crate::channel::SystemDims;
use crate::cov_codebook::{CovarianceCodebook, DesignMeta};
use crate::error::{Error, Result};
use crate::numerics::{CMatrix, CVector, HermitianPsd};
use crate::waterfill::{CovarianceSet, PowerBudget};

pub const COVARIANCE_FORMAT: &str = "mac-codebook/covariance";
pub const BEAMFORMING_FORMAT: &str = "mac-codebook/beamforming";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        MatrixJson { rows, cols, re, im }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.rows * self.cols;
        if self.re.len() != n || self.im.len() != n {
            return Err(Error::Format(format!(
                "{}x{} matrix with {} real and {} imaginary parts",
                self.rows,
                self.cols,
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(CMatrix::from_fn(self.rows, self.cols, |i, j| {
            let k = i * self.cols + j;
            num_complex::Complex64::new(self.re[k], self.im[k])
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorJson {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl VectorJson {
    fn from_vector(v: &CVector) -> Self {
        VectorJson {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }

    fn to_vector(&self) -> Result<CVector> {
        if self.re.len() != self.im.len() {
            return Err(Error::Format("vector parts differ in length".into()));
        }
        Ok(CVector::from_iterator(
            self.re.len(),
            self.re.iter().zip(&self.im).map(|(&r, &i)| num_complex::Complex64::new(r, i)),
        ))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CovarianceFile {
    format: String,
    version: u32,
    bits: u32,
    dims: SystemDims,
    budget: PowerBudget,
    meta: DesignMeta,
    /// One list of per-user covariance blocks per codeword.
    entries: Vec<Vec<MatrixJson>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BeamUserJson {
    amplitude: f64,
    direction: VectorJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BeamformingFile {
    format: String,
    version: u32,
    bits: u32,
    dims: SystemDims,
    budget: PowerBudget,
    meta: BeamMeta,
    entries: Vec<Vec<BeamUserJson>>,
}

fn check_header(format: &str, version: u32, expected: &str) -> Result<()> {
    if format != expected {
        return Err(Error::Format(format!("expected format `{expected}`, found `{format}`")));
    }
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    Ok(())
}

pub fn covariance_to_json(cb: &CovarianceCodebook) -> Result<String> {
    let file = CovarianceFile {
        format: COVARIANCE_FORMAT.into(),
        version: VERSION,
        bits: cb.bits(),
        dims: cb.dims(),
        budget: cb.budget().clone(),
        meta: cb.meta().clone(),
        entries: cb
            .entries()
            .iter()
            .map(|e| e.blocks().iter().map(|b| MatrixJson::from_matrix(b.matrix())).collect())
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn covariance_from_json(text: &str) -> Result<CovarianceCodebook> {
    let file: CovarianceFile = serde_json::from_str(text)?;
    check_header(&file.format, file.version, COVARIANCE_FORMAT)?;
    let entries = file
        .entries
        .iter()
        .map(|blocks| {
            let blocks = blocks
                .iter()
                .map(|m| HermitianPsd::new(m.to_matrix()?))
                .collect::<Result<Vec<_>>>()?;
            CovarianceSet::new(blocks)
        })
        .collect::<Result<Vec<_>>>()?;
    CovarianceCodebook::new(file.bits, entries, file.budget, file.dims, file.meta)
}

pub fn beamforming_to_json(cb: &BeamformingCodebook) -> Result<String> {
    let file = BeamformingFile {
        format: BEAMFORMING_FORMAT.into(),
        version: VERSION,
        bits: cb.bits(),
        dims: cb.dims(),
        budget: cb.budget().clone(),
        meta: cb.meta().clone(),
        entries: cb
            .entries()
            .iter()
            .map(|e| {
                e.users()
                    .iter()
                    .map(|u| BeamUserJson {
                        amplitude: u.amplitude,
                        direction: VectorJson::from_vector(&u.direction),
                    })
                    .collect()
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn beamforming_from_json(text: &str) -> Result<BeamformingCodebook> {
    let file: BeamformingFile = serde_json::from_str(text)?;
    check_header(&file.format, file.version, BEAMFORMING_FORMAT)?;
    let entries = file
        .entries
        .iter()
        .map(|users| {
            let users = users
                .iter()
                .map(|u| BeamEntry::new(u.amplitude, u.direction.to_vector()?))
                .collect::<Result<Vec<_>>>()?;
            Beamformer::new(users)
        })
        .collect::<Result<Vec<_>>>()?;
    BeamformingCodebook::new(file.bits, entries, file.budget, file.dims, file.meta)
}

/// Either kind of codebook, as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyCodebook {
    Covariance(CovarianceCodebook),
    Beamforming(BeamformingCodebook),
}

impl AnyCodebook {
    pub fn to_json(&self) -> Result<String> {
        match self {
            AnyCodebook::Covariance(cb) => covariance_to_json(cb),
            AnyCodebook::Beamforming(cb) => beamforming_to_json(cb),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
        }
        let header: Header = serde_json::from_str(text)?;
        match header.format.as_str() {
            COVARIANCE_FORMAT => Ok(AnyCodebook::Covariance(covariance_from_json(text)?)),
            BEAMFORMING_FORMAT => Ok(AnyCodebook::Beamforming(beamforming_from_json(text)?)),
            other => Err(Error::Format(format!("unknown codebook format `{other}`"))),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
