pub mod bf_codebook;
pub mod channel;
pub mod codebook_io;
pub mod cov_codebook;
pub mod error;
pub mod experiment;
pub mod lloyd;
pub mod numerics;
pub mod rates;
pub mod waterfill;

pub use error::{Error, Result};
