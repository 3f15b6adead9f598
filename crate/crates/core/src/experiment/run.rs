use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bf_codebook::{
    eigenbeam_design, eigenbeam_design_grown, grassmann_codebook, grassmann_design, random_codebook,
    rotate_codebook, statistical_beams, statistical_codebook, BeamformingCodebook, GrassmannOptions,
};
use crate::channel::{seeded_rng, ChannelKind, ChannelModel, ChannelRealization};
use crate::codebook_io::AnyCodebook;
use crate::cov_codebook::{self, CovarianceCodebook, TrainingSet};
use crate::error::{Error, Result};
use crate::lloyd::DesignOptions;
use crate::rates::{region_2user, Pentagon, RatePoint2U};
use crate::rates::{
    expected_selected_rate, full_csi_rate_with, monte_carlo, no_feedback_rate, tdma_rate, MonteCarloEstimate,
};
use crate::waterfill::{single_user_capacity, PowerBudget};

use super::config::{snr_to_power, BudgetSpec, ExperimentConfig, Scheme};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MAC_CODEBOOK_OUT_DIR";

const EVAL_STREAM: u64 = 1;
const TRAINING_STREAM: u64 = 2;
const SIGMA2: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: Scheme,
    #[serde(rename = "B")]
    pub bits: u32,
    pub snr_db: f64,
    pub mean_bits: f64,
    pub stderr_bits: f64,
    pub draws: usize,
    pub seed: u64,
    /// Design diagnostics such as `design_not_converged`.
    pub flags: Vec<String>,
    /// Training objective (bits) of the designed codebook, if any.
    pub training_objective: Option<f64>,
    /// Minimum Fubini-Study distance of beam directions, if any.
    pub min_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionResult {
    #[serde(rename = "B")]
    pub bits: u32,
    pub snr_db: f64,
    pub vertices: Vec<RatePoint2U>,
    pub pentagons: Vec<Pentagon>,
    pub max_stderr: f64,
    pub draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub name: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    pub regions: Vec<RegionResult>,
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(config.to_json().as_bytes()))
}

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scheme,B,snr_db,mean_bits,stderr_bits,draws,seed\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.scheme, r.bits, r.snr_db, r.mean_bits, r.stderr_bits, r.draws, r.seed
            )
            .unwrap();
        }
        out
    }

    pub fn regions_csv(&self) -> String {
        let mut out = String::from("B,snr_db,vertex,r1_bits,r2_bits\n");
        for region in &self.regions {
            for (i, v) in region.vertices.iter().enumerate() {
                writeln!(out, "{},{},{},{},{}", region.bits, region.snr_db, i, v.r1, v.r2).unwrap();
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result table serializes") + "\n"
    }

    /// Rows of one curve, in SNR order.
    pub fn curve(&self, scheme: Scheme, bits: u32) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.scheme == scheme && r.bits == bits).collect()
    }

    pub fn region(&self, bits: u32, snr_db: f64) -> Option<&RegionResult> {
        self.regions.iter().find(|r| r.bits == bits && r.snr_db == snr_db)
    }

    /// Writes the CSV, JSON and (if any) region files into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let csv = dir.join(self.config.csv_name());
        std::fs::write(&csv, self.to_csv())?;
        written.push(csv);
        let json = dir.join(self.config.json_name());
        std::fs::write(&json, self.to_json())?;
        written.push(json);
        if !self.regions.is_empty() {
            let regions = dir.join(self.config.regions_csv_name());
            std::fs::write(&regions, self.regions_csv())?;
            written.push(regions);
        }
        Ok(written)
    }
}

/// Shared draws and derived settings for one experiment.
pub struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub model: ChannelModel,
    pub eval: Vec<ChannelRealization>,
    training: Option<TrainingSet>,
}

impl<'a> Context<'a> {
    pub fn new(config: &'a ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let model = config.channel_model()?;
        let eval = model.sample_many(config.eval_draws, &mut seeded_rng(config.seed, EVAL_STREAM));
        let needs_training = config
            .schemes
            .iter()
            .any(|s| matches!(s, Scheme::Covariance | Scheme::Eigenbeam | Scheme::Region2u));
        let training = if needs_training {
            let draws = model.sample_many(config.training_size, &mut seeded_rng(config.seed, TRAINING_STREAM));
            Some(TrainingSet::new(draws, SIGMA2)?)
        } else {
            None
        };
        Ok(Context {
            config,
            model,
            eval,
            training,
        })
    }

    fn training(&self) -> &TrainingSet {
        self.training.as_ref().expect("training draws were sampled")
    }

    fn design_options(&self) -> DesignOptions {
        let d = &self.config.design;
        DesignOptions {
            restarts: d.restarts,
            max_rounds: d.max_rounds,
            tol: d.tol_bits,
            seed: self.config.seed,
            iwf: d.iwf,
        }
    }

    fn sorted_bits(&self) -> Vec<u32> {
        let mut bits = self.config.bits_list.clone();
        bits.sort_unstable();
        bits
    }

    /// Covariance codebooks at one SNR, in ascending `B`.
    pub fn covariance_codebooks(&self, snr_db: f64) -> Result<Vec<CovarianceCodebook>> {
        let budget = self.config.budget.at_power(snr_to_power(snr_db));
        let opts = self.design_options();
        let mut out: Vec<CovarianceCodebook> = Vec::new();
        for b in self.sorted_bits() {
            let cb = match out.last() {
                Some(prev) if self.config.design.nested => cov_codebook::design_grown(self.training(), prev, b, &opts)?,
                _ => cov_codebook::design(self.training(), b, &budget, &opts)?,
            };
            out.push(cb);
        }
        Ok(out)
    }

    /// Nested covariance codebooks for the region: each extends the last.
    pub fn region_codebooks(&self, snr_db: f64) -> Result<Vec<CovarianceCodebook>> {
        let budget = self.config.budget.at_power(snr_to_power(snr_db));
        let opts = self.design_options();
        let mut out: Vec<CovarianceCodebook> = Vec::new();
        for b in self.sorted_bits() {
            let cb = match out.last() {
                Some(prev) => cov_codebook::design_extension(self.training(), prev, b, &opts)?,
                None => cov_codebook::design(self.training(), b, &budget, &opts)?,
            };
            out.push(cb);
        }
        Ok(out)
    }

    pub fn eigenbeam_codebooks(&self, snr_db: f64) -> Result<Vec<BeamformingCodebook>> {
        let power = snr_to_power(snr_db);
        let opts = self.design_options();
        let mut out: Vec<BeamformingCodebook> = Vec::new();
        for b in self.sorted_bits() {
            let cb = match out.last() {
                Some(prev) if self.config.design.nested => eigenbeam_design_grown(self.training(), prev, b, &opts)?,
                _ => eigenbeam_design(self.training(), b, power, &opts)?,
            };
            out.push(cb);
        }
        Ok(out)
    }

    /// Grassmannian codebooks at unit power, in ascending `B`. Under a
    /// correlated channel the packing is rotated onto the statistical beams.
    pub fn grassmann_codebooks(&self) -> Result<Vec<BeamformingCodebook>> {
        let g = &self.config.grassmann;
        let opts = GrassmannOptions {
            training_size: g.training_size,
            rounds: g.rounds,
            restarts: g.restarts,
            seed: self.config.seed,
            ..Default::default()
        };
        self.sorted_bits()
            .into_iter()
            .map(|b| {
                let mut packing = grassmann_design(b, self.config.dims, &opts)?;
                if matches!(self.model.kind(), ChannelKind::Kronecker { .. }) {
                    packing = rotate_codebook(&packing, &statistical_beams(&self.model.correlations()))?;
                }
                grassmann_codebook(&packing, 1.0)
            })
            .collect()
    }

    pub fn random_codebooks(&self) -> Result<Vec<BeamformingCodebook>> {
        self.sorted_bits()
            .into_iter()
            .map(|b| random_codebook(b, self.config.dims, 1.0, self.config.seed))
            .collect()
    }

    fn per_user_limits(&self, budget: &PowerBudget) -> Vec<f64> {
        match budget {
            PowerBudget::Sum { total } => vec![*total; self.config.dims.users],
            PowerBudget::Individual { per_user } => per_user.clone(),
        }
    }

    fn baseline(&self, scheme: Scheme, snr_db: f64) -> Result<MonteCarloEstimate> {
        let power = snr_to_power(snr_db);
        let budget = self.config.budget.at_power(power);
        let iwf = self.config.design.iwf;
        match scheme {
            Scheme::FullCsi => monte_carlo(&self.eval, |h| full_csi_rate_with(h, &budget, SIGMA2, &iwf)),
            Scheme::NoFeedback => monte_carlo(&self.eval, |h| no_feedback_rate(h, &budget, SIGMA2)),
            Scheme::Tdma => match &self.config.budget {
                BudgetSpec::Sum => monte_carlo(&self.eval, |h| tdma_rate(h, power, SIGMA2)),
                BudgetSpec::Individual { .. } => {
                    let limits = self.per_user_limits(&budget);
                    monte_carlo(&self.eval, |h| {
                        let mut total = 0.0;
                        for (k, p) in limits.iter().enumerate() {
                            total += single_user_capacity(h.block(k), *p, SIGMA2)?;
                        }
                        Ok(total / limits.len() as f64)
                    })
                }
            },
            Scheme::StatisticalBf => {
                let cb = statistical_codebook(&self.model.correlations(), self.config.dims, power)?;
                Ok(expected_selected_rate(&self.eval, &cb, SIGMA2))
            }
            other => Err(Error::InvalidArgument(format!("`{other}` is not a baseline"))),
        }
    }
}

fn row(ctx: &Context<'_>, scheme: Scheme, bits: u32, snr_db: f64, est: MonteCarloEstimate) -> ResultRow {
    ResultRow {
        scheme,
        bits,
        snr_db,
        mean_bits: est.mean,
        stderr_bits: est.stderr,
        draws: est.draws,
        seed: ctx.config.seed,
        flags: Vec::new(),
        training_objective: None,
        min_distance: None,
    }
}

fn not_converged(converged: bool) -> Vec<String> {
    if converged {
        Vec::new()
    } else {
        vec!["design_not_converged".into()]
    }
}

/// Runs every scheme of `config` and collects one row per
/// `(scheme, B, SNR)` cell, ordered as in the config.
pub fn run(config: &ExperimentConfig) -> Result<ResultTable> {
    let ctx = Context::new(config)?;
    let grid = &config.snr_grid_db;
    let mut rows = Vec::new();
    let mut regions = Vec::new();
    let order = |bits: u32| config.bits_list.iter().position(|&b| b == bits).unwrap();

    for &scheme in &config.schemes {
        let mut cells: Vec<ResultRow> = Vec::new();
        match scheme {
            Scheme::Covariance => {
                for &snr in grid {
                    for cb in ctx.covariance_codebooks(snr)? {
                        let est = expected_selected_rate(&ctx.eval, &cb, SIGMA2);
                        let mut r = row(&ctx, scheme, cb.bits(), snr, est);
                        r.flags = not_converged(cb.meta().converged);
                        r.training_objective = Some(cb.meta().training_objective);
                        cells.push(r);
                    }
                }
            }
            Scheme::Eigenbeam => {
                for &snr in grid {
                    for cb in ctx.eigenbeam_codebooks(snr)? {
                        let est = expected_selected_rate(&ctx.eval, &cb, SIGMA2);
                        let mut r = row(&ctx, scheme, cb.bits(), snr, est);
                        r.flags = not_converged(cb.meta().converged);
                        r.training_objective = cb.meta().training_objective;
                        cells.push(r);
                    }
                }
            }
            Scheme::Grassmann | Scheme::RandomBf => {
                let books = if scheme == Scheme::Grassmann {
                    ctx.grassmann_codebooks()?
                } else {
                    ctx.random_codebooks()?
                };
                for unit in &books {
                    for &snr in grid {
                        let cb = unit.scaled_to_power(snr_to_power(snr))?;
                        let est = expected_selected_rate(&ctx.eval, &cb, SIGMA2);
                        let mut r = row(&ctx, scheme, cb.bits(), snr, est);
                        r.min_distance = cb.meta().min_distance;
                        cells.push(r);
                    }
                }
            }
            Scheme::Region2u => {
                for &snr in grid {
                    let budget = config.budget.at_power(snr_to_power(snr));
                    let limits = ctx.per_user_limits(&budget);
                    for cb in ctx.region_codebooks(snr)? {
                        let est = region_2user(
                            &ctx.eval,
                            cb.entries(),
                            limits[0],
                            limits[1],
                            SIGMA2,
                            config.region.weights,
                        )?;
                        let mut r = row(
                            &ctx,
                            scheme,
                            cb.bits(),
                            snr,
                            MonteCarloEstimate {
                                mean: est.selection_pentagon.c12,
                                stderr: est.selection_pentagon.c12_stderr,
                                draws: est.draws,
                            },
                        );
                        r.flags = not_converged(cb.meta().converged);
                        r.training_objective = Some(cb.meta().training_objective);
                        cells.push(r);
                        regions.push(RegionResult {
                            bits: cb.bits(),
                            snr_db: snr,
                            max_stderr: est.max_stderr(),
                            vertices: est.polygon.vertices().to_vec(),
                            pentagons: est.pentagons,
                            draws: est.draws,
                        });
                    }
                }
            }
            _ => {
                for &snr in grid {
                    let est = ctx.baseline(scheme, snr)?;
                    cells.push(row(&ctx, scheme, 0, snr, est));
                }
            }
        }
        cells.sort_by(|a, b| {
            order_key(scheme, a.bits, &order)
                .cmp(&order_key(scheme, b.bits, &order))
                .then(a.snr_db.total_cmp(&b.snr_db))
        });
        rows.extend(cells);
    }
    regions.sort_by(|a, b| order(a.bits).cmp(&order(b.bits)).then(a.snr_db.total_cmp(&b.snr_db)));

    Ok(ResultTable {
        name: config.name.clone(),
        config_sha256: config_hash(config),
        config: config.clone(),
        rows,
        regions,
    })
}

fn order_key(scheme: Scheme, bits: u32, order: &impl Fn(u32) -> usize) -> usize {
    if scheme.uses_feedback() {
        order(bits)
    } else {
        0
    }
}

/// A designed codebook ready to be written to disk.
#[derive(Debug, Clone)]
pub struct PackedCodebook {
    pub bits: u32,
    /// `None` for SNR-independent designs, stored at unit power.
    pub snr_db: Option<f64>,
    pub codebook: AnyCodebook,
}

impl PackedCodebook {
    pub fn file_name(&self, config: &ExperimentConfig, scheme: Scheme) -> String {
        match self.snr_db {
            Some(snr) => format!("{}_{}_B{}_snr{}.json", config.name, scheme, self.bits, snr),
            None => format!("{}_{}_B{}.json", config.name, scheme, self.bits),
        }
    }
}

/// Design-only run: the codebooks of `scheme` for every `B` (and SNR
/// where the design depends on it).
pub fn pack(config: &ExperimentConfig, scheme: Scheme) -> Result<Vec<PackedCodebook>> {
    let ctx = Context::new(config)?;
    let mut out = Vec::new();
    match scheme {
        Scheme::Covariance => {
            for &snr in &config.snr_grid_db {
                for cb in ctx.covariance_codebooks(snr)? {
                    out.push(PackedCodebook {
                        bits: cb.bits(),
                        snr_db: Some(snr),
                        codebook: AnyCodebook::Covariance(cb),
                    });
                }
            }
        }
        Scheme::Eigenbeam => {
            for &snr in &config.snr_grid_db {
                for cb in ctx.eigenbeam_codebooks(snr)? {
                    out.push(PackedCodebook {
                        bits: cb.bits(),
                        snr_db: Some(snr),
                        codebook: AnyCodebook::Beamforming(cb),
                    });
                }
            }
        }
        Scheme::Grassmann => {
            for cb in ctx.grassmann_codebooks()? {
                out.push(PackedCodebook {
                    bits: cb.bits(),
                    snr_db: None,
                    codebook: AnyCodebook::Beamforming(cb),
                });
            }
        }
        other => {
            return Err(Error::config("scheme", format!("`{other}` has no packable codebook")));
        }
    }
    Ok(out)
}
