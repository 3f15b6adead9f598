//! Expected two-user rate region of a covariance codebook.
//!
//! A feedback mapping sends each channel draw to a codeword; every mapping
//! yields one pentagon. The region is the convex down-set hull of the
//! union of pentagons. Boundary points of that union are reached by
//! mappings that maximize weighted rates, so the mappings swept here are
//! `argmax_q t * S(H, q) + (1 - t) * R_k(H, q)` for `t` on a grid and both
//! decoding orders. `t = 1` is the sum-rate selection rule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sum_rate_unchecked, user_rate_unchecked};
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::waterfill::{CovarianceSet, PowerBudget};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint2U {
    pub r1: f64,
    pub r2: f64,
}

impl RatePoint2U {
    pub fn new(r1: f64, r2: f64) -> Self {
        RatePoint2U { r1, r2 }
    }
}

fn cross(o: RatePoint2U, a: RatePoint2U, b: RatePoint2U) -> f64 {
    (a.r1 - o.r1) * (b.r2 - o.r2) - (a.r2 - o.r2) * (b.r1 - o.r1)
}

/// Convex polygon in the non-negative quadrant that is closed under
/// decreasing either coordinate. Vertices are counterclockwise from the
/// origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPolygon {
    vertices: Vec<RatePoint2U>,
}

impl RegionPolygon {
    /// Down-set convex hull of `points` (negative coordinates clipped).
    pub fn from_points(points: &[RatePoint2U]) -> Self {
        let mut pts = vec![RatePoint2U::new(0.0, 0.0)];
        for p in points {
            let p = RatePoint2U::new(p.r1.max(0.0), p.r2.max(0.0));
            pts.push(p);
            pts.push(RatePoint2U::new(p.r1, 0.0));
            pts.push(RatePoint2U::new(0.0, p.r2));
        }
        pts.sort_by(|a, b| a.r1.total_cmp(&b.r1).then(a.r2.total_cmp(&b.r2)));
        pts.dedup();
        if pts.len() < 3 {
            return RegionPolygon { vertices: pts };
        }
        // Andrew's monotone chain, collinear points dropped.
        let mut lower: Vec<RatePoint2U> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<RatePoint2U> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        let start = lower
            .iter()
            .position(|p| p.r1 == 0.0 && p.r2 == 0.0)
            .unwrap_or(0);
        lower.rotate_left(start);
        RegionPolygon { vertices: lower }
    }

    pub fn vertices(&self) -> &[RatePoint2U] {
        &self.vertices
    }

    /// Largest `r1 + r2` over the region.
    pub fn max_sum_rate(&self) -> f64 {
        self.vertices
            .iter()
            .map(|p| p.r1 + p.r2)
            .fold(0.0, f64::max)
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        let mut twice = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            twice += a.r1 * b.r2 - b.r1 * a.r2;
        }
        0.5 * twice
    }

    /// Whether `p` lies inside, allowing `tol` bits of slack.
    pub fn contains(&self, p: RatePoint2U, tol: f64) -> bool {
        if p.r1 < -tol || p.r2 < -tol {
            return false;
        }
        let n = self.vertices.len();
        match n {
            0 => false,
            1 => p.r1 <= self.vertices[0].r1 + tol && p.r2 <= self.vertices[0].r2 + tol,
            2 => {
                let far = self.vertices[1];
                p.r1 <= far.r1 + tol && p.r2 <= far.r2 + tol
                    && (far.r1 == 0.0 || p.r2 <= tol)
                    && (far.r2 == 0.0 || p.r1 <= tol)
            }
            _ => (0..n).all(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                let len = ((b.r1 - a.r1).powi(2) + (b.r2 - a.r2).powi(2)).sqrt();
                len == 0.0 || cross(a, b, p) / len >= -tol
            }),
        }
    }

    /// Whether every vertex of `other` lies inside `self` (within `tol`).
    pub fn contains_region(&self, other: &RegionPolygon, tol: f64) -> bool {
        other.vertices.iter().all(|&v| self.contains(v, tol))
    }

    /// Whether the polygon is convex with counterclockwise orientation.
    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        n < 3
            || (0..n).all(|i| {
                cross(
                    self.vertices[i],
                    self.vertices[(i + 1) % n],
                    self.vertices[(i + 2) % n],
                ) > 0.0
            })
    }
}

/// Expected rate constraints of one feedback mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pentagon {
    /// `E[log2 det(I + H1 Q1 H1* / sigma2)]`.
    pub c1: f64,
    pub c2: f64,
    /// Expected sum rate.
    pub c12: f64,
    /// Standard error of `c12`.
    pub c12_stderr: f64,
}

impl Pentagon {
    pub fn corners(&self) -> [RatePoint2U; 2] {
        [
            RatePoint2U::new(self.c1, (self.c12 - self.c1).max(0.0)),
            RatePoint2U::new((self.c12 - self.c2).max(0.0), self.c2),
        ]
    }

    pub fn polygon(&self) -> RegionPolygon {
        RegionPolygon::from_points(&self.corners())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionEstimate {
    pub polygon: RegionPolygon,
    pub pentagons: Vec<Pentagon>,
    /// Pentagon of the sum-rate selection rule.
    pub selection_pentagon: Pentagon,
    pub draws: usize,
}

impl RegionEstimate {
    /// Largest standard error among the pentagon sum-rate estimates.
    pub fn max_stderr(&self) -> f64 {
        self.pentagons
            .iter()
            .map(|p| p.c12_stderr)
            .fold(0.0, f64::max)
    }
}

/// Expected rate region for a two-user covariance codebook over `samples`.
///
/// `weights` is the number of grid points per decoding order (at least 2).
pub fn region_2user(
    samples: &[ChannelRealization],
    codebook: &[CovarianceSet],
    p1: f64,
    p2: f64,
    sigma2: f64,
    weights: usize,
) -> Result<RegionEstimate> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidArgument("no channel samples".into()))?;
    if first.dims().users != 2 {
        return Err(Error::Dimension(format!(
            "rate region needs exactly 2 users, got {}",
            first.dims().users
        )));
    }
    if codebook.is_empty() {
        return Err(Error::InvalidArgument("empty codebook".into()));
    }
    let budget = PowerBudget::individual(vec![p1, p2]);
    budget.validate(2)?;
    if let Some(q) = codebook.iter().position(|c| !budget.is_satisfied_by(c)) {
        return Err(Error::InvalidArgument(format!(
            "codeword {q} violates the power limits ({p1}, {p2})"
        )));
    }
    if codebook.iter().any(|c| c.users() != 2 || c.tx_antennas() != first.dims().tx_antennas) {
        return Err(Error::Dimension("codebook does not match channel dimensions".into()));
    }

    // table[draw][entry] = (r1, r2, sum)
    let table: Vec<Vec<[f64; 3]>> = samples
        .par_iter()
        .map(|h| {
            codebook
                .iter()
                .map(|q| {
                    [
                        user_rate_unchecked(h, q, 0, sigma2),
                        user_rate_unchecked(h, q, 1, sigma2),
                        sum_rate_unchecked(h, q, sigma2),
                    ]
                })
                .collect()
        })
        .collect();

    let pentagon_for = |score: &dyn Fn(&[f64; 3]) -> f64| -> Pentagon {
        let mut sums = [0.0; 3];
        let mut sum_samples = Vec::with_capacity(table.len());
        for row in &table {
            let mut best = 0;
            let mut best_score = score(&row[0]);
            for (q, r) in row.iter().enumerate().skip(1) {
                let s = score(r);
                if s > best_score {
                    best = q;
                    best_score = s;
                }
            }
            for i in 0..3 {
                sums[i] += row[best][i];
            }
            sum_samples.push(row[best][2]);
        }
        let n = table.len() as f64;
        let est = super::MonteCarloEstimate::from_samples(&sum_samples);
        Pentagon {
            c1: sums[0] / n,
            c2: sums[1] / n,
            c12: sums[2] / n,
            c12_stderr: est.stderr,
        }
    };

    let fixed_pentagon = |q: usize| -> Pentagon {
        let column: Vec<[f64; 3]> = table.iter().map(|row| row[q]).collect();
        let n = column.len() as f64;
        let sums: Vec<f64> = column.iter().map(|r| r[2]).collect();
        Pentagon {
            c1: column.iter().map(|r| r[0]).sum::<f64>() / n,
            c2: column.iter().map(|r| r[1]).sum::<f64>() / n,
            c12: sums.iter().sum::<f64>() / n,
            c12_stderr: super::MonteCarloEstimate::from_samples(&sums).stderr,
        }
    };

    let steps = weights.max(2);
    let selection_pentagon = pentagon_for(&|r| r[2]);
    let mut pentagons = vec![selection_pentagon];
    for user in 0..2 {
        for i in 0..steps - 1 {
            let t = i as f64 / (steps - 1) as f64;
            pentagons.push(pentagon_for(&|r| t * r[2] + (1.0 - t) * r[user]));
        }
    }
    // a codeword used for every draw is also a feedback mapping
    pentagons.extend((0..codebook.len()).map(fixed_pentagon));
    let corners: Vec<RatePoint2U> = pentagons.iter().flat_map(|p| p.corners()).collect();
    Ok(RegionEstimate {
        polygon: RegionPolygon::from_points(&corners),
        pentagons,
        selection_pentagon,
        draws: samples.len(),
    })
}
