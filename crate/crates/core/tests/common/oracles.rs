//! Brute-force reference solutions, independent of the library solvers.

use mac_codebook::channel::seeded_rng;
use mac_codebook::numerics::{c64, herm_eig, log2_det_i_plus, CMatrix, HermitianPsd};
use mac_codebook::waterfill::{iwf_individual, iwf_sum_power, waterfill_single, IwfOptions};
use rand::Rng;

use super::{gaussian_matrix, random_psd, rng};

#[derive(Debug, Clone, Copy, Default)]
pub struct OracleReport {
    /// Worst `oracle - solver` seen (positive means the oracle did better).
    pub worst_shortfall: f64,
    pub cases: usize,
}

impl OracleReport {
    fn record(&mut self, oracle: f64, solver: f64) {
        self.worst_shortfall = self.worst_shortfall.max(oracle - solver);
        self.cases += 1;
    }
}

fn modes_rate(lambda: &[f64], p: &[f64], sigma2: f64) -> f64 {
    lambda.iter().zip(p).map(|(l, p)| (1.0 + l * p / sigma2).log2()).sum()
}

/// Single-user waterfilling on 1 or 2 modes against a dense power grid.
/// Also returns the worst deviation of the solver from `sum p = P`.
pub fn waterfill_single_vs_grid(cases: usize) -> (OracleReport, f64) {
    let mut report = OracleReport::default();
    let mut budget_err: f64 = 0.0;
    let mut r = rng(11);
    for _ in 0..cases {
        let n = r.random_range(1..=2);
        let lambda: Vec<f64> = (0..n).map(|_| r.random_range(0.01..5.0)).collect();
        let power = 10f64.powf(r.random_range(-1.5..1.5));
        let sigma2 = r.random_range(0.2..2.0);
        let p = waterfill_single(&lambda, power, sigma2).unwrap();
        budget_err = budget_err.max((p.iter().sum::<f64>() - power).abs());
        let solver = modes_rate(&lambda, &p, sigma2);
        let oracle = if n == 1 {
            modes_rate(&lambda, &[power], sigma2)
        } else {
            let steps = 20_000;
            (0..=steps)
                .map(|i| {
                    let a = power * i as f64 / steps as f64;
                    modes_rate(&lambda, &[a, power - a], sigma2)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        };
        report.record(oracle, solver);
    }
    (report, budget_err)
}

fn objective_rank1(h: &[CMatrix], p: &[f64], sigma2: f64) -> f64 {
    let rows = h[0].nrows();
    let mut g = CMatrix::zeros(rows, rows);
    for (hk, pk) in h.iter().zip(p) {
        g += (hk * hk.adjoint()).scale(*pk);
    }
    log2_det_i_plus(1.0 / sigma2, &HermitianPsd::new(g).unwrap()).unwrap()
}

/// Scalar channels (`K = 1`, `Mt = Mr = 1`) under both budgets against
/// the closed form.
pub fn scalar_iwf_vs_closed_form(cases: usize) -> OracleReport {
    let mut report = OracleReport::default();
    let mut r = rng(12);
    let opts = IwfOptions::default();
    for _ in 0..cases {
        let h = CMatrix::from_element(1, 1, c64(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)));
        let power = 10f64.powf(r.random_range(-1.0..2.0));
        let exact = (1.0 + power * h[(0, 0)].norm_sqr()).log2();
        let s = iwf_sum_power(std::slice::from_ref(&h), power, 1.0, &opts).unwrap();
        let i = iwf_individual(std::slice::from_ref(&h), &[power], 1.0, &opts).unwrap();
        report.record(exact, s.objective);
        report.record(exact, i.objective);
        report.worst_shortfall = report.worst_shortfall.max((s.objective - exact).abs()).max((i.objective - exact).abs());
    }
    report
}

/// `K = 2`, `Mt = 1`: sum-power against a grid on the split and
/// individual power against a 2-D grid.
pub fn two_user_iwf_vs_grid(cases: usize) -> OracleReport {
    let mut report = OracleReport::default();
    let mut r = rng(13);
    let opts = IwfOptions::default();
    for _ in 0..cases {
        let mr = r.random_range(1..=3);
        let h: Vec<CMatrix> = (0..2).map(|_| gaussian_matrix(mr, 1, &mut r)).collect();
        let power = 10f64.powf(r.random_range(-1.0..2.0));
        let sigma2 = r.random_range(0.5..2.0);

        let s = iwf_sum_power(&h, power, sigma2, &opts).unwrap();
        let steps = 20_000;
        let grid = (0..=steps)
            .map(|i| {
                let a = power * i as f64 / steps as f64;
                objective_rank1(&h, &[a, power - a], sigma2)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        report.record(grid, s.objective);

        let powers = [power * r.random_range(0.2..1.0), power * r.random_range(0.2..1.0)];
        let i = iwf_individual(&h, &powers, sigma2, &opts).unwrap();
        let n = 100;
        let mut best = f64::NEG_INFINITY;
        for a in 0..=n {
            for b in 0..=n {
                let p = [powers[0] * a as f64 / n as f64, powers[1] * b as f64 / n as f64];
                best = best.max(objective_rank1(&h, &p, sigma2));
            }
        }
        report.record(best, i.objective);
    }
    report
}

fn random_covariance<R: Rng>(mt: usize, power: f64, rng: &mut R) -> CMatrix {
    let a = gaussian_matrix(mt, mt, rng);
    let m = &a * a.adjoint();
    let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
    m.scale(power / tr)
}

/// `K = 2`, `Mt = 2` individual IWF against the best of `samples` random
/// full-power covariance pairs. Returns `(best random - solver)`.
pub fn individual_iwf_random_search(samples: usize, seed: u64) -> f64 {
    let mut r = seeded_rng(seed, 14);
    let h: Vec<CMatrix> = (0..2).map(|_| gaussian_matrix(2, 2, &mut r)).collect();
    let powers = [3.0, 1.5];
    let sol = iwf_individual(&h, &powers, 1.0, &IwfOptions::default()).unwrap();
    let mut best = f64::NEG_INFINITY;
    for _ in 0..samples {
        let q: Vec<CMatrix> = powers.iter().map(|&p| random_covariance(2, p, &mut r)).collect();
        let mut g = CMatrix::identity(2, 2);
        for (hk, qk) in h.iter().zip(&q) {
            g += hk * qk * hk.adjoint();
        }
        // det of a 2x2 Hermitian positive definite matrix
        let det = (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]).re;
        best = best.max(det.log2());
    }
    best - sol.objective
}

/// `log2 det(I + s G)` against the eigenvalue sum; worst absolute error.
pub fn log_det_vs_eigen_sum(cases: usize) -> f64 {
    let mut r = rng(15);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = r.random_range(1..=6);
        let rank = r.random_range(0..=n);
        let g = random_psd(n, rank.max(1), r.random_range(0.01..10.0), &mut r);
        let s = 10f64.powf(r.random_range(-2.0..2.0));
        let fast = log2_det_i_plus(s, &g).unwrap();
        let eig = herm_eig(g.matrix()).unwrap();
        let slow: f64 = eig.values.iter().map(|l| (1.0 + s * l.max(0.0)).log2()).sum();
        worst = worst.max((fast - slow).abs());
    }
    worst
}
