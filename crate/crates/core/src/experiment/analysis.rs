//! Curve arithmetic on result tables: horizontal SNR gaps and slopes.

use super::run::ResultRow;

/// Linear interpolation of `ys` over increasing `xs`, clamped at the ends.
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    assert_eq!(xs.len(), ys.len());
    if x <= xs[0] {
        return ys[0];
    }
    for i in 1..xs.len() {
        if x <= xs[i] {
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            return ys[i - 1] + t * (ys[i] - ys[i - 1]);
        }
    }
    ys[ys.len() - 1]
}

/// SNR at which a curve first reaches `level`, by linear interpolation.
/// `None` if the curve never gets there inside the grid.
pub fn snr_at_rate(snr_db: &[f64], rates: &[f64], level: f64) -> Option<f64> {
    if rates.first().is_some_and(|&r| r >= level) {
        return (rates[0] == level).then_some(snr_db[0]);
    }
    for i in 1..rates.len() {
        if rates[i] >= level && rates[i - 1] < level {
            let t = (level - rates[i - 1]) / (rates[i] - rates[i - 1]);
            return Some(snr_db[i - 1] + t * (snr_db[i] - snr_db[i - 1]));
        }
    }
    None
}

/// How many dB less the `better` curve needs to reach `level`.
pub fn snr_gap_db(snr_db: &[f64], better: &[f64], worse: &[f64], level: f64) -> Option<f64> {
    Some(snr_at_rate(snr_db, worse, level)? - snr_at_rate(snr_db, better, level)?)
}

/// Rate of `reference` at the middle of the SNR grid.
pub fn mid_level(snr_db: &[f64], reference: &[f64]) -> f64 {
    let mid = 0.5 * (snr_db[0] + snr_db[snr_db.len() - 1]);
    interpolate(snr_db, reference, mid)
}

/// Rate increase per 3 dB between `lo_db` and `hi_db`.
pub fn slope_per_3db(snr_db: &[f64], rates: &[f64], lo_db: f64, hi_db: f64) -> f64 {
    let rise = interpolate(snr_db, rates, hi_db) - interpolate(snr_db, rates, lo_db);
    rise * 3.0 / (hi_db - lo_db)
}

/// `(snr, mean, stderr)` columns of a curve.
pub fn columns(rows: &[&ResultRow]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (
        rows.iter().map(|r| r.snr_db).collect(),
        rows.iter().map(|r| r.mean_bits).collect(),
        rows.iter().map(|r| r.stderr_bits).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaps_of_shifted_lines() {
        let snr = [0.0, 5.0, 10.0, 15.0];
        let worse: Vec<f64> = snr.iter().map(|s| s / 5.0).collect();
        let better: Vec<f64> = snr.iter().map(|s| (s + 2.0) / 5.0).collect();
        let level = mid_level(&snr, &worse);
        assert!((level - 1.5).abs() < 1e-12);
        assert!((snr_gap_db(&snr, &better, &worse, level).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(snr_at_rate(&snr, &worse, 10.0), None);
    }

    #[test]
    fn slope_of_line() {
        let snr = [18.0, 20.0, 26.0, 30.0];
        let rates: Vec<f64> = snr.iter().map(|s| 0.5 * s).collect();
        assert!((slope_per_3db(&snr, &rates, 20.0, 26.0) - 1.5).abs() < 1e-12);
    }
}
