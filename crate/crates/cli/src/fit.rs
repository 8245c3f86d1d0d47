use serde::Serialize;

use crate::sweep::Row;
use crate::CliError;

/// Least-squares line through `(ln p, ln p_round)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

/// Fits the `k_lowest` lowest-p rows that have at least one failure. Rows
/// should all belong to one (mode, distance) pair.
pub fn fit_slope(rows: &[Row], k_lowest: usize) -> Result<SlopeFit, CliError> {
    let mut usable: Vec<&Row> = rows.iter().filter(|r| r.failures > 0 && r.p_round > 0.0).collect();
    usable.sort_by(|a, b| a.p.total_cmp(&b.p));
    usable.truncate(k_lowest);
    let distinct = usable.windows(2).filter(|w| w[0].p != w[1].p).count() + usize::from(!usable.is_empty());
    if usable.len() < 2 || distinct < 2 {
        return Err(CliError::Fit(format!(
            "{} of {} rows have failures at distinct p (need 2 among the {k_lowest} lowest); rerun with more shots",
            distinct.min(usable.len()),
            rows.len()
        )));
    }
    let pts: Vec<(f64, f64)> = usable.iter().map(|r| (r.p.ln(), r.p_round.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|q| q.0).sum::<f64>() / n;
    let my = pts.iter().map(|q| q.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|q| (q.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
    let syy: f64 = pts.iter().map(|q| (q.1 - my).powi(2)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(SlopeFit { exponent, intercept, r_squared, points_used: pts.len() })
}
