use serde::Serialize;

use crate::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Input points as given, before any log transform.
    pub points: Vec<(f64, f64)>,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn fit_linear(points: &[(f64, f64)]) -> Result<FitResult, HarnessError> {
    if points.len() < 2 {
        return Err(HarnessError::DegenerateFit(format!("{} points", points.len())));
    }
    let (slope, intercept, r2) = ols(points)?;
    Ok(FitResult { slope, intercept, r_squared: r2, points: points.to_vec() })
}

/// Line through `(ln x, ln y)`. Needs at least three points, all positive.
pub fn fit_loglog_order(points: &[(f64, f64)]) -> Result<FitResult, HarnessError> {
    if points.len() < 3 {
        return Err(HarnessError::DegenerateFit(format!("{} points, need 3", points.len())));
    }
    if let Some(p) = points.iter().find(|p| !(p.0 > 0.0 && p.1 > 0.0)) {
        return Err(HarnessError::DegenerateFit(format!("non-positive point {p:?}")));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let (slope, intercept, r2) = ols(&logs)?;
    Ok(FitResult { slope, intercept, r_squared: r2, points: points.to_vec() })
}

fn ols(p: &[(f64, f64)]) -> Result<(f64, f64, f64), HarnessError> {
    let n = p.len() as f64;
    let mx = p.iter().map(|q| q.0).sum::<f64>() / n;
    let my = p.iter().map(|q| q.1).sum::<f64>() / n;
    let sxx: f64 = p.iter().map(|q| (q.0 - mx).powi(2)).sum();
    let sxy: f64 = p.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
    let syy: f64 = p.iter().map(|q| (q.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(HarnessError::DegenerateFit("all abscissae equal".into()));
    }
    let slope = sxy / sxx;
    // A flat series is fitted exactly.
    let r2 = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    Ok((slope, my - slope * mx, r2))
}
