use serde::Serialize;

use crate::error::{invalid, Result};

#[derive(Clone, Debug, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Rows dropped because the rms value was not positive.
    pub excluded: Vec<f64>,
}

/// Least-squares slope of `log rms` against `log T`.
pub fn error_exponent_fit(rows: &[(f64, f64)]) -> Result<ExponentFit> {
    let mut excluded = Vec::new();
    let mut pts = Vec::new();
    for &(t, rms) in rows {
        if !(t > 0.0) {
            return Err(invalid("T must be positive"));
        }
        if rms > 0.0 && rms.is_finite() {
            pts.push((t.ln(), rms.ln()));
        } else {
            excluded.push(t);
        }
    }
    let mut ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    ts.sort_by(|a, b| a.total_cmp(b));
    ts.dedup();
    if ts.len() < 4 {
        return Err(invalid("need at least four distinct T with positive rms"));
    }
    if ts[ts.len() - 1] - ts[0] < 8f64.ln() - 1e-12 {
        return Err(invalid("T values must span a factor of at least 8"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(ExponentFit { slope, intercept: my - slope * mx, r_squared, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_growth() {
        let rows: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0, 160.0].iter().map(|&t: &f64| (t, 1.3 * t.sqrt())).collect();
        let f = error_exponent_fit(&rows).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_offset() {
        let rows: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0].iter().map(|&t| (t, 0.7)).collect();
        assert!(error_exponent_fit(&rows).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn nonpositive_rows_dropped() {
        let rows = vec![(5.0, 0.0), (10.0, 1.0), (20.0, 2.0), (40.0, 4.0), (80.0, 8.0)];
        let f = error_exponent_fit(&rows).unwrap();
        assert_eq!(f.excluded, vec![5.0]);
        assert!((f.slope - 1.0).abs() < 1e-12);
    }

    #[test]
    fn design_checks() {
        assert!(error_exponent_fit(&[(1.0, 1.0), (2.0, 1.0), (4.0, 1.0)]).is_err());
        assert!(error_exponent_fit(&[(1.0, 1.0), (2.0, 1.0), (3.0, 1.0), (4.0, 1.0)]).is_err());
    }
}
