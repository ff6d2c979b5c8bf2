use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FitError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("all points share one x value")]
    DegenerateX,
}

/// Ordinary least-squares line through (messages, profile tokens).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    /// None when the series has no variance to explain.
    pub r_squared: Option<f64>,
    pub points: usize,
}

pub fn fit_growth_law(series: &[(u64, u64)]) -> Result<GrowthFit, FitError> {
    if series.len() < 3 {
        return Err(FitError::TooFewPoints(series.len()));
    }
    let n = series.len() as f64;
    let mx = series.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let my = series.iter().map(|p| p.1 as f64).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in series {
        let (dx, dy) = (x as f64 - mx, y as f64 - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(FitError::DegenerateX);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = (syy > 0.0).then(|| {
        let ss_res: f64 = series
            .iter()
            .map(|&(x, y)| (y as f64 - (intercept + slope * x as f64)).powi(2))
            .sum();
        1.0 - ss_res / syy
    });
    Ok(GrowthFit {
        slope,
        intercept,
        r_squared,
        points: series.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let s: Vec<(u64, u64)> = (1..50).map(|x| (x * 100, 3 * x * 100 + 78)).collect();
        let f = fit_growth_law(&s).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-9);
        assert!((f.intercept - 78.0).abs() < 1e-6);
        assert!((f.r_squared.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_has_no_r_squared() {
        let f = fit_growth_law(&[(1, 5), (2, 5), (3, 5)]).unwrap();
        assert_eq!(f.slope, 0.0);
        assert_eq!(f.r_squared, None);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(fit_growth_law(&[(1, 1), (2, 2)]), Err(FitError::TooFewPoints(2)));
        assert_eq!(fit_growth_law(&[(1, 1), (1, 2), (1, 3)]), Err(FitError::DegenerateX));
    }

    #[test]
    fn noisy_line_matches_closed_form() {
        // y = 2x + e, e alternating +1/-1 over x = 1..=4: the residual pattern
        // is not collinear with x, so slope = 2 + cov(x, e)/var(x).
        let s = [(1, 3), (2, 3), (3, 7), (4, 7)];
        let f = fit_growth_law(&s).unwrap();
        // x mean 2.5, y mean 5; sxy = (-1.5)(-2)+(-0.5)(-2)+(0.5)(2)+(1.5)(2) = 8; sxx = 5.
        assert!((f.slope - 1.6).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        // ss_res: predictions 2.6, 4.2, 5.8, 7.4 -> 0.16+1.44+1.44+0.16 = 3.2; syy = 16.
        assert!((f.r_squared.unwrap() - 0.8).abs() < 1e-12);
    }
}
