//! Small statistics helpers shared by the solvers and the harness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Streaming mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Unbiased sample variance; zero for fewer than two values.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Welford {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut w = Self::new();
        for x in iter {
            w.push(x);
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub points: usize,
}

/// Ordinary least squares y = a + b x.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx.is_nan() || sxx <= 0.0 {
        return Err(Error::param("fit", "all abscissae coincide"));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if n > 2 {
        let rss: f64 = points
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_se,
        points: n,
    })
}

/// Fit of y = A x^b through ln y = ln A + b ln x. Points with non-positive
/// coordinates are dropped.
pub fn power_law_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .map(|p| (p.0.ln(), p.1.ln()))
        .collect();
    linear_fit(&logs)
}

/// Least-squares A in y = A x^b for a fixed exponent b.
pub fn prefactor_fit(points: &[(f64, f64)], exponent: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let num: f64 = points.iter().map(|p| p.1 * p.0.powf(exponent)).sum();
    let den: f64 = points.iter().map(|p| p.0.powf(2.0 * exponent)).sum();
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_line() {
        let pts: Vec<_> = (0..5).map(|i| (i as f64, 2.0 - 0.5 * i as f64)).collect();
        let f = linear_fit(&pts).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 2.0).abs() < 1e-14);
        assert!(f.slope_se < 1e-14);
    }

    #[test]
    fn slope_error_matches_textbook() {
        let pts = [(0.0, 0.1), (1.0, 0.9), (2.0, 2.2), (3.0, 2.8)];
        let f = linear_fit(&pts).unwrap();
        assert!((f.slope - 0.94).abs() < 1e-12);
        // intercept 0.09, residuals 0.01, −0.13, 0.23, −0.11 over sxx = 5
        let rss: f64 = [0.01f64, -0.13, 0.23, -0.11].iter().map(|r| r * r).sum();
        assert!((f.slope_se - (rss / 2.0 / 5.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_fits() {
        assert!(linear_fit(&[(1.0, 1.0)]).is_err());
        assert!(linear_fit(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(prefactor_fit(&[], 2.0).is_err());
    }

    #[test]
    fn power_law_and_prefactor() {
        let pts: Vec<_> = [20.0, 40.0, 80.0, 160.0]
            .iter()
            .map(|&n: &f64| (n, 0.08 * n * n))
            .collect();
        let f = power_law_fit(&pts).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept.exp() - 0.08).abs() < 1e-12);
        assert!((prefactor_fit(&pts, 2.0).unwrap() - 0.08).abs() < 1e-15);
    }

    #[test]
    fn welford_small() {
        let w: Welford = [1.0, 2.0, 4.0].into_iter().collect();
        assert_eq!(w.count, 3);
        assert!((w.mean - 7.0 / 3.0).abs() < 1e-15);
        assert!((w.variance() - 7.0 / 3.0).abs() < 1e-14);
        assert_eq!(Welford::new().std_error(), 0.0);
    }

    proptest! {
        #[test]
        fn streaming_mean_equals_batch(xs in prop::collection::vec(-1e3f64..1e3, 1..200)) {
            let w: Welford = xs.iter().copied().collect();
            let batch = xs.iter().sum::<f64>() / xs.len() as f64;
            prop_assert!((w.mean - batch).abs() <= 1e-12 * (1.0 + batch.abs()) + 1e-10);
        }
    }
}
