//! Empirical estimators run on realizations.
//!
//! Every estimator ends in a least-squares line through `(scale, log count)`
//! points, reported as a [`DimensionEstimate`].

mod image;
mod levels;
mod scaling;
mod sets;

use serde::Serialize;

use crate::error::{Error, Result};

pub use image::{
    image_box_dim, image_box_dim_with, uniform_sweep, BoxOptions, SweepRow, GUARD_QUANTILE,
};
pub use levels::{level_set, level_set_with, occupation_histogram, Histogram, LevelSet};
pub use scaling::{
    holder_exponent, oscillation_moment_scaling, partition_function, summarize_holder,
    tilted_holder_mean, tilted_holder_samples, HolderSummary,
};
pub use sets::TestSet;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::DegenerateRange(format!("{n} points cannot fix a line")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateRange("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let sse = (syy - slope * sxy).max(0.0);
    let stderr = if n > 2 {
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        stderr,
        r_squared,
    })
}

/// A slope read off a log-log table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Inclusive range of scales entering the fit.
    pub scale_range: (usize, usize),
    pub r_squared: f64,
    /// Every computed `(scale, count)`, including scales left out of the fit.
    pub counts: Vec<(usize, f64)>,
    /// Set when the underlying set was empty and `value` is the conventional 0.
    pub empty: bool,
}

impl DimensionEstimate {
    /// Slope of `log_base(count)` against `scale` over `range`.
    pub(crate) fn from_counts(
        counts: Vec<(usize, f64)>,
        range: (usize, usize),
        base: f64,
        min_points: usize,
    ) -> Result<Self> {
        let used: Vec<&(usize, f64)> = counts
            .iter()
            .filter(|(s, _)| *s >= range.0 && *s <= range.1)
            .collect();
        if used.len() < min_points {
            return Err(Error::DegenerateRange(format!(
                "{} usable scales in {}..={}, need {min_points}",
                used.len(),
                range.0,
                range.1
            )));
        }
        if let Some((s, c)) = used.iter().find(|(_, c)| !(*c > 0.0)) {
            return Err(Error::DegenerateRange(format!("count {c} at scale {s}")));
        }
        let xs: Vec<f64> = used.iter().map(|(s, _)| *s as f64).collect();
        let ys: Vec<f64> = used.iter().map(|(_, c)| c.ln() / base.ln()).collect();
        let fit = fit_line(&xs, &ys)?;
        Ok(DimensionEstimate {
            value: fit.slope,
            stderr: fit.stderr,
            scale_range: range,
            r_squared: fit.r_squared,
            counts,
            empty: false,
        })
    }

    pub(crate) fn empty_set(range: (usize, usize)) -> Self {
        DimensionEstimate {
            value: 0.0,
            stderr: 0.0,
            scale_range: range,
            r_squared: 1.0,
            counts: Vec::new(),
            empty: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [1.5, 3.5, 5.5, 7.5];
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept + 0.5).abs() < 1e-12);
        assert!(f.stderr < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_line_has_unit_r2() {
        let f = fit_line(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(f.slope, 0.0);
        assert_eq!(f.r_squared, 1.0);
    }

    #[test]
    fn noisy_line_stderr() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.0, 1.0, 1.0, 3.0];
        let f = fit_line(&xs, &ys).unwrap();
        // hand computation: slope 0.9, residual sum 0.7
        assert!((f.slope - 0.9).abs() < 1e-12);
        assert!((f.stderr - (0.7f64 / 2.0 / 5.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn too_few_scales() {
        let counts = vec![(1, 2.0), (2, 4.0), (3, 8.0)];
        assert!(matches!(
            DimensionEstimate::from_counts(counts, (1, 3), 2.0, 4),
            Err(Error::DegenerateRange(_))
        ));
    }
}
