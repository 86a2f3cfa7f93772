//! Accuracy and the across-trial improvement statistics.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{EnnError, Result};

pub fn accuracy(predictions: &[bool], labels: &[bool]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(EnnError::Dimension {
            expected: labels.len(),
            got: predictions.len(),
        });
    }
    if labels.is_empty() {
        return Err(EnnError::Empty("accuracy of no predictions"));
    }
    let hits = predictions.iter().zip(labels).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / labels.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub initials: Vec<f64>,
    pub finals: Vec<f64>,
    pub improvements: Vec<f64>,
    pub mean: f64,
    /// `None` for a single trial.
    pub std_error: Option<f64>,
    pub t: Option<f64>,
    pub df: usize,
    /// One-sided p-value for "mean improvement > 0".
    pub p_value: Option<f64>,
    pub stars: String,
}

/// One-sided significance marks at 0.05, 0.01 and 0.0001.
pub fn stars(p: f64) -> &'static str {
    if p < 1e-4 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// `P(T > t)` for Student-t with `df` degrees of freedom.
pub fn one_sided_p(t: f64, df: usize) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 0.0 } else { 1.0 };
    }
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    dist.sf(t)
}

pub fn summarize(initials: &[f64], finals: &[f64]) -> Result<TrialReport> {
    if initials.len() != finals.len() {
        return Err(EnnError::Dimension {
            expected: initials.len(),
            got: finals.len(),
        });
    }
    if initials.is_empty() {
        return Err(EnnError::Empty("no trials to summarize"));
    }
    let imp: Vec<f64> = finals.iter().zip(initials).map(|(f, i)| f - i).collect();
    let n = imp.len();
    let mean = imp.iter().sum::<f64>() / n as f64;
    let (std_error, t, p_value) = if n < 2 {
        (None, None, None)
    } else {
        let var = imp.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        let t = if se > 0.0 {
            mean / se
        } else if mean == 0.0 {
            0.0
        } else {
            mean.signum() * f64::INFINITY
        };
        (Some(se), Some(t), Some(one_sided_p(t, n - 1)))
    };
    Ok(TrialReport {
        initials: initials.to_vec(),
        finals: finals.to_vec(),
        improvements: imp,
        mean,
        std_error,
        t,
        df: n.saturating_sub(1),
        p_value,
        stars: p_value.map(stars).unwrap_or("").to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn accuracy_counts() {
        let a = [true, false, true];
        assert_eq!(accuracy(&a, &a).unwrap(), 1.0);
        let inv: Vec<bool> = a.iter().map(|b| !b).collect();
        assert_eq!(accuracy(&inv, &a).unwrap(), 0.0);
        let labels = vec![true; 100];
        let mut pred = labels.clone();
        pred.iter_mut().take(21).for_each(|p| *p = false);
        assert_eq!(accuracy(&pred, &labels).unwrap(), 0.79);
        assert!(accuracy(&[], &[]).is_err());
        assert!(accuracy(&[true], &[]).is_err());
    }

    #[test]
    fn zero_improvement() {
        let r = summarize(&[0.5, 0.6, 0.7], &[0.5, 0.6, 0.7]).unwrap();
        assert_eq!(r.mean, 0.0);
        assert_eq!(r.t, Some(0.0));
        assert_eq!(r.stars, "");
    }

    #[test]
    fn hand_arithmetic_example() {
        let r = summarize(&[0.0, 0.0, 0.0], &[0.01, 0.02, 0.03]).unwrap();
        assert_relative_eq!(r.mean, 0.02, max_relative = 1e-12);
        assert_relative_eq!(r.std_error.unwrap(), 0.01 / 3f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(r.t.unwrap(), 12f64.sqrt(), max_relative = 1e-12);
        assert_eq!(r.df, 2);
    }

    #[test]
    fn large_t_gets_three_stars() {
        // t = 45.2923 with 19 degrees of freedom
        let p = one_sided_p(45.2923, 19);
        assert!(p < 1e-4);
        assert_eq!(stars(p), "***");
        assert_eq!(stars(0.03), "*");
        assert_eq!(stars(0.005), "**");
        assert_eq!(stars(0.2), "");
    }

    #[test]
    fn p_value_against_closed_form() {
        // df = 1 is the Cauchy law: P(T > t) = 1/2 - atan(t)/pi
        for t in [-2.0, 0.0, 0.7, 3.0] {
            let want = 0.5 - f64::atan(t) / std::f64::consts::PI;
            assert_relative_eq!(one_sided_p(t, 1), want, max_relative = 1e-10);
        }
        // df = 2: P(T > t) = 1/2 - t / (2 sqrt(2 + t^2))
        for t in [-1.0f64, 0.5, 4.0] {
            let want = 0.5 - t / (2.0 * (2.0 + t * t).sqrt());
            assert_relative_eq!(one_sided_p(t, 2), want, max_relative = 1e-10);
        }
    }

    #[test]
    fn single_trial_has_no_t() {
        let r = summarize(&[0.4], &[0.5]).unwrap();
        assert!(r.t.is_none() && r.std_error.is_none());
        assert!(summarize(&[0.4], &[0.5, 0.6]).is_err());
        assert!(summarize(&[], &[]).is_err());
    }
}
