//! Concurrence and critical chain length from optimal transport probabilities.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::fmt_f;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("need at least {need} points, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("non-positive probability {p} at L={l}")]
    NonPositive { l: usize, p: f64 },
    #[error("degenerate series: {0}")]
    Degenerate(&'static str),
}

/// `max(0, 2p - 1)`.
pub fn concurrence(p: f64) -> Result<f64, AnalysisError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AnalysisError::Probability(p));
    }
    Ok((2.0 * p - 1.0).max(0.0))
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, r2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64), AnalysisError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(AnalysisError::TooFew { need: 2, got: x.len().min(y.len()) });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::Degenerate("all abscissae equal"));
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok((a, b, r2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelAnalysis {
    /// K
    pub theta: f64,
    /// `p(L) ~ amplitude * exp(-rate * L)`.
    pub amplitude: f64,
    pub rate: f64,
    /// RMS of the log residuals.
    pub fit_residual: f64,
    pub r2: f64,
    /// Smallest integer `L` with fitted `p <= 1/2`; `None` when the fit never decays.
    pub l_c: Option<usize>,
    /// Smallest `L` used in the fit.
    pub l_min: usize,
    /// `(L, p, C)` for every input point.
    pub concurrence: Vec<(usize, f64, f64)>,
}

impl ChannelAnalysis {
    pub fn fitted(&self, l: f64) -> f64 {
        self.amplitude * (-self.rate * l).exp()
    }
}

pub const DEFAULT_FIT_L_MIN: usize = 8;

/// Log-space exponential fit over points with `L >= l_min` and the crossing of 1/2.
pub fn fit_and_extrapolate(
    series: &[(usize, f64)],
    theta: f64,
    l_min: usize,
) -> Result<ChannelAnalysis, AnalysisError> {
    let mut concurrence_rows = Vec::with_capacity(series.len());
    for &(l, p) in series {
        if !(p > 0.0) {
            return Err(AnalysisError::NonPositive { l, p });
        }
        concurrence_rows.push((l, p, concurrence(p)?));
    }
    let used: Vec<(usize, f64)> = series.iter().copied().filter(|(l, _)| *l >= l_min).collect();
    if used.len() < 4 {
        return Err(AnalysisError::TooFew { need: 4, got: used.len() });
    }
    if used.iter().all(|(_, p)| *p == used[0].1) {
        return Err(AnalysisError::Degenerate("all probabilities equal"));
    }
    let x: Vec<f64> = used.iter().map(|(l, _)| *l as f64).collect();
    let y: Vec<f64> = used.iter().map(|(_, p)| p.ln()).collect();
    let (a, b, r2) = linear_fit(&x, &y)?;
    let rms = (x.iter().zip(&y).map(|(u, v)| (v - a - b * u).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
    let (amplitude, rate) = (a.exp(), -b);

    let l_c = if amplitude <= 0.5 {
        Some(1)
    } else if rate <= 0.0 {
        None
    } else {
        // a - rate L <= -ln 2; nudge the boundary so exact crossings count
        let x = (a + std::f64::consts::LN_2) / rate;
        let mut lc = (x - 1e-9 * x.abs().max(1.0)).ceil().max(1.0) as usize;
        while a - rate * lc as f64 > -std::f64::consts::LN_2 + 1e-12 {
            lc += 1;
        }
        Some(lc)
    };
    Ok(ChannelAnalysis { theta, amplitude, rate, fit_residual: rms, r2, l_c, l_min, concurrence: concurrence_rows })
}

pub fn write_concurrence<W: Write>(w: W, channels: &[ChannelAnalysis]) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["theta_K", "L", "p_pi", "concurrence", "p_fit"])?;
    for c in channels {
        for &(l, p, conc) in &c.concurrence {
            wr.write_record([fmt_f(c.theta), l.to_string(), fmt_f(p), fmt_f(conc), fmt_f(c.fitted(l as f64))])?;
        }
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn concurrence_values() {
        assert_eq!(concurrence(1.0).unwrap(), 1.0);
        assert_eq!(concurrence(0.5).unwrap(), 0.0);
        assert!((concurrence(0.8).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(concurrence(0.2).unwrap(), 0.0);
        assert!(concurrence(1.1).is_err() && concurrence(-0.1).is_err() && concurrence(f64::NAN).is_err());
    }

    #[test]
    fn synthetic_exponential() {
        let s: Vec<(usize, f64)> = (8..=20).map(|l| (l, (-0.01 * l as f64).exp())).collect();
        let a = fit_and_extrapolate(&s, 300.0, 8).unwrap();
        assert!((a.rate - 0.01).abs() < 1e-12);
        assert!((a.amplitude - 1.0).abs() < 1e-12);
        assert_eq!(a.l_c, Some(70));
        assert!(a.fit_residual < 1e-12 && (a.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        let s: Vec<(usize, f64)> = (8..=11).map(|l| (l, 0.9)).collect();
        assert!(matches!(fit_and_extrapolate(&s, 4.0, 8), Err(AnalysisError::Degenerate(_))));
        let s = vec![(8, 0.9), (10, 0.8), (12, 0.0), (14, 0.6)];
        assert!(matches!(fit_and_extrapolate(&s, 4.0, 8), Err(AnalysisError::NonPositive { l: 12, .. })));
        let s = vec![(4, 0.95), (6, 0.9), (8, 0.85), (10, 0.8), (12, 0.75)];
        assert!(matches!(fit_and_extrapolate(&s, 4.0, 8), Err(AnalysisError::TooFew { got: 3, .. })));
        assert!(fit_and_extrapolate(&s, 4.0, 4).is_ok());
        // growing series never crosses 1/2
        let s: Vec<(usize, f64)> = (8..=12).map(|l| (l, 0.6 + 0.01 * l as f64)).collect();
        assert_eq!(fit_and_extrapolate(&s, 4.0, 8).unwrap().l_c, None);
    }

    #[test]
    fn linear_fit_r2() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let (a, b, r2) = linear_fit(&x, &[3.0, 5.0, 7.0, 9.0]).unwrap();
        assert!((a - 1.0).abs() < 1e-14 && (b - 2.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
        let (_, _, r2) = linear_fit(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r2 - 0.64).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn concurrence_monotone(p in 0.0f64..1.0, q in 0.0f64..1.0) {
            let (a, b) = (concurrence(p).unwrap(), concurrence(q).unwrap());
            prop_assert!((0.0..=1.0).contains(&a));
            if p <= q { prop_assert!(a <= b); }
            prop_assert!((a - b).abs() <= 2.0 * (p - q).abs() + 1e-15);
        }

        #[test]
        fn recovers_own_model(amp in 0.6f64..1.0, k in 0.001f64..0.05) {
            let s: Vec<(usize, f64)> = (8..=20).map(|l| (l, amp * (-k * l as f64).exp())).collect();
            let a = fit_and_extrapolate(&s, 300.0, 8).unwrap();
            prop_assert!((a.amplitude - amp).abs() < 1e-10);
            prop_assert!((a.rate - k).abs() < 1e-10);
            let lc = a.l_c.unwrap();
            prop_assert!(a.fitted(lc as f64) <= 0.5 + 1e-12);
            prop_assert!(lc == 1 || a.fitted((lc - 1) as f64) > 0.5);
        }

        #[test]
        fn colder_channel_lives_longer(k in 0.005f64..0.05, f in 0.3f64..0.9) {
            let hot: Vec<(usize, f64)> = (8..=20).map(|l| (l, 0.98 * (-k * l as f64).exp())).collect();
            let cold: Vec<(usize, f64)> = (8..=20).map(|l| (l, 0.98 * (-f * k * l as f64).exp())).collect();
            let h = fit_and_extrapolate(&hot, 300.0, 8).unwrap().l_c.unwrap();
            let c = fit_and_extrapolate(&cold, 4.0, 8).unwrap().l_c.unwrap();
            prop_assert!(c > h);
        }
    }
}
