//! Window-ensemble fits: every contiguous window of at least `n_min` points
//! is fitted independently, and parameters are summarised by the median and
//! the 0.1585 / 0.8415 quantiles of the ensemble.

use std::f64::consts::PI;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const N_MIN: usize = 4;
pub const Q_LO: f64 = 0.1585;
pub const Q_HI: f64 = 0.8415;
/// Windows whose design matrix is worse conditioned than this are dropped.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("x and y lengths differ")]
    LengthMismatch,
    #[error("design matrix is singular (condition number {0:.3e})")]
    Singular(f64),
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error("no roughening signal: every width coefficient vanishes")]
    NoRougheningSignal,
    #[error("ensembles were fitted on different windows")]
    WindowMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// `A log R + C`, parameters `[A, C]`.
    Log,
    /// `a R + b`, parameters `[a, b]`.
    Linear,
    /// `σ R - γ / R + c`, parameters `[σ, γ, c]`.
    Potential,
}

impl Model {
    pub fn n_params(self) -> usize {
        match self {
            Model::Log | Model::Linear => 2,
            Model::Potential => 3,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Model::Log => &["A", "C"],
            Model::Linear => &["a", "b"],
            Model::Potential => &["sigma", "gamma", "c"],
        }
    }

    fn basis(self, r: f64) -> [f64; 3] {
        match self {
            Model::Log => [r.ln(), 1.0, 0.0],
            Model::Linear => [r, 1.0, 0.0],
            Model::Potential => [r, -1.0 / r, 1.0],
        }
    }

    pub fn eval(self, params: &[f64], r: f64) -> f64 {
        self.basis(r).iter().zip(params).map(|(b, p)| b * p).sum()
    }
}

/// All contiguous index ranges of length `≥ n_min` over `n` points.
pub fn enumerate_windows(n: usize, n_min: usize) -> Result<Vec<Range<usize>>, FitError> {
    if n < n_min {
        return Err(FitError::TooFewPoints { needed: n_min, got: n });
    }
    let mut out = Vec::new();
    for len in n_min..=n {
        for start in 0..=n - len {
            out.push(start..start + len);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowFit {
    pub window: Range<usize>,
    pub params: Vec<f64>,
    pub chi2: f64,
}

/// Unweighted linear least squares of `model` on `(r, y)`.
pub fn fit_model(r: &[f64], y: &[f64], model: Model) -> Result<(Vec<f64>, f64), FitError> {
    if r.len() != y.len() {
        return Err(FitError::LengthMismatch);
    }
    let p = model.n_params();
    if r.len() < p + 1 {
        return Err(FitError::TooFewPoints { needed: p + 1, got: r.len() });
    }
    let a = DMatrix::from_fn(r.len(), p, |i, j| model.basis(r[i])[j]);
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(FitError::Singular(cond));
    }
    let x = svd.solve(&b, 0.0).map_err(|_| FitError::Singular(cond))?;
    let resid = &a * &x - b;
    Ok((x.iter().copied().collect(), resid.norm_squared()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitEnsemble {
    pub dataset: String,
    pub model: Model,
    pub fits: Vec<WindowFit>,
    /// Windows dropped as ill conditioned.
    pub excluded: Vec<Range<usize>>,
}

impl FitEnsemble {
    /// Fit every window of `n_min` or more consecutive points. `r` must be
    /// sorted ascending.
    pub fn build(
        dataset: impl Into<String>,
        r: &[f64],
        y: &[f64],
        model: Model,
        n_min: usize,
    ) -> Result<Self, FitError> {
        if r.len() != y.len() {
            return Err(FitError::LengthMismatch);
        }
        let mut fits = Vec::new();
        let mut excluded = Vec::new();
        for w in enumerate_windows(r.len(), n_min)? {
            match fit_model(&r[w.clone()], &y[w.clone()], model) {
                Ok((params, chi2)) => fits.push(WindowFit { window: w, params, chi2 }),
                Err(FitError::Singular(_)) => excluded.push(w),
                Err(e) => return Err(e),
            }
        }
        Ok(Self {
            dataset: dataset.into(),
            model,
            fits,
            excluded,
        })
    }

    pub fn param(&self, index: usize) -> Vec<f64> {
        self.fits.iter().map(|f| f.params[index]).collect()
    }

    pub fn estimate(&self, index: usize) -> Result<FitEstimate, FitError> {
        robust_estimate(&self.param(index))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitEstimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl FitEstimate {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn robust_estimate(values: &[f64]) -> Result<FitEstimate, FitError> {
    if values.is_empty() {
        return Err(FitError::EmptyEnsemble);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(FitEstimate {
        value: quantile(&v, 0.5),
        lo: quantile(&v, Q_LO),
        hi: quantile(&v, Q_HI),
        n: v.len(),
    })
}

/// Per-window ratio of two χ² values; `flagged` when the denominator is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiRatio {
    pub window: Range<usize>,
    pub ratio: f64,
    pub flagged: bool,
}

fn ratios(
    num: &FitEnsemble,
    den: &FitEnsemble,
    num_dof: f64,
    den_dof: f64,
) -> Result<Vec<ChiRatio>, FitError> {
    if num.fits.len() != den.fits.len() {
        return Err(FitError::WindowMismatch);
    }
    num.fits
        .iter()
        .zip(&den.fits)
        .map(|(a, b)| {
            if a.window != b.window {
                return Err(FitError::WindowMismatch);
            }
            let (x, y) = (a.chi2 / num_dof, b.chi2 / den_dof);
            let flagged = y <= f64::MIN_POSITIVE;
            Ok(ChiRatio {
                window: a.window.clone(),
                ratio: if flagged { f64::INFINITY } else { x / y },
                flagged,
            })
        })
        .collect()
}

/// `χ²(linear) / χ²(log)`; values above 1 favour logarithmic growth.
pub fn width_ratios(linear: &FitEnsemble, log: &FitEnsemble) -> Result<Vec<ChiRatio>, FitError> {
    ratios(linear, log, 1.0, 1.0)
}

/// `χ²_r(linear) / χ²_r(potential)` with `χ²_r = χ² / N_dof`, where `N_dof`
/// is the parameter count (2 and 3).
pub fn potential_ratios(
    linear: &FitEnsemble,
    potential: &FitEnsemble,
) -> Result<Vec<ChiRatio>, FitError> {
    ratios(linear, potential, 2.0, 3.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gamma0 {
    pub estimate: FitEstimate,
    pub values: Vec<f64>,
    /// Combinations skipped because `A` or `σ` vanished.
    pub skipped: usize,
}

/// Width coefficients below this magnitude count as zero.
pub const A_EPS: f64 = 1e-12;

/// `γ₀ = γ / (2π σ A)` over every combination of a potential window, a
/// width window and a sublattice.
pub fn gamma0_distribution(
    potential: &FitEnsemble,
    widths_by_k: &[FitEnsemble],
) -> Result<Gamma0, FitError> {
    if potential.fits.is_empty() || widths_by_k.iter().all(|w| w.fits.is_empty()) {
        return Err(FitError::EmptyEnsemble);
    }
    let a_values: Vec<f64> = widths_by_k.iter().flat_map(|w| w.param(0)).collect();
    let mut values = Vec::with_capacity(potential.fits.len() * a_values.len());
    let mut skipped = 0;
    for f in &potential.fits {
        let (sigma, gamma) = (f.params[0], f.params[1]);
        for &a in &a_values {
            if a.abs() < A_EPS || sigma.abs() < A_EPS {
                skipped += 1;
                continue;
            }
            values.push(gamma / (2.0 * PI * sigma * a));
        }
    }
    if values.is_empty() {
        return Err(FitError::NoRougheningSignal);
    }
    Ok(Gamma0 {
        estimate: robust_estimate(&values)?,
        values,
        skipped,
    })
}

/// Median and quantiles of parameter `index` pooled over several ensembles.
pub fn pooled_estimate(ensembles: &[FitEnsemble], index: usize) -> Result<FitEstimate, FitError> {
    let v: Vec<f64> = ensembles.iter().flat_map(|e| e.param(index)).collect();
    robust_estimate(&v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_counts() {
        assert_eq!(enumerate_windows(4, 4).unwrap().len(), 1);
        assert_eq!(enumerate_windows(6, 4).unwrap().len(), 6);
        assert_eq!(enumerate_windows(7, 4).unwrap().len(), 10);
        assert!(enumerate_windows(3, 4).is_err());
    }

    #[test]
    fn exact_log_recovery() {
        let r: Vec<f64> = (2..9).map(|d| d as f64 * 1.7).collect();
        let y: Vec<f64> = r.iter().map(|r| 0.3 * r.ln() + 1.1).collect();
        let (p, chi2) = fit_model(&r, &y, Model::Log).unwrap();
        assert!((p[0] - 0.3).abs() < 1e-10 && (p[1] - 1.1).abs() < 1e-10);
        assert!(chi2 < 1e-10);
    }

    #[test]
    fn constant_data() {
        let r = [1.0, 2.0, 3.0, 4.0];
        let (p, chi2) = fit_model(&r, &[0.7; 4], Model::Log).unwrap();
        assert!(p[0].abs() < 1e-12 && (p[1] - 0.7).abs() < 1e-12 && chi2 < 1e-20);
    }

    #[test]
    fn degenerate_r_is_singular() {
        assert!(matches!(
            fit_model(&[2.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0], Model::Linear),
            Err(FitError::Singular(_))
        ));
    }

    #[test]
    fn median_and_quantiles() {
        let e = robust_estimate(&[5.0, 1.0, 4.0, 2.0, 3.0]).unwrap();
        assert_eq!(e.value, 3.0);
        assert!((e.lo - (1.0 + 4.0 * 0.1585)).abs() < 1e-12);
        assert!((e.hi - (1.0 + 4.0 * 0.8415)).abs() < 1e-12);
        let same = robust_estimate(&[2.5; 9]).unwrap();
        assert_eq!((same.lo, same.value, same.hi), (2.5, 2.5, 2.5));
        assert_eq!(robust_estimate(&[]), Err(FitError::EmptyEnsemble));
    }

    #[test]
    fn exact_log_data_flags_width_ratio() {
        let r: Vec<f64> = (1..8).map(f64::from).collect();
        let y: Vec<f64> = r.iter().map(|r| 0.2 * r.ln()).collect();
        let log = FitEnsemble::build("w", &r, &y, Model::Log, N_MIN).unwrap();
        let lin = FitEnsemble::build("w", &r, &y, Model::Linear, N_MIN).unwrap();
        for c in width_ratios(&lin, &log).unwrap() {
            assert!(c.flagged || c.ratio > 1e6);
        }
    }

    #[test]
    fn gamma0_zero_gamma() {
        let r: Vec<f64> = (3..9).map(|d| d as f64).collect();
        let v: Vec<f64> = r.iter().map(|r| 0.5 * r + 2.0).collect();
        let w: Vec<f64> = r.iter().map(|r| 0.3 * r.ln()).collect();
        let pot = FitEnsemble::build("v", &r, &v, Model::Potential, N_MIN).unwrap();
        let wid = FitEnsemble::build("w", &r, &w, Model::Log, N_MIN).unwrap();
        let g = gamma0_distribution(&pot, &[wid.clone(), wid.clone(), wid]).unwrap();
        assert!(g.estimate.value.abs() < 1e-10);
        assert_eq!(g.values.len(), pot.fits.len() * 3 * 6);
    }

    #[test]
    fn gamma0_rigid_regime_has_no_signal() {
        let r: Vec<f64> = (3..9).map(|d| d as f64).collect();
        let v: Vec<f64> = r.iter().map(|r| 0.5 * r - 0.1 / r).collect();
        let pot = FitEnsemble::build("v", &r, &v, Model::Potential, N_MIN).unwrap();
        let flat = FitEnsemble::build("w", &r, &[0.25; 6], Model::Log, N_MIN).unwrap();
        assert_eq!(
            gamma0_distribution(&pot, &[flat]),
            Err(FitError::NoRougheningSignal)
        );
    }
}
