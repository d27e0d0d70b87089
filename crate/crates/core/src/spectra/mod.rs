//! Empirical spectral statistics: trace moments `Y_N^(k) = tr(M^k) / N`,
//! eigenvalues, cross-trial means and variances, and comparisons with the
//! semicircle law.

mod jacobi;
mod semicircle;

use ndarray::Array2;
use serde::Serialize;

pub use jacobi::{jacobi_eigenvalues, DEFAULT_MAX_SWEEPS, DEFAULT_TOL};
pub use semicircle::{histogram, ks_distance, semicircle_cdf, semicircle_density, HistogramBin, MIN_BINS};

use crate::ensembles::{sample_matrix, EnsembleKind, EnsembleSpec, MatrixSample};
use crate::error::{Error, Result};
use crate::nc_partitions::{catalan, MAX_ENUMERATION_ORDER};
use crate::tree_integrals::moment_table;
use crate::weights::DEFAULT_GRID;

/// `tr(M^k) / N` by `k − 1` successive products.
pub fn trace_power_moment(m: &MatrixSample, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::out_of_range("k", k, ">= 1"));
    }
    let a = &m.entries;
    let mut p = a.clone();
    for _ in 1..k {
        p = p.dot(a);
    }
    Ok(p.diag().sum() / m.n() as f64)
}

/// `Y^(1) … Y^(k_max)` from the powers `M^j`, `j ≤ ⌈k_max / 2⌉`, using
/// `tr(M^{2j}) = ‖M^j‖²_F` and `tr(M^{2j+1}) = ⟨M^j, M^{j+1}⟩_F`.
pub fn trace_moments(m: &MatrixSample, k_max: usize) -> Vec<f64> {
    let n = m.n() as f64;
    let a = &m.entries;
    let top = k_max.div_ceil(2);
    let mut powers: Vec<Array2<f64>> = Vec::with_capacity(top);
    if top >= 1 {
        powers.push(a.clone());
    }
    for j in 1..top {
        let next = powers[j - 1].dot(a);
        powers.push(next);
    }
    let inner = |x: &Array2<f64>, y: &Array2<f64>| x.iter().zip(y.iter()).map(|(u, v)| u * v).sum::<f64>();
    (1..=k_max)
        .map(|k| {
            let j = k / 2;
            let value = match (k % 2, j) {
                (1, 0) => a.diag().sum(),
                (1, _) => inner(&powers[j - 1], &powers[j]),
                _ => inner(&powers[j - 1], &powers[j - 1]),
            };
            value / n
        })
        .collect()
}

/// Eigenvalues in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSample {
    pub eigenvalues: Vec<f64>,
}

impl SpectralSample {
    /// `(1/N) Σ λᵢ^k`.
    pub fn moment(&self, k: usize) -> f64 {
        self.eigenvalues.iter().map(|l| l.powi(k as i32)).sum::<f64>() / self.eigenvalues.len() as f64
    }
}

pub fn eigenvalues(m: &MatrixSample, tol: f64, max_sweeps: usize) -> Result<SpectralSample> {
    let mut eigenvalues = jacobi_eigenvalues(&m.entries, tol, max_sweeps)?;
    eigenvalues.sort_by(f64::total_cmp);
    Ok(SpectralSample { eigenvalues })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub k: usize,
    pub mean: f64,
    /// Unbiased variance across trials.
    pub variance: f64,
    pub trials: usize,
    pub theory: Option<f64>,
    pub abs_gap: Option<f64>,
}

impl MomentRow {
    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub ensemble: String,
    pub normalized: bool,
    /// Scale applied as `Y^(k) / φ₀^{k/2}` when `normalized`.
    pub phi0: f64,
    pub rows: Vec<MomentRow>,
}

impl MomentReport {
    pub fn row(&self, k: usize) -> Option<&MomentRow> {
        self.rows.iter().find(|r| r.k == k)
    }
}

fn map_trials<T: Send>(trials: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..trials as u64).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..trials as u64).map(f).collect()
    }
}

/// `Y^(1) … Y^(k_max)` for trials `0 … trials − 1`, in trial order.
pub fn trial_moments(spec: &EnsembleSpec, k_max: usize, trials: usize) -> Vec<Vec<f64>> {
    map_trials(trials, |t| trace_moments(&sample_matrix(spec, t), k_max))
}

fn mean_and_variance(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Limit moments the ensemble should approach, scaled like the empirical ones.
fn theory_moments(spec: &EnsembleSpec, k_max: usize, normalized: bool) -> Result<Vec<Option<f64>>> {
    let limit = k_max.min(MAX_ENUMERATION_ORDER);
    let mut out = vec![None; k_max];
    match (&spec.kind, spec.weight_fn()) {
        (EnsembleKind::SlowBand { .. }, _) | (_, None) => {
            for k in 1..=limit {
                out[k - 1] = Some(if k % 2 == 0 { catalan(k / 2)? as f64 } else { 0.0 });
            }
        }
        (_, Some(w)) => {
            if limit > 0 {
                let table = moment_table(limit, &w, DEFAULT_GRID, normalized)?;
                for e in &table.entries {
                    out[e.k - 1] = Some(e.mu);
                }
            }
        }
    }
    Ok(out)
}

/// Mean and variance of `Y^(k)` over `trials` samples for `k = 1 … k_max`.
/// With `normalized`, `Y^(k)` is divided by `φ₀^{k/2}`, which rescales the
/// matrix to unit limiting second moment.
pub fn empirical_moments(
    spec: &EnsembleSpec,
    k_max: usize,
    trials: usize,
    normalized: bool,
) -> Result<MomentReport> {
    if trials < 2 {
        return Err(Error::out_of_range("trials", trials, ">= 2"));
    }
    if k_max == 0 {
        return Err(Error::out_of_range("k_max", k_max, ">= 1"));
    }
    let phi0 = spec.phi0(DEFAULT_GRID)?;
    let theory = theory_moments(spec, k_max, normalized)?;
    let per_trial = trial_moments(spec, k_max, trials);
    let rows = (1..=k_max)
        .map(|k| {
            let scale = if normalized { phi0.powf(k as f64 / 2.0) } else { 1.0 };
            let (mean, variance) = mean_and_variance(per_trial.iter().map(|y| y[k - 1] / scale));
            let theory = theory[k - 1];
            MomentRow {
                k,
                mean,
                variance,
                trials,
                theory,
                abs_gap: theory.map(|t| (mean - t).abs()),
            }
        })
        .collect();
    Ok(MomentReport {
        ensemble: spec.to_string(),
        normalized,
        phi0,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayAxis {
    Dimension,
    Bandwidth,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub n: usize,
    /// `N`, or `b_N` on the bandwidth axis.
    pub axis_value: usize,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceDecay {
    pub axis: DecayAxis,
    pub k: usize,
    pub trials: usize,
    pub rows: Vec<DecayRow>,
    /// Least-squares slope of `log Var(Y^(k))` against the log axis;
    /// `-∞` when some variance is exactly zero.
    pub slope: f64,
}

/// Variance of `Y^(k)` across the family `family.with_n(n)`, `n ∈ ns`. Slow
/// band families are measured against `b_N`, all others against `N`.
pub fn variance_decay(family: &EnsembleSpec, ns: &[usize], k: usize, trials: usize) -> Result<VarianceDecay> {
    if ns.len() < 3 {
        return Err(Error::out_of_range("ns", format!("{} sizes", ns.len()), "at least 3"));
    }
    if trials < 16 {
        return Err(Error::out_of_range("trials", trials, ">= 16"));
    }
    if k == 0 {
        return Err(Error::out_of_range("k", k, ">= 1"));
    }
    let axis = match family.kind {
        EnsembleKind::SlowBand { .. } => DecayAxis::Bandwidth,
        _ => DecayAxis::Dimension,
    };
    let rows = ns
        .iter()
        .map(|&n| {
            let spec = family.with_n(n)?;
            let ys = trial_moments(&spec, k, trials);
            let (mean, variance) = mean_and_variance(ys.iter().map(|y| y[k - 1]));
            let axis_value = match axis {
                DecayAxis::Bandwidth => spec.bandwidth().unwrap_or(n),
                DecayAxis::Dimension => n,
            };
            Ok(DecayRow {
                n,
                axis_value,
                mean,
                variance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = if rows.iter().any(|r| r.variance == 0.0) {
        f64::NEG_INFINITY
    } else {
        let xs: Vec<f64> = rows.iter().map(|r| (r.axis_value as f64).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.variance.ln()).collect();
        least_squares_slope(&xs, &ys).ok_or_else(|| {
            Error::InvalidEnsemble("the sizes must give at least two distinct axis values".into())
        })?
    };
    Ok(VarianceDecay {
        axis,
        k,
        trials,
        rows,
        slope,
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Eigenvalues of `trials` samples, concatenated in trial order. With
/// `normalized` each eigenvalue is divided by `√φ₀`.
pub fn pooled_spectrum(spec: &EnsembleSpec, trials: usize, normalized: bool) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(Error::out_of_range("trials", trials, ">= 1"));
    }
    let scale = if normalized { spec.phi0(DEFAULT_GRID)?.sqrt() } else { 1.0 };
    let per_trial = map_trials(trials, |t| eigenvalues(&sample_matrix(spec, t), DEFAULT_TOL, DEFAULT_MAX_SWEEPS));
    let mut pooled = Vec::with_capacity(trials * spec.n);
    for s in per_trial {
        pooled.extend(s?.eigenvalues.iter().map(|l| l / scale));
    }
    Ok(pooled)
}
