//! Descriptive functionals of a frame column.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::frame::{Mode, SkyFrame};
use crate::healpix::{ancestor_index, convert_index, Scheme};
use crate::stats::{quantile_sorted, sorted};
use crate::window::WindowSet;
use crate::{Error, Result};

/// Sturges' rule `⌈1 + log₂ n⌉`.
pub fn sturges_bins(n: usize) -> usize {
    (1.0 + (n.max(1) as f64).log2()).ceil() as usize
}

/// Histogram entropy in bits; see [`entropy_of`].
pub fn entropy(frame: &SkyFrame, column: Option<&str>, bins: Option<usize>) -> Result<f64> {
    entropy_of(frame.data_column(column)?, bins)
}

/// `−Σ p_b log₂ p_b` over `bins` equal-width bins spanning `[min, max]`,
/// Sturges' count when `bins` is `None`. NaNs are ignored.
pub fn entropy_of(values: &[f64], bins: Option<usize>) -> Result<f64> {
    let v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return Err(Error::Domain("entropy of an empty column".into()));
    }
    let bins = bins.unwrap_or_else(|| sturges_bins(v.len()));
    if bins == 0 {
        return Err(Error::Domain("bin count must be positive".into()));
    }
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if lo == hi {
        return Ok(0.0);
    }
    let mut counts = vec![0u64; bins];
    for x in &v {
        let k = ((x - lo) / (hi - lo) * bins as f64) as usize;
        counts[k.min(bins - 1)] += 1;
    }
    let n = v.len() as f64;
    Ok(counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum())
}

/// Area of the rows whose value exceeds `alpha`, in steradians.
pub fn first_minkowski(frame: &SkyFrame, column: Option<&str>, alpha: f64) -> Result<f64> {
    if frame.mode() != Mode::Cmb {
        return Err(Error::Domain("the Minkowski functional needs a frame with unique pixels".into()));
    }
    let above = frame.data_column(column)?.iter().filter(|&&v| v > alpha).count();
    Ok(above as f64 * frame.resolution().pixel_area())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenyiPoint {
    pub q: f64,
    pub t: f64,
}

/// Sample Rényi function on `n` equally spaced `q` in `[qMin, qMax]`, with
/// `q = 1` dropped. Boxes are the nested ancestors at order `box_level`,
/// the measure is `Y = value − min(value)` and the box scale is `2^(−j_b)`.
pub fn renyi_function(
    frame: &SkyFrame,
    column: Option<&str>,
    q_min: f64,
    q_max: f64,
    n: usize,
    box_level: u8,
) -> Result<Vec<RenyiPoint>> {
    let order = frame.resolution().order();
    if box_level == 0 || box_level > order {
        return Err(Error::Domain(format!("box level {box_level} outside 1..={order}")));
    }
    if n == 0 || !(q_min.is_finite() && q_max.is_finite()) || q_max < q_min {
        return Err(Error::Domain("bad q grid".into()));
    }
    let values = frame.data_column(column)?;
    let min = values.iter().copied().filter(|v| !v.is_nan()).fold(f64::INFINITY, f64::min);
    let res = frame.resolution();
    let shift = u32::from(order - box_level);
    let mut boxes: BTreeMap<u64, f64> = BTreeMap::new();
    for (&p, &v) in frame.pixels().iter().zip(values) {
        if v.is_nan() {
            continue;
        }
        let nested = match frame.scheme() {
            Scheme::Nested => p,
            Scheme::Ring => convert_index(p, Scheme::Ring, Scheme::Nested, res),
        };
        *boxes.entry(ancestor_index(nested, shift)?).or_default() += v - min;
    }
    let masses: Vec<f64> = boxes.into_values().collect();
    let grid: Vec<f64> = if n == 1 {
        vec![q_min]
    } else {
        (0..n).map(|k| q_min + k as f64 * (q_max - q_min) / (n - 1) as f64).collect()
    };
    grid.into_iter()
        .filter(|&q| q != 1.0)
        .map(|q| Ok(RenyiPoint { q, t: renyi_exponent(&masses, q, box_level)? }))
        .collect()
}

/// `log₂(Σ μ_j^q) / ((q − 1)·log₂ δ)` for box masses normalised to `μ`,
/// `δ = 2^(−j_b)`.
pub fn renyi_exponent(masses: &[f64], q: f64, box_level: u8) -> Result<f64> {
    let total: f64 = masses.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::DegenerateMeasure("total mass is zero".into()));
    }
    if q == 1.0 {
        return Err(Error::Domain("q = 1 is excluded".into()));
    }
    let s: f64 = masses.iter().filter(|&&m| m > 0.0).map(|m| (m / total).powf(q)).sum();
    Ok(s.log2() / ((q - 1.0) * -f64::from(box_level)))
}

/// `1 − Σ_h N_h σ_h² / (N σ²)` with population variances over the union of
/// the strata. `None` when the union has zero variance.
pub fn q_statistic(frame: &SkyFrame, column: Option<&str>, strata: &[WindowSet]) -> Result<Option<f64>> {
    if strata.is_empty() {
        return Err(Error::Stratification("no strata given".into()));
    }
    let values = frame.data_column(column)?;
    let centres = frame.pixel_centers();
    let labels: Vec<Vec<usize>> = centres
        .par_iter()
        .map(|c| (0..strata.len()).filter(|&s| strata[s].contains(c)).collect())
        .collect();
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); strata.len()];
    for (row, hits) in labels.iter().enumerate() {
        match hits.as_slice() {
            [] => {}
            [s] => groups[*s].push(values[row]),
            _ => {
                return Err(Error::Stratification(format!(
                    "row {} lies in strata {:?}",
                    row + 1,
                    hits.iter().map(|s| s + 1).collect::<Vec<_>>()
                )))
            }
        }
    }
    if let Some(s) = groups.iter().position(Vec::is_empty) {
        return Err(Error::Stratification(format!("stratum {} is empty", s + 1)));
    }
    let ss = |g: &[f64]| {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        g.iter().map(|v| (v - m).powi(2)).sum::<f64>()
    };
    let within: f64 = groups.iter().map(|g| ss(g)).sum();
    let all: Vec<f64> = groups.concat();
    let total = ss(&all);
    if total == 0.0 {
        return Ok(None);
    }
    Ok(Some((1.0 - within / total).clamp(0.0, 1.0)))
}

/// Matched type-7 quantiles of the column inside `a` and inside `b` at
/// `n` equally spaced probabilities from 0 to 1.
pub fn qq_pairs(
    frame: &SkyFrame,
    column: Option<&str>,
    a: &WindowSet,
    b: &WindowSet,
    n: usize,
) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::Domain("at least one quantile is required".into()));
    }
    let region = |w: &WindowSet, which: &str| -> Result<Vec<f64>> {
        let sub = frame.extract_window(w);
        let v = sorted(sub.data_column(column)?);
        if v.is_empty() {
            return Err(Error::Domain(format!("region {which} holds no data")));
        }
        Ok(v)
    };
    let (qa, qb) = (region(a, "A")?, region(b, "B")?);
    let probs: Vec<f64> = if n == 1 {
        vec![0.5]
    } else {
        (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
    };
    Ok(probs
        .into_iter()
        .map(|p| (quantile_sorted(&qa, p), quantile_sorted(&qb, p)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalBin {
    pub center: f64,
    /// `None` for an empty bin.
    pub mean: Option<f64>,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularMarginals {
    pub theta: Vec<MarginalBin>,
    pub phi: Vec<MarginalBin>,
}

/// Column means over equal-width bins of colatitude on `[0, π]` and of
/// longitude on `[0, 2π)`.
pub fn angular_marginals(
    frame: &SkyFrame,
    column: Option<&str>,
    theta_bins: usize,
    phi_bins: usize,
) -> Result<AngularMarginals> {
    if frame.is_empty() {
        return Err(Error::Domain("frame has no rows".into()));
    }
    if theta_bins == 0 || phi_bins == 0 {
        return Err(Error::Domain("bin counts must be positive".into()));
    }
    let values = frame.data_column(column)?;
    let pos = frame.positions();
    let mut theta = vec![(0.0, 0u64); theta_bins];
    let mut phi = vec![(0.0, 0u64); phi_bins];
    for (p, &v) in pos.iter().zip(values) {
        if v.is_nan() {
            continue;
        }
        let t = ((p.theta() / PI * theta_bins as f64) as usize).min(theta_bins - 1);
        let f = ((p.phi() / TAU * phi_bins as f64) as usize).min(phi_bins - 1);
        theta[t].0 += v;
        theta[t].1 += 1;
        phi[f].0 += v;
        phi[f].1 += 1;
    }
    let finish = |acc: Vec<(f64, u64)>, span: f64| -> Vec<MarginalBin> {
        let w = span / acc.len() as f64;
        acc.into_iter()
            .enumerate()
            .map(|(k, (s, c))| MarginalBin {
                center: (k as f64 + 0.5) * w,
                mean: (c > 0).then(|| s / c as f64),
                count: c,
            })
            .collect()
    };
    Ok(AngularMarginals { theta: finish(theta, PI), phi: finish(phi, TAU) })
}
