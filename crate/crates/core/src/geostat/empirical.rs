//! Binned empirical covariance and semivariogram.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::frame::SkyFrame;
use crate::sampling::Sampler;
use crate::sphere::{geodesic_distance, UnitVector};
use crate::{Error, Result};

pub const DEFAULT_PAIR_BUDGET: u64 = 50_000_000;

const ROW_CHUNK: usize = 64;
const DRAW_CHUNK: u64 = 1 << 20;
const STREAM_STEP: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Covariance,
    Variogram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairOptions {
    /// Above this many pairs, pairs are drawn uniformly with replacement.
    pub max_pairs: u64,
    pub seed: u64,
}

impl Default for PairOptions {
    fn default() -> Self {
        PairOptions { max_pairs: DEFAULT_PAIR_BUDGET, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCurve {
    pub estimator: Estimator,
    pub lags: Vec<f64>,
    /// `None` marks an empty bin.
    pub values: Vec<Option<f64>>,
    pub counts: Vec<u64>,
    pub max_dist: f64,
    pub bins: usize,
    pub subsampled: bool,
}

impl EmpiricalCurve {
    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }

    /// `(lag, value, count)` for populated bins.
    pub fn populated(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.lags
            .iter()
            .zip(&self.values)
            .zip(&self.counts)
            .filter_map(|((&h, v), &n)| v.map(|v| (h, v, n)))
    }

    /// CSV with header `lag,value,count`; empty bins are written as `NA`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lag", "value", "count"])?;
        for ((h, v), n) in self.lags.iter().zip(&self.values).zip(&self.counts) {
            let v = v.map_or_else(|| "NA".to_string(), |v| v.to_string());
            w.write_record([h.to_string(), v, n.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone)]
struct Acc {
    sum: Vec<f64>,
    count: Vec<u64>,
}

impl Acc {
    fn new(n: usize) -> Self {
        Acc { sum: vec![0.0; n], count: vec![0; n] }
    }

    fn merge(mut self, o: &Acc) -> Self {
        for (a, b) in self.sum.iter_mut().zip(&o.sum) {
            *a += b;
        }
        for (a, b) in self.count.iter_mut().zip(&o.count) {
            *a += b;
        }
        self
    }
}

struct Binner<'a> {
    pos: &'a [UnitVector],
    vals: &'a [f64],
    estimator: Estimator,
    width: f64,
    bins: usize,
    max_dist: f64,
    cos_cut: f64,
}

impl Binner<'_> {
    fn add(&self, acc: &mut Acc, i: usize, j: usize) {
        let (a, b) = (&self.pos[i], &self.pos[j]);
        if a.dot(b) < self.cos_cut {
            return;
        }
        let d = geodesic_distance(a, b);
        let k = if d == 0.0 {
            0
        } else if d <= self.max_dist {
            ((d / self.width).ceil() as usize).clamp(1, self.bins)
        } else {
            return;
        };
        let term = match self.estimator {
            Estimator::Covariance => self.vals[i] * self.vals[j],
            Estimator::Variogram => 0.5 * (self.vals[i] - self.vals[j]).powi(2),
        };
        acc.sum[k] += term;
        acc.count[k] += 1;
    }
}

/// Empirical covariance: `bins + 1` values, bin 0 holding the zero-lag
/// variance from self and coincident pairs, bin `k` the mean of
/// `(Y₁−Ȳ)(Y₂−Ȳ)` over pairs at distance in `((k−1)w, kw]`, `w = maxDist/bins`.
pub fn empirical_covariance(
    frame: &SkyFrame,
    column: Option<&str>,
    max_dist: f64,
    bins: usize,
    opts: &PairOptions,
) -> Result<EmpiricalCurve> {
    let vals = frame.data_column(column)?;
    empirical_curve(&frame.positions(), vals, Estimator::Covariance, max_dist, bins, opts)
}

/// Semivariogram `(1/2N_h)·Σ(Y₁−Y₂)²` over `bins` equal-width bins on
/// `(0, maxDist]`.
pub fn empirical_variogram(
    frame: &SkyFrame,
    column: Option<&str>,
    max_dist: f64,
    bins: usize,
    opts: &PairOptions,
) -> Result<EmpiricalCurve> {
    let vals = frame.data_column(column)?;
    empirical_curve(&frame.positions(), vals, Estimator::Variogram, max_dist, bins, opts)
}

/// Point-level form of the estimators. Rows with non-finite values are
/// dropped.
pub fn empirical_curve(
    positions: &[UnitVector],
    values: &[f64],
    estimator: Estimator,
    max_dist: f64,
    bins: usize,
    opts: &PairOptions,
) -> Result<EmpiricalCurve> {
    if positions.len() != values.len() {
        return Err(Error::Schema("positions and values differ in length".into()));
    }
    if !(max_dist > 0.0 && max_dist <= PI) {
        return Err(Error::Domain(format!("maxDist {max_dist} outside (0, π]")));
    }
    if bins == 0 {
        return Err(Error::Domain("bins must be positive".into()));
    }
    let (pos, mut vals): (Vec<UnitVector>, Vec<f64>) = positions
        .iter()
        .zip(values)
        .filter(|(_, v)| v.is_finite())
        .map(|(p, &v)| (*p, v))
        .unzip();
    let n = vals.len();
    if n < 2 {
        return Err(Error::Domain("at least two rows are required".into()));
    }
    if estimator == Estimator::Covariance {
        let m = vals.iter().sum::<f64>() / n as f64;
        vals.iter_mut().for_each(|v| *v -= m);
    }
    let width = max_dist / bins as f64;
    let binner = Binner {
        pos: &pos,
        vals: &vals,
        estimator,
        width,
        bins,
        max_dist,
        cos_cut: if max_dist >= PI { f64::NEG_INFINITY } else { max_dist.cos() - 1e-12 },
    };

    let total = n as u64 * (n as u64 - 1) / 2;
    let subsampled = total > opts.max_pairs;
    let mut acc = if subsampled {
        draw_pairs(&binner, n, opts)
    } else {
        enumerate_pairs(&binner, n)
    };
    if subsampled {
        let scale = total as f64 / opts.max_pairs as f64;
        for (s, c) in acc.sum.iter_mut().zip(acc.count.iter_mut()) {
            *s *= scale;
            *c = (*c as f64 * scale).round() as u64;
        }
    }

    let (lags, values, counts) = match estimator {
        Estimator::Covariance => {
            acc.sum[0] += vals.iter().map(|v| v * v).sum::<f64>();
            acc.count[0] += n as u64;
            let lags = std::iter::once(0.0)
                .chain((1..=bins).map(|k| (k as f64 - 0.5) * width))
                .collect();
            (lags, finish(&acc, 0), acc.count)
        }
        Estimator::Variogram => {
            let lags = (1..=bins).map(|k| (k as f64 - 0.5) * width).collect();
            (lags, finish(&acc, 1), acc.count[1..].to_vec())
        }
    };
    Ok(EmpiricalCurve { estimator, lags, values, counts, max_dist, bins, subsampled })
}

fn finish(acc: &Acc, from: usize) -> Vec<Option<f64>> {
    acc.sum[from..]
        .iter()
        .zip(&acc.count[from..])
        .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
        .collect()
}

fn enumerate_pairs(binner: &Binner<'_>, n: usize) -> Acc {
    let starts: Vec<usize> = (0..n).step_by(ROW_CHUNK).collect();
    let parts: Vec<Acc> = starts
        .par_iter()
        .map(|&s| {
            let mut acc = Acc::new(binner.bins + 1);
            for i in s..(s + ROW_CHUNK).min(n) {
                for j in i + 1..n {
                    binner.add(&mut acc, i, j);
                }
            }
            acc
        })
        .collect();
    parts.iter().fold(Acc::new(binner.bins + 1), Acc::merge)
}

fn draw_pairs(binner: &Binner<'_>, n: usize, opts: &PairOptions) -> Acc {
    let chunks = opts.max_pairs.div_ceil(DRAW_CHUNK);
    let parts: Vec<Acc> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = Sampler::new(opts.seed.wrapping_add(c.wrapping_mul(STREAM_STEP)));
            let mut acc = Acc::new(binner.bins + 1);
            let draws = DRAW_CHUNK.min(opts.max_pairs - c * DRAW_CHUNK);
            for _ in 0..draws {
                let i = rng.below(n as u64) as usize;
                let mut j = rng.below(n as u64 - 1) as usize;
                if j >= i {
                    j += 1;
                }
                binner.add(&mut acc, i, j);
            }
            acc
        })
        .collect();
    parts.iter().fold(Acc::new(binner.bins + 1), Acc::merge)
}
