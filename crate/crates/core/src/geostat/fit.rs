//! Weighted least-squares fitting of variogram models.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::covariance::{CovarianceModel, Family};
use super::empirical::{EmpiricalCurve, Estimator};
use crate::sampling::Sampler;
use crate::{Error, Result};

const MAX_ITER: usize = 10_000;
const REL_TOL: f64 = 1e-10;
const RESTARTS: usize = 3;
const RESTART_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weights {
    #[default]
    Equal,
    Npairs,
    Cressie,
}

impl std::str::FromStr for Weights {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "equal" => Ok(Weights::Equal),
            "npairs" => Ok(Weights::Npairs),
            "cressie" => Ok(Weights::Cressie),
            _ => Err(Error::Parameter(format!("unknown weighting `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitOptions {
    pub weights: Weights,
    /// Keep the nugget at its initial value (zero without `init`).
    pub fix_nugget: bool,
    pub fix_kappa: bool,
    pub init: Option<CovarianceModel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: CovarianceModel,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Clone, Copy)]
enum Slot {
    SigmaSq,
    Psi,
    Kappa,
    Kappa2,
    Nugget,
}

struct Problem {
    lags: Vec<f64>,
    gamma: Vec<f64>,
    counts: Vec<f64>,
    weights: Weights,
    base: CovarianceModel,
    slots: Vec<Slot>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Problem {
    fn model(&self, u: &[f64]) -> CovarianceModel {
        let mut m = self.base;
        let (klo, _, _) = m.family.kappa_domain();
        for (slot, &x) in self.slots.iter().zip(u) {
            match slot {
                Slot::SigmaSq => m.sigma_sq = x.exp(),
                Slot::Psi if m.family == Family::Multiquadric => m.psi = logistic(x),
                Slot::Psi => m.psi = x.exp(),
                Slot::Kappa => m.kappa = klo.max(0.0) + x.exp(),
                Slot::Kappa2 => m.kappa2 = x.exp(),
                Slot::Nugget => m.nugget = x.exp(),
            }
        }
        m
    }

    fn encode(&self, m: &CovarianceModel) -> Vec<f64> {
        let (klo, _, _) = m.family.kappa_domain();
        let u: Vec<f64> = self
            .slots
            .iter()
            .map(|slot| match slot {
                Slot::SigmaSq => m.sigma_sq.ln(),
                Slot::Psi if m.family == Family::Multiquadric => (m.psi / (1.0 - m.psi)).ln(),
                Slot::Psi => m.psi.ln(),
                Slot::Kappa => (m.kappa - klo.max(0.0)).ln(),
                Slot::Kappa2 => m.kappa2.ln(),
                Slot::Nugget => m.nugget.ln(),
            })
            .collect();
        self.clamp(u)
    }

    fn clamp(&self, mut u: Vec<f64>) -> Vec<f64> {
        for ((x, lo), hi) in u.iter_mut().zip(&self.lower).zip(&self.upper) {
            *x = if x.is_nan() { 0.5 * (lo + hi) } else { x.clamp(*lo, *hi) };
        }
        u
    }

    fn objective(&self, u: &[f64]) -> f64 {
        let m = self.model(u);
        let mut f = 0.0;
        for ((&h, &g), &n) in self.lags.iter().zip(&self.gamma).zip(&self.counts) {
            let gm = m.variogram_unchecked(h);
            let w = match self.weights {
                Weights::Equal => 1.0,
                Weights::Npairs => n,
                Weights::Cressie => n / (gm * gm).max(f64::MIN_POSITIVE),
            };
            f += w * (g - gm).powi(2);
        }
        if f.is_nan() {
            f64::INFINITY
        } else {
            f
        }
    }

    fn scale(&self) -> f64 {
        let m = self.base;
        self.lags
            .iter()
            .zip(&self.gamma)
            .zip(&self.counts)
            .map(|((_, &g), &n)| match self.weights {
                Weights::Equal => g * g,
                Weights::Npairs => n * g * g,
                Weights::Cressie => n,
            })
            .sum::<f64>()
            .max(m.sigma_sq * m.sigma_sq * f64::EPSILON)
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Fits `family` to a semivariogram (a covariance curve is converted through
/// `γ(h) = Γ(0) − Γ(h)`) by box-constrained Nelder–Mead over the free
/// parameters, restarted three times from perturbed copies of the best point.
pub fn fit_variogram(curve: &EmpiricalCurve, family: Family, opts: &FitOptions) -> Result<FitResult> {
    let (lags, gamma, counts) = variogram_points(curve)?;
    let sill = gamma.iter().map(|g| g.abs()).fold(0.0, f64::max);
    let max_lag = lags.iter().cloned().fold(0.0, f64::max);

    let mut base = opts.init.unwrap_or_else(|| default_init(family, sill, max_lag));
    base.family = family;
    if !family.uses_kappa() {
        base.kappa = 0.0;
    }
    if !opts.fix_nugget && base.nugget <= 0.0 {
        base.nugget = 0.01 * sill;
    }
    if gamma.iter().all(|&g| g == 0.0) {
        let model = CovarianceModel { sigma_sq: 0.0, nugget: 0.0, ..base };
        return Ok(FitResult { model, objective: 0.0, converged: true, iterations: 0 });
    }
    base.validate()?;

    let mut slots = vec![Slot::SigmaSq];
    if family.uses_psi() {
        slots.push(Slot::Psi);
    }
    if family.uses_kappa() && !opts.fix_kappa {
        slots.push(Slot::Kappa);
    }
    if family.uses_kappa2() && !opts.fix_kappa {
        slots.push(Slot::Kappa2);
    }
    if !opts.fix_nugget {
        slots.push(Slot::Nugget);
    }
    if gamma.len() < slots.len() {
        return Err(Error::Domain(format!(
            "{} populated bins cannot determine {} parameters",
            gamma.len(),
            slots.len()
        )));
    }
    let (klo, _, khi) = family.kappa_domain();
    let floor = (sill * 1e-12).max(f64::MIN_POSITIVE).ln();
    let (lower, upper): (Vec<f64>, Vec<f64>) = slots
        .iter()
        .map(|slot| match slot {
            Slot::SigmaSq => (floor, (sill * 1e3).ln()),
            Slot::Psi if family == Family::Multiquadric => (-30.0, 30.0),
            Slot::Psi => (1e-6f64.ln(), (100.0 * PI).ln()),
            Slot::Kappa => (1e-8f64.ln(), if khi.is_finite() { (khi - klo.max(0.0)).ln() } else { 100f64.ln() }),
            Slot::Kappa2 => (1e-8f64.ln(), 2f64.ln()),
            Slot::Nugget => (floor, (sill * 1e3).ln()),
        })
        .unzip();

    let problem = Problem {
        lags,
        gamma,
        counts,
        weights: opts.weights,
        base,
        slots,
        lower,
        upper,
    };
    let abs_tol = 1e-28 * problem.scale();

    let start = problem.encode(&base);
    let mut best = nelder_mead(&problem, start, abs_tol);
    let mut total_iter = best.iterations;
    let mut rng = Sampler::new(RESTART_SEED);
    for _ in 0..RESTARTS {
        let seed: Vec<f64> = best.point.iter().map(|x| x + (rng.uniform() - 0.5)).collect();
        let run = nelder_mead(&problem, problem.clamp(seed), abs_tol);
        total_iter += run.iterations;
        if run.value <= best.value {
            best = run;
        }
    }
    Ok(FitResult {
        model: problem.model(&best.point),
        objective: best.value,
        converged: best.converged,
        iterations: total_iter,
    })
}

fn variogram_points(curve: &EmpiricalCurve) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let pts: Vec<(f64, f64, u64)> = curve.populated().collect();
    let out: Vec<(f64, f64, f64)> = match curve.estimator {
        Estimator::Variogram => pts.into_iter().map(|(h, v, n)| (h, v, n as f64)).collect(),
        Estimator::Covariance => {
            let c0 = match pts.first() {
                Some(&(0.0, v, _)) => v,
                _ => return Err(Error::Domain("covariance curve lacks a zero-lag value".into())),
            };
            pts[1..].iter().map(|&(h, v, n)| (h, c0 - v, n as f64)).collect()
        }
    };
    if out.is_empty() {
        return Err(Error::Domain("curve has no populated bins".into()));
    }
    let mut lags = Vec::with_capacity(out.len());
    let mut gamma = Vec::with_capacity(out.len());
    let mut counts = Vec::with_capacity(out.len());
    for (h, g, n) in out {
        lags.push(h);
        gamma.push(g);
        counts.push(n);
    }
    Ok((lags, gamma, counts))
}

fn default_init(family: Family, sill: f64, max_lag: f64) -> CovarianceModel {
    let psi = if family == Family::Multiquadric { 0.5 } else { (max_lag / 3.0).max(1e-3) };
    CovarianceModel::new(family, sill.max(f64::MIN_POSITIVE), psi)
}

struct Run {
    point: Vec<f64>,
    value: f64,
    converged: bool,
    iterations: usize,
}

fn nelder_mead(p: &Problem, start: Vec<f64>, abs_tol: f64) -> Run {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.clone()];
    for i in 0..n {
        let mut v = start.clone();
        let step = 0.5 * (p.upper[i] - p.lower[i]).min(1.0);
        v[i] = if v[i] + step <= p.upper[i] { v[i] + step } else { v[i] - step };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| p.objective(v)).collect();

    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let (lo, hi) = (values[0], values[n]);
        let spread = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (hi - lo).abs() <= REL_TOL * lo.abs() + abs_tol || spread < 1e-13 {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            p.clamp(centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect())
        };
        let xr = along(1.0);
        let fr = p.objective(&xr);
        if fr < values[0] {
            let xe = along(2.0);
            let fe = p.objective(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let x = along(0.5);
                let f = p.objective(&x);
                (x, f)
            } else {
                let x = along(-0.5);
                let f = p.objective(&x);
                (x, f)
            };
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    let shrunk: Vec<f64> =
                        simplex[i].iter().zip(&simplex[0]).map(|(x, b)| b + 0.5 * (x - b)).collect();
                    values[i] = p.objective(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Run { point: simplex[best].clone(), value: values[best], converged, iterations }
}
