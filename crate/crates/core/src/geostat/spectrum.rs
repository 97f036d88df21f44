//! Covariance from an angular power spectrum by Legendre summation.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convention {
    #[serde(rename = "C_l")]
    Cl,
    /// `D_l = l(l+1)C_l/(2π)`.
    #[serde(rename = "D_l")]
    Dl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectrum {
    pub ell: Vec<u32>,
    pub values: Vec<f64>,
    pub convention: Convention,
}

impl PowerSpectrum {
    pub fn new(ell: Vec<u32>, values: Vec<f64>, convention: Convention) -> Result<Self> {
        if ell.len() != values.len() {
            return Err(Error::Schema("multipoles and values differ in length".into()));
        }
        if ell.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("multipoles must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("spectrum values must be finite".into()));
        }
        Ok(PowerSpectrum { ell, values, convention })
    }

    /// Reads a two-column table whose header names the multipole column
    /// (`l` or `ell`) and the convention (`C_l`/`Cl` or `D_l`/`Dl`). Fields may
    /// be comma or whitespace separated, a leading `#` on the header is
    /// ignored, and columns past the second are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty spectrum file".into()))?;
        let head = fields(header.trim_start_matches('#'));
        let convention = match head.as_slice() {
            [l, v, ..] if matches!(l.to_ascii_lowercase().as_str(), "l" | "ell") => {
                let key: String = v
                    .chars()
                    .filter(|c| c.is_ascii_alphanumeric())
                    .collect::<String>()
                    .to_ascii_lowercase();
                if key.starts_with("cl") {
                    Convention::Cl
                } else if key.starts_with("dl") {
                    Convention::Dl
                } else {
                    return Err(Error::Parse(format!("unknown spectrum convention `{v}`")));
                }
            }
            _ => return Err(Error::Parse(format!("bad spectrum header `{header}`"))),
        };
        let mut ell = Vec::new();
        let mut values = Vec::new();
        for line in lines.filter(|l| !l.starts_with('#')) {
            let f = fields(line);
            if f.len() < 2 {
                return Err(Error::Parse(format!("short spectrum row `{line}`")));
            }
            let l: f64 = f[0].parse().map_err(|_| Error::Parse(format!("bad multipole `{}`", f[0])))?;
            if l < 0.0 || l.fract() != 0.0 || l > u32::MAX as f64 {
                return Err(Error::Parse(format!("bad multipole `{}`", f[0])));
            }
            let v: f64 = f[1].parse().map_err(|_| Error::Parse(format!("bad value `{}`", f[1])))?;
            ell.push(l as u32);
            values.push(v);
        }
        PowerSpectrum::new(ell, values, convention)
    }

    /// `C_0 ..= C_L` with `L = min(lMax, last multipole)`, plus notes.
    pub fn to_cl(&self, l_max: u32) -> Result<(Vec<f64>, Vec<String>)> {
        let mut notes = Vec::new();
        let last = *self.ell.last().ok_or_else(|| Error::Gap("empty spectrum".into()))?;
        let top = l_max.min(last);
        if l_max > last {
            notes.push(format!("lMax {l_max} exceeds the data; sum truncated at l = {last}"));
        }
        let mut cl = vec![0.0; top as usize + 1];
        let mut have = vec![false; top as usize + 1];
        for (&l, &v) in self.ell.iter().zip(&self.values) {
            if l > top {
                break;
            }
            cl[l as usize] = match self.convention {
                Convention::Cl => v,
                Convention::Dl if l == 0 => 0.0,
                Convention::Dl => 2.0 * PI * v / (l as f64 * (l as f64 + 1.0)),
            };
            have[l as usize] = true;
        }
        if self.convention == Convention::Dl && have[0] {
            notes.push("D_0 does not determine C_0; C_0 set to 0".into());
        }
        for (l, ok) in have.iter().enumerate() {
            if !ok {
                if l <= 1 {
                    notes.push(format!("C_{l} absent; set to 0"));
                } else {
                    return Err(Error::Gap(format!("multipole l = {l} is missing")));
                }
            }
        }
        Ok((cl, notes))
    }
}

fn fields(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCovariance {
    pub cos_theta: Vec<f64>,
    pub values: Vec<f64>,
    /// Highest multipole actually summed.
    pub l_max: u32,
    pub notes: Vec<String>,
}

impl SpectrumCovariance {
    /// CSV with header `cos_theta,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cos_theta", "value"])?;
        for (x, v) in self.cos_theta.iter().zip(&self.values) {
            w.write_record([x.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `n` equally spaced points from −1 to 1.
pub fn default_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `(1/4π)·Σ_l (2l+1)·C_l·P_l(x)` with `P_l` from the three-term recurrence.
pub fn legendre_series(cl: &[f64], x: f64) -> f64 {
    let mut sum = 0.0;
    let (mut p_prev, mut p) = (0.0, 1.0);
    for (l, &c) in cl.iter().enumerate() {
        if l > 0 {
            let lf = (l - 1) as f64;
            let next = ((2.0 * lf + 1.0) * x * p - lf * p_prev) / (lf + 1.0);
            p_prev = p;
            p = next;
        }
        sum += (2 * l + 1) as f64 * c * p;
    }
    sum / (4.0 * PI)
}

/// Covariance `Γ̂(cos Θ)` on `grid` from the spectrum truncated at `lMax`.
pub fn cov_from_power_spectrum(ps: &PowerSpectrum, l_max: u32, grid: &[f64]) -> Result<SpectrumCovariance> {
    if let Some(x) = grid.iter().find(|x| !(-1.0..=1.0).contains(*x)) {
        return Err(Error::Domain(format!("grid point {x} outside [-1, 1]")));
    }
    let (cl, notes) = ps.to_cl(l_max)?;
    let values = grid.iter().map(|&x| legendre_series(&cl, x)).collect();
    Ok(SpectrumCovariance {
        cos_theta: grid.to_vec(),
        values,
        l_max: cl.len() as u32 - 1,
        notes,
    })
}
