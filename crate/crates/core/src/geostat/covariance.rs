//! Parametric covariance families on the sphere.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bessel::bessel_k;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "matern")]
    Matern,
    #[serde(rename = "exponential")]
    Exponential,
    #[serde(rename = "spherical")]
    Spherical,
    #[serde(rename = "powered.exponential")]
    PoweredExponential,
    #[serde(rename = "cauchy")]
    Cauchy,
    #[serde(rename = "gencauchy")]
    GenCauchy,
    #[serde(rename = "pure.nugget")]
    PureNugget,
    #[serde(rename = "askey")]
    Askey,
    #[serde(rename = "c2wendland")]
    C2Wendland,
    #[serde(rename = "c4wendland")]
    C4Wendland,
    #[serde(rename = "sinepower")]
    SinePower,
    #[serde(rename = "multiquadric")]
    Multiquadric,
}

impl Family {
    pub const ALL: [Family; 12] = [
        Family::Matern,
        Family::Exponential,
        Family::Spherical,
        Family::PoweredExponential,
        Family::Cauchy,
        Family::GenCauchy,
        Family::PureNugget,
        Family::Askey,
        Family::C2Wendland,
        Family::C4Wendland,
        Family::SinePower,
        Family::Multiquadric,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Matern => "matern",
            Family::Exponential => "exponential",
            Family::Spherical => "spherical",
            Family::PoweredExponential => "powered.exponential",
            Family::Cauchy => "cauchy",
            Family::GenCauchy => "gencauchy",
            Family::PureNugget => "pure.nugget",
            Family::Askey => "askey",
            Family::C2Wendland => "c2wendland",
            Family::C4Wendland => "c4wendland",
            Family::SinePower => "sinepower",
            Family::Multiquadric => "multiquadric",
        }
    }

    pub fn uses_kappa(self) -> bool {
        !matches!(
            self,
            Family::Exponential | Family::Spherical | Family::PureNugget
        )
    }

    pub fn uses_kappa2(self) -> bool {
        self == Family::GenCauchy
    }

    /// Whether the range `ψ` enters the correlation.
    pub fn uses_psi(self) -> bool {
        !matches!(self, Family::SinePower | Family::PureNugget)
    }

    /// Admissible interval for `κ` as `(lower, lower_inclusive, upper)`;
    /// the upper bound is always inclusive.
    pub fn kappa_domain(self) -> (f64, bool, f64) {
        match self {
            Family::Matern => (0.0, false, 20.0),
            Family::PoweredExponential | Family::SinePower => (0.0, false, 2.0),
            Family::Cauchy | Family::GenCauchy | Family::Multiquadric => {
                (0.0, false, f64::INFINITY)
            }
            Family::Askey => (2.0, true, f64::INFINITY),
            Family::C2Wendland => (4.0, true, f64::INFINITY),
            Family::C4Wendland => (6.0, true, f64::INFINITY),
            Family::Exponential | Family::Spherical | Family::PureNugget => {
                (f64::NEG_INFINITY, false, f64::INFINITY)
            }
        }
    }

    pub fn default_kappa(self) -> f64 {
        match self {
            Family::Matern => 0.5,
            Family::PoweredExponential => 1.0,
            Family::Cauchy | Family::GenCauchy | Family::Multiquadric => 1.0,
            Family::Askey => 3.0,
            Family::C2Wendland => 5.0,
            Family::C4Wendland => 7.0,
            Family::SinePower => 1.0,
            Family::Exponential | Family::Spherical | Family::PureNugget => 0.0,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Family::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| Error::Parameter(format!("unknown covariance family `{s}`")))
    }
}

/// `Γ(h) = σ²·ρ(h/ψ)` for `h > 0` and `Γ(0) = σ² + τ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceModel {
    pub family: Family,
    pub sigma_sq: f64,
    pub psi: f64,
    #[serde(default)]
    pub kappa: f64,
    /// Second shape, used by `gencauchy` only.
    #[serde(default = "one")]
    pub kappa2: f64,
    #[serde(default)]
    pub nugget: f64,
}

fn one() -> f64 {
    1.0
}

impl CovarianceModel {
    pub fn new(family: Family, sigma_sq: f64, psi: f64) -> Self {
        CovarianceModel {
            family,
            sigma_sq,
            psi,
            kappa: family.default_kappa(),
            kappa2: 1.0,
            nugget: 0.0,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_kappa2(mut self, kappa2: f64) -> Self {
        self.kappa2 = kappa2;
        self
    }

    pub fn with_nugget(mut self, nugget: f64) -> Self {
        self.nugget = nugget;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::Parameter(format!(
                "{what} outside the domain of the {} family",
                self.family
            )))
        };
        if !(self.sigma_sq >= 0.0 && self.sigma_sq.is_finite()) {
            return bad("sigma_sq");
        }
        if !(self.nugget >= 0.0 && self.nugget.is_finite()) {
            return bad("nugget");
        }
        if !(self.psi > 0.0 && self.psi.is_finite()) {
            return bad("psi");
        }
        if self.family == Family::Multiquadric && self.psi >= 1.0 {
            return bad("psi");
        }
        if self.family.uses_kappa() {
            let (lo, closed, hi) = self.family.kappa_domain();
            let k = self.kappa;
            let above = if closed { k >= lo } else { k > lo };
            if !(above && k <= hi && k.is_finite()) {
                return bad("kappa");
            }
        }
        if self.family.uses_kappa2() && !(self.kappa2 > 0.0 && self.kappa2 <= 2.0) {
            return bad("kappa2");
        }
        Ok(())
    }

    /// `ρ` at geodesic lag `h`, without validation.
    pub fn correlation(&self, h: f64) -> f64 {
        if h == 0.0 {
            return 1.0;
        }
        let t = h / self.psi;
        let k = self.kappa;
        match self.family {
            Family::Exponential => (-t).exp(),
            Family::Spherical => {
                if t < 1.0 {
                    1.0 - 1.5 * t + 0.5 * t * t * t
                } else {
                    0.0
                }
            }
            Family::PoweredExponential => (-t.powf(k)).exp(),
            Family::Cauchy => (1.0 + t * t).powf(-k),
            Family::GenCauchy => (1.0 + t.powf(self.kappa2)).powf(-k / self.kappa2),
            Family::PureNugget => 0.0,
            Family::Matern => matern(t, k),
            Family::Askey => (1.0 - t).max(0.0).powf(k),
            Family::C2Wendland => {
                if t >= 1.0 {
                    0.0
                } else {
                    (1.0 + k * t) * (1.0 - t).powf(k)
                }
            }
            Family::C4Wendland => {
                if t >= 1.0 {
                    0.0
                } else {
                    (1.0 + k * t + (k * k - 1.0) / 3.0 * t * t) * (1.0 - t).powf(k)
                }
            }
            Family::SinePower => 1.0 - (0.5 * h).sin().powf(k),
            Family::Multiquadric => {
                let d = self.psi;
                ((1.0 - d).powi(2) / (1.0 + d * d - 2.0 * d * h.cos())).powf(k)
            }
        }
    }

    /// `Γ(h)`, with the nugget added at `h = 0`.
    pub fn covariance(&self, h: f64) -> Result<f64> {
        self.check(h)?;
        Ok(self.covariance_unchecked(h))
    }

    /// `γ(h) = Γ(0) − Γ(h)`.
    pub fn variogram(&self, h: f64) -> Result<f64> {
        self.check(h)?;
        Ok(self.variogram_unchecked(h))
    }

    pub(crate) fn covariance_unchecked(&self, h: f64) -> f64 {
        let c = self.sigma_sq * self.correlation(h);
        if h == 0.0 {
            c + self.nugget
        } else {
            c
        }
    }

    pub(crate) fn variogram_unchecked(&self, h: f64) -> f64 {
        if h == 0.0 {
            0.0
        } else {
            self.nugget + self.sigma_sq * (1.0 - self.correlation(h))
        }
    }

    fn check(&self, h: f64) -> Result<()> {
        self.validate()?;
        if !(0.0..=PI).contains(&h) {
            return Err(Error::Domain(format!("lag {h} outside [0, π]")));
        }
        Ok(())
    }
}

/// `Γ(h)` for a model; see [`CovarianceModel::covariance`].
pub fn cov_model(h: f64, model: &CovarianceModel) -> Result<f64> {
    model.covariance(h)
}

fn matern(t: f64, nu: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let k = bessel_k(nu, t);
    if k == 0.0 {
        return 0.0;
    }
    if !k.is_finite() {
        // Only reachable for t far below machine resolution of 1 − ρ.
        return 1.0;
    }
    let log_rho = (1.0 - nu) * LN_2 - libm::lgamma(nu) + nu * t.ln() + k.ln();
    log_rho.exp().min(1.0)
}
