//! Covariance models, empirical dependence estimators and descriptive
//! functionals for data on the sphere.

pub mod bessel;
pub mod covariance;
pub mod empirical;
pub mod fit;
pub mod measures;
pub mod spectrum;

pub use bessel::bessel_k;
pub use covariance::{cov_model, CovarianceModel, Family};
pub use empirical::{
    empirical_covariance, empirical_curve, empirical_variogram, EmpiricalCurve, Estimator, PairOptions,
};
pub use fit::{fit_variogram, FitOptions, FitResult, Weights};
pub use measures::{
    angular_marginals, entropy, entropy_of, first_minkowski, q_statistic, qq_pairs, renyi_exponent,
    renyi_function, sturges_bins, AngularMarginals, MarginalBin, RenyiPoint,
};
pub use spectrum::{cov_from_power_spectrum, default_grid, legendre_series, Convention, PowerSpectrum, SpectrumCovariance};
