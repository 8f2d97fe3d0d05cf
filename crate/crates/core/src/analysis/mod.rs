//! Diagnostics built on the kernels and the sampler: Weyl counts, kernel
//! convergence, Fredholm determinants and Monte Carlo estimators.

pub mod convergence;
pub mod estimators;
pub mod fit;
pub mod fredholm;
pub mod quadrature;
pub mod region;
pub mod weyl;

pub use convergence::{chart_grid, epsilon_agreement, kernel_convergence, ConvergenceReport, ConvergenceRow};
pub use estimators::{
    empty_prob_mc, estimate_intensity, estimate_pcf, laplace_functional_mc, Estimate, IntensityBins, IntensityReport,
    PcfBin, PcfReport,
};
pub use fit::{fit_log_log, SlopeFit};
pub use fredholm::{correlation_fn, fredholm_det, gap_probability, manifold_fredholm_det, nystrom_det};
pub use quadrature::{QuadratureKind, QuadratureRule};
pub use region::Region;
pub use weyl::{weyl_check, weyl_leading_term, WeylReport, WeylRow};
