//! Weighted functionals on sampled fields and quadrature audits of the integral
//! identities behind the blow-up argument.

pub mod bump;
pub mod functionals;
pub mod grid;
pub mod identities;
pub mod suite;

pub use bump::{Bump, BumpKind, EnsembleSpec, ManufacturedField};
pub use functionals::{
    functional_x, functional_y, holder_gap, positivity_functional, unit_bump, PositivityReport,
    Weight,
};
pub use grid::{Grid, GridField};
pub use identities::{
    curl_weight_check, weighted_terms, CurlWeightReport, ElasticCoeffs, ElasticReport,
    IdentityReport, WeightedTerms,
};
pub use suite::{run_suite, CheckRow, Suite, SuiteReport};
