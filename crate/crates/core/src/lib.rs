//! Numerical laboratory for the exponential test-function blow-up method.
//!
//! The crate is organised around five layers:
//!
//! * [`weightfn`] evaluates the spherical exponential weight `F(x) = ∫ e^{ω·x} dω`,
//!   its derivative tensors (which are the ω-moments), ball integrals and growth envelopes.
//! * [`ode`] integrates the comparison ODE `X'' = a²X + C X² / (D e^{at} (t+R₀)^{(n-1)/2})`,
//!   detects finite-time blow-up, fits lifespan laws and audits the change of variables
//!   and the cutoff weak form used to bound the lifespan.
//! * [`fieldlab`] evaluates weighted functionals on grids and checks the multiplier
//!   identities for Euler and elastodynamics on manufactured smooth fields.
//! * [`hypersim`] runs finite-volume simulations of slab-symmetric Euler and vertical-field
//!   2D MHD and audits the functional ODE chain on live solutions.
//! * [`expcli`] loads experiment configs, orchestrates runs and writes CSV/JSON/SVG outputs.
//!
//! Data-parallel loops go through [`exec::Exec`]; with the `parallel` feature disabled
//! every loop runs sequentially and produces bit-identical results.

pub mod error;
pub mod exec;
pub mod expcli;
pub mod fieldlab;
pub mod hypersim;
pub mod ode;
pub mod weightfn;

pub use error::{Error, Result};
pub use exec::Exec;
