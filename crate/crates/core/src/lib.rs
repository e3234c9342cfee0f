//! Numerical laboratory for positive travelling wavefronts of the delayed
//! monostable reaction-diffusion equation
//!
//! ```text
//! u_t(t, x) = u_xx(t, x) - u(t, x) + g(u(t - h, x))
//! ```
//!
//! A front `u(t, x) = phi(x + c t)` rescaled by `eps = 1/c` solves the
//! second-order delay equation `eps^2 x'' - x' - x + g(x(t - h)) = 0` with
//! `x(-inf) = 0` and `x(+inf) = kappa`. The crate is split along the
//! pipeline:
//!
//! * [`model`]: birth functions and sampled certification of the standing
//!   hypotheses on `g` (persistence band, Schwarzian, delay stability).
//! * [`charroots`]: roots of the characteristic quasi-polynomials
//!   `z + 1 - p e^{-zh}` and `eps^2 z^2 - z - 1 + p e^{-zh}` with
//!   argument-principle counts.
//! * [`profiles`]: sampled profiles on uniform grids, weighted norms, tail fits
//!   and level alignment.
//! * [`heteroclinic`]: the `eps = 0` backbone connection and DDE utilities.
//! * [`wavefront`]: the integral fixed-point front solver and its
//!   certification.
//! * [`pdecheck`]: method-of-lines simulation used to cross-validate fronts.
//!
//! With the default `parallel` feature, batch work (root enumeration, probe
//! seeds, persistence batches, sweeps) is spread over a rayon pool; every
//! result is independent of the evaluation order.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charroots;
pub mod exec;
pub mod heteroclinic;
pub mod model;
pub mod pdecheck;
pub mod profiles;
pub mod wavefront;

pub use exec::Exec;
