//! Linearized L1 finite-difference solver for the two-dimensional nonlinear
//! time-fractional Schrödinger equation
//!
//! ```text
//! i D_t^α u + Δu + f(|u|²) u = g,   (x, y) ∈ (0, L)², 0 < t ≤ T,
//! u = 0 on the boundary,            u(·, 0) = u₀,
//! ```
//!
//! where `D_t^α` is the Caputo derivative of order `0 < α < 1`. Time is
//! discretized with the L1 formula on a uniform mesh, space with the
//! five-point Laplacian, and the nonlinearity is lagged one level so every
//! step is a single complex shifted-Laplacian solve.
//!
//! Module map:
//!
//! * [`grid`]: mesh parameters, complex grid functions, Δ_h and discrete norms.
//! * [`caputo`]: L1 weights, the complementary multipliers θₙ and the
//!   summation operator that inverts the L1 operator.
//! * [`linsolve`]: sine-transform and dense solvers for `(σI + Δ_h) U = b`.
//! * [`stepper`]: the time-marching scheme.
//! * [`experiments`]: convergence tables, grid-ratio study, two-mesh
//!   estimates and the initial-value stability experiment.
//! * [`cli`]: configuration parsing and CSV/SVG emission for the `tfse` binary.

pub mod caputo;
pub mod cli;
mod error;
pub mod experiments;
pub mod grid;
pub mod linsolve;
pub mod rates;
pub mod stepper;

pub use error::{Error, Result};
pub use num_complex::Complex64;
