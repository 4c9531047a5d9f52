//! Numeric back-end: finite differences, quadrature, divergence scans and
//! grid evaluation.

pub mod finite_diff;
pub mod grid;
pub mod linalg;
pub mod quadrature;
pub mod scan;

pub use finite_diff::{finite_diff, finite_diff_richardson, DEFAULT_STEP};
pub use grid::{format_sig17, grid_eval, GridAxis, GridError, GridRow, GridSpec, GridTable, Spacing};
pub use linalg::{rank, Matrix, RankInfo};
pub use quadrature::{
    integrate_1d, integrate_box, integrate_spherical, Axis, GaussLegendre, QuadratureError, QuadratureOptions, QuadratureResult,
    SphericalDomain,
};
pub use scan::{scan_singular_candidates, Candidate, ScanOptions};
