//! Curves represented by curvature as a function of tangent angle.

pub mod curve;
pub mod grid;
pub mod profile;
pub mod report;
pub mod support;

pub use curve::{discrete_curvature, hausdorff_to_disk, reconstruct_curve, PlanarCurve, Point};
pub use grid::AngleGrid;
pub use profile::{project_closure, CurvatureProfile, ProfileFile, DEFAULT_CLOSURE_TOL};
pub use report::{geometry_report, pseudo_median, wirtinger_slack, GeometryReport, InequalityCheck};
pub use support::{ellipse, from_support, support_fourier};
