//! Constructive piecewise-affine approximation of planar bi-Lipschitz
//! orientation-preserving homeomorphisms.
//!
//! The crate is organised as a pipeline:
//!
//! * [`geometry`] — points, matrices, triangulations, exact orientation
//!   predicates on snapped coordinates;
//! * [`maps`] — the map oracle interface plus built-in test maps;
//! * [`lebesgue`] — classification of grid squares by average differential
//!   deviation, and the diagonal interpolation on the accepted region;
//! * [`grid`] — square tilings of the leftover region, the adjusted map on
//!   the 1-skeleton (crosses, chords, segment interpolation);
//! * [`extension`] — bi-Lipschitz piecewise-affine extension of a boundary
//!   homeomorphism to a full square;
//! * [`metrics`] — evaluation, inversion, injectivity certification and
//!   error measurement for piecewise-affine maps;
//! * [`pipeline`] — end-to-end driver gluing everything, plus emitters for
//!   mesh/report/SVG artifacts.

pub mod extension;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod lebesgue;
pub mod maps;
pub mod metrics;
pub mod pipeline;

pub use geometry::{signed_area, Mat2, Point2, Polygon, RightPolygon, Square, Triangle, Triangulation};
pub use maps::{Domain, MapOracle};
pub use metrics::{check_injective, linf_errors, w1p_errors, PAMap};
pub use pipeline::{run, Params, Report, RunFailure, RunOutput};
