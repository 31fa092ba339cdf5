//! Harmonic measure ("tunnel-vision" functions) on hyperbolic 3-space.
//!
//! The crate evaluates Poisson integrals of planar domain indicators in the
//! upper half-space model, searches for critical points of the resulting
//! harmonic functions, and provides the supporting Fuchsian-group, Green's
//! function and self-dual form machinery.
//!
//! Modules:
//! - [`hyperbolic`]: points, distances, Möbius isometries, discrete Laplace–Beltrami.
//! - [`domain`]: composable planar regions, including the dogbone.
//! - [`quadrature`]: adaptive Gauss–Kronrod integration with breakpoints.
//! - [`measure`]: Poisson kernel, harmonic measure and its gradient.
//! - [`tunnel`]: axis profiles, critical points, the dogbone experiment.
//! - [`groups`]: regular 4g-gons, side pairings, orbits and limit sets.
//! - [`green`]: Green's functions, Poincaré series, quantization.
//! - [`forms`]: self-dual 2-form norms and zero loci.

pub mod domain;
pub mod error;
pub mod forms;
pub mod green;
pub mod groups;
pub mod hyperbolic;
pub mod measure;
pub mod quadrature;
pub mod tunnel;

pub use num_complex::Complex64;

pub use domain::{DogboneSpec, PlanarDomain};
pub use error::{Error, Result};
pub use forms::{FormSample, FramePoint};
pub use green::{PointConfiguration, SeriesValue};
pub use groups::{GroupElement, PolygonData};
pub use hyperbolic::{BoundaryPoint, DiskPoint, H3Point, MobiusMap};
pub use measure::{Gradient, MeasureValue, QuadratureConfig};
pub use tunnel::{AxisProfile, Classification, CriticalPointReport, Verdict, VerdictStatus};
