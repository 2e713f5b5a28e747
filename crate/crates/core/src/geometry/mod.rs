//! Lattices, domain maps, surface frames and quadrature over one periodic cell.

pub mod fd;
pub mod frame;
pub mod grid;
pub mod lattice;
pub mod map;
pub mod mapped;
pub mod spectral;

pub use frame::{build_frame, mean_curvature, SurfaceFrame};
pub use grid::{Grid, Operators};
pub use lattice::Lattice;
pub use map::{DomainMap, MapKind, SampledDisplacement, SurfaceJet};
pub use mapped::MappedGrid;
