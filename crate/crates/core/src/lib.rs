//! Stitching of perspective depth maps into a high-resolution equirectangular
//! depth panorama.
//!
//! The pipeline registers each perspective depth map against a globally
//! consistent reference panorama with a low-degree value transform, then
//! blends the registered partitions in the Laplacian domain with a
//! multi-scale damped Jacobi solver. A synthetic box-room scene provides
//! analytic ground truth so every stage can be verified without neural
//! estimators or datasets.

pub mod blending;
pub mod config;
pub mod error;
pub mod grid;
pub mod manifest;
pub mod metrics;
pub mod partition;
pub mod pfm;
pub mod pipeline;
pub mod registration;
pub mod spherical;
pub mod synthetic;
pub mod view;

pub use error::{Error, Result};
pub use grid::EquirectGrid;
pub use partition::{Partition, PartitionGrid, PixelRect};
pub use spherical::{SphericalDirection, Vec3};
pub use view::PerspectiveView;
