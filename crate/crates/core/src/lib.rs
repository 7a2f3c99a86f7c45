//! Edge-guided super-resolution of RGB-D point clouds.
//!
//! A sparse depth-camera cloud is densified, projected into the paired RGB
//! image, and its projected boundary (a k-nearest-neighbor concave hull) is
//! pulled onto Canny edges of the RGB image by moving the 3D boundary points.
//! The objective is a weighted sum of a Chamfer term, a Hausdorff term and a
//! smoothness term on the hull.
//!
//! ```no_run
//! use edgesr_core::{io, refine, densify::DensifyConfig, edges::CannyParams, refine::RefineConfig};
//!
//! # fn main() -> edgesr_core::Result<()> {
//! let sparse = io::read_ply("sparse.ply")?;
//! let image = io::read_pixmap("rgb.ppm")?;
//! let rig = io::read_calibration("calib.json")?;
//! let (dense, trace) = refine::superres(
//!     &sparse,
//!     &image,
//!     &rig,
//!     &DensifyConfig::default(),
//!     &RefineConfig::default(),
//!     &CannyParams::default(),
//! )?;
//! io::write_ply(&dense, "dense.ply", io::PlyFormat::BinaryLittleEndian(io::PlyScalar::F64))?;
//! # Ok(())
//! # }
//! ```

pub mod camera;
pub mod densify;
pub mod edges;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod hull;
pub mod io;
pub mod losses;
pub mod refine;
pub mod synth;

pub use camera::{CameraRig, Extrinsics, Intrinsics};
pub use error::{Error, Result};
pub use geometry::{EdgeMap, Point2, Point3, PointCloud3, PointSet2, SetRole, SpatialIndex};
pub use hull::HullPolygon;
pub use losses::{LossReport, LossWeights};
