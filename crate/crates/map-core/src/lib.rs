//! Composable volume-preserving maps on balls and fat tori.
//!
//! Maps are finite composition trees of explicit primitive nodes (see
//! [`nodes`]), evaluated pointwise and exactly invertible node by node.
//! Grids appear only when *measuring* norms and volume defects, never in
//! the representation of a map.

pub mod ambient;
pub mod error;
pub mod expr;
pub mod fields;
pub mod jacobian;
pub mod nodes;
pub mod norms;
pub mod registry;
pub mod smoothstep;

pub use ambient::{Ambient, CoordTopology, Point};
pub use error::{MapError, Result};
pub use expr::{Compose, MapExpr, MapNode};
pub use fields::FieldSpec;
pub use jacobian::{det_jacobian, fd_jacobian, jacobian, volume_defect, DEFAULT_FD_STEP};
pub use norms::{norm_c1_grid, norm_cr, GridSpec, NormEstimate};
pub use smoothstep::{Profile, SmoothStep};
