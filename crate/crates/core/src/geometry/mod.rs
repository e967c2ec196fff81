//! Mesh representation, template generation, transforms, projection,
//! silhouettes and distance queries.

mod distance;
mod hemisphere;
pub mod io;
mod mesh;
mod silhouette;
mod transform;
mod view;

pub use distance::{closest_point_on_triangle, point_to_surface_distance, point_triangle_distance};
pub use hemisphere::generate_hemisphere;
pub use mesh::Mesh;
pub use silhouette::{default_alpha, extract_silhouette, projected_edge_bound, SilhouetteCurve};
pub use transform::{apply_similarity, euler_xyz, rot_x, rot_y, rot_z, SimilarityTransform};
pub use view::{project_vertices, ProjectedSet, View};
