//! Structured triangular meshes and Taylor-Hood (P2 displacement, P1
//! pressure) operators on the rectangle.

mod assembly;
pub mod element;
mod mesh;
mod output;

pub use assembly::{
    assemble_a, assemble_b, assemble_c, assemble_laplacian, assemble_loads, assemble_stabilization,
    element_geometry, stabilization_parameter, TaylorHoodSystem,
};
pub use mesh::{BoundaryEdge, ProblemKind, Side, TriMesh, DEFAULT_LOAD_FRACTION};
pub use output::{vertex_rows, write_fields_csv, write_vtk, ElementFields, FIELD_COLUMNS};
