//! Embedded deformation graph: sparse nodes carrying affine transforms that
//! are blended onto mesh vertices.

mod graph;

pub use graph::{
    build_graph, deform_mesh, raw_binding, reinitialize, Binding, DeformationGraph, NodeParams, DEFAULT_NEIGHBORS,
    DEFAULT_NODES, PARAMS_PER_NODE,
};
