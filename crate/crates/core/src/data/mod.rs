//! Test-matrix generators and graph input.

pub mod graph;
pub mod synth;

pub use graph::{
    erdos_renyi, load_edge_list, parse_edge_list, triangle_counts, Graph, TriangleConfig,
    TriangleEstimate, TriangleMethod,
};
pub use synth::{
    haar_orthogonal, synth_matrix, synth_operator, SpectrumKind, SpectrumSpec, SynthMatrix,
    SynthOperator,
};
