//! Dense tensors and reverse-mode differentiation.
//!
//! Everything runs in 64-bit floating point. Accumulation order is fixed
//! (row-major, single pass), so a run is bit-reproducible given its inputs.

mod attention;
mod gradcheck;
mod graph;
pub mod layers;
mod params;
mod tensor;

pub use attention::{attention, multi_head_attention};
pub use gradcheck::{finite_difference_check, GradCheck, RELATIVE_ERROR_FLOOR};
pub use graph::{Gradients, Graph, Var, LAYER_NORM_EPSILON, LOG_EPSILON};
pub use params::{truncated_normal, ParamStore, INIT_STD};
pub use tensor::{Tensor, TensorError};

/// Row softmax on a plain tensor, outside any graph.
pub fn softmax_rows(t: &Tensor, mask: Option<&[bool]>) -> Result<Tensor, TensorError> {
    graph::softmax_matrix(t, mask)
}

/// Plain-value form of [`Graph::cross_entropy_rows`].
pub fn cross_entropy_rows(
    probs: &Tensor,
    target: &Tensor,
    row_mask: &[bool],
) -> Result<f64, TensorError> {
    let mut g = Graph::new();
    let p = g.constant(probs.clone());
    let l = g.cross_entropy_rows(p, target.clone(), row_mask)?;
    Ok(g.value(l).item())
}
