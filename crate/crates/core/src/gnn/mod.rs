//! The trainable re-ranking head.
//!
//! ```text
//! H_loc = GNN(X', A)          message-passing branch on rank-augmented features
//! H_ind = X  or  MLP(X)       individual branch
//! s     = φ([H_ind ‖ H_loc])  row-wise scorer
//! π     = sort(s)
//! ```
//!
//! Every stage has an explicit backward pass; gradients are returned as a
//! [`RerankModel`] of the same shape as the model.

mod aggregate;
mod checkpoint;
mod dense;
mod layers;
mod model;

pub use aggregate::{
    gcn_propagate, gcn_propagate_adjoint, mean_neighbors, mean_neighbors_adjoint, sum_neighbors, sum_neighbors_adjoint,
};
pub use dense::{Activation, DenseCache, DenseLayer, LEAKY_SLOPE};
pub use layers::{
    sample_negatives, GatLayer, GcnLayer, GinLayer, GnnLayer, LayerCache, LayerGraph, LayerKind, SageLayer, SignedLayer,
};
pub(crate) use model::model_rows;
pub use model::{sort_by_score, ForwardPass, IndividualMode, ModelConfig, QueryInput, RerankModel};

/// Named parameter blocks in a fixed declaration order.
pub trait Parameters {
    fn for_each(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64]));
    fn for_each_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64]));
}
