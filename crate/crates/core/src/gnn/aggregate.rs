//! Neighbourhood aggregations over adjacency lists and their adjoints.
//!
//! Each `*_adjoint` computes `Aᵀ g` for the linear operator `A` of the
//! matching forward aggregation, so backward passes never assume the
//! adjacency is symmetric.

use crate::graph::Adjacency;
use crate::linalg::{axpy, Matrix};

fn gcn_coeff(adj: &Adjacency, i: usize, j: usize) -> f64 {
    let di = (adj.degree(i) + 1) as f64;
    let dj = (adj.degree(j) + 1) as f64;
    1.0 / libm::sqrt(di * dj)
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2} H`.
pub fn gcn_propagate(h: &Matrix, adj: &Adjacency) -> Matrix {
    let mut out = Matrix::zeros(h.rows(), h.cols());
    for i in 0..h.rows() {
        let row = out.row_mut(i);
        axpy(row, gcn_coeff(adj, i, i), h.row(i));
        for &j in adj.of(i) {
            axpy(row, gcn_coeff(adj, i, j as usize), h.row(j as usize));
        }
    }
    out
}

pub fn gcn_propagate_adjoint(g: &Matrix, adj: &Adjacency) -> Matrix {
    let mut out = Matrix::zeros(g.rows(), g.cols());
    for i in 0..g.rows() {
        axpy(out.row_mut(i), gcn_coeff(adj, i, i), g.row(i));
        for &j in adj.of(i) {
            axpy(out.row_mut(j as usize), gcn_coeff(adj, i, j as usize), g.row(i));
        }
    }
    out
}

/// Mean of neighbour rows; zero for isolated nodes.
pub fn mean_neighbors(h: &Matrix, adj: &Adjacency) -> Matrix {
    let mut out = Matrix::zeros(h.rows(), h.cols());
    for i in 0..h.rows() {
        let nbrs = adj.of(i);
        if nbrs.is_empty() {
            continue;
        }
        let w = 1.0 / nbrs.len() as f64;
        let row = out.row_mut(i);
        for &j in nbrs {
            axpy(row, w, h.row(j as usize));
        }
    }
    out
}

pub fn mean_neighbors_adjoint(g: &Matrix, adj: &Adjacency, n_out: usize) -> Matrix {
    let mut out = Matrix::zeros(n_out, g.cols());
    for i in 0..g.rows() {
        let nbrs = adj.of(i);
        if nbrs.is_empty() {
            continue;
        }
        let w = 1.0 / nbrs.len() as f64;
        for &j in nbrs {
            axpy(out.row_mut(j as usize), w, g.row(i));
        }
    }
    out
}

pub fn sum_neighbors(h: &Matrix, adj: &Adjacency) -> Matrix {
    let mut out = Matrix::zeros(h.rows(), h.cols());
    for i in 0..h.rows() {
        let row = out.row_mut(i);
        for &j in adj.of(i) {
            axpy(row, 1.0, h.row(j as usize));
        }
    }
    out
}

pub fn sum_neighbors_adjoint(g: &Matrix, adj: &Adjacency) -> Matrix {
    let mut out = Matrix::zeros(g.rows(), g.cols());
    for i in 0..g.rows() {
        for &j in adj.of(i) {
            axpy(out.row_mut(j as usize), 1.0, g.row(i));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;

    fn rand_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut s = seed;
        Matrix::from_fn(rows, cols, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    // <A h, g> == <h, Aᵀ g> for every operator
    #[test]
    fn adjoints_are_transposes() {
        let adj = Adjacency::from_edges(5, &[(0, 1), (1, 0), (1, 2), (3, 1), (4, 0), (0, 4)]);
        let h = rand_matrix(5, 3, 1);
        let g = rand_matrix(5, 3, 2);
        let pairs: [(Matrix, Matrix); 3] = [
            (gcn_propagate(&h, &adj), gcn_propagate_adjoint(&g, &adj)),
            (mean_neighbors(&h, &adj), mean_neighbors_adjoint(&g, &adj, 5)),
            (sum_neighbors(&h, &adj), sum_neighbors_adjoint(&g, &adj)),
        ];
        for (ah, atg) in pairs {
            let lhs = dot(ah.as_slice(), g.as_slice());
            let rhs = dot(h.as_slice(), atg.as_slice());
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn two_node_gcn_halves() {
        let adj = Adjacency::from_edges(2, &[(0, 1), (1, 0)]);
        let h = Matrix::from_vec(2, 1, alloc::vec![2.0, 6.0]).unwrap();
        let out = gcn_propagate(&h, &adj);
        assert!((out.get(0, 0) - 4.0).abs() < 1e-15);
        assert!((out.get(1, 0) - 4.0).abs() < 1e-15);
    }
}
