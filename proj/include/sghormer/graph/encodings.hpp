#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sghormer/graph/graph.hpp"

namespace sghormer::graph {

// Symmetric normalized Laplacian D^{-1/2} (D - A) D^{-1/2} of the undirected
// view (A = max(A, A^T), self-loops dropped). Isolated nodes get zero rows.
Eigen::MatrixXd normalized_laplacian(const Graph& g);

// Eigenvectors 2..k+1 of the normalized Laplacian, eigenvalue-ascending.
// Each column is unit-norm with its largest-magnitude entry positive
// (first such entry on ties). Throws ContractError unless k < num_nodes.
Eigen::MatrixXd lap_pe(const Graph& g, std::size_t k);

// Column j-1 holds diag(P^j) for P = D^{-1} A, j = 1..K.
Eigen::MatrixXd rwse(const Graph& g, std::size_t K);

// Both encodings in float, zero-padded when the graph is too small for k.
Encodings compute_encodings(const Graph& g, std::size_t k, std::size_t K);
std::vector<Encodings> compute_encodings(std::span<const Graph> graphs, std::size_t k, std::size_t K);

// batch() with freshly computed encodings.
GraphBatch batch_with_encodings(std::span<const Graph> graphs, std::size_t k, std::size_t K);

}  // namespace sghormer::graph
