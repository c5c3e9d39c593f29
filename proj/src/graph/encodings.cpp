#include "sghormer/graph/encodings.hpp"

#include <cmath>

#include "sghormer/errors.hpp"

namespace sghormer::graph {

namespace {

Eigen::MatrixXd symmetric_adjacency(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : g.edges) {
    if (e[0] == e[1]) continue;
    a(e[0], e[1]) = 1.0;
    a(e[1], e[0]) = 1.0;
  }
  return a;
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  const double peak = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) >= peak - 1e-9) {
      if (v(i) < 0) v = -v;
      return;
    }
  }
}

}  // namespace

Eigen::MatrixXd normalized_laplacian(const Graph& g) {
  const Eigen::MatrixXd a = symmetric_adjacency(g);
  const Eigen::VectorXd deg = a.rowwise().sum();
  Eigen::VectorXd inv_sqrt(deg.size());
  for (Eigen::Index i = 0; i < deg.size(); ++i) inv_sqrt(i) = deg(i) > 0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
  Eigen::MatrixXd lap = -a;
  lap.diagonal() += deg;
  return inv_sqrt.asDiagonal() * lap * inv_sqrt.asDiagonal();
}

Eigen::MatrixXd lap_pe(const Graph& g, std::size_t k) {
  if (k >= g.num_nodes) {
    throw ContractError("lap_pe: k=" + std::to_string(k) + " must be below num_nodes=" +
                        std::to_string(g.num_nodes));
  }
  const auto n = static_cast<Eigen::Index>(g.num_nodes);
  if (k == 0) return Eigen::MatrixXd(n, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(normalized_laplacian(g));
  if (solver.info() != Eigen::Success) throw NumericError("lap_pe: eigendecomposition failed");
  Eigen::MatrixXd out = solver.eigenvectors().middleCols(1, static_cast<Eigen::Index>(k));
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    out.col(c).normalize();
    fix_sign(out.col(c));
  }
  return out;
}

Eigen::MatrixXd rwse(const Graph& g, std::size_t K) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes);
  const Eigen::MatrixXd a = symmetric_adjacency(g);
  Eigen::MatrixXd p = a;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double deg = a.row(i).sum();
    if (deg > 0) p.row(i) /= deg;
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(K));
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t j = 0; j < K; ++j) {
    power = power * p;
    out.col(static_cast<Eigen::Index>(j)) = power.diagonal();
  }
  return out;
}

Encodings compute_encodings(const Graph& g, std::size_t k, std::size_t K) {
  Encodings enc;
  enc.num_nodes = g.num_nodes;
  enc.lap_dim = k;
  enc.rw_dim = K;
  enc.lap_pe.assign(g.num_nodes * k, 0.0f);
  enc.rwse.assign(g.num_nodes * K, 0.0f);
  if (g.num_nodes == 0) return enc;
  const std::size_t usable = std::min(k, g.num_nodes - 1);
  const Eigen::MatrixXd pe = lap_pe(g, usable);
  const Eigen::MatrixXd rw = rwse(g, K);
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    for (std::size_t c = 0; c < usable; ++c) {
      enc.lap_pe[i * k + c] = static_cast<float>(pe(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
    }
    for (std::size_t c = 0; c < K; ++c) {
      enc.rwse[i * K + c] = static_cast<float>(rw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
    }
  }
  return enc;
}

std::vector<Encodings> compute_encodings(std::span<const Graph> graphs, std::size_t k, std::size_t K) {
  std::vector<Encodings> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(compute_encodings(g, k, K));
  return out;
}

GraphBatch batch_with_encodings(std::span<const Graph> graphs, std::size_t k, std::size_t K) {
  const auto enc = compute_encodings(graphs, k, K);
  return batch(graphs, enc);
}

}  // namespace sghormer::graph
