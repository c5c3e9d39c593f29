#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sghormer/autodiff/tensor.hpp"

namespace sghormer::ad {

// ---------------------------------------------------------------------------
// Linear algebra and elementwise arithmetic
// ---------------------------------------------------------------------------

// a[m×k] · b[k×n]. Float accumulation in ascending k, so results match a
// naive triple loop bit for bit.
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

enum class Elementwise { add, sub, mul };

// The smaller operand may broadcast along leading axes: its shape must equal
// the trailing dims of the other one (a scalar of one element always fits).
template <typename T>
BasicTensor<T> elementwise(const BasicTensor<T>& a, const BasicTensor<T>& b, Elementwise kind);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return elementwise(a, b, Elementwise::add);
}
template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return elementwise(a, b, Elementwise::sub);
}
template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return elementwise(a, b, Elementwise::mul);
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T factor);

template <typename T>
BasicTensor<T> add_scalar(const BasicTensor<T>& a, T value);

// value - a
template <typename T>
BasicTensor<T> rsub_scalar(T value, const BasicTensor<T>& a);

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& a);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& a);

// x[r×in] · w[in×out] + bias[out]
template <typename T>
BasicTensor<T> linear(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& bias);

// ---------------------------------------------------------------------------
// Spike threshold with an arctangent surrogate gradient
// ---------------------------------------------------------------------------

// S~(x) = atan(pi*alpha*x/2)/pi + 1/2
double surrogate_forward(double x, double alpha);
// dS~/dx = (alpha/2) / (1 + (pi*alpha*x/2)^2)
double surrogate_derivative(double x, double alpha);

// Forward: 1 where v >= v_th else 0. Backward: g * dS~/dx at (v - v_th).
template <typename T>
BasicTensor<T> spike_threshold(const BasicTensor<T>& v, T v_th, T surrogate_width);

// While alive, spike_threshold evaluates S~(v - v_th) instead of the step.
// Used by grad_check to build a differentiable numeric reference.
class SmoothSpikeGuard {
 public:
  SmoothSpikeGuard();
  ~SmoothSpikeGuard();
  SmoothSpikeGuard(const SmoothSpikeGuard&) = delete;
  SmoothSpikeGuard& operator=(const SmoothSpikeGuard&) = delete;

 private:
  bool previous_;
};
bool smooth_spikes_active();

// ---------------------------------------------------------------------------
// Reductions and reshaping (rank-2 unless stated)
// ---------------------------------------------------------------------------

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a);

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a);

template <typename T>
BasicTensor<T> concat_cols(const std::vector<BasicTensor<T>>& parts);

template <typename T>
BasicTensor<T> slice_cols(const BasicTensor<T>& a, std::size_t begin, std::size_t end);

template <typename T>
BasicTensor<T> concat_rows(const std::vector<BasicTensor<T>>& parts);

template <typename T>
BasicTensor<T> slice_rows(const BasicTensor<T>& a, std::size_t begin, std::size_t end);

// out[i] = a[index[i]]
template <typename T>
BasicTensor<T> gather_rows(const BasicTensor<T>& a, std::span<const std::uint32_t> index);

// out[index[i]] += a[i], out has `out_rows` rows.
template <typename T>
BasicTensor<T> scatter_add_rows(const BasicTensor<T>& a, std::span<const std::uint32_t> index,
                                std::size_t out_rows);

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

// Per-column normalization of x[r×c]. In training mode statistics come from
// the rows of x and the running estimates are updated with `momentum`;
// otherwise the running estimates are used.
template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                          const BasicTensor<T>& beta, std::span<T> running_mean,
                          std::span<T> running_var, bool training, T momentum, T eps);

// ---------------------------------------------------------------------------
// Block-diagonal (per-graph) products
// ---------------------------------------------------------------------------

// Contiguous row groups [offsets[g], offsets[g+1]). A square block matrix is
// stored flat: block g occupies n_g*n_g row-major entries after all earlier
// blocks.
struct BlockLayout {
  std::vector<std::size_t> offsets{0};

  std::size_t num_blocks() const { return offsets.size() - 1; }
  std::size_t size(std::size_t g) const { return offsets[g + 1] - offsets[g]; }
  std::size_t total_rows() const { return offsets.back(); }
  std::vector<std::size_t> flat_offsets() const;
  std::size_t flat_size() const;

  static BlockLayout single(std::size_t rows);
};

// Per block: A_g = a_g · b_gᵀ, returned flat.
template <typename T>
BasicTensor<T> block_matmul_nt(const BasicTensor<T>& a, const BasicTensor<T>& b,
                               const BlockLayout& layout);

// Per block: out_g = A_g · v_g where A is flat.
template <typename T>
BasicTensor<T> block_matmul(const BasicTensor<T>& flat, const BasicTensor<T>& v,
                            const BlockLayout& layout);

// Row softmax within each block of a flat block matrix.
template <typename T>
BasicTensor<T> block_softmax(const BasicTensor<T>& flat, const BlockLayout& layout);

// Mean of the rows of each block: [B×c].
template <typename T>
BasicTensor<T> segment_mean_rows(const BasicTensor<T>& a, const BlockLayout& layout);

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

template <typename T>
BasicTensor<T> l1_loss(const BasicTensor<T>& pred, std::span<const T> target);

template <typename T>
BasicTensor<T> cross_entropy(const BasicTensor<T>& logits, std::span<const std::int64_t> labels);

}  // namespace sghormer::ad
