#pragma once

#include <cstdint>
#include <vector>

#include "sghormer/autodiff/ops.hpp"
#include "sghormer/autodiff/tensor.hpp"

namespace sghormer::blocks {

using ad::BlockLayout;
using ad::Tensor;

// Row-major bit matrix, each row padded to whole 64-bit words.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols);

  // Packs the rows of a binary rank-2 tensor. Throws ContractError otherwise.
  static BitMatrix from_rows(const Tensor& t);
  // Packs the columns, i.e. the rows of the transpose.
  static BitMatrix from_cols(const Tensor& t);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t words_per_row() const { return words_; }
  const std::uint64_t* row(std::size_t i) const { return bits_.data() + i * words_; }

  bool get(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j);

 private:
  std::size_t rows_ = 0, cols_ = 0, words_ = 0;
  std::vector<std::uint64_t> bits_;
};

// popcount(a_row AND b_row) over `words` words.
std::uint32_t and_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);

// Rows and columns of the output are both partitioned; (i, j) is computed
// only when row block and column block have the same index.
struct BlockMask {
  std::vector<std::size_t> row_offsets;
  std::vector<std::size_t> col_offsets;

  static BlockMask dense(std::size_t rows, std::size_t cols);
  static BlockMask square(const BlockLayout& layout);
};

// c = a[p×q] · b[q×r] on binary inputs as integer counts, zero outside the
// mask blocks. Returned row-major p×r.
std::vector<std::int32_t> binary_matmul(const Tensor& a, const Tensor& b, const BlockMask& mask);

// Per block g: scores_g = q_g · k_gᵀ via packed popcounts, returned flat like
// ad::block_matmul_nt. Backward treats the product as a float matmul so the
// surrogate path through q and k stays intact.
Tensor binary_block_scores(const Tensor& q, const Tensor& k, const BlockLayout& layout);

}  // namespace sghormer::blocks
