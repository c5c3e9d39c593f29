#include "sghormer/blocks/binary_matmul.hpp"

#include <bit>

#include "sghormer/errors.hpp"
#include "sghormer/neurons/spike_train.hpp"

namespace sghormer::blocks {

namespace {

void require_binary_input(const Tensor& t, const char* who) {
  if (t.rank() != 2) throw DimensionError(std::string(who) + ": expected a matrix, got " + ad::shape_str(t.shape()));
  if (!ad::smooth_spikes_active() && !neurons::is_binary(t)) {
    throw ContractError(std::string(who) + ": input is not binary");
  }
}

}  // namespace

BitMatrix::BitMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), words_((cols + 63) / 64), bits_(rows * words_, 0) {}

bool BitMatrix::get(std::size_t i, std::size_t j) const { return (row(i)[j / 64] >> (j % 64)) & 1u; }

void BitMatrix::set(std::size_t i, std::size_t j) { bits_[i * words_ + j / 64] |= std::uint64_t{1} << (j % 64); }

BitMatrix BitMatrix::from_rows(const Tensor& t) {
  require_binary_input(t, "BitMatrix::from_rows");
  BitMatrix m(t.rows(), t.cols());
  auto d = t.data();
  for (std::size_t i = 0; i < m.rows_; ++i)
    for (std::size_t j = 0; j < m.cols_; ++j)
      if (d[i * m.cols_ + j] != 0.0f) m.set(i, j);
  return m;
}

BitMatrix BitMatrix::from_cols(const Tensor& t) {
  require_binary_input(t, "BitMatrix::from_cols");
  BitMatrix m(t.cols(), t.rows());
  auto d = t.data();
  const std::size_t c = t.cols();
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < c; ++j)
      if (d[i * c + j] != 0.0f) m.set(j, i);
  return m;
}

std::uint32_t and_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  std::uint32_t n = 0;
  for (std::size_t w = 0; w < words; ++w) n += static_cast<std::uint32_t>(std::popcount(a[w] & b[w]));
  return n;
}

BlockMask BlockMask::dense(std::size_t rows, std::size_t cols) { return BlockMask{{0, rows}, {0, cols}}; }

BlockMask BlockMask::square(const BlockLayout& layout) { return BlockMask{layout.offsets, layout.offsets}; }

std::vector<std::int32_t> binary_matmul(const Tensor& a, const Tensor& b, const BlockMask& mask) {
  require_binary_input(a, "binary_matmul");
  require_binary_input(b, "binary_matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("binary_matmul: inner dimensions disagree for " + ad::shape_str(a.shape()) + " and " +
                         ad::shape_str(b.shape()));
  }
  if (mask.row_offsets.size() != mask.col_offsets.size() || mask.row_offsets.empty() ||
      mask.row_offsets.back() != a.rows() || mask.col_offsets.back() != b.cols()) {
    throw DimensionError("binary_matmul: block mask does not cover the output");
  }
  const BitMatrix pa = BitMatrix::from_rows(a);
  const BitMatrix pb = BitMatrix::from_cols(b);
  const std::size_t r = b.cols();
  std::vector<std::int32_t> out(a.rows() * r, 0);
  for (std::size_t g = 0; g + 1 < mask.row_offsets.size(); ++g)
    for (std::size_t i = mask.row_offsets[g]; i < mask.row_offsets[g + 1]; ++i)
      for (std::size_t j = mask.col_offsets[g]; j < mask.col_offsets[g + 1]; ++j)
        out[i * r + j] = static_cast<std::int32_t>(and_popcount(pa.row(i), pb.row(j), pa.words_per_row()));
  return out;
}

Tensor binary_block_scores(const Tensor& q, const Tensor& k, const BlockLayout& layout) {
  if (q.rank() != 2 || k.rank() != 2 || q.rows() != layout.total_rows() || k.rows() != layout.total_rows() ||
      q.cols() != k.cols()) {
    throw DimensionError("binary_block_scores: operands " + ad::shape_str(q.shape()) + " and " +
                         ad::shape_str(k.shape()) + " do not fit the block layout");
  }
  if (ad::smooth_spikes_active()) return ad::block_matmul_nt(q, k, layout);

  const BitMatrix pq = BitMatrix::from_rows(q);
  const BitMatrix pk = BitMatrix::from_rows(k);
  const auto flat = layout.flat_offsets();
  std::vector<float> out(layout.flat_size(), 0.0f);
  for (std::size_t g = 0; g < layout.num_blocks(); ++g) {
    const std::size_t o = layout.offsets[g], n = layout.size(g);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out[flat[g] + i * n + j] = static_cast<float>(and_popcount(pq.row(o + i), pk.row(o + j), pq.words_per_row()));
  }
  const bool rec = ad::should_record<float>({&q, &k});
  Tensor result({layout.flat_size()}, std::move(out), rec);
  if (rec) {
    const std::size_t c = q.cols();
    ad::Tape::current().record(result, [q, k, result, layout, flat, c]() {
      auto g = result.grad();
      auto qd = q.data();
      auto kd = k.data();
      float* gq = q.requires_grad() ? q.grad_buffer().data() : nullptr;
      float* gk = k.requires_grad() ? k.grad_buffer().data() : nullptr;
      for (std::size_t blk = 0; blk < layout.num_blocks(); ++blk) {
        const std::size_t o = layout.offsets[blk], n = layout.size(blk);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const float gij = g[flat[blk] + i * n + j];
            if (gij == 0.0f) continue;
            for (std::size_t p = 0; p < c; ++p) {
              if (gq) gq[(o + i) * c + p] += gij * kd[(o + j) * c + p];
              if (gk) gk[(o + j) * c + p] += gij * qd[(o + i) * c + p];
            }
          }
      }
    });
  }
  return result;
}

}  // namespace sghormer::blocks
