#include "sghormer/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sghormer/errors.hpp"

namespace sghormer::ad {

namespace {

template <typename T>
void require_rank2(const BasicTensor<T>& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a rank-2 tensor, got " + shape_str(t.shape()));
  }
}

// c[m×n] += a[m×k] · b[k×n]; zero entries of a are skipped (spike inputs are sparse).
template <typename T>
void gemm_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T(0)) continue;
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
std::vector<T> transpose(std::span<const T> src, std::size_t rows, std::size_t cols) {
  std::vector<T> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = src[i * cols + j];
  return out;
}

template <typename T>
BasicTensor<T> make_output(Shape shape, std::vector<T> data, bool record) {
  return BasicTensor<T>(std::move(shape), std::move(data), record);
}

thread_local bool g_smooth_spikes = false;

}  // namespace

// ---------------------------------------------------------------------------

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree for " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<T> out(m * n, T(0));
  gemm_acc(a.data().data(), b.data().data(), out.data(), m, k, n);
  const bool rec = should_record<T>({&a, &b});
  auto result = make_output<T>({m, n}, std::move(out), rec);
  if (rec) {
    BasicTape<T>::current().record(result, [a, b, result, m, k, n]() mutable {
      auto g = result.grad();
      if (a.requires_grad()) {
        // ga += g · bᵀ
        auto bt = transpose<T>(b.data(), k, n);
        gemm_acc(g.data(), bt.data(), a.grad_buffer().data(), m, n, k);
      }
      if (b.requires_grad()) {
        // gb += aᵀ · g
        auto at = transpose<T>(a.data(), m, k);
        gemm_acc(at.data(), g.data(), b.grad_buffer().data(), k, m, n);
      }
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> elementwise(const BasicTensor<T>& a, const BasicTensor<T>& b, Elementwise kind) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  auto suffix_of = [](const Shape& small, const Shape& big) {
    if (small.size() > big.size()) return false;
    return std::equal(small.begin(), small.end(), big.end() - static_cast<std::ptrdiff_t>(small.size()));
  };
  Shape out_shape;
  if (sa == sb || (b.numel() == 1 && a.numel() >= 1) || suffix_of(sb, sa)) {
    out_shape = sa;
  } else if (a.numel() == 1 || suffix_of(sa, sb)) {
    out_shape = sb;
  } else {
    throw DimensionError("elementwise: shapes " + shape_str(sa) + " and " + shape_str(sb) +
                         " are not broadcastable");
  }
  const std::size_t n = numel_of(out_shape);
  const std::size_t na = a.numel(), nb = b.numel();
  auto ad = a.data();
  auto bd = b.data();
  std::vector<T> out(n);
  // Broadcast operands are indexed modulo their size.
  switch (kind) {
    case Elementwise::add:
      for (std::size_t i = 0; i < n; ++i) out[i] = ad[i % na] + bd[i % nb];
      break;
    case Elementwise::sub:
      for (std::size_t i = 0; i < n; ++i) out[i] = ad[i % na] - bd[i % nb];
      break;
    case Elementwise::mul:
      for (std::size_t i = 0; i < n; ++i) out[i] = ad[i % na] * bd[i % nb];
      break;
  }
  const bool rec = should_record<T>({&a, &b});
  auto result = make_output<T>(out_shape, std::move(out), rec);
  if (rec) {
    BasicTape<T>::current().record(result, [a, b, result, kind, n, na, nb]() mutable {
      auto g = result.grad();
      if (a.requires_grad()) {
        auto& ga = a.grad_buffer();
        if (kind == Elementwise::mul) {
          auto bd = b.data();
          for (std::size_t i = 0; i < n; ++i) ga[i % na] += g[i] * bd[i % nb];
        } else {
          for (std::size_t i = 0; i < n; ++i) ga[i % na] += g[i];
        }
      }
      if (b.requires_grad()) {
        auto& gb = b.grad_buffer();
        if (kind == Elementwise::mul) {
          auto ad = a.data();
          for (std::size_t i = 0; i < n; ++i) gb[i % nb] += g[i] * ad[i % na];
        } else if (kind == Elementwise::sub) {
          for (std::size_t i = 0; i < n; ++i) gb[i % nb] -= g[i];
        } else {
          for (std::size_t i = 0; i < n; ++i) gb[i % nb] += g[i];
        }
      }
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T factor) {
  std::vector<T> out(a.numel());
  auto ad = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * factor;
  const bool rec = should_record<T>({&a});
  auto result = make_output<T>(a.shape(), std::move(out), rec);
  if (rec) {
    BasicTape<T>::current().record(result, [a, result, factor]() mutable {
      auto g = result.grad();
      auto& ga = a.grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * factor;
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> add_scalar(const BasicTensor<T>& a, T value) {
  std::vector<T> out(a.numel());
  auto ad = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + value;
  const bool rec = should_record<T>({&a});
  auto result = make_output<T>(a.shape(), std::move(out), rec);
  if (rec) {
    BasicTape<T>::current().record(result, [a, result]() mutable {
      auto g = result.grad();
      auto& ga = a.grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> rsub_scalar(T value, const BasicTensor<T>& a) {
  std::vector<T> out(a.numel());
  auto ad = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = value - ad[i];
  const bool rec = should_record<T>({&a});
  auto result = make_output<T>(a.shape(), std::move(out), rec);
  if (rec) {
    BasicTape<T>::current().record(result, [a, result]() mutable {
      auto g = result.grad();
      auto& ga = a.grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] -= g[i];
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& a) {
  std::vector<T> out(a.numel());
  auto ad = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = T(1) / (T(1) + std::exp(-ad[i]));
  const bool rec = should_record<T>({&a});
  auto result = make_output<T>(a.shape(), std::move(out), rec);
  if (rec) {
    BasicTape<T>::current().record(result, [a, result]() mutable {
      auto g = result.grad();
      auto y = result.data();
      auto& ga = a.grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * y[i] * (T(1) - y[i]);
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& a) {
  std::vector<T> out(a.numel());
  auto ad = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] > T(0) ? ad[i] : T(0);
  const bool rec = should_record<T>({&a});
  auto result = make_output<T>(a.shape(), std::move(out), rec);
  if (rec) {
    BasicTape<T>::current().record(result, [a, result]() mutable {
      auto g = result.grad();
      auto ad = a.data();
      auto& ga = a.grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i)
        if (ad[i] > T(0)) ga[i] += g[i];
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> linear(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& bias) {
  return add(matmul(x, w), bias);
}

// ---------------------------------------------------------------------------

double surrogate_forward(double x, double alpha) {
  return std::atan(std::numbers::pi * alpha * x / 2.0) / std::numbers::pi + 0.5;
}

double surrogate_derivative(double x, double alpha) {
  const double u = std::numbers::pi * alpha * x / 2.0;
  return (alpha / 2.0) / (1.0 + u * u);
}

SmoothSpikeGuard::SmoothSpikeGuard() : previous_(g_smooth_spikes) { g_smooth_spikes = true; }
SmoothSpikeGuard::~SmoothSpikeGuard() { g_smooth_spikes = previous_; }
bool smooth_spikes_active() { return g_smooth_spikes; }

template <typename T>
BasicTensor<T> spike_threshold(const BasicTensor<T>& v, T v_th, T surrogate_width) {
  if (!(surrogate_width > T(0))) {
    throw ContractError("spike_threshold: surrogate width must be positive");
  }
  std::vector<T> out(v.numel());
  auto vd = v.data();
  if (g_smooth_spikes) {
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = static_cast<T>(surrogate_forward(static_cast<double>(vd[i] - v_th), surrogate_width));
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = vd[i] >= v_th ? T(1) : T(0);
  }
  const bool rec = should_record<T>({&v});
  auto result = make_output<T>(v.shape(), std::move(out), rec);
  if (rec) {
    BasicTape<T>::current().record(result, [v, result, v_th, surrogate_width]() mutable {
      auto g = result.grad();
      auto vd = v.data();
      auto& gv = v.grad_buffer();
      for (std::size_t i = 0; i < gv.size(); ++i) {
        if (g[i] == T(0)) continue;
        gv[i] += g[i] * static_cast<T>(surrogate_derivative(static_cast<double>(vd[i] - v_th),
                                                            surrogate_width));
      }
    });
  }
  return result;
}

// ---------------------------------------------------------------------------

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a) {
  double acc = 0.0;
  for (T x : a.data()) acc += static_cast<double>(x);
  const bool rec = should_record<T>({&a});
  auto result = make_output<T>({1}, {static_cast<T>(acc)}, rec);
  if (rec) {
    BasicTape<T>::current().record(result, [a, result]() mutable {
      const T g = result.grad()[0];
      auto& ga = a.grad_buffer();
      for (auto& x : ga) x += g;
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a) {
  if (a.numel() == 0) throw ContractError("mean of an empty tensor");
  return scale(sum(a), T(1) / static_cast<T>(a.numel()));
}

template <typename T>
BasicTensor<T> concat_cols(const std::vector<BasicTensor<T>>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const std::size_t rows = parts[0].rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank2(p, "concat_cols");
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row counts disagree (" + shape_str(parts[0].shape()) + " vs " +
                           shape_str(p.shape()) + ")");
    }
    total += p.cols();
  }
  std::vector<T> out(rows * total);
  std::size_t offset = 0;
  bool rec = false;
  for (const auto& p : parts) {
    auto pd = p.data();
    const std::size_t c = p.cols();
    for (std::size_t i = 0; i < rows; ++i)
      std::copy_n(pd.data() + i * c, c, out.data() + i * total + offset);
    offset += c;
    rec = rec || p.requires_grad();
  }
  rec = rec && grad_enabled();
  auto result = make_output<T>({rows, total}, std::move(out), rec);
  if (rec) {
    BasicTape<T>::current().record(result, [parts, result, rows, total]() mutable {
      auto g = result.grad();
      std::size_t offset = 0;
      for (auto& p : parts) {
        const std::size_t c = p.cols();
        if (p.requires_grad()) {
          auto& gp = p.grad_buffer();
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < c; ++j) gp[i * c + j] += g[i * total + offset + j];
        }
        offset += c;
      }
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> slice_cols(const BasicTensor<T>& a, std::size_t begin, std::size_t end) {
  require_rank2(a, "slice_cols");
  if (begin > end || end > a.cols()) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") outside " + shape_str(a.shape()));
  }
  const std::size_t rows = a.rows(), cols = a.cols(), w = end - begin;
  std::vector<T> out(rows * w);
  auto ad = a.data();
  for (std::size_t i = 0; i < rows; ++i) std::copy_n(ad.data() + i * cols + begin, w, out.data() + i * w);
  const bool rec = should_record<T>({&a});
  auto result = make_output<T>({rows, w}, std::move(out), rec);
  if (rec) {
    BasicTape<T>::current().record(result, [a, result, rows, cols, begin, w]() mutable {
      auto g = result.grad();
      auto& ga = a.grad_buffer();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < w; ++j) ga[i * cols + begin + j] += g[i * w + j];
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> concat_rows(const std::vector<BasicTensor<T>>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  bool rec = false;
  for (const auto& p : parts) {
    require_rank2(p, "concat_rows");
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column counts disagree (" + shape_str(parts[0].shape()) +
                           " vs " + shape_str(p.shape()) + ")");
    }
    rows += p.rows();
    rec = rec || p.requires_grad();
  }
  std::vector<T> out;
  out.reserve(rows * cols);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  rec = rec && grad_enabled();
  auto result = make_output<T>({rows, cols}, std::move(out), rec);
  if (rec) {
    BasicTape<T>::current().record(result, [parts, result]() mutable {
      auto g = result.grad();
      std::size_t offset = 0;
      for (auto& p : parts) {
        const std::size_t n = p.numel();
        if (p.requires_grad()) {
          auto& gp = p.grad_buffer();
          for (std::size_t i = 0; i < n; ++i) gp[i] += g[offset + i];
        }
        offset += n;
      }
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> slice_rows(const BasicTensor<T>& a, std::size_t begin, std::size_t end) {
  require_rank2(a, "slice_rows");
  if (begin > end || end > a.rows()) {
    throw DimensionError("slice_rows: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") outside " + shape_str(a.shape()));
  }
  const std::size_t cols = a.cols();
  auto ad = a.data();
  std::vector<T> out(ad.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                     ad.begin() + static_cast<std::ptrdiff_t>(end * cols));
  const bool rec = should_record<T>({&a});
  auto result = make_output<T>({end - begin, cols}, std::move(out), rec);
  if (rec) {
    BasicTape<T>::current().record(result, [a, result, begin, cols]() mutable {
      auto g = result.grad();
      auto& ga = a.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[begin * cols + i] += g[i];
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> gather_rows(const BasicTensor<T>& a, std::span<const std::uint32_t> index) {
  require_rank2(a, "gather_rows");
  const std::size_t cols = a.cols();
  std::vector<T> out(index.size() * cols);
  auto ad = a.data();
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= a.rows()) throw DimensionError("gather_rows: index out of range");
    std::copy_n(ad.data() + index[i] * cols, cols, out.data() + i * cols);
  }
  const bool rec = should_record<T>({&a});
  auto result = make_output<T>({index.size(), cols}, std::move(out), rec);
  if (rec) {
    std::vector<std::uint32_t> idx(index.begin(), index.end());
    BasicTape<T>::current().record(result, [a, result, idx = std::move(idx), cols]() mutable {
      auto g = result.grad();
      auto& ga = a.grad_buffer();
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < cols; ++j) ga[idx[i] * cols + j] += g[i * cols + j];
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> scatter_add_rows(const BasicTensor<T>& a, std::span<const std::uint32_t> index,
                                std::size_t out_rows) {
  require_rank2(a, "scatter_add_rows");
  if (index.size() != a.rows()) {
    throw DimensionError("scatter_add_rows: " + std::to_string(index.size()) + " indices for " +
                         shape_str(a.shape()));
  }
  const std::size_t cols = a.cols();
  std::vector<T> out(out_rows * cols, T(0));
  auto ad = a.data();
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= out_rows) throw DimensionError("scatter_add_rows: index out of range");
    T* dst = out.data() + index[i] * cols;
    const T* src = ad.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) dst[j] += src[j];
  }
  const bool rec = should_record<T>({&a});
  auto result = make_output<T>({out_rows, cols}, std::move(out), rec);
  if (rec) {
    std::vector<std::uint32_t> idx(index.begin(), index.end());
    BasicTape<T>::current().record(result, [a, result, idx = std::move(idx), cols]() mutable {
      auto g = result.grad();
      auto& ga = a.grad_buffer();
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < cols; ++j) ga[i * cols + j] += g[idx[i] * cols + j];
    });
  }
  return result;
}

// ---------------------------------------------------------------------------

template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                          const BasicTensor<T>& beta, std::span<T> running_mean,
                          std::span<T> running_var, bool training, T momentum, T eps) {
  require_rank2(x, "batch_norm");
  const std::size_t r = x.rows(), c = x.cols();
  if (gamma.numel() != c || beta.numel() != c || running_mean.size() != c || running_var.size() != c) {
    throw DimensionError("batch_norm: parameter width does not match input " + shape_str(x.shape()));
  }
  auto xd = x.data();
  std::vector<T> mu(c), inv_std(c);
  if (training) {
    if (r == 0) throw ContractError("batch_norm: empty batch in training mode");
    std::vector<double> s(c, 0.0), ss(c, 0.0);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) s[j] += static_cast<double>(xd[i * c + j]);
    for (std::size_t j = 0; j < c; ++j) s[j] /= static_cast<double>(r);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const double d = static_cast<double>(xd[i * c + j]) - s[j];
        ss[j] += d * d;
      }
    for (std::size_t j = 0; j < c; ++j) {
      const double var = ss[j] / static_cast<double>(r);
      mu[j] = static_cast<T>(s[j]);
      inv_std[j] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
      const double unbiased = r > 1 ? ss[j] / static_cast<double>(r - 1) : var;
      running_mean[j] = static_cast<T>((1.0 - momentum) * running_mean[j] + momentum * s[j]);
      running_var[j] = static_cast<T>((1.0 - momentum) * running_var[j] + momentum * unbiased);
    }
  } else {
    for (std::size_t j = 0; j < c; ++j) {
      mu[j] = running_mean[j];
      inv_std[j] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var[j]) + eps));
    }
  }
  auto gd = gamma.data();
  auto bd = beta.data();
  std::vector<T> xhat(r * c), out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const std::size_t k = i * c + j;
      xhat[k] = (xd[k] - mu[j]) * inv_std[j];
      out[k] = gd[j] * xhat[k] + bd[j];
    }
  const bool rec = should_record<T>({&x, &gamma, &beta});
  auto result = make_output<T>({r, c}, std::move(out), rec);
  if (rec) {
    BasicTape<T>::current().record(
        result, [x, gamma, beta, result, xhat = std::move(xhat), inv_std, training, r, c]() mutable {
          auto g = result.grad();
          if (gamma.requires_grad() || beta.requires_grad()) {
            std::vector<double> dg(c, 0.0), db(c, 0.0);
            for (std::size_t i = 0; i < r; ++i)
              for (std::size_t j = 0; j < c; ++j) {
                dg[j] += static_cast<double>(g[i * c + j]) * xhat[i * c + j];
                db[j] += g[i * c + j];
              }
            if (gamma.requires_grad()) {
              auto& gg = gamma.grad_buffer();
              for (std::size_t j = 0; j < c; ++j) gg[j] += static_cast<T>(dg[j]);
            }
            if (beta.requires_grad()) {
              auto& gb = beta.grad_buffer();
              for (std::size_t j = 0; j < c; ++j) gb[j] += static_cast<T>(db[j]);
            }
          }
          if (!x.requires_grad()) return;
          auto& gx = x.grad_buffer();
          auto gam = gamma.data();
          if (!training) {
            for (std::size_t i = 0; i < r; ++i)
              for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[i * c + j] * gam[j] * inv_std[j];
            return;
          }
          // dx = inv_std/r * (r*dxhat - sum(dxhat) - xhat*sum(dxhat*xhat))
          std::vector<double> s1(c, 0.0), s2(c, 0.0);
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
              const double dxh = static_cast<double>(g[i * c + j]) * gam[j];
              s1[j] += dxh;
              s2[j] += dxh * xhat[i * c + j];
            }
          const double rn = static_cast<double>(r);
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
              const double dxh = static_cast<double>(g[i * c + j]) * gam[j];
              const double v = (rn * dxh - s1[j] - xhat[i * c + j] * s2[j]) * inv_std[j] / rn;
              gx[i * c + j] += static_cast<T>(v);
            }
        });
  }
  return result;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> BlockLayout::flat_offsets() const {
  std::vector<std::size_t> flat(offsets.size(), 0);
  for (std::size_t g = 0; g + 1 < offsets.size(); ++g) flat[g + 1] = flat[g] + size(g) * size(g);
  return flat;
}

std::size_t BlockLayout::flat_size() const {
  std::size_t total = 0;
  for (std::size_t g = 0; g + 1 < offsets.size(); ++g) total += size(g) * size(g);
  return total;
}

BlockLayout BlockLayout::single(std::size_t rows) { return BlockLayout{{0, rows}}; }

template <typename T>
BasicTensor<T> block_matmul_nt(const BasicTensor<T>& a, const BasicTensor<T>& b, const BlockLayout& layout) {
  require_rank2(a, "block_matmul_nt");
  require_rank2(b, "block_matmul_nt");
  if (a.rows() != layout.total_rows() || b.rows() != layout.total_rows() || a.cols() != b.cols()) {
    throw DimensionError("block_matmul_nt: operands " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " do not fit the block layout");
  }
  const std::size_t c = a.cols();
  const auto flat = layout.flat_offsets();
  std::vector<T> out(layout.flat_size(), T(0));
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t g = 0; g < layout.num_blocks(); ++g) {
    const std::size_t o = layout.offsets[g], n = layout.size(g);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        T acc = T(0);
        for (std::size_t p = 0; p < c; ++p) acc += ad[(o + i) * c + p] * bd[(o + j) * c + p];
        out[flat[g] + i * n + j] = acc;
      }
  }
  const bool rec = should_record<T>({&a, &b});
  auto result = make_output<T>({layout.flat_size()}, std::move(out), rec);
  if (rec) {
    BasicTape<T>::current().record(result, [a, b, result, layout, flat, c]() mutable {
      auto g = result.grad();
      auto ad = a.data();
      auto bd = b.data();
      T* ga = a.requires_grad() ? a.grad_buffer().data() : nullptr;
      T* gb = b.requires_grad() ? b.grad_buffer().data() : nullptr;
      for (std::size_t blk = 0; blk < layout.num_blocks(); ++blk) {
        const std::size_t o = layout.offsets[blk], n = layout.size(blk);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const T gij = g[flat[blk] + i * n + j];
            if (gij == T(0)) continue;
            for (std::size_t p = 0; p < c; ++p) {
              if (ga) ga[(o + i) * c + p] += gij * bd[(o + j) * c + p];
              if (gb) gb[(o + j) * c + p] += gij * ad[(o + i) * c + p];
            }
          }
      }
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> block_matmul(const BasicTensor<T>& flat_a, const BasicTensor<T>& v, const BlockLayout& layout) {
  require_rank2(v, "block_matmul");
  if (flat_a.numel() != layout.flat_size() || v.rows() != layout.total_rows()) {
    throw DimensionError("block_matmul: operands " + shape_str(flat_a.shape()) + " and " +
                         shape_str(v.shape()) + " do not fit the block layout");
  }
  const std::size_t c = v.cols();
  const auto flat = layout.flat_offsets();
  std::vector<T> out(v.rows() * c, T(0));
  for (std::size_t g = 0; g < layout.num_blocks(); ++g) {
    const std::size_t o = layout.offsets[g], n = layout.size(g);
    gemm_acc(flat_a.data().data() + flat[g], v.data().data() + o * c, out.data() + o * c, n, n, c);
  }
  const bool rec = should_record<T>({&flat_a, &v});
  auto result = make_output<T>({v.rows(), c}, std::move(out), rec);
  if (rec) {
    BasicTape<T>::current().record(result, [flat_a, v, result, layout, flat, c]() mutable {
      auto g = result.grad();
      auto ad = flat_a.data();
      auto vd = v.data();
      T* ga = flat_a.requires_grad() ? flat_a.grad_buffer().data() : nullptr;
      T* gv = v.requires_grad() ? v.grad_buffer().data() : nullptr;
      for (std::size_t blk = 0; blk < layout.num_blocks(); ++blk) {
        const std::size_t o = layout.offsets[blk], n = layout.size(blk);
        for (std::size_t i = 0; i < n; ++i) {
          const T* grow = g.data() + (o + i) * c;
          for (std::size_t j = 0; j < n; ++j) {
            const T* vrow = vd.data() + (o + j) * c;
            if (ga) {
              T acc = T(0);
              for (std::size_t p = 0; p < c; ++p) acc += grow[p] * vrow[p];
              ga[flat[blk] + i * n + j] += acc;
            }
            if (gv) {
              const T aij = ad[flat[blk] + i * n + j];
              if (aij == T(0)) continue;
              T* gvrow = gv + (o + j) * c;
              for (std::size_t p = 0; p < c; ++p) gvrow[p] += aij * grow[p];
            }
          }
        }
      }
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> block_softmax(const BasicTensor<T>& flat_x, const BlockLayout& layout) {
  if (flat_x.numel() != layout.flat_size()) {
    throw DimensionError("block_softmax: " + shape_str(flat_x.shape()) + " does not fit the block layout");
  }
  const auto flat = layout.flat_offsets();
  auto xd = flat_x.data();
  std::vector<T> out(xd.size());
  for (std::size_t g = 0; g < layout.num_blocks(); ++g) {
    const std::size_t n = layout.size(g);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t row = flat[g] + i * n;
      T mx = xd[row];
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, xd[row + j]);
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        out[row + j] = std::exp(xd[row + j] - mx);
        z += out[row + j];
      }
      for (std::size_t j = 0; j < n; ++j) out[row + j] = static_cast<T>(out[row + j] / z);
    }
  }
  const bool rec = should_record<T>({&flat_x});
  auto result = make_output<T>(flat_x.shape(), std::move(out), rec);
  if (rec) {
    BasicTape<T>::current().record(result, [flat_x, result, layout, flat]() mutable {
      auto g = result.grad();
      auto y = result.data();
      auto& gx = flat_x.grad_buffer();
      for (std::size_t blk = 0; blk < layout.num_blocks(); ++blk) {
        const std::size_t n = layout.size(blk);
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t row = flat[blk] + i * n;
          double dot = 0.0;
          for (std::size_t j = 0; j < n; ++j) dot += static_cast<double>(g[row + j]) * y[row + j];
          for (std::size_t j = 0; j < n; ++j)
            gx[row + j] += static_cast<T>(y[row + j] * (g[row + j] - dot));
        }
      }
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> segment_mean_rows(const BasicTensor<T>& a, const BlockLayout& layout) {
  require_rank2(a, "segment_mean_rows");
  if (a.rows() != layout.total_rows()) {
    throw DimensionError("segment_mean_rows: " + shape_str(a.shape()) + " does not fit the block layout");
  }
  const std::size_t c = a.cols(), nb = layout.num_blocks();
  std::vector<T> out(nb * c, T(0));
  auto ad = a.data();
  for (std::size_t g = 0; g < nb; ++g) {
    const std::size_t n = layout.size(g);
    if (n == 0) continue;
    for (std::size_t j = 0; j < c; ++j) {
      double acc = 0.0;
      for (std::size_t i = layout.offsets[g]; i < layout.offsets[g + 1]; ++i) acc += ad[i * c + j];
      out[g * c + j] = static_cast<T>(acc / static_cast<double>(n));
    }
  }
  const bool rec = should_record<T>({&a});
  auto result = make_output<T>({nb, c}, std::move(out), rec);
  if (rec) {
    BasicTape<T>::current().record(result, [a, result, layout, c]() mutable {
      auto g = result.grad();
      auto& ga = a.grad_buffer();
      for (std::size_t blk = 0; blk < layout.num_blocks(); ++blk) {
        const std::size_t n = layout.size(blk);
        if (n == 0) continue;
        const T inv = T(1) / static_cast<T>(n);
        for (std::size_t i = layout.offsets[blk]; i < layout.offsets[blk + 1]; ++i)
          for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[blk * c + j] * inv;
      }
    });
  }
  return result;
}

// ---------------------------------------------------------------------------

template <typename T>
BasicTensor<T> l1_loss(const BasicTensor<T>& pred, std::span<const T> target) {
  if (pred.numel() != target.size() || target.empty()) {
    throw DimensionError("l1_loss: prediction " + shape_str(pred.shape()) + " vs " +
                         std::to_string(target.size()) + " targets");
  }
  auto pd = pred.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) acc += std::abs(static_cast<double>(pd[i]) - target[i]);
  const double n = static_cast<double>(target.size());
  const bool rec = should_record<T>({&pred});
  auto result = make_output<T>({1}, {static_cast<T>(acc / n)}, rec);
  if (rec) {
    std::vector<T> tgt(target.begin(), target.end());
    BasicTape<T>::current().record(result, [pred, result, tgt = std::move(tgt), n]() mutable {
      const T g = result.grad()[0] / static_cast<T>(n);
      auto pd = pred.data();
      auto& gp = pred.grad_buffer();
      for (std::size_t i = 0; i < tgt.size(); ++i) {
        if (pd[i] > tgt[i]) gp[i] += g;
        else if (pd[i] < tgt[i]) gp[i] -= g;
      }
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> cross_entropy(const BasicTensor<T>& logits, std::span<const std::int64_t> labels) {
  require_rank2(logits, "cross_entropy");
  const std::size_t r = logits.rows(), c = logits.cols();
  if (labels.size() != r || r == 0) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                         shape_str(logits.shape()));
  }
  auto ld = logits.data();
  std::vector<T> prob(r * c);
  double loss = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
      throw DimensionError("cross_entropy: label " + std::to_string(labels[i]) + " outside [0," +
                           std::to_string(c) + ")");
    }
    const T* row = ld.data() + i * c;
    T mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(static_cast<double>(row[j] - mx));
    for (std::size_t j = 0; j < c; ++j) prob[i * c + j] = static_cast<T>(std::exp(static_cast<double>(row[j] - mx)) / z);
    loss += std::log(z) - static_cast<double>(row[labels[i]] - mx);
  }
  const bool rec = should_record<T>({&logits});
  auto result = make_output<T>({1}, {static_cast<T>(loss / static_cast<double>(r))}, rec);
  if (rec) {
    std::vector<std::int64_t> lab(labels.begin(), labels.end());
    BasicTape<T>::current().record(result, [logits, result, prob = std::move(prob), lab = std::move(lab), r, c]() mutable {
      const T g = result.grad()[0] / static_cast<T>(r);
      auto& gl = logits.grad_buffer();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
          const T target = static_cast<std::size_t>(lab[i]) == j ? T(1) : T(0);
          gl[i * c + j] += g * (prob[i * c + j] - target);
        }
    });
  }
  return result;
}

// ---------------------------------------------------------------------------

#define SGHORMER_INSTANTIATE_OPS(T)                                                                  \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);                      \
  template BasicTensor<T> elementwise(const BasicTensor<T>&, const BasicTensor<T>&, Elementwise);    \
  template BasicTensor<T> scale(const BasicTensor<T>&, T);                                           \
  template BasicTensor<T> add_scalar(const BasicTensor<T>&, T);                                      \
  template BasicTensor<T> rsub_scalar(T, const BasicTensor<T>&);                                     \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                            \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                               \
  template BasicTensor<T> linear(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&); \
  template BasicTensor<T> spike_threshold(const BasicTensor<T>&, T, T);                              \
  template BasicTensor<T> sum(const BasicTensor<T>&);                                                \
  template BasicTensor<T> mean(const BasicTensor<T>&);                                               \
  template BasicTensor<T> concat_cols(const std::vector<BasicTensor<T>>&);                           \
  template BasicTensor<T> slice_cols(const BasicTensor<T>&, std::size_t, std::size_t);               \
  template BasicTensor<T> concat_rows(const std::vector<BasicTensor<T>>&);                           \
  template BasicTensor<T> slice_rows(const BasicTensor<T>&, std::size_t, std::size_t);               \
  template BasicTensor<T> gather_rows(const BasicTensor<T>&, std::span<const std::uint32_t>);        \
  template BasicTensor<T> scatter_add_rows(const BasicTensor<T>&, std::span<const std::uint32_t>,    \
                                           std::size_t);                                             \
  template BasicTensor<T> batch_norm(const BasicTensor<T>&, const BasicTensor<T>&,                   \
                                     const BasicTensor<T>&, std::span<T>, std::span<T>, bool, T, T); \
  template BasicTensor<T> block_matmul_nt(const BasicTensor<T>&, const BasicTensor<T>&,              \
                                          const BlockLayout&);                                       \
  template BasicTensor<T> block_matmul(const BasicTensor<T>&, const BasicTensor<T>&,                 \
                                       const BlockLayout&);                                          \
  template BasicTensor<T> block_softmax(const BasicTensor<T>&, const BlockLayout&);                  \
  template BasicTensor<T> segment_mean_rows(const BasicTensor<T>&, const BlockLayout&);              \
  template BasicTensor<T> l1_loss(const BasicTensor<T>&, std::span<const T>);                        \
  template BasicTensor<T> cross_entropy(const BasicTensor<T>&, std::span<const std::int64_t>);

SGHORMER_INSTANTIATE_OPS(float)
SGHORMER_INSTANTIATE_OPS(double)

#undef SGHORMER_INSTANTIATE_OPS

}  // namespace sghormer::ad
