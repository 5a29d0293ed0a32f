#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "corefqa/tensor.hpp"

namespace corefqa {

namespace detail {

inline void check_rank2(const Tensor& t, const char* op, const char* arg) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": " + arg + " must be rank 2, got " +
                     shape_str(t.shape()));
  }
}

inline Tensor make_output(Shape shape, bool track) {
  Tensor out = Tensor::zeros(std::move(shape));
  if (track) out.set_requires_grad(true);
  return out;
}

// C += A * B, all row-major, A: m x k, B: k x n.
inline void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                     std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = arow[p];
      if (aip == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

// C += A * B^T, A: m x k, B: n x k.
inline void gemm_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                        std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      crow[j] += s;
    }
  }
}

// C += A^T * B, A: m x k, B: m x n, C: k x n.
inline void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                        std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = arow[p];
      if (aip == 0.0) continue;
      double* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

}  // namespace detail

/// C = A * B with A: m x k, B: k x n.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::check_rank2(a, "matmul", "lhs");
  detail::check_rank2(b, "matmul", "rhs");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  const bool track = detail::grads_wanted({&a, &b});
  Tensor out = detail::make_output({m, n}, track);
  detail::gemm_acc(a.data().data(), b.data().data(), out.data().data(), m, k, n);
  if (track) {
    Tape::active()->record([a = a, b = b, out, m, k, n]() mutable {
      const std::vector<double>& go = out.grad();
      if (a.requires_grad())
        detail::gemm_nt_acc(go.data(), b.data().data(), a.grad().data(), m, n, k);
      if (b.requires_grad())
        detail::gemm_tn_acc(a.data().data(), go.data(), b.grad().data(), m, k, n);
    });
  }
  return out;
}

/// C = A * B^T with A: m x k, B: n x k. Row-against-row, used for QK^T.
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  detail::check_rank2(a, "matmul_nt", "lhs");
  detail::check_rank2(b, "matmul_nt", "rhs");
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: inner dimensions disagree: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  const bool track = detail::grads_wanted({&a, &b});
  Tensor out = detail::make_output({m, n}, track);
  detail::gemm_nt_acc(a.data().data(), b.data().data(), out.data().data(), m, k, n);
  if (track) {
    Tape::active()->record([a = a, b = b, out, m, k, n]() mutable {
      const std::vector<double>& go = out.grad();
      // dA = dC * B ; dB = dC^T * A
      if (a.requires_grad()) detail::gemm_acc(go.data(), b.data().data(), a.grad().data(), m, n, k);
      if (b.requires_grad())
        detail::gemm_tn_acc(go.data(), a.data().data(), b.grad().data(), m, n, k);
    });
  }
  return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shapes disagree: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  const bool track = detail::grads_wanted({&a, &b});
  Tensor out = detail::make_output(a.shape(), track);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  if (track) {
    Tape::active()->record([a = a, b = b, out]() mutable {
      const std::vector<double>& go = out.grad();
      if (a.requires_grad()) {
        std::vector<double>& ga = a.grad();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
      }
      if (b.requires_grad()) {
        std::vector<double>& gb = b.grad();
        for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i];
      }
    });
  }
  return out;
}

/// Elementwise product.
inline Tensor hadamard(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("hadamard: shapes disagree: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  const bool track = detail::grads_wanted({&a, &b});
  Tensor out = detail::make_output(a.shape(), track);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  if (track) {
    Tape::active()->record([a = a, b = b, out]() mutable {
      const std::vector<double>& go = out.grad();
      if (a.requires_grad()) {
        std::vector<double>& ga = a.grad();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * b[i];
      }
      if (b.requires_grad()) {
        std::vector<double>& gb = b.grad();
        for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * a[i];
      }
    });
  }
  return out;
}

inline Tensor scale(const Tensor& a, double c) {
  const bool track = detail::grads_wanted({&a});
  Tensor out = detail::make_output(a.shape(), track);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * c;
  if (track) {
    Tape::active()->record([a = a, out, c]() mutable {
      const std::vector<double>& go = out.grad();
      std::vector<double>& ga = a.grad();
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * c;
    });
  }
  return out;
}

inline Tensor relu(const Tensor& a) {
  const bool track = detail::grads_wanted({&a});
  Tensor out = detail::make_output(a.shape(), track);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
  if (track) {
    Tape::active()->record([a = a, out]() mutable {
      const std::vector<double>& go = out.grad();
      std::vector<double>& ga = a.grad();
      for (std::size_t i = 0; i < go.size(); ++i) {
        if (a[i] > 0.0) ga[i] += go[i];
      }
    });
  }
  return out;
}

/// Row-wise softmax with per-row max subtraction. Rank-1 input is one row.
inline Tensor softmax_rows(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  const bool track = detail::grads_wanted({&a});
  Tensor out = detail::make_output(a.shape(), track);
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = a.data().data() + i * n;
    double* y = out.data().data() + i * n;
    double mx = x[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      y[j] = std::exp(x[j] - mx);
      sum += y[j];
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < n; ++j) y[j] *= inv;
  }
  if (track) {
    Tape::active()->record([a = a, out, m, n]() mutable {
      const std::vector<double>& go = out.grad();
      std::vector<double>& ga = a.grad();
      for (std::size_t i = 0; i < m; ++i) {
        const double* y = out.data().data() + i * n;
        const double* gy = go.data() + i * n;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += gy[j] * y[j];
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += (gy[j] - dot) * y[j];
      }
    });
  }
  return out;
}

/// Normalizes each row of x to mean 0 / variance 1, then applies gamma, beta.
inline Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                         double eps = 1e-5) {
  const std::size_t m = x.rows(), n = x.cols();
  if (gamma.size() != n || beta.size() != n) {
    throw ShapeError("layer_norm: scale/shift " + shape_str(gamma.shape()) + "/" +
                     shape_str(beta.shape()) + " do not match last dim of " +
                     shape_str(x.shape()));
  }
  const bool track = detail::grads_wanted({&x, &gamma, &beta});
  Tensor out = detail::make_output(x.shape(), track);
  // Kept for backward: per-row inverse stddev and normalized values.
  std::vector<double> inv_std(m), xhat(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* xr = x.data().data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += xr[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (std::size_t j = 0; j < n; ++j) {
      const double xh = (xr[j] - mu) * is;
      xhat[i * n + j] = xh;
      out.data()[i * n + j] = gamma[j] * xh + beta[j];
    }
  }
  if (track) {
    Tape::active()->record([x = x, gamma = gamma, beta = beta, out, m, n, inv_std = std::move(inv_std),
                            xhat = std::move(xhat)]() mutable {
      const std::vector<double>& go = out.grad();
      for (std::size_t i = 0; i < m; ++i) {
        const double* gy = go.data() + i * n;
        const double* xh = xhat.data() + i * n;
        if (gamma.requires_grad()) {
          std::vector<double>& gg = gamma.grad();
          for (std::size_t j = 0; j < n; ++j) gg[j] += gy[j] * xh[j];
        }
        if (beta.requires_grad()) {
          std::vector<double>& gb = beta.grad();
          for (std::size_t j = 0; j < n; ++j) gb[j] += gy[j];
        }
        if (x.requires_grad()) {
          // dxhat = gy * gamma; dx = (dxhat - mean(dxhat) - xhat * mean(dxhat*xhat)) * inv_std
          double mean_dxh = 0.0, mean_dxh_xh = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const double dxh = gy[j] * gamma[j];
            mean_dxh += dxh;
            mean_dxh_xh += dxh * xh[j];
          }
          mean_dxh /= static_cast<double>(n);
          mean_dxh_xh /= static_cast<double>(n);
          std::vector<double>& gx = x.grad();
          for (std::size_t j = 0; j < n; ++j) {
            const double dxh = gy[j] * gamma[j];
            gx[i * n + j] += (dxh - mean_dxh - xh[j] * mean_dxh_xh) * inv_std[i];
          }
        }
      }
    });
  }
  return out;
}

/// y = x * W + b with x: m x k, W: k x n, b: n (broadcast over rows).
inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  detail::check_rank2(x, "linear", "input");
  detail::check_rank2(w, "linear", "weight");
  if (x.cols() != w.rows() || b.size() != w.cols()) {
    throw ShapeError("linear: incompatible shapes: x " + shape_str(x.shape()) + ", W " +
                     shape_str(w.shape()) + ", b " + shape_str(b.shape()));
  }
  const std::size_t m = x.rows(), k = x.cols(), n = w.cols();
  const bool track = detail::grads_wanted({&x, &w, &b});
  Tensor out = detail::make_output({m, n}, track);
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.data().data() + i * n;
    for (std::size_t j = 0; j < n; ++j) orow[j] = b[j];
  }
  detail::gemm_acc(x.data().data(), w.data().data(), out.data().data(), m, k, n);
  if (track) {
    Tape::active()->record([x = x, w = w, b = b, out, m, k, n]() mutable {
      const std::vector<double>& go = out.grad();
      if (x.requires_grad())
        detail::gemm_nt_acc(go.data(), w.data().data(), x.grad().data(), m, n, k);
      if (w.requires_grad())
        detail::gemm_tn_acc(x.data().data(), go.data(), w.grad().data(), m, k, n);
      if (b.requires_grad()) {
        std::vector<double>& gb = b.grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gb[j] += go[i * n + j];
      }
    });
  }
  return out;
}

/// Concatenate along the last (column) dimension; all row counts must agree.
inline Tensor concat_lastdim(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_lastdim: no inputs");
  const std::size_t m = parts[0].rows();
  std::size_t total = 0;
  bool track = false;
  for (const Tensor& p : parts) {
    if (p.rows() != m) {
      throw ShapeError("concat_lastdim: row counts disagree: " + shape_str(parts[0].shape()) +
                       " vs " + shape_str(p.shape()));
    }
    total += p.cols();
    track = track || p.requires_grad();
  }
  track = track && Tape::active() != nullptr;
  Tensor out = detail::make_output({m, total}, track);
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    const std::size_t n = p.cols();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out.data()[i * total + off + j] = p.data()[i * n + j];
    off += n;
  }
  if (track) {
    Tape::active()->record([parts = parts, out, m, total]() mutable {
      const std::vector<double>& go = out.grad();
      std::size_t off = 0;
      for (Tensor& p : parts) {
        const std::size_t n = p.cols();
        if (p.requires_grad()) {
          std::vector<double>& gp = p.grad();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gp[i * n + j] += go[i * total + off + j];
        }
        off += n;
      }
    });
  }
  return out;
}

inline Tensor concat_lastdim(const Tensor& a, const Tensor& b) {
  return concat_lastdim(std::vector<Tensor>{a, b});
}

/// Vertical concatenation; column counts must agree.
inline Tensor concat_rows(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("concat_rows: column counts disagree: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  const std::size_t n = a.cols(), ma = a.rows(), mb = b.rows();
  const bool track = detail::grads_wanted({&a, &b});
  Tensor out = detail::make_output({ma + mb, n}, track);
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(), out.data().begin() + ma * n);
  if (track) {
    Tape::active()->record([a = a, b = b, out, ma, mb, n]() mutable {
      const std::vector<double>& go = out.grad();
      if (a.requires_grad()) {
        std::vector<double>& ga = a.grad();
        for (std::size_t i = 0; i < ma * n; ++i) ga[i] += go[i];
      }
      if (b.requires_grad()) {
        std::vector<double>& gb = b.grad();
        for (std::size_t i = 0; i < mb * n; ++i) gb[i] += go[ma * n + i];
      }
    });
  }
  return out;
}

/// Rows [begin, end) of x.
inline Tensor take_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  if (begin > end || end > x.rows()) {
    throw ShapeError("take_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of bounds for " + shape_str(x.shape()));
  }
  const std::size_t n = x.cols(), m = end - begin;
  const bool track = detail::grads_wanted({&x});
  Tensor out = detail::make_output({m, n}, track);
  std::copy(x.data().begin() + begin * n, x.data().begin() + end * n, out.data().begin());
  if (track) {
    Tape::active()->record([x = x, out, begin, m, n]() mutable {
      const std::vector<double>& go = out.grad();
      std::vector<double>& gx = x.grad();
      for (std::size_t i = 0; i < m * n; ++i) gx[begin * n + i] += go[i];
    });
  }
  return out;
}

/// Columns [begin, end) of x.
inline Tensor take_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  if (begin > end || end > x.cols()) {
    throw ShapeError("take_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of bounds for " + shape_str(x.shape()));
  }
  const std::size_t m = x.rows(), nin = x.cols(), n = end - begin;
  const bool track = detail::grads_wanted({&x});
  Tensor out = detail::make_output({m, n}, track);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.data()[i * n + j] = x.data()[i * nin + begin + j];
  if (track) {
    Tape::active()->record([x = x, out, begin, m, nin, n]() mutable {
      const std::vector<double>& go = out.grad();
      std::vector<double>& gx = x.grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[i * nin + begin + j] += go[i * n + j];
    });
  }
  return out;
}

/// Same data, new shape (element count preserved). Gradient passes through.
inline Tensor reshape(const Tensor& x, Shape new_shape) {
  if (shape_numel(new_shape) != x.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                     shape_str(new_shape));
  }
  const bool track = detail::grads_wanted({&x});
  Tensor out = Tensor::from(std::move(new_shape), x.data());
  if (track) {
    out.set_requires_grad(true);
    Tape::active()->record([x = x, out]() mutable {
      const std::vector<double>& go = out.grad();
      std::vector<double>& gx = x.grad();
      for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
    });
  }
  return out;
}

/// Selects rows of a table by index (embedding lookup). Duplicate indices
/// accumulate gradient.
inline Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& indices) {
  detail::check_rank2(table, "gather_rows", "table");
  const std::size_t n = table.cols();
  for (std::size_t idx : indices) {
    if (idx >= table.rows()) {
      throw IndexError("gather_rows: index " + std::to_string(idx) + " out of range for " +
                       shape_str(table.shape()));
    }
  }
  const bool track = detail::grads_wanted({&table});
  Tensor out = detail::make_output({indices.size(), n}, track);
  for (std::size_t i = 0; i < indices.size(); ++i)
    std::copy(table.data().begin() + indices[i] * n, table.data().begin() + (indices[i] + 1) * n,
              out.data().begin() + i * n);
  if (track) {
    Tape::active()->record([table = table, out, indices, n]() mutable {
      const std::vector<double>& go = out.grad();
      std::vector<double>& gt = table.grad();
      for (std::size_t i = 0; i < indices.size(); ++i)
        for (std::size_t j = 0; j < n; ++j) gt[indices[i] * n + j] += go[i * n + j];
    });
  }
  return out;
}

/// Column means over all rows: m x n -> 1 x n.
inline Tensor mean_rows(const Tensor& x) {
  detail::check_rank2(x, "mean_rows", "input");
  const std::size_t m = x.rows(), n = x.cols();
  if (m == 0) throw ShapeError("mean_rows: empty input " + shape_str(x.shape()));
  const bool track = detail::grads_wanted({&x});
  Tensor out = detail::make_output({1, n}, track);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += x.data()[i * n + j];
  for (std::size_t j = 0; j < n; ++j) out[j] /= static_cast<double>(m);
  if (track) {
    Tape::active()->record([x = x, out, m, n]() mutable {
      const std::vector<double>& go = out.grad();
      std::vector<double>& gx = x.grad();
      const double inv = 1.0 / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += go[j] * inv;
    });
  }
  return out;
}

inline Tensor sum_all(const Tensor& x) {
  const bool track = detail::grads_wanted({&x});
  Tensor out = detail::make_output({1}, track);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i];
  out[0] = s;
  if (track) {
    Tape::active()->record([x = x, out]() mutable {
      const double go = out.grad()[0];
      std::vector<double>& gx = x.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go;
    });
  }
  return out;
}

/// -log softmax(logits)[target] with log-sum-exp stabilization. Rank-1 logits.
inline Tensor cross_entropy(const Tensor& logits, std::size_t target) {
  if (logits.rank() != 1) {
    throw ShapeError("cross_entropy: logits must be rank 1, got " + shape_str(logits.shape()));
  }
  const std::size_t n = logits.size();
  if (target >= n) {
    throw IndexError("cross_entropy: target " + std::to_string(target) +
                     " out of range for logits " + shape_str(logits.shape()));
  }
  double mx = logits[0];
  for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, logits[j]);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) sum += std::exp(logits[j] - mx);
  const double lse = mx + std::log(sum);
  const bool track = detail::grads_wanted({&logits});
  Tensor out = detail::make_output({1}, track);
  out[0] = lse - logits[target];
  if (track) {
    Tape::active()->record([logits = logits, out, target, mx, sum, n]() mutable {
      const double go = out.grad()[0];
      std::vector<double>& gl = logits.grad();
      for (std::size_t j = 0; j < n; ++j) {
        const double p = std::exp(logits[j] - mx) / sum;
        gl[j] += go * (p - (j == target ? 1.0 : 0.0));
      }
    });
  }
  return out;
}

}  // namespace corefqa
