#include "lgre/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lgre/errors.hpp"

namespace lgre {

using detail::make_result;
using detail::Node;

namespace {

thread_local KinkProbe* t_kink_probe = nullptr;

void observe_kinks(const Tensor& x, double at) {
  if (!t_kink_probe) return;
  for (double v : x.values())
    if (v != at) t_kink_probe->observe(std::fabs(v - at));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
  }
}

void require_rank(const Tensor& a, std::size_t rank, const char* op) {
  if (a.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         shape_string(a.shape()));
  }
}

// Returns the parent's grad buffer if it takes part in differentiation.
double* grad_of(Node& parent) {
  if (!parent.requires_grad) return nullptr;
  parent.ensure_grad();
  return parent.grad.data();
}

template <typename Fn, typename Dfn>
Tensor unary(const Tensor& x, Fn f, Dfn df) {
  std::vector<double> out(x.numel());
  auto in = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result(x.shape(), std::move(out), {x}, [df](Node& self) {
    Node& p = *self.parents[0];
    double* g = grad_of(p);
    if (!g) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * df(p.value[i], self.value[i]);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (int k = 0; k < 2; ++k) {
      if (double* g = grad_of(*self.parents[k])) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (double* g = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (double* g = grad_of(*self.parents[1])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (double* g = grad_of(pa)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (double* g = grad_of(pb)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
  return unary(a, [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  require_rank(x, 2, "add_row_bias");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (bias.numel() != n) {
    throw DimensionError("add_row_bias: bias " + shape_string(bias.shape()) + " vs input " +
                         shape_string(x.shape()));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  auto b = bias.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += b[j];
  return make_result(x.shape(), std::move(out), {x, bias}, [m, n](Node& self) {
    if (double* g = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (double* g = grad_of(*self.parents[1])) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
    }
  });
}

Tensor scale_rows(const Tensor& x, const Tensor& column) {
  require_rank(x, 2, "scale_rows");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (column.numel() != m) {
    throw DimensionError("scale_rows: column " + shape_string(column.shape()) + " vs input " +
                         shape_string(x.shape()));
  }
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[i * n + j] * column[i];
  return make_result(x.shape(), std::move(out), {x, column}, [m, n](Node& self) {
    Node& px = *self.parents[0];
    Node& pc = *self.parents[1];
    if (double* g = grad_of(px)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[i * n + j] * pc.value[i];
    }
    if (double* g = grad_of(pc)) {
      for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += self.grad[i * n + j] * px.value[i * n + j];
        g[i] += acc;
      }
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions differ for " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      const double* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
  }
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const double* g = self.grad.data();
    if (double* ga = grad_of(pa)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          const double* brow = pb.value.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * brow[j];
          ga[i * k + p] += acc;
        }
    }
    if (double* gb = grad_of(pb)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = pa.value[i * k + p];
          double* gbrow = gb + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * g[i * n + j];
        }
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul_nt");
  require_rank(b, 2, "matmul_nt");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) {
    throw DimensionError("matmul_nt: inner dimensions differ for " + shape_string(a.shape()) +
                         " x " + shape_string(b.shape()) + "^T");
  }
  std::vector<double> out(m * n);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = av.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = bv.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      out[i * n + j] = acc;
    }
  }
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const double* g = self.grad.data();
    double* ga = grad_of(pa);
    double* gb = grad_of(pb);
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = pa.value.data() + i * k;
      for (std::size_t j = 0; j < n; ++j) {
        const double gij = g[i * n + j];
        if (gij == 0.0) continue;
        if (ga) {
          const double* brow = pb.value.data() + j * k;
          for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += gij * brow[p];
        }
        if (gb) {
          double* gbrow = gb + j * k;
          for (std::size_t p = 0; p < k; ++p) gbrow[p] += gij * arow[p];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
  return make_result({n, m}, std::move(out), {a}, [m, n](Node& self) {
    if (double* g = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return add_row_bias(matmul_nt(x, weight), bias);
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw DimensionError("reshape: cannot view " + shape_string(a.shape()) + " as " + shape_string(shape));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  return make_result(std::move(shape), std::move(out), {a}, [](Node& self) {
    if (double* g = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts.front().dim(0);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    require_rank(p, 2, "concat_cols");
    if (p.dim(0) != m) {
      throw DimensionError("concat_cols: row counts differ, " + shape_string(parts.front().shape()) +
                           " vs " + shape_string(p.shape()));
    }
    widths.push_back(p.dim(1));
    total += p.dim(1);
  }
  std::vector<double> out(m * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto v = parts[k].values();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(v.data() + i * widths[k], widths[k], out.data() + i * total + offset);
    offset += widths[k];
  }
  return make_result({m, total}, std::move(out), parts, [m, total, widths](Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      if (double* g = grad_of(*self.parents[k])) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j) g[i * widths[k] + j] += self.grad[i * total + off + j];
      }
      off += widths[k];
    }
  });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  require_rank(a, 2, "slice_cols");
  const std::size_t m = a.dim(0), n = a.dim(1);
  if (begin >= end || end > n) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") invalid for " + shape_string(a.shape()));
  }
  const std::size_t w = end - begin;
  std::vector<double> out(m * w);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = a[i * n + begin + j];
  return make_result({m, w}, std::move(out), {a}, [m, n, w, begin](Node& self) {
    if (double* g = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) g[i * n + begin + j] += self.grad[i * w + j];
    }
  });
}

Tensor gather_rows(const Tensor& table, std::span<const std::int32_t> indices) {
  if (table.rank() < 1) throw DimensionError("gather_rows: scalar table");
  const std::size_t rows = table.dim(0);
  const std::size_t width = table.numel() / std::max<std::size_t>(rows, 1);
  std::vector<std::int32_t> idx(indices.begin(), indices.end());
  std::vector<double> out(idx.size() * width);
  auto tv = table.values();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= rows) {
      throw IntegrityError("gather_rows: index " + std::to_string(idx[i]) + " outside table of " +
                           std::to_string(rows) + " rows");
    }
    std::copy_n(tv.data() + static_cast<std::size_t>(idx[i]) * width, width, out.data() + i * width);
  }
  Shape shape = table.shape();
  shape[0] = idx.size();
  return make_result(std::move(shape), std::move(out), {table}, [idx = std::move(idx), width](Node& self) {
    if (double* g = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < idx.size(); ++i) {
        double* dst = g + static_cast<std::size_t>(idx[i]) * width;
        const double* src = self.grad.data() + i * width;
        for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
      }
    }
  });
}

Tensor gather_cols(const Tensor& a, std::span<const std::int32_t> index, std::size_t per_row) {
  require_rank(a, 2, "gather_cols");
  const std::size_t m = a.dim(0), n = a.dim(1);
  if (index.size() != m * per_row) {
    throw DimensionError("gather_cols: " + std::to_string(index.size()) + " indices for " +
                         std::to_string(m) + " rows of " + std::to_string(per_row));
  }
  std::vector<std::int32_t> idx(index.begin(), index.end());
  std::vector<double> out(m * per_row);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < per_row; ++j) {
      const std::int32_t c = idx[i * per_row + j];
      if (c < 0 || static_cast<std::size_t>(c) >= n) {
        throw IntegrityError("gather_cols: column " + std::to_string(c) + " outside " + std::to_string(n));
      }
      out[i * per_row + j] = a[i * n + static_cast<std::size_t>(c)];
    }
  return make_result({m, per_row}, std::move(out), {a}, [m, n, per_row, idx = std::move(idx)](Node& self) {
    if (double* g = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < per_row; ++j)
          g[i * n + static_cast<std::size_t>(idx[i * per_row + j])] += self.grad[i * per_row + j];
    }
  });
}

Tensor gather_dot(const Tensor& x, const Tensor& table, std::span<const std::int32_t> index,
                  std::size_t per_row) {
  require_rank(x, 2, "gather_dot");
  require_rank(table, 2, "gather_dot");
  const std::size_t m = x.dim(0), d = x.dim(1), rows = table.dim(0);
  if (table.dim(1) != d) {
    throw DimensionError("gather_dot: " + shape_string(x.shape()) + " vs table " + shape_string(table.shape()));
  }
  if (index.size() != m * per_row) {
    throw DimensionError("gather_dot: " + std::to_string(index.size()) + " indices for " +
                         std::to_string(m) + " rows of " + std::to_string(per_row));
  }
  std::vector<std::int32_t> idx(index.begin(), index.end());
  std::vector<double> out(m * per_row);
  auto xv = x.values();
  auto tv = table.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < per_row; ++j) {
      const std::int32_t e = idx[i * per_row + j];
      if (e < 0 || static_cast<std::size_t>(e) >= rows) {
        throw IntegrityError("gather_dot: row " + std::to_string(e) + " outside table of " + std::to_string(rows));
      }
      const double* xr = xv.data() + i * d;
      const double* tr = tv.data() + static_cast<std::size_t>(e) * d;
      double acc = 0.0;
      for (std::size_t p = 0; p < d; ++p) acc += xr[p] * tr[p];
      out[i * per_row + j] = acc;
    }
  return make_result({m, per_row}, std::move(out), {x, table},
                     [m, d, per_row, idx = std::move(idx)](Node& self) {
                       Node& px = *self.parents[0];
                       Node& pt = *self.parents[1];
                       double* gx = grad_of(px);
                       double* gt = grad_of(pt);
                       for (std::size_t i = 0; i < m; ++i)
                         for (std::size_t j = 0; j < per_row; ++j) {
                           const double gij = self.grad[i * per_row + j];
                           const std::size_t e = static_cast<std::size_t>(idx[i * per_row + j]);
                           if (gx) {
                             const double* tr = pt.value.data() + e * d;
                             for (std::size_t p = 0; p < d; ++p) gx[i * d + p] += gij * tr[p];
                           }
                           if (gt) {
                             const double* xr = px.value.data() + i * d;
                             for (std::size_t p = 0; p < d; ++p) gt[e * d + p] += gij * xr[p];
                           }
                         }
                     });
}

KinkProbe::KinkProbe() : previous_(t_kink_probe) { t_kink_probe = this; }
KinkProbe::~KinkProbe() { t_kink_probe = previous_; }

Tensor relu(const Tensor& x) {
  observe_kinks(x, 0.0);
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  observe_kinks(x, 0.0);
  return unary(x, [slope](double v) { return v > 0.0 ? v : slope * v; },
               [slope](double in, double) { return in > 0.0 ? 1.0 : slope; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double out) { return out * (1.0 - out); });
}

Tensor tanh(const Tensor& x) {
  return unary(x, [](double v) { return std::tanh(v); }, [](double, double out) { return 1.0 - out * out; });
}

Tensor softmax(const Tensor& x) {
  if (x.rank() != 1 && x.rank() != 2) {
    throw DimensionError("softmax: expected a vector or matrix, got " + shape_string(x.shape()));
  }
  const std::size_t rows = x.rank() == 1 ? 1 : x.dim(0);
  const std::size_t n = x.rank() == 1 ? x.dim(0) : x.dim(1);
  std::vector<double> out(rows * n);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* in = x.values().data() + i * n;
    double* o = out.data() + i * n;
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) hi = std::max(hi, in[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (o[j] = std::exp(in[j] - hi));
    for (std::size_t j = 0; j < n; ++j) o[j] /= z;
    if (std::isnan(hi)) std::fill(o, o + n, std::numeric_limits<double>::quiet_NaN());
  }
  return make_result(x.shape(), std::move(out), {x}, [rows, n](Node& self) {
    if (double* g = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < rows; ++i) {
        const double* y = self.value.data() + i * n;
        const double* gy = self.grad.data() + i * n;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += gy[j] * y[j];
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += y[j] * (gy[j] - dot);
      }
    }
  });
}

Tensor log(const Tensor& x) {
  return unary(x, [](double v) { return std::log(v); }, [](double in, double) { return 1.0 / in; });
}

Tensor abs(const Tensor& x) {
  observe_kinks(x, 0.0);
  return unary(x, [](double v) { return std::fabs(v); },
               [](double in, double) { return in > 0.0 ? 1.0 : (in < 0.0 ? -1.0 : 0.0); });
}

Tensor square(const Tensor& x) {
  return unary(x, [](double v) { return v * v; }, [](double in, double) { return 2.0 * in; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  observe_kinks(x, lo);
  observe_kinks(x, hi);
  return unary(x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
               [lo, hi](double in, double) { return (in >= lo && in <= hi) ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  return make_result({1}, {acc}, {x}, [](Node& self) {
    Node& p = *self.parents[0];
    if (double* g = grad_of(p)) {
      for (std::size_t i = 0; i < p.value.size(); ++i) g[i] += self.grad[0];
    }
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor row_sum(const Tensor& x) {
  require_rank(x, 2, "row_sum");
  const std::size_t m = x.dim(0), n = x.dim(1);
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += x[i * n + j];
  return make_result({m}, std::move(out), {x}, [m, n](Node& self) {
    if (double* g = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[i];
    }
  });
}

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.numel());
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng.uniform01() < rate ? 0.0 : keep_scale;
    out[i] = x[i] * mask[i];
  }
  return make_result(x.shape(), std::move(out), {x}, [mask = std::move(mask)](Node& self) {
    if (double* g = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < mask.size(); ++i) g[i] += self.grad[i] * mask[i];
    }
  });
}

Tensor conv2d(const Tensor& input, const Tensor& kernel) {
  require_rank(input, 3, "conv2d");
  require_rank(kernel, 4, "conv2d");
  Shape in_shape{1, input.dim(0), input.dim(1), input.dim(2)};
  Shape k_shape{1, kernel.dim(0), kernel.dim(1), kernel.dim(2), kernel.dim(3)};
  Tensor out = conv2d_per_sample(reshape(input, in_shape), reshape(kernel, k_shape));
  return reshape(out, {out.dim(1), out.dim(2), out.dim(3)});
}

Tensor conv2d_per_sample(const Tensor& input, const Tensor& kernels) {
  require_rank(input, 4, "conv2d_per_sample");
  require_rank(kernels, 5, "conv2d_per_sample");
  const std::size_t batch = input.dim(0), c_in = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t c_out = kernels.dim(1), k = kernels.dim(3);
  if (kernels.dim(3) != kernels.dim(4)) {
    throw ConfigError("conv2d: kernels must be square, got " + shape_string(kernels.shape()));
  }
  if (k % 2 == 0) throw ConfigError("conv2d: kernel size must be odd, got " + std::to_string(k));
  if (kernels.dim(0) != batch || kernels.dim(2) != c_in) {
    throw DimensionError("conv2d: input " + shape_string(input.shape()) + " incompatible with kernels " +
                         shape_string(kernels.shape()));
  }
  const long pad = static_cast<long>(k / 2);
  const long H = static_cast<long>(h), W = static_cast<long>(w);
  const std::size_t in_stride = c_in * h * w, out_stride = c_out * h * w;
  const std::size_t ker_stride = c_out * c_in * k * k;

  // Visits every (output, input, kernel) triple contributing to the result.
  auto for_each_tap = [=](auto&& body) {
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t co = 0; co < c_out; ++co)
        for (std::size_t ci = 0; ci < c_in; ++ci)
          for (long p = 0; p < static_cast<long>(k); ++p)
            for (long q = 0; q < static_cast<long>(k); ++q) {
              const std::size_t ker_at = b * ker_stride + ((co * c_in + ci) * k + static_cast<std::size_t>(p)) * k +
                                         static_cast<std::size_t>(q);
              const long di = p - pad, dj = q - pad;
              const long i0 = std::max(0L, -di), i1 = std::min(H, H - di);
              const long j0 = std::max(0L, -dj), j1 = std::min(W, W - dj);
              for (long i = i0; i < i1; ++i) {
                const std::size_t out_row = b * out_stride + (co * h + static_cast<std::size_t>(i)) * w;
                const std::size_t in_row = b * in_stride + (ci * h + static_cast<std::size_t>(i + di)) * w;
                body(ker_at, out_row, in_row, j0, j1, dj);
              }
            }
  };

  std::vector<double> out(batch * out_stride, 0.0);
  auto in = input.values();
  auto ker = kernels.values();
  for_each_tap([&](std::size_t ker_at, std::size_t out_row, std::size_t in_row, long j0, long j1, long dj) {
    const double kv = ker[ker_at];
    if (kv == 0.0) return;
    for (long j = j0; j < j1; ++j) out[out_row + static_cast<std::size_t>(j)] += kv * in[in_row + static_cast<std::size_t>(j + dj)];
  });

  return make_result({batch, c_out, h, w}, std::move(out), {input, kernels}, [for_each_tap](Node& self) {
    Node& pin = *self.parents[0];
    Node& pker = *self.parents[1];
    double* gin = grad_of(pin);
    double* gker = grad_of(pker);
    const double* g = self.grad.data();
    for_each_tap([&](std::size_t ker_at, std::size_t out_row, std::size_t in_row, long j0, long j1, long dj) {
      if (gin) {
        const double kv = pker.value[ker_at];
        for (long j = j0; j < j1; ++j)
          gin[in_row + static_cast<std::size_t>(j + dj)] += kv * g[out_row + static_cast<std::size_t>(j)];
      }
      if (gker) {
        double acc = 0.0;
        for (long j = j0; j < j1; ++j)
          acc += g[out_row + static_cast<std::size_t>(j)] * pin.value[in_row + static_cast<std::size_t>(j + dj)];
        gker[ker_at] += acc;
      }
    });
  });
}

}  // namespace lgre
