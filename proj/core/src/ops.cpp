// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "visualgpt/ops.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

#include "visualgpt/error.hpp"

namespace vgpt {

namespace {

using InGrads = std::span<std::vector<double>* const>;

void check_finite([[maybe_unused]] const std::vector<double>& values,
                  [[maybe_unused]] const char* op) {
#ifndef NDEBUG
  for (double v : values) assert(std::isfinite(v) && op);
#endif
}

/// Builds the result tensor and records the backward function when needed.
Tensor finish(const char* op, Shape shape, std::vector<double> data, std::initializer_list<Tensor> inputs,
              Tape::BackwardFn fn) {
  check_finite(data, op);
  Tensor out(std::move(shape), std::move(data));
  Tape* tape = Tape::active();
  if (tape == nullptr) return out;
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (!any) return out;
  std::vector<Tensor> ins(inputs);
  tape->record(ins, out, std::move(fn));
  return out;
}

Tensor finish_many(const char* op, Shape shape, std::vector<double> data, std::span<const Tensor> inputs,
                   Tape::BackwardFn fn) {
  check_finite(data, op);
  Tensor out(std::move(shape), std::move(data));
  Tape* tape = Tape::active();
  if (tape == nullptr) return out;
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (!any) return out;
  tape->record(inputs, out, std::move(fn));
  return out;
}

void require_2d(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw DimensionError(std::string(op) + ": expected a 2-D tensor, got " + to_string(t.shape()));
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

// Raw storage of an input captured by a backward closure.
using ImplPtr = std::shared_ptr<detail::TensorImpl>;

template <typename Forward, typename Derivative>
Tensor unary(const char* op, const Tensor& x, Forward f, Derivative df) {
  const auto xs = x.data();
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = f(xs[i]);
  ImplPtr xi = x.impl();
  return finish(op, x.shape(), std::move(out), {x}, [xi, df](std::span<const double> g, InGrads in) {
    auto& gx = *in[0];
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xi->data[i]);
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ad[i * k + p];
      const double* brow = bd + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  ImplPtr ai = a.impl(), bi = b.impl();
  return finish("matmul", {m, n}, std::move(out), {a, b}, [ai, bi, m, k, n](std::span<const double> g, InGrads in) {
    if (in[0]) {
      // dA = G * B^T
      auto& ga = *in[0];
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = bi->data.data() + p * n;
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (in[1]) {
      // dB = A^T * G
      auto& gb = *in[1];
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double av = ai->data[i * k + p];
          double* gbrow = gb.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_2d(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  const auto ad = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = ad[i * n + j];
  return finish("transpose", {n, m}, std::move(out), {a}, [m, n](std::span<const double> g, InGrads in) {
    auto& ga = *in[0];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  const auto ad = a.data(), bd = b.data();
  std::vector<double> out(ad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
  return finish("add", a.shape(), std::move(out), {a, b}, [](std::span<const double> g, InGrads in) {
    for (auto* gi : in)
      if (gi)
        for (std::size_t i = 0; i < g.size(); ++i) (*gi)[i] += g[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same(a, b, "sub");
  const auto ad = a.data(), bd = b.data();
  std::vector<double> out(ad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] - bd[i];
  return finish("sub", a.shape(), std::move(out), {a, b}, [](std::span<const double> g, InGrads in) {
    if (in[0])
      for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i];
    if (in[1])
      for (std::size_t i = 0; i < g.size(); ++i) (*in[1])[i] -= g[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mul");
  const auto ad = a.data(), bd = b.data();
  std::vector<double> out(ad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
  ImplPtr ai = a.impl(), bi = b.impl();
  return finish("mul", a.shape(), std::move(out), {a, b}, [ai, bi](std::span<const double> g, InGrads in) {
    if (in[0])
      for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i] * bi->data[i];
    if (in[1])
      for (std::size_t i = 0; i < g.size(); ++i) (*in[1])[i] += g[i] * ai->data[i];
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same(a, b, "div");
  const auto ad = a.data(), bd = b.data();
  std::vector<double> out(ad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] / bd[i];
  ImplPtr ai = a.impl(), bi = b.impl();
  return finish("div", a.shape(), std::move(out), {a, b}, [ai, bi](std::span<const double> g, InGrads in) {
    if (in[0])
      for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i] / bi->data[i];
    if (in[1])
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double bv = bi->data[i];
        (*in[1])[i] -= g[i] * ai->data[i] / (bv * bv);
      }
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_2d(x, "add_bias");
  const std::size_t m = x.rows(), n = x.cols();
  if (bias.size() != n) {
    throw DimensionError("add_bias: shape mismatch " + to_string(x.shape()) + " vs " + to_string(bias.shape()));
  }
  const auto xd = x.data(), bd = bias.data();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xd[i * n + j] + bd[j];
  return finish("add_bias", x.shape(), std::move(out), {x, bias}, [m, n](std::span<const double> g, InGrads in) {
    if (in[0])
      for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i];
    if (in[1])
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*in[1])[j] += g[i * n + j];
  });
}

Tensor affine(const Tensor& x, double scale, double shift) {
  return unary(
      "affine", x, [scale, shift](double v) { return scale * v + shift; }, [scale](double) { return scale; });
}

Tensor sigmoid(const Tensor& x) {
  const auto xs = x.data();
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-xs[i]));
  auto saved = std::make_shared<std::vector<double>>(out);
  return finish("sigmoid", x.shape(), std::move(out), {x}, [saved](std::span<const double> g, InGrads in) {
    auto& gx = *in[0];
    const auto& s = *saved;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * s[i] * (1.0 - s[i]);
  });
}

Tensor gelu(const Tensor& x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  return unary(
      "gelu", x,
      [](double v) { return 0.5 * v * (1.0 + std::tanh(kC * (v + kA * v * v * v))); },
      [](double v) {
        const double t = std::tanh(kC * (v + kA * v * v * v));
        return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * kC * (1.0 + 3.0 * kA * v * v);
      });
}

Tensor threshold(const Tensor& x, double tau) {
  return unary(
      "threshold", x, [tau](double v) { return v > tau ? v : 0.0; },
      [tau](double v) { return v > tau ? 1.0 : 0.0; });
}

Tensor softmax(const Tensor& x, int axis) {
  const int rank = static_cast<int>(x.rank());
  const int ax = axis < 0 ? axis + rank : axis;
  if (ax < 0 || ax >= rank) throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for " + to_string(x.shape()));
  std::size_t outer = 1, inner = 1;
  const std::size_t len = x.dim(static_cast<std::size_t>(ax));
  for (int i = 0; i < ax; ++i) outer *= x.dim(static_cast<std::size_t>(i));
  for (int i = ax + 1; i < rank; ++i) inner *= x.dim(static_cast<std::size_t>(i));

  const auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      double mx = xd[base];
      for (std::size_t j = 1; j < len; ++j) mx = std::max(mx, xd[base + j * inner]);
      double z = 0.0;
      for (std::size_t j = 0; j < len; ++j) {
        const double e = std::exp(xd[base + j * inner] - mx);
        out[base + j * inner] = e;
        z += e;
      }
      for (std::size_t j = 0; j < len; ++j) out[base + j * inner] /= z;
    }
  }
  auto saved = std::make_shared<std::vector<double>>(out);
  return finish("softmax", x.shape(), std::move(out), {x},
                [saved, outer, inner, len](std::span<const double> g, InGrads in) {
                  auto& gx = *in[0];
                  const auto& y = *saved;
                  for (std::size_t o = 0; o < outer; ++o) {
                    for (std::size_t i = 0; i < inner; ++i) {
                      const std::size_t base = o * len * inner + i;
                      double dot = 0.0;
                      for (std::size_t j = 0; j < len; ++j) dot += g[base + j * inner] * y[base + j * inner];
                      for (std::size_t j = 0; j < len; ++j) {
                        const std::size_t idx = base + j * inner;
                        gx[idx] += y[idx] * (g[idx] - dot);
                      }
                    }
                  }
                });
}

Tensor log_softmax(const Tensor& x) {
  const std::size_t len = x.shape().back();
  const std::size_t rows = len ? x.size() / len : 0;
  const auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xd.data() + r * len;
    const double mx = *std::max_element(row, row + len);
    double z = 0.0;
    for (std::size_t j = 0; j < len; ++j) z += std::exp(row[j] - mx);
    const double lz = std::log(z);
    for (std::size_t j = 0; j < len; ++j) out[r * len + j] = row[j] - mx - lz;
  }
  auto saved = std::make_shared<std::vector<double>>(out);
  return finish("log_softmax", x.shape(), std::move(out), {x}, [saved, rows, len](std::span<const double> g, InGrads in) {
    auto& gx = *in[0];
    const auto& y = *saved;
    for (std::size_t r = 0; r < rows; ++r) {
      double gs = 0.0;
      for (std::size_t j = 0; j < len; ++j) gs += g[r * len + j];
      for (std::size_t j = 0; j < len; ++j) {
        const std::size_t idx = r * len + j;
        gx[idx] += g[idx] - std::exp(y[idx]) * gs;
      }
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t n = x.shape().back();
  if (gain.size() != n || bias.size() != n) {
    throw DimensionError("layer_norm: gain/bias " + to_string(gain.shape()) + "/" + to_string(bias.shape()) +
                         " do not match last dimension of " + to_string(x.shape()));
  }
  const std::size_t rows = x.size() / n;
  const auto xd = x.data(), gd = gain.data(), bd = bias.data();
  std::vector<double> out(xd.size());
  auto xhat = std::make_shared<std::vector<double>>(xd.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xd.data() + r * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < n; ++j) {
      const double h = (row[j] - mu) * is;
      (*xhat)[r * n + j] = h;
      out[r * n + j] = h * gd[j] + bd[j];
    }
  }
  ImplPtr gi = gain.impl();
  return finish("layer_norm", x.shape(), std::move(out), {x, gain, bias},
                [xhat, inv_std, gi, rows, n](std::span<const double> g, InGrads in) {
                  const auto& h = *xhat;
                  if (in[0]) {
                    auto& gx = *in[0];
                    for (std::size_t r = 0; r < rows; ++r) {
                      double m1 = 0.0, m2 = 0.0;
                      for (std::size_t j = 0; j < n; ++j) {
                        const double dh = g[r * n + j] * gi->data[j];
                        m1 += dh;
                        m2 += dh * h[r * n + j];
                      }
                      m1 /= static_cast<double>(n);
                      m2 /= static_cast<double>(n);
                      for (std::size_t j = 0; j < n; ++j) {
                        const double dh = g[r * n + j] * gi->data[j];
                        gx[r * n + j] += (*inv_std)[r] * (dh - m1 - h[r * n + j] * m2);
                      }
                    }
                  }
                  if (in[1])
                    for (std::size_t r = 0; r < rows; ++r)
                      for (std::size_t j = 0; j < n; ++j) (*in[1])[j] += g[r * n + j] * h[r * n + j];
                  if (in[2])
                    for (std::size_t r = 0; r < rows; ++r)
                      for (std::size_t j = 0; j < n; ++j) (*in[2])[j] += g[r * n + j];
                });
}

Tensor mask_fill(const Tensor& x, std::span<const std::uint8_t> mask, double value) {
  const std::size_t n = x.size();
  const std::size_t period = mask.size();
  if (period == 0 || n % period != 0 || (period != n && period != x.shape().back())) {
    throw DimensionError("mask_fill: mask of " + std::to_string(period) + " entries does not fit " +
                         to_string(x.shape()));
  }
  auto keep = std::make_shared<std::vector<std::uint8_t>>(n);
  const auto xd = x.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool masked = mask[i % period] != 0;
    (*keep)[i] = masked ? 0 : 1;
    out[i] = masked ? value : xd[i];
  }
  return finish("mask_fill", x.shape(), std::move(out), {x}, [keep](std::span<const double> g, InGrads in) {
    auto& gx = *in[0];
    for (std::size_t i = 0; i < g.size(); ++i)
      if ((*keep)[i]) gx[i] += g[i];
  });
}

Tensor embedding_lookup(const Tensor& table, std::span<const int> ids) {
  require_2d(table, "embedding_lookup");
  const std::size_t vocab = table.rows(), width = table.cols();
  std::vector<double> out(ids.size() * width);
  const auto td = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw LookupError("embedding_lookup: id " + std::to_string(ids[i]) + " outside vocabulary of size " +
                        std::to_string(vocab));
    }
    std::copy_n(td.begin() + static_cast<std::ptrdiff_t>(ids[i] * width), width, out.begin() + static_cast<std::ptrdiff_t>(i * width));
  }
  auto saved = std::make_shared<std::vector<int>>(ids.begin(), ids.end());
  return finish("embedding_lookup", {ids.size(), width}, std::move(out), {table},
                [saved, width](std::span<const double> g, InGrads in) {
                  auto& gt = *in[0];
                  for (std::size_t i = 0; i < saved->size(); ++i) {
                    const std::size_t row = static_cast<std::size_t>((*saved)[i]);
                    for (std::size_t j = 0; j < width; ++j) gt[row * width + j] += g[i * width + j];
                  }
                });
}

Tensor concat(std::span<const Tensor> parts, int axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  for (const auto& p : parts) require_2d(p, "concat");
  if (axis != 0 && axis != 1) throw DimensionError("concat: axis must be 0 or 1");
  std::vector<std::size_t> widths;
  std::size_t rows = 0, cols = 0;
  if (axis == 0) {
    cols = parts[0].cols();
    for (const auto& p : parts) {
      if (p.cols() != cols) throw DimensionError("concat: shape mismatch " + to_string(parts[0].shape()) + " vs " + to_string(p.shape()));
      widths.push_back(p.rows());
      rows += p.rows();
    }
  } else {
    rows = parts[0].rows();
    for (const auto& p : parts) {
      if (p.rows() != rows) throw DimensionError("concat: shape mismatch " + to_string(parts[0].shape()) + " vs " + to_string(p.shape()));
      widths.push_back(p.cols());
      cols += p.cols();
    }
  }
  std::vector<double> out(rows * cols);
  if (axis == 0) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      std::copy(p.data().begin(), p.data().end(), out.begin() + static_cast<std::ptrdiff_t>(off));
      off += p.size();
    }
  } else {
    std::size_t c0 = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const auto pd = parts[k].data();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < widths[k]; ++j) out[i * cols + c0 + j] = pd[i * widths[k] + j];
      c0 += widths[k];
    }
  }
  return finish_many("concat", {rows, cols}, std::move(out), parts,
                     [widths, rows, cols, axis](std::span<const double> g, InGrads in) {
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < widths.size(); ++k) {
                         if (in[k]) {
                           auto& gk = *in[k];
                           if (axis == 0) {
                             for (std::size_t i = 0; i < gk.size(); ++i) gk[i] += g[off * cols + i];
                           } else {
                             for (std::size_t i = 0; i < rows; ++i)
                               for (std::size_t j = 0; j < widths[k]; ++j) gk[i * widths[k] + j] += g[i * cols + off + j];
                           }
                         }
                         off += widths[k];
                       }
                     });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  require_2d(x, "slice_rows");
  if (begin > end || end > x.rows()) throw DimensionError("slice_rows: range out of bounds for " + to_string(x.shape()));
  const std::size_t n = x.cols();
  std::vector<double> out(x.data().begin() + static_cast<std::ptrdiff_t>(begin * n),
                          x.data().begin() + static_cast<std::ptrdiff_t>(end * n));
  return finish("slice_rows", {end - begin, n}, std::move(out), {x}, [begin, n](std::span<const double> g, InGrads in) {
    auto& gx = *in[0];
    for (std::size_t i = 0; i < g.size(); ++i) gx[begin * n + i] += g[i];
  });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_2d(x, "slice_cols");
  if (begin > end || end > x.cols()) throw DimensionError("slice_cols: range out of bounds for " + to_string(x.shape()));
  const std::size_t m = x.rows(), n = x.cols(), w = end - begin;
  const auto xd = x.data();
  std::vector<double> out(m * w);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = xd[i * n + begin + j];
  return finish("slice_cols", {m, w}, std::move(out), {x}, [m, n, w, begin](std::span<const double> g, InGrads in) {
    auto& gx = *in[0];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) gx[i * n + begin + j] += g[i * w + j];
  });
}

Tensor pick(const Tensor& x, std::span<const int> index) {
  require_2d(x, "pick");
  const std::size_t m = x.rows(), n = x.cols();
  if (index.size() != m) throw DimensionError("pick: " + std::to_string(index.size()) + " indices for " + to_string(x.shape()));
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (index[i] < 0 || static_cast<std::size_t>(index[i]) >= n) {
      throw LookupError("pick: index " + std::to_string(index[i]) + " outside row of width " + std::to_string(n));
    }
    out[i] = x.data()[i * n + static_cast<std::size_t>(index[i])];
  }
  auto saved = std::make_shared<std::vector<int>>(index.begin(), index.end());
  return finish("pick", {m}, std::move(out), {x}, [saved, n](std::span<const double> g, InGrads in) {
    auto& gx = *in[0];
    for (std::size_t i = 0; i < g.size(); ++i) gx[i * n + static_cast<std::size_t>((*saved)[i])] += g[i];
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return finish("sum", {1}, {s}, {x}, [](std::span<const double> g, InGrads in) {
    for (auto& v : *in[0]) v += g[0];
  });
}

Tensor mean(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  const double n = static_cast<double>(x.size());
  return finish("mean", {1}, {s / n}, {x}, [n](std::span<const double> g, InGrads in) {
    for (auto& v : *in[0]) v += g[0] / n;
  });
}

Tensor mean_of(std::span<const Tensor> xs) {
  if (xs.empty()) throw DimensionError("mean_of: no inputs");
  for (const auto& x : xs) require_same(xs[0], x, "mean_of");
  const std::size_t n = xs[0].size();
  const double k = static_cast<double>(xs.size());
  std::vector<double> out(n, 0.0);
  for (const auto& x : xs) {
    const auto d = x.data();
    for (std::size_t i = 0; i < n; ++i) out[i] += d[i];
  }
  for (auto& v : out) v /= k;
  return finish_many("mean_of", xs[0].shape(), std::move(out), xs, [k](std::span<const double> g, InGrads in) {
    for (auto* gi : in)
      if (gi)
        for (std::size_t i = 0; i < g.size(); ++i) (*gi)[i] += g[i] / k;
  });
}

}  // namespace vgpt
