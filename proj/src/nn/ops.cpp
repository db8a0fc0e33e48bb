#include "condense/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "condense/error.hpp"
#include "condense/nn/kernels.hpp"

namespace condense::inline CONDENSE_PRECISION::nn {

namespace {

const kernels::KernelTable<Real>& kt() { return kernels::active<Real>(); }

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() +
                   " vs " + b.shape_string());
}

Graph& graph_of(Var a) {
  if (!a.valid()) throw ConfigError("operation on an unbound Var");
  return *a.graph();
}

void require_column(const char* op, const Tensor& a) {
  if (a.cols() != 1) {
    throw ShapeError(std::string(op) + ": expected a column, got " + a.shape_string());
  }
}

Real sigmoid_scalar(Real x) {
  if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

template <class F>
Var unary(const char* op, Var a, F&& fn_and_deriv) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = fn_and_deriv.f(x[i]);
  return g.record(op, std::move(out), {a},
                  [a, fn_and_deriv](Graph& gr, const Tensor& y, const Tensor& gy) {
                    Tensor* ga = gr.grad_buffer(a);
                    if (!ga) return;
                    const Tensor& xv = gr.value(a);
                    for (std::size_t i = 0; i < y.size(); ++i) {
                      (*ga)[i] += gy[i] * fn_and_deriv.df(xv[i], y[i]);
                    }
                  });
}

struct TanhFn {
  Real f(Real x) const { return std::tanh(x); }
  Real df(Real, Real y) const { return Real(1) - y * y; }
};
struct SigmoidFn {
  Real f(Real x) const { return sigmoid_scalar(x); }
  Real df(Real, Real y) const { return y * (Real(1) - y); }
};
struct ReluFn {
  Real f(Real x) const { return x > 0 ? x : Real(0); }
  Real df(Real x, Real) const { return x > 0 ? Real(1) : Real(0); }
};
struct LogFn {
  Real f(Real x) const { return std::log(x); }
  Real df(Real x, Real) const { return Real(1) / x; }
};

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
  const std::size_t r = av.rows(), k = av.cols(), c = bv.cols();
  Tensor out(r, c);
  kt().gemm_nn(av.data(), bv.data(), out.data(), r, k, c);
  return g.record("matmul", std::move(out), {a, b},
                  [a, b, r, k, c](Graph& gr, const Tensor&, const Tensor& gy) {
                    if (Tensor* ga = gr.grad_buffer(a)) {
                      kt().gemm_nt(gy.data(), gr.value(b).data(), ga->data(), r, c, k);
                    }
                    if (Tensor* gb = gr.grad_buffer(b)) {
                      kt().gemm_tn(gr.value(a).data(), gy.data(), gb->data(), k, r, c);
                    }
                  });
}

Var transpose(Var a) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  Tensor out(x.cols(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) out(j, i) = x(i, j);
  }
  return g.record("transpose", std::move(out), {a},
                  [a](Graph& gr, const Tensor& y, const Tensor& gy) {
                    Tensor* ga = gr.grad_buffer(a);
                    if (!ga) return;
                    for (std::size_t i = 0; i < y.rows(); ++i) {
                      for (std::size_t j = 0; j < y.cols(); ++j) (*ga)(j, i) += gy(i, j);
                    }
                  });
}

Var add(Var a, Var b) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv)) shape_error("add", av, bv);
  Tensor out = av;
  kt().axpy(Real(1), bv.data(), out.data(), out.size());
  return g.record("add", std::move(out), {a, b},
                  [a, b](Graph& gr, const Tensor&, const Tensor& gy) {
                    if (Tensor* ga = gr.grad_buffer(a)) kt().axpy(Real(1), gy.data(), ga->data(), gy.size());
                    if (Tensor* gb = gr.grad_buffer(b)) kt().axpy(Real(1), gy.data(), gb->data(), gy.size());
                  });
}

Var sub(Var a, Var b) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv)) shape_error("sub", av, bv);
  Tensor out = av;
  kt().axpy(Real(-1), bv.data(), out.data(), out.size());
  return g.record("sub", std::move(out), {a, b},
                  [a, b](Graph& gr, const Tensor&, const Tensor& gy) {
                    if (Tensor* ga = gr.grad_buffer(a)) kt().axpy(Real(1), gy.data(), ga->data(), gy.size());
                    if (Tensor* gb = gr.grad_buffer(b)) kt().axpy(Real(-1), gy.data(), gb->data(), gy.size());
                  });
}

Var mul(Var a, Var b) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv)) shape_error("mul", av, bv);
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return g.record("mul", std::move(out), {a, b},
                  [a, b](Graph& gr, const Tensor&, const Tensor& gy) {
                    const Tensor& x = gr.value(a);
                    const Tensor& z = gr.value(b);
                    if (Tensor* ga = gr.grad_buffer(a)) {
                      for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * z[i];
                    }
                    if (Tensor* gb = gr.grad_buffer(b)) {
                      for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] += gy[i] * x[i];
                    }
                  });
}

Var scale(Var a, Real factor) { return affine(a, factor, Real(0)); }

Var affine(Var a, Real alpha, Real beta) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = alpha * x[i] + beta;
  return g.record("affine", std::move(out), {a},
                  [a, alpha](Graph& gr, const Tensor&, const Tensor& gy) {
                    if (Tensor* ga = gr.grad_buffer(a)) kt().axpy(alpha, gy.data(), ga->data(), gy.size());
                  });
}

Var mul_scalar(Var s, Var v) {
  Graph& g = graph_of(s);
  const Tensor& sv = s.value();
  const Tensor& x = v.value();
  if (sv.size() != 1) shape_error("mul_scalar", sv, x);
  Tensor out(x.rows(), x.cols());
  const Real k = sv[0];
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = k * x[i];
  return g.record("mul_scalar", std::move(out), {s, v},
                  [s, v](Graph& gr, const Tensor&, const Tensor& gy) {
                    const Tensor& xv = gr.value(v);
                    if (Tensor* gs = gr.grad_buffer(s)) {
                      (*gs)[0] += kt().dot(gy.data(), xv.data(), gy.size());
                    }
                    if (Tensor* gv = gr.grad_buffer(v)) {
                      kt().axpy(gr.value(s)[0], gy.data(), gv->data(), gy.size());
                    }
                  });
}

Var add_row_broadcast(Var m, Var v) {
  Graph& g = graph_of(m);
  const Tensor& mv = m.value();
  const Tensor& vv = v.value();
  if (vv.cols() != 1 || vv.rows() != mv.cols()) shape_error("add_row_broadcast", mv, vv);
  Tensor out = mv;
  for (std::size_t i = 0; i < mv.rows(); ++i) {
    kt().axpy(Real(1), vv.data(), out.row(i), mv.cols());
  }
  return g.record("add_row_broadcast", std::move(out), {m, v},
                  [m, v](Graph& gr, const Tensor& y, const Tensor& gy) {
                    if (Tensor* gm = gr.grad_buffer(m)) {
                      kt().axpy(Real(1), gy.data(), gm->data(), gy.size());
                    }
                    if (Tensor* gv = gr.grad_buffer(v)) {
                      for (std::size_t i = 0; i < y.rows(); ++i) {
                        kt().axpy(Real(1), gy.row(i), gv->data(), y.cols());
                      }
                    }
                  });
}

Var tanh(Var a) { return unary("tanh", a, TanhFn{}); }
Var sigmoid(Var a) { return unary("sigmoid", a, SigmoidFn{}); }
Var relu(Var a) { return unary("relu", a, ReluFn{}); }
Var log(Var a) { return unary("log", a, LogFn{}); }

Var softmax(Var a) { return masked_softmax(a, {}); }

Var masked_softmax(Var a, const std::vector<bool>& masked) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  require_column("softmax", x);
  if (!masked.empty() && masked.size() != x.size()) {
    throw ShapeError("masked_softmax: mask of " + std::to_string(masked.size()) +
                     " entries for a " + x.shape_string() + " input");
  }
  auto is_masked = [&](std::size_t i) { return !masked.empty() && masked[i]; };
  Real peak = -std::numeric_limits<Real>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!is_masked(i)) peak = std::max(peak, x[i]);
  }
  if (!std::isfinite(peak)) throw NumericError("softmax over no unmasked entries");
  Tensor out(x.rows(), 1);
  Real total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (is_masked(i)) continue;
    out[i] = std::exp(x[i] - peak);
    total += out[i];
  }
  for (std::size_t i = 0; i < x.size(); ++i) out[i] /= total;
  return g.record("softmax", std::move(out), {a},
                  [a](Graph& gr, const Tensor& y, const Tensor& gy) {
                    Tensor* ga = gr.grad_buffer(a);
                    if (!ga) return;
                    const Real inner = kt().dot(gy.data(), y.data(), y.size());
                    for (std::size_t i = 0; i < y.size(); ++i) {
                      (*ga)[i] += y[i] * (gy[i] - inner);
                    }
                  });
}

Var sum(Var a) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  Real total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) total += x[i];
  return g.record("sum", Tensor::scalar(total), {a},
                  [a](Graph& gr, const Tensor&, const Tensor& gy) {
                    Tensor* ga = gr.grad_buffer(a);
                    if (!ga) return;
                    for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += gy[0];
                  });
}

Var dot(Var a, Var b) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv)) shape_error("dot", av, bv);
  const Real value = kt().dot(av.data(), bv.data(), av.size());
  return g.record("dot", Tensor::scalar(value), {a, b},
                  [a, b](Graph& gr, const Tensor&, const Tensor& gy) {
                    if (Tensor* ga = gr.grad_buffer(a)) {
                      kt().axpy(gy[0], gr.value(b).data(), ga->data(), ga->size());
                    }
                    if (Tensor* gb = gr.grad_buffer(b)) {
                      kt().axpy(gy[0], gr.value(a).data(), gb->data(), gb->size());
                    }
                  });
}

Var mean(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("mean of no operands");
  Graph& g = graph_of(parts.front());
  const Tensor& first = parts.front().value();
  Tensor out(first.rows(), first.cols());
  const Real w = Real(1) / static_cast<Real>(parts.size());
  for (const Var& p : parts) {
    if (!p.value().same_shape(first)) shape_error("mean", first, p.value());
    kt().axpy(Real(1), p.value().data(), out.data(), out.size());
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= w;
  return g.record("mean", std::move(out), parts,
                  [parts, w](Graph& gr, const Tensor&, const Tensor& gy) {
                    for (const Var& p : parts) {
                      if (Tensor* gp = gr.grad_buffer(p)) kt().axpy(w, gy.data(), gp->data(), gy.size());
                    }
                  });
}

Var pick(Var a, std::size_t index) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  if (index >= x.size()) {
    throw ShapeError("pick: index " + std::to_string(index) + " outside " + x.shape_string());
  }
  return g.record("pick", Tensor::scalar(x[index]), {a},
                  [a, index](Graph& gr, const Tensor&, const Tensor& gy) {
                    if (Tensor* ga = gr.grad_buffer(a)) (*ga)[index] += gy[0];
                  });
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat of no operands");
  Graph& g = graph_of(parts.front());
  const std::size_t cols = parts.front().value().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.value().cols() != cols) shape_error("concat", parts.front().value(), p.value());
    rows += p.value().rows();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    std::copy(v.data(), v.data() + v.size(), out.data() + offset);
    offset += v.size();
  }
  return g.record("concat", std::move(out), parts,
                  [parts](Graph& gr, const Tensor&, const Tensor& gy) {
                    std::size_t off = 0;
                    for (const Var& p : parts) {
                      const std::size_t n = gr.value(p).size();
                      if (Tensor* gp = gr.grad_buffer(p)) kt().axpy(Real(1), gy.data() + off, gp->data(), n);
                      off += n;
                    }
                  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  if (begin + count > x.rows()) {
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " + x.shape_string());
  }
  const std::size_t cols = x.cols();
  Tensor out(count, cols);
  std::copy(x.row(begin), x.row(begin) + count * cols, out.data());
  return g.record("slice_rows", std::move(out), {a},
                  [a, begin, cols](Graph& gr, const Tensor& y, const Tensor& gy) {
                    Tensor* ga = gr.grad_buffer(a);
                    if (!ga) return;
                    kt().axpy(Real(1), gy.data(), ga->data() + begin * cols, y.size());
                  });
}

Var row(Var m, std::size_t r) {
  Graph& g = graph_of(m);
  const Tensor& x = m.value();
  if (r >= x.rows()) {
    throw ShapeError("row: index " + std::to_string(r) + " outside " + x.shape_string());
  }
  const std::size_t cols = x.cols();
  Tensor out(cols, 1);
  std::copy(x.row(r), x.row(r) + cols, out.data());
  return g.record("row", std::move(out), {m},
                  [m, r, cols](Graph& gr, const Tensor&, const Tensor& gy) {
                    Tensor* gm = gr.grad_buffer(m);
                    if (!gm) return;
                    kt().axpy(Real(1), gy.data(), gm->row(r), cols);
                  });
}

Var stack_rows(const std::vector<Var>& columns) {
  if (columns.empty()) throw ShapeError("stack_rows of no operands");
  Graph& g = graph_of(columns.front());
  const std::size_t width = columns.front().value().size();
  Tensor out(columns.size(), width);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const Tensor& c = columns[i].value();
    require_column("stack_rows", c);
    if (c.size() != width) shape_error("stack_rows", columns.front().value(), c);
    std::copy(c.data(), c.data() + width, out.row(i));
  }
  return g.record("stack_rows", std::move(out), columns,
                  [columns, width](Graph& gr, const Tensor&, const Tensor& gy) {
                    for (std::size_t i = 0; i < columns.size(); ++i) {
                      if (Tensor* gc = gr.grad_buffer(columns[i])) {
                        kt().axpy(Real(1), gy.row(i), gc->data(), width);
                      }
                    }
                  });
}

Var gather_rows(Var table, std::span<const std::int32_t> ids) {
  Graph& g = graph_of(table);
  const Tensor& t = table.value();
  const std::size_t width = t.cols();
  std::vector<std::int32_t> rows(ids.begin(), ids.end());
  Tensor out(rows.size(), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || static_cast<std::size_t>(rows[i]) >= t.rows()) {
      throw ShapeError("gather_rows: id " + std::to_string(rows[i]) + " outside " +
                       t.shape_string());
    }
    std::copy(t.row(rows[i]), t.row(rows[i]) + width, out.row(i));
  }
  return g.record("gather_rows", std::move(out), {table},
                  [table, rows, width](Graph& gr, const Tensor&, const Tensor& gy) {
                    Tensor* gt = gr.grad_buffer(table);
                    if (!gt) return;
                    for (std::size_t i = 0; i < rows.size(); ++i) {
                      kt().axpy(Real(1), gy.row(i), gt->row(rows[i]), width);
                    }
                  });
}

Var scatter_add(Var a, std::span<const std::int32_t> ids, std::size_t size) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  require_column("scatter_add", x);
  if (ids.size() != x.size()) {
    throw ShapeError("scatter_add: " + std::to_string(ids.size()) + " ids for a " +
                     x.shape_string() + " input");
  }
  std::vector<std::int32_t> targets(ids.begin(), ids.end());
  Tensor out(size, 1);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= size) {
      throw ShapeError("scatter_add: id " + std::to_string(targets[i]) +
                       " outside " + std::to_string(size) + " rows");
    }
    out[static_cast<std::size_t>(targets[i])] += x[i];
  }
  return g.record("scatter_add", std::move(out), {a},
                  [a, targets](Graph& gr, const Tensor&, const Tensor& gy) {
                    Tensor* ga = gr.grad_buffer(a);
                    if (!ga) return;
                    for (std::size_t i = 0; i < targets.size(); ++i) {
                      (*ga)[i] += gy[static_cast<std::size_t>(targets[i])];
                    }
                  });
}

Var pad_rows(Var a, std::size_t size) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  require_column("pad_rows", x);
  if (size < x.size()) {
    throw ShapeError("pad_rows: cannot shrink " + x.shape_string() + " to " +
                     std::to_string(size) + " rows");
  }
  Tensor out(size, 1);
  std::copy(x.data(), x.data() + x.size(), out.data());
  return g.record("pad_rows", std::move(out), {a},
                  [a](Graph& gr, const Tensor&, const Tensor& gy) {
                    Tensor* ga = gr.grad_buffer(a);
                    if (!ga) return;
                    kt().axpy(Real(1), gy.data(), ga->data(), ga->size());
                  });
}

Var conv1d_temporal(Var input, std::span<const Var> weights,
                    std::span<const Var> biases,
                    std::span<const std::size_t> windows) {
  Graph& g = graph_of(input);
  if (weights.size() != windows.size() || biases.size() != windows.size() ||
      windows.empty()) {
    throw ShapeError("conv1d_temporal: need one weight and bias per window");
  }
  const Tensor& x = input.value();
  const std::size_t dim = x.cols();
  const std::size_t widest = *std::max_element(windows.begin(), windows.end());
  const std::size_t length = std::max(x.rows(), widest);

  // right-pad short inputs with zero rows
  Tensor padded(length, dim);
  std::copy(x.data(), x.data() + x.size(), padded.data());

  std::vector<std::size_t> filters(windows.size());
  std::size_t total = 0;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const Tensor& wt = weights[w].value();
    const Tensor& bt = biases[w].value();
    if (windows[w] == 0 || wt.cols() != windows[w] * dim) {
      throw ShapeError("conv1d_temporal: window " + std::to_string(windows[w]) +
                       " weight " + wt.shape_string() + " for input " + x.shape_string());
    }
    if (bt.rows() != wt.rows() || bt.cols() != 1) shape_error("conv1d_temporal", wt, bt);
    filters[w] = wt.rows();
    total += wt.rows();
  }

  Tensor out(total, 1);
  // winning position per output, or -1 when the ReLU is inactive
  std::vector<std::ptrdiff_t> argmax(total, -1);
  std::size_t offset = 0;
  std::vector<Real> pre;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const std::size_t span = windows[w] * dim;
    const std::size_t positions = length - windows[w] + 1;
    const Tensor& wt = weights[w].value();
    const Tensor& bt = biases[w].value();
    pre.assign(filters[w], Real(0));
    for (std::size_t p = 0; p < positions; ++p) {
      const Real* window = padded.row(p);
      for (std::size_t q = 0; q < filters[w]; ++q) {
        const Real v = kt().dot(wt.row(q), window, span) + bt[q];
        const std::size_t o = offset + q;
        if (v > 0 && (argmax[o] < 0 || v > out[o])) {
          out[o] = v;
          argmax[o] = static_cast<std::ptrdiff_t>(p);
        }
      }
    }
    offset += filters[w];
  }

  std::vector<Var> parents{input};
  parents.insert(parents.end(), weights.begin(), weights.end());
  parents.insert(parents.end(), biases.begin(), biases.end());
  std::vector<Var> ws(weights.begin(), weights.end());
  std::vector<Var> bs(biases.begin(), biases.end());
  std::vector<std::size_t> wins(windows.begin(), windows.end());
  return g.record(
      "conv1d_temporal", std::move(out), parents,
      [input, ws, bs, wins, filters, argmax, padded, dim](Graph& gr, const Tensor&,
                                                          const Tensor& gy) {
        Tensor* gx = gr.grad_buffer(input);
        std::size_t off = 0;
        for (std::size_t w = 0; w < wins.size(); ++w) {
          const std::size_t span = wins[w] * dim;
          const Tensor& wt = gr.value(ws[w]);
          Tensor* gw = gr.grad_buffer(ws[w]);
          Tensor* gb = gr.grad_buffer(bs[w]);
          for (std::size_t q = 0; q < filters[w]; ++q) {
            const std::ptrdiff_t p = argmax[off + q];
            const Real d = gy[off + q];
            if (p < 0 || d == Real(0)) continue;
            const auto pos = static_cast<std::size_t>(p);
            if (gw) kt().axpy(d, padded.row(pos), gw->row(q), span);
            if (gb) (*gb)[q] += d;
            if (gx) {
              // rows past the real input are padding and get no gradient
              const std::size_t real_rows = gx->rows();
              const std::size_t last = std::min(pos + wins[w], real_rows);
              if (last > pos) {
                kt().axpy(d, wt.row(q), gx->row(pos), (last - pos) * dim);
              }
            }
          }
          off += filters[w];
        }
      });
}

LstmState lstm_step(Var x, LstmState prev, Var weight, Var bias) {
  Graph& g = graph_of(x);
  const Tensor& xv = x.value();
  const Tensor& hv = prev.h.value();
  const Tensor& cv = prev.c.value();
  const Tensor& wv = weight.value();
  const Tensor& bv = bias.value();
  require_column("lstm_step", xv);
  const std::size_t in = xv.rows();
  const std::size_t hidden = hv.rows();
  if (cv.rows() != hidden || wv.rows() != 4 * hidden || wv.cols() != in + hidden ||
      bv.rows() != 4 * hidden) {
    throw ShapeError("lstm_step: weight " + wv.shape_string() + ", bias " +
                     bv.shape_string() + " for input " + xv.shape_string() +
                     " and hidden " + hv.shape_string());
  }

  Tensor joint(in + hidden, 1);
  std::copy(xv.data(), xv.data() + in, joint.data());
  std::copy(hv.data(), hv.data() + hidden, joint.data() + in);

  Tensor gates = bv;
  kt().gemm_nn(wv.data(), joint.data(), gates.data(), 4 * hidden, in + hidden, 1);
  Tensor out(2 * hidden, 1);
  Tensor cell_tanh(hidden, 1);
  for (std::size_t j = 0; j < hidden; ++j) {
    const Real i_g = sigmoid_scalar(gates[j]);
    const Real f_g = sigmoid_scalar(gates[hidden + j]);
    const Real c_g = std::tanh(gates[2 * hidden + j]);
    const Real o_g = sigmoid_scalar(gates[3 * hidden + j]);
    gates[j] = i_g;
    gates[hidden + j] = f_g;
    gates[2 * hidden + j] = c_g;
    gates[3 * hidden + j] = o_g;
    const Real c_new = f_g * cv[j] + i_g * c_g;
    cell_tanh[j] = std::tanh(c_new);
    out[j] = o_g * cell_tanh[j];
    out[hidden + j] = c_new;
  }

  Var prev_c = prev.c;
  Var prev_h = prev.h;
  Var both = g.record(
      "lstm_step", std::move(out), {x, prev.h, prev.c, weight, bias},
      [x, prev_h, prev_c, weight, bias, in, hidden, joint, gates, cell_tanh](
          Graph& gr, const Tensor&, const Tensor& gy) {
        const Tensor& c_old = gr.value(prev_c);
        Tensor dgates(4 * hidden, 1);
        Tensor* gc = gr.grad_buffer(prev_c);
        for (std::size_t j = 0; j < hidden; ++j) {
          const Real i_g = gates[j];
          const Real f_g = gates[hidden + j];
          const Real c_g = gates[2 * hidden + j];
          const Real o_g = gates[3 * hidden + j];
          const Real dh = gy[j];
          const Real dc = gy[hidden + j] + dh * o_g * (Real(1) - cell_tanh[j] * cell_tanh[j]);
          dgates[j] = dc * c_g * i_g * (Real(1) - i_g);
          dgates[hidden + j] = dc * c_old[j] * f_g * (Real(1) - f_g);
          dgates[2 * hidden + j] = dc * i_g * (Real(1) - c_g * c_g);
          dgates[3 * hidden + j] = dh * cell_tanh[j] * o_g * (Real(1) - o_g);
          if (gc) (*gc)[j] += dc * f_g;
        }
        if (Tensor* gb = gr.grad_buffer(bias)) {
          kt().axpy(Real(1), dgates.data(), gb->data(), 4 * hidden);
        }
        if (Tensor* gw = gr.grad_buffer(weight)) {
          kt().gemm_nt(dgates.data(), joint.data(), gw->data(), 4 * hidden, 1, in + hidden);
        }
        Tensor* gx = gr.grad_buffer(x);
        Tensor* gh = gr.grad_buffer(prev_h);
        if (gx || gh) {
          Tensor djoint(in + hidden, 1);
          kt().gemm_tn(gr.value(weight).data(), dgates.data(), djoint.data(), in + hidden,
                       4 * hidden, 1);
          if (gx) kt().axpy(Real(1), djoint.data(), gx->data(), in);
          if (gh) kt().axpy(Real(1), djoint.data() + in, gh->data(), hidden);
        }
      });
  return LstmState{slice_rows(both, 0, hidden), slice_rows(both, hidden, hidden)};
}

}  // namespace condense::inline CONDENSE_PRECISION::nn
