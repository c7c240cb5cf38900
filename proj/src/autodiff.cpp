#include "wordfuse/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wordfuse/error.hpp"

namespace wordfuse {

const Tensor& Var::value() const { return tape->value(*this); }

double Var::item() const {
  const Tensor& t = value();
  if (t.size() != 1) fail(ErrorKind::kDimension, "item() on tensor of shape " + shape_string(t.shape()));
  return t[0];
}

Var Tape::push(Tensor value, bool requires_grad, BackwardFn fn) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::input(Tensor value) { return push(std::move(value), true, nullptr); }

Var Tape::parameter(Parameter& p) {
  auto it = param_leaf_.find(&p);
  if (it != param_leaf_.end()) return Var{this, it->second};
  Node n;
  n.external = &p.value;
  n.requires_grad = p.trainable && !p.frozen;
  n.param = &p;
  nodes_.push_back(std::move(n));
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_leaf_[&p] = id;
  return Var{this, id};
}

const Tensor& Tape::value_of(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.owned;
}

const Tensor& Tape::value(Var v) const { return value_of(v.id); }

std::vector<double>& Tape::grad_buffer(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(value_of(id).size(), 0.0);
  return n.grad;
}

std::vector<double> Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.empty()) return std::vector<double>(value_of(v.id).size(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (value(loss).size() != 1) {
    fail(ErrorKind::kDimension, "backward() needs a scalar loss, got " + shape_string(value(loss).shape()));
  }
  if (!nodes_[loss.id].requires_grad) return;
  grad_buffer(loss.id)[0] += 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, static_cast<std::uint32_t>(i));
  }
}

void Tape::accumulate_parameter_grads(double scale) {
  for (auto& [param, id] : param_leaf_) {
    (void)param;
    Node& n = nodes_[id];
    if (n.grad.empty() || !n.requires_grad) continue;
    Parameter& p = *n.param;
    if (p.grad.shape() != p.value.shape()) p.zero_grad();
    auto& g = p.grad.storage();
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += scale * n.grad[k];
  }
}

namespace ad {
namespace {

Tape& tape_of(Var a) { return *a.tape; }

void check_same_tape(Var a, Var b) {
  if (a.tape != b.tape) fail(ErrorKind::kInput, "operands recorded on different tapes");
}

struct MatDims {
  std::size_t rows, cols;
};

MatDims as_left(const Tensor& t) { return t.rank() == 2 ? MatDims{t.dim(0), t.dim(1)} : MatDims{1, t.size()}; }

}  // namespace

Var matmul(Var a, Var b) {
  check_same_tape(a, b);
  Tape& tape = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const MatDims ad = as_left(A);
  const MatDims bd = B.rank() == 2 ? MatDims{B.dim(0), B.dim(1)} : MatDims{B.size(), 1};
  if (A.rank() > 2 || B.rank() > 2 || ad.cols != bd.rows) {
    fail(ErrorKind::kDimension,
         "matmul inner dimensions disagree: " + shape_string(A.shape()) + " · " + shape_string(B.shape()));
  }
  const std::size_t m = ad.rows, k = ad.cols, n = bd.cols;
  Shape out_shape;
  if (A.rank() == 2 && B.rank() == 2) out_shape = {m, n};
  else if (A.rank() == 2) out_shape = {m};
  else if (B.rank() == 2) out_shape = {n};
  else out_shape = {1};
  Tensor C(out_shape);
  const double* pa = A.data().data();
  const double* pb = B.data().data();
  double* pc = C.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * n;
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  const bool rg = tape.needs(a.id) || tape.needs(b.id);
  return tape.push(std::move(C), rg, [ia = a.id, ib = b.id, m, k, n](Tape& t, std::uint32_t self) {
    const auto& dC = t.grad_ref(self);
    const double* pa = t.value_of(ia).data().data();
    const double* pb = t.value_of(ib).data().data();
    if (t.needs(ia)) {
      auto& dA = t.grad_buffer(ia);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          const double* brow = pb + p * n;
          const double* grow = dC.data() + i * n;
          for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
          dA[i * k + p] += s;
        }
      }
    }
    if (t.needs(ib)) {
      auto& dB = t.grad_buffer(ib);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double av = pa[i * k + p];
          if (av == 0.0) continue;
          const double* grow = dC.data() + i * n;
          double* drow = dB.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) drow[j] += av * grow[j];
        }
      }
    }
  });
}

Var matmul_nt(Var a, Var b) {
  check_same_tape(a, b);
  Tape& tape = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const MatDims ad = as_left(A);
  const MatDims bd = as_left(B);
  if (A.rank() > 2 || B.rank() > 2 || ad.cols != bd.cols) {
    fail(ErrorKind::kDimension,
         "matmul_nt inner dimensions disagree: " + shape_string(A.shape()) + " · " + shape_string(B.shape()) + "ᵀ");
  }
  const std::size_t m = ad.rows, k = ad.cols, n = bd.rows;
  Shape out_shape = A.rank() == 2 ? Shape{m, n} : Shape{n};
  Tensor C(out_shape);
  const double* pa = A.data().data();
  const double* pb = B.data().data();
  double* pc = C.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = pb + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      pc[i * n + j] = s;
    }
  }
  const bool rg = tape.needs(a.id) || tape.needs(b.id);
  return tape.push(std::move(C), rg, [ia = a.id, ib = b.id, m, k, n](Tape& t, std::uint32_t self) {
    const auto& dC = t.grad_ref(self);
    const double* pa = t.value_of(ia).data().data();
    const double* pb = t.value_of(ib).data().data();
    if (t.needs(ia)) {
      auto& dA = t.grad_buffer(ia);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double g = dC[i * n + j];
          if (g == 0.0) continue;
          const double* brow = pb + j * k;
          double* drow = dA.data() + i * k;
          for (std::size_t p = 0; p < k; ++p) drow[p] += g * brow[p];
        }
      }
    }
    if (t.needs(ib)) {
      auto& dB = t.grad_buffer(ib);
      for (std::size_t i = 0; i < m; ++i) {
        const double* arow = pa + i * k;
        for (std::size_t j = 0; j < n; ++j) {
          const double g = dC[i * n + j];
          if (g == 0.0) continue;
          double* drow = dB.data() + j * k;
          for (std::size_t p = 0; p < k; ++p) drow[p] += g * arow[p];
        }
      }
    }
  });
}

Var elementwise(Binary op, Var a, Var b) {
  check_same_tape(a, b);
  Tape& tape = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const bool a_scalar = A.size() == 1 && B.size() != 1;
  const bool b_scalar = B.size() == 1 && A.size() != 1;
  if (!a_scalar && !b_scalar && A.shape() != B.shape()) {
    fail(ErrorKind::kDimension, "elementwise shapes disagree: " + shape_string(A.shape()) + " vs " +
                                    shape_string(B.shape()));
  }
  const Shape& out_shape = a_scalar ? B.shape() : A.shape();
  const std::size_t n = shape_size(out_shape);
  Tensor C(out_shape);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = A[a_scalar ? 0 : i];
    const double y = B[b_scalar ? 0 : i];
    switch (op) {
      case Binary::kAdd: C[i] = x + y; break;
      case Binary::kSub: C[i] = x - y; break;
      case Binary::kMul: C[i] = x * y; break;
    }
  }
  const bool rg = tape.needs(a.id) || tape.needs(b.id);
  return tape.push(std::move(C), rg, [op, ia = a.id, ib = b.id, a_scalar, b_scalar, n](Tape& t, std::uint32_t self) {
    const auto& g = t.grad_ref(self);
    if (t.needs(ia)) {
      auto& dA = t.grad_buffer(ia);
      const Tensor& B = t.value_of(ib);
      for (std::size_t i = 0; i < n; ++i) {
        const double d = op == Binary::kMul ? g[i] * B[b_scalar ? 0 : i] : g[i];
        dA[a_scalar ? 0 : i] += d;
      }
    }
    if (t.needs(ib)) {
      auto& dB = t.grad_buffer(ib);
      const Tensor& A = t.value_of(ia);
      for (std::size_t i = 0; i < n; ++i) {
        double d = g[i];
        if (op == Binary::kSub) d = -d;
        if (op == Binary::kMul) d = g[i] * A[a_scalar ? 0 : i];
        dB[b_scalar ? 0 : i] += d;
      }
    }
  });
}

Var elementwise(Unary op, Var x) {
  Tape& tape = tape_of(x);
  const Tensor& X = x.value();
  Tensor Y(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double v = X[i];
    switch (op) {
      case Unary::kTanh: Y[i] = std::tanh(v); break;
      case Unary::kSigmoid: Y[i] = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); break;
      case Unary::kRelu: Y[i] = v > 0 ? v : 0.0; break;
    }
  }
  return tape.push(std::move(Y), tape.needs(x.id), [op, ix = x.id](Tape& t, std::uint32_t self) {
    const auto& g = t.grad_ref(self);
    const Tensor& Y = t.value_of(self);
    const Tensor& X = t.value_of(ix);
    auto& dX = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) {
      switch (op) {
        case Unary::kTanh: dX[i] += g[i] * (1.0 - Y[i] * Y[i]); break;
        case Unary::kSigmoid: dX[i] += g[i] * Y[i] * (1.0 - Y[i]); break;
        case Unary::kRelu: dX[i] += X[i] > 0 ? g[i] : 0.0; break;
      }
    }
  });
}

Var scale(Var x, double factor) {
  Tape& tape = tape_of(x);
  Tensor Y = x.value();
  for (auto& v : Y.storage()) v *= factor;
  return tape.push(std::move(Y), tape.needs(x.id), [factor, ix = x.id](Tape& t, std::uint32_t self) {
    const auto& g = t.grad_ref(self);
    auto& dX = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) dX[i] += factor * g[i];
  });
}

Var add_bias(Var x, Var bias) {
  check_same_tape(x, bias);
  Tape& tape = tape_of(x);
  const Tensor& X = x.value();
  const Tensor& b = bias.value();
  if (X.cols() != b.size() || b.rank() != 1) {
    fail(ErrorKind::kDimension, "bias " + shape_string(b.shape()) + " does not fit rows of " + shape_string(X.shape()));
  }
  Tensor Y = X;
  const std::size_t m = X.rows(), n = X.cols();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) Y[i * n + j] += b[j];
  const bool rg = tape.needs(x.id) || tape.needs(bias.id);
  return tape.push(std::move(Y), rg, [ix = x.id, ib = bias.id, m, n](Tape& t, std::uint32_t self) {
    const auto& g = t.grad_ref(self);
    if (t.needs(ix)) {
      auto& dX = t.grad_buffer(ix);
      for (std::size_t i = 0; i < g.size(); ++i) dX[i] += g[i];
    }
    if (t.needs(ib)) {
      auto& db = t.grad_buffer(ib);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) db[j] += g[i * n + j];
    }
  });
}

Var scale_rows(Var alpha, Var x) {
  check_same_tape(alpha, x);
  Tape& tape = tape_of(x);
  const Tensor& a = alpha.value();
  const Tensor& X = x.value();
  if (X.rank() != 2 || a.size() != X.dim(0)) {
    fail(ErrorKind::kDimension, "scale_rows weights " + shape_string(a.shape()) + " vs rows of " + shape_string(X.shape()));
  }
  const std::size_t m = X.dim(0), n = X.dim(1);
  Tensor Y = X;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) Y[i * n + j] *= a[i];
  const bool rg = tape.needs(alpha.id) || tape.needs(x.id);
  return tape.push(std::move(Y), rg, [ia = alpha.id, ix = x.id, m, n](Tape& t, std::uint32_t self) {
    const auto& g = t.grad_ref(self);
    if (t.needs(ia)) {
      auto& da = t.grad_buffer(ia);
      const Tensor& X = t.value_of(ix);
      for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * X[i * n + j];
        da[i] += s;
      }
    }
    if (t.needs(ix)) {
      auto& dX = t.grad_buffer(ix);
      const Tensor& a = t.value_of(ia);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) dX[i * n + j] += a[i] * g[i * n + j];
    }
  });
}

Var sum(Var x) {
  Tape& tape = tape_of(x);
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return tape.push(Tensor::scalar(s), tape.needs(x.id), [ix = x.id](Tape& t, std::uint32_t self) {
    const double g = t.grad_ref(self)[0];
    auto& dX = t.grad_buffer(ix);
    for (auto& d : dX) d += g;
  });
}

Var masked_softmax(Var energies, const Mask& mask) {
  Tape& tape = tape_of(energies);
  const Tensor& e = energies.value();
  if (e.rank() != 1 || mask.size() != e.size()) {
    fail(ErrorKind::kDimension, "masked_softmax needs a vector and an equal-length mask, got " +
                                    shape_string(e.shape()) + " and mask of " + std::to_string(mask.size()));
  }
  double mx = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!mask[i]) continue;
    if (!std::isfinite(e[i])) fail(ErrorKind::kNumeric, "non-finite attention energy at position " + std::to_string(i));
    mx = std::max(mx, e[i]);
    any = true;
  }
  if (!any) fail(ErrorKind::kEmptyAttention, "every position is masked out");
  Tensor y(e.shape());
  double z = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!mask[i]) continue;
    y[i] = std::exp(e[i] - mx);
    z += y[i];
  }
  for (auto& v : y.storage()) v /= z;
  return tape.push(std::move(y), tape.needs(energies.id), [ie = energies.id](Tape& t, std::uint32_t self) {
    const auto& g = t.grad_ref(self);
    const Tensor& y = t.value_of(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
    auto& de = t.grad_buffer(ie);
    for (std::size_t i = 0; i < g.size(); ++i) de[i] += y[i] * (g[i] - dot);
  });
}

Var softmax(Var energies) { return masked_softmax(energies, Mask(energies.size(), 1)); }

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) fail(ErrorKind::kDimension, "concat of nothing");
  Tape& tape = tape_of(parts[0]);
  const Tensor& first = parts[0].value();
  const std::size_t rank = first.rank();
  if (axis >= rank) fail(ErrorKind::kDimension, "concat axis " + std::to_string(axis) + " out of range");
  // Viewed as [outer × width_k] blocks, concatenating along the width.
  const std::size_t outer = axis == 0 ? 1 : first.dim(0);
  std::vector<std::size_t> widths;
  std::size_t total_width = 0;
  bool rg = false;
  for (const Var& p : parts) {
    check_same_tape(parts[0], p);
    const Tensor& t = p.value();
    bool ok = t.rank() == rank;
    if (ok && rank == 2) ok = axis == 0 ? t.dim(1) == first.dim(1) : t.dim(0) == first.dim(0);
    if (!ok) {
      fail(ErrorKind::kDimension, "concat off-axis shapes disagree: " + shape_string(first.shape()) + " vs " +
                                      shape_string(t.shape()));
    }
    widths.push_back(t.size() / outer);
    total_width += widths.back();
    rg = rg || tape.needs(p.id);
  }
  Shape out_shape = first.shape();
  if (axis == 0) {
    std::size_t n0 = 0;
    for (const Var& p : parts) n0 += p.value().dim(0);
    out_shape[0] = n0;
  } else {
    out_shape[1] = total_width;
  }
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& t = parts[k].value();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(t.data().data() + o * widths[k], widths[k], out.data().data() + o * total_width + offset);
    offset += widths[k];
  }
  std::vector<std::uint32_t> ids;
  for (const Var& p : parts) ids.push_back(p.id);
  return tape.push(std::move(out), rg, [ids, widths, outer, total_width](Tape& t, std::uint32_t self) {
    const auto& g = t.grad_ref(self);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.needs(ids[k])) {
        auto& d = t.grad_buffer(ids[k]);
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t j = 0; j < widths[k]; ++j) d[o * widths[k] + j] += g[o * total_width + offset + j];
      }
      offset += widths[k];
    }
  });
}

Var stack(const std::vector<Var>& rows) {
  if (rows.empty()) fail(ErrorKind::kDimension, "stack of nothing");
  Tape& tape = tape_of(rows[0]);
  const std::size_t d = rows[0].size();
  Tensor out({rows.size(), d});
  bool rg = false;
  std::vector<std::uint32_t> ids;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Tensor& r = rows[i].value();
    if (r.rank() != 1 || r.size() != d) {
      fail(ErrorKind::kDimension, "stack rows disagree: " + shape_string(rows[0].shape()) + " vs " + shape_string(r.shape()));
    }
    std::copy(r.data().begin(), r.data().end(), out.data().begin() + i * d);
    rg = rg || tape.needs(rows[i].id);
    ids.push_back(rows[i].id);
  }
  return tape.push(std::move(out), rg, [ids, d](Tape& t, std::uint32_t self) {
    const auto& g = t.grad_ref(self);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!t.needs(ids[i])) continue;
      auto& dr = t.grad_buffer(ids[i]);
      for (std::size_t j = 0; j < d; ++j) dr[j] += g[i * d + j];
    }
  });
}

Var slice(Var x, std::size_t start, std::size_t length) {
  Tape& tape = tape_of(x);
  const Tensor& X = x.value();
  if (X.rank() != 1 || start + length > X.size() || length == 0) {
    fail(ErrorKind::kDimension, "slice [" + std::to_string(start) + ", +" + std::to_string(length) + ") of " +
                                    shape_string(X.shape()));
  }
  Tensor out({length}, std::vector<double>(X.data().begin() + start, X.data().begin() + start + length));
  return tape.push(std::move(out), tape.needs(x.id), [ix = x.id, start, length](Tape& t, std::uint32_t self) {
    const auto& g = t.grad_ref(self);
    auto& d = t.grad_buffer(ix);
    for (std::size_t j = 0; j < length; ++j) d[start + j] += g[j];
  });
}

Var rows(Var x, std::size_t start, std::size_t count) {
  Tape& tape = tape_of(x);
  const Tensor& X = x.value();
  if (X.rank() != 2 || start + count > X.dim(0) || count == 0) {
    fail(ErrorKind::kDimension, "rows [" + std::to_string(start) + ", +" + std::to_string(count) + ") of " +
                                    shape_string(X.shape()));
  }
  const std::size_t n = X.dim(1);
  Tensor out({count, n}, std::vector<double>(X.data().begin() + start * n, X.data().begin() + (start + count) * n));
  return tape.push(std::move(out), tape.needs(x.id), [ix = x.id, start, n](Tape& t, std::uint32_t self) {
    const auto& g = t.grad_ref(self);
    auto& d = t.grad_buffer(ix);
    for (std::size_t j = 0; j < g.size(); ++j) d[start * n + j] += g[j];
  });
}

Var row(Var x, std::size_t r) {
  Tape& tape = tape_of(x);
  const Tensor& X = x.value();
  if (X.rank() != 2 || r >= X.dim(0)) {
    fail(ErrorKind::kDimension, "row " + std::to_string(r) + " of " + shape_string(X.shape()));
  }
  const std::size_t n = X.dim(1);
  Tensor out({n}, std::vector<double>(X.data().begin() + r * n, X.data().begin() + (r + 1) * n));
  return tape.push(std::move(out), tape.needs(x.id), [ix = x.id, r, n](Tape& t, std::uint32_t self) {
    const auto& g = t.grad_ref(self);
    auto& d = t.grad_buffer(ix);
    for (std::size_t j = 0; j < n; ++j) d[r * n + j] += g[j];
  });
}

Var pad_rows(Var x, std::size_t total_rows) {
  Tape& tape = tape_of(x);
  const Tensor& X = x.value();
  if (X.rank() != 2) fail(ErrorKind::kDimension, "pad_rows needs a matrix, got " + shape_string(X.shape()));
  if (total_rows <= X.dim(0)) return x;
  Tensor out({total_rows, X.dim(1)});
  std::copy(X.data().begin(), X.data().end(), out.data().begin());
  const std::size_t n = X.size();
  return tape.push(std::move(out), tape.needs(x.id), [ix = x.id, n](Tape& t, std::uint32_t self) {
    const auto& g = t.grad_ref(self);
    auto& d = t.grad_buffer(ix);
    for (std::size_t j = 0; j < n; ++j) d[j] += g[j];
  });
}

Var unfold_rows(Var x, std::size_t width) {
  Tape& tape = tape_of(x);
  const Tensor& X = x.value();
  if (X.rank() != 2 || width == 0 || width > X.dim(0)) {
    fail(ErrorKind::kDimension, "cannot unfold " + shape_string(X.shape()) + " with width " + std::to_string(width));
  }
  const std::size_t m = X.dim(0), n = X.dim(1);
  const std::size_t windows = m - width + 1;
  const std::size_t span = width * n;
  Tensor out({windows, span});
  // Window i is a contiguous run of the row-major storage.
  for (std::size_t i = 0; i < windows; ++i)
    std::copy_n(X.data().data() + i * n, span, out.data().data() + i * span);
  return tape.push(std::move(out), tape.needs(x.id), [ix = x.id, windows, span, n](Tape& t, std::uint32_t self) {
    const auto& g = t.grad_ref(self);
    auto& d = t.grad_buffer(ix);
    for (std::size_t i = 0; i < windows; ++i)
      for (std::size_t j = 0; j < span; ++j) d[i * n + j] += g[i * span + j];
  });
}

MaxResult max_over_axis(Var x, std::size_t axis) {
  Tape& tape = tape_of(x);
  const Tensor& X = x.value();
  std::size_t outer, len, stride, step;
  if (X.rank() == 1) {
    if (axis != 0) fail(ErrorKind::kDimension, "max axis out of range for " + shape_string(X.shape()));
    outer = 1, len = X.size(), stride = 0, step = 1;
  } else if (X.rank() == 2 && axis == 0) {
    outer = X.dim(1), len = X.dim(0), stride = 1, step = X.dim(1);
  } else if (X.rank() == 2 && axis == 1) {
    outer = X.dim(0), len = X.dim(1), stride = X.dim(1), step = 1;
  } else {
    fail(ErrorKind::kDimension, "max axis out of range for " + shape_string(X.shape()));
  }
  if (len == 0) fail(ErrorKind::kDimension, "max over an empty axis");
  Tensor out({outer});
  std::vector<std::size_t> argmax(outer);
  std::vector<std::size_t> flat(outer);
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t best = 0;
    double bv = X[o * stride];
    for (std::size_t i = 1; i < len; ++i) {
      const double v = X[o * stride + i * step];
      if (v > bv) bv = v, best = i;
    }
    out[o] = bv;
    argmax[o] = best;
    flat[o] = o * stride + best * step;
  }
  Var values = tape.push(std::move(out), tape.needs(x.id), [ix = x.id, flat](Tape& t, std::uint32_t self) {
    const auto& g = t.grad_ref(self);
    auto& d = t.grad_buffer(ix);
    for (std::size_t o = 0; o < flat.size(); ++o) d[flat[o]] += g[o];
  });
  return MaxResult{values, std::move(argmax)};
}

Var dropout(Var x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) fail(ErrorKind::kConfig, "dropout rate must lie in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  Tape& tape = tape_of(x);
  const Tensor& X = x.value();
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> factor(X.size());
  Tensor Y(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) {
    factor[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    Y[i] = X[i] * factor[i];
  }
  return tape.push(std::move(Y), tape.needs(x.id), [ix = x.id, factor = std::move(factor)](Tape& t, std::uint32_t self) {
    const auto& g = t.grad_ref(self);
    auto& d = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * factor[i];
  });
}

Var cross_entropy(Var logits, std::size_t label) {
  Tape& tape = tape_of(logits);
  const Tensor& z = logits.value();
  if (z.rank() != 1 || z.size() < 2) fail(ErrorKind::kDimension, "cross_entropy needs ≥ 2 logits, got " + shape_string(z.shape()));
  if (label >= z.size()) {
    fail(ErrorKind::kInput, "label " + std::to_string(label) + " out of range for " + std::to_string(z.size()) + " classes");
  }
  const double mx = *std::max_element(z.data().begin(), z.data().end());
  double s = 0.0;
  for (double v : z.data()) s += std::exp(v - mx);
  const double log_z = mx + std::log(s);
  std::vector<double> probs(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) probs[i] = std::exp(z[i] - log_z);
  return tape.push(Tensor::scalar(log_z - z[label]), tape.needs(logits.id),
                   [il = logits.id, label, probs = std::move(probs)](Tape& t, std::uint32_t self) {
                     const double g = t.grad_ref(self)[0];
                     auto& d = t.grad_buffer(il);
                     for (std::size_t i = 0; i < probs.size(); ++i) d[i] += g * (probs[i] - (i == label ? 1.0 : 0.0));
                   });
}

Var embedding(Var table, std::span<const std::size_t> ids) {
  Tape& tape = tape_of(table);
  const Tensor& T = table.value();
  if (T.rank() != 2) fail(ErrorKind::kDimension, "embedding table must be a matrix");
  if (ids.empty()) fail(ErrorKind::kDimension, "embedding lookup of zero tokens");
  const std::size_t e = T.dim(1);
  Tensor out({ids.size(), e});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= T.dim(0)) fail(ErrorKind::kInput, "token id " + std::to_string(ids[i]) + " outside the table");
    std::copy_n(T.data().data() + ids[i] * e, e, out.data().data() + i * e);
  }
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  return tape.push(std::move(out), tape.needs(table.id), [it = table.id, idv = std::move(idv), e](Tape& t, std::uint32_t self) {
    const auto& g = t.grad_ref(self);
    auto& d = t.grad_buffer(it);
    for (std::size_t i = 0; i < idv.size(); ++i)
      for (std::size_t j = 0; j < e; ++j) d[idv[i] * e + j] += g[i * e + j];
  });
}

Var feature_norm(Var x, Var gamma, Var beta, double eps) {
  Tape& tape = tape_of(x);
  const Tensor& X = x.value();
  if (X.rank() != 2 || gamma.size() != X.dim(1) || beta.size() != X.dim(1)) {
    fail(ErrorKind::kDimension, "feature_norm shapes disagree with " + shape_string(X.shape()));
  }
  const std::size_t m = X.dim(0), n = X.dim(1);
  std::vector<double> inv_std(n);
  Tensor xhat(X.shape());
  for (std::size_t j = 0; j < n; ++j) {
    double mu = 0.0;
    for (std::size_t i = 0; i < m; ++i) mu += X[i * n + j];
    mu /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t i = 0; i < m; ++i) var += (X[i * n + j] - mu) * (X[i * n + j] - mu);
    var /= static_cast<double>(m);
    inv_std[j] = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < m; ++i) xhat[i * n + j] = (X[i * n + j] - mu) * inv_std[j];
  }
  const Tensor& G = gamma.value();
  const Tensor& B = beta.value();
  Tensor Y(X.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) Y[i * n + j] = G[j] * xhat[i * n + j] + B[j];
  const bool rg = tape.needs(x.id) || tape.needs(gamma.id) || tape.needs(beta.id);
  return tape.push(std::move(Y), rg,
                   [ix = x.id, ig = gamma.id, ib = beta.id, m, n, inv_std = std::move(inv_std),
                    xhat = std::move(xhat)](Tape& t, std::uint32_t self) {
                     const auto& g = t.grad_ref(self);
                     const Tensor& G = t.value_of(ig);
                     if (t.needs(ig) || t.needs(ib)) {
                       for (std::size_t j = 0; j < n; ++j) {
                         double dg = 0.0, db = 0.0;
                         for (std::size_t i = 0; i < m; ++i) {
                           dg += g[i * n + j] * xhat[i * n + j];
                           db += g[i * n + j];
                         }
                         if (t.needs(ig)) t.grad_buffer(ig)[j] += dg;
                         if (t.needs(ib)) t.grad_buffer(ib)[j] += db;
                       }
                     }
                     if (!t.needs(ix)) return;
                     auto& dX = t.grad_buffer(ix);
                     const double inv_m = 1.0 / static_cast<double>(m);
                     for (std::size_t j = 0; j < n; ++j) {
                       double s = 0.0, sx = 0.0;
                       for (std::size_t i = 0; i < m; ++i) {
                         const double dxh = g[i * n + j] * G[j];
                         s += dxh;
                         sx += dxh * xhat[i * n + j];
                       }
                       for (std::size_t i = 0; i < m; ++i) {
                         const double dxh = g[i * n + j] * G[j];
                         dX[i * n + j] += inv_std[j] * (dxh - inv_m * s - inv_m * xhat[i * n + j] * sx);
                       }
                     }
                   });
}

}  // namespace ad
}  // namespace wordfuse
