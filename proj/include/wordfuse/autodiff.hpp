#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "wordfuse/parameter.hpp"
#include "wordfuse/rng.hpp"
#include "wordfuse/tensor.hpp"

namespace wordfuse {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  double item() const;
};

using Mask = std::vector<std::uint8_t>;

// Records forward operations in execution order; backward() replays adjoints
// in strict reverse order. Gradients of parameter leaves are accumulated into
// Parameter::grad by accumulate_parameter_grads().
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf that receives a gradient but is not bound to a Parameter.
  Var input(Tensor value);
  // Each Parameter gets a single leaf per tape; repeated calls return it.
  Var parameter(Parameter& p);

  void backward(Var loss);
  void accumulate_parameter_grads(double scale = 1.0);

  const Tensor& value(Var v) const;
  // Zeros when no adjoint reached v.
  std::vector<double> grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Op-implementation interface.
  Var push(Tensor value, bool requires_grad, BackwardFn fn);
  std::vector<double>& grad_buffer(std::uint32_t id);
  bool has_grad(std::uint32_t id) const { return !nodes_[id].grad.empty(); }
  const std::vector<double>& grad_ref(std::uint32_t id) const { return nodes_[id].grad; }
  bool needs(std::uint32_t id) const { return nodes_[id].requires_grad; }
  const Tensor& value_of(std::uint32_t id) const;

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    std::vector<double> grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_leaf_;
};

namespace ad {

// a [m×k] · b [k×n]. Rank-1 operands are treated as a row (left) or column
// (right) vector and the result keeps rank 1.
Var matmul(Var a, Var b);
// a [m×k] · bᵀ where b is [n×k].
Var matmul_nt(Var a, Var b);

enum class Unary { kTanh, kSigmoid, kRelu };
enum class Binary { kAdd, kSub, kMul };

// Binary ops accept identical shapes or a size-1 operand broadcast as a scalar.
Var elementwise(Binary op, Var a, Var b);
Var elementwise(Unary op, Var x);
inline Var add(Var a, Var b) { return elementwise(Binary::kAdd, a, b); }
inline Var sub(Var a, Var b) { return elementwise(Binary::kSub, a, b); }
inline Var mul(Var a, Var b) { return elementwise(Binary::kMul, a, b); }
inline Var tanh(Var x) { return elementwise(Unary::kTanh, x); }
inline Var sigmoid(Var x) { return elementwise(Unary::kSigmoid, x); }
inline Var relu(Var x) { return elementwise(Unary::kRelu, x); }
Var scale(Var x, double factor);

// X [m×n] + b [n] added to every row; rank-1 X behaves like add().
Var add_bias(Var x, Var bias);
// alpha [m] scales row i of X [m×n] by alpha_i.
Var scale_rows(Var alpha, Var x);

Var sum(Var x);
Var masked_softmax(Var energies, const Mask& mask);
Var softmax(Var energies);

Var concat(const std::vector<Var>& parts, std::size_t axis);
// Rank-1 vectors of equal length stacked into [n×d].
Var stack(const std::vector<Var>& rows);
Var slice(Var x, std::size_t start, std::size_t length);
Var row(Var x, std::size_t r);
Var rows(Var x, std::size_t start, std::size_t count);
// Appends zero rows until X has total_rows rows.
Var pad_rows(Var x, std::size_t total_rows);
// Row i of the result is rows i..i+width-1 of X flattened: [(m−width+1) × width·n].
Var unfold_rows(Var x, std::size_t width);

struct MaxResult {
  Var values;
  std::vector<std::size_t> argmax;
};
// axis 0 of a matrix reduces over rows (one value per column); rank-1 input
// reduces to a single value. Ties go to the lowest index.
MaxResult max_over_axis(Var x, std::size_t axis);

// Inverted dropout. With training=false (or rate 0) the input is returned as is.
Var dropout(Var x, double rate, bool training, Rng& rng);

Var cross_entropy(Var logits, std::size_t label);

// Rows of table selected by ids: [ids.size() × table.cols].
Var embedding(Var table, std::span<const std::size_t> ids);

// Normalizes each column of X over its rows, then applies gamma/beta.
Var feature_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

}  // namespace ad
}  // namespace wordfuse
