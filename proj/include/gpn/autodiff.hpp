// Copyright 2026 The GPN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Reverse-mode differentiation over a fixed set of dense/sparse primitives.
//
// A Tape records every primitive applied during a forward pass together with
// a closure that propagates the output gradient to its inputs. Parameters are
// leaves bound to external storage; Tape::backward() accumulates into
// Parameter::grad. Sparse operands (the propagation matrix, neighbourhood
// patterns) are treated as constants and must outlive the tape.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gpn/graph.hpp"
#include "gpn/random.hpp"
#include "gpn/tensor.hpp"

namespace gpn {

template <typename Real>
struct Parameter {
  std::string name;
  Matrix<Real> value;
  Matrix<Real> grad;

  Parameter() = default;
  Parameter(std::string n, Matrix<Real> v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}
  void zero_grad() { grad = Matrix<Real>(value.rows(), value.cols()); }
};

struct Var {
  static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
  std::size_t id = kInvalid;
  bool valid() const { return id != kInvalid; }
};

template <typename Real>
class Tape {
 public:
  // Receives the node's own forward value and its accumulated gradient.
  using BackwardFn =
      std::function<void(Tape&, const Matrix<Real>& out_value, const Matrix<Real>& out_grad)>;

  Var constant(Matrix<Real> value);
  Var parameter(Parameter<Real>& p);
  // Records a node produced by a primitive. `backward` may be empty for
  // nodes that do not depend on any differentiable input.
  Var push(Matrix<Real> value, BackwardFn backward);

  const Matrix<Real>& value(Var v) const;
  // True for parameters and for nodes that depend on one.
  bool requires_grad(Var v) const;
  // Gradient of the last backward() target wrt `v`; zero-filled if unreached.
  const Matrix<Real>& grad(Var v) const;
  // Accumulation target for primitives; allocates on first use.
  Matrix<Real>& grad_mut(Var v);

  // Runs reverse accumulation from a 1x1 loss and adds into every bound
  // Parameter's grad. Throws std::logic_error if nothing was recorded or the
  // loss is not on this tape, std::invalid_argument for a non-scalar loss.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  // Folds the sign pattern of a piecewise-linear activation's input into a
  // running hash. Two forward passes with equal signatures lie in the same
  // differentiable region, which finite-difference checks rely on.
  void note_kinks(std::span<const Real> pre_activation, Real knot = Real(0));
  std::uint64_t kink_signature() const { return kink_signature_; }

 private:
  struct Node {
    Matrix<Real> value;
    Matrix<Real> grad;
    BackwardFn backward;
    Parameter<Real>* param = nullptr;
    bool requires_grad = false;
  };
  Node& node(Var v);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  std::uint64_t kink_signature_ = 0xcbf29ce484222325ULL;
};

struct ActivationSpec {
  enum class Kind { kRelu, kTanh, kSigmoid, kLeakyRelu };
  Kind kind = Kind::kRelu;
  double slope = 0.0;

  static ActivationSpec relu() { return {Kind::kRelu, 0.0}; }
  static ActivationSpec tanh() { return {Kind::kTanh, 0.0}; }
  static ActivationSpec sigmoid() { return {Kind::kSigmoid, 0.0}; }
  static ActivationSpec leaky_relu(double slope) { return {Kind::kLeakyRelu, slope}; }
};

// ---- Eager kernels ---------------------------------------------------------

template <typename Real>
Matrix<Real> spmm(const SparseMatrix& s, const Matrix<Real>& d);

// X W (+ b broadcast over rows when `b` is non-null).
template <typename Real>
Matrix<Real> affine(const Matrix<Real>& x, const Matrix<Real>& w, const Matrix<Real>* b = nullptr);

template <typename Real>
Real activate(const ActivationSpec& spec, Real x);
// Derivative wrt the input, evaluated at the input `x`.
template <typename Real>
Real activate_grad(const ActivationSpec& spec, Real x);

// Softmax of logits[mask[i]] for each i; result has mask.size() entries.
// Stabilised by subtracting the max over the mask.
template <typename Real>
std::vector<Real> masked_softmax(std::span<const Real> logits, std::span<const std::size_t> mask);

// ||a - B_i||^2 for every row i of B.
template <typename Real>
std::vector<Real> sq_euclid(std::span<const Real> a, const Matrix<Real>& b);

// ---- Recorded primitives ---------------------------------------------------

template <typename Real>
Var spmm(Tape<Real>& t, const SparseMatrix& s, Var d);

template <typename Real>
Var affine(Tape<Real>& t, Var x, Var w);

template <typename Real>
Var affine(Tape<Real>& t, Var x, Var w, Var b);

template <typename Real>
Var add_bias(Tape<Real>& t, Var y, Var b);

template <typename Real>
Var activation(Tape<Real>& t, const ActivationSpec& spec, Var x);

// Inverted dropout: survivors are scaled by 1 / (1 - rate). Identity when
// `training` is false or rate is 0. Throws for rate outside [0, 1).
template <typename Real>
Var dropout(Tape<Real>& t, Var x, double rate, bool training, Rng& rng);

template <typename Real>
Var scale(Tape<Real>& t, Var x, Real factor);

// Row i multiplied by the constant factors[i].
template <typename Real>
Var scale_rows(Tape<Real>& t, Var x, std::span<const double> factors);

template <typename Real>
Var gather_rows(Tape<Real>& t, Var x, std::span<const std::size_t> rows);

// Softmax of a column vector taken independently within each group of row ids.
template <typename Real>
Var group_softmax(Tape<Real>& t, Var scores, const std::vector<std::vector<std::size_t>>& groups);

// Output row g = sum over i in groups[g] of weights[i] * x[i].
template <typename Real>
Var group_weighted_sum(Tape<Real>& t, Var x, Var weights,
                       const std::vector<std::vector<std::size_t>>& groups);

// Output (i, j) = ||a_i - b_j||^2.
template <typename Real>
Var pairwise_sq_euclid(Tape<Real>& t, Var a, Var b);

// Mean over rows of -log softmax(logits_i)[targets[i]]. Writes the row-wise
// softmax into `probs` when non-null.
template <typename Real>
Var softmax_nll(Tape<Real>& t, Var logits, std::span<const std::size_t> targets,
                Matrix<Real>* probs = nullptr);

template <typename Real>
Var sum(Tape<Real>& t, Var x);

template <typename Real>
Var squared_norm(Tape<Real>& t, Var x);

}  // namespace gpn
