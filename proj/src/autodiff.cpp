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

#include "gpn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gpn {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

// ---- Tape ------------------------------------------------------------------

template <typename Real>
typename Tape<Real>::Node& Tape<Real>::node(Var v) {
  if (!v.valid() || v.id >= nodes_.size()) throw std::logic_error("Var does not belong to this tape");
  return nodes_[v.id];
}

template <typename Real>
const typename Tape<Real>::Node& Tape<Real>::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw std::logic_error("Var does not belong to this tape");
  return nodes_[v.id];
}

template <typename Real>
Var Tape<Real>::constant(Matrix<Real> value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var{nodes_.size() - 1};
}

template <typename Real>
Var Tape<Real>::parameter(Parameter<Real>& p) {
  nodes_.push_back(Node{p.value, {}, {}, &p, true});
  return Var{nodes_.size() - 1};
}

template <typename Real>
Var Tape<Real>::push(Matrix<Real> value, BackwardFn backward) {
  const bool rg = static_cast<bool>(backward);
  nodes_.push_back(Node{std::move(value), {}, std::move(backward), nullptr, rg});
  return Var{nodes_.size() - 1};
}

template <typename Real>
const Matrix<Real>& Tape<Real>::value(Var v) const {
  return node(v).value;
}

template <typename Real>
bool Tape<Real>::requires_grad(Var v) const {
  return node(v).requires_grad;
}

template <typename Real>
const Matrix<Real>& Tape<Real>::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.empty() && !n.value.empty()) {
    const_cast<Node&>(n).grad = Matrix<Real>(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

template <typename Real>
Matrix<Real>& Tape<Real>::grad_mut(Var v) {
  Node& n = node(v);
  if (n.grad.empty()) n.grad = Matrix<Real>(n.value.rows(), n.value.cols());
  return n.grad;
}

template <typename Real>
void Tape<Real>::backward(Var loss) {
  if (nodes_.empty()) throw std::logic_error("backward called before any forward computation");
  Node& root = node(loss);
  require(root.value.rows() == 1 && root.value.cols() == 1,
          "backward requires a scalar loss, got shape " +
              shape_str(root.value.rows(), root.value.cols()));
  for (auto& n : nodes_) n.grad = Matrix<Real>();
  root.grad = Matrix<Real>(1, 1, Real(1));
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    if (n.backward) n.backward(*this, n.value, n.grad);
    if (n.param != nullptr) {
      auto dst = n.param->grad.values();
      auto src = n.grad.values();
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
    }
  }
}

template <typename Real>
void Tape<Real>::note_kinks(std::span<const Real> pre_activation, Real knot) {
  std::uint64_t h = kink_signature_;
  for (Real x : pre_activation) {
    h ^= (x > knot) ? 0x9fu : 0x35u;
    h *= 0x100000001b3ULL;
  }
  kink_signature_ = h;
}

// ---- Eager kernels ---------------------------------------------------------

template <typename Real>
Matrix<Real> spmm(const SparseMatrix& s, const Matrix<Real>& d) {
  require(s.cols == d.rows(), "spmm: sparse " + shape_str(s.rows, s.cols) + " times dense " +
                                  shape_str(d.rows(), d.cols()));
  Matrix<Real> out(s.rows, d.cols());
  for (std::size_t i = 0; i < s.rows; ++i) {
    auto dst = out.row(i);
    for (std::size_t k = s.row_begin(i); k < s.row_end(i); ++k) {
      const Real v = static_cast<Real>(s.values[k]);
      auto src = d.row(s.col_indices[k]);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += v * src[c];
    }
  }
  return out;
}

template <typename Real>
Matrix<Real> affine(const Matrix<Real>& x, const Matrix<Real>& w, const Matrix<Real>* b) {
  require(x.cols() == w.rows(), "affine: input " + shape_str(x.rows(), x.cols()) +
                                    " incompatible with weight " + shape_str(w.rows(), w.cols()));
  if (b != nullptr) {
    require(b->rows() == 1 && b->cols() == w.cols(),
            "affine: bias must be 1x" + std::to_string(w.cols()));
  }
  Matrix<Real> out(x.rows(), w.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto dst = out.row(i);
    if (b != nullptr) std::copy(b->row(0).begin(), b->row(0).end(), dst.begin());
    for (std::size_t k = 0; k < x.cols(); ++k) {
      const Real xv = x(i, k);
      if (xv == Real(0)) continue;
      auto wr = w.row(k);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += xv * wr[c];
    }
  }
  return out;
}

template <typename Real>
Real activate(const ActivationSpec& spec, Real x) {
  switch (spec.kind) {
    case ActivationSpec::Kind::kRelu:
      return x > Real(0) ? x : Real(0);
    case ActivationSpec::Kind::kLeakyRelu:
      return x > Real(0) ? x : static_cast<Real>(spec.slope) * x;
    case ActivationSpec::Kind::kTanh:
      return std::tanh(x);
    case ActivationSpec::Kind::kSigmoid:
      return x >= Real(0) ? Real(1) / (Real(1) + std::exp(-x))
                          : std::exp(x) / (Real(1) + std::exp(x));
  }
  return x;
}

template <typename Real>
Real activate_grad(const ActivationSpec& spec, Real x) {
  switch (spec.kind) {
    case ActivationSpec::Kind::kRelu:
      return x > Real(0) ? Real(1) : Real(0);
    case ActivationSpec::Kind::kLeakyRelu:
      return x > Real(0) ? Real(1) : static_cast<Real>(spec.slope);
    case ActivationSpec::Kind::kTanh: {
      const Real y = std::tanh(x);
      return Real(1) - y * y;
    }
    case ActivationSpec::Kind::kSigmoid: {
      const Real y = activate(spec, x);
      return y * (Real(1) - y);
    }
  }
  return Real(1);
}

template <typename Real>
std::vector<Real> masked_softmax(std::span<const Real> logits, std::span<const std::size_t> mask) {
  require(!mask.empty(), "masked_softmax: empty mask");
  Real mx = logits[mask[0]];
  for (std::size_t i : mask) {
    require(i < logits.size(), "masked_softmax: mask index out of range");
    mx = std::max(mx, logits[i]);
  }
  std::vector<Real> out(mask.size());
  Real total = 0;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    out[k] = std::exp(logits[mask[k]] - mx);
    total += out[k];
  }
  for (Real& v : out) v /= total;
  return out;
}

template <typename Real>
std::vector<Real> sq_euclid(std::span<const Real> a, const Matrix<Real>& b) {
  require(a.size() == b.cols(), "sq_euclid: vector of length " + std::to_string(a.size()) +
                                    " against rows of length " + std::to_string(b.cols()));
  std::vector<Real> out(b.rows());
  for (std::size_t i = 0; i < b.rows(); ++i) {
    Real acc = 0;
    auto r = b.row(i);
    for (std::size_t c = 0; c < a.size(); ++c) {
      const Real diff = a[c] - r[c];
      acc += diff * diff;
    }
    out[i] = acc;
  }
  return out;
}

// ---- Recorded primitives ---------------------------------------------------

namespace {

template <typename Real>
bool any_grad(const Tape<Real>& t, std::initializer_list<Var> vars) {
  for (Var v : vars) {
    if (t.requires_grad(v)) return true;
  }
  return false;
}

template <typename Real>
void affine_backward(Tape<Real>& tape, const Matrix<Real>& g, Var x, Var w) {
  const Matrix<Real>& xv = tape.value(x);
  const Matrix<Real>& wv = tape.value(w);
  if (tape.requires_grad(w)) {
    Matrix<Real>& gw = tape.grad_mut(w);
    for (std::size_t i = 0; i < xv.rows(); ++i) {
      auto gi = g.row(i);
      for (std::size_t k = 0; k < xv.cols(); ++k) {
        const Real xik = xv(i, k);
        if (xik == Real(0)) continue;
        auto dst = gw.row(k);
        for (std::size_t c = 0; c < gi.size(); ++c) dst[c] += xik * gi[c];
      }
    }
  }
  if (!tape.requires_grad(x)) return;
  Matrix<Real>& gx = tape.grad_mut(x);
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    auto gi = g.row(i);
    for (std::size_t k = 0; k < xv.cols(); ++k) {
      auto wr = wv.row(k);
      Real acc = 0;
      for (std::size_t c = 0; c < gi.size(); ++c) acc += gi[c] * wr[c];
      gx(i, k) += acc;
    }
  }
}

template <typename Real>
void bias_backward(Tape<Real>& tape, const Matrix<Real>& g, Var b) {
  if (!tape.requires_grad(b)) return;
  Matrix<Real>& gb = tape.grad_mut(b);
  for (std::size_t i = 0; i < g.rows(); ++i) {
    auto gi = g.row(i);
    for (std::size_t c = 0; c < gi.size(); ++c) gb(0, c) += gi[c];
  }
}

template <typename Real>
void accumulate(Tape<Real>& tape, Var x, const Matrix<Real>& g) {
  auto gx = tape.grad_mut(x).values();
  for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g.values()[i];
}

}  // namespace

template <typename Real>
Var spmm(Tape<Real>& t, const SparseMatrix& s, Var d) {
  Matrix<Real> out = spmm(s, t.value(d));
  if (!t.requires_grad(d)) return t.push(std::move(out), {});
  const SparseMatrix* sp = &s;
  return t.push(std::move(out), [sp, d](Tape<Real>& tape, const Matrix<Real>&,
                                        const Matrix<Real>& g) {
    // grad_D = S^T g
    Matrix<Real>& gd = tape.grad_mut(d);
    for (std::size_t i = 0; i < sp->rows; ++i) {
      auto gi = g.row(i);
      for (std::size_t k = sp->row_begin(i); k < sp->row_end(i); ++k) {
        const Real v = static_cast<Real>(sp->values[k]);
        auto dst = gd.row(sp->col_indices[k]);
        for (std::size_t c = 0; c < gi.size(); ++c) dst[c] += v * gi[c];
      }
    }
  });
}

template <typename Real>
Var affine(Tape<Real>& t, Var x, Var w) {
  Matrix<Real> out = affine(t.value(x), t.value(w));
  if (!any_grad(t, {x, w})) return t.push(std::move(out), {});
  return t.push(std::move(out), [x, w](Tape<Real>& tape, const Matrix<Real>&,
                                       const Matrix<Real>& g) { affine_backward(tape, g, x, w); });
}

template <typename Real>
Var affine(Tape<Real>& t, Var x, Var w, Var b) {
  Matrix<Real> out = affine(t.value(x), t.value(w), &t.value(b));
  if (!any_grad(t, {x, w, b})) return t.push(std::move(out), {});
  return t.push(std::move(out),
                [x, w, b](Tape<Real>& tape, const Matrix<Real>&, const Matrix<Real>& g) {
                  affine_backward(tape, g, x, w);
                  bias_backward(tape, g, b);
                });
}

template <typename Real>
Var add_bias(Tape<Real>& t, Var y, Var b) {
  const Matrix<Real>& yv = t.value(y);
  const Matrix<Real>& bv = t.value(b);
  require(bv.rows() == 1 && bv.cols() == yv.cols(),
          "add_bias: bias must be 1x" + std::to_string(yv.cols()));
  Matrix<Real> out = yv;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t c = 0; c < r.size(); ++c) r[c] += bv(0, c);
  }
  if (!any_grad(t, {y, b})) return t.push(std::move(out), {});
  return t.push(std::move(out), [y, b](Tape<Real>& tape, const Matrix<Real>&,
                                       const Matrix<Real>& g) {
    if (tape.requires_grad(y)) accumulate(tape, y, g);
    bias_backward(tape, g, b);
  });
}

template <typename Real>
Var activation(Tape<Real>& t, const ActivationSpec& spec, Var x) {
  const Matrix<Real>& xv = t.value(x);
  if (spec.kind == ActivationSpec::Kind::kRelu || spec.kind == ActivationSpec::Kind::kLeakyRelu) {
    t.note_kinks(xv.values());
  }
  Matrix<Real> out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.size(); ++i) out.values()[i] = activate(spec, xv.values()[i]);
  if (!t.requires_grad(x)) return t.push(std::move(out), {});
  return t.push(std::move(out), [spec, x](Tape<Real>& tape, const Matrix<Real>&,
                                          const Matrix<Real>& g) {
    const auto xs = tape.value(x).values();
    auto gx = tape.grad_mut(x).values();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g.values()[i] * activate_grad(spec, xs[i]);
  });
}

template <typename Real>
Var dropout(Tape<Real>& t, Var x, double rate, bool training, Rng& rng) {
  require(rate >= 0.0 && rate < 1.0,
          "dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  const Matrix<Real>& xv = t.value(x);
  Matrix<Real> mask(xv.rows(), xv.cols());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate));
  for (Real& m : mask.values()) m = u(rng) < rate ? Real(0) : keep_scale;
  Matrix<Real> out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = xv.values()[i] * mask.values()[i];
  if (!t.requires_grad(x)) return t.push(std::move(out), {});
  return t.push(std::move(out), [x, mask = std::move(mask)](Tape<Real>& tape, const Matrix<Real>&,
                                                            const Matrix<Real>& g) {
    auto gx = tape.grad_mut(x).values();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g.values()[i] * mask.values()[i];
  });
}

template <typename Real>
Var scale(Tape<Real>& t, Var x, Real factor) {
  Matrix<Real> out = t.value(x);
  for (Real& v : out.values()) v *= factor;
  if (!t.requires_grad(x)) return t.push(std::move(out), {});
  return t.push(std::move(out), [x, factor](Tape<Real>& tape, const Matrix<Real>&,
                                            const Matrix<Real>& g) {
    auto gx = tape.grad_mut(x).values();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += factor * g.values()[i];
  });
}

template <typename Real>
Var scale_rows(Tape<Real>& t, Var x, std::span<const double> factors) {
  const Matrix<Real>& xv = t.value(x);
  require(factors.size() == xv.rows(), "scale_rows: expected " + std::to_string(xv.rows()) +
                                           " factors, got " + std::to_string(factors.size()));
  Matrix<Real> out = xv;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (Real& v : out.row(i)) v *= static_cast<Real>(factors[i]);
  }
  if (!t.requires_grad(x)) return t.push(std::move(out), {});
  std::vector<double> f(factors.begin(), factors.end());
  return t.push(std::move(out), [x, f = std::move(f)](Tape<Real>& tape, const Matrix<Real>&,
                                                      const Matrix<Real>& g) {
    Matrix<Real>& gx = tape.grad_mut(x);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      for (std::size_t c = 0; c < g.cols(); ++c) gx(i, c) += static_cast<Real>(f[i]) * g(i, c);
    }
  });
}

template <typename Real>
Var gather_rows(Tape<Real>& t, Var x, std::span<const std::size_t> rows) {
  const Matrix<Real>& xv = t.value(x);
  Matrix<Real> out(rows.size(), xv.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    require(rows[k] < xv.rows(), "gather_rows: row " + std::to_string(rows[k]) + " out of range");
    std::copy(xv.row(rows[k]).begin(), xv.row(rows[k]).end(), out.row(k).begin());
  }
  if (!t.requires_grad(x)) return t.push(std::move(out), {});
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return t.push(std::move(out), [x, idx = std::move(idx)](Tape<Real>& tape, const Matrix<Real>&,
                                                          const Matrix<Real>& g) {
    Matrix<Real>& gx = tape.grad_mut(x);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      auto dst = gx.row(idx[k]);
      auto src = g.row(k);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  });
}

template <typename Real>
Var group_softmax(Tape<Real>& t, Var scores, const std::vector<std::vector<std::size_t>>& groups) {
  const Matrix<Real>& sv = t.value(scores);
  require(sv.cols() == 1, "group_softmax: scores must be a column vector");
  Matrix<Real> out(sv.rows(), 1);
  for (const auto& grp : groups) {
    require(!grp.empty(), "group_softmax: empty group");
    const auto w = masked_softmax<Real>(sv.values(), grp);
    for (std::size_t k = 0; k < grp.size(); ++k) out(grp[k], 0) = w[k];
  }
  if (!t.requires_grad(scores)) return t.push(std::move(out), {});
  return t.push(std::move(out), [scores, groups](Tape<Real>& tape, const Matrix<Real>& y,
                                                 const Matrix<Real>& g) {
    // d s_i = y_i (g_i - sum_j y_j g_j) within the group
    Matrix<Real>& gs = tape.grad_mut(scores);
    for (const auto& grp : groups) {
      Real dot = 0;
      for (std::size_t i : grp) dot += y(i, 0) * g(i, 0);
      for (std::size_t i : grp) gs(i, 0) += y(i, 0) * (g(i, 0) - dot);
    }
  });
}

template <typename Real>
Var group_weighted_sum(Tape<Real>& t, Var x, Var weights,
                       const std::vector<std::vector<std::size_t>>& groups) {
  const Matrix<Real>& xv = t.value(x);
  const Matrix<Real>& wv = t.value(weights);
  require(wv.cols() == 1 && wv.rows() == xv.rows(),
          "group_weighted_sum: weights must be " + shape_str(xv.rows(), 1));
  Matrix<Real> out(groups.size(), xv.cols());
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    require(!groups[gi].empty(), "group_weighted_sum: empty group");
    auto dst = out.row(gi);
    for (std::size_t i : groups[gi]) {
      require(i < xv.rows(), "group_weighted_sum: row index out of range");
      auto src = xv.row(i);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += wv(i, 0) * src[c];
    }
  }
  if (!any_grad(t, {x, weights})) return t.push(std::move(out), {});
  return t.push(std::move(out), [x, weights, groups](Tape<Real>& tape, const Matrix<Real>&,
                                                     const Matrix<Real>& g) {
    const Matrix<Real>& xs = tape.value(x);
    const Matrix<Real>& ws = tape.value(weights);
    const bool gx_on = tape.requires_grad(x);
    const bool gw_on = tape.requires_grad(weights);
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      auto go = g.row(gi);
      for (std::size_t i : groups[gi]) {
        if (gx_on) {
          auto dst = tape.grad_mut(x).row(i);
          for (std::size_t c = 0; c < go.size(); ++c) dst[c] += ws(i, 0) * go[c];
        }
        if (gw_on) {
          Real dot = 0;
          auto xr = xs.row(i);
          for (std::size_t c = 0; c < go.size(); ++c) dot += xr[c] * go[c];
          tape.grad_mut(weights)(i, 0) += dot;
        }
      }
    }
  });
}

template <typename Real>
Var pairwise_sq_euclid(Tape<Real>& t, Var a, Var b) {
  const Matrix<Real>& av = t.value(a);
  const Matrix<Real>& bv = t.value(b);
  require(av.cols() == bv.cols(), "pairwise_sq_euclid: dimension mismatch " +
                                      std::to_string(av.cols()) + " vs " +
                                      std::to_string(bv.cols()));
  Matrix<Real> out(av.rows(), bv.rows());
  for (std::size_t i = 0; i < av.rows(); ++i) {
    const auto d = sq_euclid<Real>(av.row(i), bv);
    std::copy(d.begin(), d.end(), out.row(i).begin());
  }
  if (!any_grad(t, {a, b})) return t.push(std::move(out), {});
  return t.push(std::move(out), [a, b](Tape<Real>& tape, const Matrix<Real>&,
                                       const Matrix<Real>& g) {
    const Matrix<Real>& as = tape.value(a);
    const Matrix<Real>& bs = tape.value(b);
    const bool ga_on = tape.requires_grad(a);
    const bool gb_on = tape.requires_grad(b);
    for (std::size_t i = 0; i < as.rows(); ++i) {
      for (std::size_t j = 0; j < bs.rows(); ++j) {
        const Real gij = Real(2) * g(i, j);
        if (gij == Real(0)) continue;
        for (std::size_t c = 0; c < as.cols(); ++c) {
          const Real diff = as(i, c) - bs(j, c);
          if (ga_on) tape.grad_mut(a)(i, c) += gij * diff;
          if (gb_on) tape.grad_mut(b)(j, c) -= gij * diff;
        }
      }
    }
  });
}

template <typename Real>
Var softmax_nll(Tape<Real>& t, Var logits, std::span<const std::size_t> targets,
                Matrix<Real>* probs) {
  const Matrix<Real>& lv = t.value(logits);
  require(targets.size() == lv.rows(), "softmax_nll: " + std::to_string(targets.size()) +
                                           " targets for " + std::to_string(lv.rows()) + " rows");
  require(lv.rows() > 0 && lv.cols() > 0, "softmax_nll: empty logits");
  Matrix<Real> p(lv.rows(), lv.cols());
  Real loss = 0;
  for (std::size_t i = 0; i < lv.rows(); ++i) {
    require(targets[i] < lv.cols(), "softmax_nll: target out of range");
    auto row = lv.row(i);
    const Real mx = *std::max_element(row.begin(), row.end());
    Real total = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      p(i, c) = std::exp(row[c] - mx);
      total += p(i, c);
    }
    for (std::size_t c = 0; c < row.size(); ++c) p(i, c) /= total;
    // log-sum-exp form keeps the log finite even if p underflows
    loss -= row[targets[i]] - mx - std::log(total);
  }
  loss /= static_cast<Real>(lv.rows());
  if (probs != nullptr) *probs = p;
  if (!t.requires_grad(logits)) return t.push(Matrix<Real>(1, 1, loss), {});
  std::vector<std::size_t> tg(targets.begin(), targets.end());
  return t.push(Matrix<Real>(1, 1, loss),
                [logits, tg = std::move(tg), p = std::move(p)](
                    Tape<Real>& tape, const Matrix<Real>&, const Matrix<Real>& g) {
                  Matrix<Real>& gl = tape.grad_mut(logits);
                  const Real scale = g(0, 0) / static_cast<Real>(p.rows());
                  for (std::size_t i = 0; i < p.rows(); ++i) {
                    for (std::size_t c = 0; c < p.cols(); ++c) {
                      gl(i, c) += scale * (p(i, c) - (c == tg[i] ? Real(1) : Real(0)));
                    }
                  }
                });
}

template <typename Real>
Var sum(Tape<Real>& t, Var x) {
  Real acc = 0;
  for (Real v : t.value(x).values()) acc += v;
  if (!t.requires_grad(x)) return t.push(Matrix<Real>(1, 1, acc), {});
  return t.push(Matrix<Real>(1, 1, acc), [x](Tape<Real>& tape, const Matrix<Real>&,
                                             const Matrix<Real>& g) {
    for (Real& v : tape.grad_mut(x).values()) v += g(0, 0);
  });
}

template <typename Real>
Var squared_norm(Tape<Real>& t, Var x) {
  Real acc = 0;
  for (Real v : t.value(x).values()) acc += v * v;
  if (!t.requires_grad(x)) return t.push(Matrix<Real>(1, 1, acc), {});
  return t.push(Matrix<Real>(1, 1, acc), [x](Tape<Real>& tape, const Matrix<Real>&,
                                             const Matrix<Real>& g) {
    const auto xs = tape.value(x).values();
    auto gx = tape.grad_mut(x).values();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += Real(2) * xs[i] * g(0, 0);
  });
}

#define GPN_INSTANTIATE_AUTODIFF(R)                                                              \
  template class Tape<R>;                                                                        \
  template Matrix<R> spmm<R>(const SparseMatrix&, const Matrix<R>&);                             \
  template Matrix<R> affine<R>(const Matrix<R>&, const Matrix<R>&, const Matrix<R>*);            \
  template R activate<R>(const ActivationSpec&, R);                                              \
  template R activate_grad<R>(const ActivationSpec&, R);                                         \
  template std::vector<R> masked_softmax<R>(std::span<const R>, std::span<const std::size_t>);   \
  template std::vector<R> sq_euclid<R>(std::span<const R>, const Matrix<R>&);                    \
  template Var spmm<R>(Tape<R>&, const SparseMatrix&, Var);                                      \
  template Var affine<R>(Tape<R>&, Var, Var);                                                    \
  template Var affine<R>(Tape<R>&, Var, Var, Var);                                               \
  template Var add_bias<R>(Tape<R>&, Var, Var);                                                  \
  template Var activation<R>(Tape<R>&, const ActivationSpec&, Var);                              \
  template Var dropout<R>(Tape<R>&, Var, double, bool, Rng&);                                    \
  template Var scale<R>(Tape<R>&, Var, R);                                                       \
  template Var scale_rows<R>(Tape<R>&, Var, std::span<const double>);                            \
  template Var gather_rows<R>(Tape<R>&, Var, std::span<const std::size_t>);                      \
  template Var group_softmax<R>(Tape<R>&, Var, const std::vector<std::vector<std::size_t>>&);    \
  template Var group_weighted_sum<R>(Tape<R>&, Var, Var,                                         \
                                     const std::vector<std::vector<std::size_t>>&);              \
  template Var pairwise_sq_euclid<R>(Tape<R>&, Var, Var);                                        \
  template Var softmax_nll<R>(Tape<R>&, Var, std::span<const std::size_t>, Matrix<R>*);          \
  template Var sum<R>(Tape<R>&, Var);                                                            \
  template Var squared_norm<R>(Tape<R>&, Var);

GPN_INSTANTIATE_AUTODIFF(float)
GPN_INSTANTIATE_AUTODIFF(double)

#undef GPN_INSTANTIATE_AUTODIFF

}  // namespace gpn
