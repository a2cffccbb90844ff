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

#include "gpn/valuator.hpp"

#include <stdexcept>
#include <string>

#include "gpn/optim.hpp"

namespace gpn {

template <typename Real>
ValuatorParams<Real> ValuatorParams<Real>::init(std::size_t feature_dim, Rng& rng) {
  ValuatorParams p;
  p.w_s = Parameter<Real>("valuator.w_s", glorot_uniform<Real>(feature_dim, 1, rng));
  p.b_s = Parameter<Real>("valuator.b_s", Matrix<Real>(1, 1));
  p.a1 = Parameter<Real>("valuator.a1", glorot_uniform<Real>(2, 1, rng));
  p.a2 = Parameter<Real>("valuator.a2", glorot_uniform<Real>(2, 1, rng));
  return p;
}

template <typename Real>
ValuatorVars bind(Tape<Real>& t, ValuatorParams<Real>& p, bool trainable) {
  auto b = [&](Parameter<Real>& x) { return trainable ? t.parameter(x) : t.constant(x.value); };
  return ValuatorVars{b(p.w_s), b(p.b_s), b(p.a1), b(p.a2)};
}

template <typename Real>
Var initial_scores(Tape<Real>& t, Var features, Var w_s, Var b_s) {
  if (t.value(w_s).rows() != t.value(features).cols() || t.value(w_s).cols() != 1) {
    throw std::invalid_argument("initial_scores: w_s must be " +
                                shape_str(t.value(features).cols(), 1));
  }
  return activation(t, ActivationSpec::tanh(), affine(t, features, w_s, b_s));
}

template <typename Real>
Var score_aggregate(Tape<Real>& t, const SparseMatrix& neighborhood, Var scores, Var attn,
                    std::vector<Real>* attention) {
  const Matrix<Real>& s = t.value(scores);
  const Matrix<Real>& a = t.value(attn);
  if (s.cols() != 1 || s.rows() != neighborhood.rows) {
    throw std::invalid_argument("score_aggregate: scores must be " +
                                shape_str(neighborhood.rows, 1));
  }
  if (a.rows() != 2 || a.cols() != 1) {
    throw std::invalid_argument("score_aggregate: attention vector must be 2x1");
  }
  const Real a_self = a(0, 0);
  const Real a_nbr = a(1, 0);
  const Real slope = static_cast<Real>(kAttentionSlope);
  const std::size_t n = neighborhood.rows;

  std::vector<Real> pre(neighborhood.nnz());
  std::vector<Real> alpha(neighborhood.nnz());
  Matrix<Real> out(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = neighborhood.row_begin(i);
    const std::size_t hi = neighborhood.row_end(i);
    if (lo == hi) {
      throw std::invalid_argument("score_aggregate: neighbourhood of node " + std::to_string(i) +
                                  " is empty (self entry missing)");
    }
    Real mx = 0;
    for (std::size_t k = lo; k < hi; ++k) {
      pre[k] = a_self * s(i, 0) + a_nbr * s(neighborhood.col_indices[k], 0);
      const Real e = pre[k] > Real(0) ? pre[k] : slope * pre[k];
      alpha[k] = e;
      mx = (k == lo) ? e : std::max(mx, e);
    }
    Real total = 0;
    for (std::size_t k = lo; k < hi; ++k) {
      alpha[k] = std::exp(alpha[k] - mx);
      total += alpha[k];
    }
    Real acc = 0;
    for (std::size_t k = lo; k < hi; ++k) {
      alpha[k] /= total;
      acc += alpha[k] * s(neighborhood.col_indices[k], 0);
    }
    out(i, 0) = acc;
  }
  t.note_kinks(pre);
  if (attention != nullptr) *attention = alpha;
  if (!t.requires_grad(scores) && !t.requires_grad(attn)) return t.push(std::move(out), {});

  const SparseMatrix* nb = &neighborhood;
  return t.push(std::move(out), [nb, scores, attn, pre = std::move(pre), alpha = std::move(alpha)](
                                    Tape<Real>& tape, const Matrix<Real>& y,
                                    const Matrix<Real>& g) {
    const Matrix<Real>& sv = tape.value(scores);
    const Matrix<Real>& av = tape.value(attn);
    const Real a0 = av(0, 0);
    const Real a1 = av(1, 0);
    const Real slope_r = static_cast<Real>(kAttentionSlope);
    const bool gs_on = tape.requires_grad(scores);
    const bool ga_on = tape.requires_grad(attn);
    Real ga0 = 0;
    Real ga1 = 0;
    for (std::size_t i = 0; i < nb->rows; ++i) {
      const Real gi = g(i, 0);
      if (gi == Real(0)) continue;
      for (std::size_t k = nb->row_begin(i); k < nb->row_end(i); ++k) {
        const std::size_t j = nb->col_indices[k];
        // out_i = sum_j alpha_ij s_j; d out_i / d e_ij = alpha_ij (s_j - out_i)
        const Real de = gi * alpha[k] * (sv(j, 0) - y(i, 0));
        const Real du = de * (pre[k] > Real(0) ? Real(1) : slope_r);
        if (gs_on) {
          Matrix<Real>& gs = tape.grad_mut(scores);
          gs(j, 0) += gi * alpha[k] + du * a1;
          gs(i, 0) += du * a0;
        }
        ga0 += du * sv(i, 0);
        ga1 += du * sv(j, 0);
      }
    }
    if (ga_on) {
      Matrix<Real>& ga = tape.grad_mut(attn);
      ga(0, 0) += ga0;
      ga(1, 0) += ga1;
    }
  });
}

template <typename Real>
Var final_scores(Tape<Real>& t, Var last_scores, std::span<const double> centrality) {
  return activation(t, ActivationSpec::sigmoid(), scale_rows(t, last_scores, centrality));
}

template <typename Real>
Var valuate(Tape<Real>& t, const SparseMatrix& neighborhood, std::span<const double> centrality,
            Var features, const ValuatorVars& p) {
  Var s = initial_scores(t, features, p.w_s, p.b_s);
  s = score_aggregate(t, neighborhood, s, p.a1);
  s = score_aggregate(t, neighborhood, s, p.a2);
  return final_scores(t, s, centrality);
}

#define GPN_INSTANTIATE_VALUATOR(R)                                                          \
  template struct ValuatorParams<R>;                                                         \
  template ValuatorVars bind<R>(Tape<R>&, ValuatorParams<R>&, bool);                         \
  template Var initial_scores<R>(Tape<R>&, Var, Var, Var);                                   \
  template Var score_aggregate<R>(Tape<R>&, const SparseMatrix&, Var, Var, std::vector<R>*); \
  template Var final_scores<R>(Tape<R>&, Var, std::span<const double>);                      \
  template Var valuate<R>(Tape<R>&, const SparseMatrix&, std::span<const double>, Var,      \
                          const ValuatorVars&);

GPN_INSTANTIATE_VALUATOR(float)
GPN_INSTANTIATE_VALUATOR(double)

#undef GPN_INSTANTIATE_VALUATOR

}  // namespace gpn
