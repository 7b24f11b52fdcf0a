#pragma once

// Shared helpers for the unit and acceptance tests: random inputs and naive
// reference implementations written independently of the library kernels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hgl/cvm.hpp"
#include "hgl/hetgraph.hpp"
#include "hgl/instance.hpp"
#include "hgl/mlp.hpp"
#include "hgl/parameter_store.hpp"
#include "hgl/tensor.hpp"

namespace hgl::test {

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& gen, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = dist(gen);
  return Tensor({rows, cols}, std::move(v));
}

/// Overwrites every parameter with uniform values in [lo, hi].
inline void randomize(ParameterStore& store, std::mt19937_64& gen, double lo = -0.5, double hi = 0.5) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& [name, entry] : store)
    for (auto& x : entry.value.data()) x = dist(gen);
}

/// Values away from the relu kink so central differences stay on one side.
inline void randomize_away_from_zero(ParameterStore& store, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> dist(0.1, 0.6);
  std::bernoulli_distribution sign(0.5);
  for (auto& [name, entry] : store)
    for (auto& x : entry.value.data()) x = sign(gen) ? dist(gen) : -dist(gen);
}

/// Fan-in scaled draw for end-to-end gradient probes: weight magnitudes in
/// [0.3, 0.8] * sqrt(3 / rows), so every layer keeps unit-order activations
/// and no path vanishes below finite-difference resolution. Single-row
/// tensors (biases) get magnitudes in [0.05, 0.3]; lookup tables named in
/// `tables` are not fan-in scaled.
inline void randomize_scaled(ParameterStore& store, std::mt19937_64& gen, const std::vector<std::string>& tables = {}) {
  std::uniform_real_distribution<double> weight(0.3, 0.8), bias(0.05, 0.3);
  std::bernoulli_distribution sign(0.5);
  for (auto& [name, entry] : store) {
    const std::size_t rows = entry.value.rows();
    const bool table = std::find(tables.begin(), tables.end(), name) != tables.end();
    const double fan = table ? 1.0 : std::sqrt(3.0 / static_cast<double>(rows));
    for (auto& x : entry.value.data()) {
      const double mag = rows == 1 ? bias(gen) : weight(gen) * fan;
      x = sign(gen) ? mag : -mag;
    }
  }
}

namespace naive {

inline std::vector<std::vector<double>> to_rows(const Tensor& t) {
  std::vector<std::vector<double>> m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t(i, j);
  return m;
}

inline Tensor from_rows(const std::vector<std::vector<double>>& m) {
  const std::size_t r = m.size(), c = r ? m[0].size() : 0;
  std::vector<double> v;
  for (const auto& row : m) v.insert(v.end(), row.begin(), row.end());
  return Tensor({r, c}, std::move(v));
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  std::vector<std::vector<double>> c(a.rows(), std::vector<double>(b.cols(), 0.0));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t k = 0; k < a.cols(); ++k) c[i][j] += a(i, k) * b(k, j);
  return from_rows(c);
}

inline Tensor transpose(const Tensor& a) {
  std::vector<std::vector<double>> t(a.cols(), std::vector<double>(a.rows()));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t[j][i] = a(i, j);
  return from_rows(t);
}

inline Tensor relu(const Tensor& a) {
  auto m = to_rows(a);
  for (auto& row : m)
    for (auto& x : row) x = x > 0 ? x : 0.0;
  return from_rows(m);
}

inline Tensor apply_tanh(const Tensor& a) {
  auto m = to_rows(a);
  for (auto& row : m)
    for (auto& x : row) x = std::tanh(x);
  return from_rows(m);
}

/// Softmax over all entries (global) or within each row, using long double.
inline Tensor softmax(const Tensor& a, bool per_row) {
  auto m = to_rows(a);
  if (per_row) {
    for (auto& row : m) {
      long double z = 0;
      for (double x : row) z += std::exp(static_cast<long double>(x));
      for (double& x : row) x = static_cast<double>(std::exp(static_cast<long double>(x)) / z);
    }
  } else {
    long double z = 0;
    for (const auto& row : m)
      for (double x : row) z += std::exp(static_cast<long double>(x));
    for (auto& row : m)
      for (double& x : row) x = static_cast<double>(std::exp(static_cast<long double>(x)) / z);
  }
  return from_rows(m);
}

/// x W + b
inline Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  Tensor y = naive::matmul(x, w);
  auto m = to_rows(y);
  for (auto& row : m)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b(0, j);
  return from_rows(m);
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  auto m = to_rows(a);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j) m[i][j] += b(i, j);
  return from_rows(m);
}

inline Tensor concat(const Tensor& a, const Tensor& b) {
  auto m = to_rows(a);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) m[i].push_back(b(i, j));
  return from_rows(m);
}

inline Tensor mean_rows(const Tensor& a) {
  std::vector<std::vector<double>> m(1, std::vector<double>(a.cols(), 0.0));
  for (std::size_t j = 0; j < a.cols(); ++j) {
    for (std::size_t i = 0; i < a.rows(); ++i) m[0][j] += a(i, j);
    m[0][j] /= static_cast<double>(a.rows());
  }
  return from_rows(m);
}


inline double act(double x, Activation kind) {
  switch (kind) {
    case Activation::kRelu: return x > 0 ? x : 0.0;
    case Activation::kTanh: return std::tanh(x);
    case Activation::kIdentity: break;
  }
  return x;
}

inline Tensor act(const Tensor& a, Activation kind) {
  auto m = to_rows(a);
  for (auto& row : m)
    for (auto& x : row) x = act(x, kind);
  return from_rows(m);
}

inline Tensor mlp(const Tensor& x, const ParameterStore& s, const Mlp& m) {
  Tensor h = x;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    h = affine(h, s.value(m.layers[l].weight), s.value(m.layers[l].bias));
    if (l + 1 < m.layers.size()) h = act(h, m.activation);
  }
  return h;
}

/// A(i,j) = exp(<src_i, ans_j>) normalised globally or per source row.
inline Tensor adjacency(const Tensor& src, const Tensor& ans, bool per_row) {
  std::vector<std::vector<long double>> e(src.rows(), std::vector<long double>(ans.rows()));
  for (std::size_t i = 0; i < src.rows(); ++i) {
    for (std::size_t j = 0; j < ans.rows(); ++j) {
      long double dot = 0;
      for (std::size_t c = 0; c < src.cols(); ++c) dot += static_cast<long double>(src(i, c)) * ans(j, c);
      e[i][j] = std::exp(dot);
    }
  }
  std::vector<std::vector<double>> out(src.rows(), std::vector<double>(ans.rows()));
  long double total = 0;
  for (const auto& row : e)
    for (auto v : row) total += v;
  for (std::size_t i = 0; i < src.rows(); ++i) {
    long double z = per_row ? 0 : total;
    if (per_row)
      for (auto v : e[i]) z += v;
    for (std::size_t j = 0; j < ans.rows(); ++j) out[i][j] = static_cast<double>(e[i][j] / z);
  }
  return from_rows(out);
}

/// Y(b,:) = delta(sum_i A(i,b) (X W)(i,:)).
inline Tensor graph_reason(const Tensor& a, const Tensor& x, const Tensor& w, Activation delta) {
  std::vector<std::vector<double>> y(a.cols(), std::vector<double>(w.cols(), 0.0));
  for (std::size_t b = 0; b < a.cols(); ++b) {
    for (std::size_t c = 0; c < w.cols(); ++c) {
      long double acc = 0;
      for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < x.cols(); ++k) acc += static_cast<long double>(a(i, b)) * x(i, k) * w(k, c);
      y[b][c] = act(static_cast<double>(acc), delta);
    }
  }
  return from_rows(y);
}

inline Tensor word_attention(const Tensor& x_ans, const ParameterStore& s, const GraphModuleWeights& w) {
  const Tensor enc = mlp(x_ans, s, w.encoder);
  const Tensor a = softmax(naive::matmul(enc, s.value(w.attention)), false);
  auto m = to_rows(enc);
  for (std::size_t b = 0; b < m.size(); ++b)
    for (auto& v : m[b]) v *= a(b, 0);
  return from_rows(m);
}

inline Tensor guide(const Tensor& y, const Tensor& x_mid, const ParameterStore& s, const GraphModuleWeights& w) {
  const Tensor common = add(naive::matmul(y, s.value(w.map_src)), naive::matmul(x_mid, s.value(w.map_mid)));
  return mlp(naive::matmul(mlp(common, s, w.guide_inner), s.value(w.senior)), s, w.guide_outer);
}

inline Tensor graph_module(const Tensor& src, const Tensor& ans, const ParameterStore& s,
                           const GraphModuleWeights& w, bool per_row, Activation delta) {
  const Tensor a = adjacency(src, ans, per_row);
  const Tensor y = graph_reason(a, src, s.value(w.reason), delta);
  const Tensor x_mid = mlp(concat(word_attention(ans, s, w), y), s, w.fuse);
  return guide(y, x_mid, s, w);
}

/// y_i = (1/P) sum_j <f(x_i), f(x_j)> g(x_j), one position pair at a time.
inline Tensor nonlocal_aggregate(const Tensor& x, const ParameterStore& s, const CvmWeights& w) {
  const Tensor f = affine(x, s.value(w.theta_f.weight), s.value(w.theta_f.bias));
  const Tensor g = affine(x, s.value(w.theta_g.weight), s.value(w.theta_g.bias));
  const std::size_t p = x.rows(), c = x.cols();
  std::vector<std::vector<double>> y(p, std::vector<double>(c, 0.0));
  for (std::size_t i = 0; i < p; ++i) {
    std::vector<long double> acc(c, 0);
    for (std::size_t j = 0; j < p; ++j) {
      long double aff = 0;
      for (std::size_t k = 0; k < c; ++k) aff += static_cast<long double>(f(i, k)) * f(j, k);
      for (std::size_t k = 0; k < c; ++k) acc[k] += aff * g(j, k);
    }
    for (std::size_t k = 0; k < c; ++k) y[i][k] = static_cast<double>(acc[k] / p);
  }
  return from_rows(y);
}

/// a[i][j] = softmax_j(W_na . phi([x_i, x_j])) with phi an affine map of the
/// concatenated pair followed by the activation.
inline Tensor voting_weights(const Tensor& x, const ParameterStore& s, const CvmWeights& w) {
  const std::size_t p = x.rows(), c = x.cols();
  Tensor theta({2 * c, c}, std::vector<double>(2 * c * c));
  for (std::size_t r = 0; r < c; ++r) {
    for (std::size_t k = 0; k < c; ++k) {
      theta(r, k) = s.value(w.phi_left)(r, k);
      theta(c + r, k) = s.value(w.phi_right)(r, k);
    }
  }
  std::vector<std::vector<double>> scores(p, std::vector<double>(p));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      std::vector<double> pair;
      for (std::size_t k = 0; k < c; ++k) pair.push_back(x(i, k));
      for (std::size_t k = 0; k < c; ++k) pair.push_back(x(j, k));
      const Tensor phi = act(affine(from_rows({pair}), theta, s.value(w.phi_bias)), w.phi_activation);
      double score = 0;
      for (std::size_t k = 0; k < c; ++k) score += phi(0, k) * s.value(w.vote_score)(k, 0);
      scores[i][j] = score;
    }
  }
  return softmax(from_rows(scores), true);
}

/// out_i = (sum_j a[i][j] y_j) W_a + x_i, or (sum_j a[i][j]) y_i W_a + x_i.
inline Tensor residual_update(const Tensor& x, const Tensor& y, const Tensor& a, const Tensor& w_a, bool self) {
  const std::size_t p = x.rows(), c = x.cols();
  std::vector<std::vector<double>> gathered(p, std::vector<double>(c, 0.0));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = 0; k < c; ++k) gathered[i][k] += a(i, j) * (self ? y(i, k) : y(j, k));
    }
  }
  return add(naive::matmul(from_rows(gathered), w_a), x);
}

}  // namespace naive

/// Small random problem; P positions, every box non-empty.
inline Instance random_instance(std::mt19937_64& gen, std::size_t positions, std::size_t channels, std::size_t objects,
                                std::size_t question, std::size_t max_answer, std::size_t vocab) {
  Instance inst;
  inst.scene = random_tensor(positions, channels, gen);
  std::uniform_int_distribution<std::size_t> cell(0, positions - 1), tok(0, vocab - 1), len(1, max_answer);
  for (std::size_t n = 0; n < objects; ++n) {
    std::vector<std::size_t> box{cell(gen)};
    if (positions > 1 && gen() % 2) box.push_back((box[0] + 1) % positions);
    inst.boxes.push_back(box);
  }
  for (std::size_t m = 0; m < question; ++m) inst.question.push_back(tok(gen));
  for (auto& cand : inst.candidates) {
    const std::size_t b = len(gen);
    for (std::size_t k = 0; k < b; ++k) cand.push_back(tok(gen));
  }
  inst.gold = gen() % kNumCandidates;
  return inst;
}

/// Applies a permutation to tensor rows: out[k] = in[perm[k]].
inline Tensor permute_rows(const Tensor& t, const std::vector<std::size_t>& perm) {
  Tensor out = t;
  for (std::size_t k = 0; k < perm.size(); ++k)
    for (std::size_t c = 0; c < t.cols(); ++c) out(k, c) = t(perm[k], c);
  return out;
}

inline std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937_64& gen) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  std::shuffle(p.begin(), p.end(), gen);
  return p;
}

inline double max_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace hgl::test
