#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "hgl/tape.hpp"
#include "hgl/tensor.hpp"

namespace hgl {

enum class SoftmaxMode { kGlobal, kPerRow };
enum class Activation { kIdentity, kRelu, kTanh };

std::string_view to_string(SoftmaxMode mode);
std::string_view to_string(Activation kind);
SoftmaxMode parse_softmax_mode(std::string_view text);
Activation parse_activation(std::string_view text);

// Plain tensor kernels. Summation always runs in increasing index order, so
// results are reproducible bit-for-bit.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor softmax(const Tensor& x, SoftmaxMode mode);
Tensor activate(const Tensor& x, Activation kind);
double activate(double x, Activation kind);

// Recorded operations. All operands are rank-2 and live on the same tape.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
/// x[RxC] + bias[1xC] added to every row.
Var add_bias(Var x, Var bias);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// a * s for a 1x1 variable s.
Var scale_by(Var a, Var s);
/// Row r of x[RxC] multiplied by s[Rx1](r).
Var scale_rows(Var x, Var s);
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var activate(Var x, Activation kind);
inline Var relu(Var x) { return activate(x, Activation::kRelu); }
inline Var tanh(Var x) { return activate(x, Activation::kTanh); }
Var softmax(Var x, SoftmaxMode mode);
/// Column means, [RxC] -> [1xC].
Var mean_rows(Var x);
Var sum(Var x);
/// Embedding lookup: row k of the result is table row ids[k].
Var gather_rows(Var table, std::vector<std::size_t> ids);
/// Row k of the result is the mean of x's rows listed in groups[k].
Var pool_rows(Var x, std::vector<std::vector<std::size_t>> groups);
/// S(i,j) = sum_c w(c) * act(u(i,c) + v(j,c)) for u,v [PxC] and w [Cx1].
/// Scores every ordered pair without materialising the PxPxC tensor.
Var pairwise_score(Var u, Var v, Var w, Activation kind);
/// -log softmax(logits)[gold] for logits [1xK].
Var cross_entropy(Var logits, std::size_t gold);

}  // namespace hgl
