#include "hgl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hgl {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()) + " differ");
  }
}

// c += a * b
void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t r = a.rows(), s = a.cols(), t = b.cols();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < r; ++i) {
    double* crow = pc + i * t;
    for (std::size_t k = 0; k < s; ++k) {
      const double aik = pa[i * s + k];
      const double* brow = pb + k * t;
      for (std::size_t j = 0; j < t; ++j) crow[j] += aik * brow[j];
    }
  }
}

// c += a * b^T   (a: RxS, b: TxS, c: RxT)
void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t r = a.rows(), s = a.cols(), t = b.rows();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < t; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < s; ++k) acc += pa[i * s + k] * pb[j * s + k];
      pc[i * t + j] += acc;
    }
  }
}

// c += a^T * b   (a: SxR, b: SxT, c: RxT)
void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t s = a.rows(), r = a.cols(), t = b.cols();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t k = 0; k < s; ++k) {
    for (std::size_t i = 0; i < r; ++i) {
      const double aki = pa[k * r + i];
      double* crow = pc + i * t;
      const double* brow = pb + k * t;
      for (std::size_t j = 0; j < t; ++j) crow[j] += aki * brow[j];
    }
  }
}

double activation_slope(double x, double y, Activation kind) {
  switch (kind) {
    case Activation::kIdentity: return 1.0;
    case Activation::kRelu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: return 1.0 - y * y;
  }
  return 1.0;
}

void softmax_backward_segment(const double* y, const double* dy, double* dx, std::size_t n) {
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += dy[i] * y[i];
  for (std::size_t i = 0; i < n; ++i) dx[i] += y[i] * (dy[i] - dot);
}

void softmax_segment(const double* x, double* y, std::size_t n) {
  double mx = x[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = std::exp(x[i] - mx);
    total += y[i];
  }
  for (std::size_t i = 0; i < n; ++i) y[i] /= total;
}

}  // namespace

std::string_view to_string(SoftmaxMode mode) {
  return mode == SoftmaxMode::kGlobal ? "global" : "row";
}

std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
  }
  return "identity";
}

SoftmaxMode parse_softmax_mode(std::string_view text) {
  if (text == "global") return SoftmaxMode::kGlobal;
  if (text == "row" || text == "per-row") return SoftmaxMode::kPerRow;
  throw ContractError("unknown softmax mode '" + std::string(text) + "' (expected global|row)");
}

Activation parse_activation(std::string_view text) {
  if (text == "relu") return Activation::kRelu;
  if (text == "tanh") return Activation::kTanh;
  if (text == "identity") return Activation::kIdentity;
  throw ContractError("unknown activation '" + std::string(text) + "' (expected relu|tanh|identity)");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ for " + shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()));
  }
  Tensor c = Tensor::zeros(a.rows(), b.cols());
  gemm_nn(a, b, c);
  return c;
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  Tensor t = Tensor::zeros(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Tensor softmax(const Tensor& x, SoftmaxMode mode) {
  require_rank2(x, "softmax");
  if (x.empty()) throw DomainError("softmax of an empty tensor");
  Tensor y(x.shape(), std::vector<double>(x.size()));
  if (mode == SoftmaxMode::kGlobal) {
    softmax_segment(x.data().data(), y.data().data(), x.size());
  } else {
    const std::size_t c = x.cols();
    for (std::size_t r = 0; r < x.rows(); ++r) softmax_segment(x.data().data() + r * c, y.data().data() + r * c, c);
  }
  return y;
}

double activate(double x, Activation kind) {
  switch (kind) {
    case Activation::kIdentity: return x;
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kTanh: return std::tanh(x);
  }
  return x;
}

Tensor activate(const Tensor& x, Activation kind) {
  Tensor y = x;
  for (auto& v : y.data()) v = activate(v, kind);
  return y;
}

Var matmul(Var a, Var b) {
  return a.tape().apply(
      "matmul", {a, b}, [](auto in) { return matmul(*in[0], *in[1]); },
      [](Tape& t, std::uint32_t n) {
        const auto ia = t.input(n, 0), ib = t.input(n, 1);
        const Tensor& g = t.grad(n);
        if (t.requires_grad(ia)) gemm_nt(g, t.value(ib), t.grad_accumulator(ia));
        if (t.requires_grad(ib)) gemm_tn(t.value(ia), g, t.grad_accumulator(ib));
      });
}

Var transpose(Var a) {
  return a.tape().apply(
      "transpose", {a}, [](auto in) { return transpose(*in[0]); },
      [](Tape& t, std::uint32_t n) {
        const Tensor& g = t.grad(n);
        Tensor& ga = t.grad_accumulator(t.input(n, 0));
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) ga(j, i) += g(i, j);
      });
}

Var add(Var a, Var b) {
  return a.tape().apply(
      "add", {a, b},
      [](auto in) {
        require_same_shape(*in[0], *in[1], "add");
        Tensor c = *in[0];
        for (std::size_t i = 0; i < c.size(); ++i) c[i] += (*in[1])[i];
        return c;
      },
      [](Tape& t, std::uint32_t n) {
        const Tensor& g = t.grad(n);
        for (std::size_t k = 0; k < 2; ++k) {
          const auto id = t.input(n, k);
          if (!t.requires_grad(id)) continue;
          Tensor& acc = t.grad_accumulator(id);
          for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
        }
      });
}

Var add_bias(Var x, Var bias) {
  return x.tape().apply(
      "add_bias", {x, bias},
      [](auto in) {
        const Tensor& xv = *in[0];
        const Tensor& bv = *in[1];
        require_rank2(xv, "add_bias");
        if (bv.rank() != 2 || bv.rows() != 1 || bv.cols() != xv.cols()) {
          throw DimensionError("add_bias: bias " + shape_to_string(bv.shape()) + " does not fit " +
                               shape_to_string(xv.shape()));
        }
        Tensor y = xv;
        const std::size_t c = xv.cols();
        for (std::size_t r = 0; r < xv.rows(); ++r)
          for (std::size_t j = 0; j < c; ++j) y(r, j) += bv[j];
        return y;
      },
      [](Tape& t, std::uint32_t n) {
        const Tensor& g = t.grad(n);
        const auto ix = t.input(n, 0), ib = t.input(n, 1);
        if (t.requires_grad(ix)) {
          Tensor& gx = t.grad_accumulator(ix);
          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        }
        if (t.requires_grad(ib)) {
          Tensor& gb = t.grad_accumulator(ib);
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t j = 0; j < g.cols(); ++j) gb[j] += g(r, j);
        }
      });
}

Var mul(Var a, Var b) {
  return a.tape().apply(
      "mul", {a, b},
      [](auto in) {
        require_same_shape(*in[0], *in[1], "mul");
        Tensor c = *in[0];
        for (std::size_t i = 0; i < c.size(); ++i) c[i] *= (*in[1])[i];
        return c;
      },
      [](Tape& t, std::uint32_t n) {
        const Tensor& g = t.grad(n);
        const auto ia = t.input(n, 0), ib = t.input(n, 1);
        if (t.requires_grad(ia)) {
          Tensor& acc = t.grad_accumulator(ia);
          const Tensor& bv = t.value(ib);
          for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * bv[i];
        }
        if (t.requires_grad(ib)) {
          Tensor& acc = t.grad_accumulator(ib);
          const Tensor& av = t.value(ia);
          for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * av[i];
        }
      });
}

Var scale(Var a, double factor) {
  return a.tape().apply(
      "scale", {a},
      [factor](auto in) {
        Tensor c = *in[0];
        for (auto& v : c.data()) v *= factor;
        return c;
      },
      [factor](Tape& t, std::uint32_t n) {
        const Tensor& g = t.grad(n);
        Tensor& acc = t.grad_accumulator(t.input(n, 0));
        for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * factor;
      });
}

Var scale_by(Var a, Var s) {
  return a.tape().apply(
      "scale_by", {a, s},
      [](auto in) {
        if (in[1]->size() != 1) throw DimensionError("scale_by: factor must be 1x1, got " + shape_to_string(in[1]->shape()));
        Tensor c = *in[0];
        const double f = (*in[1])[0];
        for (auto& v : c.data()) v *= f;
        return c;
      },
      [](Tape& t, std::uint32_t n) {
        const Tensor& g = t.grad(n);
        const auto ia = t.input(n, 0), is = t.input(n, 1);
        const double f = t.value(is)[0];
        if (t.requires_grad(ia)) {
          Tensor& acc = t.grad_accumulator(ia);
          for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * f;
        }
        if (t.requires_grad(is)) {
          const Tensor& av = t.value(ia);
          double dot = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * av[i];
          t.grad_accumulator(is)[0] += dot;
        }
      });
}

Var scale_rows(Var x, Var s) {
  return x.tape().apply(
      "scale_rows", {x, s},
      [](auto in) {
        const Tensor& xv = *in[0];
        const Tensor& sv = *in[1];
        require_rank2(xv, "scale_rows");
        if (sv.rank() != 2 || sv.cols() != 1 || sv.rows() != xv.rows()) {
          throw DimensionError("scale_rows: scales " + shape_to_string(sv.shape()) + " do not fit " +
                               shape_to_string(xv.shape()));
        }
        Tensor y = xv;
        for (std::size_t r = 0; r < xv.rows(); ++r)
          for (std::size_t c = 0; c < xv.cols(); ++c) y(r, c) *= sv[r];
        return y;
      },
      [](Tape& t, std::uint32_t n) {
        const Tensor& g = t.grad(n);
        const auto ix = t.input(n, 0), is = t.input(n, 1);
        const Tensor& xv = t.value(ix);
        const Tensor& sv = t.value(is);
        if (t.requires_grad(ix)) {
          Tensor& gx = t.grad_accumulator(ix);
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) gx(r, c) += g(r, c) * sv[r];
        }
        if (t.requires_grad(is)) {
          Tensor& gs = t.grad_accumulator(is);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < g.cols(); ++c) dot += g(r, c) * xv(r, c);
            gs[r] += dot;
          }
        }
      });
}

Var concat_cols(Var a, Var b) {
  return a.tape().apply(
      "concat_cols", {a, b},
      [](auto in) {
        const Tensor& av = *in[0];
        const Tensor& bv = *in[1];
        require_rank2(av, "concat");
        require_rank2(bv, "concat");
        if (av.rows() != bv.rows()) {
          throw DimensionError("concat: leading dimensions differ for " + shape_to_string(av.shape()) + " and " +
                               shape_to_string(bv.shape()));
        }
        const std::size_t ca = av.cols(), cb = bv.cols();
        Tensor y = Tensor::zeros(av.rows(), ca + cb);
        for (std::size_t r = 0; r < av.rows(); ++r) {
          for (std::size_t j = 0; j < ca; ++j) y(r, j) = av(r, j);
          for (std::size_t j = 0; j < cb; ++j) y(r, ca + j) = bv(r, j);
        }
        return y;
      },
      [](Tape& t, std::uint32_t n) {
        const Tensor& g = t.grad(n);
        const auto ia = t.input(n, 0), ib = t.input(n, 1);
        const std::size_t ca = t.value(ia).cols(), cb = t.value(ib).cols();
        if (t.requires_grad(ia)) {
          Tensor& acc = t.grad_accumulator(ia);
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t j = 0; j < ca; ++j) acc(r, j) += g(r, j);
        }
        if (t.requires_grad(ib)) {
          Tensor& acc = t.grad_accumulator(ib);
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t j = 0; j < cb; ++j) acc(r, j) += g(r, ca + j);
        }
      });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  return a.tape().apply(
      "slice_cols", {a},
      [begin, count](auto in) {
        const Tensor& av = *in[0];
        require_rank2(av, "slice_cols");
        if (begin + count > av.cols()) {
          throw DimensionError("slice_cols: columns [" + std::to_string(begin) + ", " +
                               std::to_string(begin + count) + ") out of " + shape_to_string(av.shape()));
        }
        Tensor y = Tensor::zeros(av.rows(), count);
        for (std::size_t r = 0; r < av.rows(); ++r)
          for (std::size_t j = 0; j < count; ++j) y(r, j) = av(r, begin + j);
        return y;
      },
      [begin](Tape& t, std::uint32_t n) {
        const Tensor& g = t.grad(n);
        Tensor& acc = t.grad_accumulator(t.input(n, 0));
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t j = 0; j < g.cols(); ++j) acc(r, begin + j) += g(r, j);
      });
}

Var activate(Var x, Activation kind) {
  if (kind == Activation::kIdentity) return x;
  return x.tape().apply(
      kind == Activation::kRelu ? "relu" : "tanh", {x}, [kind](auto in) { return activate(*in[0], kind); },
      [kind](Tape& t, std::uint32_t n) {
        const Tensor& g = t.grad(n);
        const Tensor& y = t.value(n);
        const auto ix = t.input(n, 0);
        const Tensor& xv = t.value(ix);
        Tensor& acc = t.grad_accumulator(ix);
        for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * activation_slope(xv[i], y[i], kind);
      });
}

Var softmax(Var x, SoftmaxMode mode) {
  return x.tape().apply(
      mode == SoftmaxMode::kGlobal ? "softmax_global" : "softmax_row", {x},
      [mode](auto in) { return softmax(*in[0], mode); },
      [mode](Tape& t, std::uint32_t n) {
        const Tensor& g = t.grad(n);
        const Tensor& y = t.value(n);
        Tensor& acc = t.grad_accumulator(t.input(n, 0));
        if (mode == SoftmaxMode::kGlobal) {
          softmax_backward_segment(y.data().data(), g.data().data(), acc.data().data(), y.size());
        } else {
          const std::size_t c = y.cols();
          for (std::size_t r = 0; r < y.rows(); ++r) {
            softmax_backward_segment(y.data().data() + r * c, g.data().data() + r * c, acc.data().data() + r * c, c);
          }
        }
      });
}

Var mean_rows(Var x) {
  return x.tape().apply(
      "mean_rows", {x},
      [](auto in) {
        const Tensor& xv = *in[0];
        require_rank2(xv, "mean_rows");
        if (xv.rows() == 0) throw DomainError("mean_rows of a tensor with no rows");
        Tensor y = Tensor::zeros(1, xv.cols());
        for (std::size_t r = 0; r < xv.rows(); ++r)
          for (std::size_t c = 0; c < xv.cols(); ++c) y[c] += xv(r, c);
        const double inv = 1.0 / static_cast<double>(xv.rows());
        for (auto& v : y.data()) v *= inv;
        return y;
      },
      [](Tape& t, std::uint32_t n) {
        const Tensor& g = t.grad(n);
        Tensor& acc = t.grad_accumulator(t.input(n, 0));
        const double inv = 1.0 / static_cast<double>(acc.rows());
        for (std::size_t r = 0; r < acc.rows(); ++r)
          for (std::size_t c = 0; c < acc.cols(); ++c) acc(r, c) += g[c] * inv;
      });
}

Var sum(Var x) {
  return x.tape().apply(
      "sum", {x},
      [](auto in) {
        double s = 0.0;
        for (double v : in[0]->data()) s += v;
        return Tensor::scalar(s);
      },
      [](Tape& t, std::uint32_t n) {
        const double g = t.grad(n)[0];
        Tensor& acc = t.grad_accumulator(t.input(n, 0));
        for (auto& v : acc.data()) v += g;
      });
}

Var gather_rows(Var table, std::vector<std::size_t> ids) {
  return table.tape().apply(
      "gather_rows", {table},
      [ids](auto in) {
        const Tensor& tv = *in[0];
        require_rank2(tv, "gather_rows");
        const std::size_t c = tv.cols();
        Tensor y = Tensor::zeros(ids.size(), c);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (ids[k] >= tv.rows()) {
            throw DomainError("token id " + std::to_string(ids[k]) + " out of range for table with " +
                              std::to_string(tv.rows()) + " rows");
          }
          for (std::size_t j = 0; j < c; ++j) y(k, j) = tv(ids[k], j);
        }
        return y;
      },
      [ids](Tape& t, std::uint32_t n) {
        const Tensor& g = t.grad(n);
        Tensor& acc = t.grad_accumulator(t.input(n, 0));
        for (std::size_t k = 0; k < ids.size(); ++k)
          for (std::size_t j = 0; j < g.cols(); ++j) acc(ids[k], j) += g(k, j);
      });
}

Var pool_rows(Var x, std::vector<std::vector<std::size_t>> groups) {
  return x.tape().apply(
      "pool_rows", {x},
      [groups](auto in) {
        const Tensor& xv = *in[0];
        require_rank2(xv, "pool_rows");
        Tensor y = Tensor::zeros(groups.size(), xv.cols());
        for (std::size_t k = 0; k < groups.size(); ++k) {
          if (groups[k].empty()) throw DomainError("pool_rows: empty group " + std::to_string(k));
          for (auto r : groups[k]) {
            if (r >= xv.rows()) {
              throw DomainError("pool_rows: row " + std::to_string(r) + " out of range for " +
                                shape_to_string(xv.shape()));
            }
            for (std::size_t j = 0; j < xv.cols(); ++j) y(k, j) += xv(r, j);
          }
          const double inv = 1.0 / static_cast<double>(groups[k].size());
          for (std::size_t j = 0; j < xv.cols(); ++j) y(k, j) *= inv;
        }
        return y;
      },
      [groups](Tape& t, std::uint32_t n) {
        const Tensor& g = t.grad(n);
        Tensor& acc = t.grad_accumulator(t.input(n, 0));
        for (std::size_t k = 0; k < groups.size(); ++k) {
          const double inv = 1.0 / static_cast<double>(groups[k].size());
          for (auto r : groups[k])
            for (std::size_t j = 0; j < g.cols(); ++j) acc(r, j) += g(k, j) * inv;
        }
      });
}

Var pairwise_score(Var u, Var v, Var w, Activation kind) {
  return u.tape().apply(
      "pairwise_score", {u, v, w},
      [kind](auto in) {
        const Tensor& uv = *in[0];
        const Tensor& vv = *in[1];
        const Tensor& wv = *in[2];
        require_rank2(uv, "pairwise_score");
        require_rank2(vv, "pairwise_score");
        const std::size_t c = uv.cols();
        if (vv.cols() != c || wv.rank() != 2 || wv.rows() != c || wv.cols() != 1) {
          throw DimensionError("pairwise_score: operands " + shape_to_string(uv.shape()) + ", " +
                               shape_to_string(vv.shape()) + ", " + shape_to_string(wv.shape()) + " incompatible");
        }
        Tensor s = Tensor::zeros(uv.rows(), vv.rows());
        for (std::size_t i = 0; i < uv.rows(); ++i) {
          for (std::size_t j = 0; j < vv.rows(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < c; ++k) acc += wv[k] * activate(uv(i, k) + vv(j, k), kind);
            s(i, j) = acc;
          }
        }
        return s;
      },
      [kind](Tape& t, std::uint32_t n) {
        const Tensor& g = t.grad(n);
        const auto iu = t.input(n, 0), iv = t.input(n, 1), iw = t.input(n, 2);
        const Tensor& uv = t.value(iu);
        const Tensor& vv = t.value(iv);
        const Tensor& wv = t.value(iw);
        const std::size_t c = uv.cols();
        Tensor gu = Tensor::zeros(uv.rows(), c);
        Tensor gv = Tensor::zeros(vv.rows(), c);
        Tensor gw = Tensor::zeros(c, 1);
        for (std::size_t i = 0; i < uv.rows(); ++i) {
          for (std::size_t j = 0; j < vv.rows(); ++j) {
            const double gij = g(i, j);
            for (std::size_t k = 0; k < c; ++k) {
              const double z = uv(i, k) + vv(j, k);
              const double h = activate(z, kind);
              const double dz = gij * wv[k] * activation_slope(z, h, kind);
              gu(i, k) += dz;
              gv(j, k) += dz;
              gw[k] += gij * h;
            }
          }
        }
        auto add_into = [&t](std::uint32_t id, const Tensor& src) {
          if (!t.requires_grad(id)) return;
          Tensor& acc = t.grad_accumulator(id);
          for (std::size_t i = 0; i < src.size(); ++i) acc[i] += src[i];
        };
        add_into(iu, gu);
        add_into(iv, gv);
        add_into(iw, gw);
      });
}

Var cross_entropy(Var logits, std::size_t gold) {
  return logits.tape().apply(
      "cross_entropy", {logits},
      [gold](auto in) {
        const Tensor& l = *in[0];
        require_rank2(l, "cross_entropy");
        if (l.rows() != 1 || l.cols() == 0) throw DimensionError("cross_entropy: logits must be 1xK, got " + shape_to_string(l.shape()));
        if (gold >= l.cols()) {
          throw ContractError("cross_entropy: gold index " + std::to_string(gold) + " out of range for " +
                              std::to_string(l.cols()) + " classes");
        }
        double mx = l[0];
        for (std::size_t i = 1; i < l.size(); ++i) mx = std::max(mx, l[i]);
        double total = 0.0;
        for (std::size_t i = 0; i < l.size(); ++i) total += std::exp(l[i] - mx);
        return Tensor::scalar(mx + std::log(total) - l[gold]);
      },
      [gold](Tape& t, std::uint32_t n) {
        const double g = t.grad(n)[0];
        const auto il = t.input(n, 0);
        const Tensor p = softmax(t.value(il), SoftmaxMode::kGlobal);
        Tensor& acc = t.grad_accumulator(il);
        for (std::size_t i = 0; i < p.size(); ++i) acc[i] += g * (p[i] - (i == gold ? 1.0 : 0.0));
      });
}

}  // namespace hgl
