#include "lencon/numerics/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace lencon {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;
using VectorView = Eigen::Map<Eigen::VectorXd>;
using ConstVectorView = Eigen::Map<const Eigen::VectorXd>;

ConstMatrixView as_matrix(const Tensor& t) {
  return ConstMatrixView(t.data(), static_cast<Eigen::Index>(t.rows()),
                         static_cast<Eigen::Index>(t.cols()));
}
MatrixView as_matrix(Tensor& t) {
  return MatrixView(t.data(), static_cast<Eigen::Index>(t.rows()),
                    static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void shape_error(const std::string& op, const Tensor& a,
                              const Tensor& b) {
  throw ShapeError(op + ": incompatible shapes " + shape_string(a.dims()) +
                   " and " + shape_string(b.dims()));
}

void require_batch_like(const std::string& op, const Tensor& t) {
  if (t.rank() != 1 && t.rank() != 2) {
    throw ShapeError(op + ": expected a vector or matrix, got " +
                     shape_string(t.dims()));
  }
}

// Output dims for a row-wise op producing `cols` values per row of `like`.
Shape row_dims(const Tensor& like, std::size_t cols) {
  if (like.rank() == 1) return {cols};
  return {like.rows(), cols};
}

void accumulate(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
}

Var unary(Var a, Tensor out,
          std::function<void(const Tensor& in, const Tensor& out,
                             const Tensor& g, Tensor& din)>
              derivative) {
  return a.tape()->record(
      std::move(out), {a},
      [a, derivative = std::move(derivative)](Tape& t, const Tensor& g,
                                              const Tensor& y) {
        derivative(t.value(a), y, g, t.grad(a));
      });
}

}  // namespace

Var matmul(Var w, Var x) {
  const Tensor& W = w.value();
  const Tensor& X = x.value();
  require_batch_like("matmul", X);
  if (W.rank() != 2 || W.dims()[1] != X.cols()) shape_error("matmul", W, X);
  const std::size_t m = W.dims()[0];
  Tensor out(row_dims(X, m));
  as_matrix(out).noalias() = as_matrix(X) * as_matrix(W).transpose();
  return w.tape()->record(std::move(out), {w, x},
                          [w, x](Tape& t, const Tensor& g, const Tensor&) {
                            const auto G = as_matrix(g);
                            if (t.requires_grad(w)) {
                              as_matrix(t.grad(w)).noalias() +=
                                  G.transpose() * as_matrix(t.value(x));
                            }
                            if (t.requires_grad(x)) {
                              as_matrix(t.grad(x)).noalias() +=
                                  G * as_matrix(t.value(w));
                            }
                          });
}

Var affine(Var w, Var x, Var b) {
  const Tensor& W = w.value();
  const Tensor& X = x.value();
  const Tensor& B = b.value();
  require_batch_like("affine", X);
  if (W.rank() != 2 || W.dims()[1] != X.cols()) shape_error("affine", W, X);
  const std::size_t m = W.dims()[0];
  if (B.rank() != 1 || B.size() != m) shape_error("affine", W, B);
  Tensor out(row_dims(X, m));
  auto Y = as_matrix(out);
  Y.noalias() = as_matrix(X) * as_matrix(W).transpose();
  Y.rowwise() += ConstVectorView(B.data(), static_cast<Eigen::Index>(m))
                     .transpose();
  return w.tape()->record(
      std::move(out), {w, x, b}, [w, x, b](Tape& t, const Tensor& g, const Tensor&) {
        const auto G = as_matrix(g);
        if (t.requires_grad(w)) {
          as_matrix(t.grad(w)).noalias() +=
              G.transpose() * as_matrix(t.value(x));
        }
        if (t.requires_grad(x)) {
          as_matrix(t.grad(x)).noalias() += G * as_matrix(t.value(w));
        }
        if (t.requires_grad(b)) {
          Tensor& db = t.grad(b);
          VectorView(db.data(), static_cast<Eigen::Index>(db.size())) +=
              G.colwise().sum().transpose();
        }
      });
}

Var add(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.dims() != B.dims()) shape_error("add", A, B);
  Tensor out = A;
  accumulate(out, B);
  return a.tape()->record(std::move(out), {a, b},
                          [a, b](Tape& t, const Tensor& g, const Tensor&) {
                            if (t.requires_grad(a)) accumulate(t.grad(a), g);
                            if (t.requires_grad(b)) accumulate(t.grad(b), g);
                          });
}

Var mul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.dims() != B.dims()) shape_error("mul", A, B);
  Tensor out(A.dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * B[i];
  return a.tape()->record(std::move(out), {a, b},
                          [a, b](Tape& t, const Tensor& g, const Tensor&) {
                            const Tensor& av = t.value(a);
                            const Tensor& bv = t.value(b);
                            if (t.requires_grad(a)) {
                              Tensor& da = t.grad(a);
                              for (std::size_t i = 0; i < g.size(); ++i)
                                da[i] += g[i] * bv[i];
                            }
                            if (t.requires_grad(b)) {
                              Tensor& db = t.grad(b);
                              for (std::size_t i = 0; i < g.size(); ++i)
                                db[i] += g[i] * av[i];
                            }
                          });
}

Var tanh(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = std::tanh(v);
  return unary(a, std::move(out),
               [](const Tensor&, const Tensor& y, const Tensor& g, Tensor& d) {
                 for (std::size_t i = 0; i < g.size(); ++i)
                   d[i] += g[i] * (1.0 - y[i] * y[i]);
               });
}

Var sigmoid(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
  return unary(a, std::move(out),
               [](const Tensor&, const Tensor& y, const Tensor& g, Tensor& d) {
                 for (std::size_t i = 0; i < g.size(); ++i)
                   d[i] += g[i] * y[i] * (1.0 - y[i]);
               });
}

Var elementwise(Elementwise op, Var a, std::optional<Var> b) {
  const bool binary = op == Elementwise::mul || op == Elementwise::add;
  if (binary != b.has_value()) {
    throw std::invalid_argument(binary ? "binary elementwise op needs two operands"
                                       : "unary elementwise op takes one operand");
  }
  switch (op) {
    case Elementwise::tanh:
      return tanh(a);
    case Elementwise::sigmoid:
      return sigmoid(a);
    case Elementwise::mul:
      return mul(a, *b);
    case Elementwise::add:
      return add(a, *b);
  }
  throw std::invalid_argument("unknown elementwise op");
}

namespace {

void require_finite(const std::string& op, const Tensor& t) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) {
      throw std::domain_error(op + ": non-finite input");
    }
  }
}

}  // namespace

Var softmax(Var logits) {
  const Tensor& x = logits.value();
  require_batch_like("softmax", x);
  if (x.cols() == 0) throw ShapeError("softmax: empty input");
  require_finite("softmax", x);
  Tensor out(x.dims());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto y = out.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) {
      y[i] = std::exp(in[i] - mx);
      total += y[i];
    }
    for (double& v : y) v /= total;
  }
  return unary(logits, std::move(out),
               [](const Tensor&, const Tensor& y, const Tensor& g, Tensor& d) {
                 for (std::size_t r = 0; r < y.rows(); ++r) {
                   auto yr = y.row(r);
                   auto gr = g.row(r);
                   auto dr = d.row(r);
                   double dot = 0.0;
                   for (std::size_t i = 0; i < yr.size(); ++i)
                     dot += gr[i] * yr[i];
                   for (std::size_t i = 0; i < yr.size(); ++i)
                     dr[i] += yr[i] * (gr[i] - dot);
                 }
               });
}

Var log_softmax(Var logits) {
  const Tensor& x = logits.value();
  require_batch_like("log_softmax", x);
  if (x.cols() == 0) throw ShapeError("log_softmax: empty input");
  require_finite("log_softmax", x);
  Tensor out(x.dims());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto y = out.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (double v : in) total += std::exp(v - mx);
    const double lse = mx + std::log(total);
    for (std::size_t i = 0; i < in.size(); ++i) y[i] = in[i] - lse;
  }
  return unary(logits, std::move(out),
               [](const Tensor&, const Tensor& y, const Tensor& g, Tensor& d) {
                 for (std::size_t r = 0; r < y.rows(); ++r) {
                   auto yr = y.row(r);
                   auto gr = g.row(r);
                   auto dr = d.row(r);
                   double total = 0.0;
                   for (double v : gr) total += v;
                   for (std::size_t i = 0; i < yr.size(); ++i)
                     dr[i] += gr[i] - std::exp(yr[i]) * total;
                 }
               });
}

Var concat(Var a, Var b) {
  const Var parts[] = {a, b};
  return concat(parts);
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const Tensor& first = parts.front().value();
  require_batch_like("concat", first);
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    if (v.rank() != first.rank() || v.rows() != first.rows()) {
      shape_error("concat", first, v);
    }
    total += v.cols();
  }
  const std::size_t rows = first.rows();
  Tensor out(row_dims(first, total));
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(v.row(r).begin(), v.cols(), out.row(r).begin() + offset);
    }
    offset += v.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts.front().tape()->record(
      std::move(out), inputs, [inputs](Tape& t, const Tensor& g, const Tensor&) {
        std::size_t offset = 0;
        for (const Var& p : inputs) {
          const std::size_t c = t.value(p).cols();
          if (t.requires_grad(p) && c > 0) {
            Tensor& d = t.grad(p);
            for (std::size_t r = 0; r < g.rows(); ++r) {
              auto src = g.row(r).subspan(offset, c);
              auto dst = d.row(r);
              for (std::size_t i = 0; i < c; ++i) dst[i] += src[i];
            }
          }
          offset += c;
        }
      });
}

Var slice(Var x, std::size_t begin, std::size_t length) {
  const Tensor& X = x.value();
  require_batch_like("slice", X);
  if (begin + length > X.cols()) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + length) + ") outside " +
                     shape_string(X.dims()));
  }
  Tensor out(row_dims(X, length));
  for (std::size_t r = 0; r < X.rows(); ++r) {
    std::copy_n(X.row(r).begin() + begin, length, out.row(r).begin());
  }
  return x.tape()->record(std::move(out), {x},
                          [x, begin, length](Tape& t, const Tensor& g, const Tensor&) {
                            Tensor& d = t.grad(x);
                            for (std::size_t r = 0; r < g.rows(); ++r) {
                              auto src = g.row(r);
                              auto dst = d.row(r).subspan(begin, length);
                              for (std::size_t i = 0; i < length; ++i)
                                dst[i] += src[i];
                            }
                          });
}

Var embedding_lookup(Var table, std::size_t index) {
  const std::size_t idx[] = {index};
  Var rows = embedding_lookup(table, idx);
  const Tensor& v = rows.value();
  // Reshape to a vector by recording a view node.
  Tensor out = v;
  out.reshape({v.cols()});
  return table.tape()->record(std::move(out), {rows},
                              [rows](Tape& t, const Tensor& g, const Tensor&) {
                                accumulate(t.grad(rows), g);
                              });
}

Var embedding_lookup(Var table, std::span<const std::size_t> indices) {
  const Tensor& E = table.value();
  if (E.rank() != 2) {
    throw ShapeError("embedding_lookup: table must be a matrix, got " +
                     shape_string(E.dims()));
  }
  const std::size_t vocab = E.dims()[0];
  const std::size_t d = E.dims()[1];
  Tensor out({indices.size(), d});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= vocab) {
      throw std::out_of_range("embedding_lookup: index " +
                              std::to_string(indices[r]) +
                              " out of range for " + std::to_string(vocab) +
                              " rows");
    }
    std::copy_n(E.row(indices[r]).begin(), d, out.row(r).begin());
  }
  std::vector<std::size_t> ids(indices.begin(), indices.end());
  return table.tape()->record(
      std::move(out), {table}, [table, ids](Tape& t, const Tensor& g, const Tensor&) {
        Tensor& dE = t.grad(table);
        for (std::size_t r = 0; r < ids.size(); ++r) {
          auto src = g.row(r);
          auto dst = dE.row(ids[r]);
          for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
        }
      });
}

Var stack(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("stack: no inputs");
  const Tensor& first = parts.front().value();
  require_batch_like("stack", first);
  const std::size_t batch = first.rows();
  const std::size_t hidden = first.cols();
  const std::size_t n = parts.size();
  for (const Var& p : parts) {
    if (p.value().dims() != first.dims()) shape_error("stack", first, p.value());
  }
  Tensor out({batch, n, hidden});
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor& v = parts[i].value();
    for (std::size_t b = 0; b < batch; ++b) {
      std::copy_n(v.row(b).begin(), hidden,
                  out.data() + (b * n + i) * hidden);
    }
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts.front().tape()->record(
      std::move(out), inputs,
      [inputs, batch, n, hidden](Tape& t, const Tensor& g, const Tensor&) {
        for (std::size_t i = 0; i < n; ++i) {
          if (!t.requires_grad(inputs[i])) continue;
          Tensor& d = t.grad(inputs[i]);
          for (std::size_t b = 0; b < batch; ++b) {
            const double* src = g.data() + (b * n + i) * hidden;
            auto dst = d.row(b);
            for (std::size_t h = 0; h < hidden; ++h) dst[h] += src[h];
          }
        }
      });
}

namespace {

struct MemoryShape {
  std::size_t batch, positions, hidden;
};

MemoryShape memory_shape(const std::string& op, const Tensor& memory) {
  if (memory.rank() == 2) return {1, memory.dims()[0], memory.dims()[1]};
  if (memory.rank() == 3) {
    return {memory.dims()[0], memory.dims()[1], memory.dims()[2]};
  }
  throw ShapeError(op + ": memory must be [N x H] or [B x N x H], got " +
                   shape_string(memory.dims()));
}

}  // namespace

Var batched_matvec(Var memory, Var query) {
  const Tensor& M = memory.value();
  const Tensor& q = query.value();
  const auto [batch, n, hidden] = memory_shape("batched_matvec", M);
  if (q.rank() != M.rank() - 1 || q.rows() != batch || q.cols() != hidden) {
    shape_error("batched_matvec", M, q);
  }
  Tensor out(q.rank() == 1 ? Shape{n} : Shape{batch, n});
  for (std::size_t b = 0; b < batch; ++b) {
    ConstMatrixView mb(M.data() + b * n * hidden,
                       static_cast<Eigen::Index>(n),
                       static_cast<Eigen::Index>(hidden));
    ConstVectorView qb(q.data() + b * hidden,
                       static_cast<Eigen::Index>(hidden));
    VectorView(out.data() + b * n, static_cast<Eigen::Index>(n)).noalias() =
        mb * qb;
  }
  return memory.tape()->record(
      std::move(out), {memory, query},
      [memory, query, batch = batch, n = n, hidden = hidden](Tape& t,
                                                             const Tensor& g, const Tensor&) {
        const Tensor& Mv = t.value(memory);
        const Tensor& qv = t.value(query);
        const bool need_m = t.requires_grad(memory);
        const bool need_q = t.requires_grad(query);
        for (std::size_t b = 0; b < batch; ++b) {
          ConstVectorView gb(g.data() + b * n, static_cast<Eigen::Index>(n));
          if (need_m) {
            MatrixView dm(t.grad(memory).data() + b * n * hidden,
                          static_cast<Eigen::Index>(n),
                          static_cast<Eigen::Index>(hidden));
            dm.noalias() +=
                gb * ConstVectorView(qv.data() + b * hidden,
                                     static_cast<Eigen::Index>(hidden))
                         .transpose();
          }
          if (need_q) {
            ConstMatrixView mb(Mv.data() + b * n * hidden,
                               static_cast<Eigen::Index>(n),
                               static_cast<Eigen::Index>(hidden));
            VectorView(t.grad(query).data() + b * hidden,
                       static_cast<Eigen::Index>(hidden))
                .noalias() += mb.transpose() * gb;
          }
        }
      });
}

Var batched_vecmat(Var weights, Var memory) {
  const Tensor& w = weights.value();
  const Tensor& M = memory.value();
  const auto [batch, n, hidden] = memory_shape("batched_vecmat", M);
  if (w.rank() != M.rank() - 1 || w.rows() != batch || w.cols() != n) {
    shape_error("batched_vecmat", w, M);
  }
  Tensor out(w.rank() == 1 ? Shape{hidden} : Shape{batch, hidden});
  for (std::size_t b = 0; b < batch; ++b) {
    ConstMatrixView mb(M.data() + b * n * hidden,
                       static_cast<Eigen::Index>(n),
                       static_cast<Eigen::Index>(hidden));
    ConstVectorView wb(w.data() + b * n, static_cast<Eigen::Index>(n));
    VectorView(out.data() + b * hidden, static_cast<Eigen::Index>(hidden))
        .noalias() = mb.transpose() * wb;
  }
  return memory.tape()->record(
      std::move(out), {weights, memory},
      [weights, memory, batch = batch, n = n, hidden = hidden](
          Tape& t, const Tensor& g, const Tensor&) {
        const Tensor& wv = t.value(weights);
        const Tensor& Mv = t.value(memory);
        const bool need_w = t.requires_grad(weights);
        const bool need_m = t.requires_grad(memory);
        for (std::size_t b = 0; b < batch; ++b) {
          ConstVectorView gb(g.data() + b * hidden,
                             static_cast<Eigen::Index>(hidden));
          if (need_w) {
            ConstMatrixView mb(Mv.data() + b * n * hidden,
                               static_cast<Eigen::Index>(n),
                               static_cast<Eigen::Index>(hidden));
            VectorView(t.grad(weights).data() + b * n,
                       static_cast<Eigen::Index>(n))
                .noalias() += mb * gb;
          }
          if (need_m) {
            MatrixView dm(t.grad(memory).data() + b * n * hidden,
                          static_cast<Eigen::Index>(n),
                          static_cast<Eigen::Index>(hidden));
            dm.noalias() += ConstVectorView(wv.data() + b * n,
                                            static_cast<Eigen::Index>(n)) *
                            gb.transpose();
          }
        }
      });
}

Var scale_rows(Var v, std::span<const double> factors) {
  const Tensor& V = v.value();
  if (V.rank() != 1) {
    throw ShapeError("scale_rows: expected a vector, got " +
                     shape_string(V.dims()));
  }
  Tensor out({factors.size(), V.size()});
  for (std::size_t r = 0; r < factors.size(); ++r) {
    auto dst = out.row(r);
    for (std::size_t i = 0; i < V.size(); ++i) dst[i] = V[i] * factors[r];
  }
  std::vector<double> f(factors.begin(), factors.end());
  return v.tape()->record(std::move(out), {v}, [v, f](Tape& t, const Tensor& g, const Tensor&) {
    Tensor& d = t.grad(v);
    for (std::size_t r = 0; r < f.size(); ++r) {
      auto src = g.row(r);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i] * f[r];
    }
  });
}

Var pick_weighted_sum(Var x, std::span<const std::size_t> indices,
                      std::span<const double> weights) {
  const Tensor& X = x.value();
  require_batch_like("pick_weighted_sum", X);
  if (indices.size() != X.rows() || weights.size() != X.rows()) {
    throw ShapeError("pick_weighted_sum: " + std::to_string(indices.size()) +
                     " indices and " + std::to_string(weights.size()) +
                     " weights for " + shape_string(X.dims()));
  }
  double total = 0.0;
  for (std::size_t r = 0; r < X.rows(); ++r) {
    if (indices[r] >= X.cols()) {
      throw std::out_of_range("pick_weighted_sum: index " +
                              std::to_string(indices[r]) + " out of range");
    }
    if (weights[r] != 0.0) total += weights[r] * X.at(r, indices[r]);
  }
  std::vector<std::size_t> ids(indices.begin(), indices.end());
  std::vector<double> ws(weights.begin(), weights.end());
  return x.tape()->record(Tensor({1}, {total}), {x},
                          [x, ids, ws](Tape& t, const Tensor& g, const Tensor&) {
                            Tensor& d = t.grad(x);
                            for (std::size_t r = 0; r < ids.size(); ++r)
                              d.at(r, ids[r]) += g[0] * ws[r];
                          });
}

Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  return x.tape()->record(Tensor({1}, {total}), {x},
                          [x](Tape& t, const Tensor& g, const Tensor&) {
                            for (double& v : t.grad(x).values()) v += g[0];
                          });
}

}  // namespace lencon
