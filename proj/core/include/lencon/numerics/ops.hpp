#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "lencon/numerics/tape.hpp"

namespace lencon {

// Additive score used to forbid a token without leaving finite arithmetic.
inline constexpr double kMaskPenalty = -1e9;

// Every primitive accepts either a vector [n] or a batch of row vectors
// [B x n]; results keep the caller's rank.

// W[m x n] applied to each row of x.
Var matmul(Var w, Var x);
// matmul(w, x) + b.
Var affine(Var w, Var x, Var b);

Var add(Var a, Var b);
Var mul(Var a, Var b);
Var tanh(Var a);
Var sigmoid(Var a);

enum class Elementwise { tanh, sigmoid, mul, add };
Var elementwise(Elementwise op, Var a, std::optional<Var> b = std::nullopt);

// Row-wise over the last axis, with max subtraction.
Var softmax(Var logits);
Var log_softmax(Var logits);

// Joins along the last axis; all parts must share the row count.
Var concat(Var a, Var b);
Var concat(std::span<const Var> parts);

// Columns [begin, begin + length) of every row.
Var slice(Var x, std::size_t begin, std::size_t length);

Var embedding_lookup(Var table, std::size_t index);
// One row per index, stacked into [indices.size() x d].
Var embedding_lookup(Var table, std::span<const std::size_t> indices);

// Stacks N tensors of shape [B x H] into [B x N x H].
Var stack(std::span<const Var> parts);
// memory[B x N x H], query[B x H] -> [B x N]; dot product per position.
Var batched_matvec(Var memory, Var query);
// weights[B x N], memory[B x N x H] -> [B x H]; weighted sum over positions.
Var batched_vecmat(Var weights, Var memory);

// v[H] scaled once per factor -> [factors.size() x H].
Var scale_rows(Var v, std::span<const double> factors);

// Sum of weights[b] * x[b, indices[b]]; a scalar [1].
Var pick_weighted_sum(Var x, std::span<const std::size_t> indices,
                      std::span<const double> weights);
Var sum(Var x);

}  // namespace lencon
