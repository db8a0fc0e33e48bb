#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "condense/nn/graph.hpp"

namespace condense::inline CONDENSE_PRECISION::nn {

// Differentiable primitives. Shape mismatches raise ShapeError naming both
// shapes. Vectors are n x 1 columns.

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var a, Real factor);
/// alpha * a + beta, elementwise.
Var affine(Var a, Real alpha, Real beta);
/// Scales a tensor by a 1x1 node.
Var mul_scalar(Var s, Var v);
/// Adds the column `v` (A x 1) to every row of `m` (L x A).
Var add_row_broadcast(Var m, Var v);

Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var log(Var a);

/// Softmax over all entries of a column.
Var softmax(Var a);
/// Softmax over entries whose mask is false; masked entries get exactly 0.
Var masked_softmax(Var a, const std::vector<bool>& masked);

/// Sum of all entries, 1x1.
Var sum(Var a);
Var dot(Var a, Var b);
/// Elementwise average of same-shape operands.
Var mean(const std::vector<Var>& parts);
/// Entry i of a column, 1x1.
Var pick(Var a, std::size_t index);

/// Vertical concatenation; operands share a column count.
Var concat(const std::vector<Var>& parts);
/// Rows [begin, begin + count).
Var slice_rows(Var a, std::size_t begin, std::size_t count);
/// Row r of a matrix as a column.
Var row(Var m, std::size_t r);
/// Stacks n x 1 columns as the rows of an L x n matrix.
Var stack_rows(const std::vector<Var>& columns);
/// Rows `ids` of a table, as an L x D matrix.
Var gather_rows(Var table, std::span<const std::int32_t> ids);

/// out[ids[i]] += a[i] for a column `a`; out has `size` rows.
Var scatter_add(Var a, std::span<const std::int32_t> ids, std::size_t size);
/// Zero-extends a column to `size` rows.
Var pad_rows(Var a, std::size_t size);

/// Kim-style temporal convolution over the rows of `input` (L x D). For each
/// window w: ReLU(W_w x_window + b_w) max-pooled over positions, giving f
/// values per window; outputs are concatenated in window order. Inputs with
/// fewer rows than the largest window are right-padded with zero rows.
/// weights[i] is f x (windows[i] * D); biases[i] is f x 1.
Var conv1d_temporal(Var input, std::span<const Var> weights,
                    std::span<const Var> biases,
                    std::span<const std::size_t> windows);

struct LstmState {
  Var h;
  Var c;
};

/// One LSTM step, gates ordered (input, forget, cell, output).
/// weight is 4H x (I + H), bias is 4H x 1.
LstmState lstm_step(Var x, LstmState prev, Var weight, Var bias);

}  // namespace condense::inline CONDENSE_PRECISION::nn
