#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fsl/common/types.hpp"
#include "fsl/numerics/tape.hpp"

// Differentiable ops over Tape nodes. Vectors are rank-1 and act as row
// vectors wherever a matrix product is involved (x * W).
namespace fsl::numerics {

// [m x k] * [k x n] -> [m x n]; a rank-1 lhs of length k yields a rank-1 [n].
Var matmul(Var a, Var b);
Var transpose(Var a);

// Elementwise. Binary ops require identical shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);

Var sum(Var a);
Var mean(Var a);

// Stabilized softmax of a rank-1 input.
Var softmax_row(Var x);

// Row-wise softmax of a square [T x T] score matrix where row t only sees
// columns <= t. Masked entries are exactly zero.
Var causal_softmax(Var scores);

// Gathers rows of table [R x d] -> [T x d]; backward scatter-adds.
// Gradient for frozen_row (padding) is dropped.
Var embedding_lookup(Var table, std::span<const ItemId> ids, std::optional<std::size_t> frozen_row = std::nullopt);

// Row r of a matrix as a rank-1 tensor.
Var row(Var x, std::size_t r);

Var dot(Var a, Var b);

inline constexpr double kCosineEps = 1e-12;

// a.b / (|a||b| + 1e-12); zero vectors give 0.
Var cosine_similarity(Var a, Var b);

// -log softmax(logits)[target] via log-sum-exp.
Var cross_entropy_logits(Var logits, std::size_t target);

// Mean over rows of per-row cross entropy; logits [T x M], one target per row.
Var cross_entropy_rows(Var logits, std::span<const std::size_t> targets);

// logits[..., i] = h . table[i] for i < count. h is [d] or [T x d].
Var score_rows(Var h, Var table, std::size_t count);

// Copy that blocks gradient flow.
Var detach(Var a);

// Multi-positive InfoNCE over scalar similarity nodes:
//   log(sum_p e^{s_p/tau} + sum_n e^{s_n/tau}) - log(sum_p e^{s_p/tau})
// evaluated with log-sum-exp. An empty negative set gives exactly 0.
Var contrastive_nll(std::span<const Var> positives, std::span<const Var> negatives, double tau);

// Plain value helpers shared with non-tape code.
double log_sum_exp(std::span<const double> xs);
std::vector<double> softmax(std::span<const double> xs);

} // namespace fsl::numerics
