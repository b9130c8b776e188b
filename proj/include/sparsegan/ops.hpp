#pragma once

#include <vector>

#include "sparsegan/tensor.hpp"

namespace sparsegan {

// Differentiable ops over rank-2 tensors (conv filters are rank-3). Each op
// validates shapes, computes the forward result, and attaches a backward
// rule when grad recording is on. Backward rules are themselves written as
// op compositions, so gradients can be differentiated again wherever the
// gradient penalty needs it.
//
// Elementwise ops broadcast in exactly two cases: identical shapes, or one
// operand with a single element (scalar <-> tensor).

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_const(const Tensor& a, double c);
Tensor neg(const Tensor& a);

Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor sqrt(const Tensor& x);

// Valid (no padding) 1-D cross-correlation over the time axis.
// x: {T, d_in}, filters: {w, d_in, d_out} -> {T-w+1, d_out}. T >= w.
Tensor conv1d(const Tensor& x, const Tensor& filters);
// Adjoint of conv1d w.r.t. its input: g {T-w+1, d_out} -> {T, d_in}.
Tensor conv1d_input_grad(const Tensor& g, const Tensor& filters);
// Adjoint of conv1d w.r.t. its filters: x {T, d_in}, g {T-w+1, d_out} -> {w, d_in, d_out}.
Tensor conv1d_filter_grad(const Tensor& x, const Tensor& g);

Tensor sum(const Tensor& x);  // -> {1,1}
Tensor mean(const Tensor& x); // -> {1,1}
// Adjoint of sum: broadcast a scalar to `shape`.
Tensor spread(const Tensor& s, Shape shape);

// Per-column maxima of a {T,F} map -> {1,F}. Ties break to the lowest time
// index so the backward route is deterministic.
Tensor max_over_time(const Tensor& x);

Tensor slice_rows(const Tensor& x, int64_t lo, int64_t n);
Tensor scatter_rows(const Tensor& x, int64_t lo, int64_t rows); // zeros elsewhere
Tensor slice_cols(const Tensor& x, int64_t lo, int64_t n);
Tensor scatter_cols(const Tensor& x, int64_t lo, int64_t cols);

inline Tensor row(const Tensor& x, int64_t i) { return slice_rows(x, i, 1); }

// Stack row blocks: every part must have the same column count.
Tensor concat_rows(const std::vector<Tensor>& parts);

// Index select over rows/columns with the matching scatter adjoints.
// Duplicate indices accumulate on scatter.
Tensor gather_rows(const Tensor& x, std::vector<int64_t> idx);
Tensor scatter_rows_at(const Tensor& x, std::vector<int64_t> idx, int64_t rows);
Tensor gather_cols(const Tensor& x, std::vector<int64_t> idx);
Tensor scatter_cols_at(const Tensor& x, std::vector<int64_t> idx, int64_t cols);

inline Tensor dot(const Tensor& a, const Tensor& b) { return sum(mul(a, b)); }

// Weighted token-level cross entropy with a numerically stable log-softmax.
// logits {T,N}, targets[t] in [0,N), weights[t] >= 0; returns the weighted
// mean over rows as {1,1}. First-order only.
Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& targets,
                          const std::vector<double>& weights);

} // namespace sparsegan
