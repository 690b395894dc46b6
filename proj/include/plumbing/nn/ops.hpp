#pragma once

#include <memory>
#include <vector>

#include "plumbing/nn/tensor.hpp"

namespace plumbing::nn {

/// Shared, immutable index list (row ids, segment ids); cheap to capture.
using Index = std::shared_ptr<const std::vector<int>>;

inline Index make_index(std::vector<int> ids) { return std::make_shared<const std::vector<int>>(std::move(ids)); }

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor elemwise_mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// X(n x c) + b(1 x c) broadcast over rows.
Tensor add_bias(const Tensor& x, const Tensor& bias);
/// X(n x c) scaled row-wise by w(n x 1).
Tensor mul_rows(const Tensor& x, const Tensor& w);

Tensor exponential(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);

/// axis 1: per row; axis 0: per column over all rows.
Tensor softmax(const Tensor& a, int axis);
Tensor concat(const Tensor& a, const Tensor& b, int axis);

Tensor gather_rows(const Tensor& a, const Index& rows);
/// out[seg[r]] += a[r]; `segments` rows in the result.
Tensor segment_sum(const Tensor& a, const Index& seg, int segments);
Tensor segment_mean(const Tensor& a, const Index& seg, int segments);
/// Softmax over the rows of each segment, independently per column.
Tensor segment_softmax(const Tensor& a, const Index& seg, int segments);
/// Log-softmax over all entries of the rows of each segment (flattened).
Tensor segment_log_softmax_flat(const Tensor& a, const Index& seg, int segments);

/// out[dst[e]] += weight[e] * h[src[e]]; weight is E x 1.
Tensor edge_aggregate(const Tensor& h, const Tensor& weight, const Index& src, const Index& dst, int targets);

/// Entries a[rows[k], cols[k]] as a K x 1 column.
Tensor pick(const Tensor& a, const Index& rows, const Index& cols);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);

/// Mean over rows of -log softmax(logits[r])[classes[r]].
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& classes);

// Shorthands used by layers and the model code.
Tensor sum_nodes(const Tensor& x, const Index& node_graph, int graphs);
Tensor mean_nodes(const Tensor& x, const Index& node_graph, int graphs);

}  // namespace plumbing::nn
