#pragma once

#include <memory>
#include <string>
#include <vector>

#include "plumbing/core.hpp"
#include "plumbing/nn/ops.hpp"
#include "plumbing/nn/params.hpp"

namespace plumbing::nn {

/// Disjoint union of plumbing graphs, ready for message passing. Nodes of
/// graph g occupy rows offsets[g] .. offsets[g+1]-1.
struct GraphBatch {
    int num_nodes = 0;
    int num_graphs = 0;
    Tensor features;  // num_nodes x 1, the vertex weights
    Index node_graph;
    Index edge_src, edge_dst;  // both directions of every tree edge
    Index loop_src, loop_dst;  // tree edges plus one self loop per node
    Tensor gcn_norm;           // per loop edge: 1 / sqrt(deg_hat[src] * deg_hat[dst])
    std::vector<double> deg_hat;
    std::vector<int> offsets;

    static GraphBatch build(const std::vector<const Plumbing*>& graphs);
    static GraphBatch build(const Plumbing& graph) { return build(std::vector<const Plumbing*>{&graph}); }
};

class Linear {
public:
    Linear() = default;
    Linear(ParamStore& store, const std::string& name, int in, int out, Rng& rng);
    Tensor operator()(const Tensor& x) const { return add_bias(matmul(x, weight_), bias_); }
    const Tensor& weight() const { return weight_; }
    const Tensor& bias() const { return bias_; }

private:
    Tensor weight_, bias_;
};

/// Affine layers with ReLU between them; the last layer has no activation.
class Mlp {
public:
    Mlp() = default;
    Mlp(ParamStore& store, const std::string& name, const std::vector<int>& dims, Rng& rng);
    Tensor operator()(const Tensor& x) const;

private:
    std::vector<Linear> layers_;
};

enum class ConvKind { GEN, GCN, GAT };

ConvKind conv_kind_from_name(const std::string& name);
std::string conv_kind_name(ConvKind kind);

class ConvLayer {
public:
    virtual ~ConvLayer() = default;
    virtual Tensor forward(const GraphBatch& batch, const Tensor& x) const = 0;
};

/// z_i = Theta^T sum_{j in N(i) + i} x_j / sqrt(d_i d_j) + b.
class GcnLayer final : public ConvLayer {
public:
    GcnLayer(ParamStore& store, const std::string& name, int in, int out, Rng& rng);
    Tensor forward(const GraphBatch& batch, const Tensor& x) const override;

private:
    Tensor theta_, bias_;
};

/// Single-head attention over the closed neighborhood, LeakyReLU slope 0.2.
class GatLayer final : public ConvLayer {
public:
    static constexpr double kSlope = 0.2;
    GatLayer(ParamStore& store, const std::string& name, int in, int out, Rng& rng);
    Tensor forward(const GraphBatch& batch, const Tensor& x) const override;
    /// Attention coefficients per loop edge (E x 1), normalized per target.
    Tensor attention(const GraphBatch& batch, const Tensor& h) const;
    Tensor project(const Tensor& x) const { return matmul(x, theta_); }

private:
    Tensor theta_, att_target_, att_source_, bias_;
};

/// Node-wise init MLP, then one round: update(x_i, sum_j message(x_i, x_j)).
class GenLayer final : public ConvLayer {
public:
    static constexpr int kHidden = 128;
    GenLayer(ParamStore& store, const std::string& name, int in, int out, Rng& rng);
    Tensor forward(const GraphBatch& batch, const Tensor& x) const override;

private:
    Mlp init_;
    // First message layer acting on [x_i || x_j], stored as its two halves.
    Tensor msg_target_, msg_source_, msg_bias_;
    Linear msg_out_;
    Mlp update_;
};

std::unique_ptr<ConvLayer> make_conv(ConvKind kind, ParamStore& store, const std::string& name, int in, int out,
                                     Rng& rng);

/// h_G = out(sum_i softmax_nodes(gate(x_i)) * transform(x_i)), per graph.
class GatedAggregator {
public:
    GatedAggregator() = default;
    GatedAggregator(ParamStore& store, const std::string& name, int in, int out, Rng& rng);
    Tensor forward(const GraphBatch& batch, const Tensor& x) const;

private:
    Linear gate_, transform_, out_;
};

}  // namespace plumbing::nn
