#include "plumbing/nn/layers.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace plumbing::nn {

GraphBatch GraphBatch::build(const std::vector<const Plumbing*>& graphs) {
    GraphBatch batch;
    batch.num_graphs = static_cast<int>(graphs.size());
    std::vector<double> features;
    std::vector<int> node_graph, src, dst;
    batch.offsets.push_back(0);
    for (int g = 0; g < batch.num_graphs; ++g) {
        const Plumbing& p = *graphs[g];
        const int base = batch.offsets.back();
        for (int v = 0; v < p.size(); ++v) {
            features.push_back(static_cast<double>(p.weight(v)));
            node_graph.push_back(g);
            batch.deg_hat.push_back(1.0 + p.degree(v));
            for (int u : p.neighbors(v)) {
                src.push_back(base + u);
                dst.push_back(base + v);
            }
        }
        batch.offsets.push_back(base + p.size());
    }
    batch.num_nodes = batch.offsets.back();
    batch.features = Tensor(batch.num_nodes, 1, std::move(features));
    std::vector<int> loop_src = src, loop_dst = dst;
    for (int v = 0; v < batch.num_nodes; ++v) {
        loop_src.push_back(v);
        loop_dst.push_back(v);
    }
    std::vector<double> norm(loop_src.size());
    for (std::size_t e = 0; e < norm.size(); ++e)
        norm[e] = 1.0 / std::sqrt(batch.deg_hat[loop_src[e]] * batch.deg_hat[loop_dst[e]]);
    const int loop_count = static_cast<int>(norm.size());
    batch.gcn_norm = Tensor(loop_count, 1, std::move(norm));
    batch.node_graph = make_index(std::move(node_graph));
    batch.edge_src = make_index(std::move(src));
    batch.edge_dst = make_index(std::move(dst));
    batch.loop_src = make_index(std::move(loop_src));
    batch.loop_dst = make_index(std::move(loop_dst));
    return batch;
}

Linear::Linear(ParamStore& store, const std::string& name, int in, int out, Rng& rng)
    : weight_(store.add(name + ".weight", in, out, Init::GlorotUniform, rng)),
      bias_(store.add(name + ".bias", 1, out, Init::Zeros, rng)) {}

Mlp::Mlp(ParamStore& store, const std::string& name, const std::vector<int>& dims, Rng& rng) {
    if (dims.size() < 2) throw std::invalid_argument("mlp needs at least input and output dims");
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
        layers_.emplace_back(store, name + "." + std::to_string(i), dims[i], dims[i + 1], rng);
}

Tensor Mlp::operator()(const Tensor& x) const {
    Tensor h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        h = layers_[i](h);
        if (i + 1 < layers_.size()) h = relu(h);
    }
    return h;
}

ConvKind conv_kind_from_name(const std::string& name) {
    std::string upper;
    for (char c : name) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (upper == "GEN") return ConvKind::GEN;
    if (upper == "GCN") return ConvKind::GCN;
    if (upper == "GAT") return ConvKind::GAT;
    throw std::invalid_argument("unknown convolution kind: " + name);
}

std::string conv_kind_name(ConvKind kind) {
    switch (kind) {
    case ConvKind::GEN: return "GEN";
    case ConvKind::GCN: return "GCN";
    case ConvKind::GAT: return "GAT";
    }
    return "?";
}

GcnLayer::GcnLayer(ParamStore& store, const std::string& name, int in, int out, Rng& rng)
    : theta_(store.add(name + ".theta", in, out, Init::GlorotUniform, rng)),
      bias_(store.add(name + ".bias", 1, out, Init::Zeros, rng)) {}

Tensor GcnLayer::forward(const GraphBatch& batch, const Tensor& x) const {
    const Tensor h = matmul(x, theta_);
    return add_bias(edge_aggregate(h, batch.gcn_norm, batch.loop_src, batch.loop_dst, batch.num_nodes), bias_);
}

GatLayer::GatLayer(ParamStore& store, const std::string& name, int in, int out, Rng& rng)
    : theta_(store.add(name + ".theta", in, out, Init::GlorotUniform, rng)),
      att_target_(store.add(name + ".att_target", out, 1, Init::GlorotUniform, rng)),
      att_source_(store.add(name + ".att_source", out, 1, Init::GlorotUniform, rng)),
      bias_(store.add(name + ".bias", 1, out, Init::Zeros, rng)) {}

Tensor GatLayer::attention(const GraphBatch& batch, const Tensor& h) const {
    // a^T [h_i || h_j] splits into a target term and a source term.
    const Tensor target_score = matmul(h, att_target_);
    const Tensor source_score = matmul(h, att_source_);
    const Tensor logits = leaky_relu(
        add(gather_rows(target_score, batch.loop_dst), gather_rows(source_score, batch.loop_src)), kSlope);
    return segment_softmax(logits, batch.loop_dst, batch.num_nodes);
}

Tensor GatLayer::forward(const GraphBatch& batch, const Tensor& x) const {
    const Tensor h = project(x);
    const Tensor alpha = attention(batch, h);
    return add_bias(edge_aggregate(h, alpha, batch.loop_src, batch.loop_dst, batch.num_nodes), bias_);
}

GenLayer::GenLayer(ParamStore& store, const std::string& name, int in, int out, Rng& rng)
    : init_(store, name + ".init", {in, kHidden, out}, rng) {
    // Glorot limits of the full (2*out) x hidden matrix, drawn in two halves.
    const double limit = std::sqrt(6.0 / (2 * out + kHidden));
    msg_target_ = store.add(name + ".message.0.weight_target", out, kHidden, Init::Zeros, rng);
    msg_source_ = store.add(name + ".message.0.weight_source", out, kHidden, Init::Zeros, rng);
    for (Tensor* half : {&msg_target_, &msg_source_})
        for (double& v : half->values()) v = rng.uniform(-limit, limit);
    msg_bias_ = store.add(name + ".message.0.bias", 1, kHidden, Init::Zeros, rng);
    msg_out_ = Linear(store, name + ".message.1", kHidden, out, rng);
    update_ = Mlp(store, name + ".update", {2 * out, kHidden, out}, rng);
}

Tensor GenLayer::forward(const GraphBatch& batch, const Tensor& x) const {
    const Tensor x1 = init_(x);
    // W [x_i || x_j] = W_t x_i + W_s x_j: project per node, then gather per edge.
    const Tensor as_target = matmul(x1, msg_target_);
    const Tensor as_source = matmul(x1, msg_source_);
    const Tensor hidden = relu(add_bias(
        add(gather_rows(as_target, batch.edge_dst), gather_rows(as_source, batch.edge_src)), msg_bias_));
    const Tensor messages = segment_sum(msg_out_(hidden), batch.edge_dst, batch.num_nodes);
    return update_(concat(x1, messages, 1));
}

std::unique_ptr<ConvLayer> make_conv(ConvKind kind, ParamStore& store, const std::string& name, int in, int out,
                                     Rng& rng) {
    switch (kind) {
    case ConvKind::GEN: return std::make_unique<GenLayer>(store, name, in, out, rng);
    case ConvKind::GCN: return std::make_unique<GcnLayer>(store, name, in, out, rng);
    case ConvKind::GAT: return std::make_unique<GatLayer>(store, name, in, out, rng);
    }
    throw std::invalid_argument("unknown convolution kind");
}

GatedAggregator::GatedAggregator(ParamStore& store, const std::string& name, int in, int out, Rng& rng)
    : gate_(store, name + ".gate", in, out, rng),
      transform_(store, name + ".transform", in, out, rng),
      out_(store, name + ".out", out, out, rng) {}

Tensor GatedAggregator::forward(const GraphBatch& batch, const Tensor& x) const {
    const Tensor weights = segment_softmax(gate_(x), batch.node_graph, batch.num_graphs);
    return out_(segment_sum(elemwise_mul(weights, transform_(x)), batch.node_graph, batch.num_graphs));
}

}  // namespace plumbing::nn
