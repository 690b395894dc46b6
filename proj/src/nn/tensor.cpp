#include "plumbing/nn/tensor.hpp"

#include <stdexcept>
#include <unordered_set>

namespace plumbing::nn {

Tensor::Tensor(int rows, int cols, std::vector<double> values, bool requires_grad) {
    if (rows < 0 || cols < 0 || values.size() != static_cast<std::size_t>(rows) * cols)
        throw std::invalid_argument("tensor: element count does not match shape");
    node_ = std::make_shared<Node>();
    node_->rows = rows;
    node_->cols = cols;
    node_->value = std::move(values);
    node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
    return Tensor(rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, 0.0), requires_grad);
}

Tensor Tensor::filled(int rows, int cols, double value) {
    return Tensor(rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, value));
}

Tensor Tensor::scalar(double value) { return Tensor(1, 1, {value}); }

std::vector<double>& Tensor::grad() {
    node_->ensure_grad();
    return node_->grad;
}

const std::vector<double>& Tensor::grad() const {
    node_->ensure_grad();
    return node_->grad;
}

double Tensor::item() const {
    if (size() != 1) throw std::logic_error("item: tensor is not 1x1");
    return node_->value[0];
}

Tensor Tensor::detach() const { return Tensor(rows(), cols(), values()); }

void Tensor::backward() const {
    if (size() != 1) throw std::logic_error("backward: tensor is not 1x1");
    if (!node_->requires_grad) return;

    // Iterative post-order DFS gives a topological order of the tape.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next++].get();
            if (parent->requires_grad && seen.insert(parent).second) stack.push_back({parent, 0});
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    node_->ensure_grad();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node& node = **it;
        if (!node.backward) continue;
        for (auto& parent : node.parents)
            if (parent->requires_grad) parent->ensure_grad();
        node.backward(node);
    }
}

Tensor make_op(int rows, int cols, std::vector<double> value, std::vector<Tensor> parents, BackwardFn backward) {
    auto node = std::make_shared<Node>();
    node->rows = rows;
    node->cols = cols;
    node->value = std::move(value);
    for (const auto& p : parents) node->requires_grad = node->requires_grad || p.requires_grad();
    if (node->requires_grad) {
        node->parents.reserve(parents.size());
        for (auto& p : parents) node->parents.push_back(p.shared());
        node->backward = std::move(backward);
    }
    return Tensor(std::move(node));
}

}  // namespace plumbing::nn
