#pragma once

#include <functional>
#include <memory>
#include <vector>

namespace plumbing::nn {

struct Node;
using BackwardFn = std::function<void(Node&)>;

/// One value on the tape. `backward` reads this node's grad and accumulates
/// into its parents' grads.
struct Node {
    int rows = 0;
    int cols = 0;
    std::vector<double> value;
    std::vector<double> grad;  // allocated lazily
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    BackwardFn backward;

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

/// Row-major 2-D matrix of doubles with shared ownership of its tape node.
/// Copies alias the same storage; use detach() for an independent constant.
class Tensor {
public:
    Tensor() = default;
    Tensor(int rows, int cols, std::vector<double> values, bool requires_grad = false);

    static Tensor zeros(int rows, int cols, bool requires_grad = false);
    static Tensor filled(int rows, int cols, double value);
    static Tensor scalar(double value);

    bool defined() const { return node_ != nullptr; }
    int rows() const { return node_->rows; }
    int cols() const { return node_->cols; }
    std::size_t size() const { return node_->value.size(); }
    bool requires_grad() const { return node_->requires_grad; }

    const std::vector<double>& values() const { return node_->value; }
    std::vector<double>& values() { return node_->value; }
    /// Gradient buffer, zero-filled on first access.
    std::vector<double>& grad();
    const std::vector<double>& grad() const;

    double at(int r, int c) const { return node_->value[static_cast<std::size_t>(r) * cols() + c]; }
    double item() const;

    /// Reverse pass from a 1x1 tensor; gradients accumulate into leaves.
    void backward() const;
    Tensor detach() const;

    Node& node() const { return *node_; }
    const std::shared_ptr<Node>& shared() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
    friend Tensor make_op(int, int, std::vector<double>, std::vector<Tensor>, BackwardFn);

    std::shared_ptr<Node> node_;
};

/// Records an op result. The closure and parent links are kept only when some
/// parent requires a gradient, so inference builds no tape.
Tensor make_op(int rows, int cols, std::vector<double> value, std::vector<Tensor> parents, BackwardFn backward);

}  // namespace plumbing::nn
