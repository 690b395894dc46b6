#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "plumbing/nn/tensor.hpp"
#include "plumbing/rng.hpp"

namespace plumbing::nn {

enum class Init { GlorotUniform, Zeros };

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Named trainable parameters with their Adam moments. Layers keep Tensor
/// handles into the store, so a store is not copyable; build a second model
/// and copy_values_from() to get an independent replica.
class ParamStore {
public:
    struct Entry {
        std::string name;
        Tensor param;
        std::vector<double> m, v;
    };

    ParamStore() = default;
    ParamStore(const ParamStore&) = delete;
    ParamStore& operator=(const ParamStore&) = delete;
    ParamStore(ParamStore&&) = default;
    ParamStore& operator=(ParamStore&&) = default;

    Tensor add(const std::string& name, int rows, int cols, Init init, Rng& rng);
    const Tensor& get(const std::string& name) const;
    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t parameter_count() const;
    std::int64_t step() const { return step_; }

    void zero_grad();
    /// L2 norm over the gradients of entries whose name starts with `prefix`.
    double grad_norm(const std::string& prefix = "") const;
    /// Rescales those gradients so their joint L2 norm is at most max_norm.
    void clip_grad_norm(double max_norm, const std::string& prefix = "");
    /// Bias-corrected Adam update, then clears gradients.
    void adam_step(const AdamConfig& config);

    void copy_values_from(const ParamStore& other);
    void add_grads_from(const ParamStore& other);
    void fill(double value);

private:
    std::vector<Entry> entries_;
    std::int64_t step_ = 0;
};

/// Directory holding manifest.json and tensors.bin (little-endian f64, in
/// manifest order). The manifest carries caller metadata under "model".
void save_checkpoint(const std::filesystem::path& dir, const ParamStore& store, const nlohmann::json& model);
nlohmann::json read_checkpoint_manifest(const std::filesystem::path& dir);
/// Loads values by name; every store entry must be present with its shape.
void load_checkpoint(const std::filesystem::path& dir, ParamStore& store);

struct GradCheckOptions {
    double step = 1e-5;
    /// Entries probed per parameter tensor; 0 probes every entry.
    int max_per_tensor = 0;
    std::uint64_t seed = 0;
    /// Denominator floor for the relative error.
    double floor = 1e-6;
    /// Only entries whose name starts with this are probed.
    std::string prefix;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
    bool passed(double tolerance) const { return max_rel_error < tolerance; }
};

/// Compares reverse-mode gradients of `loss` with central differences.
GradCheckReport grad_check(ParamStore& store, const std::function<Tensor()>& loss, const GradCheckOptions& options = {});

}  // namespace plumbing::nn
