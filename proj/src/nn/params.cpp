#include "plumbing/nn/params.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace plumbing::nn {

Tensor ParamStore::add(const std::string& name, int rows, int cols, Init init, Rng& rng) {
    for (const auto& e : entries_)
        if (e.name == name) throw std::invalid_argument("duplicate parameter name: " + name);
    std::vector<double> values(static_cast<std::size_t>(rows) * cols, 0.0);
    if (init == Init::GlorotUniform) {
        const double limit = std::sqrt(6.0 / (rows + cols));
        for (double& v : values) v = rng.uniform(-limit, limit);
    }
    Tensor param(rows, cols, std::move(values), true);
    entries_.push_back({name, param, std::vector<double>(param.size(), 0.0), std::vector<double>(param.size(), 0.0)});
    return param;
}

const Tensor& ParamStore::get(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e.param;
    throw std::out_of_range("unknown parameter: " + name);
}

std::size_t ParamStore::parameter_count() const {
    std::size_t total = 0;
    for (const auto& e : entries_) total += e.param.size();
    return total;
}

void ParamStore::zero_grad() {
    for (auto& e : entries_) std::fill(e.param.grad().begin(), e.param.grad().end(), 0.0);
}

double ParamStore::grad_norm(const std::string& prefix) const {
    double total = 0.0;
    for (const auto& e : entries_)
        if (e.name.starts_with(prefix))
            for (double g : e.param.grad()) total += g * g;
    return std::sqrt(total);
}

void ParamStore::clip_grad_norm(double max_norm, const std::string& prefix) {
    const double norm = grad_norm(prefix);
    if (norm <= max_norm || norm == 0.0) return;
    const double factor = max_norm / norm;
    for (auto& e : entries_)
        if (e.name.starts_with(prefix))
            for (double& g : e.param.grad()) g *= factor;
}

void ParamStore::adam_step(const AdamConfig& config) {
    ++step_;
    const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(step_));
    const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(step_));
    for (auto& e : entries_) {
        auto& value = e.param.values();
        auto& grad = e.param.grad();
        for (std::size_t i = 0; i < value.size(); ++i) {
            e.m[i] = config.beta1 * e.m[i] + (1.0 - config.beta1) * grad[i];
            e.v[i] = config.beta2 * e.v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
            const double m_hat = e.m[i] / correction1;
            const double v_hat = e.v[i] / correction2;
            value[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
            grad[i] = 0.0;
        }
    }
}

namespace {

void require_same_layout(const ParamStore& a, const ParamStore& b) {
    if (a.entries().size() != b.entries().size()) throw std::invalid_argument("parameter stores differ in layout");
    for (std::size_t i = 0; i < a.entries().size(); ++i) {
        const auto& x = a.entries()[i];
        const auto& y = b.entries()[i];
        if (x.name != y.name || x.param.rows() != y.param.rows() || x.param.cols() != y.param.cols())
            throw std::invalid_argument("parameter stores differ at " + x.name);
    }
}

}  // namespace

void ParamStore::copy_values_from(const ParamStore& other) {
    require_same_layout(*this, other);
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i].param.values() = other.entries_[i].param.values();
}

void ParamStore::add_grads_from(const ParamStore& other) {
    require_same_layout(*this, other);
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        auto& mine = entries_[i].param.grad();
        const auto& theirs = other.entries_[i].param.grad();
        for (std::size_t k = 0; k < mine.size(); ++k) mine[k] += theirs[k];
    }
}

void ParamStore::fill(double value) {
    for (auto& e : entries_) std::fill(e.param.values().begin(), e.param.values().end(), value);
}

void save_checkpoint(const std::filesystem::path& dir, const ParamStore& store, const nlohmann::json& model) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "plumbing-checkpoint/1";
    manifest["model"] = model;
    manifest["step"] = store.step();
    manifest["tensors"] = nlohmann::json::array();
    std::ofstream bin(dir / "tensors.bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot write " + (dir / "tensors.bin").string());
    for (const auto& e : store.entries()) {
        manifest["tensors"].push_back({{"name", e.name}, {"rows", e.param.rows()}, {"cols", e.param.cols()}});
        for (double v : e.param.values()) {
            std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
            char bytes[8];
            for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
            bin.write(bytes, 8);
        }
    }
    if (!bin) throw std::runtime_error("failed writing " + (dir / "tensors.bin").string());
    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
}

nlohmann::json read_checkpoint_manifest(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error("cannot read " + (dir / "manifest.json").string());
    return nlohmann::json::parse(in);
}

void load_checkpoint(const std::filesystem::path& dir, ParamStore& store) {
    const auto manifest = read_checkpoint_manifest(dir);
    std::ifstream bin(dir / "tensors.bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot read " + (dir / "tensors.bin").string());
    std::vector<std::pair<std::string, std::vector<double>>> loaded;
    for (const auto& t : manifest.at("tensors")) {
        const std::size_t n = t.at("rows").get<std::size_t>() * t.at("cols").get<std::size_t>();
        std::vector<double> values(n);
        for (double& v : values) {
            unsigned char bytes[8];
            if (!bin.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("truncated tensors.bin");
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
            v = std::bit_cast<double>(bits);
        }
        loaded.emplace_back(t.at("name").get<std::string>(), std::move(values));
    }
    for (const auto& e : store.entries()) {
        auto it = std::find_if(loaded.begin(), loaded.end(), [&](const auto& l) { return l.first == e.name; });
        if (it == loaded.end() || it->second.size() != e.param.size())
            throw std::runtime_error("checkpoint missing or misshapen parameter " + e.name);
        Tensor handle = e.param;
        handle.values() = it->second;
    }
}

GradCheckReport grad_check(ParamStore& store, const std::function<Tensor()>& loss, const GradCheckOptions& options) {
    store.zero_grad();
    loss().backward();
    GradCheckReport report;
    Rng rng(options.seed);
    for (const auto& e : store.entries()) {
        if (!e.name.starts_with(options.prefix)) continue;
        Tensor param = e.param;
        const std::vector<double> analytic = param.grad();
        std::vector<std::size_t> probes;
        if (options.max_per_tensor <= 0 || param.size() <= static_cast<std::size_t>(options.max_per_tensor)) {
            for (std::size_t i = 0; i < param.size(); ++i) probes.push_back(i);
        } else {
            for (int k = 0; k < options.max_per_tensor; ++k) probes.push_back(rng.index(param.size()));
        }
        for (std::size_t i : probes) {
            double& slot = param.values()[i];
            const double saved = slot;
            slot = saved + options.step;
            const double up = loss().item();
            slot = saved - options.step;
            const double down = loss().item();
            slot = saved;
            const double numeric = (up - down) / (2.0 * options.step);
            const double denom = std::max(std::abs(analytic[i]) + std::abs(numeric), options.floor);
            const double rel = std::abs(analytic[i] - numeric) / denom;
            ++report.checked;
            if (report.worst_param.empty() || rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = e.name;
                report.worst_index = i;
            }
        }
    }
    store.zero_grad();
    return report;
}

}  // namespace plumbing::nn
