#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "plumbing/nn/kernels.hpp"
#include "plumbing/nn/layers.hpp"

using namespace plumbing;
using namespace plumbing::nn;

namespace {

std::vector<double> random_values(Rng& rng, std::size_t n) {
    std::vector<double> out(n);
    for (double& x : out) x = rng.uniform(-1.0, 1.0);
    return out;
}

// Scalar probe sum(out * w) with fixed random w, so every output entry gets a
// distinct upstream gradient.
Tensor probe(const Tensor& out, std::uint64_t seed = 99) {
    Rng rng(seed);
    return sum_all(elemwise_mul(out, Tensor(out.rows(), out.cols(), random_values(rng, out.size()))));
}

struct OpFixture {
    ParamStore store;
    Rng rng{5};
    Tensor param(const std::string& name, int rows, int cols) {
        Tensor t = store.add(name, rows, cols, Init::Zeros, rng);
        t.values() = random_values(rng, t.size());
        return t;
    }
    GradCheckReport check(const std::function<Tensor()>& loss) { return grad_check(store, loss); }
};

Plumbing sample_tree(std::uint64_t seed, int nodes) {
    Rng rng(seed);
    return oracle::random_tree(rng, nodes, -5, 5);
}

void set(ParamStore& store, const std::string& name, std::vector<double> values) {
    Tensor handle = store.get(name);
    REQUIRE(handle.size() == values.size());
    handle.values() = std::move(values);
}

// Zero-initialized biases put ReLUs exactly on their kink for zero-weight
// vertices; a small shift keeps central differences off the kink.
void jitter(nn::ParamStore& store, std::uint64_t seed) {
    Rng rng(seed);
    for (const auto& e : store.entries()) {
        nn::Tensor handle = e.param;
        for (double& v : handle.values()) v += rng.uniform(-0.1, 0.1);
    }
}

}  // namespace

TEST_SUITE("tensor-nn") {

TEST_CASE("kernels: tiled, serial and reference products agree") {
    Rng rng(1);
    for (auto [m, k, n] : std::vector<std::tuple<int, int, int>>{
             {1, 1, 1}, {3, 5, 2}, {7, 3, 4}, {6, 16, 16}, {13, 33, 17}, {64, 128, 128}, {300, 129, 31}, {5, 128, 1}}) {
        const auto a = random_values(rng, static_cast<std::size_t>(m) * k);
        const auto b = random_values(rng, static_cast<std::size_t>(k) * n);
        std::vector<double> fast(m * n), serial(m * n), reference(m * n);
        kernels::matmul(a.data(), b.data(), fast.data(), m, k, n);
        kernels::matmul_serial(a.data(), b.data(), serial.data(), m, k, n);
        kernels::matmul_reference(a.data(), b.data(), reference.data(), m, k, n);
        CHECK(fast == serial);
        for (int i = 0; i < m * n; ++i) CHECK(fast[i] == doctest::Approx(reference[i]).epsilon(1e-12));
    }
}

TEST_CASE("kernels: transposed accumulations match naive loops") {
    Rng rng(2);
    const int m = 37, k = 19, n = 23;
    const auto a = random_values(rng, m * k), b = random_values(rng, m * n), c0 = random_values(rng, k * n);
    std::vector<double> c = c0, c_serial = c0, naive = c0;
    kernels::matmul_at_b_acc(a.data(), b.data(), c.data(), m, k, n);
    kernels::matmul_at_b_acc_serial(a.data(), b.data(), c_serial.data(), m, k, n);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < n; ++j)
            for (int r = 0; r < m; ++r) naive[i * n + j] += a[r * k + i] * b[r * n + j];
    CHECK(c == c_serial);
    for (int i = 0; i < k * n; ++i) CHECK(c[i] == doctest::Approx(naive[i]).epsilon(1e-12));

    // C(m x k) += A(m x n) B(k x n)^T
    const auto x = random_values(rng, m * n), y = random_values(rng, k * n), d0 = random_values(rng, m * k);
    std::vector<double> d = d0, d_serial = d0, expect = d0;
    kernels::matmul_a_bt_acc(x.data(), y.data(), d.data(), m, n, k);
    kernels::matmul_a_bt_acc_serial(x.data(), y.data(), d_serial.data(), m, n, k);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j)
            for (int r = 0; r < n; ++r) expect[i * k + j] += x[i * n + r] * y[j * n + r];
    CHECK(d == d_serial);
    for (int i = 0; i < m * k; ++i) CHECK(d[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("basic op values") {
    const Tensor s = softmax(Tensor(1, 2, {0.0, 0.0}), 1);
    CHECK(s.values() == std::vector<double>{0.5, 0.5});
    const Tensor r = relu(Tensor(1, 2, {-1.0, 2.0}));
    CHECK(r.values() == std::vector<double>{0.0, 2.0});
    const Tensor x(2, 3, {1, 2, 3, 4, 5, 6});
    CHECK(matmul(Tensor(2, 2, {1, 0, 0, 1}), x).values() == x.values());
    CHECK(leaky_relu(Tensor(1, 2, {-1.0, 3.0}), 0.2).values() == std::vector<double>{-0.2, 3.0});
    CHECK(concat(x, x, 0).rows() == 4);
    CHECK(concat(x, x, 1).cols() == 6);
    CHECK_THROWS_AS(matmul(x, x), std::invalid_argument);
    CHECK_THROWS_AS(add(x, Tensor(3, 2, std::vector<double>(6))), std::invalid_argument);
}

TEST_CASE("softmax rows and columns sum to one") {
    Rng rng(3);
    const Tensor a(7, 5, random_values(rng, 35));
    const Tensor rows = softmax(a, 1), cols = softmax(a, 0);
    for (int r = 0; r < 7; ++r) {
        double total = 0.0;
        for (int c = 0; c < 5; ++c) {
            CHECK(rows.at(r, c) > 0.0);
            total += rows.at(r, c);
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
    }
    for (int c = 0; c < 5; ++c) {
        double total = 0.0;
        for (int r = 0; r < 7; ++r) total += cols.at(r, c);
        CHECK(std::abs(total - 1.0) < 1e-12);
    }
}

TEST_CASE("cross entropy values") {
    CHECK(cross_entropy(Tensor(1, 2, {0.0, 0.0}), {1}).item() == doctest::Approx(std::log(2.0)));
    CHECK(cross_entropy(Tensor(1, 2, {10.0, -10.0}), {0}).item() == doctest::Approx(2.0611536e-9).epsilon(1e-6));
}

TEST_CASE("every op passes the finite-difference check") {
    OpFixture f;
    const Tensor a = f.param("a", 5, 4), b = f.param("b", 4, 3), c = f.param("c", 5, 4), bias = f.param("bias", 1, 4);
    const Tensor w = f.param("w", 5, 1);
    const Index seg = make_index({0, 0, 1, 1, 1});
    const Index src = make_index({0, 1, 2, 3, 4, 4}), dst = make_index({1, 0, 3, 2, 2, 4});
    const Tensor edge_w = f.param("edge_w", 6, 1);
    const std::vector<std::pair<const char*, std::function<Tensor()>>> cases{
        {"matmul", [&] { return probe(matmul(a, b)); }},
        {"add", [&] { return probe(add(a, c)); }},
        {"sub", [&] { return probe(sub(a, c)); }},
        {"elemwise_mul", [&] { return probe(elemwise_mul(a, c)); }},
        {"scale", [&] { return probe(scale(a, -1.7)); }},
        {"add_bias", [&] { return probe(add_bias(a, bias)); }},
        {"mul_rows", [&] { return probe(mul_rows(a, w)); }},
        {"exponential", [&] { return probe(exponential(a)); }},
        {"relu", [&] { return probe(relu(a)); }},
        {"leaky_relu", [&] { return probe(leaky_relu(a, 0.2)); }},
        {"softmax rows", [&] { return probe(softmax(a, 1)); }},
        {"softmax columns", [&] { return probe(softmax(a, 0)); }},
        {"concat rows", [&] { return probe(concat(a, c, 0)); }},
        {"concat columns", [&] { return probe(concat(a, c, 1)); }},
        {"gather_rows", [&] { return probe(gather_rows(a, make_index({4, 0, 0, 2}))); }},
        {"segment_sum", [&] { return probe(segment_sum(a, seg, 2)); }},
        {"segment_mean", [&] { return probe(segment_mean(a, seg, 2)); }},
        {"segment_softmax", [&] { return probe(segment_softmax(a, seg, 2)); }},
        {"segment_log_softmax_flat", [&] { return probe(segment_log_softmax_flat(a, seg, 2)); }},
        {"edge_aggregate", [&] { return probe(edge_aggregate(a, edge_w, src, dst, 5)); }},
        {"pick", [&] { return probe(pick(a, make_index({0, 3, 3}), make_index({1, 2, 2}))); }},
        {"sum_all", [&] { return scale(sum_all(elemwise_mul(a, a)), 0.5); }},
        {"mean_all", [&] { return mean_all(elemwise_mul(a, c)); }},
        {"cross_entropy", [&] { return cross_entropy(matmul(a, b), {0, 2, 1, 1, 0}); }},
        {"sum_nodes", [&] { return probe(sum_nodes(a, seg, 2)); }},
        {"mean_nodes", [&] { return probe(mean_nodes(a, seg, 2)); }},
    };
    for (const auto& [name, loss] : cases) {
        CAPTURE(name);
        const auto report = f.check(loss);
        CHECK(report.checked > 0);
        CHECK(report.max_rel_error < 1e-4);
    }
}

TEST_CASE("a corrupted backward closure is caught") {
    OpFixture f;
    const Tensor a = f.param("a", 3, 3);
    auto doubled_wrong = [&] {
        std::vector<double> out(a.values());
        for (double& x : out) x *= 2.0;
        // Claims derivative 3 instead of 2.
        return make_op(3, 3, std::move(out), {a}, [](Node& self) {
            Node& in = *self.parents[0];
            for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += 3.0 * self.grad[i];
        });
    };
    CHECK_FALSE(f.check([&] { return probe(doubled_wrong()); }).passed(1e-4));
    CHECK(f.check([&] { return probe(scale(a, 2.0)); }).passed(1e-4));
}

TEST_CASE("linear layer gradients are essentially exact") {
    ParamStore store;
    Rng rng(6);
    const Linear layer(store, "lin", 4, 3, rng);
    const Tensor x(5, 4, random_values(rng, 20));
    CHECK(grad_check(store, [&] { return probe(layer(x)); }).max_rel_error < 1e-7);
}

TEST_CASE("mlp forward contract") {
    ParamStore store;
    Rng rng(7);
    const Mlp mlp(store, "mlp", {3, 8, 2}, rng);
    store.fill(0.0);
    const Tensor x(4, 3, random_values(rng, 12));
    const Tensor zero = mlp(x);
    for (double v : zero.values()) CHECK(v == 0.0);

    ParamStore identity_store;
    const Mlp single(identity_store, "id", {3, 3}, rng);
    set(identity_store, "id.0.weight", {1, 0, 0, 0, 1, 0, 0, 0, 1});
    set(identity_store, "id.0.bias", {0, 0, 0});
    CHECK(single(x).values() == x.values());

    ParamStore fresh;
    const Mlp deep(fresh, "deep", {3, 8, 5, 2}, rng);
    CHECK(grad_check(fresh, [&] { return probe(deep(x)); }).max_rel_error < 1e-4);
}

TEST_CASE("batch degrees include the self loop") {
    const Plumbing star({1, 2, 3, 4}, {{0, 1}, {0, 2}, {0, 3}});
    const GraphBatch batch = GraphBatch::build(star);
    CHECK(batch.deg_hat == std::vector<double>{4, 2, 2, 2});
    CHECK(batch.edge_src->size() == 6);
    CHECK(batch.loop_src->size() == 10);
    CHECK(batch.features.values() == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("gcn normalization examples") {
    ParamStore store;
    Rng rng(8);
    const GcnLayer layer(store, "gcn", 1, 1, rng);
    set(store, "gcn.theta", {1.0});
    const GraphBatch pair = GraphBatch::build(Plumbing({0, 0}, {{0, 1}}));
    const Tensor ones(2, 1, {1.0, 1.0});
    const Tensor z = layer.forward(pair, ones);
    CHECK(z.at(0, 0) == doctest::Approx(1.0));
    CHECK(z.at(1, 0) == doctest::Approx(1.0));
    const GraphBatch single = GraphBatch::build(Plumbing::single(0));
    CHECK(layer.forward(single, Tensor(1, 1, {3.5})).item() == doctest::Approx(3.5));
}

TEST_CASE("gat examples") {
    ParamStore store;
    Rng rng(9);
    const GatLayer layer(store, "gat", 2, 3, rng);
    set(store, "gat.att_target", {0, 0, 0});
    set(store, "gat.att_source", {0, 0, 0});
    const Plumbing star({0, 0, 0, 0}, {{0, 1}, {0, 2}, {0, 3}});
    const GraphBatch batch = GraphBatch::build(star);
    const Tensor x(4, 2, random_values(rng, 8));
    const Tensor projected = layer.project(x);
    const Tensor out = layer.forward(batch, x);
    for (int c = 0; c < 3; ++c) {
        double mean = 0.0;
        for (int r = 0; r < 4; ++r) mean += projected.at(r, c) / 4.0;
        CHECK(out.at(0, c) == doctest::Approx(mean));
        CHECK(out.at(1, c) == doctest::Approx((projected.at(0, c) + projected.at(1, c)) / 2.0));
    }
    const GraphBatch single = GraphBatch::build(Plumbing::single(0));
    const Tensor lone(1, 2, {0.3, -0.8});
    CHECK(layer.forward(single, lone).values() == layer.project(lone).values());

    ParamStore random_store;
    const GatLayer random_layer(random_store, "gat", 2, 3, rng);
    const GraphBatch tree = GraphBatch::build(sample_tree(10, 9));
    const Tensor alpha = random_layer.attention(tree, random_layer.project(Tensor(9, 2, random_values(rng, 18))));
    std::vector<double> per_target(9, 0.0);
    for (std::size_t e = 0; e < tree.loop_dst->size(); ++e) per_target[(*tree.loop_dst)[e]] += alpha.values()[e];
    for (double total : per_target) CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("graph layers pass gradient checks") {
    const GraphBatch batch = GraphBatch::build(sample_tree(11, 6));
    for (ConvKind kind : {ConvKind::GCN, ConvKind::GAT, ConvKind::GEN}) {
        CAPTURE(conv_kind_name(kind));
        ParamStore store;
        Rng rng(12);
        const auto layer = make_conv(kind, store, "conv", 1, 4, rng);
        jitter(store, 30);
        const auto report = grad_check(store, [&] { return probe(layer->forward(batch, batch.features)); });
        CHECK(report.max_rel_error < 1e-4);
    }
    ParamStore store;
    Rng rng(13);
    const GatedAggregator aggregator(store, "agg", 4, 3, rng);
    const Tensor x(6, 4, random_values(rng, 24));
    CHECK(grad_check(store, [&] { return probe(aggregator.forward(batch, x)); }).max_rel_error < 1e-4);
}

TEST_CASE("graph layers are permutation equivariant and the aggregator invariant") {
    const Plumbing p = sample_tree(14, 10);
    Rng rng(15);
    const auto perm = oracle::random_permutation(rng, p.size());
    const Plumbing q = p.relabeled(perm);
    const GraphBatch bp = GraphBatch::build(p), bq = GraphBatch::build(q);
    for (ConvKind kind : {ConvKind::GCN, ConvKind::GAT, ConvKind::GEN}) {
        CAPTURE(conv_kind_name(kind));
        ParamStore store;
        Rng init(16);
        const auto layer = make_conv(kind, store, "conv", 1, 8, init);
        const Tensor zp = layer->forward(bp, bp.features), zq = layer->forward(bq, bq.features);
        for (int i = 0; i < q.size(); ++i)
            for (int c = 0; c < 8; ++c) CHECK(std::abs(zq.at(i, c) - zp.at(perm[i], c)) < 1e-9);
        ParamStore agg_store;
        const GatedAggregator aggregator(agg_store, "agg", 8, 4, init);
        const Tensor hp = aggregator.forward(bp, zp), hq = aggregator.forward(bq, zq);
        for (int c = 0; c < 4; ++c) CHECK(std::abs(hp.at(0, c) - hq.at(0, c)) < 1e-9);
    }
}

TEST_CASE("aggregator on one node and on duplicated nodes") {
    ParamStore store;
    Rng rng(17);
    const GatedAggregator aggregator(store, "agg", 3, 2, rng);
    const std::vector<double> row = random_values(rng, 3);
    const Tensor one = aggregator.forward(GraphBatch::build(Plumbing::single(0)), Tensor(1, 3, row));
    std::vector<double> twice = row;
    twice.insert(twice.end(), row.begin(), row.end());
    const Tensor two = aggregator.forward(GraphBatch::build(Plumbing({0, 0}, {{0, 1}})), Tensor(2, 3, twice));
    for (int c = 0; c < 2; ++c) CHECK(two.at(0, c) == doctest::Approx(one.at(0, c)).epsilon(1e-12));
}

TEST_CASE("gen on an isolated node sees a zero message") {
    ParamStore store;
    Rng rng(18);
    const GenLayer layer(store, "gen", 1, 3, rng);
    const GraphBatch lone = GraphBatch::build(Plumbing::single(2));
    const Tensor out = layer.forward(lone, lone.features);
    CHECK(out.rows() == 1);
    CHECK(out.cols() == 3);
    // Same node in a pair: a non-empty neighborhood changes the output.
    const GraphBatch pair = GraphBatch::build(Plumbing({2, 5}, {{0, 1}}));
    CHECK(layer.forward(pair, pair.features).at(0, 0) != out.at(0, 0));
}

TEST_CASE("adam first step moves by lr against the gradient sign") {
    ParamStore store;
    Rng rng(19);
    Tensor p = store.add("p", 1, 3, Init::Zeros, rng);
    p.values() = {1.0, -2.0, 0.5};
    p.grad() = {0.3, -4.0, 0.0};
    store.adam_step({0.01});
    CHECK(p.values()[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
    CHECK(p.values()[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-6));
    CHECK(p.values()[2] == 0.5);
    for (double g : p.grad()) CHECK(g == 0.0);
    CHECK(store.step() == 1);
}

TEST_CASE("gradient clipping bounds the global norm") {
    ParamStore store;
    Rng rng(20);
    Tensor a = store.add("x.a", 1, 2, Init::Zeros, rng), b = store.add("y.b", 1, 1, Init::Zeros, rng);
    a.grad() = {3.0, 4.0};
    b.grad() = {12.0};
    CHECK(store.grad_norm() == doctest::Approx(13.0));
    store.clip_grad_norm(100.0, "x.");
    CHECK(a.grad()[0] == 3.0);
    store.clip_grad_norm(1.0, "x.");
    CHECK(store.grad_norm("x.") == doctest::Approx(1.0));
    CHECK(b.grad()[0] == 12.0);
    store.clip_grad_norm(1.0);
    CHECK(store.grad_norm() == doctest::Approx(1.0));
}

TEST_CASE("checkpoints round-trip by name and reject shape changes") {
    const auto dir = std::filesystem::temp_directory_path() / "plumbing_test_ckpt";
    std::filesystem::remove_all(dir);
    ParamStore store;
    Rng rng(21);
    const Mlp mlp(store, "m", {3, 4, 2}, rng);
    save_checkpoint(dir, store, {{"kind", "test"}});
    const auto manifest = read_checkpoint_manifest(dir);
    CHECK(manifest.at("format") == "plumbing-checkpoint/1");
    CHECK(manifest.at("tensors").size() == 4);
    CHECK(std::filesystem::file_size(dir / "tensors.bin") == 8 * store.parameter_count());

    ParamStore other;
    Rng other_rng(22);
    const Mlp copy(other, "m", {3, 4, 2}, other_rng);
    load_checkpoint(dir, other);
    for (std::size_t i = 0; i < store.entries().size(); ++i)
        CHECK(store.entries()[i].param.values() == other.entries()[i].param.values());

    ParamStore wrong;
    const Mlp mismatched(wrong, "m", {3, 5, 2}, other_rng);
    CHECK_THROWS(load_checkpoint(dir, wrong));
    std::filesystem::remove_all(dir);
}

TEST_CASE("forward passes are deterministic") {
    const GraphBatch batch = GraphBatch::build(sample_tree(23, 12));
    ParamStore store;
    Rng rng(24);
    const auto layer = make_conv(ConvKind::GEN, store, "gen", 1, 16, rng);
    CHECK(layer->forward(batch, batch.features).values() == layer->forward(batch, batch.features).values());
}

}  // TEST_SUITE
