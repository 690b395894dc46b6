#include "plumbing/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "plumbing/nn/kernels.hpp"

namespace plumbing::nn {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("shape mismatch: ") + what);
}

std::size_t count(int rows, int cols) { return static_cast<std::size_t>(rows) * cols; }

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

void check_index(const Index& ids, int bound, const char* what) {
    require(ids != nullptr, what);
    for (int id : *ids) require(id >= 0 && id < bound, what);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require(a.cols() == b.rows(), "matmul");
    const int m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(count(m, n));
    kernels::matmul(a.values().data(), b.values().data(), out.data(), m, k, n);
    return make_op(m, n, std::move(out), {a, b}, [m, k, n](Node& self) {
        Node& pa = parent(self, 0);
        Node& pb = parent(self, 1);
        if (pa.requires_grad) kernels::matmul_a_bt_acc(self.grad.data(), pb.value.data(), pa.grad.data(), m, n, k);
        if (pb.requires_grad) kernels::matmul_at_b_acc(pa.value.data(), self.grad.data(), pb.grad.data(), m, k, n);
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
    return make_op(a.rows(), a.cols(), std::move(out), {a, b}, [](Node& self) {
        for (std::size_t p = 0; p < 2; ++p) {
            Node& in = parent(self, p);
            if (!in.requires_grad) continue;
            for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += self.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "sub");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
    return make_op(a.rows(), a.cols(), std::move(out), {a, b}, [](Node& self) {
        Node& pa = parent(self, 0);
        Node& pb = parent(self, 1);
        if (pa.requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
        if (pb.requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] -= self.grad[i];
    });
}

Tensor elemwise_mul(const Tensor& a, const Tensor& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "elemwise_mul");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
    return make_op(a.rows(), a.cols(), std::move(out), {a, b}, [](Node& self) {
        Node& pa = parent(self, 0);
        Node& pb = parent(self, 1);
        if (pa.requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * pb.value[i];
        if (pb.requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i] * pa.value[i];
    });
}

Tensor scale(const Tensor& a, double factor) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * factor;
    return make_op(a.rows(), a.cols(), std::move(out), {a}, [factor](Node& self) {
        Node& pa = parent(self, 0);
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * factor;
    });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
    require(bias.rows() == 1 && bias.cols() == x.cols(), "add_bias");
    const int rows = x.rows(), cols = x.cols();
    std::vector<double> out(x.values());
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) out[count(r, cols) + c] += bias.values()[c];
    return make_op(rows, cols, std::move(out), {x, bias}, [rows, cols](Node& self) {
        Node& px = parent(self, 0);
        Node& pb = parent(self, 1);
        if (px.requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) px.grad[i] += self.grad[i];
        if (pb.requires_grad)
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) pb.grad[c] += self.grad[count(r, cols) + c];
    });
}

Tensor mul_rows(const Tensor& x, const Tensor& w) {
    require(w.cols() == 1 && w.rows() == x.rows(), "mul_rows");
    const int rows = x.rows(), cols = x.cols();
    std::vector<double> out(x.size());
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) out[count(r, cols) + c] = x.values()[count(r, cols) + c] * w.values()[r];
    return make_op(rows, cols, std::move(out), {x, w}, [rows, cols](Node& self) {
        Node& px = parent(self, 0);
        Node& pw = parent(self, 1);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                const std::size_t i = count(r, cols) + c;
                if (px.requires_grad) px.grad[i] += self.grad[i] * pw.value[r];
                if (pw.requires_grad) pw.grad[r] += self.grad[i] * px.value[i];
            }
    });
}

Tensor exponential(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a.values()[i]);
    return make_op(a.rows(), a.cols(), std::move(out), {a}, [](Node& self) {
        Node& pa = parent(self, 0);
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * self.value[i];
    });
}

Tensor relu(const Tensor& a) { return leaky_relu(a, 0.0); }

Tensor leaky_relu(const Tensor& a, double slope) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = a.values()[i];
        out[i] = v > 0.0 ? v : slope * v;
    }
    return make_op(a.rows(), a.cols(), std::move(out), {a}, [slope](Node& self) {
        Node& pa = parent(self, 0);
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += pa.value[i] > 0.0 ? self.grad[i] : slope * self.grad[i];
    });
}

Tensor softmax(const Tensor& a, int axis) {
    require(axis == 0 || axis == 1, "softmax axis");
    if (axis == 0) {
        auto seg = make_index(std::vector<int>(a.rows(), 0));
        return segment_softmax(a, seg, 1);
    }
    const int rows = a.rows(), cols = a.cols();
    std::vector<double> out(a.size());
    for (int r = 0; r < rows; ++r) {
        const double* in = a.values().data() + count(r, cols);
        double* o = out.data() + count(r, cols);
        const double top = *std::max_element(in, in + cols);
        double total = 0.0;
        for (int c = 0; c < cols; ++c) total += (o[c] = std::exp(in[c] - top));
        for (int c = 0; c < cols; ++c) o[c] /= total;
    }
    return make_op(rows, cols, std::move(out), {a}, [rows, cols](Node& self) {
        Node& pa = parent(self, 0);
        for (int r = 0; r < rows; ++r) {
            const std::size_t base = count(r, cols);
            double dot = 0.0;
            for (int c = 0; c < cols; ++c) dot += self.grad[base + c] * self.value[base + c];
            for (int c = 0; c < cols; ++c) pa.grad[base + c] += self.value[base + c] * (self.grad[base + c] - dot);
        }
    });
}

Tensor concat(const Tensor& a, const Tensor& b, int axis) {
    require(axis == 0 || axis == 1, "concat axis");
    if (axis == 0) {
        require(a.cols() == b.cols(), "concat rows");
        std::vector<double> out(a.values());
        out.insert(out.end(), b.values().begin(), b.values().end());
        const std::size_t split = a.size();
        return make_op(a.rows() + b.rows(), a.cols(), std::move(out), {a, b}, [split](Node& self) {
            Node& pa = parent(self, 0);
            Node& pb = parent(self, 1);
            if (pa.requires_grad)
                for (std::size_t i = 0; i < split; ++i) pa.grad[i] += self.grad[i];
            if (pb.requires_grad)
                for (std::size_t i = split; i < self.grad.size(); ++i) pb.grad[i - split] += self.grad[i];
        });
    }
    require(a.rows() == b.rows(), "concat cols");
    const int rows = a.rows(), ca = a.cols(), cb = b.cols(), cols = ca + cb;
    std::vector<double> out(count(rows, cols));
    for (int r = 0; r < rows; ++r) {
        std::copy_n(a.values().data() + count(r, ca), ca, out.data() + count(r, cols));
        std::copy_n(b.values().data() + count(r, cb), cb, out.data() + count(r, cols) + ca);
    }
    return make_op(rows, cols, std::move(out), {a, b}, [rows, ca, cb, cols](Node& self) {
        Node& pa = parent(self, 0);
        Node& pb = parent(self, 1);
        for (int r = 0; r < rows; ++r) {
            const double* g = self.grad.data() + count(r, cols);
            if (pa.requires_grad)
                for (int c = 0; c < ca; ++c) pa.grad[count(r, ca) + c] += g[c];
            if (pb.requires_grad)
                for (int c = 0; c < cb; ++c) pb.grad[count(r, cb) + c] += g[ca + c];
        }
    });
}

Tensor gather_rows(const Tensor& a, const Index& rows) {
    check_index(rows, a.rows(), "gather_rows index");
    const int cols = a.cols();
    const int n = static_cast<int>(rows->size());
    std::vector<double> out(count(n, cols));
    for (int i = 0; i < n; ++i) std::copy_n(a.values().data() + count((*rows)[i], cols), cols, out.data() + count(i, cols));
    return make_op(n, cols, std::move(out), {a}, [rows, cols](Node& self) {
        Node& pa = parent(self, 0);
        for (std::size_t i = 0; i < rows->size(); ++i) {
            double* dst = pa.grad.data() + count((*rows)[i], cols);
            const double* g = self.grad.data() + i * cols;
            for (int c = 0; c < cols; ++c) dst[c] += g[c];
        }
    });
}

Tensor segment_sum(const Tensor& a, const Index& seg, int segments) {
    require(seg && static_cast<int>(seg->size()) == a.rows(), "segment_sum ids");
    check_index(seg, segments, "segment_sum ids");
    const int cols = a.cols();
    std::vector<double> out(count(segments, cols), 0.0);
    for (int r = 0; r < a.rows(); ++r) {
        double* dst = out.data() + count((*seg)[r], cols);
        const double* src = a.values().data() + count(r, cols);
        for (int c = 0; c < cols; ++c) dst[c] += src[c];
    }
    return make_op(segments, cols, std::move(out), {a}, [seg, cols](Node& self) {
        Node& pa = parent(self, 0);
        for (int r = 0; r < pa.rows; ++r) {
            const double* g = self.grad.data() + count((*seg)[r], cols);
            double* dst = pa.grad.data() + count(r, cols);
            for (int c = 0; c < cols; ++c) dst[c] += g[c];
        }
    });
}

Tensor segment_mean(const Tensor& a, const Index& seg, int segments) {
    require(seg && static_cast<int>(seg->size()) == a.rows(), "segment_mean ids");
    std::vector<double> inv(segments, 0.0);
    for (int s : *seg) {
        require(s >= 0 && s < segments, "segment_mean ids");
        inv[s] += 1.0;
    }
    for (double& v : inv) v = v > 0.0 ? 1.0 / v : 0.0;
    std::vector<double> weights(a.rows());
    for (int r = 0; r < a.rows(); ++r) weights[r] = inv[(*seg)[r]];
    return segment_sum(mul_rows(a, Tensor(a.rows(), 1, std::move(weights))), seg, segments);
}

Tensor segment_softmax(const Tensor& a, const Index& seg, int segments) {
    require(seg && static_cast<int>(seg->size()) == a.rows(), "segment_softmax ids");
    check_index(seg, segments, "segment_softmax ids");
    const int rows = a.rows(), cols = a.cols();
    std::vector<double> top(count(segments, cols), -std::numeric_limits<double>::infinity());
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double& t = top[count((*seg)[r], cols) + c];
            t = std::max(t, a.values()[count(r, cols) + c]);
        }
    std::vector<double> out(a.size());
    std::vector<double> total(count(segments, cols), 0.0);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const std::size_t s = count((*seg)[r], cols) + c;
            const std::size_t i = count(r, cols) + c;
            out[i] = std::exp(a.values()[i] - top[s]);
            total[s] += out[i];
        }
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) out[count(r, cols) + c] /= total[count((*seg)[r], cols) + c];
    return make_op(rows, cols, std::move(out), {a}, [seg, segments, rows, cols](Node& self) {
        Node& pa = parent(self, 0);
        std::vector<double> dot(count(segments, cols), 0.0);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                const std::size_t i = count(r, cols) + c;
                dot[count((*seg)[r], cols) + c] += self.grad[i] * self.value[i];
            }
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                const std::size_t i = count(r, cols) + c;
                pa.grad[i] += self.value[i] * (self.grad[i] - dot[count((*seg)[r], cols) + c]);
            }
    });
}

Tensor segment_log_softmax_flat(const Tensor& a, const Index& seg, int segments) {
    require(seg && static_cast<int>(seg->size()) == a.rows(), "segment_log_softmax ids");
    check_index(seg, segments, "segment_log_softmax ids");
    const int rows = a.rows(), cols = a.cols();
    std::vector<double> top(segments, -std::numeric_limits<double>::infinity());
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) top[(*seg)[r]] = std::max(top[(*seg)[r]], a.values()[count(r, cols) + c]);
    std::vector<double> total(segments, 0.0);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) total[(*seg)[r]] += std::exp(a.values()[count(r, cols) + c] - top[(*seg)[r]]);
    std::vector<double> out(a.size());
    for (int r = 0; r < rows; ++r) {
        const double lse = top[(*seg)[r]] + std::log(total[(*seg)[r]]);
        for (int c = 0; c < cols; ++c) out[count(r, cols) + c] = a.values()[count(r, cols) + c] - lse;
    }
    return make_op(rows, cols, std::move(out), {a}, [seg, segments, rows, cols](Node& self) {
        Node& pa = parent(self, 0);
        std::vector<double> gsum(segments, 0.0);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) gsum[(*seg)[r]] += self.grad[count(r, cols) + c];
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                const std::size_t i = count(r, cols) + c;
                pa.grad[i] += self.grad[i] - std::exp(self.value[i]) * gsum[(*seg)[r]];
            }
    });
}

Tensor edge_aggregate(const Tensor& h, const Tensor& weight, const Index& src, const Index& dst, int targets) {
    require(src && dst && src->size() == dst->size(), "edge_aggregate edges");
    require(weight.cols() == 1 && static_cast<std::size_t>(weight.rows()) == src->size(), "edge_aggregate weights");
    check_index(src, h.rows(), "edge_aggregate src");
    check_index(dst, targets, "edge_aggregate dst");
    const int cols = h.cols();
    std::vector<double> out(count(targets, cols), 0.0);
    for (std::size_t e = 0; e < src->size(); ++e) {
        const double w = weight.values()[e];
        const double* in = h.values().data() + count((*src)[e], cols);
        double* o = out.data() + count((*dst)[e], cols);
        for (int c = 0; c < cols; ++c) o[c] += w * in[c];
    }
    return make_op(targets, cols, std::move(out), {h, weight}, [src, dst, cols](Node& self) {
        Node& ph = parent(self, 0);
        Node& pw = parent(self, 1);
        for (std::size_t e = 0; e < src->size(); ++e) {
            const double* g = self.grad.data() + count((*dst)[e], cols);
            const std::size_t base = count((*src)[e], cols);
            if (ph.requires_grad) {
                const double w = pw.value[e];
                for (int c = 0; c < cols; ++c) ph.grad[base + c] += w * g[c];
            }
            if (pw.requires_grad) {
                double dot = 0.0;
                for (int c = 0; c < cols; ++c) dot += g[c] * ph.value[base + c];
                pw.grad[e] += dot;
            }
        }
    });
}

Tensor pick(const Tensor& a, const Index& rows, const Index& cols) {
    require(rows && cols && rows->size() == cols->size(), "pick indices");
    check_index(rows, a.rows(), "pick rows");
    check_index(cols, a.cols(), "pick cols");
    const int n = static_cast<int>(rows->size());
    const int width = a.cols();
    std::vector<double> out(n);
    for (int k = 0; k < n; ++k) out[k] = a.values()[count((*rows)[k], width) + (*cols)[k]];
    return make_op(n, 1, std::move(out), {a}, [rows, cols, width](Node& self) {
        Node& pa = parent(self, 0);
        for (std::size_t k = 0; k < rows->size(); ++k) pa.grad[count((*rows)[k], width) + (*cols)[k]] += self.grad[k];
    });
}

Tensor sum_all(const Tensor& a) {
    double total = 0.0;
    for (double v : a.values()) total += v;
    return make_op(1, 1, {total}, {a}, [](Node& self) {
        Node& pa = parent(self, 0);
        for (double& g : pa.grad) g += self.grad[0];
    });
}

Tensor mean_all(const Tensor& a) {
    require(a.size() > 0, "mean_all of empty tensor");
    return scale(sum_all(a), 1.0 / static_cast<double>(a.size()));
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& classes) {
    require(static_cast<int>(classes.size()) == logits.rows() && logits.rows() > 0, "cross_entropy classes");
    const int rows = logits.rows(), cols = logits.cols();
    for (int c : classes) require(c >= 0 && c < cols, "cross_entropy class id");
    std::vector<double> probs(logits.size());
    double loss = 0.0;
    for (int r = 0; r < rows; ++r) {
        const double* in = logits.values().data() + count(r, cols);
        double* p = probs.data() + count(r, cols);
        const double top = *std::max_element(in, in + cols);
        double total = 0.0;
        for (int c = 0; c < cols; ++c) total += (p[c] = std::exp(in[c] - top));
        for (int c = 0; c < cols; ++c) p[c] /= total;
        loss += top + std::log(total) - in[classes[r]];
    }
    loss /= rows;
    return make_op(1, 1, {loss}, {logits}, [probs = std::move(probs), classes, rows, cols](Node& self) {
        Node& pl = parent(self, 0);
        const double g = self.grad[0] / rows;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                const std::size_t i = count(r, cols) + c;
                pl.grad[i] += g * (probs[i] - (c == classes[r] ? 1.0 : 0.0));
            }
    });
}

Tensor sum_nodes(const Tensor& x, const Index& node_graph, int graphs) { return segment_sum(x, node_graph, graphs); }

Tensor mean_nodes(const Tensor& x, const Index& node_graph, int graphs) { return segment_mean(x, node_graph, graphs); }

}  // namespace plumbing::nn
