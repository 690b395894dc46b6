#include "plumbing/nn/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#include <omp.h>

namespace plumbing::nn::kernels {

namespace {

// 6 x 16 accumulators fill the vector register file on AVX2 and AVX-512.
constexpr int kRowTile = 6;
constexpr int kColTile = 16;
// Outputs this narrow skip packing; padding them to a panel wastes most work.
constexpr int kSkinnyCols = 4;
// Below this many multiply-adds a thread team costs more than it saves.
constexpr long kParallelWork = 1L << 16;

// Packs B into column panels of width kColTile, zero padded: panel j holds
// B[p][j*kColTile .. (j+1)*kColTile - 1] contiguously for p = 0..k-1.
void pack_panels(const double* b, int k, int n, std::vector<double>& packed) {
    const int panels = (n + kColTile - 1) / kColTile;
    packed.assign(static_cast<std::size_t>(panels) * k * kColTile, 0.0);
    for (int jp = 0; jp < panels; ++jp) {
        const int j0 = jp * kColTile;
        const int width = std::min(kColTile, n - j0);
        double* dst = packed.data() + static_cast<std::size_t>(jp) * k * kColTile;
        for (int p = 0; p < k; ++p) std::memcpy(dst + p * kColTile, b + static_cast<std::size_t>(p) * n + j0, width * sizeof(double));
    }
}

// Eight-lane double vector; lowers to one zmm or two ymm registers.
using Lanes = double __attribute__((vector_size(64)));
constexpr int kLanes = 8;
static_assert(kColTile == 2 * kLanes);

template <int Rows>
inline void micro_kernel(const double* a, int lda, const double* panel, int k, double* c, int ldc, int width,
                         bool accumulate) {
    Lanes acc[Rows][2] = {};
    for (int p = 0; p < k; ++p) {
        Lanes lo, hi;
        std::memcpy(&lo, panel + p * kColTile, sizeof lo);
        std::memcpy(&hi, panel + p * kColTile + kLanes, sizeof hi);
        for (int r = 0; r < Rows; ++r) {
            const double av = a[r * lda + p];
            acc[r][0] += av * lo;
            acc[r][1] += av * hi;
        }
    }
    double tile[Rows][kColTile];
    std::memcpy(tile, acc, sizeof tile);
    for (int r = 0; r < Rows; ++r) {
        double* out = c + r * ldc;
        if (accumulate)
            for (int s = 0; s < width; ++s) out[s] += tile[r][s];
        else
            for (int s = 0; s < width; ++s) out[s] = tile[r][s];
    }
}

void row_block(const double* a, const std::vector<double>& packed, double* c, int i0, int m, int k, int n,
               bool accumulate) {
    const int rows = std::min(kRowTile, m - i0);
    const int panels = (n + kColTile - 1) / kColTile;
    for (int jp = 0; jp < panels; ++jp) {
        const int j0 = jp * kColTile;
        const int width = std::min(kColTile, n - j0);
        const double* panel = packed.data() + static_cast<std::size_t>(jp) * k * kColTile;
        const double* arow = a + static_cast<std::size_t>(i0) * k;
        double* crow = c + static_cast<std::size_t>(i0) * n + j0;
        if (rows == kRowTile) {
            micro_kernel<kRowTile>(arow, k, panel, k, crow, n, width, accumulate);
        } else {
            for (int r = 0; r < rows; ++r) micro_kernel<1>(arow + r * k, k, panel, k, crow + r * n, n, width, accumulate);
        }
    }
}

bool go_parallel(long work) { return work >= kParallelWork && !omp_in_parallel() && omp_get_max_threads() > 1; }

void gemm(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate, bool allow_parallel) {
    if (m == 0 || n == 0) return;
    if (k == 0) {
        if (!accumulate) std::fill(c, c + static_cast<std::size_t>(m) * n, 0.0);
        return;
    }
    if (n <= kSkinnyCols) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) {
                double sum = 0.0;
                for (int p = 0; p < k; ++p) sum += a[static_cast<std::size_t>(i) * k + p] * b[static_cast<std::size_t>(p) * n + j];
                double& out = c[static_cast<std::size_t>(i) * n + j];
                out = accumulate ? out + sum : sum;
            }
        return;
    }
    std::vector<double> packed;
    pack_panels(b, k, n, packed);
    const int blocks = (m + kRowTile - 1) / kRowTile;
    if (allow_parallel && go_parallel(static_cast<long>(m) * k * n)) {
#pragma omp parallel for schedule(static)
        for (int blk = 0; blk < blocks; ++blk) row_block(a, packed, c, blk * kRowTile, m, k, n, accumulate);
    } else {
        for (int blk = 0; blk < blocks; ++blk) row_block(a, packed, c, blk * kRowTile, m, k, n, accumulate);
    }
}

}  // namespace

void matmul(const double* a, const double* b, double* c, int m, int k, int n) { gemm(a, b, c, m, k, n, false, true); }

void matmul_serial(const double* a, const double* b, double* c, int m, int k, int n) {
    gemm(a, b, c, m, k, n, false, false);
}

void matmul_reference(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double sum = 0.0;
            for (int p = 0; p < k; ++p) sum += a[static_cast<std::size_t>(i) * k + p] * b[static_cast<std::size_t>(p) * n + j];
            c[static_cast<std::size_t>(i) * n + j] = sum;
        }
}

void transpose(const double* a, double* out, int rows, int cols) {
    constexpr int block = 32;
    for (int i0 = 0; i0 < rows; i0 += block)
        for (int j0 = 0; j0 < cols; j0 += block)
            for (int i = i0; i < std::min(rows, i0 + block); ++i)
                for (int j = j0; j < std::min(cols, j0 + block); ++j)
                    out[static_cast<std::size_t>(j) * rows + i] = a[static_cast<std::size_t>(i) * cols + j];
}

namespace {

void at_b(const double* a, const double* b, double* c, int m, int k, int n, bool allow_parallel) {
    std::vector<double> at(static_cast<std::size_t>(m) * k);
    transpose(a, at.data(), m, k);
    gemm(at.data(), b, c, k, m, n, true, allow_parallel);
}

void a_bt(const double* a, const double* b, double* c, int m, int n, int k, bool allow_parallel) {
    std::vector<double> bt(static_cast<std::size_t>(k) * n);
    transpose(b, bt.data(), k, n);
    gemm(a, bt.data(), c, m, n, k, true, allow_parallel);
}

}  // namespace

void matmul_at_b_acc(const double* a, const double* b, double* c, int m, int k, int n) { at_b(a, b, c, m, k, n, true); }

void matmul_at_b_acc_serial(const double* a, const double* b, double* c, int m, int k, int n) {
    at_b(a, b, c, m, k, n, false);
}

void matmul_a_bt_acc(const double* a, const double* b, double* c, int m, int n, int k) { a_bt(a, b, c, m, n, k, true); }

void matmul_a_bt_acc_serial(const double* a, const double* b, double* c, int m, int n, int k) {
    a_bt(a, b, c, m, n, k, false);
}

int available_threads() { return omp_in_parallel() ? 1 : omp_get_max_threads(); }

}  // namespace plumbing::nn::kernels
