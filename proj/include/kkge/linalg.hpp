#pragma once
// Dense double-precision kernels: Hadamard product, Kronecker product, the
// vec-trick Kronecker matrix-vector product, reshape/flatten, and the few
// matrix routines the models need. Everything is row-major and 64-bit.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "kkge/errors.hpp"

namespace kkge {

using Vec = std::vector<double>;

struct Mat {
    int rows = 0;
    int cols = 0;
    Vec a;  // row-major, a.size() == rows * cols

    Mat() = default;
    Mat(int r, int c, double fill = 0.0)
        : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {}

    double& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
    double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }
    const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

inline Vec hadamard(const Vec& x, const Vec& y) {
    if (x.size() != y.size())
        throw ConfigError("hadamard: length mismatch " + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()));
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
    return out;
}

// x (x) z, out[i*|z| + j] = x[i] * z[j].
inline Vec kron_vec(const Vec& x, const Vec& z) {
    Vec out(x.size() * z.size());
    std::size_t k = 0;
    for (double xi : x)
        for (double zj : z) out[k++] = xi * zj;
    return out;
}

// Block-matrix Kronecker product, (x.rows*z.rows) x (x.cols*z.cols).
inline Mat kron_mat(const Mat& x, const Mat& z) {
    Mat out(x.rows * z.rows, x.cols * z.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.cols; ++j) {
            const double s = x.at(i, j);
            for (int p = 0; p < z.rows; ++p) {
                double* dst = out.row(i * z.rows + p) + static_cast<std::size_t>(j) * z.cols;
                const double* src = z.row(p);
                for (int q = 0; q < z.cols; ++q) dst[q] = s * src[q];
            }
        }
    return out;
}

// Row-major reinterpretation of v as rows x cols.
inline Mat reshape(const Vec& v, int rows, int cols) {
    if (static_cast<std::size_t>(rows) * cols != v.size())
        throw ConfigError("reshape: " + std::to_string(v.size()) + " values into " +
                          std::to_string(rows) + "x" + std::to_string(cols));
    Mat out(rows, cols);
    out.a = v;
    return out;
}

inline Vec flatten(const Mat& m) { return m.a; }

inline Vec matvec(const Mat& m, const Vec& v) {
    if (static_cast<std::size_t>(m.cols) != v.size())
        throw ConfigError("matvec: dimension mismatch");
    Vec out(static_cast<std::size_t>(m.rows), 0.0);
    for (int i = 0; i < m.rows; ++i) {
        const double* r = m.row(i);
        double acc = 0.0;
        for (int j = 0; j < m.cols; ++j) acc += r[j] * v[j];
        out[i] = acc;
    }
    return out;
}

// (X (x) Z) v without materializing the block matrix: fold v column-wise into
// a (z.cols x x.cols) matrix M, compute Z M X^T, read the result out
// column-wise. Column k of M is the k-th length-z.cols chunk of v.
// The mirrored order (Z M) X^T vs Z (M X^T) can save flops depending on the
// operand shapes; operands here are small, so one fixed order is used.
inline Vec kron_matvec(const Mat& x, const Mat& z, const Vec& v) {
    if (static_cast<std::size_t>(x.cols) * z.cols != v.size())
        throw ConfigError("kron_matvec: v has length " + std::to_string(v.size()) +
                          ", expected " + std::to_string(x.cols * z.cols));
    // M: z.cols x x.cols with M(q, k) = v[k * z.cols + q]
    // T = Z * M  (z.rows x x.cols)
    Mat t(z.rows, x.cols);
    for (int p = 0; p < z.rows; ++p) {
        const double* zr = z.row(p);
        for (int k = 0; k < x.cols; ++k) {
            const double* chunk = v.data() + static_cast<std::size_t>(k) * z.cols;
            double acc = 0.0;
            for (int q = 0; q < z.cols; ++q) acc += zr[q] * chunk[q];
            t.at(p, k) = acc;
        }
    }
    // R = T * X^T (z.rows x x.rows), then flatten column-wise:
    // out[i * z.rows + p] = R(p, i) = sum_k T(p,k) X(i,k)
    Vec out(static_cast<std::size_t>(x.rows) * z.rows);
    for (int i = 0; i < x.rows; ++i) {
        const double* xr = x.row(i);
        for (int p = 0; p < z.rows; ++p) {
            const double* tr = t.row(p);
            double acc = 0.0;
            for (int k = 0; k < x.cols; ++k) acc += tr[k] * xr[k];
            out[static_cast<std::size_t>(i) * z.rows + p] = acc;
        }
    }
    return out;
}

// Dot product with eight independent accumulators folded in a fixed order.
// The loop maps onto SIMD lanes without relaxing FP semantics, and the
// summation order is deterministic run to run.
inline double dot(const double* a, const double* b, int n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, s5 = 0, s6 = 0, s7 = 0;
    int k = 0;
    for (; k + 8 <= n; k += 8) {
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
        s4 += a[k + 4] * b[k + 4];
        s5 += a[k + 5] * b[k + 5];
        s6 += a[k + 6] * b[k + 6];
        s7 += a[k + 7] * b[k + 7];
    }
    double tail = 0.0;
    for (; k < n; ++k) tail += a[k] * b[k];
    return (((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7))) + tail;
}

// out = a * b^T contribution kernels used by the models; row-contiguous on
// both operands so the inner loops vectorize.

// c (n x k) = a (n x m) * b^T where b is (k x m): c[i][j] = dot(a[i], b[j]).
inline void matmul_abt(const Mat& a, const Mat& b, Mat& c) {
    if (a.cols != b.cols) throw ConfigError("matmul_abt: inner dimension mismatch");
    c = Mat(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const double* ar = a.row(i);
        double* cr = c.row(i);
        for (int j = 0; j < b.rows; ++j) cr[j] = dot(ar, b.row(j), a.cols);
    }
}

// c (n x m) += a (n x k) * b (k x m), serial accumulation order.
inline void matmul_acc(const Mat& a, const Mat& b, Mat& c) {
    if (a.cols != b.rows || c.rows != a.rows || c.cols != b.cols)
        throw ConfigError("matmul_acc: shape mismatch");
    for (int i = 0; i < a.rows; ++i) {
        const double* ar = a.row(i);
        double* cr = c.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const double s = ar[k];
            if (s == 0.0) continue;
            const double* br = b.row(k);
            for (int j = 0; j < b.cols; ++j) cr[j] += s * br[j];
        }
    }
}

// c (k x m) += a^T (k x n as a is n x k) * b (n x m): column j of a scaled into rows.
inline void matmul_atb_acc(const Mat& a, const Mat& b, Mat& c) {
    if (a.rows != b.rows || c.rows != a.cols || c.cols != b.cols)
        throw ConfigError("matmul_atb_acc: shape mismatch");
    for (int i = 0; i < a.rows; ++i) {
        const double* ar = a.row(i);
        const double* br = b.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const double s = ar[k];
            if (s == 0.0) continue;
            double* cr = c.row(k);
            for (int j = 0; j < b.cols; ++j) cr[j] += s * br[j];
        }
    }
}

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Mat& m) { return all_finite(m.a); }

}  // namespace kkge
