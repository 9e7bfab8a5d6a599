#pragma once
// 1-D batch normalization over the batch dimension with hand-derived
// gradients. Train mode normalizes by the current batch statistics (biased
// variance) and maintains running statistics with Bessel-corrected variance;
// eval mode normalizes by the running statistics. A train-mode batch of one
// row falls back to the running statistics, since a single row has no
// variance to normalize by.
//
// All passes stream row-major; per-feature accumulators run over rows in
// ascending order so results do not depend on layout choices.

#include <cmath>

#include "kkge/errors.hpp"
#include "kkge/linalg.hpp"

namespace kkge {

enum class Mode { train, eval };

struct BatchNorm {
    int dim = 0;
    double momentum = 0.1;
    double epsilon = 1e-5;
    Vec gamma, beta;                // trainable
    Vec running_mean, running_var;  // tracked, not trainable

    explicit BatchNorm(int d = 0)
        : dim(d), gamma(d, 1.0), beta(d, 0.0), running_mean(d, 0.0), running_var(d, 1.0) {}

    struct Cache {
        Mat xhat;     // normalized inputs
        Vec inv_std;  // 1 / sqrt(var + eps) actually used
        bool batch_stats = false;
    };

    Mat forward(const Mat& x, Mode mode, bool update_running, Cache& cache) {
        if (x.cols != dim) throw ConfigError("batchnorm: feature width mismatch");
        const int b = x.rows;
        cache.batch_stats = mode == Mode::train && b > 1;
        cache.xhat = Mat(b, dim);
        cache.inv_std.assign(dim, 0.0);
        Mat y(b, dim);

        if (cache.batch_stats) {
            Vec mean(dim, 0.0), var(dim, 0.0);
            for (int i = 0; i < b; ++i) {
                const double* xr = x.row(i);
                for (int j = 0; j < dim; ++j) mean[j] += xr[j];
            }
            for (int j = 0; j < dim; ++j) mean[j] /= b;
            for (int i = 0; i < b; ++i) {
                const double* xr = x.row(i);
                for (int j = 0; j < dim; ++j) {
                    const double d = xr[j] - mean[j];
                    var[j] += d * d;
                }
            }
            for (int j = 0; j < dim; ++j) cache.inv_std[j] = 1.0 / std::sqrt(var[j] / b + epsilon);
            for (int i = 0; i < b; ++i) {
                const double* xr = x.row(i);
                double* xh = cache.xhat.row(i);
                double* yr = y.row(i);
                for (int j = 0; j < dim; ++j) {
                    xh[j] = (xr[j] - mean[j]) * cache.inv_std[j];
                    yr[j] = gamma[j] * xh[j] + beta[j];
                }
            }
            if (update_running) {
                for (int j = 0; j < dim; ++j) {
                    const double unbiased = b > 1 ? var[j] / (b - 1) : var[j] / b;
                    running_mean[j] = (1.0 - momentum) * running_mean[j] + momentum * mean[j];
                    running_var[j] = (1.0 - momentum) * running_var[j] + momentum * unbiased;
                }
            }
        } else {
            for (int j = 0; j < dim; ++j)
                cache.inv_std[j] = 1.0 / std::sqrt(running_var[j] + epsilon);
            for (int i = 0; i < b; ++i) {
                const double* xr = x.row(i);
                double* xh = cache.xhat.row(i);
                double* yr = y.row(i);
                for (int j = 0; j < dim; ++j) {
                    xh[j] = (xr[j] - running_mean[j]) * cache.inv_std[j];
                    yr[j] = gamma[j] * xh[j] + beta[j];
                }
            }
        }
        return y;
    }

    // dx, dgamma, dbeta from upstream dy. With batch statistics the mean/var
    // dependence is part of the graph; with running statistics the layer is a
    // fixed affine map.
    void backward(const Cache& cache, const Mat& dy, Mat& dx, Vec& dgamma, Vec& dbeta) const {
        const int b = dy.rows;
        dx = Mat(b, dim);
        dgamma.assign(dim, 0.0);
        dbeta.assign(dim, 0.0);
        for (int i = 0; i < b; ++i) {
            const double* dyr = dy.row(i);
            const double* xh = cache.xhat.row(i);
            for (int j = 0; j < dim; ++j) {
                dbeta[j] += dyr[j];
                dgamma[j] += dyr[j] * xh[j];
            }
        }
        if (cache.batch_stats) {
            for (int i = 0; i < b; ++i) {
                const double* dyr = dy.row(i);
                const double* xh = cache.xhat.row(i);
                double* dxr = dx.row(i);
                for (int j = 0; j < dim; ++j)
                    dxr[j] = gamma[j] * cache.inv_std[j] *
                             (dyr[j] - dbeta[j] / b - xh[j] * dgamma[j] / b);
            }
        } else {
            for (int i = 0; i < b; ++i) {
                const double* dyr = dy.row(i);
                double* dxr = dx.row(i);
                for (int j = 0; j < dim; ++j) dxr[j] = gamma[j] * cache.inv_std[j] * dyr[j];
            }
        }
    }
};

}  // namespace kkge
