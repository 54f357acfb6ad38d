#include "moelab/linalg.hpp"

#include "moelab/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace moelab {

void fill_gaussian(std::span<double> out, double std, uint64_t seed) {
    if (std < 0.0) throw std::invalid_argument("fill_gaussian: negative std");
    if (std == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    rng::SplitMix64 stream(rng::derive(seed, 0x67617573 /* "gaus" */));
    for (double& v : out) v = std * stream.next_gaussian();
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double std, uint64_t seed) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("gaussian_matrix: empty shape");
    Matrix m(rows, cols);
    fill_gaussian(m.a, std, seed);
    return m;
}

double rms_norm(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("rms_norm: empty input");
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
}

double rms_norm(const Matrix& m) { return rms_norm(std::span<const double>(m.a)); }
double rms_norm(const Vector& v) { return rms_norm(std::span<const double>(v)); }

double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

void matvec(const Matrix& A, std::span<const double> x, std::span<double> y, bool accumulate) {
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* r = A.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < A.cols; ++j) s += r[j] * x[j];
        y[i] = accumulate ? y[i] + s : s;
    }
}

void matvec_t(const Matrix& A, std::span<const double> x, std::span<double> y, bool accumulate) {
    if (!accumulate) std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* r = A.row(i);
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (std::size_t j = 0; j < A.cols; ++j) y[j] += r[j] * xi;
    }
}

// Kernels tuned for this project's shapes: big weight matrices against a
// skinny batch panel (n ~ 32). Columns of C are tiled so the accumulators
// live in registers across the whole reduction.
namespace {

constexpr std::size_t kTile = 8;

// C rows i, columns [j0, j0+jw) accumulate A[i,:] * B[:, j0..]
inline void nn_row_tile(double* __restrict ci, const double* __restrict ai,
                        const Matrix& B, std::size_t k, std::size_t j0, std::size_t jw,
                        double alpha) {
    double acc[kTile] = {0, 0, 0, 0, 0, 0, 0, 0};
    const double* b = B.a.data() + j0;
    const std::size_t stride = B.cols;
    if (jw == kTile) {
        for (std::size_t l = 0; l < k; ++l) {
            const double v = ai[l];
            const double* __restrict bl = b + l * stride;
            for (std::size_t j = 0; j < kTile; ++j) acc[j] += v * bl[j];
        }
    } else {
        for (std::size_t l = 0; l < k; ++l) {
            const double v = ai[l];
            const double* __restrict bl = b + l * stride;
            for (std::size_t j = 0; j < jw; ++j) acc[j] += v * bl[j];
        }
    }
    for (std::size_t j = 0; j < jw; ++j) ci[j0 + j] += alpha * acc[j];
}

} // namespace

void gemm_nn(Matrix& C, const Matrix& A, const Matrix& B, double alpha, bool accumulate) {
    if (!accumulate) C.zero();
    const std::size_t m = A.rows, k = A.cols, n = B.cols;
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = C.row(i);
        const double* ai = A.row(i);
        for (std::size_t j0 = 0; j0 < n; j0 += kTile)
            nn_row_tile(ci, ai, B, k, j0, std::min(kTile, n - j0), alpha);
    }
}

void gemm_tn(Matrix& C, const Matrix& A, const Matrix& B, double alpha, bool accumulate) {
    if (!accumulate) C.zero();
    const std::size_t k = A.rows, m = A.cols, n = B.cols;
    // C row-blocks stay L1-resident while both A and B stream once per block
    constexpr std::size_t IB = 8;
    for (std::size_t i0 = 0; i0 < m; i0 += IB) {
        const std::size_t iw = std::min(IB, m - i0);
        for (std::size_t l = 0; l < k; ++l) {
            const double* al = A.row(l) + i0;
            const double* bl = B.row(l);
            for (std::size_t di = 0; di < iw; ++di) {
                const double v = alpha * al[di];
                if (v == 0.0) continue;
                double* ci = C.row(i0 + di);
                for (std::size_t j = 0; j < n; ++j) ci[j] += v * bl[j];
            }
        }
    }
}

void gemm_nt(Matrix& C, const Matrix& A, const Matrix& B, double alpha, bool accumulate) {
    if (!accumulate) C.zero();
    const std::size_t m = A.rows, k = A.cols, n = B.rows;
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = A.row(i);
        double* ci = C.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = B.row(j);
            double s = 0.0;
            for (std::size_t l = 0; l < k; ++l) s += ai[l] * bj[l];
            ci[j] += alpha * s;
        }
    }
}

void outer_acc(Matrix& C, double alpha, std::span<const double> u, std::span<const double> v) {
    for (std::size_t i = 0; i < C.rows; ++i) {
        const double ui = alpha * u[i];
        if (ui == 0.0) continue;
        double* ci = C.row(i);
        for (std::size_t j = 0; j < C.cols; ++j) ci[j] += ui * v[j];
    }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

ExponentFit ols_loglog_fit(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw std::invalid_argument("ols_loglog_fit: needs at least 2 points");
    const auto n = static_cast<double>(points.size());
    double sx = 0.0, sy = 0.0;
    std::vector<double> lx(points.size()), ly(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].first <= 0.0 || points[i].second <= 0.0)
            throw std::invalid_argument("ols_loglog_fit: nonpositive coordinate");
        lx[i] = std::log(points[i].first);
        ly[i] = std::log(points[i].second);
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("ols_loglog_fit: degenerate abscissae");
    ExponentFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.n_points = points.size();
    if (syy == 0.0) {
        fit.r_squared = 1.0; // constant data: the slope-0 line is exact
    } else {
        double ss_res = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
            ss_res += e * e;
        }
        fit.r_squared = 1.0 - ss_res / syy;
        if (fit.r_squared < 0.0) fit.r_squared = 0.0;
        if (fit.r_squared > 1.0) fit.r_squared = 1.0;
    }
    return fit;
}

} // namespace moelab
