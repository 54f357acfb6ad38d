#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace moelab {

using Vector = std::vector<double>;

// Dense row-major matrix of 64-bit floats. Everything in this project runs in
// doubles: expert-output gradient entries shrink like N^-2 and float32
// underflows them at moderate widths.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    double* row(std::size_t i) { return a.data() + i * cols; }
    const double* row(std::size_t i) const { return a.data() + i * cols; }

    std::size_t size() const { return a.size(); }
    bool empty() const { return a.empty(); }
    void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

// i.i.d. N(0, std^2) entries from the SplitMix64 stream derived from `seed`.
// std = 0 yields the zero matrix. Throws on an empty shape.
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double std, uint64_t seed);

void fill_gaussian(std::span<double> out, double std, uint64_t seed);

// sqrt(mean of squared entries). This is the norm every probe records.
double rms_norm(std::span<const double> v);
double rms_norm(const Matrix& m);
double rms_norm(const Vector& v);

double dot(std::span<const double> x, std::span<const double> y);
double max_abs(std::span<const double> v);
bool all_finite(std::span<const double> v);

// y (+)= A x
void matvec(const Matrix& A, std::span<const double> x, std::span<double> y, bool accumulate = false);
// y (+)= A^T x
void matvec_t(const Matrix& A, std::span<const double> x, std::span<double> y, bool accumulate = false);

// C (+)= alpha * A B with A (m x k), B (k x n)
void gemm_nn(Matrix& C, const Matrix& A, const Matrix& B, double alpha = 1.0, bool accumulate = false);
// C (+)= alpha * A^T B with A (k x m), B (k x n)
void gemm_tn(Matrix& C, const Matrix& A, const Matrix& B, double alpha = 1.0, bool accumulate = false);
// C (+)= alpha * A B^T with A (m x k), B (n x k)
void gemm_nt(Matrix& C, const Matrix& A, const Matrix& B, double alpha = 1.0, bool accumulate = false);

// C += alpha * u v^T
void outer_acc(Matrix& C, double alpha, std::span<const double> u, std::span<const double> v);

void axpy(double alpha, std::span<const double> x, std::span<double> y);

struct ExponentFit {
    double slope = 0.0;
    double intercept = 0.0;   // in log-space
    double r_squared = 0.0;
    std::size_t n_points = 0;
};

// Least-squares line through (ln width, ln value); the slope is the width
// exponent alpha of value ~ C * width^alpha. Requires >= 2 points with
// strictly positive coordinates (exact zeros are filtered upstream, with a
// count, because they are structural rather than small).
ExponentFit ols_loglog_fit(const std::vector<std::pair<double, double>>& points);

} // namespace moelab
