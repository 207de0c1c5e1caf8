#pragma once

#include <functional>
#include <initializer_list>
#include <vector>

namespace semalign {

/// Dense real matrix, row-major, 64-bit precision throughout the reference
/// path (gradient checks at 1e-5 relative tolerance are infeasible in 32-bit).
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols); // zero-filled
    Matrix(int rows, int cols, std::vector<double> values);

    static Matrix constant(int rows, int cols, double value);
    static Matrix identity(int n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

    double* row_ptr(int i) { return data_.data() + static_cast<std::size_t>(i) * cols_; }
    const double* row_ptr(int i) const { return data_.data() + static_cast<std::size_t>(i) * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    Matrix row(int i) const; // 1 x cols copy

    bool all_finite() const;
    void fill(double value);

    bool operator==(const Matrix& other) const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// Elementwise / linear-algebra helpers used across the library.
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix col_sums(const Matrix& a);   // 1 x cols
Matrix row_sums(const Matrix& a);   // rows x 1
double sum(const Matrix& a);
Matrix mean_row(const Matrix& a);   // 1 x cols column means

/// Entry (i,j) = sum_k (a[i,k] - b[j,k])^2. Computed as an explicit
/// difference sum so entries are exactly >= 0.
Matrix pairwise_sq_dists(const Matrix& a, const Matrix& b);

/// Entry (i,j) = <a_i, b_j> / (||a_i|| * ||b_j||), norms floored at
/// `norm_floor` so zero rows never divide by zero.
inline constexpr double kNormFloor = 1e-12;
Matrix cosine_similarity_matrix(const Matrix& a, const Matrix& b, double norm_floor = kNormFloor);

/// Sample variance with Bessel's correction over rows treated as points:
/// (1/(B-1)) * sum_i ||t_i - mean||^2. Requires B >= 2.
double batch_variance(const Matrix& t);

/// Row-wise log sum exp with max-shift; rows x 1 output.
Matrix logsumexp_rows(const Matrix& m);

/// Central finite differences (f(x+h e_ij) - f(x-h e_ij)) / (2h) per entry.
/// The independent oracle for the reverse-mode engine.
Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& at,
                        double h = 1e-5);

/// Median of the entries of the pairwise squared-distance matrix of `points`
/// excluding the zero diagonal. Used by the Gaussian bandwidth heuristic.
double median_sq_dist(const Matrix& points);

} // namespace semalign
