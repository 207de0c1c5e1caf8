#include "semalign/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "semalign/errors.hpp"

namespace semalign {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) +
                             "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                             "x" + std::to_string(b.cols()) + ")");
    }
}

void require_same_cols(const Matrix& a, const Matrix& b, const char* op) {
    if (a.cols() != b.cols()) {
        throw DimensionError(std::string(op) + ": column mismatch (" + std::to_string(a.cols()) +
                             " vs " + std::to_string(b.cols()) + ")");
    }
}

} // namespace

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows < 0 || cols < 0) throw DimensionError("Matrix: negative dimension");
    data_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0);
}

Matrix::Matrix(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (rows < 0 || cols < 0) throw DimensionError("Matrix: negative dimension");
    if (data_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
        throw DimensionError("Matrix: value count " + std::to_string(data_.size()) +
                             " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
    }
}

Matrix Matrix::constant(int rows, int cols, double value) {
    Matrix m(rows, cols);
    m.fill(value);
    return m;
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    int r = static_cast<int>(rows.size());
    int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    Matrix m(r, c);
    int i = 0;
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != c) throw DimensionError("from_rows: ragged rows");
        int j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

Matrix Matrix::row(int i) const {
    Matrix out(1, cols_);
    std::copy(row_ptr(i), row_ptr(i) + cols_, out.row_ptr(0));
    return out;
}

bool Matrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Matrix::operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
}

Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "sub");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.data()[i];
    return out;
}

Matrix scale(const Matrix& a, double c) {
    Matrix out = a;
    for (double& v : out.data()) v *= c;
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) + " vs " +
                             std::to_string(b.rows()));
    }
    Matrix out(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        const double* ai = a.row_ptr(i);
        double* oi = out.row_ptr(i);
        for (int k = 0; k < a.cols(); ++k) {
            double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = b.row_ptr(k);
            for (int j = 0; j < b.cols(); ++j) oi[j] += aik * bk[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Matrix col_sums(const Matrix& a) {
    Matrix out(1, a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out(0, j) += a(i, j);
    return out;
}

Matrix row_sums(const Matrix& a) {
    Matrix out(a.rows(), 1);
    for (int i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols(); ++j) s += a(i, j);
        out(i, 0) = s;
    }
    return out;
}

double sum(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    return s;
}

Matrix mean_row(const Matrix& a) {
    if (a.rows() == 0) throw ValueError("mean_row: empty matrix");
    Matrix out = col_sums(a);
    for (double& v : out.data()) v /= a.rows();
    return out;
}

Matrix pairwise_sq_dists(const Matrix& a, const Matrix& b) {
    require_same_cols(a, b, "pairwise_sq_dists");
    Matrix out(a.rows(), b.rows());
    for (int i = 0; i < a.rows(); ++i) {
        const double* ai = a.row_ptr(i);
        for (int j = 0; j < b.rows(); ++j) {
            const double* bj = b.row_ptr(j);
            double d = 0.0;
            for (int k = 0; k < a.cols(); ++k) {
                double diff = ai[k] - bj[k];
                d += diff * diff;
            }
            out(i, j) = d;
        }
    }
    return out;
}

Matrix cosine_similarity_matrix(const Matrix& a, const Matrix& b, double norm_floor) {
    require_same_cols(a, b, "cosine_similarity_matrix");
    std::vector<double> na(a.rows()), nb(b.rows());
    for (int i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        const double* ai = a.row_ptr(i);
        for (int k = 0; k < a.cols(); ++k) s += ai[k] * ai[k];
        na[i] = std::max(std::sqrt(s), norm_floor);
    }
    for (int j = 0; j < b.rows(); ++j) {
        double s = 0.0;
        const double* bj = b.row_ptr(j);
        for (int k = 0; k < b.cols(); ++k) s += bj[k] * bj[k];
        nb[j] = std::max(std::sqrt(s), norm_floor);
    }
    Matrix out(a.rows(), b.rows());
    for (int i = 0; i < a.rows(); ++i) {
        const double* ai = a.row_ptr(i);
        for (int j = 0; j < b.rows(); ++j) {
            const double* bj = b.row_ptr(j);
            double dot = 0.0;
            for (int k = 0; k < a.cols(); ++k) dot += ai[k] * bj[k];
            out(i, j) = dot / (na[i] * nb[j]);
        }
    }
    return out;
}

double batch_variance(const Matrix& t) {
    if (t.rows() < 2) {
        throw ValueError("batch_variance: needs at least 2 rows, got " + std::to_string(t.rows()));
    }
    Matrix mean = mean_row(t);
    double acc = 0.0;
    for (int i = 0; i < t.rows(); ++i) {
        const double* ti = t.row_ptr(i);
        for (int k = 0; k < t.cols(); ++k) {
            double d = ti[k] - mean(0, k);
            acc += d * d;
        }
    }
    return acc / (t.rows() - 1);
}

Matrix logsumexp_rows(const Matrix& m) {
    if (m.cols() == 0) throw ValueError("logsumexp_rows: empty rows");
    Matrix out(m.rows(), 1);
    for (int i = 0; i < m.rows(); ++i) {
        const double* mi = m.row_ptr(i);
        double mx = mi[0];
        for (int j = 1; j < m.cols(); ++j) mx = std::max(mx, mi[j]);
        double s = 0.0;
        for (int j = 0; j < m.cols(); ++j) s += std::exp(mi[j] - mx);
        out(i, 0) = mx + std::log(s);
    }
    return out;
}

Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& at, double h) {
    Matrix grad(at.rows(), at.cols());
    Matrix x = at;
    for (int i = 0; i < at.rows(); ++i) {
        for (int j = 0; j < at.cols(); ++j) {
            double orig = x(i, j);
            x(i, j) = orig + h;
            double fp = f(x);
            x(i, j) = orig - h;
            double fm = f(x);
            x(i, j) = orig;
            grad(i, j) = (fp - fm) / (2.0 * h);
        }
    }
    return grad;
}

double median_sq_dist(const Matrix& points) {
    if (points.rows() < 2) throw ValueError("median_sq_dist: needs at least 2 rows");
    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(points.rows()) * (points.rows() - 1) / 2);
    for (int i = 0; i < points.rows(); ++i) {
        const double* pi = points.row_ptr(i);
        for (int j = i + 1; j < points.rows(); ++j) {
            const double* pj = points.row_ptr(j);
            double d = 0.0;
            for (int k = 0; k < points.cols(); ++k) {
                double diff = pi[k] - pj[k];
                d += diff * diff;
            }
            dists.push_back(d);
        }
    }
    std::size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
    return dists[mid];
}

} // namespace semalign
