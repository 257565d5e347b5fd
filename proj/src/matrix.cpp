#include "chisq/matrix.hpp"

#include <cmath>
#include <string>

namespace chisq {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows_ * cols_ != data_.size())
        throw ShapeError("Matrix: rows*cols (" + std::to_string(rows_ * cols_) +
                         ") != data length (" + std::to_string(data_.size()) + ")");
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Matrix::check_finite(const char* what) const {
    if (!all_finite())
        throw NumericError(std::string("non-finite entry in ") + what);
}

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw ShapeError(msg);
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), "matmul: inner dims disagree");
    Matrix c(a.rows(), b.cols());
    // ikj order keeps the inner loop contiguous over b and c.
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows(), "matmul_at_b: row counts disagree");
    Matrix c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* ak = a.row(k);
        const double* bk = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            double* ci = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.cols(), "matmul_a_bt: col counts disagree");
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* bj = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
            c(i, j) = s;
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

void add_row_bias(Matrix& a, const std::vector<double>& bias) {
    require(a.cols() == bias.size(), "add_row_bias: bias length != cols");
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ai = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) ai[j] += bias[j];
    }
}

std::vector<double> col_sums(const Matrix& a) {
    std::vector<double> s(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) s[j] += ai[j];
    }
    return s;
}

}  // namespace chisq
