#pragma once

#include <cstddef>
#include <vector>

#include "chisq/error.hpp"

namespace chisq {

// Dense row-major matrix of doubles. Small and dumb on purpose: the models
// here are tiny MLPs and the bottleneck is matmul, which is cache-blocked
// below. Single-threaded, so results are bit-reproducible.
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    // Pointer to the start of row r.
    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    bool all_finite() const;
    // Throws NumericError if any entry is NaN/Inf.
    void check_finite(const char* what) const;

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A^T * B
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
// C = A * B^T
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

// out[r][c] = a[r][c] + bias[c]
void add_row_bias(Matrix& a, const std::vector<double>& bias);

// Column sums (used for bias gradients).
std::vector<double> col_sums(const Matrix& a);

}  // namespace chisq
