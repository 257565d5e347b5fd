#pragma once

#include <cstdint>
#include <vector>

#include "chisq/losses.hpp"
#include "chisq/matrix.hpp"

namespace chisq {

struct FrequencyCounts {
    std::vector<std::uint64_t> counts;

    std::uint64_t total() const;
    void validate() const;  // length >= 2, total >= 1
};

// Pearson goodness-of-fit statistic: sum (f_i - k*p_i)^2 / (k*p_i).
double chi_square_statistic(const FrequencyCounts& freqs,
                            const std::vector<double>& expected);

// Euclidean projection onto the probability simplex (sort-based threshold
// method). Entries of the result are >= 0 and sum to 1.
std::vector<double> project_to_simplex(const std::vector<double>& v);

struct SimplexMinimizeResult {
    std::vector<double> minimizer;
    double loss;
    std::size_t iterations;      // of the winning start
    std::vector<double> trajectory;  // loss per iteration of the winning start
};

// Multi-start projected gradient descent on the chi-square loss over the
// simplex. Throws NumericError (carrying the trajectory tail) if no start
// reaches loss < tol within the iteration budget.
SimplexMinimizeResult minimize_on_simplex(const ProbabilityVector& label,
                                          std::size_t starts, double tol,
                                          std::uint64_t seed = 0,
                                          std::size_t max_iters = 10000);

// Joint covariance of (penultimate output, scalar label), in blocks.
struct CovarianceBundle {
    Matrix sigma_dd;              // penultimate self-covariance, d x d
    std::vector<double> sigma_dl; // cross-covariance row, length d
    double sigma_ll = 0.0;
    Matrix phi;                   // linear map, out_dim x d

    void validate() const;  // symmetry/PSD within 1e-9, consistent dims
};

struct TransformedCovariance {
    Matrix sigma_yy;              // phi * sigma_dd * phi^T
    std::vector<double> sigma_yl; // sigma_dl * phi^T
    double sigma_ll = 0.0;
};

// Pushes the block covariance through the augmented map diag(phi, 1).
TransformedCovariance transform_covariance(const CovarianceBundle& bundle);

// Covariance between indicator(label == target_class) and each column of the
// given activations/output matrix.
std::vector<double> empirical_cov_last_row(const Matrix& outputs,
                                           const std::vector<std::size_t>& labels,
                                           std::size_t target_class);

}  // namespace chisq
