#include "chisq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "chisq/rng.hpp"

namespace chisq {

std::uint64_t FrequencyCounts::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

void FrequencyCounts::validate() const {
    if (counts.size() < 2) throw ValidationError("FrequencyCounts: length must be >= 2");
    if (total() < 1) throw ValidationError("FrequencyCounts: total must be >= 1");
}

double chi_square_statistic(const FrequencyCounts& freqs,
                            const std::vector<double>& expected) {
    freqs.validate();
    if (freqs.counts.size() != expected.size())
        throw ShapeError("chi_square_statistic: length mismatch");
    for (double p : expected)
        if (p <= 0.0)
            throw ValidationError("chi_square_statistic: expected probability <= 0");
    const double k = static_cast<double>(freqs.total());
    double c = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const double e = k * expected[i];
        const double d = static_cast<double>(freqs.counts[i]) - e;
        c += d * d / e;
    }
    return c;
}

std::vector<double> project_to_simplex(const std::vector<double>& v) {
    if (v.empty()) throw ValidationError("project_to_simplex: empty input");
    // Sort descending, find the largest k with u_k + (1 - sum_{i<=k} u_i)/k > 0,
    // then shift by that threshold and clip.
    std::vector<double> u(v);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cumsum += u[k];
        const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) theta = t;
    }
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
    return out;
}

SimplexMinimizeResult minimize_on_simplex(const ProbabilityVector& label,
                                          std::size_t starts, double tol,
                                          std::uint64_t seed,
                                          std::size_t max_iters) {
    if (starts < 1) throw ConfigError("minimize_on_simplex: starts must be >= 1");
    const std::size_t n = label.size();
    const std::vector<double>& y = label.entries();

    Rng rng(seed);
    SimplexMinimizeResult best;
    best.loss = std::numeric_limits<double>::infinity();

    // On the simplex, sum x_i^2/y_i - 1 equals sum (x_i - y_i)^2 / y_i
    // exactly; the residual form avoids the cancellation noise floor of
    // the direct expression near zero.
    const auto objective = [&](const std::vector<double>& x) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = x[i] - y[i];
            acc += d * d / y[i];
        }
        return acc;
    };

    const double base_step = 0.1 / static_cast<double>(n);
    for (std::size_t s = 0; s < starts; ++s) {
        // Random interior start: normalized uniforms.
        std::vector<double> x(n);
        double sum = 0.0;
        for (double& v : x) {
            v = rng.uniform() + 1e-6;
            sum += v;
        }
        for (double& v : x) v /= sum;

        std::vector<double> trajectory;
        double loss = objective(x);
        double step = base_step;
        std::size_t it = 0;
        for (; it < max_iters && loss >= tol; ++it) {
            trajectory.push_back(loss);
            const std::vector<double> g = chi_square_grad_wrt_pred(x, y);
            // Halve the step until the projected point decreases the loss;
            // guards the fixed 0.1/n step against small-alpha labels where
            // the curvature 2/y_i is large.
            std::vector<double> cand;
            double cand_loss = loss;
            for (int tries = 0; tries < 60; ++tries) {
                std::vector<double> z(n);
                for (std::size_t i = 0; i < n; ++i) z[i] = x[i] - step * g[i];
                cand = project_to_simplex(z);
                cand_loss = objective(cand);
                if (cand_loss < loss) break;
                step *= 0.5;
            }
            if (!(cand_loss < loss)) break;  // stalled at the noise floor
            x = std::move(cand);
            loss = cand_loss;
            step = std::min(step * 2.0, base_step);  // recover after backtracking
        }
        trajectory.push_back(loss);
        if (loss < best.loss) {
            best.loss = loss;
            best.minimizer = x;
            best.iterations = it;
            best.trajectory = std::move(trajectory);
        }
    }

    if (!(best.loss < tol)) {
        std::string tail;
        const std::size_t m = best.trajectory.size();
        for (std::size_t i = m > 5 ? m - 5 : 0; i < m; ++i)
            tail += " " + std::to_string(best.trajectory[i]);
        throw NumericError("minimize_on_simplex: no start reached loss < " +
                           std::to_string(tol) + " within budget; trajectory tail:" + tail);
    }
    return best;
}

void CovarianceBundle::validate() const {
    if (sigma_dd.rows() != sigma_dd.cols())
        throw ShapeError("CovarianceBundle: sigma_dd not square");
    const std::size_t d = sigma_dd.rows();
    if (sigma_dl.size() != d)
        throw ShapeError("CovarianceBundle: sigma_dl length != d");
    if (phi.cols() != d)
        throw ShapeError("CovarianceBundle: phi cols != d");
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(sigma_dd(i, j) - sigma_dd(j, i)) > 1e-9)
                throw ValidationError("CovarianceBundle: sigma_dd not symmetric");
    // Diagonal non-negativity as a cheap PSD sanity check.
    for (std::size_t i = 0; i < d; ++i)
        if (sigma_dd(i, i) < -1e-9)
            throw ValidationError("CovarianceBundle: negative variance on diagonal");
}

TransformedCovariance transform_covariance(const CovarianceBundle& bundle) {
    bundle.validate();
    TransformedCovariance out;
    out.sigma_yy = matmul_a_bt(matmul(bundle.phi, bundle.sigma_dd), bundle.phi);
    // sigma_dl * phi^T, a row vector of length phi.rows().
    out.sigma_yl.assign(bundle.phi.rows(), 0.0);
    for (std::size_t i = 0; i < bundle.phi.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < bundle.phi.cols(); ++j)
            s += bundle.sigma_dl[j] * bundle.phi(i, j);
        out.sigma_yl[i] = s;
    }
    out.sigma_ll = bundle.sigma_ll;
    return out;
}

std::vector<double> empirical_cov_last_row(const Matrix& outputs,
                                           const std::vector<std::size_t>& labels,
                                           std::size_t target_class) {
    if (outputs.rows() == 0) throw ValidationError("empirical_cov_last_row: empty input");
    if (outputs.rows() != labels.size())
        throw ShapeError("empirical_cov_last_row: rows != label count");
    const double n = static_cast<double>(outputs.rows());
    double mean_l = 0.0;
    for (std::size_t r = 0; r < labels.size(); ++r)
        mean_l += labels[r] == target_class ? 1.0 : 0.0;
    mean_l /= n;
    std::vector<double> mean_col(outputs.cols(), 0.0);
    for (std::size_t r = 0; r < outputs.rows(); ++r)
        for (std::size_t c = 0; c < outputs.cols(); ++c) mean_col[c] += outputs(r, c);
    for (double& m : mean_col) m /= n;

    std::vector<double> cov(outputs.cols(), 0.0);
    for (std::size_t r = 0; r < outputs.rows(); ++r) {
        const double dl = (labels[r] == target_class ? 1.0 : 0.0) - mean_l;
        for (std::size_t c = 0; c < outputs.cols(); ++c)
            cov[c] += dl * (outputs(r, c) - mean_col[c]);
    }
    for (double& v : cov) v /= n;
    return cov;
}

}  // namespace chisq
