#include <doctest.h>

#include <cmath>
#include <vector>

#include "chisq/losses.hpp"
#include "chisq/rng.hpp"

using namespace chisq;

namespace {

std::vector<double> random_simplex(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    double sum = 0.0;
    for (double& x : v) {
        x = rng.uniform() + 1e-6;
        sum += x;
    }
    for (double& x : v) x /= sum;
    return v;
}

// Central-difference oracle for a scalar function of a vector.
template <typename F>
std::vector<double> fd_grad(F f, std::vector<double> x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double save = x[i];
        x[i] = save + h;
        const double fp = f(x);
        x[i] = save - h;
        const double fm = f(x);
        x[i] = save;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace

TEST_CASE("smooth_labels matches the alpha=0.1 five-class example") {
    const auto y = smooth_labels({1, 0, 0, 0, 0}, {0.1, 5});
    CHECK(y[0] == doctest::Approx(0.92).epsilon(1e-12));
    for (int i = 1; i < 5; ++i) CHECK(y[i] == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("smooth_labels two-class alpha=0.5") {
    const auto y = smooth_labels({1, 0}, {0.5, 2});
    CHECK(y[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("smooth_labels output sums to 1 for random one-hots") {
    Rng rng(11);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 2 + rng.below(20);
        const double alpha = 0.01 + 0.98 * rng.uniform();
        const auto y = smooth_labels(rng.below(n), {alpha, n});
        double sum = 0.0;
        double min = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += y[i];
            min = std::min(min, y[i]);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(min == doctest::Approx(alpha / n).epsilon(1e-9));
    }
}

TEST_CASE("smooth_labels rejects bad input") {
    CHECK_THROWS_AS(smooth_labels({1, 0, 0}, {1.5, 3}), ConfigError);
    CHECK_THROWS_AS(smooth_labels({1, 1, 0}, {0.1, 3}), ValidationError);
    CHECK_THROWS_AS(smooth_labels({0.5, 0.5, 0}, {0.1, 3}), ValidationError);
}

TEST_CASE("chi_square_loss is zero at the label") {
    Rng rng(12);
    for (int t = 0; t < 20; ++t) {
        const auto y = random_simplex(rng, 2 + rng.below(10));
        CHECK(chi_square_loss(y, y) == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("chi_square_loss uniform-vs-smoothed example") {
    // 0.04/0.92 + 4*(0.04/0.02) - 1
    const std::vector<double> pred(5, 0.2);
    const std::vector<double> label = {0.92, 0.02, 0.02, 0.02, 0.02};
    CHECK(chi_square_loss(pred, label) ==
          doctest::Approx(0.04 / 0.92 + 8.0 - 1.0).epsilon(1e-12));
}

TEST_CASE("chi_square_loss rejects unsmoothed labels with a pointer to smoothing") {
    const std::vector<double> pred(5, 0.2);
    const std::vector<double> hard = {1, 0, 0, 0, 0};
    CHECK_THROWS_WITH_AS(chi_square_loss(pred, hard),
                         doctest::Contains("label smoothing"), ValidationError);
}

TEST_CASE("chi_square loss non-negative, zero only at the label") {
    Rng rng(13);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 2 + rng.below(10);
        const auto pred = random_simplex(rng, n);
        const auto label = random_simplex(rng, n);
        const double loss = chi_square_loss(pred, label);
        CHECK(loss >= 0.0);
        double maxdiff = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            maxdiff = std::max(maxdiff, std::abs(pred[i] - label[i]));
        if (maxdiff > 1e-9) CHECK(loss > 0.0);
    }
}

TEST_CASE("chi_square_grad_wrt_pred") {
    const std::vector<double> label = {0.92, 0.02, 0.02, 0.02, 0.02};

    SUBCASE("constant 2 at the label") {
        const auto g = chi_square_grad_wrt_pred(label, label);
        for (double v : g) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("linear in pred") {
        std::vector<double> pred = {0.2, 0.2, 0.2, 0.2, 0.2};
        const auto g1 = chi_square_grad_wrt_pred(pred, label);
        pred[2] *= 2.0;  // off the simplex, but the formula is per-component
        const auto g2 = chi_square_grad_wrt_pred(pred, label);
        CHECK(g2[2] == doctest::Approx(2.0 * g1[2]).epsilon(1e-12));
    }
    SUBCASE("matches central differences") {
        Rng rng(14);
        const auto pred = random_simplex(rng, 5);
        const auto g = chi_square_grad_wrt_pred(pred, label);
        const auto fd = fd_grad(
            [&](const std::vector<double>& p) { return chi_square_loss(p, label); },
            pred, 1e-7);
        for (std::size_t i = 0; i < 5; ++i)
            CHECK(g[i] == doctest::Approx(fd[i]).epsilon(1e-7));
    }
}

TEST_CASE("chi_square_grad_wrt_logits") {
    Rng rng(15);

    SUBCASE("zero when softmax(logits) equals the label") {
        const std::vector<double> label = {0.92, 0.02, 0.02, 0.02, 0.02};
        std::vector<double> logits(5);
        for (int i = 0; i < 5; ++i) logits[i] = std::log(label[i]);
        const auto g = chi_square_grad_wrt_logits(logits, label);
        for (double v : g) CHECK(std::abs(v) < 1e-9);
    }
    SUBCASE("components sum to zero") {
        for (int t = 0; t < 50; ++t) {
            const std::size_t n = 2 + rng.below(10);
            const auto label = random_simplex(rng, n);
            std::vector<double> logits(n);
            for (double& z : logits) z = rng.normal() * 3.0;
            const auto g = chi_square_grad_wrt_logits(logits, label);
            double sum = 0.0;
            for (double v : g) sum += v;
            CHECK(std::abs(sum) < 1e-10);
        }
    }
    SUBCASE("closed form equals softmax-Jacobian composition to 1e-12") {
        for (int t = 0; t < 50; ++t) {
            const std::size_t n = 2 + rng.below(8);
            const auto label = random_simplex(rng, n);
            std::vector<double> logits(n);
            for (double& z : logits) z = rng.normal() * 2.0;
            const auto g = chi_square_grad_wrt_logits(logits, label);
            const auto p = softmax(logits);
            const auto dp = chi_square_grad_wrt_pred(p, label);
            for (std::size_t j = 0; j < n; ++j) {
                double composed = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    composed += dp[i] * p[i] * ((i == j ? 1.0 : 0.0) - p[j]);
                CHECK(g[j] == doctest::Approx(composed).epsilon(1e-12));
            }
        }
    }
    SUBCASE("matches central differences through softmax") {
        for (int t = 0; t < 20; ++t) {
            const auto label = random_simplex(rng, 5);
            std::vector<double> logits(5);
            for (double& z : logits) z = rng.normal() * 2.0;
            const auto g = chi_square_grad_wrt_logits(logits, label);
            const auto fd = fd_grad(
                [&](const std::vector<double>& z) {
                    return chi_square_loss(softmax(z), label);
                },
                logits, 1e-6);
            for (std::size_t i = 0; i < 5; ++i)
                CHECK(g[i] == doctest::Approx(fd[i]).epsilon(1e-6));
        }
    }
}

TEST_CASE("cross_entropy_loss") {
    SUBCASE("zero for a confident correct prediction") {
        CHECK(cross_entropy_loss({1, 0, 0}, {1, 0, 0}) == doctest::Approx(0.0));
    }
    SUBCASE("uniform prediction against smoothed label gives ln 5") {
        const std::vector<double> label = {0.92, 0.02, 0.02, 0.02, 0.02};
        const std::vector<double> pred(5, 0.2);
        CHECK(cross_entropy_loss(pred, label) ==
              doctest::Approx(std::log(5.0)).epsilon(1e-12));
    }
    SUBCASE("Gibbs: loss >= label entropy, equality at pred == label") {
        Rng rng(16);
        for (int t = 0; t < 100; ++t) {
            const std::size_t n = 2 + rng.below(10);
            const auto label = random_simplex(rng, n);
            const auto pred = random_simplex(rng, n);
            double entropy = 0.0;
            for (double y : label) entropy -= y * std::log(y);
            CHECK(cross_entropy_loss(pred, label) >= entropy - 1e-12);
            CHECK(cross_entropy_loss(label, label) ==
                  doctest::Approx(entropy).epsilon(1e-12));
        }
    }
}

TEST_CASE("cross_entropy_grad_wrt_logits") {
    Rng rng(17);
    SUBCASE("zero at the optimum and zero-sum components") {
        const std::vector<double> label = {0.5, 0.3, 0.2};
        const std::vector<double> logits = {std::log(0.5), std::log(0.3), std::log(0.2)};
        const auto g = cross_entropy_grad_wrt_logits(logits, label);
        double sum = 0.0;
        for (double v : g) {
            CHECK(std::abs(v) < 1e-12);
            sum += v;
        }
        CHECK(std::abs(sum) < 1e-12);
    }
    SUBCASE("matches central differences") {
        for (int t = 0; t < 20; ++t) {
            const auto label = random_simplex(rng, 6);
            std::vector<double> logits(6);
            for (double& z : logits) z = rng.normal() * 2.0;
            const auto g = cross_entropy_grad_wrt_logits(logits, label);
            const auto fd = fd_grad(
                [&](const std::vector<double>& z) {
                    return cross_entropy_loss(softmax(z), label);
                },
                logits, 1e-7);
            for (std::size_t i = 0; i < 6; ++i)
                CHECK(g[i] == doctest::Approx(fd[i]).epsilon(1e-7));
        }
    }
}

TEST_CASE("strictness: epsilon mass on a zero-label class hurts chi2 ~ n/alpha") {
    // Starting from a uniform prediction, move mass eps onto one zero-label
    // class and compare the loss increases across alphas: the chi2/CE ratio
    // must grow as alpha shrinks (the chi2 increase is ~2*eps/alpha, the CE
    // increase is ~eps*n and nearly alpha-free).
    const std::size_t n = 10;
    const double eps = 1e-3;
    double prev_ratio = 0.0;
    for (const double alpha : {0.4, 0.2, 0.1, 0.05, 0.02}) {
        const auto label = smooth_labels(std::size_t{0}, {alpha, n}).entries();
        std::vector<double> base(n, 1.0 / n);
        std::vector<double> perturbed = base;
        perturbed[0] -= eps;
        perturbed[1] += eps;
        const double d_chi2 = chi_square_loss(perturbed, label) - chi_square_loss(base, label);
        const double d_ce = cross_entropy_loss(perturbed, label) - cross_entropy_loss(base, label);
        const double ratio = d_chi2 / std::abs(d_ce);
        CHECK(ratio > prev_ratio);
        prev_ratio = ratio;
    }
}

TEST_CASE("ProbabilityVector validation") {
    CHECK_THROWS_AS(ProbabilityVector({0.5, 0.6}), ValidationError);
    CHECK_THROWS_AS(ProbabilityVector({1.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(ProbabilityVector({}), ValidationError);
    CHECK_NOTHROW(ProbabilityVector({0.25, 0.25, 0.5}));
}
