#include "chisq/losses.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <string>

namespace chisq {

namespace {

constexpr double kSimplexTol = 1e-9;
constexpr double kLogClamp = 1e-12;

void require_same_length(const std::vector<double>& a, const std::vector<double>& b,
                         const char* what) {
    if (a.size() != b.size())
        throw ShapeError(std::string(what) + ": length mismatch (" +
                         std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
}

void require_positive_label(const std::vector<double>& label) {
    for (double y : label)
        if (y <= 0.0)
            throw ValidationError(
                "chi-square loss: label entry <= 0; hard labels are not valid here, "
                "apply label smoothing first");
}

}  // namespace

ProbabilityVector::ProbabilityVector(std::vector<double> entries)
    : entries_(std::move(entries)) {
    if (entries_.empty())
        throw ValidationError("ProbabilityVector: empty");
    double sum = 0.0;
    for (double v : entries_) {
        if (!std::isfinite(v)) throw NumericError("ProbabilityVector: non-finite entry");
        if (v <= 0.0) throw ValidationError("ProbabilityVector: entry <= 0");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexTol)
        throw ValidationError("ProbabilityVector: entries sum to " + std::to_string(sum) +
                              ", expected 1");
}

void SmoothingConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("SmoothingConfig: alpha must be in (0,1), got " +
                          std::to_string(alpha));
    if (n_classes < 2)
        throw ConfigError("SmoothingConfig: need at least 2 classes");
}

ProbabilityVector smooth_labels(const std::vector<double>& one_hot,
                                const SmoothingConfig& cfg) {
    cfg.validate();
    if (one_hot.size() != cfg.n_classes)
        throw ValidationError("smooth_labels: one-hot length != n_classes");
    std::size_t ones = 0;
    for (double v : one_hot) {
        if (v == 1.0) ++ones;
        else if (v != 0.0)
            throw ValidationError("smooth_labels: input is not one-hot");
    }
    if (ones != 1) throw ValidationError("smooth_labels: input is not one-hot");

    std::vector<double> out(one_hot.size());
    const double base = cfg.alpha / static_cast<double>(cfg.n_classes);
    for (std::size_t i = 0; i < one_hot.size(); ++i)
        out[i] = one_hot[i] * (1.0 - cfg.alpha) + base;
    return ProbabilityVector(std::move(out));
}

ProbabilityVector smooth_labels(std::size_t hot_index, const SmoothingConfig& cfg) {
    cfg.validate();
    if (hot_index >= cfg.n_classes)
        throw ValidationError("smooth_labels: hot index out of range");
    std::vector<double> one_hot(cfg.n_classes, 0.0);
    one_hot[hot_index] = 1.0;
    return smooth_labels(one_hot, cfg);
}

double chi_square_loss(const std::vector<double>& pred,
                       const std::vector<double>& label) {
    require_same_length(pred, label, "chi_square_loss");
    require_positive_label(label);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += pred[i] * pred[i] / label[i];
    return s - 1.0;
}

std::vector<double> chi_square_grad_wrt_pred(const std::vector<double>& pred,
                                             const std::vector<double>& label) {
    require_same_length(pred, label, "chi_square_grad_wrt_pred");
    require_positive_label(label);
    std::vector<double> g(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) g[i] = 2.0 * pred[i] / label[i];
    return g;
}

std::vector<double> chi_square_grad_wrt_logits(const std::vector<double>& logits,
                                               const std::vector<double>& label) {
    require_same_length(logits, label, "chi_square_grad_wrt_logits");
    require_positive_label(label);
    const std::vector<double> p = softmax(logits);
    // L+1 = sum p_i^2 / y_i
    double lp1 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) lp1 += p[i] * p[i] / label[i];
    std::vector<double> g(p.size());
    for (std::size_t j = 0; j < p.size(); ++j)
        g[j] = 2.0 * p[j] * (p[j] / label[j] - lp1);
    return g;
}

double cross_entropy_loss(const std::vector<double>& pred,
                          const std::vector<double>& label) {
    require_same_length(pred, label, "cross_entropy_loss");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        s -= label[i] * std::log(std::max(pred[i], kLogClamp));
    return s;
}

std::vector<double> cross_entropy_grad_wrt_logits(const std::vector<double>& logits,
                                                  const std::vector<double>& label) {
    require_same_length(logits, label, "cross_entropy_grad_wrt_logits");
    std::vector<double> g = softmax(logits);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= label[i];
    return g;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) throw ValidationError("softmax: empty input");
    double m = logits[0];
    for (double z : logits) {
        if (!std::isfinite(z)) throw NumericError("softmax: non-finite logit");
        m = std::max(m, z);
    }
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        // Floor at the smallest positive double: keeps the output on the
        // open simplex even when exp underflows for very spread-out logits.
        p[i] = std::max(std::exp(logits[i] - m),
                        std::numeric_limits<double>::denorm_min());
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

double loss_value(LossKind kind, const std::vector<double>& pred,
                  const std::vector<double>& label) {
    return kind == LossKind::ChiSquare ? chi_square_loss(pred, label)
                                       : cross_entropy_loss(pred, label);
}

std::vector<double> loss_grad_wrt_logits(LossKind kind,
                                         const std::vector<double>& logits,
                                         const std::vector<double>& label) {
    return kind == LossKind::ChiSquare ? chi_square_grad_wrt_logits(logits, label)
                                       : cross_entropy_grad_wrt_logits(logits, label);
}

}  // namespace chisq
