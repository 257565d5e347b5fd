#pragma once

#include <cstddef>
#include <vector>

#include "chisq/error.hpp"

namespace chisq {

// A point on the open probability simplex: every entry > 0, entries sum to 1
// within 1e-9. Used for both predictions (softmax output) and smoothed labels.
class ProbabilityVector {
public:
    explicit ProbabilityVector(std::vector<double> entries);

    std::size_t size() const { return entries_.size(); }
    double operator[](std::size_t i) const { return entries_[i]; }
    const std::vector<double>& entries() const { return entries_; }

private:
    std::vector<double> entries_;
};

struct SmoothingConfig {
    double alpha;          // smoothing strength, in (0,1)
    std::size_t n_classes;

    void validate() const;
};

// y_i(1-alpha) + alpha/n applied to a one-hot vector.
ProbabilityVector smooth_labels(const std::vector<double>& one_hot,
                                const SmoothingConfig& cfg);
// Same, from a class index.
ProbabilityVector smooth_labels(std::size_t hot_index, const SmoothingConfig& cfg);

// sum(pred_i^2 / label_i) - 1. Labels must be strictly positive (smoothed).
double chi_square_loss(const std::vector<double>& pred,
                       const std::vector<double>& label);

// d/dpred_i of the above: 2*pred_i/label_i.
std::vector<double> chi_square_grad_wrt_pred(const std::vector<double>& pred,
                                             const std::vector<double>& label);

// Gradient of chi_square_loss(softmax(z), label) with respect to z.
// Closed form 2*p_j*(p_j/y_j - (L+1)) with p = softmax(z), L the loss.
std::vector<double> chi_square_grad_wrt_logits(const std::vector<double>& logits,
                                               const std::vector<double>& label);

// -sum(label_i * ln(pred_i)), pred clamped at 1e-12 before the log.
double cross_entropy_loss(const std::vector<double>& pred,
                          const std::vector<double>& label);

// softmax(logits) - label.
std::vector<double> cross_entropy_grad_wrt_logits(const std::vector<double>& logits,
                                                  const std::vector<double>& label);

// Numerically safe softmax (max subtraction).
std::vector<double> softmax(const std::vector<double>& logits);

enum class LossKind { ChiSquare, CrossEntropy };

double loss_value(LossKind kind, const std::vector<double>& pred,
                  const std::vector<double>& label);
std::vector<double> loss_grad_wrt_logits(LossKind kind,
                                         const std::vector<double>& logits,
                                         const std::vector<double>& label);

}  // namespace chisq
