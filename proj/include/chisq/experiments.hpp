#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chisq/data.hpp"
#include "chisq/nn.hpp"

namespace chisq {

struct ExperimentConfig {
    std::string data_dir;        // directory with MNIST idx files
    bool synthetic = false;      // bypass files, use generated data
    std::string out_dir = "out";
    std::uint64_t seed = 42;
    std::size_t epochs = 20;
    std::size_t batch_size = 64;
    double lr_chi2 = 0.05;
    double lr_ce = 0.1;
    double alpha = 0.1;
    bool scale_lr_with_alpha = false;  // lr ~ alpha during the exp2 sweep
    std::size_t hidden_dim = 32;
    std::size_t train_per_class = 1000;  // 10k train at 10 classes
    std::size_t test_per_class = 200;    // 2k test at 10 classes

    std::vector<std::size_t> penultimate_dims = {2, 3, 4, 5, 8};
    std::vector<double> alphas = {0.02, 0.05, 0.1, 0.2, 0.3};
    std::vector<std::size_t> class_counts = {5, 10, 20, 50};

    double grid_min = -10.0;
    double grid_max = 10.0;
    double grid_step = 0.1;

    void validate() const;
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double test_loss = 0.0;
    double test_accuracy = 0.0;
};

struct RunRecord {
    std::string name;
    LossKind loss = LossKind::ChiSquare;
    double learning_rate = 0.0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> arch;
    std::vector<EpochMetrics> epochs;
    double final_test_accuracy = 0.0;
    double final_test_loss = 0.0;
    std::string checkpoint_path;
};

struct ExperimentReport {
    std::string experiment;
    std::map<std::string, std::string> config_echo;
    std::vector<RunRecord> runs;
    std::map<std::string, double> derived;  // fitted slopes, gaps, fractions
    std::vector<std::string> csv_paths;

    void check() const;  // accuracies in [0,1], epoch numbers monotone
    void save_json(const std::string& path) const;
};

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

struct TrainResult {
    MlpModel model;
    std::vector<EpochMetrics> epochs;
};

// Mini-batch SGD with per-epoch test metrics. Labels are smoothed at
// cfg.alpha for both loss kinds. Deterministic for a fixed (cfg, data).
TrainResult train_model(const Dataset& train, const Dataset& test,
                        const std::vector<std::size_t>& arch, const TrainConfig& cfg);

EvalResult evaluate(const MlpModel& model, const Dataset& ds, LossKind kind,
                    double alpha);

// Argmax with lowest-index tie break.
std::size_t predict_class(const std::vector<double>& logits);

// Penultimate-dimension sweep: chi-square vs cross-entropy accuracy per dim,
// plus penultimate activation dumps.
ExperimentReport run_exp1(const ExperimentConfig& cfg);

// Label-smoothing sweep: loss vs alpha for a fixed random predictor and for
// trained models; fits the slope of log(L+1) against log(1/alpha).
ExperimentReport run_exp2(const ExperimentConfig& cfg);

// Class-count sweep on synthetic blobs: accuracy gap (CE - chi2) per n.
ExperimentReport run_exp3(const ExperimentConfig& cfg);

struct SurfaceGrid {
    std::vector<double> z1_axis, z2_axis;
    Matrix loss;       // loss at (z1[i], z2[j])
    Matrix grad_norm;  // gradient magnitude at the same point

    // Fraction of grid points with grad_norm > frac * max(grad_norm).
    double active_fraction(double frac) const;
};

// 2-class loss surface over pre-softmax logits, for one loss kind.
SurfaceGrid compute_surface(const ExperimentConfig& cfg, LossKind kind);

// Writes chi2 and CE surfaces as CSV (z1, z2, loss, grad_norm).
ExperimentReport emit_surface(const ExperimentConfig& cfg);

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst;  // description of the worst parameter
    std::size_t checks = 0;
    bool passed = false;
};

// Finite-difference sweep over both losses and full-model backprop.
GradCheckReport run_gradcheck(std::uint64_t seed, std::size_t trials = 100,
                              double tolerance = 1e-5);

// Resolves the exp1/exp2 dataset: MNIST idx files from cfg.data_dir, or a
// deterministic synthetic 10-class set when cfg.synthetic is set.
std::pair<Dataset, Dataset> resolve_train_test(const ExperimentConfig& cfg);

}  // namespace chisq
