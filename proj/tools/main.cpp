#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chisq/experiments.hpp"

namespace {

void add_common_flags(CLI::App* cmd, chisq::ExperimentConfig& cfg) {
    cmd->add_option("--data-dir", cfg.data_dir, "Directory with MNIST idx files");
    cmd->add_flag("--synthetic", cfg.synthetic, "Use generated data instead of files");
    cmd->add_option("--out-dir", cfg.out_dir, "Output directory for CSVs and reports");
    cmd->add_option("--seed", cfg.seed, "Base RNG seed");
    cmd->add_option("--epochs", cfg.epochs, "Training epochs per run");
    cmd->add_option("--batch-size", cfg.batch_size, "Mini-batch size");
    cmd->add_option("--alpha", cfg.alpha, "Label smoothing strength");
    cmd->add_option("--lr", cfg.lr_chi2, "Chi-square learning rate");
    cmd->add_option("--lr-ce", cfg.lr_ce, "Cross-entropy learning rate");
    cmd->add_option("--hidden-dim", cfg.hidden_dim, "Hidden layer width");
    cmd->add_option("--train-per-class", cfg.train_per_class, "Train samples per class");
    cmd->add_option("--test-per-class", cfg.test_per_class, "Test samples per class");
    cmd->set_config("--config", "", "Key-value config file; flags override it");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chi-square loss training harness"};
    app.require_subcommand(1);

    chisq::ExperimentConfig cfg;

    CLI::App* exp1 = app.add_subcommand("exp1", "Penultimate-dimension sweep");
    add_common_flags(exp1, cfg);
    exp1->add_option("--penultimate-dim", cfg.penultimate_dims,
                     "Penultimate dims to sweep");

    CLI::App* exp2 = app.add_subcommand("exp2", "Label-smoothing sweep");
    add_common_flags(exp2, cfg);
    exp2->add_option("--alphas", cfg.alphas, "Smoothing values to sweep");
    exp2->add_flag("--scale-lr-with-alpha", cfg.scale_lr_with_alpha,
                   "Scale the chi-square learning rate proportionally to alpha");

    CLI::App* exp3 = app.add_subcommand("exp3", "Class-count sweep on blobs");
    add_common_flags(exp3, cfg);
    exp3->add_option("--classes", cfg.class_counts, "Class counts to sweep");

    CLI::App* surface = app.add_subcommand("surface", "2-class logit loss surface");
    add_common_flags(surface, cfg);
    surface->add_option("--grid-min", cfg.grid_min, "Grid lower bound");
    surface->add_option("--grid-max", cfg.grid_max, "Grid upper bound");
    surface->add_option("--grid-step", cfg.grid_step, "Grid step");

    CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference audit");
    std::uint64_t gc_seed = 42;
    std::size_t gc_trials = 100;
    gradcheck->add_option("--seed", gc_seed, "RNG seed");
    gradcheck->add_option("--trials", gc_trials, "Random configurations to test");

    CLI11_PARSE(app, argc, argv);

    try {
        if (exp1->parsed()) {
            const auto report = chisq::run_exp1(cfg);
            std::printf("exp1 done; report at %s/exp1_report.json\n", cfg.out_dir.c_str());
            for (const auto& [k, v] : report.derived)
                std::printf("  %s = %.6f\n", k.c_str(), v);
        } else if (exp2->parsed()) {
            const auto report = chisq::run_exp2(cfg);
            std::printf("exp2 done; fixed-predictor slope %.4f\n",
                        report.derived.at("fixed_predictor_slope"));
        } else if (exp3->parsed()) {
            const auto report = chisq::run_exp3(cfg);
            std::printf("exp3 done; report at %s/exp3_report.json\n", cfg.out_dir.c_str());
            for (const auto& [k, v] : report.derived)
                std::printf("  %s = %.6f\n", k.c_str(), v);
        } else if (surface->parsed()) {
            const auto report = chisq::emit_surface(cfg);
            std::printf("surface done; active fractions chi2 %.4f, ce %.4f\n",
                        report.derived.at("active_fraction_chi2"),
                        report.derived.at("active_fraction_ce"));
        } else if (gradcheck->parsed()) {
            const auto report = chisq::run_gradcheck(gc_seed, gc_trials);
            std::printf("gradcheck: %zu checks, max relative error %.3e\n",
                        report.checks, report.max_rel_error);
            if (!report.passed) {
                std::printf("FAIL: worst parameter %s\n", report.worst.c_str());
                return 1;
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
