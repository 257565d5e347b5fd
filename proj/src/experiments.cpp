#include "chisq/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "chisq/rng.hpp"
#include "chisq/stats.hpp"

namespace chisq {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_csv(const std::string& path, const std::string& header) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot open CSV for writing: " + path);
    out << header << "\n";
    return out;
}

const char* loss_name(LossKind k) {
    return k == LossKind::ChiSquare ? "chi2" : "ce";
}

// Per-class smoothed label rows, precomputed once per training run.
std::vector<std::vector<double>> smoothed_label_table(std::size_t n_classes,
                                                      double alpha) {
    std::vector<std::vector<double>> table;
    table.reserve(n_classes);
    SmoothingConfig cfg{alpha, n_classes};
    for (std::size_t c = 0; c < n_classes; ++c)
        table.push_back(smooth_labels(c, cfg).entries());
    return table;
}

Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& idx,
                   std::size_t begin, std::size_t end) {
    Matrix out(end - begin, src.cols());
    for (std::size_t r = begin; r < end; ++r) {
        const double* s = src.row(idx[r]);
        std::copy(s, s + src.cols(), out.row(r - begin));
    }
    return out;
}

// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    return num / den;
}

RunRecord make_run_record(const std::string& name, LossKind kind,
                          const TrainConfig& cfg, const std::vector<std::size_t>& arch,
                          const TrainResult& tr) {
    RunRecord r;
    r.name = name;
    r.loss = kind;
    r.learning_rate = cfg.learning_rate;
    r.alpha = cfg.alpha;
    r.seed = cfg.seed;
    r.arch = arch;
    r.epochs = tr.epochs;
    if (!tr.epochs.empty()) {
        r.final_test_accuracy = tr.epochs.back().test_accuracy;
        r.final_test_loss = tr.epochs.back().test_loss;
    }
    return r;
}

// Save a checkpoint, reload it and confirm the reloaded model reproduces the
// recorded test metrics exactly.
void checkpoint_roundtrip(RunRecord& rec, const MlpModel& model,
                          const Dataset& test, LossKind kind, double alpha,
                          const std::string& out_dir) {
    const std::string path = out_dir + "/" + rec.name + ".ckpt";
    fs::create_directories(out_dir);
    save_checkpoint(model, path);
    const MlpModel reloaded = load_checkpoint(path);
    const EvalResult again = evaluate(reloaded, test, kind, alpha);
    if (again.accuracy != rec.final_test_accuracy || again.loss != rec.final_test_loss)
        throw NumericError("checkpoint round trip changed metrics for " + rec.name);
    rec.checkpoint_path = path;
}

void dump_penultimate_csv(const std::string& path, const MlpModel& model,
                          const Dataset& ds) {
    const ForwardResult fwd = forward(model, ds.features);
    const Matrix& pen = fwd.penultimate();
    std::string header;
    for (std::size_t c = 0; c < pen.cols(); ++c) header += "p" + std::to_string(c) + ",";
    header += "label";
    std::ofstream out = open_csv(path, header);
    for (std::size_t r = 0; r < pen.rows(); ++r) {
        for (std::size_t c = 0; c < pen.cols(); ++c) out << fmt_double(pen(r, c)) << ",";
        out << ds.labels[r] << "\n";
    }
}

std::map<std::string, std::string> echo_common(const ExperimentConfig& cfg) {
    return {
        {"seed", std::to_string(cfg.seed)},
        {"epochs", std::to_string(cfg.epochs)},
        {"batch_size", std::to_string(cfg.batch_size)},
        {"alpha", fmt_double(cfg.alpha)},
        {"lr_chi2", fmt_double(cfg.lr_chi2)},
        {"lr_ce", fmt_double(cfg.lr_ce)},
        {"synthetic", cfg.synthetic ? "true" : "false"},
        {"data_dir", cfg.data_dir},
        {"out_dir", cfg.out_dir},
    };
}

}  // namespace

void ExperimentConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0,1)");
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha sweep value outside (0,1)");
    if (!(lr_chi2 > 0.0 && lr_ce > 0.0)) throw ConfigError("learning rates must be > 0");
    if (epochs == 0 || batch_size == 0) throw ConfigError("epochs/batch_size must be >= 1");
    if (!(grid_step > 0.0) || !(grid_max > grid_min))
        throw ConfigError("degenerate surface grid");
}

void ExperimentReport::check() const {
    for (const RunRecord& r : runs) {
        if (r.final_test_accuracy < 0.0 || r.final_test_accuracy > 1.0)
            throw ValidationError("report: accuracy outside [0,1] in " + r.name);
        for (std::size_t i = 1; i < r.epochs.size(); ++i)
            if (r.epochs[i].epoch <= r.epochs[i - 1].epoch)
                throw ValidationError("report: epoch log not monotone in " + r.name);
    }
}

void ExperimentReport::save_json(const std::string& path) const {
    check();
    json j;
    j["experiment"] = experiment;
    j["config"] = config_echo;
    j["derived"] = derived;
    j["csv_paths"] = csv_paths;
    j["runs"] = json::array();
    for (const RunRecord& r : runs) {
        json jr;
        jr["name"] = r.name;
        jr["loss"] = loss_name(r.loss);
        jr["learning_rate"] = r.learning_rate;
        jr["alpha"] = r.alpha;
        jr["seed"] = r.seed;
        jr["arch"] = r.arch;
        jr["final_test_accuracy"] = r.final_test_accuracy;
        jr["final_test_loss"] = r.final_test_loss;
        jr["checkpoint"] = r.checkpoint_path;
        jr["epochs"] = json::array();
        for (const EpochMetrics& e : r.epochs)
            jr["epochs"].push_back({{"epoch", e.epoch},
                                    {"train_loss", e.train_loss},
                                    {"test_loss", e.test_loss},
                                    {"test_accuracy", e.test_accuracy}});
        j["runs"].push_back(std::move(jr));
    }
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report: " + path);
    out << j.dump(2) << "\n";
}

std::size_t predict_class(const std::vector<double>& logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[best]) best = i;
    return best;
}

EvalResult evaluate(const MlpModel& model, const Dataset& ds, LossKind kind,
                    double alpha) {
    const auto labels = smoothed_label_table(ds.n_classes, alpha);
    const ForwardResult fwd = forward(model, ds.features);
    EvalResult r;
    std::size_t correct = 0;
    std::vector<double> row(ds.n_classes);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double* lr = fwd.logits.row(i);
        row.assign(lr, lr + ds.n_classes);
        const std::vector<double> pred = softmax(row);
        r.loss += loss_value(kind, pred, labels[ds.labels[i]]);
        if (predict_class(row) == ds.labels[i]) ++correct;
    }
    r.loss /= static_cast<double>(ds.size());
    r.accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
    return r;
}

TrainResult train_model(const Dataset& train, const Dataset& test,
                        const std::vector<std::size_t>& arch, const TrainConfig& cfg) {
    cfg.validate();
    train.validate();
    if (arch.back() != train.n_classes)
        throw ConfigError("train_model: output dim != class count");

    const auto labels = smoothed_label_table(train.n_classes, cfg.alpha);
    TrainResult result;
    result.model = init_model(arch, cfg.seed);
    Rng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> logit_row(train.n_classes);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(begin + cfg.batch_size, order.size());
            const Matrix batch = gather_rows(train.features, order, begin, end);
            const ForwardResult fwd = forward(result.model, batch);

            const double inv_bs = 1.0 / static_cast<double>(end - begin);
            Matrix dl(fwd.logits.rows(), fwd.logits.cols());
            for (std::size_t r = 0; r < fwd.logits.rows(); ++r) {
                const double* lr = fwd.logits.row(r);
                logit_row.assign(lr, lr + train.n_classes);
                const auto& y = labels[train.labels[order[begin + r]]];
                loss_sum += loss_value(cfg.loss_kind, softmax(logit_row), y);
                const std::vector<double> g =
                    loss_grad_wrt_logits(cfg.loss_kind, logit_row, y);
                for (std::size_t c = 0; c < g.size(); ++c) dl(r, c) = g[c] * inv_bs;
            }
            seen += end - begin;
            const Gradients grads = backward(result.model, fwd.activations, dl);
            sgd_step(result.model, grads, cfg.learning_rate);
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = loss_sum / static_cast<double>(seen);
        const EvalResult ev = evaluate(result.model, test, cfg.loss_kind, cfg.alpha);
        m.test_loss = ev.loss;
        m.test_accuracy = ev.accuracy;
        result.epochs.push_back(m);
    }
    return result;
}

std::pair<Dataset, Dataset> resolve_train_test(const ExperimentConfig& cfg) {
    if (!cfg.synthetic) {
        if (cfg.data_dir.empty())
            throw IoError("no --data-dir given and --synthetic not set");
        const fs::path dir(cfg.data_dir);
        Dataset train = load_idx((dir / "train-images-idx3-ubyte").string(),
                                 (dir / "train-labels-idx1-ubyte").string());
        Dataset test = load_idx((dir / "t10k-images-idx3-ubyte").string(),
                                (dir / "t10k-labels-idx1-ubyte").string());
        return {subset(train, cfg.train_per_class, cfg.seed),
                subset(test, cfg.test_per_class, cfg.seed + 1)};
    }

    // Synthetic stand-in: 10 well-separated Gaussian classes in 64 dims,
    // split per class into train/test halves that share centers.
    BlobSpec spec;
    spec.n_classes = 10;
    spec.dim = 64;
    spec.samples_per_class = cfg.train_per_class + cfg.test_per_class;
    spec.cluster_spread = 0.25;
    spec.seed = cfg.seed;
    const Dataset all = make_blobs(spec);

    Dataset train, test;
    train.n_classes = test.n_classes = spec.n_classes;
    const std::size_t total_train = spec.n_classes * cfg.train_per_class;
    const std::size_t total_test = spec.n_classes * cfg.test_per_class;
    train.features = Matrix(total_train, spec.dim);
    test.features = Matrix(total_test, spec.dim);
    std::size_t ti = 0, si = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        const std::size_t within = i % spec.samples_per_class;
        const double* src = all.features.row(i);
        if (within < cfg.train_per_class) {
            std::copy(src, src + spec.dim, train.features.row(ti));
            train.labels.push_back(all.labels[i]);
            ++ti;
        } else {
            std::copy(src, src + spec.dim, test.features.row(si));
            test.labels.push_back(all.labels[i]);
            ++si;
        }
    }
    return {std::move(train), std::move(test)};
}

ExperimentReport run_exp1(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto [train, test] = resolve_train_test(cfg);

    ExperimentReport report;
    report.experiment = "exp1";
    report.config_echo = echo_common(cfg);

    const std::string acc_csv_path = cfg.out_dir + "/exp1_accuracy_vs_dim.csv";
    std::ofstream acc_csv =
        open_csv(acc_csv_path, "loss,penultimate_dim,final_test_accuracy,final_test_loss");
    report.csv_paths.push_back(acc_csv_path);

    for (const std::size_t pendim : cfg.penultimate_dims) {
        const std::vector<std::size_t> arch = {train.features.cols(), cfg.hidden_dim,
                                               pendim, train.n_classes};
        for (const LossKind kind : {LossKind::ChiSquare, LossKind::CrossEntropy}) {
            TrainConfig tc;
            tc.learning_rate = kind == LossKind::ChiSquare ? cfg.lr_chi2 : cfg.lr_ce;
            tc.epochs = cfg.epochs;
            tc.batch_size = cfg.batch_size;
            tc.seed = cfg.seed ^ (pendim * 2 + (kind == LossKind::ChiSquare ? 0 : 1));
            tc.loss_kind = kind;
            tc.alpha = cfg.alpha;

            const TrainResult tr = train_model(train, test, arch, tc);
            const std::string name =
                std::string("exp1_") + loss_name(kind) + "_dim" + std::to_string(pendim);
            RunRecord rec = make_run_record(name, kind, tc, arch, tr);
            checkpoint_roundtrip(rec, tr.model, test, kind, cfg.alpha, cfg.out_dir);

            acc_csv << loss_name(kind) << "," << pendim << ","
                    << fmt_double(rec.final_test_accuracy) << ","
                    << fmt_double(rec.final_test_loss) << "\n";

            const std::string pen_csv = cfg.out_dir + "/" + name + "_penultimate.csv";
            dump_penultimate_csv(pen_csv, tr.model, test);
            report.csv_paths.push_back(pen_csv);

            report.derived["acc_" + std::string(loss_name(kind)) + "_dim" +
                           std::to_string(pendim)] = rec.final_test_accuracy;
            report.runs.push_back(std::move(rec));
        }
    }
    report.check();
    report.save_json(cfg.out_dir + "/exp1_report.json");
    return report;
}

ExperimentReport run_exp2(const ExperimentConfig& cfg) {
    cfg.validate();

    ExperimentReport report;
    report.experiment = "exp2";
    report.config_echo = echo_common(cfg);
    report.config_echo["scale_lr_with_alpha"] = cfg.scale_lr_with_alpha ? "true" : "false";

    // Fixed-predictor evaluation: the same random predictions scored against
    // labels smoothed at each alpha. This isolates the 1/alpha scaling from
    // training dynamics.
    Rng rng(cfg.seed ^ 0xa5a5a5a5ull);
    const std::size_t n = 10, trials = 200;
    std::vector<std::vector<double>> preds(trials, std::vector<double>(n));
    std::vector<std::size_t> hot(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        double sum = 0.0;
        for (double& v : preds[t]) {
            v = rng.uniform() + 1e-9;
            sum += v;
        }
        for (double& v : preds[t]) v /= sum;
        hot[t] = rng.below(n);
    }
    std::vector<double> log_inv_alpha, log_lp1, fixed_losses;
    for (const double a : cfg.alphas) {
        SmoothingConfig sc{a, n};
        double mean = 0.0;
        for (std::size_t t = 0; t < trials; ++t)
            mean += chi_square_loss(preds[t], smooth_labels(hot[t], sc).entries());
        mean /= static_cast<double>(trials);
        fixed_losses.push_back(mean);
        log_inv_alpha.push_back(std::log(1.0 / a));
        log_lp1.push_back(std::log(mean + 1.0));
    }
    const double slope = fit_slope(log_inv_alpha, log_lp1);
    report.derived["fixed_predictor_slope"] = slope;

    // Trained runs per alpha.
    const auto [train, test] = resolve_train_test(cfg);
    const std::vector<std::size_t> arch = {train.features.cols(), cfg.hidden_dim, 8,
                                           train.n_classes};
    const std::string csv_path = cfg.out_dir + "/exp2_alpha_sweep.csv";
    std::ofstream csv = open_csv(
        csv_path, "alpha,fixed_predictor_loss,trained_test_loss,trained_test_accuracy");
    report.csv_paths.push_back(csv_path);

    for (std::size_t i = 0; i < cfg.alphas.size(); ++i) {
        const double a = cfg.alphas[i];
        TrainConfig tc;
        tc.learning_rate = cfg.scale_lr_with_alpha ? cfg.lr_chi2 * (a / 0.1) : cfg.lr_chi2;
        tc.epochs = cfg.epochs;
        tc.batch_size = cfg.batch_size;
        tc.seed = cfg.seed ^ (i + 1);
        tc.loss_kind = LossKind::ChiSquare;
        tc.alpha = a;

        const TrainResult tr = train_model(train, test, arch, tc);
        const std::string name = "exp2_alpha" + std::to_string(i);
        RunRecord rec = make_run_record(name, LossKind::ChiSquare, tc, arch, tr);
        checkpoint_roundtrip(rec, tr.model, test, LossKind::ChiSquare, a, cfg.out_dir);

        csv << fmt_double(a) << "," << fmt_double(fixed_losses[i]) << ","
            << fmt_double(rec.final_test_loss) << ","
            << fmt_double(rec.final_test_accuracy) << "\n";
        report.derived["trained_loss_alpha" + std::to_string(i)] = rec.final_test_loss;
        report.runs.push_back(std::move(rec));
    }
    report.check();
    report.save_json(cfg.out_dir + "/exp2_report.json");
    return report;
}

ExperimentReport run_exp3(const ExperimentConfig& cfg) {
    cfg.validate();

    ExperimentReport report;
    report.experiment = "exp3";
    report.config_echo = echo_common(cfg);

    const std::string csv_path = cfg.out_dir + "/exp3_class_sweep.csv";
    std::ofstream csv = open_csv(csv_path, "loss,n_classes,final_test_accuracy");
    report.csv_paths.push_back(csv_path);

    for (const std::size_t n : cfg.class_counts) {
        BlobSpec spec;
        spec.n_classes = n;
        spec.dim = 16;
        spec.samples_per_class = 150;
        spec.cluster_spread = 0.1;
        spec.seed = cfg.seed ^ (n * 0x100);
        const Dataset all = make_blobs(spec);
        // Blobs are ordered by class: first 120 of each class train, the
        // remaining 30 test. Centers are shared, samples disjoint.
        Dataset train, test;
        train.n_classes = test.n_classes = all.n_classes;
        const std::size_t train_pc = 120, test_pc = spec.samples_per_class - train_pc;
        train.features = Matrix(n * train_pc, all.features.cols());
        test.features = Matrix(n * test_pc, all.features.cols());
        std::size_t ti = 0, si = 0;
        for (std::size_t i = 0; i < all.size(); ++i) {
            const double* src = all.features.row(i);
            if (i % spec.samples_per_class < train_pc) {
                std::copy(src, src + all.features.cols(), train.features.row(ti++));
                train.labels.push_back(all.labels[i]);
            } else {
                std::copy(src, src + all.features.cols(), test.features.row(si++));
                test.labels.push_back(all.labels[i]);
            }
        }

        const std::vector<std::size_t> arch = {spec.dim, cfg.hidden_dim, 16, n};
        double acc[2] = {0.0, 0.0};
        for (const LossKind kind : {LossKind::ChiSquare, LossKind::CrossEntropy}) {
            TrainConfig tc;
            tc.learning_rate = kind == LossKind::ChiSquare ? cfg.lr_chi2 : cfg.lr_ce;
            tc.epochs = cfg.epochs;
            tc.batch_size = cfg.batch_size;
            tc.seed = cfg.seed ^ (n * 4 + (kind == LossKind::ChiSquare ? 0 : 1));
            tc.loss_kind = kind;
            tc.alpha = cfg.alpha;

            const TrainResult tr = train_model(train, test, arch, tc);
            const std::string name =
                std::string("exp3_") + loss_name(kind) + "_n" + std::to_string(n);
            RunRecord rec = make_run_record(name, kind, tc, arch, tr);
            checkpoint_roundtrip(rec, tr.model, test, kind, cfg.alpha, cfg.out_dir);
            acc[kind == LossKind::ChiSquare ? 0 : 1] = rec.final_test_accuracy;

            csv << loss_name(kind) << "," << n << ","
                << fmt_double(rec.final_test_accuracy) << "\n";
            report.derived["acc_" + std::string(loss_name(kind)) + "_n" +
                           std::to_string(n)] = rec.final_test_accuracy;
            report.runs.push_back(std::move(rec));
        }
        report.derived["gap_n" + std::to_string(n)] = acc[1] - acc[0];
    }
    report.check();
    report.save_json(cfg.out_dir + "/exp3_report.json");
    return report;
}

double SurfaceGrid::active_fraction(double frac) const {
    double max_g = 0.0;
    for (double g : grad_norm.raw()) max_g = std::max(max_g, g);
    if (max_g == 0.0) return 0.0;
    std::size_t active = 0;
    for (double g : grad_norm.raw())
        if (g > frac * max_g) ++active;
    return static_cast<double>(active) / static_cast<double>(grad_norm.size());
}

SurfaceGrid compute_surface(const ExperimentConfig& cfg, LossKind kind) {
    cfg.validate();
    const std::vector<double> label =
        smooth_labels(std::size_t{0}, SmoothingConfig{cfg.alpha, 2}).entries();

    SurfaceGrid grid;
    for (double z = cfg.grid_min; z <= cfg.grid_max + 1e-12; z += cfg.grid_step)
        grid.z1_axis.push_back(z);
    grid.z2_axis = grid.z1_axis;
    const std::size_t m = grid.z1_axis.size();
    grid.loss = Matrix(m, m);
    grid.grad_norm = Matrix(m, m);

    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const std::vector<double> z = {grid.z1_axis[i], grid.z2_axis[j]};
            const std::vector<double> p = softmax(z);
            grid.loss(i, j) = loss_value(kind, p, label);
            const std::vector<double> g = loss_grad_wrt_logits(kind, z, label);
            grid.grad_norm(i, j) = std::sqrt(g[0] * g[0] + g[1] * g[1]);
        }
    }
    grid.loss.check_finite("surface loss grid");
    return grid;
}

ExperimentReport emit_surface(const ExperimentConfig& cfg) {
    ExperimentReport report;
    report.experiment = "surface";
    report.config_echo = echo_common(cfg);
    report.config_echo["grid_min"] = fmt_double(cfg.grid_min);
    report.config_echo["grid_max"] = fmt_double(cfg.grid_max);
    report.config_echo["grid_step"] = fmt_double(cfg.grid_step);

    for (const LossKind kind : {LossKind::ChiSquare, LossKind::CrossEntropy}) {
        const SurfaceGrid grid = compute_surface(cfg, kind);
        const std::string path =
            cfg.out_dir + "/surface_" + loss_name(kind) + ".csv";
        std::ofstream csv = open_csv(path, "z1,z2,loss,grad_norm");
        for (std::size_t i = 0; i < grid.z1_axis.size(); ++i)
            for (std::size_t j = 0; j < grid.z2_axis.size(); ++j)
                csv << fmt_double(grid.z1_axis[i]) << "," << fmt_double(grid.z2_axis[j])
                    << "," << fmt_double(grid.loss(i, j)) << ","
                    << fmt_double(grid.grad_norm(i, j)) << "\n";
        report.csv_paths.push_back(path);
        report.derived[std::string("active_fraction_") + loss_name(kind)] =
            grid.active_fraction(0.01);
    }
    report.check();
    report.save_json(cfg.out_dir + "/surface_report.json");
    return report;
}

GradCheckReport run_gradcheck(std::uint64_t seed, std::size_t trials,
                              double tolerance) {
    Rng rng(seed);
    GradCheckReport report;

    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::size_t n_hidden = 1 + rng.below(2);  // 1 or 2 hidden layers
        std::vector<std::size_t> dims;
        dims.push_back(2 + rng.below(6));
        for (std::size_t h = 0; h < n_hidden; ++h) dims.push_back(2 + rng.below(15));
        const std::size_t n_classes = 2 + rng.below(7);
        dims.push_back(n_classes);
        const LossKind kind = rng.below(2) == 0 ? LossKind::ChiSquare
                                                : LossKind::CrossEntropy;
        const double alpha = 0.05 + 0.4 * rng.uniform();
        const std::size_t batch = 1 + rng.below(4);

        MlpModel model = init_model(dims, rng.next_u64());
        // Zero-initialized biases can leave a pre-activation exactly at the
        // ReLU kink (a fully dead input row reduces the pre-activation to the
        // bias itself), where central differences are undefined. Jitter them.
        for (auto& bias : model.biases)
            for (double& v : bias) v = 0.1 * rng.normal();
        Matrix x(batch, dims[0]);
        for (double& v : x.raw()) v = rng.normal();
        std::vector<std::size_t> labels(batch);
        for (auto& l : labels) l = rng.below(n_classes);
        const auto table = smoothed_label_table(n_classes, alpha);

        const auto batch_loss = [&](const MlpModel& m) {
            const ForwardResult fwd = forward(m, x);
            double s = 0.0;
            std::vector<double> row(n_classes);
            for (std::size_t r = 0; r < batch; ++r) {
                const double* lr = fwd.logits.row(r);
                row.assign(lr, lr + n_classes);
                s += loss_value(kind, softmax(row), table[labels[r]]);
            }
            return s / static_cast<double>(batch);
        };

        // Analytic gradients.
        const ForwardResult fwd = forward(model, x);
        Matrix dl(batch, n_classes);
        std::vector<double> row(n_classes);
        for (std::size_t r = 0; r < batch; ++r) {
            const double* lr = fwd.logits.row(r);
            row.assign(lr, lr + n_classes);
            const std::vector<double> g = loss_grad_wrt_logits(kind, row, table[labels[r]]);
            for (std::size_t c = 0; c < n_classes; ++c)
                dl(r, c) = g[c] / static_cast<double>(batch);
        }
        const Gradients grads = backward(model, fwd.activations, dl);

        const double h = 1e-6;
        const auto check_param = [&](double& p, double analytic, const std::string& id) {
            const double save = p;
            p = save + h;
            const double lp = batch_loss(model);
            p = save - h;
            const double lm = batch_loss(model);
            p = save;
            const double numeric = (lp - lm) / (2.0 * h);
            const double rel = std::abs(analytic - numeric) /
                               std::max({std::abs(analytic), std::abs(numeric), 1e-3});
            ++report.checks;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst = id + " (analytic " + fmt_double(analytic) + ", numeric " +
                               fmt_double(numeric) + ")";
            }
        };

        for (std::size_t l = 0; l < model.n_layers(); ++l) {
            for (std::size_t i = 0; i < model.weights[l].size(); ++i)
                check_param(model.weights[l].raw()[i], grads.weights[l].raw()[i],
                            "trial " + std::to_string(trial) + " W" + std::to_string(l) +
                                "[" + std::to_string(i) + "]");
            for (std::size_t i = 0; i < model.biases[l].size(); ++i)
                check_param(model.biases[l][i], grads.biases[l][i],
                            "trial " + std::to_string(trial) + " b" + std::to_string(l) +
                                "[" + std::to_string(i) + "]");
        }
    }
    report.passed = report.max_rel_error < tolerance;
    return report;
}

}  // namespace chisq
