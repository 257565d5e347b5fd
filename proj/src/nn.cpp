#include "chisq/nn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "chisq/rng.hpp"

namespace chisq {

namespace {

constexpr const char* kCheckpointMagic = "CHISQ-MLP";
constexpr int kCheckpointVersion = 1;

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("TrainConfig: learning_rate must be > 0");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("TrainConfig: alpha must be in (0,1)");
    if (batch_size == 0) throw ConfigError("TrainConfig: batch_size must be >= 1");
}

MlpModel init_model(const std::vector<std::size_t>& layer_dims, std::uint64_t seed) {
    if (layer_dims.size() < 2)
        throw ConfigError("init_model: need at least 2 layer dims");
    for (std::size_t d : layer_dims)
        if (d < 1) throw ConfigError("init_model: every layer dim must be >= 1");

    MlpModel m;
    m.layer_dims = layer_dims;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const std::size_t fan_in = layer_dims[l];
        const std::size_t fan_out = layer_dims[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_in, fan_out);
        for (std::size_t i = 0; i < w.size(); ++i)
            w.raw()[i] = rng.uniform(-limit, limit);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(fan_out, 0.0);
    }
    return m;
}

ForwardResult forward(const MlpModel& model, const Matrix& batch) {
    if (batch.cols() != model.input_dim())
        throw ShapeError("forward: batch cols (" + std::to_string(batch.cols()) +
                         ") != input dim (" + std::to_string(model.input_dim()) + ")");
    ForwardResult r;
    r.activations.reserve(model.n_layers() + 1);
    r.activations.push_back(batch);
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        Matrix z = matmul(r.activations.back(), model.weights[l]);
        add_row_bias(z, model.biases[l]);
        // ReLU on hidden layers except the penultimate, which stays linear
        // so its activations span the whole plane rather than one quadrant.
        // The final layer is affine into softmax.
        const bool relu = l + 2 < model.n_layers();
        if (relu)
            for (double& v : z.raw()) v = v > 0.0 ? v : 0.0;
        r.activations.push_back(std::move(z));
    }
    r.logits = r.activations.back();
    r.logits.check_finite("forward logits");
    return r;
}

Gradients backward(const MlpModel& model, const std::vector<Matrix>& activations,
                   const Matrix& dl_dlogits) {
    if (activations.size() != model.n_layers() + 1)
        throw ShapeError("backward: activations list does not match model depth");
    const Matrix& logits = activations.back();
    if (dl_dlogits.rows() != logits.rows() || dl_dlogits.cols() != logits.cols())
        throw ShapeError("backward: dL/dlogits shape does not match logits");

    Gradients g;
    g.weights.resize(model.n_layers());
    g.biases.resize(model.n_layers());

    Matrix delta = dl_dlogits;
    for (std::size_t l = model.n_layers(); l-- > 0;) {
        g.weights[l] = matmul_at_b(activations[l], delta);
        g.biases[l] = col_sums(delta);
        if (l == 0) break;
        // Through the weights, then through the previous layer's ReLU (the
        // penultimate layer is linear, see forward()).
        Matrix prev = matmul_a_bt(delta, model.weights[l]);
        if (l + 1 < model.n_layers()) {
            const Matrix& act = activations[l];
            for (std::size_t i = 0; i < prev.size(); ++i)
                if (act.raw()[i] <= 0.0) prev.raw()[i] = 0.0;
        }
        delta = std::move(prev);
    }
    return g;
}

void sgd_step(MlpModel& model, const Gradients& grads, double learning_rate) {
    if (!(learning_rate >= 0.0)) throw ConfigError("sgd_step: learning_rate must be >= 0");
    if (grads.weights.size() != model.n_layers())
        throw ShapeError("sgd_step: gradient count does not match model");
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        if (grads.weights[l].rows() != model.weights[l].rows() ||
            grads.weights[l].cols() != model.weights[l].cols())
            throw ShapeError("sgd_step: weight gradient shape mismatch");
        for (std::size_t i = 0; i < model.weights[l].size(); ++i)
            model.weights[l].raw()[i] -= learning_rate * grads.weights[l].raw()[i];
        for (std::size_t i = 0; i < model.biases[l].size(); ++i)
            model.biases[l][i] -= learning_rate * grads.biases[l][i];
    }
}

void write_checkpoint(const MlpModel& model, std::ostream& out) {
    out << kCheckpointMagic << " v" << kCheckpointVersion << "\n";
    out << "dims";
    for (std::size_t d : model.layer_dims) out << ' ' << d;
    out << "\n";
    char buf[40];
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        out << "layer " << l << "\n";
        for (std::size_t i = 0; i < model.weights[l].size(); ++i) {
            std::snprintf(buf, sizeof buf, "%a", model.weights[l].raw()[i]);
            out << buf << (i + 1 == model.weights[l].size() ? "\n" : " ");
        }
        for (std::size_t i = 0; i < model.biases[l].size(); ++i) {
            std::snprintf(buf, sizeof buf, "%a", model.biases[l][i]);
            out << buf << (i + 1 == model.biases[l].size() ? "\n" : " ");
        }
    }
}

MlpModel read_checkpoint(std::istream& in) {
    std::string magic, version;
    in >> magic >> version;
    if (magic != kCheckpointMagic || version != "v1")
        throw IoError("checkpoint: bad header, expected '" +
                      std::string(kCheckpointMagic) + " v1'");
    std::string tag;
    in >> tag;
    if (tag != "dims") throw IoError("checkpoint: missing dims line");
    std::string line;
    std::getline(in, line);
    std::istringstream dims_in(line);
    MlpModel m;
    std::size_t d;
    while (dims_in >> d) m.layer_dims.push_back(d);
    if (m.layer_dims.size() < 2) throw IoError("checkpoint: fewer than 2 layer dims");

    auto read_value = [&in]() {
        std::string tok;
        if (!(in >> tok)) throw IoError("checkpoint: truncated parameter block");
        return std::strtod(tok.c_str(), nullptr);
    };
    for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
        std::size_t idx;
        in >> tag >> idx;
        if (tag != "layer" || idx != l) throw IoError("checkpoint: bad layer header");
        Matrix w(m.layer_dims[l], m.layer_dims[l + 1]);
        for (std::size_t i = 0; i < w.size(); ++i) w.raw()[i] = read_value();
        std::vector<double> b(m.layer_dims[l + 1]);
        for (double& v : b) v = read_value();
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
    }
    return m;
}

void save_checkpoint(const MlpModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    write_checkpoint(model, out);
    if (!out) throw IoError("write failed: " + path);
}

MlpModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    return read_checkpoint(in);
}

}  // namespace chisq
