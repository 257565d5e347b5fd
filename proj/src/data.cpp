#include "chisq/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>

#include "chisq/rng.hpp"

namespace chisq {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be_u32(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw IoError("truncated IDX file: " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(b), 4);
}

std::string hex_magic(std::uint32_t m) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", m);
    return buf;
}

}  // namespace

void Dataset::validate() const {
    if (features.rows() != labels.size())
        throw ValidationError("Dataset: feature rows != label count");
    for (std::size_t l : labels)
        if (l >= n_classes) throw ValidationError("Dataset: label index out of range");
    features.check_finite("Dataset features");
}

void BlobSpec::validate() const {
    if (n_classes < 2) throw ConfigError("BlobSpec: n_classes must be >= 2");
    if (dim < 1) throw ConfigError("BlobSpec: dim must be >= 1");
    if (samples_per_class < 1) throw ConfigError("BlobSpec: samples_per_class must be >= 1");
    if (!(cluster_spread > 0.0)) throw ConfigError("BlobSpec: cluster_spread must be > 0");
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot open images file: " + images_path);
    const std::uint32_t img_magic = read_be_u32(img, images_path);
    if (img_magic != kImagesMagic)
        throw IoError("bad images magic " + hex_magic(img_magic) + " in " + images_path +
                      ", expected " + hex_magic(kImagesMagic));
    const std::uint32_t count = read_be_u32(img, images_path);
    const std::uint32_t rows = read_be_u32(img, images_path);
    const std::uint32_t cols = read_be_u32(img, images_path);
    const std::size_t pixels = std::size_t(rows) * cols;

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("cannot open labels file: " + labels_path);
    const std::uint32_t lab_magic = read_be_u32(lab, labels_path);
    if (lab_magic != kLabelsMagic)
        throw IoError("bad labels magic " + hex_magic(lab_magic) + " in " + labels_path +
                      ", expected " + hex_magic(kLabelsMagic));
    const std::uint32_t lab_count = read_be_u32(lab, labels_path);
    if (lab_count != count)
        throw ValidationError("IDX count mismatch: " + std::to_string(count) +
                              " images vs " + std::to_string(lab_count) + " labels");

    Dataset ds;
    ds.features = Matrix(count, pixels);
    std::vector<unsigned char> buf(pixels);
    for (std::uint32_t i = 0; i < count; ++i) {
        if (!img.read(reinterpret_cast<char*>(buf.data()), pixels))
            throw IoError("truncated IDX file: " + images_path);
        double* row = ds.features.row(i);
        for (std::size_t p = 0; p < pixels; ++p) row[p] = buf[p] / 255.0;
    }
    ds.labels.resize(count);
    std::size_t max_label = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        unsigned char l;
        if (!lab.read(reinterpret_cast<char*>(&l), 1))
            throw IoError("truncated IDX file: " + labels_path);
        ds.labels[i] = l;
        max_label = std::max<std::size_t>(max_label, l);
    }
    ds.n_classes = max_label + 1;
    ds.validate();
    return ds;
}

void save_idx(const Dataset& ds, std::size_t img_rows, std::size_t img_cols,
              const std::string& images_path, const std::string& labels_path) {
    if (img_rows * img_cols != ds.features.cols())
        throw ShapeError("save_idx: rows*cols != feature dim");
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot open for writing: " + images_path);
    write_be_u32(img, kImagesMagic);
    write_be_u32(img, static_cast<std::uint32_t>(ds.size()));
    write_be_u32(img, static_cast<std::uint32_t>(img_rows));
    write_be_u32(img, static_cast<std::uint32_t>(img_cols));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double* row = ds.features.row(i);
        for (std::size_t p = 0; p < ds.features.cols(); ++p) {
            const double v = std::clamp(row[p], 0.0, 1.0);
            const unsigned char b = static_cast<unsigned char>(std::lround(v * 255.0));
            img.write(reinterpret_cast<const char*>(&b), 1);
        }
    }
    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("cannot open for writing: " + labels_path);
    write_be_u32(lab, kLabelsMagic);
    write_be_u32(lab, static_cast<std::uint32_t>(ds.size()));
    for (std::size_t l : ds.labels) {
        const unsigned char b = static_cast<unsigned char>(l);
        lab.write(reinterpret_cast<const char*>(&b), 1);
    }
}

Dataset make_blobs(const BlobSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    // Class centers: Gaussian directions normalized to the unit sphere.
    std::vector<std::vector<double>> centers(spec.n_classes,
                                             std::vector<double>(spec.dim));
    for (auto& c : centers) {
        double norm = 0.0;
        for (double& v : c) {
            v = rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        if (norm < 1e-12) norm = 1.0;
        for (double& v : c) v /= norm;
    }

    const std::size_t total = spec.n_classes * spec.samples_per_class;
    Dataset ds;
    ds.n_classes = spec.n_classes;
    ds.features = Matrix(total, spec.dim);
    ds.labels.resize(total);
    std::size_t idx = 0;
    for (std::size_t cls = 0; cls < spec.n_classes; ++cls) {
        for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++idx) {
            double* row = ds.features.row(idx);
            for (std::size_t d = 0; d < spec.dim; ++d) {
                double v = centers[cls][d] + spec.cluster_spread * rng.normal();
                row[d] = std::clamp(v, -1e6, 1e6);
            }
            ds.labels[idx] = cls;
        }
    }
    ds.validate();
    return ds;
}

Dataset subset(const Dataset& ds, std::size_t per_class, std::uint64_t seed) {
    ds.validate();
    std::vector<std::vector<std::size_t>> by_class(ds.n_classes);
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
    for (std::size_t c = 0; c < ds.n_classes; ++c)
        if (by_class[c].size() < per_class)
            throw ValidationError("subset: class " + std::to_string(c) + " has only " +
                                  std::to_string(by_class[c].size()) + " samples, need " +
                                  std::to_string(per_class));

    Rng rng(seed);
    std::vector<std::size_t> picked;
    picked.reserve(per_class * ds.n_classes);
    for (auto& idxs : by_class) {
        // Fisher-Yates prefix shuffle.
        for (std::size_t i = 0; i < per_class; ++i) {
            const std::size_t j = i + rng.below(idxs.size() - i);
            std::swap(idxs[i], idxs[j]);
            picked.push_back(idxs[i]);
        }
    }

    Dataset out;
    out.n_classes = ds.n_classes;
    out.features = Matrix(picked.size(), ds.features.cols());
    out.labels.resize(picked.size());
    for (std::size_t i = 0; i < picked.size(); ++i) {
        const double* src = ds.features.row(picked[i]);
        std::copy(src, src + ds.features.cols(), out.features.row(i));
        out.labels[i] = ds.labels[picked[i]];
    }
    return out;
}

}  // namespace chisq
