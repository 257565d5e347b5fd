#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "chisq/data.hpp"
#include "chisq/rng.hpp"

using namespace chisq;
namespace fs = std::filesystem;

namespace {

void write_be_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(b), 4);
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / "chisq_test_data";
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// Hand-built 2-image 3x3 fixture plus labels.
void write_fixture(const fs::path& images, const fs::path& labels,
                   std::uint32_t images_magic = 0x00000803) {
    std::ofstream img(images, std::ios::binary);
    write_be_u32(img, images_magic);
    write_be_u32(img, 2);
    write_be_u32(img, 3);
    write_be_u32(img, 3);
    for (int i = 0; i < 18; ++i) {
        const unsigned char b = static_cast<unsigned char>(i * 10);
        img.write(reinterpret_cast<const char*>(&b), 1);
    }
    std::ofstream lab(labels, std::ios::binary);
    write_be_u32(lab, 0x00000801);
    write_be_u32(lab, 2);
    const unsigned char l[2] = {7, 2};
    lab.write(reinterpret_cast<const char*>(l), 2);
}

}  // namespace

TEST_CASE("load_idx parses a hand-built fixture exactly") {
    TempDir tmp;
    const auto img = tmp.path / "imgs", lab = tmp.path / "labs";
    write_fixture(img, lab);
    const Dataset ds = load_idx(img.string(), lab.string());
    CHECK(ds.size() == 2);
    CHECK(ds.features.rows() == 2);
    CHECK(ds.features.cols() == 9);
    for (int i = 0; i < 18; ++i)
        CHECK(ds.features.raw()[i] == doctest::Approx(i * 10 / 255.0).epsilon(1e-15));
    CHECK(ds.labels[0] == 7);
    CHECK(ds.labels[1] == 2);
    CHECK(ds.n_classes == 8);
}

TEST_CASE("load_idx error paths") {
    TempDir tmp;
    const auto img = tmp.path / "imgs", lab = tmp.path / "labs";

    SUBCASE("labels magic passed as images magic") {
        write_fixture(img, lab, 0x00000801);
        CHECK_THROWS_WITH_AS(load_idx(img.string(), lab.string()),
                             doctest::Contains("0x00000803"), IoError);
    }
    SUBCASE("empty file") {
        std::ofstream(img).close();
        std::ofstream(lab).close();
        CHECK_THROWS_AS(load_idx(img.string(), lab.string()), IoError);
    }
    SUBCASE("truncated pixel data") {
        std::ofstream out(img, std::ios::binary);
        write_be_u32(out, 0x00000803);
        write_be_u32(out, 2);
        write_be_u32(out, 3);
        write_be_u32(out, 3);
        out.put('\0');  // far fewer than 18 pixels
        out.close();
        write_fixture(tmp.path / "other", lab);
        CHECK_THROWS_AS(load_idx(img.string(), lab.string()), IoError);
    }
    SUBCASE("count mismatch between images and labels") {
        write_fixture(img, lab);
        std::ofstream out(lab, std::ios::binary);
        write_be_u32(out, 0x00000801);
        write_be_u32(out, 3);
        out.write("\0\0\0", 3);
        out.close();
        CHECK_THROWS_AS(load_idx(img.string(), lab.string()), ValidationError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_idx((tmp.path / "nope").string(), lab.string()), IoError);
    }
}

TEST_CASE("IDX round trip: save then load preserves values") {
    TempDir tmp;
    Dataset ds;
    ds.n_classes = 4;
    ds.features = Matrix(6, 9);
    Rng rng(40);
    for (double& v : ds.features.raw())
        v = static_cast<double>(rng.below(256)) / 255.0;  // u8-exact values
    for (int i = 0; i < 6; ++i) ds.labels.push_back(i % 4);

    const auto img = tmp.path / "imgs", lab = tmp.path / "labs";
    save_idx(ds, 3, 3, img.string(), lab.string());
    const Dataset back = load_idx(img.string(), lab.string());
    CHECK(back.features == ds.features);
    CHECK(back.labels == ds.labels);
}

TEST_CASE("make_blobs") {
    SUBCASE("deterministic under a fixed spec") {
        BlobSpec spec;
        spec.seed = 5;
        const Dataset a = make_blobs(spec);
        const Dataset b = make_blobs(spec);
        CHECK(a.features == b.features);
        CHECK(a.labels == b.labels);
    }
    SUBCASE("near-zero spread collapses classes onto their centers") {
        BlobSpec spec;
        spec.n_classes = 3;
        spec.dim = 4;
        spec.samples_per_class = 20;
        spec.cluster_spread = 1e-9;
        spec.seed = 6;
        const Dataset ds = make_blobs(spec);
        for (std::size_t c = 0; c < 3; ++c) {
            const double* first = ds.features.row(c * 20);
            for (std::size_t s = 1; s < 20; ++s) {
                const double* row = ds.features.row(c * 20 + s);
                for (std::size_t d = 0; d < 4; ++d)
                    CHECK(std::abs(row[d] - first[d]) < 1e-6);
            }
        }
    }
    SUBCASE("spread 0.1 blobs are nearest-center separable above 99%") {
        BlobSpec spec;
        spec.n_classes = 10;
        spec.dim = 16;
        spec.samples_per_class = 100;
        spec.cluster_spread = 0.1;
        spec.seed = 7;
        const Dataset ds = make_blobs(spec);
        // Centers recovered as class means (independent of the generator's
        // internal center draw).
        std::vector<std::vector<double>> centers(10, std::vector<double>(16, 0.0));
        for (std::size_t i = 0; i < ds.size(); ++i)
            for (std::size_t d = 0; d < 16; ++d)
                centers[ds.labels[i]][d] += ds.features(i, d) / 100.0;
        std::size_t correct = 0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            double best = 1e300;
            std::size_t best_c = 0;
            for (std::size_t c = 0; c < 10; ++c) {
                double d2 = 0.0;
                for (std::size_t d = 0; d < 16; ++d) {
                    const double diff = ds.features(i, d) - centers[c][d];
                    d2 += diff * diff;
                }
                if (d2 < best) {
                    best = d2;
                    best_c = c;
                }
            }
            if (best_c == ds.labels[i]) ++correct;
        }
        CHECK(static_cast<double>(correct) / ds.size() > 0.99);
    }
    SUBCASE("spec validation") {
        BlobSpec spec;
        spec.n_classes = 1;
        CHECK_THROWS_AS(make_blobs(spec), ConfigError);
        spec.n_classes = 2;
        spec.cluster_spread = 0.0;
        CHECK_THROWS_AS(make_blobs(spec), ConfigError);
    }
}

TEST_CASE("subset") {
    BlobSpec spec;
    spec.n_classes = 5;
    spec.dim = 3;
    spec.samples_per_class = 40;
    spec.seed = 8;
    const Dataset ds = make_blobs(spec);

    SUBCASE("exact class balance") {
        const Dataset s = subset(ds, 10, 1);
        CHECK(s.size() == 50);
        std::vector<std::size_t> hist(5, 0);
        for (std::size_t l : s.labels) ++hist[l];
        for (std::size_t h : hist) CHECK(h == 10);
    }
    SUBCASE("full per-class count is a permutation of the original") {
        const Dataset s = subset(ds, 40, 2);
        CHECK(s.size() == ds.size());
        std::vector<std::size_t> hist(5, 0);
        for (std::size_t l : s.labels) ++hist[l];
        for (std::size_t h : hist) CHECK(h == 40);
        // Row multisets per class must match; compare sums as a cheap proxy.
        double sum_orig = 0.0, sum_sub = 0.0;
        for (double v : ds.features.raw()) sum_orig += v;
        for (double v : s.features.raw()) sum_sub += v;
        CHECK(sum_sub == doctest::Approx(sum_orig).epsilon(1e-9));
    }
    SUBCASE("different seeds give different picks, both balanced") {
        const Dataset a = subset(ds, 10, 3);
        const Dataset b = subset(ds, 10, 4);
        CHECK(a.features != b.features);
        std::vector<std::size_t> ha(5, 0), hb(5, 0);
        for (std::size_t l : a.labels) ++ha[l];
        for (std::size_t l : b.labels) ++hb[l];
        CHECK(ha == hb);
    }
    SUBCASE("insufficient samples rejected") {
        CHECK_THROWS_AS(subset(ds, 41, 1), ValidationError);
    }
    SUBCASE("deterministic") {
        const Dataset a = subset(ds, 10, 9);
        const Dataset b = subset(ds, 10, 9);
        CHECK(a.features == b.features);
        CHECK(a.labels == b.labels);
    }
}
