#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chisq/matrix.hpp"

namespace chisq {

struct Dataset {
    Matrix features;                   // samples x dims, values in [0,1] for images
    std::vector<std::size_t> labels;   // class indices, aligned with feature rows
    std::size_t n_classes = 0;

    std::size_t size() const { return labels.size(); }
    void validate() const;
};

struct BlobSpec {
    std::size_t n_classes = 10;
    std::size_t dim = 16;
    std::size_t samples_per_class = 100;
    double cluster_spread = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

// Parses big-endian IDX pairs: images magic 0x00000803 (u8, count x rows x
// cols, scaled by 1/255) and labels magic 0x00000801 (u8).
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Writes a dataset back to the same IDX layout (features are rounded to u8
// via value*255). Used for fixtures and the synthetic-to-IDX path.
void save_idx(const Dataset& ds, std::size_t img_rows, std::size_t img_cols,
              const std::string& images_path, const std::string& labels_path);

// Gaussian blobs around class centers drawn uniformly on the unit sphere.
Dataset make_blobs(const BlobSpec& spec);

// Deterministic stratified sample with exactly per_class samples per class.
Dataset subset(const Dataset& ds, std::size_t per_class, std::uint64_t seed);

}  // namespace chisq
