#ifndef GREDP_DATASET_HPP
#define GREDP_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gredp/layers.hpp"

namespace gredp {

struct Dataset {
    std::vector<Tensor3> inputs;
    std::vector<std::size_t> labels;
    std::size_t classes = 0;

    std::size_t size() const { return inputs.size(); }
};

// Big-endian IDX ingestion (magic 0x00000803 for images, 0x00000801 for
// labels). Pixels are scaled to [0, 1]. Malformed files are rejected with
// the byte offset of the problem.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// Axis-aligned Gaussian class blobs, linearly separable with margin >= 1:
// class k is centered at separation * e_k and draws are clamped to three
// standard deviations. Requires dims >= classes and count >= classes.
struct SyntheticSpec {
    std::size_t dims = 8;
    std::size_t classes = 2;
    std::size_t count = 200;
    std::uint64_t seed = 0;
    double separation = 6.0;
    double spread = 0.5;
};

Dataset gen_synthetic(const SyntheticSpec& spec);

// Deterministic front/back split helper for train/validation sets.
std::pair<Dataset, Dataset> split_dataset(const Dataset& full, std::size_t train_count);

// First n samples (n = 0 means everything).
Dataset take_prefix(const Dataset& full, std::size_t n);

}  // namespace gredp

#endif  // GREDP_DATASET_HPP
