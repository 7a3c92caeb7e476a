#include "gredp/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "gredp/rng.hpp"

namespace gredp {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "0x%08x", v);
    return buf;
}

std::uint32_t read_be32(std::ifstream& in, const std::string& path, std::size_t offset) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
        throw std::runtime_error(path + ": truncated at byte offset " + std::to_string(offset));
    }
    return (std::uint32_t(bytes[0]) << 24) | (std::uint32_t(bytes[1]) << 16) |
           (std::uint32_t(bytes[2]) << 8) | std::uint32_t(bytes[3]);
}

}  // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images) throw std::runtime_error("cannot open images file: " + images_path);
    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) throw std::runtime_error("cannot open labels file: " + labels_path);

    const std::uint32_t img_magic = read_be32(images, images_path, 0);
    if (img_magic != kImagesMagic) {
        throw std::runtime_error(images_path + ": bad magic " + hex32(img_magic) + " at byte offset 0 (expected " +
                                 hex32(kImagesMagic) + ")");
    }
    const std::uint32_t count = read_be32(images, images_path, 4);
    const std::uint32_t rows = read_be32(images, images_path, 8);
    const std::uint32_t cols = read_be32(images, images_path, 12);

    const std::uint32_t lab_magic = read_be32(labels, labels_path, 0);
    if (lab_magic != kLabelsMagic) {
        throw std::runtime_error(labels_path + ": bad magic " + hex32(lab_magic) + " at byte offset 0 (expected " +
                                 hex32(kLabelsMagic) + ")");
    }
    const std::uint32_t label_count = read_be32(labels, labels_path, 4);
    if (label_count != count) {
        throw std::runtime_error("image/label count mismatch: " + std::to_string(count) + " images in " +
                                 images_path + " vs " + std::to_string(label_count) + " labels in " + labels_path);
    }

    Dataset ds;
    ds.inputs.reserve(count);
    ds.labels.reserve(count);
    const std::size_t pixels = std::size_t(rows) * cols;
    std::vector<unsigned char> buf(pixels);
    for (std::uint32_t i = 0; i < count; ++i) {
        if (!images.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels))) {
            throw std::runtime_error(images_path + ": truncated at byte offset " +
                                     std::to_string(16 + std::size_t(i) * pixels));
        }
        Tensor3 img(1, rows, cols);
        for (std::size_t p = 0; p < pixels; ++p) img.data[p] = buf[p] / 255.0;
        ds.inputs.push_back(std::move(img));

        char lab = 0;
        if (!labels.read(&lab, 1)) {
            throw std::runtime_error(labels_path + ": truncated at byte offset " + std::to_string(8 + i));
        }
        ds.labels.push_back(static_cast<unsigned char>(lab));
    }
    ds.classes = 10;
    return ds;
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
    if (spec.classes == 0) throw std::invalid_argument("gen_synthetic: classes must be >= 1");
    if (spec.count < spec.classes) {
        throw std::invalid_argument("gen_synthetic: count " + std::to_string(spec.count) +
                                    " is below the class count " + std::to_string(spec.classes));
    }
    if (spec.dims < spec.classes) {
        throw std::invalid_argument("gen_synthetic: dims must be >= classes for axis-aligned blobs");
    }
    RngState rng(spec.seed);
    Dataset ds;
    ds.classes = spec.classes;
    ds.inputs.reserve(spec.count);
    ds.labels.reserve(spec.count);
    for (std::size_t i = 0; i < spec.count; ++i) {
        const std::size_t label = i % spec.classes;
        Tensor3 x(spec.dims, 1, 1);
        for (std::size_t d = 0; d < spec.dims; ++d) {
            const double g = std::clamp(rng.gaussian(), -3.0, 3.0);
            x.data[d] = spec.spread * g + (d == label ? spec.separation : 0.0);
        }
        ds.inputs.push_back(std::move(x));
        ds.labels.push_back(label);
    }
    // Deterministic shuffle so class labels are interleaved.
    std::vector<std::size_t> order(spec.count);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    Dataset shuffled;
    shuffled.classes = ds.classes;
    for (std::size_t idx : order) {
        shuffled.inputs.push_back(std::move(ds.inputs[idx]));
        shuffled.labels.push_back(ds.labels[idx]);
    }
    return shuffled;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& full, std::size_t train_count) {
    if (train_count > full.size()) throw std::invalid_argument("split_dataset: train_count exceeds dataset size");
    Dataset train, val;
    train.classes = val.classes = full.classes;
    for (std::size_t i = 0; i < full.size(); ++i) {
        auto& dst = i < train_count ? train : val;
        dst.inputs.push_back(full.inputs[i]);
        dst.labels.push_back(full.labels[i]);
    }
    return {std::move(train), std::move(val)};
}

Dataset take_prefix(const Dataset& full, std::size_t n) {
    if (n == 0 || n >= full.size()) return full;
    Dataset out;
    out.classes = full.classes;
    out.inputs.assign(full.inputs.begin(), full.inputs.begin() + static_cast<std::ptrdiff_t>(n));
    out.labels.assign(full.labels.begin(), full.labels.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
}

}  // namespace gredp
