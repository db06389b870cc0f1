#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "memsim/matrix.hpp"

namespace memsim {

struct Dataset {
    RealMatrix features;  ///< samples x dim
    std::vector<int> labels;
    int num_classes = 0;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const noexcept { return features.cols(); }
};

/**
 * Synthetic classification task: every class is a mixture of isotropic
 * Gaussian clusters whose centers are drawn once from N(0, center_std^2).
 * The ratio center_std / cluster_std controls the class margin.
 */
struct BlobSpec {
    std::size_t dim = 8;
    int classes = 4;
    int clusters_per_class = 3;
    double center_std = 1.6;
    double cluster_std = 1.0;
    std::size_t train_size = 5000;
    std::size_t test_size = 20000;
    std::uint64_t seed = 1234;

    bool operator==(const BlobSpec&) const = default;
};

struct TaskData {
    Dataset train;
    Dataset test;
};

TaskData make_blobs(const BlobSpec& spec);

/// Rows [begin, begin + count) of a dataset's features.
RealMatrix slice_rows(const RealMatrix& m, std::size_t begin, std::size_t count);

} // namespace memsim
