#include "memsim/dataset.hpp"

#include <algorithm>

#include "memsim/errors.hpp"
#include "memsim/random.hpp"

namespace memsim {

namespace {

Dataset draw(const RealMatrix& centers, const BlobSpec& spec, std::size_t count, RandomStream& rng) {
    Dataset d;
    d.num_classes = spec.classes;
    d.features = RealMatrix(count, spec.dim);
    d.labels.resize(count);
    const auto clusters = static_cast<std::uint64_t>(centers.rows());
    for (std::size_t n = 0; n < count; ++n) {
        const auto cluster = static_cast<std::size_t>(rng.next_u64() % clusters);
        d.labels[n] = static_cast<int>(cluster) % spec.classes;
        for (std::size_t k = 0; k < spec.dim; ++k) {
            d.features(n, k) = rng.normal(centers(cluster, k), spec.cluster_std);
        }
    }
    return d;
}

} // namespace

TaskData make_blobs(const BlobSpec& spec) {
    if (spec.dim == 0 || spec.classes < 2 || spec.clusters_per_class < 1) {
        throw PreconditionError("blob task needs dim >= 1, classes >= 2, clusters_per_class >= 1");
    }
    if (spec.train_size == 0 || spec.test_size == 0) throw PreconditionError("blob task needs non-empty splits");
    if (!(spec.cluster_std > 0.0) || !(spec.center_std > 0.0)) throw PreconditionError("blob spreads must be positive");

    RandomStream root(spec.seed);
    RandomStream center_rng = root.child(0);
    // cluster m belongs to class m % classes
    const std::size_t cluster_count = static_cast<std::size_t>(spec.classes * spec.clusters_per_class);
    RealMatrix centers(cluster_count, spec.dim);
    for (double& c : centers.data()) c = center_rng.normal(0.0, spec.center_std);

    RandomStream train_rng = root.child(1);
    RandomStream test_rng = root.child(2);
    return {draw(centers, spec, spec.train_size, train_rng), draw(centers, spec, spec.test_size, test_rng)};
}

RealMatrix slice_rows(const RealMatrix& m, std::size_t begin, std::size_t count) {
    if (begin + count > m.rows()) throw ShapeError("row slice out of range");
    RealMatrix out(count, m.cols());
    for (std::size_t r = 0; r < count; ++r) {
        std::copy(m.row(begin + r).begin(), m.row(begin + r).end(), out.row(r).begin());
    }
    return out;
}

} // namespace memsim
