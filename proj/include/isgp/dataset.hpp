#ifndef ISGP_DATASET_HPP
#define ISGP_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isgp/types.hpp"

namespace isgp {

struct Dataset {
    std::vector<FeatureVector> features;
    std::vector<LabelId> labels;
    LabelVocabulary vocabulary;
    std::vector<std::string> feature_names;
    // Per-column z-score parameters applied at load time (empty for synthetic data).
    std::vector<double> feature_means;
    std::vector<double> feature_stds;

    [[nodiscard]] std::size_t size() const { return features.size(); }
    [[nodiscard]] std::vector<LabelId> classes() const;
};

// Gaussian blobs, one per class, with centers evenly spaced on a circle in the
// first two coordinates. Instance i belongs to class i mod n_classes.
struct SyntheticSpec {
    std::size_t n_classes = 6;
    std::size_t n_instances = 100;
    std::size_t dim = 2;
    double class_std = 1.5;
    double center_radius = 6.0;
    std::uint64_t seed = 0;
};

void validate(const SyntheticSpec &spec);
[[nodiscard]] Dataset generate_synthetic(const SyntheticSpec &spec);
[[nodiscard]] std::vector<FeatureVector> class_centers(const SyntheticSpec &spec);

struct CsvSource {
    std::filesystem::path path;
    std::string label_column = "label";
};

// Numeric feature columns are z-scored (a constant column maps to zeros);
// labels get ids in order of first appearance.
[[nodiscard]] Dataset load_csv(const CsvSource &source);
[[nodiscard]] Dataset parse_csv(std::istream &in, std::string_view label_column);

void write_csv(std::ostream &out, const Dataset &data);

enum class Ordering { RandomShuffle, SequentialClusters };

[[nodiscard]] std::string_view to_string(Ordering ordering);
[[nodiscard]] Ordering parse_ordering(std::string_view name);

// Orders a subset of the dataset. SequentialClusters emits whole class blocks
// in ascending class id, shuffled within each block.
[[nodiscard]] std::vector<std::size_t> order_instances(const Dataset &data, std::span<const std::size_t> indices,
                                                       Ordering ordering, std::uint64_t seed);
[[nodiscard]] std::vector<std::size_t> order_instances(const Dataset &data, Ordering ordering, std::uint64_t seed);

struct Fold {
    std::vector<std::size_t> train; // in presentation order
    std::vector<std::size_t> test;
};

// Stratified k-fold split. Falls back to a plain shuffled split (with a warning)
// when some class has fewer than k members.
[[nodiscard]] std::vector<Fold> make_folds(const Dataset &data, std::size_t k, std::uint64_t seed,
                                           Ordering ordering = Ordering::RandomShuffle);

// Unweighted mean of per-class F1 over `class_set`.
[[nodiscard]] double macro_f1(std::span<const LabelId> predictions, std::span<const LabelId> truths,
                              std::span<const LabelId> class_set);

} // namespace isgp

#endif // ISGP_DATASET_HPP
