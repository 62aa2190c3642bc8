#include "isgp/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace isgp {

std::vector<LabelId> Dataset::classes() const {
    std::vector<LabelId> out(labels.begin(), labels.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void validate(const SyntheticSpec &spec) {
    if (spec.n_classes < 2) {
        throw std::invalid_argument("synthetic: at least two classes are required");
    }
    if (spec.n_instances < spec.n_classes) {
        throw std::invalid_argument("synthetic: fewer instances than classes");
    }
    if (spec.dim < 1) {
        throw std::invalid_argument("synthetic: dimension must be positive");
    }
    if (!(spec.class_std >= 0.0) || !std::isfinite(spec.class_std)) {
        throw std::invalid_argument("synthetic: class_std must be non-negative");
    }
    if (!(spec.center_radius >= 0.0) || !std::isfinite(spec.center_radius)) {
        throw std::invalid_argument("synthetic: center_radius must be non-negative");
    }
}

std::vector<FeatureVector> class_centers(const SyntheticSpec &spec) {
    std::vector<FeatureVector> centers;
    const auto dim = static_cast<Eigen::Index>(spec.dim);
    for (std::size_t c = 0; c < spec.n_classes; ++c) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(spec.n_classes);
        FeatureVector center = FeatureVector::Zero(dim);
        center[0] = spec.center_radius * std::cos(angle);
        if (dim > 1) {
            center[1] = spec.center_radius * std::sin(angle);
        }
        centers.push_back(std::move(center));
    }
    return centers;
}

Dataset generate_synthetic(const SyntheticSpec &spec) {
    validate(spec);
    Dataset out;
    for (std::size_t c = 0; c < spec.n_classes; ++c) {
        out.vocabulary.add("class" + std::to_string(c));
    }
    for (std::size_t d = 0; d < spec.dim; ++d) {
        out.feature_names.push_back("x" + std::to_string(d));
    }
    const auto centers = class_centers(spec);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < spec.n_instances; ++i) {
        const std::size_t c = i % spec.n_classes;
        FeatureVector x = centers[c];
        if (spec.class_std > 0.0) {
            for (Eigen::Index d = 0; d < x.size(); ++d) {
                x[d] += spec.class_std * normal(rng);
            }
        }
        out.features.push_back(std::move(x));
        out.labels.emplace_back(static_cast<std::uint32_t>(c));
    }
    return out;
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_row(const std::string &line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        cells.push_back(trim(cell));
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

} // namespace

Dataset parse_csv(std::istream &in, std::string_view label_column) {
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) {
            header = split_row(line);
            break;
        }
    }
    if (header.empty()) {
        throw std::invalid_argument("csv: empty file");
    }
    const auto label_it = std::find(header.begin(), header.end(), label_column);
    if (label_it == header.end()) {
        throw std::invalid_argument("csv: missing label column '" + std::string(label_column) + "'");
    }
    const auto label_idx = static_cast<std::size_t>(label_it - header.begin());

    Dataset out;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != label_idx) {
            out.feature_names.push_back(header[c]);
        }
    }
    const auto dim = static_cast<Eigen::Index>(out.feature_names.size());
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_row(line);
        if (cells.size() != header.size()) {
            throw std::invalid_argument("csv: row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                                        " cells, expected " + std::to_string(header.size()));
        }
        FeatureVector x(dim);
        Eigen::Index d = 0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == label_idx) {
                continue;
            }
            const auto &cell = cells[c];
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
                throw std::invalid_argument("csv: non-numeric feature '" + cell + "' at row " + std::to_string(row_no) +
                                            ", column '" + header[c] + "'");
            }
            x[d++] = v;
        }
        if (cells[label_idx].empty()) {
            throw std::invalid_argument("csv: empty label at row " + std::to_string(row_no));
        }
        out.labels.push_back(out.vocabulary.add(cells[label_idx]));
        out.features.push_back(std::move(x));
    }
    if (out.features.empty()) {
        throw std::invalid_argument("csv: no data rows");
    }

    const auto n = static_cast<double>(out.features.size());
    for (Eigen::Index d = 0; d < dim; ++d) {
        double mean = 0.0;
        for (const auto &x : out.features) {
            mean += x[d];
        }
        mean /= n;
        double var = 0.0;
        for (const auto &x : out.features) {
            var += (x[d] - mean) * (x[d] - mean);
        }
        double sd = std::sqrt(var / n);
        if (!(sd > 0.0)) {
            sd = 1.0;
        }
        for (auto &x : out.features) {
            x[d] = (x[d] - mean) / sd;
        }
        out.feature_means.push_back(mean);
        out.feature_stds.push_back(sd);
    }
    return out;
}

Dataset load_csv(const CsvSource &source) {
    std::ifstream in(source.path);
    if (!in) {
        throw std::invalid_argument("csv: cannot open " + source.path.string());
    }
    return parse_csv(in, source.label_column);
}

void write_csv(std::ostream &out, const Dataset &data) {
    for (const auto &name : data.feature_names) {
        out << name << ',';
    }
    out << "label\n";
    char buf[64];
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (Eigen::Index d = 0; d < data.features[i].size(); ++d) {
            const auto res = std::to_chars(buf, buf + sizeof(buf), data.features[i][d]);
            out.write(buf, res.ptr - buf);
            out << ',';
        }
        out << data.vocabulary.name(data.labels[i]) << '\n';
    }
}

std::string_view to_string(Ordering ordering) {
    return ordering == Ordering::RandomShuffle ? "random" : "sequential";
}

Ordering parse_ordering(std::string_view name) {
    if (name == "random" || name == "shuffle" || name == "random_shuffle") {
        return Ordering::RandomShuffle;
    }
    if (name == "sequential" || name == "sequential_clusters") {
        return Ordering::SequentialClusters;
    }
    throw std::invalid_argument("unknown ordering '" + std::string(name) + "'");
}

std::vector<std::size_t> order_instances(const Dataset &data, std::span<const std::size_t> indices, Ordering ordering,
                                         std::uint64_t seed) {
    if (indices.empty()) {
        throw std::invalid_argument("order_instances: empty dataset");
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> out(indices.begin(), indices.end());
    if (ordering == Ordering::RandomShuffle) {
        std::shuffle(out.begin(), out.end(), rng);
        return out;
    }
    std::map<LabelId, std::vector<std::size_t>> blocks;
    for (auto i : indices) {
        blocks[data.labels.at(i)].push_back(i);
    }
    out.clear();
    for (auto &[label, block] : blocks) {
        std::shuffle(block.begin(), block.end(), rng);
        out.insert(out.end(), block.begin(), block.end());
    }
    return out;
}

std::vector<std::size_t> order_instances(const Dataset &data, Ordering ordering, std::uint64_t seed) {
    std::vector<std::size_t> all(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i] = i;
    }
    return order_instances(data, all, ordering, seed);
}

std::vector<Fold> make_folds(const Dataset &data, std::size_t k, std::uint64_t seed, Ordering ordering) {
    if (k < 2 || k > data.size()) {
        throw std::invalid_argument("make_folds: need 2 <= k <= dataset size");
    }
    std::mt19937_64 rng(seed);
    std::map<LabelId, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < data.size(); ++i) {
        by_class[data.labels[i]].push_back(i);
    }
    const bool stratify = std::all_of(by_class.begin(), by_class.end(),
                                      [k](const auto &entry) { return entry.second.size() >= k; });

    // Class blocks laid end to end and dealt round-robin keep every class within
    // one member of its proportional share in each fold.
    std::vector<std::size_t> dealing;
    if (stratify) {
        for (auto &[label, members] : by_class) {
            std::shuffle(members.begin(), members.end(), rng);
            dealing.insert(dealing.end(), members.begin(), members.end());
        }
    } else {
        std::clog << "warning: a class has fewer than " << k << " members; using an unstratified split\n";
        dealing.resize(data.size());
        for (std::size_t i = 0; i < dealing.size(); ++i) {
            dealing[i] = i;
        }
        std::shuffle(dealing.begin(), dealing.end(), rng);
    }

    std::vector<std::vector<std::size_t>> tests(k);
    for (std::size_t p = 0; p < dealing.size(); ++p) {
        tests[p % k].push_back(dealing[p]);
    }

    std::vector<Fold> folds;
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::size_t> train;
        for (std::size_t g = 0; g < k; ++g) {
            if (g != f) {
                train.insert(train.end(), tests[g].begin(), tests[g].end());
            }
        }
        std::sort(train.begin(), train.end());
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(f), 0x6f72u};
        std::uint64_t order_seed = 0;
        {
            std::mt19937_64 derive(seq);
            order_seed = derive();
        }
        Fold fold;
        fold.train = order_instances(data, train, ordering, order_seed);
        fold.test = tests[f];
        std::sort(fold.test.begin(), fold.test.end());
        folds.push_back(std::move(fold));
    }
    return folds;
}

double macro_f1(std::span<const LabelId> predictions, std::span<const LabelId> truths,
                std::span<const LabelId> class_set) {
    if (predictions.size() != truths.size() || predictions.empty()) {
        throw std::invalid_argument("macro_f1: predictions and truths must be non-empty and of equal length");
    }
    if (class_set.empty()) {
        throw std::invalid_argument("macro_f1: empty class set");
    }
    double total = 0.0;
    for (auto label : class_set) {
        std::size_t tp = 0;
        std::size_t fp = 0;
        std::size_t fn = 0;
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            const bool p = predictions[i] == label;
            const bool t = truths[i] == label;
            tp += static_cast<std::size_t>(p && t);
            fp += static_cast<std::size_t>(p && !t);
            fn += static_cast<std::size_t>(!p && t);
        }
        const std::size_t denom = 2 * tp + fp + fn;
        total += denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    }
    return total / static_cast<double>(class_set.size());
}

} // namespace isgp
