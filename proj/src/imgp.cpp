#include "isgp/imgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace isgp {

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

ImgpModel::ImgpModel(KernelSpec kernel, double rho, const std::set<LabelId> &initial_classes)
    : kernel_(std::move(kernel)), rho_(rho), known_classes_(initial_classes) {
    if (!(rho >= 0.0) || !std::isfinite(rho)) {
        throw std::invalid_argument("imgp: rho must be non-negative and finite");
    }
    if (initial_classes.empty()) {
        throw std::invalid_argument("imgp: at least one initial class is required");
    }
    validate(kernel_);
}

ImgpModel new_model(KernelSpec kernel, double rho, const std::set<LabelId> &initial_classes) {
    return ImgpModel(std::move(kernel), rho, initial_classes);
}

Posterior ImgpModel::posterior(const FeatureVector &x) const {
    if (!instances_.empty() && x.size() != dim()) {
        throw std::invalid_argument("imgp: query dimension " + std::to_string(x.size()) + " != model dimension " +
                                    std::to_string(dim()));
    }
    const double prior_var = eval_kernel(kernel_, x, x);
    Posterior out;
    for (auto label : known_classes_) {
        out.means.emplace(label, 0.0);
    }
    if (instances_.empty()) {
        out.sigma = std::sqrt(prior_var + rho_ * rho_);
        return out;
    }

    const Eigen::VectorXd k = gram_vector(kernel_, instances_, x);
    const Eigen::VectorXd w = precision() * k;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        out.means[labels_[i]] += w[static_cast<Eigen::Index>(i)];
    }

    double reduced = prior_var - k.dot(w);
    if (reduced < 0.0) {
        if (reduced < -kVarianceTolerance * std::max(1.0, prior_var)) {
            throw NumericError("imgp: negative posterior variance " + std::to_string(reduced) +
                               " (corrupted precision matrix)");
        }
        reduced = 0.0;
    }
    out.sigma = std::sqrt(reduced + rho_ * rho_);
    return out;
}

void ImgpModel::reserve(Eigen::Index capacity) {
    if (capacity <= storage_.rows()) {
        return;
    }
    const auto n = static_cast<Eigen::Index>(instances_.size());
    Eigen::MatrixXd grown(capacity, capacity);
    grown.topLeftCorner(n, n) = storage_.topLeftCorner(n, n);
    storage_.swap(grown);
}

void ImgpModel::add_example(const FeatureVector &x, LabelId label) {
    if (!instances_.empty() && x.size() != dim()) {
        throw std::invalid_argument("imgp: example dimension " + std::to_string(x.size()) + " != model dimension " +
                                    std::to_string(dim()));
    }
    const auto t = static_cast<Eigen::Index>(instances_.size());
    const double c = eval_kernel(kernel_, x, x) + rho_ * rho_;

    Eigen::VectorXd u;
    double s = c;
    if (t > 0) {
        const Eigen::VectorXd b = gram_vector(kernel_, instances_, x);
        u.noalias() = precision() * b;
        s = c - b.dot(u);
    }
    if (!(s > 0.0) || s < kSchurFloor * c || !std::isfinite(s)) {
        throw NumericError("imgp: unstable update, Schur complement " + std::to_string(s) + " for diagonal " +
                           std::to_string(c) + " (near-duplicate point?)");
    }

    // Allocation happens before any state change.
    if (t + 1 > storage_.rows()) {
        reserve(std::max<Eigen::Index>(16, 2 * storage_.rows()));
    }
    instances_.reserve(instances_.size() + 1);
    labels_.reserve(labels_.size() + 1);

    const double inv_s = 1.0 / s;
    // G += u u^T / s, with (u_i * u_j) formed first so both triangles get identical bits.
    const double *ud = u.data();
    for (Eigen::Index j = 0; j < t; ++j) {
        double *col = &storage_(0, j);
        const double uj = ud[j];
        for (Eigen::Index i = 0; i < t; ++i) {
            col[i] += (ud[i] * uj) * inv_s;
        }
    }
    for (Eigen::Index i = 0; i < t; ++i) {
        const double v = -u[i] * inv_s;
        storage_(i, t) = v;
        storage_(t, i) = v;
    }
    storage_(t, t) = inv_s;

    instances_.push_back(x);
    labels_.push_back(label);
    known_classes_.insert(label);
}

Eigen::VectorXd ImgpModel::label_vector(LabelId label) const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(labels_.size()));
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        y[static_cast<Eigen::Index>(i)] = labels_[i] == label ? 1.0 : 0.0;
    }
    return y;
}

double prob_positive(const Posterior &p, LabelId label) {
    auto it = p.means.find(label);
    if (it == p.means.end()) {
        throw std::invalid_argument("prob_positive: unknown label " + std::to_string(label.value));
    }
    if (!(p.sigma > 0.0)) {
        throw std::invalid_argument("prob_positive: posterior standard deviation is zero");
    }
    return normal_cdf(it->second / p.sigma);
}

std::map<LabelId, double> class_posterior(const Posterior &p) {
    if (p.means.empty()) {
        throw std::invalid_argument("class_posterior: posterior has no classes");
    }
    std::map<LabelId, double> out;
    double z = 0.0;
    for (const auto &[label, mean] : p.means) {
        // prob_positive lies in [0, 1], so exp() cannot overflow.
        const double e = std::exp(prob_positive(p, label));
        out.emplace(label, e);
        z += e;
    }
    for (auto &[label, v] : out) {
        v /= z;
    }
    return out;
}

LabelId argmax_label(const Posterior &p) {
    if (p.means.empty()) {
        throw std::invalid_argument("argmax_label: posterior has no classes");
    }
    // std::map iterates in ascending LabelId, so strict '>' keeps the lowest id on ties.
    auto best = p.means.begin();
    for (auto it = std::next(best); it != p.means.end(); ++it) {
        if (it->second > best->second) {
            best = it;
        }
    }
    return best->first;
}

std::pair<LabelId, Posterior> predict(const ImgpModel &model, const FeatureVector &x) {
    Posterior p = model.posterior(x);
    const LabelId label = argmax_label(p);
    return {label, std::move(p)};
}

void to_json(nlohmann::json &j, const ImgpModel &model) {
    const auto n = static_cast<Eigen::Index>(model.size());
    nlohmann::json instances = nlohmann::json::array();
    for (const auto &x : model.instances_) {
        instances.push_back(std::vector<double>(x.data(), x.data() + x.size()));
    }
    nlohmann::json labels = nlohmann::json::array();
    for (auto l : model.labels_) {
        labels.push_back(l.value);
    }
    nlohmann::json classes = nlohmann::json::array();
    for (auto l : model.known_classes_) {
        classes.push_back(l.value);
    }
    nlohmann::json precision = nlohmann::json::array();
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> row(static_cast<std::size_t>(n));
        for (Eigen::Index k = 0; k < n; ++k) {
            row[static_cast<std::size_t>(k)] = model.storage_(i, k);
        }
        precision.push_back(std::move(row));
    }
    j = {{"format", "isgp-imgp-snapshot"},
         {"version", kSnapshotVersion},
         {"kernel", model.kernel_},
         {"rho", model.rho_},
         {"known_classes", std::move(classes)},
         {"instances", std::move(instances)},
         {"labels", std::move(labels)},
         {"precision", std::move(precision)}};
}

ImgpModel model_from_json(const nlohmann::json &j) {
    if (j.value("format", "") != "isgp-imgp-snapshot") {
        throw std::invalid_argument("snapshot: not an isgp-imgp-snapshot document");
    }
    if (j.at("version").get<int>() != kSnapshotVersion) {
        throw std::invalid_argument("snapshot: unsupported version " + j.at("version").dump());
    }
    std::set<LabelId> classes;
    for (const auto &c : j.at("known_classes")) {
        classes.insert(LabelId(c.get<std::uint32_t>()));
    }
    ImgpModel model(j.at("kernel").get<KernelSpec>(), j.at("rho").get<double>(), classes);

    const auto &instances = j.at("instances");
    const auto &labels = j.at("labels");
    const auto &precision = j.at("precision");
    const std::size_t n = instances.size();
    if (labels.size() != n || precision.size() != n) {
        throw std::invalid_argument("snapshot: instance, label and precision sizes disagree");
    }
    const auto ni = static_cast<Eigen::Index>(n);
    model.reserve(std::max<Eigen::Index>(16, ni));
    for (std::size_t i = 0; i < n; ++i) {
        const auto values = instances[i].get<std::vector<double>>();
        FeatureVector x = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
        if (i > 0 && x.size() != model.instances_.front().size()) {
            throw std::invalid_argument("snapshot: inconsistent instance dimensions");
        }
        const LabelId label(labels[i].get<std::uint32_t>());
        if (!classes.contains(label)) {
            throw std::invalid_argument("snapshot: instance label missing from known classes");
        }
        model.instances_.push_back(std::move(x));
        model.labels_.push_back(label);
        const auto row = precision[i].get<std::vector<double>>();
        if (row.size() != n) {
            throw std::invalid_argument("snapshot: precision matrix is not square");
        }
        for (std::size_t k = 0; k < n; ++k) {
            model.storage_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
        }
    }
    return model;
}

} // namespace isgp
