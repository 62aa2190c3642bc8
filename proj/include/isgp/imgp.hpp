#ifndef ISGP_IMGP_HPP
#define ISGP_IMGP_HPP

#include <map>
#include <set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "isgp/kernels.hpp"
#include "isgp/types.hpp"

namespace isgp {

// Per-class posterior means and the shared posterior standard deviation at one point.
struct Posterior {
    std::map<LabelId, double> means;
    double sigma = 0.0;
};

// Standard normal cdf.
[[nodiscard]] double normal_cdf(double z);

// Incremental multi-class GP: one one-vs-all GP per known class, all sharing
// the precision matrix (K + rho^2 I)^-1 over the stored instances.
//
// Adding an example costs O(t^2): the precision matrix grows by a bordered
// block update through the Schur complement of the new diagonal entry, and
// no matrix is ever inverted. The stored matrix is kept bitwise symmetric.
class ImgpModel {
public:
    // Relative Schur-complement floor below which add_example refuses the update.
    static constexpr double kSchurFloor = 1e-12;
    // Negative reduced variance tolerated (relative to k(x,x)) before reporting corruption.
    static constexpr double kVarianceTolerance = 1e-9;

    ImgpModel(KernelSpec kernel, double rho, const std::set<LabelId> &initial_classes);

    [[nodiscard]] Posterior posterior(const FeatureVector &x) const;

    // Strong guarantee: on error the model is unchanged.
    void add_example(const FeatureVector &x, LabelId label);

    [[nodiscard]] std::size_t size() const { return instances_.size(); }
    [[nodiscard]] Eigen::Index dim() const { return instances_.empty() ? 0 : instances_.front().size(); }
    [[nodiscard]] const std::vector<FeatureVector> &instances() const { return instances_; }
    [[nodiscard]] const std::vector<LabelId> &instance_labels() const { return labels_; }
    [[nodiscard]] const std::set<LabelId> &known_classes() const { return known_classes_; }
    [[nodiscard]] const KernelSpec &kernel() const { return kernel_; }
    [[nodiscard]] double rho() const { return rho_; }

    [[nodiscard]] auto precision() const {
        const auto n = static_cast<Eigen::Index>(instances_.size());
        return storage_.topLeftCorner(n, n);
    }

    // One-vs-all encoding: entry i is 1 iff instance i carries `label`.
    [[nodiscard]] Eigen::VectorXd label_vector(LabelId label) const;

    friend void to_json(nlohmann::json &j, const ImgpModel &model);
    friend ImgpModel model_from_json(const nlohmann::json &j);

private:
    void reserve(Eigen::Index capacity);

    KernelSpec kernel_;
    double rho_;
    std::vector<FeatureVector> instances_;
    std::vector<LabelId> labels_;
    std::set<LabelId> known_classes_;
    // Capacity-managed buffer; only the leading size() x size() block is live.
    Eigen::MatrixXd storage_;
};

// Throws std::invalid_argument on negative rho or an empty class set.
[[nodiscard]] ImgpModel new_model(KernelSpec kernel, double rho, const std::set<LabelId> &initial_classes);

// Phi(mean / sigma) for one class.
[[nodiscard]] double prob_positive(const Posterior &p, LabelId label);

// Soft-max over prob_positive of every class.
[[nodiscard]] std::map<LabelId, double> class_posterior(const Posterior &p);

// Argmax of the posterior means; ties go to the lowest LabelId.
[[nodiscard]] LabelId argmax_label(const Posterior &p);

[[nodiscard]] std::pair<LabelId, Posterior> predict(const ImgpModel &model, const FeatureVector &x);

// Versioned text snapshot. Doubles round-trip exactly.
inline constexpr int kSnapshotVersion = 1;
void to_json(nlohmann::json &j, const ImgpModel &model);
[[nodiscard]] ImgpModel model_from_json(const nlohmann::json &j);

} // namespace isgp

#endif // ISGP_IMGP_HPP
