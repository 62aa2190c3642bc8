#ifndef ISGP_KERNELS_HPP
#define ISGP_KERNELS_HPP

#include <span>
#include <variant>
#include <vector>

#include <json.hpp>

#include "isgp/types.hpp"

namespace isgp {

// k(x, x') = exp(-|x - x'|^2 / (2 l^2))
struct SquaredExponential {
    double length_scale = 1.0;
};

// k(x, x') = (1 + |x - x'|^2 / (2 alpha l^2))^(-alpha)
struct RationalQuadratic {
    double length_scale = 1.0;
    double alpha = 1.0;
};

struct Constant {
    double value = 1.0;
};

// Contributes `level` only when both arguments are bitwise identical.
struct WhiteNoise {
    double level = 1.0;
};

struct KernelSpec;

struct SumKernel {
    std::vector<KernelSpec> children;
};

struct KernelSpec {
    std::variant<SquaredExponential, RationalQuadratic, Constant, WhiteNoise, SumKernel> variant;

    KernelSpec() : variant(SquaredExponential{}) {}
    KernelSpec(SquaredExponential k) : variant(k) {}
    KernelSpec(RationalQuadratic k) : variant(k) {}
    KernelSpec(Constant k) : variant(k) {}
    KernelSpec(WhiteNoise k) : variant(k) {}
    KernelSpec(SumKernel k) : variant(std::move(k)) {}
};

// Throws std::invalid_argument when a parameter or a Sum violates its invariant.
void validate(const KernelSpec &spec);

// Throws std::invalid_argument on dimension mismatch or non-finite input.
[[nodiscard]] double eval_kernel(const KernelSpec &spec, const FeatureVector &x, const FeatureVector &x2);

// (k(xs[0], x), ..., k(xs[n-1], x))
[[nodiscard]] Eigen::VectorXd gram_vector(const KernelSpec &spec, std::span<const FeatureVector> xs,
                                          const FeatureVector &x);

[[nodiscard]] Eigen::MatrixXd gram_matrix(const KernelSpec &spec, std::span<const FeatureVector> xs);

void to_json(nlohmann::json &j, const KernelSpec &spec);
void from_json(const nlohmann::json &j, KernelSpec &spec);

} // namespace isgp

#endif // ISGP_KERNELS_HPP
