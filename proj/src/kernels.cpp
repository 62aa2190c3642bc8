#include "isgp/kernels.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace isgp {

namespace {

template<class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template<class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_inputs(const FeatureVector &x, const FeatureVector &x2) {
    if (x.size() != x2.size()) {
        throw std::invalid_argument("kernel: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                                    std::to_string(x2.size()) + ")");
    }
    if (!x.allFinite() || !x2.allFinite()) {
        throw std::invalid_argument("kernel: non-finite input component");
    }
}

bool bitwise_equal(const FeatureVector &x, const FeatureVector &x2) {
    return x.size() == x2.size() &&
           std::memcmp(x.data(), x2.data(), static_cast<std::size_t>(x.size()) * sizeof(double)) == 0;
}

double eval_unchecked(const KernelSpec &spec, const FeatureVector &x, const FeatureVector &x2) {
    return std::visit(
        overloaded{
            [&](const SquaredExponential &k) {
                const double d2 = (x - x2).squaredNorm();
                return std::exp(-d2 / (2.0 * k.length_scale * k.length_scale));
            },
            [&](const RationalQuadratic &k) {
                const double d2 = (x - x2).squaredNorm();
                return std::pow(1.0 + d2 / (2.0 * k.alpha * k.length_scale * k.length_scale), -k.alpha);
            },
            [](const Constant &k) { return k.value; },
            [&](const WhiteNoise &k) { return bitwise_equal(x, x2) ? k.level : 0.0; },
            [&](const SumKernel &k) {
                double total = 0.0;
                for (const auto &child : k.children) {
                    total += eval_unchecked(child, x, x2);
                }
                return total;
            },
        },
        spec.variant);
}

void require_positive(double v, const char *what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string("kernel: ") + what + " must be positive and finite");
    }
}

void require_non_negative(double v, const char *what) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string("kernel: ") + what + " must be non-negative and finite");
    }
}

} // namespace

void validate(const KernelSpec &spec) {
    std::visit(overloaded{
                   [](const SquaredExponential &k) { require_positive(k.length_scale, "length_scale"); },
                   [](const RationalQuadratic &k) {
                       require_positive(k.length_scale, "length_scale");
                       require_positive(k.alpha, "alpha");
                   },
                   [](const Constant &k) { require_non_negative(k.value, "constant value"); },
                   [](const WhiteNoise &k) { require_non_negative(k.level, "white-noise level"); },
                   [](const SumKernel &k) {
                       if (k.children.empty()) {
                           throw std::invalid_argument("kernel: sum needs at least one child");
                       }
                       for (const auto &child : k.children) {
                           validate(child);
                       }
                   },
               },
               spec.variant);
}

double eval_kernel(const KernelSpec &spec, const FeatureVector &x, const FeatureVector &x2) {
    check_inputs(x, x2);
    return eval_unchecked(spec, x, x2);
}

Eigen::VectorXd gram_vector(const KernelSpec &spec, std::span<const FeatureVector> xs, const FeatureVector &x) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(xs.size()));
    if (!x.allFinite()) {
        throw std::invalid_argument("kernel: non-finite input component");
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i].size() != x.size()) {
            throw std::invalid_argument("kernel: dimension mismatch at stored point " + std::to_string(i));
        }
        out[static_cast<Eigen::Index>(i)] = eval_unchecked(spec, xs[i], x);
    }
    return out;
}

Eigen::MatrixXd gram_matrix(const KernelSpec &spec, std::span<const FeatureVector> xs) {
    const auto n = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            K(i, j) = eval_kernel(spec, xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(j)]);
            K(j, i) = K(i, j);
        }
    }
    return K;
}

void to_json(nlohmann::json &j, const KernelSpec &spec) {
    std::visit(overloaded{
                   [&](const SquaredExponential &k) {
                       j = {{"type", "squared_exponential"}, {"length_scale", k.length_scale}};
                   },
                   [&](const RationalQuadratic &k) {
                       j = {{"type", "rational_quadratic"}, {"length_scale", k.length_scale}, {"alpha", k.alpha}};
                   },
                   [&](const Constant &k) { j = {{"type", "constant"}, {"value", k.value}}; },
                   [&](const WhiteNoise &k) { j = {{"type", "white_noise"}, {"level", k.level}}; },
                   [&](const SumKernel &k) {
                       j = {{"type", "sum"}, {"children", nlohmann::json::array()}};
                       for (const auto &child : k.children) {
                           j["children"].push_back(child);
                       }
                   },
               },
               spec.variant);
}

void from_json(const nlohmann::json &j, KernelSpec &spec) {
    const auto type = j.at("type").get<std::string>();
    if (type == "squared_exponential") {
        spec = SquaredExponential{j.value("length_scale", 1.0)};
    } else if (type == "rational_quadratic") {
        spec = RationalQuadratic{j.value("length_scale", 1.0), j.value("alpha", 1.0)};
    } else if (type == "constant") {
        spec = Constant{j.value("value", 1.0)};
    } else if (type == "white_noise") {
        spec = WhiteNoise{j.value("level", 1.0)};
    } else if (type == "sum") {
        SumKernel sum;
        for (const auto &child : j.at("children")) {
            sum.children.push_back(child.get<KernelSpec>());
        }
        spec = std::move(sum);
    } else {
        throw std::invalid_argument("kernel: unknown type '" + type + "'");
    }
    validate(spec);
}

} // namespace isgp
