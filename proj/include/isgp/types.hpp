#ifndef ISGP_TYPES_HPP
#define ISGP_TYPES_HPP

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace isgp {

using FeatureVector = Eigen::VectorXd;

// Class identifier. Display names live in LabelVocabulary.
struct LabelId {
    std::uint32_t value = 0;

    constexpr LabelId() = default;
    constexpr explicit LabelId(std::uint32_t v) : value(v) {}

    auto operator<=>(const LabelId &) const = default;
};

// Numerical failure inside the GP (unstable update, corrupted precision).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Maps display names to dense LabelIds in registration order.
class LabelVocabulary {
public:
    LabelVocabulary() = default;
    explicit LabelVocabulary(const std::vector<std::string> &names);

    LabelId add(const std::string &name);
    [[nodiscard]] std::optional<LabelId> find(const std::string &name) const;
    [[nodiscard]] const std::string &name(LabelId id) const;
    [[nodiscard]] std::size_t size() const { return names_.size(); }
    [[nodiscard]] const std::vector<std::string> &names() const { return names_; }

private:
    std::vector<std::string> names_;
};

} // namespace isgp

template<>
struct std::hash<isgp::LabelId> {
    std::size_t operator()(const isgp::LabelId &id) const noexcept {
        return std::hash<std::uint32_t>{}(id.value);
    }
};

#endif // ISGP_TYPES_HPP
