#include "isgp/types.hpp"

#include <algorithm>

namespace isgp {

LabelVocabulary::LabelVocabulary(const std::vector<std::string> &names) {
    for (const auto &n : names) {
        add(n);
    }
}

LabelId LabelVocabulary::add(const std::string &name) {
    if (auto existing = find(name)) {
        return *existing;
    }
    names_.push_back(name);
    return LabelId(static_cast<std::uint32_t>(names_.size() - 1));
}

std::optional<LabelId> LabelVocabulary::find(const std::string &name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) {
        return std::nullopt;
    }
    return LabelId(static_cast<std::uint32_t>(it - names_.begin()));
}

const std::string &LabelVocabulary::name(LabelId id) const {
    if (id.value >= names_.size()) {
        throw std::out_of_range("label vocabulary: unknown id " + std::to_string(id.value));
    }
    return names_[id.value];
}

} // namespace isgp
