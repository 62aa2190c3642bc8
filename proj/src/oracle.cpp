#include "isgp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>

namespace isgp {

SimulatedOracle::SimulatedOracle(OracleConfig config) : config_(std::move(config)), rng_(config_.seed) {
    if (!(config_.eta >= 0.0 && config_.eta < 0.5)) {
        throw std::invalid_argument("oracle: eta must lie in [0, 0.5), got " + std::to_string(config_.eta));
    }
    if (config_.eta > 0.45) {
        std::clog << "warning: oracle noise rate " << config_.eta << " is close to the learnability limit of 0.5\n";
    }
    if (config_.class_universe.empty()) {
        throw std::invalid_argument("oracle: empty class universe");
    }
    std::sort(config_.class_universe.begin(), config_.class_universe.end());
    config_.class_universe.erase(std::unique(config_.class_universe.begin(), config_.class_universe.end()),
                                 config_.class_universe.end());
}

LabelId SimulatedOracle::noisy_answer(LabelId true_label) {
    const auto &universe = config_.class_universe;
    if (!std::binary_search(universe.begin(), universe.end(), true_label)) {
        throw std::invalid_argument("oracle: true label " + std::to_string(true_label.value) +
                                    " is outside the class universe");
    }
    if (config_.eta == 0.0) {
        return true_label;
    }
    if (universe.size() < 2) {
        throw std::invalid_argument("oracle: no wrong label exists in a one-class universe");
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng_) >= config_.eta) {
        return true_label;
    }
    std::uniform_int_distribution<std::size_t> pick(0, universe.size() - 2);
    std::size_t idx = pick(rng_);
    // Skip over the truth so the draw is uniform over the remaining labels.
    const auto truth_pos =
        static_cast<std::size_t>(std::lower_bound(universe.begin(), universe.end(), true_label) - universe.begin());
    if (idx >= truth_pos) {
        ++idx;
    }
    return universe[idx];
}

LabelId SimulatedOracle::label_query(const FeatureVector &, LabelId true_label) {
    return noisy_answer(true_label);
}

LabelId SimulatedOracle::contradiction_query(const FeatureVector &, LabelId true_label, LabelId contested,
                                             LabelId machine) {
    if (contested == machine) {
        throw std::invalid_argument("oracle: contradiction query without a disagreement");
    }
    if (contested == true_label || config_.clean_contradictions) {
        if (!std::binary_search(config_.class_universe.begin(), config_.class_universe.end(), true_label)) {
            throw std::invalid_argument("oracle: true label " + std::to_string(true_label.value) +
                                        " is outside the class universe");
        }
        return true_label;
    }
    return noisy_answer(true_label);
}

} // namespace isgp
