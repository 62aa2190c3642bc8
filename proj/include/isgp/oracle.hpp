#ifndef ISGP_ORACLE_HPP
#define ISGP_ORACLE_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "isgp/types.hpp"

namespace isgp {

// The annotator as seen by the learner. Implementations may be simulated or human.
class AnnotatorPort {
public:
    virtual ~AnnotatorPort() = default;

    // "What is the label of x?"
    virtual LabelId label_query(const FeatureVector &x, LabelId true_label) = 0;

    // "You said `contested`, I think it is `machine`. What is the label of x?"
    virtual LabelId contradiction_query(const FeatureVector &x, LabelId true_label, LabelId contested,
                                        LabelId machine) = 0;
};

struct OracleConfig {
    double eta = 0.0;
    std::vector<LabelId> class_universe;
    std::uint64_t seed = 0;
    // Answer every contradiction query with the true label.
    bool clean_contradictions = false;
};

// Noisy annotator: a labeling answer is wrong with probability eta, the wrong
// label drawn uniformly from the class universe minus the truth. A contradiction
// answer is always right when the contested label was right, and otherwise
// follows the labeling noise model, drawn independently of the earlier answer.
class SimulatedOracle final : public AnnotatorPort {
public:
    explicit SimulatedOracle(OracleConfig config);

    LabelId label_query(const FeatureVector &x, LabelId true_label) override;
    LabelId contradiction_query(const FeatureVector &x, LabelId true_label, LabelId contested,
                                LabelId machine) override;

    [[nodiscard]] const OracleConfig &config() const { return config_; }

private:
    LabelId noisy_answer(LabelId true_label);

    OracleConfig config_;
    std::mt19937_64 rng_;
};

} // namespace isgp

#endif // ISGP_ORACLE_HPP
