#ifndef ISGP_SKEPTIC_HPP
#define ISGP_SKEPTIC_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "isgp/imgp.hpp"
#include "isgp/oracle.hpp"

namespace isgp {

enum class PolicyKind { Isgp, GpNever, GpAlways };

[[nodiscard]] std::string_view to_string(PolicyKind policy);
// Accepts "isgp", "gp_never", "gp_always" (case-insensitive, '-' or '_').
[[nodiscard]] PolicyKind parse_policy(std::string_view name);

using CoinRng = std::mt19937_64;

// One round of the interaction loop.
struct InteractionRecord {
    std::uint64_t round = 0;
    FeatureVector instance;
    LabelId prediction;
    double alpha = 0.0;
    bool active_coin = false;
    std::optional<LabelId> annotator_label;
    std::optional<double> gamma;
    std::optional<bool> skeptic_coin;
    std::optional<LabelId> challenge_answer;
    std::optional<LabelId> consensus_label;
    // Uniform draws behind the active and skeptic coins, in that order.
    std::array<double, 2> rng_draws{};
    // Ground truth, when the stream carries one (simulation only).
    std::optional<LabelId> true_label;

    [[nodiscard]] bool challenged() const { return challenge_answer.has_value(); }
    // The challenge made the annotator change their answer.
    [[nodiscard]] bool mistake_uncovered() const {
        return challenge_answer && annotator_label && *challenge_answer != *annotator_label;
    }

    bool operator==(const InteractionRecord &other) const;
};

void to_json(nlohmann::json &j, const InteractionRecord &r);
void from_json(const nlohmann::json &j, InteractionRecord &r);

// Writes one JSON object per line.
void write_records(std::ostream &out, const std::vector<InteractionRecord> &records);
[[nodiscard]] std::vector<InteractionRecord> read_records(std::istream &in);

// Probability that the predicted class's latent value is non-positive.
[[nodiscard]] double active_probability(const Posterior &p, LabelId prediction);

// Zero on agreement; otherwise Phi((mu_pred - mu_annot) / sigma), with a prior
// mean of zero for an annotator class the model has never seen.
[[nodiscard]] double skeptic_probability(const Posterior &p, LabelId prediction, LabelId annotator_label);

// Challenge probability used by each policy. GpNever never challenges and
// GpAlways challenges every disagreement.
[[nodiscard]] double challenge_probability(PolicyKind policy, const Posterior &p, LabelId prediction,
                                           LabelId annotator_label);

// Prediction, alpha and both coin draws for a new round. Always consumes two
// uniforms from `rng`, whatever branch the round takes.
struct RoundOpening {
    LabelId prediction;
    Posterior posterior;
    double alpha = 0.0;
    std::array<double, 2> draws{};

    [[nodiscard]] bool active_coin() const { return draws[0] < alpha; }
};

[[nodiscard]] RoundOpening open_round(const ImgpModel &model, const FeatureVector &x, CoinRng &rng);

// Runs one round against a simulated annotator. On error the model is left untouched.
InteractionRecord step(ImgpModel &model, std::uint64_t round, const FeatureVector &x, LabelId true_label,
                       AnnotatorPort &oracle, PolicyKind policy, CoinRng &rng);

struct LabeledInstance {
    FeatureVector x;
    LabelId label;
};

struct EpisodeResult {
    std::vector<InteractionRecord> records;
    // Set when the episode stopped early on a numeric failure.
    std::optional<std::string> error;
};

using RoundObserver = std::function<void(const ImgpModel &, const InteractionRecord &)>;

// Prequential loop over `stream`: every prediction precedes that round's update.
EpisodeResult run_episode(ImgpModel &model, const std::vector<LabeledInstance> &stream, AnnotatorPort &oracle,
                          PolicyKind policy, CoinRng &rng, const RoundObserver &observer = {});

} // namespace isgp

#endif // ISGP_SKEPTIC_HPP
