#include "isgp/skeptic.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace isgp {

std::string_view to_string(PolicyKind policy) {
    switch (policy) {
    case PolicyKind::Isgp:
        return "isgp";
    case PolicyKind::GpNever:
        return "gp_never";
    case PolicyKind::GpAlways:
        return "gp_always";
    }
    return "unknown";
}

PolicyKind parse_policy(std::string_view name) {
    std::string norm;
    for (char c : name) {
        norm.push_back(c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (norm == "isgp") {
        return PolicyKind::Isgp;
    }
    if (norm == "gp_never" || norm == "never") {
        return PolicyKind::GpNever;
    }
    if (norm == "gp_always" || norm == "always") {
        return PolicyKind::GpAlways;
    }
    throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

bool InteractionRecord::operator==(const InteractionRecord &o) const {
    return round == o.round && instance.size() == o.instance.size() && instance == o.instance &&
           prediction == o.prediction && alpha == o.alpha && active_coin == o.active_coin &&
           annotator_label == o.annotator_label && gamma == o.gamma && skeptic_coin == o.skeptic_coin &&
           challenge_answer == o.challenge_answer && consensus_label == o.consensus_label &&
           rng_draws == o.rng_draws && true_label == o.true_label;
}

namespace {

template<class T>
void put_optional(nlohmann::json &j, const char *key, const std::optional<T> &v) {
    if (v) {
        j[key] = *v;
    } else {
        j[key] = nullptr;
    }
}

void put_label(nlohmann::json &j, const char *key, const std::optional<LabelId> &v) {
    if (v) {
        j[key] = v->value;
    } else {
        j[key] = nullptr;
    }
}

std::optional<LabelId> get_label(const nlohmann::json &j, const char *key) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return LabelId(j.at(key).get<std::uint32_t>());
}

} // namespace

void to_json(nlohmann::json &j, const InteractionRecord &r) {
    j = nlohmann::json::object();
    j["round"] = r.round;
    j["instance"] = std::vector<double>(r.instance.data(), r.instance.data() + r.instance.size());
    j["prediction"] = r.prediction.value;
    j["alpha"] = r.alpha;
    j["active_coin"] = r.active_coin ? 1 : 0;
    put_label(j, "annotator_label", r.annotator_label);
    put_optional(j, "gamma", r.gamma);
    if (r.skeptic_coin) {
        j["skeptic_coin"] = *r.skeptic_coin ? 1 : 0;
    } else {
        j["skeptic_coin"] = nullptr;
    }
    put_label(j, "challenge_answer", r.challenge_answer);
    put_label(j, "consensus_label", r.consensus_label);
    j["rng_draws"] = r.rng_draws;
    put_label(j, "true_label", r.true_label);
}

void from_json(const nlohmann::json &j, InteractionRecord &r) {
    r.round = j.at("round").get<std::uint64_t>();
    const auto xs = j.at("instance").get<std::vector<double>>();
    r.instance = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    r.prediction = LabelId(j.at("prediction").get<std::uint32_t>());
    r.alpha = j.at("alpha").get<double>();
    r.active_coin = j.at("active_coin").get<int>() != 0;
    r.annotator_label = get_label(j, "annotator_label");
    r.gamma = j.at("gamma").is_null() ? std::nullopt : std::optional<double>(j.at("gamma").get<double>());
    r.skeptic_coin = j.at("skeptic_coin").is_null() ? std::nullopt
                                                    : std::optional<bool>(j.at("skeptic_coin").get<int>() != 0);
    r.challenge_answer = get_label(j, "challenge_answer");
    r.consensus_label = get_label(j, "consensus_label");
    r.rng_draws = j.at("rng_draws").get<std::array<double, 2>>();
    r.true_label = get_label(j, "true_label");
}

void write_records(std::ostream &out, const std::vector<InteractionRecord> &records) {
    for (const auto &r : records) {
        out << nlohmann::json(r).dump() << '\n';
    }
}

std::vector<InteractionRecord> read_records(std::istream &in) {
    std::vector<InteractionRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        out.push_back(nlohmann::json::parse(line).get<InteractionRecord>());
    }
    return out;
}

double active_probability(const Posterior &p, LabelId prediction) {
    const double mu = p.means.at(prediction);
    if (!(p.sigma > 0.0)) {
        throw std::invalid_argument("active_probability: zero posterior standard deviation");
    }
    // 1 - Phi(z) == Phi(-z), evaluated without cancellation.
    return normal_cdf(-mu / p.sigma);
}

double skeptic_probability(const Posterior &p, LabelId prediction, LabelId annotator_label) {
    const double mu_pred = p.means.at(prediction);
    if (annotator_label == prediction) {
        return 0.0;
    }
    if (!(p.sigma > 0.0)) {
        throw std::invalid_argument("skeptic_probability: zero posterior standard deviation");
    }
    const auto it = p.means.find(annotator_label);
    const double mu_annot = it == p.means.end() ? 0.0 : it->second;
    return normal_cdf((mu_pred - mu_annot) / p.sigma);
}

double challenge_probability(PolicyKind policy, const Posterior &p, LabelId prediction, LabelId annotator_label) {
    switch (policy) {
    case PolicyKind::Isgp:
        return skeptic_probability(p, prediction, annotator_label);
    case PolicyKind::GpNever:
        return 0.0;
    case PolicyKind::GpAlways:
        return annotator_label == prediction ? 0.0 : 1.0;
    }
    return 0.0;
}

RoundOpening open_round(const ImgpModel &model, const FeatureVector &x, CoinRng &rng) {
    RoundOpening out;
    auto [prediction, posterior] = predict(model, x);
    out.prediction = prediction;
    out.alpha = active_probability(posterior, prediction);
    out.posterior = std::move(posterior);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    out.draws[0] = unit(rng);
    out.draws[1] = unit(rng);
    return out;
}

InteractionRecord step(ImgpModel &model, std::uint64_t round, const FeatureVector &x, LabelId true_label,
                       AnnotatorPort &oracle, PolicyKind policy, CoinRng &rng) {
    RoundOpening opening = open_round(model, x, rng);

    InteractionRecord rec;
    rec.round = round;
    rec.instance = x;
    rec.prediction = opening.prediction;
    rec.alpha = opening.alpha;
    rec.active_coin = opening.active_coin();
    rec.rng_draws = opening.draws;
    rec.true_label = true_label;
    if (!rec.active_coin) {
        return rec;
    }

    const LabelId annotated = oracle.label_query(x, true_label);
    rec.annotator_label = annotated;
    const double gamma = challenge_probability(policy, opening.posterior, opening.prediction, annotated);
    rec.gamma = gamma;
    rec.skeptic_coin = opening.draws[1] < gamma;

    LabelId consensus = annotated;
    if (*rec.skeptic_coin) {
        consensus = oracle.contradiction_query(x, true_label, annotated, opening.prediction);
        rec.challenge_answer = consensus;
    }
    model.add_example(x, consensus);
    rec.consensus_label = consensus;
    return rec;
}

EpisodeResult run_episode(ImgpModel &model, const std::vector<LabeledInstance> &stream, AnnotatorPort &oracle,
                          PolicyKind policy, CoinRng &rng, const RoundObserver &observer) {
    if (stream.empty()) {
        throw std::invalid_argument("run_episode: empty stream");
    }
    EpisodeResult result;
    result.records.reserve(stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i) {
        try {
            result.records.push_back(step(model, i + 1, stream[i].x, stream[i].label, oracle, policy, rng));
        } catch (const NumericError &e) {
            result.error = "round " + std::to_string(i + 1) + ": " + e.what();
            break;
        }
        if (observer) {
            observer(model, result.records.back());
        }
    }
    return result;
}

} // namespace isgp
