#ifndef ISGP_SESSION_HPP
#define ISGP_SESSION_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "isgp/dataset.hpp"
#include "isgp/imgp.hpp"
#include "isgp/skeptic.hpp"

namespace isgp {

// Protocol violation or bad request. `code` is the machine-readable error name
// sent to clients; `status` the matching HTTP status.
class SessionError : public std::runtime_error {
public:
    SessionError(std::string code, const std::string &message, int status = 409)
        : std::runtime_error(message), code_(std::move(code)), status_(status) {}

    [[nodiscard]] const std::string &code() const { return code_; }
    [[nodiscard]] int status() const { return status_; }

private:
    std::string code_;
    int status_;
};

struct SyntheticStreamSource {
    SyntheticSpec spec;
    Ordering ordering = Ordering::RandomShuffle;
};

struct PointListSource {
    std::vector<FeatureVector> points;
};

using InstanceSource = std::variant<SyntheticStreamSource, PointListSource, CsvSource>;

struct SessionConfig {
    KernelSpec kernel = SquaredExponential{2.0};
    double rho = 1e-8;
    InstanceSource source = SyntheticStreamSource{};
    std::vector<std::string> initial_classes;
    std::uint64_t seed = 0;
};

void to_json(nlohmann::json &j, const SessionConfig &cfg);
// Throws SessionError("invalid_config") on any schema or value problem.
[[nodiscard]] SessionConfig session_config_from_json(const nlohmann::json &j);

// One human-annotated run of the interaction loop. Strictly turn-based: at most
// one query is pending, and every call that breaks the turn order is rejected
// without changing state. Not thread-safe; SessionManager serializes access.
class Session {
public:
    explicit Session(SessionConfig config);

    // Pulls the next instance. Emits "predicted" (no query) or "label_request".
    nlohmann::json advance();
    // Emits "accepted" (model updated) or "challenge" (contradiction pending).
    nlohmann::json submit_label(const std::string &label, bool allow_new);
    // The answer is final; unknown names become new classes.
    nlohmann::json resolve_challenge(const std::string &label);

    // Pending query, counters, vocabulary, log and the posterior on `grid`.
    [[nodiscard]] nlohmann::json state(const std::vector<FeatureVector> &grid) const;

    [[nodiscard]] const SessionConfig &config() const { return config_; }
    [[nodiscard]] const ImgpModel &model() const { return model_; }
    [[nodiscard]] const std::vector<InteractionRecord> &log() const { return log_; }
    [[nodiscard]] const LabelVocabulary &vocabulary() const { return vocabulary_; }
    // Round number of the pending query, if any.
    [[nodiscard]] std::optional<std::uint64_t> pending_round() const;
    [[nodiscard]] std::string phase() const;

private:
    struct PendingLabel {
        InteractionRecord record;
        Posterior posterior;
    };
    struct PendingChallenge {
        InteractionRecord record;
    };

    void close_round(InteractionRecord record, LabelId consensus);
    [[nodiscard]] nlohmann::json query_view() const;

    SessionConfig config_;
    std::vector<FeatureVector> instances_;
    std::size_t cursor_ = 0;
    ImgpModel model_;
    LabelVocabulary vocabulary_;
    CoinRng rng_;
    std::variant<std::monostate, PendingLabel, PendingChallenge> pending_;
    std::vector<InteractionRecord> log_;
};

// Thread-safe registry of sessions, with optional on-disk persistence as a
// config file plus an append-only log of accepted operations per session.
class SessionManager {
public:
    SessionManager() = default;
    // Reloads and replays every session found under `store`.
    explicit SessionManager(std::filesystem::path store);

    std::string create(const nlohmann::json &config);

    // Mutating calls. `request` may carry "idempotency_key" (a repeated key
    // returns the first response without touching state) and, for answers,
    // "query_id" (the pending round the client is answering).
    nlohmann::json advance(const std::string &id, const nlohmann::json &request = {});
    nlohmann::json submit_label(const std::string &id, const nlohmann::json &request);
    nlohmann::json resolve_challenge(const std::string &id, const nlohmann::json &request);

    [[nodiscard]] nlohmann::json state(const std::string &id, const std::vector<FeatureVector> &grid = {}) const;

    // Model snapshot (versioned JSON) of one session.
    [[nodiscard]] nlohmann::json snapshot(const std::string &id) const;

    // Rebuilds a session from its persisted config and operation log.
    [[nodiscard]] static std::unique_ptr<Session> replay(const nlohmann::json &config,
                                                         const std::vector<nlohmann::json> &operations);

private:
    struct Entry {
        mutable std::mutex mutex;
        std::unique_ptr<Session> session;
        nlohmann::json config;
        std::vector<nlohmann::json> operations;
        std::map<std::string, nlohmann::json> idempotent;
    };

    std::shared_ptr<Entry> find(const std::string &id) const;
    template<class Op>
    nlohmann::json mutate(const std::string &id, const nlohmann::json &request, const nlohmann::json &operation,
                          Op &&op);
    void persist_config(const std::string &id, const nlohmann::json &config) const;
    void persist_operation(const std::string &id, const nlohmann::json &operation) const;

    std::optional<std::filesystem::path> store_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::uint64_t counter_ = 0;
};

// Applies one persisted operation ({"op": ..., ...}) to a session.
nlohmann::json apply_operation(Session &session, const nlohmann::json &operation);

} // namespace isgp

#endif // ISGP_SESSION_HPP
