#include "isgp/session.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

namespace isgp {

namespace {

nlohmann::json vec_json(const FeatureVector &x) {
    return std::vector<double>(x.data(), x.data() + x.size());
}

FeatureVector vec_from_json(const nlohmann::json &j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

SessionError invalid_config(const std::string &message) {
    return SessionError("invalid_config", message, 400);
}

std::vector<FeatureVector> materialize(const InstanceSource &source, std::uint64_t seed) {
    if (const auto *synth = std::get_if<SyntheticStreamSource>(&source)) {
        const Dataset data = generate_synthetic(synth->spec);
        std::vector<FeatureVector> out;
        for (auto i : order_instances(data, synth->ordering, seed)) {
            out.push_back(data.features[i]);
        }
        return out;
    }
    if (const auto *points = std::get_if<PointListSource>(&source)) {
        return points->points;
    }
    return load_csv(std::get<CsvSource>(source)).features;
}

} // namespace

void to_json(nlohmann::json &j, const SessionConfig &cfg) {
    nlohmann::json source;
    if (const auto *synth = std::get_if<SyntheticStreamSource>(&cfg.source)) {
        source = {{"type", "synthetic"},
                  {"n_classes", synth->spec.n_classes},
                  {"n_instances", synth->spec.n_instances},
                  {"dim", synth->spec.dim},
                  {"class_std", synth->spec.class_std},
                  {"center_radius", synth->spec.center_radius},
                  {"seed", synth->spec.seed},
                  {"ordering", std::string(to_string(synth->ordering))}};
    } else if (const auto *points = std::get_if<PointListSource>(&cfg.source)) {
        source = {{"type", "points"}, {"points", nlohmann::json::array()}};
        for (const auto &p : points->points) {
            source["points"].push_back(vec_json(p));
        }
    } else {
        const auto &csv = std::get<CsvSource>(cfg.source);
        source = {{"type", "csv"}, {"path", csv.path.string()}, {"label_column", csv.label_column}};
    }
    j = {{"kernel", cfg.kernel},
         {"rho", cfg.rho},
         {"source", std::move(source)},
         {"initial_classes", cfg.initial_classes},
         {"seed", cfg.seed}};
}

SessionConfig session_config_from_json(const nlohmann::json &j) {
    try {
        SessionConfig cfg;
        if (!j.is_object()) {
            throw invalid_config("session config must be a JSON object");
        }
        if (j.contains("kernel")) {
            cfg.kernel = j.at("kernel").get<KernelSpec>();
        }
        cfg.rho = j.value("rho", cfg.rho);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.initial_classes = j.value("initial_classes", std::vector<std::string>{});
        if (j.contains("source")) {
            const auto &s = j.at("source");
            const auto type = s.value("type", std::string("synthetic"));
            if (type == "synthetic") {
                SyntheticStreamSource src;
                src.spec.n_classes = s.value("n_classes", src.spec.n_classes);
                src.spec.n_instances = s.value("n_instances", src.spec.n_instances);
                src.spec.dim = s.value("dim", src.spec.dim);
                src.spec.class_std = s.value("class_std", src.spec.class_std);
                src.spec.center_radius = s.value("center_radius", src.spec.center_radius);
                src.spec.seed = s.value("seed", src.spec.seed);
                src.ordering = parse_ordering(s.value("ordering", std::string("random")));
                validate(src.spec);
                cfg.source = src;
            } else if (type == "points") {
                PointListSource src;
                for (const auto &p : s.at("points")) {
                    src.points.push_back(vec_from_json(p));
                }
                cfg.source = std::move(src);
            } else if (type == "csv") {
                cfg.source = CsvSource{s.at("path").get<std::string>(), s.value("label_column", std::string("label"))};
            } else {
                throw invalid_config("unknown source type '" + type + "'");
            }
        }
        return cfg;
    } catch (const SessionError &) {
        throw;
    } catch (const std::exception &e) {
        throw invalid_config(e.what());
    }
}

Session::Session(SessionConfig config)
    : config_(std::move(config)),
      model_([this] {
          if (config_.initial_classes.empty()) {
              throw invalid_config("at least one initial class is required");
          }
          std::set<LabelId> ids;
          for (std::size_t i = 0; i < config_.initial_classes.size(); ++i) {
              ids.insert(LabelId(static_cast<std::uint32_t>(i)));
          }
          try {
              return ImgpModel(config_.kernel, config_.rho, ids);
          } catch (const std::invalid_argument &e) {
              throw invalid_config(e.what());
          }
      }()),
      vocabulary_(config_.initial_classes),
      rng_(config_.seed) {
    if (vocabulary_.size() != config_.initial_classes.size()) {
        throw invalid_config("initial class names must be distinct");
    }
    try {
        instances_ = materialize(config_.source, config_.seed);
    } catch (const std::exception &e) {
        throw invalid_config(e.what());
    }
    if (instances_.empty()) {
        throw invalid_config("instance source is empty");
    }
    const auto dim = instances_.front().size();
    for (const auto &x : instances_) {
        if (x.size() != dim || !x.allFinite()) {
            throw invalid_config("instances must be finite and share one dimension");
        }
    }
}

std::optional<std::uint64_t> Session::pending_round() const {
    if (const auto *p = std::get_if<PendingLabel>(&pending_)) {
        return p->record.round;
    }
    if (const auto *c = std::get_if<PendingChallenge>(&pending_)) {
        return c->record.round;
    }
    return std::nullopt;
}

std::string Session::phase() const {
    if (std::holds_alternative<PendingLabel>(pending_)) {
        return "awaiting_label";
    }
    if (std::holds_alternative<PendingChallenge>(pending_)) {
        return "awaiting_resolution";
    }
    return cursor_ < instances_.size() ? "awaiting_advance" : "exhausted";
}

nlohmann::json Session::advance() {
    if (!std::holds_alternative<std::monostate>(pending_)) {
        throw SessionError("pending_query", "a query is pending; answer it before advancing");
    }
    if (cursor_ >= instances_.size()) {
        throw SessionError("source_exhausted", "the instance source is exhausted");
    }
    const FeatureVector &x = instances_[cursor_];
    RoundOpening opening = open_round(model_, x, rng_);
    ++cursor_;

    InteractionRecord rec;
    rec.round = cursor_;
    rec.instance = x;
    rec.prediction = opening.prediction;
    rec.alpha = opening.alpha;
    rec.active_coin = opening.active_coin();
    rec.rng_draws = opening.draws;

    nlohmann::json event = {{"round", rec.round},
                            {"instance", vec_json(x)},
                            {"prediction", vocabulary_.name(rec.prediction)},
                            {"alpha", rec.alpha}};
    if (!rec.active_coin) {
        log_.push_back(std::move(rec));
        event["event"] = "predicted";
    } else {
        pending_ = PendingLabel{std::move(rec), std::move(opening.posterior)};
        event["event"] = "label_request";
    }
    return event;
}

void Session::close_round(InteractionRecord record, LabelId consensus) {
    model_.add_example(record.instance, consensus);
    record.consensus_label = consensus;
    log_.push_back(std::move(record));
    pending_ = std::monostate{};
}

nlohmann::json Session::submit_label(const std::string &label, bool allow_new) {
    auto *pending = std::get_if<PendingLabel>(&pending_);
    if (pending == nullptr) {
        throw SessionError("no_pending_label_request", "no label request is pending");
    }
    const auto known = vocabulary_.find(label);
    if (!known && !allow_new) {
        throw SessionError("unknown_class", "unknown class '" + label + "' (set allow_new to register it)", 400);
    }
    if (label.empty()) {
        throw SessionError("unknown_class", "empty class name", 400);
    }
    const LabelId annotated = known ? *known : LabelId(static_cast<std::uint32_t>(vocabulary_.size()));

    InteractionRecord rec = pending->record;
    const double gamma = skeptic_probability(pending->posterior, rec.prediction, annotated);
    rec.annotator_label = annotated;
    rec.gamma = gamma;
    rec.skeptic_coin = rec.rng_draws[1] < gamma;

    if (*rec.skeptic_coin) {
        vocabulary_.add(label);
        pending_ = PendingChallenge{rec};
        return {{"event", "challenge"},
                {"round", rec.round},
                {"instance", vec_json(rec.instance)},
                {"contested", label},
                {"machine", vocabulary_.name(rec.prediction)},
                {"gamma", gamma}};
    }
    const bool is_new = !model_.known_classes().contains(annotated);
    close_round(rec, annotated);
    vocabulary_.add(label);
    return {{"event", "accepted"},
            {"round", rec.round},
            {"consensus", label},
            {"gamma", gamma},
            {"new_class", is_new}};
}

nlohmann::json Session::resolve_challenge(const std::string &label) {
    auto *pending = std::get_if<PendingChallenge>(&pending_);
    if (pending == nullptr) {
        throw SessionError("no_pending_challenge", "no challenge is pending");
    }
    if (label.empty()) {
        throw SessionError("unknown_class", "empty class name", 400);
    }
    const auto known = vocabulary_.find(label);
    const LabelId answer = known ? *known : LabelId(static_cast<std::uint32_t>(vocabulary_.size()));

    InteractionRecord rec = pending->record;
    rec.challenge_answer = answer;
    const bool is_new = !model_.known_classes().contains(answer);
    const bool uncovered = rec.mistake_uncovered();
    close_round(rec, answer);
    vocabulary_.add(label);
    return {{"event", "resolved"},
            {"round", rec.round},
            {"consensus", label},
            {"mistake_uncovered", uncovered},
            {"new_class", is_new}};
}

nlohmann::json Session::query_view() const {
    if (const auto *p = std::get_if<PendingLabel>(&pending_)) {
        return {{"type", "label_request"},
                {"query_id", p->record.round},
                {"instance", vec_json(p->record.instance)},
                {"prediction", vocabulary_.name(p->record.prediction)},
                {"alpha", p->record.alpha}};
    }
    if (const auto *c = std::get_if<PendingChallenge>(&pending_)) {
        return {{"type", "challenge"},
                {"query_id", c->record.round},
                {"instance", vec_json(c->record.instance)},
                {"contested", vocabulary_.name(*c->record.annotator_label)},
                {"machine", vocabulary_.name(c->record.prediction)},
                {"gamma", *c->record.gamma}};
    }
    return nullptr;
}

nlohmann::json Session::state(const std::vector<FeatureVector> &grid) const {
    std::size_t active = 0;
    std::size_t challenges = 0;
    std::size_t uncovered = 0;
    nlohmann::json log = nlohmann::json::array();
    for (const auto &r : log_) {
        active += r.active_coin ? 1 : 0;
        challenges += r.challenged() ? 1 : 0;
        uncovered += r.mistake_uncovered() ? 1 : 0;
        log.push_back(r);
    }
    nlohmann::json known = nlohmann::json::array();
    for (auto id : model_.known_classes()) {
        known.push_back(vocabulary_.name(id));
    }
    nlohmann::json grid_view = nlohmann::json::array();
    for (const auto &x : grid) {
        const auto [prediction, post] = predict(model_, x);
        nlohmann::json means = nlohmann::json::object();
        for (const auto &[id, mu] : post.means) {
            means[vocabulary_.name(id)] = mu;
        }
        nlohmann::json probs = nlohmann::json::object();
        if (post.sigma > 0.0) {
            for (const auto &[id, p] : class_posterior(post)) {
                probs[vocabulary_.name(id)] = p;
            }
        }
        grid_view.push_back({{"x", vec_json(x)},
                             {"means", std::move(means)},
                             {"sigma", post.sigma},
                             {"probabilities", std::move(probs)},
                             {"prediction", vocabulary_.name(prediction)}});
    }
    return {{"phase", phase()},
            {"pending", query_view()},
            {"counters",
             {{"rounds", log_.size()},
              {"active_queries", active},
              {"contradiction_queries", challenges},
              {"mistakes_uncovered", uncovered},
              {"model_instances", model_.size()},
              {"remaining_instances", instances_.size() - cursor_}}},
            {"vocabulary", vocabulary_.names()},
            {"known_classes", std::move(known)},
            {"log", std::move(log)},
            {"grid", std::move(grid_view)}};
}

nlohmann::json apply_operation(Session &session, const nlohmann::json &operation) {
    const auto op = operation.at("op").get<std::string>();
    if (op == "advance") {
        return session.advance();
    }
    if (op == "submit_label") {
        return session.submit_label(operation.at("label").get<std::string>(), operation.value("allow_new", false));
    }
    if (op == "resolve_challenge") {
        return session.resolve_challenge(operation.at("label").get<std::string>());
    }
    throw SessionError("bad_request", "unknown operation '" + op + "'", 400);
}

SessionManager::SessionManager(std::filesystem::path store) : store_(std::move(store)) {
    std::filesystem::create_directories(*store_);
    for (const auto &dir : std::filesystem::directory_iterator(*store_)) {
        if (!dir.is_directory() || !std::filesystem::exists(dir.path() / "config.json")) {
            continue;
        }
        std::ifstream cfg_in(dir.path() / "config.json");
        auto entry = std::make_shared<Entry>();
        entry->config = nlohmann::json::parse(cfg_in);
        std::ifstream ops_in(dir.path() / "operations.jsonl");
        std::string line;
        while (std::getline(ops_in, line)) {
            if (!line.empty()) {
                entry->operations.push_back(nlohmann::json::parse(line));
            }
        }
        entry->session = replay(entry->config, entry->operations);
        sessions_.emplace(dir.path().filename().string(), std::move(entry));
    }
}

std::unique_ptr<Session> SessionManager::replay(const nlohmann::json &config,
                                                const std::vector<nlohmann::json> &operations) {
    auto session = std::make_unique<Session>(session_config_from_json(config));
    for (const auto &op : operations) {
        (void)apply_operation(*session, op);
    }
    return session;
}

std::string SessionManager::create(const nlohmann::json &config) {
    auto entry = std::make_shared<Entry>();
    const SessionConfig parsed = session_config_from_json(config);
    entry->session = std::make_unique<Session>(parsed);
    entry->config = parsed;

    std::lock_guard lock(mutex_);
    static thread_local std::mt19937_64 salt{std::random_device{}()};
    std::string id;
    do {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "s%04llx%012llx", static_cast<unsigned long long>(++counter_ & 0xffff),
                      static_cast<unsigned long long>(salt() & 0xffffffffffffULL));
        id = buf;
    } while (sessions_.contains(id));
    persist_config(id, entry->config);
    sessions_.emplace(id, std::move(entry));
    return id;
}

std::shared_ptr<SessionManager::Entry> SessionManager::find(const std::string &id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) {
        throw SessionError("unknown_session", "unknown session '" + id + "'", 404);
    }
    return it->second;
}

template<class Op>
nlohmann::json SessionManager::mutate(const std::string &id, const nlohmann::json &request,
                                      const nlohmann::json &operation, Op &&op) {
    auto entry = find(id);
    std::lock_guard lock(entry->mutex);
    const std::string key =
        request.is_object() && request.contains("idempotency_key") ? request.at("idempotency_key").get<std::string>()
                                                                   : std::string();
    if (!key.empty()) {
        if (const auto hit = entry->idempotent.find(key); hit != entry->idempotent.end()) {
            return hit->second;
        }
    }
    if (request.is_object() && request.contains("query_id") && !request.at("query_id").is_null()) {
        const auto expected = request.at("query_id").get<std::uint64_t>();
        const auto pending = entry->session->pending_round();
        if (!pending || *pending != expected) {
            throw SessionError("stale_query", "query " + std::to_string(expected) + " is no longer pending");
        }
    }
    nlohmann::json response;
    try {
        response = op(*entry->session);
    } catch (const NumericError &e) {
        throw SessionError("numeric_failure", e.what(), 422);
    }
    entry->operations.push_back(operation);
    persist_operation(id, operation);
    if (!key.empty()) {
        entry->idempotent.emplace(key, response);
    }
    return response;
}

nlohmann::json SessionManager::advance(const std::string &id, const nlohmann::json &request) {
    return mutate(id, request, {{"op", "advance"}}, [](Session &s) { return s.advance(); });
}

nlohmann::json SessionManager::submit_label(const std::string &id, const nlohmann::json &request) {
    if (!request.is_object() || !request.contains("label") || !request.at("label").is_string()) {
        throw SessionError("bad_request", "submit_label needs a string 'label'", 400);
    }
    const auto label = request.at("label").get<std::string>();
    const bool allow_new = request.value("allow_new", false);
    return mutate(id, request, {{"op", "submit_label"}, {"label", label}, {"allow_new", allow_new}},
                  [&](Session &s) { return s.submit_label(label, allow_new); });
}

nlohmann::json SessionManager::resolve_challenge(const std::string &id, const nlohmann::json &request) {
    if (!request.is_object() || !request.contains("label") || !request.at("label").is_string()) {
        throw SessionError("bad_request", "resolve_challenge needs a string 'label'", 400);
    }
    const auto label = request.at("label").get<std::string>();
    return mutate(id, request, {{"op", "resolve_challenge"}, {"label", label}},
                  [&](Session &s) { return s.resolve_challenge(label); });
}

nlohmann::json SessionManager::state(const std::string &id, const std::vector<FeatureVector> &grid) const {
    auto entry = find(id);
    std::lock_guard lock(entry->mutex);
    auto out = entry->session->state(grid);
    out["session_id"] = id;
    return out;
}

nlohmann::json SessionManager::snapshot(const std::string &id) const {
    auto entry = find(id);
    std::lock_guard lock(entry->mutex);
    return entry->session->model();
}

void SessionManager::persist_config(const std::string &id, const nlohmann::json &config) const {
    if (!store_) {
        return;
    }
    const auto dir = *store_ / id;
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "config.json");
    out << config.dump(2) << '\n';
}

void SessionManager::persist_operation(const std::string &id, const nlohmann::json &operation) const {
    if (!store_) {
        return;
    }
    std::ofstream out(*store_ / id / "operations.jsonl", std::ios::app);
    out << operation.dump() << '\n';
}

} // namespace isgp
