#include "isgp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace isgp {

namespace {

enum SeedPurpose : std::uint32_t { kFoldSplit = 1, kOracle = 2, kCoins = 3 };

} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::size_t fold, std::uint32_t purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(fold), purpose};
    std::mt19937_64 rng(seq);
    return rng();
}

void validate(const ExperimentConfig &cfg) {
    if (cfg.folds < 2) {
        throw std::invalid_argument("config: folds must be at least 2");
    }
    if (cfg.policies.empty()) {
        throw std::invalid_argument("config: at least one policy is required");
    }
    if (cfg.seeds.empty()) {
        throw std::invalid_argument("config: at least one seed is required");
    }
    if (!(cfg.eta >= 0.0 && cfg.eta < 0.5)) {
        throw std::invalid_argument("config: eta must lie in [0, 0.5)");
    }
    if (!(cfg.rho >= 0.0) || !std::isfinite(cfg.rho)) {
        throw std::invalid_argument("config: rho must be non-negative");
    }
    if (cfg.eval_stride < 1) {
        throw std::invalid_argument("config: eval_stride must be positive");
    }
    validate(cfg.kernel);
    if (const auto *synth = std::get_if<SyntheticSpec>(&cfg.data)) {
        validate(*synth);
    }
}

void to_json(nlohmann::json &j, const ExperimentConfig &cfg) {
    nlohmann::json data;
    if (const auto *synth = std::get_if<SyntheticSpec>(&cfg.data)) {
        data = {{"type", "synthetic"},
                {"n_classes", synth->n_classes},
                {"n_instances", synth->n_instances},
                {"dim", synth->dim},
                {"class_std", synth->class_std},
                {"center_radius", synth->center_radius},
                {"seed", synth->seed}};
    } else {
        const auto &csv = std::get<CsvSource>(cfg.data);
        data = {{"type", "csv"}, {"path", csv.path.string()}, {"label_column", csv.label_column}};
    }
    nlohmann::json policies = nlohmann::json::array();
    for (auto p : cfg.policies) {
        policies.push_back(std::string(to_string(p)));
    }
    j = {{"version", kConfigVersion},
         {"name", cfg.name},
         {"data", std::move(data)},
         {"ordering", std::string(to_string(cfg.ordering))},
         {"eta", cfg.eta},
         {"policies", std::move(policies)},
         {"folds", cfg.folds},
         {"kernel", cfg.kernel},
         {"rho", cfg.rho},
         {"seeds", cfg.seeds},
         {"eval_stride", cfg.eval_stride},
         {"clean_contradictions", cfg.clean_contradictions},
         {"threads", cfg.threads}};
}

void from_json(const nlohmann::json &j, ExperimentConfig &cfg) {
    const int version = j.value("version", kConfigVersion);
    if (version != kConfigVersion) {
        throw std::invalid_argument("config: unsupported version " + std::to_string(version));
    }
    ExperimentConfig out;
    out.name = j.value("name", out.name);
    if (j.contains("data")) {
        const auto &d = j.at("data");
        const auto type = d.value("type", std::string("synthetic"));
        if (type == "synthetic") {
            SyntheticSpec s;
            s.n_classes = d.value("n_classes", s.n_classes);
            s.n_instances = d.value("n_instances", s.n_instances);
            s.dim = d.value("dim", s.dim);
            s.class_std = d.value("class_std", s.class_std);
            s.center_radius = d.value("center_radius", s.center_radius);
            s.seed = d.value("seed", s.seed);
            out.data = s;
        } else if (type == "csv") {
            CsvSource c;
            c.path = d.at("path").get<std::string>();
            c.label_column = d.value("label_column", c.label_column);
            out.data = c;
        } else {
            throw std::invalid_argument("config: unknown data type '" + type + "'");
        }
    }
    if (j.contains("ordering")) {
        out.ordering = parse_ordering(j.at("ordering").get<std::string>());
    }
    out.eta = j.value("eta", out.eta);
    if (j.contains("policies")) {
        out.policies.clear();
        for (const auto &p : j.at("policies")) {
            out.policies.push_back(parse_policy(p.get<std::string>()));
        }
    }
    out.folds = j.value("folds", out.folds);
    if (j.contains("kernel")) {
        out.kernel = j.at("kernel").get<KernelSpec>();
    }
    out.rho = j.value("rho", out.rho);
    if (j.contains("seeds")) {
        out.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    }
    out.eval_stride = j.value("eval_stride", out.eval_stride);
    out.clean_contradictions = j.value("clean_contradictions", out.clean_contradictions);
    out.threads = j.value("threads", out.threads);
    validate(out);
    cfg = std::move(out);
}

ExperimentConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("config: cannot open " + path.string());
    }
    return nlohmann::json::parse(in).get<ExperimentConfig>();
}

Dataset load_dataset(const ExperimentConfig &cfg) {
    if (const auto *synth = std::get_if<SyntheticSpec>(&cfg.data)) {
        return generate_synthetic(*synth);
    }
    return load_csv(std::get<CsvSource>(cfg.data));
}

namespace {

struct EpisodeTask {
    std::uint64_t seed;
    std::size_t fold;
    PolicyKind policy;
    const Fold *split;
};

struct EpisodeOutput {
    std::vector<MetricsRow> rows;
    std::optional<std::string> error;
};

EpisodeOutput run_one(const ExperimentConfig &cfg, const Dataset &data, const std::vector<LabelId> &universe,
                      const EpisodeTask &task) {
    using clock = std::chrono::steady_clock;
    EpisodeOutput out;
    const auto &train = task.split->train;
    const auto &test = task.split->test;

    ImgpModel model(cfg.kernel, cfg.rho, {data.labels[train.front()]});
    SimulatedOracle oracle(
        OracleConfig{cfg.eta, universe, derive_seed(task.seed, task.fold, kOracle), cfg.clean_contradictions});
    CoinRng coins(derive_seed(task.seed, task.fold, kCoins));

    std::vector<LabelId> truths;
    for (auto i : test) {
        truths.push_back(data.labels[i]);
    }
    std::vector<LabelId> predictions(test.size());

    MetricsRow row;
    row.policy = task.policy;
    row.seed = task.seed;
    row.fold = task.fold;
    for (std::size_t r = 0; r < train.size(); ++r) {
        const std::size_t idx = train[r];
        const auto start = clock::now();
        InteractionRecord rec;
        try {
            rec = step(model, r + 1, data.features[idx], data.labels[idx], oracle, task.policy, coins);
        } catch (const NumericError &e) {
            out.error = "round " + std::to_string(r + 1) + ": " + e.what();
            return out;
        }
        const double elapsed = std::chrono::duration<double>(clock::now() - start).count();

        row.round = r + 1;
        row.active_queries += rec.active_coin ? 1 : 0;
        if (rec.challenged()) {
            ++row.contradiction_queries;
            row.mistakes_found += rec.mistake_uncovered() ? 1 : 0;
            if (*rec.annotator_label != data.labels[idx]) {
                ++row.wrong_label_challenges;
                row.recovered_labels += *rec.consensus_label == data.labels[idx] ? 1 : 0;
            }
        }
        row.known_classes = model.known_classes().size();
        row.update_seconds = elapsed;

        const bool last = r + 1 == train.size();
        if (last || (r + 1) % cfg.eval_stride == 0) {
            try {
                for (std::size_t k = 0; k < test.size(); ++k) {
                    predictions[k] = predict(model, data.features[test[k]]).first;
                }
            } catch (const NumericError &e) {
                out.error = "evaluation after round " + std::to_string(r + 1) + ": " + e.what();
                return out;
            }
            row.f1 = macro_f1(predictions, truths, universe);
            out.rows.push_back(row);
        }
    }
    return out;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig &cfg) {
    validate(cfg);
    return run_experiment(cfg, load_dataset(cfg));
}

ExperimentResult run_experiment(const ExperimentConfig &cfg, const Dataset &data) {
    validate(cfg);
    const auto universe = data.classes();

    std::vector<std::vector<Fold>> splits;
    for (auto seed : cfg.seeds) {
        splits.push_back(make_folds(data, cfg.folds, derive_seed(seed, 0, kFoldSplit), cfg.ordering));
    }
    std::vector<EpisodeTask> tasks;
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
        for (std::size_t f = 0; f < cfg.folds; ++f) {
            for (auto policy : cfg.policies) {
                tasks.push_back({cfg.seeds[s], f, policy, &splits[s][f]});
            }
        }
    }

    std::vector<EpisodeOutput> outputs(tasks.size());
    std::size_t n_threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
    n_threads = std::min(n_threads, tasks.size());
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> workers;
        for (std::size_t w = 0; w < n_threads; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < tasks.size(); i = next++) {
                    try {
                        outputs[i] = run_one(cfg, data, universe, tasks[i]);
                    } catch (const std::exception &e) {
                        outputs[i].rows.clear();
                        outputs[i].error = e.what();
                    }
                }
            });
        }
    }

    ExperimentResult result;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (outputs[i].error) {
            std::clog << "warning: episode (policy " << to_string(tasks[i].policy) << ", seed " << tasks[i].seed
                      << ", fold " << tasks[i].fold << ") failed and is excluded: " << *outputs[i].error << '\n';
            result.failures.push_back({tasks[i].policy, tasks[i].seed, tasks[i].fold, *outputs[i].error});
            continue;
        }
        result.rows.insert(result.rows.end(), outputs[i].rows.begin(), outputs[i].rows.end());
    }
    return result;
}

namespace {

constexpr const char *kTableHeader = "policy,seed,fold,round,active_queries,contradiction_queries,mistakes_found,"
                                     "known_classes,wrong_label_challenges,recovered_labels,f1";

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

template<class T>
T parse_number(const std::string &cell) {
    T v{};
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw std::invalid_argument("results table: bad numeric cell '" + cell + "'");
    }
    return v;
}

} // namespace

void write_metrics_table(std::ostream &out, const std::vector<MetricsRow> &rows) {
    out << kTableHeader << '\n';
    for (const auto &r : rows) {
        out << to_string(r.policy) << ',' << r.seed << ',' << r.fold << ',' << r.round << ',' << r.active_queries
            << ',' << r.contradiction_queries << ',' << r.mistakes_found << ',' << r.known_classes << ','
            << r.wrong_label_challenges << ',' << r.recovered_labels << ',' << format_double(r.f1) << '\n';
    }
}

std::vector<MetricsRow> read_metrics_table(std::istream &in) {
    std::string line;
    if (!std::getline(in, line) || line != kTableHeader) {
        throw std::invalid_argument("results table: missing or unexpected header");
    }
    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(line);
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (cells.size() != 11) {
            throw std::invalid_argument("results table: expected 11 columns, got " + std::to_string(cells.size()));
        }
        MetricsRow r;
        r.policy = parse_policy(cells[0]);
        r.seed = parse_number<std::uint64_t>(cells[1]);
        r.fold = parse_number<std::size_t>(cells[2]);
        r.round = parse_number<std::size_t>(cells[3]);
        r.active_queries = parse_number<std::size_t>(cells[4]);
        r.contradiction_queries = parse_number<std::size_t>(cells[5]);
        r.mistakes_found = parse_number<std::size_t>(cells[6]);
        r.known_classes = parse_number<std::size_t>(cells[7]);
        r.wrong_label_challenges = parse_number<std::size_t>(cells[8]);
        r.recovered_labels = parse_number<std::size_t>(cells[9]);
        r.f1 = parse_number<double>(cells[10]);
        rows.push_back(r);
    }
    return rows;
}

void write_timings(std::ostream &out, const std::vector<MetricsRow> &rows) {
    out << "policy,seed,fold,round,update_seconds\n";
    for (const auto &r : rows) {
        out << to_string(r.policy) << ',' << r.seed << ',' << r.fold << ',' << r.round << ','
            << format_double(r.update_seconds) << '\n';
    }
}

std::vector<MetricsRow> final_rows(const std::vector<MetricsRow> &rows) {
    std::vector<MetricsRow> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const bool last = i + 1 == rows.size() || rows[i + 1].policy != rows[i].policy ||
                          rows[i + 1].seed != rows[i].seed || rows[i + 1].fold != rows[i].fold ||
                          rows[i + 1].round <= rows[i].round;
        if (last) {
            out.push_back(rows[i]);
        }
    }
    return out;
}

namespace {

std::pair<double, double> mean_stderr(const std::vector<double> &xs) {
    if (xs.empty()) {
        return {0.0, 0.0};
    }
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) {
        mean += x;
    }
    mean /= n;
    if (xs.size() < 2) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - mean) * (x - mean);
    }
    return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

} // namespace

std::map<PolicyKind, PolicySummary> summarize(const std::vector<MetricsRow> &rows) {
    std::map<PolicyKind, std::vector<MetricsRow>> by_policy;
    for (const auto &r : final_rows(rows)) {
        by_policy[r.policy].push_back(r);
    }
    std::map<PolicyKind, PolicySummary> out;
    for (const auto &[policy, finals] : by_policy) {
        PolicySummary s;
        s.episodes = finals.size();
        std::vector<double> f1;
        for (const auto &r : finals) {
            f1.push_back(r.f1);
            s.active_mean += static_cast<double>(r.active_queries);
            s.contradiction_mean += static_cast<double>(r.contradiction_queries);
            s.mistakes_mean += static_cast<double>(r.mistakes_found);
        }
        const double n = static_cast<double>(finals.size());
        std::tie(s.f1_mean, s.f1_stderr) = mean_stderr(f1);
        s.active_mean /= n;
        s.contradiction_mean /= n;
        s.mistakes_mean /= n;
        s.total_queries_mean = s.active_mean + s.contradiction_mean;
        out.emplace(policy, s);
    }
    return out;
}

std::vector<CurvePoint> curve(const std::vector<MetricsRow> &rows, PolicyKind policy,
                              const std::function<double(const MetricsRow &)> &metric) {
    std::map<std::size_t, std::vector<double>> by_round;
    for (const auto &r : rows) {
        if (r.policy == policy) {
            by_round[r.round].push_back(metric(r));
        }
    }
    std::vector<CurvePoint> out;
    for (const auto &[round, values] : by_round) {
        const auto [mean, se] = mean_stderr(values);
        out.push_back({round, mean, se});
    }
    return out;
}

} // namespace isgp
