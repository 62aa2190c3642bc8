#ifndef ISGP_EXPERIMENT_HPP
#define ISGP_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "isgp/dataset.hpp"
#include "isgp/kernels.hpp"
#include "isgp/skeptic.hpp"

namespace isgp {

inline constexpr int kConfigVersion = 1;

struct ExperimentConfig {
    std::string name = "experiment";
    std::variant<SyntheticSpec, CsvSource> data = SyntheticSpec{};
    Ordering ordering = Ordering::RandomShuffle;
    double eta = 0.1;
    std::vector<PolicyKind> policies{PolicyKind::Isgp, PolicyKind::GpNever, PolicyKind::GpAlways};
    std::size_t folds = 10;
    KernelSpec kernel = SquaredExponential{2.0};
    double rho = 1e-8;
    std::vector<std::uint64_t> seeds{0};
    // Held-out F1 is evaluated every `eval_stride` rounds and on the last round.
    std::size_t eval_stride = 1;
    bool clean_contradictions = false;
    // 0 picks the hardware concurrency.
    std::size_t threads = 0;
};

void validate(const ExperimentConfig &cfg);
void to_json(nlohmann::json &j, const ExperimentConfig &cfg);
void from_json(const nlohmann::json &j, ExperimentConfig &cfg);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path &path);

[[nodiscard]] Dataset load_dataset(const ExperimentConfig &cfg);

// Cumulative state of one episode after round `round`.
struct MetricsRow {
    PolicyKind policy = PolicyKind::Isgp;
    std::uint64_t seed = 0;
    std::size_t fold = 0;
    std::size_t round = 0;
    std::size_t active_queries = 0;
    std::size_t contradiction_queries = 0;
    // Contradictions whose answer differed from the contested label.
    std::size_t mistakes_found = 0;
    std::size_t known_classes = 0;
    // Contradictions issued against a wrong annotator label, and how many of
    // those ended with the true label as consensus.
    std::size_t wrong_label_challenges = 0;
    std::size_t recovered_labels = 0;
    double f1 = 0.0;
    // Excluded from the results table so that it stays reproducible.
    double update_seconds = 0.0;

    [[nodiscard]] std::size_t total_queries() const { return active_queries + contradiction_queries; }
};

struct EpisodeFailure {
    PolicyKind policy = PolicyKind::Isgp;
    std::uint64_t seed = 0;
    std::size_t fold = 0;
    std::string message;
};

struct ExperimentResult {
    std::vector<MetricsRow> rows;
    std::vector<EpisodeFailure> failures;
};

// Every (seed, fold, policy) episode. Policies sharing a seed and fold see the
// same stream, oracle seed and coin seed. Output order is (seed, fold, policy, round)
// regardless of how many threads run the episodes.
[[nodiscard]] ExperimentResult run_experiment(const ExperimentConfig &cfg);
[[nodiscard]] ExperimentResult run_experiment(const ExperimentConfig &cfg, const Dataset &data);

// Deterministic sub-seed for one purpose of one episode.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::size_t fold, std::uint32_t purpose);

// Results table: comma-separated, header row, one MetricsRow per line.
void write_metrics_table(std::ostream &out, const std::vector<MetricsRow> &rows);
[[nodiscard]] std::vector<MetricsRow> read_metrics_table(std::istream &in);
// Per-round update wall-times, keyed like the results table.
void write_timings(std::ostream &out, const std::vector<MetricsRow> &rows);

// Rows holding each episode's last round.
[[nodiscard]] std::vector<MetricsRow> final_rows(const std::vector<MetricsRow> &rows);

struct PolicySummary {
    std::size_t episodes = 0;
    double f1_mean = 0.0;
    double f1_stderr = 0.0;
    double active_mean = 0.0;
    double contradiction_mean = 0.0;
    double mistakes_mean = 0.0;
    double total_queries_mean = 0.0;
};

[[nodiscard]] std::map<PolicyKind, PolicySummary> summarize(const std::vector<MetricsRow> &rows);

struct CurvePoint {
    std::size_t round = 0;
    double mean = 0.0;
    double std_error = 0.0;
};

// Mean and standard error across episodes of one metric, per round.
[[nodiscard]] std::vector<CurvePoint> curve(const std::vector<MetricsRow> &rows, PolicyKind policy,
                                            const std::function<double(const MetricsRow &)> &metric);

struct ReportFiles {
    std::filesystem::path table;
    std::vector<std::filesystem::path> figures;
};

// Writes the results table plus, per setting, an F1 figure and a cumulative-query
// figure (SVG) with standard-error bands.
ReportFiles emit_report(const std::vector<MetricsRow> &rows, const std::filesystem::path &out_dir,
                        const std::string &setting = "experiment");

} // namespace isgp

#endif // ISGP_EXPERIMENT_HPP
