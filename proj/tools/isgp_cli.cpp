// Command-line front end: synthetic data generation, cross-validated runs,
// report rendering and the live annotation service.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "isgp/experiment.hpp"
#include "isgp/server.hpp"

namespace {

struct Overrides {
    std::string config;
    std::string out;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> policies;
    std::optional<double> eta;
    std::string ordering;
    std::optional<std::size_t> folds;
    std::optional<std::size_t> threads;
};

isgp::ExperimentConfig resolve_config(const Overrides &o) {
    isgp::ExperimentConfig cfg = o.config.empty() ? isgp::ExperimentConfig{} : isgp::load_config(o.config);
    if (!o.seeds.empty()) {
        cfg.seeds = o.seeds;
    }
    if (!o.policies.empty()) {
        cfg.policies.clear();
        for (const auto &p : o.policies) {
            cfg.policies.push_back(isgp::parse_policy(p));
        }
    }
    if (o.eta) {
        cfg.eta = *o.eta;
    }
    if (!o.ordering.empty()) {
        cfg.ordering = isgp::parse_ordering(o.ordering);
    }
    if (o.folds) {
        cfg.folds = *o.folds;
    }
    if (o.threads) {
        cfg.threads = *o.threads;
    }
    isgp::validate(cfg);
    return cfg;
}

void print_summary(const std::vector<isgp::MetricsRow> &rows) {
    std::cout << std::left << std::setw(10) << "policy" << std::right << std::setw(9) << "episodes" << std::setw(10)
              << "F1" << std::setw(9) << "+-se" << std::setw(9) << "active" << std::setw(9) << "contra"
              << std::setw(9) << "mistake" << std::setw(9) << "total" << '\n';
    std::cout << std::fixed << std::setprecision(3);
    for (const auto &[policy, s] : isgp::summarize(rows)) {
        std::cout << std::left << std::setw(10) << isgp::to_string(policy) << std::right << std::setw(9) << s.episodes
                  << std::setw(10) << s.f1_mean << std::setw(9) << s.f1_stderr << std::setw(9) << s.active_mean
                  << std::setw(9) << s.contradiction_mean << std::setw(9) << s.mistakes_mean << std::setw(9)
                  << s.total_queries_mean << '\n';
    }
}

void write_file(const std::filesystem::path &path, const std::function<void(std::ostream &)> &writer) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    writer(out);
}

isgp::SessionServer *g_server = nullptr;

void on_signal(int) {
    if (g_server != nullptr) {
        g_server->stop();
    }
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Incremental skeptical Gaussian process classifier"};
    app.require_subcommand(1);

    Overrides o;
    auto add_common = [&o](CLI::App *cmd) {
        cmd->add_option("--config", o.config, "Experiment configuration (JSON)")->check(CLI::ExistingFile);
        cmd->add_option("--seed", o.seeds, "Seed(s); replaces the configured seed list");
        cmd->add_option("--policies", o.policies, "Policies: isgp, gp_never, gp_always")->delimiter(',');
        cmd->add_option("--eta", o.eta, "Annotator noise rate in [0, 0.5)");
        cmd->add_option("--ordering", o.ordering, "Instance ordering: random | sequential");
        cmd->add_option("--folds", o.folds, "Number of cross-validation folds");
    };

    auto *generate = app.add_subcommand("generate", "Write the synthetic dataset as CSV");
    add_common(generate);
    generate->add_option("--out", o.out, "Output CSV path (stdout when omitted)");

    auto *run = app.add_subcommand("run", "Run a cross-validated experiment and write the results table");
    add_common(run);
    run->add_option("--out", o.out, "Output directory")->required();
    run->add_option("--threads", o.threads, "Worker threads (0 = all cores)");

    std::string results;
    std::string setting;
    auto *report = app.add_subcommand("report", "Render figures and a summary from a results table");
    report->add_option("results", results, "Results table (metrics.csv)")->required()->check(CLI::ExistingFile);
    report->add_option("--out", o.out, "Output directory")->required();
    report->add_option("--name", setting, "Setting name used in figure titles and file names");

    std::string host = "127.0.0.1";
    int port = 8080;
    std::string store;
    auto *session = app.add_subcommand("session", "Serve live annotation sessions over HTTP");
    session->add_option("--host", host, "Bind address");
    session->add_option("--port", port, "Port (0 picks a free one)");
    session->add_option("--store", store, "Directory for persisted sessions");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            const auto cfg = resolve_config(o);
            const auto *spec = std::get_if<isgp::SyntheticSpec>(&cfg.data);
            if (spec == nullptr) {
                throw std::invalid_argument("generate needs a synthetic data section");
            }
            auto s = *spec;
            if (!o.seeds.empty()) {
                s.seed = o.seeds.front();
            }
            const auto data = isgp::generate_synthetic(s);
            if (o.out.empty()) {
                isgp::write_csv(std::cout, data);
            } else {
                write_file(o.out, [&](std::ostream &out) { isgp::write_csv(out, data); });
            }
        } else if (run->parsed()) {
            const auto cfg = resolve_config(o);
            const std::filesystem::path dir(o.out);
            std::filesystem::create_directories(dir);
            const auto result = isgp::run_experiment(cfg);
            write_file(dir / "config.json", [&](std::ostream &out) { out << nlohmann::json(cfg).dump(2) << '\n'; });
            write_file(dir / "metrics.csv", [&](std::ostream &out) { isgp::write_metrics_table(out, result.rows); });
            write_file(dir / "timings.csv", [&](std::ostream &out) { isgp::write_timings(out, result.rows); });
            if (!result.failures.empty()) {
                write_file(dir / "failures.txt", [&](std::ostream &out) {
                    for (const auto &f : result.failures) {
                        out << isgp::to_string(f.policy) << ',' << f.seed << ',' << f.fold << ',' << f.message
                            << '\n';
                    }
                });
            }
            std::cout << cfg.name << ": " << result.rows.size() << " rows, " << result.failures.size()
                      << " failed episodes -> " << (dir / "metrics.csv").string() << '\n';
            print_summary(result.rows);
        } else if (report->parsed()) {
            std::ifstream in(results);
            const auto rows = isgp::read_metrics_table(in);
            if (setting.empty()) {
                setting = std::filesystem::path(results).parent_path().filename().string();
                if (setting.empty()) {
                    setting = "experiment";
                }
            }
            const auto files = isgp::emit_report(rows, o.out, setting);
            std::cout << "table: " << files.table.string() << '\n';
            for (const auto &f : files.figures) {
                std::cout << "figure: " << f.string() << '\n';
            }
            print_summary(rows);
        } else if (session->parsed()) {
            auto manager = store.empty() ? std::make_unique<isgp::SessionManager>()
                                         : std::make_unique<isgp::SessionManager>(store);
            isgp::SessionServer server(*manager);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            if (port == 0) {
                port = server.bind_to_any_port(host);
                std::cout << "listening on http://" << host << ':' << port << std::endl;
                server.listen_after_bind();
            } else {
                std::cout << "listening on http://" << host << ':' << port << std::endl;
                if (!server.listen(host, port)) {
                    std::cerr << "error: cannot listen on " << host << ':' << port << '\n';
                    return 1;
                }
            }
            g_server = nullptr;
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
