#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "isgp/experiment.hpp"

namespace isgp {

namespace {

struct Series {
    std::string label;
    std::string color;
    std::string dash; // SVG stroke-dasharray, empty for solid
    std::vector<CurvePoint> points;
};

const char *policy_color(PolicyKind p) {
    switch (p) {
    case PolicyKind::Isgp:
        return "#d62728";
    case PolicyKind::GpNever:
        return "#1f77b4";
    case PolicyKind::GpAlways:
        return "#2ca02c";
    }
    return "#000000";
}

// Minimal line chart: axes, ticks, mean lines and +/- one standard-error bands.
class SvgChart {
public:
    SvgChart(std::string title, std::string x_label, std::string y_label)
        : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

    void add(Series s) { series_.push_back(std::move(s)); }

    void write(const std::filesystem::path &path) const {
        std::ofstream out(path);
        if (!out) {
            throw std::runtime_error("report: cannot write " + path.string());
        }
        out << render();
    }

private:
    static constexpr double kWidth = 640, kHeight = 420;
    static constexpr double kLeft = 64, kRight = 160, kTop = 36, kBottom = 52;

    [[nodiscard]] std::string render() const {
        double x_max = 1.0;
        double y_min = 0.0;
        double y_max = 1e-9;
        for (const auto &s : series_) {
            for (const auto &p : s.points) {
                x_max = std::max(x_max, static_cast<double>(p.round));
                y_max = std::max(y_max, p.mean + p.std_error);
                y_min = std::min(y_min, p.mean - p.std_error);
            }
        }
        y_max = nice_ceiling(y_max);
        const double plot_w = kWidth - kLeft - kRight;
        const double plot_h = kHeight - kTop - kBottom;
        auto sx = [&](double x) { return kLeft + plot_w * x / x_max; };
        auto sy = [&](double y) { return kTop + plot_h * (1.0 - (y - y_min) / (y_max - y_min)); };

        std::ostringstream o;
        o.precision(6);
        o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
          << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
        o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        o << "<text x=\"" << kLeft << "\" y=\"20\" font-size=\"13\">" << title_ << "</text>\n";
        o << "<line x1=\"" << kLeft << "\" y1=\"" << sy(y_min) << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
          << sy(y_min) << "\" stroke=\"black\"/>\n";
        o << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
          << "\" stroke=\"black\"/>\n";
        for (int i = 0; i <= 5; ++i) {
            const double xv = x_max * i / 5.0;
            const double yv = y_min + (y_max - y_min) * i / 5.0;
            o << "<text x=\"" << sx(xv) << "\" y=\"" << kTop + plot_h + 16 << "\" text-anchor=\"middle\">"
              << std::lround(xv) << "</text>\n";
            o << "<text x=\"" << kLeft - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << yv
              << "</text>\n";
            o << "<line x1=\"" << kLeft << "\" y1=\"" << sy(yv) << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
              << sy(yv) << "\" stroke=\"#e0e0e0\"/>\n";
        }
        o << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
          << x_label_ << "</text>\n";
        o << "<text transform=\"translate(16," << kTop + plot_h / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
          << y_label_ << "</text>\n";

        double legend_y = kTop + 8;
        for (const auto &s : series_) {
            if (s.points.empty()) {
                continue;
            }
            std::ostringstream band;
            band.precision(6);
            for (const auto &p : s.points) {
                band << sx(static_cast<double>(p.round)) << ',' << sy(p.mean + p.std_error) << ' ';
            }
            for (auto it = s.points.rbegin(); it != s.points.rend(); ++it) {
                band << sx(static_cast<double>(it->round)) << ',' << sy(it->mean - it->std_error) << ' ';
            }
            o << "<polygon points=\"" << band.str() << "\" fill=\"" << s.color
              << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
            o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
            if (!s.dash.empty()) {
                o << " stroke-dasharray=\"" << s.dash << "\"";
            }
            o << " points=\"";
            for (const auto &p : s.points) {
                o << sx(static_cast<double>(p.round)) << ',' << sy(p.mean) << ' ';
            }
            o << "\"/>\n";
            const double lx = kLeft + plot_w + 12;
            o << "<line x1=\"" << lx << "\" y1=\"" << legend_y << "\" x2=\"" << lx + 22 << "\" y2=\"" << legend_y
              << "\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
            if (!s.dash.empty()) {
                o << " stroke-dasharray=\"" << s.dash << "\"";
            }
            o << "/>\n<text x=\"" << lx + 28 << "\" y=\"" << legend_y + 4 << "\">" << s.label << "</text>\n";
            legend_y += 16;
        }
        o << "</svg>\n";
        return o.str();
    }

    static double nice_ceiling(double v) {
        if (v <= 1.0) {
            return 1.0;
        }
        const double mag = std::pow(10.0, std::floor(std::log10(v)));
        for (double step : {1.0, 2.0, 2.5, 5.0, 10.0}) {
            if (step * mag >= v) {
                return step * mag;
            }
        }
        return 10.0 * mag;
    }

    std::string title_;
    std::string x_label_;
    std::string y_label_;
    std::vector<Series> series_;
};

} // namespace

ReportFiles emit_report(const std::vector<MetricsRow> &rows, const std::filesystem::path &out_dir,
                        const std::string &setting) {
    if (rows.empty()) {
        throw std::invalid_argument("report: no rows");
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw std::runtime_error("report: cannot create " + out_dir.string() + ": " + ec.message());
    }

    ReportFiles files;
    files.table = out_dir / "metrics.csv";
    {
        std::ofstream out(files.table);
        if (!out) {
            throw std::runtime_error("report: cannot write " + files.table.string());
        }
        write_metrics_table(out, rows);
    }

    std::vector<PolicyKind> policies;
    for (const auto &r : rows) {
        if (std::find(policies.begin(), policies.end(), r.policy) == policies.end()) {
            policies.push_back(r.policy);
        }
    }
    std::sort(policies.begin(), policies.end());

    SvgChart f1_chart(setting + ": held-out macro F1", "round", "F1");
    SvgChart query_chart(setting + ": cumulative queries", "round", "# queries");
    for (auto policy : policies) {
        const std::string name(to_string(policy));
        const std::string color = policy_color(policy);
        f1_chart.add({name, color, "", curve(rows, policy, [](const MetricsRow &r) { return r.f1; })});
        query_chart.add({name + " active", color, "8,3,2,3",
                         curve(rows, policy, [](const MetricsRow &r) { return double(r.active_queries); })});
        query_chart.add({name + " contradiction", color, "",
                         curve(rows, policy, [](const MetricsRow &r) { return double(r.contradiction_queries); })});
        query_chart.add({name + " mistake found", color, "5,4",
                         curve(rows, policy, [](const MetricsRow &r) { return double(r.mistakes_found); })});
    }
    files.figures.push_back(out_dir / (setting + "_f1.svg"));
    files.figures.push_back(out_dir / (setting + "_queries.svg"));
    f1_chart.write(files.figures[0]);
    query_chart.write(files.figures[1]);
    return files;
}

} // namespace isgp
