#include <doctest.h>

#include <algorithm>
#include <map>

#include "isgp/oracle.hpp"

using namespace isgp;

namespace {

std::vector<LabelId> universe(std::uint32_t n) {
    std::vector<LabelId> out;
    for (std::uint32_t i = 0; i < n; ++i) {
        out.emplace_back(i);
    }
    return out;
}

const FeatureVector kX = FeatureVector::Zero(2);

} // namespace

TEST_CASE("noise-free oracle always answers the truth") {
    SimulatedOracle oracle({0.0, universe(6), 1, false});
    for (std::uint32_t i = 0; i < 600; ++i) {
        const LabelId truth(i % 6);
        CHECK(oracle.label_query(kX, truth) == truth);
        CHECK(oracle.contradiction_query(kX, truth, LabelId((i + 1) % 6), truth) == truth);
    }
}

TEST_CASE("labeling noise rate and uniform wrong answers") {
    SimulatedOracle oracle({0.4, universe(6), 2024, false});
    const LabelId truth(2);
    const int draws = 100000;
    std::map<LabelId, int> wrong;
    for (int i = 0; i < draws; ++i) {
        const auto a = oracle.label_query(kX, truth);
        if (a != truth) {
            ++wrong[a];
        }
    }
    int total_wrong = 0;
    for (const auto &[l, n] : wrong) {
        total_wrong += n;
    }
    CHECK(static_cast<double>(total_wrong) / draws == doctest::Approx(0.4).epsilon(0.025));
    CHECK(wrong.size() == 5);
    CHECK(wrong.count(truth) == 0);
    const double expected = total_wrong / 5.0;
    double chi2 = 0.0;
    for (const auto &[l, n] : wrong) {
        chi2 += (n - expected) * (n - expected) / expected;
    }
    // chi-square critical value, 4 degrees of freedom, 1% level
    CHECK(chi2 < 13.2767);
}

TEST_CASE("contradiction answers") {
    SimulatedOracle oracle({0.4, universe(6), 5, false});
    const LabelId truth(1);
    for (int i = 0; i < 1000; ++i) {
        CHECK(oracle.contradiction_query(kX, truth, truth, LabelId(3)) == truth);
    }
    const int draws = 100000;
    int right = 0;
    for (int i = 0; i < draws; ++i) {
        right += oracle.contradiction_query(kX, truth, LabelId(4), LabelId(3)) == truth ? 1 : 0;
    }
    CHECK(std::abs(static_cast<double>(right) / draws - 0.6) <= 0.01);
    CHECK_THROWS_AS((void)oracle.contradiction_query(kX, truth, LabelId(3), LabelId(3)), std::invalid_argument);
}

TEST_CASE("clean contradictions toggle") {
    SimulatedOracle oracle({0.4, universe(6), 5, true});
    for (int i = 0; i < 2000; ++i) {
        CHECK(oracle.contradiction_query(kX, LabelId(0), LabelId(4), LabelId(3)) == LabelId(0));
    }
}

TEST_CASE("oracle configuration errors") {
    CHECK_THROWS_AS(SimulatedOracle({0.5, universe(6), 0, false}), std::invalid_argument);
    CHECK_THROWS_AS(SimulatedOracle({-0.1, universe(6), 0, false}), std::invalid_argument);
    CHECK_THROWS_AS(SimulatedOracle({0.1, {}, 0, false}), std::invalid_argument);
    SimulatedOracle single({0.2, universe(1), 0, false});
    CHECK_THROWS_AS((void)single.label_query(kX, LabelId(0)), std::invalid_argument);
    SimulatedOracle fine({0.0, universe(1), 0, false});
    CHECK(fine.label_query(kX, LabelId(0)) == LabelId(0));
    SimulatedOracle six({0.2, universe(6), 0, false});
    CHECK_THROWS_AS((void)six.label_query(kX, LabelId(9)), std::invalid_argument);
}

TEST_CASE("oracle determinism and membership") {
    SimulatedOracle a({0.3, universe(4), 77, false});
    SimulatedOracle b({0.3, universe(4), 77, false});
    const auto members = universe(4);
    for (std::uint32_t i = 0; i < 5000; ++i) {
        const LabelId truth(i % 4);
        const auto x = a.label_query(kX, truth);
        CHECK(x == b.label_query(kX, truth));
        CHECK(std::find(members.begin(), members.end(), x) != members.end());
        const auto y = a.contradiction_query(kX, truth, LabelId((i + 1) % 4), LabelId((i + 2) % 4));
        CHECK(y == b.contradiction_query(kX, truth, LabelId((i + 1) % 4), LabelId((i + 2) % 4)));
        CHECK(std::find(members.begin(), members.end(), y) != members.end());
    }
}
