#include "generators.hpp"
#include "oracles.hpp"

#include <wattledger/error.hpp>
#include <wattledger/proxy.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace wattledger;

namespace {

LoadlineMeta meta(std::string arch = "x86", double tdp = 200, double clock = 3.0, std::string workload = "ssj")
{
    return {std::move(arch), tdp, clock, std::move(workload), std::nullopt};
}

Loadline line(std::vector<LoadlinePoint> pts, LoadlineMeta m = meta())
{
    return Loadline(std::move(pts), std::move(m));
}

UtilizationTrace util(std::vector<UtilizationSample> s, Metadata md = {})
{
    return UtilizationTrace("u", std::move(s), 1, 1, std::move(md));
}

} // namespace

TEST(Loadline, RejectsMissingIdleOrFullPoint)
{
    EXPECT_THROW(line({{0.1, 50}, {1, 200}}), usage_error);
    EXPECT_THROW(line({{0, 50}, {0.9, 200}}), usage_error);
    EXPECT_THROW(line({{0, 50}, {0.5, 40}, {1, 200}}), usage_error);
    EXPECT_THROW(line({{0, 50}, {0.5, 60}, {0.5, 70}, {1, 200}}), usage_error);
    EXPECT_THROW(line({{0, 50}, {1, 200}}, meta("x", 0)), usage_error);
}

TEST(LoadlinePower, Midpoint)
{
    EXPECT_EQ(loadline_power(line({{0, 50}, {1, 200}}), 0.5).watts(), 125.0);
}

TEST(LoadlinePower, ExactAtPoints)
{
    const auto ll = line({{0, 50}, {0.3, 97.3}, {0.5, 120}, {1, 200}});
    for (const auto& p : ll.points())
        EXPECT_EQ(loadline_power(ll, p.utilization).watts(), p.watts);
}

TEST(LoadlinePower, SecondSegment)
{
    EXPECT_EQ(loadline_power(line({{0, 50}, {0.5, 120}, {1, 200}}), 0.75).watts(), 160.0);
}

TEST(LoadlinePower, OutOfRangeRejected)
{
    const auto ll = line({{0, 50}, {1, 200}});
    EXPECT_THROW(loadline_power(ll, -0.01), usage_error);
    EXPECT_THROW(loadline_power(ll, 1.01), usage_error);
}

TEST(LoadlineProperty, DenseOracleAndBounds)
{
    gen::Rng r(100);
    for (int k = 0; k < 30; ++k) {
        const auto ll = gen::loadline(r);
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : ll.points())
            pts.emplace_back(p.utilization, p.watts);
        double prev = -1.0;
        for (int i = 0; i <= 1000; ++i) {
            const double u = i / 1000.0;
            const double w = loadline_power(ll, u).watts();
            const double ref = oracle::loadline_dense(pts, u);
            EXPECT_LE(std::abs(w - ref), 1e-12 * ref);
            EXPECT_GE(w, ll.min_watts());
            EXPECT_LE(w, ll.max_watts());
            EXPECT_GE(w, prev); // monotone
            prev = w;
        }
    }
}

TEST(LoadlineInverse, FlatSegmentsTakeLowestUtilization)
{
    const auto ll = line({{0, 50}, {0.25, 100}, {0.5, 100}, {1, 200}});
    EXPECT_EQ(loadline_inverse(ll, 100), 0.25);
    EXPECT_EQ(loadline_inverse(ll, 50), 0.0);
    EXPECT_EQ(loadline_inverse(line({{0, 50}, {0.5, 120}, {1, 200}}), 160), 0.75);
    EXPECT_THROW(loadline_inverse(ll, 201), data_error);
}

TEST(EnergyFromUtilization, FullLoad)
{
    const auto e = energy_from_utilization(util({{0, 1}, {60, 1}}), line({{0, 50}, {1, 200}}), {0, 60});
    EXPECT_EQ(e.joules, 12000.0);
    EXPECT_EQ(e.method, EstimationMethod::proxy_loadline);
    EXPECT_FALSE(e.notes.empty());
}

TEST(EnergyFromUtilization, Idle)
{
    EXPECT_EQ(energy_from_utilization(util({{0, 0}, {90, 0}}), line({{0, 50}, {1, 200}}), {0, 90}).joules, 4500.0);
}

TEST(EnergyFromUtilization, TwoPhases)
{
    const auto e = energy_from_utilization(util({{0, 0}, {30, 1}, {60, 1}}), line({{0, 50}, {1, 200}}), {0, 60});
    EXPECT_EQ(e.joules, 7500.0);
}

TEST(EnergyFromUtilization, UnnormalizedRejected)
{
    EXPECT_THROW(energy_from_utilization(util({{0, 1.5}, {1, 1}}), line({{0, 50}, {1, 200}}), {0, 1}), usage_error);
}

TEST(EnergyFromUtilization, WorkloadMismatchNoted)
{
    const auto e = energy_from_utilization(util({{0, 0.5}, {10, 0.5}}, {{"workload", "training"}}),
                                           line({{0, 50}, {1, 200}}), {0, 10});
    bool mismatch = false;
    for (const auto& n : e.notes)
        mismatch |= n.find("training") != std::string::npos;
    EXPECT_TRUE(mismatch);
}

TEST(EnergyFromUtilizationProperty, ConstantUtilizationIsPowerTimesDuration)
{
    gen::Rng r(6);
    for (int trial = 0; trial < 200; ++trial) {
        const auto ll = gen::loadline(r);
        const double u = r.uniform(0, 1);
        const double d = r.integer(1, 10'000);
        const auto e = energy_from_utilization(util({{0, u}, {d, u}}), ll, {0, d});
        EXPECT_EQ(e.joules, loadline_power(ll, u).watts() * d);
    }
}

TEST(Hyperthread, Normalizes)
{
    EXPECT_EQ(normalize_hyperthread_utilization(600, 8).fraction, 0.75);
    EXPECT_FALSE(normalize_hyperthread_utilization(600, 8).warning);
    EXPECT_EQ(normalize_hyperthread_utilization(0, 8).fraction, 0.0);
    const auto over = normalize_hyperthread_utilization(1600, 8);
    EXPECT_EQ(over.fraction, 1.0);
    EXPECT_TRUE(over.warning);
    EXPECT_THROW(normalize_hyperthread_utilization(10, 0), usage_error);
}

TEST(Hyperthread, TraceNormalization)
{
    const UtilizationTrace percent("u", {{0, 600}, {1, 1600}}, 8, 2);
    std::vector<std::string> warnings;
    const auto n = normalize_utilization_trace(percent, &warnings);
    EXPECT_EQ(n.samples()[0].utilization, 0.75);
    EXPECT_EQ(n.samples()[1].utilization, 1.0);
    EXPECT_EQ(warnings.size(), 1u);
}

TEST(TdpBound, Values)
{
    SystemDescriptor xeon{"x86", Power(200), 3.0, std::nullopt};
    const auto e = tdp_energy_bound(xeon, 3600);
    EXPECT_EQ(e.joules, 720'000.0);
    EXPECT_EQ(e.method, EstimationMethod::tdp_bound);
    EXPECT_FALSE(e.notes.empty());
    SystemDescriptor v100{"volta", Power(250), 1.2, std::nullopt};
    EXPECT_EQ(tdp_energy_bound(v100, 60).joules, 15'000.0);
    EXPECT_EQ(tdp_energy_bound(v100, 0).joules, 0.0);
}

TEST(SelectLoadline, DominantMatchWins)
{
    const std::vector<Loadline> cat{line({{0, 10}, {1, 90}}, meta("arm", 95)),
                                    line({{0, 50}, {1, 200}}, meta("x86", 200))};
    const auto [best, score] = select_loadline(cat, {"x86", Power(200), 3.0, std::nullopt});
    EXPECT_EQ(best.meta().architecture, "x86");
    EXPECT_GT(score, loadline_score(cat[0], {"x86", Power(200), 3.0, std::nullopt}));
}

TEST(SelectLoadline, IdenticalEntriesBreakTiesLexicographically)
{
    const std::vector<Loadline> cat{line({{0, 50}, {1, 200}}, meta("x86", 200, 3.0, "zeta")),
                                    line({{0, 50}, {1, 200}}, meta("x86", 200, 3.0, "alpha"))};
    const SystemDescriptor d{"x86", Power(200), 3.0, std::nullopt};
    EXPECT_EQ(select_loadline(cat, d).first.meta().workload_name, "alpha");
    const std::vector<Loadline> reversed{cat[1], cat[0]};
    EXPECT_EQ(select_loadline(reversed, d).first.meta().workload_name, "alpha");
}

TEST(SelectLoadline, CloserTdpWins)
{
    const std::vector<Loadline> cat{line({{0, 40}, {1, 150}}, meta("x86", 150)),
                                    line({{0, 50}, {1, 205}}, meta("x86", 205))};
    const auto [best, score] = select_loadline(cat, {"x86", Power(200), 3.0, std::nullopt});
    EXPECT_EQ(best.meta().tdp_watts, 205.0);
    // 4 (arch) + 2 * (1 - 5/200) + 1 (clock) = 6.95
    EXPECT_DOUBLE_EQ(score, 6.95);
}

TEST(SelectLoadline, EmptyCatalogRejected)
{
    EXPECT_THROW(select_loadline({}, {"x86", Power(200), 3.0, std::nullopt}), usage_error);
}

TEST(Calibration, CodeCarbonFactor)
{
    EnergyEstimate e;
    e.joules = 3.6e6;
    e.interval = {0, 3600};
    const auto c = apply_calibration(e, {1.059, "wattmeter comparison"});
    EXPECT_NEAR(c.joules, 3.8124e6, 1e-9 * 3.8124e6);
    bool noted = false;
    for (const auto& n : c.notes)
        noted |= n.find("wattmeter comparison") != std::string::npos;
    EXPECT_TRUE(noted);
}

TEST(Calibration, Identity)
{
    EnergyEstimate e;
    e.joules = 2;
    e.interval = {0, 1};
    EXPECT_EQ(apply_calibration(e, {1.0, "none"}).joules, 2.0);
    EXPECT_EQ(apply_calibration(e, {0.5, "half"}).joules, 1.0);
}

TEST(LoadlineJson, RoundTripAndCatalog)
{
    const auto ll = Loadline({{0, 50}, {0.5, 120}, {1, 200}}, {"x86", 200, 3.0, "ssj", 1.5e6});
    EXPECT_EQ(parse_loadline_json(loadline_to_json(ll)), ll);

    const auto dir = std::filesystem::temp_directory_path() / "wattledger_catalog_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "b.json") << loadline_to_json(ll);
    std::ofstream(dir / "a.json") << loadline_to_json(Loadline({{0, 10}, {1, 20}}, meta("arm", 20)));
    std::ofstream(dir / "notes.txt") << "ignored";
    const auto cat = load_catalog(dir);
    ASSERT_EQ(cat.size(), 2u);
    EXPECT_EQ(cat[0].meta().architecture, "arm");
    std::filesystem::remove_all(dir);
}

TEST(LoadlineJson, MissingIdlePointRejectedAtLoad)
{
    const char* doc = R"({"meta": {"architecture": "x86", "tdp_watts": 200, "base_clock_ghz": 3,
        "workload_name": "ssj"}, "points": [{"utilization": 0.1, "watts": 60}, {"utilization": 1, "watts": 200}]})";
    EXPECT_THROW(parse_loadline_json(doc), data_error);
}
