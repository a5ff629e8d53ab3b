#include "generators.hpp"
#include "oracles.hpp"

#include <wattledger/error.hpp>
#include <wattledger/estimation.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace wattledger;

namespace {

PowerTrace trace_of(std::vector<Sample> s, std::string id = "n1")
{
    return PowerTrace(std::move(id), HierarchyLevel::node, SampleKind::instantaneous_power, std::move(s));
}

EnergyEstimate absolute(double joules, double duration, std::string source = "n1")
{
    EnergyEstimate e;
    e.joules = joules;
    e.interval = {0.0, duration};
    e.scope = {HierarchyLevel::node, {std::move(source)}};
    return e;
}

std::vector<std::pair<double, double>> pairs(const PowerTrace& t)
{
    std::vector<std::pair<double, double>> out;
    for (const auto& s : t.samples())
        out.emplace_back(s.t, s.value);
    return out;
}

} // namespace

TEST(Integrate, ConstantTraceEitherMethod)
{
    const auto t = trace_of({{0, 100}, {60, 100}, {120, 100}});
    EXPECT_EQ(integrate(t, {0, 120}, IntegrationMethod::zero_order).joules, 12000.0);
    EXPECT_EQ(integrate(t, {0, 120}, IntegrationMethod::trapezoid).joules, 12000.0);
}

TEST(Integrate, ZeroOrderPiecewise)
{
    const auto t = trace_of({{0, 100}, {60, 200}, {120, 200}});
    const auto e = integrate(t, {0, 120});
    EXPECT_EQ(e.joules, 18000.0);
    EXPECT_EQ(e.method, EstimationMethod::zero_order);
    EXPECT_EQ(e.basis, EnergyBasis::absolute);
    EXPECT_EQ(e.scope.sources, std::vector<std::string>{"n1"});
}

TEST(Integrate, Trapezoid)
{
    const auto t = trace_of({{0, 100}, {60, 200}, {120, 200}});
    const auto e = integrate(t, {0, 120}, IntegrationMethod::trapezoid);
    EXPECT_EQ(e.joules, 21000.0);
    EXPECT_EQ(e.method, EstimationMethod::trapezoid);
}

TEST(Integrate, NoExtrapolation)
{
    const auto t = trace_of({{0, 100}, {60, 200}});
    EXPECT_THROW(integrate(t, {-1, 60}), data_error);
    EXPECT_THROW(integrate(t, {0, 61}), data_error);
    EXPECT_THROW(integrate(t, {10, 10}), usage_error);
    EXPECT_THROW(integrate(t, {20, 10}), usage_error);
}

TEST(Integrate, IntervalAverageCoversPrecedingInterval)
{
    // Averages stamped at interval ends: 10 W over (0,1], 30 W over (1,2].
    const PowerTrace t("a", HierarchyLevel::node, SampleKind::interval_average_power, {{0, 99}, {1, 10}, {2, 30}});
    EXPECT_EQ(integrate(t, {0, 2}).joules, 40.0);
    EXPECT_EQ(integrate(t, {0.5, 1.5}).joules, 20.0);
}

TEST(Integrate, CumulativeRequiresDecode)
{
    const PowerTrace t("c", HierarchyLevel::node, SampleKind::cumulative_energy, {{0, 1}, {1, 2}});
    EXPECT_THROW(integrate(t, {0, 1}), usage_error);
}

TEST(IntegrateProperty, MatchesOraclesAndIsAdditive)
{
    gen::Rng r(21);
    for (int trial = 0; trial < 300; ++trial) {
        const auto t = gen::power_trace(r, r.integer(2, 80));
        const double a = r.uniform(t.front_time(), t.back_time());
        const double c = r.uniform(a, t.back_time());
        const double b = r.uniform(a, c);
        if (!(a < b && b < c))
            continue;
        for (auto m : {IntegrationMethod::zero_order, IntegrationMethod::trapezoid}) {
            const double whole = integrate(t, {a, c}, m).joules;
            const double split = integrate(t, {a, b}, m).joules + integrate(t, {b, c}, m).joules;
            EXPECT_LE(std::abs(whole - split), 1e-9 * std::max(whole, 1.0));
            const double ref = m == IntegrationMethod::zero_order ? oracle::zero_order_sum(pairs(t), a, c)
                                                                  : oracle::trapezoid_sum(pairs(t), a, c);
            EXPECT_LE(std::abs(whole - ref), 1e-9 * std::max(ref, 1.0));
            EXPECT_GE(whole, 0.0);
        }
    }
}

TEST(IntegrateProperty, ConstantTracesAgreeExactly)
{
    gen::Rng r(4);
    for (int trial = 0; trial < 100; ++trial) {
        const double w = r.uniform(0, 500);
        std::vector<Sample> s;
        double t = 0;
        for (int i = 0; i < r.integer(2, 30); ++i, t += r.uniform(0.1, 5.0))
            s.push_back({t, w});
        const auto tr = trace_of(s);
        EXPECT_EQ(integrate(tr, tr.span(), IntegrationMethod::zero_order).joules,
                  integrate(tr, tr.span(), IntegrationMethod::trapezoid).joules);
    }
}

TEST(IdleBaseline, NearestRank)
{
    std::vector<Sample> s;
    for (int i = 0; i < 100; ++i)
        s.push_back({static_cast<double>(i), i % 50 == 7 ? 300.0 : 220.0});
    const auto b = estimate_idle_baseline(trace_of(s), 0.02);
    EXPECT_EQ(b.watts.watts(), 220.0);
    EXPECT_EQ(b.method, IdleBaseline::Method::percentile);
    EXPECT_EQ(b.source_id, "n1");
}

TEST(IdleBaseline, ConstantTrace)
{
    std::vector<Sample> s;
    for (int i = 0; i < 60; ++i)
        s.push_back({static_cast<double>(i), 309.0});
    EXPECT_EQ(estimate_idle_baseline(trace_of(s)).watts.watts(), 309.0);
}

TEST(IdleBaseline, Preconditions)
{
    const auto t = trace_of({{0, 1}, {1, 2}});
    EXPECT_THROW(estimate_idle_baseline(t, 0.0), usage_error);
    EXPECT_THROW(estimate_idle_baseline(t, 1.0), usage_error);
    // 2 samples cannot resolve the 2nd percentile.
    const auto msg = [&] {
        try {
            estimate_idle_baseline(t, 0.02);
        } catch (const data_error& e) {
            return std::string(e.what());
        }
        return std::string();
    }();
    EXPECT_NE(msg.find("longer"), std::string::npos) << msg;
}

TEST(IdleBaselineProperty, MatchesSortOracleAndStaysInRange)
{
    gen::Rng r(8);
    for (int trial = 0; trial < 300; ++trial) {
        const int pct = r.integer(1, 99);
        const int n = r.integer((100 + pct - 1) / pct, 300);
        std::vector<Sample> s;
        std::vector<double> values;
        for (int i = 0; i < n; ++i) {
            values.push_back(std::round(r.uniform(100, 400)));
            s.push_back({static_cast<double>(i), values.back()});
        }
        const double got = estimate_idle_baseline(trace_of(s), pct / 100.0).watts.watts();
        EXPECT_EQ(got, oracle::nearest_rank(values, pct)) << "n=" << n << " p=" << pct;
        EXPECT_GE(got, *std::min_element(values.begin(), values.end()));
        EXPECT_LE(got, *std::max_element(values.begin(), values.end()));
    }
}

TEST(Marginal, Subtracts)
{
    const auto m = marginal_energy(absolute(12000, 120), IdleBaseline::declared(Power(50), "n1"));
    EXPECT_EQ(m.joules, 6000.0);
    EXPECT_EQ(m.basis, EnergyBasis::marginal);
}

TEST(Marginal, ZeroBaselineIsIdentityOnJoules)
{
    const auto a = absolute(12000, 120);
    EXPECT_EQ(marginal_energy(a, IdleBaseline::declared(Power(0), "n1")).joules, a.joules);
}

TEST(Marginal, NegativeKeptWithWarning)
{
    const auto m = marginal_energy(absolute(12000, 120), IdleBaseline::declared(Power(110), "n1"));
    EXPECT_EQ(m.joules, -1200.0);
    ASSERT_FALSE(m.notes.empty());
    bool warned = false;
    for (const auto& n : m.notes)
        warned |= n.rfind("warning:", 0) == 0;
    EXPECT_TRUE(warned);
    EXPECT_NO_THROW(m.validate());
}

TEST(Marginal, SourceMismatchRejected)
{
    EXPECT_THROW(marginal_energy(absolute(1, 1), IdleBaseline::declared(Power(1), "other")), data_error);
}

TEST(MarginalProperty, MarginalPlusBaselineIsAbsolute)
{
    gen::Rng r(31);
    for (int trial = 0; trial < 500; ++trial) {
        // Dyadic inputs keep every product and sum exact.
        const double d = r.integer(1, 1 << 12);
        const double w = r.integer(0, 1 << 10) / 4.0;
        const double j = r.integer(0, 1 << 20) / 8.0;
        const auto a = absolute(j, d);
        const auto m = marginal_energy(a, IdleBaseline::declared(Power(w), "n1"));
        EXPECT_EQ(m.joules + w * d, a.joules);
    }
}

TEST(Standardize, EightyNineWattsOverAnHour)
{
    const auto cpu3 = IdleBaseline::declared(Power(309), "cpu3");
    const auto cpu1 = IdleBaseline::declared(Power(220), "cpu1");
    const auto e = absolute(1'000'000, 3600, "cpu3");
    const auto s = standardize_to_reference(e, cpu3, cpu1);
    EXPECT_EQ(e.joules - s.joules, 320'400.0);
    EXPECT_FALSE(s.notes.empty());
}

TEST(Standardize, SameBaselineIsIdentity)
{
    const auto b = IdleBaseline::declared(Power(220), "cpu1");
    const auto e = absolute(5000, 60, "cpu1");
    EXPECT_EQ(standardize_to_reference(e, b, b).joules, 5000.0);
}

TEST(Standardize, GpuNodeToCpuReference)
{
    const auto s = standardize_to_reference(absolute(100'000, 60, "gpu1"), IdleBaseline::declared(Power(374), "gpu1"),
                                            IdleBaseline::declared(Power(220), "cpu1"));
    EXPECT_EQ(100'000 - s.joules, 9240.0);
}

TEST(Standardize, MethodMismatchRejected)
{
    std::vector<Sample> s;
    for (int i = 0; i < 100; ++i)
        s.push_back({static_cast<double>(i), 300.0});
    const auto pct = estimate_idle_baseline(trace_of(s, "cpu3"));
    EXPECT_THROW(standardize_to_reference(absolute(1e6, 3600, "cpu3"), pct,
                                          IdleBaseline::declared(Power(220), "cpu1")),
                 usage_error);
}

TEST(StandardizeProperty, SwappedBaselinesInvert)
{
    gen::Rng r(5);
    for (int trial = 0; trial < 300; ++trial) {
        const auto node = IdleBaseline::declared(Power(r.integer(0, 500)), "a");
        const auto ref = IdleBaseline::declared(Power(r.integer(0, 500)), "b");
        // Large enough that neither direction goes negative: 500 W x 3600 s.
        const auto e = absolute(r.integer(1'800'000, 4'000'000), r.integer(1, 3600), "a");
        const auto there = standardize_to_reference(e, node, ref);
        const auto back = standardize_to_reference(there, ref, node);
        EXPECT_EQ(back.joules, e.joules);
    }
}

namespace {

OffsetObservation obs(std::string cls, double joules, double duration)
{
    return {std::move(cls), "hpl", absolute(joules, duration, "x")};
}

} // namespace

TEST(FitOffsets, RecoversConstructedOffset)
{
    std::vector<OffsetObservation> reps;
    for (double d : {100.0, 250.0, 400.0}) {
        reps.push_back(obs("A", 50'000.0, d));
        reps.push_back(obs("B", 50'000.0 + 89.0 * d, d));
    }
    const auto f = fit_offsets(reps, "A");
    EXPECT_NEAR(f.offsets_watts.at("B"), 89.0, 1e-9);
    EXPECT_EQ(f.offsets_watts.at("A"), 0.0);
    EXPECT_NEAR(f.residual_rms_watts, 0.0, 1e-9);
    EXPECT_NEAR(f.common_joules, 50'000.0, 1e-6);
}

TEST(FitOffsets, IdenticalClassesGiveZero)
{
    std::vector<OffsetObservation> reps;
    for (const char* c : {"A", "B", "C"})
        for (double d : {10.0, 20.0})
            reps.push_back(obs(c, 7'000.0, d));
    const auto f = fit_offsets(reps, "B");
    for (const auto& [cls, w] : f.offsets_watts)
        EXPECT_NEAR(w, 0.0, 1e-9) << cls;
}

TEST(FitOffsets, SingleClassIsSingular)
{
    EXPECT_THROW(fit_offsets({obs("A", 1, 1), obs("A", 2, 2)}, "A"), usage_error);
}

TEST(FitOffsets, NoisyOffsetsWithinThreeSigma)
{
    // Each repetition's mean power carries N(0, 1 W) noise.
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> noise(0.0, 1.0);
    const int n = 40;
    const std::map<std::string, double> truth{{"A", 0.0}, {"B", 89.0}, {"C", 154.0}};
    std::vector<OffsetObservation> reps;
    for (const auto& [cls, off] : truth)
        for (int i = 0; i < n; ++i) {
            const double d = 100.0 + 10.0 * i;
            reps.push_back(obs(cls, 30'000.0 + (off + noise(rng)) * d, d));
        }
    const auto f = fit_offsets(reps, "A");
    for (const auto& [cls, off] : truth)
        EXPECT_LE(std::abs(f.offsets_watts.at(cls) - off), 3.0 / std::sqrt(n)) << cls;
    EXPECT_GT(f.residual_rms_watts, 0.0);
}

TEST(FitOffsetsProperty, NoiselessRecoveryTo1e9)
{
    gen::Rng r(12);
    for (int trial = 0; trial < 100; ++trial) {
        const int classes = r.integer(2, 5);
        const double common = r.uniform(0, 1e5);
        std::map<std::string, double> truth;
        std::vector<OffsetObservation> reps;
        for (int c = 0; c < classes; ++c) {
            const std::string name = "c" + std::to_string(c);
            truth[name] = c == 0 ? 0.0 : r.uniform(-100, 300);
            for (int k = 0; k < r.integer(2, 6); ++k) {
                const double d = r.uniform(10, 5000);
                reps.push_back(obs(name, common + truth[name] * d + 1e6, d));
            }
        }
        const auto f = fit_offsets(reps, "c0");
        for (const auto& [cls, off] : truth)
            EXPECT_NEAR(f.offsets_watts.at(cls), off, 1e-9) << cls;
    }
}

TEST(Pue, ScalesAndRecords)
{
    const auto p = apply_pue(absolute(100, 1), 1.5);
    EXPECT_EQ(p.joules, 150.0);
    EXPECT_EQ(p.pue_applied, 1.5);
}

TEST(Pue, OneIsIdentity)
{
    EXPECT_EQ(apply_pue(absolute(100, 1), 1.0).joules, 100.0);
}

TEST(Pue, GuardsRejectMisuse)
{
    EXPECT_THROW(apply_pue(absolute(100, 1), 0.9), usage_error);
    EXPECT_THROW(apply_pue(apply_pue(absolute(100, 1), 1.5), 1.5), usage_error);
    EXPECT_THROW(apply_pue(apply_pue(absolute(100, 1), 1.0), 1.2), usage_error);
}

TEST(EnergyEstimate, Validate)
{
    auto e = absolute(10, 5);
    EXPECT_NO_THROW(e.validate());
    EXPECT_EQ(e.mean_watts(), 2.0);
    e.joules = -1;
    EXPECT_THROW(e.validate(), usage_error);
    e.basis = EnergyBasis::marginal;
    EXPECT_NO_THROW(e.validate());
    e.interval = {5, 0};
    EXPECT_THROW(e.validate(), usage_error);
}

TEST(Enums, RoundTrip)
{
    for (auto m : {EstimationMethod::zero_order, EstimationMethod::trapezoid, EstimationMethod::proxy_loadline,
                   EstimationMethod::tdp_bound})
        EXPECT_EQ(parse_estimation_method(to_string(m)), m);
    for (auto b : {EnergyBasis::absolute, EnergyBasis::marginal})
        EXPECT_EQ(parse_energy_basis(to_string(b)), b);
    EXPECT_THROW(parse_energy_basis("relative"), usage_error);
}
