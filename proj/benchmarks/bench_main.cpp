#include <wattledger/estimation.hpp>
#include <wattledger/proxy.hpp>
#include <wattledger/simtrace.hpp>
#include <wattledger/stats.hpp>
#include <wattledger/telemetry.hpp>

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace wattledger;

namespace {

PowerTrace noisy_trace(std::size_t n, SampleKind kind = SampleKind::instantaneous_power)
{
    std::mt19937_64 rng(n);
    std::uniform_real_distribution<double> watts(80.0, 400.0);
    std::vector<Sample> s;
    s.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        s.push_back({0.1 * static_cast<double>(i), watts(rng)});
    return PowerTrace("bench", HierarchyLevel::node, kind, std::move(s));
}

RunSet runs(std::string label, double mean, int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(mean, 0.02 * mean);
    std::vector<EnergyEstimate> es;
    for (int i = 0; i < n; ++i) {
        EnergyEstimate e;
        e.joules = d(rng);
        e.interval = {0, 60};
        e.scope = {HierarchyLevel::node, {"n1"}};
        es.push_back(e);
    }
    return RunSet(std::move(label), std::move(es));
}

} // namespace

static void BM_IntegrateZeroOrder(benchmark::State& state)
{
    const auto t = noisy_trace(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(integrate(t, t.span()).joules);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IntegrateZeroOrder)->Range(1 << 10, 1 << 20);

static void BM_IntegrateTrapezoid(benchmark::State& state)
{
    const auto t = noisy_trace(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(integrate(t, t.span(), IntegrationMethod::trapezoid).joules);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IntegrateTrapezoid)->Range(1 << 10, 1 << 20);

static void BM_LoadlinePower(benchmark::State& state)
{
    std::vector<LoadlinePoint> pts;
    for (int i = 0; i <= 10; ++i)
        pts.push_back({i / 10.0, 60.0 + 24.0 * i + 0.5 * i * i});
    const Loadline ll(std::move(pts), {"x86_64", 200, 2.4, "ssj", std::nullopt});
    double u = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(loadline_power(ll, u).watts());
        u = std::fmod(u + 0.00137, 1.0);
    }
}
BENCHMARK(BM_LoadlinePower);

static void BM_ParsePowerCsv(benchmark::State& state)
{
    std::string csv = "timestamp,value\n";
    const auto t = noisy_trace(static_cast<std::size_t>(state.range(0)));
    for (const auto& s : t.samples())
        csv += std::to_string(s.t) + "," + std::to_string(s.value) + "\n";
    for (auto _ : state) {
        std::istringstream in(csv);
        benchmark::DoNotOptimize(parse_power_csv(in, {}, kWatt).size());
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(csv.size()));
}
BENCHMARK(BM_ParsePowerCsv)->Range(1 << 10, 1 << 16);

static void BM_DecodeCounter(benchmark::State& state)
{
    std::vector<Sample> s;
    double c = 0.0;
    for (std::int64_t i = 0; i < state.range(0); ++i) {
        s.push_back({static_cast<double>(i), c});
        c += 250.0;
        if (c > 4294.967295)
            c -= 4294.967295;
    }
    const PowerTrace t("rapl", HierarchyLevel::component, SampleKind::cumulative_energy, std::move(s));
    for (auto _ : state)
        benchmark::DoNotOptimize(decode_cumulative_counter(t).size());
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DecodeCounter)->Range(1 << 10, 1 << 18);

static void BM_CompareWelch(benchmark::State& state)
{
    const auto a = runs("a", 1000.0, 30, 1);
    const auto b = runs("b", 1010.0, 30, 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(compare(a, b).p_value);
}
BENCHMARK(BM_CompareWelch);

static void BM_ComparePermutation(benchmark::State& state)
{
    const auto a = runs("a", 1000.0, 30, 1);
    const auto b = runs("b", 1010.0, 30, 2);
    CompareOptions o;
    o.test = StatTest::permutation;
    o.permutations = static_cast<std::size_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(compare(a, b, o).p_value);
}
BENCHMARK(BM_ComparePermutation)->Arg(1000)->Arg(20000);

static void BM_Simulate(benchmark::State& state)
{
    WorkloadSpec spec;
    spec.phases = {{600, 100}, {1200, 250}, {600, 120}};
    spec.spikes = {{330, 1, 500}};
    spec.noise_std = 3.0;
    for (auto _ : state)
        benchmark::DoNotOptimize(generate(spec, 0.1).first.size());
}
BENCHMARK(BM_Simulate);
BENCHMARK_MAIN();
