#include "generators.hpp"

#include <wattledger/error.hpp>
#include <wattledger/serialize.hpp>

#include <gtest/gtest.h>

using namespace wattledger;

namespace {

EnergyEstimate sample_estimate(double joules)
{
    EnergyEstimate e;
    e.joules = joules;
    e.interval = {1.5, 61.5};
    e.method = EstimationMethod::trapezoid;
    e.scope = {HierarchyLevel::rack, {"r1", "r2"}};
    e.notes = {"a", "b"};
    return e;
}

} // namespace

TEST(EstimateJson, RoundTrip)
{
    gen::Rng r(2);
    for (int i = 0; i < 100; ++i) {
        auto e = sample_estimate(r.uniform(0, 1e9));
        if (i % 2)
            e = apply_pue(e, r.uniform(1, 2));
        EXPECT_EQ(energy_estimate_from_json(to_json(e)), e);
    }
}

TEST(EstimateJson, ProvenanceIsMandatory)
{
    const std::string full = to_json(sample_estimate(5));
    for (const char* key : {"unit", "method", "basis", "scope", "interval", "joules"}) {
        auto j = full;
        const auto pos = j.find(std::string("\"") + key + "\"");
        ASSERT_NE(pos, std::string::npos);
        j.replace(pos, std::string(key).size() + 2, "\"x_removed\"");
        EXPECT_THROW(energy_estimate_from_json(j), data_error) << key;
    }
}

TEST(EstimateJson, OtherEnergyUnitsConverted)
{
    const auto e = energy_estimate_from_json(R"({"unit": "kWh", "joules": 1, "interval": {"start": 0, "end": 1},
        "method": "zero_order", "basis": "absolute", "scope": {"level": "node", "sources": []}})");
    EXPECT_EQ(e.joules, 3.6e6);
    EXPECT_THROW(energy_estimate_from_json(R"({"unit": "W", "joules": 1, "interval": {"start": 0, "end": 1},
        "method": "zero_order", "basis": "absolute", "scope": {"level": "node"}})"),
                 data_error);
}

TEST(BaselineJson, RoundTrip)
{
    const auto b = IdleBaseline::declared(Power(220), "cpu1", {0, 60});
    const auto back = idle_baseline_from_json(to_json(b));
    EXPECT_EQ(back.watts, b.watts);
    EXPECT_EQ(back.source_id, "cpu1");
    EXPECT_TRUE(back.same_method(b));
}

TEST(RunSetJson, RoundTripAndBareArray)
{
    const RunSet rs("a", {sample_estimate(1), sample_estimate(2)}, {{"node", "cpu1"}});
    const auto back = run_set_from_json(to_json(rs));
    EXPECT_EQ(back.label(), "a");
    EXPECT_EQ(back.estimates(), rs.estimates());
    EXPECT_EQ(back.condition(), rs.condition());
    EXPECT_EQ(run_set_from_json(to_json(rs.estimates())).size(), 2u);
}

TEST(EmissionsJson, RoundTrip)
{
    const auto e = emissions_constant(sample_estimate(3.6e6), 400, IntensityBasis::realtime, "DE");
    const auto back = emissions_from_json(to_json(e));
    EXPECT_EQ(back.grams_co2, e.grams_co2);
    EXPECT_EQ(back.energy, e.energy);
    EXPECT_EQ(back.intensity_basis, e.intensity_basis);
    EXPECT_EQ(back.region, "DE");
}
