#pragma once

// JSON documents exchanged between commands. Every energy document carries
// `unit`, `method`, `basis`, `scope` and `pue_applied`.

#include "wattledger/carbon.hpp"
#include "wattledger/estimation.hpp"
#include "wattledger/stats.hpp"
#include "wattledger/telemetry.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace wattledger {

std::string to_json(const EnergyEstimate& e);
EnergyEstimate energy_estimate_from_json(std::string_view text);

/// Accepts a single estimate object or an array of them.
std::vector<EnergyEstimate> energy_estimates_from_json(std::string_view text);
std::string to_json(const std::vector<EnergyEstimate>& estimates);

std::string to_json(const IdleBaseline& b);
IdleBaseline idle_baseline_from_json(std::string_view text);

std::string to_json(const EmissionsEstimate& e);
EmissionsEstimate emissions_from_json(std::string_view text);

std::string to_json(const TraceDiagnostics& d);
std::string to_json(const SamplingAdequacy& s);
std::string to_json(const OffsetFit& f);
std::string to_json(const ComparisonResult& r);

/// `{label, condition, estimates: [...]}`.
std::string to_json(const RunSet& rs);
RunSet run_set_from_json(std::string_view text);

} // namespace wattledger
