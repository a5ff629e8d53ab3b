#pragma once

// nlohmann::json converters shared by serialize.cpp and report.cpp. Not installed.

#include "wattledger/carbon.hpp"
#include "wattledger/estimation.hpp"

#include <json.hpp>

namespace wattledger::detail {

nlohmann::json estimate_to_json(const EnergyEstimate& e);
EnergyEstimate estimate_from_json(const nlohmann::json& j);

nlohmann::json emissions_to_json(const EmissionsEstimate& e);
EmissionsEstimate emissions_from_json(const nlohmann::json& j);

/// Parses text, turning library exceptions into data_error naming `what`.
nlohmann::json parse_document(std::string_view text, std::string_view what);

} // namespace wattledger::detail
