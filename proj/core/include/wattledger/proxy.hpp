#pragma once

#include "wattledger/estimation.hpp"
#include "wattledger/telemetry.hpp"
#include "wattledger/units.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace wattledger {

struct LoadlinePoint {
    double utilization = 0.0; ///< fraction of the benchmark's max throughput M
    double watts = 0.0;

    friend bool operator==(const LoadlinePoint&, const LoadlinePoint&) = default;
};

struct LoadlineMeta {
    std::string architecture;
    double tdp_watts = 0.0;
    double base_clock_ghz = 0.0;
    std::string workload_name;
    std::optional<double> max_throughput_ops; ///< M, operations per second

    friend bool operator==(const LoadlineMeta&, const LoadlineMeta&) = default;
};

/// Calibrated utilization-to-power curve. Points start at the active-idle
/// point u = 0, end at u = 1, and never decrease in watts.
class Loadline {
public:
    Loadline(std::vector<LoadlinePoint> points, LoadlineMeta meta);

    const std::vector<LoadlinePoint>& points() const noexcept { return points_; }
    const LoadlineMeta& meta() const noexcept { return meta_; }
    double min_watts() const noexcept { return points_.front().watts; }
    double max_watts() const noexcept { return points_.back().watts; }

    friend bool operator==(const Loadline&, const Loadline&) = default;

private:
    std::vector<LoadlinePoint> points_;
    LoadlineMeta meta_;
};

struct SystemDescriptor {
    std::string architecture;
    Power tdp;
    double base_clock_ghz = 0.0;
    std::optional<std::string> workload_name;
};

struct CalibrationFactor {
    double scale = 1.0;
    std::string source;
};

struct NormalizedUtilization {
    double fraction = 0.0;
    std::optional<std::string> warning;
};

Power loadline_power(const Loadline& ll, double utilization);

/// Lowest utilization whose loadline power equals `watts`.
double loadline_inverse(const Loadline& ll, double watts);

/// Maps each utilization sample through the loadline and integrates with zero-order hold.
EnergyEstimate energy_from_utilization(const UtilizationTrace& util, const Loadline& ll,
                                       TimeRange interval);

/// reported_percent / (100 * physical_cores), clamped to 1 with a warning.
NormalizedUtilization normalize_hyperthread_utilization(double reported_percent, int physical_cores);

/// Applies normalize_hyperthread_utilization to every sample (percent input).
UtilizationTrace normalize_utilization_trace(const UtilizationTrace& percent_trace,
                                             std::vector<std::string>* warnings = nullptr);

/// Worst-case energy: TDP held for the whole duration.
EnergyEstimate tdp_energy_bound(const SystemDescriptor& desc, double duration_s);

double loadline_score(const Loadline& ll, const SystemDescriptor& desc);

/// Best-scoring loadline for a system; deterministic tie-breaking.
std::pair<Loadline, double> select_loadline(const std::vector<Loadline>& catalog,
                                            const SystemDescriptor& desc);

EnergyEstimate apply_calibration(const EnergyEstimate& estimate, const CalibrationFactor& factor);

Loadline parse_loadline_json(std::string_view text);
std::string loadline_to_json(const Loadline& ll);
Loadline load_loadline(const std::filesystem::path& path);

/// Every `*.json` in `dir`, in filename order.
std::vector<Loadline> load_catalog(const std::filesystem::path& dir);

} // namespace wattledger
