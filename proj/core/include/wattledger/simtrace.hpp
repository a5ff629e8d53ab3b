#pragma once

#include "wattledger/proxy.hpp"
#include "wattledger/telemetry.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wattledger {

struct Phase {
    double duration_s = 0.0;
    double watts = 0.0;
};

/// A transient that replaces the phase power over [time, time + duration).
struct Spike {
    double time_s = 0.0;
    double duration_s = 0.0;
    double watts = 0.0;
};

struct WorkloadSpec {
    std::vector<Phase> phases;
    double noise_std = 0.0;
    std::vector<Spike> spikes;
    std::uint64_t seed = 0;

    double total_duration() const;

    /// Noise-free power at instant t. Phases and spikes are half-open on the
    /// right; t == total_duration() takes the last phase.
    double signal_at(double t) const;

    /// Throws usage_error on non-positive phases, negative watts, overlapping
    /// spikes or spikes outside the span.
    void validate() const;
};

struct GroundTruth {
    Energy energy;
    TimeRange span;
};

/// Exact integral of the noise-free signal.
GroundTruth ground_truth(const WorkloadSpec& spec);

/// Point-samples the signal at k * interval (plus the span end when the grid
/// misses it), adds seeded Gaussian noise, and floors at zero.
std::pair<PowerTrace, GroundTruth> generate(const WorkloadSpec& spec, double sample_interval,
                                            std::string source_id = "sim");

/// Utilization whose loadline power reproduces the noise-free signal on the same grid.
UtilizationTrace generate_utilization(const WorkloadSpec& spec, const Loadline& ll,
                                      double sample_interval, std::string source_id = "sim");

WorkloadSpec parse_workload_spec(std::string_view json_text);
std::string workload_spec_to_json(const WorkloadSpec& spec);
std::string ground_truth_to_json(const GroundTruth& truth);

} // namespace wattledger
