#pragma once

#include "wattledger/units.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wattledger {

enum class HierarchyLevel { facility, system, platform, rack, node, component };

enum class SampleKind {
    instantaneous_power,
    /// value is the mean power over (previous timestamp, this timestamp]
    interval_average_power,
    cumulative_energy,
};

std::string_view to_string(HierarchyLevel level);
std::string_view to_string(SampleKind kind);
HierarchyLevel parse_hierarchy_level(std::string_view s);
SampleKind parse_sample_kind(std::string_view s);

struct Sample {
    double t = 0.0;      ///< seconds since epoch
    double value = 0.0;  ///< W for power kinds, J for cumulative energy

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct TimeRange {
    double start = 0.0;
    double end = 0.0;

    double duration() const noexcept { return end - start; }
    friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

using Metadata = std::map<std::string, std::string>;

/// Metadata key holding the start of an interval-average trace's first window.
inline constexpr const char* kIntervalStartKey = "interval_start";

/// Default register width of cumulative energy counters, in microjoules.
inline constexpr double kDefaultCounterMaxMicrojoules = 4294967295.0;

/// Immutable time series of power or cumulative energy from one source.
/// The constructor enforces every invariant; a PowerTrace that exists is valid.
class PowerTrace {
public:
    PowerTrace(std::string source_id, HierarchyLevel level, SampleKind kind,
               std::vector<Sample> samples, Metadata metadata = {});

    const std::string& source_id() const noexcept { return source_id_; }
    HierarchyLevel level() const noexcept { return level_; }
    SampleKind kind() const noexcept { return kind_; }
    std::span<const Sample> samples() const noexcept { return samples_; }
    const Metadata& metadata() const noexcept { return metadata_; }
    std::size_t size() const noexcept { return samples_.size(); }

    double front_time() const noexcept { return samples_.front().t; }
    double back_time() const noexcept { return samples_.back().t; }
    TimeRange span() const noexcept { return {front_time(), back_time()}; }
    /// Time the samples describe. Equals span() except for an interval-average trace
    /// whose metadata names `interval_start`: its first sample then also covers
    /// (interval_start, front_time()].
    TimeRange coverage() const noexcept { return {coverage_start_, back_time()}; }

    bool is_power() const noexcept { return kind_ != SampleKind::cumulative_energy; }

    /// Power in effect at time t under zero-order hold. Instantaneous samples hold
    /// forward; interval averages cover the interval that ends at their stamp.
    double hold_value_at(double t) const;

    friend bool operator==(const PowerTrace&, const PowerTrace&) = default;

private:
    std::string source_id_;
    HierarchyLevel level_;
    SampleKind kind_;
    std::vector<Sample> samples_;
    Metadata metadata_;
    double coverage_start_ = 0.0;
};

struct UtilizationSample {
    double t = 0.0;
    double utilization = 0.0; ///< fraction; may exceed 1 before hyperthread normalization
};

class UtilizationTrace {
public:
    UtilizationTrace(std::string source_id, std::vector<UtilizationSample> samples,
                     int physical_cores = 1, int logical_per_core = 1, Metadata metadata = {});

    const std::string& source_id() const noexcept { return source_id_; }
    std::span<const UtilizationSample> samples() const noexcept { return samples_; }
    int physical_cores() const noexcept { return physical_cores_; }
    int logical_per_core() const noexcept { return logical_per_core_; }
    const Metadata& metadata() const noexcept { return metadata_; }
    TimeRange span() const noexcept { return {samples_.front().t, samples_.back().t}; }

private:
    std::string source_id_;
    std::vector<UtilizationSample> samples_;
    int physical_cores_;
    int logical_per_core_;
    Metadata metadata_;
};

struct TraceDiagnostics {
    std::optional<double> uniform_interval;
    std::vector<TimeRange> gaps;
    bool zero_variance = false;
    std::optional<double> min_interval; ///< empty for single-sample traces
    std::optional<double> median_interval;
};

/// Column mapping for free-form power CSVs.
struct CsvSchema {
    std::string timestamp_column = "timestamp";
    std::string value_column = "value";
    std::string source_id = "trace";
    HierarchyLevel level = HierarchyLevel::node;
    SampleKind kind = SampleKind::instantaneous_power;
};

/// Result of ingesting a source that tolerates missing cells.
struct Ingested {
    PowerTrace trace;
    std::vector<std::string> warnings;
};

enum class DeviceDialect { gpu_smi_csv, generic };

DeviceDialect parse_device_dialect(std::string_view s);

/// Epoch seconds from an RFC 3339 string, a `YYYY/MM/DD hh:mm:ss[.f]` monitor stamp,
/// or a plain decimal number.
double parse_timestamp(std::string_view text);

/// Reads a CSV whose value column is in `unit`, normalizing to canonical units.
PowerTrace parse_power_csv(std::istream& in, const CsvSchema& schema, UnitScale unit);

/// Reads the canonical `timestamp,value,unit,source_id,level,sample_kind` format.
PowerTrace read_trace_csv(std::istream& in);

/// Writes the canonical format. Values are emitted in W or J with shortest
/// round-trip formatting, so read_trace_csv reproduces the trace bit-exactly.
void write_trace_csv(const PowerTrace& trace, std::ostream& out);

/// Reads `timestamp,utilization` (fractions). Extra columns are ignored.
UtilizationTrace read_utilization_csv(std::istream& in, std::string source_id = "util",
                                      int physical_cores = 1, int logical_per_core = 1);

/// Converts a cumulative energy counter into interval-average power stamped at
/// each interval end. `counter_max_uj` is the register maximum in microjoules;
/// deltas are taken modulo that maximum so wraps decode to positive energy.
PowerTrace decode_cumulative_counter(const PowerTrace& trace,
                                     double counter_max_uj = kDefaultCounterMaxMicrojoules);

/// Counter maximum from trace metadata key `counter_max_uj`, or the default.
double counter_max_from_metadata(const PowerTrace& trace);

Ingested parse_device_monitor_table(std::istream& in, DeviceDialect dialect,
                                    std::string source_id = "device0");

TraceDiagnostics diagnose(const PowerTrace& trace);

enum class ResampleMethod { zero_order_hold, linear };

/// Resamples onto the grid window.start + k*interval, k = 0.. while within the window.
/// The window defaults to the trace span and must lie inside it.
PowerTrace resample(const PowerTrace& trace, double interval, ResampleMethod method,
                    std::optional<TimeRange> window = std::nullopt);

} // namespace wattledger
