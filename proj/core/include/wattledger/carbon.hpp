#pragma once

#include "wattledger/estimation.hpp"
#include "wattledger/telemetry.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wattledger {

enum class IntensityBasis { yearly_average, realtime };
enum class Alignment { upsample_intensity, downsample_power, constant };

std::string_view to_string(IntensityBasis b);
std::string_view to_string(Alignment a);
IntensityBasis parse_intensity_basis(std::string_view s);
Alignment parse_alignment(std::string_view s);

struct IntensitySample {
    double t = 0.0;
    double g_per_kwh = 0.0;
};

/// Grid carbon intensity. Each sample holds until the next one; the last holds
/// indefinitely.
class CarbonIntensitySeries {
public:
    CarbonIntensitySeries(std::vector<IntensitySample> samples, std::string region,
                          IntensityBasis basis);

    const std::vector<IntensitySample>& samples() const noexcept { return samples_; }
    const std::string& region() const noexcept { return region_; }
    IntensityBasis basis() const noexcept { return basis_; }

    double value_at(double t) const;

private:
    std::vector<IntensitySample> samples_;
    std::string region_;
    IntensityBasis basis_;
};

struct EmissionsEstimate {
    double grams_co2 = 0.0;
    EnergyEstimate energy;
    /// Optional only so that incomplete reports can be represented and rejected.
    std::optional<IntensityBasis> intensity_basis;
    std::optional<Alignment> alignment;
    std::string region;
};

EmissionsEstimate emissions_constant(const EnergyEstimate& energy, double g_per_kwh,
                                     IntensityBasis basis = IntensityBasis::yearly_average,
                                     std::string region = {});

enum class AlignmentStrategy { upsample_intensity, downsample_power };

EmissionsEstimate emissions_timeseries(const PowerTrace& power, const CarbonIntensitySeries& ci,
                                       TimeRange interval, AlignmentStrategy strategy);

/// CSV `timestamp,intensity_gco2_per_kwh,region,basis`.
CarbonIntensitySeries read_intensity_csv(std::istream& in);

} // namespace wattledger
