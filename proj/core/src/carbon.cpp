#include "wattledger/carbon.hpp"

#include "csv.hpp"
#include "numeric.hpp"
#include "wattledger/error.hpp"
#include "wattledger/units.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fmt/format.h>

namespace wattledger {

namespace {

constexpr std::array<std::string_view, 2> kBasisNames{"yearly_average", "realtime"};
constexpr std::array<std::string_view, 3> kAlignmentNames{"upsample_intensity", "downsample_power",
                                                          "constant"};

void require_coverage(const PowerTrace& power, const CarbonIntensitySeries& ci, TimeRange interval)
{
    if (!(interval.end > interval.start))
        throw usage_error(fmt::format("empty emissions interval [{}, {}]", interval.start, interval.end));
    if (interval.start < power.coverage().start)
        throw data_error(fmt::format("power trace does not cover [{}, {})", interval.start,
                                     power.coverage().start));
    if (interval.end > power.back_time())
        throw data_error(fmt::format("power trace does not cover ({}, {}]", power.back_time(),
                                     interval.end));
    const double first = ci.samples().front().t;
    if (interval.start < first)
        throw data_error(fmt::format("carbon intensity series does not cover [{}, {})", interval.start,
                                     first));
}

/// Sorted, de-duplicated cut points strictly inside the interval, plus its ends.
std::vector<double> cut_points(TimeRange interval, const std::vector<double>& inner)
{
    std::vector<double> cuts{interval.start};
    for (double t : inner)
        if (t > interval.start && t < interval.end)
            cuts.push_back(t);
    cuts.push_back(interval.end);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    return cuts;
}

std::optional<double> median_spacing(const std::vector<double>& ts)
{
    if (ts.size() < 2)
        return std::nullopt;
    std::vector<double> d;
    for (std::size_t i = 1; i < ts.size(); ++i)
        d.push_back(ts[i] - ts[i - 1]);
    std::sort(d.begin(), d.end());
    return d[(d.size() - 1) / 2];
}

} // namespace

std::string_view to_string(IntensityBasis b)
{
    return kBasisNames.at(static_cast<std::size_t>(b));
}

std::string_view to_string(Alignment a)
{
    return kAlignmentNames.at(static_cast<std::size_t>(a));
}

IntensityBasis parse_intensity_basis(std::string_view s)
{
    for (std::size_t i = 0; i < kBasisNames.size(); ++i)
        if (kBasisNames[i] == s)
            return static_cast<IntensityBasis>(i);
    throw usage_error(fmt::format("unknown intensity basis '{}'", s));
}

Alignment parse_alignment(std::string_view s)
{
    for (std::size_t i = 0; i < kAlignmentNames.size(); ++i)
        if (kAlignmentNames[i] == s)
            return static_cast<Alignment>(i);
    throw usage_error(fmt::format("unknown alignment '{}'", s));
}

CarbonIntensitySeries::CarbonIntensitySeries(std::vector<IntensitySample> samples,
                                             std::string region, IntensityBasis basis)
    : samples_(std::move(samples)), region_(std::move(region)), basis_(basis)
{
    if (samples_.empty())
        throw data_error("carbon intensity series has no samples");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const auto& s = samples_[i];
        if (!std::isfinite(s.t) || !std::isfinite(s.g_per_kwh) || s.g_per_kwh < 0.0)
            throw data_error(fmt::format("carbon intensity sample {} is invalid", i));
        if (i > 0 && !(s.t > samples_[i - 1].t))
            throw data_error(fmt::format("carbon intensity timestamps not strictly increasing at sample {}", i));
    }
}

double CarbonIntensitySeries::value_at(double t) const
{
    if (t < samples_.front().t)
        throw data_error(fmt::format("no carbon intensity before t={}", samples_.front().t));
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                               [](double x, const IntensitySample& s) { return x < s.t; });
    return std::prev(it)->g_per_kwh;
}

EmissionsEstimate emissions_constant(const EnergyEstimate& energy, double g_per_kwh,
                                     IntensityBasis basis, std::string region)
{
    if (!std::isfinite(g_per_kwh) || g_per_kwh < 0.0)
        throw usage_error(fmt::format("carbon intensity must be non-negative, got {}", g_per_kwh));
    if (energy.joules < 0.0)
        throw usage_error("cannot convert negative (marginal) energy to emissions");
    EmissionsEstimate out;
    out.grams_co2 = energy.joules / kJoulesPerKilowattHour * g_per_kwh;
    out.energy = energy;
    out.intensity_basis = basis;
    out.alignment = Alignment::constant;
    out.region = std::move(region);
    return out;
}

EmissionsEstimate emissions_timeseries(const PowerTrace& power, const CarbonIntensitySeries& ci,
                                       TimeRange interval, AlignmentStrategy strategy)
{
    if (!power.is_power())
        throw usage_error("emissions need a power trace; decode counters first");
    require_coverage(power, ci, interval);

    std::vector<double> ci_times;
    ci_times.reserve(ci.samples().size());
    for (const auto& s : ci.samples())
        ci_times.push_back(s.t);

    detail::CompensatedSum joule_grams_per_kwh;
    if (strategy == AlignmentStrategy::upsample_intensity) {
        std::vector<double> inner = ci_times;
        for (const auto& s : power.samples())
            inner.push_back(s.t);
        const auto cuts = cut_points(interval, inner);
        const bool backward = power.kind() == SampleKind::interval_average_power;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double p = power.hold_value_at(backward ? cuts[i + 1] : cuts[i]);
            joule_grams_per_kwh.add(p * ci.value_at(cuts[i]) * (cuts[i + 1] - cuts[i]));
        }
    } else {
        const auto cuts = cut_points(interval, ci_times);
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double window_joules =
                integrate(power, {cuts[i], cuts[i + 1]}, IntegrationMethod::zero_order).joules;
            joule_grams_per_kwh.add(window_joules * ci.value_at(cuts[i]));
        }
    }

    EmissionsEstimate out;
    out.energy = integrate(power, interval, IntegrationMethod::zero_order);
    out.grams_co2 = std::max(0.0, joule_grams_per_kwh.value() / kJoulesPerKilowattHour);
    out.intensity_basis = ci.basis();
    out.alignment = strategy == AlignmentStrategy::upsample_intensity ? Alignment::upsample_intensity
                                                                      : Alignment::downsample_power;
    out.region = ci.region();

    std::vector<double> power_times;
    for (const auto& s : power.samples())
        power_times.push_back(s.t);
    const auto p_step = median_spacing(power_times);
    const auto ci_step = median_spacing(ci_times);
    if (p_step && ci_step && *p_step > *ci_step)
        out.energy.notes.push_back(fmt::format(
            "warning: power sampled every {} s, more coarsely than carbon intensity ({} s)",
            detail::format_double(*p_step), detail::format_double(*ci_step)));
    return out;
}

CarbonIntensitySeries read_intensity_csv(std::istream& in)
{
    const auto table = detail::read_table(in);
    const auto t_col = table.column("timestamp");
    const auto v_col = table.column("intensity_gco2_per_kwh");
    const auto r_col = table.column("region");
    const auto b_col = table.column("basis");
    if (!t_col || !v_col || !r_col || !b_col)
        throw data_error(fmt::format(
            "intensity header must be timestamp,intensity_gco2_per_kwh,region,basis; found: {}",
            table.header_list()));
    if (table.rows.empty())
        throw data_error("no samples");

    std::vector<detail::LinedSample> rows;
    std::string region;
    std::optional<IntensityBasis> basis;
    for (const auto& row : table.rows) {
        const double t = detail::parse_row_timestamp(detail::field(row, *t_col, table), row.line);
        const double v = detail::parse_value(detail::field(row, *v_col, table), row.line, "intensity");
        if (v < 0.0)
            throw data_error(fmt::format("line {}: negative intensity {}", row.line, v));
        IntensityBasis row_basis;
        try {
            row_basis = parse_intensity_basis(detail::field(row, *b_col, table));
        } catch (const usage_error& e) {
            throw data_error(fmt::format("line {}: {}", row.line, e.what()));
        }
        const auto& row_region = detail::field(row, *r_col, table);
        if (!basis) {
            basis = row_basis;
            region = row_region;
        } else if (*basis != row_basis || region != row_region) {
            throw data_error(fmt::format("line {}: region and basis must be constant within a file", row.line));
        }
        rows.push_back({{t, v}, row.line});
    }
    std::vector<IntensitySample> samples;
    for (const auto& s : detail::sort_and_check(std::move(rows)))
        samples.push_back({s.t, s.value});
    return CarbonIntensitySeries(std::move(samples), std::move(region), *basis);
}

} // namespace wattledger
