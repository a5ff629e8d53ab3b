#include "wattledger/simtrace.hpp"

#include "csv.hpp"
#include "numeric.hpp"
#include "wattledger/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <json.hpp>
#include <numbers>
#include <random>

namespace wattledger {

namespace {

std::vector<double> sample_grid(double total, double interval)
{
    if (!std::isfinite(interval) || interval <= 0.0)
        throw usage_error(fmt::format("sample interval must be positive, got {}", interval));
    const auto n = static_cast<std::size_t>(std::floor(total / interval + 1e-9));
    std::vector<double> grid;
    grid.reserve(n + 2);
    for (std::size_t k = 0; k <= n; ++k)
        grid.push_back(std::min(static_cast<double>(k) * interval, total));
    if (total - grid.back() <= 1e-9 * interval)
        grid.back() = total;
    else
        grid.push_back(total);
    if (grid.size() >= 2 && grid[grid.size() - 2] >= grid.back())
        grid.erase(grid.end() - 2);
    return grid;
}

/// Standard normal draws from a fully specified engine (Box-Muller), so a seed
/// reproduces the same trace on every standard library.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

    double next()
    {
        if (spare_) {
            const double v = *spare_;
            spare_.reset();
            return v;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 rng_;
    std::optional<double> spare_;
};

} // namespace

double WorkloadSpec::total_duration() const
{
    double total = 0.0;
    for (const auto& p : phases)
        total += p.duration_s;
    return total;
}

double WorkloadSpec::signal_at(double t) const
{
    for (const auto& s : spikes)
        if (t >= s.time_s && t < s.time_s + s.duration_s)
            return s.watts;
    double start = 0.0;
    for (const auto& p : phases) {
        const double end = start + p.duration_s;
        if (t >= start && t < end)
            return p.watts;
        start = end;
    }
    return phases.back().watts;
}

void WorkloadSpec::validate() const
{
    if (phases.empty())
        throw usage_error("workload spec needs at least one phase");
    for (std::size_t i = 0; i < phases.size(); ++i) {
        const auto& p = phases[i];
        if (!std::isfinite(p.duration_s) || p.duration_s <= 0.0)
            throw usage_error(fmt::format("phase {} duration must be positive", i));
        if (!std::isfinite(p.watts) || p.watts < 0.0)
            throw usage_error(fmt::format("phase {} power must be non-negative", i));
    }
    if (!std::isfinite(noise_std) || noise_std < 0.0)
        throw usage_error("noise_std must be non-negative");
    const double total = total_duration();
    std::vector<Spike> sorted = spikes;
    std::sort(sorted.begin(), sorted.end(),
              [](const Spike& a, const Spike& b) { return a.time_s < b.time_s; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const auto& s = sorted[i];
        if (!std::isfinite(s.duration_s) || s.duration_s <= 0.0 || !std::isfinite(s.watts) ||
            s.watts < 0.0)
            throw usage_error(fmt::format("spike at t={} needs positive duration and non-negative power",
                                          s.time_s));
        if (!std::isfinite(s.time_s) || s.time_s < 0.0 || s.time_s + s.duration_s > total)
            throw usage_error(fmt::format("spike [{}, {}) lies outside the workload span [0, {}]",
                                          s.time_s, s.time_s + s.duration_s, total));
        if (i > 0 && s.time_s < sorted[i - 1].time_s + sorted[i - 1].duration_s)
            throw usage_error(fmt::format("spikes at t={} and t={} overlap", sorted[i - 1].time_s, s.time_s));
    }
}

GroundTruth ground_truth(const WorkloadSpec& spec)
{
    spec.validate();
    detail::CompensatedSum total;
    for (const auto& p : spec.phases)
        total.add(p.watts * p.duration_s);
    for (const auto& s : spec.spikes) {
        // spike excess over whatever phases it overlaps
        const double s_end = s.time_s + s.duration_s;
        double start = 0.0;
        for (const auto& p : spec.phases) {
            const double end = start + p.duration_s;
            const double lo = std::max(start, s.time_s);
            const double hi = std::min(end, s_end);
            if (hi > lo)
                total.add((s.watts - p.watts) * (hi - lo));
            start = end;
        }
    }
    return {Energy(std::max(0.0, total.value())), {0.0, spec.total_duration()}};
}

std::pair<PowerTrace, GroundTruth> generate(const WorkloadSpec& spec, double sample_interval,
                                            std::string source_id)
{
    GroundTruth truth = ground_truth(spec);
    const auto grid = sample_grid(truth.span.end, sample_interval);
    GaussianSource noise(spec.seed);
    std::vector<Sample> samples;
    samples.reserve(grid.size());
    for (double t : grid) {
        double v = spec.signal_at(t);
        if (spec.noise_std > 0.0)
            v = std::max(0.0, v + spec.noise_std * noise.next());
        samples.push_back({t, v});
    }
    Metadata md{{"generator", "simtrace"},
                {"seed", std::to_string(spec.seed)},
                {"sample_interval_s", detail::format_double(sample_interval)}};
    return {PowerTrace(std::move(source_id), HierarchyLevel::node, SampleKind::instantaneous_power,
                       std::move(samples), std::move(md)),
            truth};
}

UtilizationTrace generate_utilization(const WorkloadSpec& spec, const Loadline& ll,
                                      double sample_interval, std::string source_id)
{
    spec.validate();
    auto in_range = [&](double w) { return w >= ll.min_watts() && w <= ll.max_watts(); };
    for (const auto& p : spec.phases)
        if (!in_range(p.watts))
            throw data_error(fmt::format("phase power {} W outside loadline range [{}, {}] W", p.watts,
                                         ll.min_watts(), ll.max_watts()));
    for (const auto& s : spec.spikes)
        if (!in_range(s.watts))
            throw data_error(fmt::format("spike power {} W outside loadline range [{}, {}] W", s.watts,
                                         ll.min_watts(), ll.max_watts()));
    std::vector<UtilizationSample> samples;
    for (double t : sample_grid(spec.total_duration(), sample_interval))
        samples.push_back({t, loadline_inverse(ll, spec.signal_at(t))});
    return UtilizationTrace(std::move(source_id), std::move(samples), 1, 1,
                            {{"workload", ll.meta().workload_name}, {"generator", "simtrace"}});
}

WorkloadSpec parse_workload_spec(std::string_view json_text)
{
    try {
        const auto doc = nlohmann::json::parse(json_text);
        WorkloadSpec spec;
        for (const auto& p : doc.at("phases"))
            spec.phases.push_back({p.at("duration_s").get<double>(), p.at("watts").get<double>()});
        spec.noise_std = doc.value("noise_std", 0.0);
        if (doc.contains("spikes"))
            for (const auto& s : doc.at("spikes"))
                spec.spikes.push_back({s.at("time_s").get<double>(), s.at("duration_s").get<double>(),
                                       s.at("watts").get<double>()});
        spec.seed = doc.value("seed", std::uint64_t{0});
        spec.validate();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(fmt::format("invalid workload spec: {}", e.what()));
    } catch (const usage_error& e) {
        throw data_error(fmt::format("invalid workload spec: {}", e.what()));
    }
}

std::string workload_spec_to_json(const WorkloadSpec& spec)
{
    nlohmann::json doc;
    doc["phases"] = nlohmann::json::array();
    for (const auto& p : spec.phases)
        doc["phases"].push_back({{"duration_s", p.duration_s}, {"watts", p.watts}});
    doc["noise_std"] = spec.noise_std;
    doc["spikes"] = nlohmann::json::array();
    for (const auto& s : spec.spikes)
        doc["spikes"].push_back({{"time_s", s.time_s}, {"duration_s", s.duration_s}, {"watts", s.watts}});
    doc["seed"] = spec.seed;
    return doc.dump(2) + "\n";
}

std::string ground_truth_to_json(const GroundTruth& truth)
{
    const nlohmann::json doc{{"unit", "J"},
                             {"joules", truth.energy.joules()},
                             {"span", {{"start", truth.span.start}, {"end", truth.span.end}}}};
    return doc.dump(2) + "\n";
}

} // namespace wattledger
