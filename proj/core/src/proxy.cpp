#include "wattledger/proxy.hpp"

#include "csv.hpp"
#include "wattledger/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace wattledger {

namespace {

constexpr std::string_view kUtilizationBasis = "fraction_of_max_throughput";

bool finite_nonneg(double v)
{
    return std::isfinite(v) && v >= 0.0;
}

} // namespace

Loadline::Loadline(std::vector<LoadlinePoint> points, LoadlineMeta meta)
    : points_(std::move(points)), meta_(std::move(meta))
{
    if (points_.size() < 2)
        throw usage_error("a loadline needs at least two calibration points");
    if (points_.front().utilization != 0.0)
        throw usage_error(fmt::format(
            "loadline '{}' lacks the active-idle point at utilization 0", meta_.workload_name));
    if (points_.back().utilization != 1.0)
        throw usage_error(fmt::format("loadline '{}' must end at utilization 1", meta_.workload_name));
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto& p = points_[i];
        if (!std::isfinite(p.utilization) || !finite_nonneg(p.watts))
            throw usage_error(fmt::format("loadline point {} is not finite and non-negative", i));
        if (i > 0 && !(p.utilization > points_[i - 1].utilization))
            throw usage_error(fmt::format("loadline utilizations must strictly increase (point {})", i));
        if (i > 0 && p.watts < points_[i - 1].watts)
            throw usage_error(fmt::format("loadline watts decrease at point {}", i));
    }
    if (!std::isfinite(meta_.tdp_watts) || meta_.tdp_watts <= 0.0)
        throw usage_error("loadline TDP must be positive");
    if (!finite_nonneg(meta_.base_clock_ghz))
        throw usage_error("loadline base clock must be non-negative");
    if (meta_.max_throughput_ops && !(*meta_.max_throughput_ops > 0.0))
        throw usage_error("loadline max throughput M must be positive");
}

Power loadline_power(const Loadline& ll, double utilization)
{
    if (!std::isfinite(utilization) || utilization < 0.0 || utilization > 1.0)
        throw usage_error(fmt::format(
            "utilization {} outside [0, 1]; normalize hyperthreaded utilization first", utilization));
    const auto& p = ll.points();
    auto hi = std::lower_bound(p.begin(), p.end(), utilization,
                               [](const LoadlinePoint& x, double u) { return x.utilization < u; });
    if (hi->utilization == utilization)
        return Power(hi->watts);
    const auto lo = std::prev(hi);
    const double frac = (utilization - lo->utilization) / (hi->utilization - lo->utilization);
    const double w = lo->watts + (hi->watts - lo->watts) * frac;
    return Power(std::clamp(w, lo->watts, hi->watts));
}

double loadline_inverse(const Loadline& ll, double watts)
{
    if (!std::isfinite(watts) || watts < ll.min_watts() || watts > ll.max_watts())
        throw data_error(fmt::format("power {} W outside loadline range [{}, {}] W", watts,
                                     ll.min_watts(), ll.max_watts()));
    const auto& p = ll.points();
    if (watts == p.front().watts)
        return 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        if (watts > p[i + 1].watts)
            continue;
        if (watts == p[i + 1].watts)
            return p[i + 1].utilization;
        const double frac = (watts - p[i].watts) / (p[i + 1].watts - p[i].watts);
        return p[i].utilization + frac * (p[i + 1].utilization - p[i].utilization);
    }
    return 1.0;
}

EnergyEstimate energy_from_utilization(const UtilizationTrace& util, const Loadline& ll,
                                       TimeRange interval)
{
    std::vector<Sample> power;
    power.reserve(util.samples().size());
    for (const auto& s : util.samples()) {
        if (s.utilization > 1.0)
            throw usage_error(fmt::format(
                "utilization {} at t={} exceeds 1; apply normalize_hyperthread_utilization first",
                s.utilization, s.t));
        power.push_back({s.t, loadline_power(ll, s.utilization).watts()});
    }
    const PowerTrace trace(util.source_id(), HierarchyLevel::node, SampleKind::instantaneous_power,
                           std::move(power));
    EnergyEstimate e = integrate(trace, interval, IntegrationMethod::zero_order);
    e.method = EstimationMethod::proxy_loadline;
    e.notes.push_back(fmt::format(
        "proxy: loadline '{}' ({}, TDP {} W); OS utilization assumed equal to the fraction of max "
        "throughput M",
        ll.meta().workload_name, ll.meta().architecture, detail::format_double(ll.meta().tdp_watts)));
    if (auto it = util.metadata().find("workload"); it != util.metadata().end() &&
                                                    it->second != ll.meta().workload_name)
        e.notes.push_back(fmt::format("warning: workload '{}' differs from loadline benchmark '{}'",
                                      it->second, ll.meta().workload_name));
    return e;
}

NormalizedUtilization normalize_hyperthread_utilization(double reported_percent, int physical_cores)
{
    if (!finite_nonneg(reported_percent))
        throw usage_error(fmt::format("reported utilization must be non-negative, got {}", reported_percent));
    if (physical_cores < 1)
        throw usage_error("physical core count must be at least 1");
    NormalizedUtilization out;
    out.fraction = reported_percent / (100.0 * physical_cores);
    if (out.fraction > 1.0) {
        out.warning = fmt::format(
            "reported {}% on {} physical cores exceeds full load (SMT over-commit); clamped to 1",
            detail::format_double(reported_percent), physical_cores);
        out.fraction = 1.0;
    }
    return out;
}

UtilizationTrace normalize_utilization_trace(const UtilizationTrace& percent_trace,
                                             std::vector<std::string>* warnings)
{
    std::vector<UtilizationSample> samples;
    samples.reserve(percent_trace.samples().size());
    std::size_t clamped = 0;
    for (const auto& s : percent_trace.samples()) {
        const auto n = normalize_hyperthread_utilization(s.utilization, percent_trace.physical_cores());
        if (n.warning)
            ++clamped;
        samples.push_back({s.t, n.fraction});
    }
    if (clamped > 0 && warnings)
        warnings->push_back(fmt::format(
            "{} utilization sample(s) exceeded {} physical cores at full load and were clamped to 1",
            clamped, percent_trace.physical_cores()));
    return UtilizationTrace(percent_trace.source_id(), std::move(samples),
                            percent_trace.physical_cores(), percent_trace.logical_per_core(),
                            percent_trace.metadata());
}

EnergyEstimate tdp_energy_bound(const SystemDescriptor& desc, double duration_s)
{
    const Energy bound = energy_from_constant_power(desc.tdp, duration_s);
    EnergyEstimate e;
    e.joules = bound.joules();
    e.interval = {0.0, duration_s};
    e.method = EstimationMethod::tdp_bound;
    e.scope = {HierarchyLevel::component, {desc.architecture}};
    e.basis = EnergyBasis::absolute;
    e.notes.push_back(fmt::format("upper-bound proxy: TDP {} W held for the whole run; not a measurement",
                                  detail::format_double(desc.tdp.watts())));
    return e;
}

double loadline_score(const Loadline& ll, const SystemDescriptor& desc)
{
    const auto& m = ll.meta();
    double score = 0.0;
    if (m.architecture == desc.architecture)
        score += 4.0;
    if (desc.tdp.watts() > 0.0)
        score += 2.0 * std::max(0.0, 1.0 - std::abs(m.tdp_watts - desc.tdp.watts()) / desc.tdp.watts());
    if (desc.base_clock_ghz > 0.0 && m.base_clock_ghz > 0.0)
        score += std::max(0.0, 1.0 - std::abs(m.base_clock_ghz - desc.base_clock_ghz) / desc.base_clock_ghz);
    if (desc.workload_name && *desc.workload_name == m.workload_name)
        score += 2.0;
    return score;
}

std::pair<Loadline, double> select_loadline(const std::vector<Loadline>& catalog,
                                            const SystemDescriptor& desc)
{
    if (catalog.empty())
        throw usage_error("loadline catalog is empty");
    std::size_t best = 0;
    double best_score = loadline_score(catalog[0], desc);
    for (std::size_t i = 1; i < catalog.size(); ++i) {
        const double score = loadline_score(catalog[i], desc);
        const auto& cand = catalog[i].meta();
        const auto& inc = catalog[best].meta();
        const double cand_dt = std::abs(cand.tdp_watts - desc.tdp.watts());
        const double inc_dt = std::abs(inc.tdp_watts - desc.tdp.watts());
        bool better = score > best_score;
        if (score == best_score)
            better = cand_dt < inc_dt || (cand_dt == inc_dt && cand.workload_name < inc.workload_name);
        if (better) {
            best = i;
            best_score = score;
        }
    }
    return {catalog[best], best_score};
}

EnergyEstimate apply_calibration(const EnergyEstimate& estimate, const CalibrationFactor& factor)
{
    if (!std::isfinite(factor.scale) || factor.scale <= 0.0)
        throw usage_error(fmt::format("calibration scale must be positive, got {}", factor.scale));
    EnergyEstimate out = estimate;
    out.joules = estimate.joules * factor.scale;
    out.notes.push_back(fmt::format("calibrated by factor {} ({})", detail::format_double(factor.scale),
                                    factor.source.empty() ? "unspecified source" : factor.source));
    return out;
}

Loadline parse_loadline_json(std::string_view text)
{
    try {
        const auto doc = nlohmann::json::parse(text);
        const auto& meta = doc.at("meta");
        LoadlineMeta m;
        m.architecture = meta.at("architecture").get<std::string>();
        m.tdp_watts = meta.at("tdp_watts").get<double>();
        m.base_clock_ghz = meta.value("base_clock_ghz", 0.0);
        m.workload_name = meta.value("workload_name", std::string{});
        if (meta.contains("max_throughput_M") && !meta.at("max_throughput_M").is_null())
            m.max_throughput_ops = meta.at("max_throughput_M").get<double>();
        if (doc.contains("utilization_basis") &&
            doc.at("utilization_basis").get<std::string>() != kUtilizationBasis)
            throw data_error(fmt::format("unsupported utilization_basis '{}'; expected '{}'",
                                         doc.at("utilization_basis").get<std::string>(),
                                         kUtilizationBasis));
        std::vector<LoadlinePoint> points;
        for (const auto& p : doc.at("points"))
            points.push_back({p.at("utilization").get<double>(), p.at("watts").get<double>()});
        return Loadline(std::move(points), std::move(m));
    } catch (const nlohmann::json::exception& e) {
        throw data_error(fmt::format("invalid loadline document: {}", e.what()));
    } catch (const usage_error& e) {
        throw data_error(fmt::format("invalid loadline: {}", e.what()));
    }
}

std::string loadline_to_json(const Loadline& ll)
{
    nlohmann::json doc;
    const auto& m = ll.meta();
    doc["meta"] = {{"architecture", m.architecture},
                   {"tdp_watts", m.tdp_watts},
                   {"base_clock_ghz", m.base_clock_ghz},
                   {"workload_name", m.workload_name},
                   {"max_throughput_M", m.max_throughput_ops ? nlohmann::json(*m.max_throughput_ops)
                                                             : nlohmann::json(nullptr)}};
    doc["utilization_basis"] = kUtilizationBasis;
    doc["points"] = nlohmann::json::array();
    for (const auto& p : ll.points())
        doc["points"].push_back({{"utilization", p.utilization}, {"watts", p.watts}});
    return doc.dump(2) + "\n";
}

Loadline load_loadline(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw data_error(fmt::format("cannot open loadline '{}'", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_loadline_json(buf.str());
    } catch (const data_error& e) {
        throw data_error(fmt::format("{}: {}", path.string(), e.what()));
    }
}

std::vector<Loadline> load_catalog(const std::filesystem::path& dir)
{
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec))
        throw data_error(fmt::format("loadline catalog '{}' is not a directory", dir.string()));
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<Loadline> catalog;
    catalog.reserve(files.size());
    for (const auto& f : files)
        catalog.push_back(load_loadline(f));
    return catalog;
}

} // namespace wattledger
