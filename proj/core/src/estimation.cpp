#include "wattledger/estimation.hpp"

#include "csv.hpp"
#include "numeric.hpp"
#include "wattledger/error.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <fmt/format.h>
#include <set>

namespace wattledger {

namespace {

constexpr std::array<std::string_view, 4> kMethodNames{"zero_order", "trapezoid", "proxy_loadline",
                                                       "tdp_bound"};
constexpr std::array<std::string_view, 2> kBasisNames{"absolute", "marginal"};

std::string describe(const IdleBaseline& b)
{
    if (b.method == IdleBaseline::Method::percentile)
        return fmt::format("{} W (p{} of '{}')", detail::format_double(b.watts.watts()),
                           detail::format_double(b.percentile * 100.0), b.source_id);
    return fmt::format("{} W (declared for '{}')", detail::format_double(b.watts.watts()),
                       b.source_id);
}

} // namespace

std::string_view to_string(EstimationMethod m)
{
    return kMethodNames.at(static_cast<std::size_t>(m));
}

std::string_view to_string(EnergyBasis b)
{
    return kBasisNames.at(static_cast<std::size_t>(b));
}

EstimationMethod parse_estimation_method(std::string_view s)
{
    for (std::size_t i = 0; i < kMethodNames.size(); ++i)
        if (kMethodNames[i] == s)
            return static_cast<EstimationMethod>(i);
    throw usage_error(fmt::format("unknown estimation method '{}'", s));
}

EnergyBasis parse_energy_basis(std::string_view s)
{
    for (std::size_t i = 0; i < kBasisNames.size(); ++i)
        if (kBasisNames[i] == s)
            return static_cast<EnergyBasis>(i);
    throw usage_error(fmt::format("unknown energy basis '{}'", s));
}

double EnergyEstimate::mean_watts() const
{
    if (!(duration() > 0.0))
        throw usage_error("mean power of a zero-length estimate is undefined");
    return joules / duration();
}

void EnergyEstimate::validate() const
{
    if (!std::isfinite(joules))
        throw usage_error("estimate energy is not finite");
    if (!std::isfinite(interval.start) || !std::isfinite(interval.end) || interval.end < interval.start)
        throw usage_error(fmt::format("estimate interval [{}, {}] is invalid", interval.start,
                                      interval.end));
    if (basis == EnergyBasis::absolute && joules < 0.0)
        throw usage_error(fmt::format("absolute estimate is negative ({} J)", joules));
    if (pue_applied && !(*pue_applied >= 1.0))
        throw usage_error(fmt::format("recorded PUE {} is below 1", *pue_applied));
}

IdleBaseline IdleBaseline::declared(Power watts, std::string source_id, TimeRange window)
{
    IdleBaseline b;
    b.watts = watts;
    b.method = Method::declared;
    b.window = window;
    b.source_id = std::move(source_id);
    return b;
}

bool IdleBaseline::same_method(const IdleBaseline& other) const noexcept
{
    if (method != other.method)
        return false;
    return method == Method::declared || percentile == other.percentile;
}

EnergyEstimate integrate(const PowerTrace& trace, TimeRange interval, IntegrationMethod method)
{
    if (!trace.is_power())
        throw usage_error(fmt::format("trace '{}' holds cumulative energy; decode it first",
                                      trace.source_id()));
    if (!std::isfinite(interval.start) || !std::isfinite(interval.end) ||
        !(interval.end > interval.start))
        throw usage_error(fmt::format("empty integration interval [{}, {}]", interval.start,
                                      interval.end));
    const auto covered = trace.coverage();
    if (interval.start < covered.start || interval.end > covered.end)
        throw data_error(fmt::format("interval [{}, {}] not covered by trace '{}' span [{}, {}]",
                                     interval.start, interval.end, trace.source_id(),
                                     covered.start, covered.end));

    const auto s = trace.samples();
    const bool holds_backward = trace.kind() == SampleKind::interval_average_power;
    detail::CompensatedSum area;
    if (interval.start < s.front().t) // first averaging window, before the first stamp
        area.add(s.front().value * (std::min(interval.end, s.front().t) - interval.start));
    // first segment whose end lies after interval.start
    auto first = std::upper_bound(s.begin(), s.end(), interval.start,
                                  [](double x, const Sample& v) { return x < v.t; });
    std::size_t i = first == s.begin() ? 0 : static_cast<std::size_t>(first - s.begin()) - 1;

    for (; i + 1 < s.size() && s[i].t < interval.end; ++i) {
        const double lo = std::max(s[i].t, interval.start);
        const double hi = std::min(s[i + 1].t, interval.end);
        if (!(hi > lo))
            continue;
        if (method == IntegrationMethod::zero_order) {
            const double v = holds_backward ? s[i + 1].value : s[i].value;
            area.add(v * (hi - lo));
        } else {
            const double span = s[i + 1].t - s[i].t;
            const double slope = (s[i + 1].value - s[i].value) / span;
            const double v_lo = lo == s[i].t ? s[i].value : s[i].value + slope * (lo - s[i].t);
            const double v_hi = hi == s[i + 1].t ? s[i + 1].value : s[i].value + slope * (hi - s[i].t);
            area.add(0.5 * (v_lo + v_hi) * (hi - lo));
        }
    }

    EnergyEstimate e;
    e.joules = std::max(0.0, area.value());
    e.interval = interval;
    e.method = method == IntegrationMethod::zero_order ? EstimationMethod::zero_order
                                                        : EstimationMethod::trapezoid;
    e.scope = {trace.level(), {trace.source_id()}};
    e.basis = EnergyBasis::absolute;
    if (holds_backward && method == IntegrationMethod::trapezoid)
        e.notes.emplace_back("trapezoid applied to interval-average samples; zero_order is exact for them");
    if (auto it = trace.metadata().find("declared_interval_s"); it != trace.metadata().end())
        e.notes.push_back(fmt::format("source declares a {} s averaging interval", it->second));
    return e;
}

IdleBaseline estimate_idle_baseline(const PowerTrace& trace, double p)
{
    if (!(p > 0.0 && p < 1.0))
        throw usage_error(fmt::format("percentile must lie in (0, 1), got {}", p));
    if (!trace.is_power())
        throw usage_error("idle baselines need a power trace; decode counters first");
    const auto s = trace.samples();
    const double n = static_cast<double>(s.size());
    if (n * p < 1.0 - 1e-9)
        throw data_error(fmt::format(
            "trace '{}' has {} samples; the p={} quantile needs at least {}. Use a longer window",
            trace.source_id(), s.size(), p, static_cast<std::size_t>(std::ceil(1.0 / p - 1e-9))));

    std::vector<double> values;
    values.reserve(s.size());
    for (const auto& x : s)
        values.push_back(x.value);
    std::sort(values.begin(), values.end());
    const auto rank = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(n * p - 1e-9)));

    IdleBaseline b;
    b.watts = Power(values[rank - 1]);
    b.method = IdleBaseline::Method::percentile;
    b.percentile = p;
    b.window = trace.span();
    b.source_id = trace.source_id();
    return b;
}

EnergyEstimate marginal_energy(const EnergyEstimate& absolute, const IdleBaseline& baseline)
{
    if (absolute.basis != EnergyBasis::absolute)
        throw usage_error("marginal energy needs an absolute estimate");
    if (absolute.pue_applied)
        throw usage_error("subtract the idle baseline before applying PUE");
    const auto& src = absolute.scope.sources;
    if (std::find(src.begin(), src.end(), baseline.source_id) == src.end())
        throw data_error(fmt::format("baseline source '{}' does not match estimate sources [{}]",
                                     baseline.source_id, fmt::join(src, ", ")));

    EnergyEstimate m = absolute;
    m.joules = absolute.joules - baseline.watts.watts() * absolute.duration();
    m.basis = EnergyBasis::marginal;
    m.notes.push_back(fmt::format("marginal: subtracted idle baseline {} over {} s", describe(baseline),
                                  detail::format_double(absolute.duration())));
    if (m.joules < 0.0)
        m.notes.push_back(fmt::format(
            "warning: marginal energy is negative ({} J); workload ran below the baseline or the "
            "baseline is overestimated",
            detail::format_double(m.joules)));
    return m;
}

EnergyEstimate standardize_to_reference(const EnergyEstimate& estimate, const IdleBaseline& node,
                                        const IdleBaseline& reference)
{
    if (!node.same_method(reference))
        throw usage_error("node and reference baselines were estimated with different methods");
    if (estimate.pue_applied)
        throw usage_error("standardize before applying PUE");

    EnergyEstimate out = estimate;
    const double offset = node.watts.watts() - reference.watts.watts();
    out.joules = estimate.joules - offset * estimate.duration();
    if (out.basis == EnergyBasis::absolute && out.joules < 0.0)
        throw data_error(fmt::format("standardized absolute energy would be negative ({} J)",
                                     detail::format_double(out.joules)));
    out.notes.push_back(fmt::format("standardized: node baseline {}, reference baseline {}, offset {} W",
                                    describe(node), describe(reference),
                                    detail::format_double(offset)));
    return out;
}

OffsetFit fit_offsets(const std::vector<OffsetObservation>& repetitions,
                      const std::string& reference_class)
{
    std::map<std::string, std::size_t> counts;
    for (const auto& r : repetitions)
        ++counts[r.node_class];
    if (counts.size() < 2)
        throw usage_error("offset fit needs at least two node classes; the design is singular");
    if (!counts.contains(reference_class))
        throw usage_error(fmt::format("reference class '{}' has no repetitions", reference_class));
    for (const auto& [cls, n] : counts)
        if (n < 2)
            throw usage_error(fmt::format("node class '{}' has {} repetition(s); need at least 2", cls, n));
    const auto& workload = repetitions.front().workload;
    const auto basis = repetitions.front().estimate.basis;
    for (const auto& r : repetitions) {
        if (r.workload != workload)
            throw usage_error(fmt::format("offset fit mixes workloads '{}' and '{}'", workload, r.workload));
        if (r.estimate.basis != basis)
            throw usage_error("offset fit mixes absolute and marginal estimates");
        if (!(r.estimate.duration() > 0.0))
            throw usage_error("offset fit needs estimates with positive duration");
    }

    // column 0: common workload energy; then one column per non-reference class
    std::map<std::string, Eigen::Index> column;
    Eigen::Index next = 1;
    for (const auto& [cls, n] : counts)
        if (cls != reference_class)
            column[cls] = next++;

    const auto rows = static_cast<Eigen::Index>(repetitions.size());
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(rows, next);
    Eigen::VectorXd energy(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& r = repetitions[static_cast<std::size_t>(i)];
        design(i, 0) = 1.0;
        if (auto it = column.find(r.node_class); it != column.end())
            design(i, it->second) = r.estimate.duration();
        energy(i) = r.estimate.joules;
    }

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < next)
        throw data_error("offset fit design is rank deficient; durations cannot separate class offsets");
    const Eigen::VectorXd beta = qr.solve(energy);
    const Eigen::VectorXd residual = energy - design * beta;

    OffsetFit fit;
    fit.reference_class = reference_class;
    fit.common_joules = beta(0);
    fit.offsets_watts[reference_class] = 0.0;
    for (const auto& [cls, col] : column)
        fit.offsets_watts[cls] = beta(col);
    double sq = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double w = residual(i) / repetitions[static_cast<std::size_t>(i)].estimate.duration();
        sq += w * w;
    }
    fit.residual_rms_watts = std::sqrt(sq / static_cast<double>(rows));
    return fit;
}

EnergyEstimate apply_pue(const EnergyEstimate& estimate, double pue)
{
    if (!std::isfinite(pue) || pue < 1.0)
        throw usage_error(fmt::format("PUE must be at least 1, got {}", pue));
    if (estimate.pue_applied)
        throw usage_error(fmt::format("PUE {} already applied to this estimate",
                                      detail::format_double(*estimate.pue_applied)));
    EnergyEstimate out = estimate;
    out.joules = estimate.joules * pue;
    out.pue_applied = pue;
    out.notes.push_back(fmt::format("scaled by PUE {} to facility energy", detail::format_double(pue)));
    return out;
}

} // namespace wattledger
