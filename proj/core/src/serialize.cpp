#include "wattledger/serialize.hpp"

#include "json_io.hpp"
#include "wattledger/error.hpp"
#include "wattledger/units.hpp"

#include <fmt/format.h>

namespace wattledger {

using nlohmann::json;

namespace detail {

namespace {

json optional_number(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

} // namespace

json parse_document(std::string_view text, std::string_view what)
{
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw data_error(fmt::format("invalid {} JSON: {}", what, e.what()));
    }
}

json estimate_to_json(const EnergyEstimate& e)
{
    return json{{"unit", "J"},
                {"joules", e.joules},
                {"interval", {{"start", e.interval.start}, {"end", e.interval.end}}},
                {"method", to_string(e.method)},
                {"basis", to_string(e.basis)},
                {"scope", {{"level", to_string(e.scope.level)}, {"sources", e.scope.sources}}},
                {"pue_applied", optional_number(e.pue_applied)},
                {"notes", e.notes}};
}

EnergyEstimate estimate_from_json(const json& j)
{
    try {
        for (const char* key : {"unit", "joules", "interval", "method", "basis", "scope"})
            if (!j.contains(key))
                throw data_error(fmt::format("energy estimate lacks mandatory provenance field '{}'", key));
        const auto unit = parse_unit(j.at("unit").get<std::string>());
        if (!unit.is_energy())
            throw data_error(fmt::format("energy estimate unit '{}' is not an energy unit", unit_symbol(unit)));
        EnergyEstimate e;
        e.joules = to_canonical(j.at("joules").get<double>(), unit);
        e.interval = {j.at("interval").at("start").get<double>(), j.at("interval").at("end").get<double>()};
        e.method = parse_estimation_method(j.at("method").get<std::string>());
        e.basis = parse_energy_basis(j.at("basis").get<std::string>());
        e.scope.level = parse_hierarchy_level(j.at("scope").at("level").get<std::string>());
        e.scope.sources = j.at("scope").value("sources", std::vector<std::string>{});
        if (j.contains("pue_applied") && !j.at("pue_applied").is_null())
            e.pue_applied = j.at("pue_applied").get<double>();
        e.notes = j.value("notes", std::vector<std::string>{});
        e.validate();
        return e;
    } catch (const json::exception& ex) {
        throw data_error(fmt::format("invalid energy estimate: {}", ex.what()));
    } catch (const usage_error& ex) {
        throw data_error(fmt::format("invalid energy estimate: {}", ex.what()));
    }
}

json emissions_to_json(const EmissionsEstimate& e)
{
    return json{{"unit", "gCO2"},
                {"grams_co2", e.grams_co2},
                {"energy", estimate_to_json(e.energy)},
                {"intensity_basis", e.intensity_basis ? json(to_string(*e.intensity_basis)) : json(nullptr)},
                {"alignment", e.alignment ? json(to_string(*e.alignment)) : json(nullptr)},
                {"region", e.region}};
}

EmissionsEstimate emissions_from_json(const json& j)
{
    try {
        EmissionsEstimate e;
        e.grams_co2 = j.at("grams_co2").get<double>();
        if (!(e.grams_co2 >= 0.0))
            throw data_error("emissions must be non-negative");
        e.energy = estimate_from_json(j.at("energy"));
        if (j.contains("intensity_basis") && !j.at("intensity_basis").is_null())
            e.intensity_basis = parse_intensity_basis(j.at("intensity_basis").get<std::string>());
        if (j.contains("alignment") && !j.at("alignment").is_null())
            e.alignment = parse_alignment(j.at("alignment").get<std::string>());
        e.region = j.value("region", std::string{});
        return e;
    } catch (const json::exception& ex) {
        throw data_error(fmt::format("invalid emissions estimate: {}", ex.what()));
    } catch (const usage_error& ex) {
        throw data_error(fmt::format("invalid emissions estimate: {}", ex.what()));
    }
}

} // namespace detail

std::string to_json(const EnergyEstimate& e)
{
    return detail::estimate_to_json(e).dump(2) + "\n";
}

EnergyEstimate energy_estimate_from_json(std::string_view text)
{
    return detail::estimate_from_json(detail::parse_document(text, "energy estimate"));
}

std::vector<EnergyEstimate> energy_estimates_from_json(std::string_view text)
{
    const auto doc = detail::parse_document(text, "energy estimate");
    std::vector<EnergyEstimate> out;
    if (doc.is_array()) {
        for (const auto& item : doc)
            out.push_back(detail::estimate_from_json(item));
    } else {
        out.push_back(detail::estimate_from_json(doc));
    }
    return out;
}

std::string to_json(const std::vector<EnergyEstimate>& estimates)
{
    json arr = json::array();
    for (const auto& e : estimates)
        arr.push_back(detail::estimate_to_json(e));
    return arr.dump(2) + "\n";
}

std::string to_json(const IdleBaseline& b)
{
    const bool pct = b.method == IdleBaseline::Method::percentile;
    const json doc{{"unit", "W"},
                   {"watts", b.watts.watts()},
                   {"method", pct ? "percentile" : "declared"},
                   {"percentile", pct ? json(b.percentile) : json(nullptr)},
                   {"window", {{"start", b.window.start}, {"end", b.window.end}}},
                   {"source_id", b.source_id}};
    return doc.dump(2) + "\n";
}

IdleBaseline idle_baseline_from_json(std::string_view text)
{
    const auto j = detail::parse_document(text, "idle baseline");
    try {
        const auto unit = parse_unit(j.value("unit", std::string("W")));
        if (unit.is_energy())
            throw data_error("idle baseline unit must be a power unit");
        IdleBaseline b;
        b.watts = Power(to_canonical(j.at("watts").get<double>(), unit));
        const auto method = j.value("method", std::string("declared"));
        if (method == "percentile") {
            b.method = IdleBaseline::Method::percentile;
            b.percentile = j.at("percentile").get<double>();
            if (!(b.percentile > 0.0 && b.percentile < 1.0))
                throw data_error("baseline percentile must lie in (0, 1)");
        } else if (method == "declared") {
            b.method = IdleBaseline::Method::declared;
        } else {
            throw data_error(fmt::format("unknown baseline method '{}'", method));
        }
        if (j.contains("window"))
            b.window = {j.at("window").at("start").get<double>(), j.at("window").at("end").get<double>()};
        b.source_id = j.at("source_id").get<std::string>();
        return b;
    } catch (const json::exception& ex) {
        throw data_error(fmt::format("invalid idle baseline: {}", ex.what()));
    } catch (const usage_error& ex) {
        throw data_error(fmt::format("invalid idle baseline: {}", ex.what()));
    }
}

std::string to_json(const EmissionsEstimate& e)
{
    return detail::emissions_to_json(e).dump(2) + "\n";
}

EmissionsEstimate emissions_from_json(std::string_view text)
{
    return detail::emissions_from_json(detail::parse_document(text, "emissions"));
}

std::string to_json(const TraceDiagnostics& d)
{
    json gaps = json::array();
    for (const auto& g : d.gaps)
        gaps.push_back({{"start", g.start}, {"end", g.end}});
    const json doc{{"uniform_interval_s", detail::optional_number(d.uniform_interval)},
                   {"median_interval_s", detail::optional_number(d.median_interval)},
                   {"min_interval_s", detail::optional_number(d.min_interval)},
                   {"zero_variance", d.zero_variance},
                   {"gaps", gaps}};
    return doc.dump(2) + "\n";
}

std::string to_json(const SamplingAdequacy& s)
{
    const json doc{{"samples_in_window", s.samples_in_window},
                   {"min_interval_s", detail::optional_number(s.min_interval)},
                   {"warnings", s.warnings}};
    return doc.dump(2) + "\n";
}

std::string to_json(const OffsetFit& f)
{
    const json doc{{"unit", "W"},
                   {"reference_class", f.reference_class},
                   {"offsets_watts", f.offsets_watts},
                   {"residual_rms_watts", f.residual_rms_watts},
                   {"common_joules", f.common_joules}};
    return doc.dump(2) + "\n";
}

std::string to_json(const ComparisonResult& r)
{
    const json doc{{"unit", "J"},
                   {"test", to_string(r.test)},
                   {"mean_diff_joules", r.mean_diff_joules},
                   {"ci", {{"low", r.ci.low}, {"high", r.ci.high}, {"confidence", r.confidence}}},
                   {"p_value", r.p_value},
                   {"n", {r.n.first, r.n.second}},
                   {"statistic", detail::optional_number(r.statistic)},
                   {"degrees_of_freedom", detail::optional_number(r.degrees_of_freedom)},
                   {"exact", r.exact},
                   {"notes", r.notes}};
    return doc.dump(2) + "\n";
}

std::string to_json(const RunSet& rs)
{
    json estimates = json::array();
    for (const auto& e : rs.estimates())
        estimates.push_back(detail::estimate_to_json(e));
    const json doc{{"label", rs.label()}, {"condition", rs.condition()}, {"estimates", estimates}};
    return doc.dump(2) + "\n";
}

RunSet run_set_from_json(std::string_view text)
{
    const auto j = detail::parse_document(text, "run set");
    try {
        std::vector<EnergyEstimate> estimates;
        if (j.is_array()) {
            for (const auto& item : j)
                estimates.push_back(detail::estimate_from_json(item));
            return RunSet("runs", std::move(estimates));
        }
        for (const auto& item : j.at("estimates"))
            estimates.push_back(detail::estimate_from_json(item));
        return RunSet(j.value("label", std::string("runs")), std::move(estimates),
                      j.value("condition", std::map<std::string, std::string>{}));
    } catch (const json::exception& ex) {
        throw data_error(fmt::format("invalid run set: {}", ex.what()));
    } catch (const usage_error& ex) {
        throw data_error(fmt::format("invalid run set: {}", ex.what()));
    }
}

} // namespace wattledger
