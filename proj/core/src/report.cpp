#include "wattledger/report.hpp"

#include "csv.hpp"
#include "json_io.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <sstream>

namespace wattledger {

using nlohmann::json;

namespace {

using Severity = ValidationFinding::Severity;

std::string num(double v)
{
    return detail::format_double(v);
}

std::string or_unreported(const std::string& s)
{
    return s.empty() ? "_not reported_" : s;
}

json optional_number(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

json report_to_json(const MeasurementReport& r, const std::vector<ValidationFinding>& warnings)
{
    json components = json::array();
    for (const auto& c : r.hardware.components)
        components.push_back({{"kind", c.kind},
                              {"make", c.make},
                              {"model", c.model},
                              {"clock_ghz", optional_number(c.clock_ghz)},
                              {"cores", c.cores ? json(*c.cores) : json(nullptr)},
                              {"memory", c.memory}});
    json results = json::array();
    for (const auto& e : r.results)
        results.push_back(detail::estimate_to_json(e));
    json findings = json::array();
    for (const auto& f : warnings)
        findings.push_back({{"severity", to_string(f.severity)}, {"rule", f.rule}, {"message", f.message}});

    return json{
        {"title", r.title},
        {"hardware", {{"components", components}, {"configuration", r.hardware.configuration}}},
        {"software",
         {{"environment", r.software.environment},
          {"versions", r.software.versions},
          {"optimizations", r.software.optimizations},
          {"parallelism", r.software.parallelism},
          {"workload_context", r.software.workload_context}}},
        {"methodology",
         {{"tools", r.methodology.tools},
          {"setup_conditions", r.methodology.setup_conditions},
          {"calibration_notes", r.methodology.calibration_notes}}},
        {"runtime_over_hardware",
         r.runtime_over_hardware
             ? json{{"duration_s", r.runtime_over_hardware->duration_s},
                    {"resource_description", r.runtime_over_hardware->resource_description}}
             : json(nullptr)},
        {"results", results},
        {"emissions", r.emissions ? detail::emissions_to_json(*r.emissions) : json(nullptr)},
        {"error_sources", r.error_sources},
        {"units_declared", r.units_declared},
        {"validation_warnings", findings},
    };
}

std::string format_duration(double seconds)
{
    if (seconds >= 3600.0)
        return fmt::format("{} s ({:.3g} h)", num(seconds), seconds / 3600.0);
    return fmt::format("{} s", num(seconds));
}

std::string render_markdown(const MeasurementReport& r, const std::vector<ValidationFinding>& warnings)
{
    std::ostringstream out;
    out << "# Energy Measurement Report" << (r.title.empty() ? "" : ": " + r.title) << "\n\n";

    out << "## Hardware Characteristics\n\n";
    if (r.hardware.components.empty())
        out << "- Components: _not reported_\n";
    for (const auto& c : r.hardware.components) {
        std::vector<std::string> specs;
        if (c.clock_ghz)
            specs.push_back(fmt::format("clock {} GHz", num(*c.clock_ghz)));
        if (c.cores)
            specs.push_back(fmt::format("{} cores", *c.cores));
        if (!c.memory.empty())
            specs.push_back(fmt::format("memory {}", c.memory));
        out << fmt::format("- {}: {} {}", or_unreported(c.kind), c.make, c.model);
        if (!specs.empty())
            out << fmt::format(" ({})", fmt::join(specs, ", "));
        out << "\n";
    }
    out << "- Configuration: " << or_unreported(r.hardware.configuration) << "\n\n";

    out << "## Software Characteristics\n\n";
    out << "- Environment: " << or_unreported(r.software.environment) << "\n";
    if (r.software.versions.empty())
        out << "- Versions: _not reported_\n";
    for (const auto& [name, version] : r.software.versions)
        out << fmt::format("- Version: {} {}\n", name, version);
    out << "- Optimizations: " << or_unreported(r.software.optimizations) << "\n";
    out << "- Parallelism: " << or_unreported(r.software.parallelism) << "\n";
    if (!r.software.workload_context.empty())
        out << "- Workload context: " << r.software.workload_context << "\n";
    out << "\n";

    out << "## Measurement Methodology\n\n";
    out << "- Tools: "
        << (r.methodology.tools.empty() ? std::string("_not reported_")
                                        : fmt::format("{}", fmt::join(r.methodology.tools, ", ")))
        << "\n";
    out << "- Setup conditions: " << or_unreported(r.methodology.setup_conditions) << "\n";
    out << "- Calibration: " << or_unreported(r.methodology.calibration_notes) << "\n\n";

    out << "## Additional Considerations\n\n";
    out << "- Units: " << or_unreported(r.units_declared) << "\n";
    if (r.runtime_over_hardware)
        out << fmt::format("- Runtime over hardware: {} on {}\n",
                           format_duration(r.runtime_over_hardware->duration_s),
                           r.runtime_over_hardware->resource_description);
    out << "\n| # | Energy (J) | Energy (kWh) | Duration (s) | Mean power (W) | Method | Basis | Scope | PUE |\n";
    out << "|---|---|---|---|---|---|---|---|---|\n";
    for (std::size_t i = 0; i < r.results.size(); ++i) {
        const auto& e = r.results[i];
        const std::string mean = e.duration() > 0.0 ? num(e.mean_watts()) + " W" : "n/a";
        out << fmt::format("| {} | {} J | {} kWh | {} s | {} | {} | {} | {} ({}) | {} |\n", i + 1,
                           num(e.joules), num(e.joules / kJoulesPerKilowattHour), num(e.duration()),
                           mean, to_string(e.method), to_string(e.basis), to_string(e.scope.level),
                           fmt::join(e.scope.sources, ", "),
                           e.pue_applied ? num(*e.pue_applied) : "none");
    }
    out << "\n";
    for (std::size_t i = 0; i < r.results.size(); ++i) {
        const auto& e = r.results[i];
        if (e.pue_applied)
            out << fmt::format("- Result {}: PUE scaling applied, facility energy = IT energy x {} "
                               "({} J reported)\n",
                               i + 1, num(*e.pue_applied), num(e.joules));
        for (const auto& note : e.notes)
            out << fmt::format("- Result {} note: {}\n", i + 1, note);
    }
    if (r.emissions) {
        const auto& em = *r.emissions;
        out << fmt::format("- Emissions: {} gCO2 from {} J (intensity basis: {}, alignment: {}, region: {})\n",
                           num(em.grams_co2), num(em.energy.joules),
                           em.intensity_basis ? to_string(*em.intensity_basis) : "unrecorded",
                           em.alignment ? to_string(*em.alignment) : "unrecorded",
                           or_unreported(em.region));
    }
    out << "\n";

    out << "## Sources of Error\n\n";
    if (r.error_sources.empty())
        out << "- _none acknowledged_\n";
    for (const auto& s : r.error_sources)
        out << "- " << s << "\n";
    if (!warnings.empty()) {
        out << "\n";
        for (const auto& w : warnings)
            out << fmt::format("> Validation warning [{}]: {}\n", w.rule, w.message);
    }
    return out.str();
}

std::string describe_findings(const std::vector<ValidationFinding>& findings)
{
    std::string s = "report failed validation:";
    for (const auto& f : findings)
        s += fmt::format("\n  {} {}: {}", to_string(f.severity), f.rule, f.message);
    return s;
}

} // namespace

std::string_view to_string(ValidationFinding::Severity s)
{
    return s == Severity::error ? "error" : "warning";
}

const std::map<std::string, std::string>& report_rules()
{
    static const std::map<std::string, std::string> rules{
        {"R-RESULTS", "a report discloses at least one energy estimate"},
        {"R-ESTIMATE", "every estimate is internally consistent (interval, sign, PUE >= 1)"},
        {"R-RUNTIME", "energy or emissions are never reported without runtime over hardware"},
        {"R-EMISSIONS-POWER", "emissions are reported together with the power/energy estimates they derive from"},
        {"R-EMISSIONS-BASIS", "emissions record how intensity was derived (yearly average or real time) and how series were aligned"},
        {"R-EMISSIONS-LOCATION", "emissions record the grid region where the compute ran"},
        {"R-ERROR-SOURCES", "potential sources of error are acknowledged"},
        {"R-TOOLS", "measurement tools are listed"},
        {"R-UNITS", "units of measurement are stated"},
        {"R-HARDWARE", "measured hardware components are described"},
        {"R-SOFTWARE", "the software environment is described"},
    };
    return rules;
}

std::vector<ValidationFinding> validate(const MeasurementReport& report)
{
    std::vector<ValidationFinding> f;
    auto add = [&](Severity sev, std::string rule, std::string message) {
        f.push_back({sev, std::move(rule), std::move(message)});
    };

    const auto& rt = report.runtime_over_hardware;
    const bool runtime_ok = rt && std::isfinite(rt->duration_s) && rt->duration_s > 0.0 &&
                            !rt->resource_description.empty();
    if (report.results.empty())
        add(Severity::error, "R-RESULTS", "report has no energy results");
    for (std::size_t i = 0; i < report.results.size(); ++i) {
        try {
            report.results[i].validate();
        } catch (const error& e) {
            add(Severity::error, "R-ESTIMATE", fmt::format("result {}: {}", i + 1, e.what()));
        }
    }
    if (!report.results.empty() && !runtime_ok)
        add(Severity::error, "R-RUNTIME",
            "energy is reported without runtime over hardware (duration and resource description)");
    if (report.emissions) {
        const auto& em = *report.emissions;
        if (!runtime_ok && report.results.empty())
            add(Severity::error, "R-RUNTIME", "emissions are reported without runtime over hardware");
        if (report.results.empty())
            add(Severity::error, "R-EMISSIONS-POWER", "emissions are reported without power/energy estimates");
        if (!em.intensity_basis)
            add(Severity::error, "R-EMISSIONS-BASIS",
                "emissions do not record whether intensity is a yearly average or real-time");
        if (!em.alignment)
            add(Severity::error, "R-EMISSIONS-BASIS", "emissions do not record how intensity was aligned to power");
        if (em.region.empty())
            add(Severity::error, "R-EMISSIONS-LOCATION", "emissions do not record the grid region");
    }
    if (report.error_sources.empty())
        add(Severity::warning, "R-ERROR-SOURCES", "no sources of error are acknowledged");
    if (report.methodology.tools.empty())
        add(Severity::warning, "R-TOOLS", "no measurement tools are listed");
    if (report.units_declared.empty())
        add(Severity::warning, "R-UNITS", "units of measurement are not stated");
    if (report.hardware.components.empty())
        add(Severity::warning, "R-HARDWARE", "no hardware components are described");
    if (report.software.environment.empty())
        add(Severity::warning, "R-SOFTWARE", "the software environment is not described");

    std::sort(f.begin(), f.end(), [](const auto& a, const auto& b) {
        return std::tie(a.severity, a.rule, a.message) < std::tie(b.severity, b.rule, b.message);
    });
    return f;
}

report_refused::report_refused(std::vector<ValidationFinding> findings)
    : data_error(describe_findings(findings)), findings_(std::move(findings))
{
}

ReportFormat parse_report_format(std::string_view s)
{
    if (s == "json")
        return ReportFormat::json;
    if (s == "markdown" || s == "md")
        return ReportFormat::markdown;
    throw usage_error(fmt::format("unknown report format '{}'", s));
}

std::string render(const MeasurementReport& report, ReportFormat format)
{
    auto findings = validate(report);
    if (std::any_of(findings.begin(), findings.end(),
                    [](const auto& x) { return x.severity == Severity::error; }))
        throw report_refused(std::move(findings));
    if (format == ReportFormat::json)
        return report_to_json(report, findings).dump(2) + "\n";
    return render_markdown(report, findings);
}

MeasurementReport parse_report_json(std::string_view text)
{
    const auto j = detail::parse_document(text, "report");
    try {
        MeasurementReport r;
        r.title = j.value("title", std::string{});
        if (j.contains("hardware")) {
            const auto& hw = j.at("hardware");
            for (const auto& c : hw.value("components", json::array())) {
                HardwareComponent comp;
                comp.kind = c.value("kind", std::string{});
                comp.make = c.value("make", std::string{});
                comp.model = c.value("model", std::string{});
                if (c.contains("clock_ghz") && !c.at("clock_ghz").is_null())
                    comp.clock_ghz = c.at("clock_ghz").get<double>();
                if (c.contains("cores") && !c.at("cores").is_null())
                    comp.cores = c.at("cores").get<int>();
                comp.memory = c.value("memory", std::string{});
                r.hardware.components.push_back(std::move(comp));
            }
            r.hardware.configuration = hw.value("configuration", std::string{});
        }
        if (j.contains("software")) {
            const auto& sw = j.at("software");
            r.software.environment = sw.value("environment", std::string{});
            r.software.versions = sw.value("versions", std::map<std::string, std::string>{});
            r.software.optimizations = sw.value("optimizations", std::string{});
            r.software.parallelism = sw.value("parallelism", std::string{});
            r.software.workload_context = sw.value("workload_context", std::string{});
        }
        if (j.contains("methodology")) {
            const auto& m = j.at("methodology");
            r.methodology.tools = m.value("tools", std::vector<std::string>{});
            r.methodology.setup_conditions = m.value("setup_conditions", std::string{});
            r.methodology.calibration_notes = m.value("calibration_notes", std::string{});
        }
        if (j.contains("runtime_over_hardware") && !j.at("runtime_over_hardware").is_null()) {
            const auto& rt = j.at("runtime_over_hardware");
            r.runtime_over_hardware = RuntimeOverHardware{
                rt.value("duration_s", 0.0), rt.value("resource_description", std::string{})};
        }
        for (const auto& e : j.value("results", json::array()))
            r.results.push_back(detail::estimate_from_json(e));
        if (j.contains("emissions") && !j.at("emissions").is_null())
            r.emissions = detail::emissions_from_json(j.at("emissions"));
        r.error_sources = j.value("error_sources", std::vector<std::string>{});
        r.units_declared = j.value("units_declared", std::string{});
        return r;
    } catch (const json::exception& ex) {
        throw data_error(fmt::format("invalid report: {}", ex.what()));
    }
}

} // namespace wattledger
