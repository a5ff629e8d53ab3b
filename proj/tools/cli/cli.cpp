#include "cli.hpp"

#include "json_config.hpp"

#include <wattledger/carbon.hpp>
#include <wattledger/error.hpp>
#include <wattledger/estimation.hpp>
#include <wattledger/proxy.hpp>
#include <wattledger/report.hpp>
#include <wattledger/serialize.hpp>
#include <wattledger/simtrace.hpp>
#include <wattledger/stats.hpp>
#include <wattledger/telemetry.hpp>
#include <wattledger/units.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#ifndef WATTLEDGER_VERSION
#define WATTLEDGER_VERSION "0.0.0"
#endif

namespace wattledger::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- plumbing --------------------------------------------------------------

class Io {
public:
    explicit Io(Streams s) : s_(s) {}

    std::ostream& err() { return s_.err; }

    std::string read(const std::string& path)
    {
        if (path == "-") {
            if (stdin_used_)
                throw usage_error("standard input can be read only once");
            stdin_used_ = true;
            std::ostringstream ss;
            ss << s_.in.rdbuf();
            return ss.str();
        }
        std::ifstream f(path, std::ios::binary);
        if (!f)
            throw usage_error(fmt::format("cannot open '{}'", path));
        std::ostringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }

    void write(const std::string& path, const std::string& text)
    {
        if (path.empty() || path == "-") {
            s_.out << text;
            s_.out.flush();
            return;
        }
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f)
            throw usage_error(fmt::format("cannot write '{}'", path));
        f << text;
        if (!f)
            throw data_error(fmt::format("failed writing '{}'", path));
    }

    void warn(const std::string& message) { s_.err << "warning: " << message << '\n'; }

private:
    Streams s_;
    bool stdin_used_ = false;
};

fs::path normalized(const std::string& p)
{
    std::error_code ec;
    auto abs = fs::weakly_canonical(fs::absolute(p, ec), ec);
    return ec ? fs::path(p).lexically_normal() : abs;
}

/// Every output path must differ from every input path.
void check_distinct(const std::vector<std::string>& inputs, const std::vector<std::string>& outputs)
{
    std::vector<fs::path> seen;
    for (const auto& out : outputs) {
        if (out.empty() || out == "-")
            continue;
        const auto o = normalized(out);
        for (const auto& in : inputs)
            if (!in.empty() && in != "-" && normalized(in) == o)
                throw usage_error(fmt::format("output '{}' would overwrite input '{}'", out, in));
        if (std::find(seen.begin(), seen.end(), o) != seen.end())
            throw usage_error(fmt::format("output '{}' given twice", out));
        seen.push_back(o);
    }
}

/// Runs fn(i) for i in [0, n) on at most `jobs` threads; results keep input order.
/// The first failure in input order is rethrown.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, int jobs, Fn fn)
{
    std::vector<std::optional<T>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::max(1, jobs));
    if (threads == 1 || n <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < std::min(threads, n); ++t)
            pool.emplace_back(worker);
    }
    std::vector<T> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (errors[i])
            std::rethrow_exception(errors[i]);
        out.push_back(std::move(*slots[i]));
    }
    return out;
}

std::string fmt_num(double v)
{
    return fmt::format("{}", v);
}

std::string json_text(const json& j)
{
    return j.dump(2) + "\n";
}

/// Merges per-item JSON documents: a single item stays an object.
std::string json_list(const std::vector<std::string>& docs)
{
    if (docs.size() == 1)
        return docs.front();
    json arr = json::array();
    for (const auto& d : docs)
        arr.push_back(json::parse(d));
    return json_text(arr);
}

// ---- trace inputs ----------------------------------------------------------

struct TraceOptions {
    std::vector<std::string> canonical;
    std::vector<std::string> csv;
    std::vector<std::string> device;
    std::string time_col = "timestamp";
    std::string value_col = "value";
    std::string unit = "W";
    std::string kind = "instantaneous_power";
    std::string level = "node";
    std::string dialect = "gpu_smi_csv";
    CLI::Option* counter_max = nullptr;
    double counter_max_uj = kDefaultCounterMaxMicrojoules;

    void add_to(CLI::App* app)
    {
        app->add_option("--trace", canonical, "Canonical trace CSV (path or -)");
        app->add_option("--csv", csv, "Free-form power CSV");
        app->add_option("--device", device, "Device monitor table");
        app->add_option("--time-col", time_col, "Timestamp column for --csv")->capture_default_str();
        app->add_option("--value-col", value_col, "Value column for --csv")->capture_default_str();
        app->add_option("--unit", unit, "Unit of the --csv value column")->capture_default_str();
        app->add_option("--kind", kind, "Sample kind for --csv")->capture_default_str();
        app->add_option("--level", level, "Hierarchy level for --csv")->capture_default_str();
        app->add_option("--dialect", dialect, "Dialect for --device")->capture_default_str();
        counter_max = app->add_option("--counter-max", counter_max_uj,
                                      "Cumulative counter maximum in microjoules");
    }

    std::vector<std::string> paths() const
    {
        std::vector<std::string> all = canonical;
        all.insert(all.end(), csv.begin(), csv.end());
        all.insert(all.end(), device.begin(), device.end());
        return all;
    }

    /// Loads every trace, decoding cumulative counters to power.
    std::vector<PowerTrace> load(Io& io, int jobs) const
    {
        struct Raw {
            enum { canonical, csv, device } format;
            std::string path;
            std::string text;
        };
        std::vector<Raw> raws;
        for (const auto& p : canonical)
            raws.push_back({Raw::canonical, p, io.read(p)});
        for (const auto& p : csv)
            raws.push_back({Raw::csv, p, io.read(p)});
        for (const auto& p : device)
            raws.push_back({Raw::device, p, io.read(p)});
        if (raws.empty())
            throw usage_error("no trace given; use --trace, --csv or --device");

        const auto value_unit = parse_unit(unit);
        const auto sample_kind = parse_sample_kind(kind);
        const auto hierarchy = parse_hierarchy_level(level);
        const auto device_dialect = parse_device_dialect(dialect);
        const bool override_max = counter_max && counter_max->count() > 0;
        if (override_max && !(counter_max_uj > 0.0))
            throw usage_error("--counter-max must be positive");

        using Loaded = std::pair<PowerTrace, std::vector<std::string>>;
        auto loaded = parallel_map<Loaded>(raws.size(), jobs, [&](std::size_t i) -> Loaded {
            const auto& raw = raws[i];
            std::istringstream in(raw.text);
            const auto stem = raw.path == "-" ? std::string("stdin") : fs::path(raw.path).stem().string();
            std::vector<std::string> warnings;
            auto trace = [&]() -> PowerTrace {
                try {
                    switch (raw.format) {
                    case Raw::canonical:
                        return read_trace_csv(in);
                    case Raw::csv: {
                        CsvSchema schema;
                        schema.timestamp_column = time_col;
                        schema.value_column = value_col;
                        schema.source_id = stem;
                        schema.level = hierarchy;
                        schema.kind = sample_kind;
                        return parse_power_csv(in, schema, value_unit);
                    }
                    case Raw::device: {
                        auto ing = parse_device_monitor_table(in, device_dialect, stem);
                        warnings = std::move(ing.warnings);
                        return std::move(ing.trace);
                    }
                    }
                    throw usage_error("unreachable");
                } catch (const data_error& e) {
                    throw data_error(fmt::format("{}: {}", raw.path, e.what()));
                }
            }();
            if (trace.kind() == SampleKind::cumulative_energy)
                trace = decode_cumulative_counter(
                    trace, override_max ? counter_max_uj : counter_max_from_metadata(trace));
            return {std::move(trace), std::move(warnings)};
        });

        std::vector<PowerTrace> out;
        for (auto& [trace, warnings] : loaded) {
            for (const auto& w : warnings)
                io.warn(fmt::format("{}: {}", trace.source_id(), w));
            out.push_back(std::move(trace));
        }
        return out;
    }
};

struct WindowOptions {
    double from = 0.0;
    double to = 0.0;
    CLI::Option* from_opt = nullptr;
    CLI::Option* to_opt = nullptr;

    void add_to(CLI::App* app)
    {
        from_opt = app->add_option("--from", from, "Interval start (s)");
        to_opt = app->add_option("--to", to, "Interval end (s)");
    }

    TimeRange resolve(TimeRange fallback) const
    {
        TimeRange r = fallback;
        if (from_opt->count() > 0)
            r.start = from;
        if (to_opt->count() > 0)
            r.end = to;
        if (!(r.end > r.start))
            throw usage_error(fmt::format("empty interval [{}, {}]", fmt_num(r.start), fmt_num(r.end)));
        return r;
    }
};

enum class OutFormat { text, json };

struct OutputOptions {
    std::string path;
    std::string format;

    void add_to(CLI::App* app, bool with_format = true)
    {
        app->add_option("--out,-o", path, "Output path (default: standard output)");
        if (with_format)
            app->add_option("--format", format, "text or json (json when writing to a file)")
                ->check(CLI::IsMember({"text", "json"}));
    }

    OutFormat resolve() const
    {
        if (format == "json")
            return OutFormat::json;
        if (format == "text")
            return OutFormat::text;
        return (path.empty() || path == "-") ? OutFormat::text : OutFormat::json;
    }
};

void print_notes(Io& io, const EnergyEstimate& e)
{
    for (const auto& n : e.notes)
        if (n.rfind("warning:", 0) == 0)
            io.err() << n << '\n';
}

std::string estimate_text(const EnergyEstimate& e, bool with_source)
{
    std::string line;
    if (with_source && !e.scope.sources.empty())
        line = fmt::format("{}: ", fmt::join(e.scope.sources, "+"));
    return line + fmt::format("{} J\n", fmt_num(e.joules));
}

std::string estimates_out(const std::vector<EnergyEstimate>& es, OutFormat f)
{
    if (f == OutFormat::json)
        return es.size() == 1 ? to_json(es.front()) : to_json(es);
    std::string text;
    for (const auto& e : es)
        text += estimate_text(e, es.size() > 1);
    return text;
}

struct CalibrationOptions {
    double scale = 1.0;
    std::string source = "user";
    CLI::Option* opt = nullptr;

    void add_to(CLI::App* app)
    {
        opt = app->add_option("--calibration", scale, "Multiplicative calibration factor");
        app->add_option("--calibration-source", source, "Where the calibration factor comes from")
            ->capture_default_str();
    }

    EnergyEstimate apply(const EnergyEstimate& e) const
    {
        return opt->count() > 0 ? apply_calibration(e, {scale, source}) : e;
    }
};

struct PueOptions {
    double pue = 1.0;
    CLI::Option* opt = nullptr;

    void add_to(CLI::App* app) { opt = app->add_option("--pue", pue, "Scale IT energy to facility energy"); }

    EnergyEstimate apply(const EnergyEstimate& e) const { return opt->count() > 0 ? apply_pue(e, pue) : e; }
};

// ---- subcommands -----------------------------------------------------------

struct ValidateCmd {
    CLI::App* app = nullptr;
    TraceOptions traces;
    OutputOptions output;

    void setup(CLI::App& root)
    {
        app = root.add_subcommand("validate", "Diagnose trace sampling: intervals, gaps, flat signals");
        traces.add_to(app);
        output.add_to(app, false);
    }

    void run(Io& io, int jobs)
    {
        check_distinct(traces.paths(), {output.path});
        const auto loaded = traces.load(io, jobs);
        auto docs = parallel_map<std::string>(loaded.size(), jobs, [&](std::size_t i) {
            const auto d = diagnose(loaded[i]);
            auto j = json::parse(to_json(d));
            j["source_id"] = loaded[i].source_id();
            j["samples"] = loaded[i].size();
            return json_text(j);
        });
        for (std::size_t i = 0; i < loaded.size(); ++i) {
            const auto j = json::parse(docs[i]);
            for (const auto& g : j.at("gaps"))
                io.warn(fmt::format("{}: gap from {} to {}", loaded[i].source_id(),
                                    fmt_num(g.at("start").get<double>()), fmt_num(g.at("end").get<double>())));
            if (j.at("zero_variance").get<bool>())
                io.warn(fmt::format("{}: every sample has the same value", loaded[i].source_id()));
            if (j.at("uniform_interval_s").is_null() && loaded[i].size() > 1)
                io.warn(fmt::format("{}: sampling interval is not uniform", loaded[i].source_id()));
        }
        io.write(output.path, json_list(docs));
    }
};

struct IntegrateCmd {
    CLI::App* app = nullptr;
    TraceOptions traces;
    WindowOptions window;
    std::string method = "zero-order";
    PueOptions pue;
    CalibrationOptions calibration;
    OutputOptions output;

    void setup(CLI::App& root)
    {
        app = root.add_subcommand("integrate", "Integrate power traces to energy");
        traces.add_to(app);
        window.add_to(app);
        app->add_option("--method", method, "zero-order or trapezoid")
            ->check(CLI::IsMember({"zero-order", "trapezoid"}))
            ->capture_default_str();
        pue.add_to(app);
        calibration.add_to(app);
        output.add_to(app);
    }

    void run(Io& io, int jobs)
    {
        check_distinct(traces.paths(), {output.path});
        const auto loaded = traces.load(io, jobs);
        const auto m = method == "trapezoid" ? IntegrationMethod::trapezoid : IntegrationMethod::zero_order;
        using Result = std::pair<EnergyEstimate, SamplingAdequacy>;
        auto results = parallel_map<Result>(loaded.size(), jobs, [&](std::size_t i) -> Result {
            const auto& t = loaded[i];
            const auto interval = window.resolve(t.coverage());
            auto adequacy = check_sampling(t, interval);
            auto e = integrate(t, interval, m);
            e = pue.apply(calibration.apply(e));
            return {std::move(e), std::move(adequacy)};
        });
        std::vector<EnergyEstimate> estimates;
        for (auto& [e, adequacy] : results) {
            for (const auto& w : adequacy.warnings)
                io.warn(fmt::format("{}: {}", fmt::join(e.scope.sources, "+"), w));
            print_notes(io, e);
            estimates.push_back(std::move(e));
        }
        io.write(output.path, estimates_out(estimates, output.resolve()));
    }
};

struct BaselineCmd {
    CLI::App* app = nullptr;
    TraceOptions traces;
    double percentile = 0.02;
    double declared_watts = 0.0;
    CLI::Option* declared = nullptr;
    std::string source = "node";
    std::string fit_path;
    std::string reference_class;
    OutputOptions output;

    void setup(CLI::App& root)
    {
        app = root.add_subcommand("baseline", "Idle power baseline, declared value, or per-class offset fit");
        traces.add_to(app);
        app->add_option("--percentile", percentile, "Nearest-rank quantile of idle power")
            ->capture_default_str();
        declared = app->add_option("--declared-watts", declared_watts, "Use a declared idle power");
        app->add_option("--source", source, "Source id for --declared-watts")->capture_default_str();
        app->add_option("--fit-offsets", fit_path, "Repetitions JSON for a per-class offset fit");
        app->add_option("--reference-class", reference_class, "Reference node class for --fit-offsets");
        output.add_to(app, false);
    }

    static std::vector<OffsetObservation> parse_reps(const std::string& text)
    {
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::exception& e) {
            throw data_error(fmt::format("invalid repetitions JSON: {}", e.what()));
        }
        if (!doc.is_array())
            throw data_error("repetitions JSON must be an array");
        std::vector<OffsetObservation> reps;
        for (const auto& item : doc) {
            if (!item.is_object() || !item.contains("node_class") || !item.contains("estimate"))
                throw data_error("each repetition needs node_class and estimate");
            OffsetObservation o;
            o.node_class = item.at("node_class").get<std::string>();
            o.workload = item.value("workload", std::string{});
            o.estimate = energy_estimate_from_json(item.at("estimate").dump());
            reps.push_back(std::move(o));
        }
        return reps;
    }

    void run(Io& io, int jobs)
    {
        const int modes = (declared->count() > 0) + !fit_path.empty() + !traces.paths().empty();
        if (modes != 1)
            throw usage_error("give exactly one of a trace, --declared-watts or --fit-offsets");
        auto inputs = traces.paths();
        if (!fit_path.empty())
            inputs.push_back(fit_path);
        check_distinct(inputs, {output.path});

        if (declared->count() > 0) {
            io.write(output.path, to_json(IdleBaseline::declared(Power(declared_watts), source)));
            return;
        }
        if (!fit_path.empty()) {
            if (reference_class.empty())
                throw usage_error("--fit-offsets needs --reference-class");
            io.write(output.path, to_json(fit_offsets(parse_reps(io.read(fit_path)), reference_class)));
            return;
        }
        if (!(percentile > 0.0 && percentile < 1.0))
            throw usage_error("--percentile must lie in (0, 1)");
        const auto loaded = traces.load(io, jobs);
        auto docs = parallel_map<std::string>(loaded.size(), jobs, [&](std::size_t i) {
            return to_json(estimate_idle_baseline(loaded[i], percentile));
        });
        io.write(output.path, json_list(docs));
    }
};

struct MarginalCmd {
    CLI::App* app = nullptr;
    std::string estimate_path;
    std::string baseline_path;
    std::string reference_path;
    OutputOptions output;

    void setup(CLI::App& root)
    {
        app = root.add_subcommand("marginal", "Subtract idle power, or standardize to a reference node class");
        app->add_option("--estimate", estimate_path, "Energy estimate JSON (object or array)");
        app->add_option("--baseline", baseline_path, "Idle baseline JSON of the measured node");
        app->add_option("--reference", reference_path, "Idle baseline JSON of the reference class");
        output.add_to(app);
    }

    void run(Io& io, int)
    {
        if (estimate_path.empty() || baseline_path.empty())
            throw usage_error("marginal needs --estimate and --baseline");
        check_distinct({estimate_path, baseline_path, reference_path}, {output.path});
        const auto estimates = energy_estimates_from_json(io.read(estimate_path));
        const auto baseline = idle_baseline_from_json(io.read(baseline_path));
        std::optional<IdleBaseline> reference;
        if (!reference_path.empty())
            reference = idle_baseline_from_json(io.read(reference_path));
        std::vector<EnergyEstimate> out;
        for (const auto& e : estimates) {
            out.push_back(reference ? standardize_to_reference(e, baseline, *reference)
                                    : marginal_energy(e, baseline));
            print_notes(io, out.back());
        }
        io.write(output.path, estimates_out(out, output.resolve()));
    }
};

struct ProxyCmd {
    CLI::App* app = nullptr;
    std::string util_path;
    bool percent = false;
    int physical_cores = 1;
    std::string loadline_path;
    std::string catalog_dir;
    bool auto_select = false;
    std::string architecture;
    double tdp = 0.0;
    double clock = 0.0;
    std::string workload;
    bool tdp_bound = false;
    double duration = 0.0;
    WindowOptions window;
    CalibrationOptions calibration;
    PueOptions pue;
    OutputOptions output;

    void setup(CLI::App& root)
    {
        app = root.add_subcommand("proxy", "Estimate energy from utilization and a loadline, or a TDP bound");
        app->add_option("--util", util_path, "Utilization CSV (timestamp,utilization)");
        app->add_flag("--percent", percent, "Utilization column is OS percent across logical CPUs");
        app->add_option("--physical-cores", physical_cores, "Physical cores for --percent")
            ->capture_default_str();
        app->add_option("--loadline", loadline_path, "Loadline JSON");
        app->add_option("--catalog", catalog_dir, "Directory of loadline JSON files");
        app->add_flag("--auto-select", auto_select, "Pick the best-matching loadline from --catalog");
        app->add_option("--architecture", architecture, "System architecture");
        app->add_option("--tdp", tdp, "System TDP in watts");
        app->add_option("--clock", clock, "Base clock in GHz");
        app->add_option("--workload", workload, "Workload name for loadline matching");
        app->add_flag("--tdp-bound", tdp_bound, "Worst-case energy: TDP for the whole duration");
        app->add_option("--duration", duration, "Duration in seconds for --tdp-bound");
        window.add_to(app);
        calibration.add_to(app);
        pue.add_to(app);
        output.add_to(app);
    }

    SystemDescriptor descriptor() const
    {
        SystemDescriptor d;
        d.architecture = architecture;
        d.tdp = Power(tdp);
        d.base_clock_ghz = clock;
        if (!workload.empty())
            d.workload_name = workload;
        return d;
    }

    void run(Io& io, int)
    {
        check_distinct({util_path, loadline_path}, {output.path});
        EnergyEstimate e;
        if (tdp_bound) {
            if (!util_path.empty() || !loadline_path.empty() || !catalog_dir.empty())
                throw usage_error("--tdp-bound does not combine with --util, --loadline or --catalog");
            if (!(tdp > 0.0))
                throw usage_error("--tdp-bound needs --tdp");
            e = tdp_energy_bound(descriptor(), duration);
        } else {
            if (util_path.empty())
                throw usage_error("proxy needs --util (or --tdp-bound)");
            if (loadline_path.empty() == catalog_dir.empty())
                throw usage_error("give exactly one of --loadline and --catalog");
            if (!catalog_dir.empty() && !auto_select)
                throw usage_error("--catalog needs --auto-select");
            std::optional<Loadline> ll;
            if (!loadline_path.empty()) {
                ll = parse_loadline_json(io.read(loadline_path));
            } else {
                if (!(tdp > 0.0) || architecture.empty())
                    throw usage_error("--auto-select needs --architecture and --tdp");
                auto [best, score] = select_loadline(load_catalog(catalog_dir), descriptor());
                io.err() << fmt::format("selected loadline {} / {} ({} W TDP), score {}\n",
                                        best.meta().architecture, best.meta().workload_name,
                                        fmt_num(best.meta().tdp_watts), fmt_num(score));
                ll = std::move(best);
            }
            std::istringstream in(io.read(util_path));
            const auto stem = util_path == "-" ? std::string("util") : fs::path(util_path).stem().string();
            auto util = read_utilization_csv(in, stem, percent ? physical_cores : 1, 1);
            if (percent) {
                std::vector<std::string> warnings;
                util = normalize_utilization_trace(util, &warnings);
                for (const auto& w : warnings)
                    io.warn(w);
            }
            e = energy_from_utilization(util, *ll, window.resolve(util.span()));
        }
        e = pue.apply(calibration.apply(e));
        print_notes(io, e);
        io.write(output.path, estimates_out({e}, output.resolve()));
    }
};

struct CarbonCmd {
    CLI::App* app = nullptr;
    std::string estimate_path;
    double intensity = 0.0;
    CLI::Option* intensity_opt = nullptr;
    std::string basis = "yearly_average";
    std::string region;
    TraceOptions traces;
    std::string intensity_file;
    std::string strategy = "upsample";
    WindowOptions window;
    OutputOptions output;

    void setup(CLI::App& root)
    {
        app = root.add_subcommand("carbon", "Convert energy to operational emissions");
        app->add_option("--estimate", estimate_path, "Energy estimate JSON (constant intensity)");
        intensity_opt = app->add_option("--intensity", intensity, "Constant intensity in gCO2/kWh");
        app->add_option("--basis", basis, "yearly_average or realtime")->capture_default_str();
        app->add_option("--region", region, "Grid region");
        traces.add_to(app);
        app->add_option("--intensity-file", intensity_file, "Intensity CSV for time-varying emissions");
        app->add_option("--strategy", strategy, "upsample or downsample")
            ->check(CLI::IsMember({"upsample", "downsample"}))
            ->capture_default_str();
        window.add_to(app);
        output.add_to(app);
    }

    void run(Io& io, int jobs)
    {
        auto inputs = traces.paths();
        inputs.push_back(estimate_path);
        inputs.push_back(intensity_file);
        check_distinct(inputs, {output.path});
        std::vector<EmissionsEstimate> results;
        if (!estimate_path.empty()) {
            if (intensity_opt->count() == 0 || !intensity_file.empty() || !traces.paths().empty())
                throw usage_error("--estimate needs --intensity and no trace or --intensity-file");
            for (const auto& e : energy_estimates_from_json(io.read(estimate_path)))
                results.push_back(emissions_constant(e, intensity, parse_intensity_basis(basis), region));
        } else {
            if (intensity_file.empty() || traces.paths().empty())
                throw usage_error("carbon needs --estimate with --intensity, or a trace with --intensity-file");
            std::istringstream in(io.read(intensity_file));
            const auto series = read_intensity_csv(in);
            const auto strat = strategy == "downsample" ? AlignmentStrategy::downsample_power
                                                        : AlignmentStrategy::upsample_intensity;
            const auto loaded = traces.load(io, jobs);
            results = parallel_map<EmissionsEstimate>(loaded.size(), jobs, [&](std::size_t i) {
                return emissions_timeseries(loaded[i], series, window.resolve(loaded[i].coverage()), strat);
            });
        }
        for (const auto& r : results)
            print_notes(io, r.energy);
        std::string text;
        if (output.resolve() == OutFormat::json) {
            std::vector<std::string> docs;
            for (const auto& r : results)
                docs.push_back(to_json(r));
            text = json_list(docs);
        } else {
            for (const auto& r : results)
                text += fmt::format("{} gCO2\n", fmt_num(r.grams_co2));
        }
        io.write(output.path, text);
    }
};

struct CompareCmd {
    CLI::App* app = nullptr;
    std::string a_path;
    std::string b_path;
    std::string test = "welch_t";
    double alpha = 0.05;
    std::uint64_t seed = CompareOptions{}.seed;
    std::size_t permutations = CompareOptions{}.permutations;
    OutputOptions output;

    void setup(CLI::App& root)
    {
        app = root.add_subcommand("compare", "Compare two sets of repeated runs");
        app->add_option("--a", a_path, "Run set A (JSON)");
        app->add_option("--b", b_path, "Run set B (JSON)");
        app->add_option("--test", test, "welch_t or permutation")
            ->check(CLI::IsMember({"welch_t", "welch", "permutation"}))
            ->capture_default_str();
        app->add_option("--alpha", alpha, "Significance level")->capture_default_str();
        app->add_option("--seed", seed, "Permutation seed")->capture_default_str();
        app->add_option("--permutations", permutations, "Monte Carlo permutations")->capture_default_str();
        output.add_to(app);
    }

    void run(Io& io, int)
    {
        if (a_path.empty() || b_path.empty())
            throw usage_error("compare needs --a and --b");
        check_distinct({a_path, b_path}, {output.path});
        if (!(alpha > 0.0 && alpha < 1.0))
            throw usage_error("--alpha must lie in (0, 1)");
        const auto a = run_set_from_json(io.read(a_path));
        const auto b = run_set_from_json(io.read(b_path));
        CompareOptions opts;
        opts.test = test == "permutation" ? StatTest::permutation : StatTest::welch_t;
        opts.alpha = alpha;
        opts.seed = seed;
        opts.permutations = permutations;
        const auto r = compare(a, b, opts);
        for (const auto& n : r.notes)
            io.err() << "note: " << n << '\n';
        if (output.resolve() == OutFormat::json) {
            io.write(output.path, to_json(r));
            return;
        }
        const auto sa = summarize(a);
        const auto sb = summarize(b);
        std::string t;
        t += fmt::format("{:<12} {:>6} {:>16} {:>16}\n", "set", "n", "mean_J", "stddev_J");
        auto row = [&](const RunSet& rs, const Summary& s) {
            t += fmt::format("{:<12} {:>6} {:>16.6g} {:>16}\n", rs.label(), s.n, s.mean,
                             s.stddev ? fmt::format("{:.6g}", *s.stddev) : std::string("-"));
        };
        row(a, sa);
        row(b, sb);
        t += fmt::format("test: {}{}\n", to_string(r.test),
                         r.test == StatTest::permutation ? (r.exact ? " (exact)" : " (Monte Carlo)") : "");
        t += fmt::format("mean difference (a - b): {:.6g} J\n", r.mean_diff_joules);
        t += fmt::format("{:g}% interval: [{:.6g}, {:.6g}] J\n", r.confidence * 100.0, r.ci.low, r.ci.high);
        t += fmt::format("p-value: {:.6g}\n", r.p_value);
        io.write(output.path, t);
    }
};

struct SimulateCmd {
    CLI::App* app = nullptr;
    std::string spec_path;
    double interval = 1.0;
    std::string out_path;
    std::string truth_path;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
    std::string source = "sim";
    std::string loadline_path;
    std::string util_out;

    void setup(CLI::App& root)
    {
        app = root.add_subcommand("simulate", "Generate a synthetic power trace with known energy");
        app->add_option("--spec", spec_path, "Workload spec JSON");
        app->add_option("--interval", interval, "Sampling interval in seconds")->capture_default_str();
        app->add_option("--out,-o", out_path, "Trace CSV output (default: standard output)");
        app->add_option("--truth", truth_path, "Ground-truth energy JSON output");
        seed_opt = app->add_option("--seed", seed, "Override the spec's noise seed");
        app->add_option("--source", source, "Source id of the generated trace")->capture_default_str();
        app->add_option("--loadline", loadline_path, "Loadline for a matching utilization trace");
        app->add_option("--util-out", util_out, "Utilization CSV output (needs --loadline)");
    }

    void run(Io& io, int)
    {
        if (spec_path.empty())
            throw usage_error("simulate needs --spec");
        if (!(interval > 0.0))
            throw usage_error("--interval must be positive");
        if (loadline_path.empty() != util_out.empty())
            throw usage_error("--loadline and --util-out go together");
        if ((out_path.empty() || out_path == "-") && (truth_path == "-" || util_out == "-"))
            throw usage_error("only one output can go to standard output");
        check_distinct({spec_path, loadline_path}, {out_path, truth_path, util_out});

        auto spec = parse_workload_spec(io.read(spec_path));
        if (seed_opt->count() > 0)
            spec.seed = seed;
        double shortest = std::numeric_limits<double>::infinity();
        for (const auto& p : spec.phases)
            shortest = std::min(shortest, p.duration_s);
        for (const auto& s : spec.spikes)
            shortest = std::min(shortest, s.duration_s);
        if (interval > shortest)
            io.warn(fmt::format("sampling interval {} s exceeds the shortest transient ({} s); "
                                "the trace will alias it",
                                fmt_num(interval), fmt_num(shortest)));

        auto [trace, truth] = generate(spec, interval, source);
        std::ostringstream csv;
        write_trace_csv(trace, csv);
        if (!truth_path.empty())
            io.write(truth_path, ground_truth_to_json(truth));
        if (!util_out.empty()) {
            const auto ll = parse_loadline_json(io.read(loadline_path));
            const auto util = generate_utilization(spec, ll, interval, source);
            std::string text = "timestamp,utilization\n";
            for (const auto& s : util.samples())
                text += fmt::format("{},{}\n", s.t, s.utilization);
            io.write(util_out, text);
        }
        io.write(out_path, csv.str());
    }
};

struct ReportCmd {
    CLI::App* app = nullptr;
    std::string in_path;
    std::string template_path;
    std::string estimates_path;
    std::string emissions_path;
    std::string format = "markdown";
    std::string out_path;

    void setup(CLI::App& root)
    {
        app = root.add_subcommand("report", "Validate and render a measurement report");
        app->add_option("--in", in_path, "Complete report JSON");
        app->add_option("--template", template_path, "Report JSON without results");
        app->add_option("--estimates", estimates_path, "Energy estimates to place in the template");
        app->add_option("--emissions", emissions_path, "Emissions estimate to place in the template");
        app->add_option("--format", format, "markdown or json")
            ->check(CLI::IsMember({"markdown", "json"}))
            ->capture_default_str();
        app->add_option("--out,-o", out_path, "Output path (default: standard output)");
    }

    void run(Io& io, int)
    {
        if (in_path.empty() == template_path.empty())
            throw usage_error("give exactly one of --in and --template");
        if (!in_path.empty() && (!estimates_path.empty() || !emissions_path.empty()))
            throw usage_error("--estimates and --emissions go with --template");
        check_distinct({in_path, template_path, estimates_path, emissions_path}, {out_path});

        auto report = parse_report_json(io.read(in_path.empty() ? template_path : in_path));
        if (!estimates_path.empty()) {
            const auto more = energy_estimates_from_json(io.read(estimates_path));
            report.results.insert(report.results.end(), more.begin(), more.end());
        }
        if (!emissions_path.empty())
            report.emissions = emissions_from_json(io.read(emissions_path));

        for (const auto& f : validate(report))
            io.err() << fmt::format("{}: {}: {}\n", to_string(f.severity), f.rule, f.message);
        io.write(out_path, render(report, parse_report_format(format)));
    }
};

} // namespace

int run(const std::vector<std::string>& args, const std::map<std::string, std::string>& env, Streams streams)
{
    CLI::App app{"Energy, marginal energy and emissions estimates from power telemetry", "wattledger"};
    app.set_version_flag("--version", WATTLEDGER_VERSION);
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.failure_message(CLI::FailureMessage::help);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::Throw);

    std::string default_config;
    if (auto it = env.find("WATTLEDGER_CONFIG"); it != env.end())
        default_config = it->second;
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", default_config, "JSON file holding default flag values");

    int jobs = 1;
    app.add_option("--jobs,-j", jobs, "Parallel workers over independent inputs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    ValidateCmd validate_cmd;
    IntegrateCmd integrate_cmd;
    BaselineCmd baseline_cmd;
    MarginalCmd marginal_cmd;
    ProxyCmd proxy_cmd;
    CarbonCmd carbon_cmd;
    CompareCmd compare_cmd;
    SimulateCmd simulate_cmd;
    ReportCmd report_cmd;
    validate_cmd.setup(app);
    integrate_cmd.setup(app);
    baseline_cmd.setup(app);
    marginal_cmd.setup(app);
    proxy_cmd.setup(app);
    carbon_cmd.setup(app);
    compare_cmd.setup(app);
    simulate_cmd.setup(app);
    report_cmd.setup(app);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, streams.out, streams.err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    Io io(streams);
    try {
        if (validate_cmd.app->parsed())
            validate_cmd.run(io, jobs);
        else if (integrate_cmd.app->parsed())
            integrate_cmd.run(io, jobs);
        else if (baseline_cmd.app->parsed())
            baseline_cmd.run(io, jobs);
        else if (marginal_cmd.app->parsed())
            marginal_cmd.run(io, jobs);
        else if (proxy_cmd.app->parsed())
            proxy_cmd.run(io, jobs);
        else if (carbon_cmd.app->parsed())
            carbon_cmd.run(io, jobs);
        else if (compare_cmd.app->parsed())
            compare_cmd.run(io, jobs);
        else if (simulate_cmd.app->parsed())
            simulate_cmd.run(io, jobs);
        else if (report_cmd.app->parsed())
            report_cmd.run(io, jobs);
        return kExitOk;
    } catch (const report_refused& e) {
        for (const auto& f : e.findings())
            streams.err << fmt::format("{}: {}: {}\n", to_string(f.severity), f.rule, f.message);
        streams.err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const usage_error& e) {
        streams.err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        streams.err << "error: " << e.what() << '\n';
        return kExitData;
    }
}

} // namespace wattledger::cli
