#include "wattledger/telemetry.hpp"

#include "csv.hpp"
#include "wattledger/error.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <istream>
#include <ostream>
#include <set>

namespace wattledger {

namespace {

using namespace detail;

constexpr std::array<std::string_view, 6> kLevelNames{"facility", "system", "platform",
                                                      "rack",     "node",   "component"};
constexpr std::array<std::string_view, 3> kKindNames{"instantaneous_power", "interval_average_power",
                                                     "cumulative_energy"};

double counter_max_microjoules(const Metadata& md)
{
    if (auto it = md.find("counter_max_uj"); it != md.end()) {
        auto v = detail::parse_number(it->second);
        if (!v || !std::isfinite(*v) || *v <= 0.0)
            throw data_error(fmt::format("invalid counter_max_uj metadata '{}'", it->second));
        return *v;
    }
    return kDefaultCounterMaxMicrojoules;
}

double counter_max_joules(const Metadata& md) { return counter_max_microjoules(md) / 1e6; }

void check_unit_matches_kind(UnitScale unit, SampleKind kind)
{
    const bool wants_energy = kind == SampleKind::cumulative_energy;
    if (unit.is_energy() != wants_energy)
        throw usage_error(fmt::format("unit {} does not fit sample kind {}", unit_symbol(unit),
                                      to_string(kind)));
}

int days_in_month(int y, unsigned m)
{
    using namespace std::chrono;
    return static_cast<int>(static_cast<unsigned>(
        year_month_day_last{year{y} / month{m} / last}.day()));
}

} // namespace

std::string_view to_string(HierarchyLevel level)
{
    return kLevelNames.at(static_cast<std::size_t>(level));
}

std::string_view to_string(SampleKind kind)
{
    return kKindNames.at(static_cast<std::size_t>(kind));
}

HierarchyLevel parse_hierarchy_level(std::string_view s)
{
    for (std::size_t i = 0; i < kLevelNames.size(); ++i)
        if (kLevelNames[i] == s)
            return static_cast<HierarchyLevel>(i);
    throw usage_error(fmt::format("unknown hierarchy level '{}'", s));
}

SampleKind parse_sample_kind(std::string_view s)
{
    for (std::size_t i = 0; i < kKindNames.size(); ++i)
        if (kKindNames[i] == s)
            return static_cast<SampleKind>(i);
    throw usage_error(fmt::format("unknown sample kind '{}'", s));
}

DeviceDialect parse_device_dialect(std::string_view s)
{
    if (s == "gpu_smi_csv")
        return DeviceDialect::gpu_smi_csv;
    if (s == "generic")
        return DeviceDialect::generic;
    throw usage_error(fmt::format("unknown device dialect '{}'", s));
}

PowerTrace::PowerTrace(std::string source_id, HierarchyLevel level, SampleKind kind,
                       std::vector<Sample> samples, Metadata metadata)
    : source_id_(std::move(source_id)), level_(level), kind_(kind), samples_(std::move(samples)),
      metadata_(std::move(metadata))
{
    if (samples_.empty())
        throw data_error(fmt::format("trace '{}' has no samples", source_id_));
    const double counter_max = kind_ == SampleKind::cumulative_energy
                                   ? counter_max_joules(metadata_)
                                   : 0.0;
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const auto& s = samples_[i];
        if (!std::isfinite(s.t) || !std::isfinite(s.value))
            throw data_error(fmt::format("trace '{}': sample {} is not finite", source_id_, i));
        if (i > 0 && !(s.t > samples_[i - 1].t))
            throw data_error(fmt::format("trace '{}': timestamps not strictly increasing at sample {}",
                                         source_id_, i));
        if (s.value < 0.0)
            throw data_error(fmt::format("trace '{}': negative value {} at t={}", source_id_,
                                         s.value, s.t));
        if (kind_ == SampleKind::cumulative_energy && s.value > counter_max)
            throw data_error(fmt::format("trace '{}': counter value {} J exceeds register maximum {} J",
                                         source_id_, s.value, counter_max));
    }
    coverage_start_ = samples_.front().t;
    if (auto it = metadata_.find(kIntervalStartKey);
        it != metadata_.end() && kind_ == SampleKind::interval_average_power) {
        auto v = detail::parse_number(it->second);
        if (!v || !std::isfinite(*v) || !(*v < samples_.front().t))
            throw data_error(fmt::format("trace '{}': {} '{}' must precede the first sample",
                                         source_id_, kIntervalStartKey, it->second));
        coverage_start_ = *v;
    }
}

double PowerTrace::hold_value_at(double t) const
{
    if (t < coverage_start_ || t > back_time())
        throw data_error(fmt::format("t={} outside trace '{}' span [{}, {}]", t, source_id_,
                                     coverage_start_, back_time()));
    if (kind_ == SampleKind::interval_average_power) {
        auto it = std::lower_bound(samples_.begin(), samples_.end(), t,
                                   [](const Sample& s, double x) { return s.t < x; });
        return it->value;
    }
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                               [](double x, const Sample& s) { return x < s.t; });
    return std::prev(it)->value;
}

UtilizationTrace::UtilizationTrace(std::string source_id, std::vector<UtilizationSample> samples,
                                   int physical_cores, int logical_per_core, Metadata metadata)
    : source_id_(std::move(source_id)), samples_(std::move(samples)),
      physical_cores_(physical_cores), logical_per_core_(logical_per_core),
      metadata_(std::move(metadata))
{
    if (samples_.empty())
        throw data_error(fmt::format("utilization trace '{}' has no samples", source_id_));
    if (physical_cores_ < 1 || logical_per_core_ < 1)
        throw usage_error("core counts must be positive");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const auto& s = samples_[i];
        if (!std::isfinite(s.t) || !std::isfinite(s.utilization) || s.utilization < 0.0)
            throw data_error(fmt::format("utilization trace '{}': invalid sample {}", source_id_, i));
        if (i > 0 && !(s.t > samples_[i - 1].t))
            throw data_error(fmt::format(
                "utilization trace '{}': timestamps not strictly increasing at sample {}",
                source_id_, i));
    }
}

double parse_timestamp(std::string_view text)
{
    using namespace std::chrono;
    const auto s = detail::trim(text);
    if (s.find(':') == std::string_view::npos) {
        auto v = detail::parse_number(s);
        if (!v || !std::isfinite(*v))
            throw data_error(fmt::format("invalid timestamp '{}'", s));
        return *v;
    }

    std::size_t pos = 0;
    auto digits = [&](std::size_t count) -> int {
        if (pos + count > s.size())
            throw data_error(fmt::format("invalid timestamp '{}'", s));
        int v = 0;
        for (std::size_t i = 0; i < count; ++i) {
            const char c = s[pos + i];
            if (c < '0' || c > '9')
                throw data_error(fmt::format("invalid timestamp '{}'", s));
            v = v * 10 + (c - '0');
        }
        pos += count;
        return v;
    };
    auto expect = [&](std::string_view allowed) {
        if (pos >= s.size() || allowed.find(s[pos]) == std::string_view::npos)
            throw data_error(fmt::format("invalid timestamp '{}'", s));
        return s[pos++];
    };

    const int y = digits(4);
    const char date_sep = expect("-/");
    const int mo = digits(2);
    expect(std::string_view(&date_sep, 1));
    const int d = digits(2);
    expect("Tt ");
    const int hh = digits(2);
    expect(":");
    const int mm = digits(2);
    expect(":");
    const int ss = digits(2);
    if (mo < 1 || mo > 12 || d < 1 || d > days_in_month(y, static_cast<unsigned>(mo)) || hh > 23 ||
        mm > 59 || ss > 60)
        throw data_error(fmt::format("timestamp '{}' out of range", s));

    double frac = 0.0;
    if (pos < s.size() && s[pos] == '.') {
        const std::size_t begin = pos;
        ++pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9')
            ++pos;
        if (pos == begin + 1)
            throw data_error(fmt::format("invalid timestamp '{}'", s));
        frac = *detail::parse_number(std::string("0") + std::string(s.substr(begin, pos - begin)));
    }

    int offset_s = 0;
    if (pos < s.size()) {
        const char z = s[pos];
        if (z == 'Z' || z == 'z') {
            ++pos;
        } else if (z == '+' || z == '-') {
            ++pos;
            const int oh = digits(2);
            expect(":");
            const int om = digits(2);
            offset_s = (z == '+' ? 1 : -1) * (oh * 3600 + om * 60);
        }
    }
    if (pos != s.size())
        throw data_error(fmt::format("invalid timestamp '{}'", s));

    const sys_days day = year{y} / month{static_cast<unsigned>(mo)} / std::chrono::day{static_cast<unsigned>(d)};
    const auto whole = day.time_since_epoch() + hours{hh} + minutes{mm} + seconds{ss} - seconds{offset_s};
    return static_cast<double>(duration_cast<seconds>(whole).count()) + frac;
}

PowerTrace parse_power_csv(std::istream& in, const CsvSchema& schema, UnitScale unit)
{
    check_unit_matches_kind(unit, schema.kind);
    const Table table = read_table(in);
    const auto t_col = table.column(schema.timestamp_column);
    const auto v_col = table.column(schema.value_column);
    if (!t_col || !v_col)
        throw data_error(fmt::format("header must contain '{}' and '{}'; found: {}",
                                     schema.timestamp_column, schema.value_column,
                                     table.header_list()));
    std::vector<LinedSample> rows;
    rows.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        const double t = parse_row_timestamp(field(row, *t_col, table), row.line);
        const double v = parse_value(field(row, *v_col, table), row.line, "value");
        if (v < 0.0)
            throw data_error(fmt::format("line {}: negative value {}", row.line, v));
        rows.push_back({{t, to_canonical(v, unit)}, row.line});
    }
    return PowerTrace(schema.source_id, schema.level, schema.kind, sort_and_check(std::move(rows)),
                      table.preamble);
}

PowerTrace read_trace_csv(std::istream& in)
{
    const Table table = read_table(in);
    static constexpr std::array<std::string_view, 6> required{"timestamp", "value", "unit",
                                                              "source_id", "level", "sample_kind"};
    std::array<std::size_t, 6> idx{};
    for (std::size_t i = 0; i < required.size(); ++i) {
        auto c = table.column(required[i]);
        if (!c)
            throw data_error(fmt::format("trace header is missing '{}'; found: {}", required[i],
                                         table.header_list()));
        idx[i] = *c;
    }
    if (table.rows.empty())
        throw data_error("no samples");

    std::optional<std::string> source;
    std::optional<HierarchyLevel> level;
    std::optional<SampleKind> kind;
    std::vector<LinedSample> rows;
    rows.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        const double t = parse_row_timestamp(field(row, idx[0], table), row.line);
        const double v = parse_value(field(row, idx[1], table), row.line, "value");
        UnitScale unit;
        SampleKind row_kind;
        HierarchyLevel row_level;
        try {
            unit = parse_unit(field(row, idx[2], table));
            row_level = parse_hierarchy_level(field(row, idx[4], table));
            row_kind = parse_sample_kind(field(row, idx[5], table));
            check_unit_matches_kind(unit, row_kind);
        } catch (const usage_error& e) {
            throw data_error(fmt::format("line {}: {}", row.line, e.what()));
        }
        const auto& row_source = field(row, idx[3], table);
        if (!source) {
            source = row_source;
            level = row_level;
            kind = row_kind;
        } else if (*source != row_source || *level != row_level || *kind != row_kind) {
            throw data_error(fmt::format(
                "line {}: source_id, level and sample_kind must be constant within a trace file",
                row.line));
        }
        if (v < 0.0)
            throw data_error(fmt::format("line {}: negative value {}", row.line, v));
        rows.push_back({{t, to_canonical(v, unit)}, row.line});
    }
    return PowerTrace(*source, *level, *kind, sort_and_check(std::move(rows)), table.preamble);
}

void write_trace_csv(const PowerTrace& trace, std::ostream& out)
{
    for (const auto& [key, value] : trace.metadata())
        out << "# " << key << ": " << value << '\n';
    out << "timestamp,value,unit,source_id,level,sample_kind\n";
    const std::string_view unit = trace.is_power() ? "W" : "J";
    for (const auto& s : trace.samples())
        out << detail::format_double(s.t) << ',' << detail::format_double(s.value) << ',' << unit
            << ',' << trace.source_id() << ',' << to_string(trace.level()) << ','
            << to_string(trace.kind()) << '\n';
}

UtilizationTrace read_utilization_csv(std::istream& in, std::string source_id, int physical_cores,
                                      int logical_per_core)
{
    const Table table = read_table(in);
    const auto t_col = table.column("timestamp");
    const auto u_col = table.column("utilization");
    if (!t_col || !u_col)
        throw data_error(fmt::format(
            "utilization header must contain 'timestamp' and 'utilization'; found: {}",
            table.header_list()));
    std::vector<LinedSample> rows;
    for (const auto& row : table.rows) {
        const double t = parse_row_timestamp(field(row, *t_col, table), row.line);
        const double u = parse_value(field(row, *u_col, table), row.line, "utilization");
        if (u < 0.0)
            throw data_error(fmt::format("line {}: negative utilization {}", row.line, u));
        rows.push_back({{t, u}, row.line});
    }
    std::vector<UtilizationSample> samples;
    for (const auto& s : sort_and_check(std::move(rows)))
        samples.push_back({s.t, s.value});
    return UtilizationTrace(std::move(source_id), std::move(samples), physical_cores,
                            logical_per_core, table.preamble);
}

double counter_max_from_metadata(const PowerTrace& trace)
{
    return counter_max_microjoules(trace.metadata());
}

PowerTrace decode_cumulative_counter(const PowerTrace& trace, double counter_max_uj)
{
    if (trace.kind() != SampleKind::cumulative_energy)
        throw usage_error(fmt::format("trace '{}' is {}, not cumulative_energy", trace.source_id(),
                                      to_string(trace.kind())));
    if (!std::isfinite(counter_max_uj) || counter_max_uj <= 0.0)
        throw usage_error("counter maximum must be positive");
    if (trace.size() < 2)
        throw data_error(fmt::format("trace '{}': need at least 2 counter readings", trace.source_id()));

    const double max_j = counter_max_uj / 1e6;
    const auto in = trace.samples();
    std::vector<Sample> out;
    out.reserve(in.size() - 1);
    for (std::size_t i = 1; i < in.size(); ++i) {
        const double dt = in[i].t - in[i - 1].t;
        if (!(dt > 0.0))
            throw data_error(fmt::format("trace '{}': zero-length interval at t={}", trace.source_id(),
                                         in[i].t));
        if (in[i].value > max_j || in[i - 1].value > max_j)
            throw data_error(fmt::format("trace '{}': reading above counter maximum near t={}",
                                         trace.source_id(), in[i].t));
        double delta = in[i].value - in[i - 1].value;
        if (delta < 0.0)
            delta = (max_j - in[i - 1].value) + in[i].value;
        if (delta < 0.0 || delta > max_j)
            throw data_error(fmt::format("trace '{}': impossible counter delta {} J at t={}",
                                         trace.source_id(), delta, in[i].t));
        out.push_back({in[i].t, delta / dt});
    }
    Metadata md = trace.metadata();
    md["decoded_from"] = "cumulative_energy";
    md["counter_max_uj"] = detail::format_double(counter_max_uj);
    md[kIntervalStartKey] = detail::format_double(in.front().t);
    return PowerTrace(trace.source_id(), trace.level(), SampleKind::interval_average_power,
                      std::move(out), std::move(md));
}

Ingested parse_device_monitor_table(std::istream& in, DeviceDialect dialect, std::string source_id)
{
    const Table table = read_table(in);

    std::optional<std::size_t> t_col;
    std::optional<std::size_t> p_col;
    UnitScale unit = kWatt;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        const auto name = detail::to_lower(table.header[i]);
        const bool is_time = dialect == DeviceDialect::gpu_smi_csv
                                 ? name == "timestamp"
                                 : (name == "timestamp" || name == "time");
        const bool is_power = dialect == DeviceDialect::gpu_smi_csv ? name.starts_with("power.draw")
                                                                    : name.starts_with("power");
        if (is_time && !t_col)
            t_col = i;
        if (is_power && !p_col) {
            p_col = i;
            const auto& raw = table.header[i];
            if (auto open = raw.find('['); open != std::string::npos) {
                const auto close = raw.find(']', open);
                unit = parse_unit(detail::trim(std::string_view(raw).substr(open + 1, close - open - 1)));
                if (unit.is_energy())
                    throw data_error(fmt::format("power column '{}' carries an energy unit", raw));
            }
        }
    }
    if (!p_col)
        throw data_error(fmt::format("no power column; found columns: {}", table.header_list()));
    if (!t_col)
        throw data_error(fmt::format("no timestamp column; found columns: {}", table.header_list()));

    std::vector<std::string> warnings;
    std::vector<LinedSample> rows;
    const std::string suffix = " " + unit_symbol(unit);
    for (const auto& row : table.rows) {
        std::string_view cell = field(row, *p_col, table);
        const auto lowered = detail::to_lower(cell);
        if (cell.empty() || lowered.find("n/a") != std::string::npos ||
            lowered.find("not supported") != std::string::npos) {
            warnings.push_back(fmt::format("line {}: power cell '{}' missing; row skipped", row.line, cell));
            continue;
        }
        if (cell.ends_with(suffix))
            cell.remove_suffix(suffix.size());
        const double v = parse_value(cell, row.line, "power");
        if (v < 0.0)
            throw data_error(fmt::format("line {}: negative power {}", row.line, v));
        const double t = parse_row_timestamp(field(row, *t_col, table), row.line);
        rows.push_back({{t, to_canonical(v, unit)}, row.line});
    }
    if (rows.empty())
        throw data_error("no samples");
    Metadata md = table.preamble;
    md["sampling_tool"] = dialect == DeviceDialect::gpu_smi_csv ? "gpu_smi_csv" : "generic";
    return {PowerTrace(std::move(source_id), HierarchyLevel::component,
                       SampleKind::instantaneous_power, sort_and_check(std::move(rows)), std::move(md)),
            std::move(warnings)};
}

TraceDiagnostics diagnose(const PowerTrace& trace)
{
    TraceDiagnostics d;
    const auto s = trace.samples();
    d.zero_variance = std::all_of(s.begin(), s.end(),
                                  [&](const Sample& x) { return x.value == s.front().value; });
    if (s.size() < 2)
        return d;

    std::vector<double> dts;
    dts.reserve(s.size() - 1);
    for (std::size_t i = 1; i < s.size(); ++i)
        dts.push_back(s[i].t - s[i - 1].t);
    std::vector<double> sorted = dts;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[(sorted.size() - 1) / 2]; // lower median
    d.median_interval = median;
    d.min_interval = sorted.front();

    const bool uniform = std::all_of(dts.begin(), dts.end(), [&](double dt) {
        return std::abs(dt - median) <= 0.01 * median;
    });
    if (uniform)
        d.uniform_interval = median;
    for (std::size_t i = 0; i < dts.size(); ++i)
        if (dts[i] > 3.0 * median)
            d.gaps.push_back({s[i].t, s[i + 1].t});
    return d;
}

PowerTrace resample(const PowerTrace& trace, double interval, ResampleMethod method,
                    std::optional<TimeRange> window)
{
    if (!std::isfinite(interval) || interval <= 0.0)
        throw usage_error(fmt::format("resample interval must be positive, got {}", interval));
    if (!trace.is_power())
        throw usage_error("decode cumulative counters before resampling");
    if (trace.size() < 2)
        throw data_error(fmt::format("trace '{}': need at least 2 samples to resample", trace.source_id()));
    const TimeRange w = window.value_or(trace.span());
    if (w.end < w.start)
        throw usage_error("resample window end precedes start");
    if (w.start < trace.front_time() || w.end > trace.back_time())
        throw data_error(fmt::format("resample grid [{}, {}] outside trace span [{}, {}]", w.start,
                                     w.end, trace.front_time(), trace.back_time()));

    const auto s = trace.samples();
    auto linear_at = [&](double t) {
        auto hi = std::lower_bound(s.begin(), s.end(), t,
                                   [](const Sample& x, double v) { return x.t < v; });
        if (hi->t == t || hi == s.begin())
            return hi->value;
        auto lo = std::prev(hi);
        return lo->value + (hi->value - lo->value) * ((t - lo->t) / (hi->t - lo->t));
    };

    std::vector<Sample> out;
    const double slack = interval * 1e-9;
    for (std::size_t k = 0;; ++k) {
        double t = w.start + static_cast<double>(k) * interval;
        if (t > w.end + slack)
            break;
        t = std::min(t, w.end);
        if (!out.empty() && t <= out.back().t)
            break;
        const double v = method == ResampleMethod::zero_order_hold ? trace.hold_value_at(t)
                                                                   : linear_at(t);
        out.push_back({t, v});
    }
    const SampleKind kind = trace.kind() == SampleKind::interval_average_power
                                ? SampleKind::instantaneous_power
                                : trace.kind();
    return PowerTrace(trace.source_id(), trace.level(), kind, std::move(out), trace.metadata());
}

} // namespace wattledger
