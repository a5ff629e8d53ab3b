#include "csv.hpp"

#include "wattledger/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <istream>

namespace wattledger::detail {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_csv_line(std::string_view line)
{
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back(trim(current));
            current.clear();
        } else if (c != '\r') {
            current += c;
        }
    }
    fields.emplace_back(trim(current));
    return fields;
}

std::optional<double> parse_number(std::string_view s)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    if (s.empty())
        return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        return std::nullopt;
    return v;
}

std::string to_lower(std::string_view s)
{
    std::string out(s);
    for (auto& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string format_double(double v)
{
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

std::optional<std::size_t> Table::column(std::string_view name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return i;
    return std::nullopt;
}

std::string Table::header_list() const
{
    return fmt::format("{}", fmt::join(header, ", "));
}

Table read_table(std::istream& in)
{
    Table table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF"))
            line.erase(0, 3);
        const auto trimmed = trim(line);
        if (trimmed.empty())
            continue;
        if (!have_header && trimmed.front() == '#') {
            auto body = trim(trimmed.substr(1));
            if (auto colon = body.find(':'); colon != std::string_view::npos)
                table.preamble.emplace(std::string(trim(body.substr(0, colon))),
                                       std::string(trim(body.substr(colon + 1))));
            continue;
        }
        if (!have_header) {
            table.header = split_csv_line(trimmed);
            have_header = true;
            continue;
        }
        table.rows.push_back({line_no, split_csv_line(trimmed)});
    }
    if (!have_header)
        throw data_error("no samples: input is empty");
    return table;
}

const std::string& field(const Row& row, std::size_t idx, const Table& table)
{
    if (idx >= row.fields.size())
        throw data_error(fmt::format("line {}: expected {} columns ({}), found {}", row.line,
                                     table.header.size(), table.header_list(), row.fields.size()));
    return row.fields[idx];
}

double parse_value(std::string_view text, std::size_t line, std::string_view what)
{
    auto v = parse_number(text);
    if (!v)
        throw data_error(fmt::format("line {}: cannot parse {} '{}'", line, what, text));
    if (!std::isfinite(*v))
        throw data_error(fmt::format("line {}: non-finite {} '{}'", line, what, text));
    return *v;
}

double parse_row_timestamp(std::string_view text, std::size_t line)
{
    try {
        return parse_timestamp(text);
    } catch (const error& e) {
        throw data_error(fmt::format("line {}: {}", line, e.what()));
    }
}

std::vector<Sample> sort_and_check(std::vector<LinedSample> rows)
{
    if (rows.empty())
        throw data_error("no samples");
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.sample.t < b.sample.t; });
    std::vector<Sample> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i].sample.t == rows[i - 1].sample.t)
            throw data_error(fmt::format("duplicate timestamp {} at lines {} and {}",
                                         format_double(rows[i].sample.t),
                                         rows[i - 1].line, rows[i].line));
        out.push_back(rows[i].sample);
    }
    return out;
}

} // namespace wattledger::detail
