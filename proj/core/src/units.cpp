#include "wattledger/units.hpp"

#include "wattledger/error.hpp"

#include <array>
#include <cmath>
#include <fmt/format.h>

namespace wattledger {

Power::Power(double watts) : watts_(watts)
{
    if (!std::isfinite(watts) || watts < 0.0)
        throw usage_error(fmt::format("power must be finite and non-negative, got {} W", watts));
}

Energy::Energy(double joules) : joules_(joules)
{
    if (!std::isfinite(joules) || joules < 0.0)
        throw usage_error(fmt::format("energy must be finite and non-negative, got {} J", joules));
}

namespace {

int prefix_exponent(Prefix p)
{
    switch (p) {
    case Prefix::micro: return -6;
    case Prefix::milli: return -3;
    case Prefix::unit: return 0;
    case Prefix::kilo: return 3;
    case Prefix::mega: return 6;
    }
    return 0;
}

double pow10_exact(int e)
{
    // every power of ten up to 1e22 is exactly representable
    static constexpr std::array<double, 13> table{1e0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6,
                                                  1e7, 1e8, 1e9, 1e10, 1e11, 1e12};
    return table.at(static_cast<std::size_t>(e));
}

} // namespace

double convert(double value, UnitScale from, UnitScale to)
{
    if (from.is_energy() != to.is_energy())
        throw usage_error(fmt::format("cannot convert {} to {} without a duration",
                                      unit_symbol(from), unit_symbol(to)));
    double v = value;
    if (from.base == BaseUnit::watt_hour)
        v *= kJoulesPerWattHour;
    const int e = prefix_exponent(from.prefix) - prefix_exponent(to.prefix);
    // dividing by an exact power of ten rounds once; multiplying by 1e-6 would round twice
    if (e >= 0)
        v *= pow10_exact(e);
    else
        v /= pow10_exact(-e);
    if (to.base == BaseUnit::watt_hour)
        v /= kJoulesPerWattHour;
    return v;
}

double to_canonical(double value, UnitScale from)
{
    return convert(value, from, from.is_energy() ? kJoule : kWatt);
}

UnitScale parse_unit(std::string_view symbol)
{
    struct Entry {
        std::string_view symbol;
        UnitScale scale;
    };
    static constexpr std::array<Entry, 12> table{{
        {"uJ", {Prefix::micro, BaseUnit::joule}},
        {"mJ", {Prefix::milli, BaseUnit::joule}},
        {"J", {Prefix::unit, BaseUnit::joule}},
        {"kJ", {Prefix::kilo, BaseUnit::joule}},
        {"MJ", {Prefix::mega, BaseUnit::joule}},
        {"Wh", {Prefix::unit, BaseUnit::watt_hour}},
        {"kWh", {Prefix::kilo, BaseUnit::watt_hour}},
        {"uW", {Prefix::micro, BaseUnit::watt}},
        {"mW", {Prefix::milli, BaseUnit::watt}},
        {"W", {Prefix::unit, BaseUnit::watt}},
        {"kW", {Prefix::kilo, BaseUnit::watt}},
        {"MW", {Prefix::mega, BaseUnit::watt}},
    }};
    for (const auto& entry : table)
        if (entry.symbol == symbol)
            return entry.scale;
    throw usage_error(fmt::format("unknown unit symbol '{}'", symbol));
}

std::string unit_symbol(UnitScale scale)
{
    std::string s;
    switch (scale.prefix) {
    case Prefix::micro: s = "u"; break;
    case Prefix::milli: s = "m"; break;
    case Prefix::unit: break;
    case Prefix::kilo: s = "k"; break;
    case Prefix::mega: s = "M"; break;
    }
    switch (scale.base) {
    case BaseUnit::watt: s += "W"; break;
    case BaseUnit::joule: s += "J"; break;
    case BaseUnit::watt_hour: s += "Wh"; break;
    }
    return s;
}

Energy energy_from_constant_power(Power p, double duration_s)
{
    if (!std::isfinite(duration_s) || duration_s < 0.0)
        throw usage_error(fmt::format("duration must be non-negative, got {} s", duration_s));
    return Energy(p.watts() * duration_s);
}

} // namespace wattledger
