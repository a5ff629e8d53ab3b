#pragma once

#include <string>
#include <string_view>

namespace wattledger {

/// Non-negative, finite power in watts.
class Power {
public:
    constexpr Power() = default;
    explicit Power(double watts);

    constexpr double watts() const noexcept { return watts_; }

    friend constexpr bool operator==(Power, Power) = default;
    friend constexpr auto operator<=>(Power, Power) = default;

private:
    double watts_ = 0.0;
};

/// Non-negative, finite energy in joules.
class Energy {
public:
    constexpr Energy() = default;
    explicit Energy(double joules);

    constexpr double joules() const noexcept { return joules_; }

    friend constexpr bool operator==(Energy, Energy) = default;
    friend constexpr auto operator<=>(Energy, Energy) = default;

private:
    double joules_ = 0.0;
};

enum class Prefix { micro, milli, unit, kilo, mega };
enum class BaseUnit { watt, joule, watt_hour };

struct UnitScale {
    Prefix prefix = Prefix::unit;
    BaseUnit base = BaseUnit::watt;

    friend constexpr bool operator==(UnitScale, UnitScale) = default;

    constexpr bool is_energy() const noexcept { return base != BaseUnit::watt; }
};

inline constexpr UnitScale kWatt{Prefix::unit, BaseUnit::watt};
inline constexpr UnitScale kJoule{Prefix::unit, BaseUnit::joule};
inline constexpr UnitScale kMicrojoule{Prefix::micro, BaseUnit::joule};
inline constexpr UnitScale kKilowattHour{Prefix::kilo, BaseUnit::watt_hour};

inline constexpr double kJoulesPerWattHour = 3600.0;
inline constexpr double kJoulesPerKilowattHour = 3.6e6;

/// Exact multiplicative conversion between two compatible scales.
/// Throws usage_error when one side is power and the other energy.
double convert(double value, UnitScale from, UnitScale to);

/// Canonical value: watts for power scales, joules for energy scales.
double to_canonical(double value, UnitScale from);

/// Parses one of `uJ mJ J kJ MJ Wh kWh uW mW W kW MW` (case-sensitive).
UnitScale parse_unit(std::string_view symbol);

/// Symbol for a scale; round-trips through parse_unit for the accepted set.
std::string unit_symbol(UnitScale scale);

Energy energy_from_constant_power(Power p, double duration_s);

} // namespace wattledger
