#pragma once

#include "wattledger/estimation.hpp"
#include "wattledger/telemetry.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace wattledger {

/// Repetitions of one experimental condition.
class RunSet {
public:
    RunSet(std::string label, std::vector<EnergyEstimate> estimates,
           std::map<std::string, std::string> condition = {});

    const std::string& label() const noexcept { return label_; }
    const std::vector<EnergyEstimate>& estimates() const noexcept { return estimates_; }
    const std::map<std::string, std::string>& condition() const noexcept { return condition_; }
    std::size_t size() const noexcept { return estimates_.size(); }

    std::vector<double> joules() const;

private:
    std::string label_;
    std::vector<EnergyEstimate> estimates_;
    std::map<std::string, std::string> condition_;
};

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

class Summary {
public:
    std::size_t n = 0;
    double mean = 0.0;
    std::optional<double> stddev; ///< sample stddev, n-1 denominator; empty for n = 1

    /// Student-t 95% interval of the mean. Throws usage_error when n < 2.
    Interval ci95() const;

private:
    friend Summary summarize(const RunSet&);
    std::optional<Interval> ci95_;
};

Summary summarize(const RunSet& rs);

enum class StatTest { welch_t, permutation };

std::string_view to_string(StatTest t);
StatTest parse_stat_test(std::string_view s);

struct ComparisonResult {
    double mean_diff_joules = 0.0; ///< mean(a) - mean(b)
    Interval ci;                   ///< (1 - alpha) interval of the difference
    double confidence = 0.95;
    double p_value = 1.0;
    StatTest test = StatTest::welch_t;
    std::pair<std::size_t, std::size_t> n;
    std::optional<double> statistic;         ///< Welch t
    std::optional<double> degrees_of_freedom; ///< Welch-Satterthwaite
    bool exact = false;                       ///< permutation p by full enumeration
    std::vector<std::string> notes;
};

struct CompareOptions {
    StatTest test = StatTest::welch_t;
    double alpha = 0.05;
    std::uint64_t seed = 0x5eed;
    std::size_t permutations = 20000;
    /// Enumerate every relabeling when there are at most this many.
    std::size_t exact_limit = 200000;
};

/// Compares two run sets measured with the same methodology and scope.
ComparisonResult compare(const RunSet& a, const RunSet& b, const CompareOptions& options = {});

struct SamplingAdequacy {
    std::size_t samples_in_window = 0;
    std::optional<double> min_interval;
    std::vector<std::string> warnings;
};

inline constexpr double kMinSamplingInterval = 0.1;
inline constexpr double kMinMeasuredSpan = 0.1;
inline constexpr std::size_t kMinSamplesInWindow = 10;

SamplingAdequacy check_sampling(const PowerTrace& trace, TimeRange measured_span);

} // namespace wattledger
