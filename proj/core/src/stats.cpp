#include "wattledger/stats.hpp"

#include "csv.hpp"
#include "wattledger/error.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <fmt/format.h>
#include <numeric>
#include <random>

namespace wattledger {

namespace {

struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0; ///< n-1 denominator; 0 when n < 2
};

Moments moments(const std::vector<double>& x)
{
    Moments m;
    m.n = x.size();
    double sum = 0.0;
    for (double v : x)
        sum += v;
    m.mean = sum / static_cast<double>(m.n);
    if (m.n > 1) {
        double ss = 0.0;
        for (double v : x)
            ss += (v - m.mean) * (v - m.mean);
        m.variance = ss / static_cast<double>(m.n - 1);
    }
    return m;
}

double t_quantile(double df, double prob)
{
    return boost::math::quantile(boost::math::students_t_distribution<double>(df), prob);
}

std::string methodology_key(const EnergyEstimate& e)
{
    return fmt::format("basis={}, method={}, level={}, pue={}", to_string(e.basis),
                       to_string(e.method), to_string(e.scope.level),
                       e.pue_applied ? detail::format_double(*e.pue_applied) : "none");
}

/// Unbiased draw in [0, bound) from a fully specified engine, so seeded runs are
/// identical on every standard library.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound)
{
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return r % bound;
}

/// C(n, k) saturating at `cap + 1`.
std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t cap)
{
    k = std::min(k, n - k);
    long double c = 1.0L;
    for (std::size_t i = 1; i <= k; ++i) {
        c = c * static_cast<long double>(n - k + i) / static_cast<long double>(i);
        if (c > static_cast<long double>(cap))
            return cap + 1;
    }
    return static_cast<std::size_t>(std::llround(c));
}

double split_statistic(const std::vector<double>& pool, const std::vector<char>& in_subset,
                       std::size_t k)
{
    double sum_s = 0.0;
    double sum_c = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i)
        (in_subset[i] ? sum_s : sum_c) += pool[i];
    return std::abs(sum_s / static_cast<double>(k) - sum_c / static_cast<double>(pool.size() - k));
}

} // namespace

RunSet::RunSet(std::string label, std::vector<EnergyEstimate> estimates,
               std::map<std::string, std::string> condition)
    : label_(std::move(label)), estimates_(std::move(estimates)), condition_(std::move(condition))
{
    if (estimates_.empty())
        throw usage_error(fmt::format("run set '{}' has no estimates", label_));
    for (const auto& e : estimates_)
        if (e.basis != estimates_.front().basis || e.method != estimates_.front().method)
            throw data_error(fmt::format("run set '{}' mixes bases or methods", label_));
}

std::vector<double> RunSet::joules() const
{
    std::vector<double> out;
    out.reserve(estimates_.size());
    for (const auto& e : estimates_)
        out.push_back(e.joules);
    return out;
}

Interval Summary::ci95() const
{
    if (!ci95_)
        throw usage_error(fmt::format("a confidence interval needs at least 2 runs, have {}", n));
    return *ci95_;
}

Summary summarize(const RunSet& rs)
{
    const auto m = moments(rs.joules());
    Summary s;
    s.n = m.n;
    s.mean = m.mean;
    if (m.n >= 2) {
        const double sd = std::sqrt(m.variance);
        s.stddev = sd;
        const double half = t_quantile(static_cast<double>(m.n - 1), 0.975) * sd /
                            std::sqrt(static_cast<double>(m.n));
        s.ci95_ = Interval{m.mean - half, m.mean + half};
    }
    return s;
}

std::string_view to_string(StatTest t)
{
    return t == StatTest::welch_t ? "welch_t" : "permutation";
}

StatTest parse_stat_test(std::string_view s)
{
    if (s == "welch_t" || s == "welch")
        return StatTest::welch_t;
    if (s == "permutation")
        return StatTest::permutation;
    throw usage_error(fmt::format("unknown statistical test '{}'", s));
}

ComparisonResult compare(const RunSet& a, const RunSet& b, const CompareOptions& options)
{
    if (!(options.alpha > 0.0 && options.alpha < 1.0))
        throw usage_error(fmt::format("alpha must lie in (0, 1), got {}", options.alpha));
    if (options.test == StatTest::welch_t && (a.size() < 2 || b.size() < 2))
        throw usage_error("Welch's t-test needs at least 2 runs per set; use the permutation test");
    const auto key_a = methodology_key(a.estimates().front());
    const auto key_b = methodology_key(b.estimates().front());
    if (key_a != key_b)
        throw data_error(fmt::format(
            "only compare results measured with the same methodology and scope: '{}' has {}, '{}' has {}",
            a.label(), key_a, b.label(), key_b));

    const auto xa = a.joules();
    const auto xb = b.joules();
    const auto ma = moments(xa);
    const auto mb = moments(xb);

    ComparisonResult r;
    r.test = options.test;
    r.n = {ma.n, mb.n};
    r.mean_diff_joules = ma.mean - mb.mean;
    r.confidence = 1.0 - options.alpha;
    r.ci = {r.mean_diff_joules, r.mean_diff_joules};

    const bool welch_ci = ma.n >= 2 && mb.n >= 2;
    const double va = welch_ci ? ma.variance / static_cast<double>(ma.n) : 0.0;
    const double vb = welch_ci ? mb.variance / static_cast<double>(mb.n) : 0.0;
    const double se2 = va + vb;
    if (welch_ci && se2 > 0.0) {
        const double se = std::sqrt(se2);
        const double df = se2 * se2 / (va * va / static_cast<double>(ma.n - 1) +
                                       vb * vb / static_cast<double>(mb.n - 1));
        const double half = t_quantile(df, 1.0 - options.alpha / 2.0) * se;
        r.ci = {r.mean_diff_joules - half, r.mean_diff_joules + half};
        r.degrees_of_freedom = df;
        r.statistic = r.mean_diff_joules / se;
    } else if (!welch_ci) {
        r.notes.emplace_back("interval collapsed to the point difference: a set has a single run");
    }

    if (options.test == StatTest::welch_t) {
        if (se2 > 0.0) {
            const boost::math::students_t_distribution<double> dist(*r.degrees_of_freedom);
            r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(
                                                dist, std::abs(*r.statistic))));
        } else {
            r.p_value = r.mean_diff_joules == 0.0 ? 1.0 : 0.0;
            r.notes.emplace_back(
                "both sets have zero variance; p set to 1 for equal means and 0 otherwise by convention");
        }
    } else {
        std::vector<double> pool = xa;
        pool.insert(pool.end(), xb.begin(), xb.end());
        std::sort(pool.begin(), pool.end());
        const std::size_t total = pool.size();
        const std::size_t k = std::min(ma.n, mb.n);
        const double observed = std::abs(r.mean_diff_joules);
        double scale = 0.0;
        for (double v : pool)
            scale = std::max(scale, std::abs(v));
        const double threshold = observed - 1e-12 * std::max(scale, 1.0);

        std::vector<char> in_subset(total, 0);
        const std::size_t combos = binomial_capped(total, k, options.exact_limit);
        std::size_t hits = 0;
        if (combos <= options.exact_limit) {
            // enumerate k-subsets in lexicographic index order
            std::vector<std::size_t> idx(k);
            std::iota(idx.begin(), idx.end(), 0);
            for (;;) {
                std::fill(in_subset.begin(), in_subset.end(), 0);
                for (auto i : idx)
                    in_subset[i] = 1;
                if (split_statistic(pool, in_subset, k) >= threshold)
                    ++hits;
                std::size_t pos = k;
                while (pos > 0 && idx[pos - 1] == total - k + pos - 1)
                    --pos;
                if (pos == 0)
                    break;
                ++idx[pos - 1];
                for (std::size_t j = pos; j < k; ++j)
                    idx[j] = idx[j - 1] + 1;
            }
            r.p_value = static_cast<double>(hits) / static_cast<double>(combos);
            r.exact = true;
        } else {
            if (options.permutations == 0)
                throw usage_error("permutation count must be positive");
            std::mt19937_64 rng(options.seed);
            std::vector<std::size_t> order(total);
            for (std::size_t draw = 0; draw < options.permutations; ++draw) {
                std::iota(order.begin(), order.end(), 0);
                for (std::size_t i = 0; i < k; ++i)
                    std::swap(order[i], order[i + bounded(rng, total - i)]);
                std::fill(in_subset.begin(), in_subset.end(), 0);
                for (std::size_t i = 0; i < k; ++i)
                    in_subset[order[i]] = 1;
                if (split_statistic(pool, in_subset, k) >= threshold)
                    ++hits;
            }
            r.p_value = static_cast<double>(hits + 1) / static_cast<double>(options.permutations + 1);
            r.notes.push_back(fmt::format("Monte Carlo permutation p from {} relabelings, seed {}",
                                          options.permutations, options.seed));
        }
    }
    r.notes.push_back(fmt::format("test {}, alpha {}; no multiple-comparison correction applied",
                                  to_string(options.test), detail::format_double(options.alpha)));
    return r;
}

SamplingAdequacy check_sampling(const PowerTrace& trace, TimeRange measured_span)
{
    SamplingAdequacy out;
    for (const auto& s : trace.samples())
        if (s.t >= measured_span.start && s.t <= measured_span.end)
            ++out.samples_in_window;
    out.min_interval = diagnose(trace).min_interval;

    if (out.min_interval && *out.min_interval < kMinSamplingInterval)
        out.warnings.push_back(fmt::format(
            "sampling interval {} s < 0.1 s: sampler overhead may distort readings",
            detail::format_double(*out.min_interval)));
    if (measured_span.duration() < kMinMeasuredSpan)
        out.warnings.push_back(fmt::format(
            "measured span {} s < 0.1 s: too short to measure reliably; lengthen or repeat the workload",
            detail::format_double(measured_span.duration())));
    if (out.samples_in_window < kMinSamplesInWindow)
        out.warnings.push_back(fmt::format(
            "only {} sample(s) in the measured window (< {}): transient spikes may be aliased; "
            "sample faster or add repetitions",
            out.samples_in_window, kMinSamplesInWindow));
    return out;
}

} // namespace wattledger
