#pragma once

#include "wattledger/telemetry.hpp"
#include "wattledger/units.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wattledger {

enum class EstimationMethod { zero_order, trapezoid, proxy_loadline, tdp_bound };
enum class EnergyBasis { absolute, marginal };

std::string_view to_string(EstimationMethod m);
std::string_view to_string(EnergyBasis b);
EstimationMethod parse_estimation_method(std::string_view s);
EnergyBasis parse_energy_basis(std::string_view s);

struct Scope {
    HierarchyLevel level = HierarchyLevel::node;
    std::vector<std::string> sources;

    friend bool operator==(const Scope&, const Scope&) = default;
};

/// Joules over an interval together with the provenance needed to interpret them.
///
/// `joules` is a plain double because marginal estimates may legitimately be
/// negative; absolute estimates are checked non-negative by validate().
struct EnergyEstimate {
    double joules = 0.0;
    TimeRange interval;
    EstimationMethod method = EstimationMethod::zero_order;
    Scope scope;
    EnergyBasis basis = EnergyBasis::absolute;
    std::optional<double> pue_applied;
    std::vector<std::string> notes;

    double duration() const noexcept { return interval.duration(); }
    double mean_watts() const;

    /// Throws usage_error when an invariant is broken.
    void validate() const;

    friend bool operator==(const EnergyEstimate&, const EnergyEstimate&) = default;
};

struct IdleBaseline {
    enum class Method { percentile, declared };

    Power watts;
    Method method = Method::declared;
    double percentile = 0.0; ///< only meaningful for Method::percentile
    TimeRange window;
    std::string source_id;

    static IdleBaseline declared(Power watts, std::string source_id, TimeRange window = {});

    bool same_method(const IdleBaseline& other) const noexcept;
};

struct OffsetFit {
    std::string reference_class;
    std::map<std::string, double> offsets_watts;
    double residual_rms_watts = 0.0;
    /// Fitted class-independent energy of the workload, in joules.
    double common_joules = 0.0;
};

/// One repetition of the workload for fit_offsets.
struct OffsetObservation {
    std::string node_class;
    std::string workload;
    EnergyEstimate estimate;
};

enum class IntegrationMethod { zero_order, trapezoid };

/// Integrates a power trace over `interval`. The trace must cover the interval;
/// nothing is extrapolated.
EnergyEstimate integrate(const PowerTrace& trace, TimeRange interval,
                         IntegrationMethod method = IntegrationMethod::zero_order);

/// Nearest-rank p-quantile of the trace's power values.
IdleBaseline estimate_idle_baseline(const PowerTrace& trace, double p = 0.02);

/// Subtracts baseline power over the estimate's duration. Negative results are kept
/// and annotated, never clamped.
EnergyEstimate marginal_energy(const EnergyEstimate& absolute, const IdleBaseline& baseline);

/// Removes the idle-power difference between a node class and a reference class.
EnergyEstimate standardize_to_reference(const EnergyEstimate& estimate, const IdleBaseline& node,
                                        const IdleBaseline& reference);

/// Least-squares fit of per-class constant power offsets relative to `reference_class`
/// using the model E = common + offset[class] * duration.
OffsetFit fit_offsets(const std::vector<OffsetObservation>& repetitions,
                      const std::string& reference_class);

/// Grosses up IT energy to facility energy. Rejects PUE < 1 and double application.
EnergyEstimate apply_pue(const EnergyEstimate& estimate, double pue);

} // namespace wattledger
