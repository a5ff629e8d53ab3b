#pragma once

#include "wattledger/carbon.hpp"
#include "wattledger/error.hpp"
#include "wattledger/estimation.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wattledger {

struct HardwareComponent {
    std::string kind; ///< CPU, GPU, FPGA, memory, storage, ...
    std::string make;
    std::string model;
    std::optional<double> clock_ghz;
    std::optional<int> cores;
    std::string memory;
};

struct HardwareSection {
    std::vector<HardwareComponent> components;
    std::string configuration;
};

struct SoftwareSection {
    std::string environment;
    std::map<std::string, std::string> versions;
    std::string optimizations;
    std::string parallelism;
    /// Free text relating energy to the application, e.g. operations per second.
    std::string workload_context;
};

struct MethodologySection {
    std::vector<std::string> tools;
    std::string setup_conditions;
    std::string calibration_notes;
};

/// "X hours on Y resources".
struct RuntimeOverHardware {
    double duration_s = 0.0;
    std::string resource_description;
};

struct MeasurementReport {
    std::string title;
    HardwareSection hardware;
    SoftwareSection software;
    MethodologySection methodology;
    std::optional<RuntimeOverHardware> runtime_over_hardware;
    std::vector<EnergyEstimate> results;
    std::optional<EmissionsEstimate> emissions;
    std::vector<std::string> error_sources;
    std::string units_declared;
};

struct ValidationFinding {
    enum class Severity { error, warning };

    Severity severity = Severity::error;
    std::string rule;
    std::string message;

    friend bool operator==(const ValidationFinding&, const ValidationFinding&) = default;
};

std::string_view to_string(ValidationFinding::Severity s);

/// Rule identifiers and what each one enforces.
const std::map<std::string, std::string>& report_rules();

/// Checks the disclosure rules. Never throws; findings come back sorted by
/// severity, then rule, then message.
std::vector<ValidationFinding> validate(const MeasurementReport& report);

/// Thrown by render() when validation produced errors.
class report_refused : public data_error {
public:
    explicit report_refused(std::vector<ValidationFinding> findings);
    const std::vector<ValidationFinding>& findings() const noexcept { return findings_; }

private:
    std::vector<ValidationFinding> findings_;
};

enum class ReportFormat { json, markdown };

ReportFormat parse_report_format(std::string_view s);

/// Deterministic rendering. Warnings are embedded; errors refuse to render.
std::string render(const MeasurementReport& report, ReportFormat format);

MeasurementReport parse_report_json(std::string_view text);

} // namespace wattledger
