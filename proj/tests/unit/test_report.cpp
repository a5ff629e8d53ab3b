#include "reports.hpp"

#include <wattledger/error.hpp>
#include <wattledger/estimation.hpp>
#include <wattledger/report.hpp>

#include <gtest/gtest.h>

#include <algorithm>

using namespace wattledger;

namespace {

bool has_rule(const std::vector<ValidationFinding>& fs, const std::string& rule,
              ValidationFinding::Severity sev = ValidationFinding::Severity::error)
{
    return std::any_of(fs.begin(), fs.end(), [&](const auto& f) { return f.rule == rule && f.severity == sev; });
}

} // namespace

TEST(Validate, FullReportIsClean)
{
    EXPECT_TRUE(validate(fixtures::full_report()).empty());
}

TEST(Validate, MissingRuntime)
{
    auto r = fixtures::full_report();
    r.runtime_over_hardware.reset();
    EXPECT_TRUE(has_rule(validate(r), "R-RUNTIME"));
}

TEST(Validate, EmissionsWithoutBasis)
{
    auto r = fixtures::full_report();
    r.emissions->intensity_basis.reset();
    EXPECT_TRUE(has_rule(validate(r), "R-EMISSIONS-BASIS"));
}

TEST(Validate, EmissionsWithoutPowerEstimates)
{
    auto r = fixtures::full_report();
    r.results.clear();
    EXPECT_TRUE(has_rule(validate(r), "R-EMISSIONS-POWER"));
}

TEST(Validate, Warnings)
{
    auto r = fixtures::full_report();
    r.error_sources.clear();
    r.methodology.tools.clear();
    const auto fs = validate(r);
    EXPECT_TRUE(has_rule(fs, "R-ERROR-SOURCES", ValidationFinding::Severity::warning));
    EXPECT_TRUE(has_rule(fs, "R-TOOLS", ValidationFinding::Severity::warning));
    EXPECT_FALSE(std::any_of(fs.begin(), fs.end(),
                             [](const auto& f) { return f.severity == ValidationFinding::Severity::error; }));
    EXPECT_NO_THROW(render(r, ReportFormat::markdown));
}

TEST(Validate, OrderIndependent)
{
    auto r = fixtures::full_report();
    r.runtime_over_hardware.reset();
    r.error_sources.clear();
    auto second = fixtures::run_estimate();
    second.joules = 9;
    r.results.push_back(second);
    const auto a = validate(r);
    std::reverse(r.results.begin(), r.results.end());
    std::reverse(r.hardware.components.begin(), r.hardware.components.end());
    EXPECT_EQ(validate(r), a);
    EXPECT_TRUE(std::is_sorted(a.begin(), a.end(), [](const auto& x, const auto& y) {
        return std::tie(x.severity, x.rule, x.message) < std::tie(y.severity, y.rule, y.message);
    }));
}

TEST(Render, MarkdownHeadingsAndDeterminism)
{
    const auto r = fixtures::full_report();
    const auto md = render(r, ReportFormat::markdown);
    for (const char* h : {"## Hardware Characteristics", "## Software Characteristics", "## Measurement Methodology",
                          "## Additional Considerations", "## Sources of Error"})
        EXPECT_NE(md.find(h), std::string::npos) << h;
    EXPECT_EQ(md, render(fixtures::full_report(), ReportFormat::markdown));
    EXPECT_NE(md.find(" J "), std::string::npos);
    EXPECT_NE(md.find("gCO2"), std::string::npos);
}

TEST(Render, PueLine)
{
    auto r = fixtures::full_report();
    r.results = {apply_pue(fixtures::run_estimate(), 1.5)};
    r.emissions.reset();
    const auto md = render(r, ReportFormat::markdown);
    EXPECT_NE(md.find("PUE scaling applied"), std::string::npos) << md;
    EXPECT_NE(md.find("1.5"), std::string::npos);
    EXPECT_NE(render(r, ReportFormat::json).find("\"pue_applied\": 1.5"), std::string::npos);
}

TEST(Render, RefusesReportsWithErrors)
{
    auto r = fixtures::full_report();
    r.runtime_over_hardware.reset();
    try {
        render(r, ReportFormat::markdown);
        FAIL();
    } catch (const report_refused& e) {
        EXPECT_TRUE(has_rule(e.findings(), "R-RUNTIME"));
        EXPECT_NE(std::string(e.what()).find("R-RUNTIME"), std::string::npos);
    }
    EXPECT_THROW(render(r, ReportFormat::json), data_error);
}

TEST(Render, JsonCanonicalRoundTrip)
{
    auto r = fixtures::full_report();
    r.error_sources.clear(); // embedded warning survives the round trip
    const auto once = render(r, ReportFormat::json);
    const auto twice = render(parse_report_json(once), ReportFormat::json);
    EXPECT_EQ(once, twice);
    EXPECT_NE(once.find("R-ERROR-SOURCES"), std::string::npos);
}

TEST(Render, NoDefaultsInvented)
{
    auto r = fixtures::full_report();
    r.software = {};
    const auto md = render(r, ReportFormat::markdown);
    EXPECT_EQ(md.find("Linux"), std::string::npos);
    EXPECT_NE(md.find("R-SOFTWARE"), std::string::npos);
}

TEST(ReportFormat, Parse)
{
    EXPECT_EQ(parse_report_format("markdown"), ReportFormat::markdown);
    EXPECT_EQ(parse_report_format("json"), ReportFormat::json);
    EXPECT_THROW(parse_report_format("html"), usage_error);
}

TEST(ReportJson, InvalidInputIsDataError)
{
    EXPECT_THROW(parse_report_json("{"), data_error);
    EXPECT_THROW(parse_report_json(R"({"results": [{"joules": 5}]})"), data_error);
}
