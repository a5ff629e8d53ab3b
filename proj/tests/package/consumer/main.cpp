#include <wattledger/estimation.hpp>
#include <wattledger/telemetry.hpp>

#include <iostream>

int main()
{
    using namespace wattledger;
    const PowerTrace t("n1", HierarchyLevel::node, SampleKind::instantaneous_power,
                       {{0, 100.0}, {10, 200.0}, {20, 200.0}});
    const double j = integrate(t, t.span()).joules;
    std::cout << j << " J\n";
    return j == 3000.0 ? 0 : 1;
}
