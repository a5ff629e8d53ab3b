#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace wattledger::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
};

struct Streams {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
};

/// Runs one command line. `args` excludes the program name. `env` supplies
/// WATTLEDGER_CONFIG; nothing else is read from the process environment.
int run(const std::vector<std::string>& args, const std::map<std::string, std::string>& env,
        Streams io);

} // namespace wattledger::cli
