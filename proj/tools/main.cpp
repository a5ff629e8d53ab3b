#include "cli/cli.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    std::map<std::string, std::string> env;
    if (const char* cfg = std::getenv("WATTLEDGER_CONFIG"))
        env["WATTLEDGER_CONFIG"] = cfg;
    std::ios::sync_with_stdio(false);
    return wattledger::cli::run(args, env, {std::cin, std::cout, std::cerr});
}
