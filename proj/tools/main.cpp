#include <cstdio>

#include "cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    hollowtree::cli::CmdOutcome outcome = hollowtree::cli::run_cli(args);
    if (!outcome.out.empty()) std::fputs(outcome.out.c_str(), stdout);
    if (!outcome.err.empty()) std::fputs(outcome.err.c_str(), stderr);
    return outcome.exit_code;
}
