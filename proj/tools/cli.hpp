#pragma once

#include <optional>
#include <string>
#include <vector>

// Command surface of the hollowtree executable, kept in a library so tests
// can drive the commands in-process.

namespace hollowtree::cli {

struct RunConfig {
    double ipf_tol = 1e-10;
    int ipf_max_iter = 10000;
    // Selection threshold; --select's inline value overrides it.  No
    // built-in default: selecting without a threshold from either source is
    // an input error.
    std::optional<double> threshold;
    std::string format = "json";  // json | text
};

struct CmdOutcome {
    int exit_code = 0;
    std::string out;
    std::string err;
};

struct AnalyzeRequest {
    std::string counts_path;
    bool screen = false;
    bool symmetrize = false;
    std::optional<double> select;   // threshold when the select stage runs
    std::optional<std::string> fit; // "selected" or a graph-file path
    bool tests = false;
};

// Parses a RunConfig JSON file ({"ipf_tol", "ipf_max_iter", "threshold",
// "format"}, all optional).
RunConfig load_config_file(const std::string& path);
// Config named by $HOLLOWTREE_CONFIG, or defaults when unset.
RunConfig load_config_env();

CmdOutcome cmd_decompose(const std::string& graph_path, const RunConfig& cfg);
CmdOutcome cmd_analyze(const AnalyzeRequest& req, const RunConfig& cfg);

// Full argv handling (without argv[0]): subcommands, flags, config, error
// mapping to exit codes 2 (input), 3 (domain), 4 (convergence).
CmdOutcome run_cli(const std::vector<std::string>& args);

}  // namespace hollowtree::cli
