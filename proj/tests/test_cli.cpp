#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cli.hpp"
#include "hollowtree/io.hpp"
#include "support/approx.hpp"
#include "support/datasets.hpp"

using namespace hollowtree;
using nlohmann::json;

namespace {

cli::CmdOutcome run(std::initializer_list<std::string> args) {
    return cli::run_cli(std::vector<std::string>(args));
}

std::string write_temp(const std::string& name, const std::string& text) {
    std::filesystem::path p = std::filesystem::temp_directory_path() / name;
    std::ofstream out(p);
    out << text;
    out.close();
    return p.string();
}

json parse_out(const cli::CmdOutcome& o) {
    REQUIRE(o.exit_code == 0);
    REQUIRE(o.err.empty());
    return json::parse(o.out);
}

const std::vector<std::vector<int>> kSelectedEdgeLists = {
    {1, 2}, {1, 3}, {2, 3}, {2, 5}, {3, 4}, {4, 5}};

}  // namespace

TEST_CASE("decompose on the worked graphs") {
    cli::CmdOutcome o = run({"decompose", datasets::path("diamond_graph.json")});
    json j = parse_out(o);
    CHECK(j["schema"] == "1");
    CHECK(j["command"] == "decompose");
    CHECK(j["graph"]["d"] == 4);
    CHECK(j["primes"] == json::parse("[[1,3,4],[2,3,4]]"));
    CHECK(j["cutsets"] == json::parse("[[3,4]]"));
    CHECK(j["class"] == "HollowTree");
    CHECK(j["chordal"] == true);

    json c = parse_out(run({"decompose", datasets::path("fourcycle_graph.json")}));
    CHECK(c["primes"] == json::parse("[[1,2,3,4]]"));
    CHECK(c["cutsets"] == json::array());
    CHECK(c["class"] == "HollowTree");
    CHECK(c["chordal"] == false);
}

TEST_CASE("decompose in text format") {
    cli::CmdOutcome o =
        run({"decompose", datasets::path("diamond_graph.json"), "--format", "text"});
    CHECK(o.exit_code == 0);
    CHECK(o.out.find("graph: d=4") != std::string::npos);
    CHECK(o.out.find("primes: {1,3,4} {2,3,4}") != std::string::npos);
    CHECK(o.out.find("class: HollowTree") != std::string::npos);
    CHECK(o.out.find("chordal: yes") != std::string::npos);
}

TEST_CASE("exit codes follow the error taxonomy") {
    // unreadable and malformed inputs
    cli::CmdOutcome missing = run({"decompose", "/nonexistent/graph.json"});
    CHECK(missing.exit_code == 2);
    CHECK(missing.err.find("input error:") == 0);

    std::string bad = write_temp("hollowtree_bad_graph.json", "{not json");
    CHECK(run({"decompose", bad}).exit_code == 2);

    // mathematically rejected input
    std::string disc =
        write_temp("hollowtree_disconnected.json", R"({"d": 3, "edges": [[1, 2]]})");
    cli::CmdOutcome dom = run({"decompose", disc});
    CHECK(dom.exit_code == 3);
    CHECK(dom.err.find("domain error:") == 0);

    // iteration budget exceeded
    cli::CmdOutcome conv = run({"analyze", datasets::path("achievement.json"), "--symmetrize",
                                "--max-iter", "1"});
    CHECK(conv.exit_code == 4);
    CHECK(conv.err.find("convergence error:") == 0);
    CHECK(conv.err.find("stage symmetrize:") != std::string::npos);

    // argument errors
    CHECK(run({"frobnicate"}).exit_code == 2);
    CHECK(run({"decompose"}).exit_code == 2);
    cli::CmdOutcome sel = run({"analyze", datasets::path("achievement.json"), "--select"});
    CHECK(sel.exit_code == 2);
    CHECK(sel.err.find("threshold") != std::string::npos);
    CHECK(run({"analyze", datasets::path("achievement.json"), "--tests"}).exit_code == 2);
}

TEST_CASE("analyze runs the full pipeline") {
    cli::CmdOutcome o = run({"analyze", datasets::path("achievement.json"), "--screen",
                             "--symmetrize", "--select", "0.045", "--fit", "selected",
                             "--tests"});
    json j = parse_out(o);
    CHECK(j["schema"] == "1");
    CHECK(j["command"] == "analyze");
    CHECK(j["d"] == 5);
    CHECK(j["n"] == 2339.0);
    CHECK(j["stages"] ==
          json::parse(R"(["screen","symmetrize","select","fit","tests"])"));

    CHECK(j["screen"]["rows"].size() == 10);
    CHECK(j["screen"]["rows"][0]["triple"] == json::parse("[1,2,3]"));
    CHECK(j["screen"]["ising_close"] == true);

    CHECK(j["symmetrize"]["rho"].size() == 5);
    CHECK(j["symmetrize"]["table"].size() == 32);
    CHECK(double(j["symmetrize"]["rho"][0][2]) == testutil::near(-0.333, 0.002));

    CHECK(j["select"]["threshold"] == 0.045);
    CHECK(j["select"]["edges"] == json(kSelectedEdgeLists));
    CHECK(j["select"]["connected"] == true);
    CHECK(j["select"]["class"] == "HollowTree");

    CHECK(double(j["fit"]["baseline"]["chi2"]) == testutil::near(17.653, 0.02));
    CHECK(j["fit"]["baseline"]["df"] == 16);
    CHECK(j["fit"]["model"]["route"] == "per_prime");
    CHECK(double(j["fit"]["model"]["chi2"]) == testutil::near(23.428, 0.02));
    CHECK(j["fit"]["model"]["df"] == 20);
    CHECK(double(j["fit"]["model"]["additional_deviance"]) == testutil::near(5.774, 0.02));
    CHECK(j["fit"]["model"]["additional_df"] == 4);
    CHECK(j["fit"]["model"]["graph"]["edges"] == json(kSelectedEdgeLists));
    CHECK(j["fit"]["palindromic_fit"]["terms"].size() == 7);
    // the empty term has no t statistic
    CHECK(j["fit"]["model"]["terms"][0]["t"].is_null());

    REQUIRE(j["tests"]["between"].size() == 1);
    CHECK(double(j["tests"]["between"][0]["statistic"]) == testutil::near(16.747, 0.02));
    CHECK(j["tests"]["between"][0]["df"] == 12);
    REQUIRE(j["tests"]["within"].size() == 2);
    for (const json& w : j["tests"]["within"]) {
        if (w["prime"] == json::parse("[1,2,3]")) {
            CHECK(double(w["statistic"]) == testutil::near(1.156, 0.02));
            CHECK(w["df"] == 1);
        } else {
            CHECK(w["prime"] == json::parse("[2,3,4,5]"));
            CHECK(double(w["statistic"]) == testutil::near(5.525, 0.02));
            CHECK(w["df"] == 7);
        }
    }
    CHECK(double(j["tests"]["total"]["statistic"]) == testutil::near(23.428, 0.02));
    CHECK(j["tests"]["total"]["df"] == 20);

    // reports are stable under a parse/serialize round trip
    CHECK(json::parse(o.out).dump(2) + "\n" == o.out);
}

TEST_CASE("analyze accepts an explicit graph file for fitting") {
    Graph sel(5);
    for (auto [s, t] : datasets::kSelectedEdges) sel.add_edge(s, t);
    std::string gpath = write_temp("hollowtree_selected_graph.json", graph_to_json(sel));

    json j = parse_out(
        run({"analyze", datasets::path("achievement.json"), "--fit", gpath, "--tests"}));
    CHECK(j["stages"] == json::parse(R"(["fit","tests"])"));
    CHECK(double(j["fit"]["model"]["chi2"]) == testutil::near(23.428, 0.02));
    CHECK(j["tests"]["total"]["df"] == 20);

    // dimension mismatch surfaces with the stage prefix
    cli::CmdOutcome bad = run({"analyze", datasets::path("achievement.json"), "--fit",
                               datasets::path("diamond_graph.json")});
    CHECK(bad.exit_code == 2);
    CHECK(bad.err.find("stage fit:") != std::string::npos);
}

TEST_CASE("csv and json inputs give identical reports") {
    cli::CmdOutcome a =
        run({"analyze", datasets::path("achievement.json"), "--symmetrize", "--screen"});
    cli::CmdOutcome b =
        run({"analyze", datasets::path("achievement.csv"), "--symmetrize", "--screen"});
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);
}

TEST_CASE("screen flags the introductory table") {
    json j = parse_out(run({"analyze", datasets::path("intro100.json"), "--screen"}));
    REQUIRE(j["screen"]["rows"].size() == 4);
    CHECK(double(j["screen"]["rows"][0]["xi"]) == testutil::near(-0.60, 0.005));
    CHECK(double(j["screen"]["rows"][0]["t"]) == testutil::near(-7.50, 0.01));
    CHECK(j["screen"]["ising_close"] == false);
}

TEST_CASE("analyze in text format") {
    cli::CmdOutcome o = run({"analyze", datasets::path("achievement.json"), "--select",
                             "0.045", "--fit", "selected", "--tests", "--format", "text"});
    CHECK(o.exit_code == 0);
    CHECK(o.out.find("analyze: d=5, n=2339") != std::string::npos);
    CHECK(o.out.find("# select (threshold 0.045)") != std::string::npos);
    CHECK(o.out.find("connected: yes, class: HollowTree") != std::string::npos);
    CHECK(o.out.find("# fit: model (per prime)") != std::string::npos);
    CHECK(o.out.find("between: a=") != std::string::npos);
    CHECK(o.out.find("total: chi2 23.4") != std::string::npos);
}

TEST_CASE("configuration file via the environment") {
    std::string cfg = write_temp("hollowtree_config.json",
                                 R"({"threshold": 0.045, "format": "json"})");
    ::setenv("HOLLOWTREE_CONFIG", cfg.c_str(), 1);
    json j = parse_out(run({"analyze", datasets::path("achievement.json"), "--select"}));
    ::unsetenv("HOLLOWTREE_CONFIG");
    CHECK(j["select"]["threshold"] == 0.045);
    CHECK(j["select"]["edges"] == json(kSelectedEdgeLists));

    std::string bad = write_temp("hollowtree_config_bad.json", R"({"bogus": 1})");
    ::setenv("HOLLOWTREE_CONFIG", bad.c_str(), 1);
    cli::CmdOutcome o = run({"analyze", datasets::path("achievement.json"), "--screen"});
    ::unsetenv("HOLLOWTREE_CONFIG");
    CHECK(o.exit_code == 2);
    CHECK(o.err.find("config") != std::string::npos);

    std::string text_cfg = write_temp("hollowtree_config_text.json", R"({"format": "text"})");
    ::setenv("HOLLOWTREE_CONFIG", text_cfg.c_str(), 1);
    cli::CmdOutcome t = run({"decompose", datasets::path("diamond_graph.json")});
    ::unsetenv("HOLLOWTREE_CONFIG");
    CHECK(t.exit_code == 0);
    CHECK(t.out.find("graph: d=4") == 0);
}

TEST_CASE("help exits cleanly") {
    cli::CmdOutcome o = run({"analyze", "--help"});
    CHECK(o.exit_code == 0);
    CHECK(o.out.find("--screen") != std::string::npos);
}
