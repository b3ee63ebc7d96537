#include "cli.hpp"

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "hollowtree/graph.hpp"
#include "hollowtree/infer.hpp"
#include "hollowtree/io.hpp"

namespace hollowtree::cli {

namespace {

using nlohmann::json;

std::string fmt(const char* f, ...) {
    va_list ap;
    va_start(ap, f);
    char buf[256];
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

std::string brace_set(const NodeSet& nodes) {
    std::string out = "{";
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(nodes[i]);
    }
    return out + "}";
}

NodeSet mask_nodes(mask_t m) {
    NodeSet out;
    for (int s = 1; m; ++s, m >>= 1)
        if (m & 1) out.push_back(s);
    return out;
}

json nodes_json(const NodeSet& nodes) {
    json j = json::array();
    for (int s : nodes) j.push_back(s);
    return j;
}

json edges_json(const std::vector<std::pair<int, int>>& edges) {
    json j = json::array();
    for (auto [s, t] : edges) j.push_back(json::array({s, t}));
    return j;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json j = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        j.push_back(row);
    }
    return j;
}

std::string matrix_text(const Eigen::MatrixXd& m, const char* indent) {
    std::string out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out += indent;
        for (Eigen::Index k = 0; k < m.cols(); ++k) out += fmt("%8.3f", m(i, k));
        out += "\n";
    }
    return out;
}

json graph_json(const Graph& g) {
    json j;
    j["d"] = g.d();
    j["edges"] = edges_json(g.edges());
    return j;
}

json fit_report_json(const FitReport& rep, const RunConfig& cfg) {
    json j;
    j["graph"] = graph_json(rep.model);
    j["palindromic"] = rep.palindromic;
    j["n"] = rep.total;
    json terms = json::array();
    for (const FitTerm& t : rep.terms) {
        json jt;
        jt["subset"] = nodes_json(mask_nodes(t.subset));
        jt["lambda"] = t.lambda_prob;
        jt["lambda_count"] = t.lambda_count;
        jt["t"] = t.tstat;  // NaN serializes as null
        terms.push_back(jt);
    }
    j["terms"] = terms;
    j["chi2"] = rep.deviance;
    j["df"] = rep.df;
    j["iterations"] = rep.iterations;
    j["tolerance"] = cfg.ipf_tol;
    j["discrepancy"] = rep.final_discrepancy;
    json cells = json::array();
    for (std::size_t k = 0; k < rep.fitted.size(); ++k) cells.push_back(rep.fitted[k]);
    j["fitted"] = cells;
    return j;
}

std::string fit_report_text(const FitReport& rep) {
    std::string out;
    out += fmt("  %-10s %10s %10s %8s\n", "term", "lambda", "lambda_n", "t");
    for (const FitTerm& t : rep.terms) {
        std::string name = t.subset == 0 ? "{}" : brace_set(mask_nodes(t.subset));
        std::string tcol = std::isnan(t.tstat) ? fmt("%8s", "-") : fmt("%8.2f", t.tstat);
        out += fmt("  %-10s %10.4f %10.4f %s\n", name.c_str(), t.lambda_prob, t.lambda_count,
                   tcol.c_str());
    }
    out += fmt("  chi2 %.3f on %d df, %d sweeps\n", rep.deviance, rep.df, rep.iterations);
    return out;
}

template <class Fn>
void with_stage(const std::string& name, Fn&& fn) {
    try {
        fn();
    } catch (const input_error& e) {
        throw input_error("stage " + name + ": " + e.what());
    } catch (const convergence_error& e) {
        throw convergence_error("stage " + name + ": " + e.what());
    } catch (const domain_error& e) {
        throw domain_error("stage " + name + ": " + e.what());
    }
}

CmdOutcome guarded(const std::function<std::string()>& body) {
    CmdOutcome o;
    try {
        o.out = body();
    } catch (const input_error& e) {
        o.exit_code = 2;
        o.err = std::string("input error: ") + e.what() + "\n";
    } catch (const domain_error& e) {
        o.exit_code = 3;
        o.err = std::string("domain error: ") + e.what() + "\n";
    } catch (const convergence_error& e) {
        o.exit_code = 4;
        o.err = std::string("convergence error: ") + e.what() + "\n";
    } catch (const std::exception& e) {
        o.exit_code = 1;
        o.err = std::string("error: ") + e.what() + "\n";
    }
    return o;
}

void check_config(const RunConfig& cfg) {
    if (!(cfg.ipf_tol > 0.0)) throw input_error("config: ipf_tol must be positive");
    if (cfg.ipf_max_iter < 1) throw input_error("config: ipf_max_iter must be at least 1");
    if (cfg.threshold && !(*cfg.threshold >= 0.0 && *cfg.threshold <= 1.0))
        throw input_error("config: threshold must lie in [0,1]");
    if (cfg.format != "json" && cfg.format != "text")
        throw input_error("config: format must be json or text");
}

}  // namespace

RunConfig load_config_file(const std::string& path) {
    RunConfig cfg;
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw input_error(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw input_error("config: expected a JSON object");
    for (auto& [key, value] : j.items()) {
        if (key == "ipf_tol" && value.is_number())
            cfg.ipf_tol = value.get<double>();
        else if (key == "ipf_max_iter" && value.is_number_integer())
            cfg.ipf_max_iter = value.get<int>();
        else if (key == "threshold" && value.is_number())
            cfg.threshold = value.get<double>();
        else if (key == "format" && value.is_string())
            cfg.format = value.get<std::string>();
        else
            throw input_error("config: unknown or ill-typed key \"" + key + "\"");
    }
    check_config(cfg);
    return cfg;
}

RunConfig load_config_env() {
    const char* path = std::getenv("HOLLOWTREE_CONFIG");
    if (path == nullptr || *path == '\0') return RunConfig{};
    return load_config_file(path);
}

CmdOutcome cmd_decompose(const std::string& graph_path, const RunConfig& cfg) {
    return guarded([&]() -> std::string {
        check_config(cfg);
        Graph g = read_graph_file(graph_path);
        PrimeDecomposition dec = prime_decomposition(g);
        TreeClass cls = classify(g);
        Chordality chord = is_chordal(g);

        if (cfg.format == "text") {
            std::string out;
            out += "graph: d=" + std::to_string(g.d()) + ", edges";
            for (auto [s, t] : g.edges()) out += fmt(" (%d,%d)", s, t);
            out += "\nprimes:";
            for (const NodeSet& p : dec.primes) out += " " + brace_set(p);
            out += "\ncutsets:";
            for (const NodeSet& c : dec.cutsets) out += " " + brace_set(c);
            out += "\nscheme:";
            for (const NodeSet& s : dec.scheme) out += " " + brace_set(s);
            out += "\nclass: " + to_string(cls);
            out += std::string("\nchordal: ") + (chord.chordal ? "yes" : "no") + "\n";
            return out;
        }

        json j;
        j["schema"] = "1";
        j["command"] = "decompose";
        j["graph"] = graph_json(g);
        json primes = json::array();
        for (const NodeSet& p : dec.primes) primes.push_back(nodes_json(p));
        j["primes"] = primes;
        json cutsets = json::array();
        for (const NodeSet& c : dec.cutsets) cutsets.push_back(nodes_json(c));
        j["cutsets"] = cutsets;
        json scheme = json::array();
        for (const NodeSet& s : dec.scheme) scheme.push_back(nodes_json(s));
        j["scheme"] = scheme;
        j["class"] = to_string(cls);
        j["chordal"] = chord.chordal;
        return j.dump(2) + "\n";
    });
}

CmdOutcome cmd_analyze(const AnalyzeRequest& req, const RunConfig& cfg) {
    return guarded([&]() -> std::string {
        check_config(cfg);
        CountTable counts = read_counts_file(req.counts_path);

        json report;
        report["schema"] = "1";
        report["command"] = "analyze";
        report["d"] = counts.d();
        report["n"] = counts.total();
        json stages = json::array();
        std::string text;
        text += fmt("analyze: d=%d, n=%.0f\n", counts.d(), counts.total());

        if (req.screen) {
            stages.push_back("screen");
            with_stage("screen", [&] {
                ScreenResult sc = screen_3factor(counts);
                json j;
                json rows = json::array();
                for (const ScreenRow& r : sc.rows) {
                    json jr;
                    jr["triple"] = json::array({r.triple[0], r.triple[1], r.triple[2]});
                    jr["xi"] = r.xi;
                    jr["t"] = r.t;
                    rows.push_back(jr);
                }
                j["rows"] = rows;
                j["ising_close"] = sc.ising_close;
                report["screen"] = j;

                text += "\n# screen\n";
                text += fmt("  %-10s %10s %8s\n", "triple", "xi", "t");
                for (const ScreenRow& r : sc.rows)
                    text += fmt("  %-10s %10.4f %8.2f\n",
                                brace_set({r.triple[0], r.triple[1], r.triple[2]}).c_str(), r.xi,
                                r.t);
                text += fmt("  ising_close: %s\n", sc.ising_close ? "yes" : "no");
            });
        }

        if (req.symmetrize) {
            stages.push_back("symmetrize");
            with_stage("symmetrize", [&] {
                ProbTable sym = symmetrize_table(counts, cfg.ipf_tol, cfg.ipf_max_iter);
                MomentSet mom = moments(sym);
                CorrStack stack = concentration_and_theta(mom.rho);
                json j;
                j["rho"] = matrix_json(mom.rho);
                j["theta"] = matrix_json(stack.theta);
                json cells = json::array();
                for (std::size_t k = 0; k < sym.size(); ++k) cells.push_back(sym[k]);
                j["table"] = cells;
                report["symmetrize"] = j;

                text += "\n# symmetrize (saturated palindromic fit)\n";
                text += "  rho:\n" + matrix_text(mom.rho, "    ");
                text += "  theta:\n" + matrix_text(stack.theta, "    ");
            });
        }

        std::optional<Graph> selected;
        if (req.select) {
            stages.push_back("select");
            with_stage("select", [&] {
                double thr = *req.select;
                if (!(thr >= 0.0 && thr <= 1.0))
                    throw input_error("threshold must lie in [0,1]");
                SelectResult sel =
                    select_structure(counts, thr, cfg.ipf_tol, cfg.ipf_max_iter);
                selected = sel.graph;
                json j;
                j["threshold"] = thr;
                j["edges"] = edges_json(sel.graph.edges());
                j["connected"] = sel.connected;
                j["class"] = sel.tree_class ? json(to_string(*sel.tree_class)) : json(nullptr);
                j["rho_before"] = matrix_json(sel.rho_before);
                j["theta_before"] = matrix_json(sel.theta_before);
                j["rho_after"] = matrix_json(sel.rho_after);
                j["theta_after"] = matrix_json(sel.theta_after);
                report["select"] = j;

                text += fmt("\n# select (threshold %g)\n", thr);
                text += "  edges:";
                for (auto [s, t] : sel.graph.edges()) text += fmt(" (%d,%d)", s, t);
                text += "\n";
                text += fmt("  connected: %s", sel.connected ? "yes" : "no");
                if (sel.tree_class) text += ", class: " + to_string(*sel.tree_class);
                text += "\n  theta before:\n" + matrix_text(sel.theta_before, "    ");
                text += "  theta after:\n" + matrix_text(sel.theta_after, "    ");
            });
        }

        std::optional<Graph> model;
        if (req.fit) {
            stages.push_back("fit");
            with_stage("fit", [&] {
                if (*req.fit == "selected") {
                    if (!selected) throw input_error("--fit selected needs --select");
                    model = *selected;
                } else {
                    model = read_graph_file(*req.fit);
                }
                if (model->d() != counts.d())
                    throw input_error("graph dimension disagrees with the counts");

                std::vector<std::pair<int, int>> all_pairs;
                for (int s = 1; s <= counts.d(); ++s)
                    for (int t = s + 1; t <= counts.d(); ++t) all_pairs.emplace_back(s, t);
                FitReport baseline =
                    ipf_fit(counts, all_pairs, false, cfg.ipf_tol, cfg.ipf_max_iter);

                bool hollow =
                    model->connected() && hollow_structure(*model, prime_decomposition(*model));
                FitReport model_fit =
                    hollow ? fit_hollow_tree(counts, *model)
                           : ipf_fit(counts, model->edges(), false, cfg.ipf_tol,
                                     cfg.ipf_max_iter);
                FitReport pal =
                    ipf_fit(counts, model->edges(), true, cfg.ipf_tol, cfg.ipf_max_iter);

                json j;
                j["baseline"] = fit_report_json(baseline, cfg);
                json jm = fit_report_json(model_fit, cfg);
                jm["additional_deviance"] = model_fit.deviance - baseline.deviance;
                jm["additional_df"] = model_fit.df - baseline.df;
                jm["route"] = hollow ? "per_prime" : "ipf";
                j["model"] = jm;
                j["palindromic_fit"] = fit_report_json(pal, cfg);
                report["fit"] = j;

                text += "\n# fit: baseline (all pairs, general)\n" + fit_report_text(baseline);
                text += fmt("\n# fit: model (%s)\n", hollow ? "per prime" : "ipf");
                text += fit_report_text(model_fit);
                text += fmt("  additional chi2 %.3f on %d df\n",
                            model_fit.deviance - baseline.deviance,
                            model_fit.df - baseline.df);
                text += "\n# fit: palindromic on model edges\n" + fit_report_text(pal);
            });
        }

        if (req.tests) {
            stages.push_back("tests");
            with_stage("tests", [&] {
                if (!model && selected) model = selected;
                if (!model) throw input_error("--tests needs --fit or --select");
                PrimeDecomposition dec = prime_decomposition(*model);

                json between = json::array();
                json within = json::array();
                double total_stat = 0.0;
                int total_df = 0;
                text += "\n# tests\n";

                // One between-primes test per junction-tree edge, visiting
                // primes breadth-first so each new prime is tested against
                // everything already joined.
                std::vector<std::vector<std::pair<int, int>>> adj(dec.primes.size());
                for (std::size_t k = 0; k < dec.tree.size(); ++k) {
                    auto [u, v] = dec.tree[k];
                    adj[u].emplace_back(v, static_cast<int>(k));
                    adj[v].emplace_back(u, static_cast<int>(k));
                }
                std::vector<char> visited(dec.primes.size(), 0);
                std::vector<char> joined_nodes(counts.d() + 1, 0);
                std::vector<int> queue{0};
                visited[0] = 1;
                for (int s : dec.primes[0]) joined_nodes[s] = 1;
                for (std::size_t head = 0; head < queue.size(); ++head) {
                    int u = queue[head];
                    for (auto [v, k] : adj[u]) {
                        if (visited[v]) continue;
                        visited[v] = 1;
                        const NodeSet& cut = dec.cutsets[k];
                        NodeSet a, b, c = cut;
                        std::vector<char> in_cut(counts.d() + 1, 0);
                        for (int s : cut) in_cut[s] = 1;
                        for (int s : dec.primes[v])
                            if (!in_cut[s]) a.push_back(s);
                        for (int s = 1; s <= counts.d(); ++s)
                            if (joined_nodes[s] && !in_cut[s]) b.push_back(s);
                        TestResult tr = lr_test_between(counts, a, b, c);
                        json jt;
                        jt["a"] = nodes_json(a);
                        jt["b"] = nodes_json(b);
                        jt["c"] = nodes_json(c);
                        jt["statistic"] = tr.statistic;
                        jt["df"] = tr.df;
                        between.push_back(jt);
                        total_stat += tr.statistic;
                        total_df += tr.df;
                        text += fmt("  between: a=%s b=%s c=%s  chi2 %.3f on %d df\n",
                                    brace_set(a).c_str(), brace_set(b).c_str(),
                                    brace_set(c).c_str(), tr.statistic, tr.df);
                        for (int s : dec.primes[v]) joined_nodes[s] = 1;
                        queue.push_back(v);
                    }
                }

                for (const NodeSet& prime : dec.primes) {
                    if (prime.size() < 3) continue;
                    std::vector<std::pair<int, int>> edges;
                    for (std::size_t i = 0; i < prime.size(); ++i)
                        for (std::size_t j = i + 1; j < prime.size(); ++j)
                            if (model->has_edge(prime[i], prime[j]))
                                edges.emplace_back(prime[i], prime[j]);
                    TestResult tr = lr_test_within(counts, prime, edges);
                    json jt;
                    jt["prime"] = nodes_json(prime);
                    jt["statistic"] = tr.statistic;
                    jt["df"] = tr.df;
                    within.push_back(jt);
                    total_stat += tr.statistic;
                    total_df += tr.df;
                    text += fmt("  within: prime=%s  chi2 %.3f on %d df\n",
                                brace_set(prime).c_str(), tr.statistic, tr.df);
                }

                json j;
                j["between"] = between;
                j["within"] = within;
                j["total"] = json{{"statistic", total_stat}, {"df", total_df}};
                report["tests"] = j;
                text += fmt("  total: chi2 %.3f on %d df\n", total_stat, total_df);
            });
        }

        report["stages"] = stages;
        if (cfg.format == "text") return text;
        return report.dump(2) + "\n";
    });
}

CmdOutcome run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Exact and fitted Ising models with hollow-tree structure"};
    app.require_subcommand(1);

    RunConfig cfg;
    try {
        cfg = load_config_env();
    } catch (const input_error& e) {
        return {2, "", std::string("input error: ") + e.what() + "\n"};
    }

    std::optional<double> opt_tol;
    std::optional<int> opt_iter;
    std::optional<std::string> opt_format;

    std::string graph_path;
    CLI::App* dec = app.add_subcommand("decompose", "Prime decomposition and class of a graph");
    dec->add_option("graph", graph_path, "Graph JSON file")->required();
    dec->add_option("--tol", opt_tol, "IPF convergence tolerance");
    dec->add_option("--max-iter", opt_iter, "IPF sweep cap");
    dec->add_option("--format", opt_format, "Output format: json | text");

    AnalyzeRequest req;
    std::string select_raw;
    std::string fit_target;
    CLI::App* ana = app.add_subcommand("analyze", "Screen, symmetrize, select, fit and test");
    ana->add_option("counts", req.counts_path, "Counts file (.json or .csv)")->required();
    ana->add_flag("--screen", req.screen, "Three-factor linear screen");
    ana->add_flag("--symmetrize", req.symmetrize, "Saturated palindromic fit");
    CLI::Option* sel_opt =
        ana->add_option("--select", select_raw, "Edge selection on |theta| >= threshold")
            ->expected(0, 1);
    CLI::Option* fit_opt =
        ana->add_option("--fit", fit_target, "Fit a graph file, or \"selected\"");
    ana->add_flag("--tests", req.tests, "Between/within prime deviance decomposition");
    ana->add_option("--tol", opt_tol, "IPF convergence tolerance");
    ana->add_option("--max-iter", opt_iter, "IPF sweep cap");
    ana->add_option("--format", opt_format, "Output format: json | text");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        return {0, sub->help(), ""};
    } catch (const CLI::ParseError& e) {
        return {2, "", std::string("input error: ") + e.what() + "\n"};
    }

    if (opt_tol) cfg.ipf_tol = *opt_tol;
    if (opt_iter) cfg.ipf_max_iter = *opt_iter;
    if (opt_format) cfg.format = *opt_format;

    if (dec->parsed()) return cmd_decompose(graph_path, cfg);

    if (sel_opt->count() > 0) {
        // A bare --select leaves no usable value (CLI11 injects its flag
        // default); fall back to the configured threshold then.
        if (!select_raw.empty() && select_raw != "true") {
            try {
                std::size_t used = 0;
                req.select = std::stod(select_raw, &used);
                if (used != select_raw.size()) throw input_error("");
            } catch (const std::exception&) {
                return {2, "", "input error: --select: threshold must be a number\n"};
            }
        } else if (cfg.threshold) {
            req.select = *cfg.threshold;
        } else {
            return {2, "",
                    "input error: --select needs a threshold, inline or via the config file\n"};
        }
    }
    if (fit_opt->count() > 0) req.fit = fit_target;
    return cmd_analyze(req, cfg);
}

}  // namespace hollowtree::cli
