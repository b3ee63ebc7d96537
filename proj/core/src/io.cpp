#include "hollowtree/io.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace hollowtree {

namespace {

using nlohmann::json;

json parse_or_throw(const std::string& text, const char* who) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw input_error(std::string(who) + ": " + e.what());
    }
}

int read_dim(const json& j, const char* who) {
    if (!j.is_object() || !j.contains("d") || !j["d"].is_number_integer())
        throw input_error(std::string(who) + ": missing integer field \"d\"");
    return j["d"].get<int>();
}

// Integral counts read back as integers, so emitting them the same way keeps
// emitted files stable under a parse/serialize cycle.
json number(double x) {
    if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9.0e15)
        return json(static_cast<std::int64_t>(x));
    return json(x);
}

json table_json(int d, const std::vector<double>& cells) {
    json j;
    j["d"] = d;
    j["levels"] = "pm1";
    j["order"] = "lex_first_fastest";
    j["cells"] = json::array();
    for (double x : cells) j["cells"].push_back(number(x));
    return j;
}

}  // namespace

Graph parse_graph_json(const std::string& text) {
    json j = parse_or_throw(text, "parse_graph_json");
    int d = read_dim(j, "parse_graph_json");
    if (!j.contains("edges") || !j["edges"].is_array())
        throw input_error("parse_graph_json: missing array field \"edges\"");
    std::vector<std::pair<int, int>> edges;
    for (const json& e : j["edges"]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
            !e[1].is_number_integer())
            throw input_error("parse_graph_json: each edge must be a pair of integers");
        edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return build_graph(d, edges);
}

Graph read_graph_file(const std::string& path) { return parse_graph_json(read_text_file(path)); }

CountTable parse_counts_json(const std::string& text) {
    json j = parse_or_throw(text, "parse_counts_json");
    int d = read_dim(j, "parse_counts_json");
    if (j.contains("levels")) {
        std::string levels = j["levels"].is_string() ? j["levels"].get<std::string>() : "";
        if (levels != "pm1" && levels != "01")
            throw input_error("parse_counts_json: \"levels\" must be \"pm1\" or \"01\"");
    }
    if (j.contains("order")) {
        std::string order = j["order"].is_string() ? j["order"].get<std::string>() : "";
        if (order != "lex_first_fastest")
            throw input_error("parse_counts_json: unsupported cell order \"" + order + "\"");
    }
    if (!j.contains("cells") || !j["cells"].is_array())
        throw input_error("parse_counts_json: missing array field \"cells\"");
    std::vector<double> cells;
    for (const json& c : j["cells"]) {
        if (!c.is_number()) throw input_error("parse_counts_json: cells must be numbers");
        cells.push_back(c.get<double>());
    }
    return CountTable(d, std::move(cells));
}

CountTable parse_counts_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t,") == std::string::npos) continue;
        std::vector<double> row;
        std::istringstream fields(line);
        std::string field;
        bool numeric = true;
        while (std::getline(fields, field, ',')) {
            try {
                std::size_t used = 0;
                double v = std::stod(field, &used);
                while (used < field.size() && std::isspace(static_cast<unsigned char>(field[used])))
                    ++used;
                if (used != field.size()) numeric = false;
                row.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
            }
            if (!numeric) break;
        }
        if (!numeric) {
            if (first) {
                first = false;  // header line
                continue;
            }
            throw input_error("parse_counts_csv: non-numeric field in a data row");
        }
        first = false;
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw input_error("parse_counts_csv: no data rows");

    std::size_t width = rows.front().size();
    if (width < 2) throw input_error("parse_counts_csv: need level columns and a count column");
    int d = static_cast<int>(width - 1);
    if (d > kMaxTableDim) throw input_error("parse_counts_csv: too many level columns");

    std::vector<double> cells(std::size_t{1} << d, 0.0);
    for (const std::vector<double>& row : rows) {
        if (row.size() != width)
            throw input_error("parse_counts_csv: rows have differing column counts");
        std::size_t k = 0;
        for (int s = 1; s <= d; ++s) {
            double lv = row[s - 1];
            if (lv != 1.0 && lv != 0.0 && lv != -1.0)
                throw input_error("parse_counts_csv: levels must be -1, 0 or 1");
            if (lv != 1.0) k |= std::size_t{1} << (s - 1);
        }
        cells[k] += row[width - 1];
    }
    return CountTable(d, std::move(cells));
}

CountTable read_counts_file(const std::string& path) {
    std::string text = read_text_file(path);
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0)
        return parse_counts_json(text);
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
        return parse_counts_csv(text);
    throw input_error("read_counts_file: expected a .json or .csv path: " + path);
}

std::string counts_to_json(const CountTable& t) {
    return table_json(t.d(), t.counts()).dump(2) + "\n";
}

std::string probs_to_json(const ProbTable& p) {
    json j = table_json(p.d(), p.cells());
    return j.dump(2) + "\n";
}

std::string graph_to_json(const Graph& g) {
    json j;
    j["d"] = g.d();
    j["edges"] = json::array();
    for (auto [s, t] : g.edges()) j["edges"].push_back(json::array({s, t}));
    return j.dump(2) + "\n";
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace hollowtree
