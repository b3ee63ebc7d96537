#pragma once

#include <string>

#include "hollowtree/bintab.hpp"
#include "hollowtree/graph.hpp"

// File formats.
//
// Graph JSON:  {"d": int, "edges": [[i, j], ...]} with 1-based nodes.
// Table JSON:  {"d": int, "levels": "pm1" | "01", "order":
//              "lex_first_fastest", "cells": [ ... 2^d numbers ... ]}.
// Table CSV:   one level column per variable (0/1 or -1/+1; 0 reads as -1)
//              followed by a count column; an optional non-numeric header
//              line is skipped; missing cells are zero.
//
// Parse failures throw input_error.

namespace hollowtree {

Graph parse_graph_json(const std::string& text);
Graph read_graph_file(const std::string& path);

CountTable parse_counts_json(const std::string& text);
CountTable parse_counts_csv(const std::string& text);
// Dispatches on extension: .json or .csv.
CountTable read_counts_file(const std::string& path);

std::string counts_to_json(const CountTable& t);
std::string probs_to_json(const ProbTable& p);
std::string graph_to_json(const Graph& g);

std::string read_text_file(const std::string& path);

}  // namespace hollowtree
