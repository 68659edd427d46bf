#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "laplab/graph.hpp"
#include "laplab/model.hpp"

// Line-oriented text formats. Node ids are 0-based everywhere; blank lines
// and anything after '#' are ignored. Malformed input raises ParseError with
// the offending line number.
//
//   graph:    nodes M / edge i j
//   model:    nodes M / cards K1 .. KM / edge i j / clique i,j,... : v1 v2 ...
//   dataset:  N M on the first line, then N rows of M states
//   config:   key = value

namespace laplab {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

/// "4,5,7" -> {4, 5, 7}; whitespace around ids is allowed, order is kept.
std::vector<NodeId> parse_node_list(std::string_view text);

UndirectedGraph read_graph(std::istream& in);
void write_graph(std::ostream& out, const UndirectedGraph& g);

/// Edges not covered by a clique may be listed explicitly; clique free
/// entries are row-major over states >= 1 with the first node most significant.
MrfModel read_model(std::istream& in);
void write_model(std::ostream& out, const MrfModel& m);

Dataset read_dataset(std::istream& in);
void write_dataset(std::ostream& out, const Dataset& d);

/// Keys in file order; repeated keys are an error.
std::vector<std::pair<std::string, std::string>> read_key_values(std::istream& in);

// File wrappers; they throw ParseError naming the path when it cannot be opened.
UndirectedGraph load_graph(const std::filesystem::path& path);
MrfModel load_model(const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);
void save_graph(const std::filesystem::path& path, const UndirectedGraph& g);
void save_model(const std::filesystem::path& path, const MrfModel& m);
void save_dataset(const std::filesystem::path& path, const Dataset& d);

}  // namespace laplab
