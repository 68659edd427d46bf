#include "laplab/io.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>

#include "laplab/error.hpp"

namespace laplab {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t k = 0;
  while (k < s.size()) {
    while (k < s.size() && (s[k] == ' ' || s[k] == '\t' || s[k] == '\r')) ++k;
    const std::size_t b = k;
    while (k < s.size() && s[k] != ' ' && s[k] != '\t' && s[k] != '\r') ++k;
    if (k > b) out.push_back(s.substr(b, k - b));
  }
  return out;
}

// Line reader that strips comments and tracks the line number.
class Lines {
 public:
  explicit Lines(std::istream& in) : in_(in) {}
  bool next(std::string_view& content) {
    while (std::getline(in_, buf_)) {
      ++number_;
      std::string_view v(buf_);
      if (const auto h = v.find('#'); h != std::string_view::npos) v = v.substr(0, h);
      v = trim(v);
      if (!v.empty()) {
        content = v;
        return true;
      }
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("line " + std::to_string(number_) + ": " + what);
  }

 private:
  std::istream& in_;
  std::string buf_;
  std::size_t number_ = 0;
};

template <class T>
bool parse_integer(std::string_view text, T& out) {
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, out);
  return r.ec == std::errc() && r.ptr == end;
}

template <class T>
T integer_or_fail(const Lines& lines, std::string_view text) {
  T v{};
  if (!parse_integer(text, v)) lines.fail("expected an integer, got '" + std::string(text) + "'");
  return v;
}

std::size_t node_count(const Lines& lines, const std::vector<std::string_view>& tok) {
  if (tok.size() != 2) lines.fail("expected 'nodes M'");
  return integer_or_fail<std::size_t>(lines, tok[1]);
}

UndirectedGraph::Edge edge_of(const Lines& lines, const std::vector<std::string_view>& tok) {
  if (tok.size() != 3) lines.fail("expected 'edge i j'");
  return {integer_or_fail<NodeId>(lines, tok[1]), integer_or_fail<NodeId>(lines, tok[2])};
}

template <class T>
T open_and_read(const std::filesystem::path& path, T (*reader)(std::istream&)) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return reader(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

template <class T>
void open_and_write(const std::filesystem::path& path, const T& value, void (*writer)(std::ostream&, const T&)) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  writer(out, value);
  if (!out) throw ParseError("write failed for " + path.string());
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view text) {
  text = trim(text);
  double v = 0;
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw ParseError("expected a number, got '" + std::string(text) + "'");
  return v;
}

std::vector<NodeId> parse_node_list(std::string_view text) {
  std::vector<NodeId> out;
  if (trim(text).empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    const auto item = trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
    NodeId v{};
    if (!parse_integer(item, v) || v < 0) throw ParseError("bad node id '" + std::string(item) + "'");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

UndirectedGraph read_graph(std::istream& in) {
  Lines lines(in);
  std::string_view line;
  std::optional<std::size_t> nodes;
  std::vector<UndirectedGraph::Edge> edges;
  while (lines.next(line)) {
    const auto tok = split_ws(line);
    if (tok[0] == "nodes") {
      if (nodes) lines.fail("repeated 'nodes' line");
      nodes = node_count(lines, tok);
    } else if (tok[0] == "edge") {
      if (!nodes) lines.fail("'edge' before 'nodes'");
      const auto e = edge_of(lines, tok);
      if (e.first == e.second || e.first < 0 || e.second < 0 || static_cast<std::size_t>(e.first) >= *nodes ||
          static_cast<std::size_t>(e.second) >= *nodes) {
        lines.fail("invalid edge");
      }
      edges.push_back(e);
    } else {
      lines.fail("unknown directive '" + std::string(tok[0]) + "'");
    }
  }
  if (!nodes) throw ParseError("missing 'nodes' line");
  return UndirectedGraph(*nodes, edges);
}

void write_graph(std::ostream& out, const UndirectedGraph& g) {
  out << "nodes " << g.num_nodes() << '\n';
  for (const auto& [a, b] : g.edges()) out << "edge " << a << ' ' << b << '\n';
}

MrfModel read_model(std::istream& in) {
  Lines lines(in);
  std::string_view line;
  std::optional<std::size_t> nodes;
  Cardinalities cards;
  std::vector<UndirectedGraph::Edge> edges;
  std::vector<Clique> cliques;
  std::vector<std::vector<double>> values;
  while (lines.next(line)) {
    const auto tok = split_ws(line);
    if (tok[0] == "nodes") {
      if (nodes) lines.fail("repeated 'nodes' line");
      nodes = node_count(lines, tok);
    } else if (tok[0] == "cards") {
      if (!cards.empty()) lines.fail("repeated 'cards' line");
      for (std::size_t k = 1; k < tok.size(); ++k) cards.push_back(integer_or_fail<int>(lines, tok[k]));
    } else if (tok[0] == "edge") {
      edges.push_back(edge_of(lines, tok));
    } else if (tok[0] == "clique") {
      const auto rest = trim(line.substr(tok[0].size()));
      const auto colon = rest.find(':');
      if (colon == std::string_view::npos) lines.fail("expected 'clique i,j,... : v1 v2 ...'");
      try {
        cliques.emplace_back(parse_node_list(rest.substr(0, colon)));
      } catch (const std::exception& e) {
        lines.fail(e.what());
      }
      std::vector<double> v;
      for (auto t : split_ws(rest.substr(colon + 1))) {
        try {
          v.push_back(parse_double(t));
        } catch (const ParseError& e) {
          lines.fail(e.what());
        }
      }
      values.push_back(std::move(v));
    } else {
      lines.fail("unknown directive '" + std::string(tok[0]) + "'");
    }
  }
  if (!nodes) throw ParseError("missing 'nodes' line");
  if (cards.empty()) cards.assign(*nodes, 2);
  if (cards.size() != *nodes) throw ParseError("'cards' must list one value per node");
  std::vector<double> params;
  try {
    const auto s = ModelStructure::from_cliques(*nodes, CliqueSystem(cliques), cards, edges);
    for (std::size_t c = 0; c < cliques.size(); ++c) {
      if (values[c].size() != s.layout().dim(c)) {
        throw ParseError("clique " + cliques[c].label(',') + " needs " + std::to_string(s.layout().dim(c)) +
                         " values, got " + std::to_string(values[c].size()));
      }
      params.insert(params.end(), values[c].begin(), values[c].end());
    }
    return MrfModel(s, std::move(params));
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid model: ") + e.what());
  }
}

void write_model(std::ostream& out, const MrfModel& m) {
  const auto& s = m.structure();
  out << "nodes " << s.num_nodes() << "\ncards";
  for (int k : s.cards()) out << ' ' << k;
  out << '\n';
  for (const auto& [a, b] : s.graph().edges()) out << "edge " << a << ' ' << b << '\n';
  const auto& layout = s.layout();
  for (std::size_t c = 0; c < layout.num_cliques(); ++c) {
    out << "clique " << layout.clique(c).label(',') << " :";
    for (std::size_t k = 0; k < layout.dim(c); ++k) out << ' ' << format_double(m.parameters()[layout.offset(c) + k]);
    out << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  Lines lines(in);
  std::string_view line;
  if (!lines.next(line)) throw ParseError("empty dataset file");
  const auto head = split_ws(line);
  if (head.size() != 2) lines.fail("expected header 'N M'");
  const auto n = integer_or_fail<std::size_t>(lines, head[0]);
  const auto m = integer_or_fail<std::size_t>(lines, head[1]);
  std::vector<int> values;
  values.reserve(n * m);
  std::size_t rows = 0;
  while (lines.next(line)) {
    const auto tok = split_ws(line);
    if (tok.size() != m) lines.fail("expected " + std::to_string(m) + " states");
    for (auto t : tok) {
      const int v = integer_or_fail<int>(lines, t);
      if (v < 0) lines.fail("negative state");
      values.push_back(v);
    }
    ++rows;
  }
  if (rows != n) throw ParseError("header announces " + std::to_string(n) + " rows, found " + std::to_string(rows));
  return Dataset(m, std::move(values));
}

void write_dataset(std::ostream& out, const Dataset& d) {
  out << d.num_samples() << ' ' << d.num_vars() << '\n';
  std::string row;
  for (std::size_t n = 0; n < d.num_samples(); ++n) {
    row.clear();
    for (int v : d.row(n)) {
      if (!row.empty()) row += ' ';
      row += std::to_string(v);
    }
    out << row << '\n';
  }
}

std::vector<std::pair<std::string, std::string>> read_key_values(std::istream& in) {
  Lines lines(in);
  std::string_view line;
  std::vector<std::pair<std::string, std::string>> out;
  while (lines.next(line)) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) lines.fail("expected 'key = value'");
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) lines.fail("empty key");
    for (const auto& kv : out) {
      if (kv.first == key) lines.fail("repeated key '" + key + "'");
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

UndirectedGraph load_graph(const std::filesystem::path& path) { return open_and_read(path, &read_graph); }
MrfModel load_model(const std::filesystem::path& path) { return open_and_read(path, &read_model); }
Dataset load_dataset(const std::filesystem::path& path) { return open_and_read(path, &read_dataset); }
void save_graph(const std::filesystem::path& path, const UndirectedGraph& g) { open_and_write(path, g, &write_graph); }
void save_model(const std::filesystem::path& path, const MrfModel& m) { open_and_write(path, m, &write_model); }
void save_dataset(const std::filesystem::path& path, const Dataset& d) { open_and_write(path, d, &write_dataset); }

}  // namespace laplab
