#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <span>
#include <utility>

#include "taggad/common.hpp"

namespace taggad {

// Sparse undirected attributed graph. Adjacency is CSR over both edge
// directions, column indices strictly increasing per row, no stored
// self-loops. `features` has one row per node; `labels` is empty or has one
// 0/1 entry per node (1 = anomaly).
struct Graph {
  std::string name;
  int num_nodes = 0;
  std::vector<int> row_ptr;  // size num_nodes + 1
  std::vector<int> col_idx;  // both directions of every undirected edge
  Matrix features;           // num_nodes x d
  std::vector<int> labels;   // empty, or size num_nodes

  bool has_labels() const { return !labels.empty(); }
  int degree(int i) const { return row_ptr[size_t(i) + 1] - row_ptr[size_t(i)]; }
  std::span<const int> neighbors(int i) const {
    return {col_idx.data() + row_ptr[size_t(i)], size_t(degree(i))};
  }
  int64_t num_undirected_edges() const { return int64_t(col_idx.size()) / 2; }

  int num_anomalies() const {
    return int(std::count(labels.begin(), labels.end(), 1));
  }

  void validate() const {
    require(num_nodes >= 0, "graph: negative node count");
    require(int(row_ptr.size()) == num_nodes + 1, "graph: bad row_ptr size");
    require(features.rows() == num_nodes,
            "graph: feature row count does not match node count");
    require(all_finite(features), "graph: non-finite feature entry");
    if (!labels.empty())
      require(int(labels.size()) == num_nodes,
              "graph: label count does not match node count");
    for (int l : labels) require(l == 0 || l == 1, "graph: label not in {0,1}");
    for (int i = 0; i < num_nodes; ++i) {
      auto nb = neighbors(i);
      for (size_t k = 0; k < nb.size(); ++k) {
        require(nb[k] >= 0 && nb[k] < num_nodes, "graph: column index out of range");
        require(nb[k] != i, "graph: stored self-loop");
        if (k > 0) require(nb[k] > nb[k - 1], "graph: columns not strictly increasing");
      }
    }
    // symmetry
    for (int i = 0; i < num_nodes; ++i) {
      for (int j : neighbors(i)) {
        auto nb = neighbors(j);
        require(std::binary_search(nb.begin(), nb.end(), i),
                "graph: adjacency not symmetric");
      }
    }
  }
};

// Builds a validated Graph from an undirected edge list. Reversed duplicates
// and repeated edges collapse to one edge; self-loops are dropped and counted.
struct GraphBuildStats {
  int64_t dropped_self_loops = 0;
  int64_t deduplicated = 0;
};

inline Graph make_graph(int num_nodes,
                        const std::vector<std::pair<int, int>>& edges,
                        Matrix features, std::vector<int> labels = {},
                        std::string name = "", GraphBuildStats* stats = nullptr) {
  require(features.rows() == num_nodes,
          "make_graph: feature rows (" + std::to_string(features.rows()) +
              ") != num_nodes (" + std::to_string(num_nodes) + ")");
  GraphBuildStats local;
  std::set<std::pair<int, int>> canon;
  for (auto [a, b] : edges) {
    require(a >= 0 && a < num_nodes && b >= 0 && b < num_nodes,
            "make_graph: edge (" + std::to_string(a) + "," + std::to_string(b) +
                ") references a node outside [0," + std::to_string(num_nodes) + ")");
    if (a == b) {
      ++local.dropped_self_loops;
      continue;
    }
    auto e = std::minmax(a, b);
    if (!canon.insert(e).second) ++local.deduplicated;
  }
  Graph g;
  g.name = std::move(name);
  g.num_nodes = num_nodes;
  g.features = std::move(features);
  g.labels = std::move(labels);
  std::vector<std::vector<int>> adj(static_cast<size_t>(num_nodes));
  for (auto [a, b] : canon) {
    adj[size_t(a)].push_back(b);
    adj[size_t(b)].push_back(a);
  }
  g.row_ptr.assign(size_t(num_nodes) + 1, 0);
  for (int i = 0; i < num_nodes; ++i) {
    std::sort(adj[size_t(i)].begin(), adj[size_t(i)].end());
    g.row_ptr[size_t(i) + 1] = g.row_ptr[size_t(i)] + int(adj[size_t(i)].size());
  }
  g.col_idx.reserve(size_t(g.row_ptr.back()));
  for (auto& row : adj) g.col_idx.insert(g.col_idx.end(), row.begin(), row.end());
  if (stats) *stats = local;
  g.validate();
  return g;
}

namespace detail {

inline double parse_double(std::string_view tok, const std::string& file, int line) {
  double v = 0.0;
  const char* b = tok.data();
  const char* e = tok.data() + tok.size();
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e)
    throw ParseError(file + ":" + std::to_string(line) + ": bad number '" +
                     std::string(tok) + "'");
  return v;
}

inline long parse_int(std::string_view tok, const std::string& file, int line) {
  long v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw ParseError(file + ":" + std::to_string(line) + ": bad integer '" +
                     std::string(tok) + "'");
  return v;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

// Loads a graph from a directory holding edges.tsv, features.csv and an
// optional labels.csv. Node count comes from the feature file; edges are
// validated against it.
inline Graph load_graph(const std::filesystem::path& dir,
                        GraphBuildStats* stats = nullptr) {
  namespace fs = std::filesystem;
  const fs::path feat_path = dir / "features.csv";
  const fs::path edge_path = dir / "edges.tsv";
  const fs::path label_path = dir / "labels.csv";
  if (!fs::exists(feat_path))
    throw ValidationError("load_graph: missing " + feat_path.string());
  if (!fs::exists(edge_path))
    throw ValidationError("load_graph: missing " + edge_path.string());

  std::vector<std::vector<double>> rows;
  {
    std::ifstream in(feat_path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto sv = detail::trim(line);
      if (sv.empty()) continue;
      std::vector<double> row;
      size_t start = 0;
      while (true) {
        size_t comma = sv.find(',', start);
        auto tok = detail::trim(sv.substr(start, comma == std::string_view::npos
                                                     ? std::string_view::npos
                                                     : comma - start));
        row.push_back(detail::parse_double(tok, feat_path.string(), lineno));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      if (!rows.empty() && row.size() != rows.front().size())
        throw ValidationError(feat_path.string() + ":" + std::to_string(lineno) +
                              ": row has " + std::to_string(row.size()) +
                              " columns, expected " +
                              std::to_string(rows.front().size()));
      rows.push_back(std::move(row));
    }
  }
  int n = int(rows.size());
  int d = rows.empty() ? 0 : int(rows.front().size());
  Matrix features(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) features(i, j) = rows[size_t(i)][size_t(j)];

  std::vector<std::pair<int, int>> edges;
  {
    std::ifstream in(edge_path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto sv = detail::trim(line);
      if (sv.empty()) continue;
      size_t sep = sv.find_first_of("\t ");
      if (sep == std::string_view::npos)
        throw ParseError(edge_path.string() + ":" + std::to_string(lineno) +
                         ": expected two node indices");
      auto a_tok = detail::trim(sv.substr(0, sep));
      auto b_tok = detail::trim(sv.substr(sep + 1));
      long a = detail::parse_int(a_tok, edge_path.string(), lineno);
      long b = detail::parse_int(b_tok, edge_path.string(), lineno);
      if (a < 0 || a >= n || b < 0 || b >= n)
        throw ValidationError(edge_path.string() + ":" + std::to_string(lineno) +
                              ": node index out of range for " +
                              std::to_string(n) + " nodes");
      edges.emplace_back(int(a), int(b));
    }
  }

  std::vector<int> labels;
  if (fs::exists(label_path)) {
    std::ifstream in(label_path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto sv = detail::trim(line);
      if (sv.empty()) continue;
      long v = detail::parse_int(sv, label_path.string(), lineno);
      if (v != 0 && v != 1)
        throw ValidationError(label_path.string() + ":" + std::to_string(lineno) +
                              ": label must be 0 or 1");
      labels.push_back(int(v));
    }
    if (int(labels.size()) != n)
      throw ValidationError(label_path.string() + ": has " +
                            std::to_string(labels.size()) + " labels for " +
                            std::to_string(n) + " feature rows");
  }

  return make_graph(n, edges, std::move(features), std::move(labels),
                    dir.filename().string(), stats);
}

// Writes the directory format back out. Each undirected edge appears once,
// smaller index first, rows sorted; floats use shortest round-trip form so
// identical graphs produce identical bytes.
inline void save_graph(const Graph& g, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "edges.tsv");
    for (int i = 0; i < g.num_nodes; ++i)
      for (int j : g.neighbors(i))
        if (i < j) out << i << '\t' << j << '\n';
  }
  {
    std::ofstream out(dir / "features.csv");
    for (int i = 0; i < g.num_nodes; ++i) {
      for (int j = 0; j < g.features.cols(); ++j) {
        if (j) out << ',';
        out << detail::format_double(g.features(i, j));
      }
      out << '\n';
    }
  }
  if (g.has_labels()) {
    std::ofstream out(dir / "labels.csv");
    for (int l : g.labels) out << l << '\n';
  }
}

// D^{-1/2} M D^{-1/2} in CSR form, where M is the adjacency with or without
// added self-loops and D is the degree matrix of M. Rows of isolated nodes
// are all-zero (only possible without self-loops).
struct NormalizedAdjacency {
  int n = 0;
  bool with_self_loops = false;
  std::vector<int> row_ptr;
  std::vector<int> col_idx;
  std::vector<double> values;

  // sparse-dense product, exact
  Matrix apply(const Matrix& x) const {
    require(int(x.rows()) == n, "spmm: adjacency is " + std::to_string(n) +
                                    "x" + std::to_string(n) + " but dense input has " +
                                    std::to_string(x.rows()) + " rows");
    Matrix out = Matrix::Zero(x.rows(), x.cols());
    for (int i = 0; i < n; ++i)
      for (int k = row_ptr[size_t(i)]; k < row_ptr[size_t(i) + 1]; ++k)
        out.row(i) += values[size_t(k)] * x.row(col_idx[size_t(k)]);
    return out;
  }

  Matrix dense() const {
    Matrix m = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = row_ptr[size_t(i)]; k < row_ptr[size_t(i) + 1]; ++k)
        m(i, col_idx[size_t(k)]) = values[size_t(k)];
    return m;
  }
};

inline Matrix spmm(const NormalizedAdjacency& a, const Matrix& x) {
  return a.apply(x);
}

inline NormalizedAdjacency symmetric_normalize(const Graph& g, bool add_self_loops) {
  NormalizedAdjacency out;
  out.n = g.num_nodes;
  out.with_self_loops = add_self_loops;
  std::vector<double> inv_sqrt_deg(size_t(g.num_nodes), 0.0);
  for (int i = 0; i < g.num_nodes; ++i) {
    int deg = g.degree(i) + (add_self_loops ? 1 : 0);
    if (deg > 0) inv_sqrt_deg[size_t(i)] = 1.0 / std::sqrt(double(deg));
  }
  out.row_ptr.assign(size_t(g.num_nodes) + 1, 0);
  for (int i = 0; i < g.num_nodes; ++i)
    out.row_ptr[size_t(i) + 1] =
        out.row_ptr[size_t(i)] + g.degree(i) + (add_self_loops ? 1 : 0);
  out.col_idx.reserve(size_t(out.row_ptr.back()));
  out.values.reserve(size_t(out.row_ptr.back()));
  for (int i = 0; i < g.num_nodes; ++i) {
    auto nb = g.neighbors(i);
    size_t k = 0;
    bool self_emitted = !add_self_loops;
    // merge the self-loop into the sorted column stream
    while (k < nb.size() || !self_emitted) {
      if (!self_emitted && (k >= nb.size() || i < nb[k])) {
        out.col_idx.push_back(i);
        out.values.push_back(inv_sqrt_deg[size_t(i)] * inv_sqrt_deg[size_t(i)]);
        self_emitted = true;
      } else {
        int j = nb[k++];
        out.col_idx.push_back(j);
        out.values.push_back(inv_sqrt_deg[size_t(i)] * inv_sqrt_deg[size_t(j)]);
      }
    }
  }
  return out;
}

}  // namespace taggad
