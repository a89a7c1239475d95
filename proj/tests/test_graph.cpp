#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "taggad/graph.hpp"

using namespace taggad;
namespace fs = std::filesystem;

namespace {

fs::path make_temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("taggad_graph_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

Matrix random_features(int n, int d, uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

Graph random_graph(int n, double p, uint64_t seed, int d = 4) {
  Rng rng(seed);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < p) edges.emplace_back(i, j);
  return make_graph(n, edges, random_features(n, d, seed + 1));
}

}  // namespace

TEST(LoadGraph, DeduplicatesReversedEdges) {
  auto dir = make_temp_dir("dedup");
  write_file(dir / "edges.tsv", "0\t1\n1\t0\n");
  write_file(dir / "features.csv", "1.0,2.0\n3.0,4.0\n");
  GraphBuildStats stats;
  Graph g = load_graph(dir, &stats);
  EXPECT_EQ(g.num_nodes, 2);
  EXPECT_EQ(g.num_undirected_edges(), 1);
  EXPECT_EQ(stats.deduplicated, 1);
}

TEST(LoadGraph, EdgelessGraphAccepted) {
  auto dir = make_temp_dir("edgeless");
  write_file(dir / "edges.tsv", "");
  write_file(dir / "features.csv", "1\n2\n3\n");
  Graph g = load_graph(dir);
  EXPECT_EQ(g.num_nodes, 3);
  EXPECT_EQ(g.num_undirected_edges(), 0);
}

TEST(LoadGraph, OutOfRangeIndexRejected) {
  auto dir = make_temp_dir("range");
  write_file(dir / "edges.tsv", "0\t5\n");
  write_file(dir / "features.csv", "1\n2\n3\n");
  EXPECT_THROW(load_graph(dir), ValidationError);
}

TEST(LoadGraph, MalformedLineNamesLineNumber) {
  auto dir = make_temp_dir("malformed");
  write_file(dir / "edges.tsv", "0\t1\nox\t1\n");
  write_file(dir / "features.csv", "1\n2\n");
  try {
    load_graph(dir);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
}

TEST(LoadGraph, LabelCountMismatchRejected) {
  auto dir = make_temp_dir("labelcount");
  write_file(dir / "edges.tsv", "0\t1\n");
  write_file(dir / "features.csv", "1\n2\n3\n");
  write_file(dir / "labels.csv", "0\n1\n");
  EXPECT_THROW(load_graph(dir), ValidationError);
}

TEST(LoadGraph, SelfLoopsDroppedAndCounted) {
  auto dir = make_temp_dir("selfloop");
  write_file(dir / "edges.tsv", "0\t0\n0\t1\n");
  write_file(dir / "features.csv", "1\n2\n");
  GraphBuildStats stats;
  Graph g = load_graph(dir, &stats);
  EXPECT_EQ(stats.dropped_self_loops, 1);
  EXPECT_EQ(g.num_undirected_edges(), 1);
}

TEST(SaveGraph, RoundTripsThroughDirectory) {
  Graph g = random_graph(17, 0.3, 7);
  g.labels.assign(17, 0);
  g.labels[3] = 1;
  auto dir = make_temp_dir("roundtrip");
  save_graph(g, dir);
  Graph h = load_graph(dir);
  EXPECT_EQ(h.num_nodes, g.num_nodes);
  EXPECT_EQ(h.col_idx, g.col_idx);
  EXPECT_EQ(h.row_ptr, g.row_ptr);
  EXPECT_EQ(h.labels, g.labels);
  EXPECT_TRUE(h.features.isApprox(g.features));
}

TEST(SymmetricNormalize, SingleEdgeWithoutSelfLoops) {
  Graph g = make_graph(2, {{0, 1}}, Matrix::Zero(2, 1));
  auto a = symmetric_normalize(g, false);
  Matrix d = a.dense();
  EXPECT_DOUBLE_EQ(d(0, 1), 1.0);  // 1/sqrt(1*1)
  EXPECT_DOUBLE_EQ(d(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(d(0, 0), 0.0);
}

TEST(SymmetricNormalize, SingleNodeWithSelfLoop) {
  Graph g = make_graph(1, {}, Matrix::Zero(1, 1));
  auto a = symmetric_normalize(g, true);
  EXPECT_DOUBLE_EQ(a.dense()(0, 0), 1.0);
}

TEST(SymmetricNormalize, PathGraphDegreesWithSelfLoops) {
  // path 0-1-2 with self-loops: deg(0)=2, deg(1)=3
  Graph g = make_graph(3, {{0, 1}, {1, 2}}, Matrix::Zero(3, 1));
  auto a = symmetric_normalize(g, true);
  EXPECT_NEAR(a.dense()(0, 1), 1.0 / std::sqrt(2.0 * 3.0), 1e-12);
}

TEST(SymmetricNormalize, SymmetricEntriesInUnitInterval) {
  for (uint64_t seed : {1u, 2u, 3u}) {
    Graph g = random_graph(40, 0.15, seed);
    for (bool loops : {false, true}) {
      auto a = symmetric_normalize(g, loops);
      Matrix d = a.dense();
      EXPECT_TRUE(d.isApprox(d.transpose(), 1e-15));
      for (int i = 0; i < d.rows(); ++i)
        for (int j = 0; j < d.cols(); ++j)
          if (d(i, j) != 0.0) {
            EXPECT_GT(d(i, j), 0.0);
            EXPECT_LE(d(i, j), 1.0);
          }
    }
  }
}

TEST(SymmetricNormalize, IsolatedNodeRowIsZero) {
  Graph g = make_graph(3, {{0, 1}}, Matrix::Zero(3, 1));
  auto a = symmetric_normalize(g, false);
  EXPECT_EQ(a.dense().row(2).cwiseAbs().sum(), 0.0);
}

TEST(Spmm, SingleNodeIdentity) {
  Graph g = make_graph(1, {}, Matrix::Zero(1, 1));
  auto a = symmetric_normalize(g, true);
  Matrix x(1, 3);
  x << 1.5, -2.0, 0.25;
  EXPECT_TRUE(spmm(a, x).isApprox(x));
}

TEST(Spmm, IsolatedNodeGivesZeroRow) {
  Graph g = make_graph(3, {{0, 1}}, Matrix::Zero(3, 1));
  auto a = symmetric_normalize(g, false);
  Matrix x = Matrix::Ones(3, 2);
  EXPECT_EQ(spmm(a, x).row(2).cwiseAbs().sum(), 0.0);
}

TEST(Spmm, MatchesDenseProduct) {
  for (uint64_t seed = 0; seed < 6; ++seed) {
    Graph g = random_graph(50, 0.12, 100 + seed);
    auto a = symmetric_normalize(g, seed % 2 == 0);
    Matrix x = random_features(50, 7, 200 + seed);
    Matrix sparse = spmm(a, x);
    Matrix dense = a.dense() * x;
    EXPECT_LT((sparse - dense).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Spmm, ShapeMismatchRejected) {
  Graph g = make_graph(2, {{0, 1}}, Matrix::Zero(2, 1));
  auto a = symmetric_normalize(g, true);
  EXPECT_THROW(spmm(a, Matrix::Zero(3, 2)), ValidationError);
}

TEST(Graph, ValidateCatchesAsymmetry) {
  Graph g = make_graph(3, {{0, 1}}, Matrix::Zero(3, 1));
  g.col_idx[0] = 2;  // break symmetry by hand
  EXPECT_THROW(g.validate(), ValidationError);
}
