#include <gtest/gtest.h>

#include "taggad/low_order.hpp"

using namespace taggad;

namespace {

Matrix random_matrix(int n, int d, uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

Graph random_graph(int n, double p, uint64_t seed, int d = 5) {
  Rng rng(seed);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < p) edges.emplace_back(i, j);
  return make_graph(n, edges, random_matrix(n, d, seed + 1));
}

ParamStore encoder_params(const AffinityEncoder& enc, uint64_t seed) {
  std::vector<ParamShape> shapes;
  enc.register_params(shapes);
  return init_params(shapes, seed);
}

Graph star_graph(int n, int d, uint64_t seed) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i < n; ++i) edges.emplace_back(0, i);
  return make_graph(n, edges, random_matrix(n, d, seed));
}

}  // namespace

TEST(EncodeGcn, IsolatedNodeHasZeroEmbedding) {
  AffinityEncoder enc{4, 6, 3};
  Graph g = make_graph(3, {{0, 1}}, random_matrix(3, 4, 1));
  auto adj = symmetric_normalize(g, false);
  auto params = encoder_params(enc, 2);
  Matrix h = encode_gcn(enc, params, adj, g.features);
  EXPECT_EQ(h.row(2).cwiseAbs().sum(), 0.0);
}

TEST(EncodeGcn, SymmetricPairGetsIdenticalRows) {
  AffinityEncoder enc{3, 5, 2};
  Matrix f(2, 3);
  f.row(0) << 1.0, -0.5, 2.0;
  f.row(1) << 1.0, -0.5, 2.0;
  Graph g = make_graph(2, {{0, 1}}, f);
  auto adj = symmetric_normalize(g, false);
  auto params = encoder_params(enc, 3);
  Matrix h = encode_gcn(enc, params, adj, f);
  EXPECT_TRUE(h.row(0).isApprox(h.row(1), 1e-14));
}

TEST(EncodeGcn, MatchesDenseRecomputation) {
  AffinityEncoder enc{5, 7, 3};
  Graph g = random_graph(30, 0.2, 4);
  auto adj = symmetric_normalize(g, false);
  auto params = encoder_params(enc, 5);
  Matrix h = encode_gcn(enc, params, adj, g.features);
  Matrix dense = (adj.dense() * g.features * params.value("low.W")).cwiseMax(0.0);
  EXPECT_LT((h - dense).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(EncodeGcn, RejectsSelfLoopAdjacency) {
  AffinityEncoder enc{3, 4, 2};
  Graph g = random_graph(6, 0.4, 6, 3);
  auto adj = symmetric_normalize(g, true);
  auto params = encoder_params(enc, 7);
  EXPECT_THROW(encode_gcn(enc, params, adj, g.features), ValidationError);
}

TEST(EncodeMlp, ZeroFeaturesGiveZeroEmbedding) {
  AffinityEncoder enc{4, 6, 3};
  auto params = encoder_params(enc, 8);
  Matrix h = encode_mlp(enc, params, Matrix::Zero(5, 4));
  EXPECT_EQ(h.cwiseAbs().sum(), 0.0);
}

TEST(EncodeMlp, RowwiseMapCommutesWithPermutation) {
  AffinityEncoder enc{4, 6, 3};
  auto params = encoder_params(enc, 9);
  Matrix x = random_matrix(8, 4, 10);
  Matrix h = encode_mlp(enc, params, x);
  Matrix xp(8, 4);
  for (int i = 0; i < 8; ++i) xp.row(i) = x.row(7 - i);
  Matrix hp = encode_mlp(enc, params, xp);
  for (int i = 0; i < 8; ++i) EXPECT_TRUE(hp.row(i).isApprox(h.row(7 - i), 1e-14));
}

TEST(EncodeMlp, DuplicateRowsShareEmbeddings) {
  AffinityEncoder enc{3, 5, 2};
  auto params = encoder_params(enc, 11);
  Matrix x(4, 3);
  x.row(0) << 1, 2, 3;
  x.row(1) << -1, 0, 4;
  x.row(2) << 1, 2, 3;  // same as row 0
  x.row(3) << 5, 5, 5;
  Matrix h = encode_mlp(enc, params, x);
  EXPECT_TRUE(h.row(0).isApprox(h.row(2), 0.0));
}

TEST(AffinityScore, ConnectedIdenticalEmbeddingsScoreTwo) {
  Graph g = make_graph(2, {{0, 1}}, Matrix::Zero(2, 1));
  Matrix h(2, 3);
  h.row(0) << 1.0, 2.0, 0.5;
  h.row(1) << 1.0, 2.0, 0.5;
  auto s = affinity_score(h, h, g);
  EXPECT_NEAR(s.scores.values[0], 2.0, 1e-12);
  EXPECT_NEAR(s.scores.values[1], 2.0, 1e-12);
}

TEST(AffinityScore, OrthogonalEmbeddingsScoreZero) {
  Graph g = make_graph(2, {{0, 1}}, Matrix::Zero(2, 1));
  Matrix hb(2, 2), hh(2, 2);
  hb.row(0) << 1.0, 0.0;
  hb.row(1) << 0.0, 1.0;
  hh = hb;
  auto s = affinity_score(hb, hh, g);
  EXPECT_NEAR(s.scores.values[0], 0.0, 1e-12);
}

TEST(AffinityScore, StarGraphMatchesNeighborLoopOracle) {
  Graph g = star_graph(20, 3, 13);
  Matrix hb = random_matrix(20, 6, 14);
  Matrix hh = random_matrix(20, 6, 15);
  auto s = affinity_score(hb, hh, g);
  for (int i = 0; i < 20; ++i) {
    double acc = 0.0;
    int deg = 0;
    for (int j : g.neighbors(i)) {
      acc += hb.row(i).dot(hb.row(j)) / (hb.row(i).norm() * hb.row(j).norm());
      acc += hh.row(i).dot(hh.row(j)) / (hh.row(i).norm() * hh.row(j).norm());
      ++deg;
    }
    EXPECT_NEAR(s.scores.values[size_t(i)], acc / deg, 1e-10);
  }
}

TEST(AffinityScore, IsolatedNodeGetsGraphMean) {
  Graph g = make_graph(3, {{0, 1}}, Matrix::Zero(3, 1));
  Matrix h(3, 2);
  h.row(0) << 1.0, 0.0;
  h.row(1) << 1.0, 0.0;
  h.row(2) << 0.0, 1.0;
  auto s = affinity_score(h, h, g);
  EXPECT_EQ(s.isolated_nodes, 1);
  EXPECT_NEAR(s.scores.values[2], 2.0, 1e-12);  // mean of the two defined scores
}

TEST(AffinityScore, InvariantToPositiveRowRescaling) {
  Graph g = random_graph(15, 0.3, 16, 3);
  Matrix hb = random_matrix(15, 4, 17);
  Matrix hh = random_matrix(15, 4, 18);
  auto base = affinity_score(hb, hh, g);
  Rng rng(19);
  Matrix hb2 = hb, hh2 = hh;
  for (int i = 0; i < 15; ++i) {
    hb2.row(i) *= 0.1 + 5.0 * rng.uniform();
    hh2.row(i) *= 0.1 + 5.0 * rng.uniform();
  }
  auto scaled = affinity_score(hb2, hh2, g);
  for (int i = 0; i < 15; ++i)
    EXPECT_NEAR(scaled.scores.values[size_t(i)], base.scores.values[size_t(i)],
                1e-10);
}

TEST(AffinityScore, RespectsIsomorphism) {
  Graph g = random_graph(12, 0.3, 20, 3);
  Matrix hb = random_matrix(12, 4, 21);
  Matrix hh = random_matrix(12, 4, 22);
  auto base = affinity_score(hb, hh, g);

  // relabel nodes by reversal
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < 12; ++i)
    for (int j : g.neighbors(i))
      if (i < j) edges.emplace_back(11 - i, 11 - j);
  Matrix fp(12, 3), hbp(12, 4), hhp(12, 4);
  for (int i = 0; i < 12; ++i) {
    fp.row(11 - i) = g.features.row(i);
    hbp.row(11 - i) = hb.row(i);
    hhp.row(11 - i) = hh.row(i);
  }
  Graph gp = make_graph(12, edges, fp);
  auto perm = affinity_score(hbp, hhp, gp);
  for (int i = 0; i < 12; ++i)
    EXPECT_NEAR(perm.scores.values[size_t(11 - i)], base.scores.values[size_t(i)],
                1e-12);
}

TEST(AffinityScore, TwoCliquesWithClusterConstantEmbeddingsMaxOut) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) edges.emplace_back(i, j);
  for (int i = 4; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j) edges.emplace_back(i, j);
  Graph g = make_graph(8, edges, Matrix::Zero(8, 1));
  Matrix h(8, 2);
  for (int i = 0; i < 4; ++i) h.row(i) << 1.0, 0.0;
  for (int i = 4; i < 8; ++i) h.row(i) << 0.0, 1.0;
  auto s = affinity_score(h, h, g);
  for (double v : s.scores.values) EXPECT_NEAR(v, 2.0, 1e-12);
}

TEST(AffinityLoss, MaximalAffinityGivesMinusTwoN) {
  // complete graph, identical positive features, all-positive weights:
  // every cosine is 1 in both branches
  const int n = 5;
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  Matrix f = Matrix::Constant(n, 3, 1.0);
  Graph g = make_graph(n, edges, f);
  auto adj = symmetric_normalize(g, false);
  AffinityEncoder enc{3, 4, 2};
  auto params = encoder_params(enc, 23);
  params.value("low.W").setConstant(0.5);
  params.value("low.W1").setConstant(0.5);
  params.value("low.W2").setConstant(0.5);
  auto eval = affinity_loss_backward(enc, params, adj, f, g, false);
  EXPECT_NEAR(eval.value, -2.0 * n, 1e-9);
}

TEST(AffinityLoss, EdgelessGraphHasZeroGradients) {
  AffinityEncoder enc{3, 4, 2};
  Graph g = make_graph(4, {}, random_matrix(4, 3, 24));
  auto adj = symmetric_normalize(g, false);
  auto params = encoder_params(enc, 25);
  params.zero_grads();
  auto eval = affinity_loss_backward(enc, params, adj, g.features, g, true);
  EXPECT_DOUBLE_EQ(eval.value, 0.0);
  EXPECT_EQ(params.grad("low.W").cwiseAbs().sum(), 0.0);
  EXPECT_EQ(params.grad("low.W1").cwiseAbs().sum(), 0.0);
  EXPECT_EQ(params.grad("low.W2").cwiseAbs().sum(), 0.0);
}

TEST(AffinityLoss, GradientMatchesFiniteDifferences) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    AffinityEncoder enc{5, 6, 3};
    Graph g = random_graph(20, 0.25, 600 + seed);
    auto adj = symmetric_normalize(g, false);
    auto params = encoder_params(enc, 700 + seed);
    LossFn fn = [&](ParamStore& p, bool want_grad) {
      return affinity_loss_backward(enc, p, adj, g.features, g, want_grad);
    };
    auto report = backward_check(fn, params, 1e-3, 40, 800 + seed);
    EXPECT_TRUE(report.passed)
        << "seed " << seed << ": max rel err " << report.max_rel_error << " at "
        << report.worst_coord << " (checked " << report.checked << ")";
  }
}

TEST(AffinityLoss, IsolatedNodesRideOnDefinedGradient) {
  // graph mean assignment scales the defined-node gradient uniformly; the
  // finite-difference check must still pass with isolated nodes present
  AffinityEncoder enc{4, 5, 2};
  Rng rng(26);
  std::vector<std::pair<int, int>> edges{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  Graph g = make_graph(7, edges, random_matrix(7, 4, 27));  // nodes 4-6 isolated
  auto adj = symmetric_normalize(g, false);
  auto params = encoder_params(enc, 28);
  LossFn fn = [&](ParamStore& p, bool want_grad) {
    return affinity_loss_backward(enc, p, adj, g.features, g, want_grad);
  };
  auto report = backward_check(fn, params, 1e-3, 40, 29);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
}
