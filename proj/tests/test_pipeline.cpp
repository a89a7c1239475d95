#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "taggad/eval.hpp"
#include "taggad/pipeline.hpp"
#include "taggad/synthetic.hpp"

using namespace taggad;
namespace fs = std::filesystem;

namespace {

Graph small_source(uint64_t seed, int n = 120, int dim = 10) {
  SyntheticDomainSpec spec;
  spec.num_nodes = n;
  spec.num_blocks = 3;
  spec.intra_block_edge_prob = 0.15;
  spec.inter_block_edge_prob = 0.02;
  spec.feature_dim = dim;
  spec.anomaly_ratio = 0.08;
  spec.seed = seed;
  Graph g = generate_synthetic_domain(spec);
  g.name = "src" + std::to_string(seed);
  return g;
}

TrainConfig fast_config(uint64_t seed, int epochs = 40) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.num_hops = 3;
  cfg.hidden_dim = 12;
  cfg.latent_dim = 8;
  cfg.bottleneck_dim = 6;
  cfg.n_k = 64;
  cfg.seed = seed;
  return cfg;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST(Train, ZeroEpochsKeepInitializationAndPopulatePools) {
  auto cfg = fast_config(5, 0);
  auto result = train({small_source(1)}, cfg);
  const auto& art = result.artifact;

  std::vector<ParamShape> shapes;
  art.high.register_params(shapes);
  art.low.register_params(shapes);
  auto reference = init_params(shapes, cfg.seed);
  for (const auto& name : reference.names)
    EXPECT_TRUE(art.params.value(name).isApprox(reference.value(name), 0.0));
  EXPECT_FALSE(art.source_node_scores.empty());
  EXPECT_FALSE(art.source_struct_scores.empty());
}

TEST(Train, JointLossDropsOnEverySourceGraph) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    auto sources = std::vector<Graph>{small_source(10 + seed, 100, 8),
                                      small_source(20 + seed, 110, 14)};
    auto result = train(sources, fast_config(seed, 200));
    ASSERT_EQ(result.per_graph.size(), 200u);
    for (size_t g = 0; g < sources.size(); ++g) {
      double first = result.per_graph.front()[g].total;
      double last = result.per_graph.back()[g].total;
      EXPECT_LT(last, first) << "seed " << seed << " graph " << g;
    }
  }
}

TEST(Train, LossDecomposesExactly) {
  auto result = train({small_source(2)}, fast_config(3, 10));
  for (const auto& epoch : result.history)
    EXPECT_NEAR(epoch.total, epoch.high + epoch.low, 1e-12);
}

TEST(Train, MissingClassRejected) {
  Graph g = small_source(3);
  std::fill(g.labels.begin(), g.labels.end(), 0);
  EXPECT_THROW(train({g}, fast_config(1, 5)), ValidationError);
}

TEST(Train, ScorePoolsAreReproducible) {
  auto a = train({small_source(4)}, fast_config(9, 15));
  auto b = train({small_source(4)}, fast_config(9, 15));
  EXPECT_EQ(a.artifact.source_node_scores, b.artifact.source_node_scores);
  EXPECT_EQ(a.artifact.source_struct_scores, b.artifact.source_struct_scores);
}

TEST(Train, PoolCapEnforcedBySeededSubsample) {
  auto cfg = fast_config(11, 5);
  cfg.score_pool_cap = 50;
  auto result = train({small_source(6, 150, 8)}, cfg);
  EXPECT_EQ(result.artifact.source_node_scores.size(), 50u);
  EXPECT_EQ(result.artifact.source_struct_scores.size(), 50u);
}

TEST(Infer, SelfInferenceHasLowDisassortativity) {
  Graph src = small_source(7, 150, 10);
  auto cfg = fast_config(4, 60);
  cfg.n_k = 160;  // >= N so the residual sample set is exact on both sides
  auto result = train({src}, cfg);
  InferConfig icfg;
  icfg.n_k = 160;
  icfg.seed = 123;  // sampling seed must not matter with a full sample
  auto inf = infer(result.artifact, src, icfg);
  EXPECT_LE(inf.report.nd, 0.05) << "nd " << inf.report.nd;
  EXPECT_LE(inf.report.sd, 0.05) << "sd " << inf.report.sd;
}

TEST(Infer, DeterministicGivenSeed) {
  auto result = train({small_source(8)}, fast_config(5, 20));
  Graph target = small_source(99, 90, 12);
  InferConfig icfg;
  icfg.n_k = 32;
  icfg.seed = 7;
  auto a = infer(result.artifact, target, icfg);
  auto b = infer(result.artifact, target, icfg);
  EXPECT_EQ(a.final_scores.values, b.final_scores.values);
  EXPECT_EQ(a.report.nd, b.report.nd);
  EXPECT_EQ(a.pseudo.voted, b.pseudo.voted);
}

TEST(Infer, BeatsChanceOnShiftedSyntheticTarget) {
  auto result = train({small_source(12, 160, 10), small_source(13, 150, 14)},
                      fast_config(6, 120));
  SyntheticDomainSpec tspec;
  tspec.num_nodes = 200;
  tspec.num_blocks = 4;
  tspec.intra_block_edge_prob = 0.12;
  tspec.inter_block_edge_prob = 0.015;
  tspec.feature_dim = 12;
  tspec.feature_domain_shift = {1.8, 0.5};
  tspec.anomaly_ratio = 0.06;
  double mean_auroc = 0.0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    tspec.seed = 40 + seed;
    Graph target = generate_synthetic_domain(tspec);
    InferConfig icfg;
    icfg.n_k = 64;
    icfg.seed = seed;
    auto inf = infer(result.artifact, target, icfg);
    mean_auroc += auroc(inf.final_scores.values, target.labels);
  }
  mean_auroc /= 5.0;
  EXPECT_GT(mean_auroc, 0.5) << mean_auroc;
}

TEST(Infer, NeverReadsTargetLabels) {
  auto result = train({small_source(14)}, fast_config(7, 20));
  Graph target = small_source(50, 80, 9);
  Graph stripped = target;
  stripped.labels.clear();
  InferConfig icfg;
  icfg.seed = 3;
  auto with_labels = infer(result.artifact, target, icfg);
  auto without = infer(result.artifact, stripped, icfg);
  EXPECT_EQ(with_labels.final_scores.values, without.final_scores.values);
  EXPECT_EQ(with_labels.report.nd, without.report.nd);
}

TEST(Infer, TinyTargetRejected) {
  auto result = train({small_source(15)}, fast_config(8, 5));
  Graph tiny = make_graph(2, {{0, 1}}, Matrix::Ones(2, 3));
  EXPECT_THROW(infer(result.artifact, tiny, {}), ValidationError);
}

TEST(Infer, VotingChannelsAreTheThreeSpecifiedScores) {
  auto result = train({small_source(16)}, fast_config(9, 20));
  Graph target = small_source(60, 70, 9);
  InferConfig icfg;
  icfg.anomaly_ratio = 0.1;
  auto inf = infer(result.artifact, target, icfg);
  ASSERT_EQ(inf.pseudo.channel_labels.size(), 3u);
  EXPECT_EQ(inf.pseudo.channel_labels[0],
            pseudo_labels_top_m(inf.channels.rs_norm, icfg.anomaly_ratio));
  EXPECT_EQ(inf.pseudo.channel_labels[1],
            pseudo_labels_top_m(inf.channels.struct_channel, icfg.anomaly_ratio));
  EXPECT_EQ(inf.pseudo.channel_labels[2],
            pseudo_labels_top_m(inf.fused, icfg.anomaly_ratio));
  // voted positives never exceed the union of channel positives
  for (size_t i = 0; i < inf.pseudo.voted.size(); ++i) {
    int any = inf.pseudo.channel_labels[0][i] | inf.pseudo.channel_labels[1][i] |
              inf.pseudo.channel_labels[2][i];
    EXPECT_LE(inf.pseudo.voted[i], any);
  }
}

TEST(Artifact, SaveLoadSaveIsByteIdentical) {
  auto result = train({small_source(17)}, fast_config(10, 10));
  fs::path dir = fs::temp_directory_path() / "taggad_artifact_test";
  fs::create_directories(dir);
  fs::path p1 = dir / "a1.json", p2 = dir / "a2.json";
  save_artifact(result.artifact, p1);
  auto loaded = load_artifact(p1);
  save_artifact(loaded, p2);
  EXPECT_EQ(file_bytes(p1), file_bytes(p2));
}

TEST(Artifact, ReloadedModelScoresIdentically) {
  auto result = train({small_source(18)}, fast_config(11, 20));
  Graph target = small_source(60, 75, 11);
  fs::path p = fs::temp_directory_path() / "taggad_artifact_scores.json";
  save_artifact(result.artifact, p);
  auto loaded = load_artifact(p);
  InferConfig icfg;
  icfg.seed = 5;
  auto a = infer(result.artifact, target, icfg);
  auto b = infer(loaded, target, icfg);
  EXPECT_EQ(a.final_scores.values, b.final_scores.values);
  EXPECT_EQ(a.channels.rs_raw.values, b.channels.rs_raw.values);
}

TEST(Artifact, TruncatedFileIsAnError) {
  auto result = train({small_source(19)}, fast_config(12, 5));
  fs::path dir = fs::temp_directory_path() / "taggad_artifact_trunc";
  fs::create_directories(dir);
  fs::path p = dir / "full.json";
  save_artifact(result.artifact, p);
  std::string bytes = file_bytes(p);
  fs::path broken = dir / "broken.json";
  std::ofstream(broken) << bytes.substr(0, bytes.size() / 2);
  EXPECT_THROW(load_artifact(broken), ParseError);
}

TEST(Artifact, EmptyScorePoolRejectedOnLoad) {
  auto result = train({small_source(20)}, fast_config(13, 5));
  auto j = artifact_to_json(result.artifact);
  j["source_node_scores"] = nlohmann::json::array();
  EXPECT_THROW(artifact_from_json(j), ValidationError);
}

TEST(Artifact, UnknownFormatVersionRejected) {
  auto result = train({small_source(21)}, fast_config(14, 5));
  auto j = artifact_to_json(result.artifact);
  j["format_version"] = 2;
  EXPECT_THROW(artifact_from_json(j), ValidationError);
}

TEST(Artifact, MissingWeightNamedInError) {
  auto result = train({small_source(22)}, fast_config(15, 5));
  auto j = artifact_to_json(result.artifact);
  j["low_order"]["weights"].erase("W1");
  try {
    artifact_from_json(j);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("low_order.weights.W1"),
              std::string::npos)
        << e.what();
  }
}

TEST(RunAblation, EmptyVariantListGivesNoResults) {
  auto result = train({small_source(23)}, fast_config(16, 5));
  Graph target = small_source(70, 60, 8);
  auto rows = run_ablation(result.artifact, {target}, {}, {0, 1}, {});
  EXPECT_TRUE(rows.empty());
}

TEST(RunAblation, DeterministicPerCell) {
  auto result = train({small_source(24)}, fast_config(17, 15));
  Graph target = small_source(71, 60, 8);
  InferConfig icfg;
  icfg.n_k = 32;
  auto a = run_ablation(result.artifact, {target},
                        {Variant::full, Variant::ada_only}, {3}, icfg);
  auto b = run_ablation(result.artifact, {target},
                        {Variant::full, Variant::ada_only}, {3}, icfg);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].auroc, b[i].auroc);
    EXPECT_EQ(a[i].auprc, b[i].auprc);
  }
}

TEST(SweepK, SingleValueGivesSingleRowAndMonotonePositives) {
  auto result = train({small_source(25)}, fast_config(18, 15));
  Graph target = small_source(72, 80, 8);
  InferConfig icfg;
  icfg.n_k = 32;
  auto one = sweep_k(result.artifact, target, {1}, {0}, icfg);
  ASSERT_EQ(one.size(), 1u);
  auto rows = sweep_k(result.artifact, target, {1, 2, 3}, {0, 1}, icfg);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_GE(rows[0].voted_positives, rows[1].voted_positives);
  EXPECT_GE(rows[1].voted_positives, rows[2].voted_positives);
}
