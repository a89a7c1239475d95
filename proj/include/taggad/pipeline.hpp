#pragma once

#include <json.hpp>

#include "taggad/adapters.hpp"
#include "taggad/disassort.hpp"
#include "taggad/high_order.hpp"
#include "taggad/low_order.hpp"

namespace taggad {

struct TrainConfig {
  int epochs = 300;
  AdamConfig adam;
  int num_hops = 4;        // l
  int hidden_dim = 64;     // d_h
  double margin = 0.1;     // contrastive margin
  int n_k = 256;           // residual score sample size
  int latent_dim = 64;     // d_u, shared PCA space
  int bottleneck_dim = 32; // MLP branch bottleneck
  uint64_t seed = 0;
  int64_t score_pool_cap = 10'000;
  int64_t pair_cap = 1'000'000;

  void validate() const {
    require(epochs >= 0, "train config: epochs must be >= 0");
    require(num_hops >= 2, "train config: num_hops must be >= 2");
    require(hidden_dim >= 1 && latent_dim >= 1 && bottleneck_dim >= 1,
            "train config: dimensions must be positive");
    require(n_k >= 1, "train config: n_k must be >= 1");
    require(score_pool_cap >= 1, "train config: score_pool_cap must be >= 1");
    require(pair_cap >= 1, "train config: pair_cap must be >= 1");
  }
};

struct InferConfig {
  double anomaly_ratio = 0.05;  // drives M for pseudo-labels
  int k_vote = 1;               // voting threshold over the 3 channels
  int n_k = 256;
  double tau = 1.0;
  double eps_stab = 1e-6;
  int tsa_steps = 200;
  double tsa_lr = 0.05;
  int grid_points = kDefaultKdeGridPoints;
  uint64_t seed = 0;

  void validate() const {
    require(anomaly_ratio > 0.0 && anomaly_ratio < 1.0,
            "infer config: anomaly_ratio must be in (0,1)");
    require(n_k >= 1, "infer config: n_k must be >= 1");
    require(tsa_steps >= 0, "infer config: tsa_steps must be >= 0");
    require(grid_points >= 2, "infer config: grid_points must be >= 2");
  }
};

struct SourceProjectorInfo {
  std::string graph;
  int input_dim = 0;
  int output_dim = 0;
};

// Everything persisted between training and inference: both encoders'
// parameters and hyperparameters, the pooled source-domain score samples
// that anchor ND/SD on the target side, and the training configuration.
struct ModelArtifact {
  int format_version = 1;
  HighOrderEncoder high;
  AffinityEncoder low;
  ParamStore params;
  std::vector<double> source_node_scores;
  std::vector<double> source_struct_scores;
  TrainConfig config;
  std::vector<SourceProjectorInfo> projectors;

  void validate() const {
    require(format_version == 1, "artifact: unsupported format_version " +
                                     std::to_string(format_version));
    require(!source_node_scores.empty(), "artifact: empty source_node_scores pool");
    require(!source_struct_scores.empty(),
            "artifact: empty source_struct_scores pool");
    for (double v : source_node_scores)
      require(std::isfinite(v), "artifact: non-finite source_node_scores entry");
    for (double v : source_struct_scores)
      require(std::isfinite(v), "artifact: non-finite source_struct_scores entry");
    require(params.values_finite(), "artifact: non-finite parameter");
  }
};

struct EpochLoss {
  double total = 0.0;
  double high = 0.0;
  double low = 0.0;
};

struct TrainResult {
  ModelArtifact artifact;
  std::vector<EpochLoss> history;                    // aggregated per epoch
  std::vector<std::vector<EpochLoss>> per_graph;     // history[epoch][graph]
};

namespace detail {

inline std::vector<double> subsample_pool(std::vector<double> pool, int64_t cap,
                                          uint64_t seed) {
  if (int64_t(pool.size()) <= cap) return pool;
  Rng rng(mix_seed(seed, 0x50C5));
  auto idx = rng.sample_without_replacement(int(pool.size()), int(cap));
  std::sort(idx.begin(), idx.end());
  std::vector<double> out;
  out.reserve(size_t(cap));
  for (int i : idx) out.push_back(pool[size_t(i)]);
  return out;
}

struct PreparedGraph {
  NormalizedAdjacency adj_loops;     // self-loop adjacency for propagation
  NormalizedAdjacency adj_plain;     // no-self-loop adjacency for the GCN branch
  Matrix latent;                     // PCA-projected features, N x d_u
  std::vector<int> normals, anomalies;
};

inline PreparedGraph prepare_graph(const Graph& g, int latent_dim, uint64_t seed,
                                   bool need_labels) {
  PreparedGraph p;
  if (need_labels) {
    require(g.has_labels(),
            "source graph '" + g.name + "' has no labels (labels.csv missing)");
    for (int i = 0; i < g.num_nodes; ++i)
      (g.labels[size_t(i)] == 1 ? p.anomalies : p.normals).push_back(i);
    require(!p.normals.empty() && !p.anomalies.empty(),
            "source graph '" + g.name + "' must contain both classes");
  }
  p.adj_loops = symmetric_normalize(g, /*add_self_loops=*/true);
  p.adj_plain = symmetric_normalize(g, /*add_self_loops=*/false);
  auto proj = fit_projection(g.features, latent_dim, seed);
  p.latent = apply_projection(proj, g.features);
  return p;
}

}  // namespace detail

// Joint training loop: per epoch, per source graph, one optimizer step on
// L = L_low + L_high. After training the frozen model scores every source
// graph and pools the normalized per-graph score samples (seeded subsample
// above the cap).
inline TrainResult train(const std::vector<Graph>& sources, const TrainConfig& cfg) {
  cfg.validate();
  require(!sources.empty(), "train: need at least one source graph");

  ModelArtifact art;
  art.config = cfg;
  art.high = HighOrderEncoder{cfg.num_hops, cfg.hidden_dim, cfg.margin,
                              cfg.latent_dim};
  art.low = AffinityEncoder{cfg.latent_dim, cfg.hidden_dim, cfg.bottleneck_dim};

  std::vector<detail::PreparedGraph> prepared;
  for (size_t g = 0; g < sources.size(); ++g) {
    prepared.push_back(detail::prepare_graph(sources[g], cfg.latent_dim,
                                             mix_seed(cfg.seed, g),
                                             /*need_labels=*/true));
    art.projectors.push_back({sources[g].name, int(sources[g].features.cols()),
                              cfg.latent_dim});
  }

  std::vector<ParamShape> shapes;
  art.high.register_params(shapes);
  art.low.register_params(shapes);
  art.params = init_params(shapes, cfg.seed);
  OptimizerState opt = OptimizerState::init(art.params, cfg.adam);

  TrainResult result;
  for (int e = 0; e < cfg.epochs; ++e) {
    EpochLoss epoch;
    std::vector<EpochLoss> per_graph;
    for (size_t g = 0; g < sources.size(); ++g) {
      auto& p = prepared[g];
      art.params.zero_grads();
      PairSampling sampling{cfg.pair_cap,
                            mix_seed(cfg.seed, 0xEE00 + uint64_t(e) *
                                                   sources.size() + g)};
      auto high = high_order_loss_backward(art.high, art.params, p.adj_loops,
                                           p.latent, p.normals, p.anomalies,
                                           /*want_grad=*/true, sampling);
      auto low = affinity_loss_backward(art.low, art.params, p.adj_plain,
                                        p.latent, sources[g], /*want_grad=*/true);
      double total = high.value + low.value;
      if (!std::isfinite(total))
        throw NumericalError("train: non-finite joint loss at epoch " +
                             std::to_string(e) + " on graph '" +
                             sources[g].name + "'");
      adam_step(art.params, opt);
      per_graph.push_back({total, high.value, low.value});
      epoch.total += total;
      epoch.high += high.value;
      epoch.low += low.value;
    }
    result.history.push_back(epoch);
    result.per_graph.push_back(std::move(per_graph));
  }

  // score every source graph with the frozen model and pool the samples
  std::vector<double> node_pool, struct_pool;
  for (size_t g = 0; g < sources.size(); ++g) {
    auto& p = prepared[g];
    auto hs = propagate(art.high, art.params, p.adj_loops, p.latent);
    Matrix r = residual_embed(hs);
    auto rs = residual_score(r, cfg.n_k, mix_seed(cfg.seed, 0xAB00 + g));
    auto rs_norm = minmax_normalize(rs);
    node_pool.insert(node_pool.end(), rs_norm.values.begin(), rs_norm.values.end());

    Matrix h_bar = encode_gcn(art.low, art.params, p.adj_plain, p.latent);
    Matrix h_hat = encode_mlp(art.low, art.params, p.latent);
    auto as = affinity_score(h_bar, h_hat, sources[g]);
    auto as_norm = minmax_normalize(as.scores);
    for (double v : as_norm.values) struct_pool.push_back(1.0 - v);
  }
  art.source_node_scores =
      detail::subsample_pool(std::move(node_pool), cfg.score_pool_cap,
                             mix_seed(cfg.seed, 0x99A1));
  art.source_struct_scores =
      detail::subsample_pool(std::move(struct_pool), cfg.score_pool_cap,
                             mix_seed(cfg.seed, 0x99A2));

  result.artifact = std::move(art);
  result.artifact.validate();
  return result;
}

// All per-target channel material shared by inference and the metrics report.
struct TargetChannels {
  ScoreVector rs_raw;          // Eq. residual score, unnormalized
  ScoreVector as_raw;          // Eq. affinity score, raw range [-2,2]
  ScoreVector rs_norm;         // min-max normalized residual channel
  ScoreVector as_norm;         // min-max normalized affinity
  ScoreVector struct_channel;  // 1 - as_norm
  int isolated_nodes = 0;
  int zero_norm_terms = 0;
};

inline TargetChannels compute_target_channels(const ModelArtifact& art,
                                              const Graph& target,
                                              const InferConfig& icfg) {
  art.validate();
  icfg.validate();
  require(target.num_nodes >= 3,
          "infer: target graph needs at least 3 nodes (KDE and top-M degenerate)");

  // a fresh per-target PCA; the artifact cannot anticipate unseen feature widths
  auto p = detail::prepare_graph(target, art.config.latent_dim, icfg.seed,
                                 /*need_labels=*/false);

  TargetChannels ch;
  auto hs = propagate(art.high, art.params, p.adj_loops, p.latent);
  Matrix r = residual_embed(hs);
  ch.rs_raw = residual_score(r, icfg.n_k, icfg.seed);

  Matrix h_bar = encode_gcn(art.low, art.params, p.adj_plain, p.latent);
  Matrix h_hat = encode_mlp(art.low, art.params, p.latent);
  auto as = affinity_score(h_bar, h_hat, target);
  ch.as_raw = as.scores;
  ch.isolated_nodes = as.isolated_nodes;
  ch.zero_norm_terms = as.zero_norm_terms;

  ch.rs_norm = minmax_normalize(ch.rs_raw);
  ch.as_norm = minmax_normalize(ch.as_raw);
  ch.struct_channel.normalized = true;
  ch.struct_channel.values.reserve(ch.as_norm.values.size());
  for (double v : ch.as_norm.values) ch.struct_channel.values.push_back(1.0 - v);
  return ch;
}

inline DisassortReport target_disassort(const ModelArtifact& art,
                                        const TargetChannels& ch,
                                        int grid_points) {
  DomainProfile source{art.source_node_scores, art.source_struct_scores};
  DomainProfile target{ch.rs_norm.values, ch.struct_channel.values};
  return disassort_report(source, target, grid_points);
}

struct InferenceResult {
  TargetChannels channels;
  DisassortReport report;
  FusionWeights fusion;
  ScoreVector fused;  // S_AD
  PseudoLabels pseudo;
  ReliabilityWeights reliability;
  ScoreVector final_scores;
};

// Zero-shot inference: residual and affinity scoring, ADA fusion guided by
// ND/SD against the stored source pools, top-M pseudo-label voting over the
// three channels {RS, 1-AS, S_AD}, and reliability-weighted aggregation.
// Never mutates the artifact and never reads target labels.
inline InferenceResult infer(const ModelArtifact& art, const Graph& target,
                             const InferConfig& icfg) {
  require(icfg.k_vote >= 1 && icfg.k_vote <= 3,
          "infer: k_vote must be in [1, 3] (three voting channels)");
  InferenceResult res;
  res.channels = compute_target_channels(art, target, icfg);
  res.report = target_disassort(art, res.channels, icfg.grid_points);

  res.fusion = ada_weights(res.report.nd, res.report.sd, icfg.tau, icfg.eps_stab);
  res.fused = fuse_scores(res.channels.rs_norm, res.channels.as_norm, res.fusion);

  const int n = target.num_nodes;
  Matrix channel_matrix(n, 3);
  for (int i = 0; i < n; ++i) {
    channel_matrix(i, 0) = res.channels.rs_norm.values[size_t(i)];
    channel_matrix(i, 1) = res.channels.struct_channel.values[size_t(i)];
    channel_matrix(i, 2) = res.fused.values[size_t(i)];
  }

  res.pseudo.m = int(std::ceil(icfg.anomaly_ratio * double(n)));
  res.pseudo.k_vote = icfg.k_vote;
  res.pseudo.channel_labels = {
      pseudo_labels_top_m(res.channels.rs_norm, icfg.anomaly_ratio),
      pseudo_labels_top_m(res.channels.struct_channel, icfg.anomaly_ratio),
      pseudo_labels_top_m(res.fused, icfg.anomaly_ratio)};
  res.pseudo.voted = vote_labels(res.pseudo.channel_labels, icfg.k_vote);

  res.reliability = tsa_fit(channel_matrix, res.pseudo.voted, icfg.tsa_steps,
                            icfg.tsa_lr, icfg.seed);
  res.final_scores = tsa_score(channel_matrix, res.reliability);
  return res;
}

// ---------------------------------------------------------------------------
// artifact persistence (single JSON document)

namespace detail {

inline nlohmann::json weights_to_json(const ParamStore& params,
                                      const std::string& prefix,
                                      const std::vector<std::string>& names) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& name : names) {
    const Matrix& m = params.value(prefix + name);
    std::vector<double> flat(static_cast<size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        flat[size_t(i) * size_t(m.cols()) + size_t(j)] = m(i, j);
    out[name] = nlohmann::json::array(
        {nlohmann::json::array({m.rows(), m.cols()}), flat});
  }
  return out;
}

inline Matrix weight_from_json(const nlohmann::json& entry, const std::string& where) {
  if (!entry.is_array() || entry.size() != 2 || !entry[0].is_array() ||
      entry[0].size() != 2)
    throw ParseError("artifact: field " + where +
                     " must be [[rows, cols], [values...]]");
  int64_t rows = entry[0][0].get<int64_t>();
  int64_t cols = entry[0][1].get<int64_t>();
  const auto& vals = entry[1];
  if (rows <= 0 || cols <= 0 || !vals.is_array() ||
      int64_t(vals.size()) != rows * cols)
    throw ParseError("artifact: field " + where + " has inconsistent shape header");
  Matrix m(rows, cols);
  for (int64_t i = 0; i < rows; ++i)
    for (int64_t j = 0; j < cols; ++j) {
      double v = vals[size_t(i * cols + j)].get<double>();
      if (!std::isfinite(v))
        throw ParseError("artifact: field " + where + " holds a non-finite value");
      m(i, j) = v;
    }
  return m;
}

template <typename T>
T get_field(const nlohmann::json& j, const std::string& where, const char* key) {
  if (!j.contains(key))
    throw ParseError("artifact: missing field " + where + "." + key);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError("artifact: field " + where + "." + key + " has the wrong type");
  }
}

}  // namespace detail

inline nlohmann::json artifact_to_json(const ModelArtifact& art) {
  std::vector<std::string> high_names;
  for (int k = 1; k <= art.high.num_hops; ++k)
    high_names.push_back("W" + std::to_string(k));
  nlohmann::json projectors = nlohmann::json::array();
  for (const auto& p : art.projectors)
    projectors.push_back({{"graph", p.graph},
                          {"input_dim", p.input_dim},
                          {"output_dim", p.output_dim}});
  return nlohmann::json{
      {"format_version", art.format_version},
      {"high_order",
       {{"l", art.high.num_hops},
        {"d_h", art.high.hidden_dim},
        {"margin", art.high.margin},
        {"weights", detail::weights_to_json(art.params, "high.", high_names)}}},
      {"low_order",
       {{"hidden", art.low.hidden_dim},
        {"bottleneck", art.low.bottleneck_dim},
        {"weights", detail::weights_to_json(art.params, "low.", {"W", "W1", "W2"})}}},
      {"source_node_scores", art.source_node_scores},
      {"source_struct_scores", art.source_struct_scores},
      {"train_config",
       {{"epochs", art.config.epochs},
        {"learning_rate", art.config.adam.learning_rate},
        {"beta1", art.config.adam.beta1},
        {"beta2", art.config.adam.beta2},
        {"epsilon", art.config.adam.epsilon},
        {"num_hops", art.config.num_hops},
        {"hidden_dim", art.config.hidden_dim},
        {"margin", art.config.margin},
        {"n_k", art.config.n_k},
        {"latent_dim", art.config.latent_dim},
        {"bottleneck_dim", art.config.bottleneck_dim},
        {"seed", art.config.seed},
        {"score_pool_cap", art.config.score_pool_cap},
        {"pair_cap", art.config.pair_cap},
        {"source_projectors", projectors}}}};
}

inline ModelArtifact artifact_from_json(const nlohmann::json& j) {
  ModelArtifact art;
  art.format_version = detail::get_field<int>(j, "", "format_version");
  if (art.format_version != 1)
    throw ValidationError("artifact: unknown format_version " +
                          std::to_string(art.format_version));

  if (!j.contains("high_order")) throw ParseError("artifact: missing field high_order");
  if (!j.contains("low_order")) throw ParseError("artifact: missing field low_order");
  if (!j.contains("train_config"))
    throw ParseError("artifact: missing field train_config");
  const auto& high = j.at("high_order");
  const auto& low = j.at("low_order");
  const auto& tc = j.at("train_config");

  art.config.epochs = detail::get_field<int>(tc, "train_config", "epochs");
  art.config.adam.learning_rate =
      detail::get_field<double>(tc, "train_config", "learning_rate");
  art.config.adam.beta1 = detail::get_field<double>(tc, "train_config", "beta1");
  art.config.adam.beta2 = detail::get_field<double>(tc, "train_config", "beta2");
  art.config.adam.epsilon = detail::get_field<double>(tc, "train_config", "epsilon");
  art.config.num_hops = detail::get_field<int>(tc, "train_config", "num_hops");
  art.config.hidden_dim = detail::get_field<int>(tc, "train_config", "hidden_dim");
  art.config.margin = detail::get_field<double>(tc, "train_config", "margin");
  art.config.n_k = detail::get_field<int>(tc, "train_config", "n_k");
  art.config.latent_dim = detail::get_field<int>(tc, "train_config", "latent_dim");
  art.config.bottleneck_dim =
      detail::get_field<int>(tc, "train_config", "bottleneck_dim");
  art.config.seed = detail::get_field<uint64_t>(tc, "train_config", "seed");
  art.config.score_pool_cap =
      detail::get_field<int64_t>(tc, "train_config", "score_pool_cap");
  art.config.pair_cap = detail::get_field<int64_t>(tc, "train_config", "pair_cap");
  if (tc.contains("source_projectors"))
    for (const auto& p : tc.at("source_projectors"))
      art.projectors.push_back(
          {detail::get_field<std::string>(p, "source_projectors[]", "graph"),
           detail::get_field<int>(p, "source_projectors[]", "input_dim"),
           detail::get_field<int>(p, "source_projectors[]", "output_dim")});

  art.high = HighOrderEncoder{detail::get_field<int>(high, "high_order", "l"),
                              detail::get_field<int>(high, "high_order", "d_h"),
                              detail::get_field<double>(high, "high_order", "margin"),
                              art.config.latent_dim};
  art.low = AffinityEncoder{art.config.latent_dim,
                            detail::get_field<int>(low, "low_order", "hidden"),
                            detail::get_field<int>(low, "low_order", "bottleneck")};

  std::vector<ParamShape> shapes;
  art.high.register_params(shapes);
  art.low.register_params(shapes);
  art.params.seed = art.config.seed;
  if (!high.contains("weights"))
    throw ParseError("artifact: missing field high_order.weights");
  if (!low.contains("weights"))
    throw ParseError("artifact: missing field low_order.weights");
  const auto& high_weights = high.at("weights");
  const auto& low_weights = low.at("weights");
  for (const auto& s : shapes) {
    const bool is_high = s.name.rfind("high.", 0) == 0;
    std::string short_name = s.name.substr(s.name.find('.') + 1);
    const auto& section = is_high ? high_weights : low_weights;
    std::string where = (is_high ? "high_order.weights." : "low_order.weights.") +
                        short_name;
    if (!section.contains(short_name))
      throw ParseError("artifact: missing field " + where);
    Matrix m = detail::weight_from_json(section.at(short_name), where);
    if (int(m.rows()) != s.rows || int(m.cols()) != s.cols)
      throw ParseError("artifact: field " + where + " has shape " +
                       std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                       ", expected " + std::to_string(s.rows) + "x" +
                       std::to_string(s.cols));
    art.params.names.push_back(s.name);
    art.params.grads.emplace(s.name, Matrix::Zero(m.rows(), m.cols()));
    art.params.values.emplace(s.name, std::move(m));
  }

  art.source_node_scores =
      detail::get_field<std::vector<double>>(j, "", "source_node_scores");
  art.source_struct_scores =
      detail::get_field<std::vector<double>>(j, "", "source_struct_scores");
  art.validate();
  return art;
}

inline void save_artifact(const ModelArtifact& art, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(bool(out), "save_artifact: cannot open " + path.string());
  out << artifact_to_json(art).dump(2) << '\n';
}

inline ModelArtifact load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("load_artifact: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("load_artifact: " + path.string() + ": " + e.what());
  }
  return artifact_from_json(j);
}

}  // namespace taggad
