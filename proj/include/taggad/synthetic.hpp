#pragma once

#include <json.hpp>

#include "taggad/graph.hpp"

namespace taggad {

// Feature-space domain shift applied after sampling block features: a global
// scale plus a rotation by `rotation` radians on each consecutive coordinate
// pair (Givens blocks).
struct DomainShift {
  double scale = 1.0;
  double rotation = 0.0;
};

// Desk-scale benchmark domain: stochastic block model topology with Gaussian
// block-wise features, shifted per DomainShift, then salted with injected
// structural and attribute anomalies until `anomaly_ratio` is reached.
struct SyntheticDomainSpec {
  int num_nodes = 0;
  int num_blocks = 1;
  double intra_block_edge_prob = 0.0;
  double inter_block_edge_prob = 0.0;
  int feature_dim = 1;
  DomainShift feature_domain_shift;
  double anomaly_ratio = 0.05;
  uint64_t seed = 0;

  void validate() const {
    require(num_nodes >= 1, "synthetic spec: num_nodes must be >= 1");
    require(num_blocks >= 1 && num_blocks <= num_nodes,
            "synthetic spec: num_blocks must be in [1, num_nodes]");
    require(intra_block_edge_prob >= 0.0 && intra_block_edge_prob <= 1.0,
            "synthetic spec: intra_block_edge_prob must be in [0,1]");
    require(inter_block_edge_prob >= 0.0 && inter_block_edge_prob <= 1.0,
            "synthetic spec: inter_block_edge_prob must be in [0,1]");
    require(feature_dim >= 1, "synthetic spec: feature_dim must be >= 1");
    require(anomaly_ratio > 0.0 && anomaly_ratio < 0.5,
            "synthetic spec: anomaly_ratio must be in (0, 0.5)");
  }
};

inline void to_json(nlohmann::json& j, const SyntheticDomainSpec& s) {
  j = nlohmann::json{
      {"num_nodes", s.num_nodes},
      {"num_blocks", s.num_blocks},
      {"intra_block_edge_prob", s.intra_block_edge_prob},
      {"inter_block_edge_prob", s.inter_block_edge_prob},
      {"feature_dim", s.feature_dim},
      {"feature_domain_shift",
       {{"scale", s.feature_domain_shift.scale},
        {"rotation", s.feature_domain_shift.rotation}}},
      {"anomaly_ratio", s.anomaly_ratio},
      {"seed", s.seed}};
}

inline void from_json(const nlohmann::json& j, SyntheticDomainSpec& s) {
  try {
    j.at("num_nodes").get_to(s.num_nodes);
    j.at("num_blocks").get_to(s.num_blocks);
    j.at("intra_block_edge_prob").get_to(s.intra_block_edge_prob);
    j.at("inter_block_edge_prob").get_to(s.inter_block_edge_prob);
    j.at("feature_dim").get_to(s.feature_dim);
    const auto& shift = j.at("feature_domain_shift");
    shift.at("scale").get_to(s.feature_domain_shift.scale);
    shift.at("rotation").get_to(s.feature_domain_shift.rotation);
    j.at("anomaly_ratio").get_to(s.anomaly_ratio);
    j.at("seed").get_to(s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("synthetic spec: ") + e.what());
  }
}

namespace detail {

inline std::vector<int> unlabeled_nodes(const Graph& g) {
  std::vector<int> out;
  out.reserve(size_t(g.num_nodes));
  for (int i = 0; i < g.num_nodes; ++i)
    if (g.labels.empty() || g.labels[size_t(i)] == 0) out.push_back(i);
  return out;
}

}  // namespace detail

// Plants `num_cliques` disjoint fully-connected cliques of `clique_size`
// among currently unlabeled nodes and marks every member as an anomaly.
inline Graph inject_structural_anomalies(const Graph& g, int num_cliques,
                                         int clique_size, uint64_t seed) {
  require(num_cliques >= 0 && clique_size >= 0,
          "inject_structural_anomalies: negative counts");
  if (num_cliques == 0 || clique_size == 0) return g;
  auto pool = detail::unlabeled_nodes(g);
  int needed = num_cliques * clique_size;
  require(needed <= int(pool.size()),
          "inject_structural_anomalies: need " + std::to_string(needed) +
              " unlabeled nodes, have " + std::to_string(pool.size()));

  Rng rng(mix_seed(seed, 0xC11D));
  auto picks = rng.sample_without_replacement(int(pool.size()), needed);

  std::vector<std::pair<int, int>> edges;
  edges.reserve(g.col_idx.size() / 2 + size_t(needed) * size_t(clique_size));
  for (int i = 0; i < g.num_nodes; ++i)
    for (int j : g.neighbors(i))
      if (i < j) edges.emplace_back(i, j);

  std::vector<int> labels = g.labels;
  if (labels.empty()) labels.assign(size_t(g.num_nodes), 0);
  for (int c = 0; c < num_cliques; ++c) {
    for (int a = 0; a < clique_size; ++a) {
      int u = pool[size_t(picks[size_t(c * clique_size + a)])];
      labels[size_t(u)] = 1;
      for (int b = a + 1; b < clique_size; ++b) {
        int v = pool[size_t(picks[size_t(c * clique_size + b)])];
        edges.emplace_back(u, v);
      }
    }
  }
  return make_graph(g.num_nodes, edges, g.features, std::move(labels), g.name);
}

// For each of `num_targets` unlabeled nodes, samples `candidate_pool` other
// nodes and adopts the feature row of the Euclidean-farthest candidate.
// Distances and replacement rows come from a snapshot of the input features,
// so the result does not depend on internal processing order.
inline Graph inject_attribute_anomalies(const Graph& g, int num_targets,
                                        int candidate_pool, uint64_t seed) {
  require(num_targets >= 0, "inject_attribute_anomalies: negative count");
  if (num_targets == 0) return g;
  require(g.num_nodes >= 2, "inject_attribute_anomalies: need at least 2 nodes");
  require(candidate_pool >= 1 && candidate_pool <= g.num_nodes - 1,
          "inject_attribute_anomalies: candidate_pool must be in [1, N-1]");
  auto pool = detail::unlabeled_nodes(g);
  require(num_targets <= int(pool.size()),
          "inject_attribute_anomalies: need " + std::to_string(num_targets) +
              " unlabeled nodes, have " + std::to_string(pool.size()));

  Rng rng(mix_seed(seed, 0xA77B));
  auto picks = rng.sample_without_replacement(int(pool.size()), num_targets);

  Graph out = g;
  if (out.labels.empty()) out.labels.assign(size_t(g.num_nodes), 0);
  const Matrix snapshot = g.features;
  for (int t = 0; t < num_targets; ++t) {
    int node = pool[size_t(picks[size_t(t)])];
    // sample candidates among all other nodes
    std::vector<int> cand = rng.sample_without_replacement(g.num_nodes - 1,
                                                           candidate_pool);
    double best_d = -1.0;
    int best = -1;
    for (int c : cand) {
      int other = c >= node ? c + 1 : c;  // skip the node itself
      double d = (snapshot.row(other) - snapshot.row(node)).squaredNorm();
      if (d > best_d) {
        best_d = d;
        best = other;
      }
    }
    out.features.row(node) = snapshot.row(best);
    out.labels[size_t(node)] = 1;
  }
  out.validate();
  return out;
}

// Stochastic block model topology + block-wise Gaussian features + injected
// anomalies. Pure function of the spec: the same spec yields byte-identical
// graphs.
inline Graph generate_synthetic_domain(const SyntheticDomainSpec& spec) {
  spec.validate();
  const int n = spec.num_nodes;
  const int blocks = spec.num_blocks;

  int total_anomalies = int(std::ceil(spec.anomaly_ratio * n));
  require(total_anomalies < n,
          "generate_synthetic_domain: anomaly_ratio leaves no normal nodes");

  Rng rng(mix_seed(spec.seed, 0x5B31));

  // contiguous block assignment
  auto block_of = [&](int i) { return std::min(blocks - 1, i * blocks / n); };

  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double p = block_of(i) == block_of(j) ? spec.intra_block_edge_prob
                                            : spec.inter_block_edge_prob;
      if (rng.uniform() < p) edges.emplace_back(i, j);
    }

  // block centers drawn once and placed on a common sphere, nodes scattered
  // around them; equal center norms keep block populations comparable
  const double center_spread = 2.0;
  const double noise = 0.4;
  const double radius = center_spread * std::sqrt(double(spec.feature_dim));
  Matrix centers(blocks, spec.feature_dim);
  for (int b = 0; b < blocks; ++b) {
    for (int f = 0; f < spec.feature_dim; ++f) centers(b, f) = rng.normal();
    double norm = centers.row(b).norm();
    if (norm > 0.0) centers.row(b) *= radius / norm;
  }
  Matrix features(n, spec.feature_dim);
  for (int i = 0; i < n; ++i)
    for (int f = 0; f < spec.feature_dim; ++f)
      features(i, f) = centers(block_of(i), f) + noise * rng.normal();

  // domain shift: pairwise Givens rotation, then global scale
  const double theta = spec.feature_domain_shift.rotation;
  if (theta != 0.0) {
    const double c = std::cos(theta), s = std::sin(theta);
    for (int f = 0; f + 1 < spec.feature_dim; f += 2) {
      for (int i = 0; i < n; ++i) {
        double a = features(i, f), b = features(i, f + 1);
        features(i, f) = c * a - s * b;
        features(i, f + 1) = s * a + c * b;
      }
    }
  }
  features *= spec.feature_domain_shift.scale;

  Graph g = make_graph(n, edges, std::move(features),
                       std::vector<int>(size_t(n), 0), "synthetic");

  // split the anomaly budget: half structural (as cliques of up to 10),
  // remainder attribute swaps, exact total preserved
  int n_struct = total_anomalies / 2;
  int n_attr = total_anomalies - n_struct;
  const int clique_size = 10;
  int full_cliques = n_struct / clique_size;
  int rem = n_struct % clique_size;
  if (rem > 0 && rem < 3) {
    n_attr += rem;  // too small for a meaningful clique
    rem = 0;
  }
  if (full_cliques > 0)
    g = inject_structural_anomalies(g, full_cliques, clique_size,
                                    mix_seed(spec.seed, 0x51));
  if (rem >= 3)
    g = inject_structural_anomalies(g, 1, rem, mix_seed(spec.seed, 0x52));
  if (n_attr > 0)
    g = inject_attribute_anomalies(g, n_attr,
                                   std::min(50, g.num_nodes - 1),
                                   mix_seed(spec.seed, 0x53));
  return g;
}

}  // namespace taggad
