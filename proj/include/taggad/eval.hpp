#pragma once

#include <chrono>

#include "taggad/pipeline.hpp"

namespace taggad {

namespace detail {

// average ranks (1-based) with ties sharing the mean rank of their block
inline std::vector<double> average_ranks(const std::vector<double>& scores) {
  const size_t n = scores.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[size_t(a)] < scores[size_t(b)];
  });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n &&
           scores[size_t(order[j + 1])] == scores[size_t(order[i])])
      ++j;
    double avg = 0.5 * double(i + j) + 1.0;  // mean of 1-based ranks i+1..j+1
    for (size_t k = i; k <= j; ++k) ranks[size_t(order[k])] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

// Mann-Whitney AUROC with average-rank tie handling. Equals the pairwise
// statistic P(s+ > s-) + 1/2 P(s+ = s-) exactly.
inline double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  require(scores.size() == labels.size(), "auroc: length mismatch");
  int64_t pos = 0, neg = 0;
  for (int l : labels) (l == 1 ? pos : neg) += 1;
  require(pos > 0 && neg > 0, "auroc: both classes must be present");
  auto ranks = detail::average_ranks(scores);
  double rank_sum_pos = 0.0;
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == 1) rank_sum_pos += ranks[i];
  double u = rank_sum_pos - double(pos) * double(pos + 1) / 2.0;
  return u / (double(pos) * double(neg));
}

// Average precision: descending-score sweep with tied scores grouped into one
// threshold step, AP = sum over groups of (delta recall) * precision.
inline double auprc(const std::vector<double>& scores, const std::vector<int>& labels) {
  require(scores.size() == labels.size(), "auprc: length mismatch");
  int64_t total_pos = std::count(labels.begin(), labels.end(), 1);
  require(total_pos > 0, "auprc: need at least one positive");

  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[size_t(a)] > scores[size_t(b)];
  });

  double ap = 0.0;
  int64_t tp = 0, seen = 0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    int64_t group_tp = 0;
    while (j < order.size() &&
           scores[size_t(order[j])] == scores[size_t(order[i])]) {
      group_tp += labels[size_t(order[j])];
      ++j;
    }
    tp += group_tp;
    seen += int64_t(j - i);
    double precision = double(tp) / double(seen);
    ap += (double(group_tp) / double(total_pos)) * precision;
    i = j;
  }
  return ap;
}

enum class Variant { full, no_ada_tsa, ada_only, tsa_only };

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_ada_tsa: return "no_ada_tsa";
    case Variant::ada_only: return "ada_only";
    case Variant::tsa_only: return "tsa_only";
  }
  return "?";
}

inline Variant variant_from_name(const std::string& s) {
  if (s == "full") return Variant::full;
  if (s == "no_ada_tsa") return Variant::no_ada_tsa;
  if (s == "ada_only") return Variant::ada_only;
  if (s == "tsa_only") return Variant::tsa_only;
  throw ValidationError("unknown variant '" + s +
                        "' (expected full|no_ada_tsa|ada_only|tsa_only)");
}

struct ExperimentResult {
  std::string dataset;
  std::string variant;
  uint64_t seed = 0;
  double auroc = 0.0;
  double auprc = 0.0;
  double runtime_ms = 0.0;
};

// Variant wiring:
//   no_ada_tsa - unweighted mean of the two normalized base channels,
//   ada_only   - the disassortativity-weighted fusion S_AD,
//   tsa_only   - reliability-weighted aggregation over the two base channels,
//   full       - the whole inference path.
inline ScoreVector variant_scores(const InferenceResult& inf, Variant v,
                                  const InferConfig& icfg) {
  const auto& rs = inf.channels.rs_norm.values;
  const auto& st = inf.channels.struct_channel.values;
  switch (v) {
    case Variant::full:
      return inf.final_scores;
    case Variant::ada_only:
      return inf.fused;
    case Variant::no_ada_tsa: {
      ScoreVector out;
      out.normalized = true;
      out.values.resize(rs.size());
      for (size_t i = 0; i < rs.size(); ++i) out.values[i] = 0.5 * (rs[i] + st[i]);
      return out;
    }
    case Variant::tsa_only: {
      Matrix channels(Eigen::Index(rs.size()), 2);
      for (size_t i = 0; i < rs.size(); ++i) {
        channels(Eigen::Index(i), 0) = rs[i];
        channels(Eigen::Index(i), 1) = st[i];
      }
      ScoreVector rs_sv{inf.channels.rs_norm};
      ScoreVector st_sv{inf.channels.struct_channel};
      auto votes = vote_labels({pseudo_labels_top_m(rs_sv, icfg.anomaly_ratio),
                                pseudo_labels_top_m(st_sv, icfg.anomaly_ratio)},
                               std::min(icfg.k_vote, 2));
      auto w = tsa_fit(channels, votes, icfg.tsa_steps, icfg.tsa_lr, icfg.seed);
      return tsa_score(channels, w);
    }
  }
  throw ValidationError("variant_scores: unreachable");
}

// Runs every (target, variant, seed) cell. Target labels feed only the metric
// functions, never the scoring path.
inline std::vector<ExperimentResult> run_ablation(
    const ModelArtifact& art, const std::vector<Graph>& targets,
    const std::vector<Variant>& variants, const std::vector<uint64_t>& seeds,
    const InferConfig& base_cfg) {
  std::vector<ExperimentResult> results;
  for (const auto& target : targets) {
    require(target.has_labels(),
            "run_ablation: target '" + target.name + "' has no evaluation labels");
    for (uint64_t seed : seeds) {
      InferConfig icfg = base_cfg;
      icfg.seed = seed;
      auto t0 = std::chrono::steady_clock::now();
      InferenceResult inf = infer(art, target, icfg);
      double infer_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                    t0)
              .count();
      for (Variant v : variants) {
        auto t1 = std::chrono::steady_clock::now();
        auto scores = variant_scores(inf, v, icfg);
        double variant_ms =
            std::chrono::duration<double, std::milli>(
                std::chrono::steady_clock::now() - t1)
                .count();
        ExperimentResult r;
        r.dataset = target.name;
        r.variant = variant_name(v);
        r.seed = seed;
        r.auroc = auroc(scores.values, target.labels);
        r.auprc = auprc(scores.values, target.labels);
        r.runtime_ms = infer_ms + variant_ms;
        results.push_back(std::move(r));
      }
    }
  }
  return results;
}

struct SweepRow {
  int k_vote = 0;
  double auroc_mean = 0.0;
  double auprc_mean = 0.0;
  int64_t voted_positives = 0;  // summed over seeds
};

// Fig.-style K sensitivity: reruns the full pipeline per voting threshold.
inline std::vector<SweepRow> sweep_k(const ModelArtifact& art, const Graph& target,
                                     const std::vector<int>& k_values,
                                     const std::vector<uint64_t>& seeds,
                                     const InferConfig& base_cfg) {
  require(target.has_labels(), "sweep_k: target has no evaluation labels");
  std::vector<SweepRow> rows;
  for (int k : k_values) {
    require(k >= 1 && k <= 3, "sweep_k: k_vote values must be in [1,3]");
    SweepRow row;
    row.k_vote = k;
    for (uint64_t seed : seeds) {
      InferConfig icfg = base_cfg;
      icfg.k_vote = k;
      icfg.seed = seed;
      auto inf = infer(art, target, icfg);
      row.auroc_mean += auroc(inf.final_scores.values, target.labels);
      row.auprc_mean += auprc(inf.final_scores.values, target.labels);
      row.voted_positives += std::count(inf.pseudo.voted.begin(),
                                        inf.pseudo.voted.end(), 1);
    }
    row.auroc_mean /= double(seeds.size());
    row.auprc_mean /= double(seeds.size());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace taggad
