#pragma once

#include "taggad/common.hpp"

namespace taggad {

// Disassortativity-aware channel weights: w = 1/(metric + eps)^tau per
// channel, normalized to sum 1 so the fused score stays in [0,1]. Smaller
// disassortativity means better alignment and a larger weight.
struct FusionWeights {
  double w_nd = 0.5;
  double w_sd = 0.5;
  double tau = 1.0;
  double eps_stab = 1e-6;
  bool normalized = true;
};

inline FusionWeights ada_weights(double nd, double sd, double tau = 1.0,
                                 double eps_stab = 1e-6) {
  require(nd >= 0.0 && nd <= 1.0, "ada_weights: nd outside [0,1]");
  require(sd >= 0.0 && sd <= 1.0, "ada_weights: sd outside [0,1]");
  FusionWeights w;
  w.tau = tau;
  w.eps_stab = eps_stab;
  double raw_nd = 1.0 / std::pow(nd + eps_stab, tau);
  double raw_sd = 1.0 / std::pow(sd + eps_stab, tau);
  w.w_nd = raw_nd / (raw_nd + raw_sd);
  w.w_sd = raw_sd / (raw_nd + raw_sd);
  w.normalized = true;
  return w;
}

// S_AD(v_i) = w_nd * RS(v_i) + w_sd * (1 - AS(v_i)); both channels must be
// min-max normalized first.
inline ScoreVector fuse_scores(const ScoreVector& rs, const ScoreVector& as_,
                               const FusionWeights& w) {
  require(rs.values.size() == as_.values.size(),
          "fuse_scores: channel length mismatch");
  require(rs.normalized && as_.normalized,
          "fuse_scores: channels must be min-max normalized");
  ScoreVector out;
  out.normalized = true;
  out.values.resize(rs.values.size());
  for (size_t i = 0; i < rs.values.size(); ++i)
    out.values[i] = w.w_nd * rs.values[i] + w.w_sd * (1.0 - as_.values[i]);
  return out;
}

// Top-M pseudo-anomaly labels with M = ceil(ratio * N); cutoff ties break
// toward the smaller node index.
inline std::vector<int> pseudo_labels_top_m(const ScoreVector& scores,
                                            double anomaly_ratio) {
  require(anomaly_ratio > 0.0 && anomaly_ratio < 1.0,
          "pseudo_labels_top_m: anomaly_ratio must be in (0,1)");
  const int n = int(scores.values.size());
  const int m = int(std::ceil(anomaly_ratio * double(n)));
  require(m >= 1, "pseudo_labels_top_m: ratio * N < 1");
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores.values[size_t(a)] != scores.values[size_t(b)])
      return scores.values[size_t(a)] > scores.values[size_t(b)];
    return a < b;
  });
  std::vector<int> labels(size_t(n), 0);
  for (int k = 0; k < std::min(m, n); ++k) labels[size_t(order[size_t(k)])] = 1;
  return labels;
}

// Per-channel pseudo-labels plus their vote.
struct PseudoLabels {
  std::vector<std::vector<int>> channel_labels;
  std::vector<int> voted;
  int m = 0;
  int k_vote = 1;
};

// y_i = 1 iff at least `k_vote` of the channels flagged node i.
inline std::vector<int> vote_labels(const std::vector<std::vector<int>>& channels,
                                    int k_vote) {
  require(!channels.empty(), "vote_labels: no channels");
  require(k_vote >= 1 && k_vote <= int(channels.size()),
          "vote_labels: k_vote must be in [1, " +
              std::to_string(channels.size()) + "]");
  const size_t n = channels.front().size();
  for (const auto& c : channels)
    require(c.size() == n, "vote_labels: channel length mismatch");
  std::vector<int> voted(n, 0);
  for (size_t i = 0; i < n; ++i) {
    int count = 0;
    for (const auto& c : channels) count += c[i];
    voted[i] = count >= k_vote ? 1 : 0;
  }
  return voted;
}

// Softmax-parametrized reliability weights over K channels; always on the
// simplex by construction.
struct ReliabilityWeights {
  std::vector<double> logits;
  std::vector<double> weights;
  bool degenerate_single_class = false;  // voting produced one class; weights fell back to uniform

  static ReliabilityWeights uniform(int k) {
    ReliabilityWeights w;
    w.logits.assign(size_t(k), 0.0);
    w.weights.assign(size_t(k), 1.0 / double(k));
    return w;
  }
};

namespace detail {

inline std::vector<double> softmax(const std::vector<double>& logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

}  // namespace detail

// Fits reliability weights by minimizing binary cross-entropy between the
// weighted score S(v_i) = sum_k w_k s_i^(k), clamped to [1e-6, 1-1e-6], and
// the voted pseudo-labels over all nodes. Plain gradient descent on the
// logits; softmax keeps the weights on the simplex at every step. Logits
// start at zero, so the result is deterministic; `seed` is accepted for
// interface symmetry.
inline ReliabilityWeights tsa_fit(const Matrix& channel_scores,
                                  const std::vector<int>& voted, int steps = 200,
                                  double lr = 0.05, uint64_t seed = 0) {
  (void)seed;
  const int n = int(channel_scores.rows());
  const int k = int(channel_scores.cols());
  require(k >= 1, "tsa_fit: need at least one channel");
  require(int(voted.size()) == n, "tsa_fit: voted label length mismatch");
  require(steps >= 0, "tsa_fit: negative step count");
  require(channel_scores.minCoeff() >= 0.0 && channel_scores.maxCoeff() <= 1.0,
          "tsa_fit: channel scores must lie in [0,1]");

  int positives = int(std::count(voted.begin(), voted.end(), 1));
  if (positives == 0 || positives == n) {
    auto w = ReliabilityWeights::uniform(k);
    w.degenerate_single_class = true;
    return w;
  }
  if (k == 1) return ReliabilityWeights::uniform(1);

  constexpr double kClamp = 1e-6;
  ReliabilityWeights w = ReliabilityWeights::uniform(k);
  for (int step = 0; step < steps; ++step) {
    // dL/dw_k = (1/N) sum_i dBCE/dS_i * s_i^(k), clamp treated as a hard stop
    std::vector<double> grad_w(size_t(k), 0.0);
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int c = 0; c < k; ++c) s += w.weights[size_t(c)] * channel_scores(i, c);
      double p = std::clamp(s, kClamp, 1.0 - kClamp);
      if (s < kClamp || s > 1.0 - kClamp) continue;
      double dls = (p - double(voted[size_t(i)])) / (p * (1.0 - p)) / double(n);
      for (int c = 0; c < k; ++c) grad_w[size_t(c)] += dls * channel_scores(i, c);
    }
    // chain through softmax: dL/dl_j = w_j * (g_j - sum_k w_k g_k)
    double dot = 0.0;
    for (int c = 0; c < k; ++c) dot += w.weights[size_t(c)] * grad_w[size_t(c)];
    for (int c = 0; c < k; ++c)
      w.logits[size_t(c)] -= lr * w.weights[size_t(c)] * (grad_w[size_t(c)] - dot);
    w.weights = detail::softmax(w.logits);
  }
  return w;
}

// S(v_i) = sum_k w_k s_i^(k); in [0,1] whenever the channels are.
inline ScoreVector tsa_score(const Matrix& channel_scores,
                             const ReliabilityWeights& w) {
  require(int(channel_scores.cols()) == int(w.weights.size()),
          "tsa_score: weight count does not match channel count");
  double sum = std::accumulate(w.weights.begin(), w.weights.end(), 0.0);
  require(std::abs(sum - 1.0) <= 1e-9, "tsa_score: weights must sum to 1");
  for (double v : w.weights) require(v >= 0.0, "tsa_score: negative weight");
  ScoreVector out;
  out.normalized = true;
  out.values.resize(size_t(channel_scores.rows()));
  for (int i = 0; i < int(channel_scores.rows()); ++i) {
    double s = 0.0;
    for (int c = 0; c < int(channel_scores.cols()); ++c)
      s += w.weights[size_t(c)] * channel_scores(i, c);
    out.values[size_t(i)] = s;
  }
  return out;
}

}  // namespace taggad
