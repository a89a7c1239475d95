#pragma once

#include "taggad/diff.hpp"
#include "taggad/graph.hpp"

namespace taggad {

// Low-order affinity encoders: a one-layer GCN branch
//   H_bar = relu(A_norm * X * W)        (A_norm built without self-loops)
// and a bottlenecked MLP branch with one outer nonlinearity
//   H_hat = relu(X * W1 * W2),
// exactly the two printed maps, both landing in hidden_dim.
struct AffinityEncoder {
  int input_dim = 64;
  int hidden_dim = 64;
  int bottleneck_dim = 32;

  std::string gcn_weight() const { return "low.W"; }
  std::string mlp_weight1() const { return "low.W1"; }
  std::string mlp_weight2() const { return "low.W2"; }

  void register_params(std::vector<ParamShape>& shapes) const {
    require(input_dim >= 1 && hidden_dim >= 1 && bottleneck_dim >= 1,
            "affinity encoder: dimensions must be positive");
    shapes.push_back({gcn_weight(), input_dim, hidden_dim});
    shapes.push_back({mlp_weight1(), input_dim, bottleneck_dim});
    shapes.push_back({mlp_weight2(), bottleneck_dim, hidden_dim});
  }
};

inline Matrix encode_gcn(const AffinityEncoder& enc, const ParamStore& params,
                         const NormalizedAdjacency& adj, const Matrix& x) {
  require(!adj.with_self_loops,
          "encode_gcn: the affinity GCN uses the adjacency without self-loops");
  require(int(x.cols()) == enc.input_dim,
          "encode_gcn: feature width does not match encoder input_dim");
  Matrix h = (adj.apply(x) * params.value(enc.gcn_weight())).cwiseMax(0.0);
  require(all_finite(h), "encode_gcn: non-finite embedding");
  return h;
}

inline Matrix encode_mlp(const AffinityEncoder& enc, const ParamStore& params,
                         const Matrix& x) {
  require(int(x.cols()) == enc.input_dim,
          "encode_mlp: feature width does not match encoder input_dim");
  Matrix h = (x * params.value(enc.mlp_weight1()) * params.value(enc.mlp_weight2()))
                 .cwiseMax(0.0);
  require(all_finite(h), "encode_mlp: non-finite embedding");
  return h;
}

struct AffinityScore {
  ScoreVector scores;      // raw range [-2, 2]
  int isolated_nodes = 0;  // assigned the graph-mean raw affinity
  int zero_norm_terms = 0; // cosine terms that contributed 0
};

namespace detail {

inline double safe_cosine(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                          const Eigen::Ref<const Eigen::RowVectorXd>& b,
                          bool* defined = nullptr) {
  double na = a.norm(), nb = b.norm();
  if (na <= 0.0 || nb <= 0.0) {
    if (defined) *defined = false;
    return 0.0;
  }
  if (defined) *defined = true;
  return a.dot(b) / (na * nb);
}

}  // namespace detail

// AS(v_i) = mean over neighbors of cos(hbar_i, hbar_j) + cos(hhat_i, hhat_j).
// Higher = more homophilous. Isolated nodes take the graph-mean affinity of
// the defined nodes; zero-norm embedding rows contribute 0 to their terms.
inline AffinityScore affinity_score(const Matrix& h_bar, const Matrix& h_hat,
                                    const Graph& g) {
  require(int(h_bar.rows()) == g.num_nodes && int(h_hat.rows()) == g.num_nodes,
          "affinity_score: embeddings are not row-aligned with the graph");
  AffinityScore out;
  out.scores.values.assign(size_t(g.num_nodes), 0.0);
  double defined_sum = 0.0;
  int defined_count = 0;
  for (int i = 0; i < g.num_nodes; ++i) {
    auto nb = g.neighbors(i);
    if (nb.empty()) {
      ++out.isolated_nodes;
      continue;
    }
    double acc = 0.0;
    for (int j : nb) {
      bool ok_bar = false, ok_hat = false;
      acc += detail::safe_cosine(h_bar.row(i), h_bar.row(j), &ok_bar);
      acc += detail::safe_cosine(h_hat.row(i), h_hat.row(j), &ok_hat);
      out.zero_norm_terms += int(!ok_bar) + int(!ok_hat);
    }
    double s = acc / double(nb.size());
    out.scores.values[size_t(i)] = s;
    defined_sum += s;
    ++defined_count;
  }
  if (out.isolated_nodes > 0) {
    double mean = defined_count > 0 ? defined_sum / double(defined_count) : 0.0;
    for (int i = 0; i < g.num_nodes; ++i)
      if (g.neighbors(i).empty()) out.scores.values[size_t(i)] = mean;
  }
  return out;
}

// L_low = -sum_i AS(v_i) with analytic gradients for W, W1, W2. The
// mean-assigned affinity of isolated nodes rides on the defined nodes, which
// turns into a uniform (1 + n_iso / n_defined) weight on every defined term;
// with no edges at all the loss is 0 with zero gradients.
inline LossEval affinity_loss_backward(const AffinityEncoder& enc,
                                       ParamStore& params,
                                       const NormalizedAdjacency& adj,
                                       const Matrix& x, const Graph& g,
                                       bool want_grad,
                                       AffinityScore* detail_out = nullptr) {
  require(!adj.with_self_loops,
          "affinity_loss: the affinity GCN uses the adjacency without self-loops");
  const Matrix aggregated = adj.apply(x);
  const Matrix pre_bar = aggregated * params.value(enc.gcn_weight());
  const Matrix h_bar = pre_bar.cwiseMax(0.0);
  const Matrix bottleneck = x * params.value(enc.mlp_weight1());
  const Matrix pre_hat = bottleneck * params.value(enc.mlp_weight2());
  const Matrix h_hat = pre_hat.cwiseMax(0.0);

  auto score = affinity_score(h_bar, h_hat, g);
  if (detail_out) *detail_out = score;

  LossEval eval;
  double total = 0.0;
  for (double s : score.scores.values) total += s;
  eval.value = -total;
  double mp = std::min(pre_bar.size() ? pre_bar.cwiseAbs().minCoeff()
                                      : std::numeric_limits<double>::infinity(),
                       pre_hat.size() ? pre_hat.cwiseAbs().minCoeff()
                                      : std::numeric_limits<double>::infinity());
  eval.min_abs_preact = mp;
  if (!want_grad) return eval;

  int defined_count = g.num_nodes - score.isolated_nodes;
  if (defined_count == 0) return eval;  // edgeless graph: no gradient path
  double weight = 1.0 + double(score.isolated_nodes) / double(defined_count);

  Matrix g_bar = Matrix::Zero(h_bar.rows(), h_bar.cols());
  Matrix g_hat = Matrix::Zero(h_hat.rows(), h_hat.cols());
  auto accumulate_pair = [&](Matrix& grad, const Matrix& h, int i, int j,
                             double coeff) {
    // d cos(h_i, h_j) / d h_i = (unit_j - cos * unit_i) / |h_i|
    double ni = h.row(i).norm(), nj = h.row(j).norm();
    if (ni <= 0.0 || nj <= 0.0) return;
    Eigen::RowVectorXd ui = h.row(i) / ni;
    Eigen::RowVectorXd uj = h.row(j) / nj;
    double c = ui.dot(uj);
    grad.row(i) += coeff * (uj - c * ui) / ni;
    grad.row(j) += coeff * (ui - c * uj) / nj;
  };
  for (int i = 0; i < g.num_nodes; ++i) {
    auto nb = g.neighbors(i);
    if (nb.empty()) continue;
    double coeff = -weight / double(nb.size());  // dL/dAS_i * (1/deg_i)
    for (int j : nb) {
      accumulate_pair(g_bar, h_bar, i, j, coeff);
      accumulate_pair(g_hat, h_hat, i, j, coeff);
    }
  }

  Matrix mask_bar = (pre_bar.array() > 0.0).cast<double>().matrix();
  Matrix mask_hat = (pre_hat.array() > 0.0).cast<double>().matrix();
  Matrix gz_bar = g_bar.cwiseProduct(mask_bar);
  Matrix gz_hat = g_hat.cwiseProduct(mask_hat);

  params.grad(enc.gcn_weight()) += aggregated.transpose() * gz_bar;
  params.grad(enc.mlp_weight2()) += bottleneck.transpose() * gz_hat;
  params.grad(enc.mlp_weight1()) +=
      x.transpose() * (gz_hat * params.value(enc.mlp_weight2()).transpose());
  return eval;
}

}  // namespace taggad
