#pragma once

#include "taggad/diff.hpp"
#include "taggad/graph.hpp"
#include "taggad/projection.hpp"

namespace taggad {

// Multi-hop propagation encoder. Layer k computes
//   H[k] = relu(A_hat * H[k-1] * W[k]),  H[0] = X,
// with A_hat the self-loop normalized adjacency. W[1] maps input_dim ->
// hidden_dim, the rest hidden_dim -> hidden_dim. Residuals need hops 1 and 2,
// so num_hops >= 2.
struct HighOrderEncoder {
  int num_hops = 4;
  int hidden_dim = 64;
  double margin = 0.1;
  int input_dim = 64;

  std::string weight_name(int layer) const {
    return "high.W" + std::to_string(layer);
  }

  void register_params(std::vector<ParamShape>& shapes) const {
    require(num_hops >= 2, "high-order encoder: num_hops must be >= 2");
    require(hidden_dim >= 1 && input_dim >= 1,
            "high-order encoder: dimensions must be positive");
    for (int k = 1; k <= num_hops; ++k)
      shapes.push_back({weight_name(k), k == 1 ? input_dim : hidden_dim, hidden_dim});
  }

  int residual_dim() const { return (num_hops - 1) * hidden_dim; }
};

// Forward pass with everything backprop needs retained.
struct PropagationTrace {
  std::vector<Matrix> aggregated;      // A_hat * H[k-1], per layer
  std::vector<Matrix> pre_activation;  // Z[k] = aggregated[k] * W[k]
  std::vector<Matrix> activation;      // H[k] = relu(Z[k])
  double min_abs_preact = std::numeric_limits<double>::infinity();
};

inline PropagationTrace propagate_trace(const HighOrderEncoder& enc,
                                        const ParamStore& params,
                                        const NormalizedAdjacency& adj,
                                        const Matrix& x) {
  require(adj.with_self_loops,
          "propagate: high-order propagation requires the self-loop adjacency");
  require(int(x.cols()) == enc.input_dim,
          "propagate: feature width " + std::to_string(x.cols()) +
              " does not match encoder input_dim " + std::to_string(enc.input_dim));
  PropagationTrace t;
  const Matrix* h = &x;
  for (int k = 1; k <= enc.num_hops; ++k) {
    t.aggregated.push_back(adj.apply(*h));
    t.pre_activation.push_back(t.aggregated.back() *
                               params.value(enc.weight_name(k)));
    const Matrix& z = t.pre_activation.back();
    double local_min = z.size() ? z.cwiseAbs().minCoeff()
                                : std::numeric_limits<double>::infinity();
    t.min_abs_preact = std::min(t.min_abs_preact, local_min);
    t.activation.push_back(z.cwiseMax(0.0));
    h = &t.activation.back();
  }
  return t;
}

// H[1..l] for a frozen encoder.
inline std::vector<Matrix> propagate(const HighOrderEncoder& enc,
                                     const ParamStore& params,
                                     const NormalizedAdjacency& adj,
                                     const Matrix& x) {
  auto trace = propagate_trace(enc, params, adj, x);
  for (const auto& h : trace.activation)
    require(all_finite(h), "propagate: non-finite activation");
  return std::move(trace.activation);
}

// R = [(H[2]-H[1]) || (H[3]-H[1]) || ... || (H[l]-H[1])], column-wise in hop
// order; N x ((l-1) * d_h).
inline Matrix residual_embed(const std::vector<Matrix>& hs) {
  require(hs.size() >= 2, "residual_embed: need at least 2 hops");
  const auto n = hs.front().rows();
  const auto d = hs.front().cols();
  Matrix r(n, Eigen::Index(hs.size() - 1) * d);
  for (size_t k = 1; k < hs.size(); ++k)
    r.middleCols(Eigen::Index(k - 1) * d, d) = hs[k] - hs[0];
  return r;
}

// Pair-enumeration policy for the contrastive loss: exact sums while a term
// stays at or below `cap` pairs, a seeded uniform subsample of `cap` pairs
// otherwise.
struct PairSampling {
  int64_t cap = 1'000'000;
  uint64_t seed = 0;
};

struct ContrastiveLoss {
  double value = 0.0;
  int64_t skipped_pairs = 0;  // pairs dropped because a residual row had zero norm
  int64_t sampled_pairs = 0;  // nonzero only on the subsampled path
};

namespace detail {

struct UnitRows {
  Matrix units;               // zero rows stay zero
  std::vector<double> norms;  // 0.0 marks an undefined direction
};

inline UnitRows unit_rows(const Matrix& r) {
  UnitRows u;
  u.units = Matrix::Zero(r.rows(), r.cols());
  u.norms.assign(size_t(r.rows()), 0.0);
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    double n = r.row(i).norm();
    u.norms[size_t(i)] = n;
    if (n > 0.0) u.units.row(i) = r.row(i) / n;
  }
  return u;
}

}  // namespace detail

// Residual similarity loss over labeled source nodes:
//   sum_{t,i in normals} (1 - cos(r_t, r_i))
//   + sum_{t in normals, j in anomalies} max(0, cos(r_t, r_j) - margin).
// Pairs touching a zero-norm residual row are skipped and counted. When
// grad_r is non-null it receives dLoss/dR.
inline ContrastiveLoss contrastive_loss(const Matrix& r,
                                        const std::vector<int>& normal_idx,
                                        const std::vector<int>& anomaly_idx,
                                        double margin, Matrix* grad_r = nullptr,
                                        const PairSampling& sampling = {}) {
  // an empty anomaly set is tolerated (the hinge term vanishes); training
  // enforces both classes upstream
  require(!normal_idx.empty(), "contrastive_loss: normal index set must be non-empty");
  auto u = detail::unit_rows(r);
  for (int i : normal_idx)
    require(i >= 0 && i < int(r.rows()), "contrastive_loss: normal index out of range");
  for (int j : anomaly_idx)
    require(j >= 0 && j < int(r.rows()), "contrastive_loss: anomaly index out of range");

  std::vector<int> normals, anomalies;
  for (int i : normal_idx)
    if (u.norms[size_t(i)] > 0.0) normals.push_back(i);
  for (int j : anomaly_idx)
    if (u.norms[size_t(j)] > 0.0) anomalies.push_back(j);

  ContrastiveLoss out;
  out.skipped_pairs =
      int64_t(normal_idx.size()) * int64_t(normal_idx.size()) -
      int64_t(normals.size()) * int64_t(normals.size()) +
      int64_t(normal_idx.size()) * int64_t(anomaly_idx.size()) -
      int64_t(normals.size()) * int64_t(anomalies.size());

  Matrix grad_units;  // gradient in unit-row space
  if (grad_r) grad_units = Matrix::Zero(r.rows(), r.cols());

  Rng rng(mix_seed(sampling.seed, 0x9A12));

  // normal-normal attraction
  const int64_t nn_pairs = int64_t(normals.size()) * int64_t(normals.size());
  if (nn_pairs > 0 && nn_pairs <= sampling.cap) {
    // sum_{t,i} (1 - u_t . u_i) = |P|^2 - |sum_t u_t|^2, exact
    Vector usum = Vector::Zero(r.cols());
    for (int t : normals) usum += u.units.row(t).transpose();
    out.value += double(nn_pairs) - usum.squaredNorm();
    if (grad_r)
      for (int t : normals) grad_units.row(t) -= 2.0 * usum.transpose();
  } else if (nn_pairs > 0) {
    for (int64_t s = 0; s < sampling.cap; ++s) {
      int t = normals[size_t(rng.uniform_int(int(normals.size())))];
      int i = normals[size_t(rng.uniform_int(int(normals.size())))];
      double c = u.units.row(t).dot(u.units.row(i));
      out.value += 1.0 - c;
      if (grad_r) {
        grad_units.row(t) -= u.units.row(i);
        grad_units.row(i) -= u.units.row(t);
      }
    }
    out.sampled_pairs += sampling.cap;
  }

  // normal-anomaly hinge
  const int64_t na_pairs = int64_t(normals.size()) * int64_t(anomalies.size());
  if (na_pairs > 0 && na_pairs <= sampling.cap) {
    for (int t : normals) {
      for (int j : anomalies) {
        double c = u.units.row(t).dot(u.units.row(j));
        if (c - margin > 0.0) {
          out.value += c - margin;
          if (grad_r) {
            grad_units.row(t) += u.units.row(j);
            grad_units.row(j) += u.units.row(t);
          }
        }
      }
    }
  } else if (na_pairs > 0) {
    for (int64_t s = 0; s < sampling.cap; ++s) {
      int t = normals[size_t(rng.uniform_int(int(normals.size())))];
      int j = anomalies[size_t(rng.uniform_int(int(anomalies.size())))];
      double c = u.units.row(t).dot(u.units.row(j));
      if (c - margin > 0.0) {
        out.value += c - margin;
        if (grad_r) {
          grad_units.row(t) += u.units.row(j);
          grad_units.row(j) += u.units.row(t);
        }
      }
    }
    out.sampled_pairs += sampling.cap;
  }

  if (grad_r) {
    // pull back from unit rows: d/dr f(u(r)) = (g - (u.g) u) / |r|
    *grad_r = Matrix::Zero(r.rows(), r.cols());
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
      double n = u.norms[size_t(i)];
      if (n <= 0.0) continue;
      double along = u.units.row(i).dot(grad_units.row(i));
      grad_r->row(i) = (grad_units.row(i) - along * u.units.row(i)) / n;
    }
  }
  return out;
}

// Loss of Eq. (contrastive) evaluated through the full propagation stack,
// with analytic gradients for every W[k] accumulated into params.grads.
inline LossEval high_order_loss_backward(const HighOrderEncoder& enc,
                                         ParamStore& params,
                                         const NormalizedAdjacency& adj,
                                         const Matrix& x,
                                         const std::vector<int>& normal_idx,
                                         const std::vector<int>& anomaly_idx,
                                         bool want_grad,
                                         const PairSampling& sampling = {},
                                         ContrastiveLoss* detail_out = nullptr) {
  auto trace = propagate_trace(enc, params, adj, x);
  Matrix r = residual_embed(trace.activation);

  Matrix grad_r;
  auto loss = contrastive_loss(r, normal_idx, anomaly_idx, enc.margin,
                               want_grad ? &grad_r : nullptr, sampling);
  if (detail_out) *detail_out = loss;

  if (want_grad) {
    const int l = enc.num_hops;
    const int dh = enc.hidden_dim;
    // split dL/dR into per-hop blocks: block b belongs to H[b+2] - H[1]
    std::vector<Matrix> direct(size_t(l) + 1);
    direct[1] = Matrix::Zero(x.rows(), dh);
    for (int k = 2; k <= l; ++k) {
      direct[size_t(k)] = grad_r.middleCols(Eigen::Index(k - 2) * dh, dh);
      direct[1] -= direct[size_t(k)];
    }
    Matrix carry;  // dL/dH[k] chained from layers above
    for (int k = l; k >= 1; --k) {
      Matrix gh = direct[size_t(k)];
      if (carry.size()) gh += carry;
      Matrix mask = (trace.pre_activation[size_t(k - 1)].array() > 0.0)
                        .cast<double>()
                        .matrix();
      Matrix gz = gh.cwiseProduct(mask);
      params.grad(enc.weight_name(k)) +=
          trace.aggregated[size_t(k - 1)].transpose() * gz;
      if (k > 1) carry = adj.apply(gz * params.value(enc.weight_name(k)).transpose());
    }
  }

  LossEval eval;
  eval.value = loss.value;
  eval.min_abs_preact = trace.min_abs_preact;
  return eval;
}

// Residual score RS(v_i) = mean squared distance between r_i and a shared
// sample of min(n_k, N) residual rows drawn without replacement; one sample
// set serves every node so all scores share a comparison basis.
inline ScoreVector residual_score(const Matrix& r, int n_k, uint64_t seed) {
  require(r.rows() >= 2, "residual_score: need at least 2 nodes");
  require(n_k >= 1, "residual_score: n_k must be >= 1");
  const int n = int(r.rows());
  const int m = std::min(n_k, n);
  Rng rng(mix_seed(seed, 0x2E51));
  std::vector<int> sample = rng.sample_without_replacement(n, m);

  ScoreVector out;
  out.values.assign(size_t(n), 0.0);
  for (int j : sample) {
    for (int i = 0; i < n; ++i)
      out.values[size_t(i)] += (r.row(i) - r.row(j)).squaredNorm();
  }
  for (double& v : out.values) v /= double(m);
  return out;
}

struct HighOrderTraining {
  ParamStore params;
  std::vector<double> epoch_loss;  // summed over source graphs
};

// Standalone trainer for the high-order branch alone: per epoch, per source
// graph, one contrastive step. The production path trains jointly with the
// affinity loss (see pipeline.hpp); this entry exists for isolation studies
// and tests.
inline HighOrderTraining train_high_order(const HighOrderEncoder& enc,
                                          const std::vector<Graph>& sources,
                                          int epochs, const AdamConfig& opt,
                                          uint64_t seed,
                                          const PairSampling& sampling = {}) {
  require(!sources.empty(), "train_high_order: no source graphs");
  std::vector<NormalizedAdjacency> adjs;
  std::vector<Matrix> feats;
  std::vector<std::vector<int>> normals, anomalies;
  for (const auto& g : sources) {
    require(g.has_labels(), "train_high_order: source graph '" + g.name +
                                "' has no labels");
    std::vector<int> p, a;
    for (int i = 0; i < g.num_nodes; ++i)
      (g.labels[size_t(i)] == 1 ? a : p).push_back(i);
    require(!p.empty() && !a.empty(),
            "train_high_order: source graph '" + g.name +
                "' must contain both classes");
    normals.push_back(std::move(p));
    anomalies.push_back(std::move(a));
    adjs.push_back(symmetric_normalize(g, /*add_self_loops=*/true));
    auto proj = fit_projection(g.features, enc.input_dim, seed);
    feats.push_back(apply_projection(proj, g.features));
  }

  std::vector<ParamShape> shapes;
  enc.register_params(shapes);
  HighOrderTraining result;
  result.params = init_params(shapes, seed);
  OptimizerState state = OptimizerState::init(result.params, opt);

  for (int e = 0; e < epochs; ++e) {
    double epoch_total = 0.0;
    for (size_t g = 0; g < sources.size(); ++g) {
      result.params.zero_grads();
      auto eval = high_order_loss_backward(enc, result.params, adjs[g], feats[g],
                                           normals[g], anomalies[g],
                                           /*want_grad=*/true, sampling);
      if (!std::isfinite(eval.value))
        throw NumericalError("train_high_order: non-finite loss at epoch " +
                             std::to_string(e));
      epoch_total += eval.value;
      adam_step(result.params, state);
    }
    result.epoch_loss.push_back(epoch_total);
  }
  return result;
}

}  // namespace taggad
