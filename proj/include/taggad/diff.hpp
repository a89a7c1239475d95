#pragma once

#include <functional>
#include <map>

#include "taggad/common.hpp"

namespace taggad {

struct ParamShape {
  std::string name;
  int rows = 0;
  int cols = 0;
};

// Named parameter matrices plus same-shape gradient accumulators. Owned
// exclusively by one training loop; read-only once training freezes it.
struct ParamStore {
  std::vector<std::string> names;  // insertion order, drives deterministic iteration
  std::map<std::string, Matrix> values;
  std::map<std::string, Matrix> grads;
  uint64_t seed = 0;

  bool has(const std::string& name) const { return values.count(name) != 0; }

  const Matrix& value(const std::string& name) const {
    auto it = values.find(name);
    require(it != values.end(), "ParamStore: unknown parameter '" + name + "'");
    return it->second;
  }
  Matrix& value(const std::string& name) {
    auto it = values.find(name);
    require(it != values.end(), "ParamStore: unknown parameter '" + name + "'");
    return it->second;
  }
  Matrix& grad(const std::string& name) {
    auto it = grads.find(name);
    require(it != grads.end(), "ParamStore: unknown parameter '" + name + "'");
    return it->second;
  }
  const Matrix& grad(const std::string& name) const {
    auto it = grads.find(name);
    require(it != grads.end(), "ParamStore: unknown parameter '" + name + "'");
    return it->second;
  }

  void zero_grads() {
    for (auto& [name, g] : grads) g.setZero();
  }

  bool values_finite() const {
    for (const auto& [name, v] : values)
      if (!v.allFinite()) return false;
    return true;
  }
  bool grads_finite() const {
    for (const auto& [name, g] : grads)
      if (!g.allFinite()) return false;
    return true;
  }
};

// Xavier-uniform initialization with bound sqrt(6/(rows+cols)); the draw
// order follows the shape list so the same seed reproduces the same store.
inline ParamStore init_params(const std::vector<ParamShape>& shapes, uint64_t seed) {
  ParamStore p;
  p.seed = seed;
  Rng rng(mix_seed(seed, 0x1A17));
  for (const auto& s : shapes) {
    require(s.rows > 0 && s.cols > 0,
            "init_params: non-positive dimensions for '" + s.name + "'");
    require(!p.has(s.name), "init_params: duplicate parameter name '" + s.name + "'");
    double bound = std::sqrt(6.0 / double(s.rows + s.cols));
    Matrix m(s.rows, s.cols);
    for (int i = 0; i < s.rows; ++i)
      for (int j = 0; j < s.cols; ++j) m(i, j) = rng.uniform(-bound, bound);
    p.names.push_back(s.name);
    p.values.emplace(s.name, std::move(m));
    p.grads.emplace(s.name, Matrix::Zero(s.rows, s.cols));
  }
  return p;
}

struct AdamConfig {
  double learning_rate = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  AdamConfig cfg;
  long step = 0;
  std::map<std::string, Matrix> m;  // first moments
  std::map<std::string, Matrix> v;  // second moments

  static OptimizerState init(const ParamStore& p, const AdamConfig& cfg) {
    OptimizerState s;
    s.cfg = cfg;
    for (const auto& name : p.names) {
      const Matrix& val = p.value(name);
      s.m.emplace(name, Matrix::Zero(val.rows(), val.cols()));
      s.v.emplace(name, Matrix::Zero(val.rows(), val.cols()));
    }
    return s;
  }
};

// Standard Adam update with bias correction; zeroes the gradients afterwards.
inline void adam_step(ParamStore& p, OptimizerState& s) {
  require(p.grads_finite(), "adam_step: non-finite gradient");
  ++s.step;
  const auto& c = s.cfg;
  const double bc1 = 1.0 - std::pow(c.beta1, double(s.step));
  const double bc2 = 1.0 - std::pow(c.beta2, double(s.step));
  for (const auto& name : p.names) {
    Matrix& g = p.grad(name);
    Matrix& m = s.m.at(name);
    Matrix& v = s.v.at(name);
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    Matrix m_hat = m / bc1;
    Matrix v_hat = v / bc2;
    p.value(name).array() -=
        c.learning_rate * m_hat.array() / (v_hat.array().sqrt() + c.epsilon);
    g.setZero();
  }
  require(p.values_finite(), "adam_step: non-finite parameter after update");
}

// One loss evaluation. min_abs_preact reports how close any ReLU
// pre-activation came to its kink, so the finite-difference checker can skip
// coordinates whose perturbed evaluations are unreliable.
struct LossEval {
  double value = 0.0;
  double min_abs_preact = std::numeric_limits<double>::infinity();
};

// fn(params, want_grad): evaluates the loss at `params`; when want_grad is
// set it must also accumulate analytic gradients into params.grads.
using LossFn = std::function<LossEval(ParamStore&, bool want_grad)>;

struct GradCheckReport {
  int checked = 0;
  int skipped_kink = 0;   // perturbed pre-activation within 1e-6 of zero
  int skipped_small = 0;  // both analytic and FD below the absolute floor
  double max_rel_error = 0.0;
  std::string worst_coord;
  bool passed = false;
};

// Central finite differences with step 1e-4 over >= min_coords randomly
// sampled parameter coordinates. Relative error per coordinate is
// |analytic - fd| / max(|analytic|, |fd|); coordinates where both sides sit
// below an absolute floor tied to the loss magnitude count as agreeing.
inline GradCheckReport backward_check(const LossFn& fn, ParamStore& params,
                                      double tol, int min_coords = 32,
                                      uint64_t seed = 0, double fd_step = 1e-4) {
  params.zero_grads();
  LossEval center = fn(params, true);
  if (!std::isfinite(center.value))
    throw NumericalError("backward_check: non-finite loss at center point");
  std::map<std::string, Matrix> analytic;
  for (const auto& name : params.names) analytic.emplace(name, params.grad(name));

  int64_t total = 0;
  for (const auto& name : params.names) total += params.value(name).size();
  int coords = int(std::min<int64_t>(total, min_coords));

  Rng rng(mix_seed(seed, 0xFDC4));
  GradCheckReport report;
  const double abs_floor = 1e-7 * std::max(1.0, std::abs(center.value));

  for (int c = 0; c < coords; ++c) {
    // pick a uniformly random coordinate across all parameters
    int64_t flat = (int64_t(rng.next_u64() % uint64_t(total)));
    std::string pname;
    int64_t offset = flat;
    for (const auto& name : params.names) {
      int64_t sz = params.value(name).size();
      if (offset < sz) {
        pname = name;
        break;
      }
      offset -= sz;
    }
    Matrix& w = params.value(pname);
    double* entry = w.data() + offset;
    const double saved = *entry;

    *entry = saved + fd_step;
    LossEval up = fn(params, false);
    *entry = saved - fd_step;
    LossEval down = fn(params, false);
    *entry = saved;

    if (!std::isfinite(up.value) || !std::isfinite(down.value))
      throw NumericalError("backward_check: non-finite loss at perturbed point");
    if (up.min_abs_preact < 1e-6 || down.min_abs_preact < 1e-6) {
      ++report.skipped_kink;
      continue;
    }
    double fd = (up.value - down.value) / (2.0 * fd_step);
    double an = *(analytic.at(pname).data() + offset);
    double err = std::abs(an - fd);
    ++report.checked;
    if (err <= abs_floor) {
      ++report.skipped_small;
      continue;
    }
    double rel = err / std::max(std::abs(an), std::abs(fd));
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_coord = pname + "[" + std::to_string(offset) + "]";
    }
  }
  // restore analytic gradients for the caller
  for (const auto& name : params.names) params.grad(name) = analytic.at(name);
  report.passed = report.max_rel_error <= tol;
  return report;
}

}  // namespace taggad
