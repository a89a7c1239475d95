#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace taggad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Thrown on malformed input files (bad line syntax, bad JSON, truncation).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown on structurally invalid inputs (index ranges, shape mismatches,
// contract violations).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a numerical procedure leaves the finite domain (diverging
// training loss, non-finite gradients).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed. Used wherever one
// config-level seed has to drive several unrelated random choices.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

// Deterministic RNG. Distributions are hand-rolled on top of the raw 64-bit
// stream so that identical seeds give identical bytes on every platform
// (std::uniform_real_distribution et al. are implementation-defined).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(splitmix64(seed + 1)) {}

  uint64_t next_u64() {
    // xorshift128+ style step on a splitmix-expanded state
    state_ = splitmix64(state_);
    return state_;
  }

  // uniform in [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    double u1 = std::max(uniform(), 1e-300);
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // uniform integer in [0, n), rejection sampled to avoid modulo bias
  int uniform_int(int n) {
    if (n <= 0) throw ValidationError("Rng::uniform_int: n must be positive");
    uint64_t un = uint64_t(n);
    uint64_t limit = std::numeric_limits<uint64_t>::max() -
                     std::numeric_limits<uint64_t>::max() % un;
    uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return int(r % un);
  }

  // k distinct indices from [0, n), partial Fisher-Yates, result unsorted
  std::vector<int> sample_without_replacement(int n, int k) {
    if (k > n) throw ValidationError("sample_without_replacement: k > n");
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < k; ++i) {
      int j = i + uniform_int(n - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = int(v.size()) - 1; i > 0; --i) {
      int j = uniform_int(i + 1);
      std::swap(v[size_t(i)], v[size_t(j)]);
    }
  }

 private:
  uint64_t state_;
};

// Per-node anomaly scores of one channel, tagged with whether they have been
// min-max normalized to [0,1].
struct ScoreVector {
  std::vector<double> values;
  bool normalized = false;

  size_t size() const { return values.size(); }
};

// Min-max normalization to [0,1]; a constant vector maps to all-0.5 so that
// downstream fusion and KDE stay well-defined.
inline ScoreVector minmax_normalize(const ScoreVector& s) {
  ScoreVector out;
  out.normalized = true;
  out.values.resize(s.values.size());
  if (s.values.empty()) return out;
  auto [mn_it, mx_it] = std::minmax_element(s.values.begin(), s.values.end());
  double mn = *mn_it, mx = *mx_it;
  if (mx - mn <= 0.0) {
    std::fill(out.values.begin(), out.values.end(), 0.5);
    return out;
  }
  double inv = 1.0 / (mx - mn);
  for (size_t i = 0; i < s.values.size(); ++i)
    out.values[i] = (s.values[i] - mn) * inv;
  return out;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace taggad
