#pragma once

#include "taggad/common.hpp"

namespace taggad {

// Mean-centered PCA projector into a fixed latent width. Inputs narrower than
// the latent width are zero-padded before fitting, so `basis` always has
// orthonormal columns over the padded dimension.
struct FeatureProjector {
  int input_dim = 0;
  int output_dim = 0;
  Vector mean;   // length padded_dim()
  Matrix basis;  // padded_dim() x output_dim, orthonormal columns

  int padded_dim() const { return std::max(input_dim, output_dim); }
};

namespace detail {

inline Matrix zero_pad_cols(const Matrix& x, int width) {
  if (int(x.cols()) == width) return x;
  Matrix out = Matrix::Zero(x.rows(), width);
  out.leftCols(x.cols()) = x;
  return out;
}

// Fixes the eigenvector sign ambiguity in a data-driven way: each component
// is flipped so the projected coordinate has positive skewness. Because the
// rule reads the data rather than the basis, domains with similar latent
// structure land in comparable orientations even when their raw feature
// spaces differ. Components with near-zero skewness fall back to the
// largest-|loading| convention.
inline void canonicalize_signs(Matrix& basis, const Matrix& centered) {
  Matrix projected = centered * basis;
  for (int c = 0; c < basis.cols(); ++c) {
    double m2 = projected.col(c).squaredNorm() / double(projected.rows());
    double m3 = projected.col(c).array().cube().sum() / double(projected.rows());
    double denom = std::pow(m2, 1.5);
    double skew = denom > 1e-12 ? m3 / denom : 0.0;
    bool flip;
    if (std::abs(skew) > 1e-3) {
      flip = skew < 0.0;
    } else {
      int idx = 0;
      basis.col(c).cwiseAbs().maxCoeff(&idx);
      flip = basis(idx, c) < 0.0;
    }
    if (flip) basis.col(c) = -basis.col(c);
  }
}

}  // namespace detail

// Fits PCA on one feature matrix. Every graph is fit independently (source
// graphs have distinct feature dimensionalities). The eigendecomposition is
// deterministic; `seed` is accepted for interface symmetry with the other
// fitters and does not currently influence the result.
inline FeatureProjector fit_projection(const Matrix& features, int output_dim,
                                       uint64_t seed = 0) {
  (void)seed;
  require(output_dim >= 1, "fit_projection: output_dim must be >= 1");
  require(features.rows() >= 1, "fit_projection: empty feature matrix");
  require(output_dim <= int(features.rows()),
          "fit_projection: output_dim (" + std::to_string(output_dim) +
              ") exceeds number of rows (" + std::to_string(features.rows()) + ")");
  require(all_finite(features), "fit_projection: non-finite feature entry");

  FeatureProjector p;
  p.input_dim = int(features.cols());
  p.output_dim = output_dim;
  const int width = p.padded_dim();

  Matrix x = detail::zero_pad_cols(features, width);
  p.mean = x.colwise().mean();
  Matrix centered = x.rowwise() - p.mean.transpose();
  Matrix cov = centered.transpose() * centered /
               double(std::max<Eigen::Index>(1, x.rows() - 1));

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  require(eig.info() == Eigen::Success, "fit_projection: eigendecomposition failed");
  // eigenvalues come back ascending; take the top output_dim in descending order
  p.basis.resize(width, output_dim);
  for (int c = 0; c < output_dim; ++c)
    p.basis.col(c) = eig.eigenvectors().col(width - 1 - c);
  detail::canonicalize_signs(p.basis, centered);
  return p;
}

inline std::vector<FeatureProjector> fit_projection(
    const std::vector<Matrix>& feature_matrices, int output_dim,
    uint64_t seed = 0) {
  require(!feature_matrices.empty(), "fit_projection: no feature matrices");
  std::vector<FeatureProjector> out;
  out.reserve(feature_matrices.size());
  for (size_t i = 0; i < feature_matrices.size(); ++i)
    out.push_back(fit_projection(feature_matrices[i], output_dim,
                                 mix_seed(seed, i)));
  return out;
}

// (features - mean) * basis, zero-padding the input when the projector was
// fit on a narrower dimension.
inline Matrix apply_projection(const FeatureProjector& p, const Matrix& features) {
  require(int(features.cols()) == p.input_dim,
          "apply_projection: features have " + std::to_string(features.cols()) +
              " columns, projector expects " + std::to_string(p.input_dim));
  Matrix x = detail::zero_pad_cols(features, p.padded_dim());
  Matrix out = (x.rowwise() - p.mean.transpose()) * p.basis;
  require(all_finite(out), "apply_projection: non-finite projection output");
  return out;
}

}  // namespace taggad
