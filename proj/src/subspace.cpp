#include "phonematch/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "phonematch/error.hpp"

namespace phonematch {

SubspaceBasis pca(const EmbeddingMatrix& vectors, std::size_t top_k) {
  const auto rows = vectors.rows();
  const auto dim = vectors.dim();
  if (rows < 2) throw InvalidArgument("pca needs at least two rows");
  if (top_k < 1 || top_k > std::min(rows, dim)) {
    throw InvalidArgument("pca: top_k must lie in [1, min(rows, dim)]");
  }

  SubspaceBasis basis;
  basis.center = vectors.data().colwise().mean().transpose();
  const Matrix centered = vectors.data().rowwise() - basis.center.transpose();
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(rows);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed", 0);

  // Eigen returns ascending eigenvalues.
  const auto d = static_cast<Eigen::Index>(dim);
  basis.directions.resize(static_cast<Eigen::Index>(top_k), d);
  basis.eigenvalues.resize(static_cast<Eigen::Index>(top_k));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(top_k); ++i) {
    const Eigen::Index src = d - 1 - i;
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    basis.directions.row(i) = v.transpose();
    basis.eigenvalues(i) = std::max(0.0, solver.eigenvalues()(src));
  }
  return basis;
}

EmbeddingMatrix group_means(const EmbeddingMatrix& frames, const std::vector<std::size_t>& group_ids) {
  if (frames.empty() || group_ids.empty()) throw EmptyInput("group_means: no frames");
  if (group_ids.size() != frames.rows()) {
    throw InvalidArgument("group_means: one group id per frame required");
  }
  std::map<std::size_t, Eigen::Index> slot;
  for (auto g : group_ids) slot.emplace(g, 0);
  Eigen::Index next = 0;
  for (auto& [g, s] : slot) s = next++;

  Matrix sums = Matrix::Zero(next, static_cast<Eigen::Index>(frames.dim()));
  std::vector<double> counts(static_cast<std::size_t>(next), 0.0);
  for (std::size_t t = 0; t < group_ids.size(); ++t) {
    const Eigen::Index s = slot[group_ids[t]];
    sums.row(s) += frames.row(t);
    counts[static_cast<std::size_t>(s)] += 1.0;
  }
  for (Eigen::Index s = 0; s < next; ++s) sums.row(s) /= counts[static_cast<std::size_t>(s)];
  return EmbeddingMatrix(std::move(sums), frames.role());
}

Matrix correlation_grid(const SubspaceBasis& a, const SubspaceBasis& b, std::size_t top) {
  if (a.dim() != b.dim()) throw InvalidArgument("correlation_grid: ambient dimensions differ");
  if (top > a.size() || top > b.size()) {
    throw InvalidArgument("correlation_grid: top exceeds available directions");
  }
  const auto t = static_cast<Eigen::Index>(top);
  return (a.directions.topRows(t) * b.directions.topRows(t).transpose()).cwiseAbs();
}

EmbeddingMatrix collapse(const EmbeddingMatrix& frames, const Vector& direction) {
  if (static_cast<std::size_t>(direction.size()) != frames.dim()) {
    throw InvalidArgument("collapse: direction dimension mismatch");
  }
  const double norm = direction.norm();
  if (!(norm > 0.0)) throw InvalidArgument("collapse: zero direction");
  const Vector v = direction / norm;
  const Vector proj = frames.data() * v;
  Matrix out = frames.data() - proj * v.transpose();
  return EmbeddingMatrix(std::move(out), frames.role());
}

EmbeddingMatrix collapse_top(const EmbeddingMatrix& frames, const SubspaceBasis& basis,
                             std::size_t count) {
  if (count > basis.size()) throw InvalidArgument("collapse_top: count exceeds basis size");
  EmbeddingMatrix out = frames;
  for (std::size_t i = 0; i < count; ++i) {
    out = collapse(out, basis.directions.row(static_cast<Eigen::Index>(i)).transpose());
  }
  return out;
}

}  // namespace phonematch
