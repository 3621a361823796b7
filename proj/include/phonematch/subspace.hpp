#pragma once

#include <cstddef>
#include <vector>

#include "phonematch/matrix.hpp"

namespace phonematch {

// Principal directions of a set of vectors. Row i of `directions` is the unit
// eigenvector with the i-th largest eigenvalue of the population covariance
// of the centered data; its largest-magnitude entry is positive.
struct SubspaceBasis {
  Matrix directions;
  Vector eigenvalues;
  Vector center;

  std::size_t size() const { return static_cast<std::size_t>(directions.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(directions.cols()); }
};

// Requires rows >= 2 and 1 <= top_k <= min(rows, dim).
SubspaceBasis pca(const EmbeddingMatrix& vectors, std::size_t top_k);

// One row per distinct group id, ascending by id; each the mean of its frames.
EmbeddingMatrix group_means(const EmbeddingMatrix& frames, const std::vector<std::size_t>& group_ids);

// |a_i . b_j| for the first `top` directions of each basis.
Matrix correlation_grid(const SubspaceBasis& a, const SubspaceBasis& b, std::size_t top);

// h - (h.v) v for every row. `direction` is renormalized.
EmbeddingMatrix collapse(const EmbeddingMatrix& frames, const Vector& direction);

// Sequentially collapses the first `count` directions of `basis`.
EmbeddingMatrix collapse_top(const EmbeddingMatrix& frames, const SubspaceBasis& basis,
                             std::size_t count);

}  // namespace phonematch
