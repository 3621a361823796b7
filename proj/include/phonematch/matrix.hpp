#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace phonematch {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class MatrixRole { frames, centroids, phone_embeddings, codebook };

// Dense row-major matrix of row vectors. Rows are frames, centroids, symbol
// embeddings or codewords depending on `role`. Values are finite.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(Matrix data, MatrixRole role = MatrixRole::frames);

  std::size_t rows() const { return static_cast<std::size_t>(data_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(data_.cols()); }
  bool empty() const { return data_.size() == 0; }

  const Matrix& data() const { return data_; }
  MatrixRole role() const { return role_; }

  auto row(std::size_t i) const { return data_.row(static_cast<Eigen::Index>(i)); }

  EmbeddingMatrix with_role(MatrixRole role) const { return EmbeddingMatrix(data_, role); }

 private:
  Matrix data_;
  MatrixRole role_ = MatrixRole::frames;
};

// Probability vector over symbols or clusters.
class UnigramDistribution {
 public:
  UnigramDistribution() = default;
  // Validates non-negativity and unit sum (within 1e-9).
  explicit UnigramDistribution(std::vector<double> weights);

  // Normalizes non-negative counts; throws EmptyInput when they sum to zero.
  static UnigramDistribution from_counts(const std::vector<double>& counts);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }
  Vector as_vector() const;

 private:
  std::vector<double> weights_;
};

}  // namespace phonematch
