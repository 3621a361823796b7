#include "phonematch/matrix.hpp"

#include <cmath>
#include <numeric>

#include "phonematch/error.hpp"

namespace phonematch {

EmbeddingMatrix::EmbeddingMatrix(Matrix data, MatrixRole role)
    : data_(std::move(data)), role_(role) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw InvalidArgument("embedding matrix needs at least one row and one column");
  }
  if (!data_.allFinite()) throw DataError("embedding matrix contains non-finite values");
}

UnigramDistribution::UnigramDistribution(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) throw EmptyInput("unigram distribution is empty");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DataError("unigram weight must be finite and >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DataError("unigram weights must sum to 1");
}

UnigramDistribution UnigramDistribution::from_counts(const std::vector<double>& counts) {
  if (counts.empty()) throw EmptyInput("no counts");
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (!(total > 0.0)) throw EmptyInput("counts sum to zero");
  std::vector<double> w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0.0) throw DataError("negative count");
    w[i] = counts[i] / total;
  }
  return UnigramDistribution(std::move(w));
}

Vector UnigramDistribution::as_vector() const {
  return Eigen::Map<const Vector>(weights_.data(), static_cast<Eigen::Index>(weights_.size()));
}

}  // namespace phonematch
