#include "phonematch/cluster.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "phonematch/error.hpp"
#include "phonematch/random.hpp"

namespace phonematch {

namespace {

double squared_distance(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

std::vector<ClusterId> assign_rows(const Matrix& frames, const Matrix& centroids) {
  std::vector<ClusterId> out(static_cast<std::size_t>(frames.rows()));
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    double best = std::numeric_limits<double>::infinity();
    ClusterId arg = 0;
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const double d = squared_distance(frames, t, centroids, c);
      if (d < best) {
        best = d;
        arg = static_cast<ClusterId>(c);
      }
    }
    out[static_cast<std::size_t>(t)] = arg;
  }
  return out;
}

UnigramDistribution mass_of(const std::vector<ClusterId>& assignments, std::size_t k) {
  std::vector<double> counts(k, 0.0);
  for (auto z : assignments) counts[z] += 1.0;
  return UnigramDistribution::from_counts(counts);
}

}  // namespace

std::vector<ClusterId> assign(const EmbeddingMatrix& frames, const EmbeddingMatrix& centroids) {
  if (frames.dim() != centroids.dim()) throw InvalidArgument("assign: dimension mismatch");
  return assign_rows(frames.data(), centroids.data());
}

double inertia(const EmbeddingMatrix& frames, const Matrix& centroids,
               const std::vector<ClusterId>& assignments) {
  double total = 0.0;
  for (std::size_t t = 0; t < assignments.size(); ++t) {
    total += squared_distance(frames.data(), static_cast<Eigen::Index>(t), centroids,
                              static_cast<Eigen::Index>(assignments[t]));
  }
  return total;
}

EmbeddingMatrix kmeanspp_init(const EmbeddingMatrix& frames, std::size_t k, std::uint64_t seed) {
  const auto n = frames.rows();
  if (k < 1 || k > n) throw InvalidArgument("kmeans: k must lie in [1, rows]");
  const Matrix& x = frames.data();
  Rng rng(seed);
  Matrix centers(static_cast<Eigen::Index>(k), x.cols());
  centers.row(0) = x.row(static_cast<Eigen::Index>(rng.below(n)));

  std::vector<double> d2(n);
  for (std::size_t t = 0; t < n; ++t) d2[t] = (x.row(static_cast<Eigen::Index>(t)) - centers.row(0)).squaredNorm();

  for (Eigen::Index c = 1; c < static_cast<Eigen::Index>(k); ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t t = 0; t < n; ++t) {
        acc += d2[t];
        if (acc > target && d2[t] > 0.0) {
          pick = t;
          break;
        }
      }
    } else {
      // All remaining points coincide with chosen centers.
      pick = rng.below(n);
    }
    centers.row(c) = x.row(static_cast<Eigen::Index>(pick));
    for (std::size_t t = 0; t < n; ++t) {
      d2[t] = std::min(d2[t], (x.row(static_cast<Eigen::Index>(t)) - centers.row(c)).squaredNorm());
    }
  }
  return EmbeddingMatrix(std::move(centers), MatrixRole::centroids);
}

CentroidSet kmeans_from(const EmbeddingMatrix& frames, const EmbeddingMatrix& initial,
                        std::size_t epochs) {
  if (epochs < 1) throw InvalidArgument("kmeans: epochs must be >= 1");
  if (initial.dim() != frames.dim()) throw InvalidArgument("kmeans: dimension mismatch");
  const auto k = initial.rows();
  if (k > frames.rows()) throw InvalidArgument("kmeans: k must not exceed rows");
  const Matrix& x = frames.data();
  const auto n = frames.rows();

  Matrix centers = initial.data();
  std::vector<ClusterId> z;
  CentroidSet result;

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    auto next = assign_rows(x, centers);
    if (epoch > 0 && next == z) break;
    z = std::move(next);

    Matrix sums = Matrix::Zero(centers.rows(), centers.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t t = 0; t < n; ++t) {
      sums.row(z[t]) += x.row(static_cast<Eigen::Index>(t));
      ++counts[z[t]];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      if (counts[c] > 0) {
        centers.row(ci) = sums.row(ci) / static_cast<double>(counts[c]);
        continue;
      }
      // Reseeded below, once every non-empty centroid has moved.
      centers.row(ci).setConstant(std::numeric_limits<double>::quiet_NaN());
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      double worst = -1.0;
      std::size_t arg = 0;
      for (std::size_t t = 0; t < n; ++t) {
        if (taken[t]) continue;
        const double d = squared_distance(x, static_cast<Eigen::Index>(t), centers, z[t]);
        if (d > worst) {
          worst = d;
          arg = t;
        }
      }
      taken[arg] = true;
      centers.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(arg));
    }
    result.inertia_trace.push_back(inertia(frames, centers, z));
    result.epochs_run = epoch + 1;
  }

  result.inertia = result.inertia_trace.back();
  result.mass = mass_of(z, k);
  result.assignments = std::move(z);
  result.centroids = EmbeddingMatrix(std::move(centers), MatrixRole::centroids);
  return result;
}

CentroidSet kmeans(const EmbeddingMatrix& frames, std::size_t k, std::size_t epochs,
                   std::uint64_t seed) {
  if (epochs < 1) throw InvalidArgument("kmeans: epochs must be >= 1");
  return kmeans_from(frames, kmeanspp_init(frames, k, seed), epochs);
}

CentroidSet kmeans_restarts(const EmbeddingMatrix& frames, std::size_t k, std::size_t epochs,
                            std::uint64_t seed, std::size_t restarts) {
  if (restarts < 1) throw InvalidArgument("kmeans: restarts must be >= 1");
  CentroidSet best = kmeans(frames, k, epochs, seed);
  for (std::size_t r = 1; r < restarts; ++r) {
    CentroidSet next = kmeans(frames, k, epochs, derive_seed(seed, "kmeans/restart/" + std::to_string(r)));
    if (next.inertia < best.inertia) best = std::move(next);
  }
  return best;
}

RandomProjection random_projection_quantize(const EmbeddingMatrix& features,
                                            std::size_t codebook_size, std::size_t code_dim,
                                            std::uint64_t seed) {
  if (codebook_size < 1) throw InvalidArgument("random projection: codebook_size must be >= 1");
  if (code_dim < 1) throw InvalidArgument("random projection: code_dim must be >= 1");
  Rng rng(seed);
  const auto fan_in = static_cast<double>(features.dim());
  const auto fan_out = static_cast<double>(code_dim);
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));

  RandomProjection out;
  out.projection.resize(static_cast<Eigen::Index>(features.dim()), static_cast<Eigen::Index>(code_dim));
  for (Eigen::Index i = 0; i < out.projection.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.projection.cols(); ++j) out.projection(i, j) = rng.uniform(-limit, limit);
  }
  Matrix codebook(static_cast<Eigen::Index>(codebook_size), static_cast<Eigen::Index>(code_dim));
  for (Eigen::Index i = 0; i < codebook.rows(); ++i) {
    for (Eigen::Index j = 0; j < codebook.cols(); ++j) codebook(i, j) = rng.normal();
  }

  const EmbeddingMatrix projected(features.data() * out.projection, MatrixRole::frames);
  out.codes.assignments = assign_rows(projected.data(), codebook);
  out.codes.inertia = inertia(projected, codebook, out.codes.assignments);
  out.codes.inertia_trace = {out.codes.inertia};
  out.codes.mass = mass_of(out.codes.assignments, codebook_size);
  out.codes.centroids = EmbeddingMatrix(std::move(codebook), MatrixRole::codebook);
  return out;
}

}  // namespace phonematch
