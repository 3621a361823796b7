#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "phonematch/matrix.hpp"

namespace phonematch {

using ClusterId = std::uint32_t;

struct CentroidSet {
  EmbeddingMatrix centroids;
  std::vector<ClusterId> assignments;
  UnigramDistribution mass;
  double inertia = 0.0;
  // Inertia after every Lloyd update, in order.
  std::vector<double> inertia_trace;
  std::size_t epochs_run = 0;
};

// Nearest centroid under squared Euclidean distance; ties go to the lowest index.
std::vector<ClusterId> assign(const EmbeddingMatrix& frames, const EmbeddingMatrix& centroids);

// k-means++ seeding followed by up to `epochs` Lloyd iterations. Stops early
// once assignments stop changing. Empty clusters are reseeded to the frame
// farthest from its centroid.
CentroidSet kmeans(const EmbeddingMatrix& frames, std::size_t k, std::size_t epochs,
                   std::uint64_t seed);

// Best of `restarts` kmeans runs by final inertia (earliest wins ties). Run 0
// uses `seed` itself, so restarts = 1 equals kmeans(frames, k, epochs, seed).
CentroidSet kmeans_restarts(const EmbeddingMatrix& frames, std::size_t k, std::size_t epochs,
                            std::uint64_t seed, std::size_t restarts);

// Lloyd iterations from the given initial centroids.
CentroidSet kmeans_from(const EmbeddingMatrix& frames, const EmbeddingMatrix& initial,
                        std::size_t epochs);

// k-means++ initial centroids.
EmbeddingMatrix kmeanspp_init(const EmbeddingMatrix& frames, std::size_t k, std::uint64_t seed);

// Sum of squared distances from each frame to its assigned centroid.
double inertia(const EmbeddingMatrix& frames, const Matrix& centroids,
               const std::vector<ClusterId>& assignments);

// Projects features through a Glorot-uniform (dim x code_dim) matrix, then
// assigns each projection to the nearest unit-Gaussian codeword.
struct RandomProjection {
  Matrix projection;
  CentroidSet codes;
};

RandomProjection random_projection_quantize(const EmbeddingMatrix& features,
                                            std::size_t codebook_size, std::size_t code_dim,
                                            std::uint64_t seed);

}  // namespace phonematch
