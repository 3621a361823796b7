#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "phonematch/matrix.hpp"

namespace phonematch {

// Squared Euclidean distance matrices of the two spaces.
struct DistancePair {
  Matrix S;        // n x n, centroids
  Matrix S_prime;  // m x m, symbol embeddings
};

// Transport plan between centroids (rows) and symbols (columns).
struct CouplingMatrix {
  Matrix gamma;
  UnigramDistribution p;
  UnigramDistribution q;
  double epsilon = 0.0;
  std::size_t iterations_run = 0;
  // Total Sinkhorn sweeps over all outer iterations.
  std::size_t sinkhorn_sweeps = 0;
  // Unregularized GW cost after every outer iteration.
  std::vector<double> objective_trace;

  std::size_t rows() const { return static_cast<std::size_t>(gamma.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(gamma.cols()); }
  // Sum of per-row entropies, -sum_ij G_ij log G_ij.
  double entropy() const;
};

// Orthogonal d x d map; a centroid c is projected as A^T c.
struct AlignmentMap {
  Matrix A;
};

struct GwOptions {
  double epsilon = 0.0005;
  std::size_t outer_iterations = 1000;
  // Sinkhorn sweeps per outer step; fewer once the row marginals are within
  // `marginal_tolerance`. Each projection ends with a rounding step that makes
  // the plan exactly feasible.
  std::size_t inner_iterations = 50;
  double marginal_tolerance = 1e-13;
  // Outer loop stops once the coupling moves less than this (max-norm).
  double convergence_tolerance = 1e-9;
  // Extra solves from random feasible couplings; the lowest final cost wins.
  std::size_t restarts = 0;
  std::uint64_t seed = 0;
};

// Named regularizer presets.
inline constexpr double kEpsilonApc = 0.0005;
inline constexpr double kEpsilonCpc = 0.01;

// Subtracts the mean row, then scales each row to unit norm. Rows that vanish
// after centering stay zero.
EmbeddingMatrix preprocess(const EmbeddingMatrix& vectors);

DistancePair distance_matrices(const EmbeddingMatrix& centroids, const EmbeddingMatrix& embeddings);

// sum_ijkl (S_ik - S'_jl)^2 G_ij G_kl.
double gw_cost(const DistancePair& dp, const Matrix& gamma);

// The GW loss matrix for the current coupling with fixed marginals p and q.
Matrix gw_loss_matrix(const DistancePair& dp, const Vector& p, const Vector& q, const Matrix& gamma);

// Entropic GW: alternates loss-matrix updates with Sinkhorn projections,
// starting from the product coupling p q^T.
CouplingMatrix entropic_gw(const DistancePair& dp, const UnigramDistribution& p,
                           const UnigramDistribution& q, const GwOptions& options);

// Row-wise argmax of the coupling, ties to the lowest column.
std::vector<std::uint32_t> extract_matching(const CouplingMatrix& coupling);
std::vector<std::uint32_t> extract_matching(const Matrix& gamma);

// With C (d x n) and Y (d x m) holding vectors as columns, A = U V^T where
// U S V^T is the SVD of C G Y^T.
AlignmentMap procrustes(const EmbeddingMatrix& centroids, const EmbeddingMatrix& embeddings,
                        const Matrix& gamma);

// Rows A^T c_i.
EmbeddingMatrix project(const AlignmentMap& map, const EmbeddingMatrix& centroids);

}  // namespace phonematch
