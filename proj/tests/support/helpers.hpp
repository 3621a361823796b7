#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "phonematch/matrix.hpp"
#include "phonematch/random.hpp"

namespace testutil {

inline phonematch::Matrix gaussian(std::size_t rows, std::size_t cols, phonematch::Rng& rng) {
  phonematch::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.normal();
  return m;
}

inline phonematch::EmbeddingMatrix gaussian_frames(std::size_t rows, std::size_t cols,
                                                   std::uint64_t seed) {
  phonematch::Rng rng(seed);
  return phonematch::EmbeddingMatrix(gaussian(rows, cols, rng));
}

// Haar-ish random orthogonal matrix from the QR of a Gaussian matrix.
inline phonematch::Matrix random_orthogonal(std::size_t d, phonematch::Rng& rng) {
  const phonematch::Matrix g = gaussian(d, d, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR();
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("phonematch_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
