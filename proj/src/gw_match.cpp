#include "phonematch/gw_match.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "phonematch/error.hpp"
#include "phonematch/random.hpp"

namespace phonematch {

namespace {

// exp(-L/eps) is evaluated directly only while the exponent range stays in
// double range; beyond this the scalings are carried in the log domain.
constexpr double kMaxKernelExponent = 700.0;

std::vector<Eigen::Index> support(const Vector& w) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) > 0.0) idx.push_back(i);
  }
  return idx;
}

Matrix select(const Matrix& m, const std::vector<Eigen::Index>& rows,
              const std::vector<Eigen::Index>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(rows[i], cols[j]);
    }
  }
  return out;
}

Vector select(const Vector& v, const std::vector<Eigen::Index>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
  return out;
}

// Sinkhorn projection of exp(-L/eps) onto the transport polytope U(p, q).
// Scalings persist across calls as warm starts.
class SinkhornProjector {
 public:
  SinkhornProjector(Vector p, Vector q, const GwOptions& opt)
      : p_(std::move(p)), q_(std::move(q)), log_p_(p_.array().log()), log_q_(q_.array().log()),
        opt_(opt), b_(Vector::Ones(q_.size())), g_(Vector::Zero(q_.size())) {}

  Matrix project(const Matrix& L, std::size_t outer) {
    const double lmin = L.minCoeff();
    const double span = (L.maxCoeff() - lmin) / opt_.epsilon;
    Matrix gamma = span <= kMaxKernelExponent ? project_kernel(L, lmin, outer) : project_log(L);
    if (!gamma.allFinite()) throw NumericalError("entropic_gw: non-finite coupling", outer);
    round_to_marginals(gamma);
    const double err = std::max((gamma.rowwise().sum() - p_).cwiseAbs().maxCoeff(),
                                (gamma.colwise().sum().transpose() - q_).cwiseAbs().maxCoeff());
    if (!gamma.allFinite() || err > 1e-6) {
      throw NumericalError("entropic_gw: coupling misses the marginals by " + std::to_string(err), outer);
    }
    return gamma;
  }

  std::size_t sweeps() const { return sweeps_; }

  // Moves an approximate plan onto U(p, q): scale rows down to p, columns
  // down to q, then spread the remaining deficit as a rank-one term.
  void round_to_marginals(Matrix& gamma) const {
    const Vector r = gamma.rowwise().sum();
    for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
      if (r(i) > p_(i)) gamma.row(i) *= p_(i) / r(i);
    }
    const Vector c = gamma.colwise().sum().transpose();
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
      if (c(j) > q_(j)) gamma.col(j) *= q_(j) / c(j);
    }
    const Vector err_r = (p_ - gamma.rowwise().sum()).cwiseMax(0.0);
    const Vector err_c = (q_ - gamma.colwise().sum().transpose()).cwiseMax(0.0);
    const double mass = err_c.sum();
    if (mass > 0.0) gamma.noalias() += err_r * err_c.transpose() / mass;
  }

 private:
  Matrix project_kernel(const Matrix& L, double lmin, std::size_t) {
    const Matrix K = (-(L.array() - lmin) / opt_.epsilon).exp().matrix();
    if (!b_.allFinite() || b_.minCoeff() <= 0.0) b_.setOnes();
    Vector a(p_.size());
    for (std::size_t it = 0; it < opt_.inner_iterations; ++it) {
      ++sweeps_;
      a = p_.cwiseQuotient(K * b_);
      b_ = q_.cwiseQuotient(K.transpose() * a);
      if (!a.allFinite() || !b_.allFinite() || b_.minCoeff() <= 0.0) {
        // Kernel underflow; redo this projection in the log domain.
        b_.setOnes();
        return project_log(L);
      }
      if ((a.cwiseProduct(K * b_) - p_).cwiseAbs().maxCoeff() <= opt_.marginal_tolerance) break;
    }
    return a.asDiagonal() * K * b_.asDiagonal();
  }

  Matrix project_log(const Matrix& L) {
    const double eps = opt_.epsilon;
    const auto n = L.rows();
    const auto m = L.cols();
    Vector f(n);
    auto update_f = [&] {
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = (g_.transpose() - L.row(i)).array() / eps;
        const double mx = row.maxCoeff();
        f(i) = eps * (log_p_(i) - mx - std::log((row - mx).exp().sum()));
      }
    };
    auto update_g = [&] {
      for (Eigen::Index j = 0; j < m; ++j) {
        const auto col = (f - L.col(j)).array() / eps;
        const double mx = col.maxCoeff();
        g_(j) = eps * (log_q_(j) - mx - std::log((col - mx).exp().sum()));
      }
    };
    auto row_error = [&] {
      double err = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = (f(i) + g_.transpose().array() - L.row(i).array()) / eps;
        err = std::max(err, std::abs(row.exp().sum() - p_(i)));
      }
      return err;
    };
    if (!g_.allFinite()) g_.setZero();
    for (std::size_t it = 0; it < opt_.inner_iterations; ++it) {
      ++sweeps_;
      update_f();
      update_g();
      if ((it + 1) % 10 == 0 && row_error() <= opt_.marginal_tolerance) break;
    }
    Matrix gamma(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) gamma(i, j) = std::exp((f(i) + g_(j) - L(i, j)) / eps);
    }
    return gamma;
  }

  std::size_t sweeps_ = 0;
  Vector p_, q_, log_p_, log_q_;
  const GwOptions& opt_;
  Vector b_;  // kernel-domain column scaling
  Vector g_;  // log-domain column potential
};

// Random feasible coupling: a positive random matrix scaled onto U(p, q).
Matrix random_coupling(const Vector& p, const Vector& q, Rng& rng) {
  Matrix r(p.size(), q.size());
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    for (Eigen::Index j = 0; j < r.cols(); ++j) r(i, j) = rng.uniform(0.1, 1.0);
  }
  Vector b = Vector::Ones(q.size());
  Vector a(p.size());
  for (int it = 0; it < 10000; ++it) {
    a = p.cwiseQuotient(r * b);
    b = q.cwiseQuotient(r.transpose() * a);
    if ((a.cwiseProduct(r * b) - p).cwiseAbs().maxCoeff() < 1e-13) break;
  }
  return a.asDiagonal() * r * b.asDiagonal();
}

struct Solve {
  Matrix gamma;
  std::size_t iterations = 0;
  std::size_t sweeps = 0;
  std::vector<double> trace;
};

Solve solve_from(const DistancePair& dp, const Vector& p, const Vector& q, Matrix gamma,
                 const GwOptions& opt) {
  SinkhornProjector projector(p, q, opt);
  Solve s;
  for (std::size_t outer = 0; outer < opt.outer_iterations; ++outer) {
    const Matrix L = gw_loss_matrix(dp, p, q, gamma);
    Matrix next = projector.project(L, outer);
    const double moved = (next - gamma).cwiseAbs().maxCoeff();
    gamma = std::move(next);
    s.trace.push_back(gw_cost(dp, gamma));
    s.iterations = outer + 1;
    if (moved < opt.convergence_tolerance) break;
  }
  s.gamma = std::move(gamma);
  s.sweeps = projector.sweeps();
  return s;
}

}  // namespace

double CouplingMatrix::entropy() const {
  double h = 0.0;
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
      const double g = gamma(i, j);
      if (g > 0.0) h -= g * std::log(g);
    }
  }
  return h;
}

EmbeddingMatrix preprocess(const EmbeddingMatrix& vectors) {
  const Matrix& x = vectors.data();
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  Matrix out = x.rowwise() - x.colwise().mean();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm <= 1e-12 * scale) {
      out.row(i).setZero();
    } else {
      out.row(i) /= norm;
    }
  }
  return EmbeddingMatrix(std::move(out), vectors.role());
}

namespace {

Matrix pairwise_sq(const Matrix& x) {
  const auto n = x.rows();
  Matrix s = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      s(i, j) = s(j, i) = (x.row(i) - x.row(j)).squaredNorm();
    }
  }
  return s;
}

}  // namespace

DistancePair distance_matrices(const EmbeddingMatrix& centroids, const EmbeddingMatrix& embeddings) {
  return {pairwise_sq(centroids.data()), pairwise_sq(embeddings.data())};
}

Matrix gw_loss_matrix(const DistancePair& dp, const Vector& p, const Vector& q, const Matrix& gamma) {
  const Vector row_term = dp.S.cwiseAbs2() * p;
  const Vector col_term = dp.S_prime.cwiseAbs2() * q;
  Matrix L = -2.0 * dp.S * gamma * dp.S_prime.transpose();
  L.colwise() += row_term;
  L.rowwise() += col_term.transpose();
  return L;
}

double gw_cost(const DistancePair& dp, const Matrix& gamma) {
  const Vector r = gamma.rowwise().sum();
  const Vector c = gamma.colwise().sum().transpose();
  const double a = r.dot(dp.S.cwiseAbs2() * r);
  const double b = c.dot(dp.S_prime.cwiseAbs2() * c);
  const double cross = (dp.S * gamma * dp.S_prime.transpose()).cwiseProduct(gamma).sum();
  return a + b - 2.0 * cross;
}

CouplingMatrix entropic_gw(const DistancePair& dp, const UnigramDistribution& p,
                           const UnigramDistribution& q, const GwOptions& options) {
  if (!(options.epsilon > 0.0)) throw InvalidArgument("entropic_gw: epsilon must be > 0");
  if (options.outer_iterations < 1) throw InvalidArgument("entropic_gw: outer_iterations must be >= 1");
  const auto n = dp.S.rows();
  const auto m = dp.S_prime.rows();
  if (dp.S.cols() != n || dp.S_prime.cols() != m) {
    throw InvalidArgument("entropic_gw: distance matrices must be square");
  }
  if (static_cast<Eigen::Index>(p.size()) != n || static_cast<Eigen::Index>(q.size()) != m) {
    throw InvalidArgument("entropic_gw: marginal sizes do not match the distance matrices");
  }

  // Zero-mass rows and columns stay zero; solve on the support.
  const Vector pv = p.as_vector();
  const Vector qv = q.as_vector();
  const auto rows = support(pv);
  const auto cols = support(qv);
  const DistancePair sub{select(dp.S, rows, rows), select(dp.S_prime, cols, cols)};
  const Vector ps = select(pv, rows);
  const Vector qs = select(qv, cols);

  Solve best = solve_from(sub, ps, qs, ps * qs.transpose(), options);
  Rng rng(options.seed);
  for (std::size_t r = 0; r < options.restarts; ++r) {
    Solve s = solve_from(sub, ps, qs, random_coupling(ps, qs, rng), options);
    if (s.trace.back() < best.trace.back()) best = std::move(s);
  }

  CouplingMatrix out{Matrix::Zero(n, m), p, q, options.epsilon, best.iterations, best.sweeps,
                     std::move(best.trace)};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out.gamma(rows[i], cols[j]) = best.gamma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

std::vector<std::uint32_t> extract_matching(const Matrix& gamma) {
  std::vector<std::uint32_t> out(static_cast<std::size_t>(gamma.rows()));
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < gamma.cols(); ++j) {
      if (gamma(i, j) > gamma(i, arg)) arg = j;
    }
    out[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(arg);
  }
  return out;
}

std::vector<std::uint32_t> extract_matching(const CouplingMatrix& coupling) {
  return extract_matching(coupling.gamma);
}

AlignmentMap procrustes(const EmbeddingMatrix& centroids, const EmbeddingMatrix& embeddings,
                        const Matrix& gamma) {
  if (centroids.dim() != embeddings.dim()) {
    throw InvalidArgument("procrustes: both spaces must share the dimension");
  }
  if (static_cast<std::size_t>(gamma.rows()) != centroids.rows() ||
      static_cast<std::size_t>(gamma.cols()) != embeddings.rows()) {
    throw InvalidArgument("procrustes: coupling shape must be centroids x embeddings");
  }
  // Rows are vectors here, so C G Y^T = X_c^T G X_y.
  const Eigen::MatrixXd cross = centroids.data().transpose() * gamma * embeddings.data();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {svd.matrixU() * svd.matrixV().transpose()};
}

EmbeddingMatrix project(const AlignmentMap& map, const EmbeddingMatrix& centroids) {
  if (static_cast<std::size_t>(map.A.rows()) != centroids.dim()) {
    throw InvalidArgument("project: dimension mismatch");
  }
  return EmbeddingMatrix(centroids.data() * map.A, MatrixRole::centroids);
}

}  // namespace phonematch
