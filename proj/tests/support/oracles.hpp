#pragma once

// Reference computations for tests. Everything here is written with plain
// loops over std::vector so it shares no code path with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

template <typename M>
Rows to_rows(const M& m) {
  Rows r(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = 0; j < r[i].size(); ++j) {
      r[i][j] = m(static_cast<long>(i), static_cast<long>(j));
    }
  }
  return r;
}

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline Rows pairwise_sq(const Rows& x) {
  Rows s(x.size(), std::vector<double>(x.size(), 0.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) s[i][j] = sq_dist(x[i], x[j]);
  }
  return s;
}

// argmin over a full scan, ties to the lowest index.
inline std::size_t nearest(const std::vector<double>& v, const Rows& centers) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = sq_dist(v, centers[c]);
    if (d < bd) {
      bd = d;
      best = c;
    }
  }
  return best;
}

// Permutation minimizing sum_ik (S_ik - S'_{pi(i) pi(k)})^2 over all n!.
inline std::vector<std::size_t> best_permutation(const Rows& s, const Rows& sp) {
  std::vector<std::size_t> perm(s.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t k = 0; k < s.size(); ++k) {
        const double d = s[i][k] - sp[perm[i]][perm[k]];
        cost += d * d;
      }
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// sum_ijkl (S_ik - S'_jl)^2 G_ij G_kl by direct quadruple loop.
inline double gw_cost(const Rows& s, const Rows& sp, const Rows& g) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < sp.size(); ++j)
      for (std::size_t k = 0; k < s.size(); ++k)
        for (std::size_t l = 0; l < sp.size(); ++l) {
          const double d = s[i][k] - sp[j][l];
          total += d * d * g[i][j] * g[k][l];
        }
  return total;
}

// L_ij = sum_kl (S_ik - S'_jl)^2 G_kl, valid when G has marginals p and q.
inline Rows gw_loss(const Rows& s, const Rows& sp, const Rows& g) {
  Rows out(s.size(), std::vector<double>(sp.size(), 0.0));
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < sp.size(); ++j)
      for (std::size_t k = 0; k < s.size(); ++k)
        for (std::size_t l = 0; l < sp.size(); ++l) {
          const double d = s[i][k] - sp[j][l];
          out[i][j] += d * d * g[k][l];
        }
  return out;
}

// Minimal k-means inertia over all 2-partitions (both parts non-empty).
struct Partition {
  double inertia;
  std::vector<int> side;
};

inline Partition best_two_partition(const Rows& x) {
  const std::size_t n = x.size();
  Partition best{std::numeric_limits<double>::infinity(), {}};
  for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
    double total = 0.0;
    for (int side = 0; side < 2; ++side) {
      std::vector<double> mean(x[0].size(), 0.0);
      std::size_t count = 0;
      for (std::size_t t = 0; t < n; ++t) {
        if (static_cast<int>((mask >> t) & 1u) != side) continue;
        for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += x[t][k];
        ++count;
      }
      for (auto& v : mean) v /= static_cast<double>(count);
      for (std::size_t t = 0; t < n; ++t) {
        if (static_cast<int>((mask >> t) & 1u) == side) total += sq_dist(x[t], mean);
      }
    }
    if (total < best.inertia) {
      best.inertia = total;
      best.side.assign(n, 0);
      for (std::size_t t = 0; t < n; ++t) best.side[t] = static_cast<int>((mask >> t) & 1u);
    }
  }
  return best;
}

// Cyclic Jacobi eigenvalues of a symmetric matrix, descending.
inline std::vector<double> jacobi_eigenvalues(Rows a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    if (off < 1e-26) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

// Population covariance of rows.
inline Rows covariance(const Rows& x) {
  const std::size_t d = x[0].size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : x)
    for (std::size_t k = 0; k < d; ++k) mean[k] += r[k] / static_cast<double>(x.size());
  Rows c(d, std::vector<double>(d, 0.0));
  for (const auto& r : x)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / static_cast<double>(x.size());
  return c;
}

// Upper regularized incomplete gamma Q(a, x) for the chi-square tail.
inline double gamma_q(double a, double x) {
  if (x <= 0.0) return 1.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 10000; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
  }
  double b = x + 1.0 - a, c = 1.0 / 1e-300, d = 1.0 / b, h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - gln) * h;
}

// p-value of Pearson's chi-square statistic with `dof` degrees of freedom.
inline double chi_square_p(double statistic, double dof) { return gamma_q(dof / 2.0, statistic / 2.0); }

}  // namespace oracle

namespace oracle {

// Central differences of f with respect to every entry of `x`.
template <typename M, typename F>
M finite_difference(M x, F&& f, double h = 1e-5) {
  M g = M::Zero(x.rows(), x.cols());
  for (long i = 0; i < x.rows(); ++i) {
    for (long j = 0; j < x.cols(); ++j) {
      const double keep = x(i, j);
      x(i, j) = keep + h;
      const double up = f(x);
      x(i, j) = keep - h;
      const double down = f(x);
      x(i, j) = keep;
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

// Largest entrywise relative disagreement, with a small absolute floor.
template <typename M>
double max_relative_error(const M& analytic, const M& numeric, double floor = 1e-8) {
  double worst = 0.0;
  for (long i = 0; i < analytic.rows(); ++i) {
    for (long j = 0; j < analytic.cols(); ++j) {
      const double a = analytic(i, j), n = numeric(i, j);
      const double scale = std::max({std::abs(a), std::abs(n), floor});
      worst = std::max(worst, std::abs(a - n) / scale);
    }
  }
  return worst;
}

}  // namespace oracle

namespace oracle {

// Summed CBOW negative log-likelihood of one utterance: the mean of the
// context input vectors scored against every output vector.
template <typename M, typename S>
double cbow_nll(const M& in, const M& out, const std::vector<S>& tok, std::size_t window,
                std::size_t* positions = nullptr) {
  double total = 0.0;
  const long len = static_cast<long>(tok.size());
  const long w = static_cast<long>(window);
  for (long t = 0; t < len; ++t) {
    std::vector<double> h(static_cast<std::size_t>(in.cols()), 0.0);
    int count = 0;
    for (long j = t - w; j <= t + w; ++j) {
      if (j < 0 || j >= len || j == t) continue;
      for (long k = 0; k < in.cols(); ++k) h[static_cast<std::size_t>(k)] += in(tok[j], k);
      ++count;
    }
    if (count == 0) continue;
    for (auto& v : h) v /= count;
    std::vector<double> logits(static_cast<std::size_t>(out.rows()), 0.0);
    for (long s = 0; s < out.rows(); ++s)
      for (long k = 0; k < out.cols(); ++k) logits[static_cast<std::size_t>(s)] += out(s, k) * h[static_cast<std::size_t>(k)];
    double z = 0.0;
    for (double l : logits) z += std::exp(l);
    total += std::log(z) - logits[tok[t]];
    if (positions) ++*positions;
  }
  return total;
}

// Mean of -log softmax(h_t W)[s_{t+k}].
template <typename M, typename S>
double probe_ce(const M& h, const std::vector<S>& s, const M& W, std::size_t k) {
  double total = 0.0;
  const std::size_t n = s.size() - k;
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<double> logits(static_cast<std::size_t>(W.cols()), 0.0);
    for (long o = 0; o < W.cols(); ++o)
      for (long i = 0; i < W.rows(); ++i) logits[static_cast<std::size_t>(o)] += h(static_cast<long>(t), i) * W(i, o);
    double z = 0.0;
    for (double l : logits) z += std::exp(l);
    total += std::log(z) - logits[s[t + k]];
  }
  return total / static_cast<double>(n);
}

// Mean of ||Y[s_{t+k}] - h_t W||^2.
template <typename M, typename S>
double probe_mse(const M& h, const std::vector<S>& s, const M& Y, const M& W, std::size_t k) {
  double total = 0.0;
  const std::size_t n = s.size() - k;
  for (std::size_t t = 0; t < n; ++t) {
    for (long o = 0; o < W.cols(); ++o) {
      double pred = 0.0;
      for (long i = 0; i < W.rows(); ++i) pred += h(static_cast<long>(t), i) * W(i, o);
      const double d = Y(s[t + k], o) - pred;
      total += d * d;
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace oracle
