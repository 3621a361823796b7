#include "phonematch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "phonematch/error.hpp"

namespace phonematch {

ContingencyTable::ContingencyTable(Counts counts) : counts_(std::move(counts)) {
  if ((counts_.array() < 0).any()) throw DataError("contingency counts must be non-negative");
  cluster_totals_.assign(clusters(), 0);
  symbol_totals_.assign(symbols(), 0);
  for (Eigen::Index i = 0; i < counts_.rows(); ++i) {
    for (Eigen::Index j = 0; j < counts_.cols(); ++j) {
      cluster_totals_[static_cast<std::size_t>(i)] += counts_(i, j);
      symbol_totals_[static_cast<std::size_t>(j)] += counts_(i, j);
    }
  }
  total_ = std::accumulate(cluster_totals_.begin(), cluster_totals_.end(), std::int64_t{0});
}

SymbolId ContingencyTable::majority(std::size_t i) const {
  const auto row = counts_.row(static_cast<Eigen::Index>(i));
  Eigen::Index arg = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j) {
    if (row(j) > row(arg)) arg = j;
  }
  return static_cast<SymbolId>(arg);
}

ContingencyTable ContingencyTable::transpose() const { return ContingencyTable(counts_.transpose()); }

ContingencyTable build_table(const std::vector<ClusterId>& assignments,
                             const std::vector<LabelSequence>& reference, std::size_t n_clusters,
                             std::size_t n_symbols) {
  const auto flat = concatenate(reference);
  if (flat.size() != assignments.size()) {
    throw InvalidArgument("build_table: " + std::to_string(assignments.size()) + " assignments but " +
                          std::to_string(flat.size()) + " reference labels");
  }
  ContingencyTable::Counts counts = ContingencyTable::Counts::Zero(
      static_cast<Eigen::Index>(n_clusters), static_cast<Eigen::Index>(n_symbols));
  for (std::size_t t = 0; t < flat.size(); ++t) {
    if (assignments[t] >= n_clusters) throw InvalidArgument("build_table: cluster id out of range");
    if (flat[t] >= n_symbols) throw InvalidArgument("build_table: symbol id out of range");
    ++counts(assignments[t], flat[t]);
  }
  return ContingencyTable(std::move(counts));
}

double phone_purity(const ContingencyTable& table) {
  if (table.total() == 0) throw EmptyInput("phone_purity: empty table");
  // Extended precision so small hand-countable cases round to the nearest
  // double of the exact rational.
  long double sum = 0.0L;
  std::size_t nonempty = 0;
  for (std::size_t i = 0; i < table.clusters(); ++i) {
    const auto size = table.cluster_total(i);
    if (size == 0) continue;
    const auto best = table.counts().row(static_cast<Eigen::Index>(i)).maxCoeff();
    sum += static_cast<long double>(best) / static_cast<long double>(size);
    ++nonempty;
  }
  return static_cast<double>(sum / static_cast<long double>(nonempty));
}

double cluster_purity(const ContingencyTable& table) {
  if (table.total() == 0) throw EmptyInput("cluster_purity: empty table");
  return phone_purity(table.transpose());
}

std::int64_t majority_frames(const ContingencyTable& table) {
  std::int64_t majority = 0;
  for (std::size_t i = 0; i < table.clusters(); ++i) {
    majority += table.counts().row(static_cast<Eigen::Index>(i)).maxCoeff();
  }
  return majority;
}

double weighted_phone_purity(const ContingencyTable& table) {
  if (table.total() == 0) throw EmptyInput("weighted_phone_purity: empty table");
  return static_cast<double>(majority_frames(table)) / static_cast<double>(table.total());
}

// Errors over frames, both integers, so the result is the correctly rounded
// value of the exact ratio.
double frame_per(const ContingencyTable& table) {
  if (table.total() == 0) throw EmptyInput("frame_per: empty table");
  return static_cast<double>(table.total() - majority_frames(table)) / static_cast<double>(table.total());
}

double type_per(const ContingencyTable& table, const std::vector<SymbolId>& matching) {
  if (matching.size() != table.clusters()) {
    throw InvalidArgument("type_per: matching length must equal the cluster count");
  }
  std::size_t wrong = 0;
  std::size_t nonempty = 0;
  for (std::size_t i = 0; i < table.clusters(); ++i) {
    if (table.cluster_total(i) == 0) continue;
    ++nonempty;
    if (matching[i] != table.majority(i)) ++wrong;
  }
  if (nonempty == 0) throw EmptyInput("type_per: empty table");
  return static_cast<double>(wrong) / static_cast<double>(nonempty);
}

MetricReport evaluate(const ContingencyTable& table,
                      const std::optional<std::vector<SymbolId>>& matching) {
  MetricReport r;
  r.phone_purity = phone_purity(table);
  r.cluster_purity = cluster_purity(table);
  r.frame_per = frame_per(table);
  r.weighted_phone_purity = weighted_phone_purity(table);
  if (matching) r.type_per = type_per(table, *matching);
  return r;
}

namespace {

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

std::string full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string format_report_tsv(const MetricReport& r) {
  std::string out = "metric\tpercent\tvalue\n";
  auto line = [&](const char* name, double v) { out += std::string(name) + '\t' + percent(v) + '\t' + full(v) + '\n'; };
  line("phone_purity", r.phone_purity);
  line("cluster_purity", r.cluster_purity);
  line("frame_per", r.frame_per);
  if (r.type_per) line("type_per", *r.type_per);
  line("weighted_phone_purity", r.weighted_phone_purity);
  return out;
}

std::string format_report_text(const MetricReport& r, const ContingencyTable& table) {
  std::string out;
  out += "# cluster purity: per-symbol max-cluster fraction, unweighted mean over symbols\n";
  out += "# phone purity: per-cluster majority fraction, unweighted mean over non-empty clusters\n";
  out += "# majority ties resolved to the lowest symbol id\n";
  out += "frames:          " + std::to_string(table.total()) + '\n';
  out += "clusters:        " + std::to_string(table.clusters()) + '\n';
  out += "phone purity:    " + percent(r.phone_purity) + "%\n";
  out += "cluster purity:  " + percent(r.cluster_purity) + "%\n";
  out += "frame PER:       " + percent(r.frame_per) + "%\n";
  out += "type PER:        " + (r.type_per ? percent(*r.type_per) + "%" : std::string("-")) + '\n';
  out += "weighted purity: " + percent(r.weighted_phone_purity) + "%\n";
  return out;
}

std::vector<std::vector<std::size_t>> nearest_neighbors(const EmbeddingMatrix& vectors,
                                                        std::size_t top_k, NeighborMetric metric) {
  const auto n = vectors.rows();
  if (top_k >= n) throw InvalidArgument("nearest_neighbors: top_k must be smaller than the row count");
  const Matrix& x = vectors.data();
  Vector norms = x.rowwise().norm();
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto jj = static_cast<Eigen::Index>(j);
      double d = 0.0;
      if (metric == NeighborMetric::euclidean) {
        d = (x.row(ii) - x.row(jj)).norm();
      } else {
        const double denom = norms(ii) * norms(jj);
        d = denom > 0.0 ? 1.0 - x.row(ii).dot(x.row(jj)) / denom : 1.0;
      }
      cand.emplace_back(d, j);
    }
    std::sort(cand.begin(), cand.end());
    for (std::size_t r = 0; r < top_k; ++r) out[i].push_back(cand[r].second);
  }
  return out;
}

std::string format_neighbors_tsv(const std::vector<std::vector<std::size_t>>& neighbors,
                                 const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    out += names.at(i);
    for (auto j : neighbors[i]) out += '\t' + names.at(j);
    out += '\n';
  }
  return out;
}

}  // namespace phonematch
