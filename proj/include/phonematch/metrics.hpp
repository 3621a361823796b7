#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phonematch/cluster.hpp"
#include "phonematch/corpus_io.hpp"
#include "phonematch/matrix.hpp"

namespace phonematch {

// counts(i, j) = frames in cluster i whose reference symbol is j.
class ContingencyTable {
 public:
  using Counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  ContingencyTable() = default;
  explicit ContingencyTable(Counts counts);

  const Counts& counts() const { return counts_; }
  std::size_t clusters() const { return static_cast<std::size_t>(counts_.rows()); }
  std::size_t symbols() const { return static_cast<std::size_t>(counts_.cols()); }
  std::int64_t cluster_total(std::size_t i) const { return cluster_totals_[i]; }
  std::int64_t symbol_total(std::size_t j) const { return symbol_totals_[j]; }
  std::int64_t total() const { return total_; }

  // Majority reference symbol of cluster i, ties to the lowest id.
  SymbolId majority(std::size_t i) const;

  ContingencyTable transpose() const;

 private:
  Counts counts_;
  std::vector<std::int64_t> cluster_totals_;
  std::vector<std::int64_t> symbol_totals_;
  std::int64_t total_ = 0;
};

struct MetricReport {
  double phone_purity = 0.0;
  double cluster_purity = 0.0;
  double frame_per = 0.0;
  std::optional<double> type_per;
  // Frame-weighted purity, reported alongside the unweighted value.
  double weighted_phone_purity = 0.0;
};

ContingencyTable build_table(const std::vector<ClusterId>& assignments,
                             const std::vector<LabelSequence>& reference, std::size_t n_clusters,
                             std::size_t n_symbols);

// Unweighted mean over non-empty clusters of majority/size.
double phone_purity(const ContingencyTable& table);
// Unweighted mean over present symbols of max-cluster/symbol-total.
double cluster_purity(const ContingencyTable& table);
// Sum of per-cluster majority counts.
std::int64_t majority_frames(const ContingencyTable& table);
// majority_frames over total frames.
double weighted_phone_purity(const ContingencyTable& table);
// (total - majority_frames) over total frames.
double frame_per(const ContingencyTable& table);
// Fraction of non-empty clusters whose matched symbol is not their majority.
double type_per(const ContingencyTable& table, const std::vector<SymbolId>& matching);

MetricReport evaluate(const ContingencyTable& table,
                      const std::optional<std::vector<SymbolId>>& matching);

std::string format_report_tsv(const MetricReport& report);
std::string format_report_text(const MetricReport& report, const ContingencyTable& table);

enum class NeighborMetric { euclidean, cosine };

// For each row, the `top_k` other rows by ascending distance, ties to the
// lowest index.
std::vector<std::vector<std::size_t>> nearest_neighbors(const EmbeddingMatrix& vectors,
                                                        std::size_t top_k,
                                                        NeighborMetric metric = NeighborMetric::euclidean);

// `symbol TAB n1 TAB n2 ...` per row.
std::string format_neighbors_tsv(const std::vector<std::vector<std::size_t>>& neighbors,
                                 const std::vector<std::string>& names);

}  // namespace phonematch
