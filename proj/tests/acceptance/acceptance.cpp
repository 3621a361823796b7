// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "oracles.hpp"
#include "phonematch/cbow.hpp"
#include "phonematch/cluster.hpp"
#include "phonematch/corpus_io.hpp"
#include "phonematch/fixture.hpp"
#include "phonematch/gw_match.hpp"
#include "phonematch/metrics.hpp"
#include "phonematch/pipeline.hpp"
#include "phonematch/pseudolabel.hpp"
#include "phonematch/subspace.hpp"

using namespace phonematch;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Worst marginal violation over every coupling produced in this run.
double g_worst_marginal = 0.0;
std::size_t g_couplings = 0;

void record_marginals(const Matrix& gamma, const Vector& p, const Vector& q) {
  const double rows = (gamma.rowwise().sum() - p).cwiseAbs().maxCoeff();
  const double cols = (gamma.colwise().sum().transpose() - q).cwiseAbs().maxCoeff();
  g_worst_marginal = std::max({g_worst_marginal, rows, cols});
  ++g_couplings;
}

CouplingMatrix solve(const DistancePair& dp, const UnigramDistribution& p, const UnigramDistribution& q,
                     const GwOptions& opt) {
  CouplingMatrix c = entropic_gw(dp, p, q, opt);
  record_marginals(c.gamma, p.as_vector(), q.as_vector());
  return c;
}

UnigramDistribution uniform(std::size_t n) { return UnigramDistribution(std::vector<double>(n, 1.0 / n)); }

UnigramDistribution random_unigram(std::size_t n, Rng& rng) {
  std::vector<double> w(n);
  for (auto& v : w) v = rng.uniform(0.2, 1.0);
  return UnigramDistribution::from_counts(w);
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return files;
}

double report_value(const fs::path& report, const std::string& key) {
  const std::string text = read_file(report);
  const auto at = text.find(key + '\t');
  if (at == std::string::npos) throw std::runtime_error("report lacks " + key);
  return std::stod(text.substr(at + key.size() + 1));
}

PipelineConfig fixture_pipeline(const fs::path& dir, std::uint64_t seed) {
  FixtureOptions fo;
  fo.phones = 20;
  fo.dim = 16;
  fo.noise = 0.05;
  fo.seed = seed;
  write_fixture(dir / "data", make_fixture(fo));
  PipelineConfig cfg = load_config(dir / "data" / "fixture.conf");
  cfg.seed = seed;
  cfg.out_dir = dir / "out";
  return cfg;
}

// --- criteria ---------------------------------------------------------------

Outcome gw_permutation_recovery() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(20240601);
  int matched = 0, instances = 0;
  for (int trial = 0; trial < 50; ++trial, ++instances) {
    const std::size_t n = 4 + static_cast<std::size_t>(trial % 3);
    const EmbeddingMatrix x(testutil::gaussian(n, 8, rng));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    Matrix y(n, 8);
    for (std::size_t i = 0; i < n; ++i) y.row(static_cast<long>(perm[i])) = x.data().row(static_cast<long>(i));
    const DistancePair dp = distance_matrices(preprocess(x), preprocess(EmbeddingMatrix(y)));
    GwOptions opt;
    opt.epsilon = 0.005;
    const CouplingMatrix c = solve(dp, uniform(n), uniform(n), opt);
    const auto best = oracle::best_permutation(oracle::to_rows(dp.S), oracle::to_rows(dp.S_prime));
    const auto got = extract_matching(c);
    matched += std::equal(got.begin(), got.end(), best.begin()) ? 1 : 0;
  }
  const double secs = seconds_since(start);
  return {matched >= 48 && secs < 30.0, format("%d/%d match the exhaustive optimum, %.2f s", matched, instances, secs)};
}

Outcome marginal_sweep() {
  // Unequal sizes, non-uniform marginals, zero-mass entries, both kernel
  // regimes and random restarts.
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng.below(12), m = 1 + rng.below(12);
    const DistancePair dp = distance_matrices(preprocess(EmbeddingMatrix(testutil::gaussian(n, 5, rng))),
                                              preprocess(EmbeddingMatrix(testutil::gaussian(m, 5, rng))));
    std::vector<double> pw(n), qw(m);
    for (auto& v : pw) v = rng.uniform() < 0.15 ? 0.0 : rng.uniform(0.1, 1.0);
    for (auto& v : qw) v = rng.uniform() < 0.15 ? 0.0 : rng.uniform(0.1, 1.0);
    pw[0] = std::max(pw[0], 0.5);
    qw[0] = std::max(qw[0], 0.5);
    GwOptions opt;
    const double eps[] = {0.0005, 0.002, 0.01, 0.1, 1.0};
    opt.epsilon = eps[trial % 5];
    opt.outer_iterations = 300;
    opt.restarts = trial % 4 == 0 ? 2 : 0;
    opt.seed = static_cast<std::uint64_t>(trial);
    solve(dp, UnigramDistribution::from_counts(pw), UnigramDistribution::from_counts(qw), opt);
  }
  return {g_worst_marginal <= 1e-6,
          format("max marginal error %.3g over %zu couplings", g_worst_marginal, g_couplings)};
}

Outcome synthetic_end_to_end() {
  const auto start = std::chrono::steady_clock::now();
  const auto root = testutil::scratch_dir("acceptance_e2e");
  int ok = 0;
  const int seeds = 20;
  double worst_frame_per = 0.0, worst_type_per = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const auto cfg = fixture_pipeline(root / std::to_string(s), static_cast<std::uint64_t>(s));
    run_pipeline(cfg);
    const double tp = report_value(cfg.out_dir / "report.tsv", "type_per");
    const double fp = report_value(cfg.out_dir / "report.tsv", "frame_per");
    worst_type_per = std::max(worst_type_per, tp);
    worst_frame_per = std::max(worst_frame_per, fp);
    ok += (tp == 0.0 && fp <= 2.0) ? 1 : 0;
    record_marginals(read_matrix(cfg.out_dir / "coupling.emb").data(),
                     read_unigram(cfg.out_dir / "centroid_unigram.tsv").as_vector(),
                     read_unigram(cfg.out_dir / "phone_unigram.tsv").as_vector());
  }
  const double secs = seconds_since(start);
  return {ok == seeds && secs < 60.0,
          format("%d/%d seeds with type_per 0 and frame_per <= 2%% (worst type_per %.1f%%, frame_per %.2f%%), %.2f s",
                 ok, seeds, worst_type_per, worst_frame_per, secs)};
}

Outcome speaker_direction() {
  Rng rng(314);
  const std::size_t dim = 16, speakers = 20, per_speaker = 10, frames_per = 40;
  const Vector axis = testutil::gaussian(dim, 1, rng).col(0).normalized();
  Matrix x(static_cast<long>(speakers * per_speaker * frames_per), static_cast<long>(dim));
  std::vector<std::size_t> spk, utt;
  long t = 0;
  for (std::size_t s = 0; s < speakers; ++s) {
    const double offset = 3.0 * rng.normal();
    for (std::size_t u = 0; u < per_speaker; ++u) {
      const double jitter = 0.2 * rng.normal();
      for (std::size_t f = 0; f < frames_per; ++f, ++t) {
        for (long k = 0; k < static_cast<long>(dim); ++k) x(t, k) = rng.normal();
        x.row(t) += (offset + jitter) * axis.transpose();
        spk.push_back(s);
        utt.push_back(s * per_speaker + u);
      }
    }
  }
  const EmbeddingMatrix frames(x);
  const SubspaceBasis by_utt = pca(group_means(frames, utt), 1);
  const SubspaceBasis by_spk = pca(group_means(frames, spk), 1);
  const double dot = std::abs(by_utt.directions.row(0).dot(axis));
  const double agree = std::abs(by_utt.directions.row(0).dot(by_spk.directions.row(0)));

  auto variance_along = [&](const Matrix& m) {
    const Vector proj = m * axis;
    const double mean = proj.mean();
    return (proj.array() - mean).square().mean();
  };
  const double before = variance_along(x);
  const double after = variance_along(collapse_top(frames, by_utt, 1).data());
  const double ratio = after / before;
  return {dot >= 0.99 && agree >= 0.99 && ratio <= 1e-4,
          format("|dot| %.6f (speaker/utterance agreement %.6f), residual variance ratio %.3g", dot, agree, ratio)};
}

Outcome lloyd() {
  Rng rng(5151);
  int monotone = 0, small = 0, fixed_ok = 0, never_below = 0;
  const int instances = 100;
  for (int trial = 0; trial < instances; ++trial) {
    const bool tiny = trial % 2 == 0;
    const std::size_t n = tiny ? 2 + rng.below(7) : 10 + rng.below(90);
    const std::size_t dim = 1 + rng.below(4);
    const std::size_t k = tiny ? 2 : 1 + rng.below(8);
    const EmbeddingMatrix x(testutil::gaussian(n, dim, rng));
    const CentroidSet set = kmeans(x, k, 100, rng.engine()());
    bool mono = true;
    for (std::size_t i = 1; i < set.inertia_trace.size(); ++i) {
      mono = mono && set.inertia_trace[i] <= set.inertia_trace[i - 1] * (1.0 + 1e-12);
    }
    monotone += mono ? 1 : 0;
    if (!tiny) continue;

    ++small;
    const auto best = oracle::best_two_partition(oracle::to_rows(x.data()));
    Matrix start = Matrix::Zero(2, static_cast<long>(dim));
    double count[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      start.row(best.side[i]) += x.data().row(static_cast<long>(i));
      count[best.side[i]] += 1.0;
    }
    for (int c = 0; c < 2; ++c) start.row(c) /= count[c];
    const CentroidSet from_opt = kmeans_from(x, EmbeddingMatrix(start, MatrixRole::centroids), 100);
    const double tol = 1e-9 * std::max(1.0, best.inertia);
    fixed_ok += std::abs(from_opt.inertia - best.inertia) <= tol ? 1 : 0;
    never_below += set.inertia >= best.inertia - tol ? 1 : 0;
  }
  return {monotone == instances && fixed_ok == small && never_below == small,
          format("monotone %d/%d; k=2 exhaustive: fixed point %d/%d, never below optimum %d/%d", monotone,
                 instances, fixed_ok, small, never_below, small)};
}

Outcome cbow_gradient_check() {
  std::vector<std::string> abc = {"a", "b", "c"};
  const Alphabet alphabet(abc);
  const std::vector<LabelSequence> utts = {{"u", {0, 1, 2, 1, 0, 2, 2, 1, 0}}, {"v", {2, 0, 1}}};
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    PhoneEmbeddingTable table = cbow_init(alphabet, 4, seed);
    Rng rng(seed + 99);
    table.output = testutil::gaussian(3, 4, rng) * 0.3;
    for (const auto& u : utts) {
      const CbowGradient g = cbow_gradient(table, u, 2);
      const Matrix num_in = oracle::finite_difference(
          table.input, [&](const Matrix& in) { return oracle::cbow_nll(in, table.output, u.tokens, 2); });
      const Matrix num_out = oracle::finite_difference(
          table.output, [&](const Matrix& out) { return oracle::cbow_nll(table.input, out, u.tokens, 2); });
      worst = std::max({worst, oracle::max_relative_error(g.input, num_in), oracle::max_relative_error(g.output, num_out)});
    }
  }

  // Clipping: large random tables and small thresholds force the clip.
  Rng rng(404);
  int clipped = 0;
  double clip_err = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    PhoneEmbeddingTable table{testutil::gaussian(3, 4, rng) * 3.0, testutil::gaussian(3, 4, rng) * 3.0, alphabet};
    const PhoneEmbeddingTable before = table;
    const double step = rng.uniform(0.001, 0.1), clip = rng.uniform(0.05, 5.0);
    const CbowStep s = cbow_step(table, utts[trial % 2], 2, step, clip);
    if (s.pre_clip_norm <= clip) continue;
    ++clipped;
    const double moved = std::sqrt((table.input - before.input).squaredNorm() +
                                   (table.output - before.output).squaredNorm());
    clip_err = std::max(clip_err, std::abs(moved - step * clip));
  }
  return {worst <= 1e-4 && clipped > 0 && clip_err <= 1e-6,
          format("max relative gradient error %.3g; %d clipped steps, max |norm - step*clip| %.3g", worst, clipped,
                 clip_err)};
}

Outcome procrustes_exactness() {
  Rng rng(88);
  double worst_q = 0.0, worst_orth = 0.0;
  const std::size_t dims[] = {4, 8, 16};
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = dims[trial % 3];
    const std::size_t n = d + 1 + rng.below(6);
    const Matrix Q = testutil::random_orthogonal(d, rng);
    const Matrix C = testutil::gaussian(n, d, rng);  // rows are vectors c_i
    const Matrix Y = C * Q.transpose();             // y_i = Q c_i
    const Matrix gamma = Matrix::Identity(static_cast<long>(n), static_cast<long>(n)) / static_cast<double>(n);
    const AlignmentMap map = procrustes(EmbeddingMatrix(C), EmbeddingMatrix(Y), gamma);
    worst_q = std::max(worst_q, (map.A.transpose() - Q).norm());
    worst_orth = std::max(worst_orth, (map.A.transpose() * map.A - Matrix::Identity(static_cast<long>(d), static_cast<long>(d)))
                                          .cwiseAbs()
                                          .maxCoeff());

    // Orthogonality holds for unrelated inputs and arbitrary couplings too.
    const std::size_t m = 2 + rng.below(10);
    Matrix g = testutil::gaussian(n, m, rng).cwiseAbs();
    g /= g.sum();
    const AlignmentMap any = procrustes(EmbeddingMatrix(C), EmbeddingMatrix(testutil::gaussian(m, d, rng)), g);
    worst_orth = std::max(worst_orth, (any.A.transpose() * any.A - Matrix::Identity(static_cast<long>(d), static_cast<long>(d)))
                                          .cwiseAbs()
                                          .maxCoeff());
  }
  return {worst_q <= 1e-5 && worst_orth <= 1e-6,
          format("max ||A^T - Q||_F %.3g, max |A^T A - I| %.3g", worst_q, worst_orth)};
}

Outcome metric_identities() {
  Rng rng(1000);
  int ok = 0;
  const int tables = 1000;
  for (int trial = 0; trial < tables; ++trial) {
    const long n = 1 + static_cast<long>(rng.below(15)), m = 1 + static_cast<long>(rng.below(15));
    ContingencyTable::Counts c(n, m);
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < m; ++j) c(i, j) = rng.uniform() < 0.3 ? 0 : static_cast<std::int64_t>(rng.below(200));
    if (c.sum() == 0) c(0, 0) = 1;
    const ContingencyTable t(c);
    std::int64_t majority = 0;
    for (long i = 0; i < n; ++i) majority += c.row(i).maxCoeff();
    const std::int64_t total = c.sum();
    const bool transpose_exact = phone_purity(t) == cluster_purity(t.transpose());
    // frame_per and weighted purity are the rounded values of two integer
    // ratios whose numerators add up to the total.
    const bool complement_exact =
        majority_frames(t) == majority &&
        frame_per(t) == static_cast<double>(total - majority) / static_cast<double>(total) &&
        weighted_phone_purity(t) == static_cast<double>(majority) / static_cast<double>(total) &&
        std::abs(frame_per(t) - (1.0 - weighted_phone_purity(t))) <= std::numeric_limits<double>::epsilon();
    ok += (transpose_exact && complement_exact) ? 1 : 0;
  }

  // Clusters {a,a,b} and {b,b}.
  const std::vector<ClusterId> z = {0, 0, 0, 1, 1};
  const std::vector<LabelSequence> ref = {{"u", {0, 0, 1}}, {"v", {1, 1}}};
  const ContingencyTable hand = build_table(z, ref, 2, 2);
  const bool hand_ok = phone_purity(hand) == 5.0 / 6.0 && frame_per(hand) == 0.2 &&
                       weighted_phone_purity(hand) == 0.8 && cluster_purity(hand) == 5.0 / 6.0;
  return {ok == tables && hand_ok,
          format("%d/%d random tables satisfy both identities; hand counts %s", ok, tables,
                 hand_ok ? "exact (5/6, 0.2, 0.8)" : "wrong")};
}

Outcome loss_probes() {
  Rng rng(9);
  double zero_ce_err = 0.0, mse_at_targets = 0.0, worst_grad = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t T = 8 + rng.below(20), din = 1 + rng.below(6), m = 2 + rng.below(40);
    const std::size_t k = rng.below(6);
    const EmbeddingMatrix h(testutil::gaussian(T, din, rng));
    PseudoLabelSequence s{"u", {}, LabelSource::matching, k};
    for (std::size_t i = 0; i < T; ++i) s.labels.push_back(static_cast<SymbolId>(rng.below(m)));

    const LossProbe zero{Matrix::Zero(static_cast<long>(din), static_cast<long>(m)), ProbeKind::cross_entropy};
    zero_ce_err = std::max(zero_ce_err, std::abs(ce_loss(h, s, zero, k) - std::log(static_cast<double>(m))));

    // Frames equal to their shifted targets, identity probe.
    Matrix Y = testutil::gaussian(m, din, rng);
    Matrix hx(static_cast<long>(T), static_cast<long>(din));
    for (std::size_t i = 0; i + k < T; ++i) hx.row(static_cast<long>(i)) = Y.row(s.labels[i + k]);
    for (std::size_t i = T - k; i < T; ++i) hx.row(static_cast<long>(i)).setZero();
    const LossProbe id{Matrix::Identity(static_cast<long>(din), static_cast<long>(din)), ProbeKind::mean_squared_error};
    mse_at_targets = std::max(mse_at_targets, mse_loss(EmbeddingMatrix(hx), s, EmbeddingMatrix(Y), id, k));

    const LossProbe ce{testutil::gaussian(din, m, rng), ProbeKind::cross_entropy};
    const Matrix num_ce = oracle::finite_difference(
        ce.weights, [&](const Matrix& W) { return oracle::probe_ce(h.data(), s.labels, W, k); });
    worst_grad = std::max(worst_grad, oracle::max_relative_error(ce_loss_gradient(h, s, ce, k).gradient, num_ce));

    const std::size_t dout = 1 + rng.below(5);
    const EmbeddingMatrix targets(testutil::gaussian(m, dout, rng));
    const LossProbe mse{testutil::gaussian(din, dout, rng), ProbeKind::mean_squared_error};
    const Matrix num_mse = oracle::finite_difference(
        mse.weights, [&](const Matrix& W) { return oracle::probe_mse(h.data(), s.labels, targets.data(), W, k); });
    worst_grad = std::max(worst_grad,
                          oracle::max_relative_error(mse_loss_gradient(h, s, targets, mse, k).gradient, num_mse));
  }
  return {zero_ce_err <= 1e-9 && mse_at_targets == 0.0 && worst_grad <= 1e-4,
          format("|CE(0) - ln m| %.3g, MSE at targets %.3g, max relative gradient error %.3g", zero_ce_err,
                 mse_at_targets, worst_grad)};
}

Outcome corruption_statistics() {
  Rng rng(4242);
  const std::size_t symbols = 12, n = 100000;
  const UnigramDistribution u = random_unigram(symbols, rng);
  PseudoLabelSequence clean{"u", {}, LabelSource::matching, 5};
  for (std::size_t i = 0; i < n; ++i) clean.labels.push_back(static_cast<SymbolId>(rng.below(symbols)));

  auto chi2_p = [&](const PseudoLabelSequence& out, bool uniform_law) {
    std::vector<double> counts(symbols, 0.0);
    for (auto s : out.labels) counts[s] += 1.0;
    double stat = 0.0;
    for (std::size_t i = 0; i < symbols; ++i) {
      const double e = (uniform_law ? 1.0 / symbols : u[i]) * static_cast<double>(n);
      stat += (counts[i] - e) * (counts[i] - e) / e;
    }
    return oracle::chi_square_p(stat, static_cast<double>(symbols - 1));
  };
  const double p_unigram = chi2_p(corrupt_labels(clean, 100.0, u, 17), false);
  const double p_uniform = chi2_p(corrupt_labels(clean, 100.0, u, 18, true), true);

  bool identity = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto same = corrupt_labels(clean, 0.0, u, seed);
    identity = identity && same.labels == clean.labels && same.utterance_id == clean.utterance_id &&
               same.source == clean.source && same.shift_k == clean.shift_k;
  }
  return {p_unigram > 0.01 && p_uniform > 0.01 && identity,
          format("chi-square p %.3f (unigram), %.3f (uniform) over %zu positions; 0%% identity %s", p_unigram, p_uniform,
                 n, identity ? "holds" : "broken")};
}

Outcome determinism() {
  const auto root = testutil::scratch_dir("acceptance_determinism");
  std::map<std::string, std::string> trees[2];
  for (int run = 0; run < 2; ++run) {
    auto cfg = fixture_pipeline(root / ("run" + std::to_string(run)), 11);
    cfg.corrupt_percent = 25.0;
    run_pipeline(cfg);
    for (Stage s : {Stage::randproj, Stage::corrupt, Stage::neighbors}) run_stage(s, cfg);
    trees[run] = tree(cfg.out_dir);
  }
  std::size_t differing = 0;
  for (const auto& [name, bytes] : trees[0]) {
    auto it = trees[1].find(name);
    differing += (it == trees[1].end() || it->second != bytes) ? 1 : 0;
  }
  const bool same = trees[0].size() == trees[1].size() && differing == 0;
  return {same, format("%zu files, %zu differ", trees[0].size(), differing)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"GW permutation recovery", gw_permutation_recovery},
      {"Synthetic end-to-end", synthetic_end_to_end},
      {"Speaker-direction recovery", speaker_direction},
      {"Lloyd monotonicity and oracle", lloyd},
      {"CBOW gradient check", cbow_gradient_check},
      {"Procrustes exactness", procrustes_exactness},
      {"Metric identities", metric_identities},
      {"Loss probes", loss_probes},
      {"Corruption statistics", corruption_statistics},
      {"Determinism", determinism},
      // Last, so it covers every coupling produced above.
      {"Marginal feasibility", marginal_sweep},
  };
  const int numbers[] = {1, 3, 4, 5, 6, 7, 8, 9, 10, 11, 2};
  std::vector<std::pair<int, std::string>> lines;
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    lines.emplace_back(numbers[i], format("%s %2d  %s: %s", o.pass ? "PASS" : "FAIL", numbers[i], criteria[i].first,
                                          o.detail.c_str()));
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& [n, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
