#include "phonematch/cbow.hpp"

#include <algorithm>
#include <cmath>

#include "phonematch/error.hpp"
#include "phonematch/random.hpp"

namespace phonematch {

namespace {

void validate(const PhoneEmbeddingTable& table, const LabelSequence& utterance, std::size_t window) {
  if (window == 0) throw InvalidArgument("cbow: window must be >= 1");
  for (auto t : utterance.tokens) {
    if (t >= table.size()) throw InvalidArgument("cbow: token outside the table's alphabet");
  }
}

// Accumulates into `grad` when non-null.
double utterance_nll(const PhoneEmbeddingTable& table, const LabelSequence& utterance,
                     std::size_t window, CbowGradient* grad, std::size_t& positions) {
  const auto& tok = utterance.tokens;
  const std::size_t len = tok.size();
  double loss = 0.0;
  Vector h(table.input.cols());
  for (std::size_t t = 0; t < len; ++t) {
    const std::size_t lo = t >= window ? t - window : 0;
    const std::size_t hi = std::min(len - 1, t + window);
    const std::size_t ctx = hi - lo;  // center excluded
    if (ctx == 0) continue;
    h.setZero();
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j != t) h += table.input.row(tok[j]).transpose();
    }
    h /= static_cast<double>(ctx);

    Vector logits = table.output * h;
    const double mx = logits.maxCoeff();
    Vector prob = (logits.array() - mx).exp();
    const double z = prob.sum();
    loss += std::log(z) + mx - logits(tok[t]);
    ++positions;

    if (grad == nullptr) continue;
    prob /= z;
    prob(tok[t]) -= 1.0;
    grad->output.noalias() += prob * h.transpose();
    const Vector gh = table.output.transpose() * prob / static_cast<double>(ctx);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j != t) grad->input.row(tok[j]) += gh.transpose();
    }
  }
  return loss;
}

}  // namespace

PhoneEmbeddingTable cbow_init(const Alphabet& alphabet, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw InvalidArgument("cbow: dim must be >= 1");
  if (alphabet.size() == 0) throw EmptyInput("cbow: empty alphabet");
  const auto m = static_cast<Eigen::Index>(alphabet.size());
  const auto d = static_cast<Eigen::Index>(dim);
  PhoneEmbeddingTable table{Matrix(m, d), Matrix::Zero(m, d), alphabet};
  Rng rng(seed);
  const double r = 0.5 / static_cast<double>(dim);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) table.input(i, j) = rng.uniform(-r, r);
  }
  return table;
}

CbowGradient cbow_gradient(const PhoneEmbeddingTable& table, const LabelSequence& utterance,
                           std::size_t window) {
  validate(table, utterance, window);
  CbowGradient g;
  g.input = Matrix::Zero(table.input.rows(), table.input.cols());
  g.output = Matrix::Zero(table.output.rows(), table.output.cols());
  g.loss = utterance_nll(table, utterance, window, &g, g.positions);
  return g;
}

CbowStep cbow_step(PhoneEmbeddingTable& table, const LabelSequence& utterance, std::size_t window,
                   double step_size, double clip_norm) {
  const CbowGradient g = cbow_gradient(table, utterance, window);
  CbowStep step;
  step.pre_clip_norm = g.norm();
  double scale = step_size;
  if (step.pre_clip_norm > clip_norm) scale *= clip_norm / step.pre_clip_norm;
  table.input.noalias() -= scale * g.input;
  table.output.noalias() -= scale * g.output;
  step.applied_norm = scale * step.pre_clip_norm;
  return step;
}

CbowTrainResult cbow_train(const std::vector<LabelSequence>& corpus, const Alphabet& alphabet,
                           const CbowConfig& config) {
  if (corpus.empty()) throw EmptyInput("cbow_train: empty corpus");
  if (config.window == 0) throw InvalidArgument("cbow: window must be >= 1");
  if (config.dim == 0) throw InvalidArgument("cbow: dim must be >= 1");
  if (!(config.step_size > 0.0)) throw InvalidArgument("cbow: step_size must be > 0");
  if (!(config.clip_norm > 0.0)) throw InvalidArgument("cbow: clip_norm must be > 0");
  for (const auto& s : corpus) {
    if (s.tokens.empty()) throw EmptyInput("cbow_train: empty sequence '" + s.utterance_id + "'");
  }

  CbowTrainResult result{cbow_init(alphabet, config.dim, config.seed), {}};
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& utt : corpus) {
      cbow_step(result.table, utt, config.window, config.step_size, config.clip_norm);
    }
    if (!result.table.input.allFinite() || !result.table.output.allFinite()) {
      throw NumericalError("cbow: parameters became non-finite", epoch);
    }
    result.loss_curve.push_back(cbow_loss(result.table, corpus, config.window));
  }
  return result;
}

double cbow_loss(const PhoneEmbeddingTable& table, const std::vector<LabelSequence>& corpus,
                 std::size_t window) {
  double total = 0.0;
  std::size_t positions = 0;
  for (const auto& utt : corpus) {
    validate(table, utt, window);
    total += utterance_nll(table, utt, window, nullptr, positions);
  }
  if (positions == 0) throw EmptyInput("cbow_loss: no position has a context");
  return std::max(0.0, total / static_cast<double>(positions));
}

EmbeddingMatrix embeddings(const PhoneEmbeddingTable& table, EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::input:
      return EmbeddingMatrix(table.input, MatrixRole::phone_embeddings);
    case EmbeddingKind::output:
      return EmbeddingMatrix(table.output, MatrixRole::phone_embeddings);
    case EmbeddingKind::sum:
      break;
  }
  return EmbeddingMatrix(table.input + table.output, MatrixRole::phone_embeddings);
}

}  // namespace phonematch
