#include "phonematch/pseudolabel.hpp"

#include <algorithm>
#include <cmath>

#include "phonematch/error.hpp"
#include "phonematch/random.hpp"

namespace phonematch {

const char* to_string(LabelSource source) {
  switch (source) {
    case LabelSource::matching: return "matching";
    case LabelSource::forced_alignment: return "forced_alignment";
    case LabelSource::corrupted: return "corrupted";
    case LabelSource::random_projection: return "random_projection";
  }
  return "matching";
}

LabelSource label_source_from_string(const std::string& name) {
  for (auto s : {LabelSource::matching, LabelSource::forced_alignment, LabelSource::corrupted,
                 LabelSource::random_projection}) {
    if (name == to_string(s)) return s;
  }
  throw InvalidArgument("unknown label source: " + name);
}

PseudoLabelSequence assign_pseudo_labels(const std::vector<ClusterId>& assignments,
                                         const std::vector<SymbolId>& matching,
                                         std::string utterance_id, std::size_t shift_k) {
  PseudoLabelSequence out{std::move(utterance_id), {}, LabelSource::matching, shift_k};
  out.labels.reserve(assignments.size());
  for (auto z : assignments) {
    if (z >= matching.size()) throw InvalidArgument("assign_pseudo_labels: cluster id out of range");
    out.labels.push_back(matching[z]);
  }
  return out;
}

namespace {

void check_shift(std::size_t frames, std::size_t labels, std::size_t k) {
  if (frames != labels) throw InvalidArgument("loss: one label per frame required");
  if (frames <= k) throw InvalidArgument("loss: frame count must exceed the shift k");
}

// Accumulates summed loss and gradient; returns the number of positions.
std::size_t accumulate_ce(const EmbeddingMatrix& frames, const PseudoLabelSequence& labels,
                          const LossProbe& probe, std::size_t k, double& loss, Matrix* grad) {
  if (probe.kind != ProbeKind::cross_entropy) throw InvalidArgument("ce_loss: probe is not cross-entropy");
  check_shift(frames.rows(), labels.labels.size(), k);
  if (static_cast<std::size_t>(probe.weights.rows()) != frames.dim()) {
    throw InvalidArgument("ce_loss: probe input dimension mismatch");
  }
  const std::size_t positions = frames.rows() - k;
  for (std::size_t t = 0; t < positions; ++t) {
    const SymbolId target = labels.labels[t + k];
    if (target >= static_cast<std::size_t>(probe.weights.cols())) {
      throw InvalidArgument("ce_loss: label outside the probe's output range");
    }
    const auto h = frames.row(t);
    Eigen::RowVectorXd logits = h * probe.weights;
    const double mx = logits.maxCoeff();
    Eigen::RowVectorXd prob = (logits.array() - mx).exp();
    const double z = prob.sum();
    loss += std::log(z) + mx - logits(target);
    if (grad != nullptr) {
      prob /= z;
      prob(target) -= 1.0;
      grad->noalias() += h.transpose() * prob;
    }
  }
  return positions;
}

std::size_t accumulate_mse(const EmbeddingMatrix& frames, const PseudoLabelSequence& labels,
                           const EmbeddingMatrix& targets, const LossProbe& probe, std::size_t k,
                           double& loss, Matrix* grad) {
  if (probe.kind != ProbeKind::mean_squared_error) {
    throw InvalidArgument("mse_loss: probe is not mean-squared-error");
  }
  check_shift(frames.rows(), labels.labels.size(), k);
  if (static_cast<std::size_t>(probe.weights.rows()) != frames.dim() ||
      static_cast<std::size_t>(probe.weights.cols()) != targets.dim()) {
    throw InvalidArgument("mse_loss: probe shape must be frame dim x embedding dim");
  }
  const std::size_t positions = frames.rows() - k;
  for (std::size_t t = 0; t < positions; ++t) {
    const SymbolId target = labels.labels[t + k];
    if (target >= targets.rows()) throw InvalidArgument("mse_loss: label outside the table");
    const auto h = frames.row(t);
    const Eigen::RowVectorXd residual = targets.row(target) - h * probe.weights;
    loss += residual.squaredNorm();
    if (grad != nullptr) grad->noalias() -= 2.0 * h.transpose() * residual;
  }
  return positions;
}

LossWithGradient finish(double loss, Matrix grad, std::size_t positions) {
  const double n = static_cast<double>(positions);
  return {std::max(0.0, loss / n), grad / n};
}

}  // namespace

double ce_loss(const EmbeddingMatrix& frames, const PseudoLabelSequence& labels,
               const LossProbe& probe, std::size_t k) {
  double loss = 0.0;
  const auto n = accumulate_ce(frames, labels, probe, k, loss, nullptr);
  return std::max(0.0, loss / static_cast<double>(n));
}

LossWithGradient ce_loss_gradient(const EmbeddingMatrix& frames, const PseudoLabelSequence& labels,
                                  const LossProbe& probe, std::size_t k) {
  return ce_loss_gradient(std::vector<ProbeUtterance>{{&frames, &labels}}, probe, k);
}

LossWithGradient ce_loss_gradient(const std::vector<ProbeUtterance>& batch, const LossProbe& probe,
                                  std::size_t k) {
  if (batch.empty()) throw EmptyInput("ce_loss: empty batch");
  double loss = 0.0;
  Matrix grad = Matrix::Zero(probe.weights.rows(), probe.weights.cols());
  std::size_t n = 0;
  for (const auto& u : batch) n += accumulate_ce(*u.frames, *u.labels, probe, k, loss, &grad);
  return finish(loss, std::move(grad), n);
}

double mse_loss(const EmbeddingMatrix& frames, const PseudoLabelSequence& labels,
                const EmbeddingMatrix& targets, const LossProbe& probe, std::size_t k) {
  double loss = 0.0;
  const auto n = accumulate_mse(frames, labels, targets, probe, k, loss, nullptr);
  return std::max(0.0, loss / static_cast<double>(n));
}

double mse_loss(const EmbeddingMatrix& frames, const PseudoLabelSequence& labels,
                const PhoneEmbeddingTable& table, const LossProbe& probe, std::size_t k) {
  return mse_loss(frames, labels, embeddings(table), probe, k);
}

LossWithGradient mse_loss_gradient(const EmbeddingMatrix& frames, const PseudoLabelSequence& labels,
                                   const EmbeddingMatrix& targets, const LossProbe& probe,
                                   std::size_t k) {
  return mse_loss_gradient(std::vector<ProbeUtterance>{{&frames, &labels}}, targets, probe, k);
}

LossWithGradient mse_loss_gradient(const std::vector<ProbeUtterance>& batch,
                                   const EmbeddingMatrix& targets, const LossProbe& probe,
                                   std::size_t k) {
  if (batch.empty()) throw EmptyInput("mse_loss: empty batch");
  double loss = 0.0;
  Matrix grad = Matrix::Zero(probe.weights.rows(), probe.weights.cols());
  std::size_t n = 0;
  for (const auto& u : batch) n += accumulate_mse(*u.frames, *u.labels, targets, probe, k, loss, &grad);
  return finish(loss, std::move(grad), n);
}

std::vector<bool> corruption_mask(std::size_t length, double percent, std::uint64_t seed) {
  if (!(percent >= 0.0 && percent <= 100.0)) {
    throw InvalidArgument("corrupt_labels: percent must lie in [0, 100]");
  }
  Rng rng(derive_seed(seed, "corrupt/mask"));
  const double rate = percent / 100.0;
  std::vector<bool> mask(length);
  for (std::size_t t = 0; t < length; ++t) mask[t] = rng.uniform() < rate;
  return mask;
}

PseudoLabelSequence corrupt_labels(const PseudoLabelSequence& labels, double percent,
                                   const UnigramDistribution& unigram, std::uint64_t seed,
                                   bool uniform) {
  const auto mask = corruption_mask(labels.labels.size(), percent, seed);
  for (auto s : labels.labels) {
    if (s >= unigram.size()) throw InvalidArgument("corrupt_labels: label outside the unigram's alphabet");
  }
  PseudoLabelSequence out = labels;
  if (percent == 0.0) return out;
  out.source = LabelSource::corrupted;

  std::vector<double> cdf(unigram.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < unigram.size(); ++i) {
    acc += uniform ? 1.0 / static_cast<double>(unigram.size()) : unigram[i];
    cdf[i] = acc;
  }
  Rng rng(derive_seed(seed, "corrupt/resample"));
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (!mask[t]) continue;
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    // Guard against u landing on the final boundary through rounding.
    auto idx = static_cast<std::size_t>(it - cdf.begin());
    if (idx >= cdf.size()) idx = cdf.size() - 1;
    while (!uniform && unigram[idx] == 0.0 && idx > 0) --idx;
    out.labels[t] = static_cast<SymbolId>(idx);
  }
  return out;
}

}  // namespace phonematch
