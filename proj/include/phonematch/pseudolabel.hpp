#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "phonematch/cbow.hpp"
#include "phonematch/cluster.hpp"
#include "phonematch/corpus_io.hpp"
#include "phonematch/matrix.hpp"

namespace phonematch {

enum class LabelSource { matching, forced_alignment, corrupted, random_projection };

const char* to_string(LabelSource source);
LabelSource label_source_from_string(const std::string& name);

struct PseudoLabelSequence {
  std::string utterance_id;
  std::vector<SymbolId> labels;
  LabelSource source = LabelSource::matching;
  std::size_t shift_k = 0;
};

enum class ProbeKind { cross_entropy, mean_squared_error };

// Linear probe: predictions are h W for a frame row h, W is d_in x d_out.
struct LossProbe {
  Matrix weights;
  ProbeKind kind = ProbeKind::cross_entropy;
};

struct LossWithGradient {
  double loss = 0.0;
  Matrix gradient;  // d loss / d W
};

// labels[t] = matching[assignments[t]].
PseudoLabelSequence assign_pseudo_labels(const std::vector<ClusterId>& assignments,
                                         const std::vector<SymbolId>& matching,
                                         std::string utterance_id = {}, std::size_t shift_k = 0);

// Mean over t < T-k of -log softmax(h_t W)[s_{t+k}].
double ce_loss(const EmbeddingMatrix& frames, const PseudoLabelSequence& labels,
               const LossProbe& probe, std::size_t k);
LossWithGradient ce_loss_gradient(const EmbeddingMatrix& frames, const PseudoLabelSequence& labels,
                                  const LossProbe& probe, std::size_t k);

// Mean over t < T-k of ||y_{s_{t+k}} - h_t W||^2 with y the rows of `targets`.
double mse_loss(const EmbeddingMatrix& frames, const PseudoLabelSequence& labels,
                const EmbeddingMatrix& targets, const LossProbe& probe, std::size_t k);
LossWithGradient mse_loss_gradient(const EmbeddingMatrix& frames, const PseudoLabelSequence& labels,
                                   const EmbeddingMatrix& targets, const LossProbe& probe,
                                   std::size_t k);
double mse_loss(const EmbeddingMatrix& frames, const PseudoLabelSequence& labels,
                const PhoneEmbeddingTable& table, const LossProbe& probe, std::size_t k);

// Pooled over utterances: mean over every shifted position of every utterance.
struct ProbeUtterance {
  const EmbeddingMatrix* frames;
  const PseudoLabelSequence* labels;
};
LossWithGradient ce_loss_gradient(const std::vector<ProbeUtterance>& batch, const LossProbe& probe,
                                  std::size_t k);
LossWithGradient mse_loss_gradient(const std::vector<ProbeUtterance>& batch,
                                   const EmbeddingMatrix& targets, const LossProbe& probe,
                                   std::size_t k);

// Each position is selected with probability percent/100 and resampled from
// `unigram` (or uniformly). The selection mask depends only on (seed, length,
// percent).
PseudoLabelSequence corrupt_labels(const PseudoLabelSequence& labels, double percent,
                                   const UnigramDistribution& unigram, std::uint64_t seed,
                                   bool uniform = false);

// Selection mask used by corrupt_labels.
std::vector<bool> corruption_mask(std::size_t length, double percent, std::uint64_t seed);

}  // namespace phonematch
