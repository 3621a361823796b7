#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "phonematch/corpus_io.hpp"
#include "phonematch/matrix.hpp"

namespace phonematch {

// CBOW symbol embeddings with a full softmax over the alphabet. Input vectors
// (context side) and output vectors (softmax weights) share shape m x dim.
struct PhoneEmbeddingTable {
  Matrix input;
  Matrix output;
  Alphabet alphabet;

  std::size_t size() const { return static_cast<std::size_t>(input.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(input.cols()); }
};

enum class EmbeddingKind { input, output, sum };

struct CbowConfig {
  std::size_t dim = 100;
  std::size_t window = 5;
  double step_size = 0.005;
  double clip_norm = 5.0;
  std::size_t epochs = 15;
  std::uint64_t seed = 0;
};

struct CbowGradient {
  double loss = 0.0;          // summed NLL over the utterance
  std::size_t positions = 0;  // positions with a non-empty context
  Matrix input;
  Matrix output;

  double norm() const { return std::sqrt(input.squaredNorm() + output.squaredNorm()); }
};

struct CbowStep {
  double pre_clip_norm = 0.0;
  double applied_norm = 0.0;  // norm of the parameter change
};

struct CbowTrainResult {
  PhoneEmbeddingTable table;
  // cbow_loss over the corpus after every epoch.
  std::vector<double> loss_curve;
};

// Input rows uniform on +-0.5/dim, output rows zero.
PhoneEmbeddingTable cbow_init(const Alphabet& alphabet, std::size_t dim, std::uint64_t seed);

// Loss and gradient of the summed NLL of one utterance. The context of a
// position is the mean input vector of symbols within +-window, center
// excluded, truncated at the edges. Positions without context are skipped.
CbowGradient cbow_gradient(const PhoneEmbeddingTable& table, const LabelSequence& utterance,
                           std::size_t window);

// One SGD update on one utterance with global-norm clipping.
CbowStep cbow_step(PhoneEmbeddingTable& table, const LabelSequence& utterance, std::size_t window,
                   double step_size, double clip_norm);

CbowTrainResult cbow_train(const std::vector<LabelSequence>& corpus, const Alphabet& alphabet,
                           const CbowConfig& config);

// Mean per-position NLL.
double cbow_loss(const PhoneEmbeddingTable& table, const std::vector<LabelSequence>& corpus,
                 std::size_t window);

EmbeddingMatrix embeddings(const PhoneEmbeddingTable& table, EmbeddingKind kind = EmbeddingKind::input);

}  // namespace phonematch
