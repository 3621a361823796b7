#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "phonematch/corpus_io.hpp"
#include "phonematch/matrix.hpp"

namespace phonematch {

// Synthetic corpus whose cluster geometry is an exact isometric copy of the
// symbol embeddings. Frames live in dim + 1 dimensions: the embeddings are
// mapped in through orthonormal columns, and each utterance carries an
// additive offset along the remaining axis (a stand-in speaker direction).
struct FixtureOptions {
  std::size_t phones = 20;
  std::size_t dim = 16;
  std::size_t utterances = 30;
  std::size_t phones_per_utterance = 40;
  std::size_t min_duration = 3;
  std::size_t max_duration = 8;
  double noise = 0.05;
  double speaker_scale = 2.0;
  std::uint64_t seed = 0;
};

struct SyntheticFixture {
  Alphabet alphabet;
  EmbeddingMatrix phone_embeddings;  // phones x dim
  UnigramDistribution phone_unigram;
  EmbeddingMatrix frames;            // T x (dim + 1)
  std::vector<Segment> segments;
  std::vector<LabelSequence> alignments;       // per frame
  std::vector<LabelSequence> phone_sequences;  // per phone token
  Matrix isometry;                   // (dim + 1) x dim, orthonormal columns
  Vector speaker_axis;               // unit, orthogonal to the isometry's range
};

SyntheticFixture make_fixture(const FixtureOptions& options);

// Writes frames.emb, segments.txt, alignments.txt, phone_sequences.txt,
// phone_embeddings.emb, alphabet.txt and fixture.conf into `dir`.
void write_fixture(const std::filesystem::path& dir, const SyntheticFixture& fixture);

}  // namespace phonematch
