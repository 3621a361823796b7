#include "phonematch/fixture.hpp"

#include <string>

#include "phonematch/error.hpp"
#include "phonematch/random.hpp"

namespace phonematch {

namespace {

const char* const kPhoneNames[] = {
    "sil", "spn", "aa", "ae", "ah", "ao", "aw", "ay", "b",  "ch", "d",  "dh", "eh", "er",
    "ey",  "f",   "g",  "hh", "ih", "iy", "jh", "k",  "l",  "m",  "n",  "ng", "ow", "oy",
    "p",   "r",   "s",  "sh", "t",  "th", "uh", "uw", "v",  "w",  "y",  "z",  "zh"};

Alphabet fixture_alphabet(std::size_t n) {
  std::vector<std::string> symbols;
  for (std::size_t i = 0; i < n; ++i) {
    symbols.emplace_back(i < std::size(kPhoneNames) ? kPhoneNames[i] : "x" + std::to_string(i));
  }
  return Alphabet(std::move(symbols));
}

}  // namespace

SyntheticFixture make_fixture(const FixtureOptions& o) {
  if (o.phones < 2 || o.dim < 1 || o.utterances < 2 || o.phones_per_utterance < 1 ||
      o.min_duration < 1 || o.max_duration < o.min_duration) {
    throw InvalidArgument("make_fixture: invalid options");
  }
  Rng rng(o.seed);
  const auto m = static_cast<Eigen::Index>(o.phones);
  const auto d = static_cast<Eigen::Index>(o.dim);

  SyntheticFixture fx;
  fx.alphabet = fixture_alphabet(o.phones);

  Matrix y(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) y(i, j) = rng.normal();
  }
  fx.phone_embeddings = EmbeddingMatrix(y, MatrixRole::phone_embeddings);

  std::vector<double> weights(o.phones);
  for (auto& w : weights) w = rng.uniform(0.5, 1.5);
  fx.phone_unigram = UnigramDistribution::from_counts(weights);
  std::vector<double> cdf(o.phones);
  double acc = 0.0;
  for (std::size_t i = 0; i < o.phones; ++i) cdf[i] = (acc += fx.phone_unigram[i]);

  Eigen::MatrixXd g(d + 1, d + 1);
  for (Eigen::Index i = 0; i <= d; ++i) {
    for (Eigen::Index j = 0; j <= d; ++j) g(i, j) = rng.normal();
  }
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  fx.isometry = q.leftCols(d);
  fx.speaker_axis = q.col(d);
  const Matrix centers = y * fx.isometry.transpose();  // m x (d + 1)

  std::vector<Eigen::RowVectorXd> rows;
  for (std::size_t u = 0; u < o.utterances; ++u) {
    const std::string uid = "utt" + std::to_string(1000 + u);
    const double offset = o.speaker_scale * rng.normal();
    LabelSequence phones{uid, {}};
    LabelSequence align{uid, {}};
    for (std::size_t k = 0; k < o.phones_per_utterance; ++k) {
      const double r = rng.uniform();
      std::size_t ph = 0;
      while (ph + 1 < o.phones && cdf[ph] <= r) ++ph;
      phones.tokens.push_back(static_cast<SymbolId>(ph));
      const std::size_t dur = o.min_duration + rng.below(o.max_duration - o.min_duration + 1);
      for (std::size_t t = 0; t < dur; ++t) {
        Eigen::RowVectorXd h = centers.row(static_cast<Eigen::Index>(ph)) + offset * fx.speaker_axis.transpose();
        for (Eigen::Index j = 0; j <= d; ++j) h(j) += o.noise * rng.normal();
        rows.push_back(std::move(h));
        align.tokens.push_back(static_cast<SymbolId>(ph));
      }
    }
    fx.segments.push_back({uid, align.tokens.size()});
    fx.phone_sequences.push_back(std::move(phones));
    fx.alignments.push_back(std::move(align));
  }
  Matrix frames(static_cast<Eigen::Index>(rows.size()), d + 1);
  for (std::size_t t = 0; t < rows.size(); ++t) frames.row(static_cast<Eigen::Index>(t)) = rows[t];
  fx.frames = EmbeddingMatrix(std::move(frames), MatrixRole::frames);
  return fx;
}

void write_fixture(const std::filesystem::path& dir, const SyntheticFixture& fx) {
  write_matrix(dir / "frames.emb", fx.frames);
  write_segments(dir / "segments.txt", fx.segments);
  write_labels(dir / "alignments.txt", {{"source=forced_alignment"}, fx.alignments}, fx.alphabet);
  write_labels(dir / "phone_sequences.txt", {{}, fx.phone_sequences}, fx.alphabet);
  write_matrix(dir / "phone_embeddings.emb", fx.phone_embeddings);
  write_alphabet(dir / "alphabet.txt", fx.alphabet);
  const std::string conf =
      "# synthetic fixture: isometric copy of the phone embeddings plus an utterance offset\n"
      "frames = frames.emb\n"
      "segments = segments.txt\n"
      "alignments = alignments.txt\n"
      "phone_sequences = phone_sequences.txt\n"
      "alphabet = alphabet.txt\n"
      "embeddings = phone_embeddings.emb\n"
      "clusters = " + std::to_string(fx.phone_embeddings.rows()) + "\n"
      "collapse_count = 1\n"
      "kmeans_restarts = 10\n"
      "epsilon = 0.002\n";
  atomic_write(dir / "fixture.conf", conf);
}

}  // namespace phonematch
