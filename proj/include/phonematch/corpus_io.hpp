#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "phonematch/matrix.hpp"

namespace phonematch {

using SymbolId = std::uint32_t;

// Ordered, duplicate-free list of symbol strings.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> symbols);

  // Alphabet "0", "1", ..., "n-1" used for cluster-ID label files.
  static Alphabet numeric(std::size_t n);

  std::size_t size() const { return symbols_.size(); }
  const std::string& symbol(SymbolId id) const { return symbols_.at(id); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  std::optional<SymbolId> find(std::string_view symbol) const;
  // Throws DataError for unknown symbols.
  SymbolId id(std::string_view symbol) const;

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, SymbolId> index_;
};

struct LabelSequence {
  std::string utterance_id;
  std::vector<SymbolId> tokens;
};

// Label file contents: optional `# ...` header lines plus one sequence per line.
struct LabelFile {
  std::vector<std::string> header;
  std::vector<LabelSequence> sequences;
};

inline constexpr std::string_view kSilence = "sil";
inline constexpr std::string_view kSpokenNoise = "spn";

struct Lexicon {
  Alphabet alphabet;
  std::map<std::string, std::vector<SymbolId>, std::less<>> entries;
};

// Utterance boundaries of a frame matrix: frames are stored utterance after
// utterance in this order.
struct Segment {
  std::string utterance_id;
  std::size_t frames = 0;
};

// --- EMB1 matrices --------------------------------------------------------

// Encodes `EMB1`, rows and dim (u32 LE), then row-major f32 LE values.
std::string encode_matrix(const EmbeddingMatrix& m);
EmbeddingMatrix decode_matrix(std::string_view bytes, MatrixRole role = MatrixRole::frames);

EmbeddingMatrix read_matrix(const std::filesystem::path& path,
                            MatrixRole role = MatrixRole::frames);
void write_matrix(const std::filesystem::path& path, const EmbeddingMatrix& m);

// --- text formats ----------------------------------------------------------

// Parses `utterance_id sym sym ...` lines; `#` lines are header.
LabelFile parse_labels(std::string_view text, const Alphabet& alphabet);
std::string format_labels(const LabelFile& file, const Alphabet& alphabet);
LabelFile read_labels(const std::filesystem::path& path, const Alphabet& alphabet);
void write_labels(const std::filesystem::path& path, const LabelFile& file,
                  const Alphabet& alphabet);

// One `word TAB phone phone ...` per line. The alphabet is the sorted set of
// phones used, plus `sil` and `spn`.
Lexicon parse_lexicon(std::string_view text);
Lexicon read_lexicon(const std::filesystem::path& path);

// One symbol per line.
Alphabet read_alphabet(const std::filesystem::path& path);
void write_alphabet(const std::filesystem::path& path, const Alphabet& alphabet);

// `utterance_id frame_count` per line.
std::vector<Segment> read_segments(const std::filesystem::path& path);
void write_segments(const std::filesystem::path& path, const std::vector<Segment>& segments);

// Transcript file: `utterance_id word word ...` per line.
std::vector<std::pair<std::string, std::vector<std::string>>> read_transcripts(
    const std::filesystem::path& path);

UnigramDistribution read_unigram(const std::filesystem::path& path);
// `index TAB weight` per line, weights printed with 17 significant digits.
void write_unigram(const std::filesystem::path& path, const UnigramDistribution& u);

// --- operations -------------------------------------------------------------

// Concatenated pronunciations; OOV words become a single `spn`.
LabelSequence expand_text(const std::vector<std::string>& words, const Lexicon& lexicon,
                          std::string utterance_id = {});

UnigramDistribution unigram_from_sequences(const std::vector<LabelSequence>& seqs,
                                           std::size_t alphabet_size);

// Flattens sequences into one token stream, in order.
std::vector<SymbolId> concatenate(const std::vector<LabelSequence>& seqs);

// Splits a flat per-frame stream into sequences following `segments`.
std::vector<LabelSequence> split_by_segments(const std::vector<SymbolId>& flat,
                                             const std::vector<Segment>& segments);

// --- files ------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file then renames over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

}  // namespace phonematch
