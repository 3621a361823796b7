#include "phonematch/corpus_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "phonematch/error.hpp"

namespace phonematch {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kMagic = "EMB1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    ++lineno;
    f(line, lineno);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
}

std::string where(const fs::path& path, std::size_t lineno) {
  return path.string() + ":" + std::to_string(lineno);
}

std::size_t parse_count(std::string_view s, const std::string& context) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw FormatError(context + ": expected a non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

// --- Alphabet ----------------------------------------------------------------

Alphabet::Alphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (symbols_[i].empty()) throw DataError("empty symbol in alphabet");
    if (!index_.emplace(symbols_[i], static_cast<SymbolId>(i)).second) {
      throw DataError("duplicate symbol in alphabet: " + symbols_[i]);
    }
  }
}

Alphabet Alphabet::numeric(std::size_t n) {
  std::vector<std::string> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = std::to_string(i);
  return Alphabet(std::move(s));
}

std::optional<SymbolId> Alphabet::find(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SymbolId Alphabet::id(std::string_view symbol) const {
  if (auto id = find(symbol)) return *id;
  throw DataError("unknown symbol: " + std::string(symbol));
}

// --- EMB1 --------------------------------------------------------------------

std::string encode_matrix(const EmbeddingMatrix& m) {
  std::string out;
  out.reserve(12 + 4 * m.rows() * m.dim());
  out.append(kMagic);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.dim()));
  const Matrix& d = m.data();
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(d(i, j))));
    }
  }
  return out;
}

EmbeddingMatrix decode_matrix(std::string_view bytes, MatrixRole role) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != kMagic) {
    throw FormatError("not an EMB1 matrix (bad magic)");
  }
  const std::uint64_t rows = get_u32(bytes, 4);
  const std::uint64_t dim = get_u32(bytes, 8);
  if (rows == 0 || dim == 0) throw FormatError("EMB1 header has zero rows or dim");
  const std::uint64_t expected = 12 + 4 * rows * dim;
  if (bytes.size() < expected) throw FormatError("EMB1 payload truncated");
  if (bytes.size() > expected) throw FormatError("EMB1 payload has trailing bytes");
  Matrix data(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  std::size_t offset = 12;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j, offset += 4) {
      const float v = std::bit_cast<float>(get_u32(bytes, offset));
      if (!std::isfinite(v)) throw DataError("EMB1 contains a non-finite value");
      data(i, j) = v;
    }
  }
  return EmbeddingMatrix(std::move(data), role);
}

EmbeddingMatrix read_matrix(const fs::path& path, MatrixRole role) {
  try {
    return decode_matrix(read_file(path), role);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_matrix(const fs::path& path, const EmbeddingMatrix& m) {
  atomic_write(path, encode_matrix(m));
}

// --- label files -------------------------------------------------------------

LabelFile parse_labels(std::string_view text, const Alphabet& alphabet) {
  LabelFile file;
  for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    if (!line.empty() && line.front() == '#') {
      std::string_view h = line.substr(1);
      while (!h.empty() && h.front() == ' ') h.remove_prefix(1);
      file.header.emplace_back(h);
      return;
    }
    auto fields = split_ws(line);
    if (fields.empty()) return;
    if (fields.size() < 2) {
      throw FormatError("line " + std::to_string(lineno) + ": utterance has no symbols");
    }
    LabelSequence seq;
    seq.utterance_id = std::string(fields[0]);
    seq.tokens.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      auto id = alphabet.find(fields[i]);
      if (!id) {
        throw DataError("line " + std::to_string(lineno) + ": unknown symbol '" +
                        std::string(fields[i]) + "'");
      }
      seq.tokens.push_back(*id);
    }
    file.sequences.push_back(std::move(seq));
  });
  return file;
}

std::string format_labels(const LabelFile& file, const Alphabet& alphabet) {
  std::string out;
  for (const auto& h : file.header) {
    out += "# ";
    out += h;
    out += '\n';
  }
  for (const auto& seq : file.sequences) {
    if (seq.tokens.empty()) throw EmptyInput("label sequence '" + seq.utterance_id + "' is empty");
    out += seq.utterance_id;
    for (SymbolId t : seq.tokens) {
      if (t >= alphabet.size()) throw DataError("token id out of alphabet range");
      out += ' ';
      out += alphabet.symbol(t);
    }
    out += '\n';
  }
  return out;
}

LabelFile read_labels(const fs::path& path, const Alphabet& alphabet) {
  try {
    return parse_labels(read_file(path), alphabet);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_labels(const fs::path& path, const LabelFile& file, const Alphabet& alphabet) {
  atomic_write(path, format_labels(file, alphabet));
}

// --- lexicon / alphabet / segments ------------------------------------------

Lexicon parse_lexicon(std::string_view text) {
  std::vector<std::pair<std::string, std::vector<std::string>>> raw;
  std::set<std::string> phones{std::string(kSilence), std::string(kSpokenNoise)};
  for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    if (line.empty() || line.front() == '#') return;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      if (split_ws(line).empty()) return;
      throw FormatError("lexicon line " + std::to_string(lineno) + ": missing TAB");
    }
    std::string word(line.substr(0, tab));
    auto prons = split_ws(line.substr(tab + 1));
    if (word.empty() || prons.empty()) {
      throw FormatError("lexicon line " + std::to_string(lineno) + ": empty word or pronunciation");
    }
    std::vector<std::string> ph(prons.begin(), prons.end());
    phones.insert(ph.begin(), ph.end());
    raw.emplace_back(std::move(word), std::move(ph));
  });
  Lexicon lex;
  lex.alphabet = Alphabet(std::vector<std::string>(phones.begin(), phones.end()));
  for (auto& [word, ph] : raw) {
    std::vector<SymbolId> ids;
    ids.reserve(ph.size());
    for (const auto& p : ph) ids.push_back(lex.alphabet.id(p));
    // First pronunciation wins for words listed more than once.
    lex.entries.emplace(std::move(word), std::move(ids));
  }
  return lex;
}

Lexicon read_lexicon(const fs::path& path) {
  try {
    return parse_lexicon(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Alphabet read_alphabet(const fs::path& path) {
  std::vector<std::string> symbols;
  for_each_line(read_file(path), [&](std::string_view line, std::size_t lineno) {
    auto f = split_ws(line);
    if (f.empty()) return;
    if (f.size() != 1) throw FormatError(where(path, lineno) + ": expected one symbol per line");
    symbols.emplace_back(f[0]);
  });
  if (symbols.empty()) throw EmptyInput(path.string() + ": empty alphabet");
  return Alphabet(std::move(symbols));
}

void write_alphabet(const fs::path& path, const Alphabet& alphabet) {
  std::string out;
  for (const auto& s : alphabet.symbols()) {
    out += s;
    out += '\n';
  }
  atomic_write(path, out);
}

std::vector<Segment> read_segments(const fs::path& path) {
  std::vector<Segment> segs;
  for_each_line(read_file(path), [&](std::string_view line, std::size_t lineno) {
    auto f = split_ws(line);
    if (f.empty() || f[0].front() == '#') return;
    if (f.size() != 2) throw FormatError(where(path, lineno) + ": expected 'utterance_id frames'");
    Segment s{std::string(f[0]), parse_count(f[1], where(path, lineno))};
    if (s.frames == 0) throw DataError(where(path, lineno) + ": utterance with zero frames");
    segs.push_back(std::move(s));
  });
  if (segs.empty()) throw EmptyInput(path.string() + ": no segments");
  return segs;
}

void write_segments(const fs::path& path, const std::vector<Segment>& segments) {
  std::string out;
  for (const auto& s : segments) out += s.utterance_id + ' ' + std::to_string(s.frames) + '\n';
  atomic_write(path, out);
}

std::vector<std::pair<std::string, std::vector<std::string>>> read_transcripts(
    const fs::path& path) {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  for_each_line(read_file(path), [&](std::string_view line, std::size_t) {
    auto f = split_ws(line);
    if (f.empty() || f[0].front() == '#') return;
    std::vector<std::string> words(f.begin() + 1, f.end());
    out.emplace_back(std::string(f[0]), std::move(words));
  });
  if (out.empty()) throw EmptyInput(path.string() + ": no transcripts");
  return out;
}

UnigramDistribution read_unigram(const fs::path& path) {
  std::vector<double> w;
  for_each_line(read_file(path), [&](std::string_view line, std::size_t lineno) {
    auto f = split_ws(line);
    if (f.empty() || f[0].front() == '#') return;
    if (f.size() != 2) throw FormatError(where(path, lineno) + ": expected 'index weight'");
    if (parse_count(f[0], where(path, lineno)) != w.size()) {
      throw FormatError(where(path, lineno) + ": indices must be consecutive from 0");
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), v);
    if (ec != std::errc() || p != f[1].data() + f[1].size()) {
      throw FormatError(where(path, lineno) + ": bad weight");
    }
    w.push_back(v);
  });
  try {
    return UnigramDistribution(std::move(w));
  } catch (const Error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_unigram(const fs::path& path, const UnigramDistribution& u) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < u.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu\t%.17g\n", i, u[i]);
    out += buf;
  }
  atomic_write(path, out);
}

// --- operations --------------------------------------------------------------

LabelSequence expand_text(const std::vector<std::string>& words, const Lexicon& lexicon,
                          std::string utterance_id) {
  if (words.empty()) throw EmptyInput("expand_text: no words");
  const SymbolId spn = lexicon.alphabet.id(kSpokenNoise);
  LabelSequence seq{std::move(utterance_id), {}};
  for (const auto& w : words) {
    auto it = lexicon.entries.find(w);
    if (it == lexicon.entries.end()) {
      seq.tokens.push_back(spn);
    } else {
      seq.tokens.insert(seq.tokens.end(), it->second.begin(), it->second.end());
    }
  }
  return seq;
}

UnigramDistribution unigram_from_sequences(const std::vector<LabelSequence>& seqs,
                                           std::size_t alphabet_size) {
  std::vector<double> counts(alphabet_size, 0.0);
  for (const auto& s : seqs) {
    for (SymbolId t : s.tokens) {
      if (t >= alphabet_size) throw InvalidArgument("token id exceeds alphabet size");
      counts[t] += 1.0;
    }
  }
  if (alphabet_size == 0 || std::all_of(counts.begin(), counts.end(), [](double c) { return c == 0.0; })) {
    throw EmptyInput("unigram_from_sequences: no tokens");
  }
  return UnigramDistribution::from_counts(counts);
}

std::vector<SymbolId> concatenate(const std::vector<LabelSequence>& seqs) {
  std::vector<SymbolId> flat;
  for (const auto& s : seqs) flat.insert(flat.end(), s.tokens.begin(), s.tokens.end());
  return flat;
}

std::vector<LabelSequence> split_by_segments(const std::vector<SymbolId>& flat,
                                             const std::vector<Segment>& segments) {
  std::size_t total = 0;
  for (const auto& s : segments) total += s.frames;
  if (total != flat.size()) {
    throw InvalidArgument("segments cover " + std::to_string(total) + " frames but " +
                          std::to_string(flat.size()) + " labels were given");
  }
  std::vector<LabelSequence> out;
  out.reserve(segments.size());
  auto it = flat.begin();
  for (const auto& s : segments) {
    out.push_back({s.utterance_id, std::vector<SymbolId>(it, it + static_cast<std::ptrdiff_t>(s.frames))});
    it += static_cast<std::ptrdiff_t>(s.frames);
  }
  return out;
}

// --- files -------------------------------------------------------------------

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput(path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void atomic_write(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace phonematch
