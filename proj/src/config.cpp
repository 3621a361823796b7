#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

#include "phonematch/corpus_io.hpp"
#include "phonematch/gw_match.hpp"
#include "phonematch/pipeline.hpp"
#include "phonematch/random.hpp"

namespace phonematch {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config key '" + std::string(key) + "': bad value '" + std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true/false");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* kind_name(EmbeddingKind k) {
  switch (k) {
    case EmbeddingKind::input: return "input";
    case EmbeddingKind::output: return "output";
    case EmbeddingKind::sum: return "sum";
  }
  return "input";
}

}  // namespace

void PipelineConfig::set(std::string_view key, std::string_view value, const fs::path& base) {
  value = trim(value);
  auto path = [&](fs::path& dst) {
    if (value.empty()) {
      dst.clear();
      return;
    }
    fs::path p{std::string(value)};
    dst = (p.is_relative() && !base.empty()) ? (base / p).lexically_normal() : p;
  };
  auto count = [&](std::size_t& dst) { dst = parse_number<std::size_t>(key, value); };
  auto real = [&](double& dst) { dst = parse_number<double>(key, value); };

  if (key == "frames") return path(frames);
  if (key == "segments") return path(segments);
  if (key == "speakers") return path(speakers);
  if (key == "features") return path(features);
  if (key == "text") return path(text);
  if (key == "lexicon") return path(lexicon);
  if (key == "phone_sequences") return path(phone_sequences);
  if (key == "alphabet") return path(alphabet);
  if (key == "embeddings") return path(embeddings);
  if (key == "alignments") return path(alignments);
  if (key == "out_dir") {
    out_dir = fs::path(std::string(value));
    return;
  }
  if (key == "seed") {
    seed = parse_number<std::uint64_t>(key, value);
    return;
  }
  if (key == "collapse_count") return count(collapse_count);
  if (key == "collapse_source") {
    if (value == "utterance") collapse_source = CollapseSource::utterance;
    else if (value == "speaker") collapse_source = CollapseSource::speaker;
    else throw ConfigError("collapse_source must be 'utterance' or 'speaker'");
    return;
  }
  if (key == "clusters") return count(clusters);
  if (key == "kmeans_epochs") return count(kmeans_epochs);
  if (key == "kmeans_restarts") return count(kmeans_restarts);
  if (key == "codebook_size") return count(codebook_size);
  if (key == "code_dim") return count(code_dim);
  if (key == "cbow_dim") return count(cbow_dim);
  if (key == "cbow_epochs") return count(cbow_epochs);
  if (key == "window") return count(window);
  if (key == "step_size") return real(step_size);
  if (key == "clip_norm") return real(clip_norm);
  if (key == "embedding_kind") {
    if (value == "input") embedding_kind = EmbeddingKind::input;
    else if (value == "output") embedding_kind = EmbeddingKind::output;
    else if (value == "sum") embedding_kind = EmbeddingKind::sum;
    else throw ConfigError("embedding_kind must be input, output or sum");
    return;
  }
  if (key == "epsilon") {
    if (value == "apc") epsilon = kEpsilonApc;
    else if (value == "cpc") epsilon = kEpsilonCpc;
    else real(epsilon);
    return;
  }
  if (key == "outer_iterations") return count(outer_iterations);
  if (key == "inner_iterations") return count(inner_iterations);
  if (key == "restarts") return count(restarts);
  if (key == "shift_k") return count(shift_k);
  if (key == "corrupt_percent") return real(corrupt_percent);
  if (key == "corrupt_uniform") {
    corrupt_uniform = parse_bool(key, value);
    return;
  }
  if (key == "neighbors_top") return count(neighbors_top);
  if (key == "neighbors_metric") {
    if (value == "euclidean") neighbors_metric = NeighborMetric::euclidean;
    else if (value == "cosine") neighbors_metric = NeighborMetric::cosine;
    else throw ConfigError("neighbors_metric must be euclidean or cosine");
    return;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void PipelineConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid config: ") + what);
  };
  need(clusters >= 1, "clusters must be >= 1");
  need(kmeans_epochs >= 1, "kmeans_epochs must be >= 1");
  need(kmeans_restarts >= 1, "kmeans_restarts must be >= 1");
  need(codebook_size >= 1, "codebook_size must be >= 1");
  need(code_dim >= 1, "code_dim must be >= 1");
  need(cbow_dim >= 1, "cbow_dim must be >= 1");
  need(cbow_epochs >= 1, "cbow_epochs must be >= 1");
  need(window >= 1, "window must be >= 1");
  need(step_size > 0.0, "step_size must be > 0");
  need(clip_norm > 0.0, "clip_norm must be > 0");
  need(epsilon > 0.0, "epsilon must be > 0");
  need(outer_iterations >= 1, "outer_iterations must be >= 1");
  need(inner_iterations >= 1, "inner_iterations must be >= 1");
  need(corrupt_percent >= 0.0 && corrupt_percent <= 100.0, "corrupt_percent must lie in [0, 100]");
  need(neighbors_top >= 1, "neighbors_top must be >= 1");
  need(collapse_source != CollapseSource::speaker || !speakers.empty(),
       "collapse_source = speaker needs a speakers file");
}

std::string PipelineConfig::canonical() const {
  std::map<std::string, std::string> kv{
      {"alignments", alignments.string()},
      {"alphabet", alphabet.string()},
      {"cbow_dim", std::to_string(cbow_dim)},
      {"cbow_epochs", std::to_string(cbow_epochs)},
      {"clip_norm", fmt(clip_norm)},
      {"clusters", std::to_string(clusters)},
      {"code_dim", std::to_string(code_dim)},
      {"codebook_size", std::to_string(codebook_size)},
      {"collapse_count", std::to_string(collapse_count)},
      {"collapse_source", collapse_source == CollapseSource::utterance ? "utterance" : "speaker"},
      {"corrupt_percent", fmt(corrupt_percent)},
      {"corrupt_uniform", corrupt_uniform ? "true" : "false"},
      {"embedding_kind", kind_name(embedding_kind)},
      {"embeddings", embeddings.string()},
      {"epsilon", fmt(epsilon)},
      {"features", features.string()},
      {"frames", frames.string()},
      {"inner_iterations", std::to_string(inner_iterations)},
      {"kmeans_epochs", std::to_string(kmeans_epochs)},
      {"kmeans_restarts", std::to_string(kmeans_restarts)},
      {"lexicon", lexicon.string()},
      {"neighbors_metric", neighbors_metric == NeighborMetric::euclidean ? "euclidean" : "cosine"},
      {"neighbors_top", std::to_string(neighbors_top)},
      {"outer_iterations", std::to_string(outer_iterations)},
      {"phone_sequences", phone_sequences.string()},
      {"restarts", std::to_string(restarts)},
      {"seed", std::to_string(seed)},
      {"segments", segments.string()},
      {"shift_k", std::to_string(shift_k)},
      {"speakers", speakers.string()},
      {"step_size", fmt(step_size)},
      {"text", text.string()},
      {"window", std::to_string(window)},
  };
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + '\n';
  return out;
}

std::uint64_t PipelineConfig::hash() const {
  // Input paths are excluded: their contents enter the manifest separately,
  // so relocating a dataset does not change the hash.
  static const std::array<std::string_view, 10> path_keys = {
      "alignments", "alphabet", "embeddings", "features", "frames",
      "lexicon", "phone_sequences", "segments", "speakers", "text"};
  std::uint64_t h = fnv1a("");
  std::istringstream lines(canonical());
  std::string line;
  while (std::getline(lines, line)) {
    const std::string key = line.substr(0, line.find(' '));
    if (std::find(path_keys.begin(), path_keys.end(), key) != path_keys.end()) continue;
    h = fnv1a(line, h);
    h = fnv1a("\n", h);
  }
  return h;
}

PipelineConfig parse_config(std::string_view text, const fs::path& base) {
  PipelineConfig cfg;
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
      }
      cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1), base);
    }
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  const std::string text = read_file(path);
  return parse_config(text, fs::absolute(path).parent_path());
}

}  // namespace phonematch
