#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phonematch/cbow.hpp"
#include "phonematch/error.hpp"
#include "phonematch/metrics.hpp"
#include "phonematch/subspace.hpp"

namespace phonematch {

class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Stage { collapse, kmeans, randproj, cbow, match, procrustes, label, corrupt, evaluate, neighbors };

inline constexpr std::array<Stage, 10> kAllStages = {
    Stage::collapse, Stage::kmeans,     Stage::randproj, Stage::cbow,     Stage::match,
    Stage::procrustes, Stage::label,    Stage::corrupt,  Stage::evaluate, Stage::neighbors};

// Stages run by `pipeline`, in order.
inline constexpr std::array<Stage, 6> kPipelineStages = {
    Stage::collapse, Stage::kmeans, Stage::cbow, Stage::match, Stage::label, Stage::evaluate};

std::string_view stage_name(Stage stage);
std::optional<Stage> stage_from_name(std::string_view name);

enum class CollapseSource { utterance, speaker };

struct PipelineConfig {
  // Inputs. Relative paths in a config file resolve against its directory.
  std::filesystem::path frames;
  std::filesystem::path segments;
  std::filesystem::path speakers;
  std::filesystem::path features;
  std::filesystem::path text;
  std::filesystem::path lexicon;
  std::filesystem::path phone_sequences;
  std::filesystem::path alphabet;
  std::filesystem::path embeddings;
  std::filesystem::path alignments;
  std::filesystem::path out_dir = "out";

  std::uint64_t seed = 0;

  std::size_t collapse_count = 1;
  CollapseSource collapse_source = CollapseSource::utterance;

  std::size_t clusters = 50;
  std::size_t kmeans_epochs = 20;
  std::size_t kmeans_restarts = 1;

  std::size_t codebook_size = 50;
  std::size_t code_dim = 16;

  std::size_t cbow_dim = 100;
  std::size_t cbow_epochs = 15;
  std::size_t window = 5;
  double step_size = 0.005;
  double clip_norm = 5.0;
  EmbeddingKind embedding_kind = EmbeddingKind::input;

  double epsilon = 0.0005;
  std::size_t outer_iterations = 1000;
  std::size_t inner_iterations = 50;
  std::size_t restarts = 0;

  std::size_t shift_k = 5;

  double corrupt_percent = 0.0;
  bool corrupt_uniform = false;

  std::size_t neighbors_top = 3;
  NeighborMetric neighbors_metric = NeighborMetric::euclidean;

  // Sets one key from its textual value. Unknown keys and bad values throw
  // ConfigError. Paths are resolved against `base`.
  void set(std::string_view key, std::string_view value, const std::filesystem::path& base = {});

  // Checks every numeric parameter against its operation's preconditions.
  void validate() const;

  // `key = value` lines for every parameter and input, sorted, out_dir excluded.
  std::string canonical() const;
  std::uint64_t hash() const;
};

// Parses `key = value` lines; `#` starts a comment.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base = {});
PipelineConfig load_config(const std::filesystem::path& path);

struct StageOutcome {
  Stage stage;
  bool skipped = false;
};

// Runs one stage, writing its outputs atomically under config.out_dir and
// recording a manifest line.
void run_stage(Stage stage, const PipelineConfig& config);

// Runs collapse -> kmeans -> cbow -> match -> label -> evaluate. A stage is
// skipped when its manifest entry matches the current config and inputs, its
// outputs exist, and no earlier stage ran in this invocation.
std::vector<StageOutcome> run_pipeline(const PipelineConfig& config);

// Output file names of a stage, relative to out_dir.
std::vector<std::string> stage_outputs(Stage stage, const PipelineConfig& config);

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitMissingInput = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitNumerical = 4;

// Maps the active exception to an exit code.
int exit_code_for_current_exception(std::string& message);

}  // namespace phonematch
