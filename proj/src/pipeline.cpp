#include "phonematch/pipeline.hpp"

#include <cstdio>
#include <map>
#include <set>

#include "phonematch/cluster.hpp"
#include "phonematch/corpus_io.hpp"
#include "phonematch/gw_match.hpp"
#include "phonematch/pseudolabel.hpp"
#include "phonematch/random.hpp"

namespace phonematch {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifest = "manifest.tsv";

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

fs::path out(const PipelineConfig& c, std::string_view name) { return c.out_dir / std::string(name); }

void require(const fs::path& p, std::string_view key) {
  if (p.empty()) throw ConfigError("config key '" + std::string(key) + "' is required for this stage");
}

Alphabet phone_alphabet(const PipelineConfig& c) {
  const auto local = out(c, "phone_alphabet.txt");
  if (fs::exists(local)) return read_alphabet(local);
  require(c.alphabet, "alphabet");
  return read_alphabet(c.alphabet);
}

fs::path phone_alphabet_path(const PipelineConfig& c) {
  const auto local = out(c, "phone_alphabet.txt");
  if (fs::exists(local) || c.alphabet.empty()) return local;
  return c.alphabet;
}

std::vector<std::size_t> frame_groups(const std::vector<Segment>& segs, const std::map<std::string, std::size_t>* speaker_of) {
  std::vector<std::size_t> ids;
  for (std::size_t u = 0; u < segs.size(); ++u) {
    std::size_t g = u;
    if (speaker_of != nullptr) {
      auto it = speaker_of->find(segs[u].utterance_id);
      if (it == speaker_of->end()) throw DataError("no speaker for utterance " + segs[u].utterance_id);
      g = it->second;
    }
    ids.insert(ids.end(), segs[u].frames, g);
  }
  return ids;
}

std::size_t total_frames(const std::vector<Segment>& segs) {
  std::size_t n = 0;
  for (const auto& s : segs) n += s.frames;
  return n;
}

void check_segments(const EmbeddingMatrix& frames, const std::vector<Segment>& segs) {
  if (total_frames(segs) != frames.rows()) {
    throw DataError("segments cover " + std::to_string(total_frames(segs)) + " frames but the matrix has " +
                    std::to_string(frames.rows()));
  }
}

std::map<std::string, std::size_t> read_speakers(const fs::path& path) {
  const std::string text = read_file(path);
  std::map<std::string, std::string> utt2spk;
  std::set<std::string> speakers;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    char utt[512], spk[512];
    if (std::sscanf(line.c_str(), "%511s %511s", utt, spk) == 2) {
      utt2spk[utt] = spk;
      speakers.insert(spk);
    }
  }
  std::map<std::string, std::size_t> index;
  std::size_t i = 0;
  for (const auto& s : speakers) index[s] = i++;
  std::map<std::string, std::size_t> out;
  for (const auto& [u, s] : utt2spk) out[u] = index[s];
  return out;
}

// matching.tsv: `centroid_id TAB symbol`.
std::vector<SymbolId> read_matching(const fs::path& path, const Alphabet& alphabet) {
  std::vector<SymbolId> m;
  const std::string text = read_file(path);
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(path.string() + ": expected 'centroid TAB symbol'");
    if (std::stoul(line.substr(0, tab)) != m.size()) {
      throw FormatError(path.string() + ": centroid ids must be consecutive from 0");
    }
    m.push_back(alphabet.id(line.substr(tab + 1)));
  }
  return m;
}

std::string format_matching(const std::vector<SymbolId>& matching, const Alphabet& alphabet) {
  std::string s;
  for (std::size_t i = 0; i < matching.size(); ++i) s += std::to_string(i) + '\t' + alphabet.symbol(matching[i]) + '\n';
  return s;
}

std::vector<ClusterId> read_assignments(const PipelineConfig& c, std::size_t k,
                                        std::vector<Segment>* segments = nullptr) {
  const auto file = read_labels(out(c, "assignments.txt"), Alphabet::numeric(k));
  if (segments != nullptr) {
    segments->clear();
    for (const auto& s : file.sequences) segments->push_back({s.utterance_id, s.tokens.size()});
  }
  const auto flat = concatenate(file.sequences);
  return {flat.begin(), flat.end()};
}

// --- stage bodies -----------------------------------------------------------

void do_collapse(const PipelineConfig& c, std::uint64_t) {
  const auto frames = read_matrix(c.frames);
  const auto segs = read_segments(c.segments);
  check_segments(frames, segs);
  std::string report = "# directions from PCA of per-group mean frames; each matrix centered by its own mean\n";
  report += std::string("# groups: ") + (c.collapse_source == CollapseSource::speaker ? "speaker" : "utterance") + '\n';
  report += "index\teigenvalue\n";
  if (c.collapse_count == 0) {
    write_matrix(out(c, "collapsed.emb"), frames);
    atomic_write(out(c, "collapse_basis.tsv"), report);
    return;
  }
  std::map<std::string, std::size_t> speakers;
  if (c.collapse_source == CollapseSource::speaker) speakers = read_speakers(c.speakers);
  const auto groups = frame_groups(segs, c.collapse_source == CollapseSource::speaker ? &speakers : nullptr);
  const auto means = group_means(frames, groups);
  if (c.collapse_count > std::min(means.rows(), frames.dim())) {
    throw ConfigError("collapse_count exceeds min(groups, dim)");
  }
  const auto basis = pca(means, c.collapse_count);
  const auto collapsed = collapse_top(frames, basis, c.collapse_count);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    report += std::to_string(i) + '\t' + real(basis.eigenvalues(static_cast<Eigen::Index>(i))) + '\n';
  }
  write_matrix(out(c, "collapse_directions.emb"), EmbeddingMatrix(basis.directions));
  write_matrix(out(c, "collapsed.emb"), collapsed);
  atomic_write(out(c, "collapse_basis.tsv"), report);
}

void write_assignments(const fs::path& path, const std::vector<ClusterId>& z,
                       const std::vector<Segment>& segs, std::size_t k, std::string header) {
  std::vector<SymbolId> flat(z.begin(), z.end());
  write_labels(path, {{std::move(header)}, split_by_segments(flat, segs)}, Alphabet::numeric(k));
}

void do_kmeans(const PipelineConfig& c, std::uint64_t seed) {
  const auto frames = read_matrix(out(c, "collapsed.emb"));
  const auto segs = read_segments(c.segments);
  check_segments(frames, segs);
  if (c.clusters > frames.rows()) throw ConfigError("clusters exceeds the number of frames");
  const auto result = kmeans_restarts(frames, c.clusters, c.kmeans_epochs, seed, c.kmeans_restarts);
  write_matrix(out(c, "centroids.emb"), result.centroids);
  write_assignments(out(c, "assignments.txt"), result.assignments, segs, c.clusters, "source=kmeans");
  write_unigram(out(c, "centroid_unigram.tsv"), result.mass);
  std::string trace = "# k-means++ seeding, empty clusters reseeded to the farthest frame\nepoch\tinertia\n";
  for (std::size_t i = 0; i < result.inertia_trace.size(); ++i) {
    trace += std::to_string(i + 1) + '\t' + real(result.inertia_trace[i]) + '\n';
  }
  atomic_write(out(c, "kmeans_inertia.tsv"), trace);
}

void do_randproj(const PipelineConfig& c, std::uint64_t seed) {
  const auto features = read_matrix(c.features.empty() ? c.frames : c.features);
  const auto segs = read_segments(c.segments);
  check_segments(features, segs);
  const auto rp = random_projection_quantize(features, c.codebook_size, c.code_dim, seed);
  write_matrix(out(c, "randproj_codebook.emb"), rp.codes.centroids);
  write_matrix(out(c, "randproj_projection.emb"), EmbeddingMatrix(rp.projection));
  write_assignments(out(c, "randproj_assignments.txt"), rp.codes.assignments, segs, c.codebook_size,
                    "source=random_projection");
  write_unigram(out(c, "randproj_unigram.tsv"), rp.codes.mass);
}

void do_cbow(const PipelineConfig& c, std::uint64_t seed) {
  Alphabet alphabet;
  std::vector<LabelSequence> corpus;
  if (!c.phone_sequences.empty()) {
    require(c.alphabet, "alphabet");
    alphabet = read_alphabet(c.alphabet);
    corpus = read_labels(c.phone_sequences, alphabet).sequences;
  } else {
    require(c.text, "text");
    require(c.lexicon, "lexicon");
    const auto lexicon = read_lexicon(c.lexicon);
    alphabet = lexicon.alphabet;
    for (const auto& [utt, words] : read_transcripts(c.text)) {
      if (words.empty()) continue;
      corpus.push_back(expand_text(words, lexicon, utt));
    }
  }
  if (corpus.empty()) throw EmptyInput("cbow: no phone sequences");
  const auto unigram = unigram_from_sequences(corpus, alphabet.size());

  EmbeddingMatrix table;
  if (!c.embeddings.empty()) {
    table = read_matrix(c.embeddings, MatrixRole::phone_embeddings);
    if (table.rows() != alphabet.size()) {
      throw DataError("embeddings have " + std::to_string(table.rows()) + " rows but the alphabet has " +
                      std::to_string(alphabet.size()) + " symbols");
    }
  } else {
    CbowConfig cfg{c.cbow_dim, c.window, c.step_size, c.clip_norm, c.cbow_epochs, seed};
    const auto trained = cbow_train(corpus, alphabet, cfg);
    table = embeddings(trained.table, c.embedding_kind);
    write_matrix(out(c, "cbow_input.emb"), EmbeddingMatrix(trained.table.input));
    write_matrix(out(c, "cbow_output.emb"), EmbeddingMatrix(trained.table.output));
    std::string curve = "epoch\tloss\n";
    for (std::size_t i = 0; i < trained.loss_curve.size(); ++i) {
      curve += std::to_string(i + 1) + '\t' + real(trained.loss_curve[i]) + '\n';
    }
    atomic_write(out(c, "cbow_loss.tsv"), curve);
  }
  write_labels(out(c, "phone_sequences.txt"), {{}, corpus}, alphabet);
  write_alphabet(out(c, "phone_alphabet.txt"), alphabet);
  write_unigram(out(c, "phone_unigram.tsv"), unigram);
  write_matrix(out(c, "phone_embeddings.emb"), table);
}

void do_match(const PipelineConfig& c, std::uint64_t seed) {
  const auto centroids = read_matrix(out(c, "centroids.emb"), MatrixRole::centroids);
  const auto phones = read_matrix(out(c, "phone_embeddings.emb"), MatrixRole::phone_embeddings);
  const auto alphabet = read_alphabet(out(c, "phone_alphabet.txt"));
  const auto p = read_unigram(out(c, "centroid_unigram.tsv"));
  const auto q = read_unigram(out(c, "phone_unigram.tsv"));
  const auto dp = distance_matrices(preprocess(centroids), preprocess(phones));
  GwOptions opt;
  opt.epsilon = c.epsilon;
  opt.outer_iterations = c.outer_iterations;
  opt.inner_iterations = c.inner_iterations;
  opt.restarts = c.restarts;
  opt.seed = seed;
  const auto coupling = entropic_gw(dp, p, q, opt);
  write_matrix(out(c, "coupling.emb"), EmbeddingMatrix(coupling.gamma));
  atomic_write(out(c, "matching.tsv"), format_matching(extract_matching(coupling), alphabet));
  std::string trace = "# unregularized GW cost; epsilon " + real(c.epsilon) + "\niteration\tcost\n";
  for (std::size_t i = 0; i < coupling.objective_trace.size(); ++i) {
    trace += std::to_string(i + 1) + '\t' + real(coupling.objective_trace[i]) + '\n';
  }
  atomic_write(out(c, "gw_objective.tsv"), trace);
}

void do_procrustes(const PipelineConfig& c, std::uint64_t) {
  const auto centroids = preprocess(read_matrix(out(c, "centroids.emb"), MatrixRole::centroids));
  const auto phones = preprocess(read_matrix(out(c, "phone_embeddings.emb"), MatrixRole::phone_embeddings));
  const auto gamma = read_matrix(out(c, "coupling.emb"));
  const auto map = procrustes(centroids, phones, gamma.data());
  write_matrix(out(c, "procrustes_map.emb"), EmbeddingMatrix(map.A));
  write_matrix(out(c, "projected_centroids.emb"), project(map, centroids));
}

std::string label_header(LabelSource source, std::size_t shift_k) {
  return std::string("source=") + to_string(source) + " shift_k=" + std::to_string(shift_k);
}

void do_label(const PipelineConfig& c, std::uint64_t) {
  const auto k = read_matrix(out(c, "centroids.emb")).rows();
  const auto alphabet = read_alphabet(out(c, "phone_alphabet.txt"));
  const auto matching = read_matching(out(c, "matching.tsv"), alphabet);
  if (matching.size() != k) throw DataError("matching length differs from the centroid count");
  const auto file = read_labels(out(c, "assignments.txt"), Alphabet::numeric(k));
  LabelFile labels{{label_header(LabelSource::matching, c.shift_k)}, {}};
  for (const auto& seq : file.sequences) {
    std::vector<ClusterId> z(seq.tokens.begin(), seq.tokens.end());
    auto pl = assign_pseudo_labels(z, matching, seq.utterance_id, c.shift_k);
    labels.sequences.push_back({pl.utterance_id, std::move(pl.labels)});
  }
  write_labels(out(c, "pseudo_labels.txt"), labels, alphabet);
}

void do_corrupt(const PipelineConfig& c, std::uint64_t seed) {
  const auto alphabet = read_alphabet(out(c, "phone_alphabet.txt"));
  const auto unigram = read_unigram(out(c, "phone_unigram.tsv"));
  if (unigram.size() != alphabet.size()) throw DataError("phone unigram does not match the alphabet");
  const auto file = read_labels(out(c, "pseudo_labels.txt"), alphabet);
  LabelFile result{{label_header(LabelSource::corrupted, c.shift_k) + " percent=" + real(c.corrupt_percent) +
                    (c.corrupt_uniform ? " law=uniform" : " law=unigram")},
                   {}};
  for (std::size_t u = 0; u < file.sequences.size(); ++u) {
    const auto& seq = file.sequences[u];
    PseudoLabelSequence pl{seq.utterance_id, seq.tokens, LabelSource::matching, c.shift_k};
    const auto corrupted = corrupt_labels(pl, c.corrupt_percent, unigram,
                                          derive_seed(seed, std::to_string(u)), c.corrupt_uniform);
    result.sequences.push_back({corrupted.utterance_id, corrupted.labels});
  }
  write_labels(out(c, "corrupted_labels.txt"), result, alphabet);
}

void do_evaluate(const PipelineConfig& c, std::uint64_t) {
  require(c.alignments, "alignments");
  const auto k = read_matrix(out(c, "centroids.emb")).rows();
  const auto alphabet = phone_alphabet(c);
  const auto z = read_assignments(c, k);
  const auto reference = read_labels(c.alignments, alphabet).sequences;
  const auto table = build_table(z, reference, k, alphabet.size());
  std::optional<std::vector<SymbolId>> matching;
  if (fs::exists(out(c, "matching.tsv"))) matching = read_matching(out(c, "matching.tsv"), alphabet);
  const auto report = evaluate(table, matching);
  atomic_write(out(c, "report.tsv"), format_report_tsv(report));
  atomic_write(out(c, "report.txt"), format_report_text(report, table));
}

void do_neighbors(const PipelineConfig& c, std::uint64_t) {
  const auto alphabet = read_alphabet(out(c, "phone_alphabet.txt"));
  const auto phones = read_matrix(out(c, "phone_embeddings.emb"));
  if (phones.rows() != alphabet.size()) throw DataError("phone embeddings do not match the alphabet");
  const auto nn = nearest_neighbors(phones, c.neighbors_top, c.neighbors_metric);
  atomic_write(out(c, "neighbors_phones.tsv"), format_neighbors_tsv(nn, alphabet.symbols()));

  if (c.alignments.empty() || !fs::exists(out(c, "collapsed.emb"))) return;
  const auto frames = read_matrix(out(c, "collapsed.emb"));
  const auto flat = concatenate(read_labels(c.alignments, alphabet).sequences);
  if (flat.size() != frames.rows()) throw DataError("alignments do not cover the frames");
  const std::vector<std::size_t> groups(flat.begin(), flat.end());
  const auto means = group_means(frames, groups);
  std::vector<std::string> names;
  for (SymbolId s : std::set<SymbolId>(flat.begin(), flat.end())) names.push_back(alphabet.symbol(s));
  if (c.neighbors_top < means.rows()) {
    const auto tn = nearest_neighbors(means, c.neighbors_top, c.neighbors_metric);
    atomic_write(out(c, "neighbors_types.tsv"), format_neighbors_tsv(tn, names));
  }
}

// --- inputs / manifest -----------------------------------------------------

std::vector<fs::path> stage_inputs(Stage stage, const PipelineConfig& c) {
  switch (stage) {
    case Stage::collapse: {
      require(c.frames, "frames");
      require(c.segments, "segments");
      std::vector<fs::path> v{c.frames, c.segments};
      if (c.collapse_source == CollapseSource::speaker) v.push_back(c.speakers);
      return v;
    }
    case Stage::kmeans:
      require(c.segments, "segments");
      return {out(c, "collapsed.emb"), c.segments};
    case Stage::randproj:
      require(c.segments, "segments");
      if (c.features.empty()) require(c.frames, "frames");
      return {c.features.empty() ? c.frames : c.features, c.segments};
    case Stage::cbow: {
      std::vector<fs::path> v;
      if (!c.phone_sequences.empty()) {
        require(c.alphabet, "alphabet");
        v = {c.phone_sequences, c.alphabet};
      } else {
        require(c.text, "text");
        require(c.lexicon, "lexicon");
        v = {c.text, c.lexicon};
      }
      if (!c.embeddings.empty()) v.push_back(c.embeddings);
      return v;
    }
    case Stage::match:
      return {out(c, "centroids.emb"), out(c, "centroid_unigram.tsv"), out(c, "phone_embeddings.emb"),
              out(c, "phone_unigram.tsv"), out(c, "phone_alphabet.txt")};
    case Stage::procrustes:
      return {out(c, "centroids.emb"), out(c, "phone_embeddings.emb"), out(c, "coupling.emb")};
    case Stage::label:
      return {out(c, "centroids.emb"), out(c, "assignments.txt"), out(c, "matching.tsv"),
              out(c, "phone_alphabet.txt")};
    case Stage::corrupt:
      return {out(c, "pseudo_labels.txt"), out(c, "phone_unigram.tsv"), out(c, "phone_alphabet.txt")};
    case Stage::evaluate: {
      require(c.alignments, "alignments");
      std::vector<fs::path> v{out(c, "centroids.emb"), out(c, "assignments.txt"), c.alignments,
                              phone_alphabet_path(c)};
      if (fs::exists(out(c, "matching.tsv"))) v.push_back(out(c, "matching.tsv"));
      return v;
    }
    case Stage::neighbors:
      return {out(c, "phone_embeddings.emb"), out(c, "phone_alphabet.txt")};
  }
  return {};
}

std::uint64_t hash_inputs(const std::vector<fs::path>& inputs) {
  std::uint64_t h = fnv1a("");
  for (const auto& p : inputs) {
    if (!fs::exists(p)) throw MissingInput(p.string());
    h = fnv1a(read_file(p), h);
    h = fnv1a("\x1f", h);
  }
  return h;
}

std::string manifest_line(Stage stage, const PipelineConfig& c, std::uint64_t input_hash) {
  return std::string(stage_name(stage)) + "\tconfig=" + hex(c.hash()) +
         "\tseed=" + std::to_string(derive_seed(c.seed, stage_name(stage))) + "\tinputs=" + hex(input_hash);
}

std::map<std::string, std::string> read_manifest(const PipelineConfig& c) {
  std::map<std::string, std::string> lines;
  const auto path = out(c, kManifest);
  if (!fs::exists(path)) return lines;
  const std::string text = read_file(path);
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty() || line.front() == '#') continue;
    lines[line.substr(0, line.find('\t'))] = line;
  }
  return lines;
}

void write_manifest(const PipelineConfig& c, const std::map<std::string, std::string>& lines) {
  std::string text = "# stage\tconfig hash\tstage seed\tinput hash\n";
  for (Stage s : kAllStages) {
    auto it = lines.find(std::string(stage_name(s)));
    if (it != lines.end()) text += it->second + '\n';
  }
  atomic_write(out(c, kManifest), text);
}

void execute(Stage stage, const PipelineConfig& c, std::uint64_t input_hash) {
  const std::uint64_t seed = derive_seed(c.seed, stage_name(stage));
  fs::create_directories(c.out_dir);
  switch (stage) {
    case Stage::collapse: do_collapse(c, seed); break;
    case Stage::kmeans: do_kmeans(c, seed); break;
    case Stage::randproj: do_randproj(c, seed); break;
    case Stage::cbow: do_cbow(c, seed); break;
    case Stage::match: do_match(c, seed); break;
    case Stage::procrustes: do_procrustes(c, seed); break;
    case Stage::label: do_label(c, seed); break;
    case Stage::corrupt: do_corrupt(c, seed); break;
    case Stage::evaluate: do_evaluate(c, seed); break;
    case Stage::neighbors: do_neighbors(c, seed); break;
  }
  auto lines = read_manifest(c);
  lines[std::string(stage_name(stage))] = manifest_line(stage, c, input_hash);
  write_manifest(c, lines);
}

}  // namespace

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::collapse: return "collapse";
    case Stage::kmeans: return "kmeans";
    case Stage::randproj: return "randproj";
    case Stage::cbow: return "cbow";
    case Stage::match: return "match";
    case Stage::procrustes: return "procrustes";
    case Stage::label: return "label";
    case Stage::corrupt: return "corrupt";
    case Stage::evaluate: return "evaluate";
    case Stage::neighbors: return "neighbors";
  }
  return "";
}

std::optional<Stage> stage_from_name(std::string_view name) {
  for (Stage s : kAllStages) {
    if (stage_name(s) == name) return s;
  }
  return std::nullopt;
}

std::vector<std::string> stage_outputs(Stage stage, const PipelineConfig& c) {
  switch (stage) {
    case Stage::collapse:
      if (c.collapse_count == 0) return {"collapsed.emb", "collapse_basis.tsv"};
      return {"collapsed.emb", "collapse_directions.emb", "collapse_basis.tsv"};
    case Stage::kmeans: return {"centroids.emb", "assignments.txt", "centroid_unigram.tsv", "kmeans_inertia.tsv"};
    case Stage::randproj:
      return {"randproj_codebook.emb", "randproj_projection.emb", "randproj_assignments.txt", "randproj_unigram.tsv"};
    case Stage::cbow: {
      std::vector<std::string> v{"phone_sequences.txt", "phone_alphabet.txt", "phone_unigram.tsv",
                                 "phone_embeddings.emb"};
      if (c.embeddings.empty()) v.insert(v.end(), {"cbow_input.emb", "cbow_output.emb", "cbow_loss.tsv"});
      return v;
    }
    case Stage::match: return {"coupling.emb", "matching.tsv", "gw_objective.tsv"};
    case Stage::procrustes: return {"procrustes_map.emb", "projected_centroids.emb"};
    case Stage::label: return {"pseudo_labels.txt"};
    case Stage::corrupt: return {"corrupted_labels.txt"};
    case Stage::evaluate: return {"report.tsv", "report.txt"};
    case Stage::neighbors: return {"neighbors_phones.tsv"};
  }
  return {};
}

void run_stage(Stage stage, const PipelineConfig& config) {
  config.validate();
  execute(stage, config, hash_inputs(stage_inputs(stage, config)));
}

std::vector<StageOutcome> run_pipeline(const PipelineConfig& config) {
  config.validate();
  std::vector<StageOutcome> outcomes;
  bool upstream_ran = false;
  for (Stage stage : kPipelineStages) {
    try {
      const auto inputs = stage_inputs(stage, config);
      const auto h = hash_inputs(inputs);
      bool fresh = !upstream_ran;
      if (fresh) {
        const auto manifest = read_manifest(config);
        auto it = manifest.find(std::string(stage_name(stage)));
        fresh = it != manifest.end() && it->second == manifest_line(stage, config, h);
        for (const auto& name : stage_outputs(stage, config)) fresh = fresh && fs::exists(out(config, name));
      }
      if (fresh) {
        outcomes.push_back({stage, true});
        continue;
      }
      execute(stage, config, h);
      upstream_ran = true;
      outcomes.push_back({stage, false});
    } catch (const MissingInput&) {
      throw;
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(stage_name(stage)) + ": " + e.what(), e.iteration());
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(stage_name(stage)) + ": " + e.what());
    } catch (const Error& e) {
      throw DataError(std::string(stage_name(stage)) + ": " + e.what());
    }
  }
  return outcomes;
}

int exit_code_for_current_exception(std::string& message) {
  try {
    throw;
  } catch (const MissingInput& e) {
    message = e.what();
    return kExitMissingInput;
  } catch (const NumericalError& e) {
    message = e.what();
    return kExitNumerical;
  } catch (const Error& e) {
    message = e.what();
    return kExitValidation;
  } catch (const std::exception& e) {
    message = e.what();
    return 1;
  }
}

}  // namespace phonematch
