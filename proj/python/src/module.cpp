#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <optional>

#include "phonematch/cluster.hpp"
#include "phonematch/corpus_io.hpp"
#include "phonematch/fixture.hpp"
#include "phonematch/gw_match.hpp"
#include "phonematch/metrics.hpp"
#include "phonematch/pipeline.hpp"
#include "phonematch/subspace.hpp"

namespace py = pybind11;
namespace pm = phonematch;
namespace fs = std::filesystem;

namespace {

using RowMatrix = pm::Matrix;
using Counts = pm::ContingencyTable::Counts;

pm::UnigramDistribution marginal(const std::optional<std::vector<double>>& w, Eigen::Index n) {
  if (w) return pm::UnigramDistribution::from_counts(*w);
  return pm::UnigramDistribution(std::vector<double>(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n)));
}

pm::PipelineConfig config_from(const std::optional<fs::path>& config, const std::optional<fs::path>& out_dir,
                               std::optional<std::uint64_t> seed, const std::map<std::string, std::string>& overrides) {
  pm::PipelineConfig cfg;
  if (config) {
    if (!fs::exists(*config)) throw pm::MissingInput(config->string());
    cfg = pm::load_config(*config);
  }
  for (const auto& [k, v] : overrides) cfg.set(k, v, fs::current_path());
  if (seed) cfg.seed = *seed;
  if (out_dir) cfg.out_dir = *out_dir;
  return cfg;
}

py::dict report_dict(const pm::MetricReport& r) {
  py::dict d;
  d["phone_purity"] = r.phone_purity;
  d["cluster_purity"] = r.cluster_purity;
  d["frame_per"] = r.frame_per;
  d["weighted_phone_purity"] = r.weighted_phone_purity;
  d["type_per"] = r.type_per ? py::cast(*r.type_per) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_phonematch, m) {
  m.doc() = "Type-vector to phone-embedding matching with entropic Gromov-Wasserstein";

  auto error = py::register_exception<pm::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<pm::MissingInput>(m, "MissingInput", error.ptr());
  py::register_exception<pm::ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<pm::NumericalError>(m, "NumericalError", error.ptr());
  py::register_exception<pm::FormatError>(m, "FormatError", error.ptr());
  py::register_exception<pm::InvalidArgument>(m, "InvalidArgument", error.ptr());

  m.def("read_matrix", [](const fs::path& path) { return pm::read_matrix(path).data(); }, py::arg("path"));
  m.def("write_matrix", [](const fs::path& path, const RowMatrix& x) { pm::write_matrix(path, pm::EmbeddingMatrix(x)); },
        py::arg("path"), py::arg("matrix"));

  m.def("preprocess", [](const RowMatrix& x) { return pm::preprocess(pm::EmbeddingMatrix(x)).data(); },
        py::arg("vectors"), "Center by the mean, then scale each row to unit norm.");
  m.def("distance_matrices", [](const RowMatrix& x, const RowMatrix& y) {
        auto dp = pm::distance_matrices(pm::EmbeddingMatrix(x), pm::EmbeddingMatrix(y));
        return py::make_tuple(dp.S, dp.S_prime);
      }, py::arg("centroids"), py::arg("embeddings"));

  m.def("entropic_gw",
        [](const RowMatrix& S, const RowMatrix& S_prime, std::optional<std::vector<double>> p,
           std::optional<std::vector<double>> q, double epsilon, std::size_t outer_iterations,
           std::size_t inner_iterations, std::size_t restarts, std::uint64_t seed) {
          pm::GwOptions opt;
          opt.epsilon = epsilon;
          opt.outer_iterations = outer_iterations;
          opt.inner_iterations = inner_iterations;
          opt.restarts = restarts;
          opt.seed = seed;
          const auto c = pm::entropic_gw({S, S_prime}, marginal(p, S.rows()), marginal(q, S_prime.rows()), opt);
          py::dict d;
          d["gamma"] = c.gamma;
          d["iterations"] = c.iterations_run;
          d["objective"] = c.objective_trace;
          d["matching"] = pm::extract_matching(c);
          return d;
        },
        py::arg("S"), py::arg("S_prime"), py::arg("p") = py::none(), py::arg("q") = py::none(),
        py::arg("epsilon") = pm::kEpsilonApc, py::arg("outer_iterations") = 1000, py::arg("inner_iterations") = 50,
        py::arg("restarts") = 0, py::arg("seed") = 0,
        "Entropic GW coupling between two squared-distance matrices. Marginals default to uniform.");
  m.def("gw_cost", [](const RowMatrix& S, const RowMatrix& S_prime, const RowMatrix& gamma) {
        return pm::gw_cost({S, S_prime}, gamma);
      }, py::arg("S"), py::arg("S_prime"), py::arg("gamma"));
  m.def("extract_matching", [](const RowMatrix& gamma) { return pm::extract_matching(gamma); }, py::arg("gamma"));
  m.def("procrustes", [](const RowMatrix& x, const RowMatrix& y, const RowMatrix& gamma) {
        return pm::procrustes(pm::EmbeddingMatrix(x), pm::EmbeddingMatrix(y), gamma).A;
      }, py::arg("centroids"), py::arg("embeddings"), py::arg("gamma"));

  m.def("kmeans",
        [](const RowMatrix& x, std::size_t k, std::size_t epochs, std::uint64_t seed, std::size_t restarts) {
          const auto set = pm::kmeans_restarts(pm::EmbeddingMatrix(x), k, epochs, seed, restarts);
          py::dict d;
          d["centroids"] = set.centroids.data();
          d["assignments"] = set.assignments;
          d["inertia"] = set.inertia;
          d["inertia_trace"] = set.inertia_trace;
          d["mass"] = set.mass.weights();
          return d;
        },
        py::arg("frames"), py::arg("k"), py::arg("epochs") = 20, py::arg("seed") = 0, py::arg("restarts") = 1);

  m.def("pca", [](const RowMatrix& x, std::size_t top_k) {
        const auto b = pm::pca(pm::EmbeddingMatrix(x), top_k);
        return py::make_tuple(b.directions, pm::Vector(b.eigenvalues));
      }, py::arg("vectors"), py::arg("top_k"), "Returns (directions as rows, eigenvalues).");
  m.def("group_means", [](const RowMatrix& x, const std::vector<std::size_t>& groups) {
        return pm::group_means(pm::EmbeddingMatrix(x), groups).data();
      }, py::arg("frames"), py::arg("group_ids"));
  m.def("collapse", [](const RowMatrix& x, const pm::Vector& direction) {
        return pm::collapse(pm::EmbeddingMatrix(x), direction).data();
      }, py::arg("frames"), py::arg("direction"));

  m.def("evaluate",
        [](const Counts& counts, std::optional<std::vector<pm::SymbolId>> matching) {
          return report_dict(pm::evaluate(pm::ContingencyTable(counts), matching));
        },
        py::arg("counts"), py::arg("matching") = py::none(),
        "Metrics of a clusters x symbols count table, as fractions.");

  m.def("write_fixture",
        [](const fs::path& dir, std::size_t phones, std::size_t dim, double noise, std::uint64_t seed) {
          pm::FixtureOptions fo;
          fo.phones = phones;
          fo.dim = dim;
          fo.noise = noise;
          fo.seed = seed;
          pm::write_fixture(dir, pm::make_fixture(fo));
        },
        py::arg("dir"), py::arg("phones") = 20, py::arg("dim") = 16, py::arg("noise") = 0.05, py::arg("seed") = 0);

  m.def("run_stage",
        [](const std::string& stage, std::optional<fs::path> config, std::optional<fs::path> out_dir,
           std::optional<std::uint64_t> seed, const std::map<std::string, std::string>& overrides) {
          const auto s = pm::stage_from_name(stage);
          if (!s) throw pm::ConfigError("unknown stage '" + stage + "'");
          pm::run_stage(*s, config_from(config, out_dir, seed, overrides));
        },
        py::arg("stage"), py::arg("config") = py::none(), py::arg("out_dir") = py::none(),
        py::arg("seed") = py::none(), py::arg("overrides") = std::map<std::string, std::string>{});
  m.def("run_pipeline",
        [](std::optional<fs::path> config, std::optional<fs::path> out_dir, std::optional<std::uint64_t> seed,
           const std::map<std::string, std::string>& overrides) {
          std::vector<std::pair<std::string, bool>> out;
          for (const auto& o : pm::run_pipeline(config_from(config, out_dir, seed, overrides))) {
            out.emplace_back(std::string(pm::stage_name(o.stage)), o.skipped);
          }
          return out;
        },
        py::arg("config") = py::none(), py::arg("out_dir") = py::none(), py::arg("seed") = py::none(),
        py::arg("overrides") = std::map<std::string, std::string>{},
        "Runs the pipeline; returns (stage, skipped) pairs.");
}
