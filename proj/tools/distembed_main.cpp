// Command-line surface: generate synthetic samples, build distance graphs,
// run the embedding and evaluate results as reproducible file artifacts.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "distembed/embed.hpp"
#include "distembed/graph.hpp"
#include "distembed/io.hpp"
#include "distembed/metrics.hpp"
#include "distembed/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace distembed;

namespace {

void write_json(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot open " + path + " for writing");
  f << j.dump(2) << "\n";
}

std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

struct GenerateArgs {
  std::string name;
  int n = 1500;
  std::uint64_t seed = 0;
  std::string out = ".";
};

int cmd_generate(const GenerateArgs& args) {
  SampledManifold sample;
  if (args.name == "swiss_roll")
    sample = swiss_roll(args.n, args.seed);
  else if (args.name == "klein_bottle")
    sample = klein_bottle(args.n, args.seed);
  else if (args.name == "flat_torus")
    sample = flat_torus(args.n, args.seed);
  else
    throw InputError("unknown dataset `" + args.name +
                     "` (expected swiss_roll, klein_bottle or flat_torus)");

  write_csv_matrix(out_path(args.out, "points.csv"), sample.points, "x");
  write_csv_matrix(out_path(args.out, "params.csv"), sample.params, "p");
  if (sample.aux_r3.size() > 0)
    write_csv_matrix(out_path(args.out, "points_r3.csv"), sample.aux_r3, "x");

  json meta{{"command", "generate"},
            {"dataset", sample.name},
            {"n", args.n},
            {"seed", args.seed},
            {"ambient_dim", sample.points.cols()},
            {"param_dim", sample.params.cols()}};
  write_json(out_path(args.out, "meta.json"), meta);
  return 0;
}

struct GraphArgs {
  std::string points;
  int k = 8;
  std::string out = ".";
};

int cmd_graph(const GraphArgs& args) {
  Matrix points = read_csv_matrix(args.points);
  DistanceGraph g = knn_graph(points, args.k);
  write_edge_list(out_path(args.out, "edges.txt"), g);

  double dim_estimate = twonn_dimension(points);
  json meta{{"command", "graph"},
            {"points", args.points},
            {"k", args.k},
            {"n_vertices", g.num_vertices()},
            {"n_edges", g.num_edges()},
            {"twonn_dimension", dim_estimate},
            {"twonn_dimension_rounded", static_cast<int>(std::lround(dim_estimate))}};
  write_json(out_path(args.out, "meta.json"), meta);
  return 0;
}

struct EmbedArgs {
  std::string graph;
  int dim = 2;
  double tol = 1e-7;
  double var_tol = 1e-16;
  int maxit = 500;
  double pcg_tol = 1e-10;
  double drop_tol = 1e-3;
  double shift = 1e-3;
  int threads = 0;
  bool deterministic = false;
  bool spectral_init = false;
  std::string out = ".";
};

int cmd_embed(const EmbedArgs& args) {
  DistanceGraph g = load_edge_list_file(args.graph);

  EmbedOptions opts;
  opts.tol = args.tol;
  opts.var_tol = args.var_tol;
  opts.max_iterations = args.maxit;
  opts.pcg_tol = args.pcg_tol;
  opts.ict_drop_tol = args.drop_tol;
  opts.ict_shift = args.shift;
  opts.threads = args.threads;
  opts.spectral_init = args.spectral_init;

  EmbedResult result = run_embedding(g, args.dim, opts);
  write_csv_matrix(out_path(args.out, "embedding.csv"), result.embedding.coords, "e");

  {
    std::ofstream jl(out_path(args.out, "iterations.jsonl"));
    for (const auto& rec : result.report.iterations) {
      json row{{"n", rec.n},
               {"J", rec.objective},
               {"J_solve", rec.objective_solve},
               {"err", rec.err},
               {"dphi_energy", rec.dphi_energy},
               {"pcg_iters", rec.pcg_iterations},
               {"seconds", rec.seconds}};
      jl << row.dump() << "\n";
    }
  }

  const auto& rep = result.report;
  json meta{{"command", "embed"},
            {"graph", args.graph},
            {"dim", args.dim},
            {"tol", args.tol},
            {"var_tol", args.var_tol},
            {"maxit", args.maxit},
            {"pcg_tol", args.pcg_tol},
            {"drop_tol", args.drop_tol},
            {"shift", args.shift},
            {"threads", args.threads},
            {"deterministic", args.deterministic},
            {"spectral_init", args.spectral_init},
            {"status",
             {{"converged", rep.converged},
              {"stop_reason", rep.stop_reason},
              {"iterations", rep.iterations.size()},
              {"final_err", rep.iterations.empty() ? 0.0 : rep.iterations.back().err},
              {"final_J", rep.iterations.empty() ? 0.0 : rep.iterations.back().objective},
              {"initial_J", rep.initial_objective},
              {"monotonicity_violations", rep.monotonicity_violations},
              {"degenerate_restart", rep.degenerate_restart}}}};
  write_json(out_path(args.out, "meta.json"), meta);

  if (!rep.converged)
    std::cerr << "warning: stopped without convergence (" << rep.stop_reason << ")\n";
  return 0;
}

struct EvaluateArgs {
  std::string graph;
  std::string embedding;
  std::optional<std::string> params;
  std::optional<std::string> labels;
  int k = 0;  // 0: embedding dimension
  bool csv = false;
  std::string out = ".";
};

int cmd_evaluate(const EvaluateArgs& args) {
  DistanceGraph g = load_edge_list_file(args.graph);
  Matrix phi = read_csv_matrix(args.embedding);
  if (phi.rows() != g.num_vertices())
    throw InputError("embedding has " + std::to_string(phi.rows()) + " rows but the graph has " +
                     std::to_string(g.num_vertices()) + " vertices");

  std::optional<Matrix> params;
  if (args.params) params = read_csv_matrix(*args.params);
  std::optional<std::vector<int>> labels;
  if (args.labels) {
    labels = read_labels_csv(*args.labels);
    if (static_cast<int>(labels->size()) != g.num_vertices())
      throw InputError("label count does not match the graph");
  }

  const int dim = static_cast<int>(phi.cols());
  const int k = args.k > 0 ? args.k : dim;
  LocalFrameSet frames = build_frame_field(g, dim);
  MetricsReport rep = evaluate_embedding(g, phi, frames, k, params ? &*params : nullptr,
                                         labels ? &*labels : nullptr);

  json j{{"k", k},
         {"lcl_dist", rep.lcl_dist},
         {"lcl_mtrc", rep.lcl_mtrc},
         {"lcl_cont", rep.lcl_cont},
         {"lcl_trust", rep.lcl_trust},
         {"lcl_prec", rep.lcl_prec},
         {"lcl_rec", rep.lcl_rec},
         {"lcl_f1", rep.lcl_f1},
         {"glbl_mtrc", rep.glbl_mtrc},
         {"glbl_pearson", rep.glbl_pearson},
         {"glbl_spearman", rep.glbl_spearman},
         {"glbl_kendall", rep.glbl_kendall},
         {"strain_skipped", rep.strain_skipped}};
  if (rep.glbl_prm) j["glbl_prm"] = *rep.glbl_prm;
  if (rep.clustering) {
    j["acc"] = rep.clustering->acc;
    j["nmi"] = rep.clustering->nmi;
    j["ari"] = rep.clustering->ari;
    if (rep.clustering->nmi_degenerate) j["nmi_degenerate"] = true;
  }
  write_json(out_path(args.out, "report.json"), j);

  if (args.csv) {
    // One header plus one row: concatenable across batch sweeps.
    std::ofstream f(out_path(args.out, "report.csv"));
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    for (size_t i = 0; i < keys.size(); ++i) f << (i ? "," : "") << keys[i];
    f << "\n";
    for (size_t i = 0; i < keys.size(); ++i) {
      const auto& v = j[keys[i]];
      f << (i ? "," : "");
      if (v.is_number_float())
        f << format_double(v.get<double>());
      else
        f << v.dump();
    }
    f << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Euclidean embeddings of weighted distance graphs"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Sample a synthetic manifold");
  c_gen->add_option("name", gen.name, "swiss_roll | klein_bottle | flat_torus")->required();
  c_gen->add_option("--n", gen.n, "number of samples");
  c_gen->add_option("--seed", gen.seed, "RNG seed");
  c_gen->add_option("--out", gen.out, "output directory");

  GraphArgs gr;
  auto* c_gr = app.add_subcommand("graph", "Build a symmetrized kNN distance graph");
  c_gr->add_option("points", gr.points, "points CSV")->required();
  c_gr->add_option("--k", gr.k, "number of neighbors");
  c_gr->add_option("--out", gr.out, "output directory");

  EmbedArgs em;
  auto* c_em = app.add_subcommand("embed", "Compute the Euclidean embedding of a distance graph");
  c_em->add_option("graph", em.graph, "edge-list file")->required();
  c_em->add_option("--dim", em.dim, "embedding dimension N");
  c_em->add_option("--tol", em.tol, "convergence error tolerance");
  c_em->add_option("--var-tol", em.var_tol, "sequential variation tolerance");
  c_em->add_option("--maxit", em.maxit, "maximum iterations");
  c_em->add_option("--pcg-tol", em.pcg_tol, "PCG relative residual tolerance");
  c_em->add_option("--drop-tol", em.drop_tol, "incomplete Cholesky drop tolerance");
  c_em->add_option("--shift", em.shift, "relative diagonal shift for the preconditioner");
  c_em->add_option("--threads", em.threads, "worker threads (0 = auto)");
  c_em->add_flag("--deterministic", em.deterministic,
                 "pin reduction orders (outputs are deterministic in all modes)");
  c_em->add_flag("--spectral-init", em.spectral_init,
                 "seed the alignment from a spectral sketch (winding manifolds)");
  c_em->add_option("--out", em.out, "output directory");

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Score an embedding against its graph");
  c_ev->add_option("graph", ev.graph, "edge-list file")->required();
  c_ev->add_option("embedding", ev.embedding, "embedding CSV")->required();
  c_ev->add_option("--params", ev.params, "ground-truth parameterization CSV");
  c_ev->add_option("--labels", ev.labels, "labels CSV");
  c_ev->add_option("--k", ev.k, "neighborhood size (0 = embedding dimension)");
  c_ev->add_flag("--csv", ev.csv, "also write report.csv (one header + one row)");
  c_ev->add_option("--out", ev.out, "output directory");

  try {
    app.parse(argc, argv);
    if (*c_gen) return cmd_generate(gen);
    if (*c_gr) return cmd_graph(gr);
    if (*c_em) return cmd_embed(em);
    if (*c_ev) return cmd_evaluate(ev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
