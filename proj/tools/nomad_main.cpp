/*
 * Copyright (c) 2026, the nomad-projection authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nomad/nomad.hpp"

namespace {

struct InputFlags {
  std::string path;
  std::string format = "raw";
  std::size_t rows = 0;
  std::size_t dims = 0;
};

void add_input_flags(CLI::App& cmd, InputFlags& flags, const char* what) {
  cmd.add_option("--input", flags.path, std::string("path to ") + what)
      ->required();
  cmd.add_option("--format", flags.format,
                 "input format: raw (little-endian float32) or csv")
      ->check(CLI::IsMember({"raw", "csv"}))
      ->capture_default_str();
  cmd.add_option("--rows", flags.rows, "row count (raw input; optional check for csv)")
      ->capture_default_str();
  cmd.add_option("--dims", flags.dims, "column count (raw input; optional check for csv)")
      ->capture_default_str();
}

nomad::VectorDataset load_input(const InputFlags& flags) {
  std::optional<std::size_t> rows, dims;
  if (flags.rows > 0) rows = flags.rows;
  if (flags.dims > 0) dims = flags.dims;
  const auto format = flags.format == "csv" ? nomad::VectorFormat::Csv
                                            : nomad::VectorFormat::RawF32;
  return nomad::load_vectors(flags.path, format, rows, dims);
}

std::vector<std::string> load_label_lines(const std::string& path,
                                          std::size_t expected) {
  std::ifstream in(path);
  if (!in) nomad::fail(nomad::ErrorKind::Io, "cannot open '" + path + "'");
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    labels.push_back(line);
  }
  if (labels.size() != expected)
    nomad::fail(nomad::ErrorKind::Dimension,
                "label file has " + std::to_string(labels.size()) +
                    " lines, expected " + std::to_string(expected));
  return labels;
}

int run(int argc, char** argv) {
  CLI::App app{"NOMAD Projection: sharded contrastive 2-D layouts for "
               "high-dimensional vector data"};
  app.require_subcommand(1);

  // ---- fit ----------------------------------------------------------
  auto* fit_cmd = app.add_subcommand("fit", "learn a 2-D layout");
  InputFlags fit_in;
  add_input_flags(*fit_cmd, fit_in, "input vectors");
  std::string fit_out, labels_path, checkpoint_prefix;
  nomad::TrainConfig cfg;
  bool quiet = false;
  std::string approx = "remote";
  fit_cmd->add_option("--out", fit_out, "output layout CSV")->required();
  fit_cmd->add_option("--labels", labels_path,
                      "optional label file, one label per row; copied into "
                      "the layout CSV for plotting");
  fit_cmd->add_option("--epochs", cfg.epochs, "training epochs")
      ->capture_default_str();
  fit_cmd->add_option("--k", cfg.k, "neighbors per point")
      ->capture_default_str();
  fit_cmd->add_option("--negatives", cfg.negatives, "nominal negatives |M| per head")
      ->capture_default_str();
  fit_cmd->add_option("--local-draws", cfg.local_draws,
                      "sampled local noise tails per head")
      ->capture_default_str();
  fit_cmd->add_option("--batch-size", cfg.batch_size, "heads per SGD step")
      ->capture_default_str();
  fit_cmd->add_option("--workers", cfg.workers,
                      "parallel workers (env NOMAD_WORKERS; flag wins)")
      ->envname("NOMAD_WORKERS")
      ->capture_default_str();
  fit_cmd->add_option("--clusters", cfg.n_clusters,
                      "cluster count (0 = one per ~4096 points)")
      ->capture_default_str();
  fit_cmd->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  fit_cmd->add_option("--lr0", cfg.lr0, "initial learning rate (0 = n/10)")
      ->capture_default_str();
  fit_cmd->add_option("--kmeans-iters", cfg.kmeans_max_iters,
                      "max K-Means iterations")
      ->capture_default_str();
  fit_cmd
      ->add_option("--approx", approx,
                   "which noise cells to approximate by their means: "
                   "remote (other workers') or non-own-cluster")
      ->check(CLI::IsMember({"remote", "non-own-cluster"}))
      ->capture_default_str();
  fit_cmd->add_flag("--head-only", cfg.head_only,
                    "update only head positions (ablation)");
  fit_cmd->add_option("--checkpoint-every", cfg.checkpoint_every,
                      "dump the layout every N epochs (0 = off)")
      ->capture_default_str();
  fit_cmd->add_option("--checkpoint-prefix", checkpoint_prefix,
                      "path prefix for checkpoint CSVs");
  fit_cmd->add_flag("--quiet", quiet, "suppress per-epoch progress lines");

  // ---- eval ---------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "score a layout against its vectors");
  InputFlags eval_in;
  add_input_flags(*eval_cmd, eval_in, "input vectors");
  std::string eval_layout;
  std::vector<std::string> metrics{"np", "triplet"};
  std::size_t eval_k = 10, eval_triplets = 100000, eval_sample = 0;
  std::uint64_t eval_seed = 0;
  eval_cmd->add_option("--layout", eval_layout, "layout CSV to score")->required();
  eval_cmd
      ->add_option("--metric", metrics,
                   "metrics to report (np and/or triplet; repeatable)")
      ->check(CLI::IsMember({"np", "triplet"}))
      ->capture_default_str();
  eval_cmd->add_option("--np-k", eval_k, "neighborhood size for np")
      ->capture_default_str();
  eval_cmd->add_option("--np-sample", eval_sample,
                       "points sampled for np (0 = exact, all points)")
      ->capture_default_str();
  eval_cmd->add_option("--triplets", eval_triplets, "sampled triplet count")
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval_seed, "sampling seed")->capture_default_str();

  // ---- plot ---------------------------------------------------------
  auto* plot_cmd = app.add_subcommand("plot", "render a layout as an SVG scatter");
  std::string plot_layout, plot_out;
  nomad::PlotOptions plot_opts;
  plot_cmd->add_option("--layout", plot_layout, "layout CSV")->required();
  plot_cmd->add_option("--out", plot_out, "output SVG path")->required();
  plot_cmd->add_option("--canvas", plot_opts.canvas, "canvas side, px")
      ->capture_default_str();
  plot_cmd->add_option("--radius", plot_opts.radius, "point radius, px")
      ->capture_default_str();

  // ---- index-debug --------------------------------------------------
  auto* index_cmd = app.add_subcommand(
      "index-debug", "build only the ANN index and dump it as CSV");
  InputFlags index_in;
  add_input_flags(*index_cmd, index_in, "input vectors");
  std::string assign_out, edges_out;
  std::size_t index_clusters = 0, index_k = 15;
  std::uint64_t index_seed = 0;
  index_cmd->add_option("--assignments", assign_out,
                        "output CSV: point_id,cluster_id")->required();
  index_cmd->add_option("--edges", edges_out, "output CSV: src,dst,distance")
      ->required();
  index_cmd->add_option("--clusters", index_clusters,
                        "cluster count (0 = one per ~4096 points)")
      ->capture_default_str();
  index_cmd->add_option("--k", index_k, "neighbors per point")
      ->capture_default_str();
  index_cmd->add_option("--seed", index_seed, "random seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (fit_cmd->parsed()) {
    cfg.approx = approx == "non-own-cluster"
                     ? nomad::ApproxMode::AllButOwnCluster
                     : nomad::ApproxMode::RemoteClusters;
    cfg.verbose = !quiet;
    cfg.checkpoint_prefix = checkpoint_prefix;
    cfg.validate();
    nomad::VectorDataset data = load_input(fit_in);
    if (!labels_path.empty())
      data.labels = load_label_lines(labels_path, data.rows);
    const nomad::LayoutMatrix layout = nomad::fit(data, cfg);
    nomad::save_layout(layout, data.ids, data.labels, fit_out);
    std::fprintf(stderr, "wrote %zu points to %s after %llu epochs\n",
                 layout.rows, fit_out.c_str(),
                 static_cast<unsigned long long>(layout.epoch));
    return 0;
  }

  if (eval_cmd->parsed()) {
    const nomad::VectorDataset data = load_input(eval_in);
    const nomad::LoadedLayout loaded = nomad::load_layout(eval_layout);
    if (loaded.layout.rows != data.rows)
      nomad::fail(nomad::ErrorKind::Dimension,
                  "layout has " + std::to_string(loaded.layout.rows) +
                      " rows, vectors have " + std::to_string(data.rows));
    for (const std::string& metric : metrics) {
      nomad::MetricReport report;
      if (metric == "np") {
        report = nomad::neighborhood_preservation(data, loaded.layout, eval_k,
                                                  eval_sample, eval_seed);
      } else {
        report = nomad::random_triplet_accuracy(data, loaded.layout,
                                                eval_triplets, eval_seed);
      }
      std::printf("%s\n", report.to_json().c_str());
    }
    return 0;
  }

  if (plot_cmd->parsed()) {
    const nomad::LoadedLayout loaded = nomad::load_layout(plot_layout);
    nomad::write_scatter_svg(loaded.layout, loaded.labels, plot_out, plot_opts);
    return 0;
  }

  if (index_cmd->parsed()) {
    const nomad::VectorDataset data = load_input(index_in);
    nomad::TrainConfig defaults;
    defaults.n_clusters = index_clusters;
    const std::size_t n_clusters = defaults.resolve_clusters(data.rows);
    nomad::ClusterAssignment clusters =
        nomad::lsh_init(data, n_clusters, index_seed);
    clusters = nomad::kmeans_em(data, std::move(clusters), 100,
                                nomad::default_kmeans_tol(data));
    const nomad::KnnGraph graph = nomad::build_knn(data, clusters, index_k);

    std::ofstream assign(assign_out);
    if (!assign) nomad::fail(nomad::ErrorKind::Io, "cannot write '" + assign_out + "'");
    assign << "point_id,cluster_id\n";
    for (std::size_t i = 0; i < data.rows; ++i)
      assign << data.ids[i] << ',' << clusters.assignment[i] << '\n';

    std::ofstream edges(edges_out);
    if (!edges) nomad::fail(nomad::ErrorKind::Io, "cannot write '" + edges_out + "'");
    edges << "src,dst,distance\n";
    char buf[64];
    for (std::size_t i = 0; i < data.rows; ++i) {
      const auto neigh = graph.neighbors_of(i);
      const auto dist = graph.distances_of(i);
      for (std::size_t t = 0; t < neigh.size(); ++t) {
        std::snprintf(buf, sizeof buf, "%.17g", dist[t]);
        edges << data.ids[i] << ',' << data.ids[neigh[t]] << ',' << buf << '\n';
      }
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const nomad::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.kind() == nomad::ErrorKind::Divergence ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
