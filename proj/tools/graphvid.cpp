// graphvid: build, augment, train, infer and benchmark superpixel video graphs.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "graphvid/commands.hpp"

namespace {

using namespace graphvid;

void add_augment_flags(CLI::App* cmd, AugmentConfig& c) {
  cmd->add_option("--sigma-edge", c.sigma_edge, "Std-dev of additive edge-attribute noise")->capture_default_str();
  cmd->add_option("--sigma-node", c.sigma_node, "Std-dev of additive node-color noise")->capture_default_str();
  cmd->add_option("--p-edge", c.p_edge, "Keep probability for spatial edges")->capture_default_str();
  cmd->add_option("--p-node", c.p_node, "Keep probability for superpixels")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superpixel video-graph toolkit"};
  app.require_subcommand(1);
  int code = cli::kOk;

  cli::BuildOptions build;
  std::string build_format = "ppm";
  std::string cache_dir;
  double d_proximity = 0.0;
  auto* build_cmd = app.add_subcommand("build", "Compile frame directories into one graph file per clip");
  build_cmd->add_option("input", build.input, "Frame directory (or a directory of video directories)")->required();
  build_cmd->add_option("-o,--output", build.output, "Output directory")->required();
  build_cmd->add_option("--format", build_format, "Frame format {ppm,raw_rgb}")
      ->check(CLI::IsMember({"ppm", "raw_rgb"}))
      ->capture_default_str();
  build_cmd->add_option("--superpixels", build.superpixels, "Target superpixels per frame")->capture_default_str();
  build_cmd->add_option("--d-proximity", d_proximity, "Temporal neighborhood radius (default 2/sqrt(superpixels))");
  build_cmd->add_option("--compactness", build.compactness, "SLIC compactness")->capture_default_str();
  build_cmd->add_option("--slic-iterations", build.iterations, "SLIC iterations")->capture_default_str();
  build_cmd->add_option("--window", build.window, "Frames per clip")->capture_default_str();
  build_cmd->add_option("--frame-stride", build.frame_stride, "Stride between frames in a clip")->capture_default_str();
  build_cmd->add_option("--clip-stride", build.clip_stride, "Stride between clip starts")->capture_default_str();
  build_cmd->add_option("--jobs", build.jobs, "Clips processed in parallel")->capture_default_str();
  build_cmd->add_option("--labels", build.labels, "CSV video,label; writes manifest.csv next to the graphs");
  build_cmd->add_option("--cache-dir", cache_dir, "Graph cache directory (default $GRAPHVID_CACHE_DIR)");
  build_cmd->add_flag("--json", build.json_debug, "Also write a JSON debug export per graph");
  build_cmd->callback([&] {
    build.format = parse_frame_format(build_format);
    if (build_cmd->count("--d-proximity")) build.d_proximity = d_proximity;
    if (!cache_dir.empty()) build.cache_dir = cache_dir;
    code = cli::cmd_build(build, std::cout, std::cerr);
  });

  cli::AugmentOptions aug;
  std::string aug_config;
  auto* aug_cmd = app.add_subcommand("augment", "Apply RRS, RRSE, AGEN and AGNN to a graph file");
  aug_cmd->add_option("input", aug.input, "Input graph file")->required();
  aug_cmd->add_option("-o,--output", aug.output, "Output graph file")->required();
  add_augment_flags(aug_cmd, aug.config);
  aug_cmd->add_option("--seed", aug.config.seed, "RNG seed")->capture_default_str();
  aug_cmd->add_option("--config", aug_config, "AugmentConfig JSON (overrides the flags)");
  aug_cmd->add_flag("--json", aug.json_debug, "Also write a JSON debug export");
  aug_cmd->callback([&] {
    if (!aug_config.empty()) aug.config_file = aug_config;
    code = cli::cmd_augment(aug, std::cout, std::cerr);
  });

  cli::TrainCommandOptions train;
  bool no_augment = false;
  auto* train_cmd = app.add_subcommand("train", "Train the relational GCN on graph files");
  train_cmd->add_option("manifest", train.manifest, "CSV file,label")->required();
  train_cmd->add_option("-o,--output", train.output, "Checkpoint path")->required();
  train_cmd->add_option("--epochs", train.epochs, "Training epochs")->capture_default_str();
  train_cmd->add_option("--batch-size", train.batch_size, "Clips per Adam step")->capture_default_str();
  train_cmd->add_option("--lr", train.lr, "Adam learning rate")->capture_default_str();
  add_augment_flags(train_cmd, train.augmentation);
  train_cmd->add_flag("--no-augment", no_augment, "Disable augmentations");
  train_cmd->add_option("--seed", train.seed, "RNG seed")->capture_default_str();
  train_cmd->add_option("--embed-dim", train.embed_dim, "Node embedding width")->capture_default_str();
  train_cmd->add_option("--hidden-dim", train.hidden_dim, "Relational layer width")->capture_default_str();
  train_cmd->add_option("--layers", train.gnn_layers, "Relational layers")->capture_default_str();
  train_cmd->add_option("--dropout", train.dropout, "Dropout after pooling")->capture_default_str();
  train_cmd->add_option("--classes", train.num_classes, "Class count (0 = max label + 1)")->capture_default_str();
  train_cmd->callback([&] {
    train.augment = !no_augment;
    code = cli::cmd_train(train, std::cout, std::cerr);
  });

  cli::InferOptions infer;
  auto* infer_cmd = app.add_subcommand("infer", "Multi-view inference over clips grouped by video");
  infer_cmd->add_option("checkpoint", infer.checkpoint, "Checkpoint path")->required();
  infer_cmd->add_option("manifest", infer.manifest, "CSV file,label")->required();
  infer_cmd->add_option("--views", infer.views, "Views per video")->capture_default_str();
  infer_cmd->callback([&] { code = cli::cmd_infer(infer, std::cout, std::cerr); });

  cli::BenchCommandOptions bench;
  std::string bench_json, bench_csv;
  auto* bench_cmd = app.add_subcommand("bench", "Time graph generation against superpixel count");
  bench_cmd->add_option("--superpixels", bench.bench.superpixels, "Superpixel counts")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--frames", bench.bench.frames, "Frames per clip")->capture_default_str();
  bench_cmd->add_option("--repetitions", bench.bench.repetitions, "Timed clips per count")->capture_default_str();
  bench_cmd->add_option("--height", bench.bench.height, "Frame height")->capture_default_str();
  bench_cmd->add_option("--width", bench.bench.width, "Frame width")->capture_default_str();
  bench_cmd->add_option("--seed", bench.bench.seed, "Synthetic clip seed")->capture_default_str();
  bench_cmd->add_option("--json", bench_json, "Write the report as JSON");
  bench_cmd->add_option("--csv", bench_csv, "Write the report as CSV");
  bench_cmd->callback([&] {
    if (!bench_json.empty()) bench.json_out = bench_json;
    if (!bench_csv.empty()) bench.csv_out = bench_csv;
    code = cli::cmd_bench(bench, std::cout, std::cerr);
  });

  cli::StatsOptions stats;
  auto* stats_cmd = app.add_subcommand("stats", "Representation statistics of graph files");
  stats_cmd->add_option("graphs", stats.graphs, "Graph files")->required();
  stats_cmd->add_option("--height", stats.height, "Frame height for the pixel count")->capture_default_str();
  stats_cmd->add_option("--width", stats.width, "Frame width for the pixel count")->capture_default_str();
  stats_cmd->callback([&] { code = cli::cmd_stats(stats, std::cout, std::cerr); });

  cli::SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a moving square/circle dataset as PPM frames");
  synth_cmd->add_option("-o,--output", synth.output, "Output directory")->required();
  synth_cmd->add_option("--videos", synth.videos, "Number of videos")->capture_default_str();
  synth_cmd->add_option("--frames", synth.frames, "Frames per video")->capture_default_str();
  synth_cmd->add_option("--height", synth.height, "Frame height")->capture_default_str();
  synth_cmd->add_option("--width", synth.width, "Frame width")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "RNG seed")->capture_default_str();
  synth_cmd->callback([&] { code = cli::cmd_synth(synth, std::cout, std::cerr); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kOk : cli::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kPrecondition;
  }
  return code;
}
