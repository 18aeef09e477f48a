#include "graphvid/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "graphvid/error.hpp"
#include "graphvid/graph.hpp"
#include "graphvid/graph_store.hpp"
#include "graphvid/rgcn.hpp"
#include "graphvid/synthetic.hpp"
#include "graphvid/trainer.hpp"

namespace graphvid::cli {

namespace fs = std::filesystem;

namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
      return kPrecondition;
    case ErrorKind::Format:
      return kDataError;
    case ErrorKind::Io:
      return kIoError;
    case ErrorKind::Numeric:
      return kNumericError;
    case ErrorKind::State:
      return kFailure;
  }
  return kFailure;
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

struct VideoSource {
  std::string id;
  fs::path path;
};

bool has_extension_files(const fs::path& dir, const std::string& ext) {
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) return true;
  }
  return false;
}

std::vector<VideoSource> discover_videos(const fs::path& input, FrameFormat format) {
  if (!fs::exists(input)) throw Error(ErrorKind::Io, "no such input " + input.string());
  const std::string ext = format == FrameFormat::Ppm ? ".ppm" : ".rgb";
  std::vector<VideoSource> videos;
  if (fs::is_regular_file(input)) {
    if (format != FrameFormat::RawRgb) throw Error(ErrorKind::InvalidArgument, "ppm input must be a directory");
    return {{input.stem().string(), input}};
  }
  const std::string own_name = fs::absolute(input).lexically_normal().parent_path().filename().string();
  const std::string name = input.filename().empty() ? own_name : input.filename().string();
  if (has_extension_files(input, ext)) {
    if (format == FrameFormat::Ppm) return {{name, input}};
    for (const auto& e : fs::directory_iterator(input)) {
      if (e.is_regular_file() && e.path().extension() == ext) videos.push_back({e.path().stem().string(), e.path()});
    }
  } else {
    for (const auto& e : fs::directory_iterator(input)) {
      if (e.is_directory() && has_extension_files(e.path(), ext)) videos.push_back({e.path().filename().string(), e.path()});
    }
  }
  std::sort(videos.begin(), videos.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  if (videos.empty()) throw Error(ErrorKind::InvalidArgument, "no " + ext + " frames under " + input.string());
  return videos;
}

std::map<std::string, int> read_video_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::map<std::string, int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw Error(ErrorKind::Format, path.string() + ":" + std::to_string(lineno) + ": expected name,label");
    const std::string label = line.substr(comma + 1);
    if (lineno == 1 && label == "label") continue;
    try {
      labels[line.substr(0, comma)] = std::stoi(label);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Format, path.string() + ":" + std::to_string(lineno) + ": bad label '" + label + "'");
    }
  }
  return labels;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::uint64_t clip_cache_key(const std::vector<Frame>& frames, const SlicConfig& slic, const BuilderConfig& builder) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& f : frames) {
    feed(&f.height, sizeof f.height);
    feed(&f.width, sizeof f.width);
    feed(f.data.data(), f.data.size() * sizeof(float));
  }
  std::ostringstream params;
  params << std::setprecision(17) << "GVG1|" << slic.target_superpixels << '|' << slic.compactness << '|'
         << slic.iterations << '|' << slic.min_region_fraction << '|' << builder.d_proximity;
  const std::string p = params.str();
  feed(p.data(), p.size());
  return mix64(h);
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

fs::path resolve_relative(const fs::path& base_file, const fs::path& entry) {
  return entry.is_absolute() ? entry : base_file.parent_path() / entry;
}

}  // namespace

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::vector<ManifestEntry> entries;
  for (const auto& [file, label] : read_video_labels(path)) entries.push_back({resolve_relative(path, file), label});
  if (entries.empty()) throw Error(ErrorKind::Format, path.string() + ": manifest is empty");
  return entries;
}

std::optional<std::pair<std::string, std::size_t>> parse_clip_name(const fs::path& file) {
  const std::string stem = file.stem().string();
  const auto underscore = stem.rfind('_');
  if (underscore == std::string::npos || underscore + 1 == stem.size()) return std::nullopt;
  const std::string digits = stem.substr(underscore + 1);
  if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) return std::nullopt;
  return std::make_pair(stem.substr(0, underscore), static_cast<std::size_t>(std::stoull(digits)));
}

int cmd_build(const BuildOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    SlicConfig slic;
    slic.target_superpixels = o.superpixels;
    slic.compactness = o.compactness;
    slic.iterations = o.iterations;
    slic.validate();
    const BuilderConfig builder = o.d_proximity ? BuilderConfig{*o.d_proximity} : BuilderConfig::defaults_for(o.superpixels);
    builder.validate();
    std::optional<fs::path> cache = o.cache_dir;
    if (!cache) {
      if (const char* env = std::getenv("GRAPHVID_CACHE_DIR"); env && *env) cache = fs::path(env);
    }
    if (cache) fs::create_directories(*cache);
    fs::create_directories(o.output);
    const auto video_labels = o.labels ? read_video_labels(*o.labels) : std::map<std::string, int>{};

    std::ostringstream manifest;
    manifest << "file,label\n";
    std::size_t files_written = 0;
    std::uint64_t total_graph_values = 0, total_pixel_values = 0;

    for (const auto& video : discover_videos(o.input, o.format)) {
      const auto frames = load_frame_sequence(video.path, o.format);
      if (frames.empty()) {
        err << "warning: " << video.id << " has no frames\n";
        continue;
      }
      if (static_cast<std::size_t>(o.superpixels) > frames.front().pixel_count()) {
        throw Error(ErrorKind::InvalidArgument, "superpixels (" + std::to_string(o.superpixels) +
                                                    ") exceed the pixel count of " + video.id);
      }
      if (o.labels && !video_labels.contains(video.id)) {
        throw Error(ErrorKind::Format, "no label for video " + video.id);
      }
      const auto clips = enumerate_clips(frames.size(), o.window, o.frame_stride, o.clip_stride, video.id);
      std::vector<std::string> lines(clips.size());
      std::vector<CompressionReport> reports(clips.size());
      std::vector<std::exception_ptr> failures(clips.size());

      auto work = [&](std::size_t c) {
        try {
          const auto clip_frames = gather_clip(frames, clips[c]);
          std::vector<std::uint8_t> bytes;
          fs::path cached;
          if (cache) {
            cached = *cache / (hex64(clip_cache_key(clip_frames, slic, builder)) + ".gvg");
            if (fs::exists(cached)) {
              bytes = read_file(cached);
              deserialize_graph(bytes);  // reject corrupt cache entries
            }
          }
          if (bytes.empty()) {
            bytes = serialize_graph(build_video_graph(clip_frames, slic, builder));
            if (cache) write_file_atomic(cached, bytes);
          }
          const VideoGraph graph = deserialize_graph(bytes);
          const std::string name = video.id + "_" + std::to_string(clips[c].start_frame) + ".gvg";
          write_file_atomic(o.output / name, bytes);
          if (o.json_debug) write_text_atomic(o.output / (name + ".json"), graph_to_json(graph));
          reports[c] = compression_report(graph, frames.front().height, frames.front().width);
          std::ostringstream line;
          line << name << ": nodes " << graph.nodes.size() << ", spatial " << graph.spatial_edges.size()
               << ", temporal " << graph.temporal_edges.size() << ", values " << reports[c].graph.total()
               << " vs pixels " << reports[c].pixel_values << " (" << std::fixed << std::setprecision(1)
               << reports[c].ratio << "x smaller)";
          lines[c] = line.str();
        } catch (...) {
          failures[c] = std::current_exception();
        }
      };

      const unsigned jobs = std::max(1u, std::min<unsigned>(o.jobs, static_cast<unsigned>(clips.size())));
      if (jobs <= 1) {
        for (std::size_t c = 0; c < clips.size(); ++c) work(c);
      } else {
        std::vector<std::thread> workers;
        for (unsigned w = 0; w < jobs; ++w) {
          workers.emplace_back([&, w] {
            for (std::size_t c = w; c < clips.size(); c += jobs) work(c);
          });
        }
        for (auto& t : workers) t.join();
      }
      for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
      }
      for (std::size_t c = 0; c < clips.size(); ++c) {
        out << lines[c] << "\n";
        total_graph_values += reports[c].graph.total();
        total_pixel_values += reports[c].pixel_values;
        if (o.labels) {
          manifest << video.id << "_" << clips[c].start_frame << ".gvg," << video_labels.at(video.id) << "\n";
        }
      }
      files_written += clips.size();
    }
    if (o.labels) write_text_atomic(o.output / "manifest.csv", manifest.str());
    out << "wrote " << files_written << " graph files";
    if (total_graph_values > 0) {
      out << "; representation " << total_graph_values << " values vs " << total_pixel_values << " pixel values ("
          << std::fixed << std::setprecision(1)
          << static_cast<double>(total_pixel_values) / static_cast<double>(total_graph_values) << "x smaller)";
    }
    out << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_augment(const AugmentOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    AugmentConfig config = o.config;
    if (o.config_file) {
      std::ifstream in(*o.config_file);
      if (!in) throw Error(ErrorKind::Io, "cannot open " + o.config_file->string());
      config = nlohmann::json::parse(in).get<AugmentConfig>();
    }
    config.validate();
    const VideoGraph input = read_graph(o.input);
    const VideoGraph result = augment(input, config);
    const std::size_t bytes = write_graph(result, o.output);
    if (o.json_debug) {
      fs::path json_path = o.output;
      json_path += ".json";
      write_text_atomic(json_path, graph_to_json(result));
    }
    out << o.output.string() << ": nodes " << input.nodes.size() << " -> " << result.nodes.size() << ", spatial "
        << input.spatial_edges.size() << " -> " << result.spatial_edges.size() << ", temporal "
        << input.temporal_edges.size() << " -> " << result.temporal_edges.size() << " (" << bytes << " bytes)\n";
    return static_cast<int>(kOk);
  });
}

int cmd_train(const TrainCommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto entries = read_manifest(o.manifest);
    std::vector<VideoGraph> graphs;
    std::vector<int> labels;
    int max_label = 0;
    for (const auto& e : entries) {
      if (e.label < 0) throw Error(ErrorKind::Format, "negative label for " + e.file.string());
      graphs.push_back(read_graph(e.file));
      if (graphs.back().empty()) throw Error(ErrorKind::Format, e.file.string() + " has no nodes");
      labels.push_back(e.label);
      max_label = std::max(max_label, e.label);
    }
    rgcn::ModelConfig config;
    config.embed_dim = o.embed_dim;
    config.hidden_dim = o.hidden_dim;
    config.gnn_layers = o.gnn_layers;
    config.dropout_p = o.dropout;
    config.num_classes = o.num_classes > 0 ? o.num_classes : max_label + 1;
    if (max_label >= config.num_classes) {
      throw Error(ErrorKind::Format, "manifest label " + std::to_string(max_label) + " exceeds --classes");
    }
    config.validate();
    auto model = rgcn::Model<float>::initialize(config, derive_seed(o.seed, 0x1417));

    rgcn::TrainOptions train_options;
    train_options.epochs = o.epochs;
    train_options.batch_size = o.batch_size;
    train_options.lr = o.lr;
    train_options.augment = o.augment;
    train_options.augmentation = o.augmentation;
    train_options.seed = o.seed;

    std::vector<rgcn::PreparedGraph> prepared;
    for (const auto& g : graphs) prepared.push_back(rgcn::prepare(g, config.relations));

    int current_epoch = 0;
    double epoch_loss = 0.0;
    std::size_t epoch_steps = 0;
    auto report_epoch = [&] {
      if (epoch_steps == 0) return;
      out << "epoch " << current_epoch + 1 << ": loss " << std::setprecision(6) << epoch_loss / epoch_steps
          << ", train accuracy " << rgcn::accuracy(model, prepared, labels) << "\n";
    };
    const auto steps = rgcn::train(model, graphs, labels, train_options, [&](const rgcn::StepReport& r) {
      if (r.epoch != current_epoch) {
        report_epoch();
        current_epoch = r.epoch;
        epoch_loss = 0.0;
        epoch_steps = 0;
      }
      epoch_loss += r.loss;
      ++epoch_steps;
      return true;
    });
    report_epoch();
    rgcn::save_checkpoint(model, o.output);
    out << "trained " << steps << " steps on " << graphs.size() << " clips (" << rgcn::count_params(config)
        << " parameters); checkpoint " << o.output.string() << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_infer(const InferOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto model = rgcn::load_checkpoint(o.checkpoint);
    const auto entries = read_manifest(o.manifest);

    struct Video {
      std::vector<std::pair<std::size_t, fs::path>> clips;
      int label = -1;
    };
    std::map<std::string, Video> videos;
    for (const auto& e : entries) {
      const auto parsed = parse_clip_name(e.file);
      const std::string id = parsed ? parsed->first : e.file.stem().string();
      Video& v = videos[id];
      if (v.label >= 0 && v.label != e.label) {
        throw Error(ErrorKind::Format, "clips of video " + id + " carry different labels");
      }
      if (e.label < 0 || e.label >= model.config.num_classes) {
        throw Error(ErrorKind::Format, "label " + std::to_string(e.label) + " for " + e.file.string() +
                                           " is outside the model's " + std::to_string(model.config.num_classes) +
                                           " classes");
      }
      v.label = e.label;
      v.clips.emplace_back(parsed ? parsed->second : 0, e.file);
    }

    std::size_t top1 = 0, top5 = 0;
    for (auto& [id, video] : videos) {
      std::sort(video.clips.begin(), video.clips.end());
      std::vector<rgcn::PreparedGraph> prepared;
      for (const auto& [start, file] : video.clips) {
        prepared.push_back(rgcn::prepare(read_graph(file), model.config.relations));
      }
      const auto view = rgcn::infer_views(model, prepared, o.views);
      const auto best = rgcn::top_k(view.aggregated, 5);
      const bool hit1 = !best.empty() && best.front() == video.label;
      const bool hit5 = std::find(best.begin(), best.end(), video.label) != best.end();
      top1 += hit1;
      top5 += hit5;
      out << id << ": label " << video.label << ", top-5 [";
      for (std::size_t k = 0; k < best.size(); ++k) out << (k ? " " : "") << best[k];
      out << "], " << view.views.size() << " views over " << video.clips.size() << " clips\n";
    }
    const double n = static_cast<double>(videos.size());
    out << "videos " << videos.size() << ", top-1 " << std::setprecision(4) << top1 / n << ", top-5 " << top5 / n
        << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_bench(const BenchCommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const BenchReport report = run_bench(o.bench);
    out << report.environment << "\n";
    out << bench_to_csv(report);
    if (o.json_out) write_text_atomic(*o.json_out, bench_to_json(report) + "\n");
    if (o.csv_out) write_text_atomic(*o.csv_out, bench_to_csv(report));
    return static_cast<int>(kOk);
  });
}

int cmd_stats(const StatsOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.graphs.empty()) throw Error(ErrorKind::InvalidArgument, "no graph files given");
    for (const auto& path : o.graphs) {
      const VideoGraph g = read_graph(path);
      const auto report = compression_report(g, o.height, o.width);
      const auto bytes = fs::file_size(path);
      out << path.string() << ": frames " << g.frame_count << ", nodes " << g.nodes.size() << ", spatial edges "
          << g.spatial_edges.size() << ", temporal edges " << g.temporal_edges.size() << ", values "
          << report.graph.total() << " (edges " << report.graph.edge_values << ", nodes " << report.graph.node_values
          << "), pixel values at " << o.height << "x" << o.width << " " << report.pixel_values << ", ratio "
          << std::fixed << std::setprecision(2) << report.ratio << ", file bytes " << bytes << "\n"
          << std::defaultfloat;
    }
    return static_cast<int>(kOk);
  });
}

int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.videos < 1) throw Error(ErrorKind::InvalidArgument, "--videos must be >= 1");
    fs::create_directories(o.output);
    std::ostringstream labels;
    labels << "video,label\n";
    synthetic::MotionClipOptions clip;
    clip.frames = o.frames;
    clip.height = o.height;
    clip.width = o.width;
    clip.shape_size = std::min(o.height, o.width) * 0.75;
    for (int v = 0; v < o.videos; ++v) {
      Rng rng(derive_seed(o.seed, static_cast<std::uint64_t>(v)));
      const auto shape = v % 2 == 0 ? synthetic::Shape::Square : synthetic::Shape::Circle;
      char name[32];
      std::snprintf(name, sizeof name, "video_%04d", v);
      const fs::path dir = o.output / name;
      fs::create_directories(dir);
      const auto frames = synthetic::moving_shape_clip(shape, clip, rng);
      for (std::size_t t = 0; t < frames.size(); ++t) {
        char file[32];
        std::snprintf(file, sizeof file, "frame_%05zu.ppm", t);
        write_ppm(frames[t], dir / file);
      }
      labels << name << "," << static_cast<int>(shape) << "\n";
    }
    write_text_atomic(o.output / "labels.csv", labels.str());
    out << "wrote " << o.videos << " videos of " << o.frames << " frames to " << o.output.string() << "\n";
    return static_cast<int>(kOk);
  });
}

}  // namespace graphvid::cli
