#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>
#include <variant>

#include <nlohmann/json.hpp>

#include "hstc/band_selection.hpp"
#include "hstc/errors.hpp"
#include "hstc/hypercube.hpp"
#include "hstc/linear_model.hpp"
#include "hstc/rank1_fnn.hpp"

namespace hstc::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

int clamp_threads(long v) {
  if (v < 1) return 1;
  if (v > 256) return 256;
  return static_cast<int>(v);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

fs::path resolve_labels(const RunConfig& cfg) {
  return cfg.labels.empty() ? labels_path_for(cfg.cube) : cfg.labels;
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::exists(p)) {
    throw FormatError(std::string(what) + " not found: " + p.string());
  }
}

TrainConfig optimizer_config(const RunConfig& cfg) {
  TrainConfig t;
  t.max_sweeps = cfg.max_sweeps;
  t.inner_steps = cfg.inner_steps;
  t.learning_rate = cfg.learning_rate;
  t.l2 = cfg.l2;
  t.rel_tol = cfg.rel_tol;
  t.seed = cfg.seed;
  t.init_scale = cfg.init_scale;
  return t;
}

void write_trace_csv(const fs::path& path, const TrainTrace& trace) {
  std::ofstream out(path);
  if (!out) {
    throw FormatError("cannot write trace file " + path.string());
  }
  out << "sweep,block,objective\n";
  for (const auto& e : trace.entries) {
    out << e.sweep << "," << e.block << "," << format_double(e.objective)
        << "\n";
  }
}

struct LoadedScene {
  HyperCube cube;
  LabelMap labels;
};

LoadedScene load_scene(const RunConfig& cfg) {
  require_file(fs::path(cfg.cube).extension() == ".json"
                   ? cfg.cube
                   : fs::path(cfg.cube.string() + ".json"),
               "cube header");
  const fs::path labels_path = resolve_labels(cfg);
  require_file(labels_path, "label file");
  LoadedScene scene;
  scene.cube = load_cube(cfg.cube);
  scene.labels = load_labels(labels_path, scene.cube.height, scene.cube.width);
  return scene;
}

Index predict_any(const AnyModel& m, const DenseTensor& x) {
  return std::visit([&](const auto& model) { return predict_class(model, x); },
                    m);
}

Shape input_shape_of(const AnyModel& m) {
  return std::visit([](const auto& model) { return model.input_shape; }, m);
}

Index classes_of(const AnyModel& m) {
  return std::visit([](const auto& model) { return model.num_classes; }, m);
}

/// Runs fn(begin, end) over [0, n) in `threads` contiguous chunks; results
/// must be written into position-indexed storage so assembly stays ordered.
template <typename F>
void parallel_chunks(Index n, int threads, F&& fn) {
  if (threads <= 1 || n < 2) {
    fn(Index{0}, n);
    return;
  }
  const int workers = static_cast<int>(
      std::min<Index>(threads, std::max<Index>(n, 1)));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const Index chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const Index begin = w * chunk;
    const Index end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) {
    t.join();
  }
}

/// Predicted class (1-based) for each coordinate, in input order.
std::vector<Index> predict_pixels(
    const AnyModel& model, const HyperCube& cube,
    const std::vector<std::pair<Index, Index>>& coords, Index window) {
  std::vector<Index> out(coords.size(), 0);
  parallel_chunks(
      static_cast<Index>(coords.size()), thread_count(),
      [&](Index begin, Index end) {
        for (Index i = begin; i < end; ++i) {
          const auto [r, c] = coords[static_cast<std::size_t>(i)];
          const DenseTensor patch = extract_patch(cube, r, c, window);
          out[static_cast<std::size_t>(i)] = predict_any(model, patch) + 1;
        }
      });
  return out;
}

Index window_of(const AnyModel& model, const HyperCube& cube) {
  const Shape shape = input_shape_of(model);
  if (shape.size() != 3) {
    throw std::invalid_argument("model input shape is not a 3-D patch");
  }
  if (shape[0] != shape[1]) {
    throw std::invalid_argument("model patch window is not square");
  }
  if (shape[2] != cube.bands) {
    throw std::invalid_argument(
        "model expects " + std::to_string(shape[2]) + " bands, cube has " +
        std::to_string(cube.bands));
  }
  return shape[0];
}

void write_pgm(const fs::path& path, Index width, Index height,
               const std::vector<unsigned char>& pixels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("cannot write image " + path.string());
  }
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
}

}  // namespace

int thread_count() {
  const char* env = std::getenv("HSTC_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  return clamp_threads(std::strtol(env, nullptr, 10));
}

fs::path cmd_train(const RunConfig& cfg) {
  if (cfg.model_type != "tensor_lr" && cfg.model_type != "rank1_fnn") {
    throw std::invalid_argument("unknown model type '" + cfg.model_type + "'");
  }
  const LoadedScene scene = load_scene(cfg);
  fs::create_directories(cfg.out_dir);

  const auto [train_ds, test_ds] =
      split_per_class(scene.cube, scene.labels, cfg.samples_per_class,
                      cfg.seed, cfg.window);
  (void)test_ds;
  NormalizeResult norm = normalize_features(train_ds);

  const TrainConfig opt = optimizer_config(cfg);
  const SplitSpec split{cfg.seed, cfg.samples_per_class};
  const fs::path model_path = cfg.out_dir / "model.json";
  const Shape shape = norm.data.patch_shape();
  const Index classes = norm.data.num_classes();

  TrainTrace trace;
  if (cfg.model_type == "tensor_lr") {
    auto fit = fit_tensor_lr(norm.data, opt);
    fit.model.scaling = std::move(norm.scaling);
    save_model(model_path, fit.model, split);
    trace = std::move(fit.trace);
    std::cout << "parameters: tensor_lr "
              << tensor_lr_param_count(classes, shape) << ", vectorized "
              << vector_lr_param_count(classes, shape) << "\n";
  } else {
    auto fit = fit_rank1_fnn(norm.data, opt, cfg.num_hidden);
    fit.model.scaling = std::move(norm.scaling);
    save_model(model_path, fit.model, split);
    trace = std::move(fit.trace);
    std::cout << "parameters: rank1_fnn "
              << rank1_fnn_param_count(cfg.num_hidden, shape, classes)
              << ", vectorized "
              << dense_fnn_param_count(cfg.num_hidden, shape, classes) << "\n";
  }
  write_trace_csv(cfg.out_dir / "trace.csv", trace);
  std::cout << "trained " << cfg.model_type << " on " << norm.data.size()
            << " samples in " << trace.sweeps_run << " sweeps ("
            << (trace.converged ? "converged" : "sweep limit")
            << "), final objective "
            << format_double(trace.entries.back().objective) << "\n";
  return model_path;
}

EvalReport cmd_eval(const RunConfig& cfg) {
  require_file(cfg.model_path, "model file");
  const ModelFile mf = load_model(cfg.model_path);
  const LoadedScene scene = load_scene(cfg);

  std::uint64_t seed = 0;
  Index per_class = 0;
  if (cfg.eval_seed || cfg.eval_samples_per_class) {
    if (!cfg.eval_seed || !cfg.eval_samples_per_class) {
      throw std::invalid_argument(
          "eval split override needs both --seed and --samples-per-class");
    }
    seed = *cfg.eval_seed;
    per_class = *cfg.eval_samples_per_class;
  } else if (mf.split) {
    seed = mf.split->seed;
    per_class = mf.split->samples_per_class;
  } else {
    throw std::invalid_argument(
        "model file records no split; pass --seed and --samples-per-class");
  }

  const Index window = window_of(mf.model, scene.cube);
  const Index classes = classes_of(mf.model);
  if (scene.labels.max_class() > classes) {
    throw std::invalid_argument("label map holds more classes than the model");
  }

  const auto t0 = std::chrono::steady_clock::now();
  const SplitIndices split = split_per_class_indices(scene.labels, per_class, seed);
  const std::vector<Index> predicted =
      predict_pixels(mf.model, scene.cube, split.test_coords, window);

  EvalReport report;
  report.train_samples = static_cast<Index>(split.train_coords.size());
  report.test_samples = static_cast<Index>(split.test_coords.size());
  report.confusion = Eigen::MatrixXd::Zero(classes, classes);
  for (std::size_t i = 0; i < split.test_coords.size(); ++i) {
    const auto [r, c] = split.test_coords[i];
    const Index truth = scene.labels.at(r, c);
    report.confusion(truth - 1, predicted[i] - 1) += 1.0;
  }
  report.per_class_accuracy = Eigen::VectorXd::Zero(classes);
  for (Index k = 0; k < classes; ++k) {
    const double row_total = report.confusion.row(k).sum();
    report.per_class_accuracy[k] =
        row_total > 0 ? report.confusion(k, k) / row_total : 0.0;
  }
  report.overall_accuracy =
      report.test_samples > 0
          ? report.confusion.trace() / static_cast<double>(report.test_samples)
          : 0.0;
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  fs::create_directories(cfg.out_dir);
  json doc;
  doc["overall_accuracy"] = report.overall_accuracy;
  doc["per_class_accuracy"] = std::vector<double>(
      report.per_class_accuracy.begin(), report.per_class_accuracy.end());
  json confusion = json::array();
  for (Index r = 0; r < classes; ++r) {
    json row = json::array();
    for (Index c = 0; c < classes; ++c) {
      row.push_back(report.confusion(r, c));
    }
    confusion.push_back(std::move(row));
  }
  doc["confusion"] = std::move(confusion);
  doc["train_samples"] = report.train_samples;
  doc["test_samples"] = report.test_samples;
  doc["split"] = {{"seed", seed}, {"samples_per_class", per_class}};
  doc["wall_time_seconds"] = report.wall_time_seconds;
  {
    std::ofstream out(cfg.out_dir / "report.json");
    out << doc.dump(1) << "\n";
  }
  {
    std::ofstream out(cfg.out_dir / "report.csv");
    out << "class,test_count,correct,accuracy\n";
    for (Index k = 0; k < classes; ++k) {
      out << (k + 1) << "," << report.confusion.row(k).sum() << ","
          << report.confusion(k, k) << ","
          << format_double(report.per_class_accuracy[k]) << "\n";
    }
    out << "overall," << report.test_samples << "," << report.confusion.trace()
        << "," << format_double(report.overall_accuracy) << "\n";
  }
  {
    std::ofstream out(cfg.out_dir / "confusion.csv");
    for (Index r = 0; r < classes; ++r) {
      for (Index c = 0; c < classes; ++c) {
        out << report.confusion(r, c) << (c + 1 < classes ? "," : "\n");
      }
    }
  }
  std::cout << "overall accuracy " << report.overall_accuracy << " on "
            << report.test_samples << " test pixels ("
            << report.wall_time_seconds << " s)\n";
  return report;
}

void cmd_map(const RunConfig& cfg) {
  require_file(cfg.model_path, "model file");
  const ModelFile mf = load_model(cfg.model_path);
  const LoadedScene scene = load_scene(cfg);
  const Index window = window_of(mf.model, scene.cube);
  const Index classes = classes_of(mf.model);

  std::vector<std::pair<Index, Index>> labeled;
  for (Index r = 0; r < scene.labels.height; ++r) {
    for (Index c = 0; c < scene.labels.width; ++c) {
      if (scene.labels.at(r, c) > 0) labeled.emplace_back(r, c);
    }
  }
  const std::vector<Index> predicted =
      predict_pixels(mf.model, scene.cube, labeled, window);

  const std::size_t total =
      static_cast<std::size_t>(scene.labels.height * scene.labels.width);
  std::vector<unsigned char> class_map(total, 0);     // unlabeled stays black
  std::vector<unsigned char> misclass_map(total, 128);  // unlabeled gray
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    const auto [r, c] = labeled[i];
    const std::size_t pos = static_cast<std::size_t>(r * scene.labels.width + c);
    class_map[pos] = static_cast<unsigned char>(
        std::lround(static_cast<double>(predicted[i]) * 255.0 /
                    static_cast<double>(classes)));
    misclass_map[pos] = predicted[i] == scene.labels.at(r, c) ? 0 : 255;
  }
  fs::create_directories(cfg.out_dir);
  write_pgm(cfg.out_dir / "classmap.pgm", scene.labels.width,
            scene.labels.height, class_map);
  write_pgm(cfg.out_dir / "misclass.pgm", scene.labels.width,
            scene.labels.height, misclass_map);
  std::cout << "wrote classmap.pgm and misclass.pgm for " << labeled.size()
            << " labeled pixels\n";
}

void cmd_bands(const RunConfig& cfg) {
  require_file(cfg.model_path, "model file");
  const ModelFile mf = load_model(cfg.model_path);
  if (!std::holds_alternative<TensorLRModel>(mf.model)) {
    throw std::invalid_argument(
        "band ranking is defined for tensor_lr models only");
  }
  const TensorLRModel& model = std::get<TensorLRModel>(mf.model);
  if (!model.scaling) {
    std::cerr << "warning: model carries no normalization stats; band scores "
                 "mix raw feature scales\n";
  }
  const BandRanking ranking = band_importance(model);
  if (ranking.degenerate) {
    std::cerr << "warning: all band scores are zero, ranking is degenerate\n";
  }
  const Index bands = ranking.scores.size();
  std::vector<Index> counts;
  for (const Index n : cfg.top_counts) {
    if (cfg.top_counts_explicit) {
      if (n < 1 || n > bands) {
        throw std::invalid_argument("band count " + std::to_string(n) +
                                    " outside 1.." + std::to_string(bands));
      }
      counts.push_back(n);
    } else {
      const Index clamped = std::min(n, bands);
      if (std::find(counts.begin(), counts.end(), clamped) == counts.end()) {
        counts.push_back(clamped);
      }
    }
  }

  fs::create_directories(cfg.out_dir);
  json doc;
  doc["source_model"] = ranking.source_model;
  doc["scores"] =
      std::vector<double>(ranking.scores.begin(), ranking.scores.end());
  std::vector<Index> order_1based;
  for (const Index b : ranking.order) order_1based.push_back(b + 1);
  doc["order"] = order_1based;  // bands numbered from 1
  doc["degenerate"] = ranking.degenerate;
  {
    std::ofstream out(cfg.out_dir / "bands.json");
    out << doc.dump(1) << "\n";
  }
  for (const Index n : counts) {
    std::ofstream out(cfg.out_dir /
                      ("bands_top" + std::to_string(n) + ".csv"));
    out << "rank,band_index,score\n";
    for (Index i = 0; i < n; ++i) {
      const Index band = ranking.order[static_cast<std::size_t>(i)];
      out << (i + 1) << "," << (band + 1) << ","
          << format_double(ranking.scores[band]) << "\n";
    }
  }
  std::cout << "wrote band ranking for " << bands << " bands\n";
}

}  // namespace hstc::cli
