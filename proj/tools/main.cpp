#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "commands.hpp"
#include "hstc/errors.hpp"

namespace {

using hstc::cli::RunConfig;

void add_scene_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--cube", cfg.cube,
                  "cube base path or its .json sidecar")
      ->required();
  cmd->add_option("--labels", cfg.labels,
                  "label file (default <cube>.labels.raw)");
}

void add_optimizer_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--max-sweeps", cfg.max_sweeps, "sweep limit");
  cmd->add_option("--inner-steps", cfg.inner_steps,
                  "gradient steps per block (linear model)");
  cmd->add_option("--learning-rate", cfg.learning_rate, "initial step size");
  cmd->add_option("--l2", cfg.l2, "L2 penalty");
  cmd->add_option("--rel-tol", cfg.rel_tol, "relative stopping tolerance");
  cmd->add_option("--init-scale", cfg.init_scale,
                  "initialization scale (entries ~ U(+-scale/sqrt(rows)))");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rank-1 tensor classifiers for hyperspectral cubes"};
  app.require_subcommand(1);

  RunConfig cfg;

  CLI::App* train = app.add_subcommand("train", "fit a model on a cube");
  add_scene_options(train, cfg);
  train->add_option("--model-type", cfg.model_type, "tensor_lr | rank1_fnn")
      ->check(CLI::IsMember({"tensor_lr", "rank1_fnn"}));
  train->add_option("-s,--window", cfg.window, "odd patch window (default 5)");
  train->add_option("-q,--hidden", cfg.num_hidden,
                    "hidden neurons for rank1_fnn (presets 75, 100)");
  train->add_option("--samples-per-class", cfg.samples_per_class,
                    "training pixels drawn per class");
  train->add_option("--seed", cfg.seed, "split and initialization seed");
  train->add_option("-o,--out", cfg.out_dir, "output directory");
  add_optimizer_options(train, cfg);
  train->set_config("--config");

  CLI::App* eval = app.add_subcommand("eval", "score a model on test pixels");
  add_scene_options(eval, cfg);
  eval->add_option("--model", cfg.model_path, "model file")->required();
  eval->add_option("-o,--out", cfg.out_dir, "output directory");
  {
    static hstc::Index samples = 0;
    static std::uint64_t seed = 0;
    eval->add_option("--samples-per-class", samples,
                     "override the recorded split size")
        ->each([&cfg](const std::string&) {
          cfg.eval_samples_per_class = samples;
        });
    eval->add_option("--seed", seed, "override the recorded split seed")
        ->each([&cfg](const std::string&) { cfg.eval_seed = seed; });
  }
  eval->set_config("--config");

  CLI::App* map = app.add_subcommand("map", "emit class / misclassification maps");
  add_scene_options(map, cfg);
  map->add_option("--model", cfg.model_path, "model file")->required();
  map->add_option("-o,--out", cfg.out_dir, "output directory");
  map->set_config("--config");

  CLI::App* bands = app.add_subcommand("bands", "rank spectral bands by weight");
  bands->add_option("--model", cfg.model_path, "model file")->required();
  bands->add_option("-n,--top", cfg.top_counts,
                    "table sizes to emit (default 10 20, clamped to B)")
      ->each([&cfg](const std::string&) { cfg.top_counts_explicit = true; });
  bands->add_option("-o,--out", cfg.out_dir, "output directory");
  bands->set_config("--config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (train->parsed()) {
      hstc::cli::cmd_train(cfg);
    } else if (eval->parsed()) {
      hstc::cli::cmd_eval(cfg);
    } else if (map->parsed()) {
      hstc::cli::cmd_map(cfg);
    } else if (bands->parsed()) {
      hstc::cli::cmd_bands(cfg);
    }
  } catch (const hstc::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
