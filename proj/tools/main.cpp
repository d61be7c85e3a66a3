#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "fmvae/errors.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

int fail(int code, const char* kind, const char* what) {
  std::fprintf(stderr, "fmvae: %s: %s\n", kind, what);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fmvae::cli;
  CLI::App app{"Flat-manifold VAE: data generation, training and latent-geometry analysis"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--config", global.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", global.seed, "Seed for every random draw of the command");
  app.add_option("--out", global.out, "Output directory")->capture_default_str();

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen_cmd->add_option("kind", gen.kind, "Dataset kind (pendulum)")->capture_default_str();
  gen_cmd->add_option("--count", gen.count, "Number of images")->capture_default_str();
  gen_cmd->add_option("--noise-std", gen.noise_std, "Additive pixel noise")->capture_default_str();
  gen_cmd->add_option("--format", gen.format, "bin or csv")->capture_default_str();

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train a model; writes model.ckpt, train_log.csv and config.json");
  train_cmd->add_option("--preset", train.preset, "pendulum, mnist or human (ignored with --config)");
  train_cmd->add_option("--data", train.data, "Dataset file (.csv or binary) replacing the configured source");
  train_cmd->add_option("--eta", train.eta, "Flatness penalty weight; 0 trains the plain hierarchical-prior VAE");
  train_cmd->add_flag("--no-mixup", train.no_mixup, "Evaluate the penalty at the latent samples only");
  train_cmd->add_option("--fixed-c2", train.fixed_c2, "Use a constant scale factor");
  train_cmd->add_option("--steps", train.steps, "Override max_steps");
  train_cmd->add_option("--lr", train.learning_rate, "Override the learning rate");
  train_cmd->add_option("--batch-size", train.batch_size, "Override the batch size");
  train_cmd->add_option("--log-every", train.log_every, "Progress line interval")->capture_default_str();

  AnalyzeOptions analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Latent geometry report for a checkpoint");
  analyze_cmd->add_option("checkpoint", analyze.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--data", analyze.data, "Dataset to encode (.csv or binary)");
  analyze_cmd->add_option("--samples", analyze.samples, "Prior samples")->capture_default_str();
  analyze_cmd->add_option("--pairs", analyze.pairs, "Random pairs for ratios and smoothness")->capture_default_str();
  analyze_cmd->add_option("--graph-nodes", analyze.graph_nodes, "Geodesic graph nodes")->capture_default_str();
  analyze_cmd->add_option("--graph-neighbours", analyze.graph_neighbours, "Neighbours per node")->capture_default_str();
  analyze_cmd->add_option("--path-steps", analyze.path_steps, "Segments per straight path")->capture_default_str();
  analyze_cmd->add_option("--grid", analyze.grid, "Grid resolution for field CSVs (0 = none)")->capture_default_str();
  analyze_cmd->add_option("--distance-from", analyze.distance_from, "Latent point z1,z2 for a distance field");

  InterpolateOptions interp;
  auto* interp_cmd = app.add_subcommand("interpolate", "Decode a straight latent path");
  interp_cmd->add_option("checkpoint", interp.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  interp_cmd->add_option("--data", interp.data, "Dataset for index endpoints");
  interp_cmd->add_option("--from", interp.from, "Start as comma-separated latent coordinates");
  interp_cmd->add_option("--to", interp.to, "End as comma-separated latent coordinates");
  interp_cmd->add_option("--from-index", interp.from_index, "Start as the encoded mean of a dataset row");
  interp_cmd->add_option("--to-index", interp.to_index, "End as the encoded mean of a dataset row");
  interp_cmd->add_option("--steps", interp.steps, "Number of segments M; M + 1 rows are written")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen_cmd) cmd_gen_data(global, gen);
    if (*train_cmd) cmd_train(global, train);
    if (*analyze_cmd) cmd_analyze(global, analyze);
    if (*interp_cmd) cmd_interpolate(global, interp);
  } catch (const fmvae::ConfigError& e) {
    return fail(kUsage, "config error", e.what());
  } catch (const fmvae::ContractViolation& e) {
    return fail(kUsage, "usage error", e.what());
  } catch (const fmvae::UnsupportedDimension& e) {
    return fail(kUsage, "usage error", e.what());
  } catch (const fmvae::FormatError& e) {
    return fail(kData, "format error", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(kData, "file error", e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(kData, "format error", e.what());
  } catch (const fmvae::Error& e) {
    return fail(kNumeric, "numeric error", e.what());
  }
  return kOk;
}
