#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fmvae/checkpoint.hpp"
#include "fmvae/errors.hpp"
#include "fmvae/riemann.hpp"
#include "fmvae/trainer.hpp"
#include "fmvae/vhp.hpp"
#include "run_config.hpp"

namespace fmvae::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Dataset load_data_file(const fs::path& path) {
  return path.extension() == ".csv" ? csv_load(path) : load_dataset(path);
}

Eigen::VectorXd parse_point(const std::string& text, std::size_t dim) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ContractViolation("latent point '" + text + "' is not a comma-separated list of numbers");
    }
  }
  if (v.size() != dim) {
    throw ContractViolation("latent point '" + text + "' has " + std::to_string(v.size()) + " coordinates, the model has " +
                            std::to_string(dim));
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Tensor encode_means(const FmvaeModel& model, const Dataset& data) {
  NoGradGuard guard;
  std::vector<double> out;
  out.reserve(data.rows * model.architecture().latent_dim);
  for (std::size_t start = 0; start < data.rows; start += 1024) {
    const Dataset part = subset(data, start, std::min(data.rows, start + 1024));
    const auto m = model.encode(part.all()).mean.values();
    out.insert(out.end(), m.begin(), m.end());
  }
  return Tensor::from({data.rows, model.architecture().latent_dim}, std::move(out));
}

Eigen::VectorXd row_of(const Tensor& t, std::size_t r) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(t.cols()));
  for (std::size_t c = 0; c < t.cols(); ++c) v(static_cast<Eigen::Index>(c)) = t(r, c);
  return v;
}

void check_compatible(const FmvaeModel& model, const Dataset& data) {
  if (data.cols != model.architecture().data_dim) {
    throw ContractViolation("dataset has " + std::to_string(data.cols) + " columns, the model expects " +
                            std::to_string(model.architecture().data_dim));
  }
}

}  // namespace

void cmd_gen_data(const GlobalOptions& global, const GenDataOptions& opts) {
  if (opts.kind != "pendulum") throw ContractViolation("gen-data only generates the 'pendulum' dataset");
  if (opts.count == 0) throw ContractViolation("--count must be positive");
  if (opts.format != "bin" && opts.format != "csv") throw ContractViolation("--format must be bin or csv");
  PendulumSpec spec;
  spec.count = opts.count;
  spec.noise_std = opts.noise_std;
  spec.seed = global.seed.value_or(1);
  const Dataset data = pendulum_dataset(spec);
  fs::create_directories(global.out);
  const fs::path file = global.out / (opts.format == "csv" ? "pendulum.csv" : "pendulum.bin");
  if (opts.format == "csv") {
    csv_save(data, file);
    std::ofstream angles(global.out / "pendulum_angles.csv");
    angles << "angle\n";
    char buf[32];
    for (double a : data.metadata) {
      std::snprintf(buf, sizeof buf, "%.17g\n", a);
      angles << buf;
    }
  } else {
    save_dataset(data, file);
  }
  write_json(global.out / "gen_data_config.json", {{"kind", opts.kind},
                                                   {"count", opts.count},
                                                   {"noise_std", opts.noise_std},
                                                   {"format", opts.format},
                                                   {"seed", spec.seed}});
  std::printf("wrote %zu rows to %s\n", data.rows, file.string().c_str());
}

void cmd_train(const GlobalOptions& global, const TrainOptions& opts) {
  RunConfig config = global.config ? load_run_config(*global.config) : preset(opts.preset.value_or("pendulum"));
  if (global.config && opts.preset) throw ConfigError("--preset and --config are mutually exclusive");
  if (global.seed) config.train.seed = *global.seed;
  if (opts.eta) config.train.eta = *opts.eta;
  if (opts.no_mixup) config.train.mixup_enabled = false;
  if (opts.fixed_c2) config.train.fixed_c2 = *opts.fixed_c2;
  if (opts.steps) config.train.max_steps = *opts.steps;
  if (opts.learning_rate) config.train.learning_rate = *opts.learning_rate;
  if (opts.batch_size) config.train.batch_size = *opts.batch_size;
  if (opts.data) {
    config.dataset.kind = opts.data->extension() == ".csv" ? "csv" : "file";
    config.dataset.path = opts.data->string();
  }
  config.train.validate();

  fs::create_directories(global.out);
  if (global.config) fs::copy_file(*global.config, global.out / "config.input.json", fs::copy_options::overwrite_existing);
  write_json(global.out / "config.json", to_json(config));

  const Dataset data = config.dataset.load(config.train.seed);
  if (data.rows == 0) throw FormatError("training dataset is empty");
  config.architecture.data_dim = data.cols;
  Rng init(config.train.seed);
  FmvaeModel model = FmvaeModel::make(config.architecture, init);
  TrainState state = make_train_state(model, config.train);

  std::ofstream log(global.out / "train_log.csv");
  if (!log) throw FormatError("cannot write " + (global.out / "train_log.csv").string());
  TrainLog::write_header(log);
  const std::size_t every = std::max<std::size_t>(opts.log_every, 1);
  fit(model, data, config.train, state, [&](const LogRow& row) {
    TrainLog::write_row(log, row);
    if (row.step % every == 0 || row.step == config.train.max_steps) {
      std::fprintf(stderr, "step %llu beta %.4g c_hat %.5g total %.5g\n", static_cast<unsigned long long>(row.step),
                   row.beta, row.c_hat, row.loss.total);
    }
  });
  save_checkpoint(global.out / "model.ckpt", model, config.train, state);
  std::printf("trained %llu steps; checkpoint %s\n", static_cast<unsigned long long>(state.step),
              (global.out / "model.ckpt").string().c_str());
}

void cmd_analyze(const GlobalOptions& global, const AnalyzeOptions& opts) {
  const Checkpoint ck = load_checkpoint(opts.checkpoint);
  const FmvaeModel& model = ck.model;
  const std::size_t dim = model.architecture().latent_dim;
  const DecodeFn decoder = decoder_of(model);
  Rng rng(global.seed.value_or(1));
  const std::uint64_t prior_seed = rng.next();
  const std::uint64_t graph_seed = rng.next();

  fs::create_directories(global.out);
  write_json(global.out / "analyze_config.json",
             {{"checkpoint", opts.checkpoint.string()},
              {"data", opts.data ? opts.data->string() : ""},
              {"samples", opts.samples},
              {"pairs", opts.pairs},
              {"graph_nodes", opts.graph_nodes},
              {"graph_neighbours", opts.graph_neighbours},
              {"path_steps", opts.path_steps},
              {"grid", opts.grid},
              {"distance_from", opts.distance_from},
              {"seed", global.seed.value_or(1)}});

  json report;
  Tensor points;  // latent points that define the analysis region
  if (opts.samples > 0) {
    points = sample_prior(model, opts.samples, prior_seed).z;
    report["prior"] = json::parse(metric_report(decoder, points).to_json());
  }
  if (opts.data) {
    const Dataset data = load_data_file(*opts.data);
    check_compatible(model, data);
    points = encode_means(model, data);
    report["encoded"] = json::parse(metric_report(decoder, points).to_json());
  }
  if ((opts.pairs > 0 || opts.grid > 0) && (!points.defined() || points.rows() < 2)) {
    throw ContractViolation("--pairs and --grid need prior samples or a dataset to span the latent region");
  }

  if (opts.pairs > 0) {
    std::vector<LatentPair> pairs;
    while (pairs.size() < opts.pairs) {
      const std::size_t a = rng.next() % points.rows();
      const std::size_t b = rng.next() % points.rows();
      if (a != b) pairs.emplace_back(row_of(points, a), row_of(points, b));
    }
    const BoundingBox box = BoundingBox::around(points);
    const GeodesicGraph graph = build_geodesic_graph(decoder, box, opts.graph_nodes, opts.graph_neighbours, graph_seed);
    const RatioTable ratios = ratio_table(decoder, graph, pairs, opts.path_steps);
    const Smoothness smooth = smoothness(decoder, pairs, opts.path_steps);
    report["ratios"] = {{"observation", ratios.observation},
                        {"latent", ratios.latent},
                        {"observation_mean", ratios.observation_stats.mean},
                        {"observation_std", ratios.observation_stats.std},
                        {"latent_mean", ratios.latent_stats.mean},
                        {"latent_std", ratios.latent_stats.std}};
    report["smoothness"] = {{"mean", smooth.mean}, {"std", smooth.std}, {"overall_mean", smooth.overall_mean}};
  }

  if (opts.grid > 0) {
    if (dim != 2) {
      throw UnsupportedDimension("grid fields need a 2-dimensional latent space, the model has " + std::to_string(dim));
    }
    std::vector<Eigen::Vector2d> centres;
    for (const auto& s : opts.distance_from) centres.emplace_back(parse_point(s, 2));
    const GridFields fields = grid_fields(decoder, BoundingBox::around(points), opts.grid, centres);
    write_field_csv(global.out / "grid_mf.csv", fields.points, fields.mf);
    std::vector<double> vx;
    std::vector<double> vy;
    for (const auto& v : fields.vector_field) {
      vx.push_back(v[0]);
      vy.push_back(v[1]);
    }
    write_field_csv(global.out / "grid_vector_z1.csv", fields.points, vx);
    write_field_csv(global.out / "grid_vector_z2.csv", fields.points, vy);
    for (std::size_t i = 0; i < fields.distance.size(); ++i) {
      write_field_csv(global.out / ("grid_distance_" + std::to_string(i) + ".csv"), fields.points, fields.distance[i]);
    }
  }
  write_json(global.out / "report.json", report);
  std::printf("wrote %s\n", (global.out / "report.json").string().c_str());
}

void cmd_interpolate(const GlobalOptions& global, const InterpolateOptions& opts) {
  if (opts.steps == 0) throw ContractViolation("--steps must be positive");
  const Checkpoint ck = load_checkpoint(opts.checkpoint);
  const FmvaeModel& model = ck.model;
  const std::size_t dim = model.architecture().latent_dim;

  std::optional<Tensor> encoded;
  auto endpoint = [&](const std::optional<std::string>& point, const std::optional<std::size_t>& index,
                      const char* name) -> Eigen::VectorXd {
    if (point.has_value() == index.has_value()) {
      throw ContractViolation(std::string("give exactly one of --") + name + " and --" + name + "-index");
    }
    if (point) return parse_point(*point, dim);
    if (!opts.data) throw ContractViolation(std::string("--") + name + "-index needs --data");
    if (!encoded) {
      const Dataset data = load_data_file(*opts.data);
      check_compatible(model, data);
      encoded = encode_means(model, data);
    }
    if (*index >= encoded->rows()) {
      throw ContractViolation("dataset index " + std::to_string(*index) + " out of range (" +
                              std::to_string(encoded->rows()) + " rows)");
    }
    return row_of(*encoded, *index);
  };
  const Eigen::VectorXd from = endpoint(opts.from, opts.from_index, "from");
  const Eigen::VectorXd to = endpoint(opts.to, opts.to_index, "to");

  const LatentPath path = straight_line(from, to, opts.steps);
  std::vector<double> zs;
  for (const auto& w : path.waypoints) zs.insert(zs.end(), w.data(), w.data() + w.size());
  const Tensor z = Tensor::from({path.waypoints.size(), dim}, std::move(zs));
  Tensor x;
  {
    NoGradGuard guard;
    x = decoder_of(model)(z);
  }

  fs::create_directories(global.out);
  const fs::path file = global.out / "interpolation.csv";
  std::ofstream out(file);
  if (!out) throw FormatError("cannot write " + file.string());
  out << 't';
  for (std::size_t d = 0; d < dim; ++d) out << ",z" << d + 1;
  for (std::size_t c = 0; c < x.cols(); ++c) out << ",x" << c;
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < z.rows(); ++r) {
    std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(r) / static_cast<double>(opts.steps));
    out << buf;
    for (std::size_t d = 0; d < dim; ++d) {
      std::snprintf(buf, sizeof buf, ",%.17g", z(r, d));
      out << buf;
    }
    for (std::size_t c = 0; c < x.cols(); ++c) {
      std::snprintf(buf, sizeof buf, ",%.17g", x(r, c));
      out << buf;
    }
    out << '\n';
  }
  std::printf("wrote %zu rows to %s\n", z.rows(), file.string().c_str());
}

}  // namespace fmvae::cli
