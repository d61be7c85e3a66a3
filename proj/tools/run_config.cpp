#include "run_config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "fmvae/errors.hpp"

namespace fmvae::cli {

using nlohmann::json;

namespace {

template <class T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

using Setter = std::function<void(const json&, const std::string&)>;

// Applies each key of `obj` through `setters`; anything else is rejected.
void apply(const json& obj, const std::string& prefix, const std::map<std::string, Setter>& setters) {
  if (!obj.is_object()) throw ConfigError("config key '" + prefix + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + full + "'");
    it->second(value, full);
  }
}

template <class T>
Setter set(T& field) {
  return [&field](const json& v, const std::string& key) { field = get_as<T>(v, key); };
}

Setter set_optional(std::optional<double>& field) {
  return [&field](const json& v, const std::string& key) {
    field = v.is_null() ? std::nullopt : std::optional<double>(get_as<double>(v, key));
  };
}

}  // namespace

Dataset DatasetSource::load(std::uint64_t seed) const {
  if (kind == "pendulum") {
    PendulumSpec spec;
    spec.count = count;
    spec.noise_std = noise_std;
    spec.seed = seed;
    return pendulum_dataset(spec);
  }
  if (path.empty()) throw ConfigError("config key 'dataset.path' is required for dataset kind " + kind);
  if (kind == "mnist") return mnist_load(path, labels, binarise_threshold);
  if (kind == "csv") return csv_load(path, delimiter);
  if (kind == "file") return load_dataset(path);
  throw ConfigError("config key 'dataset.kind': unknown dataset kind '" + kind + "'");
}

RunConfig preset(const std::string& name) {
  RunConfig c;
  c.preset = name;
  if (name == "pendulum") {
    c.architecture.encoder_hidden = c.architecture.decoder_hidden = {256, 256};
    c.architecture.prior_encoder_hidden = c.architecture.prior_decoder_hidden = {256, 256};
    c.train.kappa = 0.025;
    c.train.k_importance = 16;
    c.train.eta = 1000.0;
  } else if (name == "mnist" || name == "human") {
    const std::vector<std::size_t> four{256, 256, 256, 256};
    c.architecture.encoder_hidden = c.architecture.decoder_hidden = four;
    c.architecture.prior_encoder_hidden = c.architecture.prior_decoder_hidden = four;
    if (name == "mnist") {
      c.architecture.likelihood = Likelihood::bernoulli;
      c.dataset.kind = "mnist";
      c.dataset.path = "train-images-idx3-ubyte";
      c.dataset.labels = "train-labels-idx1-ubyte";
      c.train.kappa = 0.245;
      c.train.k_importance = 16;
      c.train.eta = 8000.0;
    } else {
      c.dataset.kind = "csv";
      c.train.kappa = 0.03;
      c.train.k_importance = 32;
      c.train.eta = 8000.0;
    }
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected pendulum, mnist or human)");
  }
  c.architecture.latent_dim = 2;
  c.train.nu = 1.0;
  c.train.learning_rate = 1e-4;
  return c;
}

RunConfig parse_run_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c = preset(doc.contains("preset") ? get_as<std::string>(doc["preset"], "preset") : "pendulum");

  DatasetSource& d = c.dataset;
  Architecture& a = c.architecture;
  TrainConfig& t = c.train;
  const std::map<std::string, Setter> dataset_keys{
      {"kind", set(d.kind)},
      {"count", set(d.count)},
      {"noise_std", set(d.noise_std)},
      {"path", set(d.path)},
      {"labels", set(d.labels)},
      {"binarise_threshold", set_optional(d.binarise_threshold)},
      {"delimiter",
       [&d](const json& v, const std::string& key) {
         const auto s = get_as<std::string>(v, key);
         if (s.size() != 1) throw ConfigError("config key '" + key + "' must be a single character");
         d.delimiter = s[0];
       }},
  };
  const std::map<std::string, Setter> architecture_keys{
      {"latent_dim", set(a.latent_dim)},
      {"encoder_hidden", set(a.encoder_hidden)},
      {"decoder_hidden", set(a.decoder_hidden)},
      {"prior_encoder_hidden", set(a.prior_encoder_hidden)},
      {"prior_decoder_hidden", set(a.prior_decoder_hidden)},
      {"likelihood",
       [&a](const json& v, const std::string& key) { a.likelihood = likelihood_from_string(get_as<std::string>(v, key)); }},
  };
  const std::map<std::string, Setter> train_keys{
      {"kappa", set(t.kappa)},
      {"nu", set(t.nu)},
      {"tau", set(t.tau)},
      {"k_importance", set(t.k_importance)},
      {"eta", set(t.eta)},
      {"alpha0", set(t.alpha0)},
      {"beta_init", set(t.beta_init)},
      {"c_hat_smoothing", set(t.c_hat_smoothing)},
      {"learning_rate", set(t.learning_rate)},
      {"batch_size", set(t.batch_size)},
      {"max_steps", set(t.max_steps)},
      {"jacobian_step_train", set(t.jacobian_step_train)},
      {"seed", set(t.seed)},
      {"mixup_enabled", set(t.mixup_enabled)},
      {"fixed_c2", set_optional(t.fixed_c2)},
  };
  apply(doc, "",
        {
            {"preset", [](const json&, const std::string&) {}},
            {"dataset", [&](const json& v, const std::string& key) { apply(v, key, dataset_keys); }},
            {"architecture", [&](const json& v, const std::string& key) { apply(v, key, architecture_keys); }},
            {"train", [&](const json& v, const std::string& key) { apply(v, key, train_keys); }},
        });
  if (a.latent_dim == 0) throw ConfigError("config key 'architecture.latent_dim' must be positive");
  t.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(doc);
}

json to_json(const RunConfig& c) {
  const DatasetSource& d = c.dataset;
  const Architecture& a = c.architecture;
  const TrainConfig& t = c.train;
  json dataset{{"kind", d.kind}, {"count", d.count}, {"noise_std", d.noise_std}, {"path", d.path},
               {"labels", d.labels}, {"delimiter", std::string(1, d.delimiter)}};
  dataset["binarise_threshold"] = d.binarise_threshold ? json(*d.binarise_threshold) : json(nullptr);
  json train{{"kappa", t.kappa},
             {"nu", t.nu},
             {"tau", t.tau},
             {"k_importance", t.k_importance},
             {"eta", t.eta},
             {"alpha0", t.alpha0},
             {"beta_init", t.beta_init},
             {"c_hat_smoothing", t.c_hat_smoothing},
             {"learning_rate", t.learning_rate},
             {"batch_size", t.batch_size},
             {"max_steps", t.max_steps},
             {"jacobian_step_train", t.jacobian_step_train},
             {"seed", t.seed},
             {"mixup_enabled", t.mixup_enabled}};
  train["fixed_c2"] = t.fixed_c2 ? json(*t.fixed_c2) : json(nullptr);
  return {{"preset", c.preset},
          {"dataset", dataset},
          {"architecture",
           {{"latent_dim", a.latent_dim},
            {"encoder_hidden", a.encoder_hidden},
            {"decoder_hidden", a.decoder_hidden},
            {"prior_encoder_hidden", a.prior_encoder_hidden},
            {"prior_decoder_hidden", a.prior_decoder_hidden},
            {"likelihood", to_string(a.likelihood)}}},
          {"train", train}};
}

}  // namespace fmvae::cli
