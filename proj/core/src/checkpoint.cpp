#include "fmvae/checkpoint.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "fmvae/errors.hpp"

namespace fmvae {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'F', 'M', 'V', 'A', 'E', 'C', 'K', 'P'};

json config_json(const Architecture& arch, const TrainConfig& c) {
  json j;
  j["architecture"] = {{"data_dim", arch.data_dim},
                       {"latent_dim", arch.latent_dim},
                       {"encoder_hidden", arch.encoder_hidden},
                       {"decoder_hidden", arch.decoder_hidden},
                       {"prior_encoder_hidden", arch.prior_encoder_hidden},
                       {"prior_decoder_hidden", arch.prior_decoder_hidden},
                       {"likelihood", to_string(arch.likelihood)}};
  j["train"] = {{"kappa", c.kappa},
                {"nu", c.nu},
                {"tau", c.tau},
                {"k_importance", c.k_importance},
                {"eta", c.eta},
                {"alpha0", c.alpha0},
                {"beta_init", c.beta_init},
                {"c_hat_smoothing", c.c_hat_smoothing},
                {"learning_rate", c.learning_rate},
                {"batch_size", c.batch_size},
                {"max_steps", c.max_steps},
                {"jacobian_step_train", c.jacobian_step_train},
                {"seed", c.seed},
                {"mixup_enabled", c.mixup_enabled},
                {"fixed_c2", c.fixed_c2 ? json(*c.fixed_c2) : json(nullptr)}};
  return j;
}

json adam_json(const AdamState& a) {
  return {{"step_count", a.step_count},
          {"learning_rate", a.learning_rate},
          {"beta1", a.beta1},
          {"beta2", a.beta2},
          {"epsilon", a.epsilon}};
}

void adam_from_json(const json& j, AdamState& a) {
  a.step_count = j.at("step_count").get<std::uint64_t>();
  a.learning_rate = j.at("learning_rate").get<double>();
  a.beta1 = j.at("beta1").get<double>();
  a.beta2 = j.at("beta2").get<double>();
  a.epsilon = j.at("epsilon").get<double>();
}

void write_moments(std::ostream& os, const AdamState& a) {
  io::write<std::uint32_t>(os, static_cast<std::uint32_t>(a.first_moment.size()));
  for (std::size_t i = 0; i < a.first_moment.size(); ++i) {
    io::write<std::uint64_t>(os, a.first_moment[i].size());
    io::write_f64s(os, a.first_moment[i]);
    io::write_f64s(os, a.second_moment[i]);
  }
}

void read_moments(std::istream& is, AdamState& a, const ParamList& params) {
  const auto at = static_cast<long long>(is.tellg());
  const auto count = io::read<std::uint32_t>(is, "optimizer moment count");
  if (count != params.size()) throw FormatError("optimizer state does not match the model's parameters", at);
  a.first_moment.clear();
  a.second_moment.clear();
  for (std::size_t i = 0; i < count; ++i) {
    const auto n = io::read<std::uint64_t>(is, "moment length");
    if (n != params[i].tensor.size()) throw FormatError("moment length mismatch for " + params[i].name);
    a.first_moment.push_back(io::read_f64s(is, n, "first moment"));
    a.second_moment.push_back(io::read_f64s(is, n, "second moment"));
  }
}

Architecture arch_from_json(const json& j) {
  Architecture a;
  a.data_dim = j.at("data_dim").get<std::size_t>();
  a.latent_dim = j.at("latent_dim").get<std::size_t>();
  a.encoder_hidden = j.at("encoder_hidden").get<std::vector<std::size_t>>();
  a.decoder_hidden = j.at("decoder_hidden").get<std::vector<std::size_t>>();
  a.prior_encoder_hidden = j.at("prior_encoder_hidden").get<std::vector<std::size_t>>();
  a.prior_decoder_hidden = j.at("prior_decoder_hidden").get<std::vector<std::size_t>>();
  a.likelihood = likelihood_from_string(j.at("likelihood").get<std::string>());
  return a;
}

TrainConfig train_from_json(const json& j) {
  TrainConfig c;
  c.kappa = j.at("kappa").get<double>();
  c.nu = j.at("nu").get<double>();
  c.tau = j.at("tau").get<double>();
  c.k_importance = j.at("k_importance").get<std::size_t>();
  c.eta = j.at("eta").get<double>();
  c.alpha0 = j.at("alpha0").get<double>();
  c.beta_init = j.at("beta_init").get<double>();
  c.c_hat_smoothing = j.at("c_hat_smoothing").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.max_steps = j.at("max_steps").get<std::size_t>();
  c.jacobian_step_train = j.at("jacobian_step_train").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.mixup_enabled = j.at("mixup_enabled").get<bool>();
  if (!j.at("fixed_c2").is_null()) c.fixed_c2 = j.at("fixed_c2").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const FmvaeModel& model, const TrainConfig& config,
                     const TrainState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  io::write<std::uint32_t>(out, kCheckpointVersion);
  io::write_string(out, config_json(model.architecture(), config).dump());

  const json st = {{"step", state.step},
                   {"beta", state.beta},
                   {"c_hat", state.c_hat},
                   {"c_hat_initialised", state.c_hat_initialised},
                   {"initial_phase", state.initial_phase},
                   {"vae_optimizer", adam_json(state.vae_optimizer)},
                   {"prior_optimizer", adam_json(state.prior_optimizer)}};
  io::write_string(out, st.dump());
  io::write_string(out, state.rng.serialize());

  const ParamList params = model.all_parameters();
  io::write<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    io::write_string(out, p.name);
    const Shape& shape = p.tensor.shape();
    io::write<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) io::write<std::uint64_t>(out, d);
    io::write_f64s(out, std::vector<double>(p.tensor.values().begin(), p.tensor.values().end()));
  }
  write_moments(out, state.vae_optimizer);
  write_moments(out, state.prior_optimizer);
  if (!out) throw FormatError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + 8, kMagic)) {
    throw FormatError("not an fmvae checkpoint: " + path.string(), 0);
  }
  const auto version = io::read<std::uint32_t>(in, "checkpoint version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 8);
  }

  Checkpoint ck;
  Architecture arch;
  try {
    const json cfg = json::parse(io::read_string(in, "config text"));
    arch = arch_from_json(cfg.at("architecture"));
    ck.config = train_from_json(cfg.at("train"));
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad checkpoint config: ") + e.what(), 12);
  }

  Rng init_rng(0);
  ck.model = FmvaeModel::make(arch, init_rng);
  const json st = [&] {
    try {
      return json::parse(io::read_string(in, "state text"));
    } catch (const json::exception& e) {
      throw FormatError(std::string("bad checkpoint state: ") + e.what());
    }
  }();
  try {
    ck.state.step = st.at("step").get<std::uint64_t>();
    ck.state.beta = st.at("beta").get<double>();
    ck.state.c_hat = st.at("c_hat").get<double>();
    ck.state.c_hat_initialised = st.at("c_hat_initialised").get<bool>();
    ck.state.initial_phase = st.at("initial_phase").get<bool>();
    adam_from_json(st.at("vae_optimizer"), ck.state.vae_optimizer);
    adam_from_json(st.at("prior_optimizer"), ck.state.prior_optimizer);
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad checkpoint state: ") + e.what());
  }
  ck.state.rng = Rng::deserialize(io::read_string(in, "generator state"));

  ParamList params = ck.model.all_parameters();
  const auto count_at = static_cast<long long>(in.tellg());
  const auto count = io::read<std::uint32_t>(in, "tensor count");
  if (count != params.size()) throw FormatError("checkpoint holds " + std::to_string(count) + " tensors, model has " +
                                                    std::to_string(params.size()),
                                                count_at);
  for (auto& p : params) {
    const auto name_at = static_cast<long long>(in.tellg());
    const std::string name = io::read_string(in, "tensor name", 1024);
    if (name != p.name) throw FormatError("expected tensor " + p.name + ", found " + name, name_at);
    const auto rank = io::read<std::uint32_t>(in, "tensor rank");
    Shape shape(rank);
    for (auto& d : shape) d = io::read<std::uint64_t>(in, "tensor dimension");
    if (shape != p.tensor.shape()) throw FormatError("shape mismatch for " + name, name_at);
    const auto values = io::read_f64s(in, shape_size(shape), "tensor values");
    auto dst = p.tensor.mutable_values();
    std::copy(values.begin(), values.end(), dst.begin());
  }
  read_moments(in, ck.state.vae_optimizer, ck.model.vae_parameters());
  read_moments(in, ck.state.prior_optimizer, ck.model.prior_parameters());
  return ck;
}

}  // namespace fmvae
