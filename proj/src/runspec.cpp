#include "specnet/runspec.hpp"

#include <fstream>

#include "specnet/config_json.hpp"
#include "specnet/errors.hpp"

namespace specnet {

using nlohmann::json;
using detail::read_key;
using detail::reject_unknown_keys;

Flip parse_flip(const std::string& name) {
  if (name == "identity") return Flip::identity;
  if (name == "horizontal") return Flip::horizontal;
  if (name == "vertical") return Flip::vertical;
  if (name == "both") return Flip::both;
  throw ConfigError("training.flips: unknown flip '" + name + "'");
}

std::string_view flip_name(Flip f) noexcept {
  switch (f) {
    case Flip::identity: return "identity";
    case Flip::horizontal: return "horizontal";
    case Flip::vertical: return "vertical";
    case Flip::both: return "both";
  }
  return "identity";
}

void RunSpec::set_seed(std::uint64_t seed) {
  synthetic_spec.seed = seed;
  training.seed = seed;
}

void RunSpec::validate() const {
  if (synthetic == !manifest.empty()) {
    throw ConfigError("data: exactly one of data.manifest and data.synthetic must be given");
  }
  if (synthetic && synthetic_spec.per_class < 1) throw ConfigError("data.synthetic.per_class must be >= 1");
  if (preset != "paper" && preset != "desk" && preset != "tiny") {
    throw ConfigError("network.preset: expected paper, desk or tiny, got '" + preset + "'");
  }
  if (output.empty()) throw ConfigError("output: must not be empty");
  training.validate();
  if (bench.repetitions < 1) throw ConfigError("bench.repetitions must be >= 1");
}

NetworkConfig RunSpec::network_for(std::size_t height, std::size_t width, std::size_t channels) const {
  NetworkConfig base;
  if (preset == "paper") {
    base = NetworkConfig::paper(height, width, channels);
  } else if (preset == "tiny") {
    base = NetworkConfig::tiny();
    base.height = height;
    base.width = width;
    base.channels = channels;
  } else {
    base = NetworkConfig::desk(height, width, channels);
  }
  return network_config_from_json(network_overrides, base);
}

json to_json(const TrainingConfig& c) {
  json flips = json::array();
  for (Flip f : c.augmentation.flips) flips.push_back(flip_name(f));
  return {{"learning_rate", c.learning_rate},
          {"max_epochs", c.max_epochs},
          {"batch_size", c.batch_size},
          {"patience", c.patience},
          {"min_delta", c.min_delta},
          {"folds", c.folds},
          {"seed", c.seed},
          {"augment", c.augment},
          {"pca", c.pca},
          {"stratified", c.stratified},
          {"workers", c.workers},
          {"flips", flips},
          {"rotation_angles_deg", c.augmentation.rotation_angles_deg}};
}

namespace {

TrainingConfig training_from_json(const json& j, TrainingConfig c) {
  const std::string where = "training";
  reject_unknown_keys(j,
                      {"learning_rate", "max_epochs", "batch_size", "patience", "min_delta", "folds", "seed",
                       "augment", "pca", "stratified", "workers", "flips", "rotation_angles_deg"},
                      where);
  read_key(j, "learning_rate", c.learning_rate, where);
  read_key(j, "max_epochs", c.max_epochs, where);
  read_key(j, "batch_size", c.batch_size, where);
  read_key(j, "patience", c.patience, where);
  read_key(j, "min_delta", c.min_delta, where);
  read_key(j, "folds", c.folds, where);
  read_key(j, "seed", c.seed, where);
  read_key(j, "augment", c.augment, where);
  read_key(j, "pca", c.pca, where);
  read_key(j, "stratified", c.stratified, where);
  read_key(j, "workers", c.workers, where);
  if (j.contains("flips")) {
    std::vector<std::string> names;
    read_key(j, "flips", names, where);
    c.augmentation.flips.clear();
    for (const auto& n : names) c.augmentation.flips.push_back(parse_flip(n));
  }
  read_key(j, "rotation_angles_deg", c.augmentation.rotation_angles_deg, where);
  return c;
}

SyntheticSpec synthetic_from_json(const json& j, SyntheticSpec s) {
  const std::string where = "data.synthetic";
  reject_unknown_keys(j, {"height", "width", "channels", "per_class", "noise_sd", "bump_width", "seed"}, where);
  read_key(j, "height", s.height, where);
  read_key(j, "width", s.width, where);
  read_key(j, "channels", s.channels, where);
  read_key(j, "per_class", s.per_class, where);
  read_key(j, "noise_sd", s.noise_sd, where);
  read_key(j, "bump_width", s.bump_width, where);
  read_key(j, "seed", s.seed, where);
  return s;
}

}  // namespace

RunSpec parse_run_spec(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown_keys(j, {"version", "seed", "data", "output", "network", "training", "grid", "bench"}, "run spec");
  if (!j.contains("version")) throw ConfigError("version: missing schema version");
  int version = 0;
  read_key(j, "version", version, "run spec");
  if (version != RunSpec::kVersion) {
    throw ConfigError("version: unsupported schema version " + std::to_string(version) + " (expected " +
                      std::to_string(RunSpec::kVersion) + ")");
  }

  RunSpec spec;
  if (j.contains("data")) {
    const json& d = j.at("data");
    reject_unknown_keys(d, {"manifest", "synthetic"}, "data");
    if (d.contains("manifest")) {
      std::string m;
      read_key(d, "manifest", m, "data");
      spec.manifest = std::filesystem::path(m).is_relative() ? base_dir / m : std::filesystem::path(m);
    }
    if (d.contains("synthetic")) {
      spec.synthetic = true;
      spec.synthetic_spec = synthetic_from_json(d.at("synthetic"), spec.synthetic_spec);
    }
  }
  if (j.contains("output")) {
    std::string out;
    read_key(j, "output", out, "run spec");
    spec.output = std::filesystem::path(out).is_relative() ? base_dir / out : std::filesystem::path(out);
  }
  if (j.contains("network")) {
    json n = j.at("network");
    if (!n.is_object()) throw ConfigError("network: expected an object");
    if (n.contains("preset")) {
      read_key(n, "preset", spec.preset, "network");
      n.erase("preset");
    }
    network_config_from_json(n);  // rejects unknown keys early
    spec.network_overrides = n;
  }
  if (j.contains("training")) spec.training = training_from_json(j.at("training"), spec.training);
  if (j.contains("grid")) {
    reject_unknown_keys(j.at("grid"), {"learning_rates"}, "grid");
    read_key(j.at("grid"), "learning_rates", spec.grid_learning_rates, "grid");
  }
  if (j.contains("bench")) {
    reject_unknown_keys(j.at("bench"), {"warmup", "repetitions"}, "bench");
    read_key(j.at("bench"), "warmup", spec.bench.warmup, "bench");
    read_key(j.at("bench"), "repetitions", spec.bench.repetitions, "bench");
  }
  // The top-level seed fans out to every stream; per-section seeds only
  // apply when it is absent.
  if (j.contains("seed")) {
    std::uint64_t seed = 0;
    read_key(j, "seed", seed, "run spec");
    spec.set_seed(seed);
  }
  return spec;
}

RunSpec load_run_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open run spec " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  try {
    return parse_run_spec(j, path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json to_json(const RunSpec& s) {
  json data = json::object();
  if (!s.manifest.empty()) data["manifest"] = s.manifest.string();
  if (s.synthetic) {
    const auto& g = s.synthetic_spec;
    data["synthetic"] = {{"height", g.height},         {"width", g.width},
                         {"channels", g.channels},     {"per_class", g.per_class},
                         {"noise_sd", g.noise_sd},     {"bump_width", g.bump_width},
                         {"seed", g.seed}};
  }
  json network = s.network_overrides;
  network["preset"] = s.preset;
  return {{"version", RunSpec::kVersion},
          {"data", data},
          {"output", s.output.string()},
          {"network", network},
          {"training", to_json(s.training)},
          {"grid", {{"learning_rates", s.grid_learning_rates}}},
          {"bench", {{"warmup", s.bench.warmup}, {"repetitions", s.bench.repetitions}}}};
}

LabeledDataset load_run_data(const RunSpec& spec) {
  spec.validate();
  return spec.synthetic ? generate_synthetic(spec.synthetic_spec) : load_dataset(spec.manifest);
}

}  // namespace specnet
