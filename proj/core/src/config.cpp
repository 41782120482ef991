#include "epimem/config.hpp"

#include "epimem/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace epimem {

using nlohmann::json;

void ExperimentConfig::validate() const {
  if (slots == 0 || latent_dim == 0 || episode_window == 0 || leaf_slots == 0) {
    throw Error(ErrorCode::kInvalidArgument, "all counts in the experiment config must be positive");
  }
  encoder().validate();
  noise.validate();
  tolerances.validate();
  addressing_or(AddressingMode::Variant::kPseudoinverseReference).validate();
}

EncoderConfig ExperimentConfig::encoder() const {
  return EncoderConfig{hash_dim, latent_dim, projection_seed, true};
}

AddressingMode ExperimentConfig::addressing_or(AddressingMode::Variant fallback) const {
  return AddressingMode{addressing.value_or(fallback), gaussian_alpha};
}

std::string to_json(const ExperimentConfig& c) {
  json j = {
      {"K", c.slots},
      {"C", c.latent_dim},
      {"episode_window", c.episode_window},
      {"leaf_slots", c.leaf_slots},
      {"hash_dim", c.hash_dim},
      {"projection_seed", c.projection_seed},
      {"addressing", c.addressing ? json(to_string(*c.addressing)) : json(nullptr)},
      {"gaussian_alpha", c.gaussian_alpha},
      {"noise", {{"sigma_xi", c.noise.sigma_xi}, {"sigma_w", c.noise.sigma_w}, {"seed", c.noise.seed}}},
      {"scope_threshold", c.scope_threshold ? json(*c.scope_threshold) : json(nullptr)},
      {"seed", c.seed},
      {"tolerances",
       {{"rcond", c.tolerances.rcond},
        {"ridge_epsilon", c.tolerances.ridge_epsilon},
        {"match_tol", c.tolerances.match_tol}}},
  };
  return j.dump(2);
}

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  ExperimentConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw Error(ErrorCode::kFormat, "config must be a JSON object");
    read_field(j, "K", c.slots);
    read_field(j, "C", c.latent_dim);
    read_field(j, "episode_window", c.episode_window);
    read_field(j, "leaf_slots", c.leaf_slots);
    read_field(j, "hash_dim", c.hash_dim);
    read_field(j, "projection_seed", c.projection_seed);
    if (j.contains("addressing") && !j["addressing"].is_null()) {
      c.addressing = parse_addressing(j["addressing"].get<std::string>());
    }
    read_field(j, "gaussian_alpha", c.gaussian_alpha);
    if (j.contains("noise")) {
      const auto& n = j["noise"];
      read_field(n, "sigma_xi", c.noise.sigma_xi);
      read_field(n, "sigma_w", c.noise.sigma_w);
      read_field(n, "seed", c.noise.seed);
    }
    if (j.contains("scope_threshold") && !j["scope_threshold"].is_null()) {
      c.scope_threshold = j["scope_threshold"].get<double>();
    }
    read_field(j, "seed", c.seed);
    if (j.contains("tolerances")) {
      const auto& t = j["tolerances"];
      read_field(t, "rcond", c.tolerances.rcond);
      read_field(t, "ridge_epsilon", c.tolerances.ridge_epsilon);
      read_field(t, "match_tol", c.tolerances.match_tol);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

}  // namespace epimem
