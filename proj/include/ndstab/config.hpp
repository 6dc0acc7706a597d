#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace ndstab {

/// Initial profile: a named preset ("sin1", "sin-mix", "random-smooth") or
/// values sampled uniformly on [0, pi] (at least two), interpolated linearly
/// onto the simulation grid.
using InitialProfile = std::variant<std::string, std::vector<double>>;

struct SimConfig {
  double alpha = 1.0;
  double c = 2.0;
  double rho = 5.0;
  double tau = 0.2;
  std::vector<double> gammas;  ///< empty: gamma_k = rho + k
  int grid_m = 400;
  double dt = 1e-4;
  double t_final = 10.0;
  InitialProfile y0 = std::string("sin-mix");
  std::uint64_t seed = 42;

  /// Throws Error(Config) on a violated invariant.
  void validate() const;

  [[nodiscard]] nlohmann::json to_json() const;
  /// Unknown keys and mistyped values are rejected; missing keys keep defaults.
  [[nodiscard]] static SimConfig from_json(const nlohmann::json& j);
  [[nodiscard]] static SimConfig parse(std::string_view text);
  [[nodiscard]] static SimConfig load(const std::string& path);
};

/// The exact key set of the config file.
[[nodiscard]] const std::vector<std::string>& config_keys();

/// Applies one override. `value` is parsed as JSON; if that fails it is taken
/// as a bare string. Throws Error(Config) for unknown keys or bad types.
void apply_override(SimConfig& cfg, std::string_view key, std::string_view value);

}  // namespace ndstab
