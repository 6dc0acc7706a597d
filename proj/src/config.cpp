#include "ndstab/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ndstab/error.hpp"

namespace ndstab {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::Config, msg); }

double get_real(const json& v, const std::string& key) {
  if (!v.is_number()) config_error("config key '" + key + "' must be a number");
  return v.get<double>();
}

void set_key(SimConfig& cfg, const std::string& key, const json& v) {
  if (key == "alpha") {
    cfg.alpha = get_real(v, key);
  } else if (key == "c") {
    cfg.c = get_real(v, key);
  } else if (key == "rho") {
    cfg.rho = get_real(v, key);
  } else if (key == "tau") {
    cfg.tau = get_real(v, key);
  } else if (key == "dt") {
    cfg.dt = get_real(v, key);
  } else if (key == "t_final") {
    cfg.t_final = get_real(v, key);
  } else if (key == "grid_m") {
    if (!v.is_number_integer()) config_error("config key 'grid_m' must be an integer");
    cfg.grid_m = v.get<int>();
  } else if (key == "seed") {
    if (!v.is_number_unsigned()) config_error("config key 'seed' must be a nonnegative integer");
    cfg.seed = v.get<std::uint64_t>();
  } else if (key == "gammas") {
    if (!v.is_array()) config_error("config key 'gammas' must be an array of numbers");
    std::vector<double> g;
    for (const auto& e : v) g.push_back(get_real(e, "gammas"));
    cfg.gammas = std::move(g);
  } else if (key == "y0") {
    if (v.is_string()) {
      cfg.y0 = v.get<std::string>();
    } else if (v.is_array()) {
      std::vector<double> s;
      for (const auto& e : v) s.push_back(get_real(e, "y0"));
      cfg.y0 = std::move(s);
    } else {
      config_error("config key 'y0' must be a preset name or an array of samples");
    }
  } else {
    config_error("unknown config key '" + key + "'");
  }
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {"alpha", "c",      "rho",     "tau", "gammas",
                                                "grid_m", "dt", "t_final", "y0",  "seed"};
  return keys;
}

void SimConfig::validate() const {
  auto finite = [](double x) { return std::isfinite(x); };
  if (!finite(alpha) || !(alpha > 0.0)) config_error("alpha must be positive");
  if (!finite(c)) config_error("c must be finite");
  if (!finite(rho) || !(rho > 0.0)) config_error("rho must be positive");
  if (!finite(tau) || !(tau >= 0.0)) config_error("tau must be >= 0");
  if (!finite(dt) || !(dt > 0.0)) config_error("dt must be positive");
  if (!finite(t_final) || !(t_final > tau)) config_error("t_final must exceed tau");
  if (grid_m < 50) config_error("grid_m must be >= 50");
  if (tau > 0.0) {
    const double n = tau / dt;
    if (n < 1.0 - 1e-9 || std::abs(n - std::round(n)) > 1e-9 * n) {
      config_error("tau must be 0 or a positive multiple of dt");
    }
  }
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    if (!finite(gammas[k]) || !(gammas[k] > 0.0)) config_error("gammas must be positive");
    if (k > 0 && !(gammas[k] > gammas[k - 1])) config_error("gammas must be strictly increasing");
  }
  if (const auto* name = std::get_if<std::string>(&y0)) {
    if (*name != "sin1" && *name != "sin-mix" && *name != "random-smooth") {
      config_error("unknown y0 preset '" + *name + "' (sin1, sin-mix, random-smooth)");
    }
  } else {
    const auto& s = std::get<std::vector<double>>(y0);
    if (s.size() < 2) config_error("y0 samples need at least two values");
    for (double v : s) {
      if (!finite(v)) config_error("y0 samples must be finite");
    }
  }
}

nlohmann::json SimConfig::to_json() const {
  json j;
  j["alpha"] = alpha;
  j["c"] = c;
  j["rho"] = rho;
  j["tau"] = tau;
  j["gammas"] = gammas;
  j["grid_m"] = grid_m;
  j["dt"] = dt;
  j["t_final"] = t_final;
  std::visit([&](const auto& v) { j["y0"] = v; }, y0);
  j["seed"] = seed;
  return j;
}

SimConfig SimConfig::from_json(const json& j) {
  if (!j.is_object()) config_error("config must be a JSON object");
  SimConfig cfg;
  for (const auto& [key, value] : j.items()) set_key(cfg, key, value);
  return cfg;
}

SimConfig SimConfig::parse(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(std::string("malformed config JSON: ") + e.what());
  }
  return from_json(j);
}

SimConfig SimConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void apply_override(SimConfig& cfg, std::string_view key, std::string_view value) {
  json v = json::parse(value, nullptr, false);
  if (v.is_discarded()) v = std::string(value);
  set_key(cfg, std::string(key), v);
}

}  // namespace ndstab
