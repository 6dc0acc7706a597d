// Command-line front end. Links only the C API.
//
// Exit codes: 0 ok, 1 config or usage, 2 rank condition, 3 blow-up,
// 4 verification failure, 5 numerical failure.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ndstab/ndstab.h"

namespace {

using json = nlohmann::json;

struct ConfigDeleter {
  void operator()(ndstab_config* c) const { ndstab_config_free(c); }
};
struct TrajectoryDeleter {
  void operator()(ndstab_trajectory* t) const { ndstab_trajectory_free(t); }
};
using ConfigPtr = std::unique_ptr<ndstab_config, ConfigDeleter>;
using TrajectoryPtr = std::unique_ptr<ndstab_trajectory, TrajectoryDeleter>;

struct Owned {
  char* s = nullptr;
  ~Owned() { ndstab_string_free(s); }
};

int exit_code(ndstab_status s) {
  switch (s) {
    case NDSTAB_OK: return 0;
    case NDSTAB_ERR_CONFIG:
    case NDSTAB_ERR_ARGUMENT:
    case NDSTAB_ERR_IO: return 1;
    case NDSTAB_ERR_RANK: return 2;
    case NDSTAB_ERR_BLOWUP: return 3;
    case NDSTAB_ERR_VERIFICATION: return 4;
    default: return 5;
  }
}

int report_error(ndstab_status s) {
  std::cerr << "error: " << ndstab_last_error() << '\n';
  return exit_code(s);
}

struct CommonOptions {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o, const std::string& out_help) {
  cmd->add_option("--config", o.config, "JSON config file");
  cmd->add_option("--set", o.sets, "Override a config key (key=value, repeatable)")->allow_extra_args(false);
  cmd->add_option("--out", o.out, out_help);
}

ndstab_status apply_set(ndstab_config* cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) {
    std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
    return NDSTAB_ERR_CONFIG;
  }
  const std::string key = kv.substr(0, eq);
  const std::string value = kv.substr(eq + 1);
  const ndstab_status s = ndstab_config_set(cfg, key.c_str(), value.c_str());
  if (s != NDSTAB_OK) std::cerr << "error: " << ndstab_last_error() << '\n';
  return s;
}

// Builds the config from --config and --set; returns a null handle after
// printing the error.
ConfigPtr load_config(const CommonOptions& o, ndstab_status& status) {
  ndstab_config* raw = nullptr;
  status = o.config.empty() ? ndstab_config_new(&raw) : ndstab_config_load(o.config.c_str(), &raw);
  if (status != NDSTAB_OK) {
    std::cerr << "error: " << ndstab_last_error() << '\n';
    return nullptr;
  }
  ConfigPtr cfg(raw);
  for (const auto& kv : o.sets) {
    status = apply_set(cfg.get(), kv);
    if (status != NDSTAB_OK) return nullptr;
  }
  status = ndstab_config_validate(cfg.get());
  if (status != NDSTAB_OK) {
    std::cerr << "error: " << ndstab_last_error() << '\n';
    return nullptr;
  }
  return cfg;
}

bool write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "error: cannot write '" << path << "'\n";
    return false;
  }
  return true;
}

// Splits "v1,v2,..." at top-level commas so JSON arrays stay intact.
std::vector<std::string> split_values(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  bool in_string = false;
  for (char ch : s) {
    if (ch == '"') in_string = !in_string;
    if (!in_string) {
      if (ch == '[' || ch == '{') ++depth;
      if (ch == ']' || ch == '}') --depth;
      if (ch == ',' && depth == 0) {
        out.push_back(cur);
        cur.clear();
        continue;
      }
    }
    cur.push_back(ch);
  }
  out.push_back(cur);
  return out;
}

int cmd_design(const CommonOptions& o, const std::string& fixture) {
  ndstab_status s;
  const ConfigPtr cfg = load_config(o, s);
  if (!cfg) return exit_code(s);
  Owned rep;
  s = ndstab_design_report(cfg.get(), fixture.c_str(), &rep.s);
  if (!rep.s) return report_error(s);
  std::cout << rep.s << '\n';
  if (!o.out.empty() && !write_text(o.out, std::string(rep.s) + "\n")) return 1;
  if (s != NDSTAB_OK) std::cerr << "error: " << ndstab_last_error() << '\n';
  return exit_code(s);
}

int cmd_simulate(const CommonOptions& o, bool open_loop, bool undelayed, const std::string& profiles,
                 double fit_start) {
  ndstab_status s;
  const ConfigPtr cfg = load_config(o, s);
  if (!cfg) return exit_code(s);
  unsigned flags = 0;
  if (open_loop) flags |= NDSTAB_RUN_OPEN_LOOP;
  if (undelayed) flags |= NDSTAB_RUN_UNDELAYED;
  ndstab_trajectory* raw = nullptr;
  s = ndstab_simulate(cfg.get(), flags, &raw);
  if (s != NDSTAB_OK) return report_error(s);
  const TrajectoryPtr traj(raw);
  const std::string out = o.out.empty() ? "trajectory.csv" : o.out;
  if ((s = ndstab_trajectory_write_csv(traj.get(), out.c_str())) != NDSTAB_OK) return report_error(s);
  if (!profiles.empty() && (s = ndstab_trajectory_write_profiles(traj.get(), profiles.c_str())) != NDSTAB_OK) {
    return report_error(s);
  }
  Owned sum;
  if ((s = ndstab_trajectory_summary(traj.get(), fit_start, &sum.s)) != NDSTAB_OK) return report_error(s);
  json j = json::parse(sum.s);
  j["csv"] = out;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_verify(const CommonOptions& o, const std::string& selector) {
  ndstab_status s;
  const ConfigPtr cfg = load_config(o, s);
  if (!cfg) return exit_code(s);
  Owned rep;
  s = ndstab_verify(cfg.get(), selector.c_str(), &rep.s);
  if (!rep.s) return report_error(s);
  std::cout << rep.s << '\n';
  if (!o.out.empty() && !write_text(o.out, std::string(rep.s) + "\n")) return 1;
  return exit_code(s);
}

int cmd_sweep(const CommonOptions& o, const std::vector<std::string>& vary, int jobs, double fit_start) {
  ndstab_status s;
  const ConfigPtr base = load_config(o, s);
  if (!base) return exit_code(s);

  // Cartesian product of the --vary lists.
  std::vector<std::vector<std::pair<std::string, std::string>>> runs{{}};
  for (const auto& spec : vary) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "error: --vary expects key=v1,v2,..., got '" << spec << "'\n";
      return 1;
    }
    const std::string key = spec.substr(0, eq);
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& run : runs) {
      for (const auto& v : split_values(spec.substr(eq + 1))) {
        auto r = run;
        r.emplace_back(key, v);
        next.push_back(std::move(r));
      }
    }
    runs = std::move(next);
  }

  const std::string dir = o.out.empty() ? "sweep" : o.out;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    std::cerr << "error: cannot create '" << dir << "': " << ec.message() << '\n';
    return 1;
  }

  Owned base_json;
  if ((s = ndstab_config_to_json(base.get(), &base_json.s)) != NDSTAB_OK) return report_error(s);
  const std::string base_text = base_json.s;

  std::vector<json> results(runs.size());
  std::vector<int> codes(runs.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      json r;
      json overrides = json::object();
      for (const auto& [k, v] : runs[i]) overrides[k] = v;
      r["run"] = i;
      r["overrides"] = overrides;
      ndstab_config* raw = nullptr;
      ndstab_status st = ndstab_config_parse(base_text.c_str(), &raw);
      const ConfigPtr cfg(raw);
      for (std::size_t k = 0; st == NDSTAB_OK && k < runs[i].size(); ++k) {
        st = ndstab_config_set(cfg.get(), runs[i][k].first.c_str(), runs[i][k].second.c_str());
      }
      if (st == NDSTAB_OK) st = ndstab_config_validate(cfg.get());
      ndstab_trajectory* traj_raw = nullptr;
      if (st == NDSTAB_OK) st = ndstab_simulate(cfg.get(), 0, &traj_raw);
      const TrajectoryPtr traj(traj_raw);
      char name[32];
      std::snprintf(name, sizeof name, "run_%03zu.csv", i);
      const std::string path = (std::filesystem::path(dir) / name).string();
      if (st == NDSTAB_OK) st = ndstab_trajectory_write_csv(traj.get(), path.c_str());
      if (st == NDSTAB_OK) {
        Owned sum;
        st = ndstab_trajectory_summary(traj.get(), fit_start, &sum.s);
        if (st == NDSTAB_OK) {
          r["summary"] = json::parse(sum.s);
          r["csv"] = path;
        }
      }
      r["status"] = exit_code(st);
      if (st != NDSTAB_OK) r["error"] = ndstab_last_error();
      codes[i] = exit_code(st);
      results[i] = std::move(r);
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(runs.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::cout << json(results).dump(2) << '\n';
  for (int c : codes) {
    if (c != 0) return c;
  }
  return 0;
}

int cmd_dump_spectrum(const CommonOptions& o, int count) {
  ndstab_status s;
  const ConfigPtr cfg = load_config(o, s);
  if (!cfg) return exit_code(s);
  Owned csv;
  if ((s = ndstab_spectrum_table(cfg.get(), count, &csv.s)) != NDSTAB_OK) return report_error(s);
  if (o.out.empty()) {
    std::cout << csv.s;
    return 0;
  }
  return write_text(o.out, csv.s) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary stabilization of the nonlocal heat equation with input delay"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ndstab_version()));

  CommonOptions design_o, sim_o, verify_o, sweep_o, dump_o;

  auto* design = app.add_subcommand("design", "Build the feedback design and print it as JSON");
  add_common(design, design_o, "Also write the JSON report to this file");
  std::string fixture = "nonlocal-heat";
  design->add_option("--fixture", fixture, "nonlocal-heat or square-counterexample")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Run the closed-loop PDE and write the trajectory CSV");
  add_common(simulate, sim_o, "Trajectory CSV path (default trajectory.csv)");
  bool open_loop = false;
  bool undelayed = false;
  std::string profiles;
  double fit_start = 1.0;
  simulate->add_flag("--open-loop", open_loop, "Force the boundary input to zero");
  simulate->add_flag("--undelayed", undelayed, "Apply u = gain . Y without delay or predictor");
  simulate->add_option("--profiles", profiles, "Also write spatial profiles (t,x,y) to this file");
  simulate->add_option("--fit-start", fit_start, "Start of the decay-rate fit window")->capture_default_str();

  auto* verify = app.add_subcommand("verify", "Run invariant suites and print a JSON summary");
  add_common(verify, verify_o, "Also write the JSON summary to this file");
  std::string selector = "all";
  verify->add_option("suite", selector, "spectral, design, delay, pdesim or all")
      ->check(CLI::IsMember({"spectral", "design", "delay", "pdesim", "all"}))
      ->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Run independent simulations over parameter lists");
  add_common(sweep, sweep_o, "Output directory for run_NNN.csv (default sweep)");
  std::vector<std::string> vary;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  double sweep_fit = 1.0;
  sweep->add_option("--vary", vary, "key=v1,v2,... (repeatable; cartesian product)")->required();
  sweep->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  sweep->add_option("--fit-start", sweep_fit, "Start of the decay-rate fit window")->capture_default_str();

  auto* dump = app.add_subcommand("dump-spectrum", "Print the spectrum and basis constants as CSV");
  add_common(dump, dump_o, "Write the CSV to this file instead of standard output");
  int count = 5;
  dump->add_option("--count", count, "Number of eigenvalue pairs")->check(CLI::PositiveNumber)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (*design) return cmd_design(design_o, fixture);
  if (*simulate) return cmd_simulate(sim_o, open_loop, undelayed, profiles, fit_start);
  if (*verify) return cmd_verify(verify_o, selector);
  if (*sweep) return cmd_sweep(sweep_o, vary, jobs, sweep_fit);
  if (*dump) return cmd_dump_spectrum(dump_o, count);
  return 1;
}
