#include "ndstab/ndstab.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "ndstab/config.hpp"
#include "ndstab/design.hpp"
#include "ndstab/error.hpp"
#include "ndstab/pdesim.hpp"
#include "ndstab/verify.hpp"

struct ndstab_config {
  ndstab::SimConfig cfg;
};

struct ndstab_design {
  ndstab::DesignSet design;
};

struct ndstab_trajectory {
  ndstab::Trajectory traj;
};

namespace {

thread_local std::string g_last_error;

ndstab_status fail(ndstab_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

ndstab_status status_of(ndstab::ErrorCode code) {
  const int v = static_cast<int>(code);
  return v >= 1 && v <= 12 ? static_cast<ndstab_status>(v) : NDSTAB_ERR_INTERNAL;
}

template <typename F>
ndstab_status guarded(F&& f) {
  g_last_error.clear();
  try {
    return f();
  } catch (const ndstab::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(NDSTAB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(NDSTAB_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ndstab::SimConfig config_or_default(const ndstab_config* cfg) { return cfg ? cfg->cfg : ndstab::SimConfig{}; }

}  // namespace

extern "C" {

const char* ndstab_version(void) { return "0.1.0"; }

const char* ndstab_last_error(void) { return g_last_error.c_str(); }

void ndstab_string_free(char* s) { std::free(s); }

ndstab_status ndstab_config_new(ndstab_config** out) {
  return guarded([&] {
    if (!out) return fail(NDSTAB_ERR_ARGUMENT, "null output pointer");
    *out = new ndstab_config{};
    return NDSTAB_OK;
  });
}

ndstab_status ndstab_config_parse(const char* json_text, ndstab_config** out) {
  return guarded([&] {
    if (!json_text || !out) return fail(NDSTAB_ERR_ARGUMENT, "null argument");
    *out = new ndstab_config{ndstab::SimConfig::parse(json_text)};
    return NDSTAB_OK;
  });
}

ndstab_status ndstab_config_load(const char* path, ndstab_config** out) {
  return guarded([&] {
    if (!path || !out) return fail(NDSTAB_ERR_ARGUMENT, "null argument");
    *out = new ndstab_config{ndstab::SimConfig::load(path)};
    return NDSTAB_OK;
  });
}

ndstab_status ndstab_config_set(ndstab_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    if (!cfg || !key || !value) return fail(NDSTAB_ERR_ARGUMENT, "null argument");
    ndstab::apply_override(cfg->cfg, key, value);
    return NDSTAB_OK;
  });
}

ndstab_status ndstab_config_validate(const ndstab_config* cfg) {
  return guarded([&] {
    if (!cfg) return fail(NDSTAB_ERR_ARGUMENT, "null config");
    cfg->cfg.validate();
    return NDSTAB_OK;
  });
}

ndstab_status ndstab_config_to_json(const ndstab_config* cfg, char** json_out) {
  return guarded([&] {
    if (!cfg || !json_out) return fail(NDSTAB_ERR_ARGUMENT, "null argument");
    *json_out = dup_string(cfg->cfg.to_json().dump());
    return NDSTAB_OK;
  });
}

void ndstab_config_free(ndstab_config* cfg) { delete cfg; }

ndstab_status ndstab_design_report(const ndstab_config* cfg, const char* fixture, char** json_out) {
  return guarded([&] {
    if (!json_out) return fail(NDSTAB_ERR_ARGUMENT, "null output pointer");
    const auto fx = ndstab::parse_fixture(fixture ? fixture : "nonlocal-heat");
    const ndstab::DesignReport rep = ndstab::design_report(config_or_default(cfg), fx);
    *json_out = dup_string(rep.json.dump(2));
    return rep.rank_ok ? NDSTAB_OK : fail(NDSTAB_ERR_RANK, "rank condition fails for this design");
  });
}

ndstab_status ndstab_design_build(const ndstab_config* cfg, ndstab_design** out) {
  return guarded([&] {
    if (!out) return fail(NDSTAB_ERR_ARGUMENT, "null output pointer");
    const ndstab::SimConfig c = config_or_default(cfg);
    c.validate();
    const int d = ndstab::choose_unstable_dim(c.rho, c.c, c.alpha);
    const ndstab::BasisPair basis(ndstab::Spectrum(d, c.c, c.alpha));
    *out = new ndstab_design{ndstab::build_design(basis, c.rho, c.gammas)};
    return NDSTAB_OK;
  });
}

int ndstab_design_dim(const ndstab_design* design) { return design ? design->design.d : 0; }

ndstab_status ndstab_design_matrix(const ndstab_design* design, char which, double* out) {
  return guarded([&] {
    if (!design || !out) return fail(NDSTAB_ERR_ARGUMENT, "null argument");
    const ndstab::Matrix* m = nullptr;
    switch (which) {
      case 'L': m = &design->design.lambda; break;
      case 'A': m = &design->design.A; break;
      case 'C': m = &design->design.C; break;
      default: return fail(NDSTAB_ERR_ARGUMENT, "matrix selector must be 'L', 'A' or 'C'");
    }
    for (Eigen::Index i = 0; i < m->rows(); ++i) {
      for (Eigen::Index j = 0; j < m->cols(); ++j) out[i * m->cols() + j] = (*m)(i, j);
    }
    return NDSTAB_OK;
  });
}

ndstab_status ndstab_design_feedback(const ndstab_design* design, const double* U, double* u_out) {
  return guarded([&] {
    if (!design || !U || !u_out) return fail(NDSTAB_ERR_ARGUMENT, "null argument");
    const ndstab::Vector v = Eigen::Map<const ndstab::Vector>(U, design->design.d);
    *u_out = ndstab::feedback_u(design->design, v);
    return NDSTAB_OK;
  });
}

void ndstab_design_free(ndstab_design* design) { delete design; }

ndstab_status ndstab_simulate(const ndstab_config* cfg, unsigned flags, ndstab_trajectory** out) {
  return guarded([&] {
    if (!out) return fail(NDSTAB_ERR_ARGUMENT, "null output pointer");
    const ndstab::SimConfig c = config_or_default(cfg);
    ndstab::RunOptions opts;
    opts.control = (flags & NDSTAB_RUN_OPEN_LOOP) == 0;
    const ndstab::Simulation sim(c, opts.control);
    auto* t = new ndstab_trajectory{};
    try {
      t->traj = (flags & NDSTAB_RUN_UNDELAYED) && opts.control ? sim.run_undelayed_proportional(opts)
                                                               : sim.run_closed_loop(opts);
    } catch (...) {
      delete t;
      throw;
    }
    *out = t;
    return NDSTAB_OK;
  });
}

size_t ndstab_trajectory_size(const ndstab_trajectory* traj) { return traj ? traj->traj.size() : 0; }

int ndstab_trajectory_dim(const ndstab_trajectory* traj) { return traj ? traj->traj.d : 0; }

ndstab_status ndstab_trajectory_sample(const ndstab_trajectory* traj, size_t i, double* t, double* norm_y, double* u,
                                       double* Y_out) {
  return guarded([&] {
    if (!traj) return fail(NDSTAB_ERR_ARGUMENT, "null trajectory");
    const auto& tr = traj->traj;
    if (i >= tr.size()) return fail(NDSTAB_ERR_INDEX, "sample index out of range");
    if (t) *t = tr.t[i];
    if (norm_y) *norm_y = tr.norm_y[i];
    if (u) *u = tr.u[i];
    if (Y_out) {
      for (int j = 0; j < tr.d; ++j) Y_out[j] = tr.modes[i * static_cast<size_t>(tr.d) + static_cast<size_t>(j)];
    }
    return NDSTAB_OK;
  });
}

ndstab_status ndstab_trajectory_decay_rate(const ndstab_trajectory* traj, double t_start, double* rate) {
  return guarded([&] {
    if (!traj || !rate) return fail(NDSTAB_ERR_ARGUMENT, "null argument");
    *rate = ndstab::estimate_decay_rate(traj->traj, t_start);
    return NDSTAB_OK;
  });
}

ndstab_status ndstab_trajectory_summary(const ndstab_trajectory* traj, double t_start, char** json_out) {
  return guarded([&] {
    if (!traj || !json_out) return fail(NDSTAB_ERR_ARGUMENT, "null argument");
    const auto& tr = traj->traj;
    if (tr.size() == 0) return fail(NDSTAB_ERR_ARGUMENT, "empty trajectory");
    nlohmann::json j;
    j["samples"] = tr.size();
    j["t_final"] = tr.t.back();
    j["norm_initial"] = tr.norm_y.front();
    j["norm_final"] = tr.norm_y.back();
    j["norm_ratio"] = tr.norm_y.front() > 0.0 ? nlohmann::json(tr.norm_y.back() / tr.norm_y.front()) : nlohmann::json(nullptr);
    try {
      j["decay_rate"] = ndstab::estimate_decay_rate(tr, t_start);
    } catch (const ndstab::Error&) {
      j["decay_rate"] = nullptr;
    }
    j["fit_start"] = t_start;
    *json_out = dup_string(j.dump(2));
    return NDSTAB_OK;
  });
}

ndstab_status ndstab_trajectory_write_csv(const ndstab_trajectory* traj, const char* path) {
  return guarded([&] {
    if (!traj || !path) return fail(NDSTAB_ERR_ARGUMENT, "null argument");
    std::ofstream out(path, std::ios::binary);
    if (!out) return fail(NDSTAB_ERR_IO, std::string("cannot open '") + path + "' for writing");
    traj->traj.write_csv(out);
    if (!out) return fail(NDSTAB_ERR_IO, std::string("write to '") + path + "' failed");
    return NDSTAB_OK;
  });
}

ndstab_status ndstab_trajectory_write_profiles(const ndstab_trajectory* traj, const char* path) {
  return guarded([&] {
    if (!traj || !path) return fail(NDSTAB_ERR_ARGUMENT, "null argument");
    std::ofstream out(path, std::ios::binary);
    if (!out) return fail(NDSTAB_ERR_IO, std::string("cannot open '") + path + "' for writing");
    traj->traj.write_profiles_csv(out);
    if (!out) return fail(NDSTAB_ERR_IO, std::string("write to '") + path + "' failed");
    return NDSTAB_OK;
  });
}

void ndstab_trajectory_free(ndstab_trajectory* traj) { delete traj; }

ndstab_status ndstab_verify(const ndstab_config* cfg, const char* selector, char** json_out) {
  return guarded([&] {
    if (!json_out) return fail(NDSTAB_ERR_ARGUMENT, "null output pointer");
    const nlohmann::json rep = ndstab::verify(selector ? selector : "all", config_or_default(cfg));
    *json_out = dup_string(rep.dump(2));
    return rep.at("passed").get<bool>() ? NDSTAB_OK : fail(NDSTAB_ERR_VERIFICATION, "verification suite failed");
  });
}

ndstab_status ndstab_spectrum_table(const ndstab_config* cfg, int count, char** csv_out) {
  return guarded([&] {
    if (!csv_out) return fail(NDSTAB_ERR_ARGUMENT, "null output pointer");
    const ndstab::SimConfig c = config_or_default(cfg);
    *csv_out = dup_string(ndstab::spectrum_table_csv(c.c, c.alpha, count));
    return NDSTAB_OK;
  });
}

}  // extern "C"
