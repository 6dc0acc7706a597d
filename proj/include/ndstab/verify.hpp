#pragma once

// Invariant suites behind `verify` and the JSON reports behind `design` and
// `dump-spectrum`.

#include <string>
#include <string_view>

#include <json.hpp>

#include "ndstab/config.hpp"

namespace ndstab {

/// Each suite returns {"suite": name, ..., "passed": bool}.
[[nodiscard]] nlohmann::json verify_spectral(const SimConfig& cfg);
[[nodiscard]] nlohmann::json verify_design(const SimConfig& cfg);
[[nodiscard]] nlohmann::json verify_delay(const SimConfig& cfg);
[[nodiscard]] nlohmann::json verify_pdesim(const SimConfig& cfg);

/// selector: spectral, design, delay, pdesim or all. Returns
/// {"suites": [...], "passed": bool}; throws InvalidArgument otherwise.
[[nodiscard]] nlohmann::json verify(std::string_view selector, const SimConfig& cfg);

enum class DesignFixture {
  NonlocalHeat,          ///< Lambda, L from the heat-equation basis
  SquareCounterexample,  ///< diag(-2 + c, -5 + c), L = (1, 0)
};

[[nodiscard]] DesignFixture parse_fixture(std::string_view name);

struct DesignReport {
  nlohmann::json json;
  bool rank_ok = false;
};

/// {d, lambda, L, gammas, A, C, kalman, min_singular_value, ...}. A and C are
/// null when the rank condition fails; the rest is always filled.
[[nodiscard]] DesignReport design_report(const SimConfig& cfg, DesignFixture fixture);

/// CSV rows k, beta_k, lambda_2k, lambda_2k+1, C_k2, l_2k, l_2k+1.
[[nodiscard]] std::string spectrum_table_csv(double c, double alpha, int count);

}  // namespace ndstab
