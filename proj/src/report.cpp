#include <array>
#include <charconv>
#include <sstream>

#include "ndstab/design.hpp"
#include "ndstab/error.hpp"
#include "ndstab/verify.hpp"

namespace ndstab {

namespace {

using nlohmann::json;

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::string fmt(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return {buf.data(), res.ptr};
}

}  // namespace

DesignFixture parse_fixture(std::string_view name) {
  if (name == "nonlocal-heat") return DesignFixture::NonlocalHeat;
  if (name == "square-counterexample") return DesignFixture::SquareCounterexample;
  throw Error(ErrorCode::Config,
              "unknown design fixture '" + std::string(name) + "' (nonlocal-heat, square-counterexample)");
}

DesignReport design_report(const SimConfig& cfg, DesignFixture fixture) {
  cfg.validate();
  Matrix lambda;
  Vector L;
  if (fixture == DesignFixture::NonlocalHeat) {
    const int d = choose_unstable_dim(cfg.rho, cfg.c, cfg.alpha);
    const BasisPair basis(Spectrum(d, cfg.c, cfg.alpha));
    lambda = build_lambda(basis, d);
    L = build_trace_vector(basis, d);
  } else {
    lambda = Matrix::Zero(2, 2);
    lambda(0, 0) = -2.0 + cfg.c;
    lambda(1, 1) = -5.0 + cfg.c;
    L = Vector::Unit(2, 0);
  }
  const auto d = static_cast<int>(lambda.rows());
  const std::vector<double> gammas = cfg.gammas.empty() ? default_gammas(cfg.rho, d) : cfg.gammas;
  if (static_cast<int>(gammas.size()) != d) {
    throw Error(ErrorCode::Config, "gammas must have exactly d = " + std::to_string(d) + " entries");
  }

  const KalmanResult kal = kalman_rank(lambda, L);
  const DeterminantChain chain = determinant_chain_check(lambda, L, gammas);

  DesignReport rep;
  json& j = rep.json;
  j["fixture"] = fixture == DesignFixture::NonlocalHeat ? "nonlocal-heat" : "square-counterexample";
  j["d"] = d;
  j["lambda"] = to_json(lambda);
  j["L"] = to_json(L);
  j["gammas"] = gammas;
  j["kalman"] = kal.full_rank;
  j["kalman_rank"] = kal.rank;
  j["min_singular_value"] = kal.min_singular_value;
  j["max_singular_value"] = kal.max_singular_value;
  j["determinant_chain"] = {{"kalman_det", chain.kalman_det},
                            {"chain_det", chain.chain_det},
                            {"kalman_nonzero", chain.kalman_nonzero},
                            {"chain_nonzero", chain.chain_nonzero},
                            {"agree", chain.agree()}};
  try {
    const DesignSet ds = build_design(lambda, L, gammas);
    j["A"] = to_json(ds.A);
    j["C"] = to_json(ds.C);
    j["gain"] = to_json(ds.gain);
    j["sum_b_condition"] = ds.sum_b_condition();
    rep.rank_ok = kal.full_rank;
  } catch (const RankConditionViolated& e) {
    j["A"] = nullptr;
    j["C"] = nullptr;
    j["gain"] = nullptr;
    j["sum_b_condition"] =
        e.min_singular_value() > 0.0 ? json(e.max_singular_value() / e.min_singular_value()) : json(nullptr);
    j["error"] = e.what();
    rep.rank_ok = false;
  }
  return rep;
}

std::string spectrum_table_csv(double c, double alpha, int count) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "spectrum table: count must be >= 1");
  const BasisPair basis(Spectrum(2 * count, c, alpha));
  const Spectrum& s = basis.spectrum();
  std::ostringstream out;
  out << "k,beta_k,lambda_2k,lambda_2k+1,C_k2,l_2k,l_2k+1\n";
  for (int k = 0; k < count; ++k) {
    out << k << ',' << fmt(s.beta(k)) << ',' << fmt(s.lambda(2 * k)) << ',' << fmt(s.lambda(2 * k + 1)) << ','
        << fmt(basis.c2()[static_cast<std::size_t>(k)]) << ',' << fmt(basis.trace_l(2 * k).value) << ','
        << fmt(basis.trace_l(2 * k + 1).value) << '\n';
  }
  return out.str();
}

}  // namespace ndstab
