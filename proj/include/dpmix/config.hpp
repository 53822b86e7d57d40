#pragma once

#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "dpmix/model.hpp"

// Flat JSON config for Hyperparams. Unknown keys are rejected; the three
// matrix-valued entries also accept a bare scalar c meaning c * identity.

namespace dpmix {

namespace detail {

inline MatParam mat_param_from_json(const nlohmann::json& j, const std::string& key) {
  if (j.is_number()) return MatParam::scaled_identity(j.get<double>());
  if (j.is_array()) {
    const auto rows = j.size();
    Matrix m(rows, rows);
    for (std::size_t r = 0; r < rows; ++r) {
      if (!j[r].is_array() || j[r].size() != rows)
        throw ParseError("ParseError", key + " must be a square matrix");
      for (std::size_t c = 0; c < rows; ++c) m(r, c) = j[r][c].get<double>();
    }
    MatParam p;
    p.dense = m;
    return p;
  }
  throw ParseError("ParseError", key + " must be a scalar or a square matrix");
}

inline nlohmann::json mat_param_to_json(const MatParam& p) {
  if (p.is_scalar()) return p.scale;
  nlohmann::json rows = nlohmann::json::array();
  for (Index r = 0; r < p.dense->rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < p.dense->cols(); ++c) row.push_back((*p.dense)(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

inline Hyperparams hyperparams_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "a", "b", "K", "Sigma_mu", "k0", "sigma", "Sigma", "g1", "g2",
      "nu0", "V0", "mu0_L", "sigma0_L", "a0_L", "b0_L", "a0", "b0", "c0",
      "restarts", "max_iter", "rel_tol", "seed", "alpha_stabilizer"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key()))
      throw ParseError("UnknownKey", "unknown config key '" + it.key() + "'");
  }
  Hyperparams h;
  auto get = [&](const char* key, auto& dst) {
    if (j.contains(key)) dst = j.at(key).template get<std::decay_t<decltype(dst)>>();
  };
  get("a", h.a);
  get("b", h.b);
  get("K", h.truncation);
  get("k0", h.k0);
  get("sigma", h.fixed_sigma);
  get("g1", h.g1);
  get("g2", h.g2);
  get("nu0", h.nu0);
  get("mu0_L", h.mu0_L);
  get("sigma0_L", h.sigma0_L);
  get("a0_L", h.a0_L);
  get("b0_L", h.b0_L);
  get("a0", h.a0);
  get("b0", h.b0);
  get("c0", h.c0);
  get("restarts", h.restarts);
  get("max_iter", h.max_iter);
  get("rel_tol", h.rel_tol);
  get("seed", h.seed);
  if (j.contains("Sigma_mu")) h.sigma_mu = detail::mat_param_from_json(j.at("Sigma_mu"), "Sigma_mu");
  if (j.contains("Sigma")) h.fixed_Sigma = detail::mat_param_from_json(j.at("Sigma"), "Sigma");
  if (j.contains("V0")) h.V0 = detail::mat_param_from_json(j.at("V0"), "V0");
  if (j.contains("alpha_stabilizer")) {
    const std::string s = j.at("alpha_stabilizer").get<std::string>();
    if (s == "prev_mean") h.alpha_stabilizer = AlphaStabilizer::PrevMean;
    else if (s == "one") h.alpha_stabilizer = AlphaStabilizer::One;
    else throw ParseError("ParseError", "alpha_stabilizer must be 'prev_mean' or 'one'");
  }
  return h;
}

inline nlohmann::json hyperparams_to_json(const Hyperparams& h) {
  nlohmann::json j;
  j["a"] = h.a;
  j["b"] = h.b;
  j["K"] = h.truncation;
  j["Sigma_mu"] = detail::mat_param_to_json(h.sigma_mu);
  j["k0"] = h.k0;
  j["sigma"] = h.fixed_sigma;
  j["Sigma"] = detail::mat_param_to_json(h.fixed_Sigma);
  j["g1"] = h.g1;
  j["g2"] = h.g2;
  j["nu0"] = h.nu0;
  j["V0"] = detail::mat_param_to_json(h.V0);
  j["mu0_L"] = h.mu0_L;
  j["sigma0_L"] = h.sigma0_L;
  j["a0_L"] = h.a0_L;
  j["b0_L"] = h.b0_L;
  j["a0"] = h.a0;
  j["b0"] = h.b0;
  j["c0"] = h.c0;
  j["restarts"] = h.restarts;
  j["max_iter"] = h.max_iter;
  j["rel_tol"] = h.rel_tol;
  j["seed"] = h.seed;
  j["alpha_stabilizer"] =
      h.alpha_stabilizer == AlphaStabilizer::PrevMean ? "prev_mean" : "one";
  return j;
}

inline Hyperparams load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("FileNotFound", "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("ParseError", std::string("bad config JSON: ") + e.what());
  }
  return hyperparams_from_json(j);
}

inline void save_config(const Hyperparams& h, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("FileNotFound", "cannot write config '" + path + "'");
  out << hyperparams_to_json(h).dump(2) << "\n";
}

}  // namespace dpmix
