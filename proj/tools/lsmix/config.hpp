#pragma once

// JSON experiment configuration: parsing with defaults, strict key checking,
// and the canonical form used for the manifest digest.

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "io.hpp"
#include "lsmix/em.hpp"
#include "lsmix/sim.hpp"

namespace lsmix::cli {

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw CliError(kUsage, where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw CliError(kUsage, "unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw CliError(kUsage, std::string("config key '") + key + "': " + e.what());
  }
}

inline json em_to_json(const EmConfig& em) {
  return json{{"epsilon", em.epsilon},
              {"max_iters", em.max_iters},
              {"restarts", em.n_restarts},
              {"theta_update", std::string(to_string(em.theta_update))},
              {"theta_bounds", {em.param_space.theta_min, em.param_space.theta_max}},
              {"variance_bounds", {em.param_space.v_min, em.param_space.v_max}}};
}

inline EmConfig em_from_json(const json& j) {
  reject_unknown_keys(j, {"epsilon", "max_iters", "restarts", "theta_update", "theta_bounds", "variance_bounds"},
                      "\"em\"");
  EmConfig em;
  em.epsilon = get_or(j, "epsilon", em.epsilon);
  em.max_iters = get_or<std::size_t>(j, "max_iters", em.max_iters);
  em.n_restarts = get_or<std::size_t>(j, "restarts", em.n_restarts);
  em.theta_update = parse_theta_update(get_or<std::string>(j, "theta_update", "exact_mstep"));
  const auto tb = get_or<std::vector<double>>(j, "theta_bounds", {em.param_space.theta_min, em.param_space.theta_max});
  const auto vb = get_or<std::vector<double>>(j, "variance_bounds", {em.param_space.v_min, em.param_space.v_max});
  if (tb.size() != 2 || vb.size() != 2) throw CliError(kUsage, "bounds must be [lo, hi] pairs");
  em.param_space = {tb[0], tb[1], vb[0], vb[1]};
  em.validate();
  return em;
}

struct SimulationSpec {
  ModelPath path;
  ExperimentConfig experiment;
  double y2 = 0.1;

  /// Fully expanded configuration, including every defaulted value.
  json canonical() const {
    json j{{"model", std::string(to_string(path.kind))},
           {"pi", path.pi},
           {"v0", path.v0},
           {"n_values", experiment.n_values},
           {"replications", experiment.replications},
           {"loss_order", experiment.loss_order},
           {"loss_kind", std::string(to_string(experiment.loss_kind))},
           {"em", em_to_json(experiment.em)},
           {"seed", experiment.base_seed},
           {"record_timing", experiment.record_timing}};
    if (path.kind == PathKind::A) j["y2"] = y2;
    return j;
  }
};

/// Keys: model ("A" | "S" | "S_prime"), pi (Model A only), y2, v0,
/// n_values (explicit list) or n_grid {min, max, count} (log-spaced),
/// replications, loss_order, loss_kind ("psi" | "phi"), em {...}, seed, record_timing.
inline SimulationSpec parse_simulation_config(const json& j) {
  reject_unknown_keys(j,
                      {"model", "pi", "y2", "v0", "n_values", "n_grid", "replications", "loss_order", "loss_kind",
                       "em", "seed", "record_timing", "description"},
                      "simulation config");
  SimulationSpec spec;
  const PathKind kind = parse_path_kind(get_or<std::string>(j, "model", "A"));
  const double v0 = get_or(j, "v0", 1.0);
  if (!(v0 > 0.0)) throw CliError(kUsage, "v0 must be positive");
  if (kind == PathKind::A) {
    spec.y2 = get_or(j, "y2", 0.1);
    spec.path = ModelPath::model_a(get_or(j, "pi", 0.25), spec.y2, v0);
  } else {
    if (j.contains("pi") && get_or(j, "pi", 0.5) != 0.5) {
      throw CliError(kUsage, "models S and S_prime are symmetric; pi must be 0.5 or omitted");
    }
    if (j.contains("y2")) throw CliError(kUsage, "y2 applies to model A only");
    spec.path = kind == PathKind::S ? ModelPath::model_s(v0) : ModelPath::model_s_prime(v0);
  }

  auto& ex = spec.experiment;
  if (j.contains("n_values") && j.contains("n_grid")) throw CliError(kUsage, "give n_values or n_grid, not both");
  if (j.contains("n_values")) {
    ex.n_values = get_or<std::vector<std::size_t>>(j, "n_values", {});
  } else if (j.contains("n_grid")) {
    const auto& g = j.at("n_grid");
    reject_unknown_keys(g, {"min", "max", "count"}, "\"n_grid\"");
    ex.n_values = log_spaced_sizes(get_or<std::size_t>(g, "min", 1000), get_or<std::size_t>(g, "max", 100000),
                                   get_or<std::size_t>(g, "count", 100));
  }
  ex.replications = get_or<std::size_t>(j, "replications", ex.replications);
  const bool symmetric_model = kind != PathKind::A;
  ex.loss_order = get_or(j, "loss_order", symmetric_model ? 4.0 : 6.0);
  ex.loss_kind = parse_loss_kind(get_or<std::string>(j, "loss_kind", symmetric_model ? "phi" : "psi"));
  if (j.contains("em")) ex.em = em_from_json(j.at("em"));
  ex.base_seed = get_or<std::uint64_t>(j, "seed", 0);
  ex.record_timing = get_or(j, "record_timing", false);
  ex.validate();
  return spec;
}

}  // namespace lsmix::cli
