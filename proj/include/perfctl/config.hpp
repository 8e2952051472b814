#pragma once

#include <string>

#include "perfctl/analysis.hpp"
#include "perfctl/solvers.hpp"

namespace perfctl {

//! Run parameters carried alongside the instance in a config file.
struct RunSettings {
  long rsgd_N = 500;
  int rsgd_log_every = 1;
  int rsgd_batch = 1;
  enum class PlanKind { Auto, Diminishing, Constant, Custom } plan_kind = PlanKind::Auto;
  Scalar phi1 = 0.0, phi2 = 1.0;
  Scalar eta = 0.0;
  std::vector<Scalar> etas;
  int rrm_max_iters = 50;
  Scalar rrm_tol = 1e-8;
  RegimeHint regime = RegimeHint::Unknown;
  Scalar zeta = 0.0;
  long cost_samples = 200;
};

struct LoadedConfig {
  ControlInstance instance;
  RunSettings run;
  std::string canonical;  // canonical dump used for hashing
};

//! Strict JSON config loader: unknown keys anywhere are errors.
LoadedConfig load_config_file(const std::string& path);
LoadedConfig load_config_string(const std::string& text);

}  // namespace perfctl
