#pragma once

#include <cstdint>
#include <string>

#include "perfctl/solvers.hpp"

namespace perfctl {

//! Stock-investment instance: L stocks traded over T days, state
//! x = [q - E q; q] in dimension 2L, A = I, B = I, K = 0, H = 1, portfolio
//! rows on the simplex, projected-quadratic risk cost.
struct StockMarketConfig {
  int L = 10;
  int T = 60;
  Scalar r = 0.02;        // riskless rate per day
  Scalar vol_std = 0.2;   // volatility sampler std
  Scalar vol_clip = 0.6;  // clip radius for v
  Scalar noise_lo = 0.0;  // uniform noise entry range
  Scalar noise_hi = 1.0;
  long N = 1000;          // RSGD iterations
  Scalar eta = 0.01;      // constant step size, as in the reference runs
  Scalar eta_phi1 = 0.0;  // > 0 selects the practical schedule phi1/(n+phi2)
  Scalar eta_phi2 = 1.0;
  std::uint64_t seed = 0;
  Scalar sens_scale = 1.0;  // multiplies the sensitivity schedule
  // declared stability constants for the analysis layer; A = I is not
  // certifiable, so these are DeclaredOnly diagnostics
  Scalar kappa = 1.0;
  Scalar gamma = 0.05;
};

enum class ScheduleOrder { Ascending, Descending, Random, Explicit };

struct SensitivitySchedule {
  ScheduleOrder order = ScheduleOrder::Explicit;
  std::vector<Scalar> values;
  std::string name;

  void validate() const;
};

struct PaperSchedules {
  SensitivitySchedule ascend;
  SensitivitySchedule descend;
  SensitivitySchedule random;
  bool synthetic = false;  // true when T != 60 and the lists are interpolated
};

//! The three sensitivity sequences. T = 60 returns the verbatim lists; other
//! horizons synthesize a geometric ramp over the same [min, max] range and a
//! fixed-seed permutation of it, reported as synthetic.
PaperSchedules paper_schedules(int T = 60);

//! Writes the schedule asset files (one decimal per line, 60 lines) plus a
//! checksum manifest into the given directory.
void write_schedule_assets(const std::string& dir);
SensitivitySchedule load_schedule_file(const std::string& path);

//! Assembles the full control instance for a schedule (values multiplied by
//! cfg.sens_scale).
ControlInstance build_stock_instance(const StockMarketConfig& cfg,
                                     const SensitivitySchedule& schedule);

//! One draw of the Eq.-(27)/(28) perturbation matrix.
Matrix sample_volatility_perturbation(const StockMarketConfig& cfg,
                                      const SensitivitySchedule& schedule, const Policy& policy,
                                      int t, SeedPair seed);

//! Guaranteed lower bound on ||A_t|| for the instance (> 1 in boosted-rate
//! presets, where every daily growth factor exceeds one).
Scalar stock_growth_lower_bound(const StockMarketConfig& cfg);

}  // namespace perfctl
