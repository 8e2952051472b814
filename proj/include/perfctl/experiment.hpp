#pragma once

#include "perfctl/io.hpp"
#include "perfctl/stock.hpp"

namespace perfctl {

enum class StockRegime { Stable, Unstable, General };
enum class StockScale { Paper, Reduced };

//! Parameter presets realizing the three qualitative regimes. Stable is the
//! reference configuration verbatim; Unstable boosts the riskless rate so
//! every daily growth factor exceeds one and rescales the sensitivities into
//! the responsive band of the volatility sampler; General sits in between
//! with mildly mixed daily factors.
StockMarketConfig stock_preset(StockRegime regime, StockScale scale, std::uint64_t seed);

enum class ReferenceSource { Auto, Supplied, None };

struct ExperimentOptions {
  ReferenceSource reference = ReferenceSource::Auto;
  Matrix supplied_reference;       // used when reference == Supplied
  long cost_samples = 200;         // Monte-Carlo samples per logged iterate
  int log_every = 1;
  int jobs = 1;
  StockRegime regime = StockRegime::Stable;
};

struct ExperimentOutput {
  std::vector<TraceRow> rows;
  RunTrace trace;
  ConditionReport condition;
  bool reference_available = false;
  Matrix reference;
  bool diverged = false;
  std::vector<std::string> notes;
  std::string config_hash;
  std::string schedule_name;
  std::uint64_t seed = 0;

  std::string csv() const { return write_trace_csv(rows); }
  std::string metadata() const;
};

//! Runs RSGD on the stock instance for one schedule, evaluates the expected
//! cost at every logged iterate with a fixed evaluation seed, and attaches
//! the condition report. In the unstable regime the PS-error reference is
//! attempted only for schedules that pass the backward-decay gate below;
//! otherwise the ps_error column is omitted and the run carries the
//! divergence flag.
ExperimentOutput run_experiment(const StockMarketConfig& cfg,
                                const SensitivitySchedule& schedule,
                                const ExperimentOptions& options);

//! Canonical key=value dump of the configuration (hashed into metadata).
std::string describe_stock_config(const StockMarketConfig& cfg,
                                  const SensitivitySchedule& schedule);

//! Where the schedule's sensitivity-propagation sum sits between the best
//! (ascending) and worst (descending) rearrangement of its own values under
//! the nu tail weights. `compatible` means the sum is no larger than the
//! geometric midpoint of the two extremes: the ordering is in the
//! backward-decaying half, which is the necessary shape on unstable
//! instances.
struct RearrangementGate {
  Scalar sum = 0.0;
  Scalar best = 0.0;   // ascending rearrangement
  Scalar worst = 0.0;  // descending rearrangement
  bool compatible = true;
};

RearrangementGate propagation_rearrangement_gate(const ConstantsBundle& bundle);

}  // namespace perfctl
