#include "perfctl/stock.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "perfctl/io.hpp"

namespace perfctl {

namespace {

// Sensitivity sequences for the 60-day experiment.
const std::vector<Scalar>& ascend_values() {
  static const std::vector<Scalar> v = {
      1.25797477e-07, 5.03189910e-07, 1.13217730e-06, 2.01275964e-06, 3.14493693e-06,
      4.52870919e-06, 6.16407639e-06, 8.05103855e-06, 1.01895957e-05, 1.25797477e-05,
      1.52214948e-05, 1.81148367e-05, 2.12597737e-05, 2.46563056e-05, 2.83044324e-05,
      3.22041542e-05, 3.63554710e-05, 4.07583827e-05, 4.54128893e-05, 5.03189910e-05,
      4.66004175e-03, 5.35796616e-03, 6.12231163e-03, 6.95609731e-03, 7.86234234e-03,
      8.84406585e-03, 9.90428699e-03, 1.10460249e-02, 1.22722987e-02, 1.35861276e-02,
      1.49905306e-02, 1.64885270e-02, 1.80831358e-02, 1.97773762e-02, 2.15742674e-02,
      2.34768284e-02, 2.54880785e-02, 2.76110367e-02, 2.98487222e-02, 3.22041542e-02,
      4.33504397e-02, 4.66004175e-02, 5.00089002e-02, 5.35796616e-02, 5.73164756e-02,
      6.12231163e-02, 6.53033575e-02, 6.95609731e-02, 7.39997371e-02, 7.86234234e-02,
      8.34358059e-02, 8.84406585e-02, 9.36417552e-02, 9.90428699e-02, 1.04647776e-01,
      1.10460249e-01, 1.16484061e-01, 1.22722987e-01, 1.29180801e-01, 1.35861276e-01};
  return v;
}

const std::vector<Scalar>& descend_values() {
  static const std::vector<Scalar> v = {
      1.35861276e-01, 1.29180801e-01, 1.22722987e-01, 1.16484061e-01, 1.10460249e-01,
      1.04647776e-01, 9.90428699e-02, 9.36417552e-02, 8.84406585e-02, 8.34358059e-02,
      7.86234234e-02, 7.39997371e-02, 6.95609731e-02, 6.53033575e-02, 6.12231163e-02,
      5.73164756e-02, 5.35796616e-02, 5.00089002e-02, 4.66004175e-02, 4.33504397e-02,
      3.22041542e-02, 2.98487222e-02, 2.76110367e-02, 2.54880785e-02, 2.34768284e-02,
      2.15742674e-02, 1.97773762e-02, 1.80831358e-02, 1.64885270e-02, 1.49905306e-02,
      1.35861276e-02, 1.22722987e-02, 1.10460249e-02, 9.90428699e-03, 8.84406585e-03,
      7.86234234e-03, 6.95609731e-03, 6.12231163e-03, 5.35796616e-03, 4.66004175e-03,
      5.03189910e-05, 4.54128893e-05, 4.07583827e-05, 3.63554710e-05, 3.22041542e-05,
      2.83044324e-05, 2.46563056e-05, 2.12597737e-05, 1.81148367e-05, 1.52214948e-05,
      1.25797477e-05, 1.01895957e-05, 8.05103855e-06, 6.16407639e-06, 4.52870919e-06,
      3.14493693e-06, 2.01275964e-06, 1.13217730e-06, 5.03189910e-07, 1.25797477e-07};
  return v;
}

const std::vector<Scalar>& random_values() {
  static const std::vector<Scalar> v = {
      2.54880785e-02, 3.63554710e-05, 2.34768284e-02, 1.64885270e-02, 1.25797477e-07,
      9.36417552e-02, 1.10460249e-02, 6.16407639e-06, 2.76110367e-02, 5.00089002e-02,
      1.16484061e-01, 1.04647776e-01, 2.15742674e-02, 2.46563056e-05, 3.14493693e-06,
      4.66004175e-03, 4.54128893e-05, 3.22041542e-02, 1.22722987e-02, 4.33504397e-02,
      8.84406585e-03, 6.95609731e-03, 5.03189910e-05, 1.01895957e-05, 7.39997371e-02,
      1.97773762e-02, 7.86234234e-02, 1.35861276e-02, 8.84406585e-02, 1.22722987e-01,
      4.07583827e-05, 8.05103855e-06, 2.98487222e-02, 9.90428699e-03, 6.95609731e-02,
      8.34358059e-02, 6.12231163e-03, 1.81148367e-05, 1.52214948e-05, 2.12597737e-05,
      6.53033575e-02, 5.03189910e-07, 5.35796616e-03, 9.90428699e-02, 7.86234234e-03,
      1.10460249e-01, 4.66004175e-02, 2.83044324e-05, 3.22041542e-05, 2.01275964e-06,
      1.13217730e-06, 6.12231163e-02, 5.35796616e-02, 1.49905306e-02, 1.25797477e-05,
      1.80831358e-02, 4.52870919e-06, 1.35861276e-01, 1.29180801e-01, 5.73164756e-02};
  return v;
}

std::vector<Scalar> synthetic_ascend(int T) {
  const Scalar lo = ascend_values().front();
  const Scalar hi = ascend_values().back();
  std::vector<Scalar> out(T);
  if (T == 1) {
    out[0] = hi;
    return out;
  }
  const Scalar ratio = std::pow(hi / lo, 1.0 / static_cast<Scalar>(T - 1));
  Scalar v = lo;
  for (int t = 0; t < T; ++t) {
    out[t] = v;
    v *= ratio;
  }
  out[T - 1] = hi;
  return out;
}

std::vector<Scalar> fixed_permutation(std::vector<Scalar> values) {
  std::uint64_t state = 0x5eed5eed5eed5eedULL;
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = splitmix64(state) % i;
    std::swap(values[i - 1], values[j]);
  }
  return values;
}

}  // namespace

void SensitivitySchedule::validate() const {
  for (Scalar v : values)
    if (v < 0.0 || !std::isfinite(v))
      throw std::invalid_argument("schedule values must be finite and >= 0");
}

PaperSchedules paper_schedules(int T) {
  PaperSchedules out;
  if (T == 60) {
    out.ascend = {ScheduleOrder::Ascending, ascend_values(), "ascend"};
    out.descend = {ScheduleOrder::Descending, descend_values(), "descend"};
    out.random = {ScheduleOrder::Random, random_values(), "random"};
    out.synthetic = false;
  } else {
    auto asc = synthetic_ascend(T);
    auto desc = asc;
    std::reverse(desc.begin(), desc.end());
    out.ascend = {ScheduleOrder::Ascending, asc, "ascend-synthetic"};
    out.descend = {ScheduleOrder::Descending, desc, "descend-synthetic"};
    out.random = {ScheduleOrder::Random, fixed_permutation(asc), "random-synthetic"};
    out.synthetic = true;
  }
  return out;
}

void write_schedule_assets(const std::string& dir) {
  std::filesystem::create_directories(dir);
  const PaperSchedules s = paper_schedules(60);
  KeyValueWriter manifest;
  for (const auto* sched : {&s.ascend, &s.descend, &s.random}) {
    std::string body;
    for (Scalar v : sched->values) {
      body += format_number(v);
      body += '\n';
    }
    const std::string path = dir + "/" + sched->name + ".txt";
    write_file(path, body);
    manifest.add(sched->name + "_fnv1a64", hex64(fnv1a64(body)));
  }
  write_file(dir + "/CHECKSUMS", manifest.str());
}

SensitivitySchedule load_schedule_file(const std::string& path) {
  const std::string body = read_file(path);
  SensitivitySchedule sched;
  sched.order = ScheduleOrder::Explicit;
  sched.name = path;
  std::istringstream in(body);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    sched.values.push_back(parse_number(line));
  }
  sched.validate();
  return sched;
}

ControlInstance build_stock_instance(const StockMarketConfig& cfg,
                                     const SensitivitySchedule& schedule) {
  if (cfg.L < 1) throw std::invalid_argument("L must be >= 1");
  if (static_cast<int>(schedule.values.size()) != cfg.T)
    throw std::invalid_argument("schedule length must equal T");
  schedule.validate();

  const int d = 2 * cfg.L;
  ControlInstance inst;
  inst.system.dx = d;
  inst.system.du = d;
  inst.system.A = Matrix::Identity(d, d);
  inst.system.B = Matrix::Identity(d, d);
  inst.system.K = Matrix::Zero(d, d);
  inst.system.T = cfg.T;
  inst.system.H = 1;
  inst.system.kappa = cfg.kappa;
  inst.system.gamma = cfg.gamma;

  inst.noise = NoiseModel::stacked_uniform(cfg.L, cfg.noise_lo, cfg.noise_hi);
  inst.system.W = inst.noise.w_bound();
  inst.system.sigma2 = inst.noise.sigma2();

  StockVolParams vol;
  vol.L = cfg.L;
  vol.T = cfg.T;
  vol.r = cfg.r;
  vol.vol_std = cfg.vol_std;
  vol.vol_clip = cfg.vol_clip;
  vol.row_scale = 1.0;
  std::vector<Scalar> scaled = schedule.values;
  for (Scalar& v : scaled) v *= cfg.sens_scale;
  inst.map = PerturbationMap::stock_volatility(vol, scaled);

  inst.cost = CostModel::stock_risk(cfg.L);

  // unit initial investment per stock, zero mean-shift block
  inst.x0 = Vector::Zero(d);
  inst.x0.tail(cfg.L).setOnes();
  inst.system.x0_bound = inst.x0.norm();

  Matrix uniform = Matrix::Constant(cfg.L, cfg.L, 1.0 / static_cast<Scalar>(cfg.L));
  inst.policy = Policy::stock(uniform, FeasibleSet::simplex(1.0));
  return inst;
}

Matrix sample_volatility_perturbation(const StockMarketConfig& cfg,
                                      const SensitivitySchedule& schedule, const Policy& policy,
                                      int t, SeedPair seed) {
  const ControlInstance inst = build_stock_instance(cfg, schedule);
  Rng rng(seed, Stream::Perturbation);
  return inst.map.sample(t, policy, rng);
}

Scalar stock_growth_lower_bound(const StockMarketConfig& cfg) {
  const Scalar c = cfg.vol_clip;
  const Scalar g_at = [&](Scalar v) {
    return (cfg.r - 0.5 * v * v) / static_cast<Scalar>(cfg.T) +
           v / std::sqrt(static_cast<Scalar>(cfg.T));
  }(-c);
  return std::exp(g_at);
}

}  // namespace perfctl
