#include "perfctl/config.hpp"

#include <set>
#include <stdexcept>

#include <json.hpp>

#include "perfctl/io.hpp"

namespace perfctl {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& required,
                  const std::set<std::string>& optional = {}) {
  if (!obj.is_object()) throw std::invalid_argument(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!required.count(key) && !optional.count(key))
      throw std::invalid_argument("unknown key '" + key + "' in " + where);
  }
  for (const auto& key : required)
    if (!obj.contains(key)) throw std::invalid_argument(where + " is missing '" + key + "'");
}

Matrix parse_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw std::invalid_argument(where + " must be a 2-d array");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols)
      throw std::invalid_argument(where + " has ragged rows");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[i][k].get<Scalar>();
  }
  return m;
}

Vector parse_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw std::invalid_argument(where + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<Scalar>();
  return v;
}

std::vector<Scalar> parse_schedule(const json& j, int T, const std::string& where) {
  std::vector<Scalar> out;
  if (j.is_number()) {
    out.assign(T, j.get<Scalar>());
  } else if (j.is_array()) {
    for (const auto& v : j) out.push_back(v.get<Scalar>());
    if (static_cast<int>(out.size()) != T)
      throw std::invalid_argument(where + " must have length T");
  } else {
    throw std::invalid_argument(where + " must be a number or array");
  }
  return out;
}

NoiseModel parse_noise(const json& j) {
  require_keys(j, "noise", {"kind"}, {"lo", "hi", "atoms", "probs", "dim", "L"});
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "zero") return NoiseModel::zero(j.at("dim").get<int>());
  if (kind == "uniform_box")
    return NoiseModel::uniform_box(parse_vector(j.at("lo"), "noise.lo"),
                                   parse_vector(j.at("hi"), "noise.hi"));
  if (kind == "discrete") {
    std::vector<Vector> atoms;
    for (const auto& a : j.at("atoms")) atoms.push_back(parse_vector(a, "noise.atoms[]"));
    std::vector<Scalar> probs;
    for (const auto& p : j.at("probs")) probs.push_back(p.get<Scalar>());
    return NoiseModel::discrete(std::move(atoms), std::move(probs));
  }
  if (kind == "stacked_uniform")
    return NoiseModel::stacked_uniform(j.at("L").get<int>(), j.at("lo").get<Scalar>(),
                                       j.at("hi").get<Scalar>());
  throw std::invalid_argument("unknown noise kind '" + kind + "'");
}

PerturbationMap parse_perturbation(const json& j, int dx, int T) {
  require_keys(j, "perturbation", {"kind"}, {"amplitude", "direction", "atoms", "probs"});
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "null") return PerturbationMap::null_map(dx, T);
  if (kind == "scaled_factor") {
    std::vector<Matrix> atoms;
    for (const auto& a : j.at("atoms")) atoms.push_back(parse_matrix(a, "perturbation.atoms[]"));
    std::vector<Scalar> probs;
    for (const auto& p : j.at("probs")) probs.push_back(p.get<Scalar>());
    return PerturbationMap::scaled_factor(
        T, parse_schedule(j.at("amplitude"), T, "perturbation.amplitude"),
        parse_matrix(j.at("direction"), "perturbation.direction"), std::move(atoms),
        std::move(probs));
  }
  throw std::invalid_argument("unknown perturbation kind '" + kind + "'");
}

CostModel parse_cost(const json& j) {
  require_keys(j, "cost", {"kind"}, {"Qx", "Ru", "L"});
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "quadratic")
    return CostModel::quadratic(parse_matrix(j.at("Qx"), "cost.Qx"),
                                parse_matrix(j.at("Ru"), "cost.Ru"));
  if (kind == "stock_risk") return CostModel::stock_risk(j.at("L").get<int>());
  throw std::invalid_argument("unknown cost kind '" + kind + "'");
}

}  // namespace

LoadedConfig load_config_string(const std::string& text) {
  json root = json::parse(text);
  require_keys(root, "config", {"system", "noise", "perturbation", "cost", "policy", "x0"},
               {"rsgd", "rrm", "regime"});

  LoadedConfig out;
  ControlInstance& inst = out.instance;

  const json& sys = root.at("system");
  require_keys(sys, "system", {"A", "B", "K", "T", "H", "kappa", "gamma"});
  inst.system.A = parse_matrix(sys.at("A"), "system.A");
  inst.system.B = parse_matrix(sys.at("B"), "system.B");
  inst.system.K = parse_matrix(sys.at("K"), "system.K");
  inst.system.dx = static_cast<int>(inst.system.A.rows());
  inst.system.du = static_cast<int>(inst.system.B.cols());
  inst.system.T = sys.at("T").get<int>();
  inst.system.H = sys.at("H").get<int>();
  inst.system.kappa = sys.at("kappa").get<Scalar>();
  inst.system.gamma = sys.at("gamma").get<Scalar>();

  inst.noise = parse_noise(root.at("noise"));
  inst.noise.validate();
  inst.system.W = inst.noise.w_bound();
  inst.system.sigma2 = inst.noise.sigma2();

  inst.map = parse_perturbation(root.at("perturbation"), inst.system.dx, inst.system.T);
  inst.map.validate();

  inst.cost = parse_cost(root.at("cost"));

  inst.x0 = parse_vector(root.at("x0"), "x0");
  inst.system.x0_bound = inst.x0.norm();

  const json& pol = root.at("policy");
  require_keys(pol, "policy", {"feasible", "value", "H"}, {"M0"});
  const std::string feasible = pol.at("feasible").get<std::string>();
  FeasibleSet set;
  if (feasible == "frobenius_ball")
    set = FeasibleSet::ball(pol.at("value").get<Scalar>());
  else if (feasible == "row_simplex")
    set = FeasibleSet::simplex(pol.at("value").get<Scalar>());
  else
    throw std::invalid_argument("unknown feasible set '" + feasible + "'");
  const int H = pol.at("H").get<int>();
  if (H != inst.system.H) throw std::invalid_argument("policy.H must match system.H");
  Matrix m0 = Matrix::Zero(inst.system.du,
                           static_cast<Eigen::Index>(H) * inst.system.dx);
  inst.policy = Policy::dense(m0, H, set);
  if (pol.contains("M0")) {
    inst.policy.params = parse_matrix(pol.at("M0"), "policy.M0");
    if (inst.policy.params.rows() != inst.system.du ||
        inst.policy.params.cols() != static_cast<Eigen::Index>(H) * inst.system.dx)
      throw std::invalid_argument("policy.M0 has the wrong shape");
  } else {
    inst.policy.params = feasible_center(inst.policy);
  }
  if (!inst.policy.is_feasible(1e-9))
    throw std::invalid_argument("policy.M0 is not feasible");

  inst.system.validate();

  if (root.contains("rsgd")) {
    const json& r = root.at("rsgd");
    require_keys(r, "rsgd", {}, {"N", "log_every", "batch", "plan", "cost_samples"});
    if (r.contains("N")) out.run.rsgd_N = r.at("N").get<long>();
    if (r.contains("log_every")) out.run.rsgd_log_every = r.at("log_every").get<int>();
    if (r.contains("batch")) out.run.rsgd_batch = r.at("batch").get<int>();
    if (r.contains("cost_samples")) out.run.cost_samples = r.at("cost_samples").get<long>();
    if (r.contains("plan")) {
      const json& p = r.at("plan");
      require_keys(p, "rsgd.plan", {"kind"}, {"phi1", "phi2", "eta", "etas"});
      const std::string kind = p.at("kind").get<std::string>();
      if (kind == "auto") {
        out.run.plan_kind = RunSettings::PlanKind::Auto;
      } else if (kind == "diminishing") {
        out.run.plan_kind = RunSettings::PlanKind::Diminishing;
        out.run.phi1 = p.at("phi1").get<Scalar>();
        out.run.phi2 = p.at("phi2").get<Scalar>();
      } else if (kind == "constant") {
        out.run.plan_kind = RunSettings::PlanKind::Constant;
        out.run.eta = p.at("eta").get<Scalar>();
      } else if (kind == "custom") {
        out.run.plan_kind = RunSettings::PlanKind::Custom;
        for (const auto& e : p.at("etas")) out.run.etas.push_back(e.get<Scalar>());
      } else {
        throw std::invalid_argument("unknown plan kind '" + kind + "'");
      }
    }
  }
  if (root.contains("rrm")) {
    const json& r = root.at("rrm");
    require_keys(r, "rrm", {}, {"max_iters", "tol"});
    if (r.contains("max_iters")) out.run.rrm_max_iters = r.at("max_iters").get<int>();
    if (r.contains("tol")) out.run.rrm_tol = r.at("tol").get<Scalar>();
  }
  if (root.contains("regime")) {
    const json& r = root.at("regime");
    require_keys(r, "regime", {"hint"}, {"zeta"});
    const std::string hint = r.at("hint").get<std::string>();
    if (hint == "stable")
      out.run.regime = RegimeHint::AlmostSurelyStable;
    else if (hint == "unstable")
      out.run.regime = RegimeHint::AlmostSurelyUnstable;
    else if (hint == "unknown")
      out.run.regime = RegimeHint::Unknown;
    else
      throw std::invalid_argument("unknown regime hint '" + hint + "'");
    if (r.contains("zeta")) out.run.zeta = r.at("zeta").get<Scalar>();
  }

  out.canonical = root.dump();
  return out;
}

LoadedConfig load_config_file(const std::string& path) {
  return load_config_string(read_file(path));
}

}  // namespace perfctl
