#include "opdyn/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "opdyn/mean_field.hpp"

namespace opdyn {

using nlohmann::json;

namespace {

// \int_0^1 s cos^2(5s) ds in closed form.
double s_cos2_mass() { return 0.25 + 0.5 * (std::sin(10.0) / 10.0 + (std::cos(10.0) - 1.0) / 100.0); }

// \int_0^1 (s^{1/4} cos^2(5s) + 0.2 s^2 + 0.5) ds. The s^{1/4} term is integrated
// after s = u^4, which turns it into the smooth \int_0^1 4 u^4 cos^2(5 u^4) du.
double quarter_bump_mass() {
  const int n = 20000;
  const double h = 1.0 / n;
  double acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double u = k * h;
    const double c = std::cos(5.0 * u * u * u * u);
    const double f = 4.0 * u * u * u * u * c * c;
    acc += f * ((k == 0 || k == n) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0));
  }
  return acc * h / 3.0 + 0.2 / 3.0 + 0.5;
}

const std::set<std::string> kPositionBuiltins{"sin2_4s", "arccos"};
const std::set<std::string> kWeightBuiltins{"s_cos2_5s_normalized", "quarter_cos_bump"};

ScalarProfile table_profile(const std::vector<double>& t, double scale) {
  return [t, scale](double s) {
    const auto n = static_cast<Index>(t.size());
    auto i = static_cast<Index>(std::floor(s * static_cast<double>(n)));
    i = std::clamp<Index>(i, 0, n - 1);
    return scale * t[static_cast<std::size_t>(i)];
  };
}

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError("scenario field '" + field + "': " + what);
}

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) fail(where.empty() ? key : where + "." + key, "unknown field");
  }
}

const json& require(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) fail(where.empty() ? std::string(key) : where + "." + key, "missing");
  return obj.at(key);
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(field, "must be finite");
  return d;
}

long integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) fail(field, "must be an integer");
  return v.get<long>();
}

std::string text(const json& v, const std::string& field) {
  if (!v.is_string()) fail(field, "must be a string");
  return v.get<std::string>();
}

ProfileSpec parse_profile(const json& v, const std::string& field, const std::set<std::string>& builtins) {
  ProfileSpec p;
  if (v.is_string()) {
    p.builtin = v.get<std::string>();
    if (!builtins.count(p.builtin)) fail(field, "unknown built-in '" + p.builtin + "'");
  } else if (v.is_number()) {
    p.is_constant = true;
    p.constant = number(v, field);
  } else if (v.is_object()) {
    reject_unknown(v, field, {"constant", "table"});
    if (v.contains("constant") == v.contains("table")) fail(field, "give exactly one of 'constant' or 'table'");
    if (v.contains("constant")) {
      p.is_constant = true;
      p.constant = number(v.at("constant"), field + ".constant");
    } else {
      const json& t = v.at("table");
      if (!t.is_array() || t.empty()) fail(field + ".table", "must be a non-empty array");
      for (const auto& e : t) p.table.push_back(number(e, field + ".table"));
    }
  } else {
    fail(field, "must be a built-in name, a number, or an object");
  }
  return p;
}

}  // namespace

InteractionKernel Scenario::make_kernel() const {
  if (kernel.kind == "zero") return InteractionKernel::zero();
  if (kernel.kind == "linear") return InteractionKernel::linear();
  if (kernel.kind == "rational_radial") return InteractionKernel::rational_radial();
  if (kernel.kind == "compact_sine") return InteractionKernel::compact_sine(kernel.radius);
  fail("kernel.kind", "unknown kernel '" + kernel.kind + "'");
}

MassLaw Scenario::make_law() const {
  if (mass_law.kind == "zero") return MassLaw(ZeroLaw{});
  if (mass_law.kind == "group_influence") return MassLaw(GroupInfluenceLaw{make_kernel()});
  if (mass_law.kind == "leader_follower") {
    return MassLaw(LeaderFollowerLaw{mass_law.groups, mass_law.leader_fraction, mass_law.gain});
  }
  if (mass_law.kind == "psi_sk") {
    if (mass_law.skew_kernel != "sine_difference") {
      fail("mass_law.skew_kernel", "unknown built-in '" + mass_law.skew_kernel + "'");
    }
    SkewSymmetricLaw s;
    s.order = 1;
    s.dim = 1;
    s.name = "sine_difference";
    s.bound = 1.0;
    s.lipschitz = 2.0;
    s.kernel = [](std::span<const double> y) { return std::sin(y[1] - y[0]); };
    return MassLaw(std::move(s));
  }
  fail("mass_law.kind", "unknown law '" + mass_law.kind + "'");
}

ScalarProfile Scenario::x_profile() const {
  const ProfileSpec& p = initial.x;
  if (p.is_constant) {
    const double c = p.constant;
    return [c](double) { return c; };
  }
  if (!p.table.empty()) return table_profile(p.table, 1.0);
  if (p.builtin == "sin2_4s") {
    return [](double s) {
      const double v = std::sin(4.0 * s);
      return v * v;
    };
  }
  if (p.builtin == "arccos") return [](double s) { return std::acos(2.0 * s - 1.0) / std::numbers::pi; };
  fail("initial.x", "unknown built-in '" + p.builtin + "'");
}

ScalarProfile Scenario::m_profile() const {
  const ProfileSpec& p = initial.m;
  if (p.is_constant) return [](double) { return 1.0; };
  if (!p.table.empty()) {
    double mean = 0.0;
    for (double v : p.table) mean += v;
    mean /= static_cast<double>(p.table.size());
    if (!(mean > 0.0)) fail("initial.m.table", "must have positive mean");
    return table_profile(p.table, 1.0 / mean);
  }
  if (p.builtin == "s_cos2_5s_normalized") {
    const double z = s_cos2_mass();
    return [z](double s) {
      const double c = std::cos(5.0 * s);
      return s * c * c / z;
    };
  }
  if (p.builtin == "quarter_cos_bump") {
    const double z = quarter_bump_mass();
    return [z](double s) {
      const double c = std::cos(5.0 * s);
      return (std::pow(s, 0.25) * c * c + 0.2 * s * s + 0.5) / z;
    };
  }
  fail("initial.m", "unknown built-in '" + p.builtin + "'");
}

Scenario parse_scenario(const std::string& text_in) {
  json j;
  try {
    j = json::parse(text_in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  reject_unknown(j, "", {"name", "dimension", "kernel", "mass_law", "initial", "T", "dt", "N_list", "pde",
                         "tolerances"});
  Scenario sc;
  sc.name = text(require(j, "", "name"), "name");
  if (sc.name.empty() || sc.name.find_first_of("/\\ ") != std::string::npos) {
    fail("name", "must be a non-empty file-name-safe string");
  }
  if (j.contains("dimension")) sc.dimension = integer(j.at("dimension"), "dimension");

  const json& k = require(j, "", "kernel");
  if (!k.is_object()) fail("kernel", "must be an object");
  reject_unknown(k, "kernel", {"kind", "radius"});
  sc.kernel.kind = text(require(k, "kernel", "kind"), "kernel.kind");
  if (k.contains("radius")) sc.kernel.radius = number(k.at("radius"), "kernel.radius");

  const json& l = require(j, "", "mass_law");
  if (!l.is_object()) fail("mass_law", "must be an object");
  reject_unknown(l, "mass_law", {"kind", "groups", "leader_fraction", "gain", "skew_kernel"});
  sc.mass_law.kind = text(require(l, "mass_law", "kind"), "mass_law.kind");
  if (l.contains("groups")) sc.mass_law.groups = static_cast<int>(integer(l.at("groups"), "mass_law.groups"));
  if (l.contains("leader_fraction")) {
    sc.mass_law.leader_fraction = number(l.at("leader_fraction"), "mass_law.leader_fraction");
  }
  if (l.contains("gain")) sc.mass_law.gain = number(l.at("gain"), "mass_law.gain");
  if (l.contains("skew_kernel")) sc.mass_law.skew_kernel = text(l.at("skew_kernel"), "mass_law.skew_kernel");

  const json& ini = require(j, "", "initial");
  if (!ini.is_object()) fail("initial", "must be an object");
  reject_unknown(ini, "initial", {"x", "m", "agents"});
  sc.initial.x = parse_profile(require(ini, "initial", "x"), "initial.x", kPositionBuiltins);
  sc.initial.m = parse_profile(require(ini, "initial", "m"), "initial.m", kWeightBuiltins);
  if (ini.contains("agents")) sc.initial.agents = integer(ini.at("agents"), "initial.agents");

  sc.T = number(require(j, "", "T"), "T");
  sc.dt = number(require(j, "", "dt"), "dt");
  const json& nl = require(j, "", "N_list");
  if (!nl.is_array() || nl.empty()) fail("N_list", "must be a non-empty array");
  for (const auto& v : nl) sc.N_list.push_back(integer(v, "N_list"));

  if (j.contains("pde")) {
    const json& p = j.at("pde");
    if (!p.is_object()) fail("pde", "must be an object");
    reject_unknown(p, "pde", {"padding", "n", "cfl"});
    if (p.contains("padding")) sc.pde.padding = number(p.at("padding"), "pde.padding");
    if (p.contains("n")) sc.pde.n = integer(p.at("n"), "pde.n");
    if (p.contains("cfl")) sc.pde.cfl = number(p.at("cfl"), "pde.cfl");
  }
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    if (!t.is_object()) fail("tolerances", "must be an object");
    Tolerances& tol = sc.tolerances;
    const std::pair<const char*, double*> fields[] = {
        {"mass_micro_per_agent", &tol.mass_micro_per_agent},
        {"mass_graph", &tol.mass_graph},
        {"mass_pde", &tol.mass_pde},
        {"indistinguishability", &tol.indistinguishability},
        {"equal_position", &tol.equal_position},
        {"growth_slack_micro", &tol.growth_slack_micro},
        {"growth_slack_graph", &tol.growth_slack_graph},
        {"sweep_slack", &tol.sweep_slack},
        {"final_error_factor", &tol.final_error_factor},
        {"equivalence", &tol.equivalence},
        {"subordination_w1", &tol.subordination_w1},
        {"weak_residual_drop", &tol.weak_residual_drop},
    };
    for (const auto& [key, _] : t.items()) {
      bool known = false;
      for (const auto& [name, dst] : fields) {
        if (key == name) {
          *dst = number(t.at(key), "tolerances." + key);
          if (!(*dst >= 0.0)) fail("tolerances." + key, "must be non-negative");
          known = true;
        }
      }
      if (!known) fail("tolerances." + key, "unknown field");
    }
  }
  validate_scenario(sc);
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

void validate_scenario(const Scenario& sc) {
  if (sc.dimension != 1) fail("dimension", "the built-in initial data are one-dimensional; only d = 1 is supported");
  if (sc.kernel.kind == "compact_sine" && !(sc.kernel.radius > 0.0)) fail("kernel.radius", "must be positive");
  if (sc.kernel.kind != "compact_sine" && sc.kernel.radius != 0.0) fail("kernel.radius", "only for compact_sine");
  (void)sc.make_kernel();
  if (!(sc.T >= 0.0)) fail("T", "must be >= 0");
  if (!(sc.dt > 0.0)) fail("dt", "must be positive");
  if (sc.initial.agents < 1) fail("initial.agents", "must be >= 1");
  if (sc.pde.n < 2) fail("pde.n", "must be >= 2");
  if (!(sc.pde.padding >= 0.0)) fail("pde.padding", "must be >= 0");
  if (!(sc.pde.cfl > 0.0 && sc.pde.cfl <= 1.0)) fail("pde.cfl", "must lie in (0, 1]");
  const MassLaw law = sc.make_law();
  std::vector<Index> seen;
  for (Index n : sc.N_list) {
    if (n < 1) fail("N_list", "entries must be >= 1");
    if (!seen.empty() && n <= seen.back()) fail("N_list", "entries must be strictly increasing");
    seen.push_back(n);
    try {
      law.validate_grid(n);
    } catch (const ConfigError& e) {
      fail("N_list", e.what());
    }
  }
  try {
    law.validate_grid(sc.initial.agents);
  } catch (const ConfigError& e) {
    fail("initial.agents", e.what());
  }
}

AgentEnsemble initial_ensemble(const Scenario& sc, Index n) {
  sc.make_law().validate_grid(n);
  const VectorXd x = project_discrete(sc.x_profile(), n);
  VectorXd m = project_discrete(sc.m_profile(), n);
  const double sum = m.sum();
  if (!(sum > 0.0)) throw InputError("initial weights have non-positive total");
  m *= static_cast<double>(n) / sum;
  return AgentEnsemble(MatrixXd(x.transpose()), m, 0.0);
}

FieldPair initial_fields(const Scenario& sc, Index n, Quadrature rule) {
  if (rule == Quadrature::rectangle_grid_aligned) {
    const AgentEnsemble e = initial_ensemble(sc, n);
    return embed(e);
  }
  const auto xp = sc.x_profile();
  const auto mp = sc.m_profile();
  VectorXd x(n), m(n);
  for (Index i = 0; i < n; ++i) {
    x[i] = xp(cell_center(i, n));
    m[i] = mp(cell_center(i, n));
  }
  m /= quadrature_weights(n, rule).dot(m);
  return FieldPair(GridFunction::scalar(x), GridFunction::scalar(m), 0.0);
}

namespace {

constexpr Index kFineFactor = 64;

struct FineSamples {
  VectorXd x, m;
};

FineSamples fine_samples(const Scenario& sc) {
  const Index n = kFineFactor * sc.pde.n;
  const auto xp = sc.x_profile();
  const auto mp = sc.m_profile();
  FineSamples f{VectorXd(n), VectorXd(n)};
  for (Index i = 0; i < n; ++i) {
    f.x[i] = xp(cell_center(i, n));
    f.m[i] = mp(cell_center(i, n));
  }
  f.m *= static_cast<double>(n) / f.m.sum();
  return f;
}

}  // namespace

std::pair<double, double> pde_domain(const Scenario& sc) {
  const FineSamples f = fine_samples(sc);
  return {f.x.minCoeff() - sc.pde.padding, f.x.maxCoeff() + sc.pde.padding};
}

DensityGrid initial_density(const Scenario& sc) {
  const FineSamples f = fine_samples(sc);
  const double lo = f.x.minCoeff() - sc.pde.padding;
  const double hi = f.x.maxCoeff() + sc.pde.padding;
  const ParticleMeasure mu0(MatrixXd(f.x.transpose()), f.m, 1.0 / static_cast<double>(f.x.size()));
  DensityGrid dg = bin_density(mu0, lo, hi, sc.pde.n, 0.0);
  return dg;
}

}  // namespace opdyn
