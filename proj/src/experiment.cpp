#include "heis/experiment.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace heis::cli {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::string> split_id(const std::string& id) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(id);
  while (std::getline(in, cur, ':')) parts.push_back(cur);
  if (parts.empty()) parts.push_back("");
  return parts;
}

double to_double(const std::string& s, const std::string& id) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty())
    throw std::invalid_argument("bad number '" + s + "' in id '" + id + "'");
  return v;
}

// Parsed "name:a:b" with an arity check.
struct Id {
  std::string name;
  std::vector<double> args;
};
Id parse_id(const std::string& id, const std::vector<std::pair<std::string, int>>& known,
            const char* what) {
  const auto parts = split_id(id);
  for (const auto& [name, arity] : known) {
    if (parts[0] != name) continue;
    if (static_cast<int>(parts.size()) - 1 != arity)
      throw std::invalid_argument(std::string(what) + " '" + name + "' takes " +
                                  std::to_string(arity) + " argument(s)");
    Id r{name, {}};
    for (std::size_t i = 1; i < parts.size(); ++i) r.args.push_back(to_double(parts[i], id));
    return r;
  }
  throw std::invalid_argument("unknown " + std::string(what) + " id '" + id + "'");
}

Field radial_power(const std::string& label, double e, double cut = 0.0) {
  std::vector<double> br;
  if (cut > 0.0) br.push_back(cut);
  return Field::radial(label, [e, cut](double r) -> Complex {
    return r < cut ? Complex(0.0) : Complex(std::pow(r, e));
  }, br);
}

std::string key(const std::string& path, const std::string& k) {
  return path.empty() ? k : path + "." + k;
}

double num(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  throw ConfigError(path, "expected a number");
}

std::string str(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<int>();
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
}

void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& keys) {
  for (const auto& [k, v] : obj.items())
    if (!keys.count(k)) throw ConfigError(key(path, k), "unknown key");
}

template <class F>
auto validated(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
}

Expression::Vars params_from(const json& j, const std::string& path) {
  require_object(j, path);
  Expression::Vars v;
  for (const auto& [k, x] : j.items()) v[k] = num(x, key(path, k));
  return v;
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(num(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

bool needs_constant(CheckKind k) {
  return k != CheckKind::weights && k != CheckKind::norm;
}

CheckKind kind_from_string(const std::string& s, const std::string& path) {
  for (auto k : {CheckKind::constant, CheckKind::sharpness, CheckKind::boundedness,
                 CheckKind::lower_bound, CheckKind::divergence, CheckKind::weights,
                 CheckKind::norm})
    if (to_string(k) == s) return k;
  throw ConfigError(path, "unknown check kind '" + s + "'");
}

}  // namespace

// ---- id catalogs ----------------------------------------------------------------

RadialKernel kernel_from_id(const std::string& id, int Q) {
  const Id k = parse_id(id, {{"hardy", 0}, {"adjoint_hardy", 0}, {"indicator", 2}, {"power", 3},
                             {"exp_decay", 1}},
                        "kernel");
  if (k.name == "hardy") return RadialKernel::hardy(Q);
  if (k.name == "adjoint_hardy") return RadialKernel::adjoint_hardy();
  if (k.name == "indicator") return RadialKernel::indicator_power(1.0, 0.0, k.args[0], k.args[1]);
  if (k.name == "power") return RadialKernel::indicator_power(1.0, k.args[0], k.args[1], k.args[2]);
  return RadialKernel::exp_decay(k.args[0]);
}

SphereSymbol omega_from_id(const std::string& id) {
  const Id k = parse_id(id, {{"one", 0}, {"affine", 3}, {"phase", 1}}, "omega");
  if (k.name == "one") return SphereSymbol::one();
  if (k.name == "affine")
    return SphereSymbol::affine(k.args[0], k.args[1], static_cast<int>(k.args[2]));
  return SphereSymbol::phase(static_cast<int>(k.args[0]));
}

Field field_from_id(const std::string& id) {
  const Id k = parse_id(id, {{"zero", 0}, {"power", 1}, {"power_cut", 2}, {"ball", 1},
                             {"shell", 2}, {"gauss", 0}, {"exp", 0}, {"power_affine", 1}},
                        "field");
  const auto& a = k.args;
  if (k.name == "zero") return Field().with_label(id);
  if (k.name == "power") return radial_power(id, a[0]);
  if (k.name == "power_cut") return radial_power(id, a[0], a[1]);
  if (k.name == "ball")
    return Field::radial(id, [R = a[0]](double r) { return r <= R ? Complex(1.0) : 0.0; }, {a[0]});
  if (k.name == "shell")
    return Field::radial(id, [lo = a[0], hi = a[1]](double r) {
      return r > lo && r <= hi ? Complex(1.0) : 0.0;
    }, {a[0], a[1]});
  if (k.name == "gauss") return Field::radial(id, [](double r) { return Complex(std::exp(-r * r)); });
  if (k.name == "exp") return Field::radial(id, [](double r) { return Complex(std::exp(-r)); });
  return Field::separable(id, [e = a[0]](double r) { return Complex(std::pow(r, e)); },
                          [](const HPoint& y) { return Complex(1.0 + 0.5 * y[0]); });
}

Field symbol_from_id(const std::string& id) {
  const Id k = parse_id(id, {{"constant", 1}, {"log_hnorm", 0}, {"bump", 0}, {"power", 1}},
                        "symbol");
  if (k.name == "constant") return Field::constant(k.args[0], id);
  if (k.name == "log_hnorm")
    return Field::radial(id, [](double r) { return Complex(std::log(r)); });
  if (k.name == "bump") return Field::radial(id, [](double r) { return Complex(std::exp(-r * r)); });
  return Field::radial(id, [s = k.args[0]](double r) { return Complex(std::pow(r, s)); });
}

Weight weight_from_id(const std::string& id) {
  const Id k = parse_id(id, {{"unit", 0}, {"power", 1}}, "weight");
  return k.name == "unit" ? Weight::unit() : Weight::power(k.args[0]);
}

SpaceSpec space_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"kind", "q", "p", "alpha", "lambda", "variant"});
  if (!j.contains("kind")) throw ConfigError(key(path, "kind"), "missing");
  SpaceSpec s;
  s.kind = validated(key(path, "kind"),
                     [&] { return space_kind_from_string(str(j["kind"], key(path, "kind"))); });
  auto get = [&](const char* k, double& out) {
    if (j.contains(k)) out = num(j[k], key(path, k));
  };
  get("q", s.q);
  get("p", s.p);
  get("alpha", s.alpha);
  get("lambda", s.lambda);
  if (j.contains("variant")) {
    const auto v = str(j["variant"], key(path, "variant"));
    if (v == "dyadic") s.variant = HerzParams::Variant::dyadic;
    else if (v == "weighted") s.variant = HerzParams::Variant::weighted;
    else throw ConfigError(key(path, "variant"), "expected dyadic or weighted");
  }
  validated(path, [&] {
    switch (s.kind) {
      case SpaceSpec::Kind::lebesgue:
        if (!(s.q > 0)) throw std::invalid_argument("q must be > 0");
        break;
      case SpaceSpec::Kind::central_morrey: CentralMorreyParams{s.q, s.lambda}.validate(); break;
      case SpaceSpec::Kind::herz: HerzParams{s.alpha, s.p, s.q, s.variant}.validate(); break;
      case SpaceSpec::Kind::morrey_herz:
        MorreyHerzParams{s.alpha, s.lambda, s.p, s.q}.validate();
        break;
    }
    return 0;
  });
  return s;
}

std::string to_string(CheckKind k) {
  switch (k) {
    case CheckKind::constant: return "constant";
    case CheckKind::sharpness: return "sharpness";
    case CheckKind::boundedness: return "boundedness";
    case CheckKind::lower_bound: return "lower_bound";
    case CheckKind::divergence: return "divergence";
    case CheckKind::weights: return "weights";
    case CheckKind::norm: return "norm";
  }
  return "?";
}

// ---- config parsing ----------------------------------------------------------------

Experiment parse_experiment(const json& config) {
  require_object(config, "");
  reject_unknown(config, "", {"name", "group", "quadrature", "kernel", "omega", "weight", "symbol",
                              "spaces", "params", "truncation", "checks"});
  Experiment ex;
  ex.config = config;
  ex.name = config.contains("name") ? str(config["name"], "name") : "experiment";

  if (config.contains("group")) {
    const auto& g = config["group"];
    require_object(g, "group");
    reject_unknown(g, "group", {"n"});
    if (g.contains("n")) ex.n = integer(g["n"], "group.n");
    if (ex.n < 1) throw ConfigError("group.n", "must be >= 1");
  }
  const int Q = 2 * ex.n + 2;

  if (config.contains("quadrature")) {
    const auto& q = config["quadrature"];
    require_object(q, "quadrature");
    reject_unknown(q, "quadrature", {"sphere_resolution", "radial_nodes", "mc_seed", "mc_samples"});
    if (q.contains("sphere_resolution"))
      ex.sphere_resolution = integer(q["sphere_resolution"], "quadrature.sphere_resolution");
    if (q.contains("radial_nodes")) ex.radial_nodes = integer(q["radial_nodes"], "quadrature.radial_nodes");
    if (q.contains("mc_seed")) {
      if (!q["mc_seed"].is_number_unsigned()) throw ConfigError("quadrature.mc_seed", "expected a non-negative integer");
      ex.mc_seed = q["mc_seed"].get<std::uint64_t>();
    }
    if (q.contains("mc_samples")) ex.mc_samples = integer(q["mc_samples"], "quadrature.mc_samples");
    if (ex.sphere_resolution < 0) throw ConfigError("quadrature.sphere_resolution", "must be >= 0");
    if (ex.radial_nodes < 4) throw ConfigError("quadrature.radial_nodes", "must be >= 4");
    if (ex.mc_samples < 1) throw ConfigError("quadrature.mc_samples", "must be >= 1");
  }

  std::string kernel = "hardy", omega = "one", symbol;
  if (config.contains("kernel")) kernel = str(config["kernel"], "kernel");
  if (config.contains("omega")) omega = str(config["omega"], "omega");
  if (config.contains("symbol")) symbol = str(config["symbol"], "symbol");
  validated("kernel", [&] { return kernel_from_id(kernel, Q); });
  validated("omega", [&] { return omega_from_id(omega); });
  if (!symbol.empty()) validated("symbol", [&] { return symbol_from_id(symbol); });

  if (config.contains("weight")) {
    const auto& w = config["weight"];
    if (w.is_string()) {
      const auto id = w.get<std::string>();
      validated("weight", [&] { return weight_from_id(id); });
      ex.gamma = id == "unit" ? 0.0 : to_double(split_id(id)[1], id);
    } else {
      require_object(w, "weight");
      reject_unknown(w, "weight", {"gamma"});
      if (w.contains("gamma")) ex.gamma = num(w["gamma"], "weight.gamma");
    }
    if (!std::isfinite(ex.gamma)) throw ConfigError("weight.gamma", "must be finite");
  }

  std::optional<SpaceSpec> space_in, space_out;
  auto read_spaces = [](const json& s, const std::string& path, std::optional<SpaceSpec>& in,
                        std::optional<SpaceSpec>& out) {
    require_object(s, path);
    reject_unknown(s, path, {"in", "out"});
    if (s.contains("in")) in = space_from_json(s["in"], key(path, "in"));
    if (s.contains("out")) out = space_from_json(s["out"], key(path, "out"));
  };
  if (config.contains("spaces")) read_spaces(config["spaces"], "spaces", space_in, space_out);

  Expression::Vars shared;
  if (config.contains("params")) shared = params_from(config["params"], "params");

  if (config.contains("truncation")) {
    const auto& t = config["truncation"];
    require_object(t, "truncation");
    reject_unknown(t, "truncation", {"k_min", "k_max", "tail_tol", "radius_grid"});
    if (t.contains("k_min")) ex.truncation.k_min = integer(t["k_min"], "truncation.k_min");
    if (t.contains("k_max")) ex.truncation.k_max = integer(t["k_max"], "truncation.k_max");
    if (t.contains("tail_tol")) ex.truncation.tail_tol = num(t["tail_tol"], "truncation.tail_tol");
    if (t.contains("radius_grid"))
      ex.truncation.radius_grid = numbers(t["radius_grid"], "truncation.radius_grid");
    validated("truncation", [&] {
      ex.truncation.validate();
      return 0;
    });
  }

  const json checks = config.contains("checks") ? config["checks"] : json::array();
  if (!checks.is_array()) throw ConfigError("checks", "expected an array");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const std::string path = "checks[" + std::to_string(i) + "]";
    const json& c = checks[i];
    require_object(c, path);
    reject_unknown(c, path, {"id", "kind", "constant", "params", "kernel", "omega", "symbol",
                             "spaces", "expect", "tol", "family", "eps", "eps_schedule",
                             "target", "threshold", "battery", "margin", "p", "mc_samples",
                             "field", "space"});
    CheckConfig cc;
    if (!c.contains("id")) throw ConfigError(key(path, "id"), "missing");
    cc.id = str(c["id"], key(path, "id"));
    if (!seen.insert(cc.id).second) throw ConfigError(key(path, "id"), "duplicate check id '" + cc.id + "'");
    if (!c.contains("kind")) throw ConfigError(key(path, "kind"), "missing");
    cc.kind = kind_from_string(str(c["kind"], key(path, "kind")), key(path, "kind"));

    cc.kernel = c.contains("kernel") ? str(c["kernel"], key(path, "kernel")) : kernel;
    cc.omega = c.contains("omega") ? str(c["omega"], key(path, "omega")) : omega;
    cc.symbol = c.contains("symbol") ? str(c["symbol"], key(path, "symbol")) : symbol;
    const std::string kpath = c.contains("kernel") ? key(path, "kernel") : "kernel";
    const std::string opath = c.contains("omega") ? key(path, "omega") : "omega";
    const std::string spath = c.contains("symbol") ? key(path, "symbol") : "symbol";
    validated(kpath, [&] { return kernel_from_id(cc.kernel, Q); });
    validated(opath, [&] { return omega_from_id(cc.omega); });
    if (!cc.symbol.empty()) validated(spath, [&] { return symbol_from_id(cc.symbol); });

    cc.space_in = space_in;
    cc.space_out = space_out;
    if (c.contains("spaces")) read_spaces(c["spaces"], key(path, "spaces"), cc.space_in, cc.space_out);

    cc.params = shared;
    if (c.contains("params"))
      for (const auto& [k, v] : params_from(c["params"], key(path, "params"))) cc.params[k] = v;
    cc.params["Q"] = Q;
    if (!cc.params.count("gamma")) cc.params["gamma"] = ex.gamma;

    const CatalogEntry* entry = nullptr;
    if (needs_constant(cc.kind)) {
      if (!c.contains("constant")) throw ConfigError(key(path, "constant"), "missing");
      cc.constant_id = str(c["constant"], key(path, "constant"));
      entry = constant_catalog().find(cc.constant_id);
      if (!entry) throw ConfigError(key(path, "constant"), "unknown constant id '" + cc.constant_id + "'");
    } else if (c.contains("constant")) {
      throw ConfigError(key(path, "constant"), "not used by " + to_string(cc.kind) + " checks");
    }

    switch (cc.kind) {
      case CheckKind::constant: cc.tol = 1e-9; break;
      case CheckKind::sharpness: cc.tol = 0.02; break;
      case CheckKind::lower_bound: cc.tol = 0.05; break;
      case CheckKind::norm: cc.tol = 1e-6; break;
      default: break;
    }
    if (c.contains("tol")) cc.tol = num(c["tol"], key(path, "tol"));
    if (!(cc.tol >= 0)) throw ConfigError(key(path, "tol"), "must be >= 0");

    if (c.contains("expect")) {
      const auto& e = c["expect"];
      if (e.is_string() && e.get<std::string>() == "divergent") cc.expect_divergent = true;
      else cc.expect_value = num(e, key(path, "expect"));
    }
    if (c.contains("family"))
      cc.family = validated(key(path, "family"), [&] {
        return family_kind_from_string(str(c["family"], key(path, "family")));
      });
    if (c.contains("eps")) {
      const double e = num(c["eps"], key(path, "eps"));
      if (!(e > 0)) throw ConfigError(key(path, "eps"), "must be > 0");
      cc.eps = {e};
    }
    if (c.contains("eps_schedule")) {
      cc.eps = numbers(c["eps_schedule"], key(path, "eps_schedule"));
      if (cc.eps.empty()) throw ConfigError(key(path, "eps_schedule"), "must not be empty");
      for (std::size_t k = 0; k < cc.eps.size(); ++k) {
        if (!(cc.eps[k] > 0)) throw ConfigError(key(path, "eps_schedule"), "entries must be > 0");
        if (k > 0 && !(cc.eps[k] < cc.eps[k - 1]))
          throw ConfigError(key(path, "eps_schedule"), "must be strictly decreasing");
      }
    }
    if (c.contains("target")) {
      cc.target = str(c["target"], key(path, "target"));
      if (cc.target != "eigen_identity" && cc.target != "constant_times_omega_norm")
        throw ConfigError(key(path, "target"), "expected eigen_identity or constant_times_omega_norm");
    }
    if (c.contains("threshold")) cc.threshold = num(c["threshold"], key(path, "threshold"));
    if (c.contains("margin")) cc.margin = num(c["margin"], key(path, "margin"));
    if (c.contains("p")) cc.p = num(c["p"], key(path, "p"));
    if (c.contains("mc_samples")) cc.mc_samples = integer(c["mc_samples"], key(path, "mc_samples"));
    if (c.contains("battery")) {
      const auto& b = c["battery"];
      if (!b.is_array()) throw ConfigError(key(path, "battery"), "expected an array");
      for (std::size_t k = 0; k < b.size(); ++k) {
        const std::string bp = key(path, "battery") + "[" + std::to_string(k) + "]";
        const auto id = str(b[k], bp);
        validated(bp, [&] { return field_from_id(id); });
        cc.battery.push_back(id);
      }
    }
    if (c.contains("field")) {
      cc.field = str(c["field"], key(path, "field"));
      validated(key(path, "field"), [&] { return field_from_id(cc.field); });
    }
    if (c.contains("space")) cc.space_in = space_from_json(c["space"], key(path, "space"));

    // requirements per kind
    const bool uses_spaces = cc.kind == CheckKind::sharpness || cc.kind == CheckKind::boundedness ||
                             cc.kind == CheckKind::lower_bound || cc.kind == CheckKind::divergence;
    if (uses_spaces && (!cc.space_in || !cc.space_out))
      throw ConfigError(key(path, "spaces"), "input and output spaces are required");
    if (cc.kind == CheckKind::norm) {
      if (cc.field.empty()) throw ConfigError(key(path, "field"), "missing");
      if (!cc.space_in) throw ConfigError(key(path, "space"), "missing");
    }
    if (cc.kind == CheckKind::boundedness && cc.battery.empty())
      throw ConfigError(key(path, "battery"), "must list at least one field");
    if ((cc.kind == CheckKind::lower_bound || cc.kind == CheckKind::divergence) && cc.eps.empty())
      throw ConfigError(key(path, "eps_schedule"), "missing");
    if (cc.kind == CheckKind::sharpness && cc.family == ExtremalFamily::Kind::herz_eps &&
        cc.eps.size() != 1)
      throw ConfigError(key(path, "eps"), "herz_eps sharpness needs one eps");
    if (cc.kind == CheckKind::divergence) {
      if (cc.family != ExtremalFamily::Kind::morrey)
        throw ConfigError(key(path, "family"), "divergence checks use the morrey family");
      for (double e : cc.eps)
        if (!(e < 1.0)) throw ConfigError(key(path, "eps_schedule"), "entries must lie in (0, 1)");
    }
    if (entry && entry->op == "commutator" && cc.kind == CheckKind::boundedness && cc.symbol.empty())
      throw ConfigError(key(path, "symbol"), "commutator constants need a symbol b");
    if ((cc.kind == CheckKind::sharpness || cc.kind == CheckKind::lower_bound ||
         cc.kind == CheckKind::divergence) && entry && entry->op != "hausdorff")
      throw ConfigError(key(path, "constant"), "extremal checks apply to Hausdorff constants");
    ex.checks.push_back(std::move(cc));
  }
  return ex;
}

Experiment load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path + ": " + std::strerror(errno));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path + ": " + e.what());
  }
  return parse_experiment(j);
}

// ---- running -------------------------------------------------------------------------

bool CheckResult::failed() const {
  return verdict == "fail" || (verdict == "divergent" && !expected_divergence);
}

int RunReport::exit_code() const {
  for (const auto& c : checks)
    if (c.failed()) return 1;
  return 0;
}

Rules experiment_rules(const Experiment& ex) {
  return make_rules(geometry_constants(ex.n), ex.sphere_resolution, ex.radial_nodes);
}

namespace {

json row_json(const RatioRow& r) {
  return {{"label", r.label},
          {"input_norm", number_to_json(r.input_norm)},
          {"output_norm", number_to_json(r.output_norm)},
          {"ratio", number_to_json(r.ratio)},
          {"status", to_string(r.status)},
          {"excluded", r.excluded},
          {"note", r.note}};
}

json numbers_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number_to_json(x));
  return a;
}

ExtremalFamily family_for(const CheckConfig& c, const SphereSymbol& omega) {
  ExtremalFamily f;
  f.kind = c.family;
  f.Q = static_cast<int>(c.params.at("Q"));
  f.gamma = c.params.at("gamma");
  auto get = [&](const char* k, double def) {
    auto it = c.params.find(k);
    return it == c.params.end() ? def : it->second;
  };
  f.lambda = get("lambda", 0.0);
  f.alpha = get("alpha", 0.0);
  f.q = get("q", c.space_out ? c.space_out->q : 2.0);
  f.eps = c.eps.empty() ? 0.0 : c.eps.front();
  f.omega = omega;
  return f;
}

void fill_constant(CheckResult& r, const ConstantResult& C, double omega_norm) {
  r.constant_value = C.value;
  r.omega_norm = omega_norm;
  json pieces = json::array();
  for (const auto& p : C.pieces)
    pieces.push_back({{"value", number_to_json(p.value)}, {"status", to_string(p.status)}});
  r.details["constant"] = {{"status", to_string(C.status)},
                           {"pieces", pieces},
                           {"omega_exponent", number_to_json(C.omega_exponent)},
                           {"note", C.note}};
}

}  // namespace

CheckResult run_check(const Experiment& ex, const CheckConfig& c, const Rules& rules) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r;
  r.id = c.id;
  r.kind = to_string(c.kind);
  r.constant_id = c.constant_id;
  r.expected_divergence = c.expect_divergent;
  const GroupDims& dims = rules.dims();
  const Weight w = Weight::power(ex.gamma);

  try {
    const RadialKernel phi = kernel_from_id(c.kernel, dims.Q);
    const SphereSymbol omega = omega_from_id(c.omega);
    Expression::Vars params = c.params;
    std::optional<ConstantResult> C;
    double omega_norm = 1.0;
    if (needs_constant(c.kind)) {
      const CatalogEntry& entry = constant_catalog().at(c.constant_id);
      const bool wants_r = std::find(entry.params.begin(), entry.params.end(), "r_omega") !=
                           entry.params.end();
      if (wants_r && !params.count("r_omega"))
        params["r_omega"] = power_critical_index(params.at("gamma"), dims);
      C = compute_constant({c.constant_id, params}, phi);
      omega_norm = omega.norm(C->omega_exponent, *rules.sphere);
      fill_constant(r, *C, omega_norm);
      r.details["params"] = json::object();
      for (const auto& [k, v] : C->params) r.details["params"][k] = number_to_json(v);
    }
    const bool divergent = C && C->status == Status::divergent;

    switch (c.kind) {
      case CheckKind::constant: {
        if (divergent) {
          r.verdict = "divergent";
        } else if (c.expect_divergent) {
          r.verdict = "fail";
          r.note = "constant is finite but divergence was expected";
        } else if (c.expect_value) {
          const double e = *c.expect_value;
          const bool ok = std::abs(C->value - e) <= c.tol * std::max(std::abs(e), 1e-300);
          r.bound = e;
          r.verdict = ok ? "pass" : "fail";
          if (!ok) r.note = "expected " + std::to_string(e);
        } else {
          r.verdict = C->status == Status::ok ? "pass" : "inconclusive";
        }
        if (C->status == Status::inconclusive) {
          r.verdict = "inconclusive";
          r.note = C->note;
        }
        break;
      }
      case CheckKind::sharpness:
      case CheckKind::lower_bound: {
        if (divergent) {
          r.verdict = "divergent";
          r.note = "constant diverges";
          break;
        }
        const ExtremalFamily fam = family_for(c, omega);
        const OperatorSpec op{phi, omega, std::nullopt};
        const auto lb = opnorm_lower_bound(op, *c.space_in, *c.space_out, w, fam, c.eps,
                                           ex.truncation, rules);
        const double q = fam.q;
        const double target = c.target == "eigen_identity"
                                  ? eigen_identity_ratio(C->value, omega_norm, q, dims)
                                  : C->value * omega_norm;
        const auto& last = lb.rows.back();
        r.input_norm = last.input_norm;
        r.output_norm = last.output_norm;
        r.ratio = lb.last;
        r.bound = target;
        json rows = json::array();
        for (const auto& row : lb.rows) rows.push_back(row_json(row));
        r.details["family"] = to_string(fam.kind);
        r.details["target"] = c.target;
        r.details["eps"] = numbers_json(lb.eps);
        r.details["rows"] = rows;
        r.details["monotone"] = lb.monotone;
        r.details["extrapolated"] = lb.extrapolated;
        r.details["estimate"] = number_to_json(lb.estimate);
        bool ok = false;
        if (c.kind == CheckKind::sharpness) {
          r.details["relative_error"] = number_to_json(std::abs(lb.last / target - 1.0));
          ok = std::abs(lb.last / target - 1.0) <= c.tol;
        } else {
          ok = lb.last >= (1.0 - c.tol) * target;
        }
        r.verdict = ok ? "pass" : "fail";
        if (lb.status != Status::ok) {
          r.verdict = "inconclusive";
          r.note = lb.note.empty() ? last.note : lb.note;
        }
        break;
      }
      case CheckKind::boundedness: {
        if (divergent) {
          r.verdict = "divergent";
          r.note = "constant diverges";
          break;
        }
        std::optional<Field> b;
        double scale = C->value * omega_norm;
        if (C->cmo_exponent) {
          b = symbol_from_id(c.symbol);
          const auto cmo = cmo_norm(*b, *C->cmo_exponent, w, ex.truncation, rules);
          r.details["cmo_norm"] = number_to_json(cmo.value);
          r.details["cmo_status"] = to_string(cmo.status);
          if (!cmo.ok() || !std::isfinite(cmo.value)) {
            r.verdict = "inconclusive";
            r.note = "CMO norm of b not certified: " + cmo.note;
            break;
          }
          scale *= cmo.value;
        }
        std::vector<Field> battery;
        for (const auto& id : c.battery) battery.push_back(field_from_id(id));
        const auto rep = boundedness_check({phi, omega, b}, *c.space_in, *c.space_out, w, battery,
                                           scale, ex.truncation, rules, c.margin);
        json rows = json::array();
        const RatioRow* best = nullptr;
        for (const auto& row : rep.rows) {
          rows.push_back(row_json(row));
          if (!row.excluded && (!best || row.ratio > best->ratio)) best = &row;
        }
        r.details["rows"] = rows;
        r.details["margin"] = number_to_json(rep.margin);
        r.details["used"] = rep.used;
        r.bound = rep.bound;
        if (best) {
          r.input_norm = best->input_norm;
          r.output_norm = best->output_norm;
          r.ratio = best->ratio;
        }
        if (rep.used == 0) {
          r.verdict = "inconclusive";
          r.note = "no battery field has finite norms";
        } else {
          r.verdict = rep.holds ? "pass" : "fail";
        }
        break;
      }
      case CheckKind::divergence: {
        if (!divergent) {
          r.verdict = "fail";
          r.note = "constant is finite";
          break;
        }
        r.expected_divergence = true;
        const ExtremalFamily fam = family_for(c, omega);
        const auto rep = divergence_duality({c.constant_id, params}, phi, *c.space_in,
                                            *c.space_out, w, fam, c.eps, ex.truncation, rules,
                                            c.threshold);
        json rows = json::array();
        for (const auto& row : rep.rows) rows.push_back(row_json(row));
        r.details["eps"] = numbers_json(rep.eps);
        r.details["truncated_constants"] = numbers_json(rep.constants);
        r.details["rows"] = rows;
        r.details["increasing"] = rep.increasing;
        r.details["exceeded"] = rep.exceeded;
        r.ratio = rep.rows.back().ratio;
        r.input_norm = rep.rows.back().input_norm;
        r.output_norm = rep.rows.back().output_norm;
        r.bound = rep.threshold;
        if (rep.increasing && rep.exceeded) {
          r.verdict = "divergent";
        } else {
          r.verdict = "fail";
          r.note = "extremal ratios stay bounded along the truncation schedule";
        }
        break;
      }
      case CheckKind::weights: {
        const double gamma = params.at("gamma");
        ApOptions opts;
        if (c.mc_samples) opts.mc_samples = *c.mc_samples;
        MCOracle mc;
        mc.seed = ex.mc_seed;
        mc.sample_count = ex.mc_samples;
        const bool member = power_ap_membership(gamma, c.p, dims);
        const auto rep = ap_constant_estimate(Weight::power(gamma), c.p, rules, mc, opts);
        r.ratio = rep.ap_estimate;
        r.details = {{"gamma", number_to_json(gamma)},
                     {"p", number_to_json(c.p)},
                     {"predicate_member", member},
                     {"estimate_verdict", to_string(rep.verdict)},
                     {"level_estimates", numbers_json(rep.level_estimates)},
                     {"critical_index", number_to_json(rep.critical_index_estimate)},
                     {"ball_count", rep.ball_count},
                     {"note", rep.note}};
        if (rep.verdict == Verdict::inconclusive) {
          r.verdict = "inconclusive";
        } else {
          r.verdict = (rep.verdict == Verdict::member) == member ? "pass" : "fail";
        }
        break;
      }
      case CheckKind::norm: {
        const auto n = space_norm(field_from_id(c.field), *c.space_in, w, ex.truncation, rules);
        r.input_norm = n.value;
        r.details = {{"field", c.field}, {"space", to_string(c.space_in->kind)},
                     {"status", to_string(n.status)}};
        r.note = n.note;
        if (n.status == Status::divergent) {
          r.verdict = "divergent";
        } else if (c.expect_divergent) {
          r.verdict = "fail";
        } else if (n.status == Status::inconclusive) {
          r.verdict = "inconclusive";
        } else if (c.expect_value) {
          r.bound = *c.expect_value;
          const double e = *c.expect_value;
          r.verdict = std::abs(n.value - e) <= c.tol * std::max(std::abs(e), 1e-300) ? "pass" : "fail";
        } else {
          r.verdict = "pass";
        }
        break;
      }
    }
  } catch (const PreconditionError& e) {
    r.verdict = "fail";
    r.note = std::string("precondition failed: ") + e.what();
  } catch (const std::exception& e) {
    r.verdict = "fail";
    r.note = std::string("error: ") + e.what();
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

RunReport run_experiment(const Experiment& ex, bool parallel) {
  const auto start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.name = ex.name;
  rep.config = ex.config;
  rep.catalog_version = constant_catalog().version;
  const Rules rules = experiment_rules(ex);
  if (parallel) {
    std::vector<std::future<CheckResult>> jobs;
    for (const auto& c : ex.checks)
      jobs.push_back(std::async(std::launch::async, [&ex, &c, &rules] { return run_check(ex, c, rules); }));
    for (auto& j : jobs) rep.checks.push_back(j.get());
  } else {
    for (const auto& c : ex.checks) rep.checks.push_back(run_check(ex, c, rules));
  }
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

// ---- output -----------------------------------------------------------------------------

json number_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw std::invalid_argument("not a report number: " + j.dump());
}

namespace {

json opt_json(const std::optional<double>& v) { return v ? number_to_json(*v) : json(nullptr); }

std::string csv_number(const std::optional<double>& v) {
  if (!v) return "";
  if (std::isnan(*v)) return "nan";
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

json report_to_json(const RunReport& report) {
  json checks = json::array();
  std::map<std::string, int> summary{{"pass", 0}, {"fail", 0}, {"divergent", 0}, {"inconclusive", 0}};
  for (const auto& c : report.checks) {
    ++summary[c.verdict];
    checks.push_back({{"id", c.id},
                      {"kind", c.kind},
                      {"constant_id", c.constant_id},
                      {"constant_value", opt_json(c.constant_value)},
                      {"omega_norm", opt_json(c.omega_norm)},
                      {"input_norm", opt_json(c.input_norm)},
                      {"output_norm", opt_json(c.output_norm)},
                      {"ratio", opt_json(c.ratio)},
                      {"bound", opt_json(c.bound)},
                      {"verdict", c.verdict},
                      {"expected_divergence", c.expected_divergence},
                      {"failed", c.failed()},
                      {"note", c.note},
                      {"details", c.details},
                      {"wall_time", c.wall_time}});
  }
  return {{"name", report.name},
          {"versions", {{"code", kCodeVersion}, {"catalog", report.catalog_version}}},
          {"config", report.config},
          {"checks", checks},
          {"summary", summary},
          {"exit_code", report.exit_code()},
          {"wall_time", report.wall_time}};
}

std::string report_to_csv(const RunReport& report) {
  std::string out =
      "check_id,constant_id,constant_value,omega_norm,input_norm,output_norm,ratio,bound,verdict\n";
  for (const auto& c : report.checks) {
    out += csv_text(c.id) + "," + csv_text(c.constant_id) + "," + csv_number(c.constant_value) +
           "," + csv_number(c.omega_norm) + "," + csv_number(c.input_norm) + "," +
           csv_number(c.output_norm) + "," + csv_number(c.ratio) + "," + csv_number(c.bound) +
           "," + c.verdict + "\n";
  }
  return out;
}

void emit_report(const RunReport& report, const std::string& json_path,
                 const std::string& csv_path) {
  auto write = [](const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + ": " + std::strerror(errno));
    out << text;
    out.close();
    if (!out) throw std::runtime_error("cannot write " + path + ": " + std::strerror(errno));
  };
  if (!json_path.empty()) write(json_path, report_to_json(report).dump(2) + "\n");
  if (!csv_path.empty()) write(csv_path, report_to_csv(report));
}

}  // namespace heis::cli
