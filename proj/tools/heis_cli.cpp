#include "heis/experiment.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <iostream>
#include <map>
#include <optional>
#include <string>

using nlohmann::json;
using namespace heis;
using namespace heis::cli;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

const char* const kParamNames[] = {"gamma", "lambda", "q", "p", "alpha", "alpha_star",
                                   "alpha1_star", "q_star", "q1", "q1_star", "r1", "r1_star",
                                   "zeta", "delta", "sigma", "r_omega"};

int cmd_run(const std::string& config, const std::string& out, const std::string& csv,
            bool parallel) {
  Experiment ex;
  try {
    ex = load_experiment(config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  const RunReport report = run_experiment(ex, parallel);
  try {
    emit_report(report, out, csv);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitFail;
  }
  for (const auto& c : report.checks) {
    std::cout << c.id << "  " << c.verdict;
    if (c.failed()) std::cout << "  FAILED";
    if (!c.note.empty()) std::cout << "  (" << c.note << ")";
    std::cout << "\n";
  }
  if (out.empty() && csv.empty()) std::cout << report_to_json(report).dump(2) << "\n";
  return report.exit_code();
}

int cmd_constant(const std::string& id, const std::string& phi_id, const std::string& omega_id,
                 int n, const std::map<std::string, double>& given) {
  const GroupDims dims = geometry_constants(n);
  RadialKernel phi;
  SphereSymbol omega = SphereSymbol::one();
  const CatalogEntry* entry = constant_catalog().find(id);
  try {
    if (!entry) throw std::invalid_argument("unknown constant id '" + id + "'");
    phi = kernel_from_id(phi_id, dims.Q);
    omega = omega_from_id(omega_id);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  Expression::Vars params(given.begin(), given.end());
  params["Q"] = dims.Q;
  if (!params.count("gamma")) params["gamma"] = 0.0;
  const bool wants_r = std::find(entry->params.begin(), entry->params.end(), "r_omega") !=
                       entry->params.end();
  if (wants_r && !params.count("r_omega"))
    params["r_omega"] = power_critical_index(params["gamma"], dims);

  ConstantOptions opts;
  opts.require_all_hypotheses = false;
  try {
    const ConstantResult C = compute_constant({id, params}, phi, opts);
    json out = {{"id", C.id},
                {"kernel", phi.label()},
                {"value", number_to_json(C.value)},
                {"status", to_string(C.status)},
                {"omega_exponent", number_to_json(C.omega_exponent)},
                {"unchecked_hypotheses", C.unchecked},
                {"note", C.note}};
    if (std::isfinite(C.omega_exponent)) {
      const Rules rules = make_rules(dims);
      out["omega_norm"] = number_to_json(omega.norm(C.omega_exponent, *rules.sphere));
    }
    if (C.cmo_exponent) out["cmo_exponent"] = number_to_json(*C.cmo_exponent);
    std::cout << out.dump(2) << "\n";
    return C.status == Status::inconclusive ? kExitFail : 0;
  } catch (const PreconditionError& e) {
    std::cerr << id << ": precondition failed: " << e.what() << "\n";
    return kExitFail;
  } catch (const std::exception& e) {
    std::cerr << id << ": " << e.what() << "\n";
    return kExitFail;
  }
}

int cmd_norms(const std::string& field_id, const std::string& kind, double q, double p,
              double alpha, double lambda, double gamma, int n) {
  Field f;
  SpaceSpec space;
  try {
    f = field_from_id(field_id);
    json j = {{"kind", kind}, {"q", q}, {"p", p}, {"alpha", alpha}, {"lambda", lambda}};
    space = space_from_json(j, "space");
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  const Rules rules = make_rules(geometry_constants(n));
  const SpaceNorm norm = space_norm(f, space, Weight::power(gamma), TruncationPolicy{}, rules);
  json out = {{"field", field_id},
              {"space", kind},
              {"value", number_to_json(norm.value)},
              {"status", to_string(norm.status)},
              {"note", norm.note}};
  std::cout << out.dump(2) << "\n";
  return norm.status == Status::inconclusive ? kExitFail : 0;
}

int cmd_weights(double gamma, double p, int n, std::uint64_t seed, long samples) {
  if (!(p >= 1.0)) {
    std::cerr << "config error: p must be >= 1\n";
    return kExitConfig;
  }
  const GroupDims dims = geometry_constants(n);
  const Rules rules = make_rules(dims);
  MCOracle mc;
  mc.seed = seed;
  ApOptions opts;
  opts.mc_samples = samples;
  const ApReport rep = ap_constant_estimate(Weight::power(gamma), p, rules, mc, opts);
  const bool member = power_ap_membership(gamma, p, dims);
  json rh = json::object();
  for (const auto& [r, v] : rep.rh_estimates) rh[std::to_string(r)] = number_to_json(v);
  json out = {{"gamma", gamma},
              {"p", p},
              {"n", n},
              {"ap_estimate", number_to_json(rep.ap_estimate)},
              {"level_estimates", json::array()},
              {"verdict", to_string(rep.verdict)},
              {"predicate_member", member},
              {"critical_index_estimate", number_to_json(rep.critical_index_estimate)},
              {"critical_index_exact", number_to_json(power_critical_index(gamma, dims))},
              {"rh_estimates", rh},
              {"ball_count", rep.ball_count},
              {"note", rep.note}};
  for (double v : rep.level_estimates) out["level_estimates"].push_back(number_to_json(v));
  std::cout << out.dump(2) << "\n";
  if (rep.verdict == Verdict::inconclusive) return 0;
  return (rep.verdict == Verdict::member) == member ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rough Hausdorff operators on the Heisenberg group: constants, norms and checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kCodeVersion));

  std::string config, out, csv;
  bool parallel = false;
  auto* run = app.add_subcommand("run", "Run every check of an experiment config");
  run->add_option("config", config, "Experiment JSON")->required();
  run->add_option("--out", out, "Write the JSON report here");
  run->add_option("--csv", csv, "Write the CSV table here");
  run->add_flag("--parallel", parallel, "Run checks concurrently");

  std::string const_id, phi = "hardy", omega = "one";
  int n = 1;
  std::map<std::string, double> const_params;
  std::map<std::string, std::optional<double>> flag_values;
  auto* constant = app.add_subcommand("constant", "Evaluate one catalog constant");
  constant->add_option("--id", const_id, "Catalog id, e.g. C1")->required();
  constant->add_option("--phi", phi, "Kernel id")->capture_default_str();
  constant->add_option("--omega", omega, "Symbol id for the norm of Omega")->capture_default_str();
  constant->add_option("--n", n, "Group dimension")->capture_default_str()->check(CLI::PositiveNumber);
  for (const char* name : kParamNames)
    constant->add_option(std::string("--") + name, flag_values[name]);

  std::string field_id, space_kind = "lebesgue";
  double nq = 2.0, np = 2.0, nalpha = 0.0, nlambda = 0.0, ngamma = 0.0;
  int nn = 1;
  auto* norms = app.add_subcommand("norms", "Norm of one field in one space");
  norms->add_option("--field", field_id, "Field id")->required();
  norms->add_option("--space", space_kind, "lebesgue | central_morrey | herz | morrey_herz")
      ->capture_default_str();
  norms->add_option("--q", nq)->capture_default_str();
  norms->add_option("--p", np)->capture_default_str();
  norms->add_option("--alpha", nalpha)->capture_default_str();
  norms->add_option("--lambda", nlambda)->capture_default_str();
  norms->add_option("--gamma", ngamma, "Weight exponent")->capture_default_str();
  norms->add_option("--n", nn)->capture_default_str()->check(CLI::PositiveNumber);

  double wgamma = 0.0, wp = 2.0;
  int wn = 1;
  std::uint64_t seed = 12345;
  long samples = ApOptions{}.mc_samples;
  auto* weights = app.add_subcommand("weights", "A_p report for the power weight |x|^gamma");
  weights->add_option("--gamma", wgamma)->required();
  weights->add_option("--p", wp)->capture_default_str();
  weights->add_option("--n", wn)->capture_default_str()->check(CLI::PositiveNumber);
  weights->add_option("--seed", seed)->capture_default_str();
  weights->add_option("--samples", samples, "Monte Carlo samples per ball")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (*run) return cmd_run(config, out, csv, parallel);
  if (*constant) {
    for (const auto& [k, v] : flag_values)
      if (v) const_params[k] = *v;
    return cmd_constant(const_id, phi, omega, n, const_params);
  }
  if (*norms) return cmd_norms(field_id, space_kind, nq, np, nalpha, nlambda, ngamma, nn);
  return cmd_weights(wgamma, wp, wn, seed, samples);
}
