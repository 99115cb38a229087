#pragma once

#include "heis/sharpness.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace heis::cli {

inline constexpr const char* kCodeVersion = "0.1.0";

// Invalid configuration; `path` is the offending key path, e.g. "checks[1].kernel".
struct ConfigError : std::runtime_error {
  std::string path;
  ConfigError(std::string key_path, const std::string& what)
      : std::runtime_error(key_path.empty() ? what : key_path + ": " + what),
        path(std::move(key_path)) {}
};

// String ids shared by configs and command-line flags ("name" or "name:arg:arg").
//   kernels: hardy | adjoint_hardy | indicator:a:b | power:e:a:b | exp_decay:e
//   symbols Ω: one | affine:a:b:k | phase:m
//   fields: zero | power:e | power_cut:e:R | ball:R | shell:a:b | gauss | exp | power_affine:e
//   CMO symbols b: constant:c | log_hnorm | bump | power:s
//   weights: unit | power:g
RadialKernel kernel_from_id(const std::string& id, int Q);
SphereSymbol omega_from_id(const std::string& id);
Field field_from_id(const std::string& id);
Field symbol_from_id(const std::string& id);
Weight weight_from_id(const std::string& id);
SpaceSpec space_from_json(const nlohmann::json& j, const std::string& path);

enum class CheckKind { constant, sharpness, boundedness, lower_bound, divergence, weights, norm };
std::string to_string(CheckKind k);

struct CheckConfig {
  std::string id;
  CheckKind kind = CheckKind::constant;
  std::string constant_id;
  Expression::Vars params;
  std::string kernel, omega, symbol;  // resolved ids (check overrides applied)
  std::optional<SpaceSpec> space_in, space_out;
  // constant / norm
  std::optional<double> expect_value;
  bool expect_divergent = false;
  double tol = 1e-9;
  // sharpness / lower_bound / divergence
  ExtremalFamily::Kind family = ExtremalFamily::Kind::morrey;
  std::vector<double> eps;
  std::string target = "eigen_identity";  // or constant_times_omega_norm
  double threshold = 1e3;
  // boundedness
  std::vector<std::string> battery;
  double margin = 10.0;
  // weights
  double p = 2.0;
  std::optional<long> mc_samples;
  // norm
  std::string field;
};

struct Experiment {
  std::string name;
  nlohmann::json config;  // the document as read
  int n = 1;
  int sphere_resolution = 0;
  int radial_nodes = 32;
  std::uint64_t mc_seed = 12345;
  long mc_samples = 100000;
  double gamma = 0.0;  // weight |x|^γ
  TruncationPolicy truncation;
  std::vector<CheckConfig> checks;
};

Experiment parse_experiment(const nlohmann::json& config);
Experiment load_experiment(const std::string& path);

struct CheckResult {
  std::string id;
  std::string kind;
  std::string constant_id;
  std::optional<double> constant_value, omega_norm, input_norm, output_norm, ratio, bound;
  std::string verdict;  // pass | fail | divergent | inconclusive
  bool expected_divergence = false;
  std::string note;
  double wall_time = 0.0;
  nlohmann::json details = nlohmann::json::object();
  bool failed() const;
};

struct RunReport {
  std::string name;
  nlohmann::json config;
  std::string catalog_version;
  std::vector<CheckResult> checks;
  double wall_time = 0.0;
  int exit_code() const;  // 0 all pass, 1 any failure
};

Rules experiment_rules(const Experiment& ex);
CheckResult run_check(const Experiment& ex, const CheckConfig& check, const Rules& rules);
RunReport run_experiment(const Experiment& ex, bool parallel = false);

// Non-finite numbers are written as the strings "inf", "-inf", "nan".
nlohmann::json number_to_json(double v);
double number_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const RunReport& report);
std::string report_to_csv(const RunReport& report);
void emit_report(const RunReport& report, const std::string& json_path,
                 const std::string& csv_path);

}  // namespace heis::cli
