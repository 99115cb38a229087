#pragma once

#include "heis/field.hpp"
#include "heis/quadrature.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace heis {

class Weight {
 public:
  static Weight power(double gamma);
  static Weight unit() { return power(0.0); }
  // A weight that depends on |x|_h only.
  static Weight radial(std::string label, std::function<double(double)> profile);
  static Weight custom(std::string label, std::function<double(const HPoint&)> evaluator);

  double operator()(const HPoint& x) const;
  const std::string& label() const { return label_; }
  std::optional<double> gamma() const { return gamma_; }
  bool is_radial() const { return bool(profile_); }
  double at_radius(double r) const { return profile_(r); }
  // Value at the origin, the only singular point of the weights used here.
  double at_origin(int n) const;
  // ω^s as a weight.
  Weight pow(double s) const;
  Field as_field() const;

 private:
  std::string label_;
  std::optional<double> gamma_;
  std::function<double(double)> profile_;
  std::function<double(const HPoint&)> evaluator_;
};

// ω(region) = ∫_region ω dx; divergent for power weights with γ <= -Q near 0.
Integral<double> weighted_measure(const Weight& w, const Region& region, const Rules& rules);
double power_weight_ball_measure(double gamma, double R, const GroupDims& dims);

struct Ball {
  HPoint center;
  double radius = 1.0;
  int center_level = 0;  // dyadic exponent of the center (0 for the origin)
  int axis = -1;         // -1 for the origin
  int radius_level = 0;
};

// Centers {0} ∪ {δ_{2^j} e : |j| <= center_levels, e an axis}, radii 2^i, |i| <= radius_levels.
std::vector<Ball> ball_family(int n, int center_levels, int radius_levels);

enum class Verdict { member, non_member, inconclusive };
std::string to_string(Verdict v);

struct ApReport {
  double p = 1.0;
  double ap_estimate = 0.0;                  // sup over the largest family; inf if divergent
  std::vector<double> level_estimates;       // sup over each nested family
  std::map<double, double> rh_estimates;     // r -> reverse Hölder quotient
  double critical_index_estimate = 0.0;      // r_ω (inf when never divergent)
  long ball_count = 0;
  bool divergent = false;
  Verdict verdict = Verdict::inconclusive;
  std::string note;
};

struct ApOptions {
  int center_levels = 4;
  int radius_levels = 6;
  int steps = 2;                 // nested families at levels (L - steps .. L)
  long mc_samples = 4000;
  int polar_bands = 60;
  int polar_nodes = 8;
  double quantile = 1e-3;        // essinf proxy for p = 1
  std::vector<double> rh_exponents = {1.5, 2.0, 3.0};
};

// Weighted point set approximating Haar measure on one ball.
struct BallSample {
  std::vector<HPoint> points;
  std::vector<double> weights;
  std::vector<double> radii;  // |point|_h
  bool contains_origin = false;
  double inscribed_radius = 0.0;  // radius of the centered ball computed by quadrature
};

// ∫_S |f(δ_r y')|^q ω(δ_r y') dσ(y') as a function of r.
std::function<double(double)> weighted_abs_power_profile(const Field& f, double q,
                                                         const Weight& w, const SphereRule& rule);

// Point sets for every ball of the largest family, reusable across weights.
// With radial_only the centered parts use one direction carrying the full
// sphere mass, which is exact for weights depending on |x|_h alone.
class BallFamilySampler {
 public:
  BallFamilySampler(const Rules& rules, const MCOracle& mc, const ApOptions& opts,
                    bool radial_only);
  const std::vector<Ball>& balls() const { return balls_; }
  const std::vector<BallSample>& samples() const { return samples_; }
  bool radial_only() const { return radial_only_; }
  const Rules& rules() const { return rules_; }
  const ApOptions& options() const { return opts_; }

 private:
  Rules rules_;
  ApOptions opts_;
  bool radial_only_;
  std::vector<Ball> balls_;
  std::vector<BallSample> samples_;
};

// A_p quotient of every ball in the sampler's family, in family order.
std::vector<double> ap_quotients(const Weight& w, double p, const BallFamilySampler& sampler);
ApReport ap_constant_estimate(const Weight& w, double p, const BallFamilySampler& sampler);
ApReport ap_constant_estimate(const Weight& w, double p, const Rules& rules,
                              const MCOracle& mc, const ApOptions& opts = {});

bool power_ap_membership(double gamma, double p, const GroupDims& dims);

struct RhResult {
  double estimate = 0.0;  // sup over the family; inf if divergent
  bool divergent = false;
};
RhResult rh_constant_estimate(const Weight& w, double r, const BallFamilySampler& sampler);
RhResult rh_constant_estimate(const Weight& w, double r, const Rules& rules, const MCOracle& mc,
                              const ApOptions& opts = {});
// Largest r for which ω^r stays integrable on the centered balls (bisection).
double critical_index_estimate(const Weight& w, const Rules& rules, double r_max = 64.0,
                               double tol = 1e-6);
// Analytic cross-check for power weights: Q/|γ| for γ < 0, inf otherwise.
double power_critical_index(double gamma, const GroupDims& dims);

struct DoublingPair {
  Region E;
  Region B;
};
struct DoublingReport {
  std::vector<double> measure_ratios;  // |E|/|B|
  std::vector<double> weight_ratios;   // ω(E)/ω(B)
  double c_lower = 0.0;                // fitted C_1 in C_1 (|E|/|B|)^p <= ω(E)/ω(B)
  double c_upper = 0.0;                // fitted C_2 in ω(E)/ω(B) <= C_2 (|E|/|B|)^{(r-1)/r}
  bool holds = false;                  // both constants stay bounded across the pairs
};
DoublingReport doubling_check(const Weight& w, double p, double r,
                              const std::vector<DoublingPair>& pairs, const Rules& rules);

struct AverageReport {
  double left = 0.0;   // (1/|B|) ∫_B |f|
  double right = 0.0;  // ((1/ω(B)) ∫_B |f|^p ω)^{1/p}
  double ratio = 0.0;
};
AverageReport weighted_average_check(const Weight& w, const Field& f, const Region& ball, double p,
                                     const Rules& rules);

}  // namespace heis
