#pragma once

#include "heis/field.hpp"
#include "heis/hgroup.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace heis {

enum class Status { ok, divergent, inconclusive };
std::string to_string(Status s);

template <class T>
struct Integral {
  T value{};
  Status status = Status::ok;
  T tail{};               // extrapolated tail included in value
  long evaluations = 0;
  std::string note;       // why the status is not ok
  bool ok() const { return status == Status::ok; }
};

// Gauss-Legendre nodes/weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussLegendre& gauss_legendre(int m);

struct SphereRule {
  GroupDims dims;
  int resolution = 0;
  std::vector<HPoint> nodes;
  std::vector<double> weights;
};

int default_sphere_resolution(int n);
SphereRule build_sphere_rule(const GroupDims& dims, int resolution);
double total_weight(const SphereRule& rule);

// Explicit rule on a finite interval [a, b], 0 < a for the log transform.
struct RadialRule {
  double a = 0.0;
  double b = 0.0;
  std::string transform;  // "none" | "log"
  std::vector<double> nodes;
  std::vector<double> weights;
};
RadialRule make_radial_rule(double a, double b, int nodes_per_band, const std::string& transform);

// Settings of the adaptive log-band engine used for every radial and half-line
// integral: Gauss-Legendre in u = log t on bands of ratio `band_ratio`,
// walked outward toward 0 and infinity until the band sums are negligible,
// geometrically extrapolated, or seen not to decay.
struct RadialOptions {
  int nodes_per_band = 32;
  double band_ratio = 2.0;
  double rel_tol = 1e-14;
  double abs_tol = 0.0;
  int max_bands = 1000;
  int min_bands = 4;
};

Integral<double> integrate_halfline(const std::function<double(double)>& g,
                                    std::span<const double> splits = {},
                                    const RadialOptions& opts = {});
Integral<Complex> integrate_halfline_c(const std::function<Complex(double)>& g,
                                       std::span<const double> splits = {},
                                       const RadialOptions& opts = {});

// Integral of g over (a, b), 0 <= a < b <= inf, with interior splits.
Integral<double> integrate_interval(const std::function<double(double)>& g, double a, double b,
                                    std::span<const double> splits = {},
                                    const RadialOptions& opts = {});
Integral<Complex> integrate_interval_c(const std::function<Complex(double)>& g, double a,
                                       double b, std::span<const double> splits = {},
                                       const RadialOptions& opts = {});

// Values of a field at the dilated sphere nodes δ_r y_i. Separable fields cache
// their angular factors once; radial factors are evaluated once per radius.
class SphereSampler {
 public:
  SphereSampler(Field f, const SphereRule& rule);
  bool radial() const { return radial_; }
  // Fills out[i] = f(δ_r y_i); for radial fields out has one entry.
  void values_at(double r, std::vector<Complex>& out) const;
  const SphereRule& rule() const { return *rule_; }

 private:
  Field f_;
  const SphereRule* rule_;
  bool radial_ = false;
  std::vector<std::vector<Complex>> angular_;  // per term, per node; empty = 1
};

// ∫_S f(δ_r y') dσ(y') as a function of r.
std::function<Complex(double)> sphere_profile(const Field& f, const SphereRule& rule);

// ∫_region P(r) r^{Q-1} dr for a precomputed sphere profile P.
Integral<Complex> integrate_profile(const std::function<Complex(double)>& profile,
                                    const Region& region, int Q,
                                    std::span<const double> splits = {},
                                    const RadialOptions& opts = {});
Integral<double> integrate_profile_real(const std::function<double(double)>& profile,
                                        const Region& region, int Q,
                                        std::span<const double> splits = {},
                                        const RadialOptions& opts = {});

// Polar-coordinate integral of f over a radial region (Haar measure).
Integral<Complex> integrate_region(const Field& f, const Region& region, const SphereRule& sphere,
                                   const RadialOptions& radial = {});

// Deterministic pairwise sum.
Complex pairwise_sum(std::span<const Complex> values);
double pairwise_sum(std::span<const double> values);

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
};

struct MCOracle {
  std::uint64_t seed = 12345;
  long sample_count = 100000;
  std::optional<Box> bounding_box;
};

struct MCResult {
  Complex value = 0.0;
  double std_error = 0.0;
  double acceptance = 0.0;
  long accepted = 0;
};

// Uniform double in [0, 1) from a 64-bit engine, identical on every platform.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed);
  double next();

 private:
  std::mt19937_64 engine_;
};

// Cartesian rejection sampling over a centered radial region (Haar measure).
MCResult mc_integrate(const Field& f, const Region& region, const GroupDims& dims,
                      const MCOracle& oracle);
// Same over the off-center ball B(center, radius) = center·B(0, radius).
MCResult mc_integrate_ball(const PointFn& f, const HPoint& center, double radius,
                           const GroupDims& dims, const MCOracle& oracle);

}  // namespace heis

namespace heis {

// Sphere rule plus radial settings shared by the higher modules.
struct Rules {
  std::shared_ptr<const SphereRule> sphere;
  RadialOptions radial;
  const GroupDims& dims() const { return sphere->dims; }
};

Rules make_rules(const GroupDims& dims, int sphere_resolution = 0, int radial_nodes = 32);

}  // namespace heis
