#pragma once

#include "heis/quadrature.hpp"
#include "heis/weights.hpp"

#include <string>
#include <vector>

namespace heis {

using NormResult = Integral<double>;

// Window of annuli C_k = {2^{k-1} < |x|_h <= 2^k} and radii used for suprema.
struct TruncationPolicy {
  int k_min = -20;
  int k_max = 20;
  std::vector<double> radius_grid = default_radius_grid();
  double tail_tol = 1e-8;

  static std::vector<double> default_radius_grid();  // 2^{j/2}, |j| <= 24
  void validate() const;
};

struct HerzParams {
  enum class Variant { dyadic, weighted };  // 2^{kα} or ω(B(0,2^k))^{α/Q}
  double alpha = 0.0;
  double p = 1.0;
  double q = 1.0;
  Variant variant = Variant::dyadic;
  void validate() const;
};

struct CentralMorreyParams {
  double q = 2.0;
  double lambda = -0.25;
  void validate() const;
};

struct MorreyHerzParams {
  double alpha = 0.0;
  double lambda = 0.0;
  double p = 1.0;
  double q = 1.0;
  void validate() const;
};

// Value of a sup-type norm with the per-radius (or per-k_0) values behind it.
struct SupNorm {
  double value = 0.0;
  Status status = Status::ok;
  std::string note;
  std::vector<double> abscissae;  // radii, or k_0 for Morrey-Herz
  std::vector<double> values;
  bool ok() const { return status == Status::ok; }
};

NormResult lq_norm_weighted(const Field& f, const Region& region, double q, const Weight& w,
                            const Rules& rules);
// Over all of H^n.
NormResult lq_norm_weighted(const Field& f, double q, const Weight& w, const Rules& rules);

// ‖f χ_k‖_{L^q_ω} for k in the window, in order.
std::vector<NormResult> annulus_norms(const Field& f, double q, const Weight& w,
                                      const TruncationPolicy& trunc, const Rules& rules);

struct HerzTerms {
  std::vector<int> k;
  std::vector<double> annulus_norm;  // ‖f χ_k‖
  std::vector<double> coefficient;   // 2^{kα} or ω(B_k)^{α/Q}
  Status status = Status::ok;
  std::string note;
};
HerzTerms herz_terms(const Field& f, const HerzParams& params, const Weight& w,
                     const TruncationPolicy& trunc, const Rules& rules);

// Truncated sum with geometric tails at both window edges.
NormResult herz_norm(const Field& f, const HerzParams& params, const Weight& w,
                     const TruncationPolicy& trunc, const Rules& rules);

SupNorm central_morrey_norm(const Field& f, const CentralMorreyParams& params, const Weight& w,
                            const TruncationPolicy& trunc, const Rules& rules);

SupNorm morrey_herz_norm(const Field& f, const MorreyHerzParams& params, const Weight& w,
                         const TruncationPolicy& trunc, const Rules& rules);

// Unweighted average over a centered ball.
Complex ball_average(const Field& f, const Region& ball, const Rules& rules);

SupNorm cmo_norm(const Field& b, double q, const Weight& w, const TruncationPolicy& trunc,
                 const Rules& rules);

struct BlockReport {
  bool supported = false;  // vanishes at every probe outside the ball
  double norm = 0.0;
  double bound = 0.0;      // ω(B)^{-α/Q}
  bool holds = false;
};
BlockReport central_block_check(const Field& b, double alpha, double q, const Weight& w,
                                const Region& ball, const Rules& rules, double tol = 1e-10);

}  // namespace heis
