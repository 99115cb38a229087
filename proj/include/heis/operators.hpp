#pragma once

#include "heis/field.hpp"
#include "heis/quadrature.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace heis {

// c·t^e on (a, b).
struct KernelPiece {
  double a = 0.0;
  double b = std::numeric_limits<double>::infinity();
  double exponent = 0.0;
  double coefficient = 1.0;
};

// Radial kernel Φ on (0, ∞): a sum of power pieces, or an arbitrary evaluator.
class RadialKernel {
 public:
  static RadialKernel from_pieces(std::string label, std::vector<KernelPiece> pieces);
  static RadialKernel custom(std::string label, std::function<double(double)> phi,
                             std::vector<double> breaks = {}, double support_lo = 0.0,
                             double support_hi = std::numeric_limits<double>::infinity());
  // t^{-Q} on (1, ∞): H becomes the Hardy operator.
  static RadialKernel hardy(int Q);
  // χ_(0,1): H becomes the adjoint Hardy operator.
  static RadialKernel adjoint_hardy();
  static RadialKernel indicator_power(double c, double e, double a, double b);
  // e^{-t} t^e
  static RadialKernel exp_decay(double e);

  double operator()(double t) const;
  const std::string& label() const { return label_; }
  const std::vector<KernelPiece>& pieces() const { return pieces_; }
  bool piecewise_power() const { return !custom_; }
  // Finite positive jump points.
  std::vector<double> breaks() const;
  double support_lo() const { return lo_; }
  double support_hi() const { return hi_; }
  // Φ·χ_(a,b)
  RadialKernel truncated(double a, double b) const;

 private:
  std::string label_;
  std::vector<KernelPiece> pieces_;
  std::function<double(double)> custom_;
  std::vector<double> custom_breaks_;
  double lo_ = 0.0;
  double hi_ = std::numeric_limits<double>::infinity();
};

// Ω on the unit sphere.
class SphereSymbol {
 public:
  static SphereSymbol one();
  // a + b·y_k
  static SphereSymbol affine(double a, double b, int k);
  // (z_1/|z_1|)^m, unimodular
  static SphereSymbol phase(int m);
  static SphereSymbol custom(std::string label, PointFn omega);

  Complex operator()(const HPoint& y) const { return fn_ ? fn_(y) : Complex(1.0); }
  const std::string& label() const { return label_; }
  bool is_one() const { return !fn_; }
  // ‖Ω‖_{L^s(S)}
  double norm(double s, const SphereRule& rule) const;
  // ∫_S Ω dσ
  Complex integral(const SphereRule& rule) const;
  // |Ω|^{s-2} Ω̄, the dual extremal of Ω in L^s (zero where Ω vanishes).
  PointFn dual(double s) const;

 private:
  std::string label_;
  PointFn fn_;
};

// F(ρ) = ∫_S Ω(y') f(δ_ρ y') dσ(y'); every value of H_{Φ,Ω} f is a t-average of F.
class SphereMoment {
 public:
  SphereMoment(const SphereSymbol& omega, const Field& f, const Rules& rules);
  Complex operator()(double rho) const;
  const Field& field() const { return f_; }

 private:
  Field f_;
  Rules rules_;
  SphereSymbol omega_;
  std::vector<Complex> coef_;  // per separable term; empty for general fields
  std::vector<double> omega_w_;
  std::vector<Complex> omega_vals_;
};

// H_{Φ,Ω} f(x) from the polar form; x = 0 gives f(0)·∫Φ/t·∫Ω when that integral converges.
Integral<Complex> hausdorff_apply(const RadialKernel& phi, const SphereSymbol& omega, const Field& f,
                                  const HPoint& x, const Rules& rules);
Integral<Complex> hausdorff_apply_at(const RadialKernel& phi, const SphereMoment& F, double r,
                                     const RadialOptions& opts = {});

// H_{Φ,Ω} f as a (radial) field. Non-convergent evaluations return NaN.
Field hausdorff_field(const RadialKernel& phi, const SphereSymbol& omega, const Field& f,
                      const Rules& rules);

struct DirectResult {
  Complex value = 0.0;
  double std_error = 0.0;  // zero for the deterministic radial path
  Status status = Status::ok;
  std::string note;
};

// The un-substituted form ∫ Φ(|x|/|y|) |y|^{-Q} Ω(δ_{1/|y|}y) f(y) dy over 1/R < |y| <= R.
// Radial f with Ω ≡ 1 uses a 1D integral in |y|; everything else uses Cartesian MC.
DirectResult hausdorff_apply_direct(const RadialKernel& phi, const SphereSymbol& omega,
                                    const Field& f, const HPoint& x, const MCOracle& mc,
                                    double outer_radius, const Rules& rules);

// |x|^{-Q} ∫_{|y|<=|x|} f and ∫_{|y|>|x|} f(y)|y|^{-Q} dy.
Integral<Complex> hardy_apply(const Field& f, const HPoint& x, const Rules& rules);
Integral<Complex> adjoint_hardy_apply(const Field& f, const HPoint& x, const Rules& rules);

// Commutator with b evaluated node by node: Σ w Ω(y)(b(x) - b(δ_ρ y)) f(δ_ρ y).
Integral<Complex> commutator_apply(const RadialKernel& phi, const SphereSymbol& omega,
                                   const Field& b, const Field& f, const HPoint& x,
                                   const Rules& rules);
// b·Hf - H(bf) as a field.
Field commutator_field(const RadialKernel& phi, const SphereSymbol& omega, const Field& b,
                       const Field& f, const Rules& rules);

double psi_factor(double t, int Q);

}  // namespace heis
