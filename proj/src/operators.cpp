#include "heis/operators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace heis {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Jump points in t of Φ(t)·F(r/t).
std::vector<double> t_splits(const RadialKernel& phi, const Field& f, double r) {
  std::vector<double> s = phi.breaks();
  for (double beta : f.breaks()) {
    if (beta > 0.0) s.push_back(r / beta);
  }
  return sorted_unique(std::move(s));
}

}  // namespace

// ---------------------------------------------------------------- kernels

RadialKernel RadialKernel::from_pieces(std::string label, std::vector<KernelPiece> pieces) {
  if (pieces.empty()) throw std::invalid_argument("kernel needs at least one piece");
  RadialKernel k;
  k.label_ = std::move(label);
  k.lo_ = kInf;
  k.hi_ = 0.0;
  for (const auto& p : pieces) {
    if (!(p.a >= 0.0) || !(p.b > p.a)) throw std::invalid_argument("kernel piece needs 0 <= a < b");
    if (!(p.coefficient >= 0.0) || !std::isfinite(p.exponent)) {
      throw std::invalid_argument("kernel piece needs a finite exponent and coefficient >= 0");
    }
    if (p.coefficient > 0.0) {
      k.lo_ = std::min(k.lo_, p.a);
      k.hi_ = std::max(k.hi_, p.b);
    }
  }
  if (k.lo_ > k.hi_) k.lo_ = k.hi_ = 1.0;  // identically zero
  k.pieces_ = std::move(pieces);
  return k;
}

RadialKernel RadialKernel::custom(std::string label, std::function<double(double)> phi,
                                  std::vector<double> breaks, double support_lo, double support_hi) {
  if (!(support_lo >= 0.0) || !(support_hi > support_lo)) {
    throw std::invalid_argument("kernel support needs 0 <= lo < hi");
  }
  RadialKernel k;
  k.label_ = std::move(label);
  k.custom_ = std::move(phi);
  k.custom_breaks_ = std::move(breaks);
  k.lo_ = support_lo;
  k.hi_ = support_hi;
  return k;
}

RadialKernel RadialKernel::hardy(int Q) {
  return from_pieces("hardy", {{1.0, kInf, -static_cast<double>(Q), 1.0}});
}

RadialKernel RadialKernel::adjoint_hardy() { return from_pieces("adjoint_hardy", {{0.0, 1.0, 0.0, 1.0}}); }

RadialKernel RadialKernel::indicator_power(double c, double e, double a, double b) {
  return from_pieces(fmt(c) + "*t^" + fmt(e) + "*1(" + fmt(a) + "," + fmt(b) + ")", {{a, b, e, c}});
}

RadialKernel RadialKernel::exp_decay(double e) {
  return custom("exp(-t)*t^" + fmt(e), [e](double t) { return std::exp(-t) * std::pow(t, e); });
}

double RadialKernel::operator()(double t) const {
  if (custom_) return (t > lo_ && t < hi_) ? custom_(t) : 0.0;
  double v = 0.0;
  for (const auto& p : pieces_) {
    if (t > p.a && t < p.b) v += p.coefficient * std::pow(t, p.exponent);
  }
  return v;
}

std::vector<double> RadialKernel::breaks() const {
  std::vector<double> b;
  auto add = [&b](double t) {
    if (t > 0.0 && std::isfinite(t)) b.push_back(t);
  };
  if (custom_) {
    for (double t : custom_breaks_) add(t);
    add(lo_);
    add(hi_);
  } else {
    for (const auto& p : pieces_) {
      add(p.a);
      add(p.b);
    }
  }
  return sorted_unique(std::move(b));
}

RadialKernel RadialKernel::truncated(double a, double b) const {
  if (!(a >= 0.0) || !(b > a)) throw std::invalid_argument("truncation needs 0 <= a < b");
  const std::string lbl = label_ + "*1(" + fmt(a) + "," + fmt(b) + ")";
  if (custom_) {
    auto br = custom_breaks_;
    return custom(lbl, custom_, br, std::max(lo_, a), std::min(hi_, b));
  }
  std::vector<KernelPiece> cut;
  for (auto p : pieces_) {
    p.a = std::max(p.a, a);
    p.b = std::min(p.b, b);
    if (p.b > p.a) cut.push_back(p);
  }
  if (cut.empty()) cut.push_back({a, b, 0.0, 0.0});
  return from_pieces(lbl, std::move(cut));
}

// ---------------------------------------------------------------- symbols

SphereSymbol SphereSymbol::one() {
  SphereSymbol s;
  s.label_ = "one";
  return s;
}

SphereSymbol SphereSymbol::affine(double a, double b, int k) {
  if (k < 0) throw std::invalid_argument("affine symbol needs a coordinate index >= 0");
  SphereSymbol s;
  s.label_ = fmt(a) + "+" + fmt(b) + "*y" + std::to_string(k);
  s.fn_ = [a, b, k](const HPoint& y) {
    if (static_cast<std::size_t>(k) >= y.size()) throw std::out_of_range("affine symbol coordinate");
    return Complex(a + b * y[static_cast<std::size_t>(k)]);
  };
  return s;
}

SphereSymbol SphereSymbol::phase(int m) {
  SphereSymbol s;
  s.label_ = "phase" + std::to_string(m);
  s.fn_ = [m](const HPoint& y) {
    const Complex z1(y[0], y[static_cast<std::size_t>(y.n())]);
    const double a = std::abs(z1);
    if (a == 0.0) return Complex(1.0);
    return std::pow(z1 / a, m);
  };
  return s;
}

SphereSymbol SphereSymbol::custom(std::string label, PointFn omega) {
  SphereSymbol s;
  s.label_ = std::move(label);
  s.fn_ = std::move(omega);
  return s;
}

double SphereSymbol::norm(double s, const SphereRule& rule) const {
  if (!(s > 0.0)) throw std::invalid_argument("symbol norm needs s > 0");
  if (is_one()) return std::pow(total_weight(rule), 1.0 / s);
  std::vector<double> v(rule.nodes.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = rule.weights[i] * std::pow(std::abs(fn_(rule.nodes[i])), s);
  return std::pow(pairwise_sum(v), 1.0 / s);
}

Complex SphereSymbol::integral(const SphereRule& rule) const {
  if (is_one()) return total_weight(rule);
  std::vector<Complex> v(rule.nodes.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = rule.weights[i] * fn_(rule.nodes[i]);
  return pairwise_sum(v);
}

PointFn SphereSymbol::dual(double s) const {
  if (is_one()) return {};
  auto fn = fn_;
  return [fn, s](const HPoint& y) {
    const Complex w = fn(y);
    const double a = std::abs(w);
    if (a == 0.0) return Complex(0.0);
    return std::pow(a, s - 2.0) * std::conj(w);
  };
}

// ---------------------------------------------------------------- Hausdorff operator

SphereMoment::SphereMoment(const SphereSymbol& omega, const Field& f, const Rules& rules)
    : f_(f), rules_(rules), omega_(omega) {
  const SphereRule& rule = *rules.sphere;
  if (f.is_zero()) return;
  omega_vals_.resize(rule.nodes.size());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) omega_vals_[i] = rule.weights[i] * omega(rule.nodes[i]);
  if (!f.separable()) return;
  const Complex base = pairwise_sum(omega_vals_);
  for (const auto& term : f.terms()) {
    if (!term.angular) {
      coef_.push_back(base);
      continue;
    }
    std::vector<Complex> v(rule.nodes.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = omega_vals_[i] * term.angular(rule.nodes[i]);
    coef_.push_back(pairwise_sum(v));
  }
}

Complex SphereMoment::operator()(double rho) const {
  if (f_.is_zero()) return 0.0;
  if (f_.separable()) {
    Complex v = 0.0;
    const auto& terms = f_.terms();
    for (std::size_t k = 0; k < terms.size(); ++k) {
      if (coef_[k] != Complex(0.0)) v += coef_[k] * terms[k].radial(rho);
    }
    return v;
  }
  const auto& nodes = rules_.sphere->nodes;
  std::vector<Complex> v(nodes.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = omega_vals_[i] * f_(dilate(rho, nodes[i]));
  return pairwise_sum(v);
}

Integral<Complex> hausdorff_apply_at(const RadialKernel& phi, const SphereMoment& F, double r,
                                     const RadialOptions& opts) {
  if (!(r > 0.0)) throw std::invalid_argument("hausdorff_apply_at needs r > 0");
  if (F.field().is_zero()) return {};
  const auto splits = t_splits(phi, F.field(), r);
  auto g = [&phi, &F, r](double t) {
    const double k = phi(t);
    if (k == 0.0) return Complex(0.0);
    return k / t * F(r / t);
  };
  return integrate_interval_c(g, phi.support_lo(), phi.support_hi(), splits, opts);
}

Integral<Complex> hausdorff_apply(const RadialKernel& phi, const SphereSymbol& omega, const Field& f,
                                  const HPoint& x, const Rules& rules) {
  if (f.is_zero()) return {};
  const double r = hnorm(x);
  if (r == 0.0) {
    const auto br = phi.breaks();
    const auto I = integrate_interval([&phi](double t) { return phi(t) / t; }, phi.support_lo(),
                                      phi.support_hi(), br, rules.radial);
    if (I.status != Status::ok) {
      throw std::domain_error("H f(0) needs ∫Φ(t)/t dt < ∞; got " + to_string(I.status));
    }
    Integral<Complex> out;
    out.value = f(x) * I.value * omega.integral(*rules.sphere);
    out.evaluations = I.evaluations;
    return out;
  }
  const SphereMoment F(omega, f, rules);
  return hausdorff_apply_at(phi, F, r, rules.radial);
}

Field hausdorff_field(const RadialKernel& phi, const SphereSymbol& omega, const Field& f,
                      const Rules& rules) {
  if (f.is_zero()) return Field();
  auto F = std::make_shared<const SphereMoment>(omega, f, rules);
  const RadialOptions opts = rules.radial;
  auto g = [phi, F, opts](double r) -> Complex {
    if (r == 0.0) return std::numeric_limits<double>::quiet_NaN();
    const auto I = hausdorff_apply_at(phi, *F, r, opts);
    if (I.status == Status::divergent) return std::numeric_limits<double>::quiet_NaN();
    return I.value;
  };
  std::vector<double> br;
  std::vector<double> fb = f.breaks();
  for (double tau : phi.breaks()) {
    for (double beta : fb) br.push_back(beta * tau);
  }
  return Field::radial("H(" + f.label() + ")", g, sorted_unique(std::move(br)));
}

DirectResult hausdorff_apply_direct(const RadialKernel& phi, const SphereSymbol& omega,
                                    const Field& f, const HPoint& x, const MCOracle& mc,
                                    double outer_radius, const Rules& rules) {
  if (!(outer_radius > 1.0)) throw std::invalid_argument("direct form needs outer_radius > 1");
  const double r = hnorm(x);
  if (!(r > 0.0)) throw std::domain_error("direct form is evaluated at x != 0");
  DirectResult res;
  if (f.is_zero()) return res;
  const GroupDims& d = rules.dims();
  const double R = outer_radius;

  // Kernel mass ∫Φ/t outside t ∈ [r/R, rR], the range the window |y| ∈ [1/R, R] sees.
  auto kernel_mass = [&phi, &rules](double a, double b) {
    if (!(b > a)) return 0.0;
    const auto I = integrate_interval([&phi](double t) { return phi(t) / t; }, a, b, phi.breaks(),
                                      rules.radial);
    return I.status == Status::ok ? I.value : kInf;
  };
  const double lo = std::max(phi.support_lo(), r / R), hi = std::min(phi.support_hi(), r * R);
  const double inside = kernel_mass(lo, hi);
  const double outside = kernel_mass(phi.support_lo(), std::min(r / R, phi.support_hi())) +
                         kernel_mass(std::max(r * R, phi.support_lo()), phi.support_hi());
  const bool certified = outside <= 1e-6 * inside;

  if (omega.is_one() && f.known_radial()) {
    const auto terms = f.terms();
    auto g = [&](double rho) {
      const double k = phi(r / rho);
      if (k == 0.0) return Complex(0.0);
      Complex v = 0.0;
      for (const auto& t : terms) v += t.radial(rho);
      return k / rho * d.omega_Q * v;
    };
    std::vector<double> splits = f.breaks();
    for (double tau : phi.breaks()) splits.push_back(r / tau);
    splits = sorted_unique(std::move(splits));
    const auto I = integrate_interval_c(g, 1.0 / R, R, splits, rules.radial);
    res.value = I.value;
    res.status = I.status;
    res.note = I.note;
    if (!certified && res.status == Status::ok) {
      const auto J = integrate_interval_c(g, 0.5 / R, 2.0 * R, splits, rules.radial);
      if (std::abs(J.value - I.value) > 1e-6 * std::abs(J.value)) {
        res.status = Status::inconclusive;
        res.note = "window [1/R, R] truncates a non-negligible part of the integral";
      }
    }
    return res;
  }

  const SphereSymbol om = omega;
  const Field integrand = Field::general("direct", [&phi, om, f, r, d](const HPoint& y) {
    const double rho = hnorm(y);
    const double k = phi(r / rho);
    if (k == 0.0) return Complex(0.0);
    return k * std::pow(rho, -d.Q) * om(dilate(1.0 / rho, y)) * f(y);
  });
  // Sample only the part of the window where Φ(|x|/|y|) can be nonzero.
  const double y_lo = std::max(1.0 / R, phi.support_hi() < kInf ? r / phi.support_hi() : 0.0);
  const double y_hi = std::min(R, phi.support_lo() > 0.0 ? r / phi.support_lo() : kInf);
  if (!(y_hi > y_lo)) return res;
  const auto m = mc_integrate(integrand, Region::shell(y_lo, y_hi), d, mc);
  res.value = m.value;
  res.std_error = m.std_error;
  if (!certified) {
    res.status = Status::inconclusive;
    res.note = "kernel mass outside the window is not negligible";
  }
  return res;
}

Integral<Complex> hardy_apply(const Field& f, const HPoint& x, const Rules& rules) {
  const double r = hnorm(x);
  if (!(r > 0.0)) throw std::domain_error("Hardy operator is evaluated at x != 0");
  auto I = integrate_region(f, Region::ball(r), *rules.sphere, rules.radial);
  I.value /= std::pow(r, rules.dims().Q);
  return I;
}

Integral<Complex> adjoint_hardy_apply(const Field& f, const HPoint& x, const Rules& rules) {
  const double r = hnorm(x);
  if (!(r > 0.0)) throw std::domain_error("adjoint Hardy operator is evaluated at x != 0");
  if (f.is_zero()) return {};
  const int Q = rules.dims().Q;
  const auto P = sphere_profile(f, *rules.sphere);
  return integrate_profile([P, Q](double rho) { return P(rho) * std::pow(rho, -Q); },
                           Region::shell(r, kInf), Q, f.breaks(), rules.radial);
}

Integral<Complex> commutator_apply(const RadialKernel& phi, const SphereSymbol& omega,
                                   const Field& b, const Field& f, const HPoint& x,
                                   const Rules& rules) {
  const double r = hnorm(x);
  if (f.is_zero() || r == 0.0) return {};
  const SphereRule& rule = *rules.sphere;
  std::vector<Complex> wo(rule.nodes.size());
  for (std::size_t i = 0; i < wo.size(); ++i) wo[i] = rule.weights[i] * omega(rule.nodes[i]);
  const Complex bx = b(x);
  auto sb = std::make_shared<SphereSampler>(b, rule);
  auto sf = std::make_shared<SphereSampler>(f, rule);
  auto g = [&, sb, sf](double t) {
    const double k = phi(t);
    if (k == 0.0) return Complex(0.0);
    std::vector<Complex> vb, vf;
    sb->values_at(r / t, vb);
    sf->values_at(r / t, vf);
    std::vector<Complex> terms(wo.size());
    for (std::size_t i = 0; i < wo.size(); ++i) {
      const Complex fi = vf[sf->radial() ? 0 : i];
      terms[i] = fi == Complex(0.0) ? Complex(0.0) : wo[i] * (bx - vb[sb->radial() ? 0 : i]) * fi;
    }
    return k / t * pairwise_sum(terms);
  };
  std::vector<double> splits = t_splits(phi, f, r);
  for (double beta : b.breaks()) splits.push_back(r / beta);
  splits = sorted_unique(std::move(splits));
  return integrate_interval_c(g, phi.support_lo(), phi.support_hi(), splits, rules.radial);
}

Field commutator_field(const RadialKernel& phi, const SphereSymbol& omega, const Field& b,
                       const Field& f, const Rules& rules) {
  if (f.is_zero()) return Field();
  const Field h1 = hausdorff_field(phi, omega, f, rules);
  const Field h2 = hausdorff_field(phi, omega, b.times(f), rules);
  return b.times(h1).plus(h2.scaled(-1.0)).with_label("[b,H](" + f.label() + ")");
}

double psi_factor(double t, int Q) {
  if (!(t > 0.0)) throw std::domain_error("psi_factor needs t > 0");
  return t <= 1.0 ? std::pow(t, -Q) : std::pow(t, Q);
}

}  // namespace heis
