#include "heis/hgroup.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace heis {

namespace {

void require_valid(const HPoint& x) {
  if (x.size() < 3 || x.size() % 2 == 0) {
    throw std::invalid_argument("HPoint must have 2n+1 >= 3 coordinates, got " +
                                std::to_string(x.size()));
  }
}

void require_same_dims(const HPoint& x, const HPoint& y) {
  require_valid(x);
  if (x.size() != y.size()) {
    throw std::invalid_argument("dimension mismatch: " + std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()) + " coordinates");
  }
}

}  // namespace

HPoint::HPoint(std::initializer_list<double> coords) : c_(coords.begin(), coords.end()) {
  require_valid(*this);
}

HPoint::HPoint(Storage coords) : c_(std::move(coords)) { require_valid(*this); }

HPoint HPoint::origin(int n) {
  if (n < 1) throw std::invalid_argument("Heisenberg index n must be >= 1");
  return HPoint(Storage(static_cast<std::size_t>(2 * n + 1), 0.0));
}

GroupDims geometry_constants(int n) {
  if (n < 1) throw std::invalid_argument("Heisenberg index n must be >= 1");
  const double nd = n;
  const double pi = std::numbers::pi;
  GroupDims d;
  d.n = n;
  d.Q = 2 * n + 2;
  d.nu_Q = 2.0 * std::pow(pi, nd + 0.5) * std::tgamma(nd / 2.0) /
           (std::tgamma(nd + 1.0) * std::tgamma((nd + 1.0) / 2.0));
  d.omega_Q = d.Q * d.nu_Q;
  // Lebesgue volume of {|x|_h <= 1}: |S^{2n-1}| * (1/2) B(n/2, 3/2).
  d.lebesgue_ball_volume = std::pow(pi, nd + 0.5) * std::tgamma(nd / 2.0) /
                           (2.0 * std::tgamma(nd) * std::tgamma((nd + 3.0) / 2.0));
  d.haar_factor = 2.0 * (nd + 1.0) / nd;
  return d;
}

HPoint group_mul(const HPoint& x, const HPoint& y) {
  require_same_dims(x, y);
  const std::size_t n = static_cast<std::size_t>(x.n());
  HPoint::Storage out(x.size());
  double twist = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    twist += y[j] * x[n + j] - x[j] * y[n + j];
  }
  for (std::size_t i = 0; i < 2 * n; ++i) out[i] = x[i] + y[i];
  out[2 * n] = x[2 * n] + y[2 * n] + 2.0 * twist;
  return HPoint(std::move(out));
}

HPoint group_inv(const HPoint& x) {
  require_valid(x);
  HPoint::Storage out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = -x[i];
  return HPoint(std::move(out));
}

HPoint dilate(double r, const HPoint& x) {
  if (!(r > 0.0)) throw std::invalid_argument("dilation factor must be > 0");
  require_valid(x);
  HPoint::Storage out(x.size());
  for (std::size_t i = 0; i + 1 < x.size(); ++i) out[i] = r * x[i];
  out.back() = r * r * x.s();
  return HPoint(std::move(out));
}

double hnorm(const HPoint& x) {
  double zz = 0.0;
  for (double v : x.z()) zz += v * v;
  return std::sqrt(std::hypot(zz, x.s()));
}

double hdist(const HPoint& x, const HPoint& y) {
  require_same_dims(x, y);
  return hnorm(group_mul(group_inv(y), x));
}

PolarCoords to_polar(const HPoint& x, double eps) {
  const double r = hnorm(x);
  if (!(r > eps)) throw std::domain_error("to_polar: point too close to the origin");
  return {r, dilate(1.0 / r, x)};
}

HPoint from_polar(const PolarCoords& p) {
  if (p.r == 0.0) return HPoint::origin(p.sphere_point.n());
  return dilate(p.r, p.sphere_point);
}

Region::Region(Kind kind, double inner, double outer) : kind_(kind), inner_(inner), outer_(outer) {
  if (!(inner >= 0.0) || !(outer > inner)) {
    std::ostringstream msg;
    msg << "invalid radial region (" << inner << ", " << outer << "]";
    throw std::invalid_argument(msg.str());
  }
}

Region Region::ball(double R) { return Region(Kind::ball, 0.0, R); }

Region Region::annulus(int k) {
  return Region(Kind::annulus, std::ldexp(1.0, k - 1), std::ldexp(1.0, k));
}

Region Region::dilated_annulus(int k, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("dilated_annulus: t must be > 0");
  return Region(Kind::dilated_annulus, std::ldexp(1.0, k - 1) / t, std::ldexp(1.0, k) / t);
}

Region Region::shell(double inner, double outer) { return Region(Kind::shell, inner, outer); }

bool Region::contains(const HPoint& x) const {
  const double r = hnorm(x);
  if (kind_ == Kind::ball) return r <= outer_;
  return r > inner_ && r <= outer_;
}

std::string Region::label() const {
  std::ostringstream out;
  out.precision(17);
  if (kind_ == Kind::ball) {
    out << "B(0," << outer_ << ")";
  } else {
    out << "{" << inner_ << " < |x| <= " << outer_ << "}";
  }
  return out.str();
}

}  // namespace heis
