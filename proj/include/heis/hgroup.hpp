#pragma once

#include <boost/container/small_vector.hpp>

#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>

namespace heis {

// Point of H^n stored flat as (z_1..z_2n, s).
class HPoint {
 public:
  using Storage = boost::container::small_vector<double, 9>;

  HPoint() = default;
  HPoint(std::initializer_list<double> coords);
  explicit HPoint(Storage coords);
  static HPoint origin(int n);

  int n() const { return static_cast<int>((c_.size() - 1) / 2); }
  std::size_t size() const { return c_.size(); }
  double& operator[](std::size_t i) { return c_[i]; }
  double operator[](std::size_t i) const { return c_[i]; }
  std::span<const double> z() const { return {c_.data(), c_.size() - 1}; }
  double s() const { return c_.back(); }
  std::span<const double> coords() const { return {c_.data(), c_.size()}; }

  bool operator==(const HPoint& other) const = default;

 private:
  Storage c_;
};

struct GroupDims {
  int n = 1;
  int Q = 4;
  double nu_Q = 0.0;     // measure of the unit ball
  double omega_Q = 0.0;  // Q * nu_Q, mass of the unit sphere
  // Haar measure is normalized as haar_factor * Lebesgue so that |B(0,1)| = nu_Q.
  double haar_factor = 1.0;
  double lebesgue_ball_volume = 0.0;
};

GroupDims geometry_constants(int n);

HPoint group_mul(const HPoint& x, const HPoint& y);
HPoint group_inv(const HPoint& x);
HPoint dilate(double r, const HPoint& x);
double hnorm(const HPoint& x);
double hdist(const HPoint& x, const HPoint& y);

struct PolarCoords {
  double r = 0.0;
  HPoint sphere_point;
};

PolarCoords to_polar(const HPoint& x, double eps = 1e-300);
HPoint from_polar(const PolarCoords& p);

// Origin-centered radial shell {inner < |x|_h <= outer}; a ball has inner = 0
// and includes the origin.
class Region {
 public:
  enum class Kind { ball, annulus, dilated_annulus, shell };

  static Region ball(double R);
  static Region annulus(int k);
  static Region dilated_annulus(int k, double t);
  static Region shell(double inner, double outer);

  Kind kind() const { return kind_; }
  double inner() const { return inner_; }
  double outer() const { return outer_; }
  bool bounded() const { return outer_ < std::numeric_limits<double>::infinity(); }
  bool contains(const HPoint& x) const;
  std::string label() const;

 private:
  Region(Kind kind, double inner, double outer);
  Kind kind_;
  double inner_;
  double outer_;
};

}  // namespace heis
