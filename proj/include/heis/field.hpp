#pragma once

#include "heis/hgroup.hpp"

#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace heis {

using Complex = std::complex<double>;
using RadialFn = std::function<Complex(double)>;
using PointFn = std::function<Complex(const HPoint&)>;

// One product term g(r) * a(y') of a field written in polar coordinates.
// An empty angular function means a == 1.
struct SeparableTerm {
  RadialFn radial;
  PointFn angular;
};

// Complex scalar field on H^n. Fields built from separable terms expose that
// structure so integrators can evaluate the radial factors once per radius.
class Field {
 public:
  Field();  // identically zero

  static Field constant(Complex c, std::string label = "");
  static Field radial(std::string label, RadialFn g, std::vector<double> breaks = {});
  static Field separable(std::string label, RadialFn g, PointFn angular,
                         std::vector<double> breaks = {});
  static Field from_terms(std::string label, std::vector<SeparableTerm> terms,
                          std::vector<double> breaks = {});
  static Field general(std::string label, PointFn f, std::vector<double> breaks = {});

  Complex operator()(const HPoint& x) const;

  const std::string& label() const { return impl_->label; }
  bool is_zero() const { return impl_->zero; }
  bool separable() const { return !impl_->terms.empty(); }
  bool known_radial() const;
  const std::vector<SeparableTerm>& terms() const { return impl_->terms; }
  // Radii where the field may jump; integrators split there.
  const std::vector<double>& breaks() const { return impl_->breaks; }

  Field scaled(Complex c) const;
  Field plus(const Field& other) const;
  Field times(const Field& other) const;
  Field with_label(std::string label) const;

 private:
  struct Impl {
    std::string label;
    std::vector<SeparableTerm> terms;
    PointFn general;
    std::vector<double> breaks;
    bool zero = false;
  };
  explicit Field(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

std::vector<double> merge_breaks(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace heis
