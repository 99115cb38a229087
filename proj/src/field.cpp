#include "heis/field.hpp"

#include <algorithm>
#include <cmath>

namespace heis {

namespace {

HPoint north_pole(int n) {
  HPoint p = HPoint::origin(n);
  p[p.size() - 1] = 1.0;
  return p;
}

}  // namespace

std::vector<double> merge_breaks(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  for (double v : a) {
    if (v > 0.0 && std::isfinite(v)) out.push_back(v);
  }
  for (double v : b) {
    if (v > 0.0 && std::isfinite(v)) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Field::Field() {
  auto impl = std::make_shared<Impl>();
  impl->label = "zero";
  impl->zero = true;
  impl->terms.push_back({[](double) { return Complex(0.0); }, {}});
  impl_ = std::move(impl);
}

Field Field::constant(Complex c, std::string label) {
  if (label.empty()) label = "const";
  return radial(std::move(label), [c](double) { return c; });
}

Field Field::radial(std::string label, RadialFn g, std::vector<double> breaks) {
  return from_terms(std::move(label), {{std::move(g), {}}}, std::move(breaks));
}

Field Field::separable(std::string label, RadialFn g, PointFn angular,
                       std::vector<double> breaks) {
  return from_terms(std::move(label), {{std::move(g), std::move(angular)}}, std::move(breaks));
}

Field Field::from_terms(std::string label, std::vector<SeparableTerm> terms,
                        std::vector<double> breaks) {
  auto impl = std::make_shared<Impl>();
  impl->label = std::move(label);
  impl->terms = std::move(terms);
  impl->breaks = merge_breaks(breaks, {});
  return Field(std::move(impl));
}

Field Field::general(std::string label, PointFn f, std::vector<double> breaks) {
  auto impl = std::make_shared<Impl>();
  impl->label = std::move(label);
  impl->general = std::move(f);
  impl->breaks = merge_breaks(breaks, {});
  return Field(std::move(impl));
}

bool Field::known_radial() const {
  if (impl_->terms.empty()) return false;
  for (const auto& t : impl_->terms) {
    if (t.angular) return false;
  }
  return true;
}

Complex Field::operator()(const HPoint& x) const {
  if (impl_->zero) return 0.0;
  if (!separable()) return impl_->general(x);
  const double r = hnorm(x);
  bool need_direction = false;
  for (const auto& t : impl_->terms) need_direction = need_direction || bool(t.angular);
  Complex sum = 0.0;
  if (!need_direction) {
    for (const auto& t : impl_->terms) sum += t.radial(r);
    return sum;
  }
  // The direction at the origin is arbitrary; a fixed pole keeps evaluation pure.
  const HPoint y = r > 0.0 ? dilate(1.0 / r, x) : north_pole(x.n());
  for (const auto& t : impl_->terms) {
    const Complex g = t.radial(r);
    sum += t.angular ? g * t.angular(y) : g;
  }
  return sum;
}

Field Field::scaled(Complex c) const {
  if (separable()) {
    std::vector<SeparableTerm> terms;
    for (const auto& t : impl_->terms) {
      RadialFn g = t.radial;
      terms.push_back({[g, c](double r) { return c * g(r); }, t.angular});
    }
    return from_terms(label(), std::move(terms), breaks());
  }
  Field self = *this;
  return general(label(), [self, c](const HPoint& x) { return c * self(x); }, breaks());
}

Field Field::plus(const Field& other) const {
  if (is_zero()) return other;
  if (other.is_zero()) return *this;
  const std::string lbl = label() + "+" + other.label();
  if (separable() && other.separable()) {
    auto terms = impl_->terms;
    terms.insert(terms.end(), other.terms().begin(), other.terms().end());
    return from_terms(lbl, std::move(terms), merge_breaks(breaks(), other.breaks()));
  }
  Field a = *this;
  Field b = other;
  return general(lbl, [a, b](const HPoint& x) { return a(x) + b(x); },
                 merge_breaks(breaks(), other.breaks()));
}

Field Field::times(const Field& other) const {
  if (is_zero() || other.is_zero()) return Field();
  const std::string lbl = label() + "*" + other.label();
  if (separable() && other.separable()) {
    std::vector<SeparableTerm> terms;
    for (const auto& s : impl_->terms) {
      for (const auto& t : other.terms()) {
        RadialFn g1 = s.radial;
        RadialFn g2 = t.radial;
        PointFn a1 = s.angular;
        PointFn a2 = t.angular;
        PointFn a;
        if (a1 && a2) {
          a = [a1, a2](const HPoint& y) { return a1(y) * a2(y); };
        } else {
          a = a1 ? a1 : a2;
        }
        terms.push_back({[g1, g2](double r) { return g1(r) * g2(r); }, std::move(a)});
      }
    }
    return from_terms(lbl, std::move(terms), merge_breaks(breaks(), other.breaks()));
  }
  Field a = *this;
  Field b = other;
  return general(lbl, [a, b](const HPoint& x) { return a(x) * b(x); },
                 merge_breaks(breaks(), other.breaks()));
}

Field Field::with_label(std::string label) const {
  auto impl = std::make_shared<Impl>(*impl_);
  impl->label = std::move(label);
  return Field(std::move(impl));
}

}  // namespace heis
