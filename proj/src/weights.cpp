#include "heis/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
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

HPoint axis_point(int n, int axis, double scale) {
  HPoint p = HPoint::origin(n);
  p[static_cast<std::size_t>(axis)] = 1.0;
  return dilate(scale, p);
}

// Depends only on the dilation class of the ball, so δ_t-related balls get δ_t-related samples
// and nested families of a homogeneous weight differ only by the balls they add.
std::uint64_t ball_seed(std::uint64_t base, const Ball& b) {
  std::uint64_t h = base;
  for (std::int64_t v : {std::int64_t(b.axis), std::int64_t(b.radius_level - b.center_level)}) {
    h ^= static_cast<std::uint64_t>(v + 1000) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

double ball_haar_measure(const GroupDims& d, double radius) { return d.nu_Q * std::pow(radius, d.Q); }

}  // namespace

Weight Weight::power(double gamma) {
  Weight w;
  std::ostringstream lbl;
  lbl << "|x|^" << gamma;
  w.label_ = lbl.str();
  w.gamma_ = gamma;
  w.profile_ = [gamma](double r) {
    if (gamma == 0.0) return 1.0;
    if (r == 0.0) return gamma > 0.0 ? 0.0 : kInf;
    return std::pow(r, gamma);
  };
  auto prof = w.profile_;
  w.evaluator_ = [prof](const HPoint& x) { return prof(hnorm(x)); };
  return w;
}

Weight Weight::radial(std::string label, std::function<double(double)> profile) {
  Weight w;
  w.label_ = std::move(label);
  w.profile_ = std::move(profile);
  auto prof = w.profile_;
  w.evaluator_ = [prof](const HPoint& x) { return prof(hnorm(x)); };
  return w;
}

Weight Weight::custom(std::string label, std::function<double(const HPoint&)> evaluator) {
  Weight w;
  w.label_ = std::move(label);
  w.evaluator_ = std::move(evaluator);
  return w;
}

double Weight::operator()(const HPoint& x) const { return evaluator_(x); }

double Weight::at_origin(int n) const { return evaluator_(HPoint::origin(n)); }

Weight Weight::pow(double s) const {
  if (gamma_) return power(*gamma_ * s);
  const std::string lbl = "(" + label_ + ")^" + fmt(s);
  if (profile_) {
    auto prof = profile_;
    return radial(lbl, [prof, s](double r) { return std::pow(prof(r), s); });
  }
  auto ev = evaluator_;
  return custom(lbl, [ev, s](const HPoint& x) { return std::pow(ev(x), s); });
}

Field Weight::as_field() const {
  if (profile_) {
    auto prof = profile_;
    return Field::radial(label_, [prof](double r) { return Complex(prof(r)); });
  }
  auto ev = evaluator_;
  return Field::general(label_, [ev](const HPoint& x) { return Complex(ev(x)); });
}

std::function<double(double)> weighted_abs_power_profile(const Field& f, double q, const Weight& w,
                                                         const SphereRule& rule) {
  const double mass = total_weight(rule);
  auto powq = [q](Complex v) {
    const double a = std::abs(v);
    return a == 0.0 ? 0.0 : std::pow(a, q);
  };
  if (f.is_zero()) return [](double) { return 0.0; };
  if (w.is_radial() && f.separable() && f.terms().size() == 1) {
    const auto& term = f.terms().front();
    double angular_mass = mass;
    if (term.angular) {
      std::vector<double> vals(rule.nodes.size());
      for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = rule.weights[i] * powq(term.angular(rule.nodes[i]));
      angular_mass = pairwise_sum(vals);
    }
    RadialFn g = term.radial;
    return [g, w, angular_mass, powq](double r) {
      const double a = powq(g(r));
      return a == 0.0 ? 0.0 : a * w.at_radius(r) * angular_mass;
    };
  }
  auto sampler = std::make_shared<SphereSampler>(f, rule);
  if (sampler->radial() && w.is_radial()) {
    return [sampler, w, mass, powq](double r) {
      std::vector<Complex> vals;
      sampler->values_at(r, vals);
      const double a = powq(vals[0]);
      return a == 0.0 ? 0.0 : a * w.at_radius(r) * mass;
    };
  }
  const SphereRule* rp = &rule;
  return [sampler, rp, w, powq](double r) {
    std::vector<Complex> vals;
    sampler->values_at(r, vals);
    std::vector<double> terms(rp->nodes.size());
    const bool radial_w = w.is_radial();
    const double wr = radial_w ? w.at_radius(r) : 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const double a = powq(vals[sampler->radial() ? 0 : i]);
      if (a == 0.0) {
        terms[i] = 0.0;
        continue;
      }
      const double wi = radial_w ? wr : w(dilate(r, rp->nodes[i]));
      terms[i] = rp->weights[i] * a * wi;
    }
    return pairwise_sum(terms);
  };
}

Integral<double> weighted_measure(const Weight& w, const Region& region, const Rules& rules) {
  const SphereRule& rule = *rules.sphere;
  std::function<double(double)> profile;
  if (w.is_radial()) {
    const double mass = total_weight(rule);
    profile = [w, mass](double r) { return mass * w.at_radius(r); };
  } else {
    profile = [w, &rule](double r) {
      std::vector<double> vals(rule.nodes.size());
      for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = rule.weights[i] * w(dilate(r, rule.nodes[i]));
      return pairwise_sum(vals);
    };
  }
  return integrate_profile_real(profile, region, rules.dims().Q, {}, rules.radial);
}

double power_weight_ball_measure(double gamma, double R, const GroupDims& d) {
  if (gamma <= -d.Q) return kInf;
  return d.omega_Q * std::pow(R, d.Q + gamma) / (d.Q + gamma);
}

std::vector<Ball> ball_family(int n, int center_levels, int radius_levels) {
  std::vector<Ball> out;
  for (int i = -radius_levels; i <= radius_levels; ++i) {
    out.push_back({HPoint::origin(n), std::ldexp(1.0, i), 0, -1, i});
  }
  for (int j = -center_levels; j <= center_levels; ++j) {
    for (int a = 0; a <= 2 * n; ++a) {
      for (int i = -radius_levels; i <= radius_levels; ++i) {
        out.push_back({axis_point(n, a, std::ldexp(1.0, j)), std::ldexp(1.0, i), j, a, i});
      }
    }
  }
  return out;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::member:
      return "member";
    case Verdict::non_member:
      return "non-member";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "unknown";
}

BallFamilySampler::BallFamilySampler(const Rules& rules, const MCOracle& mc, const ApOptions& opts,
                                     bool radial_only)
    : rules_(rules), opts_(opts), radial_only_(radial_only) {
  const GroupDims& d = rules.dims();
  balls_ = ball_family(d.n, opts.center_levels, opts.radius_levels);
  std::shared_ptr<const SphereRule> dirs;
  if (!radial_only) {
    dirs = std::make_shared<const SphereRule>(build_sphere_rule(d, d.n == 1 ? 8 : 6));
  }
  const double mass = d.omega_Q;
  HPoint pole = HPoint::origin(d.n);
  pole[pole.size() - 1] = 1.0;
  const auto& gl = gauss_legendre(opts.polar_nodes);

  for (const Ball& ball : balls_) {
    BallSample s;
    const bool centered = ball.axis < 0;
    if (centered) {
      s.contains_origin = true;
      s.inscribed_radius = ball.radius;
    } else {
      const double dist = hnorm(ball.center);
      if (ball.radius > dist) {
        s.contains_origin = true;
        s.inscribed_radius = ball.radius - dist;  // gauge triangle inequality
      }
    }
    if (s.inscribed_radius > 0.0) {
      double edge = s.inscribed_radius;
      for (int k = 0; k < opts.polar_bands; ++k) {
        const double lo = edge / 2.0;
        const double L = std::log(edge / lo);
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
          const double t = lo * std::exp(0.5 * L * (gl.nodes[i] + 1.0));
          const double wt = 0.5 * L * gl.weights[i] * std::pow(t, d.Q);
          if (radial_only) {
            s.points.push_back(dilate(t, pole));
            s.weights.push_back(wt * mass);
          } else {
            for (std::size_t m = 0; m < dirs->nodes.size(); ++m) {
              s.points.push_back(dilate(t, dirs->nodes[m]));
              s.weights.push_back(wt * dirs->weights[m]);
            }
          }
        }
        edge = lo;
      }
    }
    if (!centered) {
      UniformStream rng(ball_seed(mc.seed, ball));
      const double R = ball.radius;
      const double w_each = ball_haar_measure(d, R) / static_cast<double>(opts.mc_samples);
      long accepted = 0;
      HPoint::Storage c(2 * d.n + 1);
      while (accepted < opts.mc_samples) {
        for (std::size_t k = 0; k + 1 < c.size(); ++k) c[k] = R * (2.0 * rng.next() - 1.0);
        c.back() = R * R * (2.0 * rng.next() - 1.0);
        HPoint x(c);
        if (hnorm(x) > R) continue;
        ++accepted;
        HPoint y = group_mul(ball.center, x);
        if (s.contains_origin && hnorm(y) <= s.inscribed_radius) continue;
        s.points.push_back(std::move(y));
        s.weights.push_back(w_each);
      }
    }
    s.radii.reserve(s.points.size());
    for (const auto& x : s.points) s.radii.push_back(hnorm(x));
    samples_.push_back(std::move(s));
  }
}

namespace {

std::vector<double> weight_values(const Weight& w, const BallSample& s, bool radial_only) {
  std::vector<double> v(s.points.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = (radial_only && w.is_radial()) ? w.at_radius(s.radii[i]) : w(s.points[i]);
  }
  return v;
}

double weighted_mean(const std::vector<double>& wts, const std::vector<double>& vals, double total,
                     const std::function<double(double)>& map) {
  std::vector<double> terms(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) terms[i] = wts[i] * map(vals[i]);
  return pairwise_sum(terms) / total;
}

double weighted_quantile(const std::vector<double>& wts, const std::vector<double>& vals,
                         double level) {
  std::vector<std::size_t> idx(vals.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return vals[a] < vals[b] || (vals[a] == vals[b] && a < b);
  });
  const double total = pairwise_sum(wts);
  double acc = 0.0;
  for (std::size_t i : idx) {
    acc += wts[i];
    if (acc >= level * total) return vals[i];
  }
  return vals[idx.back()];
}

bool centered_divergence(const Weight& w, const Rules& rules, int radius_levels) {
  for (int i = -radius_levels; i <= radius_levels; ++i) {
    const auto m = weighted_measure(w, Region::ball(std::ldexp(1.0, i)), rules);
    if (m.status == Status::divergent || !std::isfinite(m.value)) return true;
  }
  return false;
}

double ap_quotient(const Weight& w, double p, const BallSample& s, bool radial_only, int n,
                   double quantile) {
  const auto vals = weight_values(w, s, radial_only);
  const double total = pairwise_sum(s.weights);
  const double avg = weighted_mean(s.weights, vals, total, [](double v) { return v; });
  if (p == 1.0) {
    double ess = weighted_quantile(s.weights, vals, quantile);
    if (s.contains_origin) ess = std::min(ess, w.at_origin(n));
    return ess > 0.0 ? avg / ess : kInf;
  }
  const double e = -1.0 / (p - 1.0);
  const double dual = weighted_mean(s.weights, vals, total, [e](double v) { return std::pow(v, e); });
  return avg * std::pow(dual, p - 1.0);
}

// Index set of the nested family `steps_down` dyadic steps below the largest.
bool in_level(const Ball& b, const ApOptions& o, int steps_down) {
  const int rl = o.radius_levels - steps_down;
  const int cl = o.center_levels - steps_down;
  if (std::abs(b.radius_level) > rl) return false;
  return b.axis < 0 || std::abs(b.center_level) <= cl;
}

}  // namespace

std::vector<double> ap_quotients(const Weight& w, double p, const BallFamilySampler& sampler) {
  if (!(p >= 1.0)) throw std::invalid_argument("A_p needs p >= 1");
  if (sampler.radial_only() && !w.is_radial()) {
    throw std::invalid_argument("radial-only ball samples cannot estimate a non-radial weight");
  }
  const int n = sampler.rules().dims().n;
  std::vector<double> out(sampler.balls().size(), 0.0);
  for (std::size_t b = 0; b < out.size(); ++b) {
    out[b] = ap_quotient(w, p, sampler.samples()[b], sampler.radial_only(), n, sampler.options().quantile);
  }
  return out;
}

ApReport ap_constant_estimate(const Weight& w, double p, const BallFamilySampler& sampler) {
  const ApOptions& o = sampler.options();
  const Rules& rules = sampler.rules();
  ApReport rep;
  rep.p = p;
  rep.ball_count = static_cast<long>(sampler.balls().size());

  bool divergent = centered_divergence(w, rules, o.radius_levels);
  if (!divergent && p > 1.0) divergent = centered_divergence(w.pow(-1.0 / (p - 1.0)), rules, o.radius_levels);

  const std::vector<double> quotients = ap_quotients(w, p, sampler);
  for (int step = o.steps; step >= 0; --step) {
    double sup = 0.0;
    for (std::size_t b = 0; b < quotients.size(); ++b) {
      if (in_level(sampler.balls()[b], o, step)) sup = std::max(sup, quotients[b]);
    }
    rep.level_estimates.push_back(sup);
  }
  rep.ap_estimate = rep.level_estimates.back();
  if (divergent || !std::isfinite(rep.ap_estimate)) {
    rep.divergent = true;
    rep.ap_estimate = kInf;
    rep.verdict = Verdict::non_member;
    rep.note = divergent ? "weight or dual weight not integrable on a centered ball"
                         : "essential infimum vanishes on a ball";
  } else {
    const auto& lv = rep.level_estimates;
    const double last_change = std::abs(lv.back() / lv[lv.size() - 2] - 1.0);
    if (lv.size() >= 3 && lv.back() > 10.0 * lv.front()) {
      rep.verdict = Verdict::non_member;
      rep.note = "quotient grows by more than 10x across two dyadic steps";
    } else if (last_change < 0.05) {
      rep.verdict = Verdict::member;
    } else {
      rep.verdict = Verdict::inconclusive;
      rep.note = "quotient changed by " + fmt(100.0 * last_change) + "% on the last enlargement";
    }
  }
  for (double r : o.rh_exponents) rep.rh_estimates[r] = rh_constant_estimate(w, r, sampler).estimate;
  rep.critical_index_estimate = critical_index_estimate(w, rules);
  return rep;
}

ApReport ap_constant_estimate(const Weight& w, double p, const Rules& rules, const MCOracle& mc,
                              const ApOptions& opts) {
  const BallFamilySampler sampler(rules, mc, opts, w.is_radial());
  return ap_constant_estimate(w, p, sampler);
}

bool power_ap_membership(double gamma, double p, const GroupDims& dims) {
  if (p == 1.0) return gamma > -dims.Q && gamma <= 0.0;
  return gamma > -dims.Q && gamma < dims.Q * (p - 1.0);
}

RhResult rh_constant_estimate(const Weight& w, double r, const BallFamilySampler& sampler) {
  if (!(r > 1.0)) throw std::invalid_argument("reverse Hölder exponent must be > 1");
  RhResult res;
  if (centered_divergence(w.pow(r), sampler.rules(), sampler.options().radius_levels)) {
    res.divergent = true;
    res.estimate = kInf;
    return res;
  }
  for (const auto& s : sampler.samples()) {
    const auto vals = weight_values(w, s, sampler.radial_only());
    const double total = pairwise_sum(s.weights);
    const double avg = weighted_mean(s.weights, vals, total, [](double v) { return v; });
    const double avg_r = weighted_mean(s.weights, vals, total, [r](double v) { return std::pow(v, r); });
    res.estimate = std::max(res.estimate, std::pow(avg_r, 1.0 / r) / avg);
  }
  return res;
}

RhResult rh_constant_estimate(const Weight& w, double r, const Rules& rules, const MCOracle& mc,
                              const ApOptions& opts) {
  const BallFamilySampler sampler(rules, mc, opts, w.is_radial());
  return rh_constant_estimate(w, r, sampler);
}

double critical_index_estimate(const Weight& w, const Rules& rules, double r_max, double tol) {
  auto finite = [&](double r) {
    for (double R : {1.0 / 64.0, 1.0, 64.0}) {
      const auto m = weighted_measure(w.pow(r), Region::ball(R), rules);
      if (m.status == Status::divergent || !std::isfinite(m.value)) return false;
    }
    return true;
  };
  if (finite(r_max)) return kInf;
  if (!finite(1.0)) return 1.0;
  double lo = 1.0, hi = r_max;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (finite(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double power_critical_index(double gamma, const GroupDims& dims) {
  return gamma < 0.0 ? dims.Q / std::abs(gamma) : kInf;
}

DoublingReport doubling_check(const Weight& w, double p, double r,
                              const std::vector<DoublingPair>& pairs, const Rules& rules) {
  DoublingReport rep;
  if (pairs.empty()) return rep;
  const GroupDims& d = rules.dims();
  const double hi_exp = (r - 1.0) / r;
  std::vector<double> lower, upper;
  for (const auto& [E, B] : pairs) {
    if (E.inner() < B.inner() || E.outer() > B.outer()) {
      throw std::invalid_argument("doubling_check needs E ⊆ B");
    }
    const double mE = d.nu_Q * (std::pow(E.outer(), d.Q) - std::pow(E.inner(), d.Q));
    const double mB = d.nu_Q * (std::pow(B.outer(), d.Q) - std::pow(B.inner(), d.Q));
    const auto wE = weighted_measure(w, E, rules);
    const auto wB = weighted_measure(w, B, rules);
    const double rm = mE / mB;
    const double rw = wE.value / wB.value;
    rep.measure_ratios.push_back(rm);
    rep.weight_ratios.push_back(rw);
    lower.push_back(rw / std::pow(rm, p));
    upper.push_back(rw / std::pow(rm, hi_exp));
  }
  rep.c_lower = *std::min_element(lower.begin(), lower.end());
  rep.c_upper = *std::max_element(upper.begin(), upper.end());
  bool stable = rep.c_lower > 0.0 && std::isfinite(rep.c_upper);
  if (pairs.size() >= 2 && stable) {
    const double lo_prev = *std::min_element(lower.begin(), lower.end() - 1);
    const double up_prev = *std::max_element(upper.begin(), upper.end() - 1);
    stable = rep.c_lower >= 0.5 * lo_prev && rep.c_upper <= 2.0 * up_prev;
  }
  rep.holds = stable;
  return rep;
}

AverageReport weighted_average_check(const Weight& w, const Field& f, const Region& ball, double p,
                                     const Rules& rules) {
  if (ball.kind() != Region::Kind::ball) throw std::invalid_argument("weighted_average_check needs a ball");
  const GroupDims& d = rules.dims();
  const SphereRule& rule = *rules.sphere;
  const double measure = d.nu_Q * std::pow(ball.outer(), d.Q);
  const auto l1 = integrate_profile_real(weighted_abs_power_profile(f, 1.0, Weight::unit(), rule), ball,
                                         d.Q, f.breaks(), rules.radial);
  const auto lp = integrate_profile_real(weighted_abs_power_profile(f, p, w, rule), ball, d.Q,
                                         f.breaks(), rules.radial);
  const auto wb = weighted_measure(w, ball, rules);
  AverageReport rep;
  rep.left = l1.value / measure;
  rep.right = std::pow(lp.value / wb.value, 1.0 / p);
  rep.ratio = rep.left / rep.right;
  return rep;
}

}  // namespace heis
