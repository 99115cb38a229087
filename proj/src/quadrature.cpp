#include "heis/quadrature.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace heis {

std::string to_string(Status s) {
  switch (s) {
    case Status::ok:
      return "ok";
    case Status::divergent:
      return "divergent";
    case Status::inconclusive:
      return "inconclusive";
  }
  return "unknown";
}

const GaussLegendre& gauss_legendre(int m) {
  if (m < 1) throw std::invalid_argument("Gauss-Legendre order must be >= 1");
  static std::mutex mu;
  static std::map<int, GaussLegendre> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;
  GaussLegendre gl;
  const auto zeros = boost::math::legendre_p_zeros<double>(m);  // nonnegative half
  std::vector<std::pair<double, double>> pts;
  for (double x : zeros) {
    const double dp = boost::math::legendre_p_prime(m, x);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    pts.emplace_back(x, w);
    if (x != 0.0) pts.emplace_back(-x, w);
  }
  std::sort(pts.begin(), pts.end());
  for (const auto& [x, w] : pts) {
    gl.nodes.push_back(x);
    gl.weights.push_back(w);
  }
  return cache.emplace(m, std::move(gl)).first->second;
}

int default_sphere_resolution(int n) {
  if (n <= 1) return 64;
  if (n == 2) return 16;
  return 8;
}

namespace {

// Collapsed Gauss-Legendre rule on the simplex {t_i >= 0, sum t_i = 1} in R^n,
// weights integrating against Lebesgue measure in (t_1..t_{n-1}).
void simplex_rule(int n, int m, std::vector<std::vector<double>>& pts, std::vector<double>& wts) {
  pts.clear();
  wts.clear();
  if (n == 1) {
    pts.push_back({1.0});
    wts.push_back(1.0);
    return;
  }
  const auto& gl = gauss_legendre(m);
  const int dims = n - 1;
  std::vector<int> idx(dims, 0);
  while (true) {
    std::vector<double> t(n);
    double remaining = 1.0;
    double w = 1.0;
    for (int i = 0; i < dims; ++i) {
      const double s = 0.5 * (gl.nodes[idx[i]] + 1.0);
      w *= 0.5 * gl.weights[idx[i]] * std::pow(remaining, 1.0);
      t[i] = remaining * s;
      remaining *= (1.0 - s);
    }
    t[n - 1] = remaining;
    pts.push_back(std::move(t));
    wts.push_back(w);
    int d = dims - 1;
    while (d >= 0 && ++idx[d] == m) idx[d--] = 0;
    if (d < 0) break;
  }
}

}  // namespace

SphereRule build_sphere_rule(const GroupDims& dims, int resolution) {
  if (resolution < 2) throw std::invalid_argument("sphere resolution must be >= 2");
  const int n = dims.n;
  const double pi = std::numbers::pi;
  SphereRule rule;
  rule.dims = dims;
  rule.resolution = resolution;

  // Latitude φ ∈ (-π/2, π/2) with density cos^{n-1} φ.
  const auto& glphi = gauss_legendre(resolution);
  // Unit sphere S^{2n-1} ⊂ C^n: u_j = sqrt(t_j) e^{iθ_j}, t uniform on the simplex.
  const int m_theta = 2 * resolution;
  const int m_simplex = std::max(2, resolution / 2);
  std::vector<std::vector<double>> tpts;
  std::vector<double> twts;
  simplex_rule(n, m_simplex, tpts, twts);
  const double sphere_area = 2.0 * std::pow(pi, n) / std::tgamma(static_cast<double>(n));
  // Dirichlet(1..1) density on the simplex is (n-1)!.
  const double simplex_density = std::tgamma(static_cast<double>(n));
  const double theta_w = std::pow(1.0 / m_theta, n);

  long theta_count = 1;
  for (int j = 0; j < n; ++j) theta_count *= m_theta;

  const std::size_t total = static_cast<std::size_t>(resolution) * tpts.size() * theta_count;
  rule.nodes.reserve(total);
  rule.weights.reserve(total);
  std::vector<int> tidx(n, 0);
  for (int a = 0; a < resolution; ++a) {
    const double phi = 0.5 * pi * glphi.nodes[a];
    const double cphi = std::cos(phi);
    const double wphi = 0.5 * pi * glphi.weights[a] * std::pow(cphi, n - 1);
    const double zscale = std::sqrt(cphi);
    for (std::size_t b = 0; b < tpts.size(); ++b) {
      std::fill(tidx.begin(), tidx.end(), 0);
      for (long c = 0; c < theta_count; ++c) {
        HPoint::Storage coords(static_cast<std::size_t>(2 * n + 1), 0.0);
        for (int j = 0; j < n; ++j) {
          const double theta = 2.0 * pi * (tidx[j] + 0.5) / m_theta;
          const double rad = std::sqrt(tpts[b][j]);
          coords[j] = zscale * rad * std::cos(theta);
          coords[n + j] = zscale * rad * std::sin(theta);
        }
        coords[2 * n] = std::sin(phi);
        rule.nodes.emplace_back(std::move(coords));
        rule.weights.push_back(dims.haar_factor * wphi * sphere_area * simplex_density *
                               twts[b] * theta_w);
        int d = n - 1;
        while (d >= 0 && ++tidx[d] == m_theta) tidx[d--] = 0;
      }
    }
  }
  const double defect = std::abs(total_weight(rule) / dims.omega_Q - 1.0);
  if (defect > 1e-6) {
    std::ostringstream msg;
    msg << "sphere resolution " << resolution << " too small: relative mass defect " << defect;
    throw std::invalid_argument(msg.str());
  }
  return rule;
}

double total_weight(const SphereRule& rule) { return pairwise_sum(rule.weights); }

RadialRule make_radial_rule(double a, double b, int nodes_per_band, const std::string& transform) {
  if (!(b > a) || !(a >= 0.0) || !std::isfinite(b)) {
    throw std::invalid_argument("radial rule needs a finite interval 0 <= a < b");
  }
  RadialRule rule{a, b, transform, {}, {}};
  const auto& gl = gauss_legendre(nodes_per_band);
  if (transform == "none") {
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      rule.nodes.push_back(a + 0.5 * (b - a) * (gl.nodes[i] + 1.0));
      rule.weights.push_back(0.5 * (b - a) * gl.weights[i]);
    }
  } else if (transform == "log") {
    if (!(a > 0.0)) throw std::invalid_argument("log transform needs a > 0");
    const int bands = std::max(1, static_cast<int>(std::ceil(std::log2(b / a) - 1e-12)));
    const double L = std::log(b / a) / bands;
    for (int k = 0; k < bands; ++k) {
      const double lo = a * std::exp(k * L);
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double t = lo * std::exp(0.5 * L * (gl.nodes[i] + 1.0));
        rule.nodes.push_back(t);
        rule.weights.push_back(0.5 * L * gl.weights[i] * t);
      }
    }
  } else {
    throw std::invalid_argument("unknown radial transform '" + transform + "'");
  }
  return rule;
}

namespace {

template <class T>
double mag(const T& v) {
  return std::abs(v);
}

template <class T>
bool finite(const T& v) {
  if constexpr (std::is_same_v<T, double>) {
    return std::isfinite(v);
  } else {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  }
}

// ∫_lo^hi g(t) dt with m-point Gauss-Legendre in u = log t.
template <class T>
T log_band(const std::function<T(double)>& g, double lo, double hi, int m, long& evals,
           bool& bad, double& bad_t) {
  const auto& gl = gauss_legendre(m);
  const double L = std::log(hi / lo);
  T sum{};
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double t = lo * std::exp(0.5 * L * (gl.nodes[i] + 1.0));
    const T v = g(t);
    ++evals;
    if (!finite(v)) {
      bad = true;
      bad_t = t;
      return v;
    }
    sum += (0.5 * L * gl.weights[i] * t) * v;
  }
  return sum;
}

// Tail from `start` toward 0 (down = true) or infinity.
template <class T>
Integral<T> tail(const std::function<T(double)>& g, double start, bool down,
                 const RadialOptions& o) {
  Integral<T> res;
  const double ratio = o.band_ratio;
  std::vector<T> bands;
  int small_run = 0;
  int grow_run = 0;
  double edge = start;
  for (int k = 0; k < o.max_bands; ++k) {
    const double next = down ? edge / ratio : edge * ratio;
    if (next == 0.0 || !std::isfinite(next)) break;
    bool bad = false;
    double bad_t = 0.0;
    const T B = down ? log_band(g, next, edge, o.nodes_per_band, res.evaluations, bad, bad_t)
                     : log_band(g, edge, next, o.nodes_per_band, res.evaluations, bad, bad_t);
    edge = next;
    if (bad) {
      res.status = Status::divergent;
      std::ostringstream msg;
      msg << "non-finite integrand at t=" << bad_t;
      res.note = msg.str();
      return res;
    }
    res.value += B;
    bands.push_back(B);
    const double mB = mag(B);
    const double tol = o.abs_tol + o.rel_tol * mag(res.value);
    small_run = (mB <= tol) ? small_run + 1 : 0;
    if (small_run >= 3 && k + 1 >= o.min_bands) return res;

    const std::size_t nb = bands.size();
    if (nb >= 2 && mag(bands[nb - 2]) > 0.0) {
      const double r = mB / mag(bands[nb - 2]);
      grow_run = (r >= 1.0 - 1e-9 && mB > o.abs_tol) ? grow_run + 1 : 0;
    } else {
      grow_run = 0;
    }
    if (grow_run >= 6 && k >= 8) {
      res.status = Status::divergent;
      res.note = down ? "band sums do not decay toward 0" : "band sums do not decay toward infinity";
      return res;
    }
    // Exactly geometric band sums: add the closed-form remainder.
    if (nb >= 6) {
      bool stable = true;
      T r_last{};
      for (std::size_t j = nb - 4; j < nb; ++j) {
        if (mag(bands[j - 1]) == 0.0) {
          stable = false;
          break;
        }
        const T r = bands[j] / bands[j - 1];
        if (j > nb - 4 && mag(r - r_last) > 1e-10 * std::max(1.0, mag(r))) stable = false;
        r_last = r;
      }
      if (stable && mag(r_last) < 1.0 - 1e-9) {
        res.tail = B * r_last / (T(1.0) - r_last);
        res.value += res.tail;
        return res;
      }
    }
  }
  // Band budget exhausted without certification.
  const std::size_t nb = bands.size();
  if (nb >= 2 && mag(bands[nb - 2]) > 0.0 && mag(bands[nb - 1]) < mag(bands[nb - 2])) {
    const T r = bands[nb - 1] / bands[nb - 2];
    res.tail = bands[nb - 1] * r / (T(1.0) - r);
    res.value += res.tail;
    if (mag(res.tail) > 1e-6 * mag(res.value)) {
      res.status = Status::inconclusive;
      res.note = "slowly decaying tail extrapolated past the band budget";
    }
    return res;
  }
  if (nb > 0 && mag(bands.back()) > o.abs_tol + 1e-6 * mag(res.value)) {
    res.status = Status::divergent;
    res.note = "partial sums fail the Cauchy criterion within the band budget";
  }
  return res;
}

template <class T>
void merge_into(Integral<T>& acc, const Integral<T>& part) {
  acc.value += part.value;
  acc.tail += part.tail;
  acc.evaluations += part.evaluations;
  if (part.status == Status::divergent ||
      (part.status == Status::inconclusive && acc.status == Status::ok)) {
    acc.status = part.status;
    acc.note = part.note;
  }
}

template <class T>
Integral<T> interval_impl(const std::function<T(double)>& g, double a, double b,
                          std::span<const double> splits, const RadialOptions& o) {
  if (!(a >= 0.0) || !(b > a)) throw std::invalid_argument("integration interval must have 0 <= a < b");
  std::vector<double> pts;
  if (a > 0.0) pts.push_back(a);
  for (double s : splits) {
    if (s > a && s < b && std::isfinite(s)) pts.push_back(s);
  }
  if (std::isfinite(b)) pts.push_back(b);
  if (pts.empty()) pts.push_back(1.0);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  Integral<T> res;
  if (a == 0.0) merge_into(res, tail(g, pts.front(), true, o));
  const double band_log = std::log(o.band_ratio);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double lo = pts[i];
    const double hi = pts[i + 1];
    const int pieces = std::max(1, static_cast<int>(std::ceil(std::log(hi / lo) / band_log - 1e-12)));
    const double step = std::log(hi / lo) / pieces;
    for (int k = 0; k < pieces; ++k) {
      const double plo = lo * std::exp(k * step);
      const double phi = (k + 1 == pieces) ? hi : lo * std::exp((k + 1) * step);
      bool bad = false;
      double bad_t = 0.0;
      const T B = log_band(g, plo, phi, o.nodes_per_band, res.evaluations, bad, bad_t);
      if (bad) {
        std::ostringstream msg;
        msg << "non-finite integrand sample at t=" << bad_t;
        throw std::domain_error(msg.str());
      }
      res.value += B;
    }
  }
  if (!std::isfinite(b)) merge_into(res, tail(g, pts.back(), false, o));
  return res;
}

}  // namespace

Integral<double> integrate_interval(const std::function<double(double)>& g, double a, double b,
                                    std::span<const double> splits, const RadialOptions& opts) {
  return interval_impl<double>(g, a, b, splits, opts);
}

Integral<Complex> integrate_interval_c(const std::function<Complex(double)>& g, double a,
                                       double b, std::span<const double> splits,
                                       const RadialOptions& opts) {
  return interval_impl<Complex>(g, a, b, splits, opts);
}

Integral<double> integrate_halfline(const std::function<double(double)>& g,
                                    std::span<const double> splits, const RadialOptions& opts) {
  std::vector<double> s(splits.begin(), splits.end());
  s.push_back(1.0);
  return interval_impl<double>(g, 0.0, std::numeric_limits<double>::infinity(), s, opts);
}

Integral<Complex> integrate_halfline_c(const std::function<Complex(double)>& g,
                                       std::span<const double> splits, const RadialOptions& opts) {
  std::vector<double> s(splits.begin(), splits.end());
  s.push_back(1.0);
  return interval_impl<Complex>(g, 0.0, std::numeric_limits<double>::infinity(), s, opts);
}

Complex pairwise_sum(std::span<const Complex> v) {
  if (v.size() <= 16) {
    Complex s = 0.0;
    for (const auto& x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

SphereSampler::SphereSampler(Field f, const SphereRule& rule)
    : f_(std::move(f)), rule_(&rule), radial_(f_.known_radial()) {
  if (radial_ || !f_.separable()) return;
  for (const auto& term : f_.terms()) {
    std::vector<Complex> table;
    if (term.angular) {
      table.reserve(rule.nodes.size());
      for (const auto& y : rule.nodes) table.push_back(term.angular(y));
    }
    angular_.push_back(std::move(table));
  }
}

void SphereSampler::values_at(double r, std::vector<Complex>& out) const {
  if (radial_) {
    Complex v = 0.0;
    for (const auto& t : f_.terms()) v += t.radial(r);
    out.assign(1, v);
    return;
  }
  const auto& nodes = rule_->nodes;
  out.assign(nodes.size(), Complex(0.0));
  if (!f_.separable()) {
    for (std::size_t i = 0; i < nodes.size(); ++i) out[i] = f_(dilate(r, nodes[i]));
    return;
  }
  const auto& terms = f_.terms();
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const Complex g = terms[k].radial(r);
    if (g == Complex(0.0)) continue;
    const auto& table = angular_[k];
    if (table.empty()) {
      for (auto& v : out) v += g;
    } else {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += g * table[i];
    }
  }
}

std::function<Complex(double)> sphere_profile(const Field& f, const SphereRule& rule) {
  auto sampler = std::make_shared<SphereSampler>(f, rule);
  const double mass = total_weight(rule);
  const SphereRule* rp = &rule;
  return [sampler, mass, rp](double r) -> Complex {
    std::vector<Complex> vals;
    sampler->values_at(r, vals);
    if (sampler->radial()) return mass * vals.front();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (std::isnan(vals[i].real()) || std::isnan(vals[i].imag())) {
        std::ostringstream msg;
        msg << "NaN integrand at r=" << r << ", sphere node " << i << " (z=";
        for (double c : rp->nodes[i].z()) msg << c << ' ';
        msg << "s=" << rp->nodes[i].s() << ")";
        throw std::domain_error(msg.str());
      }
      vals[i] *= rp->weights[i];
    }
    return pairwise_sum(vals);
  };
}

Integral<Complex> integrate_profile(const std::function<Complex(double)>& profile,
                                    const Region& region, int Q, std::span<const double> splits,
                                    const RadialOptions& opts) {
  auto g = [&profile, Q](double r) -> Complex {
    const Complex p = profile(r);
    return p == Complex(0.0) ? p : p * std::pow(r, Q - 1);
  };
  return interval_impl<Complex>(g, region.inner(), region.outer(), splits, opts);
}

Integral<double> integrate_profile_real(const std::function<double(double)>& profile,
                                        const Region& region, int Q,
                                        std::span<const double> splits,
                                        const RadialOptions& opts) {
  auto g = [&profile, Q](double r) -> double {
    const double p = profile(r);
    return p == 0.0 ? p : p * std::pow(r, Q - 1);
  };
  return interval_impl<double>(g, region.inner(), region.outer(), splits, opts);
}

Integral<Complex> integrate_region(const Field& f, const Region& region, const SphereRule& sphere,
                                   const RadialOptions& radial) {
  if (f.is_zero()) return {};
  const auto profile = sphere_profile(f, sphere);
  return integrate_profile(profile, region, sphere.dims.Q, f.breaks(), radial);
}

UniformStream::UniformStream(std::uint64_t seed) : engine_(seed) {}

double UniformStream::next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

namespace {

Box centered_box(double R, int n) {
  Box box;
  for (int i = 0; i < 2 * n; ++i) {
    box.lo.push_back(-R);
    box.hi.push_back(R);
  }
  box.lo.push_back(-R * R);
  box.hi.push_back(R * R);
  return box;
}

template <class Accept, class Eval>
MCResult mc_run(const Box& box, const GroupDims& dims, const MCOracle& oracle, Accept accept,
                Eval eval) {
  if (oracle.sample_count < 2) throw std::invalid_argument("MC needs at least 2 samples");
  const std::size_t dim = box.lo.size();
  if (dim != static_cast<std::size_t>(2 * dims.n + 1) || box.hi.size() != dim) {
    throw std::invalid_argument("MC bounding box has the wrong dimension");
  }
  double volume = 1.0;
  for (std::size_t i = 0; i < dim; ++i) volume *= box.hi[i] - box.lo[i];
  UniformStream rng(oracle.seed);
  Complex sum = 0.0;
  double sumsq = 0.0;
  long accepted = 0;
  HPoint::Storage c(dim);
  for (long i = 0; i < oracle.sample_count; ++i) {
    for (std::size_t d = 0; d < dim; ++d) c[d] = box.lo[d] + (box.hi[d] - box.lo[d]) * rng.next();
    HPoint x(c);
    if (!accept(x)) continue;
    ++accepted;
    const Complex v = eval(x);
    sum += v;
    sumsq += std::norm(v);
  }
  MCResult res;
  const double N = static_cast<double>(oracle.sample_count);
  res.accepted = accepted;
  res.acceptance = accepted / N;
  if (res.acceptance < 1e-4) {
    std::ostringstream msg;
    msg << "MC acceptance rate " << res.acceptance << " below 1e-4: bounding box too loose";
    throw std::runtime_error(msg.str());
  }
  const double scale = volume * dims.haar_factor;
  const Complex mean = sum / N;
  const double var = std::max(0.0, sumsq / N - std::norm(mean)) * N / (N - 1.0);
  res.value = scale * mean;
  res.std_error = scale * std::sqrt(var / N);
  return res;
}

}  // namespace

MCResult mc_integrate(const Field& f, const Region& region, const GroupDims& dims,
                      const MCOracle& oracle) {
  if (!region.bounded()) throw std::invalid_argument("MC integration needs a bounded region");
  const Box box = oracle.bounding_box ? *oracle.bounding_box : centered_box(region.outer(), dims.n);
  return mc_run(
      box, dims, oracle, [&region](const HPoint& x) { return region.contains(x); },
      [&f](const HPoint& x) { return f(x); });
}

MCResult mc_integrate_ball(const PointFn& f, const HPoint& center, double radius,
                           const GroupDims& dims, const MCOracle& oracle) {
  if (!(radius > 0.0)) throw std::invalid_argument("MC ball radius must be > 0");
  // Left translation is measure preserving: sample B(0, radius) and map by center·x.
  const Box box = centered_box(radius, dims.n);
  return mc_run(
      box, dims, oracle, [radius](const HPoint& x) { return hnorm(x) <= radius; },
      [&f, &center](const HPoint& x) { return f(group_mul(center, x)); });
}

}  // namespace heis

namespace heis {

Rules make_rules(const GroupDims& dims, int sphere_resolution, int radial_nodes) {
  if (sphere_resolution <= 0) sphere_resolution = default_sphere_resolution(dims.n);
  Rules rules;
  rules.sphere = std::make_shared<const SphereRule>(build_sphere_rule(dims, sphere_resolution));
  rules.radial.nodes_per_band = radial_nodes;
  return rules;
}

}  // namespace heis
