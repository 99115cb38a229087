#include "heis/spaces.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace heis {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void bad(const std::string& what) { throw std::invalid_argument(what); }

NormResult divergent_norm(const std::string& note) {
  NormResult r;
  r.value = kInf;
  r.status = Status::divergent;
  r.note = note;
  return r;
}

NormResult root_of(const Integral<double>& I, double q) {
  NormResult r;
  r.evaluations = I.evaluations;
  r.status = I.status;
  r.note = I.note;
  r.value = I.status == Status::divergent ? kInf : std::pow(std::max(I.value, 0.0), 1.0 / q);
  return r;
}

// Tail beyond a window edge for per-k terms t (already raised to the power p).
// `edge` is the outermost term, `inner` the next one in and `inner2` the one after.
struct Tail {
  double value = 0.0;
  bool certified = true;
};

Tail edge_tail(double edge, double inner, double inner2, double total, double tol) {
  Tail t;
  if (edge == 0.0) return t;
  if (inner == 0.0) {
    t.certified = false;
    return t;
  }
  const double r2 = edge / inner;
  const double r1 = inner2 > 0.0 ? inner / inner2 : kInf;
  if (r2 >= 1.0) {
    t.certified = false;
    return t;
  }
  t.value = edge * r2 / (1.0 - r2);
  const bool geometric = std::abs(r2 - r1) <= 1e-6 * r2;
  t.certified = geometric || t.value <= tol * total;
  return t;
}

struct DyadicSum {
  std::vector<int> k;
  std::vector<double> terms;  // (c_k ‖f χ_k‖)^p
  Tail lower;
  Tail upper;
  Status status = Status::ok;
  std::string note;
};

DyadicSum dyadic_sum(const HerzTerms& ht, double p, double tol) {
  DyadicSum s;
  s.k = ht.k;
  s.status = ht.status;
  s.note = ht.note;
  if (ht.status == Status::divergent) return s;
  for (std::size_t i = 0; i < ht.k.size(); ++i) {
    const double a = ht.coefficient[i] * ht.annulus_norm[i];
    s.terms.push_back(a == 0.0 ? 0.0 : std::pow(a, p));
  }
  const double total = pairwise_sum(s.terms);
  const auto& t = s.terms;
  const std::size_t m = t.size();
  if (m >= 3) {
    s.lower = edge_tail(t[0], t[1], t[2], total, tol);
    s.upper = edge_tail(t[m - 1], t[m - 2], t[m - 3], total, tol);
  }
  if (!s.lower.certified || !s.upper.certified) {
    s.status = Status::inconclusive;
    s.note = std::string("annulus terms do not decay geometrically at the ") +
             (!s.lower.certified ? "lower" : "upper") + " window edge";
  }
  return s;
}

double radical_inverse(unsigned long i, unsigned base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

}  // namespace

std::vector<double> TruncationPolicy::default_radius_grid() {
  std::vector<double> g;
  for (int j = -24; j <= 24; ++j) g.push_back(std::exp2(0.5 * j));
  return g;
}

void TruncationPolicy::validate() const {
  if (!(k_min < 0 && 0 < k_max)) bad("truncation window needs k_min < 0 < k_max");
  if (k_max - k_min < 2) bad("truncation window needs at least three annuli");
  if (radius_grid.empty()) bad("radius grid is empty");
  for (std::size_t i = 0; i < radius_grid.size(); ++i) {
    if (!(radius_grid[i] > 0.0) || (i > 0 && !(radius_grid[i] > radius_grid[i - 1]))) {
      bad("radius grid must be positive and increasing");
    }
  }
  if (!(tail_tol > 0.0)) bad("tail_tol must be > 0");
}

void HerzParams::validate() const {
  if (!(p > 0.0) || !(q > 0.0)) bad("Herz exponents p and q must be > 0");
  if (!std::isfinite(alpha)) bad("Herz alpha must be finite");
}

void CentralMorreyParams::validate() const {
  if (!(q >= 1.0)) bad("central Morrey q must be >= 1");
  if (!(lambda > -1.0 / q && lambda < 0.0)) bad("lambda must lie in (-1/q, 0)");
}

void MorreyHerzParams::validate() const {
  if (!(p > 0.0) || !(q > 0.0)) bad("Morrey-Herz exponents p and q must be > 0");
  if (!(lambda >= 0.0)) bad("Morrey-Herz lambda must be >= 0");
}

NormResult lq_norm_weighted(const Field& f, const Region& region, double q, const Weight& w,
                            const Rules& rules) {
  if (!(q > 0.0)) bad("L^q norm needs q > 0");
  if (f.is_zero()) return {};
  const auto profile = weighted_abs_power_profile(f, q, w, *rules.sphere);
  const auto I = integrate_profile_real(profile, region, rules.dims().Q, f.breaks(), rules.radial);
  return root_of(I, q);
}

NormResult lq_norm_weighted(const Field& f, double q, const Weight& w, const Rules& rules) {
  return lq_norm_weighted(f, Region::shell(0.0, kInf), q, w, rules);
}

std::vector<NormResult> annulus_norms(const Field& f, double q, const Weight& w,
                                      const TruncationPolicy& trunc, const Rules& rules) {
  trunc.validate();
  std::vector<NormResult> out;
  if (f.is_zero()) return std::vector<NormResult>(trunc.k_max - trunc.k_min + 1);
  const auto profile = weighted_abs_power_profile(f, q, w, *rules.sphere);
  for (int k = trunc.k_min; k <= trunc.k_max; ++k) {
    const auto I = integrate_profile_real(profile, Region::annulus(k), rules.dims().Q, f.breaks(),
                                          rules.radial);
    out.push_back(root_of(I, q));
  }
  return out;
}

HerzTerms herz_terms(const Field& f, const HerzParams& params, const Weight& w,
                     const TruncationPolicy& trunc, const Rules& rules) {
  params.validate();
  HerzTerms ht;
  const auto norms = annulus_norms(f, params.q, w, trunc, rules);
  const double Q = rules.dims().Q;
  for (int k = trunc.k_min; k <= trunc.k_max; ++k) {
    const auto& nk = norms[static_cast<std::size_t>(k - trunc.k_min)];
    double coef = std::exp2(k * params.alpha);
    if (params.variant == HerzParams::Variant::weighted) {
      const auto wb = weighted_measure(w, Region::ball(std::ldexp(1.0, k)), rules);
      if (wb.status == Status::divergent) {
        ht.status = Status::divergent;
        ht.note = "weight not integrable on B(0,2^k)";
      }
      coef = std::pow(wb.value, params.alpha / Q);
    }
    if (nk.status == Status::divergent) {
      ht.status = Status::divergent;
      ht.note = "L^q norm diverges on annulus k=" + std::to_string(k);
    } else if (nk.status == Status::inconclusive && ht.status == Status::ok) {
      ht.status = Status::inconclusive;
      ht.note = nk.note;
    }
    ht.k.push_back(k);
    ht.annulus_norm.push_back(nk.value);
    ht.coefficient.push_back(coef);
  }
  return ht;
}

NormResult herz_norm(const Field& f, const HerzParams& params, const Weight& w,
                     const TruncationPolicy& trunc, const Rules& rules) {
  const auto ht = herz_terms(f, params, w, trunc, rules);
  if (ht.status == Status::divergent) return divergent_norm(ht.note);
  const auto s = dyadic_sum(ht, params.p, trunc.tail_tol);
  NormResult r;
  const double tail = s.lower.value + s.upper.value;
  const double total = pairwise_sum(s.terms) + tail;
  r.value = std::pow(total, 1.0 / params.p);
  r.tail = tail;
  r.status = s.status;
  r.note = s.note;
  return r;
}

SupNorm central_morrey_norm(const Field& f, const CentralMorreyParams& params, const Weight& w,
                            const TruncationPolicy& trunc, const Rules& rules) {
  params.validate();
  trunc.validate();
  SupNorm out;
  out.abscissae = trunc.radius_grid;
  if (f.is_zero()) {
    out.values.assign(trunc.radius_grid.size(), 0.0);
    return out;
  }
  const int Q = rules.dims().Q;
  const auto profile = weighted_abs_power_profile(f, params.q, w, *rules.sphere);
  const double e = 1.0 + params.lambda * params.q;
  double I = 0.0, W = 0.0, inner = 0.0;
  for (double R : trunc.radius_grid) {
    const Region piece = inner == 0.0 ? Region::ball(R) : Region::shell(inner, R);
    const auto dI = integrate_profile_real(profile, piece, Q, f.breaks(), rules.radial);
    const auto dW = weighted_measure(w, piece, rules);
    if (dI.status == Status::divergent || dW.status == Status::divergent) {
      out.status = Status::divergent;
      out.note = "integral diverges on " + piece.label();
      out.value = kInf;
      out.values.assign(trunc.radius_grid.size(), kInf);
      return out;
    }
    if (!dI.ok() && out.status == Status::ok) {
      out.status = dI.status;
      out.note = dI.note;
    }
    I += dI.value;
    W += dW.value;
    inner = R;
    out.values.push_back(std::pow(I / std::pow(W, e), 1.0 / params.q));
  }
  out.value = *std::max_element(out.values.begin(), out.values.end());
  return out;
}

SupNorm morrey_herz_norm(const Field& f, const MorreyHerzParams& params, const Weight& w,
                         const TruncationPolicy& trunc, const Rules& rules) {
  params.validate();
  SupNorm out;
  const HerzParams hp{params.alpha, params.p, params.q, HerzParams::Variant::dyadic};
  const auto ht = herz_terms(f, hp, w, trunc, rules);
  if (ht.status == Status::divergent) {
    out.status = Status::divergent;
    out.note = ht.note;
    out.value = kInf;
    return out;
  }
  const auto s = dyadic_sum(ht, params.p, trunc.tail_tol);
  out.status = s.status;
  out.note = s.note;
  if (params.lambda > 0.0 && s.lower.certified && ht.status == Status::ok) {
    // Only the partial sums up to k_0 enter; growth past k_max is judged below.
    out.status = Status::ok;
    out.note.clear();
  }
  double partial = s.lower.value;
  for (std::size_t i = 0; i < s.k.size(); ++i) {
    partial += s.terms[i];
    out.abscissae.push_back(s.k[i]);
    out.values.push_back(std::exp2(-s.k[i] * params.lambda) * std::pow(partial, 1.0 / params.p));
  }
  out.value = *std::max_element(out.values.begin(), out.values.end());
  if (params.lambda == 0.0) {
    // Partial sums increase to the full Herz sum.
    out.value = std::pow(partial + s.upper.value, 1.0 / params.p);
  } else if (out.values.size() >= 2) {
    const double last = out.values.back(), prev = out.values[out.values.size() - 2];
    if (last > prev * (1.0 + trunc.tail_tol) && out.status == Status::ok) {
      out.status = Status::inconclusive;
      out.note = "weighted partial sums still increasing at k_max";
    }
  }
  return out;
}

Complex ball_average(const Field& f, const Region& ball, const Rules& rules) {
  if (ball.kind() != Region::Kind::ball) bad("ball_average needs a ball");
  if (f.is_zero()) return 0.0;
  const auto& d = rules.dims();
  const auto I = integrate_region(f, ball, *rules.sphere, rules.radial);
  return I.value / (d.nu_Q * std::pow(ball.outer(), d.Q));
}

SupNorm cmo_norm(const Field& b, double q, const Weight& w, const TruncationPolicy& trunc,
                 const Rules& rules) {
  if (!(q >= 1.0)) bad("CMO exponent q must be >= 1");
  trunc.validate();
  SupNorm out;
  out.abscissae = trunc.radius_grid;
  for (double R : trunc.radius_grid) {
    const Region ball = Region::ball(R);
    const Complex avg = ball_average(b, ball, rules);
    const Field osc = b.plus(Field::constant(-avg));
    const auto I = integrate_profile_real(weighted_abs_power_profile(osc, q, w, *rules.sphere), ball,
                                          rules.dims().Q, b.breaks(), rules.radial);
    const auto W = weighted_measure(w, ball, rules);
    if (I.status == Status::divergent || W.status == Status::divergent) {
      out.status = Status::divergent;
      out.note = "integral diverges on " + ball.label();
      out.value = kInf;
      return out;
    }
    out.values.push_back(std::pow(std::max(I.value, 0.0) / W.value, 1.0 / q));
  }
  out.value = *std::max_element(out.values.begin(), out.values.end());
  return out;
}

BlockReport central_block_check(const Field& b, double alpha, double q, const Weight& w,
                                const Region& ball, const Rules& rules, double tol) {
  if (ball.kind() != Region::Kind::ball) bad("central blocks live on centered balls");
  static constexpr std::array<unsigned, 12> primes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  const auto& d = rules.dims();
  const int dim = 2 * d.n + 1;
  if (dim + 1 > static_cast<int>(primes.size())) bad("central_block_check supports n <= 5");
  const double R = ball.outer();

  BlockReport rep;
  rep.supported = true;
  int probes = 0;
  for (unsigned long i = 1; probes < 512; ++i) {
    HPoint::Storage c(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) c[static_cast<std::size_t>(j)] = 2.0 * radical_inverse(i, primes[j]) - 1.0;
    HPoint x(c);
    const double h = hnorm(x);
    if (h == 0.0) continue;
    const double r = R * std::exp2(4.0 * radical_inverse(i, primes[static_cast<std::size_t>(dim)]));
    ++probes;
    if (std::abs(b(dilate(r / h, x))) > 1e-12) {
      rep.supported = false;
      break;
    }
  }
  rep.norm = lq_norm_weighted(b, ball, q, w, rules).value;
  const auto wb = weighted_measure(w, ball, rules);
  rep.bound = std::pow(wb.value, -alpha / d.Q);
  rep.holds = rep.supported && rep.norm <= rep.bound * (1.0 + tol);
  return rep;
}

}  // namespace heis
