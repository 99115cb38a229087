#include "heis/sharpness.hpp"

#include "heis/catalog_data.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

namespace heis {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Status worse(Status a, Status b) {
  if (a == Status::divergent || b == Status::divergent) return Status::divergent;
  if (a == Status::inconclusive || b == Status::inconclusive) return Status::inconclusive;
  return Status::ok;
}

LogFactor log_from_json(const nlohmann::json& j) {
  if (j.is_null()) return LogFactor::none;
  const auto s = j.get<std::string>();
  if (s == "abs_log2") return LogFactor::abs_log2;
  if (s == "log2_plus_one") return LogFactor::log2_plus_one;
  throw std::invalid_argument("unknown log factor '" + s + "'");
}

}  // namespace

// ---- catalog ---------------------------------------------------------------

const CatalogEntry* Catalog::find(std::string_view id) const {
  for (const auto& e : entries)
    if (e.id == id) return &e;
  return nullptr;
}

const CatalogEntry& Catalog::at(std::string_view id) const {
  if (const auto* e = find(id)) return *e;
  throw std::out_of_range("unknown constant id '" + std::string(id) + "'");
}

Catalog parse_catalog(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  Catalog cat;
  cat.version = j.at("version").get<std::string>();
  for (const auto& c : j.at("constants")) {
    CatalogEntry e;
    e.id = c.at("id").get<std::string>();
    try {
      e.op = c.value("operator", "hausdorff");
      e.spaces = c.value("spaces", "");
      e.params = c.at("params").get<std::vector<std::string>>();
      if (c.contains("derived")) {
        for (const auto& [k, v] : c.at("derived").items())
          e.derived.emplace_back(k, Expression(v.get<std::string>()));
      }
      for (const auto& p : c.at("pieces")) {
        CatalogPiece piece;
        piece.from = Expression(p.at("from").get<std::string>());
        piece.to = Expression(p.at("to").get<std::string>());
        piece.exponent = Expression(p.at("exponent").get<std::string>());
        piece.log = log_from_json(p.value("log", nlohmann::json()));
        piece.psi = p.value("psi", false);
        e.pieces.push_back(std::move(piece));
      }
      e.omega_norm_exponent = Expression(c.at("omega_norm_exponent").get<std::string>());
      if (c.contains("cmo_exponent"))
        e.cmo_exponent = Expression(c.at("cmo_exponent").get<std::string>());
      e.sharp = c.value("sharp", false);
      for (const auto& h : c.at("hypotheses"))
        e.hypotheses.push_back(
            {Expression(h.at("expr").get<std::string>()), h.at("message").get<std::string>()});
    } catch (const std::exception& ex) {
      throw std::invalid_argument("catalog entry " + e.id + ": " + ex.what());
    }
    if (cat.find(e.id)) throw std::invalid_argument("duplicate catalog id " + e.id);
    cat.entries.push_back(std::move(e));
  }
  return cat;
}

const Catalog& constant_catalog() {
  static const Catalog cat = parse_catalog(detail::kConstantCatalogJson);
  return cat;
}

// ---- constants ---------------------------------------------------------------

Expression::Vars resolve_params(const CatalogEntry& entry, const Expression::Vars& given) {
  Expression::Vars vars = given;
  for (const auto& [name, expr] : entry.derived) {
    if (vars.count(name)) continue;
    try {
      vars[name] = expr.eval(vars);
    } catch (const UnboundName& u) {
      throw PreconditionError(entry.id, entry.id + ": missing parameter '" + u.name + "'");
    }
  }
  return vars;
}

ConstantResult compute_constant(const ConstantSpec& spec, const RadialKernel& phi,
                                const ConstantOptions& opts) {
  const CatalogEntry* entry = constant_catalog().find(spec.id);
  if (!entry) throw PreconditionError(spec.id, "unknown constant id '" + spec.id + "'");
  ConstantResult res;
  res.id = spec.id;
  res.params = resolve_params(*entry, spec.params);
  const auto& vars = res.params;
  auto missing = [&](const UnboundName& u) {
    return PreconditionError(spec.id, spec.id + ": missing parameter '" + u.name + "'");
  };

  for (const auto& h : entry->hypotheses) {
    double ok = 0.0;
    try {
      ok = h.expr.eval(vars);
    } catch (const UnboundName& u) {
      if (opts.require_all_hypotheses) throw missing(u);
      res.unchecked.push_back(h.message);
      continue;
    }
    if (ok == 0.0) throw PreconditionError(spec.id, h.message);
  }

  try {
    res.omega_exponent = entry->omega_norm_exponent.eval(vars);
    if (entry->cmo_exponent) res.cmo_exponent = entry->cmo_exponent->eval(vars);
  } catch (const UnboundName& u) {
    if (opts.require_all_hypotheses) throw missing(u);
    res.omega_exponent = std::numeric_limits<double>::quiet_NaN();
  }

  std::vector<double> splits = phi.breaks();
  splits.push_back(0.5);
  splits.push_back(1.0);
  std::sort(splits.begin(), splits.end());
  splits.erase(std::unique(splits.begin(), splits.end()), splits.end());

  double total = 0.0;
  for (const auto& piece : entry->pieces) {
    double a = 0, b = 0, e = 0, sigma = 0, Qd = 0;
    try {
      a = piece.from.eval(vars);
      b = piece.to.eval(vars);
      e = piece.exponent.eval(vars);
      if (piece.log != LogFactor::none) sigma = Expression("sigma").eval(vars);
      if (piece.psi) Qd = Expression("Q").eval(vars);
    } catch (const UnboundName& u) {
      throw missing(u);
    }
    const double lo = std::max(a, phi.support_lo()), hi = std::min(b, phi.support_hi());
    Integral<double> I;
    if (hi > lo) {
      const int Q = static_cast<int>(std::lround(Qd));
      const LogFactor lf = piece.log;
      auto g = [&phi, e, lf, sigma, psi = piece.psi, Q](double t) {
        double v = phi(t);
        if (v == 0.0) return 0.0;
        v *= std::pow(t, -e);
        if (lf == LogFactor::abs_log2) v *= std::pow(std::abs(std::log2(t)), sigma);
        if (lf == LogFactor::log2_plus_one) v *= std::pow(std::log2(t) + 1.0, sigma);
        if (psi) v *= 2.0 + psi_factor(t, Q);
        return v;
      };
      // The log factors vanish like |log t - log z|^σ at z = 1 or 1/2; a mesh
      // graded toward z keeps Gauss-Legendre accurate for non-integer σ.
      std::vector<double> pts = splits;
      if (lf != LogFactor::none) {
        const double z = lf == LogFactor::abs_log2 ? 1.0 : 0.5;
        for (int j = 1; j <= 40; ++j) {
          pts.push_back(z * std::exp2(std::exp2(-j)));
          pts.push_back(z * std::exp2(-std::exp2(-j)));
        }
        std::sort(pts.begin(), pts.end());
      }
      try {
        I = integrate_interval(g, lo, hi, pts, opts.radial);
      } catch (const std::domain_error& ex) {
        I.status = Status::divergent;
        I.note = ex.what();
      }
      if (I.status == Status::divergent) I.value = kInf;
    }
    res.status = worse(res.status, I.status);
    if (!I.note.empty()) res.note += (res.note.empty() ? "" : "; ") + I.note;
    total += I.value;
    res.pieces.push_back(std::move(I));
  }
  res.value = res.status == Status::divergent ? kInf : total;
  return res;
}

// ---- spaces and operators --------------------------------------------------------

SpaceSpec SpaceSpec::lebesgue(double q) {
  SpaceSpec s;
  s.kind = Kind::lebesgue;
  s.q = q;
  return s;
}
SpaceSpec SpaceSpec::central_morrey(double q, double lambda) {
  SpaceSpec s;
  s.kind = Kind::central_morrey;
  s.q = q;
  s.lambda = lambda;
  return s;
}
SpaceSpec SpaceSpec::herz(double alpha, double p, double q) {
  SpaceSpec s;
  s.kind = Kind::herz;
  s.alpha = alpha;
  s.p = p;
  s.q = q;
  return s;
}
SpaceSpec SpaceSpec::morrey_herz(double alpha, double lambda, double p, double q) {
  SpaceSpec s;
  s.kind = Kind::morrey_herz;
  s.alpha = alpha;
  s.lambda = lambda;
  s.p = p;
  s.q = q;
  return s;
}

std::string to_string(SpaceSpec::Kind k) {
  switch (k) {
    case SpaceSpec::Kind::lebesgue: return "lebesgue";
    case SpaceSpec::Kind::central_morrey: return "central_morrey";
    case SpaceSpec::Kind::herz: return "herz";
    case SpaceSpec::Kind::morrey_herz: return "morrey_herz";
  }
  return "?";
}

SpaceSpec::Kind space_kind_from_string(const std::string& s) {
  for (auto k : {SpaceSpec::Kind::lebesgue, SpaceSpec::Kind::central_morrey,
                 SpaceSpec::Kind::herz, SpaceSpec::Kind::morrey_herz})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown space kind '" + s + "'");
}

SpaceNorm space_norm(const Field& f, const SpaceSpec& space, const Weight& w,
                     const TruncationPolicy& trunc, const Rules& rules) {
  switch (space.kind) {
    case SpaceSpec::Kind::lebesgue: {
      const auto r = lq_norm_weighted(f, space.q, w, rules);
      return {r.value, r.status, r.note};
    }
    case SpaceSpec::Kind::central_morrey: {
      const auto r = central_morrey_norm(f, {space.q, space.lambda}, w, trunc, rules);
      return {r.value, r.status, r.note};
    }
    case SpaceSpec::Kind::herz: {
      HerzParams hp{space.alpha, space.p, space.q, space.variant};
      const auto r = herz_norm(f, hp, w, trunc, rules);
      return {r.value, r.status, r.note};
    }
    case SpaceSpec::Kind::morrey_herz: {
      const auto r =
          morrey_herz_norm(f, {space.alpha, space.lambda, space.p, space.q}, w, trunc, rules);
      return {r.value, r.status, r.note};
    }
  }
  return {};
}

Field OperatorSpec::apply(const Field& f, const Rules& rules) const {
  if (b) return commutator_field(phi, omega, *b, f, rules);
  return hausdorff_field(phi, omega, f, rules);
}

// ---- extremal families --------------------------------------------------------------

std::string to_string(ExtremalFamily::Kind k) {
  switch (k) {
    case ExtremalFamily::Kind::morrey: return "morrey";
    case ExtremalFamily::Kind::herz_eps: return "herz_eps";
    case ExtremalFamily::Kind::morrey_herz: return "morrey_herz";
  }
  return "?";
}

ExtremalFamily::Kind family_kind_from_string(const std::string& s) {
  for (auto k : {ExtremalFamily::Kind::morrey, ExtremalFamily::Kind::herz_eps,
                 ExtremalFamily::Kind::morrey_herz})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown extremal family '" + s + "'");
}

double extremal_power(const ExtremalFamily& fam) {
  const double Qg = fam.Q + fam.gamma;
  switch (fam.kind) {
    case ExtremalFamily::Kind::morrey: return Qg * fam.lambda;
    case ExtremalFamily::Kind::herz_eps: return -fam.alpha - Qg / fam.q - fam.eps;
    case ExtremalFamily::Kind::morrey_herz: return -fam.alpha - Qg / fam.q + fam.lambda;
  }
  return 0.0;
}

Field extremal_field(const ExtremalFamily& fam) {
  if (!(fam.q > 1.0)) throw std::invalid_argument("extremal families need q > 1");
  if (fam.kind == ExtremalFamily::Kind::herz_eps && !(fam.eps > 0.0))
    throw std::invalid_argument("herz_eps needs eps > 0");
  const double a = extremal_power(fam);
  const bool cut = fam.kind == ExtremalFamily::Kind::herz_eps;
  RadialFn g = [a, cut](double r) -> Complex {
    if (cut && r < 1.0) return 0.0;
    return std::pow(r, a);
  };
  std::vector<double> br;
  if (cut) br.push_back(1.0);
  std::ostringstream label;
  label << to_string(fam.kind) << "(|x|^" << a << ")";
  if (fam.omega.is_one()) return Field::radial(label.str(), g, br);
  const double qp = fam.q / (fam.q - 1.0);
  return Field::separable(label.str() + "*dual(" + fam.omega.label() + ")", g,
                          fam.omega.dual(qp), br);
}

double herz_eps_closed_form(double alpha, double p, double q, double eps,
                            double omega_dual_mass) {
  const double s = (alpha + eps) * q;
  return std::pow((std::exp2(s) - 1.0) / s, 1.0 / q) * std::pow(omega_dual_mass, 1.0 / q) *
         std::pow(std::exp2(eps * p) - 1.0, -1.0 / p);
}

double herz_eps_closed_form_literal(double alpha, double p, double q, double eps,
                                    double omega_dual_mass) {
  const double s = (alpha + eps) * q;
  return std::pow(std::exp2(s - 1.0) / s, 1.0 / q) * std::pow(omega_dual_mass, 1.0 / q) *
         std::pow(std::exp2(eps * p) - 1.0, -1.0 / p);
}

// ---- checks --------------------------------------------------------------------

RatioRow operator_ratio(const OperatorSpec& op, const Field& f, const SpaceSpec& in,
                        const SpaceSpec& out, const Weight& w, const TruncationPolicy& trunc,
                        const Rules& rules) {
  RatioRow row;
  row.label = f.label();
  const SpaceNorm nin = space_norm(f, in, w, trunc, rules);
  row.input_norm = nin.value;
  if (nin.status == Status::divergent || !std::isfinite(nin.value)) {
    row.excluded = true;
    row.status = Status::divergent;
    row.note = "input norm divergent";
    return row;
  }
  if (nin.value == 0.0) {
    row.excluded = true;
    row.note = "zero input norm";
    return row;
  }
  const SpaceNorm nout = space_norm(op.apply(f, rules), out, w, trunc, rules);
  row.output_norm = nout.value;
  if (nout.status == Status::divergent || !std::isfinite(nout.value)) {
    row.excluded = true;
    row.status = Status::divergent;
    row.note = "output norm divergent";
    return row;
  }
  row.ratio = nout.value / nin.value;
  row.status = worse(nin.status, nout.status);
  if (!nin.note.empty()) row.note = "input: " + nin.note;
  if (!nout.note.empty()) row.note += (row.note.empty() ? "" : "; ") + ("output: " + nout.note);
  return row;
}

BoundednessReport boundedness_check(const OperatorSpec& op, const SpaceSpec& in,
                                    const SpaceSpec& out, const Weight& w,
                                    const std::vector<Field>& battery, double constant_times_norms,
                                    const TruncationPolicy& trunc, const Rules& rules,
                                    double margin, bool parallel) {
  if (!std::isfinite(constant_times_norms))
    throw std::invalid_argument("boundedness check needs a finite constant");
  BoundednessReport rep;
  rep.margin = margin;
  rep.bound = margin * constant_times_norms;
  auto one = [&](const Field& f) { return operator_ratio(op, f, in, out, w, trunc, rules); };
  if (parallel) {
    std::vector<std::future<RatioRow>> jobs;
    for (const auto& f : battery) jobs.push_back(std::async(std::launch::async, one, f));
    for (auto& j : jobs) rep.rows.push_back(j.get());
  } else {
    for (const auto& f : battery) rep.rows.push_back(one(f));
  }
  rep.holds = true;
  for (const auto& r : rep.rows) {
    if (r.excluded) continue;
    ++rep.used;
    rep.max_ratio = std::max(rep.max_ratio, r.ratio);
    if (!(r.ratio <= rep.bound)) rep.holds = false;
  }
  if (rep.used == 0) rep.holds = false;
  return rep;
}

LowerBoundReport opnorm_lower_bound(const OperatorSpec& op, const SpaceSpec& in,
                                    const SpaceSpec& out, const Weight& w,
                                    const ExtremalFamily& family, const std::vector<double>& eps,
                                    const TruncationPolicy& trunc, const Rules& rules,
                                    double monotone_tol) {
  LowerBoundReport rep;
  std::vector<double> schedule = eps;
  if (family.kind != ExtremalFamily::Kind::herz_eps) schedule = {family.eps};
  if (schedule.empty()) throw std::invalid_argument("empty eps schedule");
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (!(schedule[i] < schedule[i - 1]))
      throw std::invalid_argument("eps schedule must be strictly decreasing");
  rep.eps = schedule;
  for (double e : schedule) {
    ExtremalFamily fam = family;
    fam.eps = e;
    rep.rows.push_back(operator_ratio(op, extremal_field(fam), in, out, w, trunc, rules));
    const auto& row = rep.rows.back();
    if (row.excluded) {
      rep.status = Status::inconclusive;
      rep.note = "eps=" + std::to_string(e) + ": " + row.note;
    } else {
      rep.status = worse(rep.status, row.status);
    }
  }
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    if (rep.rows[i].ratio < rep.rows[i - 1].ratio * (1.0 - monotone_tol)) rep.monotone = false;
  if (!rep.monotone) {
    rep.status = Status::inconclusive;
    rep.note = "ratios decrease along the schedule";
  }
  rep.last = rep.rows.back().ratio;
  rep.estimate = rep.last;
  if (rep.rows.size() >= 2) {
    const std::size_t k = rep.rows.size() - 1;
    const double slope =
        (rep.rows[k].ratio - rep.rows[k - 1].ratio) / (schedule[k] - schedule[k - 1]);
    rep.estimate = rep.rows[k].ratio - slope * schedule[k];
    rep.extrapolated = true;
  }
  return rep;
}

DivergenceReport divergence_duality(const ConstantSpec& spec, const RadialKernel& phi,
                                    const SpaceSpec& in, const SpaceSpec& out, const Weight& w,
                                    const ExtremalFamily& family, const std::vector<double>& eps,
                                    const TruncationPolicy& trunc, const Rules& rules,
                                    double threshold) {
  DivergenceReport rep;
  rep.eps = eps;
  rep.threshold = threshold;
  const Field f = extremal_field(family);
  for (double e : eps) {
    if (!(e > 0.0 && e < 1.0)) throw std::invalid_argument("truncation levels must lie in (0,1)");
    const RadialKernel cut = phi.truncated(e, 1.0 / e);
    rep.constants.push_back(compute_constant(spec, cut).value);
    rep.rows.push_back(operator_ratio({cut, family.omega, std::nullopt}, f, in, out, w, trunc,
                                      rules));
  }
  rep.increasing = !rep.rows.empty();
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    if (rep.rows[i].excluded) rep.increasing = false;
    if (i > 0 && !(rep.rows[i].ratio > rep.rows[i - 1].ratio)) rep.increasing = false;
  }
  rep.exceeded = !rep.rows.empty() && !rep.rows.back().excluded &&
                 rep.rows.back().ratio > threshold;
  return rep;
}

double eigen_identity_ratio(double constant, double omega_norm, double q, const GroupDims& dims) {
  return std::pow(dims.omega_Q, 1.0 / q) * constant * omega_norm;
}

}  // namespace heis
