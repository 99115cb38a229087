#pragma once

#include "heis/expression.hpp"
#include "heis/operators.hpp"
#include "heis/spaces.hpp"
#include "heis/weights.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace heis {

// ---- constant catalog -------------------------------------------------------

enum class LogFactor { none, abs_log2, log2_plus_one };  // |log2 t|^σ, (log2 t + 1)^σ

struct CatalogPiece {
  Expression from{"0"};
  Expression to{"inf"};
  Expression exponent{"0"};  // integrand Φ(t) t^{-exponent}
  LogFactor log = LogFactor::none;
  bool psi = false;          // extra factor 2 + Ψ(t)
};

struct Hypothesis {
  Expression expr;
  std::string message;
};

struct CatalogEntry {
  std::string id;
  std::string op;  // "hausdorff" | "commutator"
  std::string spaces;
  std::vector<std::string> params;
  std::vector<std::pair<std::string, Expression>> derived;
  std::vector<CatalogPiece> pieces;
  Expression omega_norm_exponent{"2"};
  std::optional<Expression> cmo_exponent;
  bool sharp = false;
  std::vector<Hypothesis> hypotheses;
};

struct Catalog {
  std::string version;
  std::vector<CatalogEntry> entries;
  const CatalogEntry* find(std::string_view id) const;
  const CatalogEntry& at(std::string_view id) const;  // throws std::out_of_range
};

Catalog parse_catalog(const std::string& json_text);
// The catalog compiled into the library.
const Catalog& constant_catalog();

// ---- constants ---------------------------------------------------------------

struct ConstantSpec {
  std::string id;
  Expression::Vars params;
};

// A violated (or unevaluable) hypothesis of the selected constant.
struct PreconditionError : std::invalid_argument {
  std::string constant_id;
  explicit PreconditionError(std::string id, const std::string& what)
      : std::invalid_argument(what), constant_id(std::move(id)) {}
};

struct ConstantOptions {
  // When false, hypotheses naming an absent parameter are skipped and listed
  // in the result instead of raising.
  bool require_all_hypotheses = true;
  RadialOptions radial;
};

struct ConstantResult {
  std::string id;
  double value = 0.0;  // inf when divergent
  Status status = Status::ok;
  std::string note;
  std::vector<Integral<double>> pieces;
  double omega_exponent = 2.0;              // ‖Ω‖ is taken in L^{omega_exponent}(S)
  std::optional<double> cmo_exponent;       // commutator constants
  std::vector<std::string> unchecked;       // hypotheses skipped for missing names
  Expression::Vars params;                  // after derived values were added
};

// Parameters with derived values filled in.
Expression::Vars resolve_params(const CatalogEntry& entry, const Expression::Vars& given);

ConstantResult compute_constant(const ConstantSpec& spec, const RadialKernel& phi,
                                const ConstantOptions& opts = {});

// ---- spaces and operators ------------------------------------------------------

struct SpaceSpec {
  enum class Kind { lebesgue, central_morrey, herz, morrey_herz };
  Kind kind = Kind::lebesgue;
  double q = 2.0;
  double p = 2.0;
  double alpha = 0.0;
  double lambda = 0.0;
  HerzParams::Variant variant = HerzParams::Variant::dyadic;

  static SpaceSpec lebesgue(double q);
  static SpaceSpec central_morrey(double q, double lambda);
  static SpaceSpec herz(double alpha, double p, double q);
  static SpaceSpec morrey_herz(double alpha, double lambda, double p, double q);
};
std::string to_string(SpaceSpec::Kind k);
SpaceSpec::Kind space_kind_from_string(const std::string& s);

struct SpaceNorm {
  double value = 0.0;
  Status status = Status::ok;
  std::string note;
};
SpaceNorm space_norm(const Field& f, const SpaceSpec& space, const Weight& w,
                     const TruncationPolicy& trunc, const Rules& rules);

// H_{Φ,Ω}, or its commutator with b when b is set.
struct OperatorSpec {
  RadialKernel phi;
  SphereSymbol omega = SphereSymbol::one();
  std::optional<Field> b;
  Field apply(const Field& f, const Rules& rules) const;
};

// ---- extremal families -----------------------------------------------------------

struct ExtremalFamily {
  enum class Kind { morrey, herz_eps, morrey_herz };
  Kind kind = Kind::morrey;
  int Q = 4;
  double gamma = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;
  double q = 2.0;
  double eps = 0.0;  // herz_eps only
  SphereSymbol omega = SphereSymbol::one();
};
std::string to_string(ExtremalFamily::Kind k);
ExtremalFamily::Kind family_kind_from_string(const std::string& s);

// Radial power g(|x|) times the dual symbol |Ω|^{q'-2}Ω̄ (herz_eps vanishes for |x|_h < 1).
Field extremal_field(const ExtremalFamily& family);
double extremal_power(const ExtremalFamily& family);

// Dyadic Herz norm of the herz_eps member with weight |x|^γ:
// ((2^{s q} - 1)/(s q))^{1/q} ‖Ω‖_{q'}^{q'/q} (2^{εp} - 1)^{-1/p}, s = α + ε.
double herz_eps_closed_form(double alpha, double p, double q, double eps, double omega_dual_mass);
// The same with the factor written 2^{sq-1}/(sq) instead of (2^{sq}-1)/(sq).
double herz_eps_closed_form_literal(double alpha, double p, double q, double eps,
                                    double omega_dual_mass);

// ---- checks --------------------------------------------------------------------

struct RatioRow {
  std::string label;
  double input_norm = 0.0;
  double output_norm = 0.0;
  double ratio = 0.0;
  Status status = Status::ok;
  bool excluded = false;
  std::string note;
};

// N_out(Tf)/N_in(f); excluded when either norm is not finite or the input is zero.
RatioRow operator_ratio(const OperatorSpec& op, const Field& f, const SpaceSpec& in,
                        const SpaceSpec& out, const Weight& w, const TruncationPolicy& trunc,
                        const Rules& rules);

struct BoundednessReport {
  double bound = 0.0;  // margin·C·‖Ω‖ (·‖b‖_CMO for commutators)
  double margin = 10.0;
  std::vector<RatioRow> rows;
  double max_ratio = 0.0;
  long used = 0;
  bool holds = false;  // every used ratio <= bound, and at least one used
};
BoundednessReport boundedness_check(const OperatorSpec& op, const SpaceSpec& in,
                                    const SpaceSpec& out, const Weight& w,
                                    const std::vector<Field>& battery, double constant_times_norms,
                                    const TruncationPolicy& trunc, const Rules& rules,
                                    double margin = 10.0, bool parallel = false);

struct LowerBoundReport {
  std::vector<double> eps;
  std::vector<RatioRow> rows;
  bool monotone = true;       // ratios non-decreasing as ε decreases
  bool extrapolated = false;  // false for single-point schedules
  double last = 0.0;          // ratio at the smallest ε
  double estimate = 0.0;      // linear extrapolation to ε = 0 (or `last`)
  Status status = Status::ok;
  std::string note;
};
// Families without ε (morrey, morrey_herz) evaluate one ratio.
LowerBoundReport opnorm_lower_bound(const OperatorSpec& op, const SpaceSpec& in,
                                    const SpaceSpec& out, const Weight& w,
                                    const ExtremalFamily& family, const std::vector<double>& eps,
                                    const TruncationPolicy& trunc, const Rules& rules,
                                    double monotone_tol = 1e-9);

struct DivergenceReport {
  std::vector<double> eps;
  std::vector<double> constants;  // C for the truncated kernel Φχ_(ε,1/ε)
  std::vector<RatioRow> rows;
  bool increasing = false;
  bool exceeded = false;  // last ratio above the threshold
  double threshold = 1e3;
};
// Extremal ratios of the morrey family under the truncations Φχ_(ε,1/ε).
DivergenceReport divergence_duality(const ConstantSpec& spec, const RadialKernel& phi,
                                    const SpaceSpec& in, const SpaceSpec& out, const Weight& w,
                                    const ExtremalFamily& family, const std::vector<double>& eps,
                                    const TruncationPolicy& trunc, const Rules& rules,
                                    double threshold = 1e3);

// Exact ratio of the morrey/morrey_herz eigenfunctions: ω_Q^{1/q}·C·‖Ω‖_{q'}.
double eigen_identity_ratio(double constant, double omega_norm, double q, const GroupDims& dims);

}  // namespace heis
