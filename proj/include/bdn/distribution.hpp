#pragma once

// Second-order uncertainty: distributions over the probabilities and
// utilities of a decision network, plus the registry that names them.

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bdn/random.hpp"

namespace bdn {

using ParameterRef = std::string;

enum class Role { probability, utility, covariate };

std::string_view to_string(Role role);
std::optional<Role> role_from_string(std::string_view text);

struct PointMass {
  double value = 0.0;
};

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

/// Beta(alpha, beta) location-scaled onto [lo, hi]; the default is the unit
/// interval. Scaling keeps the family closed under affine utility rescaling.
struct Beta {
  double alpha = 1.0;
  double beta = 1.0;
  double lo = 0.0;
  double hi = 1.0;
};

struct TruncatedNormal {
  double mu = 0.0;
  double sigma = 1.0;
  double lo = 0.0;
  double hi = 1.0;
};

/// Piecewise-uniform density: masses[i] over [edges[i], edges[i+1]).
struct Histogram {
  Eigen::VectorXd edges;
  Eigen::VectorXd masses;
};

using QuantityKind = std::variant<PointMass, Uniform, Beta, TruncatedNormal, Histogram>;

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double sd() const;
};

/// A scalar probability, utility or covariate whose value is uncertain.
class UncertainQuantity {
 public:
  /// Throws SchemaError when the kind's parameters are invalid.
  UncertainQuantity(QuantityKind kind, Role role);

  static UncertainQuantity point(double value, Role role);
  static UncertainQuantity uniform(double lo, double hi, Role role);
  static UncertainQuantity beta(double alpha, double beta, Role role);
  static UncertainQuantity truncated_normal(double mu, double sigma, double lo, double hi,
                                            Role role);

  const QuantityKind& kind() const { return kind_; }
  Role role() const { return role_; }
  std::string_view kind_name() const;

  /// Support bounds.
  double lower() const;
  double upper() const;

  bool is_point() const { return std::holds_alternative<PointMass>(kind_); }

  friend bool operator==(const UncertainQuantity& a, const UncertainQuantity& b);

 private:
  QuantityKind kind_;
  Role role_;
};

Moments moments(const UncertainQuantity& q);

/// CDF of q at x.
double cdf(const UncertainQuantity& q, double x);

/// The u-quantile of q (inverse CDF). Throws DomainError unless u is in [0,1].
double sample(const UncertainQuantity& q, double u);

/// Image of q under x -> scale * x + shift (scale > 0).
UncertainQuantity affine(const UncertainQuantity& q, double scale, double shift);

// ---------------------------------------------------------------------------
// Conditional-probability-table rows.

struct BinaryRow {
  UncertainQuantity p;  ///< probability of the first outcome
};

struct DirichletRow {
  Eigen::VectorXd alpha;
};

struct PointRow {
  Eigen::VectorXd probabilities;
};

using RowKind = std::variant<BinaryRow, DirichletRow, PointRow>;

/// Distribution over one probability vector of a chance node.
class RowDistribution {
 public:
  /// Throws SchemaError when alpha entries are not positive, a point vector
  /// is off the simplex, or a binary row's quantity is not a probability.
  explicit RowDistribution(RowKind kind);

  static RowDistribution binary(UncertainQuantity p);
  static RowDistribution dirichlet(Eigen::VectorXd alpha);
  static RowDistribution point(Eigen::VectorXd probabilities);

  const RowKind& kind() const { return kind_; }
  std::string_view kind_name() const;
  Eigen::Index dimension() const;
  bool is_point() const;

  friend bool operator==(const RowDistribution& a, const RowDistribution& b);

 private:
  RowKind kind_;
};

/// Componentwise marginal means and variances.
struct RowMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

RowMoments row_moments(const RowDistribution& r);

/// One probability vector drawn from r. Binary rows consume one uniform,
/// Dirichlet rows one gamma variate per component, point rows nothing.
Eigen::VectorXd sample_row(const RowDistribution& r, Stream& stream);

// ---------------------------------------------------------------------------
// Registry.

using Parameter = std::variant<UncertainQuantity, RowDistribution>;

/// Subgroup replacement map carried by an assessment answer.
using Refinement = std::map<ParameterRef, Parameter, std::less<>>;

bool is_row(const Parameter& p);
bool is_point(const Parameter& p);
std::string describe_kind(const Parameter& p);

/// Mean of the parameter: a length-1 vector for scalar quantities.
Eigen::VectorXd parameter_mean(const Parameter& p);

/// Name -> distribution, iterated in lexicographic name order. The position
/// of a name in that order is its slot in an Instantiation.
class ParameterRegistry {
 public:
  using Map = std::map<ParameterRef, Parameter, std::less<>>;
  using const_iterator = Map::const_iterator;

  /// Throws SchemaError on a duplicate name.
  void insert(ParameterRef name, Parameter p);

  /// Throws LookupError for unknown names.
  const Parameter& at(std::string_view name) const;
  const Parameter* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  std::optional<std::size_t> slot(std::string_view name) const;
  std::vector<ParameterRef> names() const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const_iterator begin() const { return entries_.begin(); }
  const_iterator end() const { return entries_.end(); }

  friend bool operator==(const ParameterRegistry& a, const ParameterRegistry& b);

 private:
  friend ParameterRegistry refine(const ParameterRegistry&, const Refinement&);
  Map entries_;
};

/// Copy of `registry` with the replacements applied. Throws LookupError for
/// names not in the registry and SchemaError when a replacement changes the
/// parameter's shape (scalar vs row), role or row dimension.
ParameterRegistry refine(const ParameterRegistry& registry, const Refinement& refinement);

/// |mean(patient) - mean(generic)| / sd(generic). Throws UndefinedDivergence
/// when the generic variance is zero.
double divergence_z(const UncertainQuantity& patient, const UncertainQuantity& generic);

/// Row version: the largest componentwise z over components whose generic
/// marginal variance is positive. Scalars dispatch to the overload above.
double divergence_z(const Parameter& patient, const Parameter& generic);

}  // namespace bdn
