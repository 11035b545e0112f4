#include "bdn/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "bdn/errors.hpp"
#include "bdn/special_functions.hpp"

namespace bdn {

namespace {

constexpr double kSimplexTolerance = 1e-9;
constexpr double kQuantileTolerance = 1e-10;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool same_vector(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

void check_quantity(const QuantityKind& kind) {
  std::visit(
      overloaded{
          [](const PointMass& p) {
            if (!std::isfinite(p.value)) throw SchemaError("point value must be finite");
          },
          [](const Uniform& u) {
            if (!(u.lo < u.hi)) throw SchemaError("uniform requires a < b");
          },
          [](const Beta& b) {
            if (!(b.alpha > 0.0) || !(b.beta > 0.0))
              throw SchemaError("beta requires alpha > 0 and beta > 0");
            if (!(b.lo < b.hi)) throw SchemaError("beta requires lo < hi");
          },
          [](const TruncatedNormal& t) {
            if (!(t.sigma > 0.0)) throw SchemaError("truncated-normal requires sigma > 0");
            if (!(t.lo < t.hi)) throw SchemaError("truncated-normal requires lo < hi");
            const double mass = special::normal_cdf((t.hi - t.mu) / t.sigma) -
                                special::normal_cdf((t.lo - t.mu) / t.sigma);
            if (!(mass > 0.0)) throw SchemaError("truncated-normal has no mass on [lo, hi]");
          },
          [](const Histogram& h) {
            if (h.masses.size() < 1 || h.edges.size() != h.masses.size() + 1)
              throw SchemaError("histogram needs n masses and n + 1 edges");
            for (Eigen::Index i = 0; i + 1 < h.edges.size(); ++i) {
              if (!(h.edges[i] < h.edges[i + 1]))
                throw SchemaError("histogram edges must be strictly increasing");
            }
            if ((h.masses.array() < 0.0).any())
              throw SchemaError("histogram masses must be nonnegative");
            if (std::fabs(h.masses.sum() - 1.0) > kSimplexTolerance)
              throw SchemaError("histogram masses must sum to 1");
          },
      },
      kind);
}

double truncated_normal_cdf(const TruncatedNormal& t, double x) {
  if (x <= t.lo) return 0.0;
  if (x >= t.hi) return 1.0;
  const double lo = special::normal_cdf((t.lo - t.mu) / t.sigma);
  const double hi = special::normal_cdf((t.hi - t.mu) / t.sigma);
  return (special::normal_cdf((x - t.mu) / t.sigma) - lo) / (hi - lo);
}

double histogram_cdf(const Histogram& h, double x) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < h.masses.size(); ++i) {
    const double left = h.edges[i];
    const double right = h.edges[i + 1];
    if (x >= right) {
      total += h.masses[i];
    } else {
      if (x > left) total += h.masses[i] * (x - left) / (right - left);
      break;
    }
  }
  return std::min(total, 1.0);
}

double histogram_quantile(const Histogram& h, double u) {
  const Eigen::Index bins = h.masses.size();
  double cumulative = 0.0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index i = 0; i < bins; ++i) {
    if (h.masses[i] <= 0.0) continue;
    last_positive = i;
    if (cumulative + h.masses[i] >= u) {
      const double fraction = std::clamp((u - cumulative) / h.masses[i], 0.0, 1.0);
      return h.edges[i] + fraction * (h.edges[i + 1] - h.edges[i]);
    }
    cumulative += h.masses[i];
  }
  return h.edges[last_positive + 1];
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::probability: return "probability";
    case Role::utility: return "utility";
    case Role::covariate: return "covariate";
  }
  return "unknown";
}

std::optional<Role> role_from_string(std::string_view text) {
  if (text == "probability") return Role::probability;
  if (text == "utility") return Role::utility;
  if (text == "covariate") return Role::covariate;
  return std::nullopt;
}

double Moments::sd() const { return std::sqrt(std::max(variance, 0.0)); }

// ---------------------------------------------------------------------------
// UncertainQuantity

UncertainQuantity::UncertainQuantity(QuantityKind kind, Role role)
    : kind_(std::move(kind)), role_(role) {
  check_quantity(kind_);
}

UncertainQuantity UncertainQuantity::point(double value, Role role) {
  return {PointMass{value}, role};
}

UncertainQuantity UncertainQuantity::uniform(double lo, double hi, Role role) {
  return {Uniform{lo, hi}, role};
}

UncertainQuantity UncertainQuantity::beta(double alpha, double beta, Role role) {
  return {Beta{alpha, beta, 0.0, 1.0}, role};
}

UncertainQuantity UncertainQuantity::truncated_normal(double mu, double sigma, double lo,
                                                      double hi, Role role) {
  return {TruncatedNormal{mu, sigma, lo, hi}, role};
}

std::string_view UncertainQuantity::kind_name() const {
  return std::visit(overloaded{
                        [](const PointMass&) { return std::string_view("point"); },
                        [](const Uniform&) { return std::string_view("uniform"); },
                        [](const Beta&) { return std::string_view("beta"); },
                        [](const TruncatedNormal&) { return std::string_view("truncated-normal"); },
                        [](const Histogram&) { return std::string_view("histogram"); },
                    },
                    kind_);
}

double UncertainQuantity::lower() const {
  return std::visit(overloaded{
                        [](const PointMass& p) { return p.value; },
                        [](const Uniform& u) { return u.lo; },
                        [](const Beta& b) { return b.lo; },
                        [](const TruncatedNormal& t) { return t.lo; },
                        [](const Histogram& h) { return h.edges[0]; },
                    },
                    kind_);
}

double UncertainQuantity::upper() const {
  return std::visit(overloaded{
                        [](const PointMass& p) { return p.value; },
                        [](const Uniform& u) { return u.hi; },
                        [](const Beta& b) { return b.hi; },
                        [](const TruncatedNormal& t) { return t.hi; },
                        [](const Histogram& h) { return h.edges[h.edges.size() - 1]; },
                    },
                    kind_);
}

bool operator==(const UncertainQuantity& a, const UncertainQuantity& b) {
  if (a.role_ != b.role_ || a.kind_.index() != b.kind_.index()) return false;
  return std::visit(
      overloaded{
          [&](const PointMass& x) { return x.value == std::get<PointMass>(b.kind_).value; },
          [&](const Uniform& x) {
            const auto& y = std::get<Uniform>(b.kind_);
            return x.lo == y.lo && x.hi == y.hi;
          },
          [&](const Beta& x) {
            const auto& y = std::get<Beta>(b.kind_);
            return x.alpha == y.alpha && x.beta == y.beta && x.lo == y.lo && x.hi == y.hi;
          },
          [&](const TruncatedNormal& x) {
            const auto& y = std::get<TruncatedNormal>(b.kind_);
            return x.mu == y.mu && x.sigma == y.sigma && x.lo == y.lo && x.hi == y.hi;
          },
          [&](const Histogram& x) {
            const auto& y = std::get<Histogram>(b.kind_);
            return same_vector(x.edges, y.edges) && same_vector(x.masses, y.masses);
          },
      },
      a.kind_);
}

Moments moments(const UncertainQuantity& q) {
  return std::visit(
      overloaded{
          [](const PointMass& p) { return Moments{p.value, 0.0}; },
          [](const Uniform& u) {
            const double width = u.hi - u.lo;
            return Moments{0.5 * (u.lo + u.hi), width * width / 12.0};
          },
          [](const Beta& b) {
            const double total = b.alpha + b.beta;
            const double width = b.hi - b.lo;
            return Moments{b.lo + width * b.alpha / total,
                           width * width * b.alpha * b.beta / (total * total * (total + 1.0))};
          },
          [](const TruncatedNormal& t) {
            const double a = (t.lo - t.mu) / t.sigma;
            const double b = (t.hi - t.mu) / t.sigma;
            const double z = special::normal_cdf(b) - special::normal_cdf(a);
            const double pa = special::normal_pdf(a);
            const double pb = special::normal_pdf(b);
            const double shift = (pa - pb) / z;
            const double mean = t.mu + t.sigma * shift;
            const double variance =
                t.sigma * t.sigma * (1.0 + (a * pa - b * pb) / z - shift * shift);
            return Moments{mean, variance};
          },
          [](const Histogram& h) {
            const Eigen::Index n = h.masses.size();
            const Eigen::VectorXd mid = 0.5 * (h.edges.head(n) + h.edges.tail(n));
            const double mean = h.masses.dot(mid);
            const double variance = h.masses.dot((mid.array() - mean).square().matrix());
            return Moments{mean, variance};
          },
      },
      q.kind());
}

double cdf(const UncertainQuantity& q, double x) {
  return std::visit(overloaded{
                        [x](const PointMass& p) { return x >= p.value ? 1.0 : 0.0; },
                        [x](const Uniform& u) { return std::clamp((x - u.lo) / (u.hi - u.lo), 0.0, 1.0); },
                        [x](const Beta& b) {
                          return special::incomplete_beta(b.alpha, b.beta, (x - b.lo) / (b.hi - b.lo));
                        },
                        [x](const TruncatedNormal& t) { return truncated_normal_cdf(t, x); },
                        [x](const Histogram& h) { return histogram_cdf(h, x); },
                    },
                    q.kind());
}

double sample(const UncertainQuantity& q, double u) {
  if (!(u >= 0.0 && u <= 1.0)) {
    throw DomainError(fmt::format("quantile level {} outside [0, 1]", u));
  }
  return std::visit(
      overloaded{
          [](const PointMass& p) { return p.value; },
          [u](const Uniform& x) { return x.lo + u * (x.hi - x.lo); },
          [u](const Beta& b) {
            const double log_b = special::log_beta(b.alpha, b.beta);
            const double unit = special::bisect_quantile(
                [&](double x) { return special::incomplete_beta(b.alpha, b.beta, x, log_b); }, u,
                0.0, 1.0, kQuantileTolerance);
            return b.lo + unit * (b.hi - b.lo);
          },
          [u](const TruncatedNormal& t) {
            return special::bisect_quantile([&](double x) { return truncated_normal_cdf(t, x); },
                                            u, t.lo, t.hi, kQuantileTolerance);
          },
          [u](const Histogram& h) { return histogram_quantile(h, u); },
      },
      q.kind());
}

UncertainQuantity affine(const UncertainQuantity& q, double scale, double shift) {
  if (!(scale > 0.0)) throw DomainError("affine rescaling requires a positive scale");
  auto map = [&](double x) { return scale * x + shift; };
  QuantityKind kind = std::visit(
      overloaded{
          [&](const PointMass& p) -> QuantityKind { return PointMass{map(p.value)}; },
          [&](const Uniform& u) -> QuantityKind { return Uniform{map(u.lo), map(u.hi)}; },
          [&](const Beta& b) -> QuantityKind { return Beta{b.alpha, b.beta, map(b.lo), map(b.hi)}; },
          [&](const TruncatedNormal& t) -> QuantityKind {
            return TruncatedNormal{map(t.mu), scale * t.sigma, map(t.lo), map(t.hi)};
          },
          [&](const Histogram& h) -> QuantityKind {
            return Histogram{(scale * h.edges.array() + shift).matrix(), h.masses};
          },
      },
      q.kind());
  return {std::move(kind), q.role()};
}

// ---------------------------------------------------------------------------
// RowDistribution

RowDistribution::RowDistribution(RowKind kind) : kind_(std::move(kind)) {
  std::visit(overloaded{
                 [](const BinaryRow& r) {
                   if (r.p.lower() < 0.0 || r.p.upper() > 1.0)
                     throw SchemaError("binary row probability must have support within [0, 1]");
                 },
                 [](const DirichletRow& r) {
                   if (r.alpha.size() < 2) throw SchemaError("dirichlet row needs at least 2 entries");
                   if (!(r.alpha.array() > 0.0).all())
                     throw SchemaError("dirichlet alpha entries must be positive");
                 },
                 [](const PointRow& r) {
                   if (r.probabilities.size() < 2)
                     throw SchemaError("point row needs at least 2 entries");
                   if ((r.probabilities.array() < 0.0).any())
                     throw SchemaError("point row entries must be nonnegative");
                   if (std::fabs(r.probabilities.sum() - 1.0) > kSimplexTolerance)
                     throw SchemaError("point row must sum to 1");
                 },
             },
             kind_);
}

RowDistribution RowDistribution::binary(UncertainQuantity p) {
  return RowDistribution(BinaryRow{std::move(p)});
}

RowDistribution RowDistribution::dirichlet(Eigen::VectorXd alpha) {
  return RowDistribution(DirichletRow{std::move(alpha)});
}

RowDistribution RowDistribution::point(Eigen::VectorXd probabilities) {
  return RowDistribution(PointRow{std::move(probabilities)});
}

std::string_view RowDistribution::kind_name() const {
  return std::visit(overloaded{
                        [](const BinaryRow&) { return std::string_view("binary"); },
                        [](const DirichletRow&) { return std::string_view("dirichlet"); },
                        [](const PointRow&) { return std::string_view("point"); },
                    },
                    kind_);
}

Eigen::Index RowDistribution::dimension() const {
  return std::visit(overloaded{
                        [](const BinaryRow&) -> Eigen::Index { return 2; },
                        [](const DirichletRow& r) { return r.alpha.size(); },
                        [](const PointRow& r) { return r.probabilities.size(); },
                    },
                    kind_);
}

bool RowDistribution::is_point() const {
  if (const auto* b = std::get_if<BinaryRow>(&kind_)) return b->p.is_point();
  return std::holds_alternative<PointRow>(kind_);
}

bool operator==(const RowDistribution& a, const RowDistribution& b) {
  if (a.kind_.index() != b.kind_.index()) return false;
  return std::visit(overloaded{
                        [&](const BinaryRow& x) { return x.p == std::get<BinaryRow>(b.kind_).p; },
                        [&](const DirichletRow& x) {
                          return same_vector(x.alpha, std::get<DirichletRow>(b.kind_).alpha);
                        },
                        [&](const PointRow& x) {
                          return same_vector(x.probabilities, std::get<PointRow>(b.kind_).probabilities);
                        },
                    },
                    a.kind_);
}

RowMoments row_moments(const RowDistribution& r) {
  return std::visit(
      overloaded{
          [](const BinaryRow& b) {
            const Moments m = moments(b.p);
            Eigen::VectorXd mean(2);
            mean << m.mean, 1.0 - m.mean;
            return RowMoments{mean, Eigen::VectorXd::Constant(2, m.variance)};
          },
          [](const DirichletRow& d) {
            const double total = d.alpha.sum();
            Eigen::VectorXd mean = d.alpha / total;
            Eigen::VectorXd variance =
                (d.alpha.array() * (total - d.alpha.array()) / (total * total * (total + 1.0)))
                    .matrix();
            return RowMoments{mean, variance};
          },
          [](const PointRow& p) {
            return RowMoments{p.probabilities, Eigen::VectorXd::Zero(p.probabilities.size())};
          },
      },
      r.kind());
}

Eigen::VectorXd sample_row(const RowDistribution& r, Stream& stream) {
  return std::visit(overloaded{
                        [&](const BinaryRow& b) {
                          const double p = sample(b.p, stream.uniform());
                          Eigen::VectorXd v(2);
                          v << p, 1.0 - p;
                          return v;
                        },
                        [&](const DirichletRow& d) {
                          Eigen::VectorXd v(d.alpha.size());
                          for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = stream.gamma(d.alpha[i]);
                          return Eigen::VectorXd(v / v.sum());
                        },
                        [](const PointRow& p) { return p.probabilities; },
                    },
                    r.kind());
}

// ---------------------------------------------------------------------------
// Parameters and registry

bool is_row(const Parameter& p) { return std::holds_alternative<RowDistribution>(p); }

bool is_point(const Parameter& p) {
  return std::visit([](const auto& x) { return x.is_point(); }, p);
}

std::string describe_kind(const Parameter& p) {
  if (const auto* q = std::get_if<UncertainQuantity>(&p)) return std::string(q->kind_name());
  return fmt::format("{} row", std::get<RowDistribution>(p).kind_name());
}

Eigen::VectorXd parameter_mean(const Parameter& p) {
  if (const auto* q = std::get_if<UncertainQuantity>(&p)) {
    return Eigen::VectorXd::Constant(1, moments(*q).mean);
  }
  return row_moments(std::get<RowDistribution>(p)).mean;
}

void ParameterRegistry::insert(ParameterRef name, Parameter p) {
  if (name.empty()) throw SchemaError("parameter name must be non-empty");
  const auto [it, inserted] = entries_.emplace(std::move(name), std::move(p));
  if (!inserted) throw SchemaError(fmt::format("duplicate parameter '{}'", it->first));
}

const Parameter& ParameterRegistry::at(std::string_view name) const {
  const auto* p = find(name);
  if (p == nullptr) throw LookupError(fmt::format("unknown parameter '{}'", name));
  return *p;
}

const Parameter* ParameterRegistry::find(std::string_view name) const {
  const auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

std::optional<std::size_t> ParameterRegistry::slot(std::string_view name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) return std::nullopt;
  return static_cast<std::size_t>(std::distance(entries_.begin(), it));
}

std::vector<ParameterRef> ParameterRegistry::names() const {
  std::vector<ParameterRef> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

bool operator==(const ParameterRegistry& a, const ParameterRegistry& b) {
  return a.entries_ == b.entries_;
}

ParameterRegistry refine(const ParameterRegistry& registry, const Refinement& refinement) {
  ParameterRegistry out = registry;
  for (const auto& [name, replacement] : refinement) {
    const auto it = out.entries_.find(name);
    if (it == out.entries_.end()) {
      throw LookupError(fmt::format("refinement names unknown parameter '{}'", name));
    }
    const Parameter& original = it->second;
    if (original.index() != replacement.index()) {
      throw SchemaError(fmt::format("refinement of '{}' changes scalar/row shape", name));
    }
    if (const auto* q = std::get_if<UncertainQuantity>(&original)) {
      if (q->role() != std::get<UncertainQuantity>(replacement).role()) {
        throw SchemaError(fmt::format("refinement of '{}' changes role", name));
      }
    } else if (std::get<RowDistribution>(original).dimension() !=
               std::get<RowDistribution>(replacement).dimension()) {
      throw SchemaError(fmt::format("refinement of '{}' changes row dimension", name));
    }
    it->second = replacement;
  }
  return out;
}

double divergence_z(const UncertainQuantity& patient, const UncertainQuantity& generic) {
  const Moments g = moments(generic);
  if (!(g.variance > 0.0)) {
    throw UndefinedDivergence("generic distribution has zero variance");
  }
  return std::fabs(moments(patient).mean - g.mean) / g.sd();
}

double divergence_z(const Parameter& patient, const Parameter& generic) {
  if (patient.index() != generic.index()) {
    throw SchemaError("divergence between a scalar and a row parameter");
  }
  if (const auto* q = std::get_if<UncertainQuantity>(&generic)) {
    return divergence_z(std::get<UncertainQuantity>(patient), *q);
  }
  const RowMoments g = row_moments(std::get<RowDistribution>(generic));
  const RowMoments p = row_moments(std::get<RowDistribution>(patient));
  if (g.mean.size() != p.mean.size()) throw SchemaError("divergence between rows of different dimension");
  double z = -1.0;
  for (Eigen::Index i = 0; i < g.mean.size(); ++i) {
    if (!(g.variance[i] > 0.0)) continue;
    z = std::max(z, std::fabs(p.mean[i] - g.mean[i]) / std::sqrt(g.variance[i]));
  }
  if (z < 0.0) throw UndefinedDivergence("generic row has zero variance in every component");
  return z;
}

}  // namespace bdn
