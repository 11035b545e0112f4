#include "doctest.h"

#include <boost/math/special_functions/beta.hpp>
#include <cmath>

#include "bdn/distribution.hpp"
#include "bdn/errors.hpp"

using namespace bdn;

namespace {

Histogram three_bins() {
  Eigen::VectorXd edges(4);
  edges << 0.0, 0.2, 0.5, 1.0;
  Eigen::VectorXd masses(3);
  masses << 0.3, 0.5, 0.2;
  return {edges, masses};
}

std::vector<UncertainQuantity> every_kind() {
  return {
      UncertainQuantity::point(0.7, Role::probability),
      UncertainQuantity::uniform(0.1, 0.6, Role::utility),
      UncertainQuantity::beta(2, 5, Role::probability),
      UncertainQuantity::beta(0.5, 0.5, Role::probability),
      UncertainQuantity(Beta{3, 2, 0.2, 0.9}, Role::utility),
      UncertainQuantity::truncated_normal(60, 10, 18, 110, Role::covariate),
      UncertainQuantity::truncated_normal(0.9, 0.2, 0.0, 1.0, Role::utility),
      UncertainQuantity(three_bins(), Role::probability),
  };
}

}  // namespace

TEST_CASE("moments of the basic kinds") {
  const Moments p = moments(UncertainQuantity::point(0.7, Role::probability));
  CHECK(p.mean == 0.7);
  CHECK(p.variance == 0.0);

  const Moments b = moments(UncertainQuantity::beta(2, 2, Role::probability));
  CHECK(b.mean == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(b.variance == doctest::Approx(0.05).epsilon(1e-15));

  const Moments u = moments(UncertainQuantity::uniform(0, 1, Role::probability));
  CHECK(u.mean == doctest::Approx(0.5));
  CHECK(u.variance == doctest::Approx(1.0 / 12.0).epsilon(1e-15));

  // Truncated normal(60, 10) on [18, 110]; closed form, frozen from an offline evaluation.
  const Moments t = moments(UncertainQuantity::truncated_normal(60, 10, 18, 110, Role::covariate));
  CHECK(t.mean == doctest::Approx(60.000574571315205).epsilon(1e-12));
  CHECK(t.sd() == doctest::Approx(9.998724912409044).epsilon(1e-12));

  const Moments h = moments(UncertainQuantity(three_bins(), Role::probability));
  CHECK(h.mean == doctest::Approx(0.3 * 0.1 + 0.5 * 0.35 + 0.2 * 0.75));
}

TEST_CASE("invalid literals are schema errors") {
  CHECK_THROWS_AS(UncertainQuantity::beta(0, 1, Role::probability), SchemaError);
  CHECK_THROWS_AS(UncertainQuantity::beta(1, -2, Role::probability), SchemaError);
  CHECK_THROWS_AS(UncertainQuantity::uniform(0.5, 0.5, Role::probability), SchemaError);
  CHECK_THROWS_AS(UncertainQuantity::truncated_normal(0, 0, 0, 1, Role::utility), SchemaError);
  CHECK_THROWS_AS(UncertainQuantity::truncated_normal(0, 1, 1, 0, Role::utility), SchemaError);
  Histogram bad = three_bins();
  bad.masses[0] = 0.4;
  CHECK_THROWS_AS(UncertainQuantity(bad, Role::probability), SchemaError);
  Eigen::VectorXd alpha(2);
  alpha << 1.0, 0.0;
  CHECK_THROWS_AS(RowDistribution::dirichlet(alpha), SchemaError);
  Eigen::VectorXd off(3);
  off << 0.2, 0.3, 0.4;
  CHECK_THROWS_AS(RowDistribution::point(off), SchemaError);
  CHECK_THROWS_AS(RowDistribution::binary(UncertainQuantity::uniform(0.5, 1.5, Role::probability)), SchemaError);
}

TEST_CASE("sample examples") {
  CHECK(sample(UncertainQuantity::point(0.3, Role::probability), 0.77) == 0.3);
  CHECK(sample(UncertainQuantity::uniform(0.2, 0.6, Role::probability), 0.5) == doctest::Approx(0.4));
  CHECK(sample(UncertainQuantity::beta(1, 1, Role::probability), 0.25) == doctest::Approx(0.25).epsilon(1e-9));
  CHECK_THROWS_AS(sample(UncertainQuantity::beta(1, 1, Role::probability), -0.01), DomainError);
  CHECK_THROWS_AS(sample(UncertainQuantity::beta(1, 1, Role::probability), 1.01), DomainError);
}

TEST_CASE("beta quantiles match boost ibeta_inv") {
  for (auto [a, b] : {std::pair{7.0, 3.0}, {2.0, 5.0}, {0.5, 0.5}, {1.0, 15.0}, {30.0, 70.0}}) {
    const auto q = UncertainQuantity::beta(a, b, Role::probability);
    for (int i = 1; i < 20; ++i) {
      const double u = i / 20.0;
      CHECK(sample(q, u) == doctest::Approx(boost::math::ibeta_inv(a, b, u)).epsilon(2e-10));
    }
  }
  // Frozen offline quantiles.
  CHECK(sample(UncertainQuantity::beta(2, 5, Role::probability), 0.3) == doctest::Approx(0.18180347131894917).epsilon(1e-9));
  CHECK(sample(UncertainQuantity::beta(0.5, 0.5, Role::probability), 0.3) == doctest::Approx(0.2061073738537634).epsilon(1e-9));
  CHECK(sample(UncertainQuantity::truncated_normal(60, 10, 18, 110, Role::covariate), 0.3) ==
        doctest::Approx(54.756261084045605).epsilon(1e-10));
}

TEST_CASE("sample is monotone on a 1001-point grid and hits the support bounds") {
  for (const auto& q : every_kind()) {
    CAPTURE(q.kind_name());
    double previous = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 1000; ++i) {
      const double x = sample(q, i / 1000.0);
      CHECK(x >= previous);
      CHECK(x >= q.lower());
      CHECK(x <= q.upper());
      previous = x;
    }
    if (!q.is_point()) {
      CHECK(sample(q, 0.0) == doctest::Approx(q.lower()).epsilon(1e-9));
      CHECK(sample(q, 1.0) == doctest::Approx(q.upper()).epsilon(1e-9));
    }
  }
}

TEST_CASE("inverse-cdf draws match moments within three standard errors") {
  const int n = 100000;
  for (const auto& q : every_kind()) {
    CAPTURE(q.kind_name());
    Stream s(2024);
    double sum = 0, sum2 = 0, sum4 = 0;
    const Moments m = moments(q);
    for (int i = 0; i < n; ++i) {
      const double x = sample(q, s.uniform()) - m.mean;
      sum += x;
      sum2 += x * x;
      sum4 += x * x * x * x;
    }
    const double mean_err = sum / n;
    CHECK(std::fabs(mean_err) <= 3.0 * std::sqrt(m.variance / n) + 1e-15);
    // Histogram moments use bin midpoints, so only its mean is comparable.
    if (std::holds_alternative<Histogram>(q.kind())) continue;
    const double var = sum2 / n - mean_err * mean_err;
    const double m4 = sum4 / n;
    CHECK(std::fabs(var - m.variance) <= 3.0 * std::sqrt(std::max(m4 - m.variance * m.variance, 0.0) / n) + 1e-15);
  }
}

TEST_CASE("cdf and sample invert each other") {
  const auto q = UncertainQuantity::beta(7, 3, Role::utility);
  for (double u : {0.05, 0.3, 0.5, 0.9}) CHECK(cdf(q, sample(q, u)) == doctest::Approx(u).epsilon(1e-8));
  CHECK(cdf(UncertainQuantity::beta(2, 5, Role::probability), 0.3) == doctest::Approx(0.5798250000000003).epsilon(1e-12));
}

TEST_CASE("affine image") {
  const auto q = UncertainQuantity::beta(7, 3, Role::utility);
  const auto t = affine(q, 0.5, 0.25);
  CHECK(moments(t).mean == doctest::Approx(0.5 * 0.7 + 0.25));
  CHECK(moments(t).sd() == doctest::Approx(0.5 * moments(q).sd()));
  CHECK(sample(t, 0.3) == doctest::Approx(0.5 * sample(q, 0.3) + 0.25).epsilon(1e-9));
  const auto tn = affine(UncertainQuantity::truncated_normal(0.5, 0.1, 0, 1, Role::utility), 2.0, -1.0);
  CHECK(moments(tn).mean == doctest::Approx(0.0).epsilon(1e-12));
  const auto pt = affine(UncertainQuantity::point(0.4, Role::utility), 0.5, 0.1);
  CHECK(pt.is_point());
  CHECK(moments(pt).mean == doctest::Approx(0.3));
}

TEST_CASE("sample_row examples") {
  Stream s(1);
  const auto binary = RowDistribution::binary(UncertainQuantity::point(0.95, Role::probability));
  const Eigen::VectorXd b = sample_row(binary, s);
  CHECK(b[0] == 0.95);
  CHECK(b[1] == doctest::Approx(0.05));

  Eigen::VectorXd v(3);
  v << 0.2, 0.3, 0.5;
  CHECK(sample_row(RowDistribution::point(v), s) == v);

  Eigen::VectorXd alpha(2);
  alpha << 1.0, 1.0;
  const auto dir = RowDistribution::dirichlet(alpha);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < 100000; ++i) mean += sample_row(dir, s);
  mean /= 100000.0;
  CHECK(std::fabs(mean[0] - 0.5) < 0.01);
  CHECK(std::fabs(mean[1] - 0.5) < 0.01);
}

TEST_CASE("sample_row stays on the simplex") {
  Eigen::VectorXd small(4);
  small << 0.1, 0.3, 2.0, 7.5;
  Eigen::VectorXd v(3);
  v << 0.2, 0.3, 0.5;
  const std::vector<RowDistribution> rows = {
      RowDistribution::binary(UncertainQuantity::beta(1, 15, Role::probability)),
      RowDistribution::binary(UncertainQuantity::uniform(0.0, 1.0, Role::probability)),
      RowDistribution::dirichlet(small),
      RowDistribution::point(v),
  };
  Stream s(99);
  for (const auto& r : rows) {
    bool ok = true;
    for (int i = 0; i < 100000 && ok; ++i) {
      const Eigen::VectorXd x = sample_row(r, s);
      ok = x.size() == r.dimension() && (x.array() >= 0.0).all() && std::fabs(x.sum() - 1.0) <= 1e-12;
    }
    CHECK(ok);
  }
}

TEST_CASE("row moments") {
  Eigen::VectorXd alpha(3);
  alpha << 3, 3, 4;
  const RowMoments m = row_moments(RowDistribution::dirichlet(alpha));
  CHECK(m.mean[2] == doctest::Approx(0.4));
  CHECK(m.variance[2] == doctest::Approx(0.4 * 0.6 / 11.0));
  const RowMoments b = row_moments(RowDistribution::binary(UncertainQuantity::beta(5, 95, Role::probability)));
  CHECK(b.mean[0] == doctest::Approx(0.05));
  CHECK(b.mean[1] == doctest::Approx(0.95));
  CHECK(b.variance[0] == doctest::Approx(b.variance[1]));
}

TEST_CASE("refine replaces and leaves the input untouched") {
  ParameterRegistry generic;
  generic.insert("death", RowDistribution::binary(UncertainQuantity::beta(4, 96, Role::probability)));
  generic.insert("u_m", UncertainQuantity::beta(7, 3, Role::utility));
  const ParameterRegistry before = generic;

  Refinement r;
  r.emplace("death", RowDistribution::binary(UncertainQuantity::beta(12, 88, Role::probability)));
  r.emplace("u_m", UncertainQuantity::point(0.8, Role::utility));
  const ParameterRegistry a = refine(generic, r);
  const ParameterRegistry b = refine(generic, r);
  CHECK(a == b);
  CHECK(generic == before);
  CHECK(std::get<UncertainQuantity>(a.at("u_m")) == UncertainQuantity::point(0.8, Role::utility));
  CHECK(row_moments(std::get<RowDistribution>(a.at("death"))).mean[0] == doctest::Approx(0.12));

  CHECK(refine(generic, {}) == generic);

  Refinement unknown;
  unknown.emplace("nope", UncertainQuantity::point(0.1, Role::utility));
  CHECK_THROWS_AS(refine(generic, unknown), LookupError);

  Refinement wrong_role;
  wrong_role.emplace("u_m", UncertainQuantity::point(0.1, Role::probability));
  CHECK_THROWS_AS(refine(generic, wrong_role), SchemaError);

  Refinement wrong_shape;
  wrong_shape.emplace("death", UncertainQuantity::point(0.1, Role::probability));
  CHECK_THROWS_AS(refine(generic, wrong_shape), SchemaError);

  Eigen::VectorXd three(3);
  three << 0.2, 0.3, 0.5;
  Refinement wrong_dim;
  wrong_dim.emplace("death", RowDistribution::point(three));
  CHECK_THROWS_AS(refine(generic, wrong_dim), SchemaError);
}

TEST_CASE("divergence z") {
  const auto age = UncertainQuantity::truncated_normal(60, 10, 18, 110, Role::covariate);
  // |85 - 60.000575| / 9.998725 = 2.50026; the truncation barely moves the moments.
  CHECK(divergence_z(UncertainQuantity::point(85, Role::covariate), age) == doctest::Approx(2.5002613480903895).epsilon(1e-10));
  CHECK(divergence_z(UncertainQuantity::point(85, Role::covariate), age) == doctest::Approx(2.5).epsilon(1e-3));

  // sd of beta(7,3) is sqrt(21/1100) = 0.13817, so z = 0.1 / 0.13817.
  const auto um = UncertainQuantity::beta(7, 3, Role::utility);
  CHECK(divergence_z(UncertainQuantity::point(0.8, Role::utility), um) == doctest::Approx(0.723746864455746).epsilon(1e-12));

  for (const auto& q : every_kind()) {
    if (moments(q).variance > 0) CHECK(divergence_z(q, q) == 0.0);
  }
  CHECK_THROWS_AS(divergence_z(um, UncertainQuantity::point(0.5, Role::utility)), UndefinedDivergence);

  Eigen::VectorXd v(2);
  v << 0.0, 1.0;
  const Parameter point_row = RowDistribution::point(v);
  CHECK_THROWS_AS(divergence_z(point_row, point_row), UndefinedDivergence);
  const Parameter generic_row = RowDistribution::binary(UncertainQuantity::beta(8, 2, Role::probability));
  const Parameter patient_row = RowDistribution::binary(UncertainQuantity::point(0.0, Role::probability));
  CHECK(divergence_z(patient_row, generic_row) == doctest::Approx(0.8 / std::sqrt(16.0 / 1100.0)));
}

TEST_CASE("registry slots follow name order") {
  ParameterRegistry r;
  r.insert("b", UncertainQuantity::point(0.1, Role::utility));
  r.insert("a", UncertainQuantity::point(0.2, Role::utility));
  r.insert("c", UncertainQuantity::point(0.3, Role::utility));
  CHECK(*r.slot("a") == 0);
  CHECK(*r.slot("c") == 2);
  CHECK_FALSE(r.slot("z").has_value());
  CHECK_THROWS_AS(r.insert("a", UncertainQuantity::point(0.2, Role::utility)), SchemaError);
  CHECK_THROWS_AS(r.at("z"), LookupError);
}
