#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "helpers.hpp"
#include "lorprod/manifold_compat.hpp"
#include "lorprod/rng.hpp"

using namespace lorprod;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

// Constant-coefficient metric over [0,1]^2.
GridLorentzMetric const_metric(double f, double g) {
  return make_grid_metric({0.0, 1.0}, {0.0, 1.0}, {{f, f}, {f, f}}, {{g, g}, {g, g}});
}

// Dyadic diagonal from (0,0) to (extent, extent) in n steps.
QCurve diagonal(int n, double extent = 1.0) {
  QCurve y;
  for (int k = 0; k <= n; ++k) {
    y.s.push_back(k * extent / n);
    y.t.push_back(k * extent / n);
  }
  return y;
}

ProductSpacetime flat_grid(int n, double xlen, int layers, double hi = 1.0, int radius = 1) {
  auto g = std::make_shared<BaseSpace>(make_path_graph(n, xlen));
  auto fam = std::make_shared<ConformalFamily>(testfam::flat(g, 0.0, hi));
  return ProductSpacetime::uniform(fam, 0.0, hi, layers, radius);
}

// Curve that hops one node per layer starting at `node0` (diagonal traversal).
ProductCurve hop_curve(const ProductSpacetime& st, int node0 = 0) {
  ProductCurve c;
  for (int i = 0; i < st.layer_count(); ++i)
    c.samples.push_back({st.time(i), st.time(i), node0 + i});
  return c;
}

// Curve that stays at `node` through every layer.
ProductCurve stay_curve(const ProductSpacetime& st, int node) {
  ProductCurve c;
  for (int i = 0; i < st.layer_count(); ++i) c.samples.push_back({st.time(i), st.time(i), node});
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// make_grid_metric
// ---------------------------------------------------------------------------

TEST_CASE("make_grid_metric: validation rejects malformed grids") {
  CHECK_THROWS_AS(make_grid_metric({0.0}, {0.0, 1.0}, {{1.0, 1.0}}, {{0.0, 0.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_grid_metric({0.0, 0.0}, {0.0, 1.0}, {{1.0, 1.0}, {1.0, 1.0}},
                                   {{0.0, 0.0}, {0.0, 0.0}}),
                  std::invalid_argument);  // non-increasing axis
  CHECK_THROWS_AS(make_grid_metric({0.0, 1.0}, {0.0, 1.0}, {{1.0, 1.0}},
                                   {{0.0, 0.0}, {0.0, 0.0}}),
                  std::invalid_argument);  // F row count mismatch
  CHECK_THROWS_AS(make_grid_metric({0.0, 1.0}, {0.0, 1.0}, {{1.0}, {1.0, 1.0}},
                                   {{0.0, 0.0}, {0.0, 0.0}}),
                  std::invalid_argument);  // ragged row
  CHECK_THROWS_AS(make_grid_metric({0.0, 1.0}, {0.0, 1.0}, {{1.0, 0.0}, {1.0, 1.0}},
                                   {{0.0, 0.0}, {0.0, 0.0}}),
                  std::invalid_argument);  // F must be strictly positive
  CHECK_THROWS_AS(make_grid_metric({0.0, 1.0}, {0.0, 1.0}, {{1.0, 1.0}, {1.0, 1.0}},
                                   {{0.0, -1.0}, {0.0, 0.0}}),
                  std::invalid_argument);  // G must be nonnegative
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(make_grid_metric({0.0, 1.0}, {0.0, 1.0}, {{1.0, nan}, {1.0, 1.0}},
                                   {{0.0, 0.0}, {0.0, 0.0}}),
                  std::invalid_argument);
  // A vanishing G is legal: it is exactly the purely temporal metric.
  CHECK_NOTHROW(make_grid_metric({0.0, 1.0}, {0.0, 1.0}, {{1.0, 1.0}, {1.0, 1.0}},
                                 {{0.0, 0.0}, {0.0, 0.0}}));
}

TEST_CASE("make_grid_metric: sampled Lipschitz constants from difference quotients") {
  // F = {{1,2},{3,4}} over s in [0,1], t in [0,2]: quotients are 2 along s
  // and 1/2 along t, so the sampled constant is 2.
  const auto m = make_grid_metric({0.0, 1.0}, {0.0, 2.0}, {{1.0, 2.0}, {3.0, 4.0}},
                                  {{1.0, 1.0}, {1.0, 1.0}});
  CHECK(m.lip_F == 2.0);
  CHECK(m.lip_G == 0.0);
}

TEST_CASE("bilinear interpolation: corners exact, center is the mean") {
  const auto m = make_grid_metric({0.0, 1.0}, {0.0, 1.0}, {{1.0, 2.0}, {3.0, 4.0}},
                                  {{1.0, 1.0}, {1.0, 1.0}});
  CHECK(m.F_at(0.0, 0.0) == 1.0);
  CHECK(m.F_at(0.0, 1.0) == 2.0);
  CHECK(m.F_at(1.0, 0.0) == 3.0);
  CHECK(m.F_at(1.0, 1.0) == 4.0);
  CHECK(m.F_at(0.5, 0.5) == 2.5);
  CHECK(m.F_at(0.0, 0.5) == 1.5);
  CHECK(m.F_at(1.0, 0.5) == 3.5);
  CHECK(m.F_at(0.5, 0.0) == 2.0);
  CHECK(m.F_at(0.5, 1.0) == 3.0);
  // Tiny excursions inside the slack are clamped; far outside throws.
  CHECK(m.F_at(-1e-12, 0.0) == 1.0);
  CHECK_THROWS_AS(m.F_at(-0.5, 0.0), std::domain_error);
  CHECK_THROWS_AS(m.F_at(0.0, 1.5), std::domain_error);
}

// ---------------------------------------------------------------------------
// gq_length
// ---------------------------------------------------------------------------

TEST_CASE("gq_length: purely temporal constant metric is exact") {
  // F = 4, G = 0: each step contributes 2*ds, so the dyadic vertical line
  // sums to exactly 2.
  const auto m = const_metric(4.0, 0.0);
  QCurve y;
  for (int k = 0; k <= 8; ++k) {
    y.s.push_back(k / 8.0);
    y.t.push_back(0.25);
  }
  CHECK(gq_length(m, y) == 2.0);
}

TEST_CASE("gq_length: temporal line integrates sqrt(F) by the midpoint rule") {
  // F = (1+s)^2 sampled on a fine dyadic axis; the curve's step midpoints
  // land on stored rows, so the sum is the midpoint rule for the linear
  // integrand 1+s — exact up to round-off: integral over [0,1] is 3/2.
  const int rows = 129;
  std::vector<double> saxis(rows);
  std::vector<std::vector<double>> F(rows, std::vector<double>(2));
  std::vector<std::vector<double>> G(rows, std::vector<double>(2, 0.0));
  for (int i = 0; i < rows; ++i) {
    saxis[i] = i / 128.0;
    const double f = (1.0 + saxis[i]) * (1.0 + saxis[i]);
    F[i][0] = F[i][1] = f;
  }
  const auto m = make_grid_metric(saxis, {0.0, 1.0}, F, G);
  QCurve y;
  for (int k = 0; k <= 64; ++k) {
    y.s.push_back(k / 64.0);
    y.t.push_back(0.5);
  }
  CHECK(gq_length(m, y) == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("gq_length: the 45-degree diagonal of the unit-coefficient metric is null") {
  const auto m = const_metric(1.0, 1.0);
  CHECK(gq_length(m, diagonal(8)) == 0.0);
  CHECK(gq_length(m, diagonal(1)) == 0.0);
}

TEST_CASE("gq_length: unit square diagonal with G = 1/4") {
  // sqrt(F*1 - G*1) = sqrt(3)/2, independently of how many dyadic steps the
  // diagonal takes.
  const auto m = const_metric(1.0, 0.25);
  const double one_step = gq_length(m, diagonal(1));
  CHECK(one_step == doctest::Approx(0.8660254037844386).epsilon(1e-15));
  // Eight equal steps re-sum the same value (up to the round-off of the sum).
  CHECK(gq_length(m, diagonal(8)) == doctest::Approx(one_step).epsilon(1e-15));
}

TEST_CASE("gq_length: transverse direction may run either way") {
  const auto m = const_metric(1.0, 0.25);
  QCurve back;  // s up, t down: same speeds, same length
  for (int k = 0; k <= 8; ++k) {
    back.s.push_back(k / 8.0);
    back.t.push_back(1.0 - k / 8.0);
  }
  CHECK(gq_length(m, back) == gq_length(m, diagonal(8)));
}

TEST_CASE("gq_length: rejections") {
  const auto m = const_metric(1.0, 4.0);
  CHECK_THROWS_WITH_AS(gq_length(m, diagonal(4)), doctest::Contains("not causal"),
                       std::domain_error);
  QCurve past;
  past.s = {1.0, 0.0};
  past.t = {0.0, 0.0};
  CHECK_THROWS_WITH_AS(gq_length(m, past), doctest::Contains("past-directed"), std::domain_error);
  QCurve ragged;
  ragged.s = {0.0, 1.0};
  ragged.t = {0.0};
  CHECK_THROWS_AS(gq_length(m, ragged), std::invalid_argument);
  CHECK_THROWS_AS(gq_length(m, QCurve{}), std::invalid_argument);
  // A single point has zero length and nothing to reject.
  QCurve point;
  point.s = {0.5};
  point.t = {0.5};
  CHECK(gq_length(const_metric(1.0, 1.0), point) == 0.0);
}

// ---------------------------------------------------------------------------
// q_reduce
// ---------------------------------------------------------------------------

TEST_CASE("q_reduce: vertical curve reproduces the product arithmetic termwise") {
  // Node-dependent, time-varying lapse; the vertical curve has zero base
  // speed, so G vanishes and each rectangle step is sqrt(F)*ds with F read
  // off a midpoint row — the same numbers the product-side audit produces.
  auto g = std::make_shared<BaseSpace>(make_path_graph(5, 0.5));
  auto fam = std::make_shared<ConformalFamily>(ConformalFamily(
      g, {0.0, 1.0}, [](double, int) { return 1.0; },
      [](double s, int x) { return 1.0 + s * (0.5 + 0.1 * x); }, 0.0, 0.9, true));
  const auto st = ProductSpacetime::uniform(fam, 0.0, 1.0, 8);
  const auto r = q_reduce(st, stay_curve(st, 2));

  CHECK(r.base_speed == 0.0);
  CHECK(r.residual == 0.0);
  CHECK(r.gq == r.lorentz);
  // The metric really is the squared lapse over the refined time axis...
  REQUIRE(r.metric.s.size() == 17);
  for (std::size_t i = 0; i < r.metric.s.size(); ++i) {
    const double h = fam->lapse(r.metric.s[i], 2);
    CHECK(r.metric.F[i][0] == h * h);
    CHECK(r.metric.G[i][0] == 0.0);
  }
  // ...and the refined axis interleaves the grid times with step midpoints.
  CHECK(r.metric.s[0] == st.time(0));
  CHECK(r.metric.s[1] == 0.5 * (st.time(0) + st.time(1)));
  CHECK(r.metric.s[2] == st.time(1));
}

TEST_CASE("q_reduce: flat diagonal matches the product bit for bit") {
  // Everything dyadic: unit lapse, base speed 1/2, G = 1/4. Both length sums
  // see identical per-step numbers, so the residual is exactly zero (well
  // inside the documented 1e-10).
  const auto st = flat_grid(9, 0.5, 8);
  const auto r = q_reduce(st, hop_curve(st));
  CHECK(r.base_speed == 0.5);
  CHECK(r.residual < 1e-10);
  CHECK(r.residual == 0.0);
  for (const auto& row : r.metric.F)
    for (double v : row) CHECK(v == 1.0);
  for (const auto& row : r.metric.G)
    for (double v : row) CHECK(v == 0.25);
  CHECK(r.gq == doctest::Approx(8.0 * std::sqrt(0.125 * 0.125 - 0.0625 * 0.0625)).epsilon(1e-15));
}

TEST_CASE("q_reduce: metric samples come straight from the family") {
  auto g = std::make_shared<BaseSpace>(make_path_graph(9, 0.25));
  auto fam = std::make_shared<ConformalFamily>(testfam::exp_time_profile(g, 0.0, 0.5));
  const auto st = ProductSpacetime::uniform(fam, 0.0, 0.5, 8);
  const auto r = q_reduce(st, hop_curve(st));
  REQUIRE(r.metric.t.size() == 9);
  for (std::size_t i = 0; i < r.metric.s.size(); i += 5) {
    for (std::size_t j = 0; j < r.metric.t.size(); ++j) {
      const int x = static_cast<int>(j);  // hop curve visits node j at column j
      const double h = fam->lapse(r.metric.s[i], x);
      const double v = r.base_speed * fam->rho(r.metric.s[i], x);
      CHECK(r.metric.F[i][j] == h * h);
      CHECK(r.metric.G[i][j] == v * v);
    }
  }
}

TEST_CASE("q_reduce: preconditions name the offence and ask for reparametrization") {
  const auto st = flat_grid(9, 0.5, 8);

  ProductCurve skew = hop_curve(st);  // uniform s, non-uniform parameter
  for (std::size_t i = 0; i < skew.samples.size(); ++i) {
    const double u = skew.samples[i].t;
    skew.samples[i].t = u * u * 0.5 + u * 0.5;
  }
  CHECK_THROWS_WITH_AS(q_reduce(st, skew), doctest::Contains("uniform"), std::invalid_argument);

  ProductCurve mixed;  // stays 4 layers, then hops 4: base speed jumps
  for (int i = 0; i < st.layer_count(); ++i)
    mixed.samples.push_back({st.time(i), st.time(i), i < 4 ? 0 : i - 4});
  CHECK_THROWS_WITH_AS(q_reduce(st, mixed), doctest::Contains("constant base speed"),
                       std::invalid_argument);

  ProductCurve point;
  point.samples.push_back({0.0, 0.0, 0});
  CHECK_THROWS_AS(q_reduce(st, point), std::invalid_argument);

  // Too fast for the cone: classify reports non-causal before any reduction.
  const auto tight = flat_grid(9, 4.0, 8);
  CHECK_THROWS_WITH_AS(q_reduce(tight, hop_curve(tight)), doctest::Contains("not causal"),
                       std::domain_error);

  ProductCurve past;  // time runs backwards
  for (int i = 0; i < st.layer_count(); ++i) {
    const int j = st.layer_count() - 1 - i;
    past.samples.push_back({st.time(i), st.time(j), 0});
  }
  CHECK_THROWS_WITH_AS(q_reduce(st, past), doctest::Contains("past-directed"), std::domain_error);
}

TEST_CASE("q_reduce: residual shrinks at second order for a curved family") {
  // rho = exp(s*w(x)) with a node-dependent profile: the rectangle's
  // bilinear average of squares and the product's squared trapezoid average
  // differ at O(grid^2), so halving the grid should cut the residual by
  // about four.
  std::vector<ResidualRow> rows;
  for (int n : {8, 16, 32}) {
    auto g = std::make_shared<BaseSpace>(make_path_graph(n + 1, 0.25));
    auto fam = std::make_shared<ConformalFamily>(testfam::exp_time_profile(g, 0.0, 0.5));
    const auto st = ProductSpacetime::uniform(fam, 0.0, 0.5, n);
    const auto r = q_reduce(st, hop_curve(st));
    CHECK(r.base_speed == doctest::Approx(0.5).epsilon(1e-12));
    rows.push_back({0.5 / n, r.residual});
  }
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].residual > rows[1].residual);
  CHECK(rows[1].residual > rows[2].residual);
  CHECK(std::log2(rows[0].residual / rows[1].residual) > 1.5);
  CHECK(std::log2(rows[1].residual / rows[2].residual) > 1.5);

  const std::string csv = residual_csv(rows);
  CHECK(csv.rfind("delta,residual\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  // %.17g round-trips the first width exactly.
  CHECK(std::stod(csv.substr(csv.find('\n') + 1)) == rows[0].delta);
}

TEST_CASE("residual_csv: exact rendering") {
  CHECK(residual_csv({{1.0, 0.5}, {0.25, 0.125}}) == "delta,residual\n1,0.5\n0.25,0.125\n");
  CHECK(residual_csv({}) == "delta,residual\n");
}

// ---------------------------------------------------------------------------
// regularity_audit
// ---------------------------------------------------------------------------

TEST_CASE("regularity_audit: strictly timelike curve has no findings") {
  const auto st = flat_grid(9, 0.5, 8);
  const auto a = regularity_audit(st, hop_curve(st));
  CHECK(a.steps == 8);
  CHECK(a.causal);
  CHECK(a.all_timelike);
  CHECK(a.findings.empty());
  CHECK(a.null_steps == 0);
  CHECK(a.negative_steps == 0);
  // Dyadic data: margin = 0.125^2 - 0.0625^2 exactly.
  CHECK(a.min_margin2 == 0.01171875);
  CHECK(a.tau == doctest::Approx(8.0 * std::sqrt(0.01171875)).epsilon(1e-15));
}

TEST_CASE("regularity_audit: null steps are findings, not failures") {
  // Commensurate flat mesh: a hop spans exactly the cone (0.125 = 0.125), so
  // the maximizer to a laterally displaced event carries exactly two null
  // steps and six stay steps.
  auto g = std::make_shared<BaseSpace>(make_path_graph(5, 0.5));
  auto fam = std::make_shared<ConformalFamily>(testfam::flat(g, 0.0, 1.0));
  const auto st = ProductSpacetime::uniform(fam, 0.0, 1.0, 8);
  const auto dag = build_causal_dag(st);

  const auto sep = time_separation(dag, {0, 0}, {8, 2});
  REQUIRE(sep.tau_positive);
  CHECK(sep.tau == 0.75);

  const auto a = regularity_audit(st, maximizer(dag, {0, 0}, {8, 2}));
  CHECK(a.steps == 8);
  CHECK(a.causal);
  CHECK_FALSE(a.all_timelike);
  CHECK(a.null_steps == 2);
  CHECK(a.negative_steps == 0);
  REQUIRE(a.findings.size() == 2);
  for (const auto& f : a.findings) CHECK(f.margin2 == 0.0);
  CHECK(a.min_margin2 == 0.0);
  CHECK(a.tau == 0.75);
}

TEST_CASE("regularity_audit: cone violations are counted and the length is withheld") {
  const auto st = flat_grid(5, 1.0, 8);  // edges 0.25 > dt 0.125: hops break the cone
  ProductCurve c;
  c.samples.push_back({st.time(0), st.time(0), 0});
  c.samples.push_back({st.time(1), st.time(1), 1});
  c.samples.push_back({st.time(2), st.time(2), 1});
  const auto a = regularity_audit(st, c);
  CHECK_FALSE(a.causal);
  CHECK_FALSE(a.all_timelike);
  CHECK(a.negative_steps == 1);
  CHECK(a.null_steps == 0);
  REQUIRE(a.findings.size() == 1);
  CHECK(a.findings[0].step == 0);
  CHECK(a.findings[0].margin2 == 0.015625 - 0.0625);
  CHECK(a.tau == 0.0);
}

// ---------------------------------------------------------------------------
// audit_maximizers
// ---------------------------------------------------------------------------

TEST_CASE("audit_maximizers: mixed batch splits audited, skipped, and flagged") {
  auto g = std::make_shared<BaseSpace>(make_path_graph(5, 0.5));
  auto fam = std::make_shared<ConformalFamily>(testfam::flat(g, 0.0, 1.0));
  const auto st = ProductSpacetime::uniform(fam, 0.0, 1.0, 8);
  const auto dag = build_causal_dag(st);

  const std::vector<std::pair<Event, Event>> pairs = {
      {{0, 0}, {8, 2}},  // null-bearing maximizer
      {{0, 1}, {8, 1}},  // vertical, strictly timelike
      {{5, 0}, {2, 0}},  // runs backwards: unreachable
      {{3, 3}, {3, 3}},  // zero separation
  };
  const auto b = audit_maximizers(dag, pairs);
  CHECK(b.audited == 2);
  CHECK(b.skipped == 2);
  CHECK(b.steps == 16);
  CHECK(b.null_steps == 2);
  CHECK(b.negative_steps == 0);
  CHECK(b.min_margin2 == 0.0);
  CHECK_FALSE(b.all_timelike);
  REQUIRE(b.flagged.size() == 1);
  CHECK(b.flagged[0] == 0);

  const auto s = audit_maximizers(dag, pairs, Exec::serial);
  CHECK(s.audited == b.audited);
  CHECK(s.skipped == b.skipped);
  CHECK(s.steps == b.steps);
  CHECK(s.null_steps == b.null_steps);
  CHECK(s.min_margin2 == b.min_margin2);
  CHECK(s.flagged == b.flagged);
}

TEST_CASE("audit_maximizers: Lipschitz family keeps every maximizer strictly timelike") {
  auto g = std::make_shared<BaseSpace>(make_path_graph(21, 0.5));
  auto fam = std::make_shared<ConformalFamily>(testfam::scaled_exp_time(g, 0.5, 1.0, 0.0, 1.0));
  const auto st = ProductSpacetime::uniform(fam, 0.0, 1.0, 20);
  const auto dag = build_causal_dag(st);

  Rng rng(4242);
  std::vector<std::pair<Event, Event>> pairs;
  for (int k = 0; k < 30; ++k) {
    const int l1 = rng.index(10);
    const int l2 = l1 + 1 + rng.index(20 - l1);
    pairs.push_back({{l1, rng.index(21)}, {l2, rng.index(21)}});
  }
  const auto b = audit_maximizers(dag, pairs);
  CHECK(b.audited + b.skipped == 30);
  CHECK(b.audited >= 10);
  CHECK(b.null_steps == 0);
  CHECK(b.negative_steps == 0);
  CHECK(b.flagged.empty());
  CHECK(b.all_timelike);
  CHECK(b.min_margin2 > 0.0);
}

TEST_CASE("audit_maximizers: Hoelder family audits cleanly even without smoothness") {
  // The square-root-modulus family is merely continuous in time; maximizers
  // may brush the cone, and the audit must report rather than reject.
  auto g = std::make_shared<BaseSpace>(make_path_graph(9, 0.2));
  auto fam = std::make_shared<ConformalFamily>(testfam::holder_sqrt(g, 0.0, 0.4));
  const auto st = ProductSpacetime::uniform(fam, 0.0, 0.4, 8);
  const auto dag = build_causal_dag(st);

  Rng rng(515);
  std::vector<std::pair<Event, Event>> pairs;
  for (int k = 0; k < 20; ++k) {
    const int l1 = rng.index(4);
    const int l2 = l1 + 1 + rng.index(8 - l1);
    pairs.push_back({{l1, rng.index(9)}, {l2, rng.index(9)}});
  }
  BatchAudit b;
  CHECK_NOTHROW(b = audit_maximizers(dag, pairs));
  CHECK(b.audited + b.skipped == 20);
  CHECK(b.audited > 0);
  // Maximizer steps are admissible by construction, so the cone is never
  // violated; null contacts (if any) land in `flagged`, not in an exception.
  CHECK(b.negative_steps == 0);
  CHECK(b.min_margin2 >= 0.0);
  CHECK(static_cast<int>(b.flagged.size()) <= b.audited);
}

// ---------------------------------------------------------------------------
// maximality transfer
// ---------------------------------------------------------------------------

TEST_CASE("q_reduce: the product maximizer is rectangle-maximal among sampled competitors") {
  // Flat diagonal: six hops in six layers is the only trace, and among all
  // monotone time profiles over the refined axis the uniform one maximizes
  // sum sqrt(ds^2 - c^2 dt^2) (the integrand is concave in ds).
  auto g = std::make_shared<BaseSpace>(make_path_graph(7, 0.6));
  auto fam = std::make_shared<ConformalFamily>(testfam::flat(g, 0.0, 0.9));
  const auto st = ProductSpacetime::uniform(fam, 0.0, 0.9, 6);
  const auto dag = build_causal_dag(st);

  const auto sep = time_separation(dag, {0, 0}, {6, 6});
  REQUIRE(sep.tau_positive);
  const auto curve = maximizer(dag, {0, 0}, {6, 6});
  const auto r = q_reduce(st, curve);
  CHECK(r.gq == doctest::Approx(sep.tau).epsilon(1e-12));

  // Every monotone profile over the refined time axis with the same
  // endpoints, same transverse columns.
  const std::vector<double>& axis = r.metric.s;
  double best = -kInf;
  long causal_count = 0;
  std::vector<double> profile(7, 0.0);
  profile[0] = axis.front();
  profile[6] = axis.back();
  std::function<void(int, std::size_t)> rec = [&](int pos, std::size_t from) {
    if (pos == 6) {
      QCurve comp;
      comp.s = profile;
      comp.t = r.graph.t;
      try {
        const double len = gq_length(r.metric, comp);
        ++causal_count;
        if (len > best) best = len;
      } catch (const std::domain_error&) {
      }
      return;
    }
    for (std::size_t i = from; i < axis.size(); ++i) {
      profile[static_cast<std::size_t>(pos)] = axis[i];
      rec(pos + 1, i);
    }
  };
  rec(1, 0);
  CHECK(causal_count > 0);
  CHECK(best <= r.gq + 1e-12);
  CHECK(best == doctest::Approx(r.gq).epsilon(1e-12));
}
