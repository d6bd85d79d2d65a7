#pragma once

// Shared oracle helpers for the unit tests. Everything here is deliberately
// brute-force and independent of the library's algorithms so frozen expected
// values come from a second route.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include "lorprod/base_space.hpp"
#include "lorprod/metric_family.hpp"

namespace testfam {

// Flat family: unit conformal factor and lapse over [lo, hi].
inline lorprod::ConformalFamily flat(std::shared_ptr<const lorprod::BaseSpace> g,
                                     double lo = 0.0, double hi = 1.0) {
  return lorprod::ConformalFamily(
      std::move(g), {lo, hi}, [](double, int) { return 1.0; },
      [](double, int) { return 1.0; }, 0.0, 0.0, true);
}

// Exponential-in-time conformal factor rho = exp(rate*s), unit lapse.
// Exactly log-Lipschitz with constant |rate|.
inline lorprod::ConformalFamily exp_time(std::shared_ptr<const lorprod::BaseSpace> g,
                                         double rate = 1.0, double lo = 0.0, double hi = 1.0) {
  return lorprod::ConformalFamily(
      std::move(g), {lo, hi}, [rate](double s, int) { return std::exp(rate * s); },
      [](double, int) { return 1.0; }, std::fabs(rate), 0.0, true);
}

// rho = scale * exp(rate*s): like exp_time but shrunk so that meshes over
// graphs with order-one edges still have wide causal cones.
inline lorprod::ConformalFamily scaled_exp_time(std::shared_ptr<const lorprod::BaseSpace> g,
                                                double scale, double rate = 1.0, double lo = 0.0,
                                                double hi = 1.0) {
  return lorprod::ConformalFamily(
      std::move(g), {lo, hi},
      [scale, rate](double s, int) { return scale * std::exp(rate * s); },
      [](double, int) { return 1.0; }, std::fabs(rate), 0.0, true);
}

// rho = exp(s * w(x)) with a positive node profile w built from positions;
// log-Lipschitz with constant max|w|.
inline lorprod::ConformalFamily exp_time_profile(std::shared_ptr<const lorprod::BaseSpace> g,
                                                 double lo = 0.0, double hi = 1.0) {
  auto gp = g;
  auto w = [gp](int x) { return 0.5 + 0.5 * gp->position(x); };
  return lorprod::ConformalFamily(
      gp, {lo, hi}, [w](double s, int x) { return std::exp(s * w(x)); },
      [](double, int) { return 1.0; }, 1.0, 0.0, true);
}

// Square-root modulus family rho = exp(sqrt(|s|) * w(x)): genuinely Hoelder
// (exponent 1/2) at s = 0, so the log-Lipschitz audit must fail.
inline lorprod::ConformalFamily holder_sqrt(std::shared_ptr<const lorprod::BaseSpace> g,
                                            double lo = 0.0, double hi = 0.4) {
  auto gp = g;
  auto w = [gp](int x) { return 0.4 + 0.6 * gp->position(x); };
  return lorprod::ConformalFamily(
      gp, {lo, hi},
      [w](double s, int x) { return std::exp(std::sqrt(std::fabs(s)) * w(x)); },
      [](double, int) { return 1.0; }, 1e6, 0.0, false);
}

}  // namespace testfam

namespace testfam {

// Random connected graph: spanning path plus chords, lengths in [0.3, 1.5].
inline lorprod::BaseSpace random_graph(std::mt19937_64& rng, int n) {
  std::vector<std::string> names(n);
  for (int i = 0; i < n; ++i) names[i] = "n" + std::to_string(i);
  std::uniform_real_distribution<double> len(0.3, 1.5);
  std::vector<lorprod::BaseSpace::Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, len(rng)});
  for (int extra = 0; extra < n / 2; ++extra) {
    int u = static_cast<int>(rng() % n), v = static_cast<int>(rng() % n);
    if (u == v) continue;
    bool dup = false;
    for (auto& e : edges)
      if ((e.u == u && e.v == v) || (e.u == v && e.v == u)) dup = true;
    if (!dup) edges.push_back({u, v, len(rng)});
  }
  return lorprod::BaseSpace(names, edges);
}

}  // namespace testfam

namespace oracle {

// Shortest distance by exhaustive enumeration of simple paths (tiny graphs
// only). Edge costs supplied by the caller.
inline double brute_shortest(const lorprod::BaseSpace& g,
                             const std::function<double(int, int, double)>& edge_cost,
                             int from, int to) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<char> used(g.node_count(), 0);
  std::function<void(int, double)> dfs = [&](int u, double acc) {
    if (u == to) {
      best = std::min(best, acc);
      return;
    }
    for (auto [v, len] : g.neighbors(u)) {
      if (used[v]) continue;
      used[v] = 1;
      dfs(v, acc + edge_cost(u, v, len));
      used[v] = 0;
    }
  };
  used[from] = 1;
  dfs(from, 0.0);
  return best;
}

inline double brute_shortest_plain(const lorprod::BaseSpace& g, int from, int to) {
  return brute_shortest(
      g, [](int, int, double len) { return len; }, from, to);
}

// Trapezoidal conformal edge cost, matching the documented discretization.
inline double brute_conformal(const lorprod::BaseSpace& g,
                              const std::function<double(int)>& w, int from, int to) {
  return brute_shortest(
      g, [&](int u, int v, double len) { return len * 0.5 * (w(u) + w(v)); }, from, to);
}

}  // namespace oracle
