#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lorprod/base_space.hpp"

namespace lorprod {

/** Closed parameter interval for the time side of a product model. */
struct TimeInterval {
  double lo = 0.0, hi = 1.0;
  bool contains(double s) const { return s >= lo && s <= hi; }
  double length() const { return hi - lo; }
};

/**
 * One-parameter conformal family of graph metrics d_s together with a lapse:
 * distances at time s reweight each edge by the conformal factor rho(s, .),
 * and lapse(s, x) scales the time direction. Declared Lipschitz constants
 * describe s -> log rho (uniformly in x) and s -> lapse; they are promises
 * made by the scenario, spot-checkable via verify_regularity.
 */
class ConformalFamily {
 public:
  using Field = std::function<double(double, int)>;  // (s, node) -> value

  ConformalFamily(std::shared_ptr<const BaseSpace> space, TimeInterval interval,
                  Field rho, Field lapse, double declared_log_lip_rho,
                  double declared_lip_lapse, bool time_continuous = true);

  const BaseSpace& space() const { return *space_; }
  std::shared_ptr<const BaseSpace> space_ptr() const { return space_; }
  TimeInterval interval() const { return interval_; }
  double declared_log_lip_rho() const { return log_lip_rho_; }
  double declared_lip_lapse() const { return lip_lapse_; }
  // True when rho and lapse are continuous in s (enables higher-order ODE
  // stepping downstream); measurable-only families must pass false.
  bool time_continuous() const { return time_continuous_; }

  // Conformal factor / lapse at (s, node). Throws std::domain_error outside
  // the interval or on non-positive values.
  double rho(double s, int x) const;
  double lapse(double s, int x) const;

  // Shortest-path distance in d_s (trapezoidal edge weights).
  double distance_at(double s, int x, int y) const;

  // Per-step midpoint coefficients shared by every discretization in the
  // library: the trapezoidal conformal factor and lapse across a node pair.
  double step_rho(double s, int u, int v) const { return 0.5 * (rho(s, u) + rho(s, v)); }
  double step_lapse(double s, int u, int v) const { return 0.5 * (lapse(s, u) + lapse(s, v)); }

  // Conformal factor along the edge u->v at arc fraction lambda in [0,1],
  // interpolated linearly between the endpoint values.
  double rho_along_edge(double s, int u, int v, double lambda) const {
    return (1.0 - lambda) * rho(s, u) + lambda * rho(s, v);
  }

 private:
  std::shared_ptr<const BaseSpace> space_;
  TimeInterval interval_;
  Field rho_, lapse_;
  double log_lip_rho_, lip_lapse_;
  bool time_continuous_;
};

/** Value of the generalized metric speed, flagged when only one-sided. */
struct SpeedValue {
  double value = 0.0;
  bool one_sided = false;  // t sits on a segment breakpoint with a jump
};

// Generalized speed of a parametrized path at (s, t): conformal factor at the
// moving point times the base-metric parameter speed. The path parameter
// starts at 0; segment j takes len_j / speed_j parameter units.
// Throws std::invalid_argument for unparametrized paths or t outside the
// parameter range.
SpeedValue generalized_speed(const ConformalFamily& fam, const SpacePath& beta, double s,
                             double t);

// Total parameter duration of a parametrized path.
double path_duration(const BaseSpace& g, const SpacePath& beta);

/**
 * Abstract distance oracle: any one-parameter family of metrics on the node
 * set. Lets the regularity verifier run on models that are not conformal.
 */
struct MetricOracle {
  virtual ~MetricOracle() = default;
  virtual double distance(double s, int x, int y) const = 0;
};

struct RegularityOptions {
  int scales = 24;           // number of log-spaced gap scales (>= 20 required)
  int pairs_per_scale = 8;   // sampled pairs per gap scale
  int s_probes = 5;          // time samples for the inf_s d_s gating estimate
  double gap_min_frac = 1e-4;  // smallest gap as a fraction of |J|
  double gamma_tol = 0.1;    // pass iff fitted gamma >= 1 - gamma_tol
  double r = -1.0;           // gating radius; negative = half the K-diameter
};

/** Outcome of the sampled log-Lipschitz audit of a metric family. */
struct RegularityReport {
  enum class Verdict { pass, fail, inconclusive };
  Verdict verdict = Verdict::inconclusive;
  double gamma = 0.0;  // fitted modulus exponent (NaN when flat in s)
  double C = 0.0;      // fitted modulus constant
  double lapse_lip = 0.0;  // sampled Lipschitz estimate of the lapse in s
  std::vector<double> gaps;   // gap scales
  std::vector<double> omega;  // worst |log d-ratio| observed per gap
  double r = 0.0;             // gating radius used
  int admissible_pairs = 0;
  std::uint64_t seed = 0;
  std::string note;
};

// Samples |log(d_s(x,y)/d_s'(x,y))| over >= 20 gap scales for close pairs in
// K and fits a modulus exponent. Exact log-Lipschitz families fit gamma = 1;
// a square-root modulus fits gamma = 1/2 and fails; too little admissible
// data yields `inconclusive`. Deterministic given the seed.
RegularityReport verify_regularity(const MetricOracle& oracle, const BaseSpace& g,
                                   TimeInterval J, const std::vector<int>& K,
                                   std::uint64_t seed, const RegularityOptions& opts = {});

// Same audit for a conformal family (K defaults to all nodes, J to the whole
// interval); also estimates the lapse time-Lipschitz constant.
RegularityReport verify_regularity(const ConformalFamily& fam, TimeInterval J,
                                   const std::vector<int>& K, std::uint64_t seed,
                                   const RegularityOptions& opts = {});
RegularityReport verify_regularity(const ConformalFamily& fam, std::uint64_t seed,
                                   const RegularityOptions& opts = {});

}  // namespace lorprod
