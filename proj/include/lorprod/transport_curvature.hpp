#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lorprod/causal_core.hpp"
#include "lorprod/metric_family.hpp"

namespace lorprod {

/**
 * Probability measure with finitely many atoms on the time axis.  Weights are
 * nonnegative and sum to 1 (checked to 1e-12); atoms are distinct.
 */
struct DiscreteMeasure {
  std::vector<double> atom;
  std::vector<double> weight;
};

void validate_measure(const DiscreteMeasure& mu);

/** Probability measure with finitely many atoms on mesh events. */
struct EventMeasure {
  std::vector<Event> atom;
  std::vector<double> weight;
};

// Relative entropy sum rho log rho of mu against a reference measure on the
// same axis (atoms matched by exact value).  Returns +infinity when an atom
// of mu carries mass outside the reference support.
double entropy(const DiscreteMeasure& mu, const DiscreteMeasure& reference);

/** Distortion coefficient inputs: kappa = K/N, t in [0,1], theta >= 0. */
struct SigmaParams {
  double kappa = 0.0;
  double t = 0.0;
  double theta = 0.0;
};

struct SigmaValue {
  double value = 0.0;
  bool infinite = false;
};

// sigma_kappa^t(theta): ratio s_kappa(t theta) / s_kappa(theta) with
// s_kappa the model sine; equals t when kappa theta^2 == 0 and carries the
// infinite flag when kappa theta^2 >= pi^2.
SigmaValue sigma(const SigmaParams& params);

/**
 * Lapse of time only: h(s) > 0 on an interval, together with its running
 * length H(t) = integral of h from the interval's left end and the monotone
 * inverse.  H is computed by fixed composite quadrature so repeated calls are
 * deterministic; for constant h the roundoff cancels exactly.
 */
class LapseLine {
 public:
  LapseLine(std::function<double(double)> h, TimeInterval interval);
  double H(double t) const;
  double H_inv(double u) const;
  double length(double a, double b) const { return H(b) - H(a); }
  TimeInterval interval() const { return interval_; }
  double h_at(double s) const { return h_(s); }

 private:
  std::function<double(double)> h_;
  TimeInterval interval_;
};

/** Sparse coupling between two discrete measures, by atom indices. */
struct TransportPlan {
  struct Row {
    int i = 0, j = 0;
    double w = 0.0;
  };
  std::vector<Row> rows;
};

struct WassersteinResult {
  double value = 0.0;
  TransportPlan plan;
};

// Quadratic transport distance on the time axis with the 1/2-weighted cost
// (1/2)|H(t)-H(s)|^2: atoms are pushed through H, coupled by the monotone
// quantile plan, and the optimal value is pulled back.
WassersteinResult wasserstein_h(const DiscreteMeasure& nu0, const DiscreteMeasure& nu1,
                                const LapseLine& h);

// Displacement interpolation of the plan returned by wasserstein_h: atom
// positions move linearly in the H coordinate.
DiscreteMeasure displacement_interpolate(const DiscreteMeasure& nu0, const DiscreteMeasure& nu1,
                                         const LapseLine& h, const TransportPlan& plan, double t);

struct EllPResult {
  double value = 0.0;
  TransportPlan coupling;
  bool causal = true;  // false when no fully causal coupling exists (sup over
                       // the empty set is 0 by convention)
  std::vector<std::string> infeasible;  // per-atom diagnostics
};

// Lorentzian p-transport cost sup (sum pi tau^p)^(1/p) for p in (0,1), with
// tau taken from the mesh dynamic program.  Product-vertical pairs (same
// spatial marginal, time shifts per node) take the monotone vertical
// coupling; otherwise supports up to 8x8 are solved by exhaustive search over
// the coupling polytope's vertices.
EllPResult ell_p(const CausalDag& dag, const EventMeasure& mu, const EventMeasure& nu, double p);

struct CyclicReport {
  bool pass = true;
  double diagonal_value = 0.0;
  double worst_value = 0.0;
  std::vector<int> worst_permutation;  // identity when pass
};

// Reverse cyclic monotonicity of a coupling support {(s_i, t_i)}: the
// diagonal pairing must dominate every causal rearrangement
// sum |t_i - s_perm(i)|_h^p over permutations (support size capped at 8).
CyclicReport check_cyclic(const std::vector<std::pair<double, double>>& support, double p,
                          const LapseLine& h);

/** Sampled curve t -> u(t) on [0, 1]. */
struct EntropyCurve {
  std::vector<double> t;
  std::vector<double> u;
};

struct ConvexityVerdict {
  bool pass = true;
  double worst_slack = 0.0;
  double worst_t = 0.0;
  std::string note;
};

// (K,N)-convexity of u along a geodesic of spread T, in the distortion form:
// exp(-u/N)(t) >= sigma^(1-t)(T) exp(-u/N)(0) + sigma^t(T) exp(-u/N)(1) at
// every sample.  Infinite distortion coefficients demand vanishing endpoint
// values of exp(-u/N) (that is, infinite endpoint entropy).
ConvexityVerdict kn_convexity(const EntropyCurve& u, double K, double N, double T,
                              double tol = 1e-9);

/**
 * Positive density grid g(s, x) over time samples x nodes, against the
 * product reference (h(s) ds) x m with node weights m.  Node weights are
 * normalized to a probability on construction; the original total is kept as
 * the normalizer.
 */
class DensityField {
 public:
  DensityField(std::vector<double> times, std::vector<std::vector<double>> g,
               std::vector<double> node_mass,
               std::function<double(double)> lapse = [](double) { return 1.0; });

  int node_count() const { return static_cast<int>(node_mass_.size()); }
  TimeInterval interval() const { return {times_.front(), times_.back()}; }
  const std::vector<double>& times() const { return times_; }
  double node_mass(int x) const { return node_mass_[static_cast<std::size_t>(x)]; }
  double normalizer() const { return normalizer_; }
  const LapseLine& lapse() const { return lapse_; }

  // Piecewise-linear interpolation of the density in s; throws outside the
  // sampled window.
  double g_at(double s, int x) const;

  // Two-sided density bound on a compact window: smallest C with
  // 1/C <= g <= C over the window's sample grid.
  double density_bound(double a, double b) const;

  double region_mass(const std::vector<int>& region) const;

 private:
  std::vector<double> times_;
  std::vector<std::vector<double>> g_;
  std::vector<double> node_mass_;
  double normalizer_ = 1.0;
  LapseLine lapse_;
};

/**
 * Vertical probe case: two uniform window measures (in the h-length) on the
 * time axis, transported over a spatial region.  Only this product form is
 * accepted; anything else must be rejected by construction.
 */
struct VerticalCase {
  double a0 = 0.0, b0 = 0.0;  // first window
  double a1 = 0.0, b1 = 0.0;  // second window
  std::vector<int> region;    // spatial region B
};

struct ProbeCaseReport {
  ConvexityVerdict verdict;
  double displacement = 0.0;  // W_h between the two windows
  EntropyCurve curve;         // e_B on the t-grid
  std::vector<double> slack;  // per-sample slack of the distortion inequality
};

struct ProbeReport {
  bool all_pass = true;
  std::vector<ProbeCaseReport> cases;
};

// Entropy of the window geodesic over the region, tested against the
// distortion inequality for each case.  Cases are independent and evaluated
// case-parallel with a deterministic aggregation order.
ProbeReport wtcd_probe(const DensityField& field, double p, double K, double N,
                       const std::vector<VerticalCase>& cases, int t_samples = 21,
                       Exec exec = Exec::parallel);

// Exact decomposition check: e_B(t) equals the m-average of the per-node
// entropies minus log m(B).  Returns the maximal absolute residual over the
// t-grid; the identity is exact for the product reference, so the residual is
// pure roundoff.
double entropy_decomposition(const DensityField& field, const VerticalCase& c,
                             int t_samples = 11);

// Smoothed density representative u_x^delta(a): exponential of the
// delta-averaged log-density in the h-length measure, scaled by 1/N inside
// the exponential.  Throws std::domain_error when the delta-window leaves the
// sampled time interval.
double delta_smooth(const DensityField& field, int x, double delta, double N, double a);

struct RigidityReport {
  struct NodeVerdict {
    int node = 0;
    bool concave_pass = true;
    double max_violation = 0.0;  // worst negative slack of the distortion inequality
  };
  std::vector<NodeVerdict> nodes;
  bool all_pass = true;
  double exceptional_mass = 0.0;  // total node mass of failing nodes
  std::string constancy;          // "constant" or a quoted slope bound
  double slope_bound = 0.0;       // best (smallest) one-sided slope bound over windows
};

// Distortion-form concavity of g(.,x)^(1/N) on sampled triples per node, and
// for K = 0 the window-growth constancy dichotomy: a nonnegative concave
// function on the whole line is constant, so the one-sided slope bound
// max g^(1/N) / window-length is reported as evidence, never as proof.
RigidityReport concavity_rigidity(const DensityField& field, double K, double N,
                                  const std::vector<std::pair<double, double>>& windows);

}  // namespace lorprod
