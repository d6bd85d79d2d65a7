#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lorprod/causal_core.hpp"
#include "lorprod/metric_family.hpp"
#include "lorprod/product_geometry.hpp"

namespace lorprod {

/**
 * Scalar field Phi(y, t) for the initial value problem y' = Phi(y, t):
 * continuous in the state y for each fixed t, merely measurable/integrable in
 * t.  `lip` is the declared integrable-in-t bound on the local y-Lipschitz
 * constant; with it the flow is absolutely continuous and unique even when
 * Phi jumps in t.  `time_continuous` additionally declares continuity in t,
 * which unlocks the higher-order integrator.
 */
struct CaratheodoryField {
  std::function<double(double y, double t)> phi;
  std::function<double(double t)> lip;
  bool time_continuous = false;

  CaratheodoryField() = default;
  CaratheodoryField(std::function<double(double, double)> f, double constant_lip,
                    bool continuous_in_t = false);
  CaratheodoryField(std::function<double(double, double)> f, std::function<double(double)> l,
                    bool continuous_in_t = false);
};

// Spot-checks the declared Lipschitz bound against sampled difference
// quotients of Phi in y over [y_lo, y_hi] x [t0, t1].  Deterministic given the
// seed; returns false as soon as a sampled quotient exceeds the declared bound
// by more than 0.1% relative slack.
bool lipschitz_declaration_holds(const CaratheodoryField& f, double t0, double t1, double y_lo,
                                 double y_hi, std::uint64_t seed, int samples = 256);

/**
 * Numerical solution on a breakpoint grid with piecewise-linear
 * interpolation between breakpoints.  `error_estimate` is the endpoint
 * discrepancy against a paired half-resolution run; `domain_exit` is set when
 * the trajectory left the admissible state window before the horizon, in
 * which case the solution is truncated at `exit_time`.
 */
struct ODESolution {
  std::vector<double> t;
  std::vector<double> y;
  double step = 0.0;
  double error_estimate = 0.0;
  bool domain_exit = false;
  double exit_time = 0.0;

  // Piecewise-linear value; clamps to the end values outside the grid.
  double value_at(double s) const;
};

enum class ODEMethod { euler, rk4 };

struct SolveOptions {
  // Default: forward Euler (sound for fields merely measurable in t); RK4 is
  // chosen automatically when the field declares continuity in t.
  std::optional<ODEMethod> method;
  int steps = 1024;
  std::optional<double> y_min;
  std::optional<double> y_max;
};

// Integrates y' = f(y, t) from (t0, y0) over [t0, t0 + horizon].
ODESolution solve_ivp(const CaratheodoryField& f, double t0, double y0, double horizon,
                      const SolveOptions& opts = {});

/**
 * Sub/supersolution comparison for y' = f(y, t).  Hypotheses checked on the
 * sampled curves: ordered initial data, and the defect of `lower` below the
 * defect of `upper` (sampled per interval).  When they hold the verdict is
 * the dichotomy: the curves agree everywhere (`equal`, contact at the right
 * endpoint) or separate strictly after a contact time `contact_time` and
 * never cross.  A detected violation yields `hypothesis_failed` with a note.
 */
enum class CompareVerdict { equal, ordered, hypothesis_failed };

struct CompareResult {
  CompareVerdict verdict = CompareVerdict::hypothesis_failed;
  double contact_time = 0.0;
  std::string note;
};

struct CompareOptions {
  // Slack for the sampled defect inequality; when unset it is scaled
  // automatically to the sampling step and the field's magnitude.
  std::optional<double> defect_tol;
  double equal_tol = 1e-9;
};

CompareResult compare(const CaratheodoryField& f, const ODESolution& lower,
                      const ODESolution& upper, const CompareOptions& opts = {});

/**
 * Retiming of a causal curve to constant timelike element.  The spatial trace
 * (nodes, vias, parameter grid) is kept fixed; the time coordinate is re-run
 * through the flow y' = sqrt(v(y,t)^2 + eps^2) / lapse(y) where v is the
 * curve's conformal speed profile, and eps is found by bisection so the
 * retimed curve ends at the original endpoint time.  The output has the same
 * endpoints, every step strictly inside the cone, and per-step squared
 * element equal to eps_b^2 up to the fixed-point tolerance.
 */
struct StraightenTraceRow {
  double eps = 0.0;
  std::vector<double> y;  // retimed time coordinate on the curve's parameter grid
};

struct StraightenOptions {
  // Relative bisection tolerance on eps; 0 iterates to the floating-point
  // floor of the bracket.
  double eps_rel_tol = 1e-8;
  bool record_trace = false;
  int max_bracket_doublings = 48;
};

struct StraightenResult {
  ProductCurve curve;
  double eps_b = 0.0;
  double tau_input = 0.0;            // Lorentzian length of the input curve
  double tau_output = 0.0;           // Lorentzian length of the retimed curve
  int bisection_iterations = 0;
  int bracket_doublings = 0;         // times the upper bracket had to expand
  double max_element_dev = 0.0;      // max over steps of |element^2 - eps_b^2|
  double endpoint_residual = 0.0;    // |y_end - target| before exact pinning
  std::vector<StraightenTraceRow> trace;
};

StraightenResult straighten(const ProductSpacetime& st, const ProductCurve& curve,
                            const StraightenOptions& opts = {});

// Writes the recorded straightening trace as CSV with columns
// iterate,eps,t,y (one row per breakpoint per bisection iterate).
void write_trace_csv(const StraightenResult& res, std::ostream& os);

/**
 * Push-up of a causal chain q <= p << r to a strictly timelike witness
 * q << r: the two legs are concatenated and straightened.  The family's
 * regularity hypothesis is audited first; an audit that does not pass makes
 * the operation refuse with a "hypothesis not certified" error unless
 * `force` is set (the result then reports certified = false).
 */
struct PushUpOptions {
  bool force = false;
  std::uint64_t audit_seed = 20260822ull;
  RegularityOptions audit;
  StraightenOptions straighten;
};

struct PushUpResult {
  ProductCurve curve;
  double eps_b = 0.0;
  double tau_total = 0.0;  // Lorentzian length of the straightened witness
  bool certified = false;
  RegularityReport audit;
  StraightenResult detail;
};

PushUpResult push_up(const ProductSpacetime& st, const std::optional<ProductCurve>& causal_leg,
                     const ProductCurve& timelike_leg, const PushUpOptions& opts = {});

/**
 * Quantitative connector: given a timelike witness with uniform margin c0 and
 * endpoints displaced within a certified neighborhood, produces a timelike
 * curve between the displaced endpoints with an explicit margin floor.  The
 * budget below is computable up front; endpoints outside the `delta` radius
 * raise std::domain_error quoting delta0.
 */
struct ConnectorBudget {
  double L = 2.0;       // sampled sup of lapse, inverse lapse and speed, floored at 2
  double c0 = 0.0;      // uniform timelike margin of the witness
  double ctilde = 0.0;  // declared time-regularity constants of the family
  double delta0 = 0.0;  // certified neighborhood radius (c0^2/2) / (3 L^5 + 14 L^2 ctilde)
  double delta = 0.0;   // working radius delta0 / (2 (L^2 + 1))
};

ConnectorBudget connector_budget(const ProductSpacetime& st, const ProductCurve& witness);

struct ConnectorResult {
  ProductCurve curve;
  double margin = 0.0;        // measured min per-step element of the connector
  double margin_bound = 0.0;  // certified floor min(c0/2, 1/L - 1/L^2)
  ConnectorBudget budget;
};

// q is the displaced start, p the displaced end (grid events).  The connector
// runs a short leg q -> start of the witness, the witness affinely retimed,
// and a short leg end of the witness -> p; legs advance the time coordinate
// at L^2 per unit conformal distance.
ConnectorResult timelike_connector(const ProductSpacetime& st, const ProductCurve& witness,
                                   Event q, Event p);

}  // namespace lorprod
