#include "lorprod/ode_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "lorprod/base_space.hpp"
#include "lorprod/rng.hpp"

namespace lorprod {

namespace {

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double base_edge_len(const BaseSpace& g, int u, int v) {
  for (const auto& [w, len] : g.neighbors(u))
    if (w == v) return len;
  throw std::logic_error("ode_engine: chain step is not a graph edge");
}

}  // namespace

CaratheodoryField::CaratheodoryField(std::function<double(double, double)> f, double constant_lip,
                                     bool continuous_in_t)
    : phi(std::move(f)),
      lip([constant_lip](double) { return constant_lip; }),
      time_continuous(continuous_in_t) {}

CaratheodoryField::CaratheodoryField(std::function<double(double, double)> f,
                                     std::function<double(double)> l, bool continuous_in_t)
    : phi(std::move(f)), lip(std::move(l)), time_continuous(continuous_in_t) {}

bool lipschitz_declaration_holds(const CaratheodoryField& f, double t0, double t1, double y_lo,
                                 double y_hi, std::uint64_t seed, int samples) {
  if (!f.phi || !f.lip) throw std::invalid_argument("lipschitz check: field is incomplete");
  Rng rng(seed);
  for (int i = 0; i < samples; ++i) {
    const double t = rng.uniform(t0, t1);
    const double a = rng.uniform(y_lo, y_hi);
    const double b = rng.uniform(y_lo, y_hi);
    if (a == b) continue;
    const double q = std::abs(f.phi(a, t) - f.phi(b, t)) / std::abs(a - b);
    if (q > f.lip(t) * 1.001 + 1e-12) return false;
  }
  return true;
}

double ODESolution::value_at(double s) const {
  if (t.empty()) throw std::logic_error("ODESolution: empty solution");
  if (s <= t.front()) return y.front();
  if (s >= t.back()) return y.back();
  const auto it = std::upper_bound(t.begin(), t.end(), s);
  const std::size_t j = static_cast<std::size_t>(it - t.begin());
  const double h = t[j] - t[j - 1];
  const double w = (s - t[j - 1]) / h;
  return y[j - 1] + w * (y[j] - y[j - 1]);
}

namespace {

ODESolution run_fixed_grid(const CaratheodoryField& f, double t0, double y0, double horizon,
                           ODEMethod method, int steps, const SolveOptions& opts) {
  ODESolution sol;
  const double h = horizon / steps;
  sol.step = h;
  sol.t.reserve(static_cast<std::size_t>(steps) + 1);
  sol.y.reserve(static_cast<std::size_t>(steps) + 1);
  const auto inside = [&](double y) {
    if (opts.y_min && y < *opts.y_min) return false;
    if (opts.y_max && y > *opts.y_max) return false;
    return true;
  };
  sol.t.push_back(t0);
  sol.y.push_back(y0);
  if (!inside(y0)) {
    sol.domain_exit = true;
    sol.exit_time = t0;
    return sol;
  }
  double y = y0;
  for (int k = 0; k < steps; ++k) {
    const double tk = t0 + k * h;
    double ynext;
    if (method == ODEMethod::euler) {
      ynext = y + h * f.phi(y, tk);
    } else {
      const double k1 = f.phi(y, tk);
      const double k2 = f.phi(y + 0.5 * h * k1, tk + 0.5 * h);
      const double k3 = f.phi(y + 0.5 * h * k2, tk + 0.5 * h);
      const double k4 = f.phi(y + h * k3, tk + h);
      ynext = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!std::isfinite(ynext))
      throw std::runtime_error("solve_ivp: trajectory became non-finite");
    if (!inside(ynext)) {
      sol.domain_exit = true;
      sol.exit_time = tk;
      return sol;
    }
    y = ynext;
    sol.t.push_back(k + 1 == steps ? t0 + horizon : t0 + (k + 1) * h);
    sol.y.push_back(y);
  }
  return sol;
}

}  // namespace

ODESolution solve_ivp(const CaratheodoryField& f, double t0, double y0, double horizon,
                      const SolveOptions& opts) {
  if (!f.phi) throw std::invalid_argument("solve_ivp: field has no evaluator");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("solve_ivp: horizon must be positive and finite");
  if (opts.steps < 1) throw std::invalid_argument("solve_ivp: need at least one step");
  const ODEMethod method = opts.method.value_or(f.time_continuous ? ODEMethod::rk4
                                                                  : ODEMethod::euler);
  ODESolution main = run_fixed_grid(f, t0, y0, horizon, method, opts.steps, opts);
  if (opts.steps >= 2) {
    const ODESolution coarse =
        run_fixed_grid(f, t0, y0, horizon, method, std::max(1, opts.steps / 2), opts);
    const double tend = std::min(main.t.back(), coarse.t.back());
    main.error_estimate = std::abs(main.value_at(tend) - coarse.value_at(tend));
  }
  return main;
}

CompareResult compare(const CaratheodoryField& f, const ODESolution& lower,
                      const ODESolution& upper, const CompareOptions& opts) {
  if (!f.phi) throw std::invalid_argument("compare: field has no evaluator");
  if (lower.t.size() < 2 || upper.t.size() < 2)
    throw std::invalid_argument("compare: solutions need at least two breakpoints");
  const double w0 = std::max(lower.t.front(), upper.t.front());
  const double w1 = std::min(lower.t.back(), upper.t.back());
  if (!(w1 > w0)) throw std::invalid_argument("compare: solutions do not overlap in time");

  std::vector<double> grid;
  grid.reserve(lower.t.size() + upper.t.size());
  for (double s : lower.t)
    if (s >= w0 && s <= w1) grid.push_back(s);
  for (double s : upper.t)
    if (s >= w0 && s <= w1) grid.push_back(s);
  grid.push_back(w0);
  grid.push_back(w1);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const std::size_t n = grid.size();
  std::vector<double> lo(n), hi(n);
  for (std::size_t j = 0; j < n; ++j) {
    lo[j] = lower.value_at(grid[j]);
    hi[j] = upper.value_at(grid[j]);
  }

  CompareResult out;
  if (hi.front() - lo.front() < -opts.equal_tol) {
    out.verdict = CompareVerdict::hypothesis_failed;
    out.note = fmt("initial data are not ordered: lower(%.6g) exceeds upper by %.3g", grid.front(),
                   lo.front() - hi.front());
    return out;
  }

  // Integrated defect comparison: the positive part of (defect of lower) -
  // (defect of upper), accumulated over intervals, must vanish up to slack.
  // The integral form keeps isolated jump intervals of a merely measurable
  // field from producing false alarms.
  double excess = 0.0, hmax = 0.0, maxlip = 0.0, spread = 0.0, dscale = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double h = grid[j + 1] - grid[j];
    if (!(h > 0.0)) continue;
    const double tm = 0.5 * (grid[j] + grid[j + 1]);
    const double dlo = (lo[j + 1] - lo[j]) / h - f.phi(0.5 * (lo[j] + lo[j + 1]), tm);
    const double dhi = (hi[j + 1] - hi[j]) / h - f.phi(0.5 * (hi[j] + hi[j + 1]), tm);
    excess += std::max(0.0, dlo - dhi) * h;
    hmax = std::max(hmax, h);
    if (f.lip) maxlip = std::max(maxlip, f.lip(tm));
    spread = std::max(spread, std::abs(hi[j] - lo[j]));
    dscale = std::max(dscale, std::abs(dlo) + std::abs(dhi));
  }
  const double defect_tol =
      opts.defect_tol ? *opts.defect_tol : 1e-9 + 2.0 * maxlip * spread + 2.0 * hmax * dscale;
  if (excess > defect_tol * (w1 - w0) + 1e-300) {
    out.verdict = CompareVerdict::hypothesis_failed;
    out.note = fmt("sampled defect of the lower curve exceeds the upper one "
                   "(integrated excess %.3g over window %.3g)",
                   excess, w1 - w0);
    return out;
  }

  // Dichotomy: no crossing, and equality is confined to an initial segment
  // ending at the contact time.
  std::ptrdiff_t last_contact = -1;
  bool separated = false;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = hi[j] - lo[j];
    if (d < -opts.equal_tol) {
      out.verdict = CompareVerdict::hypothesis_failed;
      out.note = fmt("curves cross at t = %.6g despite ordered hypotheses", grid[j]);
      return out;
    }
    if (std::abs(d) <= opts.equal_tol)
      last_contact = static_cast<std::ptrdiff_t>(j);
    else
      separated = true;
  }
  if (!separated) {
    out.verdict = CompareVerdict::equal;
    out.contact_time = w1;
    out.note = "curves agree on the whole window";
    return out;
  }
  out.verdict = CompareVerdict::ordered;
  out.contact_time = last_contact >= 0 ? grid[static_cast<std::size_t>(last_contact)] : w0;
  out.note = "strictly ordered after the contact time";
  for (std::ptrdiff_t j = 0; j < last_contact; ++j)
    if (hi[static_cast<std::size_t>(j)] - lo[static_cast<std::size_t>(j)] > opts.equal_tol) {
      out.note = "strictly ordered after the contact time (transient separation before it)";
      break;
    }
  return out;
}

namespace {

// Per-step data of the fixed spatial trace: parameter width, endpoint nodes
// for the lapse, and the via chain's edges for the conformal speed.
struct TraceStep {
  int u = 0, v = 0;
  double dt = 0.0;
  struct Edge {
    int a, b;
    double len;
  };
  std::vector<Edge> edges;
};

std::vector<TraceStep> build_trace(const ProductSpacetime& st, const ProductCurve& curve) {
  const BaseSpace& g = st.family().space();
  std::vector<TraceStep> out;
  out.reserve(static_cast<std::size_t>(curve.steps()));
  for (int k = 0; k < curve.steps(); ++k) {
    TraceStep sd;
    sd.u = curve.samples[static_cast<std::size_t>(k)].node;
    sd.v = curve.samples[static_cast<std::size_t>(k) + 1].node;
    sd.dt = curve.samples[static_cast<std::size_t>(k) + 1].t -
            curve.samples[static_cast<std::size_t>(k)].t;
    if (!(sd.dt > 0.0))
      throw std::invalid_argument("straighten: curve parameter must be strictly increasing");
    const std::vector<int> chain = curve.step_nodes(k);
    for (std::size_t i = 0; i + 1 < chain.size(); ++i)
      if (chain[i] != chain[i + 1])
        sd.edges.push_back({chain[i], chain[i + 1], base_edge_len(g, chain[i], chain[i + 1])});
    out.push_back(std::move(sd));
  }
  return out;
}

}  // namespace

StraightenResult straighten(const ProductSpacetime& st, const ProductCurve& curve,
                            const StraightenOptions& opts) {
  validate_curve(st, curve);
  const CausalClass cls = classify(st, curve);
  if (cls.kind == CausalClass::Kind::non_causal)
    throw std::domain_error("straighten: " + cls.reason);
  if (!cls.future) throw std::domain_error("straighten: curve is past-directed");

  StraightenResult res;
  res.tau_input = lorentz_length(st, curve);
  if (!(res.tau_input > 0.0))
    throw std::invalid_argument(
        "straighten: not applicable to a curve of zero Lorentzian length");

  const ConformalFamily& fam = st.family();
  const TimeInterval J = fam.interval();
  const double s_start = curve.samples.front().s;
  const double s_end = curve.samples.back().s;
  const std::vector<TraceStep> trace = build_trace(st, curve);
  const std::size_t n = trace.size();

  // One forward pass of the retiming flow at a fixed element eps.  Each curve
  // step takes one implicit-midpoint update, solved by fixed-point iteration;
  // family coefficients are clamped to the time interval so over-long trial
  // elements stay integrable (the clamp is inactive at the bisection root).
  const auto integrate = [&](double eps) {
    std::vector<double> y(n + 1);
    y[0] = s_start;
    for (std::size_t k = 0; k < n; ++k) {
      const TraceStep& sd = trace[k];
      const auto slope = [&](double ymid) {
        const double yc = std::clamp(ymid, J.lo, J.hi);
        double cost = 0.0;
        for (const auto& e : sd.edges) cost += e.len * fam.step_rho(yc, e.a, e.b);
        const double v = cost / sd.dt;
        return std::sqrt(v * v + eps * eps) / fam.step_lapse(yc, sd.u, sd.v);
      };
      double Y = y[k] + sd.dt * slope(y[k]);
      bool converged = false;
      for (int it = 0; it < 200; ++it) {
        const double Yn = y[k] + sd.dt * slope(0.5 * (y[k] + Y));
        const bool done = std::abs(Yn - Y) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                                  (std::abs(Yn) + 1.0);
        Y = Yn;
        if (done) {
          converged = true;
          break;
        }
      }
      if (!converged)
        throw std::runtime_error(
            "straighten: implicit step did not converge (parameter step too large for this "
            "family)");
      y[k + 1] = Y;
    }
    return y;
  };

  const auto record = [&](double eps, const std::vector<double>& y) {
    if (opts.record_trace) res.trace.push_back({eps, y});
  };

  const double scale = std::max(1.0, std::abs(s_end));
  const auto endpoint_gap = [&](double eps, std::vector<double>* keep) {
    std::vector<double> y = integrate(eps);
    record(eps, y);
    const double F = y.back() - s_end;
    if (keep) *keep = std::move(y);
    return F;
  };

  double lo = 0.0;
  double f_lo = endpoint_gap(0.0, nullptr);
  if (f_lo >= 0.0) {
    if (f_lo <= 1e-9 * scale)
      throw std::runtime_error(
          "straighten: discretization too coarse: the null-speed retiming already reaches the "
          "endpoint, leaving no room for a positive element");
    throw std::runtime_error(
        "straighten: discretization too coarse: the null-speed retiming overshoots the target "
        "endpoint");
  }
  double hi = res.tau_input;
  double f_hi = endpoint_gap(hi, nullptr);
  while (f_hi < 0.0 && res.bracket_doublings < opts.max_bracket_doublings) {
    lo = hi;
    f_lo = f_hi;
    hi *= 2.0;
    f_hi = endpoint_gap(hi, nullptr);
    ++res.bracket_doublings;
  }
  if (f_hi < 0.0)
    throw std::runtime_error(fmt(
        "straighten: bisection bracket failed: the endpoint map stays %.3g short of the target "
        "after %g doublings of the trial element",
        -f_hi, static_cast<double>(res.bracket_doublings)));

  const double mono_tol = 1e-10 * scale;
  for (;;) {
    if (hi - lo <= opts.eps_rel_tol * hi) break;
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // floating-point floor of the bracket
    const double f_mid = endpoint_gap(mid, nullptr);
    ++res.bisection_iterations;
    if (f_mid < f_lo - mono_tol || f_mid > f_hi + mono_tol)
      throw std::runtime_error(
          "straighten: endpoint map lost monotonicity in the element during bisection");
    if (f_mid == 0.0) {
      lo = hi = mid;
      break;
    }
    if (f_mid < 0.0) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }
  res.eps_b = (lo == hi) ? lo : 0.5 * (lo + hi);

  std::vector<double> y;
  res.endpoint_residual = std::abs(endpoint_gap(res.eps_b, &y));
  y.back() = s_end;  // pin the endpoint exactly; the residual above is reported

  res.curve = curve;
  for (std::size_t k = 0; k < y.size(); ++k) res.curve.samples[k].s = y[k];

  const std::vector<StepAudit> audit = audit_steps(st, res.curve);
  for (std::size_t k = 0; k < audit.size(); ++k) {
    const double elem2 = audit[k].margin2 / (trace[k].dt * trace[k].dt);
    res.max_element_dev = std::max(res.max_element_dev, std::abs(elem2 - res.eps_b * res.eps_b));
  }
  res.tau_output = lorentz_length(st, res.curve);
  return res;
}

void write_trace_csv(const StraightenResult& res, std::ostream& os) {
  os << "iterate,eps,t,y\n";
  char buf[128];
  for (std::size_t i = 0; i < res.trace.size(); ++i) {
    const auto& row = res.trace[i];
    for (std::size_t j = 0; j < row.y.size(); ++j) {
      const double t = j < res.curve.samples.size() ? res.curve.samples[j].t
                                                    : static_cast<double>(j);
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", i, row.eps, t, row.y[j]);
      os << buf;
    }
  }
}

PushUpResult push_up(const ProductSpacetime& st, const std::optional<ProductCurve>& causal_leg,
                     const ProductCurve& timelike_leg, const PushUpOptions& opts) {
  PushUpResult out;
  out.audit = verify_regularity(st.family(), opts.audit_seed, opts.audit);
  out.certified = out.audit.verdict == RegularityReport::Verdict::pass;
  if (!out.certified && !opts.force)
    throw std::runtime_error(
        "push-up refused: hypothesis not certified (regularity audit: " +
        (out.audit.note.empty() ? std::string("no admissible data") : out.audit.note) +
        "); set force to proceed at your own risk");

  const CausalClass right = classify(st, timelike_leg);
  if (right.kind != CausalClass::Kind::timelike || !right.future)
    throw std::invalid_argument(
        "push-up: the second leg must be strictly timelike and future-directed");

  ProductCurve joined = timelike_leg;
  if (causal_leg) {
    const ProductCurve& left = *causal_leg;
    if (left.samples.size() < 2)
      throw std::invalid_argument(
          "push-up: the causal leg needs at least two samples; omit it for a degenerate leg");
    const auto& ja = left.samples.back();
    const auto& jb = timelike_leg.samples.front();
    if (ja.node != jb.node || ja.s != jb.s)
      throw std::invalid_argument("push-up: the two legs do not join at a common event");
    joined.samples = left.samples;
    joined.vias = left.vias;
    joined.vias.resize(static_cast<std::size_t>(left.steps()));
    const double shift = ja.t - jb.t;
    for (std::size_t j = 1; j < timelike_leg.samples.size(); ++j) {
      ProductCurve::Sample s = timelike_leg.samples[j];
      s.t += shift;
      joined.samples.push_back(s);
    }
    std::vector<std::vector<int>> rvias = timelike_leg.vias;
    rvias.resize(static_cast<std::size_t>(timelike_leg.steps()));
    for (auto& v : rvias) joined.vias.push_back(std::move(v));
  }

  out.detail = straighten(st, joined, opts.straighten);
  out.curve = out.detail.curve;
  out.eps_b = out.detail.eps_b;
  out.tau_total = out.detail.tau_output;
  return out;
}

ConnectorBudget connector_budget(const ProductSpacetime& st, const ProductCurve& witness) {
  validate_curve(st, witness);
  const CausalClass cls = classify(st, witness);
  if (cls.kind != CausalClass::Kind::timelike || !cls.future)
    throw std::invalid_argument("connector: the witness must be strictly timelike and "
                                "future-directed");
  const ConformalFamily& fam = st.family();
  const std::vector<StepAudit> audit = audit_steps(st, witness);
  ConnectorBudget b;
  b.c0 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < audit.size(); ++k) {
    const auto& p = witness.samples[k];
    const auto& q = witness.samples[k + 1];
    const double ds = audit[k].ds;
    b.c0 = std::min(b.c0, std::sqrt(std::max(0.0, audit[k].margin2)) / ds);
    const double smid = 0.5 * (p.s + q.s);
    const double h = fam.step_lapse(smid, p.node, q.node);
    const double dd = p.node == q.node ? 0.0 : fam.distance_at(smid, p.node, q.node);
    b.L = std::max({b.L, h, 1.0 / h, dd / ds});
  }
  b.ctilde = fam.declared_log_lip_rho() + fam.declared_lip_lapse();
  b.delta0 = (0.5 * b.c0 * b.c0) / (3.0 * std::pow(b.L, 5) + 14.0 * b.L * b.L * b.ctilde);
  b.delta = b.delta0 / (2.0 * (b.L * b.L + 1.0));
  return b;
}

ConnectorResult timelike_connector(const ProductSpacetime& st, const ProductCurve& witness,
                                   Event q, Event p) {
  ConnectorResult out;
  out.budget = connector_budget(st, witness);
  const ConformalFamily& fam = st.family();
  const BaseSpace& g = fam.space();
  if (q.layer < 0 || q.layer >= st.layer_count() || p.layer < 0 || p.layer >= st.layer_count() ||
      q.node < 0 || q.node >= g.node_count() || p.node < 0 || p.node >= g.node_count())
    throw std::invalid_argument("connector: endpoint event is outside the mesh");

  const double s_q = st.time(q.layer);
  const double s_p = st.time(p.layer);
  const auto& w0 = witness.samples.front();
  const auto& w1 = witness.samples.back();
  const double L2 = out.budget.L * out.budget.L;

  const auto check_near = [&](const char* which, int node, double s_disp, double anchor_s,
                              int anchor_node) {
    const double dd = node == anchor_node ? 0.0 : fam.distance_at(s_disp, node, anchor_node);
    const double disp = std::max(dd, std::abs(s_disp - anchor_s));
    if (disp > out.budget.delta * (1.0 + 1e-12))
      throw std::domain_error(fmt(std::string(std::string("connector: ") + which +
                                              " endpoint lies outside the certified neighborhood "
                                              "(displacement %.6g > delta %.6g; certified "
                                              "delta0 = %.17g)")
                                      .c_str(),
                                  disp, out.budget.delta, out.budget.delta0));
    return dd;
  };
  check_near("start", q.node, s_q, w0.s, w0.node);
  check_near("end", p.node, s_p, w1.s, w1.node);

  // Exact-coincidence fast path: the witness itself.
  if (q.node == w0.node && s_q == w0.s && p.node == w1.node && s_p == w1.s) {
    out.curve = witness;
  } else {
    ProductCurve c;
    double y = s_q;
    c.samples.push_back({y, y, q.node});
    if (q.node != w0.node) {
      const auto path = conformal_shortest_path(
          g, [&](int v) { return fam.rho(s_q, v); }, q.node, w0.node);
      for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const double len = base_edge_len(g, path[i], path[i + 1]);
        y += L2 * len * fam.step_rho(s_q, path[i], path[i + 1]);
        c.samples.push_back({y, y, path[i + 1]});
        c.vias.emplace_back();
      }
    }
    // Leg to p is priced at the fixed slice s_p so the core's target time is
    // known up front.
    std::vector<int> path2;
    double leg2 = 0.0;
    if (p.node != w1.node) {
      path2 = conformal_shortest_path(
          g, [&](int v) { return fam.rho(s_p, v); }, w1.node, p.node);
      for (std::size_t i = 0; i + 1 < path2.size(); ++i)
        leg2 += L2 * base_edge_len(g, path2[i], path2[i + 1]) *
                fam.step_rho(s_p, path2[i], path2[i + 1]);
    }
    const double core_end = s_p - leg2;
    const double a = (core_end - y) / (w1.s - w0.s);
    if (!(a > 0.0))
      throw std::domain_error(
          "connector: displaced endpoints leave no room for the retimed core");
    const bool identity = a == 1.0 && y == w0.s;
    for (std::size_t j = 1; j < witness.samples.size(); ++j) {
      const double ys = identity ? witness.samples[j].s : y + a * (witness.samples[j].s - w0.s);
      c.samples.push_back({ys, ys, witness.samples[j].node});
      c.vias.push_back(witness.vias.empty() ? std::vector<int>{}
                                            : witness.vias[j - 1]);
    }
    for (std::size_t i = 0; i + 1 < path2.size(); ++i) {
      double ys = c.samples.back().s + L2 * base_edge_len(g, path2[i], path2[i + 1]) *
                                           fam.step_rho(s_p, path2[i], path2[i + 1]);
      if (i + 2 == path2.size()) ys = s_p;  // pin the endpoint exactly
      c.samples.push_back({ys, ys, path2[i + 1]});
      c.vias.emplace_back();
    }
    if (path2.empty() && c.samples.back().s != s_p) c.samples.back().s = c.samples.back().t = s_p;
    out.curve = std::move(c);
  }

  validate_curve(st, out.curve);
  const CausalClass cls = classify(st, out.curve);
  if (cls.kind != CausalClass::Kind::timelike)
    throw std::runtime_error(
        "connector: assembled curve is not strictly timelike (mesh too coarse for the certified "
        "budget)");
  const std::vector<StepAudit> audit = audit_steps(st, out.curve);
  out.margin = std::numeric_limits<double>::infinity();
  for (const auto& sa : audit)
    out.margin = std::min(out.margin, std::sqrt(std::max(0.0, sa.margin2)) / sa.ds);
  out.margin_bound = std::min(0.5 * out.budget.c0, 1.0 / out.budget.L - 1.0 / L2);
  return out;
}

}  // namespace lorprod
