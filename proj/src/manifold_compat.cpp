#include "lorprod/manifold_compat.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace lorprod {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(const char* pattern, double a) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), pattern, a);
  return buf;
}

std::string fmt2(const char* pattern, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), pattern, a, b);
  return buf;
}

void check_axis(const std::vector<double>& axis, const char* name) {
  if (axis.size() < 2)
    throw std::invalid_argument(std::string(name) + " axis needs at least two samples");
  for (std::size_t i = 0; i < axis.size(); ++i) {
    if (!std::isfinite(axis[i]))
      throw std::invalid_argument(std::string(name) + " axis sample " + std::to_string(i) +
                                  " is not finite");
    if (i > 0 && !(axis[i] > axis[i - 1]))
      throw std::invalid_argument(std::string(name) + " axis must be strictly increasing (sample " +
                                  std::to_string(i) + ")");
  }
}

// Index k with axis[k] <= v <= axis[k+1] (clamped), plus the interpolation
// weight. Written as a + w*(b - a) downstream so hitting a sample exactly
// returns the stored value bit for bit.
struct AxisPos {
  std::size_t k = 0;
  double w = 0.0;
};

AxisPos locate(const std::vector<double>& axis, double v, const char* name) {
  const double slack = 1e-9 * (axis.back() - axis.front() + 1.0);
  if (!(v >= axis.front() - slack) || !(v <= axis.back() + slack))
    throw std::domain_error(std::string(name) + " coordinate " + fmt("%.6g", v) +
                            " outside the metric rectangle [" +
                            fmt2("%.6g, %.6g", axis.front(), axis.back()) + "]");
  const double clamped = std::min(std::max(v, axis.front()), axis.back());
  auto it = std::upper_bound(axis.begin(), axis.end(), clamped);
  std::size_t k = static_cast<std::size_t>(it - axis.begin());
  k = (k == 0) ? 0 : k - 1;
  if (k + 1 >= axis.size()) k = axis.size() - 2;
  AxisPos p;
  p.k = k;
  p.w = (clamped - axis[k]) / (axis[k + 1] - axis[k]);
  return p;
}

inline double lerp(double a, double b, double w) { return a + w * (b - a); }

double bilinear(const std::vector<double>& saxis, const std::vector<double>& taxis,
                const std::vector<std::vector<double>>& grid, double sv, double tv) {
  const AxisPos is = locate(saxis, sv, "time");
  const AxisPos it = locate(taxis, tv, "parameter");
  const double lo = lerp(grid[is.k][it.k], grid[is.k][it.k + 1], it.w);
  const double hi = lerp(grid[is.k + 1][it.k], grid[is.k + 1][it.k + 1], it.w);
  return lerp(lo, hi, is.w);
}

// Base length of one curve step: plain edge lengths along the step's node
// sequence (empty travel for a stay step).
double step_base_length(const BaseSpace& g, const std::vector<int>& nodes) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const int u = nodes[i], v = nodes[i + 1];
    if (u == v) continue;
    bool found = false;
    for (auto [w, len] : g.neighbors(u)) {
      if (w == v) {
        total += len;
        found = true;
        break;
      }
    }
    if (!found)
      throw std::logic_error("curve step traverses a non-edge " + std::to_string(u) + "-" +
                             std::to_string(v));
  }
  return total;
}

}  // namespace

double GridLorentzMetric::F_at(double sv, double tv) const {
  return bilinear(s, t, F, sv, tv);
}

double GridLorentzMetric::G_at(double sv, double tv) const {
  return bilinear(s, t, G, sv, tv);
}

GridLorentzMetric make_grid_metric(std::vector<double> s, std::vector<double> t,
                                   std::vector<std::vector<double>> F,
                                   std::vector<std::vector<double>> G) {
  check_axis(s, "time");
  check_axis(t, "parameter");
  const std::size_t ns = s.size(), nt = t.size();
  const auto check_grid = [&](const std::vector<std::vector<double>>& grid, const char* name,
                              bool strictly_positive) {
    if (grid.size() != ns)
      throw std::invalid_argument(std::string(name) + " has " + std::to_string(grid.size()) +
                                  " rows, expected " + std::to_string(ns));
    for (std::size_t i = 0; i < ns; ++i) {
      if (grid[i].size() != nt)
        throw std::invalid_argument(std::string(name) + " row " + std::to_string(i) + " has " +
                                    std::to_string(grid[i].size()) + " entries, expected " +
                                    std::to_string(nt));
      for (std::size_t j = 0; j < nt; ++j) {
        const double v = grid[i][j];
        if (!std::isfinite(v) || (strictly_positive ? !(v > 0.0) : !(v >= 0.0)))
          throw std::invalid_argument(std::string(name) + "[" + std::to_string(i) + "][" +
                                      std::to_string(j) + "] = " + fmt("%.6g", v) +
                                      (strictly_positive ? " must be positive and finite"
                                                         : " must be nonnegative and finite"));
      }
    }
  };
  check_grid(F, "F", true);
  check_grid(G, "G", false);

  const auto sampled_lip = [&](const std::vector<std::vector<double>>& grid) {
    double lip = 0.0;
    for (std::size_t i = 0; i < ns; ++i)
      for (std::size_t j = 0; j + 1 < nt; ++j)
        lip = std::max(lip, std::fabs(grid[i][j + 1] - grid[i][j]) / (t[j + 1] - t[j]));
    for (std::size_t i = 0; i + 1 < ns; ++i)
      for (std::size_t j = 0; j < nt; ++j)
        lip = std::max(lip, std::fabs(grid[i + 1][j] - grid[i][j]) / (s[i + 1] - s[i]));
    return lip;
  };

  GridLorentzMetric m;
  m.lip_F = sampled_lip(F);
  m.lip_G = sampled_lip(G);
  m.s = std::move(s);
  m.t = std::move(t);
  m.F = std::move(F);
  m.G = std::move(G);
  return m;
}

double gq_length(const GridLorentzMetric& m, const QCurve& y) {
  if (y.s.size() != y.t.size())
    throw std::invalid_argument("curve needs matching s and t sample counts");
  if (y.s.empty()) throw std::invalid_argument("curve needs at least one sample");
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < y.s.size(); ++k) {
    const double ds = y.s[k + 1] - y.s[k];
    const double dt = y.t[k + 1] - y.t[k];
    if (ds < 0.0)
      throw std::domain_error("step " + std::to_string(k) + " is past-directed (ds = " +
                              fmt("%.6g", ds) + ")");
    const double smid = 0.5 * (y.s[k] + y.s[k + 1]);
    const double tmid = 0.5 * (y.t[k] + y.t[k + 1]);
    const double Fm = m.F_at(smid, tmid);
    const double b2 = m.G_at(smid, tmid) * dt * dt;
    if (b2 == 0.0) {
      // Purely temporal step: summing sqrt(F)*ds keeps the arithmetic
      // identical to the product-side lapse*ds terms.
      total += std::sqrt(Fm) * ds;
      continue;
    }
    const double a2 = Fm * ds * ds;
    if (a2 < b2)
      throw std::domain_error("step " + std::to_string(k) +
                              " is not causal in the grid metric (F ds^2 = " + fmt("%.6g", a2) +
                              ", G dt^2 = " + fmt("%.6g", b2) + ")");
    total += std::sqrt(a2 - b2);
  }
  return total;
}

QReduction q_reduce(const ProductSpacetime& st, const ProductCurve& curve) {
  const CausalClass cls = classify(st, curve);
  if (cls.kind == CausalClass::Kind::non_causal)
    throw std::domain_error("curve is not causal: " + cls.reason);
  if (!cls.future) throw std::domain_error("curve is past-directed; reverse it first");
  if (curve.steps() < 1) throw std::invalid_argument("curve needs at least one step");

  // Uniform parameter grid: the rectangle's transverse axis is the curve
  // parameter, so non-uniform sampling would smuggle a reparametrization
  // into the metric.
  double dt_min = kInf, dt_max = -kInf;
  int dt_min_at = 0, dt_max_at = 0;
  for (int k = 0; k < curve.steps(); ++k) {
    const double dt = curve.samples[k + 1].t - curve.samples[k].t;
    if (dt < dt_min) {
      dt_min = dt;
      dt_min_at = k;
    }
    if (dt > dt_max) {
      dt_max = dt;
      dt_max_at = k;
    }
  }
  if (dt_max - dt_min > 1e-9 * dt_max)
    throw std::invalid_argument(
        "curve parameter is not uniformly spaced (step " + std::to_string(dt_min_at) + " spans " +
        fmt("%.6g", dt_min) + ", step " + std::to_string(dt_max_at) + " spans " +
        fmt("%.6g", dt_max) + "); reparametrize onto a uniform grid first");

  // Constant base speed: plain base length per parameter unit, step by step.
  const BaseSpace& g = st.space();
  double total_base = 0.0;
  double c_min = kInf, c_max = -kInf;
  int c_min_at = 0, c_max_at = 0;
  for (int k = 0; k < curve.steps(); ++k) {
    const double b = step_base_length(g, curve.step_nodes(k));
    total_base += b;
    const double ck = b / (curve.samples[k + 1].t - curve.samples[k].t);
    if (ck < c_min) {
      c_min = ck;
      c_min_at = k;
    }
    if (ck > c_max) {
      c_max = ck;
      c_max_at = k;
    }
  }
  if (c_max - c_min > 1e-9 * c_max)
    throw std::invalid_argument("base speed varies across steps (step " +
                                std::to_string(c_min_at) + " runs at " + fmt("%.6g", c_min) +
                                ", step " + std::to_string(c_max_at) + " at " +
                                fmt("%.6g", c_max) +
                                "); reparametrize the curve to constant base speed first");

  QReduction out;
  const double param_span = curve.samples.back().t - curve.samples.front().t;
  out.base_speed = (total_base == 0.0) ? 0.0 : total_base / param_span;

  // Time axis: the product grid refined by its step midpoints, computed with
  // the same expression the step audit uses, so a graph-curve step midpoint
  // lands exactly on a stored row.
  const std::vector<double>& times = st.times();
  std::vector<double> saxis;
  saxis.reserve(2 * times.size() - 1);
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    saxis.push_back(times[i]);
    saxis.push_back(0.5 * (times[i] + times[i + 1]));
  }
  saxis.push_back(times.back());

  std::vector<double> taxis;
  taxis.reserve(curve.samples.size());
  for (const auto& smp : curve.samples) taxis.push_back(smp.t);

  const ConformalFamily& fam = st.family();
  const std::size_t ns = saxis.size(), nt = taxis.size();
  std::vector<std::vector<double>> F(ns, std::vector<double>(nt));
  std::vector<std::vector<double>> G(ns, std::vector<double>(nt));
  for (std::size_t i = 0; i < ns; ++i) {
    for (std::size_t j = 0; j < nt; ++j) {
      const int x = curve.samples[j].node;
      const double h = fam.lapse(saxis[i], x);
      const double v = out.base_speed * fam.rho(saxis[i], x);
      F[i][j] = h * h;
      G[i][j] = v * v;
    }
  }
  out.metric = make_grid_metric(std::move(saxis), std::move(taxis), std::move(F), std::move(G));

  out.graph.s.reserve(curve.samples.size());
  out.graph.t.reserve(curve.samples.size());
  for (const auto& smp : curve.samples) {
    out.graph.s.push_back(smp.s);
    out.graph.t.push_back(smp.t);
  }

  out.gq = gq_length(out.metric, out.graph);
  out.lorentz = lorentz_length(st, curve);
  out.residual = std::fabs(out.gq - out.lorentz);
  return out;
}

std::string residual_csv(const std::vector<ResidualRow>& rows) {
  std::string out = "delta,residual\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", r.delta, r.residual);
    out += buf;
  }
  return out;
}

CurveAudit regularity_audit(const ProductSpacetime& st, const ProductCurve& curve) {
  const CausalClass cls = classify(st, curve);
  const auto steps = audit_steps(st, curve);
  CurveAudit out;
  out.steps = static_cast<int>(steps.size());
  out.min_margin2 = kInf;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const auto& q = steps[k];
    out.min_margin2 = std::min(out.min_margin2, q.margin2);
    if (!q.admissible) {
      ++out.negative_steps;
      out.findings.push_back({static_cast<int>(k), q.margin2});
    } else if (q.margin2 == 0.0) {
      ++out.null_steps;
      out.findings.push_back({static_cast<int>(k), q.margin2});
    }
  }
  out.causal = cls.kind != CausalClass::Kind::non_causal;
  if (out.causal && cls.future) out.tau = lorentz_length(st, curve);
  out.all_timelike = out.causal && out.findings.empty();
  return out;
}

BatchAudit audit_maximizers(const CausalDag& dag,
                            const std::vector<std::pair<Event, Event>>& pairs, Exec exec) {
  struct PairResult {
    bool audited = false;
    CurveAudit audit;
  };
  const int n = static_cast<int>(pairs.size());
  std::vector<PairResult> results(static_cast<std::size_t>(n));

  const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(dynamic) if (par)
  for (int i = 0; i < n; ++i) {
    const auto& [p, q] = pairs[static_cast<std::size_t>(i)];
    const TimeSepResult sep = time_separation(dag, p, q, Exec::serial);
    if (!sep.reachable || !sep.tau_positive) continue;
    const ProductCurve curve = maximizer(dag, p, q, Exec::serial);
    results[static_cast<std::size_t>(i)].audited = true;
    results[static_cast<std::size_t>(i)].audit = regularity_audit(dag.spacetime(), curve);
  }

  BatchAudit out;
  out.min_margin2 = kInf;
  for (int i = 0; i < n; ++i) {
    const auto& r = results[static_cast<std::size_t>(i)];
    if (!r.audited) {
      ++out.skipped;
      continue;
    }
    ++out.audited;
    out.steps += r.audit.steps;
    out.null_steps += r.audit.null_steps;
    out.negative_steps += r.audit.negative_steps;
    out.min_margin2 = std::min(out.min_margin2, r.audit.min_margin2);
    if (!r.audit.findings.empty()) out.flagged.push_back(i);
  }
  out.all_timelike = out.audited > 0 && out.flagged.empty();
  return out;
}

}  // namespace lorprod
