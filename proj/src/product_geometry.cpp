#include "lorprod/product_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace lorprod {

ProductSpacetime::ProductSpacetime(std::shared_ptr<const ConformalFamily> fam,
                                   std::vector<double> times, int hop_radius)
    : fam_(std::move(fam)), times_(std::move(times)), hop_radius_(hop_radius) {
  if (!fam_) throw std::invalid_argument("ProductSpacetime: null family");
  if (times_.size() < 2) throw std::invalid_argument("ProductSpacetime: need at least two grid times");
  if (hop_radius_ < 1) throw std::invalid_argument("ProductSpacetime: hop radius must be >= 1");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i]) || !fam_->interval().contains(times_[i]))
      throw std::invalid_argument("ProductSpacetime: grid time outside the family interval");
    if (i > 0 && !(times_[i] > times_[i - 1]))
      throw std::invalid_argument("ProductSpacetime: grid times must be strictly increasing");
  }
}

ProductSpacetime ProductSpacetime::uniform(std::shared_ptr<const ConformalFamily> fam, double lo,
                                           double hi, int layers, int hop_radius) {
  if (layers < 1) throw std::invalid_argument("ProductSpacetime::uniform: need at least one step");
  if (!(hi > lo)) throw std::invalid_argument("ProductSpacetime::uniform: empty time range");
  const double dt = (hi - lo) / layers;
  std::vector<double> ts(static_cast<std::size_t>(layers) + 1);
  for (int i = 0; i <= layers; ++i) ts[i] = lo + i * dt;
  ts.back() = hi;  // avoid accumulated round-off at the top end
  ProductSpacetime st(std::move(fam), std::move(ts), hop_radius);
  st.uniform_dt_ = dt;
  return st;
}

double ProductSpacetime::step_dt(int layer) const {
  if (layer < 0 || layer + 1 >= layer_count())
    throw std::out_of_range("ProductSpacetime::step_dt: no such step");
  if (uniform_dt_) return *uniform_dt_;
  return times_[layer + 1] - times_[layer];
}

double ProductSpacetime::step_mid(int layer) const {
  if (layer < 0 || layer + 1 >= layer_count())
    throw std::out_of_range("ProductSpacetime::step_mid: no such step");
  return 0.5 * (times_[layer] + times_[layer + 1]);
}

int ProductSpacetime::nearest_layer(double s) const {
  if (!std::isfinite(s)) throw std::invalid_argument("nearest_layer: non-finite time");
  auto it = std::lower_bound(times_.begin(), times_.end(), s);
  if (it == times_.begin()) return 0;
  if (it == times_.end()) return layer_count() - 1;
  const auto hi = static_cast<int>(it - times_.begin());
  return (s - times_[hi - 1] <= times_[hi] - s) ? hi - 1 : hi;
}

double ProductSpacetime::span(double s0, double s1) const {
  if (uniform_dt_) {
    const int i = nearest_layer(s0), j = nearest_layer(s1);
    if (times_[static_cast<std::size_t>(i)] == s0 && times_[static_cast<std::size_t>(j)] == s1)
      return (j - i) * *uniform_dt_;
  }
  return s1 - s0;
}

std::vector<int> ProductCurve::step_nodes(int k) const {
  if (k < 0 || k >= steps()) throw std::out_of_range("ProductCurve::step_nodes: no such step");
  std::vector<int> out{samples[k].node};
  if (k < static_cast<int>(vias.size()))
    for (int v : vias[k]) out.push_back(v);
  if (out.back() != samples[k + 1].node) out.push_back(samples[k + 1].node);
  return out;
}

void validate_curve(const ProductSpacetime& st, const ProductCurve& curve) {
  const auto& g = st.space();
  const auto& samples = curve.samples;
  if (samples.size() < 2) throw std::invalid_argument("curve: need at least two samples");
  if (!curve.vias.empty() && curve.vias.size() != samples.size() - 1)
    throw std::invalid_argument("curve: via list must have one entry per step");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& p = samples[i];
    if (!std::isfinite(p.t) || !std::isfinite(p.s))
      throw std::invalid_argument("curve: non-finite sample");
    if (p.node < 0 || p.node >= g.node_count()) throw std::invalid_argument("curve: unknown node");
    if (!st.family().interval().contains(p.s))
      throw std::invalid_argument("curve: time coordinate outside the family interval");
    if (i > 0 && !(p.t > samples[i - 1].t))
      throw std::invalid_argument("curve: parameter must be strictly increasing");
  }
  for (int k = 0; k < curve.steps(); ++k) {
    const auto chain = curve.step_nodes(k);
    if (chain.size() > 2) {
      std::vector<int> sorted(chain);
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("curve: via path repeats a node");
    }
    for (std::size_t j = 0; j + 1 < chain.size(); ++j) {
      const int u = chain[j], v = chain[j + 1];
      if (u == v) continue;  // stay-in-place step
      bool adjacent = false;
      for (const auto& [w, len] : g.neighbors(u)) {
        (void)len;
        if (w == v) { adjacent = true; break; }
      }
      if (!adjacent)
        throw std::invalid_argument(
            "curve: consecutive nodes are not adjacent and no via path joins them");
    }
  }
}

namespace {

// Squared step coefficients shared by the two lengths: hds = lapse * ds at the
// step's midpoint time, dd = conformal distance between the endpoint nodes.
struct StepGeom {
  double hds;
  double dd;
  double lapse;
};

StepGeom step_geom(const ProductSpacetime& st, const ProductCurve& curve, int k) {
  const auto& a = curve.samples[k];
  const auto& b = curve.samples[k + 1];
  const double smid = 0.5 * (a.s + b.s);
  const double lapse = st.family().step_lapse(smid, a.node, b.node);
  const double dd = (a.node == b.node) ? 0.0 : st.family().distance_at(smid, a.node, b.node);
  return {lapse * st.span(a.s, b.s), dd, lapse};
}

}  // namespace

double product_length(const ProductSpacetime& st, const ProductCurve& curve) {
  validate_curve(st, curve);
  double total = 0.0;
  for (int k = 0; k < curve.steps(); ++k) {
    const StepGeom q = step_geom(st, curve, k);
    total += std::sqrt(q.hds * q.hds + q.dd * q.dd);
  }
  return total;
}

double weighted_length(const ProductSpacetime& st, const ProductCurve& curve) {
  validate_curve(st, curve);
  double total = 0.0;
  for (int k = 0; k < curve.steps(); ++k) {
    const StepGeom q = step_geom(st, curve, k);
    total += std::sqrt(q.hds * q.hds + q.dd * q.dd) / q.lapse;
  }
  return total;
}

ProductCurve resample_to_grid(const ProductSpacetime& st, const ProductCurve& curve) {
  validate_curve(st, curve);
  ProductCurve out;
  for (const auto& p : curve.samples) {
    ProductCurve::Sample q = p;
    q.s = st.time(st.nearest_layer(p.s));
    if (!out.samples.empty() && out.samples.back().s == q.s && out.samples.back().node == q.node)
      continue;  // collapsed onto the previous grid sample
    out.samples.push_back(q);
  }
  if (out.samples.size() < 2)
    throw std::invalid_argument("resample_to_grid: curve collapses to a single grid event");
  return out;
}

std::vector<Event> to_events(const ProductSpacetime& st, const ProductCurve& curve) {
  validate_curve(st, curve);
  std::vector<Event> out;
  out.reserve(curve.samples.size());
  const double span = st.time(st.layer_count() - 1) - st.time(0);
  for (const auto& p : curve.samples) {
    const int layer = st.nearest_layer(p.s);
    if (std::abs(p.s - st.time(layer)) > 1e-9 * std::max(1.0, std::abs(span)))
      throw std::invalid_argument("to_events: sample time is not on the grid");
    out.push_back({layer, p.node});
  }
  return out;
}

ProductCurve curve_from_events(const ProductSpacetime& st, const std::vector<Event>& events) {
  if (events.size() < 2) throw std::invalid_argument("curve_from_events: need at least two events");
  const auto& g = st.space();
  ProductCurve out;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.layer < 0 || e.layer >= st.layer_count())
      throw std::invalid_argument("curve_from_events: layer out of range");
    if (e.node < 0 || e.node >= g.node_count())
      throw std::invalid_argument("curve_from_events: unknown node");
    if (i > 0 && e.layer <= events[i - 1].layer)
      throw std::invalid_argument("curve_from_events: layers must strictly increase");
    out.samples.push_back({st.time(e.layer), st.time(e.layer), e.node});
  }
  out.vias.resize(events.size() - 1);
  for (std::size_t i = 0; i + 1 < events.size(); ++i) {
    const int u = events[i].node, v = events[i + 1].node;
    if (u == v) continue;
    const double smid = 0.5 * (st.time(events[i].layer) + st.time(events[i + 1].layer));
    const auto& fam = st.family();
    auto path = conformal_shortest_path(g, [&](int w) { return fam.rho(smid, w); }, u, v);
    if (path.size() > 2) out.vias[i].assign(path.begin() + 1, path.end() - 1);
  }
  return out;
}

DivergenceReport properness_diagnostic(const ConformalFamily& fam, const RayDescriptor& ray) {
  const auto& g = fam.space();
  const auto& nodes = ray.nodes;
  if (nodes.size() != ray.times.size())
    throw std::invalid_argument("properness_diagnostic: nodes/times length mismatch");
  if (nodes.size() < 2) throw std::invalid_argument("properness_diagnostic: ray too short");
  std::vector<char> seen(static_cast<std::size_t>(g.node_count()), 0);
  for (int x : nodes) {
    if (x < 0 || x >= g.node_count()) throw std::invalid_argument("properness_diagnostic: unknown node");
    if (seen[static_cast<std::size_t>(x)])
      throw std::invalid_argument("properness_diagnostic: ray revisits a node, not escaping");
    seen[static_cast<std::size_t>(x)] = 1;
  }
  for (double s : ray.times)
    if (!fam.interval().contains(s))
      throw std::invalid_argument("properness_diagnostic: ray time outside the family interval");

  // Lapse-weighted conformal increments with trapezoidal node weights, each
  // step evaluated at its own midpoint time.
  std::vector<double> inc;
  inc.reserve(nodes.size() - 1);
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    const int u = nodes[k], v = nodes[k + 1];
    double len = -1.0;
    for (const auto& [w, l] : g.neighbors(u))
      if (w == v) { len = l; break; }
    if (len < 0.0) throw std::invalid_argument("properness_diagnostic: consecutive ray nodes not adjacent");
    const double smid = 0.5 * (ray.times[k] + ray.times[k + 1]);
    const double cost = len * fam.step_rho(smid, u, v);
    inc.push_back(cost / fam.step_lapse(smid, u, v));
  }

  DivergenceReport rep;
  rep.partial_sums.resize(inc.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < inc.size(); ++k) {
    acc += inc[k];
    rep.partial_sums[k] = acc;
  }
  const int n = static_cast<int>(inc.size());
  if (n < 8) {
    rep.rate = "too few increments to extrapolate";
    return rep;  // inconclusive
  }

  // Log-log fit of increment against index on the last third of the ray:
  // inc_k ~ k^(-p). Geometric decay shows up as a large fitted p, and the
  // integral-comparison bound below stays conservative for it too.
  const int tail_lo = (2 * n) / 3;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int k = tail_lo; k < n; ++k) {
    if (inc[k] <= 0.0) continue;
    const double x = std::log(static_cast<double>(k + 1));
    const double y = std::log(inc[k]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++m;
  }
  if (m < 4) {
    rep.rate = "tail increments vanish; no stable fit";
    return rep;
  }
  const double denom = m * sxx - sx * sx;
  if (std::abs(denom) < 1e-30) {
    rep.rate = "degenerate fit";
    return rep;
  }
  const double p = -(m * sxy - sx * sy) / denom;
  char buf[96];
  if (p > 1.05) {
    // Integral comparison: sum_{k>n} inc_n (k/n)^(-p) <= inc_n * n/(p-1).
    rep.verdict = DivergenceReport::Verdict::bounded;
    rep.extrapolated_bound = acc + inc.back() * static_cast<double>(n) / (p - 1.0);
    if (p > 6.0)
      std::snprintf(buf, sizeof buf, "super-polynomial decay (fit exponent %.3g)", p);
    else
      std::snprintf(buf, sizeof buf, "power decay ~ k^-%.3g", p);
    rep.rate = buf;
  } else if (p < 0.95) {
    rep.verdict = DivergenceReport::Verdict::divergent;
    if (std::abs(p) < 0.05)
      std::snprintf(buf, sizeof buf, "non-vanishing increments, linear growth");
    else
      std::snprintf(buf, sizeof buf, "increments ~ k^-%.3g, partial sums ~ n^%.3g", p, 1.0 - p);
    rep.rate = buf;
  } else {
    std::snprintf(buf, sizeof buf, "near-harmonic tail (p ~ %.3g); cannot separate", p);
    rep.rate = buf;
  }
  return rep;
}

}  // namespace lorprod
