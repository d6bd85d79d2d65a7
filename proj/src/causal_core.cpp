#include "lorprod/causal_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lorprod {

std::vector<StepAudit> audit_steps(const ProductSpacetime& st, const ProductCurve& curve) {
  std::vector<StepAudit> out;
  out.reserve(static_cast<std::size_t>(curve.steps()));
  const auto& fam = st.family();
  for (int k = 0; k < curve.steps(); ++k) {
    const auto& a = curve.samples[k];
    const auto& b = curve.samples[k + 1];
    const double smid = 0.5 * (a.s + b.s);
    const double lapse = fam.step_lapse(smid, a.node, b.node);
    const double dd = (a.node == b.node) ? 0.0 : fam.distance_at(smid, a.node, b.node);
    const double ds = st.span(a.s, b.s);
    const double hds = lapse * std::abs(ds);
    StepAudit q;
    q.ds = ds;
    q.admissible = dd <= hds;
    q.margin2 = hds * hds - dd * dd;
    out.push_back(q);
  }
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CausalClass classify_impl(const ProductSpacetime& st, const ProductCurve& curve,
                          std::vector<StepAudit>* keep) {
  validate_curve(st, curve);
  const auto steps = audit_steps(st, curve);
  if (keep) *keep = steps;
  CausalClass out;
  out.min_margin2 = kInf;
  int pos = 0, neg = 0;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const auto& q = steps[k];
    if (q.ds > 0.0) ++pos;
    if (q.ds < 0.0) ++neg;
    out.min_margin2 = std::min(out.min_margin2, q.admissible ? q.margin2 : -std::abs(q.margin2));
    if (q.admissible && q.margin2 == 0.0) ++out.null_steps;
  }
  if (pos > 0 && neg > 0) {
    out.kind = CausalClass::Kind::non_causal;
    out.reason = "time coordinate reverses direction";
    return out;
  }
  for (std::size_t k = 0; k < steps.size(); ++k) {
    if (!steps[k].admissible) {
      out.kind = CausalClass::Kind::non_causal;
      char buf[96];
      std::snprintf(buf, sizeof buf, "step %zu leaves the causal cone (margin^2 = %.3g)", k,
                    steps[k].margin2);
      out.reason = buf;
      return out;
    }
  }
  if (pos == 0 && neg == 0) {
    out.kind = CausalClass::Kind::non_causal;
    out.reason = "curve does not advance in time";
    return out;
  }
  out.future = neg == 0;
  const bool all_null = out.null_steps == static_cast<int>(steps.size());
  const bool any_null = out.null_steps > 0;
  if (all_null)
    out.kind = CausalClass::Kind::null;
  else if (any_null || out.min_margin2 == 0.0)
    out.kind = CausalClass::Kind::causal;
  else
    out.kind = CausalClass::Kind::timelike;
  return out;
}

}  // namespace

CausalClass classify(const ProductSpacetime& st, const ProductCurve& curve) {
  return classify_impl(st, curve, nullptr);
}

double lorentz_length(const ProductSpacetime& st, const ProductCurve& curve) {
  std::vector<StepAudit> steps;
  const CausalClass cls = classify_impl(st, curve, &steps);
  if (cls.kind == CausalClass::Kind::non_causal)
    throw std::domain_error("lorentz_length: undefined for a non-causal curve (" + cls.reason + ")");
  double total = 0.0;
  for (const auto& q : steps) total += std::sqrt(std::max(0.0, q.margin2));
  return total;
}

int CausalDag::ball_index(int node, int other) const {
  const auto& b = balls_.at(node);
  auto it = std::lower_bound(b.begin(), b.end(), other);
  if (it == b.end() || *it != other) return -1;
  return static_cast<int>(it - b.begin());
}

namespace {

// Dijkstra from `src` under trapezoidal conformal weights, stopped as soon as
// every hop-ball member is finalized. `dist` must be sized n and is reset
// only on touched entries (scratch reuse).
void ball_distances(const BaseSpace& g, const std::vector<double>& rho_c, int src,
                    const std::vector<int>& ball, std::vector<double>& dist,
                    std::vector<int>& touched) {
  using Item = std::pair<double, int>;
  touched.clear();
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[src] = 0.0;
  touched.push_back(src);
  heap.emplace(0.0, src);
  std::size_t remaining = ball.size();
  std::vector<char> done(ball.size(), 0);
  while (!heap.empty() && remaining > 0) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    auto it = std::lower_bound(ball.begin(), ball.end(), u);
    if (it != ball.end() && *it == u) {
      auto idx = static_cast<std::size_t>(it - ball.begin());
      if (!done[idx]) {
        done[idx] = 1;
        --remaining;
      }
    }
    if (remaining == 0) break;
    for (auto [v, len] : g.neighbors(u)) {
      const double nd = d + len * 0.5 * (rho_c[u] + rho_c[v]);
      if (nd < dist[v]) {
        if (dist[v] == kInf) touched.push_back(v);
        dist[v] = nd;
        heap.emplace(nd, v);
      }
    }
  }
}

}  // namespace

CausalDag build_causal_dag(const ProductSpacetime& st, Exec exec,
                           std::int64_t max_candidate_steps) {
  const auto& g = st.space();
  const int n = g.node_count();
  const int layers = st.layer_count() - 1;
  CausalDag dag(st);

  dag.balls_.resize(n);
  dag.offsets_.resize(n);
  std::size_t stride = 0;
  for (int x = 0; x < n; ++x) {
    dag.balls_[x] = g.hop_ball(x, st.hop_radius());
    dag.offsets_[x] = stride;
    stride += dag.balls_[x].size();
  }
  dag.stride_ = stride;

  const std::int64_t candidates = static_cast<std::int64_t>(stride) * layers;
  std::int64_t limit = max_candidate_steps;
  if (st.hop_radius() > 2) limit = std::min<std::int64_t>(limit, 2'000'000);
  if (candidates > limit) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "causal mesh too large: %lld candidate steps exceed the limit %lld%s; coarsen "
                  "the mesh (fewer layers or nodes%s)",
                  static_cast<long long>(candidates), static_cast<long long>(limit),
                  st.hop_radius() > 2 ? " (tightened because hop radius > 2)" : "",
                  st.hop_radius() > 1 ? ", or a smaller hop radius" : "");
    throw std::length_error(buf);
  }
  dag.stats_.candidate_steps = candidates;
  dag.steps_.resize(static_cast<std::size_t>(candidates));

  const auto& fam = st.family();
  std::vector<double> rho_c(n), lap_c(n);
  std::int64_t admissible_total = 0;

  for (int layer = 0; layer < layers; ++layer) {
    const double smid = st.step_mid(layer);
    const double dt = st.step_dt(layer);
    for (int x = 0; x < n; ++x) {
      rho_c[x] = fam.rho(smid, x);
      lap_c[x] = fam.lapse(smid, x);
    }
    CausalDag::Step* slab = dag.steps_.data() + static_cast<std::size_t>(layer) * stride;

    // Phase 1: one truncated Dijkstra per source; store pairs y >= x only so
    // each unordered pair is computed exactly once (exact symmetry).
    const bool par = exec == Exec::parallel;
#ifdef _OPENMP
#pragma omp parallel if (par)
#else
    (void)par;
#endif
    {
      std::vector<double> dist(static_cast<std::size_t>(n), kInf);
      std::vector<int> touched;
#ifdef _OPENMP
#pragma omp for schedule(dynamic, 8)
#endif
      for (int x = 0; x < n; ++x) {
        const auto& ball = dag.balls_[x];
        ball_distances(g, rho_c, x, ball, dist, touched);
        for (std::size_t b = 0; b < ball.size(); ++b) {
          const int y = ball[b];
          if (y < x) continue;
          CausalDag::Step rec;
          rec.dd = (y == x) ? 0.0 : dist[y];
          rec.hdt = 0.5 * (lap_c[x] + lap_c[y]) * dt;
          rec.admissible = rec.dd <= rec.hdt;
          rec.dtau = rec.admissible ? std::sqrt(std::max(0.0, rec.hdt * rec.hdt - rec.dd * rec.dd))
                                    : 0.0;
          slab[dag.offsets_[x] + b] = rec;
        }
        for (int t : touched) dist[t] = kInf;
      }
    }

    // Phase 2: mirror the lower half from the computed upper half.
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (par)
#endif
    for (int x = 0; x < n; ++x) {
      const auto& ball = dag.balls_[x];
      for (std::size_t b = 0; b < ball.size(); ++b) {
        const int y = ball[b];
        if (y >= x) break;  // sorted: lower-half entries come first
        const int back = dag.ball_index(y, x);
        slab[dag.offsets_[x] + b] = slab[dag.offsets_[y] + static_cast<std::size_t>(back)];
      }
    }

    for (std::size_t i = 0; i < stride; ++i)
      if (slab[i].admissible) ++admissible_total;
  }
  dag.stats_.admissible_steps = admissible_total;
  return dag;
}

bool TimeSeparationTable::covers(Event q) const {
  const int r = q.layer - first_layer;
  return r >= 0 && r < static_cast<int>(tau.size()) && q.node >= 0 &&
         q.node < static_cast<int>(tau[static_cast<std::size_t>(r)].size());
}

bool TimeSeparationTable::reachable_at(Event q) const {
  if (!covers(q)) return false;
  return tau[static_cast<std::size_t>(q.layer - first_layer)][static_cast<std::size_t>(q.node)] !=
         -kInf;
}

double TimeSeparationTable::tau_at(Event q) const {
  if (!reachable_at(q)) return 0.0;
  return tau[static_cast<std::size_t>(q.layer - first_layer)][static_cast<std::size_t>(q.node)];
}

bool TimeSeparationTable::strict_at(Event q) const {
  if (!covers(q)) return false;
  return strict[static_cast<std::size_t>(q.layer - first_layer)]
               [static_cast<std::size_t>(q.node)] != 0;
}

TimeSeparationTable time_separation_table(const CausalDag& dag, Event source, Exec exec) {
  const int n = dag.node_count();
  const int L = dag.layer_count();
  if (source.layer < 0 || source.layer >= L || source.node < 0 || source.node >= n)
    throw std::invalid_argument("time_separation_table: source event out of range");

  TimeSeparationTable t;
  t.source = source;
  t.first_layer = source.layer;
  const int rows = L - source.layer;
  t.tau.assign(rows, std::vector<double>(n, -kInf));
  t.pred.assign(rows, std::vector<int>(n, -1));
  t.strict.assign(rows, std::vector<char>(n, 0));
  t.tau[0][static_cast<std::size_t>(source.node)] = 0.0;
  t.strict[0][static_cast<std::size_t>(source.node)] = 1;  // vacuous base chain

  const bool par = exec == Exec::parallel;
  for (int r = 1; r < rows; ++r) {
    const int step_layer = source.layer + r - 1;
    const auto& prev_tau = t.tau[static_cast<std::size_t>(r - 1)];
    const auto& prev_strict = t.strict[static_cast<std::size_t>(r - 1)];
    auto& row_tau = t.tau[static_cast<std::size_t>(r)];
    auto& row_pred = t.pred[static_cast<std::size_t>(r)];
    auto& row_strict = t.strict[static_cast<std::size_t>(r)];
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (par)
#else
    (void)par;
#endif
    for (int y = 0; y < n; ++y) {
      double best = -kInf;
      int best_pred = -1;
      char sflag = 0;
      const auto& ball = dag.ball(y);
      for (std::size_t b = 0; b < ball.size(); ++b) {
        const int z = ball[b];
        const double pz = prev_tau[static_cast<std::size_t>(z)];
        if (pz == -kInf) continue;
        const auto& rec = dag.step(step_layer, y, static_cast<int>(b));
        if (!rec.admissible) continue;
        const double cand = pz + rec.dtau;
        // Strict improvement only: the ball is sorted, so ties keep the
        // smallest predecessor id.
        if (cand > best) {
          best = cand;
          best_pred = z;
        }
        if (prev_strict[static_cast<std::size_t>(z)] && rec.dtau > 0.0) sflag = 1;
      }
      row_tau[static_cast<std::size_t>(y)] = best;
      row_pred[static_cast<std::size_t>(y)] = best_pred;
      row_strict[static_cast<std::size_t>(y)] = sflag;
    }
  }
  return t;
}

TimeSepResult time_separation(const TimeSeparationTable& table, Event q) {
  TimeSepResult r;
  if (!table.covers(q)) return r;
  r.reachable = table.reachable_at(q);
  if (!r.reachable) return r;
  r.tau = table.tau_at(q);
  r.tau_positive = r.tau > 0.0;
  r.strict_chain = q == table.source ? false : table.strict_at(q);
  return r;
}

TimeSepResult time_separation(const CausalDag& dag, Event p, Event q, Exec exec) {
  const int n = dag.node_count();
  const int L = dag.layer_count();
  if (p.layer < 0 || p.layer >= L || p.node < 0 || p.node >= n)
    throw std::invalid_argument("time_separation: source event out of range");
  if (q.layer < 0 || q.layer >= L || q.node < 0 || q.node >= n)
    throw std::invalid_argument("time_separation: target event out of range");
  if (q.layer < p.layer) return {};
  return time_separation(time_separation_table(dag, p, exec), q);
}

std::vector<Event> maximizer_events(const CausalDag& dag, Event p, Event q, Exec exec) {
  if (p == q) throw std::invalid_argument("maximizer: degenerate event pair");
  const auto table = time_separation_table(dag, p, exec);
  if (!table.covers(q) || !table.reachable_at(q))
    throw unreachable_error("maximizer: target is outside the causal future of the source");
  std::vector<Event> chain;
  Event cur = q;
  while (cur.layer > p.layer) {
    chain.push_back(cur);
    const int r = cur.layer - table.first_layer;
    const int prev = table.pred[static_cast<std::size_t>(r)][static_cast<std::size_t>(cur.node)];
    cur = {cur.layer - 1, prev};
  }
  chain.push_back(p);
  std::reverse(chain.begin(), chain.end());
  return chain;
}

ProductCurve maximizer(const CausalDag& dag, Event p, Event q, Exec exec) {
  return curve_from_events(dag.spacetime(), maximizer_events(dag, p, q, exec));
}

VariationalResult variational_length(const CausalDag& dag, const std::vector<Event>& events,
                                     int depth, Exec exec) {
  if (events.size() < 2)
    throw std::invalid_argument("variational_length: need at least two events");
  if (depth < 0) throw std::invalid_argument("variational_length: negative depth");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.layer < 0 || e.layer >= dag.layer_count() || e.node < 0 || e.node >= dag.node_count())
      throw std::invalid_argument("variational_length: event out of range");
    if (i > 0 && e.layer <= events[i - 1].layer)
      throw std::invalid_argument("variational_length: layers must strictly increase");
  }
  const int M = static_cast<int>(events.size()) - 1;

  std::map<std::pair<int, int>, TimeSeparationTable> tables;
  auto tau_between = [&](const Event& a, const Event& b) {
    const auto key = std::make_pair(a.layer, a.node);
    auto it = tables.find(key);
    if (it == tables.end()) it = tables.emplace(key, time_separation_table(dag, a, exec)).first;
    if (!it->second.reachable_at(b))
      throw unreachable_error("variational_length: partition pair not causally connected");
    return it->second.tau_at(b);
  };

  VariationalResult out;
  for (int level = 0; level <= depth; ++level) {
    const long long pieces = 1LL << level;
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(std::min<long long>(pieces, M)) + 1);
    for (long long j = 0; j <= pieces; ++j) {
      const int i = static_cast<int>((2 * j * M + pieces) / (2 * pieces));  // round nearest
      if (idx.empty() || idx.back() != i) idx.push_back(i);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j + 1 < idx.size(); ++j)
      sum += tau_between(events[static_cast<std::size_t>(idx[j])],
                         events[static_cast<std::size_t>(idx[j + 1])]);
    out.per_depth.push_back(sum);
  }
  out.value = out.per_depth.back();
  return out;
}

DiamondResult causal_diamond(const CausalDag& dag, Event p, Event q) {
  const int n = dag.node_count();
  const int L = dag.layer_count();
  if (p.layer < 0 || p.layer >= L || p.node < 0 || p.node >= n)
    throw std::invalid_argument("causal_diamond: event out of range");
  if (q.layer < 0 || q.layer >= L || q.node < 0 || q.node >= n)
    throw std::invalid_argument("causal_diamond: event out of range");
  DiamondResult out;
  if (q.layer < p.layer) return out;
  const int rows = q.layer - p.layer + 1;

  std::vector<std::vector<char>> fwd(rows, std::vector<char>(n, 0));
  std::vector<std::vector<int>> pred(rows, std::vector<int>(n, -1));
  fwd[0][static_cast<std::size_t>(p.node)] = 1;
  for (int r = 1; r < rows; ++r) {
    const int step_layer = p.layer + r - 1;
    for (int y = 0; y < n; ++y) {
      const auto& ball = dag.ball(y);
      for (std::size_t b = 0; b < ball.size(); ++b) {
        const int z = ball[b];
        if (!fwd[static_cast<std::size_t>(r - 1)][static_cast<std::size_t>(z)]) continue;
        if (!dag.step(step_layer, y, static_cast<int>(b)).admissible) continue;
        fwd[static_cast<std::size_t>(r)][static_cast<std::size_t>(y)] = 1;
        pred[static_cast<std::size_t>(r)][static_cast<std::size_t>(y)] = z;  // smallest first
        break;
      }
    }
  }

  std::vector<std::vector<char>> bwd(rows, std::vector<char>(n, 0));
  bwd[static_cast<std::size_t>(rows - 1)][static_cast<std::size_t>(q.node)] = 1;
  for (int r = rows - 2; r >= 0; --r) {
    const int step_layer = p.layer + r;
    for (int x = 0; x < n; ++x) {
      const auto& ball = dag.ball(x);
      for (std::size_t b = 0; b < ball.size(); ++b) {
        const int z = ball[b];
        if (!bwd[static_cast<std::size_t>(r + 1)][static_cast<std::size_t>(z)]) continue;
        if (!dag.step(step_layer, x, static_cast<int>(b)).admissible) continue;
        bwd[static_cast<std::size_t>(r)][static_cast<std::size_t>(x)] = 1;
        break;
      }
    }
  }

  const auto& st = dag.spacetime();
  const double sqrt2 = std::sqrt(2.0);
  bool have_slack = false;
  for (int r = 0; r < rows; ++r) {
    for (int x = 0; x < n; ++x) {
      if (!fwd[static_cast<std::size_t>(r)][static_cast<std::size_t>(x)] ||
          !bwd[static_cast<std::size_t>(r)][static_cast<std::size_t>(x)])
        continue;
      const Event e{p.layer + r, x};
      out.events.push_back(e);
      if (r == 0) continue;  // the tip contributes zero slack
      // Lapse-weighted length of the forward witness must stay within the
      // sqrt(2) cone bound on the time reach.
      std::vector<Event> chain;
      Event cur = e;
      while (cur.layer > p.layer) {
        chain.push_back(cur);
        cur = {cur.layer - 1,
               pred[static_cast<std::size_t>(cur.layer - p.layer)][static_cast<std::size_t>(cur.node)]};
      }
      chain.push_back(p);
      std::reverse(chain.begin(), chain.end());
      const double wl = weighted_length(st, curve_from_events(st, chain));
      const double bound = sqrt2 * (st.time(e.layer) - st.time(p.layer));
      const double slack = wl - bound;
      out.max_weighted_slack = have_slack ? std::max(out.max_weighted_slack, slack) : slack;
      have_slack = true;
    }
  }
  return out;
}

}  // namespace lorprod
